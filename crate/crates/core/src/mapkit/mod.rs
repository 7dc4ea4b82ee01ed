//! GPS-trace ingestion, skeleton-based road graph extraction and map
//! quality metrics. Coordinates are planar and in meters.

mod graph;
mod io;
mod metrics;
mod skeleton;

pub use graph::{Edge, PathFinder, Polyline, RoadGraph};
pub use io::{
    load_trace_file, load_traces, read_graph, read_graph_files, write_graph, Column, TraceFormat,
};
pub use metrics::{
    directed_hausdorff, discrete_frechet, evaluate_map, resample_step, MapMetrics, Summary,
    DEFAULT_SNAP_RADIUS,
};
pub use skeleton::{douglas_peucker, row_runs, skeleton_to_graph, skeletonize};

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::raster::Raster;
use crate::trajectory::Trajectory;
use crate::tree::{TredParams, TredTree};

/// Shortest path geometry between vertices `u` and `v` of `g`.
pub fn shortest_path(g: &RoadGraph, u: usize, v: usize) -> Result<Polyline> {
    g.shortest_path(u, v)
}

/// Dangling edges shorter than this multiple of the finest stamp radius are
/// treated as thinning artifacts by [`extract_map`].
pub const SPUR_FACTOR: f64 = 3.0;

/// Output of [`extract_map`] with the intermediate rasters.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub graph: RoadGraph,
    /// Graph traced from the skeleton before pruning.
    pub raw_graph: RoadGraph,
    pub level_set: Raster,
    pub skeleton: Raster,
    pub params: TredParams,
    /// Wall time per stage: build, raster, skeleton, graph.
    pub timings: [(&'static str, Duration); 4],
}

/// Traces to road graph: tree build, level-set raster of the finest bins
/// above `tau`, thinning, graph tracing, and pruning of spurs and split
/// junctions shorter than `SPUR_FACTOR * r2_M`. The base square is fitted
/// to the data.
pub fn extract_map(
    traces: &[Trajectory],
    max_depth: u32,
    tau: u64,
    resolution: usize,
) -> Result<Extraction> {
    let params = TredParams::auto_fit(traces, max_depth, tau)?;
    let t0 = Instant::now();
    let tree = TredTree::build_offline(traces, params)?;
    let t1 = Instant::now();
    let level_set = tree.level_set_raster(tau, resolution)?;
    let t2 = Instant::now();
    let skeleton = skeletonize(&level_set)?;
    let t3 = Instant::now();
    let raw_graph = skeleton_to_graph(&skeleton)?;
    let graph = raw_graph.pruned(SPUR_FACTOR * params.r2(max_depth));
    let t4 = Instant::now();
    Ok(Extraction {
        graph,
        raw_graph,
        level_set,
        skeleton,
        params,
        timings: [
            ("build", t1 - t0),
            ("raster", t2 - t1),
            ("skeleton", t3 - t2),
            ("graph", t4 - t3),
        ],
    })
}
