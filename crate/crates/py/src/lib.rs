//! Python module `tred`: trajectories, density trees, counts, baselines and
//! road-map extraction. Points cross the boundary as lists of 2 or 3 floats.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tred_core::{counts, mapkit, oracle, synth, Error, Point};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NoPath { .. } | Error::Evaluation(_) | Error::Precondition(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn point(c: &[f64]) -> PyResult<Point> {
    Point::try_from_slice(c).ok_or_else(|| {
        PyValueError::new_err(format!("expected 2 or 3 coordinates, got {}", c.len()))
    })
}

fn points(v: &[Vec<f64>]) -> PyResult<Vec<Point>> {
    v.iter().map(|c| point(c)).collect()
}

fn coords(p: &[Point]) -> Vec<Vec<f64>> {
    p.iter().map(|q| q.coords().to_vec()).collect()
}

/// Time-stamped polyline.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Trajectory(tred_core::Trajectory);

#[pymethods]
impl Trajectory {
    /// Without `times`, samples are stamped 0, 1, 2, ...
    #[new]
    #[pyo3(signature = (points, times=None, id="trajectory"))]
    fn new(points: Vec<Vec<f64>>, times: Option<Vec<f64>>, id: &str) -> PyResult<Self> {
        let pts = self::points(&points)?;
        let t = match times {
            Some(t) => tred_core::Trajectory::new(id, t, pts),
            None => tred_core::Trajectory::from_points(id, pts),
        };
        t.map(Self).map_err(err)
    }

    #[getter]
    fn id(&self) -> &str {
        self.0.id()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        coords(self.0.points())
    }

    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    fn length(&self) -> f64 {
        self.0.length()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory(id={:?}, samples={})", self.0.id(), self.0.len())
    }
}

fn unwrap_trajs(trajs: &[PyRef<'_, Trajectory>]) -> Vec<tred_core::Trajectory> {
    trajs.iter().map(|t| t.0.clone()).collect()
}

/// Base square, depth, threshold and radius offset of a tree.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct TredParams(tred_core::TredParams);

#[pymethods]
impl TredParams {
    #[new]
    #[pyo3(signature = (half_side, max_depth, tau, origin=None, delta_r=None))]
    fn new(
        half_side: f64,
        max_depth: u32,
        tau: u64,
        origin: Option<Vec<f64>>,
        delta_r: Option<f64>,
    ) -> PyResult<Self> {
        let origin = match origin {
            Some(o) => point(&o)?,
            None => Point::zero(2),
        };
        let mut p = tred_core::TredParams::new(half_side, max_depth, tau, origin).map_err(err)?;
        if let Some(d) = delta_r {
            p = p.with_delta_r(d).map_err(err)?;
        }
        Ok(Self(p))
    }

    /// Base square fitted around the trajectories.
    #[staticmethod]
    fn auto_fit(trajs: Vec<PyRef<'_, Trajectory>>, max_depth: u32, tau: u64) -> PyResult<Self> {
        tred_core::TredParams::auto_fit(&unwrap_trajs(&trajs), max_depth, tau)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn half_side(&self) -> f64 {
        self.0.half_side
    }

    #[getter]
    fn max_depth(&self) -> u32 {
        self.0.max_depth
    }

    #[getter]
    fn tau(&self) -> u64 {
        self.0.tau
    }

    #[getter]
    fn delta_r(&self) -> f64 {
        self.0.delta_r
    }

    #[getter]
    fn origin(&self) -> Vec<f64> {
        self.0.origin.coords().to_vec()
    }

    fn r1(&self, m: u32) -> f64 {
        self.0.r1(m)
    }

    fn r2(&self, m: u32) -> f64 {
        self.0.r2(m)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "TredParams(half_side={}, max_depth={}, tau={}, delta_r={})",
            p.half_side, p.max_depth, p.tau, p.delta_r
        )
    }
}

/// Hierarchical tree of robust square counts.
#[pyclass(skip_from_py_object)]
struct TredTree(tred_core::TredTree);

#[pymethods]
impl TredTree {
    #[staticmethod]
    fn build(trajs: Vec<PyRef<'_, Trajectory>>, params: &TredParams) -> PyResult<Self> {
        let trajs = unwrap_trajs(&trajs);
        tred_core::TredTree::build_offline(&trajs, params.0)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn empty(params: &TredParams) -> PyResult<Self> {
        tred_core::TredTree::empty(params.0).map(Self).map_err(err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        tred_core::TredTree::read_dump(&path).map(Self).map_err(err)
    }

    #[pyo3(signature = (path, with_segments=true))]
    fn write(&self, path: PathBuf, with_segments: bool) -> PyResult<()> {
        self.0.write_dump(&path, with_segments).map_err(err)
    }

    fn update(&mut self, traj: &Trajectory) -> PyResult<()> {
        self.0.update(traj.0.clone()).map_err(err)
    }

    #[getter]
    fn params(&self) -> TredParams {
        TredParams(*self.0.params())
    }

    fn bin_count(&self) -> usize {
        self.0.bin_count()
    }

    fn root_count(&self) -> u64 {
        self.0.root().count
    }

    /// `(index, center, count, active)` for every bin at scale `m`.
    fn bins(&self, m: u32) -> Vec<(u64, Vec<f64>, u64, bool)> {
        self.0
            .bins(m)
            .map(|b| (b.index, b.center.coords().to_vec(), b.count, b.active))
            .collect()
    }

    /// Centers of finest-scale bins whose count exceeds `tau`.
    fn superlevel_samples(&self, tau: u64) -> Vec<Vec<f64>> {
        coords(&self.0.superlevel_samples(tau))
    }

    /// Level set over the base square as rows of 0/1, first row at the
    /// lowest y.
    fn level_set(&self, tau: u64, resolution: usize) -> PyResult<Vec<Vec<u32>>> {
        let r = self.0.level_set_raster(tau, resolution).map_err(err)?;
        rows(&r)
    }

    fn __repr__(&self) -> String {
        format!(
            "TredTree(bins={}, depth={})",
            self.0.bin_count(),
            self.0.depth()
        )
    }
}

fn rows(r: &tred_core::Raster) -> PyResult<Vec<Vec<u32>>> {
    if r.dim() != 2 {
        return Err(PyValueError::new_err("only 2-d rasters convert to rows"));
    }
    let nx = r.shape()[0];
    Ok(r.values().chunks(nx).map(<[u32]>::to_vec).collect())
}

#[pyfunction]
fn disk_count(trajs: Vec<PyRef<'_, Trajectory>>, x: Vec<f64>, r: f64) -> PyResult<usize> {
    counts::disk_count(&unwrap_trajs(&trajs), &point(&x)?, r).map_err(err)
}

#[pyfunction]
fn square_count(trajs: Vec<PyRef<'_, Trajectory>>, x: Vec<f64>, r: f64) -> PyResult<usize> {
    counts::square_count(&unwrap_trajs(&trajs), &point(&x)?, r).map_err(err)
}

#[pyfunction]
fn robust_square_count(
    trajs: Vec<PyRef<'_, Trajectory>>,
    x: Vec<f64>,
    r1: f64,
    r2: f64,
) -> PyResult<usize> {
    counts::robust_square_count(&unwrap_trajs(&trajs), &point(&x)?, r1, r2).map_err(err)
}

fn shape(name: &str) -> PyResult<synth::ShapeSpec> {
    name.parse().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (shape_name, cycles=100, pts_per_cycle=synth::DEFAULT_PTS_PER_CYCLE))]
fn reference_trajectory(
    shape_name: &str,
    cycles: usize,
    pts_per_cycle: usize,
) -> PyResult<Trajectory> {
    synth::reference_trajectory(&shape(shape_name)?, cycles, pts_per_cycle)
        .map(Trajectory)
        .map_err(err)
}

/// Reference curve displaced by the default seeded noise for its shape.
#[pyfunction]
#[pyo3(signature = (shape_name, seed, cycles=100, pts_per_cycle=synth::DEFAULT_PTS_PER_CYCLE))]
fn noisy_sample(
    shape_name: &str,
    seed: u64,
    cycles: usize,
    pts_per_cycle: usize,
) -> PyResult<Trajectory> {
    let s = shape(shape_name)?;
    synth::noisy_sample(
        &s,
        &synth::NoiseSpec::for_shape(&s, seed),
        cycles,
        pts_per_cycle,
    )
    .map(Trajectory)
    .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rows, cols, spacing, trips, gps_sigma, sample_period=1.0, seed=0))]
fn grid_map_traces(
    rows: usize,
    cols: usize,
    spacing: f64,
    trips: usize,
    gps_sigma: f64,
    sample_period: f64,
    seed: u64,
) -> PyResult<Vec<Trajectory>> {
    synth::grid_map_traces(rows, cols, spacing, trips, gps_sigma, sample_period, seed)
        .map(|v| v.into_iter().map(Trajectory).collect())
        .map_err(err)
}

/// Disk counts of radius `r` at the cell centers of a square grid with
/// `resolution` cells per side, as rows from the lowest y.
#[pyfunction]
fn tlde_counts(
    trajs: Vec<PyRef<'_, Trajectory>>,
    r: f64,
    center: Vec<f64>,
    half_side: f64,
    resolution: usize,
) -> PyResult<Vec<Vec<u32>>> {
    let grid = tred_core::Raster::covering(point(&center)?, half_side, resolution).map_err(err)?;
    rows(&oracle::tlde_counts(&unwrap_trajs(&trajs), r, &grid).map_err(err)?)
}

#[pyfunction]
fn maxmin_landmarks(points: Vec<Vec<f64>>, n: usize, seed: u64) -> PyResult<Vec<usize>> {
    oracle::maxmin_landmarks(&self::points(&points)?, n, seed).map_err(err)
}

#[pyfunction]
fn knn_density_filter(points: Vec<Vec<f64>>, k: usize, keep_fraction: f64) -> PyResult<Vec<usize>> {
    oracle::knn_density_filter(&self::points(&points)?, k, keep_fraction).map_err(err)
}

fn polyline(v: &[Vec<f64>]) -> PyResult<mapkit::Polyline> {
    mapkit::Polyline::new(points(v)?).map_err(err)
}

#[pyfunction]
fn directed_hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(mapkit::directed_hausdorff(&polyline(&a)?, &polyline(&b)?))
}

#[pyfunction]
fn discrete_frechet(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(mapkit::discrete_frechet(&polyline(&a)?, &polyline(&b)?))
}

/// Road network with polyline edges.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct RoadGraph(mapkit::RoadGraph);

#[pymethods]
impl RoadGraph {
    #[staticmethod]
    fn grid(rows: usize, cols: usize, spacing: f64) -> Self {
        Self(mapkit::RoadGraph::grid(rows, cols, spacing))
    }

    #[staticmethod]
    fn read(dir: PathBuf, name: &str) -> PyResult<Self> {
        mapkit::read_graph(&dir, name).map(Self).map_err(err)
    }

    fn write(&self, dir: PathBuf, name: &str) -> PyResult<()> {
        mapkit::write_graph(&self.0, &dir, name).map_err(err)
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        coords(self.0.vertices())
    }

    /// `(from, to, geometry)` per edge.
    fn edges(&self) -> Vec<(usize, usize, Vec<Vec<f64>>)> {
        self.0
            .edges()
            .iter()
            .map(|e| (e.from, e.to, coords(e.geometry.points())))
            .collect()
    }

    fn junction_count(&self) -> usize {
        self.0.junction_count()
    }

    fn total_length(&self) -> f64 {
        self.0.total_length()
    }

    fn shortest_path(&self, u: usize, v: usize) -> PyResult<Vec<Vec<f64>>> {
        self.0
            .shortest_path(u, v)
            .map(|p| coords(p.points()))
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "RoadGraph(vertices={}, edges={})",
            self.0.vertex_count(),
            self.0.edge_count()
        )
    }
}

#[pyfunction]
fn extract_map(
    traces: Vec<PyRef<'_, Trajectory>>,
    max_depth: u32,
    tau: u64,
    resolution: usize,
) -> PyResult<RoadGraph> {
    mapkit::extract_map(&unwrap_trajs(&traces), max_depth, tau, resolution)
        .map(|ex| RoadGraph(ex.graph))
        .map_err(err)
}

/// Summaries keyed `hausdorff` and `frechet`, each a dict of min, max,
/// median and avg, plus the number of pairs.
#[pyfunction]
#[pyo3(signature = (truth, recon, n_pairs=100, seed=0, snap_radius=mapkit::DEFAULT_SNAP_RADIUS))]
fn evaluate_map<'py>(
    py: Python<'py>,
    truth: &RoadGraph,
    recon: &RoadGraph,
    n_pairs: usize,
    seed: u64,
    snap_radius: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let m = mapkit::evaluate_map(&truth.0, &recon.0, n_pairs, seed, snap_radius).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("pairs", m.pairs)?;
    for (name, s) in [("hausdorff", m.hausdorff), ("frechet", m.frechet)] {
        let d = PyDict::new(py);
        d.set_item("min", s.min)?;
        d.set_item("max", s.max)?;
        d.set_item("median", s.median)?;
        d.set_item("avg", s.avg)?;
        out.set_item(name, d)?;
    }
    Ok(out)
}

#[pymodule]
fn tred(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Trajectory>()?;
    m.add_class::<TredParams>()?;
    m.add_class::<TredTree>()?;
    m.add_class::<RoadGraph>()?;
    m.add_function(wrap_pyfunction!(disk_count, m)?)?;
    m.add_function(wrap_pyfunction!(square_count, m)?)?;
    m.add_function(wrap_pyfunction!(robust_square_count, m)?)?;
    m.add_function(wrap_pyfunction!(reference_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_sample, m)?)?;
    m.add_function(wrap_pyfunction!(grid_map_traces, m)?)?;
    m.add_function(wrap_pyfunction!(tlde_counts, m)?)?;
    m.add_function(wrap_pyfunction!(maxmin_landmarks, m)?)?;
    m.add_function(wrap_pyfunction!(knn_density_filter, m)?)?;
    m.add_function(wrap_pyfunction!(directed_hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_frechet, m)?)?;
    m.add_function(wrap_pyfunction!(extract_map, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_map, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    fn run(code: &str) {
        Python::attach(|py| {
            let module = pyo3::wrap_pymodule!(tred)(py);
            let globals = PyDict::new(py);
            globals.set_item("tred", module).unwrap();
            let code = std::ffi::CString::new(code).unwrap();
            py.run(&code, Some(&globals), None)
                .map_err(|e| e.print(py))
                .expect("python snippet failed");
        });
    }

    #[test]
    fn counts_and_tree() {
        run(r#"
t = tred.Trajectory([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
assert len(t) == 3 and t.times() == [0.0, 1.0, 2.0]
assert tred.disk_count([t], [0.5, 0.0], 0.2) == 1
p = tred.TredParams(2.0, 3, 0)
tree = tred.TredTree.build([t], p)
assert tree.root_count() == 1
inc = tred.TredTree.empty(p)
inc.update(t)
assert inc.bins(3) == tree.bins(3)
"#);
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        run(r#"
for bad in (lambda: tred.Trajectory([[0.0]]), lambda: tred.TredParams(0.0, 3, 0)):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
try:
    tred.TredTree.read("/nonexistent/tree.dump")
except OSError:
    pass
else:
    raise AssertionError("expected OSError")
"#);
    }

    #[test]
    fn metrics() {
        run(r#"
g = tred.RoadGraph.grid(2, 2, 10.0)
assert len(g.edges()) == 4
path = g.shortest_path(0, 3)
assert path[0] == [0.0, 0.0] and path[-1] == [10.0, 10.0]
assert tred.discrete_frechet([[0, 0], [1, 0], [0, 0]], [[0, 0], [0, 0]]) == 1.0
"#);
    }
}
