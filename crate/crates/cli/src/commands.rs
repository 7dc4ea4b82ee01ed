use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tred_core::mapkit::{
    evaluate_map, extract_map, load_trace_file, load_traces, read_graph, write_graph, TraceFormat,
};
use tred_core::oracle::tlde_counts;
use tred_core::synth::{
    grid_map_traces, noisy_sample, write_csv, NoiseSpec, ShapeSpec, DEFAULT_PTS_PER_CYCLE,
};
use tred_core::{Point, Raster, Trajectory, TredParams, TredTree};

use crate::config::{usage, Settings};
use crate::{
    BenchArgs, BuildArgs, Common, MapEvalArgs, MapExtractArgs, RasterArgs, SampleArgs, SynthArgs,
    UpdateArgs,
};

/// `n` sub-seeds split from `seed` by a fixed ChaCha stream.
fn sub_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// First trace file under `input`, as `load_traces` would order them.
fn first_trace_file(input: &Path) -> Result<Option<PathBuf>> {
    if !input.is_dir() {
        return Ok(Some(input.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            !p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'))
        })
        .collect();
    files.sort();
    Ok(files.into_iter().next())
}

/// `auto` reads the column names from a header line such as `t,x,y`,
/// falling back to `x y t`.
fn trace_format(spec: &str, input: &Path) -> Result<TraceFormat> {
    if spec != "auto" {
        return spec.parse().map_err(|e| usage(format!("--format: {e}")));
    }
    let Some(file) = first_trace_file(input)? else {
        return Ok(TraceFormat::default());
    };
    let text =
        std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let looks_named = header
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .all(|t| t.parse::<f64>().is_err());
    Ok(if looks_named {
        header.parse().unwrap_or_default()
    } else {
        TraceFormat::default()
    })
}

fn load_input(input: &Path, format: &str) -> Result<Vec<Trajectory>> {
    let fmt = trace_format(format, input)?;
    let trajs = load_traces(input, &fmt)?;
    info!(
        "loaded {} trajectories from {}",
        trajs.len(),
        input.display()
    );
    Ok(trajs)
}

fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("bad point {s:?}: {e}")))?;
    Point::try_from_slice(&coords)
        .ok_or_else(|| usage(format!("point {s:?} needs 2 or 3 coordinates")))
}

fn read_tree(s: &mut Settings, cli: Option<PathBuf>) -> Result<(PathBuf, TredTree)> {
    let path: PathBuf = s
        .require("tree", cli.map(|p| p.display().to_string()))?
        .into();
    let tree = TredTree::read_dump(&path)?;
    Ok((path, tree))
}

pub fn synth(s: &mut Settings, c: &Common, a: SynthArgs) -> Result<()> {
    let seed = s.get("seed", c.seed, 0)?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "synth_out".into(),
        )?
        .into();
    let kind = s.get("kind", a.kind, "shape".to_string())?;
    let mut listing = String::new();
    match kind.as_str() {
        "shape" => {
            let shape = s.get("shape", a.shape, ShapeSpec::circle())?;
            let samples = s.get("samples", a.samples, 1)?;
            let cycles = s.get("cycles", a.cycles, 100)?;
            let ppc = s.get("pts_per_cycle", a.pts_per_cycle, DEFAULT_PTS_PER_CYCLE)?;
            s.finish()?;
            let traces_dir = out.join("traces");
            create_dir(&traces_dir)?;
            for (i, sub) in sub_seeds(seed, samples).into_iter().enumerate() {
                let t = noisy_sample(&shape, &NoiseSpec::for_shape(&shape, sub), cycles, ppc)?;
                let name = format!("{}-{i:03}.csv", shape.name());
                write_csv(&t, &traces_dir.join(&name))?;
                let _ = writeln!(listing, "# traces/{name} seed={sub}");
            }
        }
        "grid" => {
            let rows = s.get("rows", a.rows, 5)?;
            let cols = s.get("cols", a.cols, 5)?;
            let spacing = s.get("spacing", a.spacing, 100.0)?;
            let trips = s.get("trips", a.trips, 200)?;
            let sigma = s.get("gps_sigma", a.gps_sigma, 8.0)?;
            let period = s.get("sample_period", a.sample_period, 1.0)?;
            s.finish()?;
            let traces = grid_map_traces(rows, cols, spacing, trips, sigma, period, seed)?;
            let traces_dir = out.join("traces");
            create_dir(&traces_dir)?;
            for (i, t) in traces.iter().enumerate() {
                let name = format!("trip-{i:04}.csv");
                write_csv(t, &traces_dir.join(&name))?;
                let _ = writeln!(listing, "# traces/{name}");
            }
            write_graph(
                &tred_core::mapkit::RoadGraph::grid(rows, cols, spacing),
                &out,
                "truth",
            )?;
            listing.push_str("# truth_vertices.txt truth_edges.txt\n");
        }
        other => {
            return Err(usage(format!(
                "unknown synth kind {other:?}; expected shape or grid"
            )))
        }
    }
    write_file(&out.join("manifest.txt"), &(s.manifest("synth") + &listing))?;
    info!("wrote synthetic data to {}", out.display());
    Ok(())
}

pub fn build(s: &mut Settings, c: &Common, a: BuildArgs) -> Result<()> {
    s.opt("seed", c.seed)?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "tree.dump".into(),
        )?
        .into();
    let input = s.opt("input", a.input.map(|p| p.display().to_string()))?;
    let format = s.get("format", a.format, "auto".to_string())?;
    let half_side = s.opt("half_side", a.half_side)?;
    let origin = s.opt("origin", a.origin)?;
    let max_depth = s.get("max_depth", a.max_depth, 5)?;
    let tau = s.get("tau", a.tau, 0)?;
    let delta_r = s.opt("delta_r", a.delta_r)?;
    let segments = s.get("segments", a.segments, true)?;
    s.finish()?;

    let trajs = match &input {
        Some(p) => load_input(Path::new(p), &format)?,
        None => Vec::new(),
    };
    let mut params = match half_side {
        Some(r) => {
            let dim = trajs.first().map_or(2, Trajectory::dim);
            let origin = match origin {
                Some(o) => parse_point(&o)?,
                None => Point::zero(dim),
            };
            TredParams::new(r, max_depth, tau, origin)?
        }
        None if trajs.is_empty() => {
            return Err(usage(
                "an empty tree needs --half-side (and optionally --origin)",
            ));
        }
        None => TredParams::auto_fit(&trajs, max_depth, tau)?,
    };
    if let Some(d) = delta_r {
        params = params.with_delta_r(d)?;
    }
    info!(
        "R={} M={} tau={} r1_M={:.4} r2_M={:.4}",
        params.half_side,
        params.max_depth,
        params.tau,
        params.r1(max_depth),
        params.r2(max_depth)
    );
    let t0 = Instant::now();
    let tree = TredTree::build_offline(&trajs, params)?;
    info!("built {} bins in {:.3?}", tree.bin_count(), t0.elapsed());
    tree.write_dump(&out, segments)?;
    Ok(())
}

pub fn update(s: &mut Settings, c: &Common, a: UpdateArgs) -> Result<()> {
    s.opt("seed", c.seed)?;
    let (path, mut tree) = read_tree(s, a.tree)?;
    let input: PathBuf = s
        .require("input", a.input.map(|p| p.display().to_string()))?
        .into();
    let format = s.get("format", a.format, "auto".to_string())?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            path.display().to_string(),
        )?
        .into();
    s.finish()?;
    let fmt = trace_format(&format, &input)?;
    let traj = load_trace_file(&input, &fmt)?
        .ok_or_else(|| anyhow::anyhow!("{}: fewer than two usable rows", input.display()))?;
    let t0 = Instant::now();
    tree.update(traj)?;
    info!("updated tree in {:.3?}", t0.elapsed());
    tree.write_dump(&out, true)?;
    Ok(())
}

pub fn sample(s: &mut Settings, c: &Common, a: SampleArgs) -> Result<()> {
    s.opt("seed", c.seed)?;
    let (_, tree) = read_tree(s, a.tree)?;
    let tau = s.get("tau", a.tau, tree.params().tau)?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "samples.txt".into(),
        )?
        .into();
    s.finish()?;
    let mut text = String::new();
    let pts = tree.superlevel_samples(tau);
    for p in &pts {
        let row: Vec<String> = p.coords().iter().map(f64::to_string).collect();
        let _ = writeln!(text, "{}", row.join(" "));
    }
    write_file(&out, &text)?;
    info!(
        "wrote {} samples above {tau} to {}",
        pts.len(),
        out.display()
    );
    Ok(())
}

pub fn raster(s: &mut Settings, c: &Common, a: RasterArgs) -> Result<()> {
    s.opt("seed", c.seed)?;
    let (_, tree) = read_tree(s, a.tree)?;
    let tau = s.get("tau", a.tau, tree.params().tau)?;
    let resolution = s.get("resolution", a.resolution, 512)?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "level_set.pgm".into(),
        )?
        .into();
    s.finish()?;
    let r = tree.level_set_raster(tau, resolution)?;
    r.write_pgm(&out)?;
    info!(
        "{} of {} cells set; wrote {}",
        r.count_nonzero(),
        r.len(),
        out.display()
    );
    Ok(())
}

pub fn map_extract(s: &mut Settings, c: &Common, a: MapExtractArgs) -> Result<()> {
    s.opt("seed", c.seed)?;
    let input: PathBuf = s
        .require("input", a.input.map(|p| p.display().to_string()))?
        .into();
    let format = s.get("format", a.format, "auto".to_string())?;
    let max_depth = s.get("max_depth", a.max_depth, 8)?;
    let tau = s.get("tau", a.tau, 5)?;
    let resolution = s.get("resolution", a.resolution, 1024)?;
    let name = s.get("name", a.name, "recon".to_string())?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "map_out".into(),
        )?
        .into();
    s.finish()?;
    if !input.is_dir() {
        return Err(anyhow::anyhow!(
            "{}: not a readable directory",
            input.display()
        ));
    }
    let traces = load_input(&input, &format)?;
    let ex = extract_map(&traces, max_depth, tau, resolution)?;
    info!(
        "R={:.2} M={max_depth} tau={tau} r1_M={:.2} r2_M={:.2}",
        ex.params.half_side,
        ex.params.r1(max_depth),
        ex.params.r2(max_depth)
    );
    for (stage, t) in ex.timings {
        info!("{stage}: {t:.3?}");
    }
    info!(
        "graph: {} vertices, {} edges, {} junctions",
        ex.graph.vertex_count(),
        ex.graph.edge_count(),
        ex.graph.junction_count()
    );
    create_dir(&out)?;
    write_graph(&ex.graph, &out, &name)?;
    ex.level_set.write_pgm(&out.join("level_set.pgm"))?;
    ex.skeleton.write_pgm(&out.join("skeleton.pgm"))?;
    write_file(&out.join("manifest.txt"), &s.manifest("map-extract"))?;
    Ok(())
}

fn graph_prefix(p: &Path) -> Result<(PathBuf, String)> {
    let name = p
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| usage(format!("bad graph prefix {}", p.display())))?;
    let dir = p
        .parent()
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((dir, name.to_string()))
}

pub fn map_eval(s: &mut Settings, c: &Common, a: MapEvalArgs) -> Result<()> {
    let seed = s.get("seed", c.seed, 0)?;
    let truth: PathBuf = s
        .require("truth", a.truth.map(|p| p.display().to_string()))?
        .into();
    let recon: PathBuf = s
        .require("recon", a.recon.map(|p| p.display().to_string()))?
        .into();
    let pairs = s.get("pairs", a.pairs, 100)?;
    let snap = s.get(
        "snap_radius",
        a.snap_radius,
        tred_core::mapkit::DEFAULT_SNAP_RADIUS,
    )?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "metrics.csv".into(),
        )?
        .into();
    s.finish()?;
    let (td, tn) = graph_prefix(&truth)?;
    let (rd, rn) = graph_prefix(&recon)?;
    let g = read_graph(&td, &tn)?;
    let h = read_graph(&rd, &rn)?;
    let m = evaluate_map(&g, &h, pairs, seed, snap)?;
    info!(
        "{} pairs; median hausdorff {:.3}, median frechet {:.3}",
        m.pairs, m.hausdorff.median, m.frechet.median
    );
    write_file(&out, &m.to_csv())?;
    Ok(())
}

pub fn bench(s: &mut Settings, c: &Common, a: BenchArgs) -> Result<()> {
    let seed = s.get("seed", c.seed, 0)?;
    let shape = s.get("shape", a.shape, ShapeSpec::circle())?;
    let cycles = s.get("cycles", a.cycles, "25,50,100".to_string())?;
    let ppc = s.get("pts_per_cycle", a.pts_per_cycle, DEFAULT_PTS_PER_CYCLE)?;
    let half_side = s.get("half_side", a.half_side, 6.0)?;
    let max_depth = s.get("max_depth", a.max_depth, 5)?;
    let tau = s.get("tau", a.tau, 25)?;
    let resolution = s.get("resolution", a.resolution, 500)?;
    let radius = s.get("radius", a.radius, 0.3)?;
    let repeats = s.get("repeats", a.repeats, 1)?;
    let out: PathBuf = s
        .get(
            "out",
            c.out.as_ref().map(|p| p.display().to_string()),
            "bench.csv".into(),
        )?
        .into();
    s.finish()?;
    if repeats == 0 {
        return Err(usage("repeats must be positive"));
    }
    let sizes = cycles
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("bad cycles list {cycles:?}: {e}")))?;
    let dim_origin = Point::zero(2);
    let params = TredParams::new(half_side, max_depth, tau, dim_origin)?;
    let grid = Raster::covering(dim_origin, half_side, resolution)?;
    let noise = NoiseSpec::for_shape(&shape, seed);
    let mut csv = String::from("n,m,t_tred,t_tlde\n");
    for n_cycles in sizes {
        let trajs = if n_cycles == 0 {
            Vec::new()
        } else {
            vec![noisy_sample(&shape, &noise, n_cycles, ppc)?]
        };
        let n: usize = trajs.iter().map(Trajectory::len).sum();
        let median = |f: &mut dyn FnMut() -> Result<()>| -> Result<f64> {
            let mut t = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let s = Instant::now();
                f()?;
                t.push(s.elapsed().as_secs_f64());
            }
            t.sort_by(f64::total_cmp);
            Ok(t[repeats / 2])
        };
        let t_tred = median(&mut || {
            TredTree::build_offline(&trajs, params)
                .map(drop)
                .map_err(Into::into)
        })?;
        let t_tlde = median(&mut || {
            tlde_counts(&trajs, radius, &grid)
                .map(drop)
                .map_err(Into::into)
        })?;
        info!("n={n}: tred {t_tred:.4}s, tlde {t_tlde:.4}s");
        let _ = writeln!(csv, "{n},{},{t_tred},{t_tlde}", grid.len());
    }
    write_file(&out, &csv)?;
    Ok(())
}
