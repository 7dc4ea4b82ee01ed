//! The hierarchical 2^d-tree of robust square counts.
//!
//! Bins at scale `m` have inner half-side `r1_m = R 2^-m` and outer
//! half-side `r2_m = r1_m + delta_r`. Each scale is a sparse map from a
//! path-encoded index to a bin: the index of child `digit` of bin `k` is
//! `k * 2^d + digit`, where bit `d - 1 - a` of `digit` selects the upper
//! half along axis `a`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::counts::{clip_segments, robust_count_of, Region, Segment, SegmentSet};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::raster::Raster;
use crate::trajectory::{estimate_curvature_max, ParamInterval, Trajectory};

/// Margin factor of the auto-fitted base square: half-side is this times
/// the largest bounding-box extent.
pub const AUTO_FIT_FACTOR: f64 = 0.525;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TredParams {
    /// Half-side of the base square.
    pub half_side: f64,
    /// Maximum depth.
    pub max_depth: u32,
    /// Activation threshold: a bin is refined when its count exceeds it.
    pub tau: u64,
    /// Offset `r2_m - r1_m`, shared by every scale.
    pub delta_r: f64,
    /// Center of the base square; its dimension is the tree dimension.
    pub origin: Point,
}

impl TredParams {
    /// Parameters with the default offset `(sqrt 2 - 1) R 2^-M`, the
    /// smallest for which `S_{r1}` fits in `B_{r2}` at the finest scale.
    pub fn new(half_side: f64, max_depth: u32, tau: u64, origin: Point) -> Result<Self> {
        let p = Self {
            half_side,
            max_depth,
            tau,
            delta_r: default_delta_r(half_side, max_depth),
            origin,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_delta_r(mut self, delta_r: f64) -> Result<Self> {
        self.delta_r = delta_r;
        self.validate()?;
        Ok(self)
    }

    /// Base square centered on the bounding box of `trajs`, with half-side
    /// [`AUTO_FIT_FACTOR`] times its largest extent.
    pub fn auto_fit(trajs: &[Trajectory], max_depth: u32, tau: u64) -> Result<Self> {
        let first = trajs
            .first()
            .ok_or_else(|| Error::InsufficientData("cannot fit a base square to no data".into()))?;
        let (mut lo, mut hi) = first.bounds();
        for t in &trajs[1..] {
            check_dim(t, lo.dim())?;
            let (l, h) = t.bounds();
            for a in 0..lo.dim() {
                lo.set(a, lo.get(a).min(l.get(a)));
                hi.set(a, hi.get(a).max(h.get(a)));
            }
        }
        let extent = (hi - lo).norm_max();
        let half_side = if extent > 0.0 {
            AUTO_FIT_FACTOR * extent
        } else {
            1.0
        };
        Self::new(half_side, max_depth, tau, lo.lerp(&hi, 0.5))
    }

    pub fn dim(&self) -> usize {
        self.origin.dim()
    }

    pub fn r1(&self, m: u32) -> f64 {
        self.half_side * 0.5f64.powi(m as i32)
    }

    pub fn r2(&self, m: u32) -> f64 {
        self.r1(m) + self.delta_r
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d != 2 && d != 3 {
            return Err(Error::Domain(format!(
                "tree dimension must be 2 or 3, got {d}"
            )));
        }
        if !(self.half_side > 0.0 && self.half_side.is_finite()) {
            return Err(Error::Parameter(format!(
                "R must be positive, got {}",
                self.half_side
            )));
        }
        if !self.origin.is_finite() {
            return Err(Error::Parameter("origin must be finite".into()));
        }
        if self.max_depth == 0 || d * self.max_depth as usize > 63 {
            return Err(Error::Parameter(format!(
                "M must be in 1..={}, got {}",
                63 / d,
                self.max_depth
            )));
        }
        if !(self.delta_r > 0.0 && self.delta_r.is_finite()) {
            return Err(Error::Parameter(format!(
                "delta_r must be positive, got {}",
                self.delta_r
            )));
        }
        Ok(())
    }

    /// Warning text when the finest outer radius is not below the minimum
    /// radius of curvature of the data, so the sandwich bound between disk
    /// counts and robust counts may fail.
    pub fn curvature_warning(&self, trajs: &[Trajectory]) -> Option<String> {
        let kappa = trajs
            .iter()
            .filter(|t| t.len() >= 3)
            .filter_map(|t| estimate_curvature_max(t).ok())
            .map(|k| k.kappa_max())
            .fold(0.0, f64::max);
        let r2 = self.r2(self.max_depth);
        (kappa > 0.0 && r2 >= 1.0 / kappa).then(|| {
            format!(
                "r2_M = {r2} is not below the minimum radius of curvature {} of the input",
                1.0 / kappa
            )
        })
    }

    /// Center of bin `index` at scale `m`.
    pub fn center_of(&self, m: u32, index: u64) -> Point {
        let d = self.dim();
        let mask = (1u64 << d) - 1;
        let mut k = [0u64; 3];
        for j in 1..=m {
            let digit = (index >> (d as u32 * (m - j))) & mask;
            for (a, ka) in k.iter_mut().enumerate().take(d) {
                *ka = (*ka << 1) | ((digit >> (d - 1 - a)) & 1);
            }
        }
        let scale = 0.5f64.powi(m as i32);
        let mut c = self.origin;
        for (a, &ka) in k.iter().enumerate().take(d) {
            let off = self.half_side * ((2 * ka + 1) as f64 * scale - 1.0);
            c.set(a, self.origin.get(a) + off);
        }
        c
    }
}

/// Default radius offset `(sqrt 2 - 1) R 2^-M`.
pub fn default_delta_r(half_side: f64, max_depth: u32) -> f64 {
    (std::f64::consts::SQRT_2 - 1.0) * half_side * 0.5f64.powi(max_depth as i32)
}

fn check_dim(t: &Trajectory, d: usize) -> Result<()> {
    if t.dim() != d {
        return Err(Error::Domain(format!(
            "trajectory {} has dimension {} but the tree has dimension {d}",
            t.id(),
            t.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub scale: u32,
    pub index: u64,
    pub center: Point,
    pub count: u64,
    /// Trace inside the closed outer cube of the bin.
    pub segments: SegmentSet,
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TredTree {
    params: TredParams,
    levels: Vec<BTreeMap<u64, Bin>>,
    active: Vec<BTreeSet<u64>>,
    store: Vec<Trajectory>,
    has_segments: bool,
}

impl TredTree {
    /// Builds the tree level by level from the given trajectories.
    pub fn build_offline(trajs: &[Trajectory], params: TredParams) -> Result<Self> {
        params.validate()?;
        for t in trajs {
            check_in_base(t, &params)?;
        }
        if let Some(w) = params.curvature_warning(trajs) {
            log::warn!("{w}");
        }
        let store = trajs.to_vec();
        let root = Bin {
            scale: 0,
            index: 0,
            center: params.origin,
            count: store.len() as u64,
            segments: SegmentSet::whole(&store, 0..store.len()),
            active: true,
        };
        let mut tree = Self {
            params,
            levels: vec![BTreeMap::from([(0, root)])],
            active: vec![BTreeSet::from([0])],
            store,
            has_segments: true,
        };
        for m in 1..=params.max_depth {
            let parents: Vec<u64> = tree.active[m as usize - 1].iter().copied().collect();
            let prev = &tree.levels[m as usize - 1];
            let children: Vec<Vec<Bin>> = parents
                .par_iter()
                .map(|k| tree.children_of(m, *k, &prev[k].segments))
                .collect();
            let mut level = BTreeMap::new();
            let mut act = BTreeSet::new();
            for bin in children.into_iter().flatten() {
                if bin.active {
                    act.insert(bin.index);
                }
                level.insert(bin.index, bin);
            }
            tree.levels.push(level);
            tree.active.push(act);
        }
        Ok(tree)
    }

    /// The tree of no trajectories: the root and its (empty) children.
    pub fn empty(params: TredParams) -> Result<Self> {
        Self::build_offline(&[], params)
    }

    /// Clips `source` into each child of bin `k` at scale `m - 1`.
    fn children_of(&self, m: u32, k: u64, source: &SegmentSet) -> Vec<Bin> {
        let d = self.params.dim();
        (0..1u64 << d)
            .map(|digit| {
                let index = (k << d) | digit;
                let (segments, count) = self.clip_child(m, index, source);
                Bin {
                    scale: m,
                    index,
                    center: self.params.center_of(m, index),
                    count,
                    active: count > self.params.tau,
                    segments,
                }
            })
            .collect()
    }

    fn clip_child(&self, m: u32, index: u64, source: &SegmentSet) -> (SegmentSet, u64) {
        if source.is_empty() {
            return (SegmentSet::new(), 0);
        }
        let c = self.params.center_of(m, index);
        let outer = Region::cube(c, self.params.r2(m)).expect("validated radius");
        let inner = Region::cube(c, self.params.r1(m)).expect("validated radius");
        let segs = clip_segments(source, &self.store, &outer);
        let count = robust_count_of(&segs, &self.store, &inner) as u64;
        (segs, count)
    }

    /// Inserts one trajectory, propagating its segments down the active
    /// bins. A bin that becomes active here passes its full segment set on
    /// to its children.
    pub fn update(&mut self, traj: Trajectory) -> Result<()> {
        if !self.has_segments {
            return Err(Error::Precondition(
                "tree was loaded without segments; rebuild it before updating".into(),
            ));
        }
        check_in_base(&traj, &self.params)?;
        if let Some(w) = self.params.curvature_warning(std::slice::from_ref(&traj)) {
            log::warn!("{w}");
        }
        let id = self.store.len();
        self.store.push(traj);
        let new_whole = SegmentSet::whole(&self.store, [id]);
        let root = self.levels[0].get_mut(&0).expect("root exists");
        root.count += 1;
        root.segments.merge(&new_whole);

        let d = self.params.dim();
        let mut sources: BTreeMap<u64, SegmentSet> = BTreeMap::from([(0, new_whole)]);
        for m in 1..=self.params.max_depth {
            let mu = m as usize;
            let mut next = BTreeMap::new();
            for (k, src) in &sources {
                if !self.active[mu - 1].contains(k) {
                    continue;
                }
                for digit in 0..1u64 << d {
                    let index = (k << d) | digit;
                    let (segs, count) = self.clip_child(m, index, src);
                    let center = self.params.center_of(m, index);
                    let bin = self.levels[mu].entry(index).or_insert_with(|| Bin {
                        scale: m,
                        index,
                        center,
                        count: 0,
                        segments: SegmentSet::new(),
                        active: false,
                    });
                    bin.segments.merge(&segs);
                    bin.count += count;
                    if !bin.active && bin.count > self.params.tau {
                        bin.active = true;
                        self.active[mu].insert(index);
                        next.insert(index, bin.segments.clone());
                    } else if !segs.is_empty() {
                        next.insert(index, segs);
                    }
                }
            }
            sources = next;
        }
        Ok(())
    }

    /// Recomputes the tree from its trajectory store, as the offline build
    /// would.
    pub fn rebuild(&mut self) -> Result<()> {
        *self = Self::build_offline(&self.store, self.params)?;
        Ok(())
    }

    pub fn params(&self) -> &TredParams {
        &self.params
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.store
    }

    pub fn root(&self) -> &Bin {
        &self.levels[0][&0]
    }

    pub fn has_segments(&self) -> bool {
        self.has_segments
    }

    /// Number of materialized scales (`M + 1`).
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn bin(&self, m: u32, index: u64) -> Option<&Bin> {
        self.levels.get(m as usize)?.get(&index)
    }

    /// Materialized bins at scale `m` in index order.
    pub fn bins(&self, m: u32) -> impl Iterator<Item = &Bin> {
        self.levels
            .get(m as usize)
            .into_iter()
            .flat_map(|l| l.values())
    }

    /// Indices of the active bins at scale `m`, ascending.
    pub fn active(&self, m: u32) -> impl Iterator<Item = u64> + '_ {
        self.active
            .get(m as usize)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    pub fn bin_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Centers of finest-scale bins with count above `tau_sample`, in index
    /// order.
    pub fn superlevel_samples(&self, tau_sample: u64) -> Vec<Point> {
        self.bins(self.params.max_depth)
            .filter(|b| b.count > tau_sample)
            .map(|b| b.center)
            .collect()
    }

    /// Binary raster with `resolution` cells per axis over the base square,
    /// the union of the outer balls of finest-scale bins with count above
    /// `tau`.
    pub fn level_set_raster(&self, tau: u64, resolution: usize) -> Result<Raster> {
        if resolution < 2 {
            return Err(Error::Parameter(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        let mut r = Raster::covering(self.params.origin, self.params.half_side, resolution)?;
        let radius = self.params.r2(self.params.max_depth);
        for c in self.superlevel_samples(tau) {
            r.stamp_ball(&c, radius);
        }
        Ok(r)
    }

    /// Textual dump. Trajectories come first, then one record per bin,
    /// each optionally followed by its segments.
    pub fn to_dump(&self, with_segments: bool) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "TRED v1 d={} R={} M={} tau={} delta_r={}",
            p.dim(),
            p.half_side,
            p.max_depth,
            p.tau,
            p.delta_r
        );
        for t in &self.store {
            let _ = writeln!(s, "traj {} {}", dump_id(t.id()), t.len());
            for (time, pt) in t.times().iter().zip(t.points()) {
                let _ = writeln!(s, "p {time} {pt}");
            }
        }
        for level in &self.levels {
            for b in level.values() {
                let _ = writeln!(
                    s,
                    "bin {} {} {} {} {}",
                    b.scale,
                    b.index,
                    u8::from(b.active),
                    b.count,
                    b.center
                );
                if with_segments && self.has_segments {
                    for seg in b.segments.entries() {
                        let _ =
                            writeln!(s, "seg {} {} {}", seg.traj, seg.interval.a, seg.interval.b);
                    }
                }
            }
        }
        s
    }

    pub fn write_dump(&self, path: &Path, with_segments: bool) -> Result<()> {
        std::fs::write(path, self.to_dump(with_segments)).map_err(|e| Error::io(path, e))
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_dump(&text, path)
    }

    /// Parses [`TredTree::to_dump`] output; `path` is only used in errors.
    pub fn from_dump(text: &str, path: &Path) -> Result<Self> {
        DumpParser::new(text, path).parse()
    }
}

fn check_in_base(t: &Trajectory, p: &TredParams) -> Result<()> {
    check_dim(t, p.dim())?;
    for (i, pt) in t.points().iter().enumerate() {
        if (*pt - p.origin).norm_max() > p.half_side {
            return Err(Error::Containment {
                id: t.id().to_string(),
                detail: format!(
                    "sample {i} at ({pt}) is outside the square of half-side {} about ({})",
                    p.half_side, p.origin
                ),
            });
        }
    }
    Ok(())
}

fn dump_id(id: &str) -> String {
    if id.is_empty() {
        return "_".into();
    }
    id.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

struct DumpParser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: &'a Path,
}

impl<'a> DumpParser<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            path,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line + 1, msg)
    }

    fn num<T: std::str::FromStr>(&self, line: usize, tok: Option<&str>, what: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let tok = tok.ok_or_else(|| self.err(line, format!("missing {what}")))?;
        tok.parse::<T>()
            .map_err(|e| self.err(line, format!("bad {what} {tok:?}: {e}")))
    }

    fn parse(mut self) -> Result<TredTree> {
        let (ln, header) = self
            .lines
            .next()
            .ok_or_else(|| Error::parse(self.path, 1, "empty dump"))?;
        let mut w = header.split_whitespace();
        if w.next() != Some("TRED") || w.next() != Some("v1") {
            return Err(self.err(ln, "expected header `TRED v1 ...`"));
        }
        let mut kv = BTreeMap::new();
        for tok in w {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| self.err(ln, format!("bad header field {tok:?}")))?;
            kv.insert(k, v);
        }
        let d: usize = self.num(ln, kv.get("d").copied(), "d")?;
        let half_side: f64 = self.num(ln, kv.get("R").copied(), "R")?;
        let max_depth: u32 = self.num(ln, kv.get("M").copied(), "M")?;
        let tau: u64 = self.num(ln, kv.get("tau").copied(), "tau")?;
        let delta_r: f64 = self.num(ln, kv.get("delta_r").copied(), "delta_r")?;
        if d != 2 && d != 3 {
            return Err(self.err(ln, format!("unsupported dimension {d}")));
        }

        let mut store = Vec::new();
        let mut levels: Vec<BTreeMap<u64, Bin>> = vec![BTreeMap::new(); max_depth as usize + 1];
        let mut active: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); max_depth as usize + 1];
        let mut any_segments = false;
        let mut current: Option<(u32, u64)> = None;
        let mut seg_buf: Vec<Segment> = Vec::new();

        let flush = |levels: &mut Vec<BTreeMap<u64, Bin>>,
                     current: Option<(u32, u64)>,
                     buf: &mut Vec<Segment>| {
            if let Some((m, k)) = current {
                let bin = levels[m as usize].get_mut(&k).expect("bin inserted");
                buf.sort_by(|x, y| {
                    (x.traj, x.interval.a)
                        .partial_cmp(&(y.traj, y.interval.a))
                        .unwrap()
                });
                bin.segments = SegmentSet::from_sorted(std::mem::take(buf));
            }
        };

        while let Some((ln, line)) = self.lines.next() {
            let mut w = line.split_whitespace();
            match w.next() {
                None => continue,
                Some("traj") => {
                    let id = w.next().ok_or_else(|| self.err(ln, "missing id"))?;
                    let n: usize = self.num(ln, w.next(), "sample count")?;
                    let mut times = Vec::with_capacity(n);
                    let mut pts = Vec::with_capacity(n);
                    for _ in 0..n {
                        let (pl, pline) = self
                            .lines
                            .next()
                            .ok_or_else(|| self.err(ln, "truncated trajectory"))?;
                        let mut pw = pline.split_whitespace();
                        if pw.next() != Some("p") {
                            return Err(self.err(pl, "expected sample record `p`"));
                        }
                        times.push(self.num::<f64>(pl, pw.next(), "time")?);
                        let mut c = [0.0; 3];
                        for ca in c.iter_mut().take(d) {
                            *ca = self.num(pl, pw.next(), "coordinate")?;
                        }
                        pts.push(Point::from_slice(&c[..d]));
                    }
                    let t =
                        Trajectory::new(id, times, pts).map_err(|e| self.err(ln, e.to_string()))?;
                    store.push(t);
                }
                Some("bin") => {
                    flush(&mut levels, current, &mut seg_buf);
                    let m: u32 = self.num(ln, w.next(), "scale")?;
                    let index: u64 = self.num(ln, w.next(), "index")?;
                    let act: u8 = self.num(ln, w.next(), "active flag")?;
                    let count: u64 = self.num(ln, w.next(), "count")?;
                    let mut c = [0.0; 3];
                    for ca in c.iter_mut().take(d) {
                        *ca = self.num(ln, w.next(), "center coordinate")?;
                    }
                    if m > max_depth {
                        return Err(self.err(ln, format!("scale {m} exceeds M = {max_depth}")));
                    }
                    if act == 1 {
                        active[m as usize].insert(index);
                    }
                    levels[m as usize].insert(
                        index,
                        Bin {
                            scale: m,
                            index,
                            center: Point::from_slice(&c[..d]),
                            count,
                            segments: SegmentSet::new(),
                            active: act == 1,
                        },
                    );
                    current = Some((m, index));
                }
                Some("seg") => {
                    if current.is_none() {
                        return Err(self.err(ln, "segment record before any bin"));
                    }
                    let traj: u32 = self.num(ln, w.next(), "trajectory index")?;
                    let a: f64 = self.num(ln, w.next(), "interval start")?;
                    let b: f64 = self.num(ln, w.next(), "interval end")?;
                    if traj as usize >= store.len() {
                        return Err(self.err(ln, format!("unknown trajectory {traj}")));
                    }
                    seg_buf.push(Segment {
                        traj,
                        interval: ParamInterval::new(a, b),
                    });
                    any_segments = true;
                }
                Some(other) => return Err(self.err(ln, format!("unknown record {other:?}"))),
            }
        }
        flush(&mut levels, current, &mut seg_buf);

        let origin = levels[0]
            .get(&0)
            .map(|b| b.center)
            .ok_or_else(|| Error::parse(self.path, 0, "dump has no root bin"))?;
        let params = TredParams {
            half_side,
            max_depth,
            tau,
            delta_r,
            origin,
        };
        params
            .validate()
            .map_err(|e| Error::parse(self.path, 1, e.to_string()))?;
        // A tree with trajectories but no segment records was written
        // without them; an empty tree has nothing to lose.
        let has_segments = any_segments || store.is_empty();
        Ok(TredTree {
            params,
            levels,
            active,
            store,
            has_segments,
        })
    }
}
