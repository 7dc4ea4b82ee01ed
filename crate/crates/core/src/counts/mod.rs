//! Maximal-interval extraction and the local trajectory count functions.
//!
//! For a closed region `U` around a point, every trajectory contributes the
//! set of maximal parameter intervals whose trace stays inside `U`. Counting
//! those intervals gives the disk count (Euclidean ball) and the square count
//! (L-infinity cube). The robust square count counts inner-cube intervals up
//! to identification by a common outer-cube interval: two inner intervals are
//! one class when a single maximal interval of the outer cube contains both.
//!
//! Entry and exit parameters are computed exactly per polyline edge, by a
//! quadratic solve for balls and by per-axis (Liang–Barsky) clipping for
//! cubes. Pieces separated by an arc-length gap below `EPS_REL * radius` are
//! merged, and pieces shorter than that are dropped as grazing contacts
//! unless they touch either end of the trajectory's parameter domain.

pub(crate) mod perturb;

pub use perturb::{fig3_bulge_height, perturb, perturb_fig3};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::trajectory::{ParamInterval, Trajectory};

/// Relative arc-length tolerance for merging gaps and dropping grazing
/// contacts; the absolute tolerance is `EPS_REL * region.radius()`.
pub const EPS_REL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Closed ball `|y - x|_2 <= r`.
    Euclidean,
    /// Closed cube `|y - x|_inf <= r`.
    Max,
}

/// A closed ball or cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    center: Point,
    radius: f64,
    norm: Norm,
    lo: Point,
    hi: Point,
}

impl Region {
    pub fn new(center: Point, radius: f64, norm: Norm) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "region radius must be positive and finite, got {radius}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::Domain("region center is not finite".into()));
        }
        let lo = center.map(|c| c - radius);
        let hi = center.map(|c| c + radius);
        Ok(Self {
            center,
            radius,
            norm,
            lo,
            hi,
        })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Norm::Euclidean)
    }

    pub fn cube(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Norm::Max)
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Lower corner of the bounding box.
    pub fn lo(&self) -> Point {
        self.lo
    }

    /// Upper corner of the bounding box.
    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self.norm {
            Norm::Euclidean => p.dist_sq(&self.center) <= self.radius * self.radius,
            Norm::Max => {
                (0..p.dim()).all(|a| self.lo.get(a) <= p.get(a) && p.get(a) <= self.hi.get(a))
            }
        }
    }

    /// Whether the region's bounding box meets the box `[lo, hi]`.
    fn bbox_meets(&self, lo: &Point, hi: &Point) -> bool {
        (0..lo.dim()).all(|a| lo.get(a) <= self.hi.get(a) && self.lo.get(a) <= hi.get(a))
    }

    /// Local parameter range `[s0, s1] ⊂ [0, 1]` of the segment
    /// `p0 + s (p1 - p0)` lying in the region.
    pub fn clip_segment(&self, p0: &Point, p1: &Point) -> Option<(f64, f64)> {
        match self.norm {
            Norm::Euclidean => self.clip_ball(p0, p1),
            Norm::Max => self.clip_cube(p0, p1),
        }
    }

    fn clip_ball(&self, p0: &Point, p1: &Point) -> Option<(f64, f64)> {
        let v = *p1 - *p0;
        let w = *p0 - self.center;
        let a = v.norm_sq();
        let c = w.norm_sq() - self.radius * self.radius;
        if a == 0.0 {
            return (c <= 0.0).then_some((0.0, 1.0));
        }
        let b = w.dot(&v);
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots of a s^2 + 2 b s + c
        let (lo, hi) = if b > 0.0 {
            let q = -(b + sq);
            (q / a, c / q)
        } else if b < 0.0 {
            let q = sq - b;
            (c / q, q / a)
        } else {
            (-sq / a, sq / a)
        };
        let s0 = lo.max(0.0);
        let s1 = hi.min(1.0);
        (s0 <= s1).then_some((s0, s1))
    }

    fn clip_cube(&self, p0: &Point, p1: &Point) -> Option<(f64, f64)> {
        let mut s0 = 0.0f64;
        let mut s1 = 1.0f64;
        for axis in 0..p0.dim() {
            let p = p0.get(axis);
            let dv = p1.get(axis) - p;
            let (lo, hi) = (self.lo.get(axis), self.hi.get(axis));
            if dv == 0.0 {
                if p < lo || p > hi {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((lo - p) / dv, (hi - p) / dv);
            if dv < 0.0 {
                std::mem::swap(&mut t0, &mut t1);
            }
            s0 = s0.max(t0);
            s1 = s1.min(t1);
            if s0 > s1 {
                return None;
            }
        }
        Some((s0, s1))
    }
}

/// One clipped sub-interval carried together with its arc-length span.
#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    la: f64,
    lb: f64,
}

/// Clip edge `e` of `traj` to `region`; parameter and arc-length endpoints
/// are taken from the sample data when the clip keeps an edge endpoint.
#[inline]
fn edge_piece(traj: &Trajectory, e: usize, region: &Region) -> Option<Piece> {
    let pts = traj.points();
    let (p0, p1) = (&pts[e], &pts[e + 1]);
    // cheap reject on the segment's bounding box
    let mut lo = *p0;
    let mut hi = *p0;
    for a in 0..p0.dim() {
        lo.set(a, p0.get(a).min(p1.get(a)));
        hi.set(a, p0.get(a).max(p1.get(a)));
    }
    if !region.bbox_meets(&lo, &hi) {
        return None;
    }
    let (s0, s1) = region.clip_segment(p0, p1)?;
    let times = traj.times();
    let cum = traj.cum_len();
    let (t0, t1) = (times[e], times[e + 1]);
    let (c0, c1) = (cum[e], cum[e + 1]);
    let at = |s: f64| -> (f64, f64) {
        if s <= 0.0 {
            (t0, c0)
        } else if s >= 1.0 {
            (t1, c1)
        } else {
            (t0 + s * (t1 - t0), c0 + s * (c1 - c0))
        }
    };
    let (a, la) = at(s0);
    let (b, lb) = at(s1);
    Some(Piece { a, b, la, lb })
}

/// Merges near-touching pieces and drops interior grazing contacts.
fn finalize(traj: &Trajectory, pieces: Vec<Piece>, eps: f64, out: &mut Vec<ParamInterval>) {
    let (t_start, t_end) = (traj.start_time(), traj.end_time());
    let mut iter = pieces.into_iter();
    let Some(mut cur) = iter.next() else {
        return;
    };
    let mut emit = |p: Piece| {
        if p.lb - p.la >= eps || p.a <= t_start || p.b >= t_end {
            out.push(ParamInterval::new(p.a, p.b));
        }
    };
    for p in iter {
        if p.la - cur.lb < eps {
            if p.b > cur.b {
                cur.b = p.b;
                cur.lb = p.lb;
            }
        } else {
            emit(cur);
            cur = p;
        }
    }
    emit(cur);
}

fn check_dim(traj: &Trajectory, region: &Region) -> Result<()> {
    if traj.dim() != region.dim() {
        return Err(Error::Domain(format!(
            "trajectory {} has dimension {} but region has dimension {}",
            traj.id(),
            traj.dim(),
            region.dim()
        )));
    }
    Ok(())
}

/// Maximal parameter intervals of `traj` whose trace lies in `region`,
/// sorted and pairwise disjoint.
pub fn maximal_intervals(traj: &Trajectory, region: &Region) -> Result<Vec<ParamInterval>> {
    check_dim(traj, region)?;
    let pieces: Vec<Piece> = (0..traj.edge_count())
        .filter_map(|e| edge_piece(traj, e, region))
        .collect();
    let mut out = Vec::new();
    finalize(traj, pieces, EPS_REL * region.radius(), &mut out);
    Ok(out)
}

/// Same as [`maximal_intervals`] but only edges listed in `edges` (sorted
/// ascending) are examined. The result is identical whenever every edge
/// meeting the region is listed.
pub(crate) fn maximal_intervals_on_edges(
    traj: &Trajectory,
    edges: impl IntoIterator<Item = usize>,
    region: &Region,
) -> Vec<ParamInterval> {
    let pieces: Vec<Piece> = edges
        .into_iter()
        .filter_map(|e| edge_piece(traj, e, region))
        .collect();
    let mut out = Vec::new();
    finalize(traj, pieces, EPS_REL * region.radius(), &mut out);
    out
}

/// Maximal sub-intervals of the given (sorted, disjoint) intervals whose
/// trace lies in `region`. Equivalent to [`maximal_intervals`] restricted
/// to the input intervals.
pub fn clip_intervals(
    traj: &Trajectory,
    intervals: &[ParamInterval],
    region: &Region,
) -> Vec<ParamInterval> {
    let mut out = Vec::new();
    clip_intervals_into(traj, intervals, region, &mut out);
    out
}

fn clip_intervals_into(
    traj: &Trajectory,
    intervals: &[ParamInterval],
    region: &Region,
    out: &mut Vec<ParamInterval>,
) {
    let times = traj.times();
    let n_edges = traj.edge_count();
    let mut pieces = Vec::new();
    for iv in intervals {
        let mut e = traj.edge_at(iv.a);
        loop {
            if let Some(mut p) = edge_piece(traj, e, region) {
                if p.a < iv.a {
                    p.la = traj_arc_on_edge(traj, e, iv.a);
                    p.a = iv.a;
                }
                if p.b > iv.b {
                    p.lb = traj_arc_on_edge(traj, e, iv.b);
                    p.b = iv.b;
                }
                if p.a <= p.b {
                    pieces.push(p);
                }
            }
            e += 1;
            if e >= n_edges || times[e] >= iv.b {
                break;
            }
        }
    }
    finalize(traj, pieces, EPS_REL * region.radius(), out);
}

fn traj_arc_on_edge(traj: &Trajectory, e: usize, t: f64) -> f64 {
    let times = traj.times();
    let cum = traj.cum_len();
    let s = ((t - times[e]) / (times[e + 1] - times[e])).clamp(0.0, 1.0);
    cum[e] + s * (cum[e + 1] - cum[e])
}

/// Number of outer intervals containing at least one inner interval, i.e.
/// the number of equivalence classes of `inner` under identification by
/// `outer`. Both slices must be sorted; every inner interval is expected to
/// lie inside some outer interval.
pub fn count_classes(inner: &[ParamInterval], outer: &[ParamInterval]) -> usize {
    let mut count = 0;
    let mut last: Option<usize> = None;
    for iv in inner {
        let mid = iv.midpoint();
        let k = outer.partition_point(|o| o.b < mid);
        if k < outer.len() && outer[k].a <= mid && last != Some(k) {
            count += 1;
            last = Some(k);
        }
    }
    count
}

/// A trajectory index paired with one of its parameter intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub traj: u32,
    pub interval: ParamInterval,
}

/// Intervals of several trajectories, sorted by `(traj, a)`; intervals of
/// one trajectory are pairwise disjoint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentSet {
    entries: Vec<Segment>,
}

impl SegmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whole parameter domains of the trajectories `ids` in `store`.
    pub fn whole(store: &[Trajectory], ids: impl IntoIterator<Item = usize>) -> Self {
        let mut entries: Vec<Segment> = ids
            .into_iter()
            .map(|i| Segment {
                traj: i as u32,
                interval: ParamInterval::new(store[i].start_time(), store[i].end_time()),
            })
            .collect();
        entries.sort_by(|x, y| x.traj.cmp(&y.traj));
        Self { entries }
    }

    /// Builds a set from entries that are already sorted by `(traj, a)`.
    pub fn from_sorted(entries: Vec<Segment>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| (w[0].traj, w[0].interval.a) <= (w[1].traj, w[1].interval.a)));
        Self { entries }
    }

    pub fn entries(&self) -> &[Segment] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Iterates `(trajectory index, intervals)` groups.
    pub fn groups(&self) -> impl Iterator<Item = (usize, &[Segment])> {
        self.entries
            .chunk_by(|x, y| x.traj == y.traj)
            .map(|g| (g[0].traj as usize, g))
    }

    /// Adds all entries of `other`, keeping the set sorted.
    pub fn merge(&mut self, other: &SegmentSet) {
        if other.is_empty() {
            return;
        }
        let sorted_append = match (self.entries.last(), other.entries.first()) {
            (Some(l), Some(f)) => (l.traj, l.interval.a) <= (f.traj, f.interval.a),
            _ => true,
        };
        self.entries.extend_from_slice(&other.entries);
        if !sorted_append {
            self.entries.sort_by(|x, y| {
                (x.traj, x.interval.a)
                    .partial_cmp(&(y.traj, y.interval.a))
                    .unwrap()
            });
        }
    }

    /// Total trace length covered by the set.
    pub fn trace_length(&self, store: &[Trajectory]) -> f64 {
        self.entries
            .iter()
            .map(|s| {
                let t = &store[s.traj as usize];
                t.arc_length_at(s.interval.b) - t.arc_length_at(s.interval.a)
            })
            .sum()
    }
}

fn intervals_of(group: &[Segment]) -> Vec<ParamInterval> {
    group.iter().map(|s| s.interval).collect()
}

/// Intersects each stored interval's trace with `region`, returning the
/// maximal sub-intervals.
pub fn clip_segments(segments: &SegmentSet, store: &[Trajectory], region: &Region) -> SegmentSet {
    let mut entries = Vec::new();
    let mut buf = Vec::new();
    for (ti, group) in segments.groups() {
        buf.clear();
        clip_intervals_into(&store[ti], &intervals_of(group), region, &mut buf);
        entries.extend(buf.iter().map(|&interval| Segment {
            traj: ti as u32,
            interval,
        }));
    }
    SegmentSet { entries }
}

/// Robust count of a segment set already clipped to the outer cube: the
/// segments are the outer intervals, and the inner intervals are obtained
/// by clipping them to `inner`.
pub fn robust_count_of(outer: &SegmentSet, store: &[Trajectory], inner: &Region) -> usize {
    outer
        .groups()
        .map(|(ti, group)| {
            let outer_iv = intervals_of(group);
            let inner_iv = clip_intervals(&store[ti], &outer_iv, inner);
            count_classes(&inner_iv, &outer_iv)
        })
        .sum()
}

fn count_in(trajs: &[Trajectory], region: &Region) -> Result<usize> {
    trajs
        .iter()
        .map(|t| maximal_intervals(t, region).map(|v| v.len()))
        .sum()
}

/// Number of maximal intervals inside the closed ball `B_r(x)`, summed
/// over trajectories.
pub fn disk_count(trajs: &[Trajectory], x: &Point, r: f64) -> Result<usize> {
    count_in(trajs, &Region::ball(*x, r)?)
}

/// Number of maximal intervals inside the closed cube `S_r(x)`.
pub fn square_count(trajs: &[Trajectory], x: &Point, r: f64) -> Result<usize> {
    count_in(trajs, &Region::cube(*x, r)?)
}

/// Robust local square count at `x`: the number of `S_{r2}(x)` maximal
/// intervals that contain at least one `S_{r1}(x)` maximal interval.
///
/// Both interval sets are computed from scratch on every trajectory.
pub fn robust_square_count(trajs: &[Trajectory], x: &Point, r1: f64, r2: f64) -> Result<usize> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::Parameter(format!(
            "robust count needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let inner = Region::cube(*x, r1)?;
    let outer = Region::cube(*x, r2)?;
    let mut total = 0;
    for t in trajs {
        let a2 = maximal_intervals(t, &outer)?;
        if a2.is_empty() {
            continue;
        }
        let a1 = maximal_intervals(t, &inner)?;
        total += count_classes(&a1, &a2);
    }
    Ok(total)
}
