//! Polyline trajectories, interpolation, discrete curvature and time-delay
//! embedding.
//!
//! A trajectory is a time-parameterized polyline; the curve between two
//! samples is the straight segment joining them. Every count in this crate is
//! computed exactly on that polyline, so counts do not depend on how densely
//! a path was sampled along its own trace.

use std::fmt;

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    times: Vec<f64>,
    points: Vec<Point>,
    /// Cumulative arc length at each sample; `cum_len[0] == 0`.
    cum_len: Vec<f64>,
}

impl Trajectory {
    /// Validates and builds a trajectory.
    ///
    /// Requires at least two samples, strictly increasing finite times, and
    /// finite points that all share one dimension in `{2, 3}`.
    pub fn new(id: impl Into<String>, times: Vec<f64>, points: Vec<Point>) -> Result<Self> {
        let id = id.into();
        if times.len() != points.len() {
            return Err(Error::Domain(format!(
                "trajectory {id}: {} times but {} points",
                times.len(),
                points.len()
            )));
        }
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "trajectory {id} needs at least 2 samples, got {}",
                points.len()
            )));
        }
        let dim = points[0].dim();
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!(
                "trajectory {id}: dimension {dim} not in {{2, 3}}"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::Domain(format!(
                    "trajectory {id}: sample {i} has dimension {} (expected {dim})",
                    p.dim()
                )));
            }
            if !p.is_finite() {
                return Err(Error::Domain(format!(
                    "trajectory {id}: sample {i} is not finite"
                )));
            }
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[0].is_finite() && w[1].is_finite()) || w[1] <= w[0] {
                return Err(Error::Domain(format!(
                    "trajectory {id}: times not strictly increasing at sample {}",
                    i + 1
                )));
            }
        }
        let mut cum_len = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cum_len.push(0.0);
        for w in points.windows(2) {
            acc += w[0].dist(&w[1]);
            cum_len.push(acc);
        }
        Ok(Self {
            id,
            times,
            points,
            cum_len,
        })
    }

    /// Builds a trajectory with unit-spaced times `0, 1, 2, ...`.
    pub fn from_points(id: impl Into<String>, points: Vec<Point>) -> Result<Self> {
        let times = (0..points.len()).map(|i| i as f64).collect();
        Self::new(id, times, points)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Total arc length of the polyline.
    pub fn length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Number of polyline edges.
    pub fn edge_count(&self) -> usize {
        self.points.len() - 1
    }

    #[inline]
    pub(crate) fn cum_len(&self) -> &[f64] {
        &self.cum_len
    }

    /// Index of the edge containing parameter `t` (clamped to the domain).
    /// At a sample time shared by two edges the later edge is returned,
    /// except at the final sample.
    pub(crate) fn edge_at(&self, t: f64) -> usize {
        let n = self.times.len();
        match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Position along the polyline at parameter `t`, piecewise-linear
    /// between bracketing samples.
    pub fn interpolate(&self, t: f64) -> Result<Point> {
        if !(t >= self.start_time() && t <= self.end_time()) {
            return Err(Error::Domain(format!(
                "t = {t} outside [{}, {}] of trajectory {}",
                self.start_time(),
                self.end_time(),
                self.id
            )));
        }
        let e = self.edge_at(t);
        let (t0, t1) = (self.times[e], self.times[e + 1]);
        if t == t0 {
            return Ok(self.points[e]);
        }
        if t == t1 {
            return Ok(self.points[e + 1]);
        }
        let s = (t - t0) / (t1 - t0);
        Ok(self.points[e].lerp(&self.points[e + 1], s))
    }

    /// Arc length travelled at parameter `t` (clamped to the domain).
    pub fn arc_length_at(&self, t: f64) -> f64 {
        let t = t.clamp(self.start_time(), self.end_time());
        let e = self.edge_at(t);
        let (t0, t1) = (self.times[e], self.times[e + 1]);
        let s = (t - t0) / (t1 - t0);
        self.cum_len[e] + s * (self.cum_len[e + 1] - self.cum_len[e])
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            for a in 0..p.dim() {
                lo.set(a, lo.get(a).min(p.get(a)));
                hi.set(a, hi.get(a).max(p.get(a)));
            }
        }
        (lo, hi)
    }

    /// Applies `f` to every sample point, keeping times.
    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.times.clone(),
            self.points.iter().map(f).collect(),
        )
    }
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("id", &self.id)
            .field("samples", &self.points.len())
            .field("dim", &self.dim())
            .field("t", &(self.start_time(), self.end_time()))
            .finish()
    }
}

/// A closed sub-interval `[a, b]` of a trajectory's parameter domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamInterval {
    pub a: f64,
    pub b: f64,
}

impl ParamInterval {
    pub fn new(a: f64, b: f64) -> Self {
        debug_assert!(a <= b, "interval [{a}, {b}] reversed");
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b < self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }

    pub fn contains_interval(&self, other: &ParamInterval) -> bool {
        self.a <= other.a && other.b <= self.b
    }
}

/// Upper bound on the curvature of a curve. Zero means straight, i.e. an
/// infinite curvature radius.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct CurvatureBound(f64);

impl CurvatureBound {
    pub fn new(kappa_max: f64) -> Result<Self> {
        if !(kappa_max.is_finite() && kappa_max >= 0.0) {
            return Err(Error::Parameter(format!(
                "curvature bound must be finite and >= 0, got {kappa_max}"
            )));
        }
        Ok(Self(kappa_max))
    }

    pub fn kappa_max(&self) -> f64 {
        self.0
    }

    /// `1 / kappa_max`, or `+inf` for a zero bound.
    pub fn min_radius(&self) -> f64 {
        if self.0 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.0
        }
    }
}

/// Menger curvature of three points: the reciprocal of the circumradius.
/// Collinear or coincident triples give 0.
pub fn menger_curvature(p: &Point, q: &Point, r: &Point) -> f64 {
    let u = *q - *p;
    let v = *r - *p;
    let w = *r - *q;
    let (a, b, c) = (u.norm(), v.norm(), w.norm());
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return 0.0;
    }
    let twice_area = if p.dim() == 2 {
        (u.x() * v.y() - u.y() * v.x()).abs()
    } else {
        let (u, v) = (u.coords(), v.coords());
        let cx = u[1] * v[2] - u[2] * v[1];
        let cy = u[2] * v[0] - u[0] * v[2];
        let cz = u[0] * v[1] - u[1] * v[0];
        (cx * cx + cy * cy + cz * cz).sqrt()
    };
    // 1 / R = 4 * area / (a b c)
    2.0 * twice_area / (a * b * c)
}

/// Maximum Menger curvature over consecutive sample triples.
pub fn estimate_curvature_max(traj: &Trajectory) -> Result<CurvatureBound> {
    let pts = traj.points();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "curvature needs at least 3 samples, trajectory {} has {}",
            traj.id(),
            pts.len()
        )));
    }
    let kappa = pts
        .windows(3)
        .map(|w| menger_curvature(&w[0], &w[1], &w[2]))
        .fold(0.0f64, f64::max);
    CurvatureBound::new(kappa)
}

/// Time-delay embedding: point `i` is
/// `(s[i], s[i + delay], ..., s[i + (dim - 1) * delay])`, with times `0, 1, ...`.
pub fn time_delay_embed(series: &[f64], delay: usize, dim: usize) -> Result<Trajectory> {
    if delay == 0 {
        return Err(Error::Parameter("delay must be positive".into()));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::Parameter(format!(
            "embedding dimension must be 2 or 3, got {dim}"
        )));
    }
    let span = (dim - 1) * delay;
    if series.len() < span + 1 {
        return Err(Error::InsufficientData(format!(
            "series of length {} too short for dim {dim}, delay {delay}",
            series.len()
        )));
    }
    let n = series.len() - span;
    let mut coords = [0.0; 3];
    let points = (0..n)
        .map(|i| {
            for (k, c) in coords.iter_mut().take(dim).enumerate() {
                *c = series[i + k * delay];
            }
            Point::from_slice(&coords[..dim])
        })
        .collect();
    Trajectory::from_points("tde", points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(pts: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::new(
            "t",
            pts.iter().map(|p| p.0).collect(),
            pts.iter().map(|p| Point::new2(p.1, p.2)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn interpolate_midpoint() {
        let tr = line(&[(0.0, 0.0, 0.0), (2.0, 2.0, 0.0)]);
        assert_eq!(tr.interpolate(1.0).unwrap(), Point::new2(1.0, 0.0));
    }

    #[test]
    fn interpolate_endpoints_exact() {
        let tr = line(&[(0.0, 0.3, 0.1), (1.0, 1.7, -2.0), (2.5, 1.0, 1.0)]);
        assert_eq!(tr.interpolate(0.0).unwrap(), Point::new2(0.3, 0.1));
        assert_eq!(tr.interpolate(1.0).unwrap(), Point::new2(1.7, -2.0));
        assert_eq!(tr.interpolate(2.5).unwrap(), Point::new2(1.0, 1.0));
    }

    #[test]
    fn interpolate_second_leg() {
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (2.0, 1.0, 1.0)]);
        assert_eq!(tr.interpolate(1.5).unwrap(), Point::new2(1.0, 0.5));
    }

    #[test]
    fn interpolate_out_of_domain() {
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!(matches!(tr.interpolate(-0.1), Err(Error::Domain(_))));
        assert!(matches!(tr.interpolate(1.1), Err(Error::Domain(_))));
        assert!(tr.interpolate(f64::NAN).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Trajectory::from_points("a", vec![Point::new2(0.0, 0.0)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(Trajectory::new(
            "a",
            vec![0.0, 0.0],
            vec![Point::new2(0.0, 0.0), Point::new2(1.0, 0.0)]
        )
        .is_err());
        assert!(Trajectory::new(
            "a",
            vec![0.0, 1.0],
            vec![Point::new2(0.0, 0.0), Point::new3(1.0, 0.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn arc_length() {
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 3.0, 4.0), (3.0, 3.0, 5.0)]);
        assert_eq!(tr.length(), 6.0);
        assert_eq!(tr.arc_length_at(0.5), 2.5);
        assert_eq!(tr.arc_length_at(2.0), 5.5);
    }

    #[test]
    fn curvature_on_circle() {
        let r = 2.0;
        let pts: Vec<Point> = (0..72)
            .map(|i| {
                let th = (i as f64 * 5.0).to_radians();
                Point::new2(r * th.cos(), r * th.sin())
            })
            .collect();
        let tr = Trajectory::from_points("c", pts).unwrap();
        let k = estimate_curvature_max(&tr).unwrap().kappa_max();
        assert!((k - 0.5).abs() < 1e-6, "{k}");
    }

    #[test]
    fn curvature_collinear_is_zero() {
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (2.0, 2.0, 0.0)]);
        let k = estimate_curvature_max(&tr).unwrap();
        assert_eq!(k.kappa_max(), 0.0);
        assert_eq!(k.min_radius(), f64::INFINITY);
    }

    #[test]
    fn curvature_right_triangle() {
        // sides 1, 1, sqrt(2); area 1/2 -> R = abc / (4 area) = sqrt(2) / 2
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (2.0, 1.0, 1.0)]);
        let expected = 1.0 / (2f64.sqrt() / 2.0);
        let k = estimate_curvature_max(&tr).unwrap().kappa_max();
        assert!((k - expected).abs() < 1e-12);
    }

    #[test]
    fn curvature_needs_three_points() {
        let tr = line(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!(matches!(
            estimate_curvature_max(&tr),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn curvature_in_3d_matches_planar() {
        let p = [
            Point::new3(0.0, 0.0, 0.0),
            Point::new3(1.0, 0.0, 0.0),
            Point::new3(1.0, 1.0, 0.0),
        ];
        let k3 = menger_curvature(&p[0], &p[1], &p[2]);
        let k2 = menger_curvature(
            &Point::new2(0.0, 0.0),
            &Point::new2(1.0, 0.0),
            &Point::new2(1.0, 1.0),
        );
        assert!((k3 - k2).abs() < 1e-15);
        // tilt the plane; curvature is unchanged
        let c = (PI / 5.0).cos();
        let s = (PI / 5.0).sin();
        let rot =
            |q: &Point| Point::new3(q.x(), c * q.y() - s * q.get(2), s * q.y() + c * q.get(2));
        let k3r = menger_curvature(&rot(&p[0]), &rot(&p[1]), &rot(&p[2]));
        assert!((k3r - k2).abs() < 1e-12);
    }

    #[test]
    fn tde_unrolled() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = time_delay_embed(&s, 1, 2).unwrap();
        let got: Vec<_> = t.points().iter().map(|p| (p.x(), p.y())).collect();
        assert_eq!(got, vec![(1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0)]);
        assert_eq!(t.times(), &[0.0, 1.0, 2.0, 3.0]);

        let t = time_delay_embed(&s, 2, 2).unwrap();
        let got: Vec<_> = t.points().iter().map(|p| (p.x(), p.y())).collect();
        assert_eq!(got, vec![(1.0, 3.0), (2.0, 4.0), (3.0, 5.0)]);

        let t = time_delay_embed(&[7.0; 9], 2, 3).unwrap();
        assert_eq!(t.len(), 9 - 4);
        assert!(t.points().iter().all(|p| *p == Point::new3(7.0, 7.0, 7.0)));
    }

    #[test]
    fn tde_too_short() {
        assert!(matches!(
            time_delay_embed(&[1.0, 2.0, 3.0], 2, 3),
            Err(Error::InsufficientData(_))
        ));
        assert!(time_delay_embed(&[1.0, 2.0, 3.0], 0, 2).is_err());
    }
}
