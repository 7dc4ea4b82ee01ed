//! Curvature-preserving perturbations used by the stability experiments.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::trajectory::{estimate_curvature_max, Trajectory};

const MAX_HALVINGS: usize = 60;

/// Unit normal to the direction of travel at every sample.
///
/// In 3-D the normal is taken in the plane spanned by the tangent and the
/// coordinate axis least aligned with it.
pub(crate) fn sample_normals(points: &[Point]) -> Vec<Point> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let prev = points[i.saturating_sub(1)];
            let next = points[(i + 1).min(n - 1)];
            let mut tan = next - prev;
            let len = tan.norm();
            if len == 0.0 {
                return Point::zero(points[i].dim());
            }
            tan = tan * (1.0 / len);
            if tan.dim() == 2 {
                Point::new2(-tan.y(), tan.x())
            } else {
                let axis = (0..3)
                    .min_by(|&a, &b| tan.get(a).abs().total_cmp(&tan.get(b).abs()))
                    .unwrap();
                let mut e = Point::zero(3);
                e.set(axis, 1.0);
                // component of e orthogonal to the tangent
                let v = e - tan * tan.dot(&e);
                v * (1.0 / v.norm())
            }
        })
        .collect()
}

/// Random small perturbation of `traj`.
///
/// Each sample moves along the normal to the direction of travel by a sum of
/// three random-phase sinusoids in arc length, normalized so that the
/// displacement never exceeds `eps`. If the discrete curvature of the result
/// exceeds `kappa_max`, the amplitude is halved until it does not.
/// Deterministic for a given seed.
pub fn perturb(traj: &Trajectory, eps: f64, kappa_max: f64, seed: u64) -> Result<Trajectory> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be >= 0, got {eps}")));
    }
    if !(kappa_max >= 0.0 && kappa_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "kappa_max must be finite and >= 0, got {kappa_max}"
        )));
    }
    if kappa_max > 0.0 && eps >= 1.0 / kappa_max {
        return Err(Error::Precondition(format!(
            "eps = {eps} is not small: must be below 1/kappa_max = {}",
            1.0 / kappa_max
        )));
    }
    let curvature_ok = |t: &Trajectory| -> bool {
        t.len() < 3 || estimate_curvature_max(t).map_or(false, |k| k.kappa_max() <= kappa_max)
    };
    if !curvature_ok(traj) {
        return Err(Error::Precondition(format!(
            "trajectory {} already exceeds kappa_max = {kappa_max}",
            traj.id()
        )));
    }
    if eps == 0.0 {
        return Ok(traj.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = traj.length().max(f64::MIN_POSITIVE);
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let weight = rng.random_range(0.5..1.0);
            let cycles = rng.random_range(0.5..4.0);
            let phase = rng.random_range(0.0..TAU);
            (weight, TAU * cycles / total, phase)
        })
        .collect();
    let weight_sum: f64 = waves.iter().map(|w| w.0).sum();

    let normals = sample_normals(traj.points());
    let profile: Vec<f64> = traj
        .points()
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let s = traj.arc_length_at(traj.times()[i]);
            waves
                .iter()
                .map(|(w, k, ph)| w * (k * s + ph).sin())
                .sum::<f64>()
                / weight_sum
        })
        .collect();

    let mut amp = eps;
    for _ in 0..MAX_HALVINGS {
        let pts: Vec<Point> = traj
            .points()
            .iter()
            .zip(&normals)
            .zip(&profile)
            .map(|((p, n), d)| *p + *n * (amp * d))
            .collect();
        let out = Trajectory::new(traj.id(), traj.times().to_vec(), pts)?;
        if curvature_ok(&out) {
            return Ok(out);
        }
        amp *= 0.5;
    }
    Ok(traj.clone())
}

/// Chain of circular arcs of radius `1 / kappa_max` running along the top
/// side `y = r` of the square `S_r(0)`, from `(-r, r)` to `(r, r)`.
///
/// The chain consists of `2 n_arcs + 1` half-waves of equal chord,
/// alternately bulging into the square and out of it, starting and ending
/// inside. The curve is tangent-continuous and its curvature is exactly
/// `kappa_max` on every arc. Every inward half-wave is one maximal interval
/// of `S_r`, so the square count is `n_arcs + 1`, while the whole chain
/// stays within the bulge height of the side.
pub fn perturb_fig3(r: f64, n_arcs: usize, kappa_max: f64) -> Result<Trajectory> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("r must be positive, got {r}")));
    }
    if n_arcs == 0 {
        return Err(Error::Parameter("n_arcs must be positive".into()));
    }
    if !(kappa_max > 0.0 && kappa_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "kappa_max must be positive, got {kappa_max}"
        )));
    }
    let rho = 1.0 / kappa_max;
    let halves = 2 * n_arcs + 1;
    let chord = 2.0 * r / halves as f64;
    if chord / 2.0 >= rho {
        return Err(Error::Parameter(format!(
            "{n_arcs} arcs of radius {rho} cannot span chord {chord}: need r * kappa_max < {}",
            halves
        )));
    }
    let alpha = (chord / 2.0 / rho).asin();
    let offset = (rho * rho - chord * chord / 4.0).sqrt();
    const PER_HALF: usize = 32;

    let mut pts = Vec::with_capacity(halves * PER_HALF + 1);
    pts.push(Point::new2(-r, r));
    for j in 0..halves {
        let x0 = -r + j as f64 * chord;
        let x1 = if j + 1 == halves {
            r
        } else {
            -r + (j + 1) as f64 * chord
        };
        let cx = 0.5 * (x0 + x1);
        let inward = j % 2 == 0;
        // inward arcs are the lower part of a circle centered above the side
        let (cy, start, sweep) = if inward {
            (r + offset, -PI / 2.0 - alpha, 2.0 * alpha)
        } else {
            (r - offset, PI / 2.0 + alpha, -2.0 * alpha)
        };
        for k in 1..=PER_HALF {
            if k == PER_HALF {
                pts.push(Point::new2(x1, r));
            } else {
                let th = start + sweep * k as f64 / PER_HALF as f64;
                pts.push(Point::new2(cx + rho * th.cos(), cy + rho * th.sin()));
            }
        }
    }
    // parameterize by arc length
    let mut times = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    times.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].dist(&w[1]);
        times.push(acc);
    }
    Trajectory::new(format!("fig3-n{n_arcs}"), times, pts)
}

/// Height by which each half-wave of [`perturb_fig3`] departs from the side.
pub fn fig3_bulge_height(r: f64, n_arcs: usize, kappa_max: f64) -> f64 {
    let rho = 1.0 / kappa_max;
    let chord = 2.0 * r / (2 * n_arcs + 1) as f64;
    rho - (rho * rho - chord * chord / 4.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{robust_square_count, square_count};

    fn circle(radius: f64, n: usize) -> Trajectory {
        let pts = (0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64 * 1.5;
                Point::new2(radius * th.cos(), radius * th.sin())
            })
            .collect();
        Trajectory::from_points("c", pts).unwrap()
    }

    #[test]
    fn zero_eps_is_identity() {
        let c = circle(2.0, 400);
        assert_eq!(perturb(&c, 0.0, 1.0, 3).unwrap(), c);
    }

    #[test]
    fn displacement_bounded_and_deterministic() {
        let c = circle(2.0, 400);
        let a = perturb(&c, 0.1, 1.0, 11).unwrap();
        let b = perturb(&c, 0.1, 1.0, 11).unwrap();
        assert_eq!(a, b);
        let max_d = a
            .points()
            .iter()
            .zip(c.points())
            .map(|(p, q)| p.dist(q))
            .fold(0.0, f64::max);
        assert!(max_d <= 0.1 + 1e-12);
        assert!(max_d > 0.0);
        assert!(estimate_curvature_max(&a).unwrap().kappa_max() <= 1.0);
    }

    #[test]
    fn perturb_rejects_large_eps() {
        let c = circle(2.0, 100);
        assert!(matches!(
            perturb(&c, 1.0, 1.0, 0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(perturb(&c, 0.1, 2.0, 0), Ok(_)));
        // input itself too curved
        assert!(matches!(
            perturb(&c, 0.1, 0.1, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn fig3_caption_counts() {
        let r = 1.0;
        let k = 0.5;
        let origin = Point::new2(0.0, 0.0);
        let c1 = perturb_fig3(r, 1, k).unwrap();
        let c2 = perturb_fig3(r, 2, k).unwrap();
        assert_eq!(square_count(&[c1.clone()], &origin, r).unwrap(), 2);
        assert_eq!(square_count(&[c2.clone()], &origin, r).unwrap(), 3);
        let r2 = 2f64.sqrt() * r;
        assert_eq!(robust_square_count(&[c1], &origin, r, r2).unwrap(), 1);
        assert_eq!(robust_square_count(&[c2], &origin, r, r2).unwrap(), 1);
    }

    #[test]
    fn fig3_geometry() {
        let t = perturb_fig3(1.0, 4, 0.5).unwrap();
        let k = estimate_curvature_max(&t).unwrap().kappa_max();
        assert!(k <= 0.5 + 1e-9, "{k}");
        let h = fig3_bulge_height(1.0, 4, 0.5);
        assert!(h < 2.0);
        for p in t.points() {
            assert!((p.y() - 1.0).abs() <= h + 1e-12);
        }
        assert_eq!(t.points()[0], Point::new2(-1.0, 1.0));
        assert_eq!(*t.points().last().unwrap(), Point::new2(1.0, 1.0));
    }

    #[test]
    fn fig3_infeasible() {
        assert!(matches!(
            perturb_fig3(10.0, 1, 1.0),
            Err(Error::Parameter(_))
        ));
        assert!(perturb_fig3(1.0, 0, 1.0).is_err());
    }
}
