use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::point::point_segment_distance;

use super::graph::{PathFinder, Polyline, RoadGraph};

/// Default distance within which a truth vertex may be matched to a
/// reconstructed vertex.
pub const DEFAULT_SNAP_RADIUS: f64 = 100.0;

/// Resampling step shared by both metrics: 1 unit, or a thousandth of the
/// longer polyline if that is smaller.
pub fn resample_step(a: &Polyline, b: &Polyline) -> f64 {
    (a.length().max(b.length()) / 1000.0).min(1.0)
}

/// Largest distance from a point of `a` (densely resampled) to the
/// polyline `b`.
pub fn directed_hausdorff(a: &Polyline, b: &Polyline) -> f64 {
    let step = resample_step(a, b);
    let bp = b.points();
    a.resample(step)
        .iter()
        .map(|p| {
            bp.windows(2)
                .map(|w| point_segment_distance(p, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Discrete Fréchet distance between the resampled vertex sequences.
pub fn discrete_frechet(a: &Polyline, b: &Polyline) -> f64 {
    let step = resample_step(a, b);
    let (pa, pb) = (a.resample(step), b.resample(step));
    let m = pb.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, p) in pa.iter().enumerate() {
        for j in 0..m {
            let d = p.dist(&pb[j]);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub avg: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Some(Self {
            min: v[0],
            max: v[n - 1],
            median,
            avg: v.iter().sum::<f64>() / n as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapMetrics {
    /// Number of evaluated vertex pairs.
    pub pairs: usize,
    pub hausdorff: Summary,
    /// Path-based (discrete Fréchet) distance.
    pub frechet: Summary,
}

impl MapMetrics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,min,max,median,avg\n");
        for (name, m) in [("hausdorff", &self.hausdorff), ("frechet", &self.frechet)] {
            let _ = writeln!(s, "{name},{},{},{},{}", m.min, m.max, m.median, m.avg);
        }
        s
    }
}

/// Compares shortest paths between random truth vertex pairs with the
/// paths between the nearest reconstructed vertices.
///
/// Pairs are drawn from `seed` up front. A pair is discarded when either
/// graph has no path or an endpoint has no reconstructed vertex within
/// `snap_radius`; at most `20 n_pairs + 100` pairs are tried.
pub fn evaluate_map(
    truth: &RoadGraph,
    recon: &RoadGraph,
    n_pairs: usize,
    seed: u64,
    snap_radius: f64,
) -> Result<MapMetrics> {
    if truth.vertex_count() < 2 || recon.vertex_count() < 2 {
        return Err(Error::Evaluation(
            "both graphs need at least two vertices".into(),
        ));
    }
    if n_pairs == 0 {
        return Err(Error::Parameter("n_pairs must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = truth.vertex_count();
    let attempts: Vec<(usize, usize)> = (0..20 * n_pairs + 100)
        .map(|_| loop {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            if u != v {
                break (u, v);
            }
        })
        .collect();
    let tf = PathFinder::new(truth);
    let rf = PathFinder::new(recon);
    let eval = |&(u, v): &(usize, usize)| -> Option<(f64, f64)> {
        let (ru, du) = recon.nearest_vertex(&truth.vertices()[u])?;
        let (rv, dv) = recon.nearest_vertex(&truth.vertices()[v])?;
        if du > snap_radius || dv > snap_radius || ru == rv {
            return None;
        }
        let tp = tf.path(u, v).ok()?;
        let rp = rf.path(ru, rv).ok()?;
        Some((directed_hausdorff(&tp, &rp), discrete_frechet(&tp, &rp)))
    };
    let mut results = Vec::with_capacity(n_pairs);
    for chunk in attempts.chunks(n_pairs) {
        let got: Vec<Option<(f64, f64)>> = chunk.par_iter().map(eval).collect();
        results.extend(got.into_iter().flatten());
        if results.len() >= n_pairs {
            break;
        }
    }
    results.truncate(n_pairs);
    if results.is_empty() {
        return Err(Error::Evaluation(
            "no vertex pair could be matched and routed in both graphs".into(),
        ));
    }
    let h: Vec<f64> = results.iter().map(|r| r.0).collect();
    let f: Vec<f64> = results.iter().map(|r| r.1).collect();
    Ok(MapMetrics {
        pairs: results.len(),
        hausdorff: Summary::of(&h).expect("nonempty"),
        frechet: Summary::of(&f).expect("nonempty"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    fn pl(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| Point::new2(x, y)).collect()).unwrap()
    }

    #[test]
    fn hand_cases() {
        let a = pl(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pl(&[(0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(directed_hausdorff(&a, &a), 0.0);
        assert_eq!(discrete_frechet(&a, &a), 0.0);
        assert!((directed_hausdorff(&a, &b) - 1.0).abs() < 1e-9);
        assert!((discrete_frechet(&a, &b) - 1.0).abs() < 1e-9);
        let long = pl(&[(0.0, 0.0), (2.0, 0.0)]);
        assert!((directed_hausdorff(&long, &a) - 1.0).abs() < 1e-9);
        assert_eq!(directed_hausdorff(&a, &long), 0.0);
        let there_and_back = pl(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        let still = pl(&[(0.0, 0.0), (0.0, 0.0)]);
        assert!((discrete_frechet(&there_and_back, &still) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max, s.median, s.avg), (1.0, 4.0, 2.5, 2.5));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn identical_maps_score_zero() {
        let g = RoadGraph::grid(4, 4, 100.0);
        let m = evaluate_map(&g, &g, 30, 1, DEFAULT_SNAP_RADIUS).unwrap();
        assert_eq!(m.pairs, 30);
        assert!(m.hausdorff.max <= 1e-9);
        assert_eq!(m.frechet.max, 0.0);
        assert!(m
            .to_csv()
            .starts_with("metric,min,max,median,avg\nhausdorff,"));
    }

    #[test]
    fn translated_map() {
        let g = RoadGraph::grid(4, 4, 100.0);
        let delta = Point::new2(3.0, 4.0);
        let m = evaluate_map(&g, &g.translated(&delta), 30, 2, DEFAULT_SNAP_RADIUS).unwrap();
        for v in [m.frechet.min, m.frechet.max] {
            assert!((v - 5.0).abs() < 1e-9);
        }
        // paths along the offset direction get closer than the offset
        assert!(m.hausdorff.max <= 5.0 + 1e-9);
        assert!(m.hausdorff.min >= 3.0 - 1e-9);
    }

    #[test]
    fn unmatched_maps_fail() {
        let g = RoadGraph::grid(3, 3, 100.0);
        let far = g.translated(&Point::new2(1e4, 0.0));
        assert!(matches!(
            evaluate_map(&g, &far, 5, 0, DEFAULT_SNAP_RADIUS),
            Err(Error::Evaluation(_))
        ));
    }
}
