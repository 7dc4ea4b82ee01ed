//! Baselines: dense-grid disk counts (TLDE), maxmin landmarks and k-NN
//! density filtering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::counts::{maximal_intervals_on_edges, Region};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::raster::Raster;
use crate::trajectory::Trajectory;

/// Uniform buckets over the grid extent; each holds the edges whose
/// bounding box, grown by `r`, overlaps the bucket.
struct EdgeBuckets {
    lo: Point,
    size: f64,
    shape: [usize; 3],
    dim: usize,
    /// `(trajectory, edge)` pairs, sorted.
    cells: Vec<Vec<(u32, u32)>>,
}

impl EdgeBuckets {
    fn new(trajs: &[Trajectory], grid: &Raster, r: f64) -> Self {
        let dim = grid.dim();
        let lo = grid.origin();
        let mut shape = [1usize; 3];
        let extent = (0..dim)
            .map(|a| grid.shape()[a] as f64 * grid.cell_size())
            .fold(0.0, f64::max);
        // about r per bucket, capped so the table stays small
        let size = r.max(extent / 512.0).max(grid.cell_size());
        for (a, s) in shape.iter_mut().enumerate().take(dim) {
            *s = ((grid.shape()[a] as f64 * grid.cell_size() / size).ceil() as usize).max(1);
        }
        let mut cells = vec![Vec::new(); shape[..dim].iter().product()];
        for (ti, t) in trajs.iter().enumerate() {
            for (e, w) in t.points().windows(2).enumerate() {
                let mut blo = [0usize; 3];
                let mut bhi = [0usize; 3];
                let mut outside = false;
                for a in 0..dim {
                    let emin = w[0].get(a).min(w[1].get(a)) - r;
                    let emax = w[0].get(a).max(w[1].get(a)) + r;
                    let i0 = ((emin - lo.get(a)) / size).floor();
                    let i1 = ((emax - lo.get(a)) / size).floor();
                    if i1 < 0.0 || i0 >= shape[a] as f64 {
                        outside = true;
                        break;
                    }
                    blo[a] = i0.max(0.0) as usize;
                    bhi[a] = (i1 as usize).min(shape[a] - 1);
                }
                if outside {
                    continue;
                }
                let mut idx = blo;
                'odometer: loop {
                    let mut flat = 0;
                    for a in (0..dim).rev() {
                        flat = flat * shape[a] + idx[a];
                    }
                    cells[flat].push((ti as u32, e as u32));
                    let mut a = 0;
                    loop {
                        if a == dim {
                            break 'odometer;
                        }
                        if idx[a] < bhi[a] {
                            idx[a] += 1;
                            break;
                        }
                        idx[a] = blo[a];
                        a += 1;
                    }
                }
            }
        }
        Self {
            lo,
            size,
            shape,
            dim,
            cells,
        }
    }

    fn bucket_of(&self, p: &Point) -> usize {
        let mut flat = 0;
        for a in (0..self.dim).rev() {
            let i = ((p.get(a) - self.lo.get(a)) / self.size).floor().max(0.0) as usize;
            flat = flat * self.shape[a] + i.min(self.shape[a] - 1);
        }
        flat
    }
}

/// Disk count `C_{B_r}(x)` at every cell center `x` of `grid` (whose values
/// are ignored).
///
/// Edges are pre-filtered through a bucket index, which gives exactly the
/// result of evaluating every trajectory at every cell.
pub fn tlde_counts(trajs: &[Trajectory], r: f64, grid: &Raster) -> Result<Raster> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("r must be positive, got {r}")));
    }
    for t in trajs {
        if t.dim() != grid.dim() {
            return Err(Error::Domain(format!(
                "trajectory {} has dimension {} but the grid has dimension {}",
                t.id(),
                t.dim(),
                grid.dim()
            )));
        }
    }
    let buckets = EdgeBuckets::new(trajs, grid, r);
    let mut out = grid.like();
    out.values_mut()
        .par_iter_mut()
        .enumerate()
        .with_min_len(1024)
        .for_each(|(i, v)| {
            let x = grid.cell_center(i);
            let cands = &buckets.cells[buckets.bucket_of(&x)];
            if cands.is_empty() {
                return;
            }
            let ball = Region::ball(x, r).expect("positive radius");
            let mut count = 0usize;
            let mut edges: Vec<usize> = Vec::new();
            for group in cands.chunk_by(|a, b| a.0 == b.0) {
                let t = &trajs[group[0].0 as usize];
                edges.clear();
                edges.extend(group.iter().map(|&(_, e)| e as usize).filter(|&e| {
                    let (p, q) = (&t.points()[e], &t.points()[e + 1]);
                    (0..x.dim()).all(|a| {
                        x.get(a) >= p.get(a).min(q.get(a)) - r
                            && x.get(a) <= p.get(a).max(q.get(a)) + r
                    })
                }));
                if !edges.is_empty() {
                    count += maximal_intervals_on_edges(t, edges.iter().copied(), &ball).len();
                }
            }
            *v = count as u32;
        });
    Ok(out)
}

/// Union of discrete balls of radius `r` about every cell whose count
/// exceeds `tau`.
pub fn tlde_level_set(counts: &Raster, r: f64, tau: u32) -> Raster {
    let mut out = counts.like();
    for (i, &v) in counts.values().iter().enumerate() {
        if v > tau {
            out.stamp_ball(&counts.cell_center(i), r);
        }
    }
    out
}

/// Greedy maxmin selection of `n` landmarks; the first is drawn uniformly
/// from `seed`.
pub fn maxmin_landmarks(points: &[Point], n: usize, seed: u64) -> Result<Vec<usize>> {
    check_landmarks(points, n)?;
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..points.len());
    maxmin_from(points, n, first)
}

fn check_landmarks(points: &[Point], n: usize) -> Result<()> {
    if n == 0 || n > points.len() {
        return Err(Error::Parameter(format!(
            "cannot select {n} landmarks from {} points",
            points.len()
        )));
    }
    Ok(())
}

/// Greedy maxmin starting from landmark `first`: each further landmark
/// maximizes the distance to the chosen set, ties going to the lowest index.
pub fn maxmin_from(points: &[Point], n: usize, first: usize) -> Result<Vec<usize>> {
    check_landmarks(points, n)?;
    if first >= points.len() {
        return Err(Error::Parameter(format!(
            "first landmark {first} out of range"
        )));
    }
    let mut chosen = Vec::with_capacity(n);
    let mut dist: Vec<f64> = points.iter().map(|p| p.dist_sq(&points[first])).collect();
    let mut taken = vec![false; points.len()];
    chosen.push(first);
    taken[first] = true;
    while chosen.len() < n {
        let mut best = usize::MAX;
        for i in 0..points.len() {
            if !taken[i] && (best == usize::MAX || dist[i] > dist[best]) {
                best = i;
            }
        }
        chosen.push(best);
        taken[best] = true;
        let b = points[best];
        dist.par_iter_mut()
            .zip(points.par_iter())
            .with_min_len(4096)
            .for_each(|(d, p)| *d = d.min(p.dist_sq(&b)));
    }
    Ok(chosen)
}

/// Distance from each point to its `k`-th nearest other point.
pub fn knn_scores(points: &[Point], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k >= points.len() {
        return Err(Error::Parameter(format!(
            "k must be in 1..{}, got {k}",
            points.len()
        )));
    }
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.dist(q))
                .collect();
            *d.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect())
}

/// Indices of the `round(keep_fraction * n)` densest points (smallest
/// k-NN distance, ties by index), in ascending index order.
pub fn knn_density_filter(points: &[Point], k: usize, keep_fraction: f64) -> Result<Vec<usize>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "keep_fraction must be in (0, 1], got {keep_fraction}"
        )));
    }
    let scores = knn_scores(points, k)?;
    let keep = ((keep_fraction * points.len() as f64).round() as usize).clamp(1, points.len());
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    Ok(order)
}
