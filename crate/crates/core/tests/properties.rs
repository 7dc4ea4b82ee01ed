use std::f64::consts::{SQRT_2, TAU};

use proptest::prelude::*;

use tred_core::counts::{disk_count, robust_square_count};
use tred_core::mapkit::{
    directed_hausdorff, discrete_frechet, skeleton_to_graph, skeletonize, Polyline,
};
use tred_core::oracle::{maxmin_from, tlde_counts};
use tred_core::{Point, Raster, Trajectory, TredParams, TredTree};

fn arc(cx: f64, cy: f64, rho: f64, turns: f64, phase: f64) -> Trajectory {
    let n = (400.0 * turns).ceil() as usize + 2;
    let pts = (0..n)
        .map(|i| {
            let th = phase + TAU * turns * i as f64 / (n - 1) as f64;
            Point::new2(cx + rho * th.cos(), cy + rho * th.sin())
        })
        .collect();
    Trajectory::from_points("arc", pts).unwrap()
}

fn polyline_in(lo: f64, hi: f64, max_pts: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((lo..hi, lo..hi), 2..max_pts)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point::new2(x, y)).collect())
}

fn trajectory_in(lo: f64, hi: f64) -> impl Strategy<Value = Trajectory> {
    polyline_in(lo, hi, 10).prop_map(|p| Trajectory::from_points("t", p).unwrap())
}

fn snapshot(t: &TredTree) -> Vec<Vec<(u64, u64, bool)>> {
    (0..=t.params().max_depth)
        .map(|m| t.bins(m).map(|b| (b.index, b.count, b.active)).collect())
        .collect()
}

fn mask(nx: usize, ny: usize, bits: &[bool]) -> Raster {
    let mut r = Raster::zeros(Point::new2(0.0, 0.0), 1.0, vec![nx, ny]).unwrap();
    for (v, &b) in r.values_mut().iter_mut().zip(bits) {
        *v = b as u32;
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn robust_count_is_sandwiched_by_disk_counts(
        rho in 1.0f64..3.0,
        turns in 0.2f64..2.5,
        phase in 0.0f64..TAU,
        s in 0.05f64..0.95,
        u in 0.0f64..0.3,
        angle in 0.0f64..TAU,
        offset in -1.0f64..1.0,
    ) {
        let t = [arc(0.0, 0.0, rho, turns, phase)];
        let r2 = s * rho;
        let r1 = r2 / (SQRT_2 * (1.0 + u));
        let x = Point::new2((rho + offset * r2) * angle.cos(), (rho + offset * r2) * angle.sin());
        let lo = disk_count(&t, &x, r1).unwrap();
        let mid = robust_square_count(&t, &x, r1, r2).unwrap();
        let hi = disk_count(&t, &x, r2).unwrap();
        prop_assert!(lo <= mid && mid <= hi, "{lo} {mid} {hi}");
    }

    #[test]
    fn tlde_agrees_with_disk_counts(
        trajs in prop::collection::vec(trajectory_in(-1.0, 1.0), 1..4),
        r in 0.05f64..0.6,
    ) {
        let grid = Raster::covering(Point::new2(0.0, 0.0), 1.2, 12).unwrap();
        let counts = tlde_counts(&trajs, r, &grid).unwrap();
        for i in 0..grid.len() {
            let c = grid.cell_center(i);
            prop_assert_eq!(counts.values()[i] as usize, disk_count(&trajs, &c, r).unwrap());
        }
    }

    #[test]
    fn tree_counts_match_direct_counts(
        trajs in prop::collection::vec(trajectory_in(-0.95, 0.95), 1..4),
        depth in 1u32..4,
        tau in 0u64..3,
    ) {
        let params = TredParams::new(1.0, depth, tau, Point::new2(0.0, 0.0)).unwrap();
        let tree = TredTree::build_offline(&trajs, params).unwrap();
        for m in 0..=depth {
            for b in tree.bins(m) {
                let c = robust_square_count(&trajs, &b.center, params.r1(m), params.r2(m)).unwrap();
                prop_assert_eq!(c as u64, b.count);
            }
        }
    }

    #[test]
    fn incremental_build_matches_offline(
        trajs in prop::collection::vec(trajectory_in(-0.95, 0.95), 1..5),
        depth in 1u32..4,
        tau in 0u64..3,
        rotate in 0usize..5,
    ) {
        let params = TredParams::new(1.0, depth, tau, Point::new2(0.0, 0.0)).unwrap();
        let offline = TredTree::build_offline(&trajs, params).unwrap();
        let mut order = trajs.clone();
        let k = rotate % order.len();
        order.rotate_left(k);
        let mut tree = TredTree::empty(params).unwrap();
        for t in order {
            tree.update(t).unwrap();
        }
        prop_assert_eq!(snapshot(&tree), snapshot(&offline));
    }

    #[test]
    fn level_sets_shrink_as_threshold_rises(
        trajs in prop::collection::vec(trajectory_in(-0.95, 0.95), 1..5),
        tau in 0u64..3,
    ) {
        let params = TredParams::new(1.0, 3, 0, Point::new2(0.0, 0.0)).unwrap();
        let tree = TredTree::build_offline(&trajs, params).unwrap();
        let low = tree.level_set_raster(tau, 64).unwrap();
        let high = tree.level_set_raster(tau + 1, 64).unwrap();
        prop_assert!(high.is_subset_of(&low).unwrap());
        prop_assert!(tree.superlevel_samples(tau + 1).len() <= tree.superlevel_samples(tau).len());
    }

    #[test]
    fn hausdorff_never_exceeds_frechet(
        a in polyline_in(0.0, 10.0, 8),
        b in polyline_in(0.0, 10.0, 8),
    ) {
        let (a, b) = (Polyline::new(a).unwrap(), Polyline::new(b).unwrap());
        prop_assert!(directed_hausdorff(&a, &b) <= discrete_frechet(&a, &b) + 1e-9);
    }

    #[test]
    fn metrics_ignore_rigid_translation(
        a in polyline_in(0.0, 10.0, 6),
        b in polyline_in(0.0, 10.0, 6),
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
    ) {
        let (a, b) = (Polyline::new(a).unwrap(), Polyline::new(b).unwrap());
        let d = Point::new2(dx, dy);
        let (ta, tb) = (a.translated(&d), b.translated(&d));
        prop_assert!((directed_hausdorff(&a, &b) - directed_hausdorff(&ta, &tb)).abs() < 1e-6);
        prop_assert!((discrete_frechet(&a, &b) - discrete_frechet(&ta, &tb)).abs() < 1e-6);
    }

    #[test]
    fn thinning_is_idempotent(
        (nx, ny, bits) in (3usize..24, 3usize..24)
            .prop_flat_map(|(nx, ny)| (Just(nx), Just(ny), prop::collection::vec(prop::bool::weighted(0.6), nx * ny))),
    ) {
        let m = mask(nx, ny, &bits);
        let once = skeletonize(&m).unwrap();
        prop_assert!(once.is_subset_of(&m).unwrap());
        prop_assert_eq!(skeletonize(&once).unwrap(), once.clone());
        // every traced edge runs through skeleton cells at most one diagonal step apart
        let g = skeleton_to_graph(&once).unwrap();
        prop_assert!(g.total_length() <= SQRT_2 * once.count_nonzero() as f64 + 1e-9);
    }

    #[test]
    fn maxmin_ignores_input_order(
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..60),
        n in 1usize..10,
        shift in 0usize..60,
    ) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new2(x, y)).collect();
        let n = n.min(pts.len());
        let k = shift % pts.len();
        let mut rotated = pts.clone();
        rotated.rotate_left(k);
        let a: Vec<Point> = maxmin_from(&pts, n, 0).unwrap().into_iter().map(|i| pts[i]).collect();
        let first = (pts.len() - k) % pts.len();
        let b: Vec<Point> = maxmin_from(&rotated, n, first).unwrap().into_iter().map(|i| rotated[i]).collect();
        prop_assert_eq!(a, b);
    }
}
