use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::point::{point_segment_distance, Point};
use crate::raster::Raster;

use super::graph::RoadGraph;

/// Binary 2-d image with out-of-range reads returning background.
struct Grid {
    nx: usize,
    ny: usize,
    px: Vec<bool>,
}

// (dx, dy) of P2..P9: N, NE, E, SE, S, SW, W, NW
const RING: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

impl Grid {
    fn from_raster(r: &Raster) -> Result<Self> {
        if r.dim() != 2 {
            return Err(Error::Domain(format!(
                "skeletons need a 2-d raster, got {}-d",
                r.dim()
            )));
        }
        Ok(Self {
            nx: r.shape()[0],
            ny: r.shape()[1],
            px: r.values().iter().map(|&v| v > 0).collect(),
        })
    }

    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.nx
            && (y as usize) < self.ny
            && self.px[y as usize * self.nx + x as usize]
    }

    fn ring(&self, i: usize) -> [bool; 8] {
        let (x, y) = ((i % self.nx) as isize, (i / self.nx) as isize);
        RING.map(|(dx, dy)| self.at(x + dx, y + dy))
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = ((i % self.nx) as isize, (i / self.nx) as isize);
        RING.iter().filter_map(move |&(dx, dy)| {
            self.at(x + dx, y + dy)
                .then(|| (y + dy) as usize * self.nx + (x + dx) as usize)
        })
    }

    fn degree(&self, i: usize) -> usize {
        self.ring(i).iter().filter(|&&b| b).count()
    }
}

/// One Zhang-Suen sub-iteration; returns whether anything was removed.
fn zhang_suen_pass(g: &mut Grid, second: bool) -> bool {
    let mut remove = Vec::new();
    for i in 0..g.px.len() {
        if !g.px[i] {
            continue;
        }
        let p = g.ring(i);
        let b = p.iter().filter(|&&v| v).count();
        if !(2..=6).contains(&b) {
            continue;
        }
        let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
        if a != 1 {
            continue;
        }
        let [p2, _, p4, _, p6, _, p8, _] = p;
        let ok = if second {
            !(p2 && p4 && p8) && !(p2 && p6 && p8)
        } else {
            !(p2 && p4 && p6) && !(p4 && p6 && p8)
        };
        if ok {
            remove.push(i);
        }
    }
    for &i in &remove {
        g.px[i] = false;
    }
    !remove.is_empty()
}

/// Removes inner corners of diagonal staircases, which thinning leaves
/// 4-connected. A pixel is dropped when two adjacent orthogonal neighbours
/// are set and the three opposite ones are clear, so 8-connectivity holds.
fn remove_staircases(g: &mut Grid) -> bool {
    let mut changed = false;
    for i in 0..g.px.len() {
        if !g.px[i] {
            continue;
        }
        let [n, ne, e, se, s, sw, w, nw] = g.ring(i);
        let corner = (n && e && !s && !w && !sw)
            || (e && s && !w && !n && !nw)
            || (s && w && !n && !e && !ne)
            || (w && n && !e && !s && !se);
        if corner {
            g.px[i] = false;
            changed = true;
        }
    }
    changed
}

/// Thins a binary raster to a one-cell-wide 8-connected skeleton.
/// Applying it to its own output changes nothing.
pub fn skeletonize(mask: &Raster) -> Result<Raster> {
    let mut g = Grid::from_raster(mask)?;
    loop {
        let mut changed = false;
        loop {
            let a = zhang_suen_pass(&mut g, false);
            let b = zhang_suen_pass(&mut g, true);
            if !(a || b) {
                break;
            }
            changed = true;
        }
        changed |= remove_staircases(&mut g);
        if !changed {
            break;
        }
    }
    let mut out = mask.like();
    for (o, &p) in out.values_mut().iter_mut().zip(&g.px) {
        *o = u32::from(p);
    }
    Ok(out)
}

/// Douglas-Peucker simplification keeping both endpoints.
pub fn douglas_peucker(pts: &[Point], tol: f64) -> Vec<Point> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0usize, pts.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        let mut best = (0.0, 0usize);
        for i in a + 1..b {
            let d = point_segment_distance(&pts[i], &pts[a], &pts[b]);
            if d > best.0 {
                best = (d, i);
            }
        }
        if best.0 > tol {
            keep[best.1] = true;
            stack.push((a, best.1));
            stack.push((best.1, b));
        }
    }
    pts.iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| *p)
        .collect()
}

/// Road graph of a thinned raster.
///
/// Cells whose 8-neighbour degree is not 2 are nodes; touching node cells
/// merge into one vertex at their centroid. Edges follow chains of degree-2
/// cells and are simplified with a tolerance of one cell. A cycle without
/// nodes becomes a self-loop on an anchor vertex at its first cell.
pub fn skeleton_to_graph(skeleton: &Raster) -> Result<RoadGraph> {
    let g = Grid::from_raster(skeleton)?;
    let tol = skeleton.cell_size();
    let center = |i: usize| skeleton.cell_center(i);
    let is_node = |i: usize| g.px[i] && g.degree(i) != 2;

    // node clusters, labelled in raster order
    let mut cluster: HashMap<usize, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..g.px.len() {
        if !is_node(i) || cluster.contains_key(&i) {
            continue;
        }
        let c = members.len();
        let mut stack = vec![i];
        let mut cells = Vec::new();
        cluster.insert(i, c);
        while let Some(j) = stack.pop() {
            cells.push(j);
            for k in g.neighbors(j) {
                if is_node(k) && !cluster.contains_key(&k) {
                    cluster.insert(k, c);
                    stack.push(k);
                }
            }
        }
        cells.sort_unstable();
        members.push(cells);
    }
    let mut graph = RoadGraph::new();
    for cells in &members {
        let mut sum = Point::zero(2);
        for &j in cells {
            sum = sum + center(j);
        }
        graph.add_vertex(sum * (1.0 / cells.len() as f64));
    }

    let mut visited = vec![false; g.px.len()];
    let add = |graph: &mut RoadGraph, from: usize, to: usize, mut pts: Vec<Point>| {
        pts.insert(0, graph.vertices()[from]);
        pts.push(graph.vertices()[to]);
        let simple = douglas_peucker(&pts, tol);
        let interior = simple[1..simple.len() - 1].to_vec();
        // zero-length results only arise from degenerate tiny loops
        let _ = graph.add_edge(from, to, Some(interior));
    };

    for (c, cells) in members.iter().enumerate() {
        for &start in cells {
            for first in g.neighbors(start).collect::<Vec<_>>() {
                if is_node(first) || visited[first] {
                    continue;
                }
                let mut chain = vec![center(first)];
                visited[first] = true;
                let (mut prev, mut cur) = (start, first);
                let end = loop {
                    let Some(next) = g.neighbors(cur).find(|&k| k != prev) else {
                        break None;
                    };
                    if is_node(next) {
                        break Some(cluster[&next]);
                    }
                    if visited[next] {
                        break None;
                    }
                    visited[next] = true;
                    chain.push(center(next));
                    prev = cur;
                    cur = next;
                };
                if let Some(to) = end {
                    if to == c && chain.len() <= 2 {
                        continue;
                    }
                    add(&mut graph, c, to, chain);
                }
            }
        }
    }

    // isolated cycles
    for i in 0..g.px.len() {
        if !g.px[i] || visited[i] || is_node(i) {
            continue;
        }
        visited[i] = true;
        let anchor = graph.add_vertex(center(i));
        let mut chain = Vec::new();
        let (mut prev, mut cur) = (i, i);
        loop {
            let Some(next) = g.neighbors(cur).find(|&k| k != prev && !visited[k]) else {
                break;
            };
            visited[next] = true;
            chain.push(center(next));
            prev = cur;
            cur = next;
        }
        if chain.len() >= 2 {
            add(&mut graph, anchor, anchor, chain);
        }
    }
    Ok(graph)
}

/// Cells grouped into 4-connected runs per row, for tests and diagnostics.
pub fn row_runs(r: &Raster) -> BTreeMap<usize, Vec<(usize, usize)>> {
    let nx = r.shape()[0];
    let mut out: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &v) in r.values().iter().enumerate() {
        if v == 0 {
            continue;
        }
        let (x, y) = (i % nx, i / nx);
        let runs = out.entry(y).or_default();
        match runs.last_mut() {
            Some((_, end)) if *end + 1 == x => *end = x,
            _ => runs.push((x, x)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(nx: usize, ny: usize, cells: &[(usize, usize)]) -> Raster {
        let mut r = Raster::zeros(Point::new2(0.0, 0.0), 1.0, vec![nx, ny]).unwrap();
        for &(x, y) in cells {
            r.set(&[x, y], 1);
        }
        r
    }

    #[test]
    fn thin_line_unchanged() {
        let line: Vec<_> = (2..12).map(|x| (x, 4)).collect();
        let r = raster(14, 9, &line);
        assert_eq!(skeletonize(&r).unwrap(), r);
        let diag: Vec<_> = (1..8).map(|k| (k, k)).collect();
        let r = raster(10, 10, &diag);
        assert_eq!(skeletonize(&r).unwrap(), r);
    }

    #[test]
    fn rectangle_to_line() {
        let mut cells = Vec::new();
        for x in 2..11 {
            for y in 3..6 {
                cells.push((x, y));
            }
        }
        let s = skeletonize(&raster(13, 9, &cells)).unwrap();
        let runs = row_runs(&s);
        assert_eq!(runs.len(), 1, "{runs:?}");
        let (&row, r) = runs.iter().next().unwrap();
        assert_eq!(row, 4);
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn empty_and_idempotent() {
        let e = raster(5, 5, &[]);
        assert_eq!(skeletonize(&e).unwrap(), e);
        let mut blob = Raster::covering(Point::new2(0.0, 0.0), 10.0, 40).unwrap();
        blob.stamp_ball(&Point::new2(-3.0, 0.0), 4.0);
        blob.stamp_ball(&Point::new2(4.0, 2.0), 3.0);
        let s = skeletonize(&blob).unwrap();
        assert_eq!(skeletonize(&s).unwrap(), s);
        assert!(s.is_subset_of(&blob).unwrap());
    }

    #[test]
    fn plus_sign_graph() {
        let mut cells = Vec::new();
        for k in 1..10 {
            cells.push((k, 5));
            cells.push((5, k));
        }
        cells.dedup();
        let g = skeleton_to_graph(&raster(11, 11, &cells)).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.junction_count(), 1);
        let hub = g.degrees().iter().position(|&d| d == 4).unwrap();
        assert_eq!(g.vertices()[hub], Point::new2(5.5, 5.5));
    }

    #[test]
    fn straight_chain_graph() {
        let line: Vec<_> = (2..12).map(|x| (x, 4)).collect();
        let g = skeleton_to_graph(&raster(14, 9, &line)).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].geometry.points().len(), 2);
        assert!((g.total_length() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn loop_gets_anchor() {
        let mut ring = Raster::covering(Point::new2(0.0, 0.0), 10.0, 40).unwrap();
        for i in 0..ring.len() {
            let d = ring.cell_center(i).norm();
            if (5.0..=6.5).contains(&d) {
                ring.values_mut()[i] = 1;
            }
        }
        let s = skeletonize(&ring).unwrap();
        let g = skeleton_to_graph(&s).unwrap();
        assert_eq!(g.vertex_count(), 1, "{g:?}");
        assert_eq!(g.edge_count(), 1);
        let e = &g.edges()[0];
        assert_eq!(e.from, e.to);
        assert!(g.total_length() > 2.0 * std::f64::consts::PI * 4.5);
    }

    #[test]
    fn dp_tolerance() {
        let pts: Vec<Point> = (0..10)
            .map(|i| Point::new2(i as f64, 0.3 * (i % 2) as f64))
            .collect();
        assert_eq!(douglas_peucker(&pts, 1.0).len(), 2);
        assert_eq!(douglas_peucker(&pts, 0.1).len(), 10);
    }
}
