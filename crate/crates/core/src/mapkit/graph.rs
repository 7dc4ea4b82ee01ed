use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::error::{Error, Result};
use crate::point::Point;

/// An ordered list of at least two points.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegeneratePath(format!(
                "a polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(&w[1])).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    pub fn translated(&self, delta: &Point) -> Self {
        Self {
            points: self.points.iter().map(|p| *p + *delta).collect(),
        }
    }

    /// Original vertices plus evenly spaced points on every edge so that no
    /// gap exceeds `step`.
    pub fn resample(&self, step: f64) -> Vec<Point> {
        let mut out = vec![self.points[0]];
        for w in self.points.windows(2) {
            let len = w[0].dist(&w[1]);
            let k = if step > 0.0 {
                (len / step).ceil() as usize
            } else {
                1
            }
            .max(1);
            for j in 1..=k {
                out.push(if j == k {
                    w[1]
                } else {
                    w[0].lerp(&w[1], j as f64 / k as f64)
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Runs from `vertices[from]` to `vertices[to]`.
    pub geometry: Polyline,
}

impl Edge {
    pub fn length(&self) -> f64 {
        self.geometry.length()
    }
}

/// Undirected road network with polyline edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadGraph {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
}

impl RoadGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Street grid with `rows x cols` intersections at
    /// `(i * spacing, j * spacing)`.
    pub fn grid(rows: usize, cols: usize, spacing: f64) -> Self {
        let mut g = Self::new();
        for j in 0..rows {
            for i in 0..cols {
                g.add_vertex(Point::new2(i as f64 * spacing, j as f64 * spacing));
            }
        }
        for j in 0..rows {
            for i in 0..cols {
                let v = j * cols + i;
                if i + 1 < cols {
                    g.add_edge(v, v + 1, None).expect("grid edge");
                }
                if j + 1 < rows {
                    g.add_edge(v, v + cols, None).expect("grid edge");
                }
            }
        }
        g
    }

    pub fn add_vertex(&mut self, p: Point) -> usize {
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    /// Adds an edge; `interior` holds the geometry strictly between the two
    /// vertices.
    pub fn add_edge(
        &mut self,
        from: usize,
        to: usize,
        interior: Option<Vec<Point>>,
    ) -> Result<usize> {
        let n = self.vertices.len();
        if from >= n || to >= n {
            return Err(Error::Parameter(format!(
                "edge ({from}, {to}) references a missing vertex; graph has {n}"
            )));
        }
        let mut pts = vec![self.vertices[from]];
        pts.extend(interior.unwrap_or_default());
        pts.push(self.vertices[to]);
        let geometry = Polyline::new(pts)?;
        if geometry.length() == 0.0 {
            return Err(Error::Parameter(format!(
                "edge ({from}, {to}) has zero length"
            )));
        }
        self.edges.push(Edge { from, to, geometry });
        Ok(self.edges.len() - 1)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(Edge::length).sum()
    }

    /// Vertex degrees; a self-loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.from] += 1;
            deg[e.to] += 1;
        }
        deg
    }

    /// Number of vertices where at least three edge ends meet.
    pub fn junction_count(&self) -> usize {
        self.degrees().iter().filter(|&&d| d >= 3).count()
    }

    /// Nearest vertex to `p` and its distance.
    pub fn nearest_vertex(&self, p: &Point) -> Option<(usize, f64)> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.dist(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    pub fn translated(&self, delta: &Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| *p + *delta).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    from: e.from,
                    to: e.to,
                    geometry: e.geometry.translated(delta),
                })
                .collect(),
        }
    }

    /// Cleans thinning artifacts. Repeatedly removes dangling edges shorter
    /// than `min_len` that hang off a junction, contracts junction-to-junction
    /// edges shorter than `min_len` into their midpoint, and dissolves
    /// vertices left with two edge ends. Isolated vertices are dropped.
    pub fn pruned(&self, min_len: f64) -> RoadGraph {
        let mut verts: Vec<Option<Point>> = self.vertices.iter().map(|p| Some(*p)).collect();
        let mut edges: Vec<Option<(usize, usize, Vec<Point>)>> = self
            .edges
            .iter()
            .map(|e| Some((e.from, e.to, e.geometry.points().to_vec())))
            .collect();
        let degrees = |edges: &[Option<(usize, usize, Vec<Point>)>], n: usize| {
            let mut deg = vec![0usize; n];
            for (a, b, _) in edges.iter().flatten() {
                deg[*a] += 1;
                deg[*b] += 1;
            }
            deg
        };
        let len = |pts: &[Point]| pts.windows(2).map(|w| w[0].dist(&w[1])).sum::<f64>();
        loop {
            let mut changed = false;
            let deg = degrees(&edges, verts.len());
            for slot in edges.iter_mut() {
                let Some((a, b, pts)) = slot else { continue };
                let hanging = (deg[*a] == 1 && deg[*b] >= 3) || (deg[*b] == 1 && deg[*a] >= 3);
                if a != b && hanging && len(pts) < min_len {
                    *slot = None;
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            let deg = degrees(&edges, verts.len());
            if let Some(i) = edges.iter().position(|e| {
                e.as_ref().is_some_and(|(a, b, pts)| {
                    a != b && deg[*a] >= 3 && deg[*b] >= 3 && len(pts) < min_len
                })
            }) {
                let (a, b, _) = edges[i].take().expect("selected edge");
                let mid = verts[a]
                    .expect("live vertex")
                    .lerp(&verts[b].expect("live vertex"), 0.5);
                verts[a] = Some(mid);
                verts[b] = None;
                for (x, y, g) in edges.iter_mut().flatten() {
                    for end in [&mut *x, &mut *y] {
                        if *end == b {
                            *end = a;
                        }
                    }
                    if *x == a {
                        g[0] = mid;
                    }
                    if *y == a {
                        let last = g.len() - 1;
                        g[last] = mid;
                    }
                }
                continue;
            }
            let deg = degrees(&edges, verts.len());
            let mut dissolved = false;
            for v in 0..verts.len() {
                if deg[v] != 2 {
                    continue;
                }
                let inc: Vec<usize> = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.as_ref().is_some_and(|(a, b, _)| *a == v || *b == v))
                    .map(|(i, _)| i)
                    .collect();
                if inc.len() != 2 {
                    continue; // a self-loop
                }
                let (a0, b0, mut g0) = edges[inc[0]].take().expect("incident edge");
                let (a1, b1, mut g1) = edges[inc[1]].take().expect("incident edge");
                // orient g0 to end at v and g1 to start at v
                let from = if b0 == v {
                    a0
                } else {
                    g0.reverse();
                    b0
                };
                let to = if a1 == v {
                    b1
                } else {
                    g1.reverse();
                    a1
                };
                g0.extend_from_slice(&g1[1..]);
                edges[inc[0]] = Some((from, to, g0));
                verts[v] = None;
                dissolved = true;
                break;
            }
            if !dissolved {
                break;
            }
        }
        let deg = degrees(&edges, verts.len());
        let mut out = RoadGraph::new();
        let mut remap = vec![usize::MAX; verts.len()];
        for (v, p) in verts.iter().enumerate() {
            if let Some(p) = p {
                if deg[v] > 0 {
                    remap[v] = out.add_vertex(*p);
                }
            }
        }
        for (a, b, pts) in edges.into_iter().flatten() {
            let interior = pts[1..pts.len() - 1].to_vec();
            let _ = out.add_edge(remap[a], remap[b], Some(interior));
        }
        out
    }

    fn to_petgraph(&self) -> UnGraph<(), (usize, f64)> {
        let mut g = UnGraph::with_capacity(self.vertices.len(), self.edges.len());
        for _ in &self.vertices {
            g.add_node(());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.from != e.to {
                g.add_edge(
                    NodeIndex::new(e.from),
                    NodeIndex::new(e.to),
                    (i, e.length()),
                );
            }
        }
        g
    }

    /// Geometry of a minimum-length path from `u` to `v`.
    pub fn shortest_path(&self, u: usize, v: usize) -> Result<Polyline> {
        PathFinder::new(self).path(u, v)
    }
}

/// Reusable shortest-path queries on one graph.
pub struct PathFinder<'a> {
    graph: &'a RoadGraph,
    pg: UnGraph<(), (usize, f64)>,
}

impl<'a> PathFinder<'a> {
    pub fn new(graph: &'a RoadGraph) -> Self {
        Self {
            graph,
            pg: graph.to_petgraph(),
        }
    }

    pub fn path(&self, u: usize, v: usize) -> Result<Polyline> {
        let n = self.graph.vertex_count();
        if u >= n || v >= n {
            return Err(Error::Parameter(format!(
                "vertex pair ({u}, {v}) out of range; graph has {n}"
            )));
        }
        if u == v {
            return Err(Error::DegeneratePath(format!(
                "path from vertex {u} to itself"
            )));
        }
        let (_, nodes) = astar(
            &self.pg,
            NodeIndex::new(u),
            |x| x.index() == v,
            |e| e.weight().1,
            |_| 0.0,
        )
        .ok_or(Error::NoPath { from: u, to: v })?;
        let mut pts = vec![self.graph.vertices[u]];
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ei, _) = self
                .pg
                .edges_connecting(a, b)
                .map(|e| *e.weight())
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("consecutive path nodes are adjacent");
            let e = &self.graph.edges[ei];
            let geom = if e.from == a.index() {
                e.geometry.points().to_vec()
            } else {
                e.geometry.reversed().points().to_vec()
            };
            pts.extend_from_slice(&geom[1..]);
        }
        Polyline::new(pts)
    }
}
