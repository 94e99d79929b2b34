//! Meshes over 2-D domains and the neighbour graphs built from them.

pub mod delaunay;
pub mod domain;
pub mod format;
mod periodic;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::domain::{Curve, DistortionParams, Domain, DomainKind, Segment};
pub use self::format::{decode_graph, encode_graph, read_graph, write_graph, GRAPH_MAGIC};
pub use self::periodic::stitch_periodic;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Marker in [`Graph::segment`] for nodes not on any boundary segment.
pub const NO_SEGMENT: u8 = u8::MAX;

/// A discretised domain: nodes, symmetric directed edges and the cells
/// they came from.
///
/// Edges are sorted by `(source, target)`. For periodic meshes an edge may
/// wrap; its displacement is `positions[j] + shift - positions[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub positions: Vec<Point>,
    pub boundary: Vec<u8>,
    /// Owning boundary segment per node, or [`NO_SEGMENT`].
    pub segment: Vec<u8>,
    pub edges: Vec<[usize; 2]>,
    pub shifts: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl Graph {
    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `x_j + shift - x_i` for edge `e`.
    pub fn displacement(&self, e: usize) -> Point {
        let [i, j] = self.edges[e];
        let s = self.shifts[e];
        [
            self.positions[j][0] + s[0] - self.positions[i][0],
            self.positions[j][1] + s[1] - self.positions[i][1],
        ]
    }

    /// Start offset of each node's outgoing edge run (length `N + 1`).
    pub fn edge_offsets(&self) -> Vec<usize> {
        let mut off = vec![0usize; self.num_nodes() + 1];
        for e in &self.edges {
            off[e[0] + 1] += 1;
        }
        for i in 0..self.num_nodes() {
            off[i + 1] += off[i];
        }
        off
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes()];
        for e in &self.edges {
            d[e[0]] += 1;
        }
        d
    }

    /// Shift lookup keyed by directed edge.
    pub fn shift_map(&self) -> HashMap<(usize, usize), Point> {
        self.edges
            .iter()
            .zip(&self.shifts)
            .map(|(e, s)| ((e[0], e[1]), *s))
            .collect()
    }

    /// Vertex coordinates of triangle `t`, unwrapped around its first vertex.
    pub fn triangle_coords(&self, t: usize, shifts: &HashMap<(usize, usize), Point>) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        let pa = self.positions[a];
        let unwrap = |v: usize| {
            let s = shifts.get(&(a, v)).copied().unwrap_or([0.0, 0.0]);
            [self.positions[v][0] + s[0], self.positions[v][1] + s[1]]
        };
        [pa, unwrap(b), unwrap(c)]
    }

    /// Applies a node relabelling `perm` (new index of old node `i` is `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let n = self.num_nodes();
        let mut positions = vec![[0.0; 2]; n];
        let mut boundary = vec![0; n];
        let mut segment = vec![0; n];
        for i in 0..n {
            positions[perm[i]] = self.positions[i];
            boundary[perm[i]] = self.boundary[i];
            segment[perm[i]] = self.segment[i];
        }
        let mut es: Vec<([usize; 2], Point)> = self
            .edges
            .iter()
            .zip(&self.shifts)
            .map(|(e, s)| ([perm[e[0]], perm[e[1]]], *s))
            .collect();
        es.sort_by(|a, b| a.0.cmp(&b.0));
        let mut triangles: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .map(|t| canonical_triangle([perm[t[0]], perm[t[1]], perm[t[2]]]))
            .collect();
        triangles.sort_unstable();
        Graph {
            positions,
            boundary,
            segment,
            edges: es.iter().map(|x| x.0).collect(),
            shifts: es.iter().map(|x| x.1).collect(),
            triangles,
        }
    }

    /// Lists structural invariant violations; empty when the graph is well formed.
    pub fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.num_nodes();
        if self.boundary.len() != n || self.segment.len() != n {
            v.push(format!(
                "flag/segment arrays have lengths {}/{} for {} nodes",
                self.boundary.len(),
                self.segment.len(),
                n
            ));
            return v;
        }
        if self.shifts.len() != self.edges.len() {
            v.push("shift count differs from edge count".into());
            return v;
        }
        if let Some(i) = self.boundary.iter().position(|&f| f > 1) {
            v.push(format!("boundary flag of node {i} is not 0/1"));
        }
        if let Some(p) = self
            .positions
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            v.push(format!("node {p} has a non-finite position"));
        }
        let mut map: HashMap<(usize, usize), Point> = HashMap::with_capacity(self.edges.len());
        for (k, (e, s)) in self.edges.iter().zip(&self.shifts).enumerate() {
            if e[0] >= n || e[1] >= n {
                v.push(format!("edge {k} references a missing node"));
                return v;
            }
            if e[0] == e[1] {
                v.push(format!("edge {k} is a self-loop on node {}", e[0]));
            }
            if map.insert((e[0], e[1]), *s).is_some() {
                v.push(format!("edge ({}, {}) is duplicated", e[0], e[1]));
            }
        }
        if self.edges.windows(2).any(|w| w[0] > w[1]) {
            v.push("edges are not sorted by (source, target)".into());
        }
        for (&(i, j), s) in &map {
            match map.get(&(j, i)) {
                None => v.push(format!("edge ({i}, {j}) has no reverse edge")),
                Some(r) if r[0] != -s[0] || r[1] != -s[1] => {
                    v.push(format!("edge ({i}, {j}) shift is not antisymmetric"))
                }
                _ => {}
            }
        }
        let mut covered: HashMap<(usize, usize), bool> = map.keys().map(|&k| (k, false)).collect();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&x| x >= n) {
                v.push(format!("triangle {t} references a missing node"));
                continue;
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                for key in [(a, b), (b, a)] {
                    match covered.get_mut(&key) {
                        Some(c) => *c = true,
                        None => {
                            v.push(format!("triangle {t} side ({}, {}) is not an edge", key.0, key.1));
                        }
                    }
                }
            }
        }
        let mut uncovered: Vec<_> = covered.iter().filter(|(_, c)| !**c).map(|(k, _)| *k).collect();
        uncovered.sort_unstable();
        if let Some((i, j)) = uncovered.first() {
            v.push(format!(
                "edge ({i}, {j}) belongs to no triangle ({} such edges)",
                uncovered.len()
            ));
        }
        v.sort();
        v.dedup();
        v
    }
}

pub(crate) fn canonical_triangle(t: [usize; 3]) -> [usize; 3] {
    let r = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[r], t[(r + 1) % 3], t[(r + 2) % 3]]
}

/// Sampled nodes: deterministic boundary points first, then interior points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub num_boundary: usize,
}

/// Mean spacing `sqrt(area / n)` used to place boundary nodes.
pub fn nominal_spacing(domain: &Domain, n_points: usize) -> f64 {
    if n_points == 0 {
        f64::INFINITY
    } else {
        (domain.area() / n_points as f64).sqrt()
    }
}

/// Uniform interior points plus evenly spaced points along every
/// non-periodic boundary segment.
///
/// Interior points closer than a quarter spacing to a wall are redrawn so
/// the triangulation has no slivers against the boundary.
pub fn sample_points(domain: &Domain, n_points: usize, seed: u64) -> Result<PointSet> {
    domain.check_closed()?;
    let spacing = nominal_spacing(domain, n_points);
    let period = domain.period();
    let wrap = |mut p: Point| {
        for k in 0..2 {
            if let Some(l) = period[k] {
                p[k] = p[k].rem_euclid(l);
                if p[k] >= l {
                    p[k] = 0.0;
                }
            }
        }
        p
    };

    let mut points = Vec::new();
    for seg in domain.segments.iter().filter(|s| !s.periodic) {
        let len = seg.curve.length();
        let pieces = if spacing.is_finite() {
            ((len / spacing).round() as usize).max(1)
        } else {
            1
        };
        for i in 0..pieces {
            points.push(wrap(seg.curve.point(i as f64 / pieces as f64)));
        }
    }
    // a periodic loop skips segment starts, so drop repeats
    let mut seen = std::collections::HashSet::new();
    points.retain(|p| seen.insert((p[0].to_bits(), p[1].to_bits())));
    let num_boundary = points.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let clearance = if spacing.is_finite() { 0.25 * spacing } else { 0.0 };
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < n_points {
        attempts += 1;
        if attempts > 1000 * (n_points + 10) {
            return Err(Error::InvalidDomain(
                "rejection sampling failed; domain too thin".into(),
            ));
        }
        let q = [
            lo[0] + rng.random::<f64>() * (hi[0] - lo[0]),
            lo[1] + rng.random::<f64>() * (hi[1] - lo[1]),
        ];
        let inside = match domain.kind {
            DomainKind::PeriodicSquare { .. } => true,
            _ => domain.contains(q) && domain.boundary_distance(q) > clearance,
        };
        if inside {
            points.push(q);
            drawn += 1;
        }
    }
    Ok(PointSet { points, num_boundary })
}

/// Delaunay graph of the convex hull of `points`; no boundary information.
pub fn triangulate(points: &[Point]) -> Result<Graph> {
    let triangles = delaunay::delaunay(points)?;
    Ok(graph_from_triangles(points.to_vec(), triangles))
}

fn graph_from_triangles(positions: Vec<Point>, triangles: Vec<[usize; 3]>) -> Graph {
    let mut edges: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|t| (0..3).flat_map(move |k| [[t[k], t[(k + 1) % 3]], [t[(k + 1) % 3], t[k]]]))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let n = positions.len();
    Graph {
        boundary: vec![0; n],
        segment: vec![NO_SEGMENT; n],
        shifts: vec![[0.0, 0.0]; edges.len()],
        positions,
        edges,
        triangles,
    }
}

/// Triangulates `points` inside `domain`: drops cells whose centroid is
/// outside, flags boundary nodes and stitches periodic sides.
pub fn triangulate_domain(domain: &Domain, points: &[Point]) -> Result<Graph> {
    if domain.is_periodic() {
        let base = Graph {
            positions: points.to_vec(),
            boundary: vec![0; points.len()],
            segment: vec![NO_SEGMENT; points.len()],
            edges: vec![],
            shifts: vec![],
            triangles: vec![],
        };
        let mut g = stitch_periodic(&base, domain)?;
        label_boundary(domain, &mut g);
        return Ok(g);
    }
    let mut tris = delaunay::delaunay(points)?;
    tris.retain(|t| {
        let c = [
            (points[t[0]][0] + points[t[1]][0] + points[t[2]][0]) / 3.0,
            (points[t[0]][1] + points[t[1]][1] + points[t[2]][1]) / 3.0,
        ];
        domain.contains(c)
    });
    let mut g = graph_from_triangles(points.to_vec(), tris);
    label_boundary(domain, &mut g);
    if let Some(i) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::IsolatedNode(i));
    }
    Ok(g)
}

fn label_boundary(domain: &Domain, g: &mut Graph) {
    let tol = domain.boundary_tolerance();
    for (i, p) in g.positions.iter().enumerate() {
        match domain.segment_of(*p, tol) {
            Some(s) => {
                g.boundary[i] = 1;
                g.segment[i] = s as u8;
            }
            None => {
                g.boundary[i] = 0;
                g.segment[i] = NO_SEGMENT;
            }
        }
    }
}

/// Samples, triangulates and labels a mesh in one go.
pub fn generate(domain: &Domain, n_points: usize, seed: u64) -> Result<Graph> {
    let ps = sample_points(domain, n_points, seed)?;
    triangulate_domain(domain, &ps.points)
}

/// Regular `nx x ny` lattice over the domain's bounding box (periodic sides
/// exclude their far edge). Handy for structured reference meshes.
pub fn lattice_points(domain: &Domain, nx: usize, ny: usize) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let period = domain.period();
    let axis = |k: usize, n: usize| -> Vec<f64> {
        let span = hi[k] - lo[k];
        match period[k] {
            Some(l) => (0..n).map(|i| lo[k] + l * i as f64 / n as f64).collect(),
            None => (0..n)
                .map(|i| {
                    if i + 1 == n {
                        hi[k]
                    } else {
                        lo[k] + span * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    };
    let xs = axis(0, nx);
    let ys = axis(1, ny);
    let mut pts = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            pts.push([x, y]);
        }
    }
    pts
}

/// Mean wrapped edge length.
pub fn mean_edge_length(graph: &Graph) -> Result<f64> {
    if graph.edges.is_empty() {
        return Err(Error::invalid("graph has no edges"));
    }
    let total: f64 = (0..graph.num_edges())
        .map(|e| {
            let d = graph.displacement(e);
            d[0].hypot(d[1])
        })
        .sum();
    Ok(total / graph.num_edges() as f64)
}

/// Nodes reachable from `start` in at most `hops` edges.
pub fn k_hop_neighbourhood(graph: &Graph, start: usize, hops: usize) -> Vec<bool> {
    let off = graph.edge_offsets();
    let mut seen = vec![false; graph.num_nodes()];
    seen[start] = true;
    let mut frontier = vec![start];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &i in &frontier {
            for e in off[i]..off[i + 1] {
                let j = graph.edges[e][1];
                if !seen[j] {
                    seen[j] = true;
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_only_when_no_interior_points() {
        let ps = sample_points(&Domain::unit_square(), 0, 1).unwrap();
        assert_eq!(ps.points, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(ps.num_boundary, 4);
    }

    #[test]
    fn unit_square_samples_stay_inside() {
        let ps = sample_points(&Domain::unit_square(), 256, 7).unwrap();
        assert_eq!(ps.points.len() - ps.num_boundary, 256);
        for p in &ps.points[..ps.num_boundary] {
            assert!(p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0);
        }
        for p in &ps.points {
            assert!((0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]));
        }
        assert_eq!(ps, sample_points(&Domain::unit_square(), 256, 7).unwrap());
    }

    #[test]
    fn distorted_samples_pass_winding_oracle() {
        let d = Domain::distorted(DistortionParams::default()).unwrap();
        let ps = sample_points(&d, 256, 5).unwrap();
        let poly = d.boundary_polyline();
        for p in &ps.points[ps.num_boundary..] {
            assert_ne!(domain::winding_number(&poly, *p), 0, "{p:?}");
        }
        for p in &ps.points[..ps.num_boundary] {
            assert!(d.boundary_distance(*p) < 1e-12);
        }
    }

    #[test]
    fn two_triangle_square() {
        let g = triangulate(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.triangles.len(), 2);
        assert_eq!(g.num_edges(), 10);
        let expect = (4.0 + 2f64.sqrt()) / 5.0;
        assert!((mean_edge_length(&g).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn single_simplex_has_six_directed_edges() {
        let g = triangulate(&[[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]).unwrap();
        assert_eq!(g.triangles.len(), 1);
        assert_eq!(g.num_edges(), 6);
        assert!(g.check().is_empty());
    }

    #[test]
    fn mean_edge_single_edge() {
        let g = Graph {
            positions: vec![[0.0, 0.0], [0.5, 0.0]],
            boundary: vec![0, 0],
            segment: vec![NO_SEGMENT; 2],
            edges: vec![[0, 1], [1, 0]],
            shifts: vec![[0.0; 2]; 2],
            triangles: vec![],
        };
        assert_eq!(mean_edge_length(&g).unwrap(), 0.5);
        let empty = Graph {
            edges: vec![],
            shifts: vec![],
            ..g
        };
        assert!(mean_edge_length(&empty).is_err());
    }

    #[test]
    fn mean_edge_of_256_point_square() {
        let g = generate(&Domain::unit_square(), 256, 7).unwrap();
        let m = mean_edge_length(&g).unwrap();
        assert!((0.03..=0.12).contains(&m), "{m}");
    }

    #[test]
    fn boundary_flags_on_unit_square() {
        let g = generate(&Domain::unit_square(), 150, 2).unwrap();
        assert!(g.check().is_empty(), "{:?}", g.check());
        for (p, &f) in g.positions.iter().zip(&g.boundary) {
            let d = p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]);
            assert_eq!(f == 1, d <= 1e-9);
        }
    }

    #[test]
    fn concave_domain_drops_outside_cells() {
        let d = Domain::distorted(DistortionParams {
            notch_depth: 0.4,
            ..Default::default()
        })
        .unwrap();
        let g = generate(&d, 200, 4).unwrap();
        assert!(g.check().is_empty());
        let area: f64 = g
            .triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (g.positions[t[0]], g.positions[t[1]], g.positions[t[2]]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            })
            .sum();
        assert!((area - d.area()).abs() / d.area() < 0.02, "{area} vs {}", d.area());
    }

    #[test]
    fn permutation_relabels_consistently() {
        let g = generate(&Domain::unit_square(), 30, 1).unwrap();
        let n = g.num_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (n - 1 - i + 5) % n).collect();
        let p = g.permuted(&perm);
        assert!(p.check().is_empty());
        assert_eq!(p.num_edges(), g.num_edges());
        assert_eq!(p.positions[perm[5]], g.positions[5]);
    }
}
