//! Periodic stitching: triangulate the point set together with its lattice
//! copies and fold every cell back onto the original nodes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{canonical_triangle, delaunay, Domain, Graph, Point, NO_SEGMENT};

/// Re-triangulates `graph`'s nodes on the torus (or cylinder) of `domain`.
///
/// Each cell of the tiled triangulation whose centroid falls in the base
/// period cell is kept once. Edges carry the lattice shift that turns
/// `x_j - x_i` into the wrapped displacement; each node pair is joined by a
/// single edge.
pub fn stitch_periodic(graph: &Graph, domain: &Domain) -> Result<Graph> {
    let period = domain.period();
    if period.iter().all(Option::is_none) {
        return Err(Error::NotPeriodic);
    }
    let n = graph.num_nodes();
    for (i, p) in graph.positions.iter().enumerate() {
        for k in 0..2 {
            if let Some(l) = period[k] {
                if !(p[k] >= 0.0 && p[k] < l) {
                    return Err(Error::invalid(format!(
                        "node {i} at {p:?} lies outside the period cell"
                    )));
                }
            }
        }
    }
    let copies = |k: usize| -> Vec<i32> {
        if period[k].is_some() {
            vec![-1, 0, 1]
        } else {
            vec![0]
        }
    };
    let mut tiled: Vec<Point> = Vec::with_capacity(9 * n);
    let mut origin: Vec<(usize, [i32; 2])> = Vec::with_capacity(9 * n);
    for &cy in &copies(1) {
        for &cx in &copies(0) {
            for (i, p) in graph.positions.iter().enumerate() {
                let q = [
                    p[0] + cx as f64 * period[0].unwrap_or(0.0),
                    p[1] + cy as f64 * period[1].unwrap_or(0.0),
                ];
                tiled.push(q);
                origin.push((i, [cx, cy]));
            }
        }
    }
    let tris = delaunay::delaunay(&tiled)?;

    let lattice = |c: [i32; 2]| -> Point {
        [
            c[0] as f64 * period[0].unwrap_or(0.0),
            c[1] as f64 * period[1].unwrap_or(0.0),
        ]
    };
    let mut triangles = Vec::new();
    let mut edge_shift: BTreeMap<(usize, usize), Point> = BTreeMap::new();
    for t in &tris {
        let c = [
            (tiled[t[0]][0] + tiled[t[1]][0] + tiled[t[2]][0]) / 3.0,
            (tiled[t[0]][1] + tiled[t[1]][1] + tiled[t[2]][1]) / 3.0,
        ];
        let in_cell = (0..2).all(|k| match period[k] {
            Some(l) => c[k] >= 0.0 && c[k] < l,
            None => true,
        });
        if !in_cell {
            continue;
        }
        let v = [origin[t[0]], origin[t[1]], origin[t[2]]];
        if v[0].0 == v[1].0 || v[1].0 == v[2].0 || v[0].0 == v[2].0 {
            return Err(Error::DegeneratePointSet(
                "period cell too small for its point density (cell touches its own copy)".into(),
            ));
        }
        for k in 0..3 {
            let (a, ca) = v[k];
            let (b, cb) = v[(k + 1) % 3];
            let sa = lattice(ca);
            let sb = lattice(cb);
            let s = [sb[0] - sa[0], sb[1] - sa[1]];
            if *edge_shift.entry((a, b)).or_insert(s) != s {
                return Err(Error::DegeneratePointSet(
                    "period cell too small for its point density (node pair joined across two periods)".into(),
                ));
            }
            edge_shift.entry((b, a)).or_insert([-s[0], -s[1]]);
        }
        triangles.push(canonical_triangle([v[0].0, v[1].0, v[2].0]));
    }
    triangles.sort_unstable();

    let (edges, shifts): (Vec<[usize; 2]>, Vec<Point>) = edge_shift.into_iter().map(|((a, b), s)| ([a, b], s)).unzip();
    let g = Graph {
        positions: graph.positions.clone(),
        boundary: vec![0; n],
        segment: vec![NO_SEGMENT; n],
        edges,
        shifts,
        triangles,
    };
    if let Some(i) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::IsolatedNode(i));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, lattice_points, triangulate};
    use std::f64::consts::PI;

    fn min_image_ok(g: &Graph, l: f64) -> bool {
        (0..g.num_edges()).all(|e| {
            let [i, j] = g.edges[e];
            let d = g.displacement(e);
            let len = d[0].hypot(d[1]);
            let mut best = f64::INFINITY;
            for sx in -1..=1 {
                for sy in -1..=1 {
                    let dx = g.positions[j][0] + sx as f64 * l - g.positions[i][0];
                    let dy = g.positions[j][1] + sy as f64 * l - g.positions[i][1];
                    best = best.min(dx.hypot(dy));
                }
            }
            (len - best).abs() <= 1e-12 && len <= l / 2f64.sqrt()
        })
    }

    #[test]
    fn coarse_torus_is_rejected_or_consistent() {
        let d = Domain::periodic_square(2.0 * PI).unwrap();
        for seed in 0..30 {
            match generate(&d, 10, seed) {
                Ok(g) => assert!(g.check().is_empty(), "{:?}", g.check()),
                Err(e) => assert!(matches!(e, Error::DegeneratePointSet(_)), "{e}"),
            }
        }
    }

    #[test]
    fn regular_grid_has_uniform_degree() {
        let d = Domain::periodic_square(2.0 * PI).unwrap();
        let pts = lattice_points(&d, 8, 8);
        let g = crate::mesh::triangulate_domain(&d, &pts).unwrap();
        let deg = g.degrees();
        assert!(deg.iter().all(|&x| x == deg[0]), "{deg:?}");
        assert!(g.check().is_empty(), "{:?}", g.check());
        assert_eq!(g.triangles.len(), 2 * 64);
    }

    #[test]
    fn random_torus_edges_use_minimum_image() {
        let l = 2.0 * PI;
        let d = Domain::periodic_square(l).unwrap();
        for seed in 0..5 {
            let g = generate(&d, 120, seed).unwrap();
            assert!(g.check().is_empty(), "{:?}", g.check());
            assert!(min_image_ok(&g, l));
            assert!(g.boundary.iter().all(|&f| f == 0));
            // Euler characteristic of a torus: V - E + F = 0
            let v = g.num_nodes() as i64;
            let e = (g.num_edges() / 2) as i64;
            let f = g.triangles.len() as i64;
            assert_eq!(v - e + f, 0);
        }
    }

    #[test]
    fn corner_nodes_connect_across_the_wrap() {
        let l = 2.0 * PI;
        let d = Domain::periodic_square(l).unwrap();
        let mut pts = lattice_points(&d, 6, 6);
        // nudge the lattice off its cocircular configuration
        for (k, p) in pts.iter_mut().enumerate() {
            p[0] = (p[0] + 0.3 + 0.01 * (k % 5) as f64).rem_euclid(l);
            p[1] = (p[1] + 0.4 + 0.013 * (k % 3) as f64).rem_euclid(l);
        }
        pts.push([0.01, 0.01]);
        pts.push([6.27, 6.27]);
        let a = pts.len() - 2;
        let b = pts.len() - 1;
        let g = crate::mesh::triangulate_domain(&d, &pts).unwrap();
        // oracle: Delaunay of the explicit 3x3 tiling
        let mut tiled = Vec::new();
        for cy in -1..=1 {
            for cx in -1..=1 {
                for p in &pts {
                    tiled.push([p[0] + cx as f64 * l, p[1] + cy as f64 * l]);
                }
            }
        }
        let oracle = triangulate(&tiled).unwrap();
        let n = pts.len();
        let centre = 4 * n;
        let oracle_has = oracle
            .edges
            .iter()
            .any(|e| (e[0] == centre + a && e[1] % n == b) || (e[0] == centre + b && e[1] % n == a));
        let has = g.edges.contains(&[a, b]);
        assert!(oracle_has);
        assert_eq!(has, oracle_has);
        let e = g.edges.iter().position(|e| *e == [a, b]).unwrap();
        let disp = g.displacement(e);
        assert!(disp[0].abs() < 0.1 && disp[1].abs() < 0.1);
    }

    #[test]
    fn non_periodic_domain_is_rejected() {
        let g = generate(&Domain::unit_square(), 20, 0).unwrap();
        assert!(matches!(
            stitch_periodic(&g, &Domain::unit_square()),
            Err(Error::NotPeriodic)
        ));
    }

    #[test]
    fn channel_wraps_in_x_only() {
        let d = Domain::periodic_channel();
        let g = generate(&d, 150, 3).unwrap();
        assert!(g.check().is_empty(), "{:?}", g.check());
        assert!(g.shifts.iter().all(|s| s[1] == 0.0));
        assert!(g.shifts.iter().any(|s| s[0] != 0.0));
        for (p, &f) in g.positions.iter().zip(&g.boundary) {
            assert_eq!(f == 1, p[1] == 0.0 || p[1] == 1.0);
            assert!(p[0] < 1.0);
        }
    }
}
