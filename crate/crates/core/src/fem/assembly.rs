//! Element-wise P1 assembly of mass, stiffness and x-advection matrices.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::{Graph, Point};

/// Global P1 matrices on one shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct P1Matrices {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// Entry `(i, j)` is the integral of `phi_i * d(phi_j)/dx`.
    pub advection_x: CsrMatrix,
    /// Row sums of the consistent mass matrix.
    pub lumped_mass: Vec<f64>,
}

/// Signed area and basis gradients of the triangle `p`.
fn gradients(p: &[Point; 3]) -> (f64, [[f64; 2]; 3]) {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(p[j][1] - p[k][1]) / area2, (p[k][0] - p[j][0]) / area2];
    }
    (0.5 * area2, g)
}

pub fn element_stiffness(p: &[Point; 3]) -> [[f64; 3]; 3] {
    let (a, g) = gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = a.abs() * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

pub fn element_mass(p: &[Point; 3]) -> [[f64; 3]; 3] {
    let (a, _) = gradients(p);
    let a = a.abs();
    let mut m = [[a / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = a / 6.0;
    }
    m
}

pub fn element_advection_x(p: &[Point; 3]) -> [[f64; 3]; 3] {
    let (a, g) = gradients(p);
    let mut c = [[0.0; 3]; 3];
    for row in c.iter_mut() {
        for j in 0..3 {
            row[j] = a.abs() / 3.0 * g[j][0];
        }
    }
    c
}

/// Assembles the global matrices. Periodic triangles are unwrapped through
/// the graph's edge shifts before integration.
pub fn assemble_p1(graph: &Graph) -> Result<P1Matrices> {
    let n = graph.num_nodes();
    let shifts = graph.shift_map();
    let (lo, hi) = bounds(graph);
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let cap = graph.triangles.len() * 9 + n;
    let mut tm = Vec::with_capacity(cap);
    let mut tk = Vec::with_capacity(cap);
    let mut ta = Vec::with_capacity(cap);
    for i in 0..n {
        tm.push((i, i, 0.0));
        tk.push((i, i, 0.0));
        ta.push((i, i, 0.0));
    }
    for (t, tri) in graph.triangles.iter().enumerate() {
        let p = graph.triangle_coords(t, &shifts);
        let (area, _) = gradients(&p);
        if !(area.abs() > 1e-14 * scale * scale) {
            return Err(Error::ZeroAreaTriangle { index: t });
        }
        let (m, k, c) = (element_mass(&p), element_stiffness(&p), element_advection_x(&p));
        for a in 0..3 {
            for b in 0..3 {
                tm.push((tri[a], tri[b], m[a][b]));
                tk.push((tri[a], tri[b], k[a][b]));
                ta.push((tri[a], tri[b], c[a][b]));
            }
        }
    }
    let mass = CsrMatrix::from_triplets(n, tm);
    let lumped_mass = mass.row_sums();
    Ok(P1Matrices {
        lumped_mass,
        mass,
        stiffness: CsrMatrix::from_triplets(n, tk),
        advection_x: CsrMatrix::from_triplets(n, ta),
    })
}

fn bounds(graph: &Graph) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &graph.positions {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain};

    #[test]
    fn unit_right_triangle_stiffness() {
        let k = element_stiffness(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        // Orientation does not matter.
        let k2 = element_stiffness(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!((k2[1][1] - 0.5).abs() < 1e-15 && (k2[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn advection_of_linear_field() {
        // A_x applied to u = x integrates phi_i over the triangle: area / 3.
        let p = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        let c = element_advection_x(&p);
        for row in c {
            let s: f64 = (0..3).map(|j| row[j] * p[j][0]).sum();
            assert!((s - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn global_identities() {
        let g = generate(&Domain::unit_square(), 120, 3).unwrap();
        let m = assemble_p1(&g).unwrap();
        let total: f64 = m.mass.val.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let k1 = m.stiffness.apply(&vec![1.0; g.num_nodes()]);
        let kmax = m.stiffness.max_abs();
        assert!(k1.iter().all(|v| v.abs() <= 1e-12 * kmax));
        assert!(m.stiffness.is_symmetric(1e-14) && m.mass.is_symmetric(0.0));
    }

    #[test]
    fn periodic_mesh_area_is_cell_area() {
        let side = std::f64::consts::TAU;
        let g = generate(&Domain::periodic_square(side).unwrap(), 150, 5).unwrap();
        let m = assemble_p1(&g).unwrap();
        let total: f64 = m.mass.val.iter().sum();
        assert!((total / (side * side) - 1.0).abs() < 1e-12);
        // Column sums of A_x vanish without x-walls.
        let ones = vec![1.0; g.num_nodes()];
        let mut col = vec![0.0; g.num_nodes()];
        for i in 0..g.num_nodes() {
            for k in m.advection_x.row_ptr[i]..m.advection_x.row_ptr[i + 1] {
                col[m.advection_x.col[k]] += m.advection_x.val[k] * ones[i];
            }
        }
        assert!(col.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn degenerate_triangle_is_named() {
        let mut g = generate(&Domain::unit_square(), 10, 1).unwrap();
        let t = g.triangles[2];
        g.positions[t[2]] = [
            0.5 * (g.positions[t[0]][0] + g.positions[t[1]][0]),
            0.5 * (g.positions[t[0]][1] + g.positions[t[1]][1]),
        ];
        match assemble_p1(&g) {
            Err(Error::ZeroAreaTriangle { index }) => assert!(g.triangles[index].contains(&t[2])),
            other => panic!("{other:?}"),
        }
    }
}
