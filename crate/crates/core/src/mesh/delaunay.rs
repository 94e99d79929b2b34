//! Incremental Bowyer–Watson triangulation.
//!
//! The hull is closed off with ghost triangles `(a, b, GHOST)` so points
//! outside the current hull need no super-triangle. Orientation and
//! in-circle tests use adaptive exact predicates; points are inserted in
//! lexicographic order and only triangles whose circumcircle *strictly*
//! contains the new point are removed, so cocircular ties resolve the same
//! way on every run.

use crate::error::{Error, Result};
use crate::mesh::domain::coord;
use crate::mesh::Point;

const GHOST: usize = usize::MAX;
const NONE: usize = usize::MAX;

struct Mesh<'a> {
    pts: &'a [Point],
    tri: Vec<[usize; 3]>,
    /// `nbr[t][k]` is the triangle across the edge opposite vertex `k`.
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    last: usize,
    mark: Vec<u32>,
    stamp: u32,
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

fn strictly_between(a: Point, b: Point, p: Point) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1];
    t > 0.0 && t < d[0] * d[0] + d[1] * d[1]
}

impl<'a> Mesh<'a> {
    fn add(&mut self, v: [usize; 3], n: [usize; 3]) -> usize {
        // keep the ghost vertex in the last slot
        let (v, n) = match v.iter().position(|&x| x == GHOST) {
            Some(0) => ([v[1], v[2], v[0]], [n[1], n[2], n[0]]),
            Some(1) => ([v[2], v[0], v[1]], [n[2], n[0], n[1]]),
            _ => (v, n),
        };
        if let Some(t) = self.free.pop() {
            self.tri[t] = v;
            self.nbr[t] = n;
            self.alive[t] = true;
            self.mark[t] = 0;
            t
        } else {
            self.tri.push(v);
            self.nbr.push(n);
            self.alive.push(true);
            self.mark.push(0);
            self.tri.len() - 1
        }
    }

    fn is_ghost(&self, t: usize) -> bool {
        self.tri[t][2] == GHOST
    }

    /// Whether inserting `p` destroys triangle `t`.
    fn in_circle(&self, t: usize, p: Point) -> bool {
        let [a, b, c] = self.tri[t];
        if c == GHOST {
            let (pa, pb) = (self.pts[a], self.pts[b]);
            let o = orient(pa, pb, p);
            o > 0.0 || (o == 0.0 && strictly_between(pa, pb, p))
        } else {
            robust::incircle(coord(self.pts[a]), coord(self.pts[b]), coord(self.pts[c]), coord(p)) > 0.0
        }
    }

    fn locate(&self, p: Point) -> usize {
        let mut t = self.last;
        if !self.alive[t] {
            t = (0..self.tri.len()).find(|&i| self.alive[i]).unwrap();
        }
        let mut steps = 0;
        'walk: loop {
            if self.is_ghost(t) {
                return t;
            }
            steps += 1;
            if steps > 4 * self.tri.len() + 16 {
                break;
            }
            let v = self.tri[t];
            for k in 0..3 {
                let a = self.pts[v[(k + 1) % 3]];
                let b = self.pts[v[(k + 2) % 3]];
                if orient(a, b, p) < 0.0 {
                    t = self.nbr[t][k];
                    continue 'walk;
                }
            }
            return t;
        }
        // Fallback scan; the visibility walk terminates on Delaunay meshes so this is rare.
        (0..self.tri.len())
            .find(|&t| self.alive[t] && self.in_circle(t, p))
            .expect("point not covered by any triangle")
    }

    fn insert(&mut self, pi: usize) -> Result<()> {
        let p = self.pts[pi];
        let seed = self.locate(p);
        if !self.is_ghost(seed) {
            for &v in &self.tri[seed] {
                if self.pts[v] == p {
                    return Err(Error::DegeneratePointSet(format!("duplicate point {p:?}")));
                }
            }
        }
        if !self.in_circle(seed, p) {
            // p sits exactly on a vertex of a ghost edge
            return Err(Error::DegeneratePointSet(format!("duplicate point {p:?}")));
        }
        self.stamp += 1;
        let stamp = self.stamp;
        let mut cavity = vec![seed];
        self.mark[seed] = stamp;
        let mut stack = vec![seed];
        // boundary edges as (u, v, outside-triangle)
        let mut rim: Vec<(usize, usize, usize)> = Vec::new();
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let n = self.nbr[t][k];
                let u = self.tri[t][(k + 1) % 3];
                let w = self.tri[t][(k + 2) % 3];
                if self.mark[n] == stamp {
                    continue;
                }
                if self.in_circle(n, p) {
                    self.mark[n] = stamp;
                    cavity.push(n);
                    stack.push(n);
                } else {
                    rim.push((u, w, n));
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
            self.free.push(t);
        }
        // The rim may list an edge twice if a non-cavity triangle was reached
        // from two sides; that cannot happen for a star-shaped cavity.
        let mut by_start: std::collections::HashMap<usize, usize> = std::collections::HashMap::with_capacity(rim.len());
        let mut created = Vec::with_capacity(rim.len());
        for &(u, w, out) in &rim {
            let t = self.add([u, w, pi], [NONE, NONE, NONE]);
            created.push((t, u, w, out));
            by_start.insert(u, t);
        }
        for &(t, u, w, out) in &created {
            // locate slots by vertex after the ghost rotation
            let v = self.tri[t];
            let slot = |x: usize| v.iter().position(|&y| y == x).unwrap();
            let next = by_start[&w];
            let prev = created
                .iter()
                .find(|c| c.2 == u)
                .map(|c| c.0)
                .expect("cavity rim is not a closed cycle");
            self.nbr[t][slot(pi)] = out;
            self.nbr[t][slot(u)] = next;
            self.nbr[t][slot(w)] = prev;
            let ov = self.tri[out];
            for k in 0..3 {
                if ov[(k + 1) % 3] == w && ov[(k + 2) % 3] == u {
                    self.nbr[out][k] = t;
                }
            }
        }
        self.last = created
            .iter()
            .map(|c| c.0)
            .find(|&t| !self.is_ghost(t))
            .unwrap_or(created[0].0);
        Ok(())
    }
}

/// Delaunay triangulation of `points`; returns counter-clockwise index triples.
pub fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::DegeneratePointSet(format!("{} points", points.len())));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::DegeneratePointSet("non-finite coordinate".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::DegeneratePointSet(format!("duplicate point {:?}", points[w[0]])));
        }
    }
    let (i0, i1) = (order[0], order[1]);
    let k = order[2..]
        .iter()
        .position(|&i| orient(points[i0], points[i1], points[i]) != 0.0)
        .ok_or_else(|| Error::DegeneratePointSet("all points are collinear".into()))?
        + 2;
    let i2 = order[k];
    let (a, b, c) = if orient(points[i0], points[i1], points[i2]) > 0.0 {
        (i0, i1, i2)
    } else {
        (i0, i2, i1)
    };

    let mut m = Mesh {
        pts: points,
        tri: Vec::with_capacity(2 * points.len() + 8),
        nbr: Vec::with_capacity(2 * points.len() + 8),
        alive: Vec::new(),
        free: Vec::new(),
        last: 0,
        mark: Vec::new(),
        stamp: 0,
    };
    // real triangle 0 and ghosts across each of its edges
    m.add([a, b, c], [2, 3, 1]);
    m.add([b, a, GHOST], [2, 3, 0]); // ghost across (a,b); neighbours fixed below
    m.add([c, b, GHOST], [NONE, NONE, 0]);
    m.add([a, c, GHOST], [NONE, NONE, 0]);
    // ghost (b,a,G): opposite b is edge (a,G) shared with ghost (a,c,G) -> 3;
    // opposite a is edge (G,b) shared with ghost (c,b,G) -> 2.
    m.nbr[1] = [3, 2, 0];
    // ghost (c,b,G): opposite c is (b,G) -> ghost 1; opposite b is (G,c) -> ghost 3.
    m.nbr[2] = [1, 3, 0];
    // ghost (a,c,G): opposite a is (c,G) -> ghost 2; opposite c is (G,a) -> ghost 1.
    m.nbr[3] = [2, 1, 0];
    // real triangle (a,b,c): opposite a is (b,c) -> ghost 2; opposite b is (c,a) -> ghost 3; opposite c is (a,b) -> ghost 1.
    m.nbr[0] = [2, 3, 1];

    for &i in &order {
        if i == a || i == b || i == c {
            continue;
        }
        m.insert(i)?;
    }

    let mut out: Vec<[usize; 3]> = (0..m.tri.len())
        .filter(|&t| m.alive[t] && !m.is_ghost(t))
        .map(|t| {
            // rotate so the smallest index leads, keeping orientation
            let v = m.tri[t];
            let r = (0..3).min_by_key(|&k| v[k]).unwrap();
            [v[r], v[(r + 1) % 3], v[(r + 2) % 3]]
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}
