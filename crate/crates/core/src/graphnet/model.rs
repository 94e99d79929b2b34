//! Message-passing network: per layer, an edge MLP `phi` builds messages
//! from `(u_i, u_j, e_ij)`, messages are averaged per receiving node and a
//! node MLP `gamma` maps `(u_i, aggregate)` to the next latent state.

use super::linalg::{add_bias, column_sums, matmul, matmul_nt, matmul_tn, relu, relu_backward};
use crate::error::{Error, Result};
use crate::mesh::{Graph, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Sum,
}

impl Aggregation {
    pub fn id(self) -> u8 {
        match self {
            Aggregation::Mean => 0,
            Aggregation::Sum => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Aggregation::Mean),
            1 => Some(Aggregation::Sum),
            _ => None,
        }
    }
}

/// Network dimensions. Node inputs are `n` frames plus the boundary flag;
/// edge inputs are the displacement plus any PDE parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchSpec {
    pub layers: usize,
    pub node_in: usize,
    pub edge_in: usize,
    pub out: usize,
    pub hidden: usize,
    pub message: usize,
    pub latent: usize,
    pub aggregation: Aggregation,
}

impl ArchSpec {
    /// Default widths for `n` input frames, `m` outputs and `p` PDE parameters.
    pub fn new(n: usize, m: usize, p: usize) -> Self {
        Self {
            layers: 3,
            node_in: n + 1,
            edge_in: 2 + p,
            out: m,
            hidden: 128,
            message: 128,
            latent: 64,
            aggregation: Aggregation::Mean,
        }
    }

    pub fn input_frames(&self) -> usize {
        self.node_in - 1
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("layers", self.layers),
            ("node_in", self.node_in),
            ("out", self.out),
            ("hidden", self.hidden),
            ("message", self.message),
            ("latent", self.latent),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::invalid(format!(
                    "architecture dimension {name} must be positive"
                )));
            }
        }
        if self.node_in < 2 {
            return Err(Error::invalid(
                "node input needs at least one frame plus the boundary flag",
            ));
        }
        if self.edge_in < 2 {
            return Err(Error::invalid("edge input needs the two displacement components"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        plan(self).1
    }
}

#[derive(Clone, Copy, Debug)]
struct Dense {
    w: usize,
    b: usize,
    inp: usize,
    out: usize,
}

impl Dense {
    fn w<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.inp * self.out]
    }

    fn b<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b..self.b + self.out]
    }
}

#[derive(Clone, Debug)]
struct LayerPlan {
    d_in: usize,
    d_out: usize,
    phi: [Dense; 3],
    gamma: [Dense; 3],
}

fn plan(a: &ArchSpec) -> (Vec<LayerPlan>, usize) {
    let mut off = 0;
    let mut dense = |inp: usize, out: usize| {
        let d = Dense {
            w: off,
            b: off + inp * out,
            inp,
            out,
        };
        off += inp * out + out;
        d
    };
    let mut layers = Vec::with_capacity(a.layers);
    for k in 0..a.layers {
        let d_in = if k == 0 { a.node_in } else { a.latent };
        let d_out = if k + 1 == a.layers { a.out } else { a.latent };
        let phi = [
            dense(2 * d_in + a.edge_in, a.hidden),
            dense(a.hidden, a.hidden),
            dense(a.hidden, a.message),
        ];
        let gamma = [
            dense(d_in + a.message, a.hidden),
            dense(a.hidden, a.hidden),
            dense(a.hidden, d_out),
        ];
        layers.push(LayerPlan {
            d_in,
            d_out,
            phi,
            gamma,
        });
    }
    (layers, off)
}

/// Edge order used for aggregation: grouped by receiving node, then by
/// displacement. The order depends only on geometry, so relabelling nodes
/// or shuffling the edge list leaves every per-node sum unchanged.
#[derive(Clone, Debug)]
pub struct Topology {
    pub num_nodes: usize,
    src: Vec<usize>,
    dst: Vec<usize>,
    /// Canonical position to original edge index.
    order: Vec<usize>,
    offsets: Vec<usize>,
    degree: Vec<usize>,
}

impl Topology {
    pub fn new(num_nodes: usize, edges: &[[usize; 2]], displacement: &[Point]) -> Result<Self> {
        if edges.len() != displacement.len() {
            return Err(Error::Shape(format!(
                "{} edges but {} displacements",
                edges.len(),
                displacement.len()
            )));
        }
        if let Some(e) = edges.iter().find(|e| e[0] >= num_nodes || e[1] >= num_nodes) {
            return Err(Error::Shape(format!(
                "edge {e:?} references a node outside 0..{num_nodes}"
            )));
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by(|&a, &b| {
            edges[a][0]
                .cmp(&edges[b][0])
                .then(displacement[a][0].total_cmp(&displacement[b][0]))
                .then(displacement[a][1].total_cmp(&displacement[b][1]))
        });
        let src: Vec<usize> = order.iter().map(|&e| edges[e][0]).collect();
        let dst: Vec<usize> = order.iter().map(|&e| edges[e][1]).collect();
        let mut degree = vec![0usize; num_nodes];
        for &s in &src {
            degree[s] += 1;
        }
        if let Some(i) = degree.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode(i));
        }
        let mut offsets = vec![0; num_nodes + 1];
        for i in 0..num_nodes {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        Ok(Self {
            num_nodes,
            src,
            dst,
            order,
            offsets,
            degree,
        })
    }

    pub fn from_graph(graph: &Graph) -> Result<Self> {
        let disp: Vec<Point> = (0..graph.num_edges()).map(|e| graph.displacement(e)).collect();
        Self::new(graph.num_nodes(), &graph.edges, &disp)
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }
}

/// Z-score statistics. All frame columns and targets share the node
/// statistics; the boundary flag passes through untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub node_mean: f64,
    pub node_std: f64,
    pub edge_mean: Vec<f64>,
    pub edge_std: Vec<f64>,
}

impl Normalization {
    pub fn identity(edge_in: usize) -> Self {
        Self {
            node_mean: 0.0,
            node_std: 1.0,
            edge_mean: vec![0.0; edge_in],
            edge_std: vec![1.0; edge_in],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: ArchSpec,
    pub params: Vec<f64>,
    pub norm: Normalization,
}

struct LayerCache {
    u: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    agg: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl Model {
    /// He-uniform weights, zero biases, identity normalization.
    pub fn new(arch: ArchSpec, seed: u64) -> Result<Self> {
        arch.validate()?;
        let (layers, total) = plan(&arch);
        let mut params = vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layers {
            for d in l.phi.iter().chain(&l.gamma) {
                let bound = (6.0 / d.inp as f64).sqrt();
                for w in &mut params[d.w..d.w + d.inp * d.out] {
                    *w = rng.random_range(-bound..bound);
                }
            }
        }
        Ok(Self {
            norm: Normalization::identity(arch.edge_in),
            arch,
            params,
        })
    }

    pub fn zeros(arch: ArchSpec) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            params: vec![0.0; arch.num_params()],
            norm: Normalization::identity(arch.edge_in),
            arch,
        })
    }

    fn check_inputs(&self, topo: &Topology, nodes: &[f64], edges: &[f64]) -> Result<()> {
        let a = &self.arch;
        if nodes.len() != topo.num_nodes * a.node_in {
            return Err(Error::Shape(format!(
                "node features have {} values, expected {} nodes x {}",
                nodes.len(),
                topo.num_nodes,
                a.node_in
            )));
        }
        if edges.len() != topo.num_edges() * a.edge_in {
            return Err(Error::Shape(format!(
                "edge features have {} values, expected {} edges x {}",
                edges.len(),
                topo.num_edges(),
                a.edge_in
            )));
        }
        if self.norm.edge_mean.len() != a.edge_in || self.norm.edge_std.len() != a.edge_in {
            return Err(Error::Shape(
                "edge normalization width differs from the architecture".into(),
            ));
        }
        Ok(())
    }

    /// Normalized node matrix and canonically ordered, normalized edge matrix.
    fn prepare(&self, topo: &Topology, nodes: &[f64], edges: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (ni, ei) = (self.arch.node_in, self.arch.edge_in);
        let n = &self.norm;
        let mut x = nodes.to_vec();
        for row in x.chunks_exact_mut(ni) {
            for v in &mut row[..ni - 1] {
                *v = (*v - n.node_mean) / n.node_std;
            }
        }
        let mut e = Vec::with_capacity(topo.num_edges() * ei);
        for &orig in &topo.order {
            for c in 0..ei {
                e.push((edges[orig * ei + c] - n.edge_mean[c]) / n.edge_std[c]);
            }
        }
        (x, e)
    }

    fn run(&self, topo: &Topology, x: Vec<f64>, e: &[f64], mut cache: Option<&mut Vec<LayerCache>>) -> Vec<f64> {
        let (layers, _) = plan(&self.arch);
        let p = &self.params;
        let (nn, ne) = (topo.num_nodes, topo.num_edges());
        let (h, hm, ein) = (self.arch.hidden, self.arch.message, self.arch.edge_in);
        let mut u = x;
        for l in &layers {
            let d = l.d_in;
            let [f1, f2, f3] = l.phi;
            let w1 = f1.w(p);
            let (wi, rest) = w1.split_at(d * h);
            let (wj, we) = rest.split_at(d * h);
            let mut a = vec![0.0; nn * h];
            let mut bm = vec![0.0; nn * h];
            let mut c = vec![0.0; ne * h];
            matmul(&u, wi, &mut a, nn, d, h, false);
            matmul(&u, wj, &mut bm, nn, d, h, false);
            matmul(e, we, &mut c, ne, ein, h, false);
            let b1 = f1.b(p);
            let mut h1 = c;
            for k in 0..ne {
                let (ra, rb) = (&a[topo.src[k] * h..][..h], &bm[topo.dst[k] * h..][..h]);
                let row = &mut h1[k * h..(k + 1) * h];
                for t in 0..h {
                    row[t] = ra[t] + rb[t] + row[t] + b1[t];
                }
            }
            relu(&mut h1);
            let mut h2 = vec![0.0; ne * h];
            matmul(&h1, f2.w(p), &mut h2, ne, h, h, false);
            add_bias(&mut h2, f2.b(p));
            relu(&mut h2);
            let mut msg = vec![0.0; ne * hm];
            matmul(&h2, f3.w(p), &mut msg, ne, h, hm, false);
            add_bias(&mut msg, f3.b(p));

            let mut agg = vec![0.0; nn * hm];
            for i in 0..nn {
                let row = &mut agg[i * hm..(i + 1) * hm];
                for k in topo.offsets[i]..topo.offsets[i + 1] {
                    for (r, m) in row.iter_mut().zip(&msg[k * hm..(k + 1) * hm]) {
                        *r += m;
                    }
                }
                if self.arch.aggregation == Aggregation::Mean {
                    let s = 1.0 / topo.degree[i] as f64;
                    row.iter_mut().for_each(|v| *v *= s);
                }
            }

            let [g1d, g2d, g3d] = l.gamma;
            let (wu, wa) = g1d.w(p).split_at(d * h);
            let mut g1 = vec![0.0; nn * h];
            matmul(&u, wu, &mut g1, nn, d, h, false);
            matmul(&agg, wa, &mut g1, nn, hm, h, true);
            add_bias(&mut g1, g1d.b(p));
            relu(&mut g1);
            let mut g2 = vec![0.0; nn * h];
            matmul(&g1, g2d.w(p), &mut g2, nn, h, h, false);
            add_bias(&mut g2, g2d.b(p));
            relu(&mut g2);
            let mut out = vec![0.0; nn * l.d_out];
            matmul(&g2, g3d.w(p), &mut out, nn, h, l.d_out, false);
            add_bias(&mut out, g3d.b(p));
            let prev = std::mem::replace(&mut u, out);
            if let Some(c) = cache.as_deref_mut() {
                c.push(LayerCache {
                    u: prev,
                    h1,
                    h2,
                    agg,
                    g1,
                    g2,
                });
            }
        }
        u
    }

    /// Predictions in normalized units.
    pub fn forward_normalized(&self, topo: &Topology, nodes: &[f64], edges: &[f64]) -> Result<Vec<f64>> {
        self.check_inputs(topo, nodes, edges)?;
        let (x, e) = self.prepare(topo, nodes, edges);
        Ok(self.run(topo, x, &e, None))
    }

    /// Predictions (`N x out`, physical units) from raw node features
    /// (`N x node_in`) and edge features (`M x edge_in`, graph edge order).
    pub fn forward(&self, topo: &Topology, nodes: &[f64], edges: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.forward_normalized(topo, nodes, edges)?;
        for v in &mut y {
            *v = *v * self.norm.node_std + self.norm.node_mean;
        }
        Ok(y)
    }

    /// Sum of squared normalized errors for one graph; adds
    /// `weight * d(sum)/d(params)` into `grad`.
    pub fn loss_and_gradient(
        &self,
        topo: &Topology,
        nodes: &[f64],
        edges: &[f64],
        targets: &[f64],
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_inputs(topo, nodes, edges)?;
        let nn = topo.num_nodes;
        if targets.len() != nn * self.arch.out {
            return Err(Error::Shape(format!(
                "targets have {} values, expected {} nodes x {}",
                targets.len(),
                nn,
                self.arch.out
            )));
        }
        if grad.len() != self.params.len() {
            return Err(Error::Shape(
                "gradient buffer does not match the parameter count".into(),
            ));
        }
        let (x, e) = self.prepare(topo, nodes, edges);
        let mut cache = Vec::with_capacity(self.arch.layers);
        let y = self.run(topo, x, &e, Some(&mut cache));
        let mut sse = 0.0;
        let mut dout: Vec<f64> = y
            .iter()
            .zip(targets)
            .map(|(p, t)| {
                let r = p - (t - self.norm.node_mean) / self.norm.node_std;
                sse += r * r;
                2.0 * weight * r
            })
            .collect();
        self.backward(topo, &e, &cache, &mut dout, grad);
        Ok(sse)
    }

    fn backward(&self, topo: &Topology, e: &[f64], cache: &[LayerCache], dout: &mut Vec<f64>, grad: &mut [f64]) {
        let (layers, _) = plan(&self.arch);
        let p = &self.params;
        let (nn, ne) = (topo.num_nodes, topo.num_edges());
        let (h, hm, ein) = (self.arch.hidden, self.arch.message, self.arch.edge_in);
        for (li, (l, c)) in layers.iter().zip(cache).enumerate().rev() {
            let d = l.d_in;
            let [g1d, g2d, g3d] = l.gamma;
            // gamma
            matmul_tn(&c.g2, dout, &mut grad[g3d.w..g3d.w + h * l.d_out], nn, h, l.d_out);
            column_sums(dout, &mut grad[g3d.b..g3d.b + l.d_out]);
            let mut dg2 = vec![0.0; nn * h];
            matmul_nt(dout, g3d.w(p), &mut dg2, nn, h, l.d_out, false);
            relu_backward(&mut dg2, &c.g2);
            matmul_tn(&c.g1, &dg2, &mut grad[g2d.w..g2d.w + h * h], nn, h, h);
            column_sums(&dg2, &mut grad[g2d.b..g2d.b + h]);
            let mut dg1 = vec![0.0; nn * h];
            matmul_nt(&dg2, g2d.w(p), &mut dg1, nn, h, h, false);
            relu_backward(&mut dg1, &c.g1);
            let (wu, wa) = g1d.w(p).split_at(d * h);
            {
                let gw = &mut grad[g1d.w..g1d.w + (d + hm) * h];
                let (gu, ga) = gw.split_at_mut(d * h);
                matmul_tn(&c.u, &dg1, gu, nn, d, h);
                matmul_tn(&c.agg, &dg1, ga, nn, hm, h);
            }
            column_sums(&dg1, &mut grad[g1d.b..g1d.b + h]);
            let mut du = vec![0.0; nn * d];
            if li > 0 {
                matmul_nt(&dg1, wu, &mut du, nn, d, h, false);
            }
            let mut dagg = vec![0.0; nn * hm];
            matmul_nt(&dg1, wa, &mut dagg, nn, hm, h, false);

            // aggregation
            let mut dmsg = vec![0.0; ne * hm];
            for i in 0..nn {
                let s = match self.arch.aggregation {
                    Aggregation::Mean => 1.0 / topo.degree[i] as f64,
                    Aggregation::Sum => 1.0,
                };
                let src = &dagg[i * hm..(i + 1) * hm];
                for k in topo.offsets[i]..topo.offsets[i + 1] {
                    for (dm, v) in dmsg[k * hm..(k + 1) * hm].iter_mut().zip(src) {
                        *dm = s * v;
                    }
                }
            }

            // phi
            let [f1, f2, f3] = l.phi;
            matmul_tn(&c.h2, &dmsg, &mut grad[f3.w..f3.w + h * hm], ne, h, hm);
            column_sums(&dmsg, &mut grad[f3.b..f3.b + hm]);
            let mut dh2 = vec![0.0; ne * h];
            matmul_nt(&dmsg, f3.w(p), &mut dh2, ne, h, hm, false);
            relu_backward(&mut dh2, &c.h2);
            matmul_tn(&c.h1, &dh2, &mut grad[f2.w..f2.w + h * h], ne, h, h);
            column_sums(&dh2, &mut grad[f2.b..f2.b + h]);
            let mut dh1 = vec![0.0; ne * h];
            matmul_nt(&dh2, f2.w(p), &mut dh1, ne, h, h, false);
            relu_backward(&mut dh1, &c.h1);
            column_sums(&dh1, &mut grad[f1.b..f1.b + h]);
            let mut da = vec![0.0; nn * h];
            let mut db = vec![0.0; nn * h];
            for k in 0..ne {
                let row = &dh1[k * h..(k + 1) * h];
                for (t, v) in row.iter().enumerate() {
                    da[topo.src[k] * h + t] += v;
                    db[topo.dst[k] * h + t] += v;
                }
            }
            {
                let gw = &mut grad[f1.w..f1.w + (2 * d + ein) * h];
                let (gi, rest) = gw.split_at_mut(d * h);
                let (gj, ge) = rest.split_at_mut(d * h);
                matmul_tn(&c.u, &da, gi, nn, d, h);
                matmul_tn(&c.u, &db, gj, nn, d, h);
                matmul_tn(e, &dh1, ge, ne, ein, h);
            }
            if li > 0 {
                let (wi, rest) = f1.w(p).split_at(d * h);
                let wj = &rest[..d * h];
                matmul_nt(&da, wi, &mut du, nn, d, h, true);
                matmul_nt(&db, wj, &mut du, nn, d, h, true);
            }
            *dout = du;
        }
    }
}

/// Mean squared error over all entries.
pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Shape("empty prediction".into()));
    }
    let s: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(s / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro_arch() -> ArchSpec {
        ArchSpec {
            layers: 1,
            node_in: 2,
            edge_in: 2,
            out: 1,
            hidden: 1,
            message: 1,
            latent: 1,
            aggregation: Aggregation::Mean,
        }
    }

    #[test]
    fn parameter_count_matches_layout() {
        let a = ArchSpec::new(4, 1, 0);
        let d0 = 5;
        let phi = |d: usize| (2 * d + 2) * 128 + 128 + 128 * 128 + 128 + 128 * 128 + 128;
        let gamma = |d: usize, o: usize| (d + 128) * 128 + 128 + 128 * 128 + 128 + 128 * o + o;
        let expect = phi(d0) + gamma(d0, 64) + phi(64) + gamma(64, 64) + phi(64) + gamma(64, 1);
        assert_eq!(a.num_params(), expect);
    }

    #[test]
    fn zero_model_outputs_the_mean() {
        let g = crate::mesh::triangulate(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let topo = Topology::from_graph(&g).unwrap();
        let mut m = Model::zeros(ArchSpec::new(2, 3, 0)).unwrap();
        m.norm.node_mean = 4.5;
        m.norm.node_std = 2.0;
        let y = m.forward(&topo, &[1.0; 9], &[0.3; 12]).unwrap();
        assert_eq!(y, vec![4.5; 9]);
    }

    #[test]
    fn hand_computed_micro_graph() {
        // Two nodes, one undirected edge, all widths 1.
        let topo = Topology::new(2, &[[0, 1], [1, 0]], &[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let mut m = Model::zeros(micro_arch()).unwrap();
        let (layers, _) = plan(&m.arch);
        let l = &layers[0];
        let p = &mut m.params;
        // phi1: w = [u_i, u_j, dx, dy] -> 1
        p[l.phi[0].w..l.phi[0].w + 6].copy_from_slice(&[1.0, 0.0, 2.0, 0.0, 0.5, 0.0]);
        p[l.phi[0].b] = 0.1;
        p[l.phi[1].w] = 1.0;
        p[l.phi[2].w] = 3.0;
        p[l.phi[2].b] = -0.2;
        // gamma1: [u, flag, agg] -> 1
        p[l.gamma[0].w..l.gamma[0].w + 3].copy_from_slice(&[1.0, 0.0, 1.0]);
        p[l.gamma[1].w] = 2.0;
        p[l.gamma[2].w] = 1.0;
        p[l.gamma[2].b] = 0.5;
        let nodes = [1.0, 0.0, 2.0, 1.0];
        let edges = [1.0, 0.0, -1.0, 0.0];
        let y = m.forward(&topo, &nodes, &edges).unwrap();
        let relu = |v: f64| v.max(0.0);
        let msg = |ui: f64, uj: f64, dx: f64| 3.0 * relu(relu(ui + 2.0 * uj + 0.5 * dx + 0.1)) - 0.2;
        let node = |u: f64, agg: f64| 2.0 * relu(relu(u + agg)) + 0.5;
        let y0 = node(1.0, msg(1.0, 2.0, 1.0));
        let y1 = node(2.0, msg(2.0, 1.0, -1.0));
        assert!(
            (y[0] - y0).abs() < 1e-14 && (y[1] - y1).abs() < 1e-14,
            "{y:?} vs {y0} {y1}"
        );
    }

    #[test]
    fn isolated_node_is_named() {
        match Topology::new(3, &[[0, 1], [1, 0]], &[[1.0, 0.0], [-1.0, 0.0]]) {
            Err(Error::IsolatedNode(2)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mse_examples() {
        assert_eq!(loss_mse(&[3.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(loss_mse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
