//! Seeded simulation recipes for the three PDE families.

use crate::error::{Error, Result};
use crate::fem::{
    simulate, BoundaryCondition, InitialCondition, PdeKind, PdeSpec, SegmentCondition, StepOptions, Trajectory,
};
use crate::mesh::{generate, mean_edge_length, DistortionParams, Graph};
use crate::spectral::{simulate_ns, NsConfig, SIDE};
use crate::Domain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keeps the parameter stream independent of the mesh stream for equal seeds.
const PARAM_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug)]
pub enum Scenario {
    /// Zero initial field, one Dirichlet value per wall drawn from `bc_range`.
    Heat {
        domain: Domain,
        n_points: usize,
        dt: f64,
        record_every: usize,
        frames: usize,
        bc_range: (f64, f64),
    },
    /// Channel periodic in x with insulated walls, random four-mode initial
    /// field and constant coefficients drawn from `lambda_range`.
    AdvectionDiffusion {
        n_points: usize,
        dt: f64,
        record_every: usize,
        frames: usize,
        lambda_range: (f64, f64),
    },
    NavierStokes {
        n_points: usize,
        config: NsConfig,
    },
}

impl Scenario {
    pub fn heat_square() -> Self {
        Self::heat_on(Domain::unit_square())
    }

    pub fn heat_distorted() -> Self {
        Self::heat_on(Domain::distorted(DistortionParams::default()).expect("default distortion is valid"))
    }

    /// 201 frames at the solver step `8e-4` on a ~256-node mesh.
    pub fn heat_on(domain: Domain) -> Self {
        Scenario::Heat {
            domain,
            n_points: 200,
            dt: 8e-4,
            record_every: 1,
            frames: 201,
            bc_range: (0.0, 200.0),
        }
    }

    /// 101 frames recorded every 10 solver steps of `1e-4`.
    pub fn advection_diffusion() -> Self {
        Scenario::AdvectionDiffusion {
            n_points: 200,
            dt: 1e-4,
            record_every: 10,
            frames: 101,
            lambda_range: (0.5, 1.5),
        }
    }

    pub fn navier_stokes() -> Self {
        Scenario::NavierStokes {
            n_points: 300,
            config: NsConfig::default(),
        }
    }

    pub fn kind(&self) -> PdeKind {
        match self {
            Scenario::Heat { .. } => PdeKind::Heat,
            Scenario::AdvectionDiffusion { .. } => PdeKind::AdvectionDiffusion,
            Scenario::NavierStokes { .. } => PdeKind::NavierStokes,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Scenario::Heat { domain, .. } => domain.clone(),
            Scenario::AdvectionDiffusion { .. } => Domain::periodic_channel(),
            Scenario::NavierStokes { .. } => Domain::periodic_square(SIDE).expect("positive side"),
        }
    }

    pub fn n_points(&self) -> usize {
        match self {
            Scenario::Heat { n_points, .. }
            | Scenario::AdvectionDiffusion { n_points, .. }
            | Scenario::NavierStokes { n_points, .. } => *n_points,
        }
    }

    pub fn with_n_points(mut self, n: usize) -> Self {
        match &mut self {
            Scenario::Heat { n_points, .. }
            | Scenario::AdvectionDiffusion { n_points, .. }
            | Scenario::NavierStokes { n_points, .. } => *n_points = n,
        }
        self
    }

    pub fn frames(&self) -> usize {
        match self {
            Scenario::Heat { frames, .. } | Scenario::AdvectionDiffusion { frames, .. } => *frames,
            Scenario::NavierStokes { config, .. } => {
                crate::fem::frame_count(config.t_end, config.dt * config.record_every as f64)
            }
        }
    }

    pub fn with_frames(mut self, t: usize) -> Self {
        match &mut self {
            Scenario::Heat { frames, .. } | Scenario::AdvectionDiffusion { frames, .. } => *frames = t,
            Scenario::NavierStokes { config, .. } => {
                config.t_end = (t.max(1) - 1) as f64 * config.dt * config.record_every as f64;
            }
        }
        self
    }

    pub fn mesh(&self, seed: u64) -> Result<Graph> {
        generate(&self.domain(), self.n_points(), seed)
    }

    /// Mesh and ground-truth trajectory for one seed.
    pub fn run(&self, seed: u64) -> Result<(Graph, Trajectory)> {
        let graph = self.mesh(seed)?;
        let traj = self.run_on(&graph, seed)?;
        Ok((graph, traj))
    }

    /// Seeded PDE coefficients, boundary values and initial condition.
    pub fn draw(&self, seed: u64) -> Result<(PdeSpec, InitialCondition)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PARAM_STREAM);
        match self {
            Scenario::Heat {
                domain,
                bc_range: (lo, hi),
                ..
            } => {
                let bc = domain
                    .segments
                    .iter()
                    .map(|s| SegmentCondition {
                        name: s.name.clone(),
                        condition: if s.periodic {
                            BoundaryCondition::Periodic
                        } else {
                            BoundaryCondition::Dirichlet(rng.random_range(*lo..=*hi))
                        },
                    })
                    .collect();
                Ok((PdeSpec::heat(bc), InitialCondition::Constant(0.0)))
            }
            Scenario::AdvectionDiffusion {
                lambda_range: (lo, hi), ..
            } => {
                let l1 = rng.random_range(*lo..=*hi);
                let l2 = rng.random_range(*lo..=*hi);
                let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
                let bc = crate::fem::resolve_bc(&self.domain(), &[])?;
                Ok((PdeSpec::advection_diffusion(l1, l2, bc), InitialCondition::Fourier(a)))
            }
            Scenario::NavierStokes { config, .. } => Ok((
                PdeSpec::navier_stokes(config.nu),
                InitialCondition::FilteredNoise { grid: config.grid },
            )),
        }
    }

    pub fn run_on(&self, graph: &Graph, seed: u64) -> Result<Trajectory> {
        match self {
            Scenario::Heat {
                dt,
                record_every,
                frames,
                ..
            }
            | Scenario::AdvectionDiffusion {
                dt,
                record_every,
                frames,
                ..
            } => {
                let (pde, ic) = self.draw(seed)?;
                integrate(graph, pde, ic, *dt, *record_every, *frames, seed)
            }
            Scenario::NavierStokes { config, .. } => simulate_ns(&NsConfig { seed, ..*config }, graph),
        }
    }
}

/// Implicit-Euler ground truth with `frames` records every `record_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    graph: &Graph,
    pde: PdeSpec,
    ic: InitialCondition,
    dt: f64,
    record_every: usize,
    frames: usize,
    seed: u64,
) -> Result<Trajectory> {
    if frames < 2 || record_every == 0 {
        return Err(Error::invalid("scenario needs at least 2 frames and record_every >= 1"));
    }
    let dt_record = dt * record_every as f64;
    let t_end = (frames - 1) as f64 * dt_record;
    let opts = StepOptions::for_pde(pde.kind);
    simulate(graph, &pde, &ic, t_end, dt, dt_record, seed, opts)
}

/// Point count whose mesh on `domain` has close to `nodes` nodes.
pub fn n_points_for_nodes(domain: &Domain, nodes: usize, seed: u64) -> Result<usize> {
    if nodes < 4 {
        return Err(Error::invalid(format!("need at least 4 nodes, got {nodes}")));
    }
    let mut n = nodes;
    for _ in 0..8 {
        let got = generate(domain, n, seed)?.num_nodes();
        if got == nodes {
            break;
        }
        let next = (n as i64 + nodes as i64 - got as i64).max(1) as usize;
        if next == n {
            break;
        }
        n = next;
    }
    Ok(n)
}

/// Point count whose mesh on `domain` has mean edge length near `target`.
pub fn n_points_for_edge(domain: &Domain, target: f64, seed: u64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target edge length {target} must be positive")));
    }
    let mut n = ((domain.area() / (target * target)).round() as usize).max(4);
    for _ in 0..6 {
        let h = mean_edge_length(&generate(domain, n, seed)?)?;
        let next = ((n as f64 * (h / target).powi(2)).round() as usize).max(4);
        if next == n {
            break;
        }
        n = next;
    }
    Ok(n)
}
