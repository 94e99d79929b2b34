//! P1 finite-element ground truth for heat and advection–diffusion.
//!
//! The semi-discrete system `M u' + lambda2 K u + lambda1 A_x u = 0` is
//! advanced with implicit Euler. Dirichlet nodes are pinned by row and column
//! elimination so the heat system stays symmetric for CG; periodic sides are
//! handled by the stitched mesh itself, and walls without a Dirichlet value
//! get the natural zero-flux condition.

pub mod assembly;
pub mod sparse;
pub mod stencil;
pub mod trajectory;

pub use assembly::{assemble_p1, P1Matrices};
pub use sparse::CsrMatrix;
pub use stencil::stencil_reference;
pub use trajectory::{
    decode_trajectory, encode_trajectory, read_trajectory, write_trajectory, InitialCondition, Trajectory,
    TRAJECTORY_MAGIC,
};

use crate::error::{Error, Result};
use crate::mesh::{Domain, Graph, NO_SEGMENT};
use sparse::{bicgstab, conjugate_gradient};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeKind {
    Heat,
    AdvectionDiffusion,
    /// Vorticity form; produced by the spectral solver, never stepped here.
    NavierStokes,
}

impl PdeKind {
    pub fn id(self) -> u8 {
        match self {
            PdeKind::Heat => 0,
            PdeKind::AdvectionDiffusion => 1,
            PdeKind::NavierStokes => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(PdeKind::Heat),
            1 => Some(PdeKind::AdvectionDiffusion),
            2 => Some(PdeKind::NavierStokes),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Heat => "heat",
            PdeKind::AdvectionDiffusion => "advection-diffusion",
            PdeKind::NavierStokes => "navier-stokes",
        }
    }

    /// Number of PDE parameters carried as edge features.
    pub fn num_parameters(self) -> usize {
        match self {
            PdeKind::AdvectionDiffusion => 2,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet(f64),
    /// Zero flux.
    Neumann,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentCondition {
    pub name: String,
    pub condition: BoundaryCondition,
}

/// PDE coefficients plus one boundary condition per domain segment, in
/// segment order.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSpec {
    pub kind: PdeKind,
    /// Advection speed in x.
    pub lambda1: f64,
    /// Diffusivity (viscosity for Navier–Stokes).
    pub lambda2: f64,
    pub bc: Vec<SegmentCondition>,
}

impl PdeSpec {
    pub fn heat(bc: Vec<SegmentCondition>) -> Self {
        Self {
            kind: PdeKind::Heat,
            lambda1: 0.0,
            lambda2: 1.0,
            bc,
        }
    }

    pub fn advection_diffusion(lambda1: f64, lambda2: f64, bc: Vec<SegmentCondition>) -> Self {
        Self {
            kind: PdeKind::AdvectionDiffusion,
            lambda1,
            lambda2,
            bc,
        }
    }

    pub fn navier_stokes(nu: f64) -> Self {
        Self {
            kind: PdeKind::NavierStokes,
            lambda1: 0.0,
            lambda2: nu,
            bc: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda2 > 0.0 && self.lambda2.is_finite()) {
            return Err(Error::invalid(format!(
                "diffusivity must be positive, got {}",
                self.lambda2
            )));
        }
        if !self.lambda1.is_finite() {
            return Err(Error::invalid("advection speed is not finite"));
        }
        if self.kind == PdeKind::Heat && (self.lambda1 != 0.0 || self.lambda2 != 1.0) {
            return Err(Error::invalid("heat equation fixes lambda1 = 0 and lambda2 = 1"));
        }
        for s in &self.bc {
            if let BoundaryCondition::Dirichlet(v) = s.condition {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("boundary value on '{}' is not finite", s.name)));
                }
            }
        }
        Ok(())
    }

    /// Edge-feature parameter values, constant over the domain.
    pub fn parameters(&self) -> Vec<f64> {
        match self.kind {
            PdeKind::AdvectionDiffusion => vec![self.lambda1, self.lambda2],
            _ => Vec::new(),
        }
    }

    /// Pinned `(node, value)` pairs for `graph`.
    pub fn dirichlet_nodes(&self, graph: &Graph) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for (i, &s) in graph.segment.iter().enumerate() {
            if s == NO_SEGMENT {
                continue;
            }
            let cond = self.bc.get(s as usize).ok_or_else(|| {
                Error::invalid(format!(
                    "node {i} lies on segment {s} but only {} conditions given",
                    self.bc.len()
                ))
            })?;
            if let BoundaryCondition::Dirichlet(v) = cond.condition {
                out.push((i, v));
            }
        }
        Ok(out)
    }
}

/// Parses `name=value` pairs; values are numbers or the keywords
/// `neumann` / `periodic`.
pub fn parse_bc(text: &str) -> Result<Vec<(String, BoundaryCondition)>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("boundary condition '{part}' is not name=value")))?;
        let value = value.trim();
        let cond = match value.to_ascii_lowercase().as_str() {
            "neumann" => BoundaryCondition::Neumann,
            "periodic" => BoundaryCondition::Periodic,
            _ => BoundaryCondition::Dirichlet(
                value
                    .parse()
                    .map_err(|_| Error::invalid(format!("boundary value '{value}' on '{name}' is not a number")))?,
            ),
        };
        out.push((name.trim().to_string(), cond));
    }
    Ok(out)
}

/// Orders `given` by the domain's segments. Unnamed walls default to zero
/// flux, periodic sides to periodic.
pub fn resolve_bc(domain: &Domain, given: &[(String, BoundaryCondition)]) -> Result<Vec<SegmentCondition>> {
    for (name, _) in given {
        if domain.segment_index(name).is_none() {
            let names: Vec<&str> = domain.segments.iter().map(|s| s.name.as_str()).collect();
            return Err(Error::invalid(format!(
                "unknown boundary segment '{name}' (domain has {names:?})"
            )));
        }
    }
    domain
        .segments
        .iter()
        .map(|s| {
            let given = given.iter().rev().find(|(n, _)| *n == s.name).map(|(_, c)| *c);
            let condition = match (s.periodic, given) {
                (true, None | Some(BoundaryCondition::Periodic)) => BoundaryCondition::Periodic,
                (true, Some(c)) => {
                    return Err(Error::invalid(format!(
                        "segment '{}' is periodic, cannot impose {c:?}",
                        s.name
                    )))
                }
                (false, Some(BoundaryCondition::Periodic)) => {
                    return Err(Error::invalid(format!(
                        "segment '{}' is not periodic in this domain",
                        s.name
                    )))
                }
                (false, Some(c)) => c,
                (false, None) => BoundaryCondition::Neumann,
            };
            Ok(SegmentCondition {
                name: s.name.clone(),
                condition,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MassKind {
    #[default]
    Consistent,
    /// Row-sum diagonal mass; monotone for heat on non-obtuse meshes.
    Lumped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub mass: MassKind,
    pub rtol: f64,
    /// Iteration cap as a multiple of the node count.
    pub max_iter_factor: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            mass: MassKind::Consistent,
            rtol: 1e-10,
            max_iter_factor: 10,
        }
    }
}

impl StepOptions {
    /// Lumped mass for heat, whose ground truth must respect the maximum
    /// principle; consistent mass elsewhere.
    pub fn for_pde(kind: PdeKind) -> Self {
        Self {
            mass: if kind == PdeKind::Heat {
                MassKind::Lumped
            } else {
                MassKind::Consistent
            },
            ..Self::default()
        }
    }
}

/// Prepared implicit-Euler system for a fixed `dt`.
#[derive(Clone, Debug)]
pub struct ImplicitEuler {
    system: CsrMatrix,
    mass: CsrMatrix,
    pinned: Vec<(usize, f64)>,
    lift: Vec<f64>,
    symmetric: bool,
    rtol: f64,
    max_iter: usize,
}

impl ImplicitEuler {
    pub fn new(graph: &Graph, matrices: &P1Matrices, pde: &PdeSpec, dt: f64, opts: StepOptions) -> Result<Self> {
        pde.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let n = graph.num_nodes();
        let mass = match opts.mass {
            MassKind::Consistent => matrices.mass.clone(),
            MassKind::Lumped => {
                let mut m = matrices.mass.clone();
                for i in 0..n {
                    for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                        m.val[k] = if m.col[k] == i { matrices.lumped_mass[i] } else { 0.0 };
                    }
                }
                m
            }
        };
        let mut system = mass.combine(1.0, &matrices.stiffness, dt * pde.lambda2).combine(
            1.0,
            &matrices.advection_x,
            dt * pde.lambda1,
        );
        let pinned = pde.dirichlet_nodes(graph)?;
        let mut value = vec![None; n];
        for &(i, v) in &pinned {
            value[i] = Some(v);
        }
        let mut lift = vec![0.0; n];
        for i in 0..n {
            for k in system.row_ptr[i]..system.row_ptr[i + 1] {
                let j = system.col[k];
                match (value[i], value[j]) {
                    (Some(_), _) => system.val[k] = if i == j { 1.0 } else { 0.0 },
                    (None, Some(g)) => {
                        lift[i] += system.val[k] * g;
                        system.val[k] = 0.0;
                    }
                    (None, None) => {}
                }
            }
        }
        Ok(Self {
            system,
            mass,
            pinned,
            lift,
            symmetric: pde.lambda1 == 0.0,
            rtol: opts.rtol,
            max_iter: opts.max_iter_factor.max(1) * n.max(1),
        })
    }

    /// Applies the pinned values to `u` in place.
    pub fn pin(&self, u: &mut [f64]) {
        for &(i, v) in &self.pinned {
            u[i] = v;
        }
    }

    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.system.n {
            return Err(Error::Shape(format!(
                "state has {} values, mesh has {} nodes",
                u.len(),
                self.system.n
            )));
        }
        let mut rhs = self.mass.apply(u);
        for (r, l) in rhs.iter_mut().zip(&self.lift) {
            *r -= l;
        }
        for &(i, v) in &self.pinned {
            rhs[i] = v;
        }
        let mut x = u.to_vec();
        self.pin(&mut x);
        if self.symmetric {
            conjugate_gradient(&self.system, &rhs, &mut x, self.rtol, self.max_iter)?;
        } else {
            bicgstab(&self.system, &rhs, &mut x, self.rtol, self.max_iter)?;
        }
        Ok(x)
    }
}

/// One implicit-Euler step with default options.
pub fn step_implicit_euler(
    state: &[f64],
    dt: f64,
    matrices: &P1Matrices,
    pde: &PdeSpec,
    graph: &Graph,
) -> Result<Vec<f64>> {
    ImplicitEuler::new(graph, matrices, pde, dt, StepOptions::default())?.step(state)
}

/// Frames stored by [`simulate`] for the given times.
pub fn frame_count(t_end: f64, dt_record: f64) -> usize {
    (t_end / dt_record + 1e-9).floor() as usize + 1
}

/// Integrates from `ic` to `t_end`, storing frame 0 and every
/// `dt_record / dt_solver`-th step.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    graph: &Graph,
    pde: &PdeSpec,
    ic: &InitialCondition,
    t_end: f64,
    dt_solver: f64,
    dt_record: f64,
    seed: u64,
    opts: StepOptions,
) -> Result<Trajectory> {
    if pde.kind == PdeKind::NavierStokes {
        return Err(Error::invalid(
            "Navier–Stokes trajectories come from the spectral solver",
        ));
    }
    if !(dt_solver > 0.0 && dt_record > 0.0 && t_end >= dt_record) {
        return Err(Error::invalid(format!(
            "need t_end >= dt_record > 0 and dt_solver > 0 (t_end={t_end}, dt_record={dt_record}, dt_solver={dt_solver})"
        )));
    }
    let ratio = dt_record / dt_solver;
    let every = ratio.round();
    if every < 1.0 || (every - ratio).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!(
            "dt_record={dt_record} is not an integer multiple of dt_solver={dt_solver}"
        )));
    }
    let every = every as usize;
    let frames = frame_count(t_end, dt_record);
    let matrices = assemble_p1(graph)?;
    let stepper = ImplicitEuler::new(graph, &matrices, pde, dt_solver, opts)?;
    let mut u = ic.evaluate(graph)?;
    stepper.pin(&mut u);
    let n = graph.num_nodes();
    let mut data = Vec::with_capacity(frames * n);
    data.extend_from_slice(&u);
    for _ in 1..frames {
        for _ in 0..every {
            u = stepper.step(&u)?;
        }
        data.extend_from_slice(&u);
    }
    Ok(Trajectory {
        num_nodes: n,
        frames: data,
        dt_solver,
        dt_record,
        pde: pde.clone(),
        ic: ic.clone(),
        seed,
    })
}
