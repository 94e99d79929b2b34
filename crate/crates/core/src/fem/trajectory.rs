//! Recorded nodal fields and the `PTR1` trajectory format.
//!
//! Layout (little-endian): magic, `N` u64, `T` u64, `dt_solver` f64,
//! `dt_record` f64, PDE kind u8, `lambda1` f64, `lambda2` f64, seed u64,
//! boundary table (count u64, then name, kind u8, value f64 per entry),
//! initial-condition descriptor (kind u8, parameter vector), `T x N` frames
//! row-major, then a SHA-256 digest of everything before it.

use super::{BoundaryCondition, PdeKind, PdeSpec, SegmentCondition};
use crate::error::{Error, Result};
use crate::io::{read_file, seal, unseal, write_atomic, ByteReader, ByteWriter};
use crate::mesh::Graph;
use std::f64::consts::{PI, TAU};
use std::path::Path;

pub const TRAJECTORY_MAGIC: &[u8; 4] = b"PTR1";

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Constant(f64),
    /// `amplitude * sin(pi x) sin(pi y)`.
    SineProduct {
        amplitude: f64,
    },
    /// `a1 sin(2 pi x) + a2 sin(4 pi x) + a3 cos(2 pi x) + a4 cos(4 pi x)`.
    Fourier([f64; 4]),
    /// `amplitude * sin(x) sin(y)` vorticity.
    TaylorGreen {
        amplitude: f64,
    },
    /// Low-pass filtered uniform noise on a `grid x grid` spectral grid.
    FilteredNoise {
        grid: usize,
    },
    Nodal(Vec<f64>),
}

impl InitialCondition {
    fn id(&self) -> u8 {
        match self {
            InitialCondition::Constant(_) => 0,
            InitialCondition::SineProduct { .. } => 1,
            InitialCondition::Fourier(_) => 2,
            InitialCondition::TaylorGreen { .. } => 3,
            InitialCondition::FilteredNoise { .. } => 4,
            InitialCondition::Nodal(_) => 5,
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            InitialCondition::Constant(c) => vec![*c],
            InitialCondition::SineProduct { amplitude } | InitialCondition::TaylorGreen { amplitude } => {
                vec![*amplitude]
            }
            InitialCondition::Fourier(a) => a.to_vec(),
            InitialCondition::FilteredNoise { grid } => vec![*grid as f64],
            InitialCondition::Nodal(v) => v.clone(),
        }
    }

    fn from_parts(id: u8, p: Vec<f64>) -> Result<Self> {
        let want = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::format(
                    "trajectory",
                    format!("initial condition {id} has {} parameters", p.len()),
                ))
            }
        };
        Ok(match id {
            0 => {
                want(1)?;
                InitialCondition::Constant(p[0])
            }
            1 => {
                want(1)?;
                InitialCondition::SineProduct { amplitude: p[0] }
            }
            2 => {
                want(4)?;
                InitialCondition::Fourier([p[0], p[1], p[2], p[3]])
            }
            3 => {
                want(1)?;
                InitialCondition::TaylorGreen { amplitude: p[0] }
            }
            4 => {
                want(1)?;
                InitialCondition::FilteredNoise { grid: p[0] as usize }
            }
            5 => InitialCondition::Nodal(p),
            _ => {
                return Err(Error::format(
                    "trajectory",
                    format!("unknown initial condition kind {id}"),
                ))
            }
        })
    }

    /// Point value for closed-form conditions.
    pub fn value_at(&self, p: [f64; 2]) -> Option<f64> {
        let [x, y] = p;
        match self {
            InitialCondition::Constant(c) => Some(*c),
            InitialCondition::SineProduct { amplitude } => Some(amplitude * (PI * x).sin() * (PI * y).sin()),
            InitialCondition::Fourier(a) => Some(
                a[0] * (TAU * x).sin()
                    + a[1] * (2.0 * TAU * x).sin()
                    + a[2] * (TAU * x).cos()
                    + a[3] * (2.0 * TAU * x).cos(),
            ),
            InitialCondition::TaylorGreen { amplitude } => Some(amplitude * x.sin() * y.sin()),
            _ => None,
        }
    }

    pub fn evaluate(&self, graph: &Graph) -> Result<Vec<f64>> {
        match self {
            InitialCondition::Nodal(v) if v.len() == graph.num_nodes() => Ok(v.clone()),
            InitialCondition::Nodal(v) => Err(Error::Shape(format!(
                "initial field has {} values, mesh has {} nodes",
                v.len(),
                graph.num_nodes()
            ))),
            InitialCondition::FilteredNoise { .. } => Err(Error::invalid(
                "filtered-noise initial conditions are built by the spectral solver",
            )),
            ic => Ok(graph.positions.iter().map(|&p| ic.value_at(p).unwrap()).collect()),
        }
    }
}

/// `T` frames of `N` nodal values, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub num_nodes: usize,
    pub frames: Vec<f64>,
    pub dt_solver: f64,
    pub dt_record: f64,
    pub pde: PdeSpec,
    pub ic: InitialCondition,
    pub seed: u64,
}

impl Trajectory {
    pub fn num_frames(&self) -> usize {
        if self.num_nodes == 0 {
            0
        } else {
            self.frames.len() / self.num_nodes
        }
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.frames[t * self.num_nodes..(t + 1) * self.num_nodes]
    }

    pub fn time(&self, t: usize) -> f64 {
        t as f64 * self.dt_record
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.frames
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Structural problems, empty when consistent.
    pub fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.num_nodes == 0 || self.frames.is_empty() {
            v.push("trajectory has no frames".to_string());
        } else if self.frames.len() % self.num_nodes != 0 {
            v.push(format!(
                "{} values do not split into frames of {}",
                self.frames.len(),
                self.num_nodes
            ));
        }
        if !(self.dt_solver > 0.0 && self.dt_record > 0.0) {
            v.push("non-positive time steps".to_string());
        } else {
            let r = self.dt_record / self.dt_solver;
            if r.round() < 1.0 || (r - r.round()).abs() > 1e-9 * r {
                v.push(format!(
                    "dt_record {} is not a multiple of dt_solver {}",
                    self.dt_record, self.dt_solver
                ));
            }
        }
        if let Some(i) = self.frames.iter().position(|x| !x.is_finite()) {
            v.push(format!("non-finite value at flat index {i}"));
        }
        v
    }
}

fn bc_id(c: &BoundaryCondition) -> (u8, f64) {
    match c {
        BoundaryCondition::Dirichlet(v) => (0, *v),
        BoundaryCondition::Neumann => (1, 0.0),
        BoundaryCondition::Periodic => (2, 0.0),
    }
}

pub fn encode_trajectory(t: &Trajectory) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(TRAJECTORY_MAGIC);
    w.usize(t.num_nodes);
    w.usize(t.num_frames());
    w.f64(t.dt_solver);
    w.f64(t.dt_record);
    w.u8(t.pde.kind.id());
    w.f64(t.pde.lambda1);
    w.f64(t.pde.lambda2);
    w.u64(t.seed);
    w.usize(t.pde.bc.len());
    for s in &t.pde.bc {
        let (k, v) = bc_id(&s.condition);
        w.str(&s.name);
        w.u8(k);
        w.f64(v);
    }
    w.u8(t.ic.id());
    w.f64_vec(&t.ic.params());
    w.f64s(&t.frames);
    seal(w.into_inner())
}

pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory> {
    let payload = unseal("trajectory", bytes)?;
    let mut r = ByteReader::new("trajectory", payload);
    r.expect_magic(TRAJECTORY_MAGIC)?;
    let n = r.usize()?;
    let frames = r.usize()?;
    let dt_solver = r.f64()?;
    let dt_record = r.f64()?;
    let kind_id = r.u8()?;
    let kind =
        PdeKind::from_id(kind_id).ok_or_else(|| Error::format("trajectory", format!("unknown PDE kind {kind_id}")))?;
    let lambda1 = r.f64()?;
    let lambda2 = r.f64()?;
    let seed = r.u64()?;
    let nb = r.count(10)?;
    let mut bc = Vec::with_capacity(nb);
    for _ in 0..nb {
        let name = r.str()?;
        let k = r.u8()?;
        let v = r.f64()?;
        let condition = match k {
            0 => BoundaryCondition::Dirichlet(v),
            1 => BoundaryCondition::Neumann,
            2 => BoundaryCondition::Periodic,
            _ => return Err(Error::format("trajectory", format!("unknown boundary kind {k}"))),
        };
        bc.push(SegmentCondition { name, condition });
    }
    let ic_id = r.u8()?;
    let ic = InitialCondition::from_parts(ic_id, r.f64_vec()?)?;
    let total = n
        .checked_mul(frames)
        .ok_or_else(|| Error::format("trajectory", "frame count overflows"))?;
    let data = r.f64s(total)?;
    r.finish()?;
    Ok(Trajectory {
        num_nodes: n,
        frames: data,
        dt_solver,
        dt_record,
        pde: PdeSpec {
            kind,
            lambda1,
            lambda2,
            bc,
        },
        ic,
        seed,
    })
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    write_atomic(path, &encode_trajectory(t))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    decode_trajectory(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            num_nodes: 3,
            frames: vec![0.0, 1.0, 2.0, 0.5, -1.5, 1e-300],
            dt_solver: 8e-4,
            dt_record: 1.6e-2,
            pde: PdeSpec::heat(vec![
                SegmentCondition {
                    name: "top".into(),
                    condition: BoundaryCondition::Dirichlet(200.0),
                },
                SegmentCondition {
                    name: "left".into(),
                    condition: BoundaryCondition::Neumann,
                },
            ]),
            ic: InitialCondition::Fourier([0.1, -0.2, 0.3, f64::MIN_POSITIVE]),
            seed: 99,
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let t = sample();
        let bytes = encode_trajectory(&t);
        let back = decode_trajectory(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(encode_trajectory(&back), bytes);
        assert!(t.check().is_empty());
    }

    #[test]
    fn corruption_and_truncation_are_caught() {
        let mut bytes = encode_trajectory(&sample());
        let k = bytes.len() - 40;
        bytes[k] ^= 0x10;
        assert!(matches!(decode_trajectory(&bytes), Err(Error::Checksum(_))));
        let bytes = encode_trajectory(&sample());
        assert!(decode_trajectory(&bytes[..bytes.len() - 9]).is_err());
    }
}
