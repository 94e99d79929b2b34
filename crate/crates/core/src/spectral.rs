//! Pseudo-spectral vorticity solver for 2-D incompressible flow on the
//! periodic square `[0, 2 pi]^2`.
//!
//! Fields live on a `G x G` grid stored row-major as `f[iy * G + ix]` with
//! `x = 2 pi ix / G`. The viscous term is treated with Crank–Nicolson and
//! the advective term explicitly, dealiased by the 2/3 rule.

use crate::error::{Error, Result};
use crate::fem::{InitialCondition, PdeSpec, Trajectory};
use crate::mesh::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

pub const SIDE: f64 = TAU;

/// Largest retained wavenumber, `floor(2/3 * G/2)`.
pub fn cutoff(grid: usize) -> usize {
    grid / 3
}

fn check_grid(grid: usize, min: usize) -> Result<()> {
    if grid < min || !grid.is_power_of_two() {
        return Err(Error::invalid(format!(
            "grid size {grid} must be a power of two >= {min}"
        )));
    }
    Ok(())
}

pub struct SpectralSolver {
    pub grid: usize,
    pub nu: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed wavenumber per index.
    k: Vec<f64>,
    /// Derivative wavenumber; zero at Nyquist so real fields stay real.
    kd: Vec<f64>,
    keep: Vec<bool>,
}

impl SpectralSolver {
    pub fn new(grid: usize, nu: f64) -> Result<Self> {
        check_grid(grid, 8)?;
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("viscosity must be non-negative, got {nu}")));
        }
        let mut planner = FftPlanner::new();
        let k: Vec<f64> = (0..grid)
            .map(|m| {
                if m <= grid / 2 {
                    m as f64
                } else {
                    m as f64 - grid as f64
                }
            })
            .collect();
        let kd = k
            .iter()
            .enumerate()
            .map(|(m, &v)| if m == grid / 2 { 0.0 } else { v })
            .collect();
        let c = cutoff(grid) as f64;
        Ok(Self {
            grid,
            nu,
            fwd: planner.plan_fft_forward(grid),
            inv: planner.plan_fft_inverse(grid),
            keep: k.iter().map(|v| v.abs() <= c).collect(),
            k,
            kd,
        })
    }

    fn fft2(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let g = self.grid;
        plan.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); g];
        for ix in 0..g {
            for iy in 0..g {
                col[iy] = data[iy * g + ix];
            }
            plan.process(&mut col);
            for iy in 0..g {
                data[iy * g + ix] = col[iy];
            }
        }
    }

    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut d, &self.fwd);
        d
    }

    pub fn inverse_complex(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let mut d = spec.to_vec();
        self.fft2(&mut d, &self.inv);
        let s = 1.0 / (self.grid * self.grid) as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        self.inverse_complex(spec).iter().map(|c| c.re).collect()
    }

    fn wavevector(&self, idx: usize) -> (f64, f64) {
        (self.k[idx % self.grid], self.k[idx / self.grid])
    }

    fn k2(&self, idx: usize) -> f64 {
        let (kx, ky) = self.wavevector(idx);
        kx * kx + ky * ky
    }

    /// Spectral derivative `d/dx` (axis 0) or `d/dy` (axis 1).
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        let g = self.grid;
        spec.iter()
            .enumerate()
            .map(|(idx, &z)| {
                let k = if axis == 0 { self.kd[idx % g] } else { self.kd[idx / g] };
                Complex64::new(0.0, k) * z
            })
            .collect()
    }

    /// Streamfunction `psi` with `laplacian(psi) = zeta`, zero mean.
    pub fn streamfunction(&self, zeta_hat: &[Complex64]) -> Vec<Complex64> {
        zeta_hat
            .iter()
            .enumerate()
            .map(|(idx, &z)| {
                let k2 = self.k2(idx);
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    -z / k2
                }
            })
            .collect()
    }

    pub fn velocity_spectra(&self, zeta_hat: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let psi = self.streamfunction(zeta_hat);
        let u = self.derivative(&psi, 1).into_iter().map(|c| -c).collect();
        let v = self.derivative(&psi, 0);
        (u, v)
    }

    /// `u = -d_y psi`, `v = d_x psi` on the grid.
    pub fn velocity_from_vorticity(&self, zeta_hat: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let (u, v) = self.velocity_spectra(zeta_hat);
        (self.inverse(&u), self.inverse(&v))
    }

    /// Dealiased `-(u d_x zeta + v d_y zeta)` in spectral space.
    pub fn nonlinear_term(&self, zeta_hat: &[Complex64]) -> Vec<Complex64> {
        let (u, v) = self.velocity_from_vorticity(zeta_hat);
        let zx = self.inverse(&self.derivative(zeta_hat, 0));
        let zy = self.inverse(&self.derivative(zeta_hat, 1));
        let adv: Vec<f64> = (0..u.len()).map(|i| -(u[i] * zx[i] + v[i] * zy[i])).collect();
        let mut p = self.forward(&adv);
        self.dealias(&mut p);
        p
    }

    /// Zeroes modes beyond the 2/3 cutoff in either direction.
    pub fn dealias(&self, spec: &mut [Complex64]) {
        let g = self.grid;
        for (idx, z) in spec.iter_mut().enumerate() {
            if !(self.keep[idx % g] && self.keep[idx / g]) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Crank–Nicolson update with a given explicit term `p_hat`.
    pub fn advance(&self, zeta_hat: &mut [Complex64], p_hat: &[Complex64], dt: f64) {
        for (idx, z) in zeta_hat.iter_mut().enumerate() {
            let a = 0.5 * self.nu * dt * self.k2(idx);
            *z = (p_hat[idx] * dt + *z * (1.0 - a)) / (1.0 + a);
        }
    }

    pub fn step(&self, zeta_hat: &mut [Complex64], dt: f64) {
        let p = self.nonlinear_term(zeta_hat);
        self.advance(zeta_hat, &p, dt);
    }

    /// Sum of squared coefficient magnitudes.
    pub fn enstrophy(zeta_hat: &[Complex64]) -> f64 {
        zeta_hat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Max |d_x u + d_y v| of spectral velocity fields.
    pub fn divergence(&self, u_hat: &[Complex64], v_hat: &[Complex64]) -> f64 {
        let dx = self.inverse_complex(&self.derivative(u_hat, 0));
        let dy = self.inverse_complex(&self.derivative(v_hat, 1));
        dx.iter().zip(&dy).map(|(a, b)| (a + b).norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `z[-k] = conj(z[k])`.
    pub fn symmetry_defect(&self, spec: &[Complex64]) -> f64 {
        let g = self.grid;
        let mut worst = 0.0f64;
        for iy in 0..g {
            for ix in 0..g {
                let a = spec[iy * g + ix];
                let b = spec[((g - iy) % g) * g + (g - ix) % g];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

/// Grid coordinates of index `idx`.
pub fn grid_point(grid: usize, idx: usize) -> [f64; 2] {
    let h = SIDE / grid as f64;
    [(idx % grid) as f64 * h, (idx / grid) as f64 * h]
}

pub fn grid_field(grid: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..grid * grid)
        .map(|i| {
            let [x, y] = grid_point(grid, i);
            f(x, y)
        })
        .collect()
}

/// Uniform `[0, 5]` noise with every mode above the 2/3 cutoff removed.
pub fn random_filtered_ic(grid: usize, seed: u64) -> Result<Vec<f64>> {
    check_grid(grid, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..grid * grid).map(|_| rng.random_range(0.0..5.0)).collect();
    let s = SpectralSolver::new(grid, 0.0)?;
    let mut spec = s.forward(&noise);
    s.dealias(&mut spec);
    Ok(s.inverse(&spec))
}

pub fn taylor_green(grid: usize, amplitude: f64) -> Vec<f64> {
    grid_field(grid, |x, y| amplitude * x.sin() * y.sin())
}

/// Periodic bilinear interpolation of a grid field onto graph nodes.
pub fn sample_to_graph(field: &[f64], grid: usize, graph: &Graph) -> Result<Vec<f64>> {
    if field.len() != grid * grid {
        return Err(Error::Shape(format!(
            "field has {} values for a {grid}x{grid} grid",
            field.len()
        )));
    }
    let h = SIDE / grid as f64;
    let locate = |x: f64| {
        let mut f = x / h;
        if (f - f.round()).abs() < 1e-9 {
            f = f.round();
        }
        let i = f.floor();
        let w = f - i;
        let i0 = (i as i64).rem_euclid(grid as i64) as usize;
        (i0, (i0 + 1) % grid, w)
    };
    Ok(graph
        .positions
        .iter()
        .map(|p| {
            let (x0, x1, wx) = locate(p[0]);
            let (y0, y1, wy) = locate(p[1]);
            let at = |ix: usize, iy: usize| field[iy * grid + ix];
            (1.0 - wy) * ((1.0 - wx) * at(x0, y0) + wx * at(x1, y0)) + wy * ((1.0 - wx) * at(x0, y1) + wx * at(x1, y1))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NsInitial {
    FilteredNoise,
    TaylorGreen { amplitude: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsConfig {
    pub grid: usize,
    pub nu: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub seed: u64,
    pub initial: NsInitial,
}

impl Default for NsConfig {
    fn default() -> Self {
        Self {
            grid: 64,
            nu: 3e-4,
            t_end: 1.0,
            dt: 2e-3,
            record_every: 25,
            seed: 0,
            initial: NsInitial::FilteredNoise,
        }
    }
}

/// Vorticity trajectory sampled on `graph` nodes.
pub fn simulate_ns(cfg: &NsConfig, graph: &Graph) -> Result<Trajectory> {
    if !(cfg.dt > 0.0 && cfg.t_end >= 0.0 && cfg.record_every >= 1) {
        return Err(Error::invalid("need dt > 0, t_end >= 0 and record_every >= 1"));
    }
    let solver = SpectralSolver::new(cfg.grid, cfg.nu)?;
    let (field, ic) = match cfg.initial {
        NsInitial::FilteredNoise => (
            random_filtered_ic(cfg.grid, cfg.seed)?,
            InitialCondition::FilteredNoise { grid: cfg.grid },
        ),
        NsInitial::TaylorGreen { amplitude } => (
            taylor_green(cfg.grid, amplitude),
            InitialCondition::TaylorGreen { amplitude },
        ),
    };
    let dt_record = cfg.dt * cfg.record_every as f64;
    let frames = (cfg.t_end / dt_record + 1e-9).floor() as usize + 1;
    let mut zeta_hat = solver.forward(&field);
    let n = graph.num_nodes();
    let mut data = Vec::with_capacity(frames * n);
    data.extend(sample_to_graph(&field, cfg.grid, graph)?);
    for _ in 1..frames {
        for _ in 0..cfg.record_every {
            solver.step(&mut zeta_hat, cfg.dt);
        }
        data.extend(sample_to_graph(&solver.inverse(&zeta_hat), cfg.grid, graph)?);
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "vorticity became non-finite at frame {}",
            i / n.max(1)
        )));
    }
    Ok(Trajectory {
        num_nodes: n,
        frames: data,
        dt_solver: cfg.dt,
        dt_record,
        pde: PdeSpec::navier_stokes(cfg.nu),
        ic,
        seed: cfg.seed,
    })
}
