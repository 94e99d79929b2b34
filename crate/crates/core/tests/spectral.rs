use graphpde::mesh::{generate, lattice_points, triangulate_domain, Domain};
use graphpde::spectral::*;

fn fitted_rate(times: &[f64], amps: &[f64]) -> f64 {
    let n = times.len() as f64;
    let ly: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = times.iter().zip(&ly).map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    num / den
}

#[test]
fn taylor_green_decays_exactly() {
    let (g, nu, dt) = (64, 3e-4, 1e-3);
    let s = SpectralSolver::new(g, nu).unwrap();
    let z0 = taylor_green(g, 2.0);
    let mut zh = s.forward(&z0);
    let (mut ts, mut amps) = (vec![0.0], vec![2.0]);
    for step in 1..=5000 {
        s.step(&mut zh, dt);
        if step % 250 == 0 {
            let z = s.inverse(&zh);
            let proj: f64 = z.iter().zip(&z0).map(|(a, b)| a * b).sum::<f64>() / z0.iter().map(|b| b * b).sum::<f64>();
            ts.push(step as f64 * dt);
            amps.push(2.0 * proj);
            if step == 1000 {
                let exact = (-2.0 * nu * 1.0f64).exp();
                assert!(z.iter().zip(&z0).all(|(a, b)| (a - exact * b).abs() <= 1e-6 * 2.0));
            }
        }
    }
    let rate = fitted_rate(&ts, &amps);
    assert!((rate / (-2.0 * nu) - 1.0).abs() < 0.01, "{rate}");
}

#[test]
fn interpolation_exactness() {
    let d = Domain::periodic_square(SIDE).unwrap();
    let grid = 16;
    let pts = lattice_points(&d, grid, grid);
    let g = triangulate_domain(&d, &pts).unwrap();
    let field = grid_field(grid, |x, y| (x * 3.0).sin() + y * y);
    let on_nodes = sample_to_graph(&field, grid, &g).unwrap();
    for (i, p) in g.positions.iter().enumerate() {
        let ix = (p[0] / SIDE * grid as f64).round() as usize % grid;
        let iy = (p[1] / SIDE * grid as f64).round() as usize % grid;
        assert_eq!(on_nodes[i], field[iy * grid + ix]);
    }
    // Linear in x inside one cell.
    let lin = grid_field(grid, |x, _| 2.0 * x + 1.0);
    let mut probe = g.clone();
    let h = SIDE / grid as f64;
    probe.positions = vec![[3.3 * h, 1.7 * h], [0.25 * h, 5.0 * h]];
    let v = sample_to_graph(&lin, grid, &probe).unwrap();
    assert!((v[0] - (2.0 * 3.3 * h + 1.0)).abs() < 1e-12);
    assert!((v[1] - (2.0 * 0.25 * h + 1.0)).abs() < 1e-12);
}

#[test]
fn smooth_field_interpolation_error() {
    let d = Domain::periodic_square(SIDE).unwrap();
    let g = generate(&d, 300, 1).unwrap();
    let field = grid_field(256, |x, y| x.cos() * y.cos());
    let v = sample_to_graph(&field, 256, &g).unwrap();
    let worst = g
        .positions
        .iter()
        .zip(&v)
        .map(|(p, v)| (v - p[0].cos() * p[1].cos()).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn graph_trajectories() {
    let d = Domain::periodic_square(SIDE).unwrap();
    let g = generate(&d, 200, 2).unwrap();
    let cfg = NsConfig {
        grid: 64,
        nu: 3e-4,
        t_end: 1.0,
        dt: 1e-3,
        record_every: 100,
        seed: 0,
        initial: NsInitial::TaylorGreen { amplitude: 2.0 },
    };
    let t = simulate_ns(&cfg, &g).unwrap();
    assert_eq!(t.num_frames(), 11);
    let decay = (-2.0 * 3e-4 * 1.0f64).exp();
    let (f0, f1) = (t.frame(0), t.frame(10));
    let num: f64 = f1.iter().zip(f0).map(|(a, b)| (a - decay * b).powi(2)).sum();
    let den: f64 = f0.iter().map(|b| (decay * b).powi(2)).sum();
    assert!((num / den).sqrt() <= 1e-4);

    let noisy = NsConfig {
        initial: NsInitial::FilteredNoise,
        t_end: 0.5,
        record_every: 50,
        seed: 3,
        ..cfg
    };
    let t = simulate_ns(&noisy, &g).unwrap();
    assert_eq!(t.num_frames(), 11);
    let peak = |k: usize| t.frame(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Soft check: decaying turbulence does not amplify the vorticity peak.
    for k in 1..t.num_frames() {
        assert!(peak(k) <= peak(0) * 1.05, "frame {k}: {} vs {}", peak(k), peak(0));
    }
    assert_eq!(t, simulate_ns(&noisy, &g).unwrap());
}
