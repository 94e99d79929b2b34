use crate::{output_path, Cli, CliError, Command, MeshOpts, TrainOpts, WindowOpts};
use graphpde::dataset::{assemble_features, SimGraph, Split, Window, WindowSpec};
use graphpde::fem::{
    parse_bc, read_trajectory, resolve_bc, simulate, write_trajectory, InitialCondition, PdeKind, PdeSpec, StepOptions,
    Trajectory,
};
use graphpde::graphnet::{load_checkpoint, EpochRecord};
use graphpde::mesh::{generate, read_graph, write_graph, DistortionParams};
use graphpde::pipeline::{
    ablation_csv, benchmark_csv, benchmark_matrix, checkpoint_spec, evaluate, frame_ablation, generate_simulations,
    loss_curve_csv, n_points_for_nodes, rollout, run_training, transfer_test, BenchmarkConfig, Dataset, RolloutOptions,
    Scenario, TrainConfig, TrainRun, SAME_GEOMETRY,
};
use graphpde::render::{field_csv, rasterize, to_ppm, triptych};
use graphpde::spectral::{simulate_ns, NsConfig, NsInitial, SIDE};
use graphpde::validate::validate_file;
use graphpde::{Domain, Graph};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

type Res<T> = Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Res<ExitCode> {
    match &cli.command {
        Command::Mesh(a) => mesh(cli, a),
        Command::Simulate(a) => simulate_cmd(cli, a),
        Command::Dataset(a) => dataset(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Transfer(a) => transfer(cli, a),
        Command::Ablate(a) => ablate(cli, a),
        Command::Rollout(a) => rollout_cmd(cli, a),
        Command::Bench(a) => bench(cli, a),
        Command::Plot(a) => plot(cli, a),
        Command::Validate(a) => validate(a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::new("usage", msg)
}

fn write(path: &Path, bytes: &[u8]) -> Res<()> {
    graphpde::io::write_atomic(path, bytes).map_err(CliError::from)
}

fn pde_kind(name: &str) -> Res<PdeKind> {
    match name {
        "heat" => Ok(PdeKind::Heat),
        "advection-diffusion" | "ad" => Ok(PdeKind::AdvectionDiffusion),
        "navier-stokes" | "ns" => Ok(PdeKind::NavierStokes),
        _ => Err(usage(format!(
            "unknown PDE {name:?} (heat, advection-diffusion, navier-stokes)"
        ))),
    }
}

fn default_domain(kind: PdeKind) -> &'static str {
    match kind {
        PdeKind::Heat => "square",
        PdeKind::AdvectionDiffusion => "channel",
        PdeKind::NavierStokes => "periodic-square",
    }
}

fn domain_of(name: &str, o: &MeshOpts) -> Res<Domain> {
    Ok(match name {
        "square" => Domain::unit_square(),
        "distorted" => Domain::distorted(DistortionParams {
            bump_amplitude: o.bump,
            notch_depth: o.notch_depth,
            notch_height: o.notch_height,
        })?,
        "channel" => Domain::periodic_channel(),
        "periodic-square" => Domain::periodic_square(SIDE)?,
        _ => {
            return Err(usage(format!(
                "unknown domain {name:?} (square, distorted, channel, periodic-square)"
            )))
        }
    })
}

fn point_count(domain: &Domain, o: &MeshOpts, default: usize, seed: u64) -> Res<usize> {
    match (o.points, o.nodes) {
        (Some(p), _) => Ok(p),
        (None, Some(n)) => Ok(n_points_for_nodes(domain, n, seed)?),
        (None, None) => Ok(default),
    }
}

fn sibling_graph(traj: &Path, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| traj.with_extension("pgn"))
}

fn parse_ic(text: &str) -> Res<InitialCondition> {
    let (name, arg) = text.split_once(':').unwrap_or((text, ""));
    let nums = || -> Res<Vec<f64>> {
        arg.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad number {v:?} in --ic {text:?}")))
            })
            .collect()
    };
    let one = || -> Res<f64> {
        match nums()?.as_slice() {
            [v] => Ok(*v),
            _ => Err(usage(format!("--ic {name} takes one number"))),
        }
    };
    Ok(match name {
        "zero" => InitialCondition::Constant(0.0),
        "constant" => InitialCondition::Constant(one()?),
        "sine" => InitialCondition::SineProduct { amplitude: one()? },
        "taylor-green" => InitialCondition::TaylorGreen { amplitude: one()? },
        "noise" => InitialCondition::FilteredNoise { grid: 64 },
        "fourier" => match nums()?.as_slice() {
            &[a, b, c, d] => InitialCondition::Fourier([a, b, c, d]),
            _ => return Err(usage("--ic fourier takes four numbers")),
        },
        _ => return Err(usage(format!("unknown initial condition {text:?}"))),
    })
}

fn train_config(o: &TrainOpts, seed: u64) -> Res<TrainConfig> {
    let mut c = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let entries = [
        ("epochs", o.epochs.map(|v| v.to_string())),
        ("lr", o.lr.map(|v| v.to_string())),
        ("lr_decay", o.lr_decay.map(|v| v.to_string())),
        ("decay_every", o.decay_every.map(|v| v.to_string())),
        ("batch_size", o.batch_size.map(|v| v.to_string())),
        ("layers", o.layers.map(|v| v.to_string())),
        ("hidden", o.hidden.map(|v| v.to_string())),
        ("message", o.message.map(|v| v.to_string())),
        ("latent", o.latent.map(|v| v.to_string())),
        ("aggregation", o.aggregation.clone()),
    ];
    for (k, v) in entries {
        if let Some(v) = v {
            c.set(k, &v)?;
        }
    }
    c.validate()?;
    Ok(c)
}

fn default_gap(kind: PdeKind) -> usize {
    match kind {
        PdeKind::NavierStokes => 1,
        _ => 20,
    }
}

fn window_spec(w: &WindowOpts, kind: PdeKind) -> Res<WindowSpec> {
    let gap = w.gap.unwrap_or(default_gap(kind));
    let spec = WindowSpec {
        n: w.n,
        m: w.m,
        gap,
        lead: w.lead.unwrap_or(gap),
    };
    spec.validate()?;
    Ok(spec)
}

fn mesh(cli: &Cli, a: &crate::MeshArgs) -> Res<()> {
    let d = domain_of(a.mesh.domain.as_deref().unwrap_or("square"), &a.mesh)?;
    let n = point_count(&d, &a.mesh, 200, cli.seed)?;
    let g = generate(&d, n, cli.seed)?;
    let out = output_path(&cli.out_dir, &a.output)?;
    write_graph(&out, &g)?;
    println!(
        "nodes={} edges={} triangles={} boundary={} -> {}",
        g.num_nodes(),
        g.edges.len(),
        g.triangles.len(),
        g.boundary.iter().filter(|b| **b != 0).count(),
        out.display()
    );
    Ok(())
}

fn simulate_cmd(cli: &Cli, a: &crate::SimulateArgs) -> Res<()> {
    let kind = pde_kind(&a.pde)?;
    let domain = domain_of(a.mesh.domain.as_deref().unwrap_or(default_domain(kind)), &a.mesh)?;
    let generated = a.graph.is_none();
    let graph: Graph = match &a.graph {
        Some(p) => read_graph(p)?,
        None => generate(&domain, point_count(&domain, &a.mesh, 200, cli.seed)?, cli.seed)?,
    };
    let traj = match kind {
        PdeKind::NavierStokes => {
            let d = NsConfig::default();
            let initial = match a.ic.as_deref().map(parse_ic).transpose()? {
                None | Some(InitialCondition::FilteredNoise { .. }) => NsInitial::FilteredNoise,
                Some(InitialCondition::TaylorGreen { amplitude }) => NsInitial::TaylorGreen { amplitude },
                Some(_) => return Err(usage("Navier–Stokes takes --ic noise or taylor-green:A")),
            };
            let cfg = NsConfig {
                grid: a.grid.unwrap_or(d.grid),
                nu: a.nu.unwrap_or(d.nu),
                t_end: a.t_end.unwrap_or(d.t_end),
                dt: a.dt.unwrap_or(d.dt),
                record_every: a.record_every.unwrap_or(d.record_every),
                seed: cli.seed,
                initial,
            };
            simulate_ns(&cfg, &graph)?
        }
        _ => {
            let (base, dt, every, t_end) = if kind == PdeKind::Heat {
                (Scenario::heat_on(domain.clone()), 8e-4, 1, 0.16)
            } else {
                (Scenario::advection_diffusion(), 1e-4, 10, 0.1)
            };
            let (mut pde, mut ic) = base.draw(cli.seed)?;
            let given = a.bc.as_deref().map(parse_bc).transpose()?;
            if kind == PdeKind::Heat {
                if let Some(bc) = &given {
                    pde = PdeSpec::heat(resolve_bc(&domain, bc)?);
                }
            } else {
                if let Some(bc) = &given {
                    pde.bc = resolve_bc(&domain, bc)?;
                }
                pde.lambda1 = a.lambda1.unwrap_or(pde.lambda1);
                pde.lambda2 = a.lambda2.unwrap_or(pde.lambda2);
            }
            if let Some(text) = &a.ic {
                ic = parse_ic(text)?;
            }
            let dt = a.dt.unwrap_or(dt);
            let every = a.record_every.unwrap_or(every);
            if every == 0 {
                return Err(usage("--record-every must be at least 1"));
            }
            let t_end = a.t_end.unwrap_or(t_end);
            simulate(
                &graph,
                &pde,
                &ic,
                t_end,
                dt,
                dt * every as f64,
                cli.seed,
                StepOptions::for_pde(kind),
            )?
        }
    };
    let out = output_path(&cli.out_dir, &a.output)?;
    write_trajectory(&out, &traj)?;
    if generated {
        let gpath = output_path(&cli.out_dir, &sibling_graph(&a.output, &a.graph_out))?;
        write_graph(&gpath, &graph)?;
    }
    let (lo, hi) = traj.value_range();
    println!(
        "pde={} nodes={} frames={} range=[{lo:e}, {hi:e}] -> {}",
        kind.name(),
        traj.num_nodes,
        traj.num_frames(),
        out.display()
    );
    Ok(())
}

fn scenario(kind: PdeKind, o: &MeshOpts, frames: Option<usize>, seed: u64) -> Res<Scenario> {
    let mut s = match kind {
        PdeKind::Heat => Scenario::heat_on(domain_of(o.domain.as_deref().unwrap_or("square"), o)?),
        PdeKind::AdvectionDiffusion => Scenario::advection_diffusion(),
        PdeKind::NavierStokes => Scenario::navier_stokes(),
    };
    if kind != PdeKind::Heat {
        if let Some(d) = &o.domain {
            if d != default_domain(kind) {
                return Err(usage(format!(
                    "{} runs on the {} domain only",
                    kind.name(),
                    default_domain(kind)
                )));
            }
        }
    }
    if o.points.is_some() || o.nodes.is_some() {
        let n = point_count(&s.domain(), o, s.n_points(), seed)?;
        s = s.with_n_points(n);
    }
    if let Some(t) = frames {
        s = s.with_frames(t);
    }
    Ok(s)
}

fn dataset(cli: &Cli, a: &crate::DatasetArgs) -> Res<()> {
    let kind = pde_kind(&a.pde)?;
    let scen = scenario(kind, &a.mesh, a.frames, cli.seed)?;
    let spec = window_spec(&a.window, kind)?;
    let ds = graphpde::pipeline::build_dataset(&scen, [a.train, a.val, a.test], cli.seed, spec, a.window.max_windows)?;
    let out = output_path(&cli.out_dir, &a.output)?;
    let hash = ds.save(&out)?;
    println!(
        "pde={} sims={} frames={} manifest-hash={hash} -> {}",
        kind.name(),
        ds.sims.len(),
        scen.frames(),
        out.display()
    );
    Ok(())
}

fn train(cli: &Cli, a: &crate::TrainArgs) -> Res<()> {
    let ds = Dataset::load(&a.data)?;
    let cfg = train_config(&a.train, cli.seed)?;
    let out = output_path(&cli.out_dir, &a.output)?;
    std::fs::create_dir_all(&out)?;
    let resume = a.resume.as_deref().map(load_checkpoint).transpose()?;
    let log = |r: &EpochRecord| {
        eprintln!(
            "epoch {} lr {:e} train {:e} val {:e}",
            r.epoch, r.lr, r.train_loss, r.val_loss
        );
    };
    let outcome = run_training(TrainRun {
        out_dir: Some(&out),
        resume,
        log: Some(&log),
        ..TrainRun::new(&cfg, &ds)
    })?;
    write(&out.join("loss.csv"), loss_curve_csv(outcome.history()).as_bytes())?;
    let best = outcome.best.history.last().map_or(f64::NAN, |h| h.val_loss);
    println!(
        "epochs={} best-val={best:e} -> {}",
        outcome.history().len(),
        out.display()
    );
    Ok(())
}

fn eval(cli: &Cli, a: &crate::EvalArgs) -> Res<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let split = Split::parse(&a.split)?;
    let mut ds = Dataset::load(&a.data)?;
    let spec = checkpoint_spec(&ckpt);
    if ds.spec != spec {
        ds = ds.rewindow(spec)?;
    }
    let report = evaluate(&ckpt.model, &ds.samples(split)?, SAME_GEOMETRY, "")?;
    let out = output_path(&cli.out_dir, &a.output)?;
    write(&out, report.to_csv().as_bytes())?;
    println!("{} -> {}", report.summary(), out.display());
    Ok(())
}

fn heat_checkpoint(kind: u8) -> Res<()> {
    match PdeKind::from_id(kind) {
        Some(PdeKind::Heat) => Ok(()),
        other => Err(CliError::new(
            "invalid_argument",
            format!(
                "geometry transfer needs a heat model, checkpoint is {:?}",
                other.map(PdeKind::name)
            ),
        )),
    }
}

fn transfer(cli: &Cli, a: &crate::TransferArgs) -> Res<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    heat_checkpoint(ckpt.task.pde_kind)?;
    let mut opts = a.mesh.clone();
    opts.domain = Some(opts.domain.unwrap_or_else(|| "distorted".into()));
    let scen = scenario(PdeKind::Heat, &opts, a.frames, cli.seed)?;
    let report = transfer_test(&ckpt, &scen, cli.seed, a.sims, a.max_windows)?;
    let out = output_path(&cli.out_dir, &a.output)?;
    write(&out, report.to_csv().as_bytes())?;
    println!("{} -> {}", report.summary(), out.display());
    Ok(())
}

fn parse_grid(text: &str) -> Res<Vec<(usize, usize)>> {
    text.split(',')
        .map(|p| {
            let (n, g) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| usage(format!("grid entry {p:?} is not n:gap")))?;
            let n = n.parse().map_err(|_| usage(format!("bad n in {p:?}")))?;
            let g = g.parse().map_err(|_| usage(format!("bad gap in {p:?}")))?;
            Ok((n, g))
        })
        .collect()
}

fn ablate(cli: &Cli, a: &crate::AblateArgs) -> Res<()> {
    let base = Dataset::load(&a.data)?;
    if base.pde != PdeKind::Heat {
        return Err(CliError::new(
            "invalid_argument",
            "the frame ablation runs on heat datasets",
        ));
    }
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => graphpde::pipeline::ABLATION_GRID.to_vec(),
    };
    let cfg = train_config(&a.train, cli.seed)?;
    let frames = base.sims.first().map_or(0, |s| s.traj.num_frames());
    let opts = MeshOpts {
        domain: Some(a.transfer_domain.clone()),
        nodes: None,
        points: None,
        bump: 0.2,
        notch_depth: 0.2,
        notch_height: 0.5,
    };
    let scen = scenario(PdeKind::Heat, &opts, Some(frames), cli.seed)?;
    let transfer = generate_simulations(&scen, Split::Test, 0, cli.seed, a.transfer_sims)?;
    let rows = frame_ablation(&cfg, &base, &transfer, &grid, a.lead)?;
    let out = output_path(&cli.out_dir, &a.output)?;
    let csv = ablation_csv(&rows);
    write(&out, csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn load_pair(traj: &Path, graph: &Option<PathBuf>) -> Res<(Graph, Trajectory)> {
    let t = read_trajectory(traj)?;
    let g = read_graph(&sibling_graph(traj, graph))?;
    Ok((g, t))
}

fn rollout_cmd(cli: &Cli, a: &crate::RolloutArgs) -> Res<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let (graph, traj) = load_pair(&a.traj, &a.graph)?;
    let sim = SimGraph::for_trajectory(graph, &traj)?;
    let opts = RolloutOptions {
        steps: a.steps,
        teacher_forcing: a.teacher_forcing,
        general_n: a.general_n,
    };
    let r = rollout(&ckpt.model, &sim, &traj, checkpoint_spec(&ckpt), a.start, opts)?;
    let mut csv = String::from("step,frame,mse,mse_normalized\n");
    for k in 0..r.frames.len() {
        writeln!(
            csv,
            "{},{},{:e},{:e}",
            k + 1,
            r.frames[k],
            r.step_mse[k],
            r.step_mse_normalized[k]
        )
        .unwrap();
    }
    let out = output_path(&cli.out_dir, &a.output)?;
    write(&out, csv.as_bytes())?;
    println!(
        "steps={} first-mse={:e} last-mse={:e} -> {}",
        r.frames.len(),
        r.step_mse[0],
        r.step_mse[r.step_mse.len() - 1],
        out.display()
    );
    Ok(())
}

fn bench(cli: &Cli, a: &crate::BenchArgs) -> Res<()> {
    let cfg = BenchmarkConfig {
        train: train_config(&a.train, cli.seed)?,
        resolutions: vec![("high".into(), a.high), ("low".into(), a.low)],
        counts: [a.train_sims, a.val_sims, a.test_sims],
        transfer_sims: a.transfer_sims,
        spec: window_spec(&a.window, PdeKind::Heat)?,
        max_windows: a.window.max_windows,
        frames: a.frames,
        seed: cli.seed,
    };
    let cells = benchmark_matrix(&cfg)?;
    let csv = benchmark_csv(&cells);
    let out = output_path(&cli.out_dir, &a.output)?;
    write(&out, csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn plot(cli: &Cli, a: &crate::PlotArgs) -> Res<()> {
    let (graph, traj) = load_pair(&a.traj, &a.graph)?;
    let frames = traj.num_frames();
    let frame = a.frame.unwrap_or(frames.saturating_sub(1));
    if frame >= frames {
        return Err(graphpde::Error::TrajectoryTooShort {
            required: frame + 1,
            available: frames,
        }
        .into());
    }
    let truth = traj.frame(frame).to_vec();
    let out = output_path(&cli.out_dir, &a.output)?;
    let (ppm, csv) = match &a.checkpoint {
        None => {
            let r = rasterize(&graph, &truth, a.width, a.height)?;
            (to_ppm(&r, None)?, field_csv(&graph, &truth)?)
        }
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            let spec = checkpoint_spec(&ckpt);
            let offset = (spec.n - 1) * spec.gap + spec.lead;
            let start = frame.checked_sub(offset).ok_or_else(|| {
                CliError::new(
                    "invalid_argument",
                    format!("frame {frame} has no input window; the first predictable frame is {offset}"),
                )
            })?;
            let w = Window {
                start,
                inputs: spec.inputs(start),
                targets: spec.targets(start),
            };
            let sim = Arc::new(SimGraph::for_trajectory(graph.clone(), &traj)?);
            let sample = assemble_features(&sim, &traj, &w, 0)?;
            let y = ckpt.model.forward(&sim.topology, &sample.nodes, &sim.edges)?;
            let pred: Vec<f64> = (0..graph.num_nodes()).map(|i| y[i * spec.m]).collect();
            let t = triptych(&graph, &pred, &truth, a.width, a.height)?;
            let mut csv = String::from("x,y,prediction,truth,error\n");
            for (i, p) in graph.positions.iter().enumerate() {
                writeln!(
                    csv,
                    "{:?},{:?},{:?},{:?},{:?}",
                    p[0],
                    p[1],
                    pred[i],
                    truth[i],
                    (pred[i] - truth[i]).abs()
                )
                .unwrap();
            }
            (t.to_ppm()?, csv)
        }
    };
    write(&out, &ppm)?;
    let csv_path = out.with_extension("csv");
    write(&csv_path, csv.as_bytes())?;
    println!("frame={frame} -> {} {}", out.display(), csv_path.display());
    Ok(())
}

fn validate(a: &crate::ValidateArgs) -> Res<()> {
    let mut failed = 0;
    for f in &a.files {
        match validate_file(f) {
            Ok(r) => {
                if !r.is_ok() {
                    failed += 1;
                }
                println!("{}: {r}", f.display());
            }
            Err(e) => {
                failed += 1;
                println!("{}: {e}", f.display());
            }
        }
    }
    if failed > 0 {
        return Err(CliError::new(
            "validation",
            format!("{failed} of {} files failed validation", a.files.len()),
        ));
    }
    Ok(())
}
