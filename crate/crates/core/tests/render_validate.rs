use graphpde::dataset::WindowSpec;
use graphpde::fem::{encode_trajectory, write_trajectory};
use graphpde::graphnet::{save_checkpoint, AdamState, ArchSpec, Checkpoint, Model, RngState, TaskMeta};
use graphpde::mesh::{encode_graph, generate, lattice_points, triangulate_domain, write_graph};
use graphpde::pipeline::{build_dataset, Scenario};
use graphpde::render::*;
use graphpde::validate::{validate_file, ArtifactKind};
use graphpde::{Domain, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice() -> graphpde::Graph {
    let d = Domain::unit_square();
    triangulate_domain(&d, &lattice_points(&d, 5, 5)).unwrap()
}

#[test]
fn constant_field_is_uniform() {
    let g = generate(&Domain::unit_square(), 60, 2).unwrap();
    let r = rasterize(&g, &vec![3.5; g.num_nodes()], 40, 30).unwrap();
    assert!(r.values.iter().all(|v| *v == 3.5 || v.is_nan()));
    assert!(
        r.values.iter().all(|v| !v.is_nan()),
        "the square mesh covers its bounding box"
    );
    let (_, _, px) = decode_ppm(&to_ppm(&r, None).unwrap()).unwrap();
    assert!(px.chunks(3).all(|c| c == &px[0..3]));
}

#[test]
fn vertices_and_linear_fields_are_exact() {
    let g = lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let field: Vec<f64> = (0..g.num_nodes()).map(|_| rng.random_range(-5.0..5.0)).collect();
    let r = rasterize(&g, &field, 9, 9).unwrap();
    for (k, p) in g.positions.iter().enumerate() {
        let col = (p[0] * 8.0).round() as usize;
        let row = ((1.0 - p[1]) * 8.0).round() as usize;
        assert!((r.get(col, row) - field[k]).abs() <= 1e-9, "node {k}");
    }
    let linear: Vec<f64> = g.positions.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 0.5).collect();
    let r = rasterize(&g, &linear, 33, 17).unwrap();
    for row in 0..17 {
        for col in 0..33 {
            let p = pixel_position(bounding_box(&g), 33, 17, col, row);
            assert!((r.get(col, row) - (2.0 * p[0] - 3.0 * p[1] + 0.5)).abs() <= 1e-9);
        }
    }
}

#[test]
fn triptych_error_panel() {
    let g = generate(&Domain::distorted(Default::default()).unwrap(), 80, 4).unwrap();
    let pred: Vec<f64> = g.positions.iter().map(|p| p[0] * p[1]).collect();
    let truth: Vec<f64> = g.positions.iter().map(|p| p[0] + 0.1).collect();
    let t = triptych(&g, &pred, &truth, 30, 20).unwrap();
    let mut outside = 0;
    for k in 0..t.error.values.len() {
        let (p, q, e) = (t.prediction.values[k], t.truth.values[k], t.error.values[k]);
        if p.is_nan() {
            outside += 1;
            assert!(q.is_nan() && e.is_nan());
        } else {
            assert_eq!(e, (p - q).abs());
        }
    }
    assert!(outside > 0, "the distorted domain leaves background pixels");
    let (w, h, _) = decode_ppm(&t.to_ppm().unwrap()).unwrap();
    assert_eq!((w, h), (3 * 30 + 8, 20));
    assert!(matches!(rasterize(&g, &[1.0], 4, 4), Err(Error::Shape(_))));
    assert_eq!(field_csv(&g, &pred).unwrap().lines().count(), g.num_nodes() + 1);
}

fn checkpoint() -> Checkpoint {
    let model = Model::new(
        ArchSpec {
            hidden: 8,
            message: 8,
            latent: 4,
            ..ArchSpec::new(2, 1, 0)
        },
        1,
    )
    .unwrap();
    Checkpoint {
        optimizer: AdamState::new(model.params.len()),
        model,
        epoch: 0,
        rng: RngState::capture(&ChaCha8Rng::seed_from_u64(1)),
        task: TaskMeta {
            pde_kind: 0,
            gap: 1,
            lead: 1,
        },
        config: String::new(),
        history: Vec::new(),
    }
}

#[test]
fn fresh_files_validate() {
    let dir = tempfile::tempdir().unwrap();
    let (g, t) = Scenario::heat_square().with_n_points(30).with_frames(5).run(1).unwrap();
    write_graph(&dir.path().join("g.pgn"), &g).unwrap();
    write_trajectory(&dir.path().join("t.ptr"), &t).unwrap();
    save_checkpoint(&dir.path().join("m.pmp"), &checkpoint()).unwrap();
    let ds = build_dataset(
        &Scenario::heat_square().with_n_points(20).with_frames(6),
        [1, 1, 1],
        0,
        WindowSpec::uniform(2, 1, 1),
        3,
    )
    .unwrap();
    ds.save(&dir.path().join("data")).unwrap();
    for (name, kind) in [
        ("g.pgn", ArtifactKind::Graph),
        ("t.ptr", ArtifactKind::Trajectory),
        ("m.pmp", ArtifactKind::Checkpoint),
        ("data/manifest.txt", ArtifactKind::Manifest),
    ] {
        let r = validate_file(&dir.path().join(name)).unwrap();
        assert_eq!(r.kind, Some(kind));
        assert!(r.is_ok(), "{name}: {r}");
        assert!(r.to_string().ends_with("OK"));
    }
}

#[test]
fn corruption_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (g, t) = Scenario::heat_square().with_n_points(30).with_frames(5).run(1).unwrap();

    let mut bytes = encode_trajectory(&t);
    let frame_byte = bytes.len() - 32 - 8 * t.frames.len() / 2;
    bytes[frame_byte] ^= 0x10;
    let p = dir.path().join("t.ptr");
    std::fs::write(&p, &bytes).unwrap();
    let r = validate_file(&p).unwrap();
    assert!(r.violations.iter().any(|v| v.contains("checksum")), "{r}");

    let mut bad = g.clone();
    let k = bad.edges.iter().position(|e| e[0] < e[1]).unwrap();
    let [i, j] = bad.edges[k];
    let rev = bad.edges.iter().position(|e| *e == [j, i]).unwrap();
    bad.edges.remove(rev);
    bad.shifts.remove(rev);
    let p = dir.path().join("g.pgn");
    std::fs::write(&p, encode_graph(&bad)).unwrap();
    let r = validate_file(&p).unwrap();
    assert!(
        r.violations
            .iter()
            .any(|v| v.contains(&format!("edge ({i}, {j}) has no reverse edge"))),
        "{r}"
    );

    let p = dir.path().join("junk.bin");
    std::fs::write(&p, b"XXXXjunkjunkjunk").unwrap();
    let r = validate_file(&p).unwrap();
    assert_eq!(r.kind, None);
    assert!(!r.is_ok());

    let ds = build_dataset(
        &Scenario::heat_square().with_n_points(20).with_frames(6),
        [1, 1, 1],
        0,
        WindowSpec::uniform(2, 1, 1),
        3,
    )
    .unwrap();
    let data = dir.path().join("data");
    ds.save(&data).unwrap();
    std::fs::remove_file(data.join("sim00001.ptr")).unwrap();
    let r = validate_file(&data.join("manifest.txt")).unwrap();
    assert!(r.violations.iter().any(|v| v.contains("sim00001.ptr")), "{r}");

    assert!(matches!(
        validate_file(&dir.path().join("absent.pgn")),
        Err(Error::MissingFile(_))
    ));
}
