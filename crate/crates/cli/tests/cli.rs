use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use svcnav::scenes::{Scene, SphereWorldSpec};
use svcnav::sim::{InitialState, Region, SamplingSpec};
use svcnav::{ControllerConfig, ControllerKind, Environment, Mode, Point, Vector};
use svcnav_cli::field::{export_field, field_svg};
use svcnav_cli::manifest::{FieldSpec, Format, Manifest, Outputs, SceneSource, SimSection};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svcnav"))
        .args(args)
        .output()
        .unwrap()
}

fn repo_manifest(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(name)
}

/// Copies a shipped manifest into `dir` so outputs land there.
fn staged(dir: &Path, name: &str) -> PathBuf {
    let target = dir.join(name);
    fs::copy(repo_manifest(name), &target).unwrap();
    target
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = bin(&[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn validate_reports_overlapping_balls() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.json");
    fs::write(
        &path,
        r#"{"workspace": {"center": [0, 0], "radius": 10},
            "obstacles": [
              {"type": "ball", "center": [0, 0], "radius": 1},
              {"type": "ball", "center": [1.5, 0], "radius": 1},
              {"type": "ball", "center": [5, 5], "radius": 0.5}
            ]}"#,
    )
    .unwrap();
    let o = bin(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("obstacles 0 and 1 overlap"), "{stderr}");
    assert!(!stderr.contains("obstacles 0 and 2"));

    assert_eq!(code(&bin(&["validate", "fig2"])), 0);
    assert_eq!(code(&bin(&["validate", "no-such-scene"])), 1);
}

#[test]
fn malformed_manifests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let text = fs::read_to_string(repo_manifest("fig2.json")).unwrap();
    fs::write(&path, text.replace("\"sim\"", "\"simulation\"")).unwrap();
    let o = bin(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
    assert_eq!(code(&bin(&["simulate", "/nonexistent/manifest.json"])), 1);
}

#[test]
fn corridor_simulation_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = staged(dir.path(), "corridor.json");
    let o = bin(&["simulate", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out/corridor");
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,x_2,distance,lyapunov,mode\n"));
    let svg = fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"], "converged");
    assert!(summary["audit"]["min_distance"].as_f64().unwrap() >= 0.18);
}

#[test]
fn batch_equilibria_and_lidar_commands() {
    let dir = tempfile::tempdir().unwrap();
    let m = staged(dir.path(), "fig2-batch.json");
    assert_eq!(code(&bin(&["batch", m.to_str().unwrap()])), 0);
    let batch: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/fig2-batch/batch.json")).unwrap())
            .unwrap();
    assert_eq!(batch["runs"], 200);
    assert_eq!(batch["converged"], 200);

    let m = staged(dir.path(), "sphere-world.json");
    let o = bin(&["equilibria", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_slice(&o.stdout[..o.stdout.iter().rposition(|&b| b == b'}').unwrap() + 1]).unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 4);

    let m = staged(dir.path(), "corridor.json");
    let o = bin(&["lidar-debug", m.to_str().unwrap(), "--at", "0,3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scan = fs::read_to_string(dir.path().join("out/corridor/scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 361);
}

fn fig2_manifest() -> Manifest {
    Manifest::parse(&fs::read_to_string(repo_manifest("fig2.json")).unwrap()).unwrap()
}

#[test]
fn field_modes_follow_the_band() {
    let m = fig2_manifest();
    let env: Environment = svcnav::scenes::fig2();
    let goal = Point::from([0.0, 0.0]);
    let center = Vector::from([2.0, 2.0]);

    let smooth = export_field(&env, &m.sim_config(), m.field.as_ref().unwrap()).unwrap();
    let mut blended = 0;
    for c in smooth.cells.iter().filter(|c| !c.masked) {
        let x = Point::from(c.position);
        let d = c.distance.unwrap();
        let g = (&x - &center).normalized().unwrap();
        let inward = (&goal - &x).dot(&g) < 0.0;
        let mode = c.mode.unwrap();
        let expected = if d <= 0.4 && inward {
            if d <= 0.2 {
                Mode::FullProjection
            } else {
                Mode::Blending
            }
        } else {
            Mode::Nominal
        };
        assert_eq!(mode, expected, "cell {:?} at distance {d}", c.position);
        blended += usize::from(mode != Mode::Nominal);
    }
    assert!(blended > 0);

    // At spacing 1/4 four grid points lie on the circle; only (2.5, 2) and
    // (2, 2.5) see κ₀ pointing into the ball.
    let mut spec = m.field.clone().unwrap();
    spec.resolution = [25, 25];
    spec.kind = Some(ControllerKind::DiscontinuousExact);
    let exact = export_field(&env, &m.sim_config(), &spec).unwrap();
    let projected: Vec<[f64; 2]> = exact
        .cells
        .iter()
        .filter(|c| c.mode == Some(Mode::FullProjection))
        .map(|c| c.position)
        .collect();
    assert_eq!(projected, vec![[2.5, 2.0], [2.0, 2.5]]);
}

#[test]
fn field_speed_vanishes_only_at_the_goal_and_the_saddle() {
    let m = fig2_manifest();
    let env: Environment = svcnav::scenes::fig2();
    let mut spec = m.field.clone().unwrap();
    spec.kind = Some(ControllerKind::DiscontinuousExact);
    spec.resolution = [61, 61];
    let grid = export_field(&env, &m.sim_config(), &spec).unwrap();
    let saddle = 1.0 + 1.0 / (4.0 * 2f64.sqrt());
    for c in grid.cells.iter().filter(|c| !c.masked) {
        let v = c.velocity.unwrap();
        if v[0].hypot(v[1]) < 1e-3 {
            let p = c.position;
            let near_goal = p[0].hypot(p[1]) < 1e-3;
            let near_saddle = (p[0] - 2.0 * saddle).hypot(p[1] - 2.0 * saddle) < 0.15;
            assert!(near_goal || near_saddle, "{p:?}");
        }
    }
}

#[test]
fn field_svg_is_byte_stable() {
    let m = fig2_manifest();
    let env: Environment = svcnav::scenes::fig2();
    let mut spec = m.field.clone().unwrap();
    spec.resolution = [9, 9];
    let svg = || field_svg(&export_field(&env, &m.sim_config(), &spec).unwrap(), &env);
    let first = svg();
    assert_eq!(first, svg());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig2-field.svg");
    if std::env::var_os("SVCNAV_BLESS").is_some() {
        fs::write(&golden, &first).unwrap();
    }
    assert_eq!(first, fs::read_to_string(golden).unwrap());
}

#[test]
fn shipped_manifests_round_trip() {
    for name in [
        "corridor.json",
        "fig2.json",
        "fig2-batch.json",
        "sphere-world.json",
    ] {
        let m = Manifest::parse(&fs::read_to_string(repo_manifest(name)).unwrap()).unwrap();
        assert_eq!(Manifest::parse(&m.to_json()).unwrap(), m, "{name}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    -20.0..20.0f64
}

fn scene() -> impl Strategy<Value = SceneSource> {
    prop_oneof![
        Just(SceneSource::Builtin(Scene::Fig2)),
        (finite(), finite(), 0.0..2.0f64).prop_map(|(a, b, r)| SceneSource::Builtin(Scene::PaperCorridor {
            x_range: [a.min(b), a.max(b)],
            sensing_radius: r,
        })),
        (
            2usize..4,
            0usize..6,
            any::<u64>(),
            prop::option::of(prop::collection::vec(finite(), 2))
        )
            .prop_map(|(dim, m, seed, goal)| {
                let mut spec = SphereWorldSpec::new(dim, m, seed);
                spec.goal = goal;
                SceneSource::Builtin(Scene::SphereWorld(spec))
            }),
        "[a-z]{1,8}\\.json".prop_map(|f| SceneSource::File { file: f.into() }),
    ]
}

fn initial() -> impl Strategy<Value = Option<InitialState<f64>>> {
    prop_oneof![
        Just(None),
        (finite(), finite()).prop_map(|(a, b)| Some(InitialState::Point(Point::from([a, b])))),
        (0usize..500, any::<u64>(), finite(), finite()).prop_map(|(count, seed, a, b)| {
            Some(InitialState::Sample(SamplingSpec {
                count,
                seed,
                region: Region {
                    min: Point::from([a.min(b), a.min(b)]),
                    max: Point::from([a.max(b), a.max(b)]),
                },
            }))
        }),
    ]
}

fn kind() -> impl Strategy<Value = ControllerKind> {
    prop_oneof![
        Just(ControllerKind::DiscontinuousExact),
        Just(ControllerKind::SmoothExact),
        Just(ControllerKind::SmoothLidar),
    ]
}

prop_compose! {
    fn manifest()(
        scene in scene(),
        goal in (finite(), finite()),
        gains in (0.01..5.0f64, 0.01..1.0f64, 0.01..1.0f64, 0.01..2.0f64),
        kind in kind(),
        initial in initial(),
        dt in 1e-5..1e-1f64,
        max_time in 0.0..1e3f64,
        beams in 8usize..1000,
        field in prop::option::of((finite(), finite(), 1usize..100, 1usize..100, prop::option::of(kind()))),
        formats in prop::sample::subsequence(vec![Format::Csv, Format::Svg, Format::Json], 0..=3),
        directory in "[a-z]{1,6}(/[a-z]{1,6})?",
    ) -> Manifest {
        Manifest {
            format_version: 1,
            scene,
            controller: ControllerConfig::new([goal.0, goal.1], gains.0, gains.1, gains.2, gains.3),
            sim: SimSection { kind, initial, dt, max_time, goal_tolerance: 0.05, lidar_beams: beams },
            field: field.map(|(a, b, nx, ny, kind)| FieldSpec {
                min: [a.min(b), a.min(b)],
                max: [a.max(b), a.max(b)],
                resolution: [nx, ny],
                kind,
            }),
            outputs: Outputs { directory: directory.into(), formats },
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn manifests_round_trip(m in manifest()) {
        let once = Manifest::parse(&m.to_json()).unwrap();
        prop_assert_eq!(&once, &m);
        prop_assert_eq!(Manifest::parse(&once.to_json()).unwrap(), m);
    }
}
