use super::*;
use std::f64::consts::PI;

const SMOKE: &str = r#"
[mesh]
generator = "unit_square"
n = 3

[ensemble]
algorithm = "A1"

[problem]
kind = "mms"
members = 1
epsilon = 0.0
nu = 1.0

[time]
dt = 0.05
t_final = 0.2
"#;

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn field_of(e: CliError) -> String {
    match e {
        CliError::Invalid { field, .. } => field,
        other => panic!("expected a field error, got {other}"),
    }
}

#[test]
fn smoke_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "s.toml", SMOKE);
    let out = tmp.path().join("out");
    let r = cmd_run(
        &spec,
        &Options {
            out_dir: Some(out.clone()),
            seed: None,
        },
    )
    .unwrap();
    assert_eq!(r.summary.steps, 4);
    assert_eq!(r.summary.counters.factorizations, r.summary.steps);
    assert_eq!(r.summary.counters.solves, r.summary.steps);
    for f in ["steps.csv", "halvings.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let steps = fs::read_to_string(out.join("steps.csv")).unwrap();
    assert!(steps.starts_with('#'));
    assert_eq!(steps.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("factorizations/step 1.000"));
}

#[test]
fn unknown_algorithm_names_the_field() {
    let text = SMOKE.replace("\"A1\"", "\"A9\"");
    let e = RunSpec::from_toml_str(&text).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("ensemble.algorithm") && msg.contains("A9"), "{msg}");
}

#[test]
fn syntax_errors_report_the_line() {
    let text = SMOKE.replace("n = 3", "n = = 3");
    let msg = RunSpec::from_toml_str(&text).unwrap_err().to_string();
    assert!(msg.contains("line 4"), "{msg}");
    let text = SMOKE.replace("n = 3", "n = 3\ncells = 4");
    let msg = RunSpec::from_toml_str(&text).unwrap_err().to_string();
    assert!(msg.contains("cells"), "{msg}");
}

#[test]
fn gamma_range_is_enforced() {
    let text = SMOKE.replace("\"A1\"", "\"A4\"\ngamma = 2.5");
    let spec = RunSpec::from_toml_str(&text).unwrap();
    let e = spec.resolve(0).err().unwrap();
    let msg = e.to_string();
    assert!(msg.contains("[0, 2)"), "{msg}");
    assert_eq!(field_of(e), "ensemble.gamma");
}

#[test]
fn exactly_one_mesh_source() {
    let both = SMOKE.replace("n = 3", "n = 3\nfile = \"m.msh\"");
    assert_eq!(field_of(RunSpec::from_toml_str(&both).unwrap_err()), "mesh");
    let none = SMOKE.replace("generator = \"unit_square\"", "");
    assert_eq!(field_of(RunSpec::from_toml_str(&none).unwrap_err()), "mesh");
}

#[test]
fn auto_gamma_and_relaxation_length() {
    let text = r#"
[mesh]
generator = "channel"
length = 2.0
height = 0.5
nx = 4
ny = 2

[ensemble]
algorithm = "A5"
nu = [0.001, 0.0011111111111111111, 0.00125]
gamma = "auto"
l = "auto:0.5"

[time]
dt = 0.01
t_final = 0.01
"#;
    let spec = RunSpec::from_toml_str(text).unwrap();
    let r = spec.resolve(0).unwrap();
    assert!((r.inlet_length - 0.5).abs() < 1e-14);
    assert!((r.config.l - 0.25).abs() < 1e-14);
    let sel = crate::ensemble::select_gamma(&r.config.nu);
    assert_eq!(r.config.gamma, sel.gamma);
    let bad = text.replace("\"auto:0.5\"", "\"auto:x\"");
    assert_eq!(field_of(RunSpec::from_toml_str(&bad).unwrap().resolve(0).err().unwrap()), "ensemble.l");
}

#[test]
fn mms_rejects_explicit_viscosities() {
    let text = SMOKE.replace("algorithm = \"A1\"", "algorithm = \"A1\"\nnu = [1.0]");
    assert_eq!(field_of(RunSpec::from_toml_str(&text).unwrap_err()), "ensemble.nu");
}

#[test]
fn identical_seed_gives_identical_csv() {
    let text = r#"
[mesh]
generator = "unit_square"
n = 4

[ensemble]
algorithm = "A4"
nu = [0.01, 0.015, 0.02]
gamma = "auto"

[problem]
kind = "random"
amplitude = 0.5

[time]
dt = 0.02
t_final = 0.1
"#;
    let tmp = tempfile::tempdir().unwrap();
    let spec = RunSpec::from_toml_str(text).unwrap();
    let run = |name: &str, seed| {
        let dir = tmp.path().join(name);
        run_spec(
            &spec,
            &Options {
                out_dir: Some(dir.clone()),
                seed: Some(seed),
            },
        )
        .unwrap();
        fs::read(dir.join("steps.csv")).unwrap()
    };
    let a = run("a", 5);
    assert_eq!(a, run("b", 5));
    assert_ne!(a, run("c", 6));
}

#[test]
fn eigenvalues_of_strip_and_square() {
    let strip = r#"
[mesh]
generator = "unit_square"
n = 8

[boundary.roles]
2 = "open"
3 = "open"
4 = "open"

[ensemble]
algorithm = "A2"

[time]
dt = 1.0
t_final = 1.0
"#;
    let r = eig_spec(&RunSpec::from_toml_str(strip).unwrap()).unwrap();
    assert!((r.result.lambda / (PI * PI / 4.0) - 1.0).abs() < 1e-3, "{}", r.result.lambda);
    let square = strip.replace("2 = \"open\"\n3 = \"open\"\n4 = \"open\"", "");
    let r = eig_spec(&RunSpec::from_toml_str(&square).unwrap()).unwrap();
    assert!((r.result.lambda / (2.0 * PI * PI) - 1.0).abs() < 1e-2, "{}", r.result.lambda);
    let free = strip.replace("2 = \"open\"", "1 = \"open\"\n2 = \"open\"");
    let r = eig_spec(&RunSpec::from_toml_str(&free).unwrap()).unwrap();
    assert_eq!(r.result.lambda, 0.0);
    assert!(r.render().contains("note"));
}

#[test]
fn mesh_info_for_files_and_specs() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = crate::mesh::generate_unit_square(2).unwrap();
    let p = tmp.path().join("square.mesh");
    fs::write(&p, crate::mesh::export_text(&mesh)).unwrap();
    let info = cmd_mesh_info(&p).unwrap();
    assert!((info.metrics.diam - 2f64.sqrt()).abs() < 1e-14);
    assert_eq!(info.pressure_dofs, 9);
    assert!(info.render().contains("diam"));
    let spec = write_spec(tmp.path(), "s.toml", SMOKE);
    assert_eq!(cmd_mesh_info(&spec).unwrap().triangles, 18);
    let bad = tmp.path().join("bad.mesh");
    fs::write(&bad, "vertices 2\n0 0\n").unwrap();
    assert!(cmd_mesh_info(&bad).is_err());
    assert!(matches!(cmd_mesh_info(&tmp.path().join("missing.msh")), Err(CliError::Io { .. })));
}

#[test]
fn single_row_convergence_has_no_rates() {
    let text = format!("{SMOKE}\n[convergence]\ndts = [0.05]\n");
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "c.toml", &text);
    let t = cmd_convergence(
        &spec,
        &Options {
            out_dir: Some(tmp.path().to_path_buf()),
            seed: None,
        },
    )
    .unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.velocity_rates().is_empty());
    let csv = fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let row = csv.lines().nth(2).unwrap();
    assert!(row.contains(",,"), "{row}");
}

#[test]
fn calibration_of_spec_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "s.toml", SMOKE);
    let r = cmd_calibrate_c(&spec).unwrap();
    assert!(r.c_inverse > 0.0);
    assert!(render_calibration(&r).contains("c_inverse"));
}
