//! End-to-end runs of the command-line front end.

use std::path::Path;

use plate_fem::cli::{run, EXIT_CONDITION, EXIT_CONFIG, EXIT_OK};

fn plate(args: &[&str]) -> i32 {
    run(std::iter::once("plate").chain(args.iter().copied()).map(String::from))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn convergence_output_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        let code = plate(&["--out", out, "--svg", "convergence", "--mesh", "holey", "--levels", "2", "--t", "1,0.01"]);
        assert_eq!(code, EXIT_OK);
    }
    let csv = read(a.path(), "convergence.csv");
    assert_eq!(csv, read(b.path(), "convergence.csv"));
    assert_eq!(read(a.path(), "total_error.svg"), read(b.path(), "total_error.svg"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# plate-fem "));
    assert_eq!(
        lines.next().unwrap(),
        "family,p,level,h,ndof_w,ndof_theta,t,err_w_h1,err_theta_h1,err_gamma_l2,err_total,rate_total"
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn verify_is_reproducible_and_reports_vacuous_c4_on_the_square() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        assert_eq!(
            plate(&["--out", out, "--seed", "7", "verify", "--mesh", "square_clamped", "--levels", "2"]),
            EXIT_OK
        );
    }
    let csv = read(a.path(), "diagnostics.csv");
    assert_eq!(csv, read(b.path(), "diagnostics.csv"));
    assert!(csv.contains(",C4,VACUOUS,"));
    assert!(!csv.contains(",FAIL,"));
}

#[test]
fn injected_defect_exits_with_condition_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code =
        plate(&["--out", out, "verify", "--mesh", "holey", "--levels", "1", "--inject-defect", "drop-interior-dof"]);
    assert_eq!(code, EXIT_CONDITION);
    assert!(read(dir.path(), "diagnostics.csv").contains(",H1,FAIL,"));
}

#[test]
fn bad_input_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(plate(&["--out", out, "convergence", "--family", "rt", "--p", "1"]), EXIT_CONFIG);
    assert_eq!(plate(&["--out", out, "verify", "--mesh", "no_such_mesh.msh"]), EXIT_CONFIG);
    assert_eq!(plate(&["--out", out, "locking-demo", "--t", "0.5"]), EXIT_CONFIG);
}

#[test]
fn mesh_refine_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fine.msh");
    let f = file.to_str().unwrap();
    assert_eq!(plate(&["mesh", "refine", "holey", "--times", "1", "-o", f]), EXIT_OK);
    let m = plate_fem::mesh::read_mesh_file(&file).unwrap();
    assert_eq!(m.num_triangles(), 4 * plate_fem::meshes::holey().num_triangles());
    assert_eq!(plate(&["mesh", "info", f]), EXIT_OK);
}
