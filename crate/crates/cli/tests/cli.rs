use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn superconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superconv")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superconv-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn points_prints_even_and_odd_cases() {
    let out = superconv(&["points", "--k", "3", "--s", "1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-1, 0, 1");

    let out = superconv(&["points", "--k", "2", "--s", "1"]);
    let a: f64 = stdout(&out).trim().strip_prefix('±').unwrap().parse().unwrap();
    assert!((a - 1.0 / 3f64.sqrt()).abs() < 1e-8);

    let out = superconv(&["points", "--k", "3", "--s", "0", "--assume-mean-cancellation", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,s,point"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn table_has_one_row_per_degree() {
    let out = superconv(&["table1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("k,s=0,s=1"));
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("2,"));
}

#[test]
fn invalid_input_exits_2_without_output() {
    let dir = scratch_dir("invalid");
    let target = dir.join("out.csv");
    let t = target.to_str().unwrap();
    let cases: [&[&str]; 5] = [
        &["points", "--k", "3", "--s", "0", "-o", t],
        &["points", "--k", "3", "--s", "5", "-o", t],
        &["rates1d", "--k", "3", "--mu", "3", "--N", "10", "-o", t],
        &["tri2d", "--kind", "p2", "--ladder", "30,50", "--rho", "0.4", "-o", t],
        &["tensor2d", "--k", "2", "--N", "16", "--alpha", "3,0", "-o", t],
    ];
    for args in cases {
        let out = superconv(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!target.exists(), "{args:?} wrote output");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = scratch_dir("config");
    let cfg = dir.join("points.cfg");
    fs::write(&cfg, "# defaults\nk = 3\ns = 0\nassume_mean_cancellation = true\n").unwrap();
    let c = cfg.to_str().unwrap();

    let out = superconv(&["--config", c, "points"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("0.5193"));

    let out = superconv(&["points", "--config", c, "--s", "1"]);
    assert_eq!(stdout(&out).trim(), "-1, 0, 1");

    fs::write(&cfg, "k 3\n").unwrap();
    assert_eq!(superconv(&["--config", c, "points"]).status.code(), Some(2));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn thread_count_comes_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_superconv"))
            .args(["rates1d", "--k", "2", "--N", "16", "--s", "1", "--m-grid", "0.5"])
            .env("SUPERCONV_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn tri2d_writes_meshes_and_repeats_exactly() {
    let dir = scratch_dir("tri2d");
    let meshes = dir.join("meshes");
    let csv = dir.join("rates.csv");
    fs::create_dir_all(&meshes).unwrap();
    let args = [
        "tri2d",
        "--kind",
        "hermite",
        "--ladder",
        "20,30",
        "--mesh-dir",
        meshes.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
    ];
    let out = superconv(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("kind,alpha,probe,Ndof_coarse,Ndof_fine,err_coarse,err_fine,rate\n"));
    assert_eq!(text.lines().count(), 4);
    for n in [20, 30] {
        let mesh = fs::read_to_string(meshes.join(format!("mesh_hermite_n{n}.txt"))).unwrap();
        assert!(mesh.contains("vertices"));
    }

    assert!(superconv(&args).status.success());
    assert_eq!(fs::read(&csv).unwrap(), first);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn comma_pairs_are_accepted() {
    let out = superconv(&["tensor2d", "--k", "3", "--N", "8,16", "--alpha", "1,0", "--probe", "0.5,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("3,3,2,2,1,0,"));

    let out = superconv(&["rates1d", "--k", "2", "--N", "10", "--s", "1", "--m-grid", "0.5", "--interior", "0.2,0.8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = superconv(&["tri2d", "--kind", "p2", "--ladder", "20,30", "--x0", "0.4,0.4", "--x0prime", "0.75,0.7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = superconv(&["tensor2d", "--k", "2", "--N", "8,16", "--alpha", "3,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("derivative order"));
    assert_eq!(superconv(&["tri2d", "--kind", "p2", "--x0", "0.4"]).status.code(), Some(2));
}
