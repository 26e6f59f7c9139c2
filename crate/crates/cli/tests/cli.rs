use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn domain(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../domains").join(name)
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robin-spectra")).arg("--out").arg(out).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file as (header, rows), skipping comment lines.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn sector_quarter_angle() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["sector", "--alpha", "pi/4", "--tol", "1e-6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("sector.csv")).unwrap();
    assert!(text.starts_with("# robin-spectra sector schema 1\n"));
    assert!(text.contains("# alpha = 0.7853981633974483\n"));
    let (h, rows) = table(&dir.path().join("sector.csv"));
    let e = column(&h, &rows, "eigenvalue");
    assert_eq!(e.len(), 1);
    assert!((e[0] + 2.0).abs() <= 2.0 * 1e-5, "{e:?}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sector.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["count"], 1);
}

#[test]
fn sector_right_angle_is_empty_and_zero_is_refused() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["sector", "--alpha", "pi/2"]);
    assert_eq!(code(&o), 0);
    let (_, rows) = table(&dir.path().join("sector.csv"));
    assert!(rows.is_empty());
    assert_eq!(code(&run(dir.path(), &["sector", "--alpha", "0"])), 1);
    assert_eq!(code(&run(dir.path(), &["sector"])), 1);
    assert_eq!(code(&run(dir.path(), &["sector", "--alpha", "quarter"])), 1);
}

#[test]
fn usage_errors_and_help() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["sector", "--bogus", "1"])), 1);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    let o = run(dir.path(), &["weyl", "--polygon", domain("square.poly").to_str().unwrap(), "--regime", "middle"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown regime"));
    let o = run(dir.path(), &["corners", "--polygon", "/no/such/file.poly"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("from-config");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("[run]\nout = {:?}\n\n[sector]\nalpha = \"pi/3\"\ntol = 1e-6\nlevels = 1\n", out.to_str().unwrap()),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_robin-spectra");
    let o = Command::new(bin).arg("--config").arg(&cfg).arg("sector").output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&out.join("sector.csv"));
    assert!((column(&h, &rows, "eigenvalue")[0] + 4.0 / 3.0).abs() < 1e-3);
    let text = std::fs::read_to_string(out.join("sector.csv")).unwrap();
    assert!(text.contains("# levels = 1\n"));

    let o = Command::new(bin).arg("--config").arg(&cfg).args(["sector", "--alpha", "pi/6"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&out.join("sector.csv"));
    assert!((column(&h, &rows, "eigenvalue")[0] + 4.0).abs() < 1e-2);

    std::fs::write(&cfg, "alpha = 1\n").unwrap();
    assert_eq!(code(&Command::new(bin).arg("--config").arg(&cfg).arg("sector").output().unwrap()), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let sq = domain("square.poly");
    let args = ["--seed", "7", "corners", "--polygon", sq.to_str().unwrap(), "--gammas", "8,10"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    for f in ["corners.csv", "certificates.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let text = std::fs::read_to_string(a.path().join("corners.csv")).unwrap();
    assert!(text.contains("# seed = 7\n"));
}

#[test]
fn corners_of_the_square() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["corners", "--polygon", domain("square.poly").to_str().unwrap(), "--gammas", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("corners.csv"));
    assert_eq!(rows.len(), 4);
    let oracle = robin_oracle(10.0);
    for (e, o) in column(&h, &rows, "e_fem").iter().zip(&oracle) {
        assert!((e - o).abs() <= 1e-3 * o.abs(), "{e} vs {o}");
    }
    for v in column(&h, &rows, "verified_count") {
        assert!(v >= 4.0);
    }
    let lo = column(&h, &rows, "cert_lo")[0];
    let hi = column(&h, &rows, "cert_hi")[0];
    assert!(lo < -200.0 && -200.0 < hi);
}

/// Four lowest sums of the even and odd Robin modes of the unit interval.
fn robin_oracle(gamma: f64) -> Vec<f64> {
    // even: tanh(k/2) = γ/k, odd: tanh(k/2) = k/γ, by bisection on k
    let solve = |f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64| {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    };
    let even = solve(&|k: f64| (k / 2.0).tanh() - gamma / k, gamma * 0.5, gamma * 2.0);
    let odd = solve(&|k: f64| (k / 2.0).tanh() - k / gamma, gamma * 0.5, gamma * 0.99999);
    let (e, o) = (-even * even, -odd * odd);
    vec![2.0 * e, e + o, e + o, 2.0 * o]
}

#[test]
fn corners_of_the_hexagon_and_the_disk() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["corners", "--polygon", domain("hexagon.poly").to_str().unwrap(), "--gammas", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("corners.csv"));
    assert_eq!(rows.len(), 6);
    for e in column(&h, &rows, "e_fem") {
        assert!((e + 400.0 / 3.0).abs() <= 0.02 * 400.0 / 3.0, "{e}");
    }

    let o = run(dir.path(), &["corners", "--polygon", domain("disk.poly").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("no convex vertex"));
    assert!(table(&dir.path().join("corners.csv")).1.is_empty());
}

#[test]
fn weyl_bulk_and_budget() {
    let dir = TempDir::new().unwrap();
    let sq = domain("square.poly");
    let o = run(
        dir.path(),
        &["weyl", "--polygon", sq.to_str().unwrap(), "--regime", "bulk", "--param", "-0.5", "--gammas", "10"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("weyl.csv")).unwrap();
    assert!(text.contains("regime,gamma,threshold,count,prediction,deviation,mesh_nodes,stabilized\n"));
    let (h, rows) = table(&dir.path().join("weyl.csv"));
    let count = column(&h, &rows, "count")[0];
    let pred = column(&h, &rows, "prediction")[0];
    assert!((count - pred).abs() <= 4.0);
    assert_eq!(rows[0][7], "true");

    let o = run(
        dir.path(),
        &[
            "weyl",
            "--polygon",
            sq.to_str().unwrap(),
            "--regime",
            "bulk",
            "--param",
            "-0.5",
            "--gammas",
            "40",
            "--node-cap",
            "500",
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = run(dir.path(), &["weyl", "--polygon", sq.to_str().unwrap(), "--regime", "bulk", "--param", "-2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn model1d_tables() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["model1d", "--kind", "dirichlet", "--gamma", "5", "--length", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("model1d.csv"));
    let e = column(&h, &rows, "secular")[0];
    assert!((e + 24.99546).abs() < 1e-5, "{e}");
    assert!(column(&h, &rows, "difference")[0].abs() < 1e-4);

    let o = run(dir.path(), &["model1d", "--kind", "robin", "--gamma", "10", "--beta", "1"]);
    assert_eq!(code(&o), 0);
    let (h, rows) = table(&dir.path().join("model1d.csv"));
    let e = column(&h, &rows, "secular")[0];
    assert!(column(&h, &rows, "bracket_lo")[0] < e && e < column(&h, &rows, "bracket_hi")[0]);

    assert_eq!(code(&run(dir.path(), &["model1d", "--kind", "dirichlet", "--gamma", "0.8"])), 0);
    assert!(table(&dir.path().join("model1d.csv")).1.is_empty());
    assert_eq!(code(&run(dir.path(), &["model1d", "--kind", "dirichlet", "--gamma", "-1"])), 1);
    assert_eq!(code(&run(dir.path(), &["model1d", "--kind", "wave", "--gamma", "1"])), 1);
}

#[test]
fn rate_fits() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["rates", "--polygon", domain("square.poly").to_str().unwrap(), "--gammas", "4,5,6,7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("rates_fit.csv"));
    assert_eq!(rows[0][0], "exponential");
    assert!(column(&h, &rows, "slope")[0] < 0.0);

    let o =
        run(dir.path(), &["rates", "--polygon", domain("arcsquare.poly").to_str().unwrap(), "--gammas", "10,20,40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("rates_fit.csv"));
    assert_eq!(rows[0][0], "power");
    assert!(column(&h, &rows, "slope")[0] <= 1.5);

    let o = run(dir.path(), &["rates", "--polygon", domain("square.poly").to_str().unwrap(), "--gammas", "10"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("need ≥ 3 sweep points"));
}

#[test]
fn mesh_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["mesh", "export", "--polygon", domain("lshape.poly").to_str().unwrap(), "--h", "0.2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for ext in ["node", "ele", "poly"] {
        assert!(dir.path().join(format!("mesh.{ext}")).exists());
    }
    let base = dir.path().join("mesh");
    let o = run(dir.path(), &["mesh", "inspect", "--mesh", base.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let stats: serde_json::Value =
        serde_json::from_slice(&o.stdout[..o.stdout.iter().rposition(|&b| b == b'}').unwrap() + 1]).unwrap();
    assert!((stats["area"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((stats["robin_length"].as_f64().unwrap() - 8.0).abs() < 1e-12);

    let o = run(dir.path(), &["mesh", "import", "--mesh", base.to_str().unwrap(), "--gamma", "5", "--count", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (h, rows) = table(&dir.path().join("eigenvalues.csv"));
    let e = column(&h, &rows, "eigenvalue");
    assert_eq!(e.len(), 3);
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    // five right angles carry bound states near −2γ²
    assert!(e[0] < -50.0 && e[0] > -55.0, "{e:?}");
}
