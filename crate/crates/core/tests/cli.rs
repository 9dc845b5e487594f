use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_bigint::BigInt;
use saddle_moulds::fixtures::random_field;
use saddle_moulds::io::{cache_path, field_to_json, parse_scalar_strings, read_cache, write_cache, ComponentJson};
use saddle_moulds::saddlenode::{SaddleNodeField, Validation};
use saddle_moulds::scalar::Scalar;
use saddle_moulds::series::TruncatedSeries;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saddle-moulds"))
        .args(args)
        .current_dir(dir)
        .env_remove("SADDLE_MOULDS_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn component(path: &Path) -> Vec<Scalar> {
    let c: ComponentJson = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    c.coeffs.iter().map(|p| parse_scalar_strings(p).unwrap()).collect()
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

fn write_field(dir: &Path, name: &str, field: &SaddleNodeField) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, field_to_json(field)).unwrap();
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn normalize_euler() {
    let tmp = TempDir::new().unwrap();
    let field = data("euler.json");
    let o = run(tmp.path(), &["normalize", "--field", field.to_str().unwrap(), "--n-max", "3", "--x-order", "10", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let phi0 = component(&tmp.path().join("out/phi_0.json"));
    assert_eq!(phi0.len(), 11);
    for (k, c) in phi0.iter().enumerate().skip(1) {
        assert_eq!(*c, Scalar::from_bigint(-factorial(k as u64 - 1)));
    }
    for n in 1..=3 {
        assert!(component(&tmp.path().join(format!("out/phi_{n}.json"))).iter().all(Scalar::is_zero));
        assert!(component(&tmp.path().join(format!("out/psi_{n}.json"))).iter().all(Scalar::is_zero));
    }
    let psi0 = component(&tmp.path().join("out/psi_0.json"));
    assert_eq!(psi0[5], Scalar::from_int(24));
    assert!(tmp.path().join(".mould-cache").is_dir());
}

#[test]
fn normalize_trivial_and_csv() {
    let tmp = TempDir::new().unwrap();
    let field = data("trivial.json");
    let o = run(tmp.path(), &["normalize", "--field", field.to_str().unwrap(), "--format", "csv", "--x-order", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("phi_2.csv")).unwrap();
    assert_eq!(text, "k,re,im\n0,0/1,0/1\n1,0/1,0/1\n2,0/1,0/1\n3,0/1,0/1\n4,0/1,0/1\n");
}

#[test]
fn validation_and_input_errors() {
    let tmp = TempDir::new().unwrap();
    let bad = data("not_normalized.json");
    let o = run(tmp.path(), &["normalize", "--field", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("A(0, y) = y"), "{}", stderr(&o));

    let o = run(tmp.path(), &["normalize", "--field", bad.to_str().unwrap(), "--repair", "--n-max", "1", "--x-order", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mixed = tmp.path().join("mixed.json");
    fs::write(&mixed, r#"{"x_order": 1, "y_order": 1, "monomials": [{"m": 0, "n": 1, "re": [1, 1]}, {"m": 1, "n": 1, "re": [2, 1]}]}"#).unwrap();
    let o = run(tmp.path(), &["check", "--field", mixed.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("d^2A/dxdy(0, 0) = 0"));

    let garbage = tmp.path().join("garbage.json");
    fs::write(&garbage, "{\"x_order\": 1").unwrap();
    assert_eq!(code(&run(tmp.path(), &["normalize", "--field", garbage.to_str().unwrap()])), 3);
    assert_eq!(code(&run(tmp.path(), &["normalize", "--field", "missing.json"])), 3);
    assert_eq!(code(&run(tmp.path(), &["normalize"])), 3);
    assert_eq!(code(&run(tmp.path(), &["--help"])), 0);
}

#[test]
fn check_suites() {
    let tmp = TempDir::new().unwrap();
    let euler = data("euler.json");
    let o = run(tmp.path(), &["check", "--field", euler.to_str().unwrap(), "--suite", "all"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("check_report.json")).unwrap()).unwrap();
    assert_eq!(report["suites"].as_array().unwrap().len(), 11);

    let field = write_field(tmp.path(), "random.json", &random_field(5));
    let o = run(
        tmp.path(),
        &["check", "--field", field.to_str().unwrap(), "--suite", "oracle,pde", "--n-max", "4", "--x-order", "8", "--report", "r.json"],
    );
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("ok   oracle"));
}

#[test]
fn corrupted_cache() {
    let tmp = TempDir::new().unwrap();
    let field_path = data("quadratic.json");
    let field = saddle_moulds::io::read_field(&field_path, Validation::Strict).unwrap();
    let args = ["check", "--field", field_path.to_str().unwrap(), "--suite", "symmetrality", "--x-order", "5", "--max-len", "2", "--cache", "c"];
    assert_eq!(code(&run(tmp.path(), &args)), 0);
    let cache = cache_path(&tmp.path().join("c"), &field, 5);
    assert!(!read_cache(&cache, &field, 5).unwrap().is_empty());

    fs::write(&cache, "{\"version\": 1, \"entr").unwrap();
    let o = run(tmp.path(), &args);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("--rebuild-cache"));
    let mut rebuild = args.to_vec();
    rebuild.push("--rebuild-cache");
    assert_eq!(code(&run(tmp.path(), &rebuild)), 0);
    assert_eq!(code(&run(tmp.path(), &args)), 0);

    // a well-formed cache holding a wrong value makes the identity fail
    let mut entries = read_cache(&cache, &field, 5).unwrap();
    let target = entries.iter_mut().find(|(w, _)| w.len() == 2 && w.letters() == [1, 1]).unwrap();
    target.1 = target.1.add(&TruncatedSeries::monomial(4, Scalar::one(), 5));
    write_cache(&cache, &field, 5, &entries).unwrap();
    let o = run(tmp.path(), &args);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("pair (1) (1)"), "{}", stdout(&o));
}

#[test]
fn cache_inspect_and_clear() {
    let tmp = TempDir::new().unwrap();
    let field = data("euler.json");
    assert_eq!(code(&run(tmp.path(), &["normalize", "--field", field.to_str().unwrap(), "--cache", "c", "--out", "o"])), 0);
    let o = run(tmp.path(), &["cache", "inspect", "--cache", "c"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("x-order 10"), "{}", stdout(&o));
    fs::write(tmp.path().join("c/notes.txt"), "keep").unwrap();
    let o = run(tmp.path(), &["cache", "clear", "--cache", "c"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("removed 1"));
    assert!(tmp.path().join("c/notes.txt").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_saddle-moulds"))
        .args(["cache", "inspect"])
        .current_dir(tmp.path())
        .env("SADDLE_MOULDS_CACHE_DIR", tmp.path().join("c"))
        .output()
        .unwrap();
    assert!(stdout(&o).contains("no cache files"));
}

#[test]
fn borel_euler() {
    let tmp = TempDir::new().unwrap();
    let field = data("euler.json");
    let o = run(tmp.path(), &["borel", "--field", field.to_str().unwrap(), "--zeta-order", "12", "--eval", "1/2", "--eval", "-3/2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("phi_hat_0.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["zeta_order"], 12);
    let coeffs = v["coeffs"].as_array().unwrap();
    assert_eq!(coeffs.len(), 13);
    for (n, c) in coeffs.iter().enumerate() {
        assert_eq!(c[0], if n % 2 == 0 { "1/1" } else { "-1/1" });
    }
    assert!(stdout(&o).contains("phi_hat_0(1/2) = 2731/4096 + (0/1)i, tail <= 1/4096"), "{}", stdout(&o));
    assert!(stderr(&o).contains("|zeta| >= 1"));
    let evals: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("phi_hat_eval.json")).unwrap()).unwrap();
    assert_eq!(evals[1]["tail_bound"], serde_json::Value::Null);

    let trivial = data("trivial.json");
    let o = run(tmp.path(), &["borel", "--field", trivial.to_str().unwrap(), "--n-max", "2", "--out", "t"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("t/phi_hat_2.json")).unwrap()).unwrap();
    assert!(v["coeffs"].as_array().unwrap().iter().all(|c| c[0] == "0/1" && c[1] == "0/1"));
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let field = data("quadratic.json");
    let f = field.to_str().unwrap();
    let base = ["normalize", "--field", f, "--x-order", "4", "--n-max", "3"];
    let runs = [
        vec!["--threads", "1", "--out", "a", "--cache", "ca"],
        vec!["--threads", "4", "--out", "b", "--cache", "cb"],
        // warm cache from the previous run
        vec!["--threads", "3", "--out", "c", "--cache", "cb"],
        // grouped summation only
        vec!["--out", "d", "--word-warn", "10", "--no-cache"],
    ];
    for extra in &runs {
        let args: Vec<&str> = base.iter().copied().chain(extra.iter().copied()).collect();
        let o = run(tmp.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = read_dir_sorted(&tmp.path().join("a"));
    assert_eq!(a.len(), 8);
    for d in ["b", "c", "d"] {
        assert_eq!(a, read_dir_sorted(&tmp.path().join(d)), "{d}");
    }
    assert_eq!(read_dir_sorted(&tmp.path().join("ca")), read_dir_sorted(&tmp.path().join("cb")));
    let o = run(tmp.path(), &base.iter().copied().chain(["--out", "e", "--word-warn", "10"]).collect::<Vec<_>>());
    assert!(stderr(&o).contains("--word-warn"));
}

#[test]
fn support_override() {
    let tmp = TempDir::new().unwrap();
    let field = data("quadratic.json");
    let o = run(tmp.path(), &["normalize", "--field", field.to_str().unwrap(), "--support=-1", "--x-order", "6", "--n-max", "1", "--no-cache"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // only a_{-1} = x + x^2/2 remains: a linear equation for phi_0 and nothing else
    assert!(component(&tmp.path().join("phi_1.json")).iter().all(Scalar::is_zero));
    assert_eq!(component(&tmp.path().join("phi_0.json"))[1], Scalar::from_int(-1));
}
