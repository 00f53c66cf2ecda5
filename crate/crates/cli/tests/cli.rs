use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bilinhull"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn edge_list(n: usize, edges: &[(usize, usize, i64)]) -> String {
    let mut s = format!("{n} {}\n", edges.len());
    for (i, j, w) in edges {
        s.push_str(&format!("{i} {j} {w}\n"));
    }
    s
}

fn complete(n: usize, skip_last: bool) -> String {
    let mut e = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if !(skip_last && i == n - 1 && j == n) {
                e.push((i, j, 1));
            }
        }
    }
    edge_list(n, &e)
}

fn ring(signs: &[i64]) -> String {
    let n = signs.len();
    let e: Vec<_> = (0..n)
        .map(|k| (k + 1, if k + 1 == n { 1 } else { k + 2 }, signs[k]))
        .collect();
    edge_list(n, &e)
}

#[test]
fn envelope_on_the_unit_clique() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "k5.txt", &complete(5, false));
    let o = run(&[
        "envelope",
        "--graph",
        g.to_str().unwrap(),
        "--point",
        "0.6 0.3 0.3 0.9 0.4",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("vex=2 cav=7/2\n"));

    let o = run(&[
        "envelope",
        "--graph",
        g.to_str().unwrap(),
        "--point",
        "0.6 0.3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "envelope",
        "--graph",
        g.to_str().unwrap(),
        "--point",
        "0.6 0.3 0.3 0.9 zz",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&[
        "envelope",
        "--graph",
        g.to_str().unwrap(),
        "--point",
        "1/2,1/2,1/2,1/2,1/2",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["vex"]["value"], "2");
    assert_eq!(v["cav"]["value"], "5");
}

#[test]
fn oversized_graph_is_refused() {
    let dir = TempDir::new().unwrap();
    let e: Vec<_> = (1..20).map(|i| (i, i + 1, 1)).collect();
    let g = write(dir.path(), "p20.txt", &edge_list(20, &e));
    let x = vec!["1/2"; 20].join(" ");
    let o = run(&["envelope", "--graph", g.to_str().unwrap(), "--point", &x]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_reports_pass_and_failure() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "c6.txt", &ring(&[1, -1, 1, 1, -1, -1]));
    let o = run(&[
        "verify",
        "--graph",
        c.to_str().unwrap(),
        "--system",
        "cycle-theorem",
        "--samples",
        "30",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));

    let w = {
        let mut e: Vec<_> = (1..=5)
            .map(|k| (k, if k == 5 { 1 } else { k + 1 }, 1))
            .collect();
        e.extend((1..=5).map(|k| (k, 6, 1)));
        write(dir.path(), "w5.txt", &edge_list(6, &e))
    };
    let o = run(&[
        "verify",
        "--graph",
        w.to_str().unwrap(),
        "--system",
        "wheel",
        "--samples",
        "30",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = run(&[
        "verify",
        "--graph",
        w.to_str().unwrap(),
        "--system",
        "wheel-bare",
        "--samples",
        "60",
    ]);
    assert_eq!(o.status.code(), Some(4));

    let k = write(dir.path(), "k5m.txt", &complete(5, true));
    let o = run(&[
        "verify",
        "--graph",
        k.to_str().unwrap(),
        "--system",
        "kn-minus",
        "--drop",
        "family1:s=2",
        "--samples",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    assert!(text.contains("FAIL") && text.contains("x = ("), "{text}");

    let o = run(&[
        "verify",
        "--graph",
        k.to_str().unwrap(),
        "--system",
        "kn-minus",
        "--drop",
        "oops",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify", "--graph", c.to_str().unwrap(), "--system", "MZ"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certificates_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "c8.txt", &ring(&[1, -1, 1, -1, -1, 1, 1, 1]));
    let cert = dir.path().join("c8.cert");
    let o = run(&[
        "certify",
        "--graph",
        g.to_str().unwrap(),
        "--point",
        "0.6 0.5 0.3 0.5 0.4 0.6 0.5 0.6",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&[
        "certify",
        "--graph",
        g.to_str().unwrap(),
        "--certificate",
        cert.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    assert!(
        stdout(&o).ends_with(",23/10,-3/5,23/10,cav\n"),
        "{}",
        stdout(&o)
    );

    let bad = write(dir.path(), "bad.cert", "8\n0 1/2\n");
    let o = run(&[
        "certify",
        "--graph",
        g.to_str().unwrap(),
        "--certificate",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn study_is_reproducible_and_validates_its_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "n = 6\np = 0.6\nsamples = 4\ngraphs = 3\nclasses = [\"M\", \"MT\", \"MQ4\"]\nseed = 9\nweights = \"sign\"\n",
    );
    let a = run(&["study", "--config", cfg.to_str().unwrap()]);
    let b = run(&["study", "--config", cfg.to_str().unwrap(), "--jobs", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("class,mu_minus_1_pct,sigma_pct,c_p\n"));

    let empty = write(
        dir.path(),
        "e.toml",
        "n = 6\np = 0.6\nsamples = 4\ngraphs = 3\nclasses = []\n",
    );
    assert_eq!(
        run(&["study", "--config", empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn relax_writes_lp_files() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "k4.txt", &complete(4, false));
    let o = run(&["relax", "--graph", g.to_str().unwrap(), "--system", "MT"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Subject To") && text.contains("tri1_1.2.3"));

    let qp = write(
        dir.path(),
        "q.txt",
        "3 0 1\nQ0 3\n1 2 -1\n2 3 -1\n1 3 -1\nc0 0\n",
    );
    let o = run(&[
        "relax",
        "--qp",
        qp.to_str().unwrap(),
        "--curve",
        "0,0.5,1",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let out = dir.path().join("c.lp");
    let o = run(&[
        "relax",
        "--qp",
        qp.to_str().unwrap(),
        "--convex",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(out).unwrap().contains("End"));
}
