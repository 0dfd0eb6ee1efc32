use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn treestat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treestat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn fields(o: &Output) -> BTreeMap<String, String> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn gen(dir: &Path, name: &str, model: &str, n: usize, seed: u64) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let o = treestat(&[
        "gen",
        "--model",
        model,
        "--depth",
        "4",
        "-n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "-o",
        &path,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn worked_distance_example() {
    let o = treestat(&["--machine", "dist", "1.1.1,1.2", "1.1,1.2.1", "--z", "0.3"]);
    assert_eq!(code(&o), 0);
    let d: f64 = fields(&o)["distance"].parse().unwrap();
    assert!((d - 0.054).abs() < 1e-12);
    let unit = treestat(&[
        "--machine",
        "dist",
        "1.1,1.2",
        "1.1.1,1.1.2,1.2.1,1.2.2",
        "--weights",
        "1,1,1",
    ]);
    assert_eq!(fields(&unit)["distance"], "4");
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.txt", "perslot:0.6,0.6", 50, 9);
    let b = gen(dir.path(), "b.txt", "perslot:0.6,0.6", 50, 9);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("treestat-sample v1 m=2 depth=4\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn exit_codes_follow_test_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.txt", "perslot:0.5,0.5", 200, 1);
    let b = gen(dir.path(), "b.txt", "perslot:0.8,0.8", 200, 2);
    let same = gen(dir.path(), "c.txt", "perslot:0.5,0.5", 200, 3);

    let reject = treestat(&[
        "--machine",
        "test2",
        &a,
        &b,
        "--z",
        "0.3",
        "-P",
        "300",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&reject), 3);
    assert_eq!(fields(&reject)["decision"], "reject");
    assert_eq!(fields(&reject)["calibration"], "permutation");

    let keep = treestat(&[
        "--machine",
        "test1",
        &same,
        "--null-model",
        "perslot:0.5,0.5",
        "--z",
        "0.3",
        "-B",
        "300",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&keep), 0, "{}", String::from_utf8_lossy(&keep.stdout));
    let f = fields(&keep);
    assert_eq!(f["decision"], "accept");
    for key in [
        "statistic",
        "critical_value",
        "p_value",
        "truncation_bound",
        "witness",
        "seed",
    ] {
        assert!(f.contains_key(key), "{key}");
    }
}

#[test]
fn stored_null_matches_direct_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "s.txt", "perslot:0.6,0.6", 80, 4);
    let null = dir.path().join("null.txt").to_string_lossy().into_owned();
    let o = treestat(&[
        "nulldist",
        "--model",
        "perslot:0.6,0.6",
        "-n",
        "80",
        "-B",
        "200",
        "--depth",
        "4",
        "--seed",
        "5",
        "--z",
        "0.3",
        "-o",
        &null,
    ]);
    assert_eq!(code(&o), 0);
    let header = fs::read_to_string(&null).unwrap();
    assert!(header.starts_with("treestat-null v1 B=200 n=80 m=2 depth=4 z=0.3 seed=5\n"));

    let direct = treestat(&[
        "--machine",
        "test1",
        &s,
        "--null-model",
        "perslot:0.6,0.6",
        "--z",
        "0.3",
        "-B",
        "200",
        "--seed",
        "5",
    ]);
    let stored = treestat(&[
        "--machine",
        "test1",
        &s,
        "--null-model",
        "perslot:0.6,0.6",
        "--z",
        "0.3",
        "--null-dist",
        &null,
    ]);
    assert_eq!(fields(&direct), fields(&stored));

    let wrong_n = gen(dir.path(), "w.txt", "perslot:0.6,0.6", 81, 4);
    let o = treestat(&[
        "test1",
        &wrong_n,
        "--null-model",
        "perslot:0.6,0.6",
        "--z",
        "0.3",
        "--null-dist",
        &null,
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stat_with_marginals_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "s.txt", "perslot:0.6,0.6", 60, 8);
    let marg = dir.path().join("m.txt").to_string_lossy().into_owned();
    assert_eq!(
        code(&treestat(&[
            "marginals",
            "--model",
            "perslot:0.6,0.6",
            "--depth",
            "4",
            "-o",
            &marg
        ])),
        0
    );
    let via_model = treestat(&[
        "--machine",
        "stat",
        &s,
        "--null-model",
        "perslot:0.6,0.6",
        "--z",
        "0.3",
    ]);
    let via_file = treestat(&[
        "--machine",
        "stat",
        &s,
        "--null-marginals",
        &marg,
        "--z",
        "0.3",
    ]);
    assert_eq!(code(&via_model), 0);
    assert_eq!(fields(&via_model), fields(&via_file));
}

#[test]
fn mean_of_a_small_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    fs::write(&path, "treestat-sample v1 m=2 depth=2\n-\n1\n").unwrap();
    let p = path.to_string_lossy();
    let o = treestat(&["--machine", "mean", &p, "--z", "0.3", "--brute-force"]);
    let f = fields(&o);
    assert_eq!(f["lower"], "-");
    assert_eq!(f["upper"], "1");
    assert_eq!(f["minimizers"], "2");
    let sq = treestat(&["--machine", "mean", &p, "--z", "0.3", "--exponent", "2"]);
    assert_eq!(fields(&sq)["minimizers"], "2");
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(code(&treestat(&["frobnicate"])), 1);
    assert_eq!(code(&treestat(&["dist", "1"])), 1);
    assert_eq!(code(&treestat(&["--help"])), 0);
    assert_eq!(code(&treestat(&["dist", "1.3", "1", "--z", "0.3"])), 2);
    assert_eq!(code(&treestat(&["dist", "1", "1"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "treestat-sample v1 m=2 depth=1\n1.1\n").unwrap();
    let o = treestat(&["mean", &bad.to_string_lossy(), "--z", "0.3"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "treestat-sample v1 m=2 depth=2").unwrap();
    let o = treestat(&[
        "stat",
        &empty.to_string_lossy(),
        "--null-model",
        "perslot:0.5,0.5",
        "--z",
        "0.3",
    ]);
    assert_eq!(code(&o), 2);

    let s = gen(dir.path(), "s.txt", "perslot:0.6,0.6", 20, 1);
    let unsafe_z = treestat(&["test1", &s, "--null-model", "perslot:0.6,0.6", "--z", "0.4"]);
    assert_eq!(code(&unsafe_z), 1);
}

#[test]
fn bootstrap_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let s = gen(dir.path(), "s.txt", "perslot:0.6,0.6", 40, 2);
    let o = treestat(&[
        "--machine",
        "test1",
        &s,
        "--null-model",
        "perslot:0.6,0.6",
        "--z",
        "0.3",
        "-B",
        "150",
        "--experimental-bootstrap",
    ]);
    assert!(matches!(code(&o), 0 | 3));
    assert_eq!(fields(&o)["calibration"], "bootstrap-experimental");
    assert!(String::from_utf8_lossy(&o.stderr).contains("bootstrap"));
}

#[test]
fn cltcheck_reports_covariances() {
    let dir = tempfile::tempdir().unwrap();
    let probes = dir.path().join("p.txt");
    fs::write(&probes, "treestat-sample v1 m=2 depth=3\n-\n1.1,1.2\n").unwrap();
    let o = treestat(&[
        "--machine",
        "cltcheck",
        "--model",
        "perslot:0.6,0.6",
        "--probes",
        &probes.to_string_lossy(),
        "-n",
        "50",
        "-R",
        "300",
        "--seed",
        "1",
        "--z",
        "0.3",
    ]);
    assert_eq!(code(&o), 0);
    let f = fields(&o);
    assert_eq!(f["lipschitz_violations"], "0");
    assert!(f.contains_key("cov[1,1]"));
}
