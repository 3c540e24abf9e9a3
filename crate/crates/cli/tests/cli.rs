use std::process::{Command, Output};

use horocycle_cli::identities::REGISTRY;

fn horo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn identities_pass_by_default() {
    let o = horo(&["identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), REGISTRY.len());
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn injected_fault_names_the_eta_mu_identity() {
    let o = horo(&["identities", "--inject-fault", "eta-weight"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].starts_with("FAIL eta-mu-identity:"), "{}", failed[0]);
    assert!(failed[0].contains("residual="));
}

#[test]
fn invariant_observable_gives_zero_rows() {
    let o = horo(&["converge", "--observable", "invariant:1", "--nmax", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,error_sup,error_lp,runtime_ms"));
    for (i, line) in lines.enumerate() {
        assert_eq!(line, format!("{},0,0,", i + 1));
    }
    let summary = String::from_utf8(o.stderr).unwrap();
    assert!(summary.contains("even-subgroup orbits 2"), "{summary}");
}

#[test]
fn eta_with_uniform_density_matches_spherical() {
    let a = horo(&["converge", "--family", "eta", "--density", "uniform", "--nmax", "5"]);
    let b = horo(&["converge", "--family", "spherical", "--nmax", "5"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = horo(&["converge", "--action", "random:40", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("E[f|F2]"));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let c1 = stdout(&horo(&["covering", "--instances", "10", "--seed", "3"]));
    let c2 = stdout(&horo(&["covering", "--instances", "10", "--seed", "3"]));
    assert_eq!(c1, c2);
}

#[test]
fn covering_rows_pass() {
    let o = horo(&["covering", "--instances", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("instance,disjoint_ok,measure_ok,Cd,Cs,ratio"));
    assert_eq!(text.lines().count(), 1 + 100 + 2);
    assert!(text.lines().skip(1).all(|l| l.contains(",true,true,")));
    let ball = text.lines().find(|l| l.starts_with("boundary-ball,")).unwrap();
    assert!(ball.starts_with("boundary-ball,true,true,1,1,"), "{ball}");
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nnmax=2\nobservable=invariant:3\n").unwrap();
    let o = horo(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().count(), 3);

    let bad = horo(&["converge", "--action", "sanov:x"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("column 7"));

    let capped = horo(&["converge", "--family", "eta", "--cap-sphere", "100"]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(String::from_utf8(capped.stderr).unwrap().contains("cap is 100"));

    assert_eq!(horo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(horo(&["converge", "--mode", "fuzzy"]).status.code(), Some(2));
}

#[test]
fn action_file_with_observable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("act.txt");
    std::fs::write(&path, "rank 2 points 3\ngen 1: 1 2 0\ngen 2: 0 2 1\nobs 0 1\nobs 1 0\nobs 2 0\n").unwrap();
    let o = horo(&["converge", "--action", path.to_str().unwrap(), "--nmax", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dump = horo(&["dump", "action", "--action", path.to_str().unwrap()]);
    assert!(stdout(&dump).starts_with("rank 2 points 3\n"));

    let broken = dir.path().join("bad.txt");
    std::fs::write(&broken, "rank 2 points 3\ngen 1: 1 2 0\ngen 2: 0 0 1\n").unwrap();
    assert_eq!(horo(&["converge", "--action", broken.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn dumps_parse_back() {
    let eta = stdout(&horo(&["dump", "eta", "--density", "sector:a1", "--n", "2"]));
    let mu = horocycle::densities::SphereMeasure::parse(&eta).unwrap();
    assert_eq!(mu.radius(), 4);
    assert!(mu.total_mass().is_integer());
    let inst = stdout(&horo(&["dump", "instance"]));
    let (relation, family) = horocycle::relations::parse_instance(&inst).unwrap();
    assert_eq!(relation.len(), 324);
    assert_eq!(horocycle::relations::doubling_constant(&relation, &family), horocycle::rational::int(1));
}
