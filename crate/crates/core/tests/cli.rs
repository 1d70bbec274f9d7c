use std::path::Path;
use std::process::Command;

use sastra::cli::{parse_config, print_config};

fn sastra(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sastra")).args(args).output().unwrap()
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

#[test]
fn shipped_configs_parse_and_roundtrip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let c = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_config(&print_config(&c)).unwrap(), c);
    }
}

#[test]
fn identical_config_gives_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("run.cfg");
    let mut bodies = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let o = sastra(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.remove(0)).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,seed,solver,problem,N,gap,wall_ms");
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("run.cfg");
    let mut bodies = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_sastra"))
            .env("SASTRA_THREADS", threads)
            .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        bodies.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn verify_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.txt");
    let cfg = configs().join("verify.cfg");
    let o = sastra(&["verify", "--config", cfg.to_str().unwrap(), "--strict", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out).unwrap().lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn bad_config_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[problem]\nfamily = nope\ncolour = red\n\n[experiment]\nmode = run\nbeta = 2\n").unwrap();
    let o = sastra(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nope") && err.contains("colour") && err.contains("beta"), "{err}");
}

#[test]
fn subcommand_must_match_config_mode() {
    let o = sastra(&["curve", "--config", configs().join("run.cfg").to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_flags_saturated_search() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sat.cfg");
    std::fs::write(
        &cfg,
        "[problem]\nfamily = gaussian_mean\ndim = 1\nset = unconstrained\nmean = 0.5\nsigma = 1\n\n\
         [solver]\nalgorithm = sgd\nschedule = inverse\n\n\
         [experiment]\nmode = complexity\nepsilon = 1e-9\ntrials = 4\nmax_samples = 16\n",
    )
    .unwrap();
    let out = dir.path().join("c.csv");
    let args = ["complexity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let lax = sastra(&args);
    assert!(lax.status.success());
    assert!(String::from_utf8_lossy(&lax.stderr).contains("flagged"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(sastra(&strict).status.code(), Some(1));
}
