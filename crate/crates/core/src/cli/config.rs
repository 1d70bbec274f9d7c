//! Sectioned `key = value` experiment configs.
//!
//! ```text
//! [problem]
//! family = gaussian_mean
//! dim = 1
//! set = unconstrained
//! mean = 0.5
//! sigma = 1
//!
//! [solver]
//! algorithm = sgd
//! schedule = inverse
//!
//! [experiment]
//! mode = run
//! epsilon = 0.01
//! samples = 100
//! ```
//!
//! Lines starting with `#` are comments. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::harness::{
    Algorithm, FamilyConfig, ProblemConfig, ScheduleChoice, SetConfig, SolverConfig, DEFAULT_PROBE_TRIALS,
};
use crate::sa::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Complexity,
    Curve,
    Verify,
}

impl Mode {
    pub const IDS: [&'static str; 4] = ["run", "complexity", "curve", "verify"];

    pub fn id(self) -> &'static str {
        Self::IDS[self as usize]
    }

    pub fn from_id(s: &str) -> Option<Self> {
        [Mode::Run, Mode::Complexity, Mode::Curve, Mode::Verify].into_iter().find(|m| m.id() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBlock {
    pub mode: Mode,
    pub epsilons: Vec<f64>,
    pub beta: f64,
    pub trials: u64,
    /// Sample budget per trial in `run` mode; solver prescription when absent.
    pub samples: Option<u64>,
    pub max_samples: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub record_timing: bool,
}

impl ExperimentBlock {
    pub fn new(mode: Mode) -> Self {
        ExperimentBlock {
            mode,
            epsilons: Vec::new(),
            beta: 0.1,
            trials: DEFAULT_PROBE_TRIALS,
            samples: None,
            max_samples: 1 << 24,
            seed: 0,
            output: None,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Required except in verify mode.
    pub problem: Option<ProblemConfig>,
    pub solver: Option<SolverConfig>,
    pub experiment: ExperimentBlock,
}

const PROBLEM_KEYS: [&str; 18] = [
    "family", "dim", "set", "radius", "seed", "mean", "sigma", "truncation", "truth", "design_radius", "noise",
    "lambda", "theta", "pool", "s", "terms", "kappa", "interpolating",
];
const SOLVER_KEYS: [&str; 7] = ["algorithm", "schedule", "multiplier", "window", "start", "radius", "delta"];
const EXPERIMENT_KEYS: [&str; 9] = [
    "mode", "epsilon", "beta", "trials", "samples", "max_samples", "seed", "output", "record_timing",
];

fn allowed(section: &str) -> Vec<&'static str> {
    match section {
        "problem" => PROBLEM_KEYS.to_vec(),
        "solver" => SOLVER_KEYS.to_vec(),
        "experiment" => EXPERIMENT_KEYS.to_vec(),
        _ => Vec::new(),
    }
}

type Section = BTreeMap<String, (usize, String)>;

/// Collects typed values out of one section, recording every problem.
struct Reader<'a> {
    name: &'static str,
    map: &'a Section,
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn opt<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let (line, v) = self.raw(key)?.clone();
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("line {line}: [{}] {key}: cannot parse {v:?}", self.name));
                None
            }
        }
    }

    fn req<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        if self.raw(key).is_none() {
            self.errors.push(format!("[{}] missing required key {key:?}", self.name));
            return None;
        }
        self.opt(key)
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let (line, v) = self.raw(key)?.clone();
        let parsed: std::result::Result<Vec<f64>, _> = v.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match parsed {
            Ok(x) => Some(x),
            Err(_) => {
                self.errors.push(format!("line {line}: [{}] {key}: cannot parse list {v:?}", self.name));
                None
            }
        }
    }

    fn error(&mut self, msg: String) {
        self.errors.push(format!("[{}] {msg}", self.name));
    }
}

fn split_sections(text: &str, errors: &mut Vec<String>) -> BTreeMap<String, Section> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !["problem", "solver", "experiment"].contains(&name.as_str()) {
                errors.push(format!("line {line_no}: unknown section [{name}]"));
                current = None;
                continue;
            }
            if sections.contains_key(&name) {
                errors.push(format!("line {line_no}: duplicate section [{name}]"));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected key = value, got {line:?}"));
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        let Some(sec) = current.clone() else {
            errors.push(format!("line {line_no}: key {k:?} outside a known section"));
            continue;
        };
        if !allowed(&sec).contains(&k.as_str()) {
            errors.push(format!("line {line_no}: unknown key {k:?} in [{sec}]"));
            continue;
        }
        let map = sections.get_mut(&sec).expect("section registered");
        if map.insert(k.clone(), (line_no, v)).is_some() {
            errors.push(format!("line {line_no}: duplicate key {k:?} in [{sec}]"));
        }
    }
    sections
}

/// Parses and validates a config, reporting every error found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let sections = split_sections(text, &mut errors);

    let experiment = match sections.get("experiment") {
        None => {
            errors.push("missing required section [experiment]".into());
            None
        }
        Some(map) => parse_experiment(&mut Reader { name: "experiment", map, errors: &mut errors }),
    };
    let verify = matches!(experiment, Some(ExperimentBlock { mode: Mode::Verify, .. }));
    let problem = match sections.get("problem") {
        None if !verify => {
            errors.push("missing required section [problem]".into());
            None
        }
        None => None,
        Some(map) => parse_problem(&mut Reader { name: "problem", map, errors: &mut errors }),
    };
    let solver = match sections.get("solver") {
        None if !verify => {
            errors.push("missing required section [solver]".into());
            None
        }
        None => None,
        Some(map) => parse_solver(&mut Reader { name: "solver", map, errors: &mut errors }),
    };
    if let (Some(p), Some(s)) = (&problem, &solver) {
        if let Some(start) = &s.start {
            if start.len() != p.dim {
                errors.push(format!("[solver] start has {} entries but dim = {}", start.len(), p.dim));
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(ExperimentConfig {
        problem,
        solver,
        experiment: experiment.expect("no errors implies a parsed block"),
    })
}

fn parse_experiment(r: &mut Reader<'_>) -> Option<ExperimentBlock> {
    let mode_raw: Option<String> = r.req("mode");
    let mode = mode_raw.and_then(|m| {
        let parsed = Mode::from_id(&m);
        if parsed.is_none() {
            r.error(format!("unknown mode {m:?}; expected one of {:?}", Mode::IDS));
        }
        parsed
    });
    let mut b = ExperimentBlock::new(mode.unwrap_or(Mode::Run));
    if let Some(e) = r.list("epsilon") {
        b.epsilons = e;
    }
    if let Some(v) = r.opt("beta") {
        b.beta = v;
    }
    if let Some(v) = r.opt("trials") {
        b.trials = v;
    }
    b.samples = r.opt("samples");
    if let Some(v) = r.opt("max_samples") {
        b.max_samples = v;
    }
    if let Some(v) = r.opt("seed") {
        b.seed = v;
    }
    b.output = r.opt::<String>("output").map(PathBuf::from);
    if let Some(v) = r.opt("record_timing") {
        b.record_timing = v;
    }
    if b.mode != Mode::Verify {
        if b.epsilons.is_empty() {
            r.error("epsilon list is required".into());
        }
        if b.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            r.error(format!("epsilon values must be positive, got {:?}", b.epsilons));
        }
        if !(b.beta > 0.0 && b.beta < 1.0) {
            r.error(format!("beta must lie in (0, 1), got {}", b.beta));
        }
        if b.trials == 0 {
            r.error("trials must be at least 1".into());
        }
        if b.max_samples == 0 || b.samples == Some(0) {
            r.error("sample counts must be at least 1".into());
        }
    }
    if b.mode == Mode::Curve {
        if b.epsilons.len() < 2 {
            r.error("curve mode needs at least two epsilon values".into());
        }
        if b.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            r.error(format!("epsilon list must be strictly decreasing in curve mode, got {:?}", b.epsilons));
        }
    }
    mode.map(|_| b)
}

fn parse_set(r: &mut Reader<'_>) -> Option<SetConfig> {
    let kind: String = r.req("set")?;
    let radius = |r: &mut Reader<'_>| -> Option<f64> {
        let v: f64 = r.req("radius")?;
        if !(v > 0.0 && v.is_finite()) {
            r.error(format!("radius must be positive, got {v}"));
            return None;
        }
        Some(v)
    };
    match kind.as_str() {
        "unconstrained" => Some(SetConfig::Unconstrained),
        "simplex" => Some(SetConfig::Simplex),
        "l2_ball" => radius(r).map(|radius| SetConfig::L2Ball { radius }),
        "l1_ball" => radius(r).map(|radius| SetConfig::L1Ball { radius }),
        other => {
            r.error(format!("unknown set {other:?}; expected unconstrained, l2_ball, l1_ball or simplex"));
            None
        }
    }
}

fn parse_problem(r: &mut Reader<'_>) -> Option<ProblemConfig> {
    let family_id: Option<String> = r.req("family");
    let dim: Option<usize> = r.req("dim");
    if dim == Some(0) {
        r.error("dim must be at least 1".into());
    }
    let set = parse_set(r);
    let seed = r.opt("seed").unwrap_or(0);
    let family = match family_id.as_deref() {
        None => None,
        Some("gaussian_mean") => {
            let mean = r.opt("mean").unwrap_or(0.0);
            let sigma = r.req("sigma");
            let truncation = r.opt("truncation");
            sigma.map(|sigma| FamilyConfig::GaussianMean { mean, sigma, truncation })
        }
        Some("ridge") => {
            let truth = r.req("truth");
            let design_radius = r.req("design_radius");
            let noise = r.req("noise");
            Some(FamilyConfig::Ridge { truth: truth?, design_radius: design_radius?, noise: noise? })
        }
        Some("lasso") => {
            let truth = r.req("truth");
            let design_radius = r.req("design_radius");
            let noise = r.req("noise");
            let lambda = r.req("lambda");
            Some(FamilyConfig::Lasso { truth: truth?, design_radius: design_radius?, noise: noise?, lambda: lambda? })
        }
        Some("soft_svm") => {
            let theta = r.req("theta");
            let pool = r.opt("pool").unwrap_or_else(ProblemConfig::default_pool);
            theta.map(|theta| FamilyConfig::SoftSvm { theta, pool })
        }
        Some("norm_power") => {
            let s = r.req("s");
            let sigma = r.req("sigma");
            Some(FamilyConfig::NormPower { s: s?, sigma: sigma? })
        }
        Some("finite_sum") => {
            let terms = r.req("terms");
            let kappa = r.req("kappa");
            let interpolating = r.opt("interpolating").unwrap_or(false);
            Some(FamilyConfig::FiniteSum { terms: terms?, kappa: kappa?, interpolating })
        }
        Some(other) => {
            r.error(format!("unknown family {other:?}; expected one of {:?}", FamilyConfig::IDS));
            None
        }
    };
    if let Some(fam) = &family {
        let used = family_keys(fam);
        let stray: Vec<&String> = r
            .map
            .keys()
            .filter(|k| !["family", "dim", "set", "radius", "seed"].contains(&k.as_str()) && !used.contains(&k.as_str()))
            .collect();
        for k in stray {
            r.error(format!("key {k:?} does not apply to family {}", fam.id()));
        }
    }
    let cfg = ProblemConfig {
        family: family?,
        dim: dim?,
        set: set?,
        seed,
    };
    if let Err(e) = cfg.build() {
        r.error(format!("invalid problem: {e}"));
        return None;
    }
    Some(cfg)
}

fn family_keys(f: &FamilyConfig) -> &'static [&'static str] {
    match f {
        FamilyConfig::GaussianMean { .. } => &["mean", "sigma", "truncation"],
        FamilyConfig::Ridge { .. } => &["truth", "design_radius", "noise"],
        FamilyConfig::Lasso { .. } => &["truth", "design_radius", "noise", "lambda"],
        FamilyConfig::SoftSvm { .. } => &["theta", "pool"],
        FamilyConfig::NormPower { .. } => &["s", "sigma"],
        FamilyConfig::FiniteSum { .. } => &["terms", "kappa", "interpolating"],
    }
}

fn parse_solver(r: &mut Reader<'_>) -> Option<SolverConfig> {
    let alg_id: Option<String> = r.req("algorithm");
    let algorithm = alg_id.and_then(|a| {
        let parsed = Algorithm::from_id(&a);
        if parsed.is_none() {
            r.error(format!("unknown algorithm {a:?}; expected one of {:?}", Algorithm::IDS));
        }
        parsed
    });
    let mut s = SolverConfig::new(algorithm.unwrap_or(Algorithm::Sgd));
    if let Some(id) = r.opt::<String>("schedule") {
        match ScheduleChoice::from_id(&id) {
            Some(c) => s.schedule = c,
            None => r.error(format!("unknown schedule {id:?}; expected one of {:?}", ScheduleChoice::IDS)),
        }
    }
    if let Some(m) = r.opt::<f64>("multiplier") {
        if !(m > 0.0 && m.is_finite()) {
            r.error(format!("multiplier must be positive, got {m}"));
        }
        s.multiplier = m;
    }
    if let Some(w) = r.opt::<String>("window") {
        match w.as_str() {
            "full" => s.window = Some(Window::Full),
            "tail" => s.window = Some(Window::TailHalf),
            other => r.error(format!("unknown window {other:?}; expected full or tail")),
        }
    }
    s.start = r.list("start");
    s.radius = r.opt("radius");
    s.delta = r.opt("delta");
    if s.radius.is_some_and(|v| !(v > 0.0)) {
        r.error("radius must be positive".into());
    }
    if s.delta.is_some_and(|v| !(v >= 0.0)) {
        r.error("delta must be nonnegative".into());
    }
    algorithm.map(|_| s)
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical text form; `parse_config(&print_config(c)) == c`.
pub fn print_config(c: &ExperimentConfig) -> String {
    let mut out = String::new();
    if let Some(p) = &c.problem {
        out.push_str("[problem]\n");
        let _ = writeln!(out, "family = {}", p.family.id());
        let _ = writeln!(out, "dim = {}", p.dim);
        match p.set {
            SetConfig::Unconstrained => out.push_str("set = unconstrained\n"),
            SetConfig::Simplex => out.push_str("set = simplex\n"),
            SetConfig::L2Ball { radius } => {
                let _ = writeln!(out, "set = l2_ball\nradius = {radius}");
            }
            SetConfig::L1Ball { radius } => {
                let _ = writeln!(out, "set = l1_ball\nradius = {radius}");
            }
        }
        let _ = writeln!(out, "seed = {}", p.seed);
        match &p.family {
            FamilyConfig::GaussianMean { mean, sigma, truncation } => {
                let _ = writeln!(out, "mean = {mean}\nsigma = {sigma}");
                if let Some(t) = truncation {
                    let _ = writeln!(out, "truncation = {t}");
                }
            }
            FamilyConfig::Ridge { truth, design_radius, noise } => {
                let _ = writeln!(out, "truth = {truth}\ndesign_radius = {design_radius}\nnoise = {noise}");
            }
            FamilyConfig::Lasso { truth, design_radius, noise, lambda } => {
                let _ = writeln!(out, "truth = {truth}\ndesign_radius = {design_radius}\nnoise = {noise}\nlambda = {lambda}");
            }
            FamilyConfig::SoftSvm { theta, pool } => {
                let _ = writeln!(out, "theta = {theta}\npool = {pool}");
            }
            FamilyConfig::NormPower { s, sigma } => {
                let _ = writeln!(out, "s = {s}\nsigma = {sigma}");
            }
            FamilyConfig::FiniteSum { terms, kappa, interpolating } => {
                let _ = writeln!(out, "terms = {terms}\nkappa = {kappa}\ninterpolating = {interpolating}");
            }
        }
        out.push('\n');
    }
    if let Some(s) = &c.solver {
        out.push_str("[solver]\n");
        let _ = writeln!(out, "algorithm = {}", s.algorithm.id());
        let _ = writeln!(out, "schedule = {}", s.schedule.id());
        let _ = writeln!(out, "multiplier = {}", s.multiplier);
        match s.window {
            Some(Window::Full) => out.push_str("window = full\n"),
            Some(Window::TailHalf) => out.push_str("window = tail\n"),
            None => {}
        }
        if let Some(v) = &s.start {
            let _ = writeln!(out, "start = {}", list(v));
        }
        if let Some(v) = s.radius {
            let _ = writeln!(out, "radius = {v}");
        }
        if let Some(v) = s.delta {
            let _ = writeln!(out, "delta = {v}");
        }
        out.push('\n');
    }
    let e = &c.experiment;
    out.push_str("[experiment]\n");
    let _ = writeln!(out, "mode = {}", e.mode.id());
    if !e.epsilons.is_empty() {
        let _ = writeln!(out, "epsilon = {}", list(&e.epsilons));
    }
    let _ = writeln!(out, "beta = {}\ntrials = {}", e.beta, e.trials);
    if let Some(n) = e.samples {
        let _ = writeln!(out, "samples = {n}");
    }
    let _ = writeln!(out, "max_samples = {}\nseed = {}", e.max_samples, e.seed);
    if let Some(p) = &e.output {
        let _ = writeln!(out, "output = {}", p.display());
    }
    let _ = writeln!(out, "record_timing = {}", e.record_timing);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "\
[problem]
family = gaussian_mean
dim = 1
set = unconstrained
sigma = 1

[solver]
algorithm = sgd

[experiment]
mode = run
epsilon = 0.01
samples = 100
";

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment.mode, Mode::Run);
        assert_eq!(c.experiment.samples, Some(100));
        assert_eq!(c.solver.unwrap().algorithm, Algorithm::Sgd);
        assert_eq!(c.problem.unwrap().dim, 1);
    }

    #[test]
    fn unknown_solver_id_is_named() {
        let e = errors(&MINIMAL.replace("algorithm = sgd", "algorithm = adam"));
        assert!(e.iter().any(|m| m.contains("\"adam\"")), "{e:?}");
    }

    #[test]
    fn unknown_key_is_named() {
        let e = errors(&MINIMAL.replace("dim = 1", "dim = 1\nlearning_rate = 3"));
        assert!(e.iter().any(|m| m.contains("\"learning_rate\"")), "{e:?}");
    }

    #[test]
    fn all_errors_are_reported() {
        let text = MINIMAL
            .replace("algorithm = sgd", "algorithm = adam")
            .replace("dim = 1", "dim = x")
            .replace("epsilon = 0.01", "epsilon = 0.01\nbogus = 1");
        assert!(errors(&text).len() >= 3);
    }

    #[test]
    fn curve_epsilons_must_decrease() {
        let text = MINIMAL.replace("mode = run", "mode = curve").replace("epsilon = 0.01", "epsilon = 0.01, 0.1");
        let e = errors(&text);
        assert!(e.iter().any(|m| m.contains("strictly decreasing")), "{e:?}");
        let ok = MINIMAL.replace("mode = run", "mode = curve").replace("epsilon = 0.01", "epsilon = 0.1, 0.01");
        assert!(parse_config(&ok).is_ok());
    }

    #[test]
    fn missing_block_is_an_error() {
        let text = MINIMAL.replace("[solver]\nalgorithm = sgd\n", "");
        let e = errors(&text);
        assert!(e.iter().any(|m| m.contains("[solver]")), "{e:?}");
        assert!(parse_config("[experiment]\nmode = verify\n").is_ok());
    }

    #[test]
    fn family_specific_keys_are_checked() {
        let e = errors(&MINIMAL.replace("sigma = 1", "sigma = 1\ntheta = 2"));
        assert!(e.iter().any(|m| m.contains("\"theta\"")), "{e:?}");
    }

    #[test]
    fn print_parse_roundtrip_example() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&print_config(&c)).unwrap(), c);
    }

    fn arb_family() -> impl Strategy<Value = (FamilyConfig, SetConfig)> {
        let pos = 0.01f64..10.0;
        prop_oneof![
            (-2.0f64..2.0, pos.clone(), proptest::option::of(1.0f64..5.0)).prop_map(|(mean, sigma, truncation)| {
                (FamilyConfig::GaussianMean { mean, sigma, truncation }, SetConfig::Unconstrained)
            }),
            (-1.0f64..1.0, pos.clone(), 0.0f64..1.0, 0.1f64..3.0).prop_map(|(truth, d, noise, r)| {
                (FamilyConfig::Ridge { truth, design_radius: d, noise }, SetConfig::L2Ball { radius: r })
            }),
            (-1.0f64..1.0, pos.clone(), 0.0f64..1.0, 0.0f64..1.0).prop_map(|(truth, d, noise, lambda)| {
                (FamilyConfig::Lasso { truth, design_radius: d, noise, lambda }, SetConfig::Unconstrained)
            }),
            (0.1f64..5.0, 10usize..100).prop_map(|(theta, pool)| {
                (FamilyConfig::SoftSvm { theta, pool }, SetConfig::L2Ball { radius: 1.0 })
            }),
            (1.0f64..4.0, 0.0f64..2.0).prop_map(|(s, sigma)| {
                (FamilyConfig::NormPower { s, sigma }, SetConfig::L2Ball { radius: 1.0 })
            }),
            (1usize..20, 1.0f64..50.0, any::<bool>()).prop_map(|(terms, kappa, interpolating)| {
                (FamilyConfig::FiniteSum { terms, kappa, interpolating }, SetConfig::Unconstrained)
            }),
        ]
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            arb_family(),
            1usize..4,
            any::<u64>(),
            0usize..6,
            0usize..4,
            0.1f64..5.0,
            proptest::option::of(0.1f64..3.0),
            proptest::option::of(1e-9f64..1.0),
            (proptest::collection::vec(1e-4f64..1.0, 2..5), 0.01f64..0.99, 1u64..200, proptest::option::of(1u64..100_000)),
            (any::<u64>(), any::<bool>(), any::<bool>(), any::<bool>()),
        )
            .prop_map(|((family, set), dim, pseed, alg, sched, mult, radius, delta, (mut eps, beta, trials, samples), (seed, timing, out, start))| {
                eps.sort_by(|a, b| b.total_cmp(a));
                eps.dedup();
                let mut solver = SolverConfig::new(Algorithm::from_id(Algorithm::IDS[alg]).unwrap());
                solver.schedule = ScheduleChoice::from_id(ScheduleChoice::IDS[sched]).unwrap();
                solver.multiplier = mult;
                solver.radius = radius;
                solver.delta = delta;
                solver.window = if timing { Some(Window::TailHalf) } else { None };
                solver.start = start.then(|| vec![0.0; dim]);
                let mode = if eps.len() >= 2 { Mode::Curve } else { Mode::Complexity };
                ExperimentConfig {
                    problem: Some(ProblemConfig { family, dim, set, seed: pseed }),
                    solver: Some(solver),
                    experiment: ExperimentBlock {
                        mode,
                        epsilons: eps,
                        beta,
                        trials,
                        samples,
                        max_samples: 1 << 20,
                        seed,
                        output: out.then(|| PathBuf::from("out/report.csv")),
                        record_timing: timing,
                    },
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn print_then_parse_is_identity(c in arb_config()) {
            // Some generated combinations are invalid problems (e.g. a small
            // SoftSVM pool is fine, a bad set is not); only valid ones round-trip.
            prop_assume!(c.problem.as_ref().unwrap().build().is_ok());
            let text = print_config(&c);
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
