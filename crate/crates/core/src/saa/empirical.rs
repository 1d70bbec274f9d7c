use std::path::Path;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{contains, DEFAULT_TOL};
use crate::linalg::{dot, norm1, norm2};
use crate::problems::{Family, ProblemInstance, Sample, SampleStream};

use super::prox::Composite;

/// Exact sufficient statistics for families whose sample loss is polynomial
/// in the data, so value and gradient cost O(n²) instead of O(N·n).
#[derive(Debug, Clone, PartialEq)]
enum Summary {
    /// Mean `ξ̄` and mean `‖ξ‖²`.
    Point { mean: Vec<f64>, second: f64 },
    /// `S = mean aaᵀ`, `b = mean y·a`, `c = mean y²`.
    Regression { s: Vec<f64>, b: Vec<f64>, c: f64 },
    /// Per-coordinate means of `h`, `h·c` and `h·c²`.
    Diagonal { h: Vec<f64>, hc: Vec<f64>, hcc: Vec<f64> },
    /// No shortcut; sum term by term.
    Terms,
}

/// `f̄(x) = (1/N) Σ f(x, ξᵏ) + composite(x)` over a frozen sample list.
#[derive(Debug, Clone)]
pub struct EmpiricalObjective<'a> {
    problem: &'a ProblemInstance,
    samples: Vec<Sample>,
    composite: Composite,
    summary: Summary,
}

/// Draws and freezes `n` samples from `stream`.
pub fn build_empirical<'a>(
    p: &'a ProblemInstance,
    n: usize,
    stream: SampleStream,
    composite: Composite,
) -> Result<EmpiricalObjective<'a>> {
    if n == 0 {
        return Err(Error::input("empirical objective needs at least one sample"));
    }
    let mut s = stream;
    let samples = (0..n).map(|_| p.sample(&mut s)).collect();
    EmpiricalObjective::from_samples(p, samples, composite)
}

impl<'a> EmpiricalObjective<'a> {
    pub fn from_samples(p: &'a ProblemInstance, samples: Vec<Sample>, composite: Composite) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("empirical objective needs at least one sample"));
        }
        composite.validate(p.dimension())?;
        for xi in &samples {
            // Reuses the per-sample validation of the problem oracle.
            crate::problems::loss_subgradient(p, &p.feasible_set().center_point(), xi)?;
        }
        let summary = summarize(p, &samples);
        Ok(EmpiricalObjective {
            problem: p,
            samples,
            composite,
            summary,
        })
    }

    pub fn problem(&self) -> &'a ProblemInstance {
        self.problem
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn composite(&self) -> &Composite {
        &self.composite
    }

    pub fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    /// Smoothness of the data term (∞ when nonsmooth).
    pub fn smoothness(&self) -> f64 {
        self.problem.constants().l
    }

    /// A valid lower bound on the strong-convexity modulus of `f̄`.
    pub fn strong_convexity(&self) -> f64 {
        let data = match (self.problem.family(), &self.summary) {
            (Family::GaussianMean { .. }, _) => 2.0,
            (Family::NormPower { s, .. }, _) if *s == 2.0 => 2.0,
            (Family::FiniteSumQuadratic { .. }, Summary::Diagonal { h, .. }) => {
                h.iter().copied().fold(f64::INFINITY, f64::min)
            }
            _ => 0.0,
        };
        data + self.composite.strong_convexity()
    }

    /// Value and gradient of the data term alone.
    pub(crate) fn data_value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        match (&self.summary, self.problem.family()) {
            (Summary::Point { mean, second }, Family::GaussianMean { .. }) => {
                let v = dot(x, x) - 2.0 * dot(x, mean) + second;
                (v, x.iter().zip(mean).map(|(a, m)| 2.0 * (a - m)).collect())
            }
            (Summary::Point { mean, .. }, Family::NormPower { s, .. }) => {
                let r = norm2(x);
                let v = r.powf(*s) - s * dot(mean, x);
                let coef = if r == 0.0 { 0.0 } else { s * r.powf(s - 2.0) };
                (v, x.iter().zip(mean).map(|(a, m)| coef * a - s * m).collect())
            }
            (Summary::Regression { s, b, c }, family) => {
                let mut sx = vec![0.0; n];
                for i in 0..n {
                    sx[i] = dot(&s[i * n..(i + 1) * n], x);
                }
                let mut v = dot(x, &sx) - 2.0 * dot(b, x) + c;
                let mut g: Vec<f64> = sx.iter().zip(b).map(|(a, bb)| 2.0 * (a - bb)).collect();
                if let Family::Lasso { lambda, .. } = family {
                    v += lambda * norm1(x);
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += lambda * crate::linalg::sign(*xi);
                    }
                }
                (v, g)
            }
            (Summary::Diagonal { h, hc, hcc }, _) => {
                let mut v = 0.0;
                let mut g = vec![0.0; n];
                for j in 0..n {
                    v += 0.5 * (h[j] * x[j] * x[j] - 2.0 * hc[j] * x[j] + hcc[j]);
                    g[j] = h[j] * x[j] - hc[j];
                }
                (v, g)
            }
            _ => self.brute_value_grad(x),
        }
    }

    /// Term-by-term mean of the data term.
    pub(crate) fn brute_value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.samples.len() as f64;
        let mut v = 0.0;
        let mut g = vec![0.0; x.len()];
        let mut t = vec![0.0; x.len()];
        for xi in &self.samples {
            v += self.problem.value_raw(x, xi);
            self.problem.grad_into(x, xi, &mut t);
            for (a, b) in g.iter_mut().zip(&t) {
                *a += b;
            }
        }
        g.iter_mut().for_each(|a| *a /= m);
        (v / m, g)
    }

    /// Value and subgradient including the composite term, without membership checks.
    pub(crate) fn value_grad_raw(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (v, mut g) = self.data_value_grad(x);
        for (a, b) in g.iter_mut().zip(self.composite.subgradient(x)) {
            *a += b;
        }
        (v + self.composite.value(x), g)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(empirical_value_grad(self, x)?.0)
    }

    /// Gradient of term `t` (0-based) at `x`.
    pub(crate) fn term_grad(&self, x: &[f64], t: usize, out: &mut [f64]) {
        self.problem.grad_into(x, &self.samples[t], out);
    }

    /// Writes the frozen samples as CSV. Column order: `xi_0..xi_{n−1}` for
    /// vector samples, `y,a_0..a_{n−1}` for labelled rows, `term` for
    /// finite-sum indices.
    pub fn write_samples_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let n = self.dimension();
        w.write_record(sample_header(&self.samples[0], n)).map_err(io)?;
        for xi in &self.samples {
            let row: Vec<String> = match xi {
                Sample::Point(v) => v.iter().map(|x| format!("{x:?}")).collect(),
                Sample::Labeled { y, a } => std::iter::once(y).chain(a).map(|x| format!("{x:?}")).collect(),
                Sample::Term(t) => vec![t.to_string()],
            };
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn sample_header(first: &Sample, n: usize) -> Vec<String> {
    match first {
        Sample::Point(_) => (0..n).map(|j| format!("xi_{j}")).collect(),
        Sample::Labeled { .. } => std::iter::once("y".to_string()).chain((0..n).map(|j| format!("a_{j}"))).collect(),
        Sample::Term(_) => vec!["term".into()],
    }
}

/// Reads samples written by [`EmpiricalObjective::write_samples_csv`] for problem `p`.
pub fn read_samples_csv(p: &ProblemInstance, path: &Path) -> Result<Vec<Sample>> {
    let io = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let n = p.dimension();
    let header: Vec<String> = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(io)?;
        let bad = |what: String| Error::input(format!("{}: row {}: {what}", path.display(), line + 2));
        let nums = |rec: &csv::StringRecord| -> Result<Vec<f64>> {
            rec.iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
                .collect()
        };
        let xi = match header.first().map(String::as_str) {
            Some("term") => Sample::Term(rec[0].trim().parse().map_err(|e| bad(format!("{e}")))?),
            Some("y") => {
                let v = nums(&rec)?;
                check_dim(n + 1, v.len())?;
                Sample::Labeled { y: v[0], a: v[1..].to_vec() }
            }
            _ => {
                let v = nums(&rec)?;
                check_dim(n, v.len())?;
                Sample::Point(v)
            }
        };
        out.push(xi);
    }
    Ok(out)
}

fn summarize(p: &ProblemInstance, samples: &[Sample]) -> Summary {
    let n = p.dimension();
    let m = samples.len() as f64;
    match p.family() {
        Family::GaussianMean { .. } | Family::NormPower { .. } => {
            let mut mean = vec![0.0; n];
            let mut second = 0.0;
            for xi in samples {
                if let Sample::Point(v) = xi {
                    for (a, b) in mean.iter_mut().zip(v) {
                        *a += b;
                    }
                    second += dot(v, v);
                }
            }
            mean.iter_mut().for_each(|a| *a /= m);
            Summary::Point { mean, second: second / m }
        }
        Family::RidgeRegression { .. } | Family::Lasso { .. } => {
            let mut s = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            let mut c = 0.0;
            for xi in samples {
                if let Sample::Labeled { y, a } = xi {
                    for i in 0..n {
                        b[i] += y * a[i];
                        for j in 0..n {
                            s[i * n + j] += a[i] * a[j];
                        }
                    }
                    c += y * y;
                }
            }
            s.iter_mut().for_each(|v| *v /= m);
            b.iter_mut().for_each(|v| *v /= m);
            Summary::Regression { s, b, c: c / m }
        }
        Family::FiniteSumQuadratic { hess, centers } => {
            let mut h = vec![0.0; n];
            let mut hc = vec![0.0; n];
            let mut hcc = vec![0.0; n];
            for xi in samples {
                if let Sample::Term(t) = xi {
                    for j in 0..n {
                        let (hj, cj) = (hess[*t][j], centers[*t][j]);
                        h[j] += hj / m;
                        hc[j] += hj * cj / m;
                        hcc[j] += hj * cj * cj / m;
                    }
                }
            }
            Summary::Diagonal { h, hc, hcc }
        }
        Family::SoftSvm { .. } => Summary::Terms,
    }
}

/// Mean value and subgradient over all `N` terms plus the composite term.
pub fn empirical_value_grad(e: &EmpiricalObjective<'_>, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim(e.dimension(), x.len())?;
    if !contains(e.problem.feasible_set(), x, DEFAULT_TOL)? {
        return Err(Error::Precondition("empirical objective evaluated outside the feasible set".into()));
    }
    Ok(e.value_grad_raw(x))
}
