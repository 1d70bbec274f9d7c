//! CSV reports. Trial files use the header `trial,seed,solver,problem,N,gap,wall_ms`;
//! curve files use `epsilon,beta,N,trials,successes` followed by one
//! `# fit ...` summary line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::trials::{CurvePoint, SampleComplexityCurve, TrialResult};

pub const TRIAL_HEADER: [&str; 7] = ["trial", "seed", "solver", "problem", "N", "gap", "wall_ms"];
pub const CURVE_HEADER: [&str; 5] = ["epsilon", "beta", "N", "trials", "successes"];

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Renders trial results as CSV text.
pub fn trials_csv(results: &[TrialResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(TRIAL_HEADER);
    for r in results {
        let _ = w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.solver.clone(),
            r.problem.clone(),
            r.n.to_string(),
            r.gap.to_string(),
            r.wall_ms.to_string(),
        ]);
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    // Writing to memory cannot fail and every field is UTF-8.
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

fn write_text(text: &str, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    f.flush().map_err(|e| io_err(path, e))
}

pub fn write_trials(results: &[TrialResult], path: &Path) -> Result<()> {
    write_text(&trials_csv(results), path)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::input(format!("{}: line {}: cannot parse {raw:?}", path.display(), rec.position().map_or(0, |p| p.line()))))
}

fn check_header(r: &mut csv::Reader<File>, want: &[&str], path: &Path) -> Result<()> {
    let got = r.headers().map_err(|e| csv_err(path, e))?;
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::input(format!("{}: unexpected header {:?}", path.display(), got)));
    }
    Ok(())
}

/// Reads a trial file. Failed trials (gap `NaN`) come back with a generic error note.
pub fn read_trials(path: &Path) -> Result<Vec<TrialResult>> {
    let mut r = reader(path)?;
    check_header(&mut r, &TRIAL_HEADER, path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let gap: f64 = field(&rec, 5, path)?;
        out.push(TrialResult {
            trial: field(&rec, 0, path)?,
            seed: field(&rec, 1, path)?,
            solver: rec[2].to_string(),
            problem: rec[3].to_string(),
            n: field(&rec, 4, path)?,
            gap,
            wall_ms: field(&rec, 6, path)?,
            error: gap.is_nan().then(|| "failed".to_string()),
        });
    }
    Ok(out)
}

/// Renders a curve as CSV text followed by its summary line.
pub fn curve_csv(curve: &SampleComplexityCurve) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(CURVE_HEADER);
    for p in &curve.points {
        let _ = w.write_record([
            p.epsilon.to_string(),
            p.beta.to_string(),
            p.n.to_string(),
            p.trials.to_string(),
            p.successes.to_string(),
        ]);
    }
    let mut text = into_string(w);
    text.push_str(&summary_line(curve));
    text.push('\n');
    text
}

pub fn write_curve(curve: &SampleComplexityCurve, path: &Path) -> Result<()> {
    write_text(&curve_csv(curve), path)
}

/// `# fit slope=… intercept=… residual=… saturated=… monotone=…`
pub fn summary_line(curve: &SampleComplexityCurve) -> String {
    let sat = curve.points.iter().filter(|p| p.saturated).count();
    match curve.fit {
        Some(f) => format!(
            "# fit slope={} intercept={} residual={} saturated={sat} monotone={}",
            f.slope, f.intercept, f.residual, curve.monotone
        ),
        None => format!("# fit slope=NaN intercept=NaN residual=NaN saturated={sat} monotone={}", curve.monotone),
    }
}

/// Reads the points of a curve file; saturation is not recorded per row.
pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = reader(path)?;
    check_header(&mut r, &CURVE_HEADER, path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push(CurvePoint {
            epsilon: field(&rec, 0, path)?,
            beta: field(&rec, 1, path)?,
            n: field(&rec, 2, path)?,
            trials: field(&rec, 3, path)?,
            successes: field(&rec, 4, path)?,
            saturated: false,
        });
    }
    Ok(out)
}
