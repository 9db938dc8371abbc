//! Test-set errors, gains, speedups, convergence orders and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::trainer::loss_lp;

/// Version of the manifest layout written by [`emit_report`].
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleErrors {
    pub per_sample: Vec<f64>,
    pub mean: f64,
}

impl SampleErrors {
    pub fn new(per_sample: Vec<f64>) -> Self {
        let mean = if per_sample.is_empty() { 0.0 } else { per_sample.iter().sum::<f64>() / per_sample.len() as f64 };
        SampleErrors { per_sample, mean }
    }
}

/// Per-sample errors `scale · Σ_levels Σ_j |U - U_ref|^p` of `run(i)` against
/// `references[i]` for every test sample `i`.
pub fn test_error<F>(n_samples: usize, run: F, references: &[Vec<Vec<f64>>], p: u32, scale: f64) -> Result<SampleErrors>
where
    F: Fn(usize) -> Result<Vec<Vec<f64>>>,
{
    if references.len() != n_samples {
        return Err(Error::InvalidArgument(format!(
            "{} references for {n_samples} test samples",
            references.len()
        )));
    }
    let errors = (0..n_samples)
        .map(|i| loss_lp(&run(i)?, &references[i], p, scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleErrors::new(errors))
}

/// Ratio of the standard to the trained mean error; `INFINITY` when the
/// trained error vanishes.
pub fn gain(std_mean: f64, trained_mean: f64) -> f64 {
    if trained_mean == 0.0 {
        f64::INFINITY
    } else {
        std_mean / trained_mean
    }
}

/// Least-squares slope of `log(error)` against `log(1/resolution)`.
pub fn observed_order(errors: &[f64], resolutions: &[usize]) -> Result<f64> {
    if errors.len() != resolutions.len() || errors.len() < 3 {
        return Err(Error::InvalidArgument("need at least three matching errors and resolutions".into()));
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) || resolutions.contains(&0) {
        return Err(Error::InvalidArgument("errors must be positive and resolutions non-zero".into()));
    }
    let xs: Vec<f64> = resolutions.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("resolutions must not all coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Error and work of a standard scheme at one resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub resolution: usize,
    pub error: f64,
    pub work: f64,
}

/// Work ratio at which the standard scheme matches `trained_error`.
///
/// `levels` runs from the coarse grid (first entry) upwards. The matching
/// work is interpolated linearly in `log(error)`/`log(work)` between the
/// bracketing refinements. Without a bracketing pair an `UnmatchedError` is
/// returned unless `extrapolate` is set, in which case the outermost pair
/// is extended.
pub fn speedup_refinement(trained_error: f64, levels: &[Refinement], extrapolate: bool) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("speedup search needs at least two resolutions".into()));
    }
    if !(trained_error > 0.0) || levels.iter().any(|l| !(l.error > 0.0 && l.work > 0.0)) {
        return Err(Error::InvalidArgument("errors and work must be positive".into()));
    }
    let coarse_work = levels[0].work;
    let k = match levels.iter().position(|l| l.error <= trained_error) {
        Some(0) => 1,
        Some(k) => k,
        None if extrapolate => levels.len() - 1,
        None => return Err(Error::UnmatchedError),
    };
    let (a, b) = (&levels[k - 1], &levels[k]);
    let work = if a.error == b.error {
        b.work
    } else {
        let t = (trained_error.ln() - a.error.ln()) / (b.error.ln() - a.error.ln());
        (a.work.ln() + t * (b.work.ln() - a.work.ln())).exp()
    };
    Ok(work / coarse_work)
}

/// Resolution at which a standard scheme of the given order reaches
/// `trained_error`, starting from error `std_error` at `n_coarse`.
pub fn matching_resolution(trained_error: f64, std_error: f64, n_coarse: usize, order: f64) -> Result<f64> {
    if !(trained_error > 0.0 && std_error > 0.0 && order > 0.0) {
        return Err(Error::InvalidArgument("errors and order must be positive".into()));
    }
    Ok(n_coarse as f64 * (std_error / trained_error).powf(1.0 / order))
}

/// Order-based speedup for an explicit scheme in one space dimension: work
/// grows with cells times CFL-limited steps, so as `(n*/n_coarse)^2`.
pub fn speedup_extrapolated(trained_error: f64, std_error: f64, n_coarse: usize, order: f64) -> Result<f64> {
    let n_star = matching_resolution(trained_error, std_error, n_coarse, order)?;
    Ok((n_star / n_coarse as f64).powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row of {} cells for {} columns in {}",
                row.len(),
                self.columns.len(),
                self.name
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub config: Value,
    /// Per-sample test errors keyed by scheme name.
    pub errors: BTreeMap<String, SampleErrors>,
    pub gains: BTreeMap<String, f64>,
    pub speedup: Option<f64>,
    pub order: Option<f64>,
    /// Main result table, written as `<experiment>.csv`.
    pub table: Table,
    /// Additional figure data, each written as `<experiment>_<name>.csv`.
    pub figures: Vec<Table>,
    /// Trained parameters and termination per training run.
    pub training: BTreeMap<String, Value>,
    /// Wall-clock seconds per phase; written apart from the manifest.
    pub timing: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, config: Value) -> Self {
        Report {
            experiment: experiment.to_string(),
            seed,
            config,
            table: Table::new(experiment, &[]),
            ..Report::default()
        }
    }

    /// Stores both error sets and their gain under `key`.
    pub fn add_comparison(&mut self, key: &str, standard: (&str, SampleErrors), trained: (&str, SampleErrors)) -> f64 {
        let g = gain(standard.1.mean, trained.1.mean);
        self.errors.insert(standard.0.to_string(), standard.1);
        self.errors.insert(trained.0.to_string(), trained.1);
        self.gains.insert(key.to_string(), g);
        g
    }

    pub fn manifest(&self) -> Value {
        let mut files = vec![format!("{}.csv", self.experiment)];
        files.extend(self.figures.iter().map(|t| format!("{}_{}.csv", self.experiment, t.name)));
        json!({
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "code_version": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
            "config": self.config,
            "errors": self.errors,
            "gains": self.gains.iter().map(|(k, v)| (k.clone(), number(*v))).collect::<BTreeMap<_, _>>(),
            "speedup": self.speedup.map(number),
            "order": self.order.map(number),
            "training": self.training,
            "files": files,
        })
    }
}

/// Non-finite values are written as strings so the manifest stays valid JSON.
fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the CSV tables, `manifest.json` and `timing.json` into `out_dir`.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![write(out_dir.join(format!("{}.csv", report.experiment)), &report.table.to_csv())?];
    for t in &report.figures {
        written.push(write(out_dir.join(format!("{}_{}.csv", report.experiment, t.name)), &t.to_csv())?);
    }
    let manifest = serde_json::to_string_pretty(&report.manifest())? + "\n";
    written.push(write(out_dir.join("manifest.json"), &manifest)?);
    let timing = serde_json::to_string_pretty(&report.timing)? + "\n";
    written.push(write(out_dir.join("timing.json"), &timing)?);
    Ok(written)
}
