//! Convergence studies: error tables over `n × grid`, CSV round trips and
//! log-log rate fits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hr::{expansion_terms, ApproxOrder, HrParams};
use crate::norming::solve_bn;
use crate::triangular::{exact_joint_max_cdf_at, make_row_at, RhoSequenceSpec};

/// Points whose limit value is below this are skipped.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

pub const CSV_HEADER: [&str; 16] = [
    "n", "b_n", "rho_n", "x", "y", "exact", "approx1", "approx2", "approx3", "err1", "err2",
    "err3", "scaled1", "scaled2", "scaled3", "clipped",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
}

impl EvalPoint {
    pub fn new(x: f64, y: f64) -> Self {
        EvalPoint { x, y }
    }
}

impl fmt::Display for EvalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub spec: RhoSequenceSpec,
    pub params: HrParams,
    pub n_values: Vec<u64>,
    pub grid: Vec<EvalPoint>,
    pub orders: BTreeSet<ApproxOrder>,
    /// `None` writes to standard output.
    pub output_path: Option<PathBuf>,
    pub seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::Config("the n list is empty".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("every n must be >= 3, got {n}")));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "the n list must be strictly increasing".into(),
            ));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("the grid is empty".into()));
        }
        if self
            .grid
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::Config("grid points must be finite".into()));
        }
        if self.orders.is_empty() {
            return Err(Error::Config("no approximation order selected".into()));
        }
        Ok(())
    }
}

/// One row of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub n: u64,
    pub b_n: f64,
    pub rho_n: f64,
    pub x: f64,
    pub y: f64,
    pub exact: f64,
    /// Indexed by order rank minus one; `None` when the order was not requested.
    pub approx: [Option<f64>; 3],
    pub err: [Option<f64>; 3],
    /// `err_k · b_n^{2k}`
    pub scaled: [Option<f64>; 3],
    pub clipped: bool,
}

impl ConvergenceRecord {
    pub fn point(&self) -> EvalPoint {
        EvalPoint::new(self.x, self.y)
    }

    pub fn err_of(&self, order: ApproxOrder) -> Option<f64> {
        self.err[order.rank() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub records: Vec<ConvergenceRecord>,
    /// Grid points dropped because `H_λ < 1e-300` there.
    pub skipped: Vec<EvalPoint>,
}

/// One record per `(n, point)`, n-major then grid order.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config.validate()?;
    let mut terms = Vec::with_capacity(config.grid.len());
    let mut skipped = Vec::new();
    for p in &config.grid {
        let t = expansion_terms(&config.params, p.x, p.y)?;
        if t.limit < UNDERFLOW_FLOOR {
            skipped.push(*p);
        } else {
            terms.push((*p, t));
        }
    }
    let rows = config
        .n_values
        .iter()
        .map(|&n| make_row_at(&config.spec, &solve_bn(n)?))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<_> = rows
        .iter()
        .flat_map(|row| terms.iter().map(move |pt| (row, pt)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|(row, (p, t))| {
            let exact = exact_joint_max_cdf_at(&row.norming, row.rho, p.x, p.y)?;
            let b2 = row.norming.b2();
            let mut rec = ConvergenceRecord {
                n: row.n(),
                b_n: row.norming.b(),
                rho_n: row.rho.get(),
                x: p.x,
                y: p.y,
                exact,
                approx: [None; 3],
                err: [None; 3],
                scaled: [None; 3],
                clipped: row.clipped,
            };
            for &order in &config.orders {
                let k = order.rank();
                let a = t.approx(b2, order);
                let e = (exact - a).abs();
                rec.approx[k - 1] = Some(a);
                rec.err[k - 1] = Some(e);
                rec.scaled[k - 1] = Some(e * b2.powi(k as i32));
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyOutput { records, skipped })
}

/// Least-squares line through `(ln b_n², ln err_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln err_k = intercept + slope · ln b_n²` over records at one point.
///
/// Records without the order, or with zero error, are left out.
pub fn fit_rate(records: &[ConvergenceRecord], order: ApproxOrder) -> Result<RateFit> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.x != first.x || r.y != first.y) {
            return Err(Error::domain(
                "rate fits need records at a single grid point",
            ));
        }
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let e = r.err_of(order)?;
            (e > 0.0).then(|| ((r.b_n * r.b_n).ln(), e.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::domain(format!(
            "a rate fit needs at least 3 usable records, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("rate fit needs distinct n values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: pts.len(),
    })
}

/// Records grouped by grid point in first-appearance order.
pub fn group_by_point(records: &[ConvergenceRecord]) -> Vec<(EvalPoint, Vec<ConvergenceRecord>)> {
    let mut groups: Vec<(EvalPoint, Vec<ConvergenceRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(p, _)| *p == r.point()) {
            Some((_, g)) => g.push(r.clone()),
            None => groups.push((r.point(), vec![r.clone()])),
        }
    }
    groups
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), fmt_float)
}

pub fn write_records<W: Write>(
    out: W,
    records: &[ConvergenceRecord],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            fmt_float(r.b_n),
            fmt_float(r.rho_n),
            fmt_float(r.x),
            fmt_float(r.y),
            fmt_float(r.exact),
        ];
        row.extend(r.approx.iter().map(|v| fmt_opt(*v)));
        row.extend(r.err.iter().map(|v| fmt_opt(*v)));
        row.extend(r.scaled.iter().map(|v| fmt_opt(*v)));
        row.push(r.clipped.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_to_path(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_records(io::BufWriter::new(file), records).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_records_from_path(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_records(file).map_err(|e| match e {
        ReadError::Csv(source) => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        ReadError::Schema(msg) => Error::Config(format!("{}: {msg}", path.display())),
    })
}

#[derive(Debug)]
pub enum ReadError {
    Csv(csv::Error),
    Schema(String),
}

impl From<csv::Error> for ReadError {
    fn from(e: csv::Error) -> Self {
        ReadError::Csv(e)
    }
}

pub fn read_records<R: io::Read>(
    input: R,
) -> std::result::Result<Vec<ConvergenceRecord>, ReadError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ReadError::Schema(format!(
            "unexpected header '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> std::result::Result<f64, ReadError> {
            rec[i].trim().parse::<f64>().map_err(|_| {
                ReadError::Schema(format!(
                    "row {}: bad {} '{}'",
                    line + 1,
                    CSV_HEADER[i],
                    &rec[i]
                ))
            })
        };
        let opt = |i: usize| -> std::result::Result<Option<f64>, ReadError> {
            if rec[i].trim() == "null" {
                Ok(None)
            } else {
                field(i).map(Some)
            }
        };
        let n = rec[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| ReadError::Schema(format!("row {}: bad n '{}'", line + 1, &rec[0])))?;
        let clipped = match rec[15].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(ReadError::Schema(format!(
                    "row {}: bad clipped '{other}'",
                    line + 1
                )))
            }
        };
        out.push(ConvergenceRecord {
            n,
            b_n: field(1)?,
            rho_n: field(2)?,
            x: field(3)?,
            y: field(4)?,
            exact: field(5)?,
            approx: [opt(6)?, opt(7)?, opt(8)?],
            err: [opt(9)?, opt(10)?, opt(11)?],
            scaled: [opt(12)?, opt(13)?, opt(14)?],
            clipped,
        });
    }
    Ok(out)
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => return Ok(f64::INFINITY),
        "-inf" | "-infinity" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    t.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{s}' as a number")))
}

/// `a:b:step`, inclusive of `b` up to rounding.
fn parse_range(key: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![parse_f64(key, v)?]),
        [a, b, step] => {
            let (a, b, step) = (
                parse_f64(key, a)?,
                parse_f64(key, b)?,
                parse_f64(key, step)?,
            );
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(Error::Config(format!(
                    "{key}: range '{s}' needs finite a <= b and step > 0"
                )));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(Error::Config(format!("{key}: range '{s}' is too long")));
            }
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(Error::Config(format!(
            "{key}: expected a value or a:b:step, got '{s}'"
        ))),
    }
}

/// A comma list of integers, or `a:b:step` in log10 units.
pub fn parse_n_list(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let values: Vec<u64> = if s.contains(':') {
        parse_range("n", s)?
            .into_iter()
            .map(|e| 10f64.powf(e).round() as u64)
            .collect()
    } else {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<u64>().or_else(|_| {
                    // Accept 1e6-style literals when they are integral.
                    let v = parse_f64("n", t)?;
                    if v.fract() == 0.0 && (0.0..1.8e19).contains(&v) {
                        Ok(v as u64)
                    } else {
                        Err(Error::Config(format!("n: '{t}' is not a positive integer")))
                    }
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(values)
}

/// `x=a:b:step,y=c:d:step` (Cartesian product), or explicit pairs `x1,y1;x2,y2`.
pub fn parse_grid(s: &str) -> Result<Vec<EvalPoint>> {
    let s = s.trim();
    if s.starts_with("x=") || s.starts_with("y=") {
        let mut xs = None;
        let mut ys = None;
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid: bad component '{part}'")))?;
            match k.trim() {
                "x" => xs = Some(parse_range("grid x", v)?),
                "y" => ys = Some(parse_range("grid y", v)?),
                other => return Err(Error::Config(format!("grid: unknown axis '{other}'"))),
            }
        }
        let xs = xs.ok_or_else(|| Error::Config("grid: missing x=".into()))?;
        let ys = ys.ok_or_else(|| Error::Config("grid: missing y=".into()))?;
        Ok(xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| EvalPoint::new(x, y)))
            .collect())
    } else {
        s.split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let p = p.trim().trim_start_matches('(').trim_end_matches(')');
                let (x, y) = p
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("grid: expected 'x,y', got '{p}'")))?;
                Ok(EvalPoint::new(parse_f64("grid", x)?, parse_f64("grid", y)?))
            })
            .collect()
    }
}

pub fn parse_orders(s: &str) -> Result<BTreeSet<ApproxOrder>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// `key = value` lines; `#` starts a comment. Keys are normalised to use `_`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{}'",
                i + 1,
                k.trim()
            )));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub const KNOWN_KEYS: [&str; 12] = [
    "spec", "rho", "lambda", "alpha", "beta", "gamma", "tau_rate", "n", "grid", "orders", "out",
    "seed",
];

pub fn parse_spec(settings: &BTreeMap<String, String>) -> Result<RhoSequenceSpec> {
    let num = |key: &str, default: Option<f64>| -> Result<f64> {
        match settings.get(key) {
            Some(v) => parse_f64(key, v),
            None => default.ok_or_else(|| Error::Config(format!("missing '{key}' for this spec"))),
        }
    };
    let name = settings
        .get("spec")
        .ok_or_else(|| Error::Config("missing 'spec'".into()))?;
    match name.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "constant" => RhoSequenceSpec::constant(num("rho", None)?),
        "third-order" | "third-order-hr" | "hr" => RhoSequenceSpec::third_order_hr(
            num("lambda", None)?,
            num("alpha", Some(0.0))?,
            num("beta", Some(0.0))?,
        ),
        "corollary-infinity" | "infinity" => {
            RhoSequenceSpec::corollary_infinity(num("gamma", None)?)
        }
        "corollary-zero" | "zero" => RhoSequenceSpec::corollary_zero(num("tau_rate", None)?),
        other => Err(Error::Config(format!(
            "unknown spec '{other}' (constant, third-order, corollary-infinity, corollary-zero)"
        ))),
    }
    .map_err(|e| match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    })
}

impl StudyConfig {
    /// Builds and validates a config from `key = value` settings.
    ///
    /// `alpha`/`beta` given for a spec whose limit does not use them are
    /// reported through `log::warn!`.
    pub fn from_settings(settings: &BTreeMap<String, String>) -> Result<Self> {
        let spec = parse_spec(settings)?;
        let limit = spec.limit_params();
        let given =
            |k: &str| -> Result<f64> { settings.get(k).map_or(Ok(0.0), |v| parse_f64(k, v)) };
        let probe = HrParams {
            alpha: given("alpha")?,
            beta: given("beta")?,
            ..limit
        };
        for name in probe.ignored_constants() {
            log::warn!(
                "{name} is ignored: the limit of this spec is lambda = {}",
                limit.lambda
            );
        }
        let config = StudyConfig {
            spec,
            params: limit,
            n_values: parse_n_list(settings.get("n").map_or("3:7:1", String::as_str))?,
            grid: parse_grid(settings.get("grid").map_or("0,0", String::as_str))?,
            orders: parse_orders(settings.get("orders").map_or("1,2,3", String::as_str))?,
            output_path: settings.get("out").map(PathBuf::from),
            seed: match settings.get("seed") {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: '{s}' is not an integer")))?,
                None => 0,
            },
        };
        config.validate()?;
        Ok(config)
    }
}
