//! Pipeline configuration: TOML or JSON documents, validated up front.
//!
//! A minimal TOML config:
//!
//! ```toml
//! window = [-10, 10]
//! opos = [{ delta_m = 1 }]
//! ```
//!
//! Omitted fields take defaults: `alpha = 0.5`, `thetas = [0, "pi/4", "pi/2"]`,
//! `seed = 0`, `samples = 0`, `exports = ["report"]`, `splitter = "sylvester"`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::comb::{CombWindow, OpoSpec};
use crate::error::{Error, Result};
use crate::gaussian::DENSE_COVARIANCE_LIMIT;
use crate::interferometer::{sylvester_splitter, BalancedSplitter};
use crate::lattice::DEFAULT_REL_THRESHOLD;
use crate::mtx;

/// Upper bound on the qumode count a config may request.
pub const MAX_MODES: usize = 1 << 22;

/// Upper bound on Monte Carlo draws.
pub const MAX_SAMPLES: usize = 10_000_000;

/// Upper bound on the stored sample matrix, `samples * 2N` values.
pub const MAX_SAMPLE_VALUES: usize = 1 << 27;

/// Upper bound on `|n|`, `delta_m` and `copies * delta_m`.
pub const MAX_INDEX: i64 = 1 << 40;

const MAX_THETAS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportSelector {
    /// H-graph edge list as JSON records.
    Edges,
    /// Matrix Market files plus the mode-map sidecar.
    Matrices,
    /// Macronode graph in DOT.
    Dot,
    /// Verification report JSON.
    Report,
}

impl ExportSelector {
    pub const ALL: [ExportSelector; 4] = [
        ExportSelector::Edges,
        ExportSelector::Matrices,
        ExportSelector::Dot,
        ExportSelector::Report,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitterSource {
    Sylvester,
    File(PathBuf),
}

impl Serialize for SplitterSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SplitterSource::Sylvester => s.serialize_str("sylvester"),
            SplitterSource::File(path) => RawSplitter::File {
                file: path.to_string_lossy().into_owned(),
            }
            .serialize(s),
        }
    }
}

/// Validated pipeline configuration. Serializes to a document that
/// [`parse_config`] accepts and that reproduces the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct PipelineConfig {
    #[serde(serialize_with = "window_pair")]
    pub window: CombWindow,
    pub opos: Vec<OpoSpec>,
    pub alpha: f64,
    pub thetas: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    pub exports: Vec<ExportSelector>,
    pub splitter: SplitterSource,
    pub rel_threshold: f64,
}

fn window_pair<S: serde::Serializer>(w: &CombWindow, s: S) -> std::result::Result<S::Ok, S::Error> {
    [w.n_min, w.n_max].serialize(s)
}

impl PipelineConfig {
    /// Default config for the given window and OPOs.
    pub fn new(window: CombWindow, opos: Vec<OpoSpec>) -> Self {
        Self {
            window,
            opos,
            alpha: 0.5,
            thetas: vec![0.0, PI / 4.0, PI / 2.0],
            seed: 0,
            samples: 0,
            exports: vec![ExportSelector::Report],
            splitter: SplitterSource::Sylvester,
            rel_threshold: DEFAULT_REL_THRESHOLD,
        }
    }

    /// Number of OPOs, `D`.
    pub fn dimension(&self) -> usize {
        self.opos.len()
    }

    /// Total qumode count `2 D (n_max - n_min + 1)`.
    pub fn num_modes(&self) -> usize {
        2 * self.opos.len() * self.window.len()
    }

    pub fn copies(&self) -> i64 {
        self.opos.first().map_or(1, |o| o.copies)
    }

    /// Lattice offsets `Δm_j` in OPO order.
    pub fn offsets(&self) -> Vec<i64> {
        self.opos.iter().map(|o| o.delta_m).collect()
    }

    pub fn wants(&self, sel: ExportSelector) -> bool {
        self.exports.contains(&sel)
    }

    /// Check every invariant that does not need the filesystem.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.window.n_min > self.window.n_max {
            return fail(format!(
                "empty window: n_min {} exceeds n_max {}",
                self.window.n_min, self.window.n_max
            ));
        }
        if self.window.n_min < -MAX_INDEX || self.window.n_max > MAX_INDEX {
            return fail(format!("window indices must lie within ±{MAX_INDEX}"));
        }
        if self.opos.is_empty() {
            return fail("at least one OPO is required".into());
        }
        for o in &self.opos {
            let too_big = o.delta_m > MAX_INDEX
                || o.copies > MAX_INDEX
                || o.delta_m.checked_mul(o.copies).is_none_or(|x| x > MAX_INDEX);
            if too_big {
                return fail(format!("delta_m * copies must not exceed {MAX_INDEX}"));
            }
        }
        for (j, spec) in self.opos.iter().enumerate() {
            if let Err(e) = spec.validate() {
                let what = match e {
                    Error::EvenPumpIndex { p } => format!("even pump index {p}"),
                    other => other.to_string(),
                };
                return fail(format!("opos[{j}] (delta_m = {}): {what}", spec.delta_m));
            }
        }
        if self.opos.iter().any(|o| o.copies != self.copies()) {
            return fail("all OPOs must share the same copies value".into());
        }
        let modes = (2 * self.opos.len()) as u128 * (self.window.n_max as i128 - self.window.n_min as i128 + 1) as u128;
        if modes > MAX_MODES as u128 {
            return fail(format!("{modes} qumodes requested, limit is {MAX_MODES}"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return fail(format!("alpha must be finite and nonnegative, got {}", self.alpha));
        }
        if self.thetas.is_empty() || self.thetas.len() > MAX_THETAS {
            return fail(format!("between 1 and {MAX_THETAS} thetas are required"));
        }
        if let Some(t) = self.thetas.iter().find(|t| !t.is_finite()) {
            return fail(format!("theta {t} is not finite"));
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return fail(format!("rel_threshold must lie in (0, 1), got {}", self.rel_threshold));
        }
        if self.samples > MAX_SAMPLES {
            return fail(format!("samples {} exceeds limit {MAX_SAMPLES}", self.samples));
        }
        if self.samples.saturating_mul(2 * self.num_modes()) > MAX_SAMPLE_VALUES {
            return fail(format!(
                "samples x 2N = {} x {} exceeds limit {MAX_SAMPLE_VALUES}",
                self.samples,
                2 * self.num_modes()
            ));
        }
        if self.samples > 0 && self.num_modes() > DENSE_COVARIANCE_LIMIT {
            return fail(format!(
                "sampling needs a dense covariance, limited to {DENSE_COVARIANCE_LIMIT} qumodes; \
                 this window has {}",
                self.num_modes()
            ));
        }
        if self.splitter == SplitterSource::Sylvester {
            let order = 2 * self.dimension();
            if let Err(e) = sylvester_splitter(order) {
                return fail(format!("unsupported splitter order {order}: {e}"));
            }
        }
        Ok(())
    }

    /// Build the splitter, reading the user matrix if one is configured.
    pub fn load_splitter(&self) -> Result<BalancedSplitter> {
        let order = 2 * self.dimension();
        let h = match &self.splitter {
            SplitterSource::Sylvester => sylvester_splitter(order)?,
            SplitterSource::File(path) => mtx::read_splitter_file(path)?,
        };
        if h.order() != order {
            return Err(Error::Validation(format!(
                "splitter has order {}, but {} OPOs need order {order}",
                h.order(),
                self.dimension()
            )));
        }
        Ok(h)
    }
}

// ---- raw document ----

#[derive(Deserialize)]
#[serde(untagged)]
enum RawWindow {
    Pair([i64; 2]),
    Named { n_min: i64, n_max: i64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOpo {
    delta_m: i64,
    #[serde(default = "one")]
    copies: i64,
}

fn one() -> i64 {
    1
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTheta {
    Number(f64),
    Expr(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSplitter {
    Name(String),
    File { file: String },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExport {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    window: RawWindow,
    opos: Vec<RawOpo>,
    alpha: Option<f64>,
    thetas: Option<Vec<RawTheta>>,
    seed: Option<u64>,
    samples: Option<u64>,
    exports: Option<RawExport>,
    splitter: Option<RawSplitter>,
    rel_threshold: Option<f64>,
}

/// Parse a theta given as a number-like string: `0.3`, `pi`, `-pi/4`,
/// `3pi/8`, `3*pi/8`, `π/2`.
pub fn parse_theta(expr: &str) -> Result<f64> {
    let bad = || Error::Validation(format!("cannot read theta {expr:?}"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (num, den) = match rest.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (rest, None),
    };
    let (coef, has_pi) = if let Some(c) = num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        (c.strip_suffix('*').unwrap_or(c), true)
    } else {
        (num, false)
    };
    let coef = match coef {
        "" if has_pi => 1.0,
        c if c.starts_with(|ch: char| ch.is_ascii_digit() || ch == '.') => c.parse::<f64>().map_err(|_| bad())?,
        _ => return Err(bad()),
    };
    let den = match den {
        Some(d) if d.starts_with(|ch: char| ch.is_ascii_digit() || ch == '.') => d.parse::<f64>().map_err(|_| bad())?,
        Some(_) => return Err(bad()),
        None => 1.0,
    };
    let value = sign * coef * if has_pi { PI } else { 1.0 } / den;
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn parse_export(name: &str) -> Result<Vec<ExportSelector>> {
    Ok(match name {
        "edges" => vec![ExportSelector::Edges],
        "matrices" => vec![ExportSelector::Matrices],
        "dot" => vec![ExportSelector::Dot],
        "report" => vec![ExportSelector::Report],
        "all" => ExportSelector::ALL.to_vec(),
        "none" => Vec::new(),
        other => {
            return Err(Error::Validation(format!(
                "unknown export selector {other:?} (expected edges, matrices, dot, report, all or none)"
            )))
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&before[start..]).chars().count() + 1;
    (line, column)
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        })
    } else {
        toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(text, span.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }
}

impl TryFrom<RawConfig> for PipelineConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let (n_min, n_max) = match raw.window {
            RawWindow::Pair([a, b]) => (a, b),
            RawWindow::Named { n_min, n_max } => (n_min, n_max),
        };
        let opos = raw
            .opos
            .into_iter()
            .map(|o| OpoSpec {
                delta_m: o.delta_m,
                copies: o.copies,
            })
            .collect();
        let mut cfg = PipelineConfig::new(CombWindow { n_min, n_max }, opos);
        if let Some(a) = raw.alpha {
            cfg.alpha = a;
        }
        if let Some(ts) = raw.thetas {
            cfg.thetas = ts
                .into_iter()
                .map(|t| match t {
                    RawTheta::Number(x) => Ok(x),
                    RawTheta::Expr(s) => parse_theta(&s),
                })
                .collect::<Result<_>>()?;
        }
        if let Some(s) = raw.seed {
            cfg.seed = s;
        }
        if let Some(n) = raw.samples {
            cfg.samples = usize::try_from(n).unwrap_or(usize::MAX);
        }
        if let Some(ex) = raw.exports {
            let names = match ex {
                RawExport::One(s) => vec![s],
                RawExport::Many(v) => v,
            };
            let mut sel = Vec::new();
            for name in &names {
                sel.extend(parse_export(name)?);
            }
            sel.sort_unstable();
            sel.dedup();
            cfg.exports = sel;
        }
        if let Some(sp) = raw.splitter {
            cfg.splitter = match sp {
                RawSplitter::Name(n) if n == "sylvester" => SplitterSource::Sylvester,
                RawSplitter::Name(n) => {
                    return Err(Error::Validation(format!(
                        "unknown splitter {n:?}; use \"sylvester\" or {{ file = \"path.mtx\" }}"
                    )))
                }
                RawSplitter::File { file } => SplitterSource::File(PathBuf::from(file)),
            };
        }
        if let Some(r) = raw.rel_threshold {
            cfg.rel_threshold = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse and validate a TOML or JSON config. A document whose first
/// non-blank character is `{` is read as JSON. Splitter file paths are
/// taken as written.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    PipelineConfig::try_from(parse_raw(text)?)
}

/// Read a config file. A relative splitter path is resolved against the
/// config file's directory, and the splitter itself is loaded and checked.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
    let mut cfg = parse_config(&text)?;
    if let SplitterSource::File(p) = &cfg.splitter {
        if p.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.splitter = SplitterSource::File(base.join(p));
        }
    }
    cfg.load_splitter()?;
    Ok(cfg)
}

impl fmt::Display for ExportSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExportSelector::Edges => "edges",
            ExportSelector::Matrices => "matrices",
            ExportSelector::Dot => "dot",
            ExportSelector::Report => "report",
        };
        f.write_str(s)
    }
}
