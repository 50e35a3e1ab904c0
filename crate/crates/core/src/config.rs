//! JSON form of a [`DelayEquation`].
//!
//! ```json
//! {
//!   "period": 3,
//!   "coefficients": [{"kind": "constant", "value": 0.135}],
//!   "delays": [{"kind": "lag", "breakpoints": [[0, 1], [1, 1], [2, 5]], "offset": 0}]
//! }
//! ```
//!
//! Validation errors name the offending field and, when the source text is
//! available, the line it sits on.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FunctionError};
use crate::model::{DelayEquation, PiecewisePeriodic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub period: f64,
    pub coefficients: Vec<CoefficientConfig>,
    pub delays: Vec<DelayConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant { value: f64 },
    Piecewise { breakpoints: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DelayConfig {
    Lag {
        breakpoints: Vec<[f64; 2]>,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// JSON path such as `coefficients[1].value`; empty for syntax errors.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
enum Seg {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Vec<Seg> {
    let mut out = Vec::new();
    for part in path.split('.').filter(|p| !p.is_empty()) {
        let mut rest = part;
        if let Some(open) = rest.find('[') {
            if open > 0 {
                out.push(Seg::Key(rest[..open].to_string()));
            }
            rest = &rest[open..];
            while let Some(stripped) = rest.strip_prefix('[') {
                let close = stripped.find(']').unwrap_or(stripped.len());
                if let Ok(i) = stripped[..close].parse() {
                    out.push(Seg::Index(i));
                }
                rest = stripped.get(close + 1..).unwrap_or("");
            }
        } else {
            out.push(Seg::Key(rest.to_string()));
        }
    }
    out
}

/// Byte-level walker over well-formed JSON, used only to find where a path
/// starts in the source text.
struct Scanner<'a> {
    b: &'a [u8],
    i: usize,
}

impl Scanner<'_> {
    fn ws(&mut self) {
        while self.i < self.b.len() && self.b[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        self.ws();
        (self.b.get(self.i) == Some(&c)).then(|| self.i += 1)
    }

    fn string(&mut self) -> Option<&str> {
        self.eat(b'"')?;
        let start = self.i;
        while *self.b.get(self.i)? != b'"' {
            if self.b[self.i] == b'\\' {
                self.i += 1;
            }
            self.i += 1;
        }
        let s = std::str::from_utf8(&self.b[start..self.i]).ok();
        self.i += 1;
        s
    }

    fn skip_value(&mut self) -> Option<()> {
        self.ws();
        match *self.b.get(self.i)? {
            b'"' => self.string().map(|_| ()),
            open @ (b'{' | b'[') => {
                let close = if open == b'{' { b'}' } else { b']' };
                self.i += 1;
                self.ws();
                if self.b.get(self.i) == Some(&close) {
                    self.i += 1;
                    return Some(());
                }
                loop {
                    if open == b'{' {
                        self.string()?;
                        self.eat(b':')?;
                    }
                    self.skip_value()?;
                    self.ws();
                    match *self.b.get(self.i)? {
                        b',' => self.i += 1,
                        c if c == close => {
                            self.i += 1;
                            return Some(());
                        }
                        _ => return None,
                    }
                }
            }
            _ => {
                while self.i < self.b.len() && !matches!(self.b[self.i], b',' | b'}' | b']') && !self.b[self.i].is_ascii_whitespace() {
                    self.i += 1;
                }
                Some(())
            }
        }
    }

    fn find(&mut self, path: &[Seg]) -> Option<usize> {
        self.ws();
        let Some((head, rest)) = path.split_first() else {
            return Some(self.i);
        };
        match head {
            Seg::Key(k) => {
                self.eat(b'{')?;
                loop {
                    let key = self.string()?.to_string();
                    self.eat(b':')?;
                    if &key == k {
                        return self.find(rest);
                    }
                    self.skip_value()?;
                    self.eat(b',')?;
                }
            }
            Seg::Index(n) => {
                self.eat(b'[')?;
                for _ in 0..*n {
                    self.skip_value()?;
                    self.eat(b',')?;
                }
                self.find(rest)
            }
        }
    }
}

/// 1-based line on which `path` starts in `text`.
pub fn locate_line(text: &str, path: &str) -> Option<usize> {
    let mut sc = Scanner { b: text.as_bytes(), i: 0 };
    let offset = sc.find(&parse_path(path))?;
    Some(text[..offset.min(text.len())].matches('\n').count() + 1)
}

fn pairs(raw: &[[f64; 2]]) -> Vec<(f64, f64)> {
    raw.iter().map(|p| (p[0], p[1])).collect()
}

impl EquationConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                path: if path == "." { String::new() } else { path },
                line: Some(inner.line()),
                message: inner.to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> crate::error::Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_json(&text)?;
        Ok((cfg, text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates and builds the equation. `source` enables line anchors.
    pub fn to_equation(&self, source: Option<&str>) -> Result<DelayEquation, ConfigError> {
        let fail = |path: String, message: String| ConfigError {
            line: source.and_then(|s| locate_line(s, &path)),
            path,
            message,
        };
        let function_path = |base: &str, constant: bool, e: &FunctionError| match (e, e.index()) {
            (FunctionError::BadPeriod(_), _) => "period".to_string(),
            (_, Some(_)) if constant => format!("{base}.value"),
            (_, Some(j)) => format!("{base}.breakpoints[{j}]"),
            _ => format!("{base}.breakpoints"),
        };

        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(fail("period".into(), format!("must be a positive number, got {}", self.period)));
        }
        if self.coefficients.is_empty() {
            return Err(fail("coefficients".into(), "at least one delay term is required".into()));
        }
        if self.coefficients.len() != self.delays.len() {
            return Err(fail(
                "delays".into(),
                format!(
                    "{} delays given for {} coefficients",
                    self.delays.len(),
                    self.coefficients.len()
                ),
            ));
        }

        let mut coefficients = Vec::with_capacity(self.coefficients.len());
        for (i, c) in self.coefficients.iter().enumerate() {
            let base = format!("coefficients[{i}]");
            let (built, constant) = match c {
                CoefficientConfig::Constant { value } => (PiecewisePeriodic::constant(self.period, *value), true),
                CoefficientConfig::Piecewise { breakpoints } => {
                    (PiecewisePeriodic::new(self.period, pairs(breakpoints), 0.0), false)
                }
            };
            coefficients.push(built.map_err(|e| fail(function_path(&base, constant, &e), e.to_string()))?);
        }
        let mut lags = Vec::with_capacity(self.delays.len());
        for (i, d) in self.delays.iter().enumerate() {
            let base = format!("delays[{i}]");
            let DelayConfig::Lag { breakpoints, offset } = d;
            let built = PiecewisePeriodic::new(self.period, pairs(breakpoints), *offset);
            lags.push(built.map_err(|e| {
                let path = if offset.is_finite() { function_path(&base, false, &e) } else { format!("{base}.offset") };
                fail(path, e.to_string())
            })?);
        }

        DelayEquation::new(coefficients, lags).map_err(|e| match e {
            Error::InvalidFunction { field, source } => {
                let constant = field
                    .strip_prefix("coefficients[")
                    .and_then(|r| r.strip_suffix(']'))
                    .and_then(|i| i.parse::<usize>().ok())
                    .map(|i| matches!(self.coefficients[i], CoefficientConfig::Constant { .. }))
                    .unwrap_or(false);
                fail(function_path(&field, constant, &source), source.to_string())
            }
            other => fail(String::new(), other.to_string()),
        })
    }
}

impl From<&DelayEquation> for EquationConfig {
    fn from(eq: &DelayEquation) -> Self {
        let coefficients = eq
            .coefficients()
            .iter()
            .map(|p| match p.as_constant() {
                Some(value) => CoefficientConfig::Constant { value },
                None => CoefficientConfig::Piecewise {
                    breakpoints: p.breakpoints().iter().map(|&(t, v)| [t, v + p.offset()]).collect(),
                },
            })
            .collect();
        let delays = eq
            .lags()
            .iter()
            .map(|d| DelayConfig::Lag {
                breakpoints: d.breakpoints().iter().map(|&(t, v)| [t, v]).collect(),
                offset: d.offset(),
            })
            .collect();
        Self {
            period: eq.period(),
            coefficients,
            delays,
        }
    }
}

/// Reads, parses and validates a config file.
pub fn load_equation(path: &Path) -> crate::error::Result<DelayEquation> {
    let (cfg, text) = EquationConfig::from_file(path)?;
    Ok(cfg.to_equation(Some(&text))?)
}
