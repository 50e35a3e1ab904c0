//! The recursive exponential kernel and the two criterion integrals built on it.
//!
//! ```text
//! a_1(t, s)     = exp( int_s^t sum_i p_i )
//! a_{r+1}(t, s) = exp( int_s^t sum_i p_i(z) a_r(z, tau_i(z)) dz )
//! ```
//!
//! `a_1` uses the closed-form coefficient integral. Deeper levels integrate
//! with composite order-8 Gauss-Legendre split at every coefficient, lag and
//! (where relevant) envelope breakpoint, then bisect adaptively. The formula is
//! applied literally when `t < s`, giving a value below one.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::envelope::{combined_h, EnvelopeFunction};
use crate::error::{Error, Result};
use crate::model::DelayEquation;
use crate::quadrature::{composite, gauss8};

pub const MAX_DEPTH: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_QUANTUM: f64 = 1e-9;

type Key = (usize, i64, i64);

/// Memo of `a_r` values for `r >= 2`.
///
/// Keys are `(r, s mod period, t - s)` quantized to `quantum`, so evaluations
/// one period apart share entries. A cache must only ever serve one equation.
#[derive(Debug)]
pub struct KernelCache {
    quantum: f64,
    enabled: bool,
    map: RwLock<HashMap<Key, f64>>,
}

impl Default for KernelCache {
    fn default() -> Self {
        Self::new(DEFAULT_QUANTUM)
    }
}

impl KernelCache {
    pub fn new(quantum: f64) -> Self {
        assert!(quantum > 0.0, "cache quantum must be positive");
        Self {
            quantum,
            enabled: true,
            map: RwLock::new(HashMap::new()),
        }
    }

    /// A cache that never stores anything.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        if let Ok(mut m) = self.map.write() {
            m.clear();
        }
    }

    fn key(&self, r: usize, t: f64, s: f64, period: f64) -> Key {
        let q = |x: f64| (x / self.quantum).round() as i64;
        (r, q(s.rem_euclid(period)), q(t - s))
    }

    fn get(&self, key: &Key) -> Option<f64> {
        if !self.enabled {
            return None;
        }
        self.map.read().ok()?.get(key).copied()
    }

    fn insert(&self, key: Key, value: f64) {
        if !self.enabled {
            return;
        }
        if let Ok(mut m) = self.map.write() {
            m.entry(key).or_insert(value);
        }
    }
}

fn check_depth(r: usize) -> Result<()> {
    if r == 0 || r > MAX_DEPTH {
        return Err(Error::InvalidDepth { depth: r, max: MAX_DEPTH });
    }
    Ok(())
}

/// Signed exponent `int_s^t g_r`, where `g_1 = sum p_i` and
/// `g_r(z) = sum_i p_i(z) a_{r-1}(z, tau_i(z))`.
fn exponent(eq: &DelayEquation, r: usize, t: f64, s: f64, tol: f64, cache: &KernelCache) -> f64 {
    if r == 1 {
        return eq.coeff_sum_integral(s, t);
    }
    if t == s {
        return 0.0;
    }
    let (lo, hi, sign) = if s <= t { (s, t, 1.0) } else { (t, s, -1.0) };
    let mut cuts = vec![lo];
    cuts.extend(eq.breakpoints_in(lo, hi));
    cuts.push(hi);
    let mut g = |z: f64| -> f64 {
        (0..eq.m())
            .map(|i| {
                let p = eq.coefficients()[i].eval(z);
                if p == 0.0 {
                    0.0
                } else {
                    p * kernel_value(eq, r - 1, z, eq.tau(i, z), tol, cache)
                }
            })
            .sum()
    };
    sign * composite(gauss8(), &mut g, &cuts, tol)
}

fn kernel_value(eq: &DelayEquation, r: usize, t: f64, s: f64, tol: f64, cache: &KernelCache) -> f64 {
    if r == 1 {
        return eq.coeff_sum_integral(s, t).exp();
    }
    let key = cache.key(r, t, s, eq.period());
    if let Some(v) = cache.get(&key) {
        return v;
    }
    let v = exponent(eq, r, t, s, tol, cache).exp();
    cache.insert(key, v);
    v
}

/// `a_r(t, s)` for `s <= t`.
pub fn a_r(eq: &DelayEquation, r: usize, t: f64, s: f64, tol: f64, cache: &KernelCache) -> Result<f64> {
    check_depth(r)?;
    if s > t {
        return Err(Error::ArgumentOrder { s, t });
    }
    Ok(kernel_value(eq, r, t, s, tol, cache))
}

/// Which kernel anchor a criterion integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralKind {
    /// `a_r(h(z), tau_i(z))`: envelope at the integration variable.
    Inner,
    /// `a_r(h(t), tau_i(z))`: envelope frozen at the upper limit.
    Outer,
}

impl std::str::FromStr for IntegralKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inner" => Ok(Self::Inner),
            "outer" => Ok(Self::Outer),
            other => Err(format!("unknown integral kind '{other}' (expected inner or outer)")),
        }
    }
}

impl std::fmt::Display for IntegralKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Inner => "inner",
            Self::Outer => "outer",
        })
    }
}

/// An equation bundled with its combined envelope, a tolerance and a cache.
#[derive(Debug)]
pub struct Kernel<'a> {
    eq: &'a DelayEquation,
    envelope: EnvelopeFunction,
    tol: f64,
    cache: KernelCache,
}

impl<'a> Kernel<'a> {
    pub fn new(eq: &'a DelayEquation, tol: f64) -> Result<Self> {
        Self::with_cache(eq, tol, KernelCache::default())
    }

    pub fn with_cache(eq: &'a DelayEquation, tol: f64, cache: KernelCache) -> Result<Self> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::InvalidEquation(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self {
            eq,
            envelope: combined_h(eq)?,
            tol,
            cache,
        })
    }

    pub fn equation(&self) -> &DelayEquation {
        self.eq
    }

    pub fn envelope(&self) -> &EnvelopeFunction {
        &self.envelope
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn cache(&self) -> &KernelCache {
        &self.cache
    }

    pub fn h(&self, t: f64) -> f64 {
        self.envelope.eval(t)
    }

    pub fn a_r(&self, r: usize, t: f64, s: f64) -> Result<f64> {
        a_r(self.eq, r, t, s, self.tol, &self.cache)
    }

    /// `int_a^b sum_{i in terms} p_i(z) a_r(anchor(z), tau_i(z)) dz`.
    fn term_sum(&self, r: usize, terms: &[usize], a: f64, b: f64, outer_anchor: Option<f64>) -> Result<f64> {
        check_depth(r)?;
        if a > b {
            return Err(Error::ArgumentOrder { s: a, t: b });
        }
        if a == b {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        cuts.extend(self.eq.breakpoints_in(a, b));
        if outer_anchor.is_none() {
            if a < 0.0 {
                return Err(Error::OutsideDomain(format!(
                    "envelope is only defined for t >= 0, integral starts at {a}"
                )));
            }
            cuts.extend(self.envelope.breakpoints_in(a, b));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
        }
        cuts.push(b);
        let (eq, tol, cache) = (self.eq, self.tol, &self.cache);
        let mut g = |z: f64| -> f64 {
            let anchor = outer_anchor.unwrap_or_else(|| self.envelope.eval(z));
            terms
                .iter()
                .map(|&i| {
                    let p = eq.coefficients()[i].eval(z);
                    if p == 0.0 {
                        0.0
                    } else {
                        p * kernel_value(eq, r, anchor, eq.tau(i, z), tol, cache)
                    }
                })
                .sum()
        };
        Ok(composite(gauss8(), &mut g, &cuts, tol))
    }

    fn all_terms(&self) -> Vec<usize> {
        (0..self.eq.m()).collect()
    }

    /// `int_a^b p_i(z) a_r(h(z), tau_i(z)) dz` for a single term.
    pub fn inner_term_integral(&self, r: usize, i: usize, a: f64, b: f64) -> Result<f64> {
        self.term_sum(r, &[i], a, b, None)
    }

    /// `int_a^b p_i(z) a_r(h(anchor_t), tau_i(z)) dz` for a single term.
    pub fn outer_term_integral(&self, r: usize, i: usize, anchor_t: f64, a: f64, b: f64) -> Result<f64> {
        self.term_sum(r, &[i], a, b, Some(self.h(anchor_t)))
    }

    /// `int_{h(t)}^t sum_i p_i(z) a_r(h(z), tau_i(z)) dz`.
    pub fn f_inner(&self, r: usize, t: f64) -> Result<f64> {
        self.term_sum(r, &self.all_terms(), self.h(t), t, None)
    }

    /// `int_{h(t)}^t sum_i p_i(z) a_r(h(t), tau_i(z)) dz`.
    pub fn f_outer(&self, r: usize, t: f64) -> Result<f64> {
        let ht = self.h(t);
        self.term_sum(r, &self.all_terms(), ht, t, Some(ht))
    }

    pub fn f(&self, kind: IntegralKind, r: usize, t: f64) -> Result<f64> {
        match kind {
            IntegralKind::Inner => self.f_inner(r, t),
            IntegralKind::Outer => self.f_outer(r, t),
        }
    }
}

/// One-shot `F_inner`; builds the envelope on every call.
pub fn f_inner(eq: &DelayEquation, r: usize, t: f64, tol: f64) -> Result<f64> {
    Kernel::new(eq, tol)?.f_inner(r, t)
}

/// One-shot `F_outer`; builds the envelope on every call.
pub fn f_outer(eq: &DelayEquation, r: usize, t: f64, tol: f64) -> Result<f64> {
    Kernel::new(eq, tol)?.f_outer(r, t)
}
