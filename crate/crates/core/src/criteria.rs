//! Asymptotic constants and oscillation verdicts.
//!
//! Every liminf and limsup is an extremum over one period in the steady state:
//! the function class is eventually periodic, so a single period past the
//! burn-in carries all the asymptotic information.

use std::f64::consts::E;

use serde::Serialize;

use crate::envelope::tau_max;
use crate::error::{Error, Result};
use crate::extremum::{evaluate, extremum_from_samples, scan_grid, scan_period, Extremum, Goal};
use crate::kernel::{IntegralKind, Kernel};
use crate::model::DelayEquation;

pub const DEFAULT_LIMINF_GRID: usize = 2000;
pub const DEFAULT_LIMSUP_GRID: usize = 500;
pub const LAMBDA_TOL: f64 = 1e-12;
/// A verdict counts only when its margin exceeds this multiple of `tol`.
pub const MARGIN_FACTOR: f64 = 10.0;

/// Smallest multiple of the period that is at least `t`.
fn align(t: f64, period: f64) -> f64 {
    (t / period).ceil() * period
}

fn liminf_start(kernel: &Kernel) -> f64 {
    let eq = kernel.equation();
    align(kernel.envelope().t_stab() + eq.period(), eq.period())
}

/// Start of the steady-state window for depth-`r` criterion integrals; every
/// nested kernel argument lies past the envelope transient.
pub fn limsup_start(kernel: &Kernel, r: usize) -> f64 {
    let eq = kernel.equation();
    let burn_in = (r as f64 + 2.0) * (eq.max_lag() + eq.period());
    align(kernel.envelope().t_stab() + burn_in, eq.period())
}

fn candidates(kernel: &Kernel, start: f64) -> Vec<f64> {
    let eq = kernel.equation();
    let end = start + eq.period();
    let mut c = eq.breakpoints_in(start, end);
    c.extend(kernel.envelope().breakpoints_in(start, end));
    c
}

/// `liminf int_{tau_max(t)}^t sum p_i` over a grid of `grid` points.
pub fn alpha_scan(kernel: &Kernel, grid: usize) -> Result<Extremum> {
    let eq = kernel.equation();
    let start = liminf_start(kernel);
    let f = |t: f64| Ok(eq.coeff_sum_integral(tau_max(eq, t), t));
    scan_period(&f, start, eq.period(), grid, &candidates(kernel, start), Goal::Min)
}

/// `alpha = liminf int_{tau_max(t)}^t sum p_i`.
pub fn alpha(eq: &DelayEquation, tol: f64) -> Result<f64> {
    Ok(alpha_scan(&Kernel::new(eq, tol)?, DEFAULT_LIMINF_GRID)?.value)
}

/// Same liminf taken over `[h(t), t]`; equal to `alpha` for admissible equations.
pub fn envelope_alpha_scan(kernel: &Kernel, grid: usize) -> Result<Extremum> {
    let eq = kernel.equation();
    let start = liminf_start(kernel);
    let f = |t: f64| Ok(eq.coeff_sum_integral(kernel.h(t), t));
    scan_period(&f, start, eq.period(), grid, &candidates(kernel, start), Goal::Min)
}

/// `liminf sum_i p_i(t) d_i(t)`.
pub fn hunt_yorke_scan(kernel: &Kernel, grid: usize) -> Result<Extremum> {
    let eq = kernel.equation();
    let start = liminf_start(kernel);
    let f = |t: f64| {
        Ok(eq
            .coefficients()
            .iter()
            .zip(eq.lags())
            .map(|(p, d)| p.eval(t) * d.eval(t))
            .sum())
    };
    scan_period(&f, start, eq.period(), grid, &candidates(kernel, start), Goal::Min)
}

pub fn hunt_yorke_liminf(eq: &DelayEquation, tol: f64) -> Result<f64> {
    Ok(hunt_yorke_scan(&Kernel::new(eq, tol)?, DEFAULT_LIMINF_GRID)?.value)
}

/// `limsup int_{tau_max(t)}^t sum p_i`, the quantity in the single-delay
/// criterion with a monotone argument.
pub fn window_limsup_scan(kernel: &Kernel, grid: usize) -> Result<Extremum> {
    let eq = kernel.equation();
    let start = liminf_start(kernel);
    let f = |t: f64| Ok(eq.coeff_sum_integral(tau_max(eq, t), t));
    scan_period(&f, start, eq.period(), grid, &candidates(kernel, start), Goal::Max)
}

/// Smaller root of `lambda = exp(alpha * lambda)`.
///
/// Bisection of `exp(alpha * lambda) - lambda`, which is positive at 1 and
/// non-positive at its stationary point `ln(1/alpha) / alpha` when
/// `alpha <= 1/e`.
pub fn lambda0(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::Inapplicable(format!("lambda0 needs alpha > 0, got {alpha}")));
    }
    if alpha > 1.0 / E {
        return Err(Error::NoRealRoot(alpha));
    }
    let g = |x: f64| (alpha * x).exp() - x;
    let mut lo = 1.0;
    let mut hi = (1.0 / alpha).ln() / alpha;
    if g(hi) > 0.0 {
        // alpha rounds to 1/e: double root at the stationary point
        return Ok(hi);
    }
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(1 + ln lambda0) / lambda0`.
pub fn main_threshold(lambda0: f64) -> f64 {
    (1.0 + lambda0.ln()) / lambda0
}

/// `1 - (1 - alpha - sqrt(1 - 2 alpha - alpha^2)) / 2`.
pub fn bcs_threshold(alpha: f64) -> f64 {
    1.0 - (1.0 - alpha - (1.0 - 2.0 * alpha - alpha * alpha).sqrt()) / 2.0
}

/// limsup of `F_inner` or `F_outer` at depth `r`.
pub fn limsup_scan(kernel: &Kernel, r: usize, kind: IntegralKind, grid: usize) -> Result<Extremum> {
    Ok(limsup_profile(kernel, r, kind, grid)?.max)
}

/// Samples of `F_inner` or `F_outer` over one steady-state period.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// Absolute sample times, increasing, on `[start, start + period)`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Refined maximum over the closed period.
    pub max: Extremum,
}

pub fn limsup_profile(kernel: &Kernel, r: usize, kind: IntegralKind, grid: usize) -> Result<Profile> {
    let start = limsup_start(kernel, r);
    let period = kernel.equation().period();
    let f = |t: f64| kernel.f(kind, r, t);
    let mut times = scan_grid(start, period, grid, &candidates(kernel, start));
    let mut values = evaluate(&f, &times)?;
    let max = extremum_from_samples(&f, &times, &values, Goal::Max)?;
    // the closing point repeats the first one modulo the period
    if times.len() > 1 && *times.last().unwrap() >= start + period {
        times.pop();
        values.pop();
    }
    Ok(Profile { times, values, max })
}

pub fn limsup_f(eq: &DelayEquation, r: usize, kind: IntegralKind, tol: f64) -> Result<f64> {
    Ok(limsup_scan(&Kernel::new(eq, tol)?, r, kind, DEFAULT_LIMSUP_GRID)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    #[serde(rename = "ladde_1_3")]
    Ladde,
    #[serde(rename = "hunt_yorke_1_4")]
    HuntYorke,
    #[serde(rename = "kwong_1_5")]
    Kwong,
    #[serde(rename = "bcs_1_8")]
    BcsLimsup,
    #[serde(rename = "bcs_1_9")]
    BcsAlpha,
    #[serde(rename = "main_2_8")]
    Main,
}

impl CriterionName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ladde => "ladde_1_3",
            Self::HuntYorke => "hunt_yorke_1_4",
            Self::Kwong => "kwong_1_5",
            Self::BcsLimsup => "bcs_1_8",
            Self::BcsAlpha => "bcs_1_9",
            Self::Main => "main_2_8",
        }
    }
}

impl std::fmt::Display for CriterionName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictParams {
    pub r: usize,
    pub grid: usize,
    pub tol: f64,
    pub scan_start: f64,
    pub scan_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub name: CriterionName,
    /// Left-hand side; NaN (null in JSON) when it cannot be formed.
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    pub satisfied: bool,
    pub applicable: bool,
    /// Positive margin within the strictness band: reported, not counted.
    pub marginal: bool,
    pub params: VerdictParams,
}

impl CriterionVerdict {
    fn new(name: CriterionName, value: f64, threshold: f64, applicable: bool, params: VerdictParams) -> Self {
        let margin = value - threshold;
        let band = MARGIN_FACTOR * params.tol;
        let satisfied = applicable && margin > band;
        let marginal = applicable && margin > 0.0 && margin <= band;
        Self {
            name,
            value,
            threshold,
            margin,
            satisfied,
            applicable,
            marginal,
            params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Oscillatory,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub alpha: f64,
    /// The same liminf over `[h(t), t]`.
    pub alpha_envelope: f64,
    pub lambda0: Option<f64>,
    pub criteria: Vec<CriterionVerdict>,
    pub overall: Overall,
    /// First satisfied criterion in evaluation order.
    pub witness: Option<CriterionName>,
    pub satisfied_by: Vec<CriterionName>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn verdict(&self, name: CriterionName) -> Option<&CriterionVerdict> {
        self.criteria.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub r: usize,
    pub tol: f64,
    pub limsup_grid: usize,
    pub liminf_grid: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            r: 1,
            tol: crate::kernel::DEFAULT_TOL,
            limsup_grid: DEFAULT_LIMSUP_GRID,
            liminf_grid: DEFAULT_LIMINF_GRID,
        }
    }
}

/// Evaluates every criterion in order and picks the first satisfied one as
/// the witness.
pub fn check_all(eq: &DelayEquation, opts: &CheckOptions) -> Result<CheckReport> {
    let kernel = Kernel::new(eq, opts.tol)?;
    let period = eq.period();
    let inv_e = 1.0 / E;
    let liminf_params = {
        let start = liminf_start(&kernel);
        VerdictParams {
            r: 0,
            grid: opts.liminf_grid,
            tol: opts.tol,
            scan_start: start,
            scan_end: start + period,
        }
    };
    let limsup_params = {
        let start = limsup_start(&kernel, opts.r);
        VerdictParams {
            r: opts.r,
            grid: opts.limsup_grid,
            tol: opts.tol,
            scan_start: start,
            scan_end: start + period,
        }
    };

    let alpha = alpha_scan(&kernel, opts.liminf_grid)?.value;
    let alpha_envelope = envelope_alpha_scan(&kernel, opts.liminf_grid)?.value;
    let hunt_yorke = hunt_yorke_scan(&kernel, opts.liminf_grid)?.value;
    let alpha_ok = alpha > 0.0 && alpha <= inv_e;
    let lambda0 = if alpha_ok { Some(lambda0(alpha)?) } else { None };
    let main_thr = lambda0.map(main_threshold).unwrap_or(f64::NAN);

    let mut criteria = Vec::with_capacity(6);
    criteria.push(CriterionVerdict::new(CriterionName::Ladde, alpha, inv_e, true, liminf_params));
    criteria.push(CriterionVerdict::new(CriterionName::HuntYorke, hunt_yorke, inv_e, true, liminf_params));

    let kwong_value = if eq.m() == 1 {
        window_limsup_scan(&kernel, opts.liminf_grid)?.value
    } else {
        f64::NAN
    };
    let kwong_ok = eq.m() == 1 && eq.delay_is_nondecreasing(0) && alpha_ok;
    criteria.push(CriterionVerdict::new(CriterionName::Kwong, kwong_value, main_thr, kwong_ok, liminf_params));

    let outer = limsup_scan(&kernel, opts.r, IntegralKind::Outer, opts.limsup_grid)?.value;
    let inner = limsup_scan(&kernel, opts.r, IntegralKind::Inner, opts.limsup_grid)?.value;
    criteria.push(CriterionVerdict::new(CriterionName::BcsLimsup, outer, 1.0, true, limsup_params));
    let bcs_thr = if alpha_ok { bcs_threshold(alpha) } else { f64::NAN };
    criteria.push(CriterionVerdict::new(CriterionName::BcsAlpha, outer, bcs_thr, alpha_ok, limsup_params));
    criteria.push(CriterionVerdict::new(CriterionName::Main, inner, main_thr, alpha_ok, limsup_params));

    let satisfied_by: Vec<CriterionName> = criteria.iter().filter(|v| v.satisfied).map(|v| v.name).collect();
    let witness = satisfied_by.first().copied();
    let overall = if witness.is_some() {
        Overall::Oscillatory
    } else {
        Overall::Inconclusive
    };

    let mut notes = Vec::new();
    for v in criteria.iter().filter(|v| v.marginal) {
        notes.push(format!(
            "{}: margin {:.3e} is within {} x tol of zero; treated as inconclusive",
            v.name, v.margin, MARGIN_FACTOR
        ));
    }
    let by_name = |n| criteria.iter().find(|v| v.name == n).unwrap();
    let (c18, c19) = (by_name(CriterionName::BcsLimsup), by_name(CriterionName::BcsAlpha));
    if c19.satisfied && !c18.satisfied {
        notes.push(format!(
            "bcs_1_9 holds while bcs_1_8 fails: the alpha-dependent threshold {:.6} sits below 1 and the same outer limsup {:.6} clears it",
            c19.threshold, c19.value
        ));
    }
    if !alpha_ok {
        notes.push(format!(
            "alpha = {alpha:.6} lies outside (0, 1/e]; lambda0 and the criteria that use it are inapplicable"
        ));
    }
    if eq.m() == 1 && !eq.delay_is_nondecreasing(0) {
        notes.push("kwong_1_5 needs a nondecreasing delay argument; this one is not".to_string());
    }

    Ok(CheckReport {
        alpha,
        alpha_envelope,
        lambda0,
        criteria,
        overall,
        witness,
        satisfied_by,
        notes,
    })
}
