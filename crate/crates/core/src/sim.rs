//! Method-of-steps simulation of `x'(t) = -sum_i p_i(t) x(tau_i(t))`.
//!
//! Classic RK4 on a uniform grid. Delayed values come from the stored past
//! through cubic Hermite interpolation of `(x, x')`, or from the history for
//! arguments below zero. The step never exceeds the smallest lag, so no stage
//! reads inside the step being taken.

use crate::envelope::combined_h;
use crate::error::{Error, Result};
use crate::kernel::{a_r, KernelCache};
use crate::model::DelayEquation;

/// Initial data on `[start, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Constant(f64),
    /// `exp(-mu t)`.
    Exponential(f64),
    /// Linear interpolation of `(t, x)` samples.
    Tabulated(Vec<(f64, f64)>),
}

impl History {
    pub fn tabulated(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.len() < 2 {
            return Err(Error::InvalidEquation("tabulated history needs at least two samples".into()));
        }
        if samples.iter().any(|s| !(s.0.is_finite() && s.1.is_finite())) {
            return Err(Error::InvalidEquation("tabulated history has non-finite samples".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidEquation("tabulated history has repeated times".into()));
        }
        let last = samples[samples.len() - 1].0;
        if last < 0.0 {
            return Err(Error::InvalidEquation(format!("tabulated history ends at {last}, before t = 0")));
        }
        Ok(History::Tabulated(samples))
    }

    /// Earliest time the history covers.
    pub fn start(&self) -> f64 {
        match self {
            History::Tabulated(s) => s[0].0,
            _ => f64::NEG_INFINITY,
        }
    }

    fn locate(samples: &[(f64, f64)], t: f64) -> usize {
        let j = samples.partition_point(|s| s.0 <= t);
        j.clamp(1, samples.len() - 1) - 1
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            History::Constant(c) => *c,
            History::Exponential(mu) => (-mu * t).exp(),
            History::Tabulated(s) => {
                let j = Self::locate(s, t);
                let (t0, x0) = s[j];
                let (t1, x1) = s[j + 1];
                x0 + (x1 - x0) * (t - t0) / (t1 - t0)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            History::Constant(_) => 0.0,
            History::Exponential(mu) => -mu * (-mu * t).exp(),
            History::Tabulated(s) => {
                let j = Self::locate(s, t);
                (s[j + 1].1 - s[j].1) / (s[j + 1].0 - s[j].0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    step: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    sign_changes: Vec<(f64, f64)>,
    history: History,
}

impl Trajectory {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Brackets `(t_a, t_b)` around every sign change over the whole span.
    pub fn sign_changes(&self) -> &[(f64, f64)] {
        &self.sign_changes
    }

    pub fn first_sign_change(&self) -> Option<f64> {
        self.sign_changes.first().map(|b| b.1)
    }

    /// Dense value: history before 0, Hermite interpolation inside the span.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.history.value(t);
        }
        hermite(self.step, &self.values, &self.derivatives, t)
    }
}

fn hermite(step: f64, x: &[f64], dx: &[f64], t: f64) -> f64 {
    let n = x.len();
    if n == 1 {
        return x[0];
    }
    let k = ((t / step).floor() as usize).min(n - 2);
    let s = (t - k as f64 * step) / step;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * x[k] + h10 * step * dx[k] + h01 * x[k + 1] + h11 * step * dx[k + 1]
}

fn scan_sign_changes(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &x) in times.iter().zip(values) {
        if x == 0.0 {
            continue;
        }
        if let Some((lt, lx)) = last {
            if (lx > 0.0) != (x > 0.0) {
                out.push((lt, t));
            }
        }
        last = Some((t, x));
    }
    out
}

/// Integrates on `[0, t_end]` with uniform step `step`.
pub fn integrate(eq: &DelayEquation, history: &History, t_end: f64, step: f64) -> Result<Trajectory> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidEquation(format!("step must be positive, got {step}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidEquation(format!("end time must be positive, got {t_end}")));
    }
    let needed = -eq.max_lag();
    if history.start() > needed {
        return Err(Error::InsufficientHistory {
            start: history.start(),
            needed,
        });
    }
    let min_lag = eq.min_lag();
    if step > min_lag {
        return Err(Error::StepTooLarge { step, min_lag });
    }

    let n = (t_end / step).round().max(1.0) as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut derivatives = Vec::with_capacity(n + 1);

    let rhs = |t: f64, x: &[f64], dx: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (p, d) in eq.coefficients().iter().zip(eq.lags()) {
            let c = p.eval(t);
            if c == 0.0 {
                continue;
            }
            let s = t - d.eval(t);
            let xs = if s < 0.0 { history.value(s) } else { hermite(step, x, dx, s) };
            acc += c * xs;
        }
        -acc
    };

    values.push(history.value(0.0));
    let d0 = rhs(0.0, &values, &[0.0]);
    derivatives.push(d0);
    for k in 0..n {
        let t = k as f64 * step;
        let x = values[k];
        // the right-hand side reads only the past, so k2 and k3 coincide
        let k1 = derivatives[k];
        let k2 = rhs(t + 0.5 * step, &values, &derivatives);
        let k3 = k2;
        let k4 = rhs(t + step, &values, &derivatives);
        values.push(x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        derivatives.push(k4);
    }
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let sign_changes = scan_sign_changes(&times, &values);
    Ok(Trajectory {
        step,
        times,
        values,
        derivatives,
        sign_changes,
        history: history.clone(),
    })
}

/// Sign alternations among samples with `t` in `[a, b]`; exact zeros are
/// skipped, so a zero between opposite signs counts once.
pub fn count_sign_changes(traj: &Trajectory, a: f64, b: f64) -> usize {
    let lo = traj.times.partition_point(|&t| t < a);
    let hi = traj.times.partition_point(|&t| t <= b);
    if lo >= hi {
        return 0;
    }
    scan_sign_changes(&traj.times[lo..hi], &traj.values[lo..hi]).len()
}

/// Default relative budget for [`verify_lemma1`].
pub const LEMMA1_BUDGET: f64 = 1e-5;
pub const LEMMA2_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    /// max of `(x(t) a_r(t, s) - x(s)) / x(s)`.
    pub max_relative: f64,
    pub max_absolute: f64,
    pub worst_pair: (f64, f64),
    pub pairs: usize,
    pub budget: f64,
    pub violated: bool,
}

fn require_positive(traj: &Trajectory, from: f64, what: &str) -> Result<()> {
    let lo = traj.times.partition_point(|&t| t < from.max(0.0));
    if from < 0.0 && traj.history.value(from) <= 0.0 {
        return Err(Error::Inapplicable(format!("{what}: history is not positive")));
    }
    if traj.values[lo..].iter().any(|&x| x <= 0.0) {
        return Err(Error::Inapplicable(format!("{what}: trajectory is not positive on [{from}, {}]", traj.end())));
    }
    Ok(())
}

/// Checks `x(t) a_r(t, s) <= x(s)` on the given `(s, t)` pairs.
pub fn verify_lemma1(
    eq: &DelayEquation,
    traj: &Trajectory,
    r: usize,
    pairs: &[(f64, f64)],
    tol: f64,
    budget: f64,
) -> Result<Lemma1Report> {
    require_positive(traj, 0.0, "x(t) a_r(t, s) <= x(s)")?;
    let cache = KernelCache::default();
    let mut report = Lemma1Report {
        max_relative: f64::NEG_INFINITY,
        max_absolute: f64::NEG_INFINITY,
        worst_pair: (f64::NAN, f64::NAN),
        pairs: pairs.len(),
        budget,
        violated: false,
    };
    for &(s, t) in pairs {
        if s < 0.0 || t > traj.end() {
            return Err(Error::OutsideDomain(format!("pair ({s}, {t}) leaves the trajectory span")));
        }
        let a = a_r(eq, r, t, s, tol, &cache)?;
        let (xs, xt) = (traj.value_at(s), traj.value_at(t));
        let abs = xt * a - xs;
        let rel = abs / xs;
        if rel > report.max_relative {
            report.max_relative = rel;
            report.worst_pair = (s, t);
        }
        report.max_absolute = report.max_absolute.max(abs);
    }
    report.violated = report.max_relative > budget;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    pub min_ratio: f64,
    pub at: f64,
    pub lambda0: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Checks `x(h(t)) / x(t) >= lambda0(alpha)` over `[a, b]` (default: the
/// second half of the trajectory).
pub fn verify_lemma2(
    eq: &DelayEquation,
    traj: &Trajectory,
    alpha: f64,
    window: Option<(f64, f64)>,
    tol: f64,
) -> Result<Lemma2Report> {
    let lambda0 = crate::criteria::lambda0(alpha)?;
    let h = combined_h(eq)?;
    let (a, b) = window.unwrap_or((0.5 * traj.end(), traj.end()));
    require_positive(traj, h.eval(a), "x(h(t)) / x(t) >= lambda0")?;
    let lo = traj.times.partition_point(|&t| t < a);
    let hi = traj.times.partition_point(|&t| t <= b);
    let mut min_ratio = f64::INFINITY;
    let mut at = f64::NAN;
    for k in lo..hi {
        let t = traj.times[k];
        let ratio = traj.value_at(h.eval(t)) / traj.values[k];
        if ratio < min_ratio {
            min_ratio = ratio;
            at = t;
        }
    }
    let margin = min_ratio - lambda0;
    Ok(Lemma2Report {
        min_ratio,
        at,
        lambda0,
        margin,
        holds: margin >= -tol,
    })
}
