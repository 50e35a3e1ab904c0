//! Periodic piecewise-linear functions and the delay equation built from them.
//!
//! Every coefficient `p_i` and every lag `d_i(t) = t - tau_i(t)` is a
//! [`PiecewisePeriodic`] sharing one common period. Values are linear between
//! breakpoints on half-open segments `[t_j, t_{j+1})`, and the last segment
//! interpolates back to the first value at `t = period` unless an explicit
//! knot at `period` is supplied.

use crate::error::{Error, FunctionError, Result};

/// Tolerance for matching periods and for the wraparound continuity of lags.
pub const CONTINUITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePeriodic {
    period: f64,
    breakpoints: Vec<(f64, f64)>,
    offset: f64,
    // breakpoints plus the closing knot at `period`
    knots: Vec<(f64, f64)>,
    // primitive of the interpolant (offset excluded) at each knot
    cumulative: Vec<f64>,
}

impl PiecewisePeriodic {
    /// Builds a function from `(t, v)` pairs. The first pair must sit at
    /// `t = 0`; times are nondecreasing and a repeated interior time marks a
    /// jump. A final knot exactly at `period` is allowed.
    pub fn new(period: f64, breakpoints: Vec<(f64, f64)>, offset: f64) -> Result<Self, FunctionError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(FunctionError::BadPeriod(period));
        }
        if breakpoints.is_empty() {
            return Err(FunctionError::Empty);
        }
        if !offset.is_finite() {
            return Err(FunctionError::NonFinite { index: 0 });
        }
        for (index, &(t, v)) in breakpoints.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) {
                return Err(FunctionError::NonFinite { index });
            }
            if !(0.0..=period).contains(&t) {
                return Err(FunctionError::OutOfRange { index, t });
            }
        }
        if breakpoints[0].0 != 0.0 {
            return Err(FunctionError::FirstNotAtZero(breakpoints[0].0));
        }
        let n = breakpoints.len();
        for index in 1..n {
            let (prev, t) = (breakpoints[index - 1].0, breakpoints[index].0);
            let repeated = t == prev;
            // jumps only strictly inside the period, and at most two knots per time
            let bad_repeat = repeated
                && (t == 0.0
                    || t == period
                    || (index >= 2 && breakpoints[index - 2].0 == t));
            if t < prev || bad_repeat {
                return Err(FunctionError::NotIncreasing { index, t });
            }
            if t == period && index != n - 1 {
                return Err(FunctionError::NotIncreasing { index, t });
            }
        }

        let mut knots = breakpoints.clone();
        if knots[n - 1].0 < period {
            knots.push((period, knots[0].1));
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
            cumulative.push(acc);
        }
        Ok(Self {
            period,
            breakpoints,
            offset,
            knots,
            cumulative,
        })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self, FunctionError> {
        Self::new(period, vec![(0.0, value)], 0.0)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Breakpoints exactly as supplied.
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// True when the function is a single constant value with no offset.
    pub fn as_constant(&self) -> Option<f64> {
        (self.breakpoints.len() == 1 && self.offset == 0.0).then(|| self.breakpoints[0].1)
    }

    fn reduce(&self, t: f64) -> (f64, f64) {
        let mut k = (t / self.period).floor();
        let mut u = t - k * self.period;
        if u >= self.period {
            u -= self.period;
            k += 1.0;
        }
        if u < 0.0 {
            u = 0.0;
        }
        (k, u)
    }

    fn segment(&self, u: f64) -> usize {
        // last knot with time <= u; the closing knot is strictly beyond u
        let j = self.knots.partition_point(|k| k.0 <= u) - 1;
        j.min(self.knots.len() - 2)
    }

    /// Value at any real `t`, using the periodic extension.
    pub fn eval(&self, t: f64) -> f64 {
        let (_, u) = self.reduce(t);
        let j = self.segment(u);
        let (t0, v0) = self.knots[j];
        let (t1, v1) = self.knots[j + 1];
        v0 + (v1 - v0) * (u - t0) / (t1 - t0) + self.offset
    }

    fn local_primitive(&self, u: f64) -> f64 {
        let j = self.segment(u);
        let (t0, v0) = self.knots[j];
        let (t1, v1) = self.knots[j + 1];
        let dx = u - t0;
        self.cumulative[j] + dx * (v0 + 0.5 * (v1 - v0) * dx / (t1 - t0))
    }

    /// Integral over one full period.
    pub fn period_integral(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1] + self.offset * self.period
    }

    /// Signed integral over `[s, t]`; negative when `t < s`.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        let (ks, us) = self.reduce(s);
        let (kt, ut) = self.reduce(t);
        let whole = self.cumulative[self.cumulative.len() - 1];
        (kt - ks) * whole + (self.local_primitive(ut) - self.local_primitive(us)) + self.offset * (t - s)
    }

    /// Distinct knot times within one period, `[0, period)`.
    pub fn knot_times(&self) -> impl Iterator<Item = f64> + '_ {
        let mut last = f64::NAN;
        self.breakpoints.iter().filter_map(move |&(t, _)| {
            if t == last || t >= self.period {
                None
            } else {
                last = t;
                Some(t)
            }
        })
    }

    /// Positive-length linear pieces of one period as `(t0, t1, v0, v1)`,
    /// offset included.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.knots.windows(2).filter(|w| w[1].0 > w[0].0).map(move |w| {
            (w[0].0, w[1].0, w[0].1 + self.offset, w[1].1 + self.offset)
        })
    }

    /// Smallest value over a period. Piecewise-linear, so attained at a knot.
    pub fn min_value(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min) + self.offset
    }

    pub fn max_value(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max) + self.offset
    }

    fn check_nonnegative(&self) -> Result<(), FunctionError> {
        for (index, &(_, v)) in self.breakpoints.iter().enumerate() {
            if v + self.offset < 0.0 {
                return Err(FunctionError::Negative {
                    index,
                    value: v + self.offset,
                });
            }
        }
        Ok(())
    }

    fn check_lag(&self) -> Result<(), FunctionError> {
        for (index, &(_, v)) in self.breakpoints.iter().enumerate() {
            if v + self.offset <= 0.0 {
                return Err(FunctionError::NonPositiveLag {
                    index,
                    value: v + self.offset,
                });
            }
        }
        for index in 1..self.breakpoints.len() {
            let (a, b) = (self.breakpoints[index - 1], self.breakpoints[index]);
            if a.0 == b.0 && (a.1 - b.1).abs() > CONTINUITY_TOL {
                return Err(FunctionError::Discontinuous { index });
            }
        }
        let last = self.breakpoints.len() - 1;
        let (t_end, v_end) = self.breakpoints[last];
        if t_end == self.period && (v_end - self.breakpoints[0].1).abs() > CONTINUITY_TOL {
            return Err(FunctionError::Discontinuous { index: last });
        }
        Ok(())
    }
}

/// `x'(t) + sum_i p_i(t) x(t - d_i(t)) = 0` with periodic piecewise-linear
/// coefficients `p_i >= 0` and continuous lags `d_i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEquation {
    period: f64,
    coefficients: Vec<PiecewisePeriodic>,
    lags: Vec<PiecewisePeriodic>,
}

impl DelayEquation {
    pub fn new(coefficients: Vec<PiecewisePeriodic>, lags: Vec<PiecewisePeriodic>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidEquation("at least one delay term is required".into()));
        }
        if coefficients.len() != lags.len() {
            return Err(Error::InvalidEquation(format!(
                "{} coefficients but {} delays",
                coefficients.len(),
                lags.len()
            )));
        }
        let period = coefficients[0].period();
        let wrap = |kind: &str, i: usize, source: FunctionError| Error::InvalidFunction {
            field: format!("{kind}[{i}]"),
            source,
        };
        let check_period = |f: &PiecewisePeriodic| {
            if (f.period() - period).abs() > CONTINUITY_TOL * period {
                Err(FunctionError::PeriodMismatch {
                    expected: period,
                    found: f.period(),
                })
            } else {
                Ok(())
            }
        };
        for (i, p) in coefficients.iter().enumerate() {
            check_period(p)
                .and_then(|_| p.check_nonnegative())
                .map_err(|e| wrap("coefficients", i, e))?;
        }
        for (i, d) in lags.iter().enumerate() {
            check_period(d)
                .and_then(|_| d.check_lag())
                .map_err(|e| wrap("delays", i, e))?;
        }
        Ok(Self {
            period,
            coefficients,
            lags,
        })
    }

    /// Number of delay terms.
    pub fn m(&self) -> usize {
        self.coefficients.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coefficients(&self) -> &[PiecewisePeriodic] {
        &self.coefficients
    }

    pub fn lags(&self) -> &[PiecewisePeriodic] {
        &self.lags
    }

    /// Delayed argument `tau_i(t) = t - d_i(t)`.
    pub fn tau(&self, i: usize, t: f64) -> f64 {
        t - self.lags[i].eval(t)
    }

    pub fn coeff_sum(&self, t: f64) -> f64 {
        self.coefficients.iter().map(|p| p.eval(t)).sum()
    }

    /// `int_s^t sum_i p_i`, exact up to rounding.
    pub fn integrate_coeff_sum(&self, s: f64, t: f64) -> Result<f64> {
        if s > t {
            return Err(Error::ArgumentOrder { s, t });
        }
        Ok(self.coeff_sum_integral(s, t))
    }

    /// Signed variant of [`integrate_coeff_sum`](Self::integrate_coeff_sum).
    pub fn coeff_sum_integral(&self, s: f64, t: f64) -> f64 {
        self.coefficients.iter().map(|p| p.integral(s, t)).sum()
    }

    pub fn max_lag(&self) -> f64 {
        self.lags.iter().map(|d| d.max_value()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_lag(&self) -> f64 {
        self.lags.iter().map(|d| d.min_value()).fold(f64::INFINITY, f64::min)
    }

    /// True when `tau_i` is nondecreasing, i.e. every lag slope is at most 1.
    pub fn delay_is_nondecreasing(&self, i: usize) -> bool {
        self.lags[i]
            .segments()
            .all(|(t0, t1, v0, v1)| (v1 - v0) / (t1 - t0) <= 1.0)
    }

    /// Sorted, deduplicated knot times of every coefficient and lag inside
    /// the open interval `(a, b)`.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut local: Vec<f64> = self
            .coefficients
            .iter()
            .chain(self.lags.iter())
            .flat_map(|f| f.knot_times())
            .collect();
        local.sort_by(f64::total_cmp);
        local.dedup();
        periodic_points_in(&local, self.period, a, b)
    }
}

/// Replicates the one-period knot times `local` across `(a, b)`.
pub(crate) fn periodic_points_in(local: &[f64], period: f64, a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if b.is_nan() || a.is_nan() || b <= a || local.is_empty() {
        return out;
    }
    let k0 = (a / period).floor() as i64;
    let k1 = (b / period).floor() as i64;
    for k in k0..=k1 {
        let base = k as f64 * period;
        for &u in local {
            let t = base + u;
            if t > a && t < b {
                out.push(t);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_lag(offset: f64) -> PiecewisePeriodic {
        PiecewisePeriodic::new(3.0, vec![(0.0, 1.0), (1.0, 1.0), (2.0, 5.0)], offset).unwrap()
    }

    fn example() -> DelayEquation {
        let p = PiecewisePeriodic::constant(3.0, 0.135).unwrap();
        DelayEquation::new(vec![p.clone(), p], vec![example_lag(0.0), example_lag(0.1)]).unwrap()
    }

    #[test]
    fn eval_example_lag() {
        let d = example_lag(0.0);
        assert_eq!(d.eval(0.5), 1.0);
        assert_eq!(d.eval(2.0), 5.0);
        assert_eq!(0.5 - d.eval(0.5), -0.5);
        assert_eq!(2.0 - d.eval(2.0), -3.0);
        assert_relative_eq!(d.eval(2.5), 3.0);
        assert_relative_eq!(d.eval(3.0 * 7.0 + 1.5), 3.0);
        // tau_1 = -3t + 12k + 3 on [3k+1, 3k+2]
        let t = 3.0 * 4.0 + 1.25;
        assert_relative_eq!(t - d.eval(t), -3.0 * t + 12.0 * 4.0 + 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_is_constant() {
        let c = PiecewisePeriodic::constant(3.0, 0.135).unwrap();
        for t in [0.0, 0.3, 2.999, 17.2, -4.0] {
            assert_eq!(c.eval(t), 0.135);
        }
        assert_eq!(c.as_constant(), Some(0.135));
    }

    #[test]
    fn coefficient_sum_integrals() {
        let eq = example();
        for k in 0..5 {
            let s = 3.0 * k as f64;
            assert_relative_eq!(eq.integrate_coeff_sum(s, s + 1.0).unwrap(), 0.27, epsilon = 1e-12);
        }
        assert_eq!(eq.integrate_coeff_sum(2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(eq.integrate_coeff_sum(2.0, 1.0), Err(Error::ArgumentOrder { .. })));
    }

    #[test]
    fn sawtooth_integral_matches_midpoint_refinement() {
        // p(t) = t on [0, 1), period 1: knot (1, 1) closes the ramp before wrapping to 0
        let p = PiecewisePeriodic::new(1.0, vec![(0.0, 0.0), (1.0, 1.0)], 0.0).unwrap();
        assert_relative_eq!(p.integral(0.0, 1.0), 0.5, epsilon = 1e-15);
        let n = 100_000;
        let h = 2.5 / n as f64;
        let mid: f64 = (0..n).map(|j| p.eval(0.3 + (j as f64 + 0.5) * h) * h).sum();
        assert_relative_eq!(p.integral(0.3, 2.8), mid, epsilon = 1e-8);
    }

    #[test]
    fn jumps_use_half_open_segments() {
        let p = PiecewisePeriodic::new(2.0, vec![(0.0, 1.0), (1.0, 1.0), (1.0, 3.0), (2.0, 3.0)], 0.0).unwrap();
        assert_eq!(p.eval(0.999), 1.0);
        assert_eq!(p.eval(1.0), 3.0);
        assert_eq!(p.eval(2.0), 1.0);
        assert_relative_eq!(p.integral(0.0, 2.0), 4.0);
        assert_eq!(p.min_value(), 1.0);
    }

    #[test]
    fn validation() {
        assert!(matches!(PiecewisePeriodic::new(0.0, vec![(0.0, 1.0)], 0.0), Err(FunctionError::BadPeriod(_))));
        assert!(matches!(PiecewisePeriodic::new(1.0, vec![], 0.0), Err(FunctionError::Empty)));
        assert!(matches!(
            PiecewisePeriodic::new(1.0, vec![(0.1, 1.0)], 0.0),
            Err(FunctionError::FirstNotAtZero(_))
        ));
        assert!(matches!(
            PiecewisePeriodic::new(1.0, vec![(0.0, 1.0), (0.5, 1.0), (0.4, 1.0)], 0.0),
            Err(FunctionError::NotIncreasing { index: 2, .. })
        ));
        assert!(matches!(
            PiecewisePeriodic::new(1.0, vec![(0.0, 1.0), (1.5, 1.0)], 0.0),
            Err(FunctionError::OutOfRange { index: 1, .. })
        ));

        let neg = PiecewisePeriodic::constant(3.0, -0.1).unwrap();
        let err = DelayEquation::new(vec![neg], vec![example_lag(0.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidFunction { ref field, source: FunctionError::Negative { .. } } if field == "coefficients[0]"));

        let p = PiecewisePeriodic::constant(3.0, 0.1).unwrap();
        let zero_lag = PiecewisePeriodic::new(3.0, vec![(0.0, 1.0), (1.0, 0.0)], 0.0).unwrap();
        assert!(DelayEquation::new(vec![p.clone()], vec![zero_lag]).is_err());

        let jump_lag = PiecewisePeriodic::new(3.0, vec![(0.0, 1.0), (1.0, 1.0), (1.0, 2.0)], 0.0).unwrap();
        assert!(DelayEquation::new(vec![p.clone()], vec![jump_lag]).is_err());
        let wrap_lag = PiecewisePeriodic::new(3.0, vec![(0.0, 1.0), (3.0, 2.0)], 0.0).unwrap();
        assert!(DelayEquation::new(vec![p.clone()], vec![wrap_lag]).is_err());

        let other = PiecewisePeriodic::constant(2.0, 1.0).unwrap();
        assert!(DelayEquation::new(vec![p.clone()], vec![other]).is_err());
        assert!(DelayEquation::new(vec![p.clone(), p], vec![example_lag(0.0)]).is_err());
    }

    #[test]
    fn breakpoints_replicate() {
        let eq = example();
        assert_eq!(eq.breakpoints_in(2.5, 7.5), vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        assert!(!eq.delay_is_nondecreasing(0));
        assert_eq!(eq.max_lag(), 5.1);
        assert_eq!(eq.min_lag(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_function() -> impl Strategy<Value = PiecewisePeriodic> {
            (0.5f64..4.0, prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..6)).prop_map(|(period, raw)| {
                let mut times: Vec<f64> = raw.iter().skip(1).map(|r| r.0 * period).collect();
                times.sort_by(f64::total_cmp);
                times.dedup();
                times.retain(|&t| t > 0.0);
                let mut pts = vec![(0.0, raw[0].1)];
                pts.extend(times.into_iter().zip(raw.iter().skip(1).map(|r| r.1)));
                PiecewisePeriodic::new(period, pts, 0.0).unwrap()
            })
        }

        proptest! {
            #[test]
            fn integral_is_additive(f in arb_function(), s in 0.0f64..20.0, a in 0.0f64..1.0, len in 0.0f64..15.0) {
                let t = s + len;
                let u = s + a * len;
                let whole = f.integral(s, t);
                let split = f.integral(s, u) + f.integral(u, t);
                prop_assert!((whole - split).abs() <= 1e-12 * whole.abs().max(1.0));
            }

            #[test]
            fn shifting_by_a_period_is_invisible(f in arb_function(), s in 0.0f64..20.0, len in 0.0f64..10.0, t in 0.0f64..30.0) {
                let p = f.period();
                let a = f.integral(s, s + len);
                let b = f.integral(s + p, s + len + p);
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                prop_assert!((f.eval(t) - f.eval(t + p)).abs() <= 1e-12 * f.max_value().abs().max(1.0));
            }
        }
    }
}
