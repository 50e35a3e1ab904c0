//! Running-supremum envelopes of non-monotone delay arguments.
//!
//! For a delay argument `tau(t) = t - d(t)` the envelope
//! `h(t) = sup_{0 <= s <= t} tau(s)` is again piecewise linear. It is stored
//! as a finite transient followed by a periodic tail in lag form:
//! `h(t) = t - e(t)` for `t >= t_stab`.

use crate::error::{Error, Result};
use crate::model::{periodic_points_in, DelayEquation, PiecewisePeriodic};

const SNAP: f64 = 1e-12;
const SWEEP_PERIODS: usize = 3;

/// Linear piece of an envelope on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPiece {
    pub t0: f64,
    pub t1: f64,
    pub h0: f64,
    pub h1: f64,
}

impl LinearPiece {
    pub fn slope(&self) -> f64 {
        (self.h1 - self.h0) / (self.t1 - self.t0)
    }

    fn at(&self, t: f64) -> f64 {
        self.h0 + (self.h1 - self.h0) * (t - self.t0) / (self.t1 - self.t0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFunction {
    transient: Vec<LinearPiece>,
    tail_lag: PiecewisePeriodic,
    t_stab: f64,
}

impl EnvelopeFunction {
    /// Time after which `t - h(t)` is exactly periodic.
    pub fn t_stab(&self) -> f64 {
        self.t_stab
    }

    pub fn transient(&self) -> &[LinearPiece] {
        &self.transient
    }

    /// The periodic lag form `e` with `h(t) = t - e(t)` past `t_stab`.
    pub fn tail_lag(&self) -> &PiecewisePeriodic {
        &self.tail_lag
    }

    /// `h(t)`; arguments below zero are clamped to zero.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        if t < self.t_stab {
            let j = self.transient.partition_point(|p| p.t0 <= t) - 1;
            self.transient[j].at(t)
        } else {
            t - self.tail_lag.eval(t)
        }
    }

    /// Breakpoints of `h` strictly inside `(a, b)`, sorted.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .transient
            .iter()
            .map(|p| p.t0)
            .chain(std::iter::once(self.t_stab))
            .filter(|&t| t > a && t < b && t <= self.t_stab)
            .collect();
        let local: Vec<f64> = self.tail_lag.knot_times().collect();
        out.extend(
            periodic_points_in(&local, self.tail_lag.period(), a.max(self.t_stab), b)
                .into_iter()
                .filter(|&t| t > self.t_stab),
        );
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Linear pieces of `h` on `[a, b]`.
    pub fn pieces(&self, a: f64, b: f64) -> Vec<LinearPiece> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints_in(a, b));
        cuts.push(b);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| LinearPiece {
                t0: w[0],
                t1: w[1],
                h0: self.eval(w[0]),
                h1: self.eval(w[1]),
            })
            .collect()
    }
}

fn push_merged(out: &mut Vec<LinearPiece>, piece: LinearPiece) {
    if piece.t1 - piece.t0 <= SNAP * piece.t0.abs().max(1.0) {
        if let Some(last) = out.last_mut() {
            last.t1 = piece.t1;
            last.h1 = piece.h1;
        }
        return;
    }
    if let Some(last) = out.last_mut() {
        let continuous = (last.h1 - piece.h0).abs() <= SNAP * piece.h0.abs().max(1.0);
        if continuous && (last.slope() - piece.slope()).abs() <= SNAP {
            last.t1 = piece.t1;
            last.h1 = piece.h1;
            return;
        }
    }
    out.push(piece);
}

fn eval_pieces(pieces: &[LinearPiece], t: f64) -> f64 {
    let j = pieces.partition_point(|p| p.t0 <= t).max(1) - 1;
    pieces[j].at(t)
}

/// Finds the first period after which the lag form repeats and packages
/// the envelope. `pieces` must cover `[0, SWEEP_PERIODS * period]`.
fn stabilize(pieces: Vec<LinearPiece>, period: f64, id: usize) -> Result<EnvelopeFunction> {
    let lag = |t: f64| t - eval_pieces(&pieces, t);
    let boundaries: Vec<f64> = pieces.iter().map(|p| p.t0).collect();
    let window = |k: usize| -> Vec<f64> {
        let (lo, hi) = (k as f64 * period, (k + 1) as f64 * period);
        let mut u: Vec<f64> = boundaries
            .iter()
            .filter(|&&t| t > lo && t < hi)
            .map(|&t| t - lo)
            .collect();
        u.push(0.0);
        u.push(period);
        u
    };
    // merged slivers shift knots by up to SNAP in time, which steep pieces
    // turn into much larger jumps in value
    let steepest = pieces.iter().map(|p| p.slope().abs()).fold(1.0, f64::max);
    let matches = |k: usize| {
        let mut u = window(k);
        u.extend(window(k + 1));
        let (lo, hi) = (k as f64 * period, (k + 1) as f64 * period);
        let slack = 4.0 * SNAP * steepest * (hi + period).max(1.0);
        u.iter().all(|&x| {
            let (a, b) = (lag(lo + x), lag(hi + x));
            (a - b).abs() <= SNAP * a.abs().max(1.0) + slack
        })
    };
    // a running sup over [0, t] only depends on (t - period, t] once t >= period
    let t_stab = if matches(0) { 0.0 } else { period };

    let mut knots = vec![(0.0, lag(t_stab))];
    for &t in &boundaries {
        let u = t - t_stab;
        if u > SNAP && u < period - SNAP {
            knots.push((u, lag(t)));
        }
    }
    let tail_lag = PiecewisePeriodic::new(period, knots, 0.0)
        .map_err(|_| Error::EnvelopeNotPeriodic(id))?;

    let transient = pieces
        .into_iter()
        .filter(|p| p.t0 < t_stab)
        .map(|mut p| {
            if p.t1 > t_stab {
                p.h1 = p.at(t_stab);
                p.t1 = t_stab;
            }
            p
        })
        .collect();
    Ok(EnvelopeFunction {
        transient,
        tail_lag,
        t_stab,
    })
}

fn sweep(lag: &PiecewisePeriodic) -> Vec<LinearPiece> {
    let period = lag.period();
    let mut out = Vec::new();
    let mut running = -lag.eval(0.0);
    for k in 0..SWEEP_PERIODS {
        let base = k as f64 * period;
        for (s0, s1, d0, d1) in lag.segments() {
            let (a, b) = (base + s0, base + s1);
            let (ya, yb) = (a - d0, b - d1);
            if yb <= running {
                push_merged(&mut out, LinearPiece { t0: a, t1: b, h0: running, h1: running });
                continue;
            }
            if ya >= running - SNAP * running.abs().max(1.0) {
                push_merged(&mut out, LinearPiece { t0: a, t1: b, h0: ya.max(running), h1: yb });
            } else {
                let c = a + (running - ya) * (b - a) / (yb - ya);
                push_merged(&mut out, LinearPiece { t0: a, t1: c, h0: running, h1: running });
                push_merged(&mut out, LinearPiece { t0: c, t1: b, h0: running, h1: yb });
            }
            running = yb;
        }
    }
    out
}

/// Envelope `h(t) = sup_{0 <= s <= t} (s - d(s))` of one continuous lag.
pub fn running_sup(lag: &PiecewisePeriodic) -> Result<EnvelopeFunction> {
    stabilize(sweep(lag), lag.period(), 0)
}

fn envelope_of(eq: &DelayEquation, i: usize) -> Result<EnvelopeFunction> {
    stabilize(sweep(&eq.lags()[i]), eq.period(), i)
}

/// Pointwise maximum of several envelopes sharing a period.
pub fn max_overlay(envelopes: &[EnvelopeFunction], period: f64) -> Result<EnvelopeFunction> {
    let horizon = SWEEP_PERIODS as f64 * period;
    let mut cuts = vec![0.0, horizon];
    for e in envelopes {
        cuts.extend(e.breakpoints_in(0.0, horizon));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ends: Vec<(f64, f64)> = envelopes.iter().map(|e| (e.eval(a), e.eval(b))).collect();
        let mut sub = vec![a, b];
        for i in 0..ends.len() {
            for j in i + 1..ends.len() {
                let da = ends[i].0 - ends[j].0;
                let db = ends[i].1 - ends[j].1;
                if da * db < 0.0 {
                    sub.push(a + da / (da - db) * (b - a));
                }
            }
        }
        sub.sort_by(f64::total_cmp);
        for v in sub.windows(2) {
            let (x, y) = (v[0], v[1]);
            if y <= x {
                continue;
            }
            let lin = |i: usize, t: f64| ends[i].0 + (ends[i].1 - ends[i].0) * (t - a) / (b - a);
            let mid = 0.5 * (x + y);
            let mut best = 0;
            for i in 1..ends.len() {
                if lin(i, mid) > lin(best, mid) {
                    best = i;
                }
            }
            push_merged(&mut out, LinearPiece { t0: x, t1: y, h0: lin(best, x), h1: lin(best, y) });
        }
    }
    stabilize(out, period, 0)
}

/// Envelopes `h_i` of every delay term.
pub fn term_envelopes(eq: &DelayEquation) -> Result<Vec<EnvelopeFunction>> {
    (0..eq.m()).map(|i| envelope_of(eq, i)).collect()
}

/// `h(t) = max_i h_i(t)`.
pub fn combined_h(eq: &DelayEquation) -> Result<EnvelopeFunction> {
    let envelopes = term_envelopes(eq)?;
    if envelopes.len() == 1 {
        return Ok(envelopes.into_iter().next().unwrap());
    }
    max_overlay(&envelopes, eq.period())
}

pub fn tau_max(eq: &DelayEquation, t: f64) -> f64 {
    (0..eq.m()).map(|i| eq.tau(i, t)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn tau_min(eq: &DelayEquation, t: f64) -> f64 {
    (0..eq.m()).map(|i| eq.tau(i, t)).fold(f64::INFINITY, f64::min)
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
    fn example_envelope_has_three_branches() {
        let h1 = running_sup(&example_lag(0.0)).unwrap();
        assert_eq!(h1.t_stab(), 0.0);
        let knots = h1.tail_lag().breakpoints();
        assert_eq!(knots.len(), 3);
        assert!((knots[1].0 - 1.0).abs() < 1e-12);
        assert!((knots[2].0 - 2.6).abs() < 1e-12);
        for k in 0..6 {
            let base = 3.0 * k as f64;
            assert_relative_eq!(h1.eval(base + 0.5), base + 0.5 - 1.0, epsilon = 1e-12);
            for u in [1.0, 1.7, 2.0, 2.3, 2.6] {
                assert_relative_eq!(h1.eval(base + u), base, epsilon = 1e-12);
            }
            let t = base + 2.8;
            assert_relative_eq!(h1.eval(t), 5.0 * t - 12.0 * k as f64 - 13.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn shifted_delay_shifts_envelope() {
        let h1 = running_sup(&example_lag(0.0)).unwrap();
        let h2 = running_sup(&example_lag(0.1)).unwrap();
        for j in 0..900 {
            let t = j as f64 * 0.01;
            assert_relative_eq!(h2.eval(t), h1.eval(t) - 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn combined_envelope_of_example_is_h1() {
        let eq = example();
        let h = combined_h(&eq).unwrap();
        let h1 = running_sup(&example_lag(0.0)).unwrap();
        for j in 0..900 {
            let t = j as f64 * 0.01;
            assert_relative_eq!(h.eval(t), h1.eval(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn swapping_terms_keeps_combined_envelope() {
        let eq = example();
        let swapped = DelayEquation::new(
            eq.coefficients().iter().rev().cloned().collect(),
            eq.lags().iter().rev().cloned().collect(),
        )
        .unwrap();
        let (a, b) = (combined_h(&eq).unwrap(), combined_h(&swapped).unwrap());
        for j in 0..900 {
            let t = j as f64 * 0.01;
            assert_eq!(a.eval(t), b.eval(t));
        }
    }

    #[test]
    fn monotone_delay_is_its_own_envelope() {
        let lag = PiecewisePeriodic::constant(1.0, 1.0).unwrap();
        let h = running_sup(&lag).unwrap();
        for j in 0..500 {
            let t = j as f64 * 0.013;
            assert_relative_eq!(h.eval(t), t - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn late_maximum_stabilizes_after_one_period() {
        let lag = PiecewisePeriodic::new(1.0, vec![(0.0, 3.0), (0.9, 0.1)], 0.0).unwrap();
        let h = running_sup(&lag).unwrap();
        assert_eq!(h.t_stab(), 1.0);
        assert_relative_eq!(h.eval(0.0), -3.0);
        assert_relative_eq!(h.eval(1.0), 0.8, epsilon = 1e-12);
        assert_relative_eq!(h.eval(2.0), 1.8, epsilon = 1e-12);
        assert_relative_eq!(h.eval(1.5), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn crossing_envelopes_get_a_crossing_breakpoint() {
        // two delays whose envelopes cross inside each period
        let d1 = PiecewisePeriodic::new(2.0, vec![(0.0, 1.0), (1.0, 2.0)], 0.0).unwrap();
        let d2 = PiecewisePeriodic::new(2.0, vec![(0.0, 2.0), (1.0, 1.0)], 0.0).unwrap();
        let p = PiecewisePeriodic::constant(2.0, 0.1).unwrap();
        let eq = DelayEquation::new(vec![p.clone(), p], vec![d1, d2]).unwrap();
        let h = combined_h(&eq).unwrap();
        let parts = term_envelopes(&eq).unwrap();
        for j in 0..1200 {
            let t = j as f64 * 0.005;
            let want = parts[0].eval(t).max(parts[1].eval(t));
            assert_relative_eq!(h.eval(t), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn extreme_delays() {
        let eq = example();
        for j in 0..300 {
            let t = j as f64 * 0.01;
            assert_relative_eq!(tau_min(&eq, t), tau_max(&eq, t) - 0.1, epsilon = 1e-12);
            if t.rem_euclid(3.0) <= 1.0 {
                assert_relative_eq!(tau_max(&eq, t), t - 1.0, epsilon = 1e-12);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_lag() -> impl Strategy<Value = PiecewisePeriodic> {
            (0.5f64..3.0, prop::collection::vec((0.01f64..1.0, 0.05f64..4.0), 1..6)).prop_map(|(period, raw)| {
                let mut times: Vec<f64> = raw.iter().skip(1).map(|r| r.0 * period).collect();
                times.sort_by(f64::total_cmp);
                times.dedup();
                let mut pts = vec![(0.0, raw[0].1)];
                pts.extend(times.into_iter().zip(raw.iter().skip(1).map(|r| r.1)));
                PiecewisePeriodic::new(period, pts, 0.0).unwrap()
            })
        }

        proptest! {
            #[test]
            fn envelope_is_a_nondecreasing_majorant(lag in arb_lag()) {
                let h = running_sup(&lag).unwrap();
                let p = lag.period();
                let dmin = lag.min_value();
                // rounding in t is amplified by the steepest segment
                let steep = lag.segments().map(|(t0, t1, v0, v1)| ((v1 - v0) / (t1 - t0)).abs()).fold(1.0, f64::max);
                let eps = 1e-12 * steep;
                let mut grid: Vec<f64> = (0..=800).map(|j| j as f64 * 6.0 * p / 800.0).collect();
                grid.extend(h.breakpoints_in(0.0, 6.0 * p));
                grid.sort_by(f64::total_cmp);
                let mut prev = f64::NEG_INFINITY;
                let mut running = f64::NEG_INFINITY;
                for &t in &grid {
                    let v = h.eval(t);
                    let tau = t - lag.eval(t);
                    running = running.max(tau);
                    prop_assert!(v >= prev - eps);
                    prop_assert!(tau <= v + eps);
                    prop_assert!(v <= t - dmin + eps);
                    // sampled running max can only undershoot the exact envelope
                    prop_assert!(running <= v + eps);
                    prev = v;
                }
            }

            #[test]
            fn envelope_slopes_come_from_the_delay(lag in arb_lag()) {
                let h = running_sup(&lag).unwrap();
                let slopes: Vec<f64> = lag.segments().map(|(t0, t1, v0, v1)| 1.0 - (v1 - v0) / (t1 - t0)).collect();
                for piece in h.pieces(0.0, 4.0 * lag.period()) {
                    let s = piece.slope();
                    prop_assert!(s.abs() < 1e-9 || slopes.iter().any(|&q| q > 0.0 && (q - s).abs() < 1e-6 * q.max(1.0)));
                }
            }
        }
    }
}
