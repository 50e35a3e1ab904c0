//! Extrema of periodic functions over one period: a grid scan seeded with
//! known breakpoints, then golden-section refinement of the best local
//! extrema.

use rayon::prelude::*;

use crate::error::Result;

/// Bracket width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-10;
const REFINED_CANDIDATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Min,
    Max,
}

impl Goal {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Goal::Min => a < b,
            Goal::Max => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    /// Location of the extremum in absolute time.
    pub at: f64,
}

/// `n` uniform points over `[start, start + period]` merged with the
/// candidates that fall inside, sorted and deduplicated.
pub fn scan_grid(start: f64, period: f64, n: usize, candidates: &[f64]) -> Vec<f64> {
    let n = n.max(2);
    let end = start + period;
    let mut grid: Vec<f64> = (0..=n).map(|j| start + period * j as f64 / n as f64).collect();
    grid.extend(candidates.iter().copied().filter(|&t| t >= start && t <= end));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    grid
}

/// Evaluates `f` on every grid point, in parallel.
pub fn evaluate<F>(f: &F, grid: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    grid.par_iter().map(|&t| f(t)).collect()
}

/// Extremum of `f` over one period starting at `start`.
pub fn scan_period<F>(f: &F, start: f64, period: f64, n: usize, candidates: &[f64], goal: Goal) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = scan_grid(start, period, n, candidates);
    let values = evaluate(f, &grid)?;
    extremum_from_samples(f, &grid, &values, goal)
}

/// Refines the best local extrema of sampled values with golden-section.
pub fn extremum_from_samples<F>(f: &F, grid: &[f64], values: &[f64], goal: Goal) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let n = grid.len();
    let mut local: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || !goal.better(values[i - 1], values[i]);
            let right = i + 1 == n || !goal.better(values[i + 1], values[i]);
            left && right
        })
        .collect();
    local.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        if goal == Goal::Max {
            ord.reverse()
        } else {
            ord
        }
    });
    local.truncate(REFINED_CANDIDATES);

    let refined: Vec<Extremum> = local
        .par_iter()
        .map(|&i| {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            let seed = Extremum { value: values[i], at: grid[i] };
            golden(f, lo, hi, goal).map(|g| if goal.better(g.value, seed.value) { g } else { seed })
        })
        .collect::<Result<_>>()?;

    let mut best = Extremum { value: values[0], at: grid[0] };
    for (i, &v) in values.iter().enumerate() {
        if goal.better(v, best.value) {
            best = Extremum { value: v, at: grid[i] };
        }
    }
    for e in refined {
        if goal.better(e.value, best.value) {
            best = e;
        }
    }
    Ok(best)
}

/// Golden-section search on `[lo, hi]`.
pub fn golden<F>(f: &F, mut lo: f64, mut hi: f64, goal: Goal) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi <= lo {
        return Ok(Extremum { value: f(lo)?, at: lo });
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > GOLDEN_TOL && iterations < 200 {
        iterations += 1;
        if goal.better(f1, f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if goal.better(f1, f2) {
        Extremum { value: f1, at: x1 }
    } else {
        Extremum { value: f2, at: x2 }
    })
}
