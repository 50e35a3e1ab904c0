//! Composite Gauss-Legendre quadrature with adaptive bisection.

use std::f64::consts::PI;
use std::sync::OnceLock;

const MAX_BISECTIONS: u32 = 30;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum();
        sum * half
    }
}

// P_n(x) and P_n'(x) by the three-term recurrence
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// The order-8 rule used throughout the kernel.
pub fn gauss8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Integrates `f` over `[a, b]`, bisecting until the two-half estimate
/// agrees with the whole-interval estimate to within `tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(rule: &GaussLegendre, f: &mut F, a: f64, b: f64, tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    let whole = rule.apply(f, a, b);
    refine(rule, f, a, b, whole, tol, 0)
}

fn refine<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.apply(f, a, m);
    let right = rule.apply(f, m, b);
    let halves = left + right;
    let floor = 8.0 * f64::EPSILON * halves.abs();
    if (halves - whole).abs() <= tol.max(floor) || depth >= MAX_BISECTIONS || m <= a || m >= b {
        return halves;
    }
    refine(rule, f, a, m, left, 0.5 * tol, depth + 1) + refine(rule, f, m, b, right, 0.5 * tol, depth + 1)
}

/// Sum of adaptive integrals over consecutive `cuts`; the tolerance is
/// shared out in proportion to piece length.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, f: &mut F, cuts: &[f64], tol: f64) -> f64 {
    if cuts.len() < 2 {
        return 0.0;
    }
    let total = cuts[cuts.len() - 1] - cuts[0];
    if total <= 0.0 {
        return 0.0;
    }
    cuts.windows(2)
        .map(|w| adaptive(rule, f, w[0], w[1], tol * (w[1] - w[0]) / total))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order8_is_exact_through_degree_15() {
        let rule = gauss8();
        assert_eq!(rule.order(), 8);
        for deg in 0..=15 {
            let exact = (2.0f64.powi(deg + 1) - (-1.0f64).powi(deg + 1)) / (deg + 1) as f64;
            let got = rule.apply(&mut |x: f64| x.powi(deg), -1.0, 2.0);
            assert_relative_eq!(got, exact, epsilon = 1e-12, max_relative = 1e-13);
        }
        let wsum: f64 = rule.weights.iter().sum();
        assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn low_orders_match_tables() {
        let r2 = GaussLegendre::new(2);
        assert_relative_eq!(r2.nodes[1], 1.0 / 3.0f64.sqrt(), epsilon = 1e-15);
        let r3 = GaussLegendre::new(3);
        assert_relative_eq!(r3.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r3.nodes[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn adaptive_handles_kinks_and_exponentials() {
        let got = adaptive(gauss8(), &mut |x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(got, 0.5 * (0.09 + 0.49), epsilon = 1e-11);
        let got = composite(gauss8(), &mut |x: f64| (2.0 * x).exp(), &[0.0, 0.5, 3.0], 1e-10);
        assert_relative_eq!(got, 0.5 * (6.0f64.exp() - 1.0), max_relative = 1e-12);
    }
}
