use std::sync::OnceLock;

use num_complex::Complex64;

/// Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n(x) and P_{n−1}(x)
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let (pn, pn1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
                deriv = nf * (x * pn - pn1) / (x * x - 1.0);
                let dx = pn / deriv;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F, a: f64, b: f64) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    pub fn integrate_real<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// Shared rules of common sizes.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=64).map(|k| GaussLegendre::new(k.max(1))).collect());
    assert!(n <= 64, "shared rules go up to 64 nodes");
    &rules[n]
}

/// Composite rule over consecutive breakpoints.
pub fn composite<F: FnMut(f64) -> Complex64>(rule: &GaussLegendre, mut f: F, edges: &[f64]) -> Complex64 {
    edges
        .windows(2)
        .map(|w| rule.integrate(&mut f, w[0], w[1]))
        .sum()
}

pub fn composite_real<F: FnMut(f64) -> f64>(rule: &GaussLegendre, mut f: F, edges: &[f64]) -> f64 {
    edges
        .windows(2)
        .map(|w| rule.integrate_real(&mut f, w[0], w[1]))
        .sum()
}

/// Uniform breakpoints a = e₀ < … < e_n = b.
pub fn uniform_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

/// Trapezoid sum h·Σ f(a + kh) over the window [a, b], for integrands that
/// decay to negligible size at both ends.
pub fn trapezoid<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, h: f64) -> Complex64 {
    let n = ((b - a) / h).ceil() as usize;
    (0..=n).map(|k| f(a + k as f64 * h)).sum::<Complex64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 20, 24, 48] {
            let r = GaussLegendre::new(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(10);
        // degree 19 is integrated exactly
        let v = r.integrate_real(|x| x.powi(18) + x.powi(19), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        let v = r.integrate_real(|x| x * x, 0.0, 3.0);
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn known_nodes() {
        let r = GaussLegendre::new(3);
        assert!((r.nodes[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn composite_oscillatory() {
        let r = gauss_legendre(24);
        let v = composite_real(r, |x| (10.0 * x).cos(), &uniform_edges(0.0, 3.0, 12));
        assert!((v - (30.0f64).sin() / 10.0).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_gaussian() {
        let v = trapezoid(|x| Complex64::new((-x * x).exp(), 0.0), -10.0, 10.0, 0.25);
        assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }
}
