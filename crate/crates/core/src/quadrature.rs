//! Tensor-product Gauss–Legendre rules for cell and space-time averages.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of Pₙ by Newton iteration from the Chebyshev guesses.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::Argument(format!("quadrature order must be in 1..=64, got {n}")));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`, weights normalized to sum to 1.
    pub fn averaging(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| (c + r * z, 0.5 * w)).collect()
    }
}

/// Pₙ(z) and Pₙ'(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Average of `f` over the cube `[c − h/2, c + h/2)³`.
pub fn cell_average(rule: &GaussLegendre, c: [f64; 3], h: f64, f: impl Fn([f64; 3]) -> f64) -> f64 {
    let px = rule.averaging(c[0] - 0.5 * h, c[0] + 0.5 * h);
    let py = rule.averaging(c[1] - 0.5 * h, c[1] + 0.5 * h);
    let pz = rule.averaging(c[2] - 0.5 * h, c[2] + 0.5 * h);
    let mut acc = 0.0;
    for &(z, wz) in &pz {
        for &(y, wy) in &py {
            for &(x, wx) in &px {
                acc += wx * wy * wz * f([x, y, z]);
            }
        }
    }
    acc
}

/// Average of a vector-valued `f(t, x)` over `[t0, t1] × C_h(c)`.
pub fn space_time_average(
    rule_t: &GaussLegendre,
    rule_x: &GaussLegendre,
    t0: f64,
    t1: f64,
    c: [f64; 3],
    h: f64,
    f: impl Fn(f64, [f64; 3]) -> [f64; 3],
) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for (t, wt) in rule_t.averaging(t0, t1) {
        let mut slab = [0.0; 3];
        for a in 0..3 {
            slab[a] = cell_average(rule_x, c, h, |x| f(t, x)[a]);
        }
        for a in 0..3 {
            acc[a] += wt * slab[a];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_low_order_rules() {
        let g2 = GaussLegendre::new(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((g2.nodes[1] - r).abs() < 1e-15 && (g2.nodes[0] + r).abs() < 1e-15);
        assert!((g2.weights[0] - 1.0).abs() < 1e-15);
        let g3 = GaussLegendre::new(3).unwrap();
        assert!(g3.nodes[1].abs() < 1e-15);
        assert!((g3.weights[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((g3.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let g = GaussLegendre::new(n).unwrap();
            for k in 0..(2 * n) {
                let q: f64 = g.nodes.iter().zip(&g.weights).map(|(z, w)| w * z.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn rejects_bad_order() {
        assert!(GaussLegendre::new(0).is_err());
    }

    #[test]
    fn affine_cell_average_is_centre_value() {
        let g = GaussLegendre::new(1).unwrap();
        let v = cell_average(&g, [0.3, -0.2, 1.1], 0.25, |y| 2.0 * y[0] - y[1] + 0.5 * y[2] + 1.0);
        assert!((v - (0.6 + 0.2 + 0.55 + 1.0)).abs() < 1e-14);
    }
}
