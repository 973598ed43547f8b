//! Method-of-characteristics oracle for smooth data.
//!
//! The exact solution is `f(t, x) = f⁰(X(0, t, x))` with `X` the flow of
//! `x' = v(s, x)`. Swirl presets rotate rigidly on each orbit, so their
//! flow and the exact jets are available in closed form; everything else
//! goes through classical RK4.

use crate::error::{Error, Result};
use crate::explicit::{IndexBox, Observer, StepContext};
use crate::grid::{Axis, ScalarField, VectorField};
use crate::jet::{Jet, Real};
use crate::presets::{Initial, Velocity};

/// Fixed-step RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Largest substep `Δs`.
    pub substep: f64,
    /// Box the trajectory must stay in, with `margin` slack.
    pub bounds: Option<([f64; 3], [f64; 3])>,
    pub margin: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { substep: 1e-3, bounds: None, margin: 0.0 }
    }
}

impl FlowConfig {
    /// `Δs = min(τ/4, 10⁻³·T)`.
    pub fn for_run(tau: f64, t_final: f64) -> Self {
        FlowConfig { substep: (0.25 * tau).min(1e-3 * t_final), ..Default::default() }
    }

    pub fn with_bounds(mut self, lo: [f64; 3], hi: [f64; 3], margin: f64) -> Self {
        self.bounds = Some((lo, hi));
        self.margin = margin;
        self
    }
}

fn axpy(x: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]]
}

/// `X(s, t0, ξ)` by RK4 from time `t0` to time `s` (either direction).
pub fn flow(v: &dyn Velocity, s: f64, t0: f64, xi: [f64; 3], cfg: &FlowConfig) -> Result<[f64; 3]> {
    if !(cfg.substep > 0.0 && cfg.substep.is_finite()) {
        return Err(Error::Config(format!("flow substep must be positive, got {}", cfg.substep)));
    }
    let span = s - t0;
    if span == 0.0 {
        return Ok(xi);
    }
    let steps = (span.abs() / cfg.substep).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    let mut x = xi;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let k1 = v.eval(t, x);
        let k2 = v.eval(t + 0.5 * dt, axpy(x, 0.5 * dt, k1));
        let k3 = v.eval(t + 0.5 * dt, axpy(x, 0.5 * dt, k2));
        let k4 = v.eval(t + dt, axpy(x, dt, k3));
        for a in 0..3 {
            x[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        if let Some((lo, hi)) = cfg.bounds {
            if (0..3).any(|a| x[a] < lo[a] - cfg.margin || x[a] > hi[a] + cfg.margin) {
                return Err(Error::Domain(format!(
                    "trajectory from {xi:?} left the domain at s = {} (position {x:?})",
                    t + dt
                )));
            }
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Data(format!("trajectory from {xi:?} became non-finite")));
        }
    }
    Ok(x)
}

/// Rotation of `x` about the vertical axis through `c` by angle `theta`.
fn rotate<R: Real>(x: [R; 3], c: [f64; 2], theta: R) -> [R; 3] {
    let (s, co) = (theta.sin(), theta.cos());
    let dx = x[0] - c[0];
    let dy = x[1] - c[1];
    [co * dx - s * dy + c[0], s * dx + co * dy + c[1], x[2]]
}

/// Closed-form `X(s, t0, ξ)` for swirl fields.
pub fn swirl_flow(v: &dyn Velocity, s: f64, t0: f64, xi: [f64; 3]) -> Option<[f64; 3]> {
    let (c, rate) = v.swirl(xi)?;
    Some(rotate(xi, c, rate * v.modulation_integral(t0, s)))
}

/// `f(t, x)`, in closed form for swirl fields and by RK4 otherwise.
pub fn exact_solution(f0: &dyn Initial, v: &dyn Velocity, t: f64, x: [f64; 3], cfg: &FlowConfig) -> Result<f64> {
    if t == 0.0 {
        return Ok(f0.eval(x));
    }
    let xi = match swirl_flow(v, 0.0, t, x) {
        Some(xi) => xi,
        None => flow(v, 0.0, t, x, cfg)?,
    };
    Ok(f0.eval(xi))
}

/// Exact solution with its spatial gradient and Hessian.
pub trait SolutionOracle {
    fn value(&self, t: f64, x: [f64; 3]) -> Result<f64>;
    fn jet(&self, t: f64, x: [f64; 3]) -> Result<Jet>;
}

/// Characteristics oracle for a velocity and initial datum.
///
/// Jets are exact for swirl fields. Otherwise they come from central
/// differences of RK4 values with spacing `fd_step`, which is slow and
/// meant for spot checks.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicsOracle<'a> {
    pub f0: &'a dyn Initial,
    pub v: &'a dyn Velocity,
    pub flow: FlowConfig,
    pub fd_step: f64,
}

impl<'a> CharacteristicsOracle<'a> {
    pub fn new(f0: &'a dyn Initial, v: &'a dyn Velocity, flow: FlowConfig) -> Self {
        CharacteristicsOracle { f0, v, flow, fd_step: 1e-3 }
    }

    /// Whether jets are available in closed form.
    pub fn exact_jets(&self) -> bool {
        self.v.swirl_jet(Jet::point([0.0; 3])).is_some() && self.f0.eval_jet(Jet::point([0.0; 3])).is_some()
    }

    fn swirl_jet(&self, t: f64, x: [f64; 3]) -> Option<Jet> {
        let (c, _) = self.v.swirl(x)?;
        let xs = Jet::point(x);
        let rate = self.v.swirl_jet(xs)?;
        let theta = rate * (-self.v.modulation_integral(0.0, t));
        self.f0.eval_jet(rotate(xs, c, theta))
    }
}

impl SolutionOracle for CharacteristicsOracle<'_> {
    fn value(&self, t: f64, x: [f64; 3]) -> Result<f64> {
        exact_solution(self.f0, self.v, t, x, &self.flow)
    }

    fn jet(&self, t: f64, x: [f64; 3]) -> Result<Jet> {
        if !self.f0.is_smooth() || !self.v.is_smooth() {
            return Err(Error::Precondition(format!(
                "derivatives need smooth data, got {} with {}",
                self.f0.name(),
                self.v.name()
            )));
        }
        if let Some(j) = self.swirl_jet(t, x) {
            return Ok(j);
        }
        let d = self.fd_step;
        let f = |p: [f64; 3]| self.value(t, p);
        let shift = |p: [f64; 3], a: usize, s: f64| {
            let mut q = p;
            q[a] += s;
            q
        };
        let centre = f(x)?;
        let mut out = Jet { v: centre, d: [0.0; 3], h: [[0.0; 3]; 3] };
        for a in 0..3 {
            let fp = f(shift(x, a, d))?;
            let fm = f(shift(x, a, -d))?;
            out.d[a] = (fp - fm) / (2.0 * d);
            out.h[a][a] = (fp - 2.0 * centre + fm) / (d * d);
            for b in 0..a {
                let pp = f(shift(shift(x, a, d), b, d))?;
                let pm = f(shift(shift(x, a, d), b, -d))?;
                let mp = f(shift(shift(x, a, -d), b, d))?;
                let mm = f(shift(shift(x, a, -d), b, -d))?;
                let m = (pp - pm - mp + mm) / (4.0 * d * d);
                out.h[a][b] = m;
                out.h[b][a] = m;
            }
        }
        Ok(out)
    }
}

/// Sup errors of one level: `[max|bⁿ|, max|bⁿᵢ|, max|bⁿᵢⱼ|]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeRow {
    pub n: usize,
    pub t: f64,
    pub sup: [f64; 3],
}

/// Errors of `g ≈ f(t,·)`, `D⁺ᵢg ≈ ∂ᵢf` and `D⁻ⱼD⁺ᵢg ≈ ∂ⱼ∂ᵢf` over the
/// support box of `g` grown by two nodes, excluding the outermost layer of
/// the window. Outside that box both `g` and (for runs within the CFL
/// bound) `f` vanish.
pub fn cascade_row(g: &ScalarField, n: usize, t: f64, oracle: &dyn SolutionOracle) -> Result<CascadeRow> {
    let grid = g.grid();
    let h = grid.h();
    let dims = grid.dims();
    let mut sup = [0.0f64; 3];
    let Some(b) = IndexBox::support_of(g) else {
        return Ok(CascadeRow { n, t, sup });
    };
    let (b, _) = b.grow(grid);
    let (b, _) = b.grow(grid);
    let lo: Vec<i64> = (0..3).map(|a| b.lo[a].max(1)).collect();
    let hi: Vec<i64> = (0..3).map(|a| b.hi[a].min(dims[a] as i64 - 2)).collect();
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let p = [i, j, k];
                let f = oracle.jet(t, grid.position_ijk(p))?;
                let gv = g.get(p);
                sup[0] = sup[0].max((gv - f.v).abs());
                let mut gi = [0.0; 3];
                for ax in Axis::ALL {
                    let a = ax.idx();
                    gi[a] = (g.shifted(p, ax, 1) - gv) / h;
                    sup[1] = sup[1].max((gi[a] - f.d[a]).abs());
                }
                for ai in Axis::ALL {
                    for aj in Axis::ALL {
                        let mut q = p;
                        q[aj.idx()] -= 1;
                        let back = (g.shifted(q, ai, 1) - g.get(q)) / h;
                        let gij = (gi[ai.idx()] - back) / h;
                        sup[2] = sup[2].max((gij - f.h[ai.idx()][aj.idx()]).abs());
                    }
                }
            }
        }
    }
    Ok(CascadeRow { n, t, sup })
}

/// Records [`cascade_row`] every `every` levels and at the last one.
pub struct CascadeObserver<'o> {
    oracle: &'o dyn SolutionOracle,
    every: usize,
    last: usize,
    pub rows: Vec<CascadeRow>,
}

impl<'o> CascadeObserver<'o> {
    pub fn new(oracle: &'o dyn SolutionOracle, every: usize, last_level: usize) -> Self {
        CascadeObserver { oracle, every: every.max(1), last: last_level, rows: Vec::new() }
    }

    /// Largest error of each order over the recorded levels.
    pub fn max_errors(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for r in &self.rows {
            for k in 0..3 {
                out[k] = out[k].max(r.sup[k]);
            }
        }
        out
    }
}

impl Observer for CascadeObserver<'_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField) -> Result<()> {
        if n.is_multiple_of(self.every) || n == self.last {
            self.rows.push(cascade_row(g, n, t, self.oracle)?);
        }
        Ok(())
    }
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fit_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if hs.len() != errors.len() || hs.len() < 2 {
        return Err(Error::Argument("order fit needs at least two matching samples".into()));
    }
    if hs.iter().chain(errors).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Argument("order fit needs positive finite samples".into()));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("order fit needs distinct spacings".into()));
    }
    Ok(sxy / sxx)
}

/// Defects of the difference recursions satisfied by `gⁿᵢ = D⁺ᵢgⁿ` and
/// `gⁿᵢⱼ = D⁻ⱼD⁺ᵢgⁿ`, with the largest magnitude of the summed terms as
/// the scale.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RecursionDefect {
    pub first: f64,
    pub first_scale: f64,
    pub second: f64,
    pub second_scale: f64,
}

impl RecursionDefect {
    pub fn relative(&self) -> f64 {
        let r = |d: f64, s: f64| if s == 0.0 { d } else { d / s };
        r(self.first, self.first_scale).max(r(self.second, self.second_scale))
    }

    fn merge(&mut self, o: &RecursionDefect) {
        self.first = self.first.max(o.first);
        self.first_scale = self.first_scale.max(o.first_scale);
        self.second = self.second.max(o.second);
        self.second_scale = self.second_scale.max(o.second_scale);
    }
}

/// Checks, for one step `g → g_next` driven by `u`,
///
/// ```text
/// gᵢⁿ⁺¹ = A gᵢ − τ Σₖ uₖ(x+heⁱ) Dₖgᵢ − (τ/2) Σₖ D⁺ᵢuₖ (gₖ + gₖ(x−heᵏ))
/// gᵢⱼⁿ⁺¹ = A gᵢⱼ − τ Σₖ [uₖ(x+heⁱ) Dₖgᵢⱼ + D⁻ⱼ(uₖ(·+heⁱ)) Dₖgᵢ(x−heʲ)]
///          − (τ/2) Σₖ [D⁺ᵢuₖ (gₖⱼ + gₖⱼ(x−heᵏ)) + D⁻ⱼD⁺ᵢuₖ (gₖ(x−heʲ) + gₖ(x−heʲ−heᵏ))]
/// ```
///
/// with `A` the seven-point average, on nodes at least three layers inside
/// the window.
pub fn derivative_recursion_check(
    g: &ScalarField,
    g_next: &ScalarField,
    u: &VectorField,
    tau: f64,
) -> Result<RecursionDefect> {
    let grid = g.grid();
    if g_next.grid() != grid || u.grid() != grid {
        return Err(Error::Argument("fields are on different grids".into()));
    }
    let h = grid.h();
    let dims = grid.dims();
    let sh = |p: [i64; 3], a: usize, s: i64| {
        let mut q = p;
        q[a] += s;
        q
    };
    let d1 = |f: &ScalarField, p: [i64; 3], i: usize| (f.get(sh(p, i, 1)) - f.get(p)) / h;
    let d2 = |f: &ScalarField, p: [i64; 3], i: usize, j: usize| (d1(f, p, i) - d1(f, sh(p, j, -1), i)) / h;
    let uk = |k: usize, p: [i64; 3]| u.components()[k].get(p);
    let dpu = |i: usize, k: usize, p: [i64; 3]| (uk(k, sh(p, i, 1)) - uk(k, p)) / h;
    let avg = |q: &dyn Fn([i64; 3]) -> f64, p: [i64; 3]| {
        let mut s = q(p);
        for a in 0..3 {
            s += q(sh(p, a, 1)) + q(sh(p, a, -1));
        }
        s / 7.0
    };
    let central = |q: &dyn Fn([i64; 3]) -> f64, p: [i64; 3], k: usize| (q(sh(p, k, 1)) - q(sh(p, k, -1))) / (2.0 * h);

    let mut out = RecursionDefect::default();
    for l in 0..grid.len() {
        let p = grid.unravel(l);
        if (0..3).any(|a| p[a] < 3 || p[a] > dims[a] as i64 - 4) {
            continue;
        }
        let mut node = RecursionDefect::default();
        for i in 0..3 {
            let gi = |q: [i64; 3]| d1(g, q, i);
            let mut terms = vec![avg(&gi, p)];
            for k in 0..3 {
                terms.push(-tau * uk(k, sh(p, i, 1)) * central(&gi, p, k));
                terms.push(-0.5 * tau * dpu(i, k, p) * (d1(g, p, k) + d1(g, sh(p, k, -1), k)));
            }
            let lhs = d1(g_next, p, i);
            let rhs: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() + lhs.abs();
            node.merge(&RecursionDefect { first: (lhs - rhs).abs(), first_scale: scale, ..Default::default() });

            for j in 0..3 {
                let gij = |q: [i64; 3]| d2(g, q, i, j);
                let back = sh(p, j, -1);
                let mut terms = vec![avg(&gij, p)];
                for k in 0..3 {
                    let d_minus_shifted_u = (uk(k, sh(p, i, 1)) - uk(k, sh(back, i, 1))) / h;
                    terms.push(-tau * uk(k, sh(p, i, 1)) * central(&gij, p, k));
                    terms.push(-tau * d_minus_shifted_u * central(&gi, back, k));
                    let gkj = |q: [i64; 3]| d2(g, q, k, j);
                    terms.push(-0.5 * tau * dpu(i, k, p) * (gkj(p) + gkj(sh(p, k, -1))));
                    let dmdp = (dpu(i, k, p) - dpu(i, k, back)) / h;
                    terms.push(-0.5 * tau * dmdp * (d1(g, back, k) + d1(g, sh(back, k, -1), k)));
                }
                let lhs = d2(g_next, p, i, j);
                let rhs: f64 = terms.iter().sum();
                let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() + lhs.abs();
                node.merge(&RecursionDefect { second: (lhs - rhs).abs(), second_scale: scale, ..Default::default() });
            }
        }
        out.merge(&node);
    }
    Ok(out)
}

/// Runs [`derivative_recursion_check`] on every step of an explicit run.
#[derive(Debug, Default)]
pub struct RecursionObserver {
    pub defect: RecursionDefect,
    pub steps: usize,
}

impl Observer for RecursionObserver {
    fn step(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        let d = derivative_recursion_check(ctx.g, ctx.g_next, ctx.u_trunc, ctx.params.tau)?;
        self.defect.merge(&d);
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{Bump, Cellular, Gaussian, Modulated, Rotation, Zero};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn zero_velocity_flow_is_identity() {
        let x = [0.1, -0.2, 0.3];
        assert_eq!(flow(&Zero, 1.0, 0.0, x, &FlowConfig::default()).unwrap(), x);
    }

    #[test]
    fn rk4_matches_rigid_rotation() {
        let v = Rotation::new(1.0, [0.0; 3], 0.5, 0.8).unwrap();
        let x = [0.3, 0.1, 0.2];
        let y = flow(&v, 1.0, 0.0, x, &FlowConfig::default()).unwrap();
        let (s, c) = 1.0f64.sin_cos();
        let expect = [c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]];
        for a in 0..3 {
            assert!((y[a] - expect[a]).abs() < 1e-8);
        }
        let closed = swirl_flow(&v, 1.0, 0.0, x).unwrap();
        for a in 0..3 {
            assert!((closed[a] - expect[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn flow_group_property() {
        let v = Cellular::new(1.0, 1.0, 0.3, 0.6).unwrap();
        let cfg = FlowConfig::default();
        let xi = [0.12, -0.07, 0.05];
        let a = flow(&v, 0.7, 0.0, xi, &cfg).unwrap();
        let b = flow(&v, 0.7, 0.3, flow(&v, 0.3, 0.0, xi, &cfg).unwrap(), &cfg).unwrap();
        let back = flow(&v, 0.0, 0.7, a, &cfg).unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-7);
            assert!((back[k] - xi[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn escape_is_reported() {
        let v = Rotation::new(1.0, [0.0; 3], 0.5, 0.8).unwrap();
        let cfg = FlowConfig::default().with_bounds([-0.1; 3], [0.35; 3], 0.0);
        assert!(matches!(flow(&v, 2.0, 0.0, [0.3, 0.0, 0.0], &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn rotated_gaussian_closed_form() {
        let v = Rotation::new(1.0, [0.0; 3], 0.6, 0.9).unwrap();
        let f0 = Gaussian::new([0.2, 0.0, 0.0], 0.1, 1.0, 0.35, 0.5).unwrap();
        let t = PI / 2.0;
        let x = [0.01, 0.21, 0.02];
        let got = exact_solution(&f0, &v, t, x, &FlowConfig::default()).unwrap();
        // Rotating back by π/2 maps x to (x₂, −x₁, x₃).
        let want = f0.eval([x[1], -x[0], x[2]]);
        assert!((got - want).abs() < 1e-7);
        let rk = f0.eval(flow(&v, 0.0, t, x, &FlowConfig::default()).unwrap());
        assert!((rk - want).abs() < 1e-7);
    }

    #[test]
    fn closed_form_jets_match_differences() {
        let inner: Arc<dyn Velocity> = Arc::new(Rotation::new(1.3, [0.05, 0.0, 0.0], 0.3, 0.6).unwrap());
        let v = Modulated::new(inner, 0.5, 1.0).unwrap();
        let f0 = Bump::new([0.2, 0.1, 0.0], 0.25, 2.0).unwrap();
        let exact = CharacteristicsOracle::new(&f0, &v, FlowConfig::default());
        assert!(exact.exact_jets());
        let x = [0.25, 0.2, 0.05];
        let j = exact.jet(0.8, x).unwrap();
        let mut fd = exact;
        fd.fd_step = 1e-4;
        let d = 1e-5;
        let value = |p: [f64; 3]| exact_solution(&f0, &v, 0.8, p, &FlowConfig::default()).unwrap();
        assert!((j.v - value(x)).abs() < 1e-12);
        for a in 0..3 {
            let mut p = x;
            p[a] += d;
            let mut m = x;
            m[a] -= d;
            let fd = (value(p) - value(m)) / (2.0 * d);
            assert!((j.d[a] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{a}: {} vs {fd}", j.d[a]);
        }
        let k = CharacteristicsOracle::jet(&fd, 0.8, x).unwrap();
        assert!((k.h[0][1] - j.h[0][1]).abs() < 1e-2 * (1.0 + j.h[0][1].abs()), "{} vs {}", k.h[0][1], j.h[0][1]);
    }

    #[test]
    fn order_fit_recovers_slope() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powf(0.7)).collect();
        assert!((fit_order(&hs, &es).unwrap() - 0.7).abs() < 1e-12);
        assert!(fit_order(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn volume_is_preserved() {
        let v = Cellular::new(1.5, 1.0, 0.3, 0.6).unwrap();
        let cfg = FlowConfig::default();
        let d = 1e-4;
        for xi in [[0.1, 0.05, 0.0], [-0.2, 0.1, 0.1]] {
            let mut jac = [[0.0; 3]; 3];
            for b in 0..3 {
                let mut p = xi;
                p[b] += d;
                let mut m = xi;
                m[b] -= d;
                let fp = flow(&v, 1.0, 0.0, p, &cfg).unwrap();
                let fm = flow(&v, 1.0, 0.0, m, &cfg).unwrap();
                for a in 0..3 {
                    jac[a][b] = (fp[a] - fm[a]) / (2.0 * d);
                }
            }
            let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
            assert!((det - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn recursions_hold_along_a_run() {
        use crate::explicit::ExplicitProblem;
        use crate::fields::SchemeParams;
        use crate::grid::Domain;
        let v = Cellular::new(1.0, 1.0, 0.25, 0.45).unwrap();
        let f0 = Gaussian::new([0.1, 0.0, 0.0], 0.12, 1.0, 0.2, 0.3).unwrap();
        let h = 1.0 / 16.0;
        let params = SchemeParams::smooth(h, 1.0, v.sup_bound());
        let p = ExplicitProblem::new(&v, &Domain::cube(0.5), params, 0.25, 2, 2, vec![]).unwrap();
        let mut obs = RecursionObserver::default();
        p.run(&f0, &mut [&mut obs]).unwrap();
        assert!(obs.steps > 0);
        assert!(obs.defect.first_scale > 0.0 && obs.defect.second_scale > 0.0);
        assert!(obs.defect.relative() <= 1e-12, "{:?}", obs.defect);
    }
}
