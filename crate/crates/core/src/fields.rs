//! Discrete problem data: averaged initial values, space-time averaged
//! velocity, velocity truncation and the truncated-set measure.

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Axis, DomainMask, GridSpec, ScalarField, VectorField};
use crate::jet::Jet;
use crate::presets::{Initial, Velocity};
use crate::quadrature::{cell_average, space_time_average, GaussLegendre};

/// Uniform time levels `tₙ = nτ`, `n = 0..=T_τ`, with `T ∈ [τT_τ, τT_τ + τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, t_final: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Argument(format!("time step must be positive, got {tau}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::Argument(format!("final time must be positive, got {t_final}")));
        }
        let mut n = (t_final / tau).floor() as usize;
        while n > 0 && tau * n as f64 > t_final {
            n -= 1;
        }
        while tau * (n + 1) as f64 <= t_final {
            n += 1;
        }
        Ok(TimeGrid { tau, t_final, steps: n })
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }
    #[inline]
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    /// `T_τ`.
    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }
    #[inline]
    pub fn time(&self, n: usize) -> f64 {
        self.tau * n as f64
    }
}

/// How the time step was tied to the spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauBranch {
    /// `τ = h^{2−α}`.
    Power,
    /// `τ = (2/7)h/‖v‖_∞` (smaller than `h^{2−α}`).
    Hyperbolic,
}

/// Parameters of the explicit scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub tau: f64,
    /// Truncate velocities at `h^{−β}`. Off in the smooth mode.
    pub truncate: bool,
    pub branch: TauBranch,
}

impl SchemeParams {
    /// Default exponents of the generalized scaling. They satisfy every
    /// constraint for all `h ≤ 1/16`.
    pub const DEFAULT_ALPHA: f64 = 0.04;
    pub const DEFAULT_BETA: f64 = 0.505;

    /// Generalized hyperbolic scaling `τ = h^{2−α}` with truncation at `h^{−β}`.
    pub fn generalized(h: f64, alpha: f64, beta: f64) -> Self {
        SchemeParams { alpha, beta, h, tau: h.powf(2.0 - alpha), truncate: true, branch: TauBranch::Power }
    }

    /// Smooth mode for bounded velocities: no truncation and
    /// `τ = min(h^{2−α}, (2/7)h/‖v‖_∞)`.
    pub fn smooth(h: f64, alpha: f64, v_sup: f64) -> Self {
        let power = h.powf(2.0 - alpha);
        let hyper = if v_sup > 0.0 { 2.0 / 7.0 * h / v_sup } else { f64::INFINITY };
        let (tau, branch) = if hyper < power { (hyper, TauBranch::Hyperbolic) } else { (power, TauBranch::Power) };
        SchemeParams { alpha, beta: f64::NAN, h, tau, truncate: false, branch }
    }

    /// `h^{−β}` when truncation is active.
    pub fn truncation_level(&self) -> Option<f64> {
        self.truncate.then(|| self.h.powf(-self.beta))
    }
}

fn check_order(order: usize) -> Result<GaussLegendre> {
    GaussLegendre::new(order)
}

fn boxes_overlap(c: [f64; 3], half: f64, lo: [f64; 3], hi: [f64; 3]) -> bool {
    (0..3).all(|a| c[a] + half >= lo[a] && c[a] - half <= hi[a])
}

/// `g⁰(x) = h⁻³∫_{C_h(x)} f⁰` by tensor Gauss–Legendre quadrature.
pub fn average_initial(f0: &dyn Initial, grid: &GridSpec, order: usize) -> Result<ScalarField> {
    let rule = check_order(order)?;
    let (lo, hi) = f0.support();
    let h = grid.h();
    let mut out = ScalarField::zeros(*grid);
    for l in 0..grid.len() {
        let c = grid.position(l);
        if !boxes_overlap(c, 0.5 * h, lo, hi) {
            continue;
        }
        let v = cell_average(&rule, c, h, |y| f0.eval(y));
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite initial data near {c:?}")));
        }
        out.data_mut()[l] = v;
    }
    Ok(out)
}

/// `uⁿ(x) = (τh³)⁻¹∫_{tₙ}^{tₙ₊₁}∫_{C_h(x)} v` on Ω_h, zero elsewhere.
pub fn average_velocity(
    v: &dyn Velocity,
    mask: &DomainMask,
    time: &TimeGrid,
    n: usize,
    order: usize,
) -> Result<VectorField> {
    if n >= time.steps() {
        return Err(Error::Argument(format!("step {n} outside 0..{}", time.steps())));
    }
    let rule = check_order(order)?;
    let grid = mask.grid();
    let h = grid.h();
    let (lo, hi) = v.support();
    let (t0, t1) = (time.time(n), time.time(n + 1));
    let mut out = VectorField::zeros(*grid);
    for &l in mask.interior_nodes() {
        let c = grid.position(l);
        if !boxes_overlap(c, 0.5 * h, lo, hi) {
            continue;
        }
        let u = if v.is_time_dependent() {
            space_time_average(&rule, &rule, t0, t1, c, h, |t, y| v.eval(t, y))
        } else {
            let mid = 0.5 * (t0 + t1);
            let mut u = [0.0; 3];
            for (a, slot) in u.iter_mut().enumerate() {
                *slot = cell_average(&rule, c, h, |y| v.eval(mid, y)[a]);
            }
            u
        };
        if u.iter().any(|c| !c.is_finite()) {
            return Err(Error::Data(format!("non-finite velocity near {c:?}")));
        }
        out.set(l, u);
    }
    Ok(out)
}

/// Produces `uⁿ` step by step, averaging a steady field only once.
pub struct VelocityAverages<'a> {
    v: &'a dyn Velocity,
    mask: &'a DomainMask,
    time: TimeGrid,
    order: usize,
    current: Option<(usize, VectorField)>,
}

impl<'a> VelocityAverages<'a> {
    pub fn new(v: &'a dyn Velocity, mask: &'a DomainMask, time: TimeGrid, order: usize) -> Self {
        VelocityAverages { v, mask, time, order, current: None }
    }

    pub fn at(&mut self, n: usize) -> Result<&VectorField> {
        let stale = match &self.current {
            Some((m, _)) => *m != n && self.v.is_time_dependent(),
            None => true,
        };
        if stale {
            let u = average_velocity(self.v, self.mask, &self.time, n, self.order)?;
            self.current = Some((n, u));
        }
        Ok(&self.current.as_ref().expect("set above").1)
    }
}

/// Nodes where a component was clamped.
pub type TruncatedSets = [Vec<usize>; 3];

/// `ũⱼ = uⱼ` where `|uⱼ| ≤ h^{−β}`, else `sign(uⱼ)·h^{−β}`; also returns
/// the clamped index sets `A_{h,j}`.
pub fn truncate_velocity(u: &VectorField, h: f64, beta: f64) -> Result<(VectorField, TruncatedSets)> {
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("truncation exponent must be positive, got {beta}")));
    }
    Ok(truncate_at(u, h.powf(-beta)))
}

/// Clamps every component at `±level`.
pub fn truncate_at(u: &VectorField, level: f64) -> (VectorField, TruncatedSets) {
    let mut out = u.clone();
    let mut sets: TruncatedSets = Default::default();
    for axis in Axis::ALL {
        let c = out.component_mut(axis);
        for (l, v) in c.data_mut().iter_mut().enumerate() {
            if v.abs() > level {
                *v = level.copysign(*v);
                sets[axis.idx()].push(l);
            }
        }
    }
    (out, sets)
}

/// Data-dependent constant of the truncated-set estimate:
/// `M₁ = max_j 48^{3/2}·T^{1/4}·‖∇vⱼ‖^{3/2}_{L²L²}·‖vⱼ‖^{3/2}_{L^∞L²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M1Estimate {
    pub m1: f64,
    /// Per-component `‖∇vⱼ‖_{L²(0,T;L²)}`.
    pub grad_l2l2: [f64; 3],
    /// Per-component `‖vⱼ‖_{L^∞(0,T;L²)}`.
    pub l_inf_l2: [f64; 3],
    /// Spacing of the reference grid used for the integrals.
    pub h_fine: f64,
}

/// Evaluates `M₁` by order-2 Gauss quadrature on a grid of spacing
/// `h_fine` over the velocity's support. Gradients come from exact jets
/// when the preset provides them, central differences otherwise.
/// Time-dependent fields are sampled at `time_samples` Gauss nodes.
pub fn m1_estimate(v: &dyn Velocity, t_final: f64, h_fine: f64, time_samples: usize) -> Result<M1Estimate> {
    if !(h_fine > 0.0 && t_final > 0.0) {
        return Err(Error::Argument("m1 estimate needs positive spacing and horizon".into()));
    }
    let (lo, hi) = v.support();
    let grid = GridSpec::covering(lo, hi, h_fine, 1)?;
    let rule = GaussLegendre::new(2)?;
    let times: Vec<(f64, f64)> = if v.is_time_dependent() {
        let k = time_samples.max(1);
        let gl = GaussLegendre::new(k.min(64))?;
        gl.averaging(0.0, t_final)
    } else {
        vec![(0.0, 1.0)]
    };
    let fd = 1e-6 * (1.0 + hi.iter().chain(lo.iter()).fold(0.0f64, |m, c| m.max(c.abs())));
    let mut grad_time = [0.0f64; 3];
    let mut sup_l2 = [0.0f64; 3];
    for &(t, wt) in &times {
        let mut g_terms: [Vec<f64>; 3] = Default::default();
        let mut v_terms: [Vec<f64>; 3] = Default::default();
        for l in 0..grid.len() {
            let c = grid.position(l);
            let mut gsum = [0.0; 3];
            let mut vsum = [0.0; 3];
            let px = rule.averaging(c[0] - 0.5 * h_fine, c[0] + 0.5 * h_fine);
            let py = rule.averaging(c[1] - 0.5 * h_fine, c[1] + 0.5 * h_fine);
            let pz = rule.averaging(c[2] - 0.5 * h_fine, c[2] + 0.5 * h_fine);
            for &(z, wz) in &pz {
                for &(y, wy) in &py {
                    for &(x, wx) in &px {
                        let w = wx * wy * wz;
                        let p = [x, y, z];
                        let (val, grad) = value_and_gradient(v, t, p, fd);
                        for j in 0..3 {
                            vsum[j] += w * val[j] * val[j];
                            gsum[j] +=
                                w * (grad[j][0] * grad[j][0] + grad[j][1] * grad[j][1] + grad[j][2] * grad[j][2]);
                        }
                    }
                }
            }
            for j in 0..3 {
                g_terms[j].push(gsum[j]);
                v_terms[j].push(vsum[j]);
            }
        }
        let vol = grid.cell_volume();
        for j in 0..3 {
            let g = pairwise_sum(&g_terms[j]) * vol;
            let s = pairwise_sum(&v_terms[j]) * vol;
            grad_time[j] += wt * t_final * g;
            sup_l2[j] = sup_l2[j].max(s.sqrt());
        }
    }
    let mut grad_l2l2 = [0.0; 3];
    let mut m1 = 0.0f64;
    for j in 0..3 {
        grad_l2l2[j] = grad_time[j].sqrt();
        let mj = 48f64.powf(1.5) * t_final.powf(0.25) * grad_l2l2[j].powf(1.5) * sup_l2[j].powf(1.5);
        m1 = m1.max(mj);
    }
    if !m1.is_finite() {
        return Err(Error::Data("non-finite velocity norms in m1 estimate".into()));
    }
    Ok(M1Estimate { m1, grad_l2l2, l_inf_l2: sup_l2, h_fine })
}

fn value_and_gradient(v: &dyn Velocity, t: f64, p: [f64; 3], fd: f64) -> ([f64; 3], [[f64; 3]; 3]) {
    if let Some(j) = v.eval_jet(t, Jet::point(p)) {
        return ([j[0].v, j[1].v, j[2].v], [j[0].d, j[1].d, j[2].d]);
    }
    let val = v.eval(t, p);
    let mut grad = [[0.0; 3]; 3];
    for a in 0..3 {
        let mut xp = p;
        let mut xm = p;
        xp[a] += fd;
        xm[a] -= fd;
        let (vp, vm) = (v.eval(t, xp), v.eval(t, xm));
        for j in 0..3 {
            grad[j][a] = (vp[j] - vm[j]) / (2.0 * fd);
        }
    }
    (val, grad)
}

/// Accumulates per-step truncation statistics during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruncationTally {
    /// `Σₙ #Aⁿ_{h,j}` per component.
    pub counts: [u64; 3],
    /// `Σₙ Σₓ |uⁿⱼ(x)|³` per component (untruncated velocity).
    pub cube_sums: [f64; 3],
    pub steps: usize,
}

impl TruncationTally {
    pub fn record(&mut self, u: &VectorField, sets: &TruncatedSets) {
        for axis in Axis::ALL {
            let j = axis.idx();
            self.counts[j] += sets[j].len() as u64;
            let cubes: Vec<f64> = u.component(axis).data().iter().map(|v| v.abs().powi(3)).collect();
            self.cube_sums[j] += pairwise_sum(&cubes);
        }
        self.steps += 1;
    }
}

/// Measure of the truncated sets against its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    /// `Σⱼ Σₙ vol(Aⁿ_{h,j})·τ`.
    pub measure: f64,
    /// `3M₁h^{3β}`.
    pub bound: f64,
    /// `Σₙ Σₓ |uⁿⱼ|³h³τ` per component.
    pub l3: [f64; 3],
    pub m1: f64,
}

impl TruncationReport {
    pub fn holds(&self) -> bool {
        self.measure <= self.bound
    }
}

pub fn truncated_measure_report(tally: &TruncationTally, tau: f64, h: f64, beta: f64, m1: f64) -> TruncationReport {
    let vol = h * h * h;
    let measure = tally.counts.iter().map(|&c| c as f64 * vol * tau).sum();
    let l3 = [tally.cube_sums[0] * vol * tau, tally.cube_sums[1] * vol * tau, tally.cube_sums[2] * vol * tau];
    TruncationReport { measure, bound: 3.0 * m1 * h.powf(3.0 * beta), l3, m1 }
}
