//! Truncated Lax–Friedrichs scheme
//!
//! ```text
//! gⁿ⁺¹(x) = ⅐gⁿ(x) + Σⱼ [(⅐ + cⱼ)gⁿ(x − heʲ) + (⅐ − cⱼ)gⁿ(x + heʲ)],   cⱼ = (τ/2h)ũⁿⱼ(x)
//! ```
//!
//! on the whole lattice, with the velocity zero outside Ω_h, plus the
//! stability, comparison and weak-form diagnostics that go with it.

use log::warn;

use crate::error::{Error, Result, ScalingViolation};
use crate::fields::{
    average_initial, truncate_at, SchemeParams, TimeGrid, TruncatedSets, TruncationTally, VelocityAverages,
};
use crate::grid::{
    abs_pow, lp_norm, pairwise_sum, Axis, Domain, DomainMask, GridSpec, Region, ScalarField, VectorField,
};
use crate::jet::{smooth_step, Jet, Real};
use crate::presets::{Initial, Velocity};

const SEVENTH: f64 = 1.0 / 7.0;

/// Scheme parameters that passed [`check_scaling`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    pub params: SchemeParams,
    /// `1/7 − ½h^{1−(α+β)}`, the guaranteed slack of every stencil
    /// coefficient under truncation. `None` in the smooth mode, where the
    /// slack depends on the velocity.
    pub cfl_margin: Option<f64>,
}

/// Accepts `params` iff `τ = h^{2−α}` (relative 1e−12), `α > 0`, `β > 1/2`,
/// `α + β < 1` and `h^{1−(α+β)} ≤ 2/7`.
///
/// In the smooth mode (no truncation) only `0 < α ≤ 1` and
/// `τ ≤ h^{2−α}` are required here; the coefficient sign is checked
/// against the velocity bound by [`check_coefficients`].
pub fn check_scaling(params: SchemeParams) -> Result<ValidatedParams> {
    let SchemeParams { alpha, beta, h, tau, truncate, .. } = params;
    let fail = |v| Err(Error::Scaling(v));
    if !(h > 0.0 && h.is_finite()) {
        return fail(ScalingViolation::NonPositiveSpacing { h });
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return fail(ScalingViolation::TimeStep { tau, expected: h.powf(2.0 - alpha) });
    }
    if !truncate {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return fail(ScalingViolation::SmoothAlpha { alpha });
        }
        let expected = h.powf(2.0 - alpha);
        if tau > expected * (1.0 + 1e-12) {
            return fail(ScalingViolation::TimeStep { tau, expected });
        }
        return Ok(ValidatedParams { params, cfl_margin: None });
    }
    if !(alpha > 0.0) {
        return fail(ScalingViolation::AlphaNotPositive { alpha });
    }
    if !(beta > 0.5) {
        return fail(ScalingViolation::BetaTooSmall { beta });
    }
    if !(alpha + beta < 1.0) {
        return fail(ScalingViolation::AlphaPlusBeta { sum: alpha + beta });
    }
    let expected = h.powf(2.0 - alpha);
    if !((tau - expected).abs() <= 1e-12 * expected) {
        return fail(ScalingViolation::TimeStep { tau, expected });
    }
    let value = h.powf(1.0 - (alpha + beta));
    if !(value <= 2.0 / 7.0) {
        return fail(ScalingViolation::Cfl { value });
    }
    Ok(ValidatedParams { params, cfl_margin: Some(SEVENTH - 0.5 * value) })
}

/// Smallest stencil coefficient `1/7 − (τ/2h)·speed`; an error if negative.
pub fn check_coefficients(params: &SchemeParams, speed: f64) -> Result<f64> {
    let c = SEVENTH - params.tau / (2.0 * params.h) * speed;
    if c < 0.0 {
        return Err(Error::Scaling(ScalingViolation::NegativeCoefficient { coefficient: c }));
    }
    Ok(c)
}

/// Closed box of local indices, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl IndexBox {
    /// Bounding box of the nonzero entries, `None` for the zero field.
    pub fn support_of(f: &ScalarField) -> Option<IndexBox> {
        let g = f.grid();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        let mut any = false;
        for (l, &v) in f.data().iter().enumerate() {
            if v != 0.0 {
                any = true;
                let p = g.unravel(l);
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        any.then_some(IndexBox { lo, hi })
    }

    /// Grown by one node on every side and clipped to the window.
    /// The flag reports whether clipping happened.
    pub fn grow(&self, grid: &GridSpec) -> (IndexBox, bool) {
        let d = grid.dims();
        let mut out = *self;
        let mut clipped = false;
        for a in 0..3 {
            out.lo[a] -= 1;
            out.hi[a] += 1;
            if out.lo[a] < 0 {
                out.lo[a] = 0;
                clipped = true;
            }
            if out.hi[a] > d[a] as i64 - 1 {
                out.hi[a] = d[a] as i64 - 1;
                clipped = true;
            }
        }
        (out, clipped)
    }

    pub fn full(grid: &GridSpec) -> IndexBox {
        let d = grid.dims();
        IndexBox { lo: [0; 3], hi: [d[0] as i64 - 1, d[1] as i64 - 1, d[2] as i64 - 1] }
    }
}

/// One step of the scheme on the whole window of `g`.
pub fn step(g: &ScalarField, u: &VectorField, tau: f64) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(*g.grid());
    step_into(g, u, tau, &mut out, IndexBox::full(g.grid()))?;
    Ok(out)
}

/// Writes `gⁿ⁺¹` into `out` on `region` and zero elsewhere. Nodes outside
/// `region` must be unaffected, i.e. `region` must contain the support of
/// `g` grown by one node (or reach the window edge).
pub fn step_into(g: &ScalarField, u: &VectorField, tau: f64, out: &mut ScalarField, region: IndexBox) -> Result<()> {
    let grid = *g.grid();
    if u.grid() != &grid || out.grid() != &grid {
        return Err(Error::Argument("step fields must share one grid".into()));
    }
    let k = tau / (2.0 * grid.h());
    let [sx, sy, sz] = grid.strides();
    let d = grid.dims();
    let gd = g.data();
    let (u1, u2, u3) = (u.component(Axis::X).data(), u.component(Axis::Y).data(), u.component(Axis::Z).data());
    out.data_mut().fill(0.0);
    let od = out.data_mut();
    let mut worst = 0.0f64;
    for kk in region.lo[2]..=region.hi[2] {
        for jj in region.lo[1]..=region.hi[1] {
            let row_inner = kk > 0 && jj > 0 && kk < d[2] as i64 - 1 && jj < d[1] as i64 - 1;
            for ii in region.lo[0]..=region.hi[0] {
                let l = grid.index([ii, jj, kk]).expect("region inside window");
                let c = [k * u1[l], k * u2[l], k * u3[l]];
                worst = worst.max(c[0].abs()).max(c[1].abs()).max(c[2].abs());
                let v = if row_inner && ii > 0 && ii < d[0] as i64 - 1 {
                    SEVENTH * gd[l]
                        + (SEVENTH + c[0]) * gd[l - sx]
                        + (SEVENTH - c[0]) * gd[l + sx]
                        + (SEVENTH + c[1]) * gd[l - sy]
                        + (SEVENTH - c[1]) * gd[l + sy]
                        + (SEVENTH + c[2]) * gd[l - sz]
                        + (SEVENTH - c[2]) * gd[l + sz]
                } else {
                    let p = [ii, jj, kk];
                    let mut v = SEVENTH * gd[l];
                    for axis in Axis::ALL {
                        let cj = c[axis.idx()];
                        v += (SEVENTH + cj) * g.shifted(p, axis, -1) + (SEVENTH - cj) * g.shifted(p, axis, 1);
                    }
                    v
                };
                od[l] = v;
            }
        }
    }
    if worst > SEVENTH * (1.0 + 1e-12) {
        return Err(Error::Internal(format!(
            "negative stencil coefficient 1/7 - {worst:e}; truncation or scaling was bypassed"
        )));
    }
    Ok(())
}

/// Everything an observer may inspect about one step `n → n+1`.
pub struct StepContext<'a> {
    pub n: usize,
    pub time: &'a TimeGrid,
    pub params: &'a SchemeParams,
    pub mask: &'a DomainMask,
    pub g: &'a ScalarField,
    /// Untruncated average `uⁿ`.
    pub u: &'a VectorField,
    /// `ũⁿ`.
    pub u_trunc: &'a VectorField,
    pub truncated: &'a TruncatedSets,
    pub g_next: &'a ScalarField,
}

/// Receives every time level and every step of a run.
pub trait Observer {
    /// Called for `n = 0..=T_τ` with `gⁿ`.
    fn level(&mut self, _n: usize, _t: f64, _g: &ScalarField) -> Result<()> {
        Ok(())
    }
    /// Called for `n = 0..T_τ`, after `gⁿ⁺¹` is known.
    fn step(&mut self, _ctx: &StepContext<'_>) -> Result<()> {
        Ok(())
    }
}

/// Norms of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub n: usize,
    pub t: f64,
    pub sup: f64,
    pub min: f64,
    pub max: f64,
    /// `‖gⁿ‖ᵖ_p` for each configured `p`, in order.
    pub lp_pow: Vec<f64>,
}

/// Per-step divergence terms `Σₓ (D·ũⁿ)|gⁿ|ᵖh³τ`, one per configured `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub n: usize,
    pub divergence_terms: Vec<f64>,
    /// Number of clamped velocity components this step.
    pub truncated: usize,
}

/// Result of an explicit run.
#[derive(Debug, Clone)]
pub struct ExplicitRun {
    pub g_final: ScalarField,
    pub exponents: Vec<f64>,
    pub levels: Vec<LevelDiagnostics>,
    pub steps: Vec<StepDiagnostics>,
    pub truncation: TruncationTally,
    /// Step at which the support first reached the window edge.
    pub window_reached: Option<usize>,
}

/// `(‖gⁿ‖ᵖ, ‖g⁰‖ᵖ + Σ_{m<n} Σₓ(D·ũᵐ)|gᵐ|ᵖh³τ)` for every level.
pub fn lp_growth_bound(run: &ExplicitRun, p: f64) -> Result<Vec<(f64, f64)>> {
    let k = run
        .exponents
        .iter()
        .position(|&q| q == p)
        .ok_or_else(|| Error::Argument(format!("exponent {p} was not recorded by the run")))?;
    let mut rhs = run.levels[0].lp_pow[k];
    let mut out = Vec::with_capacity(run.levels.len());
    for (n, level) in run.levels.iter().enumerate() {
        if n > 0 {
            rhs += run.steps[n - 1].divergence_terms[k];
        }
        out.push((level.lp_pow[k], rhs));
    }
    Ok(out)
}

/// Per-level minimum of `g̃ⁿ − gⁿ` for two runs with ordered data.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCertificate {
    pub min_gap: Vec<f64>,
}

impl ComparisonCertificate {
    pub const TOLERANCE: f64 = 1e-14;

    pub fn holds(&self) -> bool {
        self.min_gap.iter().all(|&g| g >= -Self::TOLERANCE)
    }
}

/// A configured explicit problem: velocity, discretized domain, scaling,
/// horizon.
pub struct ExplicitProblem<'a> {
    velocity: &'a dyn Velocity,
    mask: DomainMask,
    params: ValidatedParams,
    time: TimeGrid,
    quadrature_order: usize,
    exponents: Vec<f64>,
}

impl<'a> ExplicitProblem<'a> {
    /// Validates the scaling (and, in the smooth mode, the coefficient sign
    /// against the velocity bound) before anything is computed. The lattice
    /// window is Ω's bounding box plus `margin` nodes per side.
    pub fn new(
        velocity: &'a dyn Velocity,
        domain: &Domain,
        params: SchemeParams,
        t_final: f64,
        margin: usize,
        quadrature_order: usize,
        exponents: Vec<f64>,
    ) -> Result<Self> {
        let params = check_scaling(params)?;
        if !params.params.truncate {
            check_coefficients(&params.params, velocity.sup_bound())?;
        }
        if exponents.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(Error::Argument("norm exponents must be finite and >= 1".into()));
        }
        let time = TimeGrid::new(params.params.tau, t_final)?;
        let (lo, hi) = domain.bounds();
        let window = GridSpec::covering(lo, hi, params.params.h, margin.max(1))?;
        let mask = DomainMask::new(window, domain)?;
        Ok(ExplicitProblem { velocity, mask, params, time, quadrature_order, exponents })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }
    pub fn grid(&self) -> &GridSpec {
        self.mask.grid()
    }
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }
    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }
    pub fn velocity(&self) -> &dyn Velocity {
        self.velocity
    }

    /// `g⁰` on the window.
    pub fn initial(&self, f0: &dyn Initial) -> Result<ScalarField> {
        average_initial(f0, self.grid(), self.quadrature_order)
    }

    pub fn run(&self, f0: &dyn Initial, observers: &mut [&mut dyn Observer]) -> Result<ExplicitRun> {
        let g0 = self.initial(f0)?;
        self.run_from(g0, observers)
    }

    /// Runs from given `g⁰` on the window.
    pub fn run_from(&self, g0: ScalarField, observers: &mut [&mut dyn Observer]) -> Result<ExplicitRun> {
        let mut runs = self.drive(vec![g0], observers, |_, _| Ok(()))?;
        Ok(runs.pop().expect("one run"))
    }

    /// Runs two ordered data sets through the same velocities and records
    /// the minimum gap at every level.
    pub fn compare(&self, f_low: &dyn Initial, f_high: &dyn Initial) -> Result<ComparisonCertificate> {
        let lo = self.initial(f_low)?;
        let hi = self.initial(f_high)?;
        self.compare_from(lo, hi)
    }

    pub fn compare_from(&self, g_low: ScalarField, g_high: ScalarField) -> Result<ComparisonCertificate> {
        let mut gaps = Vec::new();
        self.drive(vec![g_low, g_high], &mut [], |_, gs| {
            let gap = gs[1].data().iter().zip(gs[0].data()).map(|(b, a)| b - a).fold(f64::INFINITY, f64::min);
            gaps.push(gap);
            Ok(())
        })?;
        Ok(ComparisonCertificate { min_gap: gaps })
    }

    /// Steps several fields with shared velocities. `on_level` sees all
    /// fields at every level; observers see the first field only.
    fn drive(
        &self,
        mut gs: Vec<ScalarField>,
        observers: &mut [&mut dyn Observer],
        mut on_level: impl FnMut(usize, &[ScalarField]) -> Result<()>,
    ) -> Result<Vec<ExplicitRun>> {
        let grid = *self.grid();
        if gs.iter().any(|g| g.grid() != &grid) {
            return Err(Error::Argument("initial field is not on the problem window".into()));
        }
        let p = &self.params.params;
        let mut averages = VelocityAverages::new(self.velocity, &self.mask, self.time, self.quadrature_order);
        let mut supports: Vec<Option<IndexBox>> = gs.iter().map(IndexBox::support_of).collect();
        let mut runs: Vec<ExplicitRun> = gs
            .iter()
            .map(|_| ExplicitRun {
                g_final: ScalarField::zeros(grid),
                exponents: self.exponents.clone(),
                levels: Vec::with_capacity(self.time.steps() + 1),
                steps: Vec::with_capacity(self.time.steps()),
                truncation: TruncationTally::default(),
                window_reached: None,
            })
            .collect();
        let mut scratch = ScalarField::zeros(grid);
        let mut truncated_cache: Option<(VectorField, TruncatedSets)> = None;
        for n in 0..=self.time.steps() {
            let t = self.time.time(n);
            for (g, run) in gs.iter().zip(runs.iter_mut()) {
                run.levels.push(self.level_diagnostics(n, t, g)?);
            }
            for obs in observers.iter_mut() {
                obs.level(n, t, &gs[0])?;
            }
            on_level(n, &gs)?;
            if n == self.time.steps() {
                break;
            }
            let steady = !self.velocity.is_time_dependent();
            let u = averages.at(n)?;
            if truncated_cache.is_none() || !steady {
                truncated_cache = Some(match p.truncation_level() {
                    Some(level) => truncate_at(u, level),
                    None => (u.clone(), Default::default()),
                });
            }
            let (u_trunc, sets) = truncated_cache.as_ref().expect("set above");
            let div = crate::grid::divergence_central(u_trunc);
            for (idx, g) in gs.iter_mut().enumerate() {
                let run = &mut runs[idx];
                let terms = self.divergence_terms(&div, g);
                run.steps.push(StepDiagnostics {
                    n,
                    divergence_terms: terms,
                    truncated: sets.iter().map(Vec::len).sum(),
                });
                run.truncation.record(u, sets);
                let region = match supports[idx] {
                    Some(b) => {
                        let (grown, clipped) = b.grow(&grid);
                        if clipped && run.window_reached.is_none() {
                            run.window_reached = Some(n);
                            warn!("support of g reached the lattice window at step {n}; values beyond it are dropped");
                        }
                        grown
                    }
                    None => {
                        // Zero stays zero.
                        continue;
                    }
                };
                step_into(g, u_trunc, p.tau, &mut scratch, region)?;
                if idx == 0 {
                    let ctx = StepContext {
                        n,
                        time: &self.time,
                        params: p,
                        mask: &self.mask,
                        g,
                        u,
                        u_trunc,
                        truncated: sets,
                        g_next: &scratch,
                    };
                    for obs in observers.iter_mut() {
                        obs.step(&ctx)?;
                    }
                }
                std::mem::swap(g, &mut scratch);
                supports[idx] = Some(region);
            }
        }
        for (g, run) in gs.into_iter().zip(runs.iter_mut()) {
            run.g_final = g;
        }
        Ok(runs)
    }

    fn level_diagnostics(&self, n: usize, t: f64, g: &ScalarField) -> Result<LevelDiagnostics> {
        let (min, max) = g.min_max();
        let sup = lp_norm(g, f64::INFINITY, Region::Window)?;
        let lp_pow = self
            .exponents
            .iter()
            .map(|&p| crate::grid::lp_norm_pow(g, p, Region::Window))
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelDiagnostics { n, t, sup, min, max, lp_pow })
    }

    fn divergence_terms(&self, div: &ScalarField, g: &ScalarField) -> Vec<f64> {
        let vol = self.grid().cell_volume() * self.params.params.tau;
        self.exponents
            .iter()
            .map(|&p| {
                let terms: Vec<f64> = div
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(d, v)| if *d == 0.0 { 0.0 } else { d * abs_pow(*v, p) })
                    .collect();
                pairwise_sum(&terms) * vol
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Weak-form residual

/// Smooth test function `φ(t, x)` with compact support in `[0, T) × ℝ³`.
pub trait TestFunction {
    fn value(&self, t: f64, x: [f64; 3]) -> f64;
    fn dt(&self, t: f64, x: [f64; 3]) -> f64;
    fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3];
    /// `φ(t, ·) ≡ 0` for `t ≥ time_end()`.
    fn time_end(&self) -> f64;
    /// Box containing the spatial support.
    fn support(&self) -> ([f64; 3], [f64; 3]);
}

/// `φ(t, x) = θ(t)·ψ(x)` with `θ` falling smoothly from 1 to 0 on
/// `[t_flat, t_end]` and `ψ(x) = (1 + tilt·(x − c))·exp(1 − 1/(1 − |x − c|²/R²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTest {
    pub t_flat: f64,
    pub t_end: f64,
    pub center: [f64; 3],
    pub radius: f64,
    pub tilt: [f64; 3],
}

impl SeparableTest {
    fn theta<R: Real>(&self, t: R) -> R {
        R::constant(1.0) - smooth_step((t - self.t_flat) * (1.0 / (self.t_end - self.t_flat)))
    }

    fn psi<R: Real>(&self, x: [R; 3]) -> R {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let q = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * (1.0 / (self.radius * self.radius));
        if q.value() >= 1.0 {
            return R::constant(0.0);
        }
        let tilt = d[0] * self.tilt[0] + d[1] * self.tilt[1] + d[2] * self.tilt[2] + 1.0;
        tilt * (-(R::constant(1.0) - q).recip() + 1.0).exp()
    }
}

impl TestFunction for SeparableTest {
    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.theta(t) * self.psi(x)
    }
    fn dt(&self, t: f64, x: [f64; 3]) -> f64 {
        self.theta(Jet::variable(0, t)).d[0] * self.psi(x)
    }
    fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let j = self.psi(Jet::point(x));
        let th = self.theta(t);
        [th * j.d[0], th * j.d[1], th * j.d[2]]
    }
    fn time_end(&self) -> f64 {
        self.t_end
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        let r = self.radius;
        let c = self.center;
        ([c[0] - r, c[1] - r, c[2] - r], [c[0] + r, c[1] + r, c[2] + r])
    }
}

/// The five sums of the discrete weak form, accumulated online.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeakFormTerms {
    /// `Σ g⁰φ(0)h³`.
    pub initial: f64,
    /// `Σₙ Σ gⁿ⁺¹∂ₜφ(tₙ₊₁)h³τ`.
    pub time: f64,
    /// `Σⱼₙ Σ Dⱼũⁿⱼ(x)gⁿ(x)φ(tₙ, x − heʲ)h³τ`.
    pub divergence: f64,
    /// `Σⱼₙ Σ ũⁿⱼ(x + heʲ)gⁿ(x)∂ⱼφ(tₙ, x)h³τ`.
    pub advection: f64,
    /// `Σⱼₙ Σ ũⁿⱼ(x + heʲ)gⁿ(x)[(φ(x + heʲ) − φ(x − heʲ))/2h − ∂ⱼφ(x)]h³τ`.
    pub consistency: f64,
}

impl WeakFormTerms {
    pub fn total(&self) -> f64 {
        self.initial + self.time + self.divergence + self.advection + self.consistency
    }
}

/// Observer accumulating the weak-form sums for one test function.
pub struct WeakFormObserver<'t> {
    test: &'t dyn TestFunction,
    pub terms: WeakFormTerms,
}

impl<'t> WeakFormObserver<'t> {
    /// Fails when `φ` does not vanish from `t_{T_τ}` on.
    pub fn new(test: &'t dyn TestFunction, time: &TimeGrid) -> Result<Self> {
        let last = time.time(time.steps());
        if test.time_end() > last + 1e-12 * last.max(1.0) {
            return Err(Error::Argument(format!(
                "test function must vanish for t >= {last}, but is supported up to {}",
                test.time_end()
            )));
        }
        Ok(WeakFormObserver { test, terms: WeakFormTerms::default() })
    }

    fn nodes_near_support(&self, grid: &GridSpec, pad: f64) -> IndexBox {
        let (lo, hi) = self.test.support();
        let h = grid.h();
        let o = grid.offset();
        let d = grid.dims();
        let mut b = IndexBox { lo: [0; 3], hi: [0; 3] };
        for a in 0..3 {
            b.lo[a] = (((lo[a] - pad) / h).floor() as i64 - o[a]).clamp(0, d[a] as i64 - 1);
            b.hi[a] = (((hi[a] + pad) / h).ceil() as i64 - o[a]).clamp(0, d[a] as i64 - 1);
        }
        b
    }
}

fn for_box(b: IndexBox, mut f: impl FnMut([i64; 3])) {
    for k in b.lo[2]..=b.hi[2] {
        for j in b.lo[1]..=b.hi[1] {
            for i in b.lo[0]..=b.hi[0] {
                f([i, j, k]);
            }
        }
    }
}

impl Observer for WeakFormObserver<'_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField) -> Result<()> {
        if n == 0 {
            let grid = g.grid();
            let mut terms = Vec::new();
            for_box(self.nodes_near_support(grid, 0.0), |p| {
                let l = grid.index(p).expect("inside");
                terms.push(g.data()[l] * self.test.value(t, grid.position(l)));
            });
            self.terms.initial = pairwise_sum(&terms) * grid.cell_volume();
        }
        Ok(())
    }

    fn step(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        let grid = ctx.g.grid();
        let h = grid.h();
        let tau = ctx.params.tau;
        let t = ctx.time.time(ctx.n);
        let t_next = ctx.time.time(ctx.n + 1);
        let (mut time, mut div, mut adv, mut cons) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let phi = self.test;
        // x − heʲ in the support of φ needs x within h of the box.
        for_box(self.nodes_near_support(grid, 1.5 * h), |p| {
            let l = grid.index(p).expect("inside");
            let x = grid.position(l);
            let gn1 = ctx.g_next.data()[l];
            if gn1 != 0.0 {
                time.push(gn1 * phi.dt(t_next, x));
            }
            let gn = ctx.g.data()[l];
            if gn == 0.0 {
                return;
            }
            let grad = phi.grad(t, x);
            for axis in Axis::ALL {
                let a = axis.idx();
                let uc = ctx.u_trunc.component(axis);
                let u_plus = uc.shifted(p, axis, 1);
                let u_minus = uc.shifted(p, axis, -1);
                let mut xm = x;
                xm[a] -= h;
                let mut xp = x;
                xp[a] += h;
                let phi_m = phi.value(t, xm);
                let phi_p = phi.value(t, xp);
                div.push((u_plus - u_minus) / (2.0 * h) * gn * phi_m);
                adv.push(u_plus * gn * grad[a]);
                cons.push(u_plus * gn * ((phi_p - phi_m) / (2.0 * h) - grad[a]));
            }
        });
        let w = grid.cell_volume() * tau;
        self.terms.time += pairwise_sum(&time) * w;
        self.terms.divergence += pairwise_sum(&div) * w;
        self.terms.advection += pairwise_sum(&adv) * w;
        self.terms.consistency += pairwise_sum(&cons) * w;
        Ok(())
    }
}

/// Weak-form residual of a stored trajectory: `levels[n] = gⁿ` for
/// `n = 0..=T_τ` and `velocities[n] = ũⁿ` for `n = 0..T_τ`.
pub fn weak_form_residual(
    levels: &[ScalarField],
    velocities: &[VectorField],
    params: &SchemeParams,
    time: &TimeGrid,
    mask: &DomainMask,
    test: &dyn TestFunction,
) -> Result<WeakFormTerms> {
    if levels.len() != time.steps() + 1 || velocities.len() != time.steps() {
        return Err(Error::Argument("trajectory length does not match the time grid".into()));
    }
    let mut obs = WeakFormObserver::new(test, time)?;
    obs.level(0, 0.0, &levels[0])?;
    let empty: TruncatedSets = Default::default();
    for n in 0..time.steps() {
        let ctx = StepContext {
            n,
            time,
            params,
            mask,
            g: &levels[n],
            u: &velocities[n],
            u_trunc: &velocities[n],
            truncated: &empty,
            g_next: &levels[n + 1],
        };
        obs.step(&ctx)?;
    }
    Ok(obs.terms)
}
