//! Implicit scheme on Ω_h with zero boundary values.
//!
//! Each step solves, for `y = gⁿ⁺¹` on `I = Ω_h ∖ ∂Ω_h`,
//!
//! ```text
//! y(x) + (τ/2h) Σⱼ [wⱼ(x−heʲ)(y(x) − y(x−heʲ)) + wⱼ(x)(y(x+heʲ) − y(x))] = gⁿ(x)
//! ```
//!
//! with `w = P_h uⁿ` the divergence-free part of the averaged velocity.
//! With `D⁻·w = 0` on `I` the advection part is skew, so the system is
//! uniquely solvable for every `(h, τ)` and `‖gⁿ⁺¹‖₂ ≤ ‖gⁿ‖₂`.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::fields::{average_initial, TimeGrid, VelocityAverages};
use crate::grid::{lp_norm, Axis, CompactIndex, Domain, DomainMask, GridSpec, Region, ScalarField, VectorField};
use crate::hhd::HodgeProjector;
use crate::presets::{Initial, Velocity};
use crate::solvers::{gmres, LinearOperator, SolveReport, SolverConfig};

/// Solver settings for the implicit scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImplicitConfig {
    /// Restarted GMRES for the step system.
    pub step: SolverConfig,
    /// Conjugate gradients for the projection.
    pub projection: SolverConfig,
    /// Largest admissible `max_I |D⁻·w|`; `None` means ten times the
    /// projection tolerance.
    pub divergence_threshold: Option<f64>,
}

impl ImplicitConfig {
    pub fn divergence_threshold(&self) -> f64 {
        self.divergence_threshold.unwrap_or(10.0 * self.projection.tolerance)
    }
}

/// The step matrix `I + τS` on the compact unknowns; 7 entries per row.
#[derive(Debug, Clone)]
pub struct StepOperator<'a> {
    index: &'a CompactIndex,
    diag: Vec<f64>,
    /// Coefficients of the neighbours in [`CompactIndex::neighbors`] order.
    off: Vec<[f64; 6]>,
}

impl LinearOperator for StepOperator<'_> {
    fn dim(&self) -> usize {
        self.index.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let nb = self.index.neighbors(i);
            let c = &self.off[i];
            let mut s = self.diag[i] * x[i];
            for k in 0..6 {
                if nb[k] != CompactIndex::NONE {
                    s += c[k] * x[nb[k] as usize];
                }
            }
            *yi = s;
        }
    }
}

impl StepOperator<'_> {
    /// Nonzero entries of row `i` as `(column, value)`, diagonal first.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out = vec![(i, self.diag[i])];
        for (k, &n) in self.index.neighbors(i).iter().enumerate() {
            if n != CompactIndex::NONE && self.off[i][k] != 0.0 {
                out.push((n as usize, self.off[i][k]));
            }
        }
        out
    }

    pub fn index(&self) -> &CompactIndex {
        self.index
    }
}

/// Builds the step matrix for `w` and `τ` over the unknowns of `index`.
pub fn assemble_step_operator<'a>(w: &VectorField, tau: f64, index: &'a CompactIndex) -> Result<StepOperator<'a>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Argument(format!("time step must be positive, got {tau}")));
    }
    let grid = w.grid();
    let r = tau / (2.0 * grid.h());
    let strides = grid.strides();
    let mut diag = Vec::with_capacity(index.len());
    let mut off = Vec::with_capacity(index.len());
    for &l in index.nodes() {
        let mut d = 1.0;
        let mut c = [0.0; 6];
        for axis in Axis::ALL {
            let a = axis.idx();
            let comp = w.component(axis).data();
            let back = comp[l - strides[a]];
            let here = comp[l];
            d += r * (back - here);
            c[2 * a] = -r * back;
            c[2 * a + 1] = r * here;
        }
        diag.push(d);
        off.push(c);
    }
    Ok(StepOperator { index, diag, off })
}

/// Applies the step stencil node by node on the full window, with `y`
/// restricted to `I` first. Used to cross-check [`StepOperator`].
pub fn apply_step_reference(w: &VectorField, tau: f64, mask: &DomainMask, y: &ScalarField) -> ScalarField {
    let y = {
        let mut z = ScalarField::zeros(*mask.grid());
        for &l in mask.inner_nodes() {
            z.data_mut()[l] = y.data()[l];
        }
        z
    };
    let grid = *mask.grid();
    let h = grid.h();
    let mut out = ScalarField::zeros(grid);
    for &l in mask.inner_nodes() {
        let p = grid.unravel(l);
        let mut s = 0.0;
        for axis in Axis::ALL {
            let wj = w.component(axis);
            let w_back = wj.shifted(p, axis, -1);
            let w_here = wj.data()[l];
            let dp_back = (y.data()[l] - y.shifted(p, axis, -1)) / h;
            let dp_here = (y.shifted(p, axis, 1) - y.data()[l]) / h;
            s += w_back * dp_back + w_here * dp_here;
        }
        out.data_mut()[l] = y.data()[l] + 0.5 * tau * s;
    }
    out
}

/// One implicit step. `g` must vanish off `I`; `w` must vanish off `I` and
/// be discretely divergence-free there.
pub fn step_implicit(
    g: &ScalarField,
    w: &VectorField,
    tau: f64,
    mask: &DomainMask,
    cfg: &ImplicitConfig,
) -> Result<(ScalarField, SolveReport)> {
    let index = CompactIndex::inner(mask)?;
    step_with_index(g, w, tau, mask, &index, cfg)
}

fn check_inputs(g: &ScalarField, w: &VectorField, mask: &DomainMask, cfg: &ImplicitConfig) -> Result<()> {
    let grid = mask.grid();
    if g.grid() != grid || w.grid() != grid {
        return Err(Error::Argument("fields are not on the mask grid".into()));
    }
    for l in 0..grid.len() {
        if mask.is_inner(l) {
            continue;
        }
        if g.data()[l] != 0.0 {
            return Err(Error::Precondition(format!(
                "g must vanish on the discrete boundary, found {} at {:?}",
                g.data()[l],
                grid.position(l)
            )));
        }
        if w.at(l) != [0.0; 3] {
            return Err(Error::Precondition(format!(
                "w must vanish on the discrete boundary, found {:?} at {:?}",
                w.at(l),
                grid.position(l)
            )));
        }
    }
    let h = grid.h();
    let strides = grid.strides();
    let limit = cfg.divergence_threshold();
    for &l in mask.inner_nodes() {
        let mut s = 0.0;
        for axis in Axis::ALL {
            let c = w.component(axis).data();
            s += c[l] - c[l - strides[axis.idx()]];
        }
        let div = (s / h).abs();
        if !(div <= limit) {
            return Err(Error::Precondition(format!("|D-.w| = {div:e} at {:?} exceeds {limit:e}", grid.position(l))));
        }
    }
    Ok(())
}

fn step_with_index(
    g: &ScalarField,
    w: &VectorField,
    tau: f64,
    mask: &DomainMask,
    index: &CompactIndex,
    cfg: &ImplicitConfig,
) -> Result<(ScalarField, SolveReport)> {
    check_inputs(g, w, mask, cfg)?;
    let op = assemble_step_operator(w, tau, index)?;
    let b = index.gather(g);
    let mut y = b.clone();
    let report = gmres(&op, &b, &mut y, &cfg.step)?;
    Ok((index.scatter(mask.grid(), &y), report))
}

/// Per-step record of an implicit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitStepRecord {
    pub n: usize,
    /// `‖gⁿ⁺¹‖₂` over Ω_h.
    pub l2: f64,
    /// `(gⁿ⁺¹, gⁿ)₂` over Ω_h.
    pub cross: f64,
    pub solve: SolveReport,
    pub projection_iterations: usize,
    pub divergence_residual: f64,
}

/// Trajectory of an implicit run.
#[derive(Debug, Clone)]
pub struct ImplicitState {
    pub n: usize,
    pub g: ScalarField,
    /// `‖g⁰‖₂, ‖g¹‖₂, …`.
    pub l2_history: Vec<f64>,
    pub steps: Vec<ImplicitStepRecord>,
}

/// Hook called after each implicit level is available.
pub trait ImplicitObserver {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField, w: Option<&VectorField>);
}

/// A configured implicit problem. No relation between `τ` and `h` is
/// required.
pub struct ImplicitProblem<'a> {
    velocity: &'a dyn Velocity,
    mask: DomainMask,
    time: TimeGrid,
    quadrature_order: usize,
    cfg: ImplicitConfig,
}

impl<'a> ImplicitProblem<'a> {
    pub fn new(
        velocity: &'a dyn Velocity,
        domain: &Domain,
        h: f64,
        tau: f64,
        t_final: f64,
        quadrature_order: usize,
        cfg: ImplicitConfig,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("grid spacing must be positive, got {h}")));
        }
        let time = TimeGrid::new(tau, t_final)?;
        let (lo, hi) = domain.bounds();
        let window = GridSpec::covering(lo, hi, h, 1)?;
        let mask = DomainMask::new(window, domain)?;
        Ok(ImplicitProblem { velocity, mask, time, quadrature_order, cfg })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// Cell averages of `f0`, restricted to `I`.
    pub fn initial(&self, f0: &dyn Initial) -> Result<ScalarField> {
        let avg = average_initial(f0, self.mask.grid(), self.quadrature_order)?;
        let mut g = ScalarField::zeros(*self.mask.grid());
        let mut dropped = 0.0f64;
        for (l, &v) in avg.data().iter().enumerate() {
            if self.mask.is_inner(l) {
                g.data_mut()[l] = v;
            } else {
                dropped = dropped.max(v.abs());
            }
        }
        if dropped > 0.0 {
            warn!("initial data reaches the discrete boundary (max dropped value {dropped:e})");
        }
        Ok(g)
    }

    pub fn run(&self, f0: &dyn Initial, observers: &mut [&mut dyn ImplicitObserver]) -> Result<ImplicitState> {
        self.run_from(self.initial(f0)?, observers)
    }

    pub fn run_from(&self, g0: ScalarField, observers: &mut [&mut dyn ImplicitObserver]) -> Result<ImplicitState> {
        let mask = &self.mask;
        let projector = HodgeProjector::new(mask)?;
        let mut averages = VelocityAverages::new(self.velocity, mask, self.time, self.quadrature_order);
        let tau = self.time.tau();
        let l2 = |f: &ScalarField| lp_norm(f, 2.0, Region::Interior(mask));
        let mut g = g0;
        let mut history = vec![l2(&g)?];
        let mut steps = Vec::with_capacity(self.time.steps());
        let mut projected: Option<(usize, VectorField, f64, usize)> = None;
        let mut phi_guess: Option<ScalarField> = None;
        for o in observers.iter_mut() {
            o.level(0, 0.0, &g, None);
        }
        for n in 0..self.time.steps() {
            let reuse = projected.is_some() && (!self.velocity.is_time_dependent());
            if !reuse {
                let u = averages.at(n)?;
                let r = projector.project(u, &self.cfg.projection, phi_guess.as_ref())?;
                phi_guess = Some(r.phi);
                projected = Some((n, r.w, r.divergence_residual, r.solve.iterations));
            }
            let (_, w, div, pits) = projected.as_ref().expect("projected above");
            let (next, solve) = step_with_index(&g, w, tau, mask, projector.index(), &self.cfg)?;
            let cross = crate::grid::inner_product(&next, &g, Region::Interior(mask))?;
            let norm = l2(&next)?;
            debug!("implicit step {n}: |g| = {norm:e}, GMRES {} iterations, |D-.w| = {div:e}", solve.iterations);
            history.push(norm);
            steps.push(ImplicitStepRecord {
                n,
                l2: norm,
                cross,
                solve,
                projection_iterations: if reuse { 0 } else { *pits },
                divergence_residual: *div,
            });
            g = next;
            for o in observers.iter_mut() {
                o.level(n + 1, self.time.time(n + 1), &g, Some(w));
            }
        }
        Ok(ImplicitState { n: self.time.steps(), g, l2_history: history, steps })
    }
}
