//! Discrete Helmholtz–Hodge decomposition on Ω_h.
//!
//! With `I = Ω_h ∖ ∂Ω_h` and `χ_I` the restriction to `I`, the potential
//! solves
//!
//! ```text
//! D⁻·(χ_I D⁺φ) = D⁻·(χ_I u)  on I,   φ = 0 off I,
//! ```
//!
//! and `w = χ_I(u − D⁺φ)`. Then `D⁻·w = 0` on `I`, `w = 0` on ∂Ω_h and
//! `u = w + D⁺φ` on `I`. The operator `−D⁻·(χ_I D⁺·)` is symmetric positive
//! definite on functions vanishing off `I` (summation by parts), so the
//! solve is matrix-free conjugate gradients.

use log::debug;

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Axis, CompactIndex, DomainMask, ScalarField, VectorField};
use crate::solvers::{conjugate_gradient, LinearOperator, SolveReport, SolverConfig};

/// Output of [`project`].
#[derive(Debug, Clone)]
pub struct HhdResult {
    pub w: VectorField,
    pub phi: ScalarField,
    /// `max_I |D⁻·w|`.
    pub divergence_residual: f64,
    /// `max_I |w + D⁺φ − u|`.
    pub reconstruction_residual: f64,
    pub solve: SolveReport,
}

/// `−D⁻·(χ_I D⁺φ)` on the compact unknowns.
pub struct HodgeOperator<'a> {
    index: &'a CompactIndex,
    inv_h2: f64,
}

impl LinearOperator for HodgeOperator<'_> {
    fn dim(&self) -> usize {
        self.index.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // For x ∈ I: −Σⱼ [(φ(x+eʲ) − φ(x)) − χ_I(x−eʲ)(φ(x) − φ(x−eʲ))]/h².
        for (i, yi) in y.iter_mut().enumerate() {
            let nb = self.index.neighbors(i);
            let xi = x[i];
            let mut s = 0.0;
            for a in 0..3 {
                let m = nb[2 * a];
                let p = nb[2 * a + 1];
                let fp = if p == CompactIndex::NONE { 0.0 } else { x[p as usize] };
                s += fp - xi;
                if m != CompactIndex::NONE {
                    s -= xi - x[m as usize];
                }
            }
            *yi = -s * self.inv_h2;
        }
    }
}

/// Reusable projector for one mask.
pub struct HodgeProjector<'m> {
    mask: &'m DomainMask,
    index: CompactIndex,
}

impl<'m> HodgeProjector<'m> {
    pub fn new(mask: &'m DomainMask) -> Result<Self> {
        Ok(HodgeProjector { mask, index: CompactIndex::inner(mask)? })
    }

    pub fn index(&self) -> &CompactIndex {
        &self.index
    }

    pub fn operator(&self) -> HodgeOperator<'_> {
        let h = self.mask.grid().h();
        HodgeOperator { index: &self.index, inv_h2: 1.0 / (h * h) }
    }

    /// Right-hand side `−D⁻·(χ_I u)` at the unknowns.
    pub fn rhs(&self, u: &VectorField) -> Vec<f64> {
        let grid = self.mask.grid();
        let h = grid.h();
        let strides = grid.strides();
        self.index
            .nodes()
            .iter()
            .map(|&l| {
                let mut s = 0.0;
                for axis in Axis::ALL {
                    let a = axis.idx();
                    let c = u.component(axis).data();
                    let back = l - strides[a];
                    let ub = if self.mask.is_inner(back) { c[back] } else { 0.0 };
                    s += c[l] - ub;
                }
                -s / h
            })
            .collect()
    }

    /// Decomposes `u`; `guess` warm-starts the potential. CG stops once
    /// `max_I |D⁻·w| ≤ cfg.tolerance`.
    pub fn project(&self, u: &VectorField, cfg: &SolverConfig, guess: Option<&ScalarField>) -> Result<HhdResult> {
        let grid = *self.mask.grid();
        if u.grid() != &grid {
            return Err(Error::Argument("velocity is not on the mask grid".into()));
        }
        let b = self.rhs(u);
        let mut x = match guess {
            Some(g) => self.index.gather(g),
            None => vec![0.0; self.index.len()],
        };
        // The CG residual equals −D⁻·w on I, so dividing the tolerance by
        // the right-hand side scale turns it into an absolute bound.
        let mut cfg = *cfg;
        cfg.tolerance /= b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let solve = conjugate_gradient(&self.operator(), &b, &mut x, &cfg)?;
        let phi = self.index.scatter(&grid, &x);
        let h = grid.h();
        let mut w = VectorField::zeros(grid);
        let mut recon = 0.0f64;
        for &l in self.index.nodes() {
            let p = grid.unravel(l);
            let uu = u.at(l);
            let mut wl = [0.0; 3];
            for axis in Axis::ALL {
                let a = axis.idx();
                let grad = (phi.shifted(p, axis, 1) - phi.data()[l]) / h;
                wl[a] = uu[a] - grad;
                recon = recon.max((wl[a] + grad - uu[a]).abs());
            }
            w.set(l, wl);
        }
        let divergence_residual = self.divergence_residual(&w);
        debug!(
            "hhd: {} unknowns, {} CG iterations, max |D-.w| = {divergence_residual:e}",
            self.index.len(),
            solve.iterations
        );
        Ok(HhdResult { w, phi, divergence_residual, reconstruction_residual: recon, solve })
    }

    /// `max_I |D⁻·w|`.
    pub fn divergence_residual(&self, w: &VectorField) -> f64 {
        let grid = self.mask.grid();
        let h = grid.h();
        let strides = grid.strides();
        self.index.nodes().iter().fold(0.0f64, |m, &l| {
            let mut s = 0.0;
            for axis in Axis::ALL {
                let c = w.component(axis).data();
                s += c[l] - c[l - strides[axis.idx()]];
            }
            m.max((s / h).abs())
        })
    }
}

/// One-shot [`HodgeProjector::project`].
pub fn project(u: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<HhdResult> {
    HodgeProjector::new(mask)?.project(u, cfg, None)
}

/// The two sides of the stability estimate `Σ|u − w|² ≤ A·Σ|D⁻·u|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityGap {
    /// `Σ_I |u − w|²h³`.
    pub lhs: f64,
    /// `Σ_I |D⁻·u|²h³`.
    pub rhs: f64,
}

impl StabilityGap {
    /// Empirical lower bound for the domain constant `A`; 0 when both sides vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Evaluates both sides for `u` vanishing on ∂Ω_h (and off Ω_h).
pub fn stability_gap(u: &VectorField, result: &HhdResult, mask: &DomainMask) -> Result<StabilityGap> {
    let grid = mask.grid();
    for l in 0..grid.len() {
        if !mask.is_inner(l) && u.at(l) != [0.0; 3] {
            return Err(Error::Precondition(format!(
                "velocity must vanish on the discrete boundary, found {:?} at {:?}",
                u.at(l),
                grid.position(l)
            )));
        }
    }
    let h = grid.h();
    let strides = grid.strides();
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for &l in mask.inner_nodes() {
        let a = u.at(l);
        let b = result.w.at(l);
        lhs.push((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2));
        let mut d = 0.0;
        for axis in Axis::ALL {
            let c = u.component(axis).data();
            d += (c[l] - c[l - strides[axis.idx()]]) / h;
        }
        rhs.push(d * d);
    }
    let vol = grid.cell_volume();
    let gap = StabilityGap { lhs: pairwise_sum(&lhs) * vol, rhs: pairwise_sum(&rhs) * vol };
    if !(gap.lhs.is_finite() && gap.rhs.is_finite()) {
        return Err(Error::Data("non-finite stability sums".into()));
    }
    Ok(gap)
}

/// Running maximum of [`StabilityGap::ratio`] over calls on one mask.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StabilityTracker {
    pub max_ratio: f64,
    pub samples: usize,
}

impl StabilityTracker {
    pub fn record(&mut self, gap: &StabilityGap) {
        self.max_ratio = self.max_ratio.max(gap.ratio());
        self.samples += 1;
        debug!(
            "hhd stability: ratio {:e}, running max {:e} over {} samples",
            gap.ratio(),
            self.max_ratio,
            self.samples
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product_vec, l2_norm_sq_vec, Domain, GridSpec, Region};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask8() -> DomainMask {
        let grid = GridSpec::new(1.0 / 8.0, [-5; 3], [11; 3]).unwrap();
        DomainMask::new(grid, &Domain::cube(0.55)).unwrap()
    }

    fn random_u(mask: &DomainMask, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = VectorField::zeros(*mask.grid());
        for &l in mask.interior_nodes() {
            u.set(l, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        }
        u
    }

    #[test]
    fn decomposition_properties() {
        let mask = mask8();
        let u = random_u(&mask, 1);
        let cfg = SolverConfig::with_tolerance(1e-13);
        let r = project(&u, &mask, &cfg).unwrap();
        assert!(r.divergence_residual <= 1e-10);
        assert!(r.reconstruction_residual <= 1e-13);
        for &l in mask.boundary_nodes() {
            assert_eq!(r.w.at(l), [0.0; 3]);
            assert_eq!(r.phi.data()[l], 0.0);
        }
        let grad = crate::grid::gradient_plus(&r.phi).masked(&mask);
        let inner = Region::Inner(&mask);
        let u2 = l2_norm_sq_vec(&u, inner);
        assert!(inner_product_vec(&r.w, &grad, inner).unwrap().abs() <= 1e-10 * u2);
        assert!(l2_norm_sq_vec(&r.w, inner) <= u2 * (1.0 + 1e-12));
        assert!(l2_norm_sq_vec(&grad, inner) <= u2 * (1.0 + 1e-12));
    }

    #[test]
    fn projection_is_idempotent() {
        let mask = mask8();
        let cfg = SolverConfig::with_tolerance(1e-13);
        let r = project(&random_u(&mask, 2), &mask, &cfg).unwrap();
        let again = project(&r.w, &mask, &cfg).unwrap();
        assert!(again.phi.max_abs() < 1e-11);
        assert!(again.w.lincomb(1.0, &r.w, -1.0).max_abs() < 1e-11);
    }

    #[test]
    fn pure_gradient_is_recovered() {
        let mask = mask8();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut phi0 = ScalarField::zeros(*mask.grid());
        for &l in mask.inner_nodes() {
            phi0.data_mut()[l] = rng.gen_range(-1.0..1.0);
        }
        let u = crate::grid::gradient_plus(&phi0).masked(&mask);
        let r = project(&u, &mask, &SolverConfig::with_tolerance(1e-13)).unwrap();
        assert!(r.w.max_abs() < 1e-10);
        assert!(r.phi.lincomb(1.0, &phi0, -1.0).max_abs() < 1e-10);
    }

    #[test]
    fn stability_gap_requires_zero_boundary() {
        let mask = mask8();
        let u = random_u(&mask, 4);
        let r = project(&u, &mask, &SolverConfig::default()).unwrap();
        assert!(matches!(stability_gap(&u, &r, &mask), Err(Error::Precondition(_))));
        let inner_only = {
            let mut v = VectorField::zeros(*mask.grid());
            for &l in mask.inner_nodes() {
                v.set(l, u.at(l));
            }
            v
        };
        let r = project(&inner_only, &mask, &SolverConfig::default()).unwrap();
        let gap = stability_gap(&inner_only, &r, &mask).unwrap();
        assert!(gap.ratio().is_finite() && gap.ratio() > 0.0);
    }
}
