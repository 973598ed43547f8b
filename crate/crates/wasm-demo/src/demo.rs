//! Plain-Rust side of the demo. Everything here runs natively as well, so
//! the bindings in `lib.rs` stay a thin translation layer.

use transport_core::explicit::{ExplicitProblem, Observer};
use transport_core::fields::{average_velocity, SchemeParams, TimeGrid};
use transport_core::grid::lp_norm;
use transport_core::hhd;
use transport_core::implicit::{ImplicitConfig, ImplicitObserver, ImplicitProblem};
use transport_core::levelset::{extract_interface, refine_interface, RefineConfig};
use transport_core::presets::{scenario, Cellular, Scenario};
use transport_core::solvers::SolverConfig;
use transport_core::{Axis, Domain, DomainMask, Region, ScalarField, VectorField};

/// Horizontal slice `z ≈ 0` of a field, row-major in `y` then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub nx: usize,
    pub ny: usize,
    pub lo: [f64; 2],
    pub h: f64,
    pub values: Vec<f64>,
}

impl Slice {
    pub fn of(g: &ScalarField) -> Slice {
        let grid = g.grid();
        let [nx, ny, nz] = grid.dims();
        let origin = grid.origin();
        let k = ((-origin[2] / grid.h()).round().max(0.0) as usize).min(nz - 1) as i64;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                values.push(g.get([i, j, k]));
            }
        }
        Slice { nx, ny, lo: [origin[0], origin[1]], h: grid.h(), values }
    }
}

/// One recorded frame of a run.
#[derive(Debug, Clone)]
pub struct Frame {
    pub n: usize,
    pub t: f64,
    pub slice: Slice,
    pub l2: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Scheme, String> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            _ => Err(format!("unknown scheme '{s}' (expected explicit or implicit)")),
        }
    }
}

struct Recorder<'m> {
    mask: &'m DomainMask,
    every: usize,
    last: usize,
    frames: Vec<Frame>,
}

impl Recorder<'_> {
    fn record(&mut self, n: usize, t: f64, g: &ScalarField) {
        if n.is_multiple_of(self.every) || n == self.last {
            let l2 = lp_norm(g, 2.0, Region::Interior(self.mask)).unwrap_or(f64::NAN);
            self.frames.push(Frame { n, t, slice: Slice::of(g), l2, sup: g.max_abs() });
        }
    }
}

impl Observer for Recorder<'_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField) -> transport_core::Result<()> {
        self.record(n, t, g);
        Ok(())
    }
}

impl ImplicitObserver for Recorder<'_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField, _w: Option<&VectorField>) {
        self.record(n, t, g);
    }
}

/// A finished run of a built-in scenario, kept for replay and for
/// interface extraction on the final level.
pub struct Simulation {
    pub scenario: Scenario,
    pub tau: f64,
    pub frames: Vec<Frame>,
    pub g_final: ScalarField,
}

/// Largest resolution the page offers; 3D work grows like `n⁴`.
pub const MAX_RESOLUTION: u32 = 40;

impl Simulation {
    /// Runs `name` at spacing `1/resolution` with `τ = h` where admissible,
    /// recording at most `frames + 1` mid-plane slices.
    pub fn run(name: &str, scheme: Scheme, resolution: u32, frames: usize) -> Result<Simulation, String> {
        if !(4..=MAX_RESOLUTION).contains(&resolution) {
            return Err(format!("resolution must lie in 4..={MAX_RESOLUTION}, got {resolution}"));
        }
        let sc = scenario(name).map_err(|e| e.to_string())?;
        let h = 1.0 / resolution as f64;
        let domain = sc.domain();
        let v = sc.velocity.as_ref();
        let order = 2;
        let (tau, frames, g_final) = match scheme {
            Scheme::Explicit => {
                let params = SchemeParams::smooth(h, 1.0, v.sup_bound());
                let problem = ExplicitProblem::new(v, &domain, params, sc.t_final, 3, order, vec![2.0])
                    .map_err(|e| e.to_string())?;
                let steps = problem.time().steps();
                let mut rec =
                    Recorder { mask: problem.mask(), every: every(steps, frames), last: steps, frames: vec![] };
                let run = problem.run(sc.initial.as_ref(), &mut [&mut rec]).map_err(|e| e.to_string())?;
                (problem.time().tau(), rec.frames, run.g_final)
            }
            Scheme::Implicit => {
                let problem = ImplicitProblem::new(v, &domain, h, h, sc.t_final, order, ImplicitConfig::default())
                    .map_err(|e| e.to_string())?;
                let steps = problem.time().steps();
                let mut rec =
                    Recorder { mask: problem.mask(), every: every(steps, frames), last: steps, frames: vec![] };
                let state = problem.run(sc.initial.as_ref(), &mut [&mut rec]).map_err(|e| e.to_string())?;
                (problem.time().tau(), rec.frames, state.g)
            }
        };
        Ok(Simulation { scenario: sc, tau, frames, g_final })
    }

    /// Interface `{g = level}` of the final level as rows
    /// `x, y, z, νx, νy, νz, m`.
    pub fn interface(&self, level: f64, refine: bool) -> Result<Vec<[f64; 7]>, String> {
        let set = extract_interface(&self.g_final, level, None).map_err(|e| e.to_string())?;
        let set = if refine {
            refine_interface(&set, &self.g_final, &RefineConfig::default()).map_err(|e| e.to_string())?.0
        } else {
            set.with_geometry(&self.g_final, true)
        };
        Ok(set
            .points
            .iter()
            .map(|p| [p.x[0], p.x[1], p.x[2], p.normal[0], p.normal[1], p.normal[2], p.curvature])
            .collect())
    }
}

fn every(steps: usize, frames: usize) -> usize {
    steps.div_ceil(frames.max(1)).max(1)
}

/// Before/after summary of one Hodge projection.
#[derive(Debug, Clone)]
pub struct HodgeReport {
    pub divergence_before: f64,
    pub divergence_after: f64,
    pub energy_u: f64,
    pub energy_w: f64,
    pub energy_gradient: f64,
    pub iterations: usize,
    /// `|D⁻·u|` and `|D⁻·w|` on the mid plane.
    pub before: Slice,
    pub after: Slice,
}

/// Projects a cellular flow polluted by `strength · ∇e^{−4|x|²}` on the
/// ball of radius 0.9. The cellular part is solenoidal, so `w` should recover it.
pub fn hodge_demo(resolution: u32, strength: f64) -> Result<HodgeReport, String> {
    if !(4..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must lie in 4..={MAX_RESOLUTION}, got {resolution}"));
    }
    let h = 1.0 / resolution as f64;
    let mask = DomainMask::for_domain(&Domain::ball([0.0; 3], 0.9), h).map_err(|e| e.to_string())?;
    let flow = Cellular::new(1.0, 2.0, 0.3, 0.8).map_err(|e| e.to_string())?;
    let time = TimeGrid::new(h, 1.0).map_err(|e| e.to_string())?;
    let base = average_velocity(&flow, &mask, &time, 0, 2).map_err(|e| e.to_string())?;
    let push = VectorField::from_fn(*mask.grid(), |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let s = -8.0 * strength * (-4.0 * r2).exp();
        [s * x[0], s * x[1], s * x[2]]
    });
    let u = base.lincomb(1.0, &push, 1.0).masked(&mask);
    let r = hhd::project(&u, &mask, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let div_u = divergence(&u, &mask);
    let div_w = divergence(&r.w, &mask);
    let energy = |f: &VectorField| transport_core::grid::l2_norm_sq_vec(f, Region::Inner(&mask));
    Ok(HodgeReport {
        divergence_before: div_u.max_abs(),
        divergence_after: div_w.max_abs(),
        energy_u: energy(&u),
        energy_w: energy(&r.w),
        energy_gradient: energy(&transport_core::grid::gradient_plus(&r.phi)),
        iterations: r.solve.iterations,
        before: Slice::of(&div_u),
        after: Slice::of(&div_w),
    })
}

/// `|D⁻·f|` on the inner nodes, with `f` read as zero off them.
fn divergence(f: &VectorField, mask: &DomainMask) -> ScalarField {
    let grid = *mask.grid();
    let strides = grid.strides();
    let mut out = ScalarField::zeros(grid);
    for &l in mask.inner_nodes() {
        let mut s = 0.0;
        for axis in Axis::ALL {
            let c = f.component(axis).data();
            let back = l - strides[axis.idx()];
            s += c[l] - if mask.is_inner(back) { c[back] } else { 0.0 };
        }
        out.data_mut()[l] = (s / grid.h()).abs();
    }
    out
}
