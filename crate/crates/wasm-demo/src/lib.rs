//! WebAssembly bindings for the browser demo in `www/`. Errors cross the
//! boundary as `JsError` carrying the core error message.

pub mod demo;

use wasm_bindgen::prelude::*;

use demo::{HodgeReport, Scheme};

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn scenario_names() -> Vec<String> {
    transport_core::presets::scenario_names().iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen]
pub struct Simulation(demo::Simulation);

#[wasm_bindgen]
impl Simulation {
    /// Runs the scenario to completion; frames are replayed afterwards.
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, scheme: &str, resolution: u32, frames: usize) -> Result<Simulation, JsError> {
        let scheme = Scheme::parse(scheme).map_err(js_err)?;
        demo::Simulation::run(scenario, scheme, resolution, frames).map(Simulation).map_err(js_err)
    }

    pub fn frame_count(&self) -> usize {
        self.0.frames.len()
    }

    pub fn nx(&self) -> usize {
        self.0.frames[0].slice.nx
    }

    pub fn ny(&self) -> usize {
        self.0.frames[0].slice.ny
    }

    /// `[x₀, y₀, h]` of the slice lattice.
    pub fn geometry(&self) -> Vec<f64> {
        let s = &self.0.frames[0].slice;
        vec![s.lo[0], s.lo[1], s.h]
    }

    pub fn tau(&self) -> f64 {
        self.0.tau
    }

    /// Mid-plane values of frame `k`, row-major.
    pub fn slice(&self, k: usize) -> Vec<f64> {
        self.0.frames.get(k).map(|f| f.slice.values.clone()).unwrap_or_default()
    }

    /// `[step, t, ‖g‖₂, sup|g|]` of frame `k`.
    pub fn stats(&self, k: usize) -> Vec<f64> {
        self.0.frames.get(k).map(|f| vec![f.n as f64, f.t, f.l2, f.sup]).unwrap_or_default()
    }

    /// Default level for interface extraction, when the scenario has one.
    pub fn suggested_level(&self) -> Option<f64> {
        self.0.scenario.sphere.map(|s| s.0)
    }

    /// Interface rows `x, y, z, νx, νy, νz, m` flattened.
    pub fn interface(&self, level: f64, refine: bool) -> Result<Vec<f64>, JsError> {
        Ok(self.0.interface(level, refine).map_err(js_err)?.into_iter().flatten().collect())
    }
}

#[wasm_bindgen]
pub struct Hodge(HodgeReport);

#[wasm_bindgen]
impl Hodge {
    #[wasm_bindgen(constructor)]
    pub fn new(resolution: u32, strength: f64) -> Result<Hodge, JsError> {
        demo::hodge_demo(resolution, strength).map(Hodge).map_err(js_err)
    }

    /// `[max|D⁻·u|, max|D⁻·w|, ‖u‖², ‖w‖², ‖D⁺φ‖², CG iterations]`.
    pub fn summary(&self) -> Vec<f64> {
        let r = &self.0;
        vec![r.divergence_before, r.divergence_after, r.energy_u, r.energy_w, r.energy_gradient, r.iterations as f64]
    }

    pub fn nx(&self) -> usize {
        self.0.before.nx
    }

    pub fn ny(&self) -> usize {
        self.0.before.ny
    }

    pub fn before(&self) -> Vec<f64> {
        self.0.before.values.clone()
    }

    pub fn after(&self) -> Vec<f64> {
        self.0.after.values.clone()
    }
}
