//! fields → scheme → level set → oracle, plus artifact bookkeeping.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use transport_core::explicit::{ExplicitProblem, Observer};
use transport_core::fields::TauBranch;
use transport_core::grid::lp_norm;
use transport_core::implicit::{ImplicitObserver, ImplicitProblem};
use transport_core::io::{fmt_f64, write_field_csv, write_interface_csv, write_interface_vtk, write_vtk_field};
use transport_core::levelset::{
    extract_interface, geometry_errors, refine_interface, GeometryErrors, InterfacePointSet, MovingSphere, RefineConfig,
};
use transport_core::reference::{cascade_row, CharacteristicsOracle, FlowConfig, SolutionOracle};
use transport_core::{DomainMask, Error, Region, Result, ScalarField, VectorField};

use crate::config::{Format, Resolved, Scheme};

/// Files written under one output directory.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Internal(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Writes `manifest.json` listing every other file with size and SHA-256.
    pub fn finish(mut self) -> Result<PathBuf> {
        let mut entries = Vec::new();
        for name in &self.files {
            let bytes = std::fs::read(self.dir.join(name))?;
            entries.push(json!({
                "path": name,
                "bytes": bytes.len(),
                "sha256": hex(&Sha256::digest(&bytes)),
            }));
        }
        let manifest = json!({ "files": entries });
        self.files.clear();
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir.join("manifest.json"))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Oracle errors of one level; `None` where not computed.
#[derive(Debug, Clone, Copy, Default)]
pub struct LevelErrors {
    pub n: usize,
    pub t: f64,
    pub sup: Option<f64>,
    pub l2: Option<f64>,
    pub grad: Option<f64>,
    pub hess: Option<f64>,
    pub geometry: Option<GeometryErrors>,
}

pub const ERROR_COLUMNS: [&str; 8] =
    ["sup_err", "L2_err", "grad_err", "hess_err", "hausdorff", "normal_err", "curv_err", "area_err"];

impl LevelErrors {
    pub fn values(&self) -> [Option<f64>; 8] {
        let g = self.geometry;
        [
            self.sup,
            self.l2,
            self.grad,
            self.hess,
            g.map(|g| g.hausdorff),
            g.map(|g| g.normal),
            g.map(|g| g.curvature),
            g.map(|g| g.area),
        ]
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Handles the selected time levels of a run: snapshots, interfaces and
/// oracle errors.
pub struct LevelSink<'a> {
    cfg: &'a Resolved,
    mask: &'a DomainMask,
    last: usize,
    oracle: Option<CharacteristicsOracle<'a>>,
    sphere: Option<MovingSphere>,
    pub errors: Vec<LevelErrors>,
    pub interface_points: Vec<(usize, usize)>,
    artifacts: Option<&'a mut Artifacts>,
}

impl<'a> LevelSink<'a> {
    pub fn new(
        cfg: &'a Resolved,
        mask: &'a DomainMask,
        tau: f64,
        last: usize,
        artifacts: Option<&'a mut Artifacts>,
        oracle: bool,
    ) -> Result<Self> {
        let oracle = oracle.then(|| {
            let mut flow = FlowConfig::for_run(tau, cfg.t_final);
            if let Some(s) = cfg.oracle.substep {
                flow.substep = s;
            }
            CharacteristicsOracle::new(cfg.initial.as_ref(), cfg.velocity.as_ref(), flow)
        });
        let sphere = match (cfg.sphere, oracle.is_some() && cfg.levelset.enabled) {
            (Some((c, r)), true) => Some(
                MovingSphere::under_swirl(cfg.velocity.clone(), c, r)
                    .map_err(|e| Error::Config(format!("oracle.sphere_center: {e}")))?,
            ),
            _ => None,
        };
        Ok(LevelSink { cfg, mask, last, oracle, sphere, errors: Vec::new(), interface_points: Vec::new(), artifacts })
    }

    fn selected(&self, n: usize) -> bool {
        let k = self.cfg.output.snapshot_every;
        n == self.last || (k > 0 && n.is_multiple_of(k))
    }

    fn interface(&self, g: &ScalarField, n: usize, t: f64) -> Result<InterfacePointSet> {
        let ls = &self.cfg.levelset;
        let level = self.cfg.level.expect("validated");
        let raw = extract_interface(g, level, Some(self.mask))?.with_time(n, t);
        if ls.refine {
            let rc = RefineConfig {
                patch_half_width: ls.patch_half_width,
                gradient_floor: ls.gradient_floor,
                orient_outward: ls.orient_outward,
            };
            Ok(refine_interface(&raw, g, &rc)?.0)
        } else {
            if ls.gradient_floor > 0.0 {
                check_floor(&raw, g, ls.gradient_floor)?;
            }
            Ok(raw.with_geometry(g, ls.orient_outward))
        }
    }

    pub fn level(&mut self, n: usize, t: f64, g: &ScalarField) -> Result<()> {
        if !self.selected(n) {
            return Ok(());
        }
        let mut set = if self.cfg.levelset.enabled { Some(self.interface(g, n, t)?) } else { None };
        if let Some(oracle) = &self.oracle {
            let row = cascade_row(g, n, t, oracle)?;
            let mut diff = ScalarField::zeros(*g.grid());
            for &l in self.mask.interior_nodes() {
                diff.data_mut()[l] = g.data()[l] - oracle.value(t, g.grid().position(l))?;
            }
            let l2 = lp_norm(&diff, 2.0, Region::Interior(self.mask))?;
            let geometry = match (&self.sphere, &set) {
                (Some(s), Some(set)) => Some(geometry_errors(set, g, s, t)),
                _ => None,
            };
            self.errors.push(LevelErrors {
                n,
                t,
                sup: Some(row.sup[0]),
                l2: Some(l2),
                grad: Some(row.sup[1]),
                hess: Some(row.sup[2]),
                geometry,
            });
        }
        if let Some(set) = &mut set {
            if self.cfg.levelset.flip_curvature {
                for p in &mut set.points {
                    p.curvature = -p.curvature;
                }
            }
            self.interface_points.push((n, set.points.len()));
        }
        let Some(art) = self.artifacts.as_deref_mut() else {
            return Ok(());
        };
        let name = &self.cfg.name;
        let out = &self.cfg.output;
        for f in &out.formats {
            match f {
                Format::Csv => art.write(&format!("g_{n:06}.csv"), |w| write_field_csv(w, g, out.sparse_csv))?,
                Format::Vtk => art.write(&format!("g_{n:06}.vtk"), |w| {
                    write_vtk_field(w, g, "g", &format!("{name} n={n} t={}", fmt_f64(t)))
                })?,
            }
        }
        if let Some(set) = &set {
            art.write(&format!("interface_{n:06}.csv"), |w| write_interface_csv(w, set, true))?;
            if out.formats.contains(&Format::Vtk) {
                art.write(&format!("interface_{n:06}.vtk"), |w| {
                    write_interface_vtk(w, set, &format!("{name} interface n={n}"))
                })?;
            }
        }
        Ok(())
    }
}

fn check_floor(set: &InterfacePointSet, g: &ScalarField, floor: f64) -> Result<()> {
    let mut bad = Vec::new();
    for &p in &set.nodes {
        let d = transport_core::grid::grad_plus_at(g, p);
        if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < floor {
            bad.push(p);
        }
    }
    match bad.first() {
        Some(&p) => Err(Error::Degenerate { count: bad.len(), first: g.grid().position_ijk(p) }),
        None => Ok(()),
    }
}

struct ExplicitAdapter<'s, 'a>(&'s mut LevelSink<'a>);

impl Observer for ExplicitAdapter<'_, '_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField) -> Result<()> {
        self.0.level(n, t, g)
    }
}

struct ImplicitAdapter<'s, 'a> {
    sink: &'s mut LevelSink<'a>,
    error: Option<Error>,
}

impl ImplicitObserver for ImplicitAdapter<'_, '_> {
    fn level(&mut self, n: usize, t: f64, g: &ScalarField, _w: Option<&VectorField>) {
        if self.error.is_none() {
            if let Err(e) = self.sink.level(n, t, g) {
                self.error = Some(e);
            }
        }
    }
}

/// Outcome of one solve.
pub struct RunOutcome {
    pub summary: Value,
    /// Per-step diagnostics table, CSV with header.
    pub diagnostics: String,
    pub errors: Vec<LevelErrors>,
    pub tau: f64,
}

/// Runs the configured scheme once. With `artifacts`, snapshots are
/// written as they are produced.
pub fn solve(cfg: &Resolved, artifacts: Option<&mut Artifacts>, oracle: bool) -> Result<RunOutcome> {
    match cfg.scheme {
        Scheme::Explicit => solve_explicit(cfg, artifacts, oracle),
        Scheme::Implicit => solve_implicit(cfg, artifacts, oracle),
    }
}

/// Builds the problem without running it; this is where the scaling gate
/// and all geometry checks fire.
pub fn check(cfg: &Resolved) -> Result<Value> {
    match cfg.scheme {
        Scheme::Explicit => {
            let p = ExplicitProblem::new(
                cfg.velocity.as_ref(),
                &cfg.domain,
                cfg.scheme_params(),
                cfg.t_final,
                cfg.margin,
                cfg.quadrature_order,
                cfg.explicit.norms.clone(),
            )
            .map_err(|e| tag_scaling("explicit", e))?;
            Ok(
                json!({ "scheme": "explicit", "h": cfg.h, "tau": p.time().tau(), "steps": p.time().steps(), "window": p.grid().dims() }),
            )
        }
        Scheme::Implicit => {
            let p = ImplicitProblem::new(
                cfg.velocity.as_ref(),
                &cfg.domain,
                cfg.h,
                cfg.implicit_tau(),
                cfg.t_final,
                cfg.quadrature_order,
                cfg.implicit_config(),
            )?;
            Ok(
                json!({ "scheme": "implicit", "h": cfg.h, "tau": p.time().tau(), "steps": p.time().steps(), "window": p.mask().grid().dims() }),
            )
        }
    }
}

fn tag_scaling(section: &str, e: Error) -> Error {
    match e {
        Error::Scaling(v) => Error::Config(format!("{section}: scaling condition violated: {v}")),
        other => other,
    }
}

fn solve_explicit(cfg: &Resolved, artifacts: Option<&mut Artifacts>, oracle: bool) -> Result<RunOutcome> {
    let params = cfg.scheme_params();
    let prob = ExplicitProblem::new(
        cfg.velocity.as_ref(),
        &cfg.domain,
        params,
        cfg.t_final,
        cfg.margin,
        cfg.quadrature_order,
        cfg.explicit.norms.clone(),
    )
    .map_err(|e| tag_scaling("explicit", e))?;
    let steps = prob.time().steps();
    info!("explicit: h = {}, tau = {}, {steps} steps, window {:?}", cfg.h, params.tau, prob.grid().dims());
    let mut sink = LevelSink::new(cfg, prob.mask(), params.tau, steps, artifacts, oracle)?;
    let run = prob.run(cfg.initial.as_ref(), &mut [&mut ExplicitAdapter(&mut sink)])?;
    let mut diag = String::from("n,t,sup,min,max");
    for p in &run.exponents {
        diag += &format!(",lp_pow_{p},divergence_term_{p}");
    }
    diag += ",truncated\n";
    for (k, l) in run.levels.iter().enumerate() {
        diag += &format!("{},{},{},{},{}", l.n, fmt_f64(l.t), fmt_f64(l.sup), fmt_f64(l.min), fmt_f64(l.max));
        let step = run.steps.get(k);
        for (j, v) in l.lp_pow.iter().enumerate() {
            diag += &format!(",{},{}", fmt_f64(*v), opt(step.map(|s| s.divergence_terms[j])));
        }
        diag += &format!(",{}\n", step.map(|s| s.truncated.to_string()).unwrap_or_default());
    }
    let branch = match params.branch {
        TauBranch::Power => "power",
        TauBranch::Hyperbolic => "hyperbolic",
    };
    let summary = json!({
        "name": cfg.name,
        "scheme": "explicit",
        "h": cfg.h,
        "tau": params.tau,
        "tau_branch": branch,
        "alpha": params.alpha,
        "beta": if params.truncate { Some(params.beta) } else { None },
        "truncate": params.truncate,
        "steps": steps,
        "t_last": prob.time().time(steps),
        "window": prob.grid().dims(),
        "window_reached": run.window_reached,
        "truncated_components": run.truncation.counts,
        "final_sup": run.levels.last().map(|l| l.sup),
        "interface_points": sink.interface_points,
    });
    Ok(RunOutcome { summary, diagnostics: diag, errors: sink.errors, tau: params.tau })
}

fn solve_implicit(cfg: &Resolved, artifacts: Option<&mut Artifacts>, oracle: bool) -> Result<RunOutcome> {
    let tau = cfg.implicit_tau();
    let prob = ImplicitProblem::new(
        cfg.velocity.as_ref(),
        &cfg.domain,
        cfg.h,
        tau,
        cfg.t_final,
        cfg.quadrature_order,
        cfg.implicit_config(),
    )?;
    let steps = prob.time().steps();
    info!("implicit: h = {}, tau = {tau}, {steps} steps, window {:?}", cfg.h, prob.mask().grid().dims());
    let mut sink = LevelSink::new(cfg, prob.mask(), tau, steps, artifacts, oracle)?;
    let mut adapter = ImplicitAdapter { sink: &mut sink, error: None };
    let state = prob.run(cfg.initial.as_ref(), &mut [&mut adapter])?;
    if let Some(e) = adapter.error {
        return Err(e);
    }
    let mut diag =
        String::from("n,t,l2,cross,gmres_iterations,gmres_residual,projection_iterations,divergence_residual\n");
    diag += &format!("0,{},{},,,,,\n", fmt_f64(0.0), fmt_f64(state.l2_history[0]));
    for s in &state.steps {
        diag += &format!(
            "{},{},{},{},{},{},{},{}\n",
            s.n + 1,
            fmt_f64(prob.time().time(s.n + 1)),
            fmt_f64(s.l2),
            fmt_f64(s.cross),
            s.solve.iterations,
            fmt_f64(s.solve.residual),
            s.projection_iterations,
            fmt_f64(s.divergence_residual)
        );
    }
    let summary = json!({
        "name": cfg.name,
        "scheme": "implicit",
        "h": cfg.h,
        "tau": tau,
        "steps": steps,
        "t_last": prob.time().time(steps),
        "window": prob.mask().grid().dims(),
        "step_tolerance": cfg.implicit.step_tolerance,
        "projection_tolerance": cfg.implicit.projection_tolerance,
        "max_gmres_iterations": state.steps.iter().map(|s| s.solve.iterations).max(),
        "max_divergence_residual": state.steps.iter().map(|s| s.divergence_residual).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        "l2_initial": state.l2_history.first(),
        "l2_final": state.l2_history.last(),
        "interface_points": sink.interface_points,
    });
    Ok(RunOutcome { summary, diagnostics: diag, errors: sink.errors, tau })
}

/// `run` verb: one solve with every artifact.
pub fn run(cfg: &Resolved, dir: &Path) -> Result<PathBuf> {
    check(cfg)?;
    let mut art = Artifacts::create(dir)?;
    let oracle = cfg.oracle.enabled;
    let outcome = solve(cfg, Some(&mut art), oracle)?;
    art.write("diagnostics.csv", |w| Ok(w.write_all(outcome.diagnostics.as_bytes())?))?;
    if oracle {
        art.write("errors.csv", |w| {
            writeln!(w, "n,t,{}", ERROR_COLUMNS.join(","))?;
            for e in &outcome.errors {
                let vals: Vec<String> = e.values().iter().map(|v| opt(*v)).collect();
                writeln!(w, "{},{},{}", e.n, fmt_f64(e.t), vals.join(","))?;
            }
            Ok(())
        })?;
    }
    art.write_json("summary.json", &outcome.summary)?;
    art.finish()
}
