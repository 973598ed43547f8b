//! Run configuration: the TOML schema and its resolution into core
//! objects. See `docs/config.md` for the grammar.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use transport_core::fields::SchemeParams;
use transport_core::implicit::ImplicitConfig;
use transport_core::presets::{
    scenario, BallIndicator, Bump, Cellular, Gaussian, Initial, Modulated, Rotation, Steep, Tabulated, Velocity, Zero,
};
use transport_core::solvers::SolverConfig;
use transport_core::{Domain, Error, Result};

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "TRANSPORT_OUTPUT_DIR";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub domain: Option<DomainSection>,
    pub grid: GridSection,
    #[serde(default)]
    pub explicit: ExplicitSection,
    #[serde(default)]
    pub implicit: ImplicitSection,
    pub velocity: Option<VelocitySection>,
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub levelset: LevelsetSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Explicit,
    Implicit,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_name")]
    pub name: String,
    pub scheme: Scheme,
    pub t_final: Option<f64>,
    pub scenario: Option<String>,
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSection {
    Cube { half_width: f64 },
    Box { lo: [f64; 3], hi: [f64; 3] },
    Ball { center: [f64; 3], radius: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h: Option<f64>,
    pub resolution: Option<u32>,
    #[serde(default = "default_margin")]
    pub margin: usize,
}

fn default_margin() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplicitMode {
    #[default]
    Generalized,
    Smooth,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSection {
    #[serde(default)]
    pub mode: ExplicitMode,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Overrides the derived time step; the scaling gate still applies.
    pub tau: Option<f64>,
    #[serde(default = "default_norms")]
    pub norms: Vec<f64>,
}

fn default_norms() -> Vec<f64> {
    vec![1.0, 2.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicitSection {
    pub tau: Option<f64>,
    pub tau_over_h: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub step_tolerance: f64,
    #[serde(default = "default_tolerance")]
    pub projection_tolerance: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
    pub max_iterations: Option<usize>,
}

impl Default for ImplicitSection {
    fn default() -> Self {
        ImplicitSection {
            tau: None,
            tau_over_h: None,
            step_tolerance: default_tolerance(),
            projection_tolerance: default_tolerance(),
            restart: default_restart(),
            max_iterations: None,
        }
    }
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_restart() -> usize {
    50
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub amplitude: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum VelocitySection {
    Zero,
    Rotation {
        omega: f64,
        #[serde(default)]
        center: [f64; 3],
        r_core: f64,
        r_cut: f64,
        modulation: Option<ModulationSection>,
    },
    Steep {
        amplitude: f64,
        delta: f64,
        eps: f64,
        r_core: f64,
        r_cut: f64,
        modulation: Option<ModulationSection>,
    },
    Cellular {
        amplitude: f64,
        wavenumber: f64,
        r_core: f64,
        r_cut: f64,
        modulation: Option<ModulationSection>,
    },
    Tabulated {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Bump {
        center: [f64; 3],
        radius: f64,
        amplitude: f64,
    },
    /// A bump whose `level` set is the sphere of radius `level_radius`.
    BumpSphere {
        center: [f64; 3],
        level_radius: f64,
        amplitude: f64,
        level: f64,
    },
    Gaussian {
        center: [f64; 3],
        sigma: f64,
        amplitude: f64,
        r_core: f64,
        r_cut: f64,
    },
    Indicator {
        center: [f64; 3],
        radius: f64,
        value: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_order")]
    pub order: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection { order: default_order() }
    }
}

fn default_order() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write a snapshot every this many steps; 0 writes the final level only.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "yes")]
    pub sparse_csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), snapshot_every: 0, formats: default_formats(), sparse_csv: true }
    }
}

fn default_dir() -> PathBuf {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetSection {
    #[serde(default)]
    pub enabled: bool,
    pub level: Option<f64>,
    #[serde(default = "yes")]
    pub refine: bool,
    #[serde(default = "yes")]
    pub orient_outward: bool,
    /// Report `+∇·ν` instead of `m = −∇·ν`.
    #[serde(default)]
    pub flip_curvature: bool,
    #[serde(default = "default_patch")]
    pub patch_half_width: f64,
    #[serde(default)]
    pub gradient_floor: f64,
}

impl Default for LevelsetSection {
    fn default() -> Self {
        LevelsetSection {
            enabled: false,
            level: None,
            refine: true,
            orient_outward: true,
            flip_curvature: false,
            patch_half_width: default_patch(),
            gradient_floor: 0.0,
        }
    }
}

fn default_patch() -> f64 {
    8.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub enabled: bool,
    /// Exact level sphere at `t = 0`, carried by the (swirl) velocity.
    pub sphere_center: Option<[f64; 3]>,
    pub sphere_radius: Option<f64>,
    /// RK4 substep; defaults to `min(τ/4, 10⁻³T)`.
    pub substep: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default)]
    pub resolutions: Vec<u32>,
    #[serde(default)]
    pub schemes: Vec<Scheme>,
}

/// A validated configuration with every preset constructed.
#[derive(Clone)]
pub struct Resolved {
    pub name: String,
    pub scheme: Scheme,
    pub t_final: f64,
    pub domain: Domain,
    pub h: f64,
    pub margin: usize,
    pub velocity: Arc<dyn Velocity>,
    pub initial: Arc<dyn Initial>,
    pub explicit: ExplicitSection,
    pub implicit: ImplicitSection,
    pub quadrature_order: usize,
    pub output: OutputSection,
    pub levelset: LevelsetSection,
    pub level: Option<f64>,
    pub oracle: OracleSection,
    pub sphere: Option<([f64; 3], f64)>,
    pub study: StudySection,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

pub fn parse(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
}

pub fn load(path: &Path) -> Result<Resolved> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(parse(&text)?, base)
}

fn modulate(v: Arc<dyn Velocity>, m: &Option<ModulationSection>) -> Result<Arc<dyn Velocity>> {
    match m {
        None => Ok(v),
        Some(m) => Ok(Arc::new(Modulated::new(v, m.amplitude, m.period).map_err(|e| bad("velocity.modulation", e))?)),
    }
}

fn velocity(sec: &VelocitySection, base: &Path) -> Result<Arc<dyn Velocity>> {
    let wrap = |e: Error| bad("velocity", e);
    Ok(match sec {
        VelocitySection::Zero => Arc::new(Zero),
        VelocitySection::Rotation { omega, center, r_core, r_cut, modulation } => {
            modulate(Arc::new(Rotation::new(*omega, *center, *r_core, *r_cut).map_err(wrap)?), modulation)?
        }
        VelocitySection::Steep { amplitude, delta, eps, r_core, r_cut, modulation } => {
            modulate(Arc::new(Steep::new(*amplitude, *delta, *eps, *r_core, *r_cut).map_err(wrap)?), modulation)?
        }
        VelocitySection::Cellular { amplitude, wavenumber, r_core, r_cut, modulation } => {
            modulate(Arc::new(Cellular::new(*amplitude, *wavenumber, *r_core, *r_cut).map_err(wrap)?), modulation)?
        }
        VelocitySection::Tabulated { file } => {
            let path = base.join(file);
            Arc::new(
                Tabulated::from_csv_file(&path)
                    .map_err(|e| bad("velocity.file", format!("{}: {e}", path.display())))?,
            )
        }
    })
}

/// `(level, center, radius)` of a level sphere built into the data.
type LevelSphere = (f64, [f64; 3], f64);

fn initial(sec: &InitialSection) -> Result<(Arc<dyn Initial>, Option<LevelSphere>)> {
    let wrap = |e: Error| bad("initial", e);
    Ok(match sec {
        InitialSection::Bump { center, radius, amplitude } => {
            (Arc::new(Bump::new(*center, *radius, *amplitude).map_err(wrap)?), None)
        }
        InitialSection::BumpSphere { center, level_radius, amplitude, level } => (
            Arc::new(Bump::with_level_sphere(*center, *level_radius, *amplitude, *level).map_err(wrap)?),
            Some((*level, *center, *level_radius)),
        ),
        InitialSection::Gaussian { center, sigma, amplitude, r_core, r_cut } => {
            (Arc::new(Gaussian::new(*center, *sigma, *amplitude, *r_core, *r_cut).map_err(wrap)?), None)
        }
        InitialSection::Indicator { center, radius, value } => {
            positive("initial.radius", *radius)?;
            (Arc::new(BallIndicator { center: *center, radius: *radius, value: *value }), None)
        }
    })
}

fn domain(sec: &DomainSection) -> Result<Domain> {
    Ok(match sec {
        DomainSection::Cube { half_width } => Domain::cube(positive("domain.half_width", *half_width)?),
        DomainSection::Box { lo, hi } => {
            if (0..3).any(|a| !(lo[a] < hi[a])) {
                return Err(bad("domain", "box needs lo < hi in every coordinate"));
            }
            Domain::Box { lo: *lo, hi: *hi }
        }
        DomainSection::Ball { center, radius } => Domain::ball(*center, positive("domain.radius", *radius)?),
    })
}

/// Cross-field validation and preset construction. Relative file paths
/// are taken from `base`.
pub fn resolve(cfg: RunConfig, base: &Path) -> Result<Resolved> {
    let (dom, vel, init, sphere_hint, t_default) = match &cfg.run.scenario {
        Some(name) => {
            if cfg.domain.is_some() || cfg.velocity.is_some() || cfg.initial.is_some() {
                return Err(bad(
                    "run.scenario",
                    "a scenario fixes [domain], [velocity] and [initial]; remove those sections",
                ));
            }
            let sc = scenario(name).map_err(|e| bad("run.scenario", e))?;
            (sc.domain(), sc.velocity.clone(), sc.initial.clone(), sc.sphere, Some(sc.t_final))
        }
        None => {
            let d = cfg.domain.as_ref().ok_or_else(|| bad("domain", "section is required without run.scenario"))?;
            let v = cfg.velocity.as_ref().ok_or_else(|| bad("velocity", "section is required without run.scenario"))?;
            let i = cfg.initial.as_ref().ok_or_else(|| bad("initial", "section is required without run.scenario"))?;
            let (init, hint) = initial(i)?;
            (domain(d)?, velocity(v, base)?, init, hint, None)
        }
    };
    let t_final =
        positive("run.t_final", cfg.run.t_final.or(t_default).ok_or_else(|| bad("run.t_final", "is required"))?)?;
    let h = match (cfg.grid.h, cfg.grid.resolution) {
        (Some(h), None) => positive("grid.h", h)?,
        (None, Some(n)) if n > 0 => 1.0 / n as f64,
        (None, Some(_)) => return Err(bad("grid.resolution", "must be positive")),
        _ => return Err(bad("grid", "set exactly one of h and resolution")),
    };
    if !(1..=8).contains(&cfg.quadrature.order) {
        return Err(bad("quadrature.order", format!("must lie in 1..=8, got {}", cfg.quadrature.order)));
    }
    if cfg.output.snapshot_every > 0 && cfg.output.formats.is_empty() {
        return Err(bad("output.formats", "snapshots requested but no format given"));
    }
    if let Some(n) = cfg.explicit.norms.iter().find(|&&p| !(p >= 1.0 && p.is_finite())) {
        return Err(bad("explicit.norms", format!("exponents must be finite and >= 1, got {n}")));
    }
    let imp = &cfg.implicit;
    if imp.tau.is_some() && imp.tau_over_h.is_some() {
        return Err(bad("implicit", "set at most one of tau and tau_over_h"));
    }
    if let Some(t) = imp.tau {
        positive("implicit.tau", t)?;
    }
    if let Some(r) = imp.tau_over_h {
        positive("implicit.tau_over_h", r)?;
    }
    positive("implicit.step_tolerance", imp.step_tolerance)?;
    positive("implicit.projection_tolerance", imp.projection_tolerance)?;
    if imp.restart == 0 {
        return Err(bad("implicit.restart", "must be positive"));
    }
    let level = cfg.levelset.level.or(sphere_hint.map(|s| s.0));
    if cfg.levelset.enabled && level.is_none() {
        return Err(bad("levelset.level", "is required when the level set is enabled"));
    }
    if cfg.levelset.enabled {
        positive("levelset.patch_half_width", cfg.levelset.patch_half_width)?;
    }
    let sphere = match (cfg.oracle.sphere_center, cfg.oracle.sphere_radius) {
        (Some(c), Some(r)) => Some((c, positive("oracle.sphere_radius", r)?)),
        (None, None) => sphere_hint.map(|s| (s.1, s.2)),
        _ => return Err(bad("oracle", "sphere_center and sphere_radius go together")),
    };
    if let Some(s) = cfg.oracle.substep {
        positive("oracle.substep", s)?;
    }
    if cfg.study.resolutions.contains(&0) {
        return Err(bad("study.resolutions", "must be positive"));
    }
    Ok(Resolved {
        name: cfg.run.name,
        scheme: cfg.run.scheme,
        t_final,
        domain: dom,
        h,
        margin: cfg.grid.margin,
        velocity: vel,
        initial: init,
        explicit: cfg.explicit,
        implicit: cfg.implicit,
        quadrature_order: cfg.quadrature.order,
        output: cfg.output,
        levelset: cfg.levelset,
        level,
        oracle: cfg.oracle,
        sphere,
        study: cfg.study,
    })
}

impl Resolved {
    /// Explicit-scheme parameters at the configured spacing.
    pub fn scheme_params(&self) -> SchemeParams {
        let e = &self.explicit;
        let mut p = match e.mode {
            ExplicitMode::Generalized => SchemeParams::generalized(
                self.h,
                e.alpha.unwrap_or(SchemeParams::DEFAULT_ALPHA),
                e.beta.unwrap_or(SchemeParams::DEFAULT_BETA),
            ),
            ExplicitMode::Smooth => SchemeParams::smooth(self.h, e.alpha.unwrap_or(1.0), self.velocity.sup_bound()),
        };
        if let Some(t) = e.tau {
            p.tau = t;
        }
        p
    }

    pub fn implicit_tau(&self) -> f64 {
        self.implicit.tau.unwrap_or(self.h * self.implicit.tau_over_h.unwrap_or(1.0))
    }

    pub fn implicit_config(&self) -> ImplicitConfig {
        let i = &self.implicit;
        let solver = |tol| SolverConfig { tolerance: tol, max_iterations: i.max_iterations, restart: i.restart };
        ImplicitConfig {
            step: solver(i.step_tolerance),
            projection: solver(i.projection_tolerance),
            divergence_threshold: None,
        }
    }

    pub fn with_spacing(&self, h: f64, scheme: Scheme) -> Resolved {
        let mut r = self.clone();
        r.h = h;
        r.scheme = scheme;
        r
    }

    /// `output.dir`, unless overridden by the environment or the caller.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => self.output.dir.clone(),
        }
    }
}
