//! Velocity fields and initial data.
//!
//! Every analytic preset is compactly supported and written generically
//! over [`Real`], so the same code produces samples and exact jets.
//! Velocity presets are divergence-free by construction: swirl fields
//! `ψ(ρ², x₃)·(−x₂, x₁, 0)` and planar stream-function fields
//! `(∂₂Ψ, −∂₁Ψ, 0)`.

use std::fmt::Debug;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{smooth_step, Jet, Real};

/// A velocity field `v(t, x)`.
pub trait Velocity: Send + Sync + Debug {
    fn name(&self) -> String;
    fn eval(&self, t: f64, x: [f64; 3]) -> [f64; 3];
    /// Spatial jets of the three components, when available in closed form.
    fn eval_jet(&self, _t: f64, _x: [Jet; 3]) -> Option<[Jet; 3]> {
        None
    }
    /// Closed box containing the spatial support.
    fn support(&self) -> ([f64; 3], [f64; 3]);
    /// Upper bound on `max_j sup |v_j|`.
    fn sup_bound(&self) -> f64;
    /// Bounded with bounded derivatives up to fourth order.
    fn is_smooth(&self) -> bool {
        true
    }
    fn is_time_dependent(&self) -> bool {
        false
    }
    /// For swirl fields `v = m(t)·Ω(x)·(−(x₂−c₂), x₁−c₁, 0)` with `Ω`
    /// constant along the orbits: the axis point `c` and the rate `Ω(x)`.
    fn swirl(&self, _x: [f64; 3]) -> Option<([f64; 2], f64)> {
        None
    }
    /// The rate `Ω` as a jet, for swirl fields.
    fn swirl_jet(&self, _x: [Jet; 3]) -> Option<Jet> {
        None
    }
    /// `∫_{t0}^{t1} m(s) ds` for the time modulation `m`.
    fn modulation_integral(&self, t0: f64, t1: f64) -> f64 {
        t1 - t0
    }
}

/// Initial data `f⁰(x)`.
pub trait Initial: Send + Sync + Debug {
    fn name(&self) -> String;
    fn eval(&self, x: [f64; 3]) -> f64;
    /// `f⁰` composed with coordinate jets, when smooth.
    fn eval_jet(&self, _x: [Jet; 3]) -> Option<Jet> {
        None
    }
    fn support(&self) -> ([f64; 3], [f64; 3]);
    /// Upper bound on `sup |f⁰|`.
    fn sup_abs(&self) -> f64;
    fn is_smooth(&self) -> bool {
        self.eval_jet(Jet::point([0.0; 3])).is_some()
    }
}

/// `1 − smooth_step((s − a)/(b − a))`: 1 for `s ≤ a`, 0 for `s ≥ b`.
pub fn cutoff<R: Real>(s: R, a: f64, b: f64) -> R {
    R::constant(1.0) - smooth_step((s - a) * (1.0 / (b - a)))
}

fn ball_box(c: [f64; 3], r: f64) -> ([f64; 3], [f64; 3]) {
    ([c[0] - r, c[1] - r, c[2] - r], [c[0] + r, c[1] + r, c[2] + r])
}

fn check_radii(r_core: f64, r_cut: f64) -> Result<()> {
    if !(r_core >= 0.0 && r_cut > r_core && r_cut.is_finite()) {
        return Err(Error::Config(format!("cutoff radii must satisfy 0 <= core < cut, got {r_core}, {r_cut}")));
    }
    Ok(())
}

/// Solid-body rotation about the vertical axis through `center`, cut off
/// smoothly between `r_core` and `r_cut` (distance to `center`):
/// `v = ω·χ(|x − c|²)·(−(x₂−c₂), x₁−c₁, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    pub omega: f64,
    pub center: [f64; 3],
    pub r_core: f64,
    pub r_cut: f64,
}

impl Rotation {
    pub fn new(omega: f64, center: [f64; 3], r_core: f64, r_cut: f64) -> Result<Self> {
        check_radii(r_core, r_cut)?;
        Ok(Rotation { omega, center, r_core, r_cut })
    }

    fn rate<R: Real>(&self, x: [R; 3]) -> R {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        cutoff(s, self.r_core * self.r_core, self.r_cut * self.r_cut) * self.omega
    }

    fn field<R: Real>(&self, x: [R; 3]) -> [R; 3] {
        let w = self.rate(x);
        [-(w * (x[1] - self.center[1])), w * (x[0] - self.center[0]), R::constant(0.0)]
    }
}

impl Velocity for Rotation {
    fn name(&self) -> String {
        "rotation".into()
    }
    fn eval(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        self.field(x)
    }
    fn eval_jet(&self, _t: f64, x: [Jet; 3]) -> Option<[Jet; 3]> {
        Some(self.field(x))
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box(self.center, self.r_cut)
    }
    fn sup_bound(&self) -> f64 {
        self.omega.abs() * self.r_cut
    }
    fn swirl(&self, x: [f64; 3]) -> Option<([f64; 2], f64)> {
        Some(([self.center[0], self.center[1]], self.rate(x)))
    }
    fn swirl_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        Some(self.rate(x))
    }
}

/// Swirl with a nearly singular core:
/// `v = A·(|x|² + ε²)^{−(1+δ)/2}·χ(|x|²)·(−x₂, x₁, 0)`.
///
/// `|v| ~ A·r^{−δ}` down to the scale `ε`, so for `δ < 1/2` the gradient
/// stays square integrable while the peak speed grows like `ε^{−δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Steep {
    pub amplitude: f64,
    pub delta: f64,
    pub eps: f64,
    pub r_core: f64,
    pub r_cut: f64,
}

impl Steep {
    pub fn new(amplitude: f64, delta: f64, eps: f64, r_core: f64, r_cut: f64) -> Result<Self> {
        check_radii(r_core, r_cut)?;
        if !(delta > 0.0 && delta < 0.5 && eps > 0.0) {
            return Err(Error::Config(format!("steep preset needs 0 < delta < 1/2 and eps > 0, got {delta}, {eps}")));
        }
        Ok(Steep { amplitude, delta, eps, r_core, r_cut })
    }

    fn rate<R: Real>(&self, x: [R; 3]) -> R {
        let s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let core = (s + self.eps * self.eps).powf(-(1.0 + self.delta) / 2.0);
        core * cutoff(s, self.r_core * self.r_core, self.r_cut * self.r_cut) * self.amplitude
    }

    fn field<R: Real>(&self, x: [R; 3]) -> [R; 3] {
        let w = self.rate(x);
        [-(w * x[1]), w * x[0], R::constant(0.0)]
    }
}

impl Velocity for Steep {
    fn name(&self) -> String {
        "steep".into()
    }
    fn eval(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        self.field(x)
    }
    fn eval_jet(&self, _t: f64, x: [Jet; 3]) -> Option<[Jet; 3]> {
        Some(self.field(x))
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box([0.0; 3], self.r_cut)
    }
    fn sup_bound(&self) -> f64 {
        // r·(r² + ε²)^{−(1+δ)/2} peaks at r² = ε²/δ.
        let r2 = self.eps * self.eps / self.delta;
        let r = r2.sqrt().min(self.r_cut);
        self.amplitude.abs() * r * (r * r + self.eps * self.eps).powf(-(1.0 + self.delta) / 2.0)
    }
    fn is_smooth(&self) -> bool {
        false
    }
    fn swirl(&self, x: [f64; 3]) -> Option<([f64; 2], f64)> {
        Some(([0.0, 0.0], self.rate(x)))
    }
    fn swirl_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        Some(self.rate(x))
    }
}

/// Cellular flow `(∂₂Ψ, −∂₁Ψ, 0)` with stream function
/// `Ψ = (A/kπ)·χ(|x|²)·sin(kπx₁)·sin(kπx₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cellular {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub r_core: f64,
    pub r_cut: f64,
}

impl Cellular {
    pub fn new(amplitude: f64, wavenumber: f64, r_core: f64, r_cut: f64) -> Result<Self> {
        check_radii(r_core, r_cut)?;
        if !(wavenumber > 0.0) {
            return Err(Error::Config(format!("cellular wavenumber must be positive, got {wavenumber}")));
        }
        Ok(Cellular { amplitude, wavenumber, r_core, r_cut })
    }

    fn stream(&self, x: [Jet; 3]) -> Jet {
        let k = self.wavenumber * std::f64::consts::PI;
        let s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let chi = cutoff(s, self.r_core * self.r_core, self.r_cut * self.r_cut);
        chi * (x[0] * k).sin() * (x[1] * k).sin() * (self.amplitude / k)
    }
}

impl Velocity for Cellular {
    fn name(&self) -> String {
        "cellular".into()
    }
    fn eval(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        let p = self.stream(Jet::point(x));
        [p.d[1], -p.d[0], 0.0]
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box([0.0; 3], self.r_cut)
    }
    fn sup_bound(&self) -> f64 {
        // |∂Ψ| ≤ (A/kπ)(|χ'|·2r·1 + χ·kπ) with |χ'| ≤ max|smooth_step'|/(b − a).
        let k = self.wavenumber * std::f64::consts::PI;
        let span = self.r_cut * self.r_cut - self.r_core * self.r_core;
        let slope = smooth_step_max_slope() / span;
        self.amplitude.abs() / k * (slope * 2.0 * self.r_cut + k)
    }
}

/// Maximum of the derivative of [`smooth_step`], evaluated on a fine grid
/// and padded slightly.
pub fn smooth_step_max_slope() -> f64 {
    let mut m = 0.0f64;
    for i in 1..2000 {
        let s = i as f64 / 2000.0;
        m = m.max(smooth_step(Jet::variable(0, s)).d[0].abs());
    }
    m * 1.01
}

/// `v ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Zero;

impl Velocity for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _t: f64, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
    fn eval_jet(&self, _t: f64, _x: [Jet; 3]) -> Option<[Jet; 3]> {
        Some([Jet::constant(0.0); 3])
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ([0.0; 3], [0.0; 3])
    }
    fn sup_bound(&self) -> f64 {
        0.0
    }
    fn swirl(&self, _x: [f64; 3]) -> Option<([f64; 2], f64)> {
        Some(([0.0, 0.0], 0.0))
    }
    fn swirl_jet(&self, _x: [Jet; 3]) -> Option<Jet> {
        Some(Jet::constant(0.0))
    }
}

/// `m(t)·v(x)` with `m(t) = 1 + a·sin(2πt/P)`.
#[derive(Debug, Clone)]
pub struct Modulated {
    pub inner: Arc<dyn Velocity>,
    pub amplitude: f64,
    pub period: f64,
}

impl Modulated {
    pub fn new(inner: Arc<dyn Velocity>, amplitude: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Config(format!("modulation period must be positive, got {period}")));
        }
        Ok(Modulated { inner, amplitude, period })
    }

    pub fn factor(&self, t: f64) -> f64 {
        1.0 + self.amplitude * (2.0 * std::f64::consts::PI * t / self.period).sin()
    }
}

impl Velocity for Modulated {
    fn name(&self) -> String {
        format!("modulated({})", self.inner.name())
    }
    fn eval(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let m = self.factor(t);
        let v = self.inner.eval(t, x);
        [m * v[0], m * v[1], m * v[2]]
    }
    fn eval_jet(&self, t: f64, x: [Jet; 3]) -> Option<[Jet; 3]> {
        let m = self.factor(t);
        self.inner.eval_jet(t, x).map(|v| [v[0] * m, v[1] * m, v[2] * m])
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        self.inner.support()
    }
    fn sup_bound(&self) -> f64 {
        (1.0 + self.amplitude.abs()) * self.inner.sup_bound()
    }
    fn is_smooth(&self) -> bool {
        self.inner.is_smooth()
    }
    fn is_time_dependent(&self) -> bool {
        self.amplitude != 0.0
    }
    fn swirl(&self, x: [f64; 3]) -> Option<([f64; 2], f64)> {
        self.inner.swirl(x)
    }
    fn swirl_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        self.inner.swirl_jet(x)
    }
    fn modulation_integral(&self, t0: f64, t1: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI / self.period;
        let base = self.inner.modulation_integral(t0, t1);
        base + self.amplitude * ((w * t0).cos() - (w * t1).cos()) / w
    }
}

/// Velocity samples on a lattice at a list of times, interpolated
/// trilinearly in space (zero outside the table box) and linearly in
/// time (held constant beyond the first and last time).
#[derive(Debug, Clone)]
pub struct Tabulated {
    h: f64,
    origin: [f64; 3],
    dims: [usize; 3],
    times: Vec<f64>,
    /// `values[n][node]`.
    values: Vec<Vec<[f64; 3]>>,
}

impl Tabulated {
    pub fn new(
        h: f64,
        origin: [f64; 3],
        dims: [usize; 3],
        times: Vec<f64>,
        values: Vec<Vec<[f64; 3]>>,
    ) -> Result<Self> {
        let n = dims[0] * dims[1] * dims[2];
        if !(h > 0.0) || dims.iter().any(|&d| d < 2) {
            return Err(Error::Data("tabulated velocity needs h > 0 and dims >= 2".into()));
        }
        if times.is_empty() || times.len() != values.len() || values.iter().any(|v| v.len() != n) {
            return Err(Error::Data("tabulated velocity is missing samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("tabulated times must be strictly increasing".into()));
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("tabulated velocity contains non-finite values".into()));
        }
        Ok(Tabulated { h, origin, dims, times, values })
    }

    /// Reads the CSV format
    ///
    /// ```text
    /// # grid h=<h> origin=<x>,<y>,<z> dims=<n1>,<n2>,<n3>
    /// t,i,j,k,v1,v2,v3
    /// 0.0,0,0,0,0.1,0.0,0.0
    /// ...
    /// ```
    ///
    /// Every `(t, i, j, k)` combination must appear exactly once.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let meta = lines.next().ok_or_else(|| Error::Parse("empty velocity table".into()))?;
        let meta = meta
            .strip_prefix('#')
            .map(str::trim)
            .and_then(|m| m.strip_prefix("grid"))
            .ok_or_else(|| Error::Parse("first line must be '# grid h=... origin=... dims=...'".into()))?;
        let (mut h, mut origin, mut dims) = (None, None, None);
        for tok in meta.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("bad metadata token '{tok}'")))?;
            match k {
                "h" => h = Some(parse_f64(v)?),
                "origin" => origin = Some(parse_triple(v, parse_f64)?),
                "dims" => {
                    dims = Some(parse_triple(v, |s| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}"))))?)
                }
                _ => return Err(Error::Parse(format!("unknown metadata key '{k}'"))),
            }
        }
        let (h, origin, dims) = match (h, origin, dims) {
            (Some(h), Some(o), Some(d)) => (h, o, d),
            _ => return Err(Error::Parse("metadata needs h, origin and dims".into())),
        };
        let header = lines.next().ok_or_else(|| Error::Parse("missing column header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "i", "j", "k", "v1", "v2", "v3"] {
            return Err(Error::Parse(format!("expected header t,i,j,k,v1,v2,v3, got '{header}'")));
        }
        let n = dims[0] * dims[1] * dims[2];
        let mut rows: Vec<(f64, usize, [f64; 3])> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("row {}: expected 7 columns", lineno + 3)));
            }
            let t = parse_f64(f[0])?;
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                ijk[a] = f[1 + a].parse().map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 3)))?;
                if ijk[a] >= dims[a] {
                    return Err(Error::Parse(format!("row {}: index out of range", lineno + 3)));
                }
            }
            let v = [parse_f64(f[4])?, parse_f64(f[5])?, parse_f64(f[6])?];
            rows.push((t, ijk[0] + dims[0] * (ijk[1] + dims[1] * ijk[2]), v));
        }
        let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut values = vec![vec![[f64::NAN; 3]; n]; times.len()];
        let mut seen = vec![vec![false; n]; times.len()];
        for (t, l, v) in rows {
            let ti = times.partition_point(|&s| s < t);
            if seen[ti][l] {
                return Err(Error::Parse(format!("duplicate sample at t={t}, node {l}")));
            }
            seen[ti][l] = true;
            values[ti][l] = v;
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(Error::Parse("velocity table is incomplete".into()));
        }
        Tabulated::new(h, origin, dims, times, values)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        Tabulated::from_csv_str(&std::fs::read_to_string(path)?)
    }

    fn spatial(&self, n: usize, x: [f64; 3]) -> [f64; 3] {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (x[a] - self.origin[a]) / self.h;
            if !(s >= 0.0 && s <= (self.dims[a] - 1) as f64) {
                return [0.0; 3];
            }
            let i = (s.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut out = [0.0; 3];
        for c in 0..8 {
            let off = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if off[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let l = (base[0] + off[0]) + self.dims[0] * ((base[1] + off[1]) + self.dims[1] * (base[2] + off[2]));
            let v = self.values[n][l];
            for a in 0..3 {
                out[a] += w * v[a];
            }
        }
        out
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")))
}

fn parse_triple<T: Copy + Default>(s: &str, p: impl Fn(&str) -> Result<T>) -> Result<[T; 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("expected three comma-separated values, got '{s}'")));
    }
    Ok([p(parts[0])?, p(parts[1])?, p(parts[2])?])
}

impl Velocity for Tabulated {
    fn name(&self) -> String {
        "tabulated".into()
    }
    fn eval(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let nt = self.times.len();
        if nt == 1 || t <= self.times[0] {
            return self.spatial(0, x);
        }
        if t >= self.times[nt - 1] {
            return self.spatial(nt - 1, x);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let a = self.spatial(k, x);
        let b = self.spatial(k + 1, x);
        [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1], (1.0 - w) * a[2] + w * b[2]]
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        let hi = [
            self.origin[0] + self.h * (self.dims[0] - 1) as f64,
            self.origin[1] + self.h * (self.dims[1] - 1) as f64,
            self.origin[2] + self.h * (self.dims[2] - 1) as f64,
        ];
        (self.origin, hi)
    }
    fn sup_bound(&self) -> f64 {
        self.values.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
    fn is_smooth(&self) -> bool {
        false
    }
    fn is_time_dependent(&self) -> bool {
        self.times.len() > 1
    }
}

// ---------------------------------------------------------------------------
// Initial data

/// `A·exp(1 − 1/(1 − q))` for `q = |x − c|²/R² < 1`, zero otherwise.
/// Peak value `A` at the centre; C^∞.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: [f64; 3], radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("bump radius must be positive, got {radius}")));
        }
        Ok(Bump { center, radius, amplitude })
    }

    /// Bump of peak `amplitude` whose `level` set is the sphere of radius
    /// `level_radius` about `center`.
    pub fn with_level_sphere(center: [f64; 3], level_radius: f64, amplitude: f64, level: f64) -> Result<Self> {
        if !(amplitude > level && level > 0.0) {
            return Err(Error::Config("level must lie strictly between 0 and the amplitude".into()));
        }
        // A·exp(1 − 1/(1 − q)) = c  ⇔  1/(1 − q) = 1 − ln(c/A).
        let q = 1.0 - 1.0 / (1.0 - (level / amplitude).ln());
        Bump::new(center, level_radius / q.sqrt(), amplitude)
    }

    fn value<R: Real>(&self, x: [R; 3]) -> R {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let q = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * (1.0 / (self.radius * self.radius));
        if q.value() >= 1.0 {
            return R::constant(0.0);
        }
        let e = -(R::constant(1.0) - q).recip() + 1.0;
        e.exp() * self.amplitude
    }
}

impl Initial for Bump {
    fn name(&self) -> String {
        "bump".into()
    }
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.value(x)
    }
    fn eval_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        Some(self.value(x))
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box(self.center, self.radius)
    }
    fn sup_abs(&self) -> f64 {
        self.amplitude.abs()
    }
}

/// Gaussian `A·exp(−|x − c|²/2σ²)` cut off smoothly between `r_core` and
/// `r_cut`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub center: [f64; 3],
    pub sigma: f64,
    pub amplitude: f64,
    pub r_core: f64,
    pub r_cut: f64,
}

impl Gaussian {
    pub fn new(center: [f64; 3], sigma: f64, amplitude: f64, r_core: f64, r_cut: f64) -> Result<Self> {
        check_radii(r_core, r_cut)?;
        if !(sigma > 0.0) {
            return Err(Error::Config(format!("gaussian width must be positive, got {sigma}")));
        }
        Ok(Gaussian { center, sigma, amplitude, r_core, r_cut })
    }

    fn value<R: Real>(&self, x: [R; 3]) -> R {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let s = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if s.value() >= self.r_cut * self.r_cut {
            return R::constant(0.0);
        }
        let g = (s * (-0.5 / (self.sigma * self.sigma))).exp();
        g * cutoff(s, self.r_core * self.r_core, self.r_cut * self.r_cut) * self.amplitude
    }
}

impl Initial for Gaussian {
    fn name(&self) -> String {
        "gaussian".into()
    }
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.value(x)
    }
    fn eval_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        Some(self.value(x))
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box(self.center, self.r_cut)
    }
    fn sup_abs(&self) -> f64 {
        self.amplitude.abs()
    }
}

/// `value` inside the open ball, 0 outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BallIndicator {
    pub center: [f64; 3],
    pub radius: f64,
    pub value: f64,
}

impl Initial for BallIndicator {
    fn name(&self) -> String {
        "indicator".into()
    }
    fn eval(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < self.radius * self.radius {
            self.value
        } else {
            0.0
        }
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        ball_box(self.center, self.radius)
    }
    fn sup_abs(&self) -> f64 {
        self.value.abs()
    }
    fn is_smooth(&self) -> bool {
        false
    }
}

type JetFn = Arc<dyn Fn([Jet; 3]) -> Jet + Send + Sync>;

/// Initial data from closures; the optional jet closure enables oracles.
#[derive(Clone)]
pub struct FnInitial {
    pub label: String,
    pub f: Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>,
    pub jet: Option<JetFn>,
    pub support: ([f64; 3], [f64; 3]),
    pub sup_abs: f64,
}

impl Debug for FnInitial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnInitial").field("label", &self.label).field("support", &self.support).finish_non_exhaustive()
    }
}

impl Initial for FnInitial {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, x: [f64; 3]) -> f64 {
        (self.f)(x)
    }
    fn eval_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        self.jet.as_ref().map(|j| j(x))
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        self.support
    }
    fn sup_abs(&self) -> f64 {
        self.sup_abs
    }
}

/// `a·f + b` for initial data `f`; order-preserving for `a ≥ 0`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub inner: Arc<dyn Initial>,
    pub scale: f64,
    pub shift: f64,
}

impl Initial for Affine {
    fn name(&self) -> String {
        format!("{}*{}+{}", self.scale, self.inner.name(), self.shift)
    }
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.scale * self.inner.eval(x) + self.shift
    }
    fn eval_jet(&self, x: [Jet; 3]) -> Option<Jet> {
        self.inner.eval_jet(x).map(|j| j * self.scale + self.shift)
    }
    fn support(&self) -> ([f64; 3], [f64; 3]) {
        self.inner.support()
    }
    fn sup_abs(&self) -> f64 {
        self.scale.abs() * self.inner.sup_abs() + self.shift.abs()
    }
    fn is_smooth(&self) -> bool {
        self.inner.is_smooth()
    }
}

/// A ready-made transport problem: velocity, data, domain and horizon,
/// plus the level sphere when the data has one.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub velocity: Arc<dyn Velocity>,
    pub initial: Arc<dyn Initial>,
    /// Half-width of the cubic domain centred at the origin.
    pub half_width: f64,
    pub t_final: f64,
    /// `(level, centre at t = 0, radius)` of a level sphere.
    pub sphere: Option<(f64, [f64; 3], f64)>,
}

impl Scenario {
    pub fn domain(&self) -> crate::grid::Domain {
        crate::grid::Domain::cube(self.half_width)
    }
}

/// Built-in scenarios by name; see [`scenario_names`].
pub fn scenario(name: &str) -> Result<Scenario> {
    match name {
        // Slow enough that τ = h is admissible; wide enough that h ≤ 1/16
        // already resolves the numerical diffusion.
        "rotating-bump" => Ok(Scenario {
            name: "rotating-bump",
            velocity: Arc::new(Rotation::new(0.2, [0.0; 3], 0.5, 1.2)?),
            initial: Arc::new(Gaussian::new([0.15, 0.0, 0.0], 0.3, 1.0, 0.9, 1.35)?),
            half_width: 1.6,
            t_final: 1.0,
            sphere: None,
        }),
        // The level-1 sphere sits inside the solid-body core and moves rigidly.
        "rotating-sphere" => {
            let c = [0.2, 0.0, 0.0];
            Ok(Scenario {
                name: "rotating-sphere",
                velocity: Arc::new(Rotation::new(1.0, [0.0; 3], 0.75, 1.0)?),
                initial: Arc::new(Bump::with_level_sphere(c, 0.5, 4.0, 1.0)?),
                half_width: 0.95,
                t_final: 0.5,
                sphere: Some((1.0, c, 0.5)),
            })
        }
        "steep-swirl" => Ok(Scenario {
            name: "steep-swirl",
            velocity: Arc::new(Steep::new(3.0, 0.4, 0.05, 0.3, 0.5)?),
            initial: Arc::new(Bump::new([0.1, 0.0, 0.0], 0.3, 1.0)?),
            half_width: 0.6,
            t_final: 0.1,
            sphere: None,
        }),
        other => {
            Err(Error::Config(format!("unknown scenario '{other}', expected one of {}", scenario_names().join(", "))))
        }
    }
}

pub fn scenario_names() -> &'static [&'static str] {
    &["rotating-bump", "rotating-sphere", "steep-swirl"]
}

/// Names and one-line descriptions of the built-in presets.
pub fn catalog() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("velocity", "zero", "v = 0"),
        ("velocity", "rotation", "solid-body rotation about a vertical axis, smooth radial cutoff"),
        ("velocity", "steep", "swirl with speed ~ r^-delta down to scale eps (truncation test)"),
        ("velocity", "cellular", "planar cellular flow from a cut-off sin*sin stream function"),
        ("velocity", "tabulated", "CSV samples, trilinear in space and linear in time"),
        ("velocity", "modulation", "any velocity times 1 + a*sin(2*pi*t/P)"),
        ("initial", "bump", "A*exp(1 - 1/(1 - |x-c|^2/R^2)), C-infinity, compact"),
        ("initial", "bump-sphere", "bump whose chosen level set is a given sphere"),
        ("initial", "gaussian", "Gaussian with a smooth radial cutoff"),
        ("initial", "indicator", "characteristic function of a ball"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn divergence(v: &dyn Velocity, x: [f64; 3]) -> f64 {
        let j = v.eval_jet(0.0, Jet::point(x)).unwrap();
        j[0].d[0] + j[1].d[1] + j[2].d[2]
    }

    fn fd_divergence(v: &dyn Velocity, x: [f64; 3]) -> f64 {
        let e = 1e-6;
        let mut s = 0.0;
        for a in 0..3 {
            let mut p = x;
            let mut m = x;
            p[a] += e;
            m[a] -= e;
            s += (v.eval(0.0, p)[a] - v.eval(0.0, m)[a]) / (2.0 * e);
        }
        s
    }

    #[test]
    fn presets_are_divergence_free() {
        let rot = Rotation::new(1.3, [0.1, -0.2, 0.0], 0.3, 0.8).unwrap();
        let steep = Steep::new(3.0, 0.4, 0.05, 0.3, 0.8).unwrap();
        let cell = Cellular::new(0.7, 2.0, 0.3, 0.8).unwrap();
        for x in [[0.2, 0.1, -0.3], [0.5, -0.4, 0.2], [0.05, 0.02, 0.01], [-0.3, 0.35, 0.4]] {
            assert!(divergence(&rot, x).abs() < 1e-12);
            assert!(divergence(&steep, x).abs() < 1e-9);
            assert!(fd_divergence(&cell, x).abs() < 1e-6);
        }
    }

    #[test]
    fn velocities_vanish_outside_support() {
        let rot = Rotation::new(1.0, [0.0; 3], 0.3, 0.8).unwrap();
        assert_eq!(rot.eval(0.0, [0.6, 0.6, 0.0]), [0.0, 0.0, 0.0]);
        let cell = Cellular::new(1.0, 1.0, 0.3, 0.8).unwrap();
        assert_eq!(cell.eval(0.0, [0.9, 0.0, 0.0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sup_bounds_dominate_samples() {
        let fields: Vec<Box<dyn Velocity>> = vec![
            Box::new(Rotation::new(1.3, [0.0; 3], 0.3, 0.8).unwrap()),
            Box::new(Steep::new(3.0, 0.4, 0.05, 0.3, 0.8).unwrap()),
            Box::new(Cellular::new(0.7, 2.0, 0.3, 0.8).unwrap()),
        ];
        for v in &fields {
            let b = v.sup_bound();
            let n = 41;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..5 {
                        let x = [
                            -0.9 + 1.8 * i as f64 / (n - 1) as f64,
                            -0.9 + 1.8 * j as f64 / (n - 1) as f64,
                            -0.2 + 0.1 * k as f64,
                        ];
                        let u = v.eval(0.0, x);
                        assert!(u.iter().all(|c| c.abs() <= b), "{} at {x:?}", v.name());
                    }
                }
            }
        }
    }

    #[test]
    fn level_sphere_bump() {
        let b = Bump::with_level_sphere([0.0; 3], 0.5, 2.0, 1.0).unwrap();
        assert!((b.eval([0.5, 0.0, 0.0]) - 1.0).abs() < 1e-14);
        assert!((b.radius - 0.78147).abs() < 1e-4);
        assert_eq!(b.eval([0.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn modulation_integral_matches_quadrature() {
        let m = Modulated::new(Arc::new(Zero), 0.3, 0.7).unwrap();
        let (t0, t1) = (0.1, 1.3);
        let n = 10000;
        let dt = (t1 - t0) / n as f64;
        let q: f64 = (0..n).map(|i| m.factor(t0 + (i as f64 + 0.5) * dt) * dt).sum();
        assert!((q - m.modulation_integral(t0, t1)).abs() < 1e-8);
    }

    #[test]
    fn tabulated_round_trip_is_trilinear() {
        let mut text = String::from("# grid h=0.5 origin=-1,-1,-1 dims=5,5,5\nt,i,j,k,v1,v2,v3\n");
        for (t, s) in [(0.0, 1.0), (1.0, 3.0)] {
            for k in 0..5 {
                for j in 0..5 {
                    for i in 0..5 {
                        let x = -1.0 + 0.5 * i as f64;
                        let y = -1.0 + 0.5 * j as f64;
                        text.push_str(&format!("{t},{i},{j},{k},{},{},0\n", s * x, s * (x + 2.0 * y)));
                    }
                }
            }
        }
        let tab = Tabulated::from_csv_str(&text).unwrap();
        let v = tab.eval(0.25, [0.3, -0.1, 0.2]);
        // Linear in x and t, so interpolation is exact: scale 1.5 at t = 0.25.
        assert!((v[0] - 1.5 * 0.3).abs() < 1e-14);
        assert!((v[1] - 1.5 * (0.3 - 0.2)).abs() < 1e-14);
        assert_eq!(tab.eval(0.0, [2.0, 0.0, 0.0]), [0.0; 3]);
        assert!(Tabulated::from_csv_str("t,i,j,k,v1,v2,v3\n").is_err());
    }
}
