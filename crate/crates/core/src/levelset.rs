//! Discrete interfaces of a level set and their geometry.
//!
//! For a level `c`, `Ω₊ = {x : g(x) > c}`, `Ω̄₊` is its dilation by the
//! seven-point star `B`, and the interface `Γ` is the lattice boundary of
//! `Ω̄₊`: the nodes of `Ω̄₊` with at least one face neighbour outside it.
//! Normals, mean curvature and area elements are built from one-sided
//! differences at the interface nodes. The refinement keeps one node per
//! lattice column inside local patches so that area sums do not count the
//! same piece of surface twice.

use std::collections::{HashMap, HashSet, VecDeque};

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::grid::{grad_plus_at, Axis, DomainMask, ScalarField};

/// One interface node with its geometric payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePoint {
    /// Local lattice index in the field's window.
    pub ijk: [i64; 3],
    pub x: [f64; 3],
    pub normal: [f64; 3],
    pub curvature: f64,
    pub area: f64,
    /// Axis the area element projects along.
    pub axis: Axis,
}

/// An extracted (and possibly refined) interface.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfacePointSet {
    pub level: f64,
    pub n: usize,
    pub t: f64,
    /// Interface nodes in lattice order, before any payload is attached.
    pub nodes: Vec<[i64; 3]>,
    /// Payloads; empty until [`InterfacePointSet::with_geometry`] or
    /// [`refine_interface`].
    pub points: Vec<InterfacePoint>,
    pub refined: bool,
    /// Nodes dropped for a vanishing gradient.
    pub degenerate: usize,
}

impl InterfacePointSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn with_time(mut self, n: usize, t: f64) -> Self {
        self.n = n;
        self.t = t;
        self
    }

    /// Attaches normal, curvature and area element (dominant axis) to
    /// every node; nodes with `D⁺g = 0` are dropped and counted.
    pub fn with_geometry(mut self, g: &ScalarField, orient_outward: bool) -> Self {
        let mut points = Vec::with_capacity(self.nodes.len());
        let mut degenerate = 0;
        for &p in &self.nodes {
            match point_geometry(g, p, orient_outward, None) {
                Ok(pt) => points.push(pt),
                Err(_) => degenerate += 1,
            }
        }
        if degenerate > 0 {
            warn!("{degenerate} interface nodes with vanishing gradient dropped");
        }
        self.points = points;
        self.degenerate = degenerate;
        self
    }

    /// `Σ φ(y) dS(y)` over the payload points.
    pub fn surface_integral(&self, phi: impl Fn([f64; 3]) -> f64) -> f64 {
        surface_integral(&self.points, phi)
    }
}

/// Extracts `Γ` for level `c`. `region` restricts `Ω₊` to a mask's
/// interior (Ω_h); `None` uses the whole window. An empty `Ω₊` gives an
/// empty set. Nodes of `Ω̄₊` that would fall outside the window are
/// dropped.
pub fn extract_interface(g: &ScalarField, c: f64, region: Option<&DomainMask>) -> Result<InterfacePointSet> {
    if !c.is_finite() {
        return Err(Error::Argument(format!("level must be finite, got {c}")));
    }
    let grid = g.grid();
    if let Some(m) = region {
        if m.grid() != grid {
            return Err(Error::Argument("mask is not on the field grid".into()));
        }
    }
    let n = grid.len();
    let strides = grid.strides();
    let dims = grid.dims();
    let plus: Vec<bool> = (0..n).map(|l| g.data()[l] > c && region.is_none_or(|m| m.is_interior(l))).collect();
    let mut dilated = plus.clone();
    for l in 0..n {
        if !plus[l] {
            continue;
        }
        let p = grid.unravel(l);
        for a in 0..3 {
            if p[a] > 0 {
                dilated[l - strides[a]] = true;
            }
            if p[a] < dims[a] as i64 - 1 {
                dilated[l + strides[a]] = true;
            }
        }
    }
    let mut nodes = Vec::new();
    for l in 0..n {
        if !dilated[l] {
            continue;
        }
        let p = grid.unravel(l);
        let on_boundary = (0..3)
            .any(|a| p[a] == 0 || p[a] == dims[a] as i64 - 1 || !dilated[l - strides[a]] || !dilated[l + strides[a]]);
        if on_boundary {
            nodes.push(p);
        }
    }
    debug!("interface at level {c}: {} nodes", nodes.len());
    Ok(InterfacePointSet { level: c, n: 0, t: 0.0, nodes, points: Vec::new(), refined: false, degenerate: 0 })
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn degenerate_error(g: &ScalarField, p: [i64; 3]) -> Error {
    Error::Degenerate { count: 1, first: g.grid().position_ijk(p) }
}

/// `ν = D⁺g/|D⁺g|`, negated when `orient_outward` (the outer normal of
/// the super-level set).
pub fn normal(g: &ScalarField, p: [i64; 3], orient_outward: bool) -> Result<[f64; 3]> {
    let d = grad_plus_at(g, p);
    let m = norm(d);
    if !(m > 0.0) {
        return Err(degenerate_error(g, p));
    }
    let s = if orient_outward { -1.0 / m } else { 1.0 / m };
    Ok([d[0] * s, d[1] * s, d[2] * s])
}

/// `m = −∇·ν` discretized as
/// `∓(Σᵢ D²ᵢg − Σᵢⱼ D⁻ᵢD⁺ⱼg νᵢνⱼ)/|D⁺g|`, the sign following the
/// orientation of `ν`.
pub fn curvature(g: &ScalarField, p: [i64; 3], nu: [f64; 3], orient_outward: bool) -> Result<f64> {
    let d = grad_plus_at(g, p);
    let m = norm(d);
    if !(m > 0.0) {
        return Err(degenerate_error(g, p));
    }
    let mut lap = 0.0;
    let mut quad = 0.0;
    for ai in Axis::ALL {
        lap += crate::grid::d2_at(g, p, ai);
        for aj in Axis::ALL {
            quad += crate::grid::d_minus_d_plus_at(g, p, ai, aj) * nu[ai.idx()] * nu[aj.idx()];
        }
    }
    let sign = if orient_outward { 1.0 } else { -1.0 };
    Ok(sign * (lap - quad) / m)
}

/// `dS = |D⁺g|/|D⁺ᵢg|·h²` with `i` the first axis maximizing `|D⁺ᵢg|`.
pub fn area_element(g: &ScalarField, p: [i64; 3]) -> Result<(f64, Axis)> {
    let d = grad_plus_at(g, p);
    let mut i = 0;
    for a in 1..3 {
        if d[a].abs() > d[i].abs() {
            i = a;
        }
    }
    let axis = Axis::ALL[i];
    Ok((area_element_along(g, p, axis)?, axis))
}

/// `dS = |D⁺g|/|D⁺ᵢg|·h²` for a prescribed projection axis.
pub fn area_element_along(g: &ScalarField, p: [i64; 3], axis: Axis) -> Result<f64> {
    let d = grad_plus_at(g, p);
    let di = d[axis.idx()].abs();
    if !(di > 0.0) {
        return Err(degenerate_error(g, p));
    }
    let h = g.grid().h();
    Ok(norm(d) / di * h * h)
}

fn point_geometry(g: &ScalarField, p: [i64; 3], orient_outward: bool, axis: Option<Axis>) -> Result<InterfacePoint> {
    let nu = normal(g, p, orient_outward)?;
    let curvature = curvature(g, p, nu, orient_outward)?;
    let (area, axis) = match axis {
        Some(a) => (area_element_along(g, p, a)?, a),
        None => area_element(g, p)?,
    };
    Ok(InterfacePoint { ijk: p, x: g.grid().position_ijk(p), normal: nu, curvature, area, axis })
}

/// `Σ φ(y) dS(y)`.
pub fn surface_integral(points: &[InterfacePoint], phi: impl Fn([f64; 3]) -> f64) -> f64 {
    let terms: Vec<f64> = points.iter().map(|p| phi(p.x) * p.area).collect();
    crate::grid::pairwise_sum(&terms)
}

/// Settings of [`refine_interface`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    /// Patch half-extent along its axis, in grid spacings.
    pub patch_half_width: f64,
    /// Smallest admissible `|D⁺g|` on the interface.
    pub gradient_floor: f64,
    pub orient_outward: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { patch_half_width: 8.0, gradient_floor: 0.0, orient_outward: true }
    }
}

/// Patch bookkeeping of a refinement, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub seed: [i64; 3],
    pub axis: Axis,
    /// Interface nodes assigned to the patch.
    pub members: usize,
    /// Nodes kept, one per column.
    pub kept: usize,
}

/// Refines `Γ` into single-valued height-function patches.
///
/// Seeds are taken in breadth-first order over the 26-connected interface
/// graph, starting from the first node in lattice order. A patch with seed
/// `y` and axis `i` (the largest component of `|D⁺g(y)|`) is the box
/// `|xᵢ − yᵢ| ≤ ε₁`, `|xⱼ − yⱼ| ≤ a·ε₁/2` with
/// `a = min(1, |νᵢ|/√(1 − νᵢ²))`; it takes every not yet assigned interface
/// node inside it. In each column along `eᵢ` only the node with the
/// smallest `i`-th coordinate is kept, and its area element projects along
/// `i`. Nodes with `D⁺g = 0` are dropped and counted; a nonzero gradient
/// below the floor is an error.
pub fn refine_interface(
    set: &InterfacePointSet,
    g: &ScalarField,
    cfg: &RefineConfig,
) -> Result<(InterfacePointSet, Vec<Patch>)> {
    if !(cfg.patch_half_width >= 1.0) {
        return Err(Error::Config(format!(
            "patch half-width must be at least one spacing, got {}",
            cfg.patch_half_width
        )));
    }
    let mut degenerate = 0usize;
    let mut low: Option<(usize, [f64; 3])> = None;
    let mut live: Vec<[i64; 3]> = Vec::with_capacity(set.nodes.len());
    for &p in &set.nodes {
        let m = norm(grad_plus_at(g, p));
        if m == 0.0 {
            degenerate += 1;
        } else if m < cfg.gradient_floor {
            let e = low.get_or_insert((0, g.grid().position_ijk(p)));
            e.0 += 1;
        } else {
            live.push(p);
        }
    }
    if let Some((count, first)) = low {
        return Err(Error::Degenerate { count, first });
    }
    if degenerate > 0 {
        warn!("{degenerate} interface nodes with vanishing gradient dropped");
    }
    let index: HashMap<[i64; 3], usize> = live.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut assigned = vec![false; live.len()];
    let mut visited = vec![false; live.len()];
    let mut points = Vec::new();
    let mut patches = Vec::new();
    let ew = cfg.patch_half_width;

    for start in 0..live.len() {
        if visited[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(k) = queue.pop_front() {
            let p = live[k];
            for dz in -1..=1 {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(&q) = index.get(&[p[0] + dx, p[1] + dy, p[2] + dz]) {
                            if !visited[q] {
                                visited[q] = true;
                                queue.push_back(q);
                            }
                        }
                    }
                }
            }
            if assigned[k] {
                continue;
            }
            // New patch seeded at p.
            let nu = normal(g, p, false)?;
            let mut i = 0;
            for a in 1..3 {
                if nu[a].abs() > nu[i].abs() {
                    i = a;
                }
            }
            let ni = nu[i].abs();
            let a = if ni >= 1.0 { 1.0 } else { (ni / (1.0 - ni * ni).sqrt()).min(1.0) };
            let along = ew.floor() as i64;
            let lateral = (0.5 * a * ew).floor().max(1.0) as i64;
            let mut half = [lateral; 3];
            half[i] = along;
            let mut columns: HashMap<[i64; 2], [i64; 3]> = HashMap::new();
            let mut members = 0;
            for z in p[2] - half[2]..=p[2] + half[2] {
                for y in p[1] - half[1]..=p[1] + half[1] {
                    for x in p[0] - half[0]..=p[0] + half[0] {
                        let q = [x, y, z];
                        let Some(&kq) = index.get(&q) else { continue };
                        if assigned[kq] {
                            continue;
                        }
                        assigned[kq] = true;
                        members += 1;
                        let key = match i {
                            0 => [q[1], q[2]],
                            1 => [q[0], q[2]],
                            _ => [q[0], q[1]],
                        };
                        columns
                            .entry(key)
                            .and_modify(|best| {
                                if q[i] < best[i] {
                                    *best = q;
                                }
                            })
                            .or_insert(q);
                    }
                }
            }
            let axis = Axis::ALL[i];
            let mut kept: Vec<[i64; 3]> = columns.into_values().collect();
            kept.sort_unstable_by_key(|q| (q[2], q[1], q[0]));
            for q in &kept {
                points.push(point_geometry(g, *q, cfg.orient_outward, Some(axis))?);
            }
            patches.push(Patch { seed: p, axis, members, kept: kept.len() });
        }
    }
    debug!("refined {} interface nodes into {} points over {} patches", set.nodes.len(), points.len(), patches.len());
    let mut nodes: Vec<[i64; 3]> = points.iter().map(|p| p.ijk).collect();
    nodes.sort_unstable_by_key(|q| (q[2], q[1], q[0]));
    let refined = InterfacePointSet { level: set.level, n: set.n, t: set.t, nodes, points, refined: true, degenerate };
    Ok((refined, patches))
}

/// Nodes of `next` whose star neighbourhood misses `prev` entirely.
pub fn connectivity_violations(prev: &InterfacePointSet, next: &InterfacePointSet) -> Vec<[i64; 3]> {
    let have: HashSet<[i64; 3]> = prev.nodes.iter().copied().collect();
    next.nodes
        .iter()
        .copied()
        .filter(|p| {
            let mut star = vec![*p];
            for a in 0..3 {
                for s in [-1, 1] {
                    let mut q = *p;
                    q[a] += s;
                    star.push(q);
                }
            }
            !star.iter().any(|q| have.contains(q))
        })
        .collect()
}

/// An exact moving surface used to judge a discrete interface.
pub trait SurfaceOracle {
    /// Distance from `x` to `Γ(t)`.
    fn distance(&self, t: f64, x: [f64; 3]) -> f64;
    /// Nearest point of `Γ(t)`.
    fn foot(&self, t: f64, x: [f64; 3]) -> [f64; 3];
    /// Outer unit normal at a surface point.
    fn normal(&self, t: f64, y: [f64; 3]) -> [f64; 3];
    /// `m = −∇·ν` with the outer normal.
    fn curvature(&self, t: f64, y: [f64; 3]) -> f64;
    fn area(&self, t: f64) -> f64;
}

/// A sphere whose centre moves along a prescribed path.
pub struct MovingSphere {
    pub radius: f64,
    center: Box<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
}

impl std::fmt::Debug for MovingSphere {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MovingSphere").field("radius", &self.radius).field("center(0)", &(self.center)(0.0)).finish()
    }
}

impl MovingSphere {
    pub fn new(radius: f64, center: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(MovingSphere { radius, center: Box::new(center) })
    }

    pub fn fixed(center: [f64; 3], radius: f64) -> Result<Self> {
        Self::new(radius, move |_| center)
    }

    /// The sphere carried by a swirl velocity. The rate must be constant
    /// on the sphere (checked on a sample of points), so that the sphere
    /// moves rigidly.
    pub fn under_swirl(v: std::sync::Arc<dyn crate::presets::Velocity>, center: [f64; 3], radius: f64) -> Result<Self> {
        let (axis, rate) =
            v.swirl(center).ok_or_else(|| Error::Precondition(format!("{} is not a swirl field", v.name())))?;
        for k in 0..64 {
            let th = std::f64::consts::PI * (k as f64 + 0.5) / 64.0;
            let ph = 2.4 * k as f64;
            let x = [
                center[0] + radius * th.sin() * ph.cos(),
                center[1] + radius * th.sin() * ph.sin(),
                center[2] + radius * th.cos(),
            ];
            let r = v.swirl(x).map(|s| s.1).unwrap_or(f64::NAN);
            if (r - rate).abs() > 1e-12 * (1.0 + rate.abs()) {
                return Err(Error::Precondition("swirl rate varies over the sphere; it would deform".into()));
            }
        }
        Self::new(radius, move |t| {
            let th = rate * v.modulation_integral(0.0, t);
            let (s, c) = th.sin_cos();
            let d = [center[0] - axis[0], center[1] - axis[1]];
            [axis[0] + c * d[0] - s * d[1], axis[1] + s * d[0] + c * d[1], center[2]]
        })
    }

    pub fn center(&self, t: f64) -> [f64; 3] {
        (self.center)(t)
    }
}

impl SurfaceOracle for MovingSphere {
    fn distance(&self, t: f64, x: [f64; 3]) -> f64 {
        let c = self.center(t);
        (norm([x[0] - c[0], x[1] - c[1], x[2] - c[2]]) - self.radius).abs()
    }

    fn foot(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let c = self.center(t);
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r = norm(d);
        if r == 0.0 {
            return [c[0], c[1], c[2] + self.radius];
        }
        let s = self.radius / r;
        [c[0] + s * d[0], c[1] + s * d[1], c[2] + s * d[2]]
    }

    fn normal(&self, t: f64, y: [f64; 3]) -> [f64; 3] {
        let c = self.center(t);
        let d = [y[0] - c[0], y[1] - c[1], y[2] - c[2]];
        let r = norm(d);
        [d[0] / r, d[1] / r, d[2] / r]
    }

    fn curvature(&self, _t: f64, _y: [f64; 3]) -> f64 {
        -2.0 / self.radius
    }

    fn area(&self, _t: f64) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }
}

/// Geometric errors of an interface against an exact surface.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeometryErrors {
    /// `sup_y dist(y, Γ(t))` over the interface nodes.
    pub hausdorff: f64,
    /// `max |ν(y) − ν(t, y*)|` over payload points.
    pub normal: f64,
    /// `max |m(y) − m(t, y*)|` over payload points.
    pub curvature: f64,
    /// `|Σ dS − |Γ(t)||`.
    pub area: f64,
    pub points: usize,
}

/// Compares an interface at time `t` against `oracle`, with `y*` the
/// nearest surface point.
pub fn geometry_errors(set: &InterfacePointSet, g: &ScalarField, oracle: &dyn SurfaceOracle, t: f64) -> GeometryErrors {
    let grid = g.grid();
    let mut e = GeometryErrors { points: set.points.len(), ..Default::default() };
    for &p in &set.nodes {
        e.hausdorff = e.hausdorff.max(oracle.distance(t, grid.position_ijk(p)));
    }
    for pt in &set.points {
        let y = oracle.foot(t, pt.x);
        let nu = oracle.normal(t, y);
        let dn = norm([pt.normal[0] - nu[0], pt.normal[1] - nu[1], pt.normal[2] - nu[2]]);
        e.normal = e.normal.max(dn);
        e.curvature = e.curvature.max((pt.curvature - oracle.curvature(t, y)).abs());
    }
    e.area = (set.surface_integral(|_| 1.0) - oracle.area(t)).abs();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn lattice(n: usize, h: f64) -> GridSpec {
        let half = (n / 2) as i64;
        GridSpec::new(h, [-half; 3], [n; 3]).unwrap()
    }

    #[test]
    fn empty_when_below_level() {
        let g = ScalarField::zeros(lattice(6, 0.1));
        assert!(extract_interface(&g, 1.0, None).unwrap().is_empty());
    }

    #[test]
    fn single_node_gives_its_star() {
        let grid = lattice(5, 0.25);
        let mut g = ScalarField::zeros(grid);
        let centre = grid.index([2, 2, 2]).unwrap();
        g.data_mut()[centre] = 2.0;
        let set = extract_interface(&g, 1.0, None).unwrap();
        // Brute force over the 5³ lattice straight from the set definitions.
        let inside = |p: [i64; 3]| p.iter().all(|&c| (0..5).contains(&c));
        let plus = |p: [i64; 3]| p == [2, 2, 2];
        let star = |p: [i64; 3]| {
            let mut s = vec![p];
            for a in 0..3 {
                for d in [-1, 1] {
                    let mut q = p;
                    q[a] += d;
                    s.push(q);
                }
            }
            s
        };
        let dilated = |p: [i64; 3]| inside(p) && star(p).into_iter().any(plus);
        let mut expect = Vec::new();
        for z in 0..5 {
            for y in 0..5 {
                for x in 0..5 {
                    let p = [x, y, z];
                    if dilated(p) && star(p).into_iter().any(|q| !dilated(q)) {
                        expect.push(p);
                    }
                }
            }
        }
        assert_eq!(set.nodes, expect);
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn affine_geometry() {
        let grid = lattice(8, 0.125);
        let g = ScalarField::from_fn(grid, |x| 3.0 * x[0] + 4.0 * x[1]);
        let p = [4, 4, 4];
        let nu = normal(&g, p, false).unwrap();
        assert!((nu[0] - 0.6).abs() < 1e-14 && (nu[1] - 0.8).abs() < 1e-14 && nu[2] == 0.0);
        assert!(curvature(&g, p, nu, false).unwrap().abs() < 1e-10);
        let flat = ScalarField::from_fn(grid, |x| x[2]);
        let (ds, axis) = area_element(&flat, p).unwrap();
        assert_eq!(axis, Axis::Z);
        assert!((ds - 0.125 * 0.125).abs() < 1e-15);
        let diag = ScalarField::from_fn(grid, |x| (x[0] + x[1]) / 2f64.sqrt());
        let (ds, axis) = area_element(&diag, p).unwrap();
        assert_eq!(axis, Axis::X);
        assert!((ds - 2f64.sqrt() * 0.125 * 0.125).abs() < 1e-12);
        let zero = ScalarField::zeros(grid);
        assert!(matches!(normal(&zero, p, true), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn synthetic_column_keeps_lowest() {
        let grid = lattice(12, 0.1);
        // Two sheets one node apart along z, both tilted a little so the gradient favours z.
        let set = InterfacePointSet {
            level: 1.0,
            n: 0,
            t: 0.0,
            nodes: vec![[6, 6, 4], [6, 6, 5]],
            points: vec![],
            refined: false,
            degenerate: 0,
        };
        let g = ScalarField::from_fn(grid, |x| 1.0 - x[2] + 0.1 * x[0]);
        let (r, patches) = refine_interface(&set, &g, &RefineConfig::default()).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(r.nodes, vec![[6, 6, 4]]);
        assert_eq!(r.points[0].axis, Axis::Z);
    }

    #[test]
    fn sphere_geometry_and_area() {
        let h = 1.0 / 32.0;
        let grid = GridSpec::covering([-1.3; 3], [1.3; 3], h, 1).unwrap();
        let g = ScalarField::from_fn(grid, |x| 2.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
        let set = extract_interface(&g, 1.0, None).unwrap().with_geometry(&g, true);
        let sphere = MovingSphere::fixed([0.0; 3], 1.0).unwrap();
        let e = geometry_errors(&set, &g, &sphere, 0.0);
        assert!(e.hausdorff <= 2.0 * h);
        assert!(e.normal <= 4.0 * h, "{e:?}");
        let mean_m: f64 = set.points.iter().map(|p| p.curvature).sum::<f64>() / set.points.len() as f64;
        assert!((mean_m + 2.0).abs() < 0.1, "{mean_m}");
        let (refined, _) = refine_interface(&set, &g, &RefineConfig::default()).unwrap();
        let area = refined.surface_integral(|_| 1.0);
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!((area - four_pi).abs() < 0.06 * four_pi, "{area}");
        assert!(refined.surface_integral(|x| x[0]).abs() < 0.02 * four_pi);
        assert_eq!(refined.surface_integral(|_| 0.0), 0.0);
        assert!(refined.points.iter().all(|p| p.area > 0.0 && (norm(p.normal) - 1.0).abs() < 1e-14));
    }

    #[test]
    fn refinement_without_duplicates_is_identity() {
        let grid = lattice(16, 0.1);
        let g = ScalarField::from_fn(grid, |x| 1.0 + x[2] - 0.05 + 0.2 * x[0]);
        let mut set = extract_interface(&g, 1.0, None).unwrap();
        // Keep the lower sheet of the slab only: one node per column.
        let mut seen = HashSet::new();
        set.nodes.retain(|p| seen.insert([p[0], p[1]]) && p.iter().all(|&c| c > 0 && c < 15));
        let (r, _) = refine_interface(&set, &g, &RefineConfig::default()).unwrap();
        let mut a = r.nodes.clone();
        let mut b = set.nodes.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    fn sphere_field(h: f64, r: f64) -> ScalarField {
        let half = r + 0.3;
        let grid = GridSpec::covering([-half; 3], [half; 3], h, 1).unwrap();
        ScalarField::from_fn(grid, move |x| 1.0 + r - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
    }

    #[test]
    fn radius_two_curvature() {
        let g = sphere_field(1.0 / 16.0, 2.0);
        let set = extract_interface(&g, 1.0, None).unwrap().with_geometry(&g, true);
        let mean: f64 = set.points.iter().map(|p| p.curvature).sum::<f64>() / set.points.len() as f64;
        assert!((mean + 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn refined_count_matches_hemisphere_column_scan() {
        let g = sphere_field(1.0 / 32.0, 1.0);
        let set = extract_interface(&g, 1.0, None).unwrap();
        let (refined, _) = refine_interface(&set, &g, &RefineConfig::default()).unwrap();
        // Six hemispherical patches: dominant axis i and the sign of x_i; one node per column.
        let mut columns = HashSet::new();
        for &p in &set.nodes {
            let (_, axis) = area_element(&g, p).unwrap();
            let i = axis.idx();
            let x = g.grid().position_ijk(p);
            let mut key = p;
            key[i] = if x[i] > 0.0 { 1 } else { -1 };
            columns.insert((i, key));
        }
        let scan = columns.len() as f64;
        let got = refined.points.len() as f64;
        assert!((got - scan).abs() < 0.03 * scan, "{got} vs {scan}");
    }

    #[test]
    fn integral_ignores_seed_order() {
        let g = sphere_field(1.0 / 32.0, 1.0);
        let set = extract_interface(&g, 1.0, None).unwrap();
        let (a, _) = refine_interface(&set, &g, &RefineConfig::default()).unwrap();
        let mut rev = set.clone();
        rev.nodes.reverse();
        let (b, _) = refine_interface(&rev, &g, &RefineConfig::default()).unwrap();
        let ia = a.surface_integral(|_| 1.0);
        let ib = b.surface_integral(|_| 1.0);
        assert!((ia - ib).abs() < 0.01 * ia, "{ia} vs {ib}");
    }

    #[test]
    fn gradient_floor_is_enforced() {
        let g = sphere_field(1.0 / 16.0, 1.0);
        let set = extract_interface(&g, 1.0, None).unwrap();
        let cfg = RefineConfig { gradient_floor: 10.0, ..Default::default() };
        assert!(matches!(refine_interface(&set, &g, &cfg), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn consecutive_interfaces_are_connected() {
        let g = sphere_field(1.0 / 16.0, 1.0);
        let shifted = ScalarField::from_fn(*g.grid(), |x| {
            let d = [x[0] - 0.03, x[1], x[2]];
            2.0 - (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        });
        let a = extract_interface(&g, 1.0, None).unwrap();
        let b = extract_interface(&shifted, 1.0, None).unwrap();
        assert!(connectivity_violations(&a, &b).is_empty());
        let far = ScalarField::from_fn(*g.grid(), |x| 2.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() * 2.0);
        let c = extract_interface(&far, 1.0, None).unwrap();
        assert!(!connectivity_violations(&a, &c).is_empty());
    }
}
