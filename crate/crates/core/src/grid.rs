//! Lattice geometry, domain discretization, difference operators and
//! discrete norms.
//!
//! A [`GridSpec`] is a box window of the lattice hℤ³. Fields store one
//! value per window node and read as zero anywhere outside the window, so
//! difference stencils near the window edge see the zero extension.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Coordinate axis. Constructed from the mathematical index 1, 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn from_index(i: usize) -> Result<Axis> {
        match i {
            1 => Ok(Axis::X),
            2 => Ok(Axis::Y),
            3 => Ok(Axis::Z),
            _ => Err(Error::Argument(format!("axis must be 1, 2 or 3, got {i}"))),
        }
    }

    /// Zero-based position in coordinate arrays.
    #[inline]
    pub fn idx(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn unit(self) -> [i64; 3] {
        let mut e = [0; 3];
        e[self.idx()] = 1;
        e
    }
}

/// A box window `offset + [0, dims)` of the lattice hℤ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    h: f64,
    offset: [i64; 3],
    dims: [usize; 3],
}

impl GridSpec {
    /// `offset` is the lattice index of the first window node, so its
    /// position is `h * offset`.
    pub fn new(h: f64, offset: [i64; 3], dims: [usize; 3]) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("grid spacing must be positive, got {h}")));
        }
        if dims.iter().any(|&n| n < 4) {
            return Err(Error::Argument(format!("grid dims must all be >= 4, got {dims:?}")));
        }
        Ok(GridSpec { h, offset, dims })
    }

    /// Smallest lattice window containing `[lo, hi]` plus `margin` extra
    /// nodes on every side.
    pub fn covering(lo: [f64; 3], hi: [f64; 3], h: f64, margin: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("grid spacing must be positive, got {h}")));
        }
        let mut offset = [0i64; 3];
        let mut dims = [0usize; 3];
        for a in 0..3 {
            if !(lo[a] <= hi[a]) {
                return Err(Error::Argument(format!("empty box on axis {a}: [{}, {}]", lo[a], hi[a])));
            }
            let first = (lo[a] / h).floor() as i64 - margin as i64;
            let last = (hi[a] / h).ceil() as i64 + margin as i64;
            offset[a] = first;
            dims[a] = ((last - first + 1) as usize).max(4);
        }
        GridSpec::new(h, offset, dims)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }
    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    #[inline]
    pub fn offset(&self) -> [i64; 3] {
        self.offset
    }
    /// Position of the first window node.
    pub fn origin(&self) -> [f64; 3] {
        [self.h * self.offset[0] as f64, self.h * self.offset[1] as f64, self.h * self.offset[2] as f64]
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Linear-index strides along x, y, z.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [1, self.dims[0], self.dims[0] * self.dims[1]]
    }
    #[inline]
    pub fn stride(&self, axis: Axis) -> usize {
        self.strides()[axis.idx()]
    }

    /// Linear index of a local triple, or `None` when outside the window.
    #[inline]
    pub fn index(&self, ijk: [i64; 3]) -> Option<usize> {
        let [nx, ny, nz] = self.dims;
        let [i, j, k] = ijk;
        if i < 0 || j < 0 || k < 0 || i >= nx as i64 || j >= ny as i64 || k >= nz as i64 {
            return None;
        }
        Some(i as usize + nx * (j as usize + ny * k as usize))
    }

    #[inline]
    pub fn unravel(&self, l: usize) -> [i64; 3] {
        let [nx, ny, _] = self.dims;
        let i = l % nx;
        let j = (l / nx) % ny;
        let k = l / (nx * ny);
        [i as i64, j as i64, k as i64]
    }

    /// Local triple of a lattice index (may lie outside the window).
    #[inline]
    pub fn local(&self, lattice: [i64; 3]) -> [i64; 3] {
        [lattice[0] - self.offset[0], lattice[1] - self.offset[1], lattice[2] - self.offset[2]]
    }

    #[inline]
    pub fn lattice(&self, ijk: [i64; 3]) -> [i64; 3] {
        [ijk[0] + self.offset[0], ijk[1] + self.offset[1], ijk[2] + self.offset[2]]
    }

    #[inline]
    pub fn position_ijk(&self, ijk: [i64; 3]) -> [f64; 3] {
        let l = self.lattice(ijk);
        [self.h * l[0] as f64, self.h * l[1] as f64, self.h * l[2] as f64]
    }

    #[inline]
    pub fn position(&self, l: usize) -> [f64; 3] {
        self.position_ijk(self.unravel(l))
    }

    /// Whether the linear index sits on the outermost layer of the window.
    #[inline]
    pub fn on_edge(&self, l: usize) -> bool {
        let [i, j, k] = self.unravel(l);
        let [nx, ny, nz] = self.dims;
        i == 0 || j == 0 || k == 0 || i == nx as i64 - 1 || j == ny as i64 - 1 || k == nz as i64 - 1
    }

    /// Nearest window node to a point, if the point lies inside the window.
    pub fn nearest(&self, x: [f64; 3]) -> Option<usize> {
        let mut ijk = [0i64; 3];
        for a in 0..3 {
            ijk[a] = (x[a] / self.h).round() as i64 - self.offset[a];
        }
        self.index(ijk)
    }

    /// Cell volume h³.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }
}

/// The continuous domain Ω.
#[derive(Clone)]
pub enum Domain {
    /// The open box `(lo, hi)`.
    Box { lo: [f64; 3], hi: [f64; 3] },
    /// `{x : sdf(x) < 0}` inside the bounding box `[lo, hi]`.
    Implicit { sdf: Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>, lo: [f64; 3], hi: [f64; 3] },
}

impl std::fmt::Debug for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Box { lo, hi } => f.debug_struct("Box").field("lo", lo).field("hi", hi).finish(),
            Domain::Implicit { lo, hi, .. } => {
                f.debug_struct("Implicit").field("lo", lo).field("hi", hi).finish_non_exhaustive()
            }
        }
    }
}

impl Domain {
    pub fn cube(half_width: f64) -> Self {
        Domain::Box { lo: [-half_width; 3], hi: [half_width; 3] }
    }

    pub fn ball(center: [f64; 3], radius: f64) -> Self {
        let lo = [center[0] - radius, center[1] - radius, center[2] - radius];
        let hi = [center[0] + radius, center[1] + radius, center[2] + radius];
        let sdf = move |x: [f64; 3]| {
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() - radius
        };
        Domain::Implicit { sdf: Arc::new(sdf), lo, hi }
    }

    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            Domain::Box { lo, hi } | Domain::Implicit { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        match self {
            Domain::Box { lo, hi } => (0..3).all(|a| x[a] > lo[a] && x[a] < hi[a]),
            Domain::Implicit { sdf, .. } => sdf(x) < 0.0,
        }
    }

    /// Whether the half-open cube `C_{2h}(x) = [x − h, x + h)³` lies in Ω.
    ///
    /// Exact for boxes. For implicit domains the 8 corners and 6 face
    /// centres of the closed cube are tested, which is exact for convex Ω
    /// and an approximation otherwise.
    pub fn contains_cube(&self, x: [f64; 3], h: f64) -> bool {
        match self {
            Domain::Box { lo, hi } => {
                let eps = 1e-9 * h;
                (0..3).all(|a| x[a] - h > lo[a] + eps && x[a] + h <= hi[a] + eps)
            }
            Domain::Implicit { sdf, .. } => {
                for sx in [-1.0, 1.0] {
                    for sy in [-1.0, 1.0] {
                        for sz in [-1.0, 1.0] {
                            if sdf([x[0] + sx * h, x[1] + sy * h, x[2] + sz * h]) >= 0.0 {
                                return false;
                            }
                        }
                    }
                }
                for a in 0..3 {
                    for s in [-1.0, 1.0] {
                        let mut p = x;
                        p[a] += s * h;
                        if sdf(p) >= 0.0 {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}

/// Ω_h and its discrete boundary ∂Ω_h on a grid window.
#[derive(Debug, Clone)]
pub struct DomainMask {
    grid: GridSpec,
    interior: Vec<bool>,
    boundary: Vec<bool>,
    interior_nodes: Vec<usize>,
    boundary_nodes: Vec<usize>,
    inner_nodes: Vec<usize>,
}

impl DomainMask {
    /// Discretizes `domain` on `grid`:
    /// Ω_h = {x ∈ Ω ∩ hℤ³ : C_{2h}(x) ⊂ Ω} and
    /// ∂Ω_h = {x ∈ Ω_h : some x ± heⁱ ∉ Ω_h}.
    pub fn new(grid: GridSpec, domain: &Domain) -> Result<Self> {
        let h = grid.h();
        let interior: Vec<bool> = (0..grid.len())
            .map(|l| {
                let x = grid.position(l);
                domain.contains(x) && domain.contains_cube(x, h)
            })
            .collect();
        Self::from_interior(grid, interior)
    }

    /// Builds a mask from an explicit Ω_h membership array.
    pub fn from_interior(grid: GridSpec, interior: Vec<bool>) -> Result<Self> {
        if interior.len() != grid.len() {
            return Err(Error::Argument("mask length does not match grid".into()));
        }
        let mut boundary = vec![false; grid.len()];
        let mut interior_nodes = Vec::new();
        let mut boundary_nodes = Vec::new();
        let mut inner_nodes = Vec::new();
        for l in 0..grid.len() {
            if !interior[l] {
                continue;
            }
            interior_nodes.push(l);
            let ijk = grid.unravel(l);
            let mut all_in = true;
            for axis in Axis::ALL {
                let e = axis.unit();
                for s in [-1i64, 1] {
                    let nb = [ijk[0] + s * e[0], ijk[1] + s * e[1], ijk[2] + s * e[2]];
                    if !grid.index(nb).is_some_and(|m| interior[m]) {
                        all_in = false;
                    }
                }
            }
            if all_in {
                inner_nodes.push(l);
            } else {
                boundary[l] = true;
                boundary_nodes.push(l);
            }
        }
        if interior_nodes.is_empty() {
            return Err(Error::Domain("discretized domain has no nodes".into()));
        }
        Ok(DomainMask { grid, interior, boundary, interior_nodes, boundary_nodes, inner_nodes })
    }

    /// Grid covering the domain's bounding box with one spare layer, and
    /// the mask on it.
    pub fn for_domain(domain: &Domain, h: f64) -> Result<Self> {
        let (lo, hi) = domain.bounds();
        let grid = GridSpec::covering(lo, hi, h, 1)?;
        DomainMask::new(grid, domain)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    /// Membership in Ω_h.
    #[inline]
    pub fn is_interior(&self, l: usize) -> bool {
        self.interior[l]
    }
    /// Membership in ∂Ω_h.
    #[inline]
    pub fn is_boundary(&self, l: usize) -> bool {
        self.boundary[l]
    }
    /// Membership in Ω_h ∖ ∂Ω_h.
    #[inline]
    pub fn is_inner(&self, l: usize) -> bool {
        self.interior[l] && !self.boundary[l]
    }
    /// Membership for an arbitrary local triple (false outside the window).
    pub fn contains(&self, ijk: [i64; 3]) -> bool {
        self.grid.index(ijk).is_some_and(|l| self.interior[l])
    }
    /// Nodes of Ω_h.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }
    /// Nodes of ∂Ω_h.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }
    /// Nodes of Ω_h ∖ ∂Ω_h.
    pub fn inner_nodes(&self) -> &[usize] {
        &self.inner_nodes
    }
}

/// Grid function with zero extension outside its window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField { data: vec![0.0; grid.len()], grid }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Argument(format!("field has {} values for a grid of {} nodes", data.len(), grid.len())));
        }
        Ok(ScalarField { grid, data })
    }

    /// Samples `f` at every window node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|l| f(grid.position(l))).collect();
        ScalarField { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Value at a local triple, 0 outside the window.
    #[inline]
    pub fn get(&self, ijk: [i64; 3]) -> f64 {
        match self.grid.index(ijk) {
            Some(l) => self.data[l],
            None => 0.0,
        }
    }

    /// Value at a lattice index, 0 outside the window.
    #[inline]
    pub fn at_lattice(&self, lattice: [i64; 3]) -> f64 {
        self.get(self.grid.local(lattice))
    }

    /// Value at `ijk + s·e_axis`.
    #[inline]
    pub fn shifted(&self, ijk: [i64; 3], axis: Axis, s: i64) -> f64 {
        let mut p = ijk;
        p[axis.idx()] += s;
        self.get(p)
    }

    /// Copy with every node outside Ω_h set to zero.
    pub fn masked(&self, mask: &DomainMask) -> ScalarField {
        debug_assert_eq!(self.grid, *mask.grid());
        let data = self.data.iter().enumerate().map(|(l, &v)| if mask.is_interior(l) { v } else { 0.0 }).collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `a·self + b·other` on the same grid.
    pub fn lincomb(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        ScalarField { grid: self.grid, data }
    }
}

/// Three scalar components on a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        VectorField { components: [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        let g = *components[0].grid();
        if components[1].grid() != &g || components[2].grid() != &g {
            return Err(Error::Argument("vector components must share one grid".into()));
        }
        Ok(VectorField { components })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = VectorField::zeros(grid);
        for l in 0..grid.len() {
            let v = f(grid.position(l));
            for a in 0..3 {
                out.components[a].data[l] = v[a];
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }
    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarField {
        &self.components[axis.idx()]
    }
    #[inline]
    pub fn component_mut(&mut self, axis: Axis) -> &mut ScalarField {
        &mut self.components[axis.idx()]
    }
    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }
    #[inline]
    pub fn at(&self, l: usize) -> [f64; 3] {
        [self.components[0].data[l], self.components[1].data[l], self.components[2].data[l]]
    }
    #[inline]
    pub fn set(&mut self, l: usize, v: [f64; 3]) {
        for a in 0..3 {
            self.components[a].data[l] = v[a];
        }
    }
    pub fn masked(&self, mask: &DomainMask) -> VectorField {
        VectorField {
            components: [
                self.components[0].masked(mask),
                self.components[1].masked(mask),
                self.components[2].masked(mask),
            ],
        }
    }
    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }
    pub fn lincomb(&self, a: f64, other: &VectorField, b: f64) -> VectorField {
        VectorField {
            components: [
                self.components[0].lincomb(a, &other.components[0], b),
                self.components[1].lincomb(a, &other.components[1], b),
                self.components[2].lincomb(a, &other.components[2], b),
            ],
        }
    }
}

/// Dense numbering of the nodes of Ω_h ∖ ∂Ω_h with a face-neighbour
/// table, for linear systems whose unknowns live there.
#[derive(Debug, Clone)]
pub struct CompactIndex {
    nodes: Vec<usize>,
    unknown_of: Vec<u32>,
    neighbors: Vec<[u32; 6]>,
}

impl CompactIndex {
    /// Marks a missing neighbour.
    pub const NONE: u32 = u32::MAX;

    /// Numbers the inner nodes of `mask` in window order. Neighbour slots
    /// are `[−x, +x, −y, +y, −z, +z]`.
    pub fn inner(mask: &DomainMask) -> Result<Self> {
        let grid = mask.grid();
        let nodes = mask.inner_nodes().to_vec();
        if nodes.is_empty() {
            return Err(Error::Domain("domain has no nodes away from its discrete boundary".into()));
        }
        if nodes.len() >= u32::MAX as usize {
            return Err(Error::Domain("too many unknowns for a compact index".into()));
        }
        let mut unknown_of = vec![Self::NONE; grid.len()];
        for (i, &l) in nodes.iter().enumerate() {
            unknown_of[l] = i as u32;
        }
        let strides = grid.strides();
        let neighbors = nodes
            .iter()
            .map(|&l| {
                let mut nb = [Self::NONE; 6];
                for a in 0..3 {
                    // Inner nodes have all six neighbours in Ω_h, hence in the window.
                    nb[2 * a] = unknown_of[l - strides[a]];
                    nb[2 * a + 1] = unknown_of[l + strides[a]];
                }
                nb
            })
            .collect();
        Ok(CompactIndex { nodes, unknown_of, neighbors })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// Window index of unknown `i`.
    #[inline]
    pub fn node(&self, i: usize) -> usize {
        self.nodes[i]
    }
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
    /// Unknown at window index `l`, if any.
    #[inline]
    pub fn unknown(&self, l: usize) -> Option<usize> {
        match self.unknown_of[l] {
            Self::NONE => None,
            i => Some(i as usize),
        }
    }
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32; 6] {
        &self.neighbors[i]
    }

    /// Values of `f` at the unknowns.
    pub fn gather(&self, f: &ScalarField) -> Vec<f64> {
        self.nodes.iter().map(|&l| f.data()[l]).collect()
    }

    /// Field that is `x` at the unknowns and zero elsewhere.
    pub fn scatter(&self, grid: &GridSpec, x: &[f64]) -> ScalarField {
        let mut f = ScalarField::zeros(*grid);
        for (&l, &v) in self.nodes.iter().zip(x) {
            f.data_mut()[l] = v;
        }
        f
    }
}

// ---------------------------------------------------------------------------
// Pointwise stencils

/// D⁺ᵢf at a local triple.
#[inline]
pub fn d_plus_at(f: &ScalarField, ijk: [i64; 3], axis: Axis) -> f64 {
    (f.shifted(ijk, axis, 1) - f.get(ijk)) / f.grid().h()
}

/// D⁻ᵢf at a local triple.
#[inline]
pub fn d_minus_at(f: &ScalarField, ijk: [i64; 3], axis: Axis) -> f64 {
    (f.get(ijk) - f.shifted(ijk, axis, -1)) / f.grid().h()
}

/// Dᵢf at a local triple.
#[inline]
pub fn d_central_at(f: &ScalarField, ijk: [i64; 3], axis: Axis) -> f64 {
    (f.shifted(ijk, axis, 1) - f.shifted(ijk, axis, -1)) / (2.0 * f.grid().h())
}

/// D²ᵢf at a local triple.
#[inline]
pub fn d2_at(f: &ScalarField, ijk: [i64; 3], axis: Axis) -> f64 {
    let h = f.grid().h();
    (f.shifted(ijk, axis, 1) + f.shifted(ijk, axis, -1) - 2.0 * f.get(ijk)) / (h * h)
}

/// D⁻ᵢD⁺ⱼf at a local triple.
#[inline]
pub fn d_minus_d_plus_at(f: &ScalarField, ijk: [i64; 3], i: Axis, j: Axis) -> f64 {
    let mut back = ijk;
    back[i.idx()] -= 1;
    (d_plus_at(f, ijk, j) - d_plus_at(f, back, j)) / f.grid().h()
}

/// D⁺f = (D⁺₁f, D⁺₂f, D⁺₃f) at a local triple.
#[inline]
pub fn grad_plus_at(f: &ScalarField, ijk: [i64; 3]) -> [f64; 3] {
    [d_plus_at(f, ijk, Axis::X), d_plus_at(f, ijk, Axis::Y), d_plus_at(f, ijk, Axis::Z)]
}

fn map_nodes(f: &ScalarField, op: impl Fn([i64; 3]) -> f64) -> ScalarField {
    let g = *f.grid();
    let data = (0..g.len()).map(|l| op(g.unravel(l))).collect();
    ScalarField { grid: g, data }
}

/// D⁺ᵢf(x) = (f(x + heⁱ) − f(x))/h at every window node.
pub fn forward_diff(f: &ScalarField, axis: Axis) -> ScalarField {
    map_nodes(f, |ijk| d_plus_at(f, ijk, axis))
}

/// D⁻ᵢf(x) = (f(x) − f(x − heⁱ))/h.
pub fn backward_diff(f: &ScalarField, axis: Axis) -> ScalarField {
    map_nodes(f, |ijk| d_minus_at(f, ijk, axis))
}

/// Dᵢf(x) = (f(x + heⁱ) − f(x − heⁱ))/2h.
pub fn central_diff(f: &ScalarField, axis: Axis) -> ScalarField {
    map_nodes(f, |ijk| d_central_at(f, ijk, axis))
}

/// D²ᵢf(x) = (f(x + heⁱ) + f(x − heⁱ) − 2f(x))/h².
pub fn second_diff(f: &ScalarField, axis: Axis) -> ScalarField {
    map_nodes(f, |ijk| d2_at(f, ijk, axis))
}

/// D⁺f as a vector field.
pub fn gradient_plus(f: &ScalarField) -> VectorField {
    VectorField { components: [forward_diff(f, Axis::X), forward_diff(f, Axis::Y), forward_diff(f, Axis::Z)] }
}

/// D⁻·u at every window node.
pub fn divergence_minus(u: &VectorField) -> ScalarField {
    let g = *u.grid();
    let data = (0..g.len())
        .map(|l| {
            let ijk = g.unravel(l);
            Axis::ALL.iter().map(|&a| d_minus_at(u.component(a), ijk, a)).sum()
        })
        .collect();
    ScalarField { grid: g, data }
}

/// D·u (central) at every window node.
pub fn divergence_central(u: &VectorField) -> ScalarField {
    let g = *u.grid();
    let data = (0..g.len())
        .map(|l| {
            let ijk = g.unravel(l);
            Axis::ALL.iter().map(|&a| d_central_at(u.component(a), ijk, a)).sum()
        })
        .collect();
    ScalarField { grid: g, data }
}

// ---------------------------------------------------------------------------
// Norms

/// Index set a norm or inner product runs over.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    /// Every node of the window (the whole lattice for compactly
    /// supported fields).
    Window,
    /// Ω_h.
    Interior(&'a DomainMask),
    /// Ω_h ∖ ∂Ω_h.
    Inner(&'a DomainMask),
    /// An explicit list of linear indices.
    Nodes(&'a [usize]),
}

impl Region<'_> {
    fn visit(&self, len: usize, mut f: impl FnMut(usize)) {
        match self {
            Region::Window => (0..len).for_each(f),
            Region::Interior(m) => m.interior_nodes().iter().for_each(|&l| f(l)),
            Region::Inner(m) => m.inner_nodes().iter().for_each(|&l| f(l)),
            Region::Nodes(ls) => ls.iter().for_each(|&l| f(l)),
        }
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// ‖f‖_{p,A} = (Σ_{x∈A} |f(x)|ᵖ h³)^{1/p}; `p = ∞` gives max |f|.
/// An empty index set has norm 0.
pub fn lp_norm(f: &ScalarField, p: f64, over: Region<'_>) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Argument(format!("norm exponent must be >= 1, got {p}")));
    }
    let data = f.data();
    if p.is_infinite() {
        let mut m = 0.0f64;
        over.visit(data.len(), |l| m = m.max(data[l].abs()));
        return Ok(m);
    }
    Ok(lp_norm_pow(f, p, over)?.powf(1.0 / p))
}

/// ‖f‖ᵖ_{p,A}, without the final root.
pub fn lp_norm_pow(f: &ScalarField, p: f64, over: Region<'_>) -> Result<f64> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::Argument(format!("norm exponent must be finite and >= 1, got {p}")));
    }
    let data = f.data();
    let mut terms = Vec::new();
    over.visit(data.len(), |l| terms.push(abs_pow(data[l], p)));
    Ok(pairwise_sum(&terms) * f.grid().cell_volume())
}

#[inline]
pub(crate) fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else {
        a.powf(p)
    }
}

/// (f, g)_{2,A} = Σ_{x∈A} f(x)g(x)h³.
pub fn inner_product(f: &ScalarField, g: &ScalarField, over: Region<'_>) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::Argument("inner product of fields on different grids".into()));
    }
    let (a, b) = (f.data(), g.data());
    let mut terms = Vec::new();
    over.visit(a.len(), |l| terms.push(a[l] * b[l]));
    Ok(pairwise_sum(&terms) * f.grid().cell_volume())
}

/// (u, w)_{2,A} for vector fields.
pub fn inner_product_vec(u: &VectorField, w: &VectorField, over: Region<'_>) -> Result<f64> {
    if u.grid() != w.grid() {
        return Err(Error::Argument("inner product of fields on different grids".into()));
    }
    let mut terms = Vec::new();
    over.visit(u.grid().len(), |l| {
        let (a, b) = (u.at(l), w.at(l));
        terms.push(a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
    });
    Ok(pairwise_sum(&terms) * u.grid().cell_volume())
}

/// ‖u‖²_{2,A} for a vector field, |u| Euclidean.
pub fn l2_norm_sq_vec(u: &VectorField, over: Region<'_>) -> f64 {
    let mut terms = Vec::new();
    over.visit(u.grid().len(), |l| {
        let a = u.at(l);
        terms.push(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    });
    pairwise_sum(&terms) * u.grid().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, h: f64) -> GridSpec {
        GridSpec::new(h, [0, 0, 0], [n, n, n]).unwrap()
    }

    #[test]
    fn axis_rejects_bad_index() {
        assert!(Axis::from_index(0).is_err());
        assert!(Axis::from_index(4).is_err());
        assert_eq!(Axis::from_index(2).unwrap(), Axis::Y);
    }

    #[test]
    fn grid_rejects_small_dims() {
        assert!(GridSpec::new(0.1, [0; 3], [3, 8, 8]).is_err());
        assert!(GridSpec::new(-0.1, [0; 3], [8, 8, 8]).is_err());
    }

    #[test]
    fn constant_has_zero_differences_inside() {
        let g = grid(8, 0.25);
        let f = ScalarField::from_fn(g, |_| 3.5);
        let fp = forward_diff(&f, Axis::X);
        let fm = backward_diff(&f, Axis::Z);
        for l in 0..g.len() {
            let [i, j, k] = g.unravel(l);
            if (1..7).contains(&i) && (1..7).contains(&j) && (1..7).contains(&k) {
                assert_eq!(fp.data()[l], 0.0);
                assert_eq!(fm.data()[l], 0.0);
            }
        }
    }

    #[test]
    fn one_sided_difference_is_exact_on_linear() {
        let h = 0.125;
        let g = grid(8, h);
        let f = ScalarField::from_fn(g, |x| x[0]);
        let d = forward_diff(&f, Axis::X);
        let l = g.index([3, 4, 2]).unwrap();
        assert!((d.data()[l] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indicator_stencil() {
        let h = 0.5;
        let g = grid(6, h);
        let mut f = ScalarField::zeros(g);
        let x0 = g.index([3, 3, 3]).unwrap();
        f.data_mut()[x0] = 1.0;
        let d = forward_diff(&f, Axis::X);
        assert_eq!(d.data()[g.index([2, 3, 3]).unwrap()], 1.0 / h);
        assert_eq!(d.data()[x0], -1.0 / h);
    }

    #[test]
    fn central_and_second_difference_on_quadratic() {
        let h = 0.1;
        let g = grid(10, h);
        let f = ScalarField::from_fn(g, |x| x[0] * x[0]);
        let ijk = [4, 5, 5];
        let a = g.position_ijk(ijk)[0];
        assert!((d_central_at(&f, ijk, Axis::X) - 2.0 * a).abs() < 1e-12);
        assert!((d2_at(&f, ijk, Axis::X) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn stencil_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = grid(7, 0.3);
        let f = ScalarField::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        for axis in Axis::ALL {
            let dmdp = backward_diff(&forward_diff(&f, axis), axis);
            let d2 = second_diff(&f, axis);
            let c = central_diff(&f, axis);
            let avg = forward_diff(&f, axis).lincomb(0.5, &backward_diff(&f, axis), 0.5);
            for l in 0..g.len() {
                let [i, j, k] = g.unravel(l);
                // D⁻(D⁺f) reads D⁺f zero-extended, so compare away from the edge.
                if [i, j, k].iter().all(|&c| (1..6).contains(&c)) {
                    assert!((dmdp.data()[l] - d2.data()[l]).abs() < 1e-12);
                }
                assert!((c.data()[l] - avg.data()[l]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norms_of_constants() {
        let h = 0.2;
        let g = grid(5, h);
        let f = ScalarField::from_fn(g, |_| 1.0);
        let n = g.len() as f64;
        assert!((lp_norm(&f, 1.0, Region::Window).unwrap() - n * h * h * h).abs() < 1e-12);
        assert_eq!(lp_norm(&f, f64::INFINITY, Region::Window).unwrap(), 1.0);
        assert_eq!(lp_norm(&f, 2.0, Region::Nodes(&[])).unwrap(), 0.0);
        assert!(lp_norm(&f, 0.5, Region::Window).is_err());
    }

    #[test]
    fn norms_match_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 0.37;
        let g = grid(4, h);
        let f = ScalarField::from_fn(g, |_| rng.gen_range(-2.0..2.0));
        let w = ScalarField::from_fn(g, |_| rng.gen_range(-2.0..2.0));
        let mut s2 = 0.0;
        let mut ip = 0.0;
        for l in 0..g.len() {
            s2 += f.data()[l] * f.data()[l] * h * h * h;
            ip += f.data()[l] * w.data()[l] * h * h * h;
        }
        let n2 = lp_norm(&f, 2.0, Region::Window).unwrap();
        assert!((n2 - s2.sqrt()).abs() <= 1e-14 * s2.sqrt());
        let got = inner_product(&f, &w, Region::Window).unwrap();
        assert!((got - ip).abs() <= 1e-14 * ip.abs().max(1e-300) * 10.0);
        let ff = inner_product(&f, &f, Region::Window).unwrap();
        assert!((ff - n2 * n2).abs() < 1e-13 * ff);
    }

    #[test]
    fn orthogonal_indicators() {
        let g = grid(4, 1.0);
        let mut a = ScalarField::zeros(g);
        let mut b = ScalarField::zeros(g);
        a.data_mut()[5] = 1.0;
        b.data_mut()[6] = 1.0;
        assert_eq!(inner_product(&a, &b, Region::Window).unwrap(), 0.0);
    }

    #[test]
    fn box_discretization_follows_cube_containment() {
        let h = 0.25;
        let domain = Domain::cube(1.0);
        let mask = DomainMask::for_domain(&domain, h).unwrap();
        let g = mask.grid();
        for l in 0..g.len() {
            let x = g.position(l);
            // [x−h, x+h) ⊂ (−1, 1) ⇔ x > −1 + h and x ≤ 1 − h.
            let expect = x.iter().all(|&c| c > -1.0 + h + 1e-12 && c <= 1.0 - h + 1e-12);
            assert_eq!(mask.is_interior(l), expect, "node {x:?}");
        }
        for &l in mask.boundary_nodes() {
            assert!(mask.is_interior(l));
        }
        assert!(!mask.inner_nodes().is_empty());
    }

    #[test]
    fn ball_mask_is_inside_ball() {
        let h = 0.1;
        let mask = DomainMask::for_domain(&Domain::ball([0.0; 3], 0.8), h).unwrap();
        for &l in mask.interior_nodes() {
            let x = mask.grid().position(l);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            assert!(r + h <= 0.8 + 1e-12);
        }
    }
}
