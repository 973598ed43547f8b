//! Dense direct-solve oracles shared by the integration tests. They build
//! the linear systems straight from the lattice stencils and solve them
//! with LU, independently of the library's operators and Krylov solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use transport_core::{Axis, DomainMask, GridSpec, ScalarField, VectorField};

/// An `n³` window with spacing `1/n` and a random Ω_h: every node off the
/// window edge is kept with probability `keep`, and a few inner nodes are
/// always present so that `I` is not empty.
pub fn random_mask(rng: &mut impl Rng, n: usize, keep: f64) -> DomainMask {
    let grid = GridSpec::new(1.0 / n as f64, [0; 3], [n; 3]).unwrap();
    loop {
        let interior: Vec<bool> = (0..grid.len())
            .map(|l| {
                let p = grid.unravel(l);
                let edge = p.iter().any(|&c| c == 0 || c == n as i64 - 1);
                !edge && rng.gen_bool(keep)
            })
            .collect();
        let mask = DomainMask::from_interior(grid, interior).unwrap();
        if mask.inner_nodes().len() >= 4 {
            return mask;
        }
    }
}

pub fn random_vector_field(rng: &mut impl Rng, grid: GridSpec, scale: f64) -> VectorField {
    VectorField::from_fn(grid, |_| {
        [rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)]
    })
}

/// Random values on `I`, zero elsewhere.
pub fn random_inner_field(rng: &mut impl Rng, mask: &DomainMask, scale: f64) -> ScalarField {
    let mut g = ScalarField::zeros(*mask.grid());
    for &l in mask.inner_nodes() {
        g.data_mut()[l] = rng.gen_range(-scale..scale);
    }
    g
}

fn unknowns(mask: &DomainMask) -> (Vec<usize>, Vec<Option<usize>>) {
    let nodes = mask.inner_nodes().to_vec();
    let mut pos = vec![None; mask.grid().len()];
    for (k, &l) in nodes.iter().enumerate() {
        pos[l] = Some(k);
    }
    (nodes, pos)
}

fn neighbour(grid: &GridSpec, l: usize, axis: usize, s: i64) -> Option<usize> {
    let mut p = grid.unravel(l);
    p[axis] += s;
    grid.index(p)
}

/// Dense Hodge decomposition: `φ` on `I` solves
/// `Σⱼ D⁻ⱼ(χ_I D⁺ⱼφ) = Σⱼ D⁻ⱼ(χ_I uⱼ)` on `I`, and `w = χ_I(u − D⁺φ)`.
pub fn dense_hodge(u: &VectorField, mask: &DomainMask) -> (VectorField, ScalarField) {
    let grid = *mask.grid();
    let h = grid.h();
    let (nodes, pos) = unknowns(mask);
    let n = nodes.len();
    let chi = |l: usize| mask.is_inner(l);
    // D⁺ⱼ of a unit vector at unknown c, evaluated at node m, times χ_I(m).
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (r, &x) in nodes.iter().enumerate() {
        for axis in 0..3 {
            let back = neighbour(&grid, x, axis, -1).unwrap();
            // D⁻ⱼ F(x) = (F(x) − F(x − eʲ))/h with F = χ_I D⁺ⱼφ.
            for (node, sign) in [(x, 1.0), (back, -1.0)] {
                if !chi(node) {
                    continue;
                }
                let fwd = neighbour(&grid, node, axis, 1).unwrap();
                // D⁺ⱼφ(node) = (φ(fwd) − φ(node))/h.
                for (m, s) in [(fwd, 1.0), (node, -1.0)] {
                    if let Some(c) = pos[m] {
                        a[(r, c)] += sign * s / (h * h);
                    }
                }
                b[r] += sign * u.component(Axis::ALL[axis]).data()[node] / h;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("Hodge system is nonsingular");
    let mut phi = ScalarField::zeros(grid);
    for (k, &l) in nodes.iter().enumerate() {
        phi.data_mut()[l] = sol[k];
    }
    let mut w = VectorField::zeros(grid);
    for l in 0..grid.len() {
        if !chi(l) {
            continue;
        }
        let mut v = u.at(l);
        for axis in 0..3 {
            let fwd = neighbour(&grid, l, axis, 1).unwrap();
            v[axis] -= (phi.data()[fwd] - phi.data()[l]) / h;
        }
        w.set(l, v);
    }
    (w, phi)
}

/// Dense implicit step: for `x ∈ I`,
/// `y(x) + (τ/2)Σⱼ[wⱼ(x − heʲ)D⁺ⱼy(x − heʲ) + wⱼ(x)D⁺ⱼy(x)] = g(x)`, `y = 0` off `I`.
pub fn dense_implicit_step(g: &ScalarField, w: &VectorField, tau: f64, mask: &DomainMask) -> ScalarField {
    let grid = *mask.grid();
    let h = grid.h();
    let (nodes, pos) = unknowns(mask);
    let n = nodes.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (r, &x) in nodes.iter().enumerate() {
        b[r] = g.data()[x];
        for axis in 0..3 {
            let wc = w.component(Axis::ALL[axis]).data();
            let back = neighbour(&grid, x, axis, -1).unwrap();
            let fwd = neighbour(&grid, x, axis, 1).unwrap();
            // wⱼ(x − eʲ)(y(x) − y(x − eʲ))/h + wⱼ(x)(y(x + eʲ) − y(x))/h
            let terms = [(x, wc[back]), (back, -wc[back]), (fwd, wc[x]), (x, -wc[x])];
            for (m, coef) in terms {
                if let Some(c) = pos[m] {
                    a[(r, c)] += 0.5 * tau * coef / h;
                }
            }
        }
    }
    let sol = a.lu().solve(&b).expect("step matrix is nonsingular");
    let mut y = ScalarField::zeros(grid);
    for (k, &l) in nodes.iter().enumerate() {
        y.data_mut()[l] = sol[k];
    }
    y
}

pub fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.data().iter().zip(b.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_diff_vec(a: &VectorField, b: &VectorField) -> f64 {
    Axis::ALL.iter().map(|&ax| max_diff(a.component(ax), b.component(ax))).fold(0.0, f64::max)
}

/// `max_I |D⁻·w|` evaluated directly.
pub fn divergence_on_inner(w: &VectorField, mask: &DomainMask) -> f64 {
    let grid = *mask.grid();
    let h = grid.h();
    let mut m = 0.0f64;
    for &l in mask.inner_nodes() {
        let mut s = 0.0;
        for axis in 0..3 {
            let back = neighbour(&grid, l, axis, -1).unwrap();
            let c = w.component(Axis::ALL[axis]).data();
            s += (c[l] - c[back]) / h;
        }
        m = m.max(s.abs());
    }
    m
}
