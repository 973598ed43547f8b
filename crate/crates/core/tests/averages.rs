use std::sync::Arc;

use transport_core::fields::{average_initial, average_velocity, TimeGrid};
use transport_core::presets::{Gaussian, Initial, Modulated, Rotation, Velocity};
use transport_core::{Domain, DomainMask, GridSpec};

/// Composite midpoint rule on `[lo, lo + w]^d` with `n` points per axis.
fn midpoint<const D: usize>(lo: [f64; D], w: [f64; D], n: usize, f: &mut impl FnMut([f64; D]) -> f64) -> f64 {
    let mut idx = [0usize; D];
    let mut sum = 0.0;
    loop {
        let mut p = [0.0; D];
        for a in 0..D {
            p[a] = lo[a] + (idx[a] as f64 + 0.5) * w[a] / n as f64;
        }
        sum += f(p);
        let mut a = 0;
        loop {
            if a == D {
                return sum / (n as f64).powi(D as i32);
            }
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Midpoint at `n` and `2n` combined to cancel the `O(n⁻²)` term.
fn extrapolated<const D: usize>(lo: [f64; D], w: [f64; D], n: usize, mut f: impl FnMut([f64; D]) -> f64) -> f64 {
    let coarse = midpoint(lo, w, n, &mut f);
    let fine = midpoint(lo, w, 2 * n, &mut f);
    (4.0 * fine - coarse) / 3.0
}

#[test]
fn gaussian_cell_average_matches_midpoint_oracle() {
    let f0 = Gaussian::new([0.05, -0.1, 0.02], 0.2, 1.0, 0.6, 0.9).unwrap();
    let h = 1.0 / 16.0;
    let grid = GridSpec::new(h, [-8; 3], [16; 3]).unwrap();
    let avg = average_initial(&f0, &grid, 3).unwrap();
    for ijk in [[8, 8, 8], [9, 6, 8], [11, 8, 10]] {
        let x = grid.position_ijk(ijk);
        let lo = [x[0] - h / 2.0, x[1] - h / 2.0, x[2] - h / 2.0];
        let oracle = extrapolated(lo, [h; 3], 24, |y| f0.eval(y));
        let got = avg.get(ijk);
        assert!((got - oracle).abs() <= 1e-6, "{ijk:?}: {got} vs {oracle}");
    }
}

#[test]
fn rotation_space_time_average_matches_midpoint_oracle() {
    let inner = Arc::new(Rotation::new(1.0, [0.0; 3], 0.4, 0.8).unwrap());
    let v = Modulated::new(inner, 0.5, 0.6).unwrap();
    let h = 1.0 / 16.0;
    let mask = DomainMask::for_domain(&Domain::cube(1.0), h).unwrap();
    let time = TimeGrid::new(0.1, 1.0).unwrap();
    let n = 3;
    let u = average_velocity(&v, &mask, &time, n, 3).unwrap();
    let grid = *mask.grid();
    for x in [[0.25, 0.125, 0.0], [0.5, -0.375, 0.125], [-0.625, 0.25, -0.25], [0.0625, 0.5625, 0.0]] {
        let l = grid.nearest(x).unwrap();
        assert!(mask.is_interior(l));
        let c = grid.position(l);
        for a in 0..3 {
            let lo = [time.time(n), c[0] - h / 2.0, c[1] - h / 2.0, c[2] - h / 2.0];
            let oracle = extrapolated(lo, [time.tau(), h, h, h], 10, |p| v.eval(p[0], [p[1], p[2], p[3]])[a]);
            let got = u.at(l)[a];
            assert!((got - oracle).abs() <= 1e-6, "{x:?}[{a}]: {got} vs {oracle}");
        }
    }
}
