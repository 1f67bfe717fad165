//! Oracles shared by the integration tests.
#![allow(dead_code)]

use definite_gauge::cohom1::action::action;
use definite_gauge::cohom1::profile::{bump_direction, round_s4, ProfileGrid};
use nalgebra::Matrix3;
use rand::Rng;

/// Denman–Beavers iteration: `(√M, M^{-1/2})` for SPD `M`.
pub fn db_sqrt(m: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let mut y = *m;
    let mut z = Matrix3::identity();
    for _ in 0..100 {
        let yi = y.try_inverse().unwrap();
        let zi = z.try_inverse().unwrap();
        let (ny, nz) = (0.5 * (y + zi), 0.5 * (z + yi));
        let done = (ny - y).amax() <= 1e-15 * ny.amax();
        y = ny;
        z = nz;
        if done {
            break;
        }
    }
    (y, z)
}

/// Sum of sine modes `1..=modes` with weights in `[−1, 1]` scaled by `1/m`.
pub fn random_modes(p: &ProfileGrid, modes: usize, traceless: bool, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let mut d = vec![[0.0; 3]; p.n()];
    for m in 1..=modes {
        let mut w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if traceless {
            let mean = w.iter().sum::<f64>() / 3.0;
            w = w.map(|x| x - mean);
        }
        let b = bump_direction(p, w.map(|x| x / m as f64), m + 1);
        for (a, x) in d.iter_mut().zip(&b) {
            for i in 0..3 {
                a[i] += x[i];
            }
        }
    }
    d
}

/// Round profile plus a random perturbation of size `amp`, redrawn until definite.
pub fn random_definite_profile(n: usize, amp: f64, rng: &mut impl Rng) -> ProfileGrid {
    let base = round_s4(n).unwrap();
    loop {
        let d = random_modes(&base, 4, false, rng);
        let p = base.perturbed(&d, amp);
        if action(&p).is_ok() {
            return p;
        }
    }
}
