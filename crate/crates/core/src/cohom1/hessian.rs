//! Second variation of `S_h` along profile perturbations.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::action::{action, discrete_residual, sup_norm};
use super::profile::{bump_direction, ProfileGrid};
use crate::error::{Error, Result};

/// Residual sup-norm above which the base point is not treated as critical.
pub const CRITICAL_TOL: f64 = 1e-6;

/// Default step of the second differences.
pub const FD_EPS: f64 = 1e-3;

/// Anisotropic weights. Both are orthogonal to `(1, 1, 1)`, the direction
/// of reparametrizations at an isotropic profile.
pub const ANISOTROPIC_WEIGHTS: [[f64; 3]; 2] = [[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]];

/// `ANISOTROPIC_WEIGHTS × modes 1..=count/2`, in that order.
pub fn gauge_complement_directions(prof: &ProfileGrid, count: usize) -> Vec<Vec<[f64; 3]>> {
    (0..count)
        .map(|k| bump_direction(prof, ANISOTROPIC_WEIGHTS[k % 2], k / 2 + 1))
        .collect()
}

/// Random traceless combinations of the first `modes` sine modes.
pub fn random_gauge_complement(prof: &ProfileGrid, count: usize, modes: usize, rng: &mut impl Rng) -> Vec<Vec<[f64; 3]>> {
    (0..count)
        .map(|_| {
            let mut d = vec![[0.0; 3]; prof.n()];
            for m in 1..=modes {
                let raw: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let mean = raw.iter().sum::<f64>() / 3.0;
                let b = bump_direction(prof, raw.map(|x| (x - mean) / m as f64), m + 1);
                for (a, x) in d.iter_mut().zip(&b) {
                    for i in 0..3 {
                        a[i] += x[i];
                    }
                }
            }
            d
        })
        .collect()
}

fn combine(a: &[[f64; 3]], b: &[[f64; 3]], sb: f64) -> Vec<[f64; 3]> {
    a.iter().zip(b).map(|(x, y)| std::array::from_fn(|i| x[i] + sb * y[i])).collect()
}

/// `H_kl = [S(+(d_k + d_l)) − S(+(d_k − d_l)) − S(−(d_k − d_l)) + S(−(d_k + d_l))] / 4ε²`.
///
/// Exactly symmetric by construction.
pub fn fd_hessian_with(prof: &ProfileGrid, dirs: &[Vec<[f64; 3]>], eps: f64) -> Result<DMatrix<f64>> {
    let resid = sup_norm(&discrete_residual(prof)?);
    if resid > CRITICAL_TOL {
        return Err(Error::NotCritical {
            residual: resid,
            tol: CRITICAL_TOL,
        });
    }
    if dirs.iter().any(|d| d.len() != prof.n()) {
        return Err(Error::InvalidInput("direction length differs from the grid".into()));
    }
    let m = dirs.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|k| (k..m).map(move |l| (k, l))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let plus = combine(&dirs[k], &dirs[l], 1.0);
            let minus = combine(&dirs[k], &dirs[l], -1.0);
            let s = |d: &[[f64; 3]], e: f64| action(&prof.perturbed(d, e));
            Ok((s(&plus, eps)? - s(&minus, eps)? - s(&minus, -eps)? + s(&plus, -eps)?) / (4.0 * eps * eps))
        })
        .collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(m, m);
    for (&(k, l), v) in pairs.iter().zip(vals) {
        h[(k, l)] = v;
        h[(l, k)] = v;
    }
    Ok(h)
}

pub fn fd_hessian(prof: &ProfileGrid, dirs: &[Vec<[f64; 3]>]) -> Result<DMatrix<f64>> {
    fd_hessian_with(prof, dirs, FD_EPS)
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohom1::action::symbol_quadratic_form;
    use crate::cohom1::profile::{perturbed_s4, round_s4, DEFAULT_ANISOTROPY};
    use crate::sampling::stream;

    #[test]
    fn round_point_is_a_concave_maximum() {
        let p = round_s4(128).unwrap();
        let h = fd_hessian(&p, &gauge_complement_directions(&p, 6)).unwrap();
        let ev = eigenvalues(&h);
        assert!(ev.iter().all(|&x| x < 0.0), "{ev:?}");
        assert!((h.clone() - h.transpose()).amax() == 0.0);
    }

    #[test]
    fn random_directions_are_concave() {
        let p = round_s4(128).unwrap();
        let dirs = random_gauge_complement(&p, 4, 3, &mut stream(5, 0));
        assert!(eigenvalues(&fd_hessian(&p, &dirs).unwrap()).iter().all(|&x| x <= 1e-6));
    }

    #[test]
    fn non_critical_point_is_rejected() {
        let p = perturbed_s4(64, 0.05, DEFAULT_ANISOTROPY).unwrap();
        let d = gauge_complement_directions(&p, 2);
        assert!(matches!(fd_hessian(&p, &d), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn diagonal_matches_symbol_form() {
        let p = round_s4(256).unwrap();
        let dirs = gauge_complement_directions(&p, 3);
        let h = fd_hessian(&p, &dirs).unwrap();
        for (k, d) in dirs.iter().enumerate() {
            let q = symbol_quadratic_form(&p, d).unwrap();
            assert!((h[(k, k)] - q).abs() < 0.05 * q.abs(), "{k}: {} vs {q}", h[(k, k)]);
        }
    }
}
