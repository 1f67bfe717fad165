//! Node-level curvature of the invariant connection `A = Σ f_i σ_i ⊗ e_i`.
//!
//! `F_i = p_i dt∧σ_i + q_i σ_j∧σ_k` with `p_i = f_i′`, `q_i = f_j f_k − f_i`.
//! Derivatives use 4th-order centered stencils, dropping to 2nd order next
//! to the ends. Embedding into the generic fiber identifies `(dt, σ_1, σ_2, σ_3)`
//! with `(e⁰, e¹, e², e³)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::profile::ProfileGrid;
use crate::defpoint::{connection_sign_of, metric_reconstruct, normalize_unchecked};
use crate::error::{Error, Result};
use crate::forms4::{TwoForm, VolumeCoeff};
use crate::sym3::Sym3;

pub(crate) fn cyc(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

/// `d/dt` at interior node `k` of values given at all `n + 2` nodes.
pub fn d_full(y: &[f64], k: usize, h: f64) -> f64 {
    let j = k + 1;
    if j >= 2 && j + 2 < y.len() {
        (-y[j + 2] + 8.0 * y[j + 1] - 8.0 * y[j - 1] + y[j - 2]) / (12.0 * h)
    } else {
        (y[j + 1] - y[j - 1]) / (2.0 * h)
    }
}

/// `d/dt` at index `k` of values known only at interior nodes.
pub fn d_interior(z: &[f64], k: usize, h: f64) -> f64 {
    let n = z.len();
    if k >= 2 && k + 2 < n {
        (-z[k + 2] + 8.0 * z[k + 1] - 8.0 * z[k - 1] + z[k - 2]) / (12.0 * h)
    } else if k >= 1 && k + 1 < n {
        (z[k + 1] - z[k - 1]) / (2.0 * h)
    } else if k == 0 {
        (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * h)
    } else {
        (3.0 * z[n - 1] - 4.0 * z[n - 2] + z[n - 3]) / (2.0 * h)
    }
}

/// Invariant curvature components at the interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzCurvature {
    pub t: Vec<f64>,
    pub p: Vec<[f64; 3]>,
    pub q: Vec<[f64; 3]>,
}

pub fn q_of(f: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyc(i);
        f[j] * f[k] - f[i]
    })
}

pub fn ansatz_curvature(prof: &ProfileGrid) -> AnsatzCurvature {
    let full = prof.full_nodes();
    let h = prof.h();
    let comps: [Vec<f64>; 3] = std::array::from_fn(|i| full.iter().map(|f| f[i]).collect());
    let p = (0..prof.n())
        .map(|k| std::array::from_fn(|i| d_full(&comps[i], k, h)))
        .collect();
    let q = prof.f.iter().map(q_of).collect();
    AnsatzCurvature { t: prof.t_grid(), p, q }
}

/// `F_i = p_i e⁰∧eⁱ + q_i eʲ∧eᵏ`.
pub fn embed(p: &[f64; 3], q: &[f64; 3]) -> [TwoForm; 3] {
    std::array::from_fn(|i| {
        let (j, k) = cyc(i);
        TwoForm::elementary(0, i + 1) * p[i] + TwoForm::elementary(j + 1, k + 1) * q[i]
    })
}

/// `M = diag(2 p_i q_i)` against `dt∧σ_1∧σ_2∧σ_3`.
pub fn gram_on_grid(c: &AnsatzCurvature) -> Vec<Sym3> {
    c.p.iter()
        .zip(&c.q)
        .map(|(p, q)| Sym3::diag(2.0 * p[0] * q[0], 2.0 * p[1] * q[1], 2.0 * p[2] * q[2]))
        .collect()
}

fn diag_sign_kappa(s: i8) -> i8 {
    static KAPPA: OnceLock<[i8; 2]> = OnceLock::new();
    let k = KAPPA.get_or_init(|| {
        let plus = connection_sign_of(&[0, 1, 2].map(TwoForm::omega)).expect("standard triple is definite");
        let minus = connection_sign_of(&[0, 1, 2].map(TwoForm::omega_bar)).expect("standard triple is definite");
        [plus, minus]
    });
    if s > 0 {
        k[0]
    } else {
        k[1]
    }
}

/// Induced orientation `s` and connection sign of a diagonal point, or
/// `None` when the products `p_i q_i` do not share a strict sign.
pub fn diagonal_signs(p: &[f64; 3], q: &[f64; 3]) -> Option<(i8, i8)> {
    let m: [f64; 3] = std::array::from_fn(|i| p[i] * q[i]);
    let s: i8 = if m.iter().all(|&x| x > 0.0) {
        1
    } else if m.iter().all(|&x| x < 0.0) {
        -1
    } else {
        return None;
    };
    let orient = if p[0] * p[1] * p[2] > 0.0 { 1 } else { -1 };
    Some((s, orient * diag_sign_kappa(s)))
}

/// `g_A = α² dt² + Σ β_i² σ_i²` at a diagonal point, from self-duality of
/// each `F_i` and `√det g_A = ν_A = (Σ √(s m_i))² / Λ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMetric {
    pub alpha2: f64,
    pub beta2: [f64; 3],
    pub nu_a: f64,
}

pub fn diagonal_metric(p: &[f64; 3], q: &[f64; 3], lambda: f64) -> Option<DiagonalMetric> {
    let (s, _) = diagonal_signs(p, q)?;
    let s = f64::from(s);
    let t: f64 = (0..3).map(|i| (s * 2.0 * p[i] * q[i]).sqrt()).sum();
    let nu_a = t * t / (lambda * lambda);
    let r: [f64; 3] = std::array::from_fn(|i| (p[i] / q[i]).abs());
    let alpha2 = (nu_a * r[0] * r[1] * r[2]).sqrt();
    Some(DiagonalMetric {
        alpha2,
        beta2: r.map(|ri| nu_a * ri / alpha2),
        nu_a,
    })
}

/// `g_A` at node `k` by the generic reconstruction; returns the diagonal
/// entries and the largest off-diagonal entry relative to the diagonal.
pub fn reconstructed_metric(p: &[f64; 3], q: &[f64; 3], lambda: f64) -> Result<(DiagonalMetric, f64)> {
    let f = embed(p, q);
    let (nu_a, _) = normalize_unchecked(&f, lambda, VolumeCoeff::STD)?;
    let g = metric_reconstruct(&f, nu_a)?;
    let m = g.matrix();
    let diag_max = (0..4).map(|i| m[(i, i)]).fold(0.0, f64::max);
    let mut off = 0.0_f64;
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                off = off.max(m[(a, b)].abs());
            }
        }
    }
    Ok((
        DiagonalMetric {
            alpha2: m[(0, 0)],
            beta2: [m[(1, 1)], m[(2, 2)], m[(3, 3)]],
            nu_a: nu_a.0,
        },
        off / diag_max,
    ))
}

/// Components `(P_i, Q_i)` of `Φ_i = P_i dt∧σ_i + Q_i σ_j∧σ_k` at a diagonal point.
pub fn phi_components(p: &[f64; 3], q: &[f64; 3], lambda: f64) -> Option<([f64; 3], [f64; 3])> {
    let (s, sign) = diagonal_signs(p, q)?;
    let sf = f64::from(s);
    let root: [f64; 3] = std::array::from_fn(|i| (sf * 2.0 * p[i] * q[i]).sqrt());
    let t: f64 = root.iter().sum();
    // (M_A^{-1/2})_ii = T / (|Λ| √(s m_i))
    let c: [f64; 3] = std::array::from_fn(|i| f64::from(sign) * t / (lambda.abs() * root[i]));
    Some((std::array::from_fn(|i| c[i] * p[i]), std::array::from_fn(|i| c[i] * q[i])))
}

/// Coefficients of `dt∧σ_j∧σ_k` in `d_A Φ_A`, by finite differences:
/// `R_i = Q_i′ + P_i − f_j P_k − f_k P_j`.
pub fn el_residual(prof: &ProfileGrid) -> Result<Vec<[f64; 3]>> {
    let c = ansatz_curvature(prof);
    let n = prof.n();
    let mut pp = Vec::with_capacity(n);
    let mut qq: [Vec<f64>; 3] = Default::default();
    for k in 0..n {
        let (pk, qk) = phi_components(&c.p[k], &c.q[k], prof.lambda).ok_or(Error::DefinitenessLost {
            cell: k,
            t: prof.t(k),
        })?;
        pp.push(pk);
        for i in 0..3 {
            qq[i].push(qk[i]);
        }
    }
    let h = prof.h();
    Ok((0..n)
        .map(|k| {
            let f = prof.f[k];
            std::array::from_fn(|i| {
                let (j, l) = cyc(i);
                d_interior(&qq[i], k, h) + pp[k][i] - f[j] * pp[k][l] - f[l] * pp[k][j]
            })
        })
        .collect())
}

/// A sign change or exact zero of an eigenvalue `m_i = 2 p_i q_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub index: usize,
}

pub fn eigen_crossing_scan(prof: &ProfileGrid) -> Vec<Crossing> {
    let c = ansatz_curvature(prof);
    let m: Vec<[f64; 3]> = c.p.iter().zip(&c.q).map(|(p, q)| std::array::from_fn(|i| 2.0 * p[i] * q[i])).collect();
    let mut out = Vec::new();
    for i in 0..3 {
        for k in 0..m.len() {
            let a = m[k][i];
            if a == 0.0 {
                out.push(Crossing { t: c.t[k], index: i });
            } else if k + 1 < m.len() {
                let b = m[k + 1][i];
                if a * b < 0.0 {
                    let t = c.t[k] + (c.t[k + 1] - c.t[k]) * a / (a - b);
                    out.push(Crossing { t, index: i });
                }
            }
        }
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t));
    out
}

/// Sectional curvatures of `g_A = α²dt² + β²Σσ_i²` for an isotropic profile,
/// written as `ds² + φ(s)² g_{S³}` with `φ = 2β`:
/// `K_rad = −φ_ss/φ`, `K_tan = (1 − φ_s²)/φ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionalCheck {
    pub t: Vec<f64>,
    pub k_rad: Vec<f64>,
    pub k_tan: Vec<f64>,
    pub mean: f64,
    pub max_rel_deviation: f64,
    pub max_anisotropy: f64,
    pub max_off_diagonal: f64,
}

/// Nodes excluded at each end, where the stencils become one-sided.
pub const SECTIONAL_EDGE: usize = 4;

pub fn sectional_curvature_check(prof: &ProfileGrid) -> Result<SectionalCheck> {
    let c = ansatz_curvature(prof);
    let n = prof.n();
    let h = prof.h();
    let mut alpha = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    let mut aniso = 0.0_f64;
    let mut off = 0.0_f64;
    for k in 0..n {
        let (g, o) = reconstructed_metric(&c.p[k], &c.q[k], prof.lambda)?;
        let b = g.beta2;
        let bmax = b.iter().fold(0.0_f64, |a, &x| a.max(x));
        let bmin = b.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        aniso = aniso.max((bmax - bmin) / bmax);
        off = off.max(o);
        alpha.push(g.alpha2.sqrt());
        phi.push(2.0 * (b.iter().sum::<f64>() / 3.0).sqrt());
    }
    let phi_s: Vec<f64> = (0..n).map(|k| d_interior(&phi, k, h) / alpha[k]).collect();
    let phi_ss: Vec<f64> = (0..n).map(|k| d_interior(&phi_s, k, h) / alpha[k]).collect();
    let range = SECTIONAL_EDGE..n - SECTIONAL_EDGE;
    let k_rad: Vec<f64> = range.clone().map(|k| -phi_ss[k] / phi[k]).collect();
    let k_tan: Vec<f64> = range.clone().map(|k| (1.0 - phi_s[k] * phi_s[k]) / (phi[k] * phi[k])).collect();
    let all: Vec<f64> = k_rad.iter().chain(&k_tan).copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let dev = all.iter().map(|k| ((k - mean) / mean).abs()).fold(0.0, f64::max);
    Ok(SectionalCheck {
        t: range.map(|k| prof.t(k)).collect(),
        k_rad,
        k_tan,
        mean,
        max_rel_deviation: dev,
        max_anisotropy: aniso,
        max_off_diagonal: off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohom1::profile::{linear, perturbed_s4, round_s4, Boundary, DEFAULT_ANISOTROPY};
    use crate::defpoint::{connection_sign_of, curvature_gram};
    use crate::forms4::OneForm;

    fn constant(c: f64) -> ProfileGrid {
        ProfileGrid::new(0.0, 1.0, 1.0, vec![[c; 3]; 20], Boundary { left: [c; 3], right: [c; 3] }).unwrap()
    }

    #[test]
    fn constant_profile_curvature() {
        let c = ansatz_curvature(&constant(0.7));
        for k in 0..c.t.len() {
            assert!(c.p[k].iter().all(|x| x.abs() < 1e-12));
            assert!(c.q[k].iter().all(|x| (x - (0.49 - 0.7)).abs() < 1e-15));
        }
        let z = ansatz_curvature(&constant(0.0));
        assert!(z.p.iter().chain(&z.q).flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_profile_curvature() {
        let prof = linear(40, -3.0).unwrap();
        let c = ansatz_curvature(&prof);
        for k in 0..prof.n() {
            let t = prof.t(k);
            assert!(c.p[k].iter().all(|x| (x - 1.0).abs() < 1e-12));
            assert!(c.q[k].iter().all(|x| (x - (t * t - t)).abs() < 1e-15));
        }
        for m in gram_on_grid(&c) {
            assert!(m.0[0] < 0.0 && m.0[1] == 0.0 && m.0[3] == 0.0 && m.0[4] == 0.0);
        }
    }

    /// `F = dA + ½[A∧A]` with `dσ_i = −σ_j∧σ_k`, built from generic forms.
    fn generic_curvature(f: [f64; 3], df: [f64; 3]) -> [TwoForm; 3] {
        let sigma = |i: usize| OneForm::basis(i + 1);
        let dt = OneForm::basis(0);
        std::array::from_fn(|i| {
            let (j, k) = cyc(i);
            let d_a = dt.wedge(&sigma(i)) * df[i] - sigma(j).wedge(&sigma(k)) * f[i];
            let mut br = TwoForm::ZERO;
            for a in 0..3 {
                for b in 0..3 {
                    let e = crate::forms4::levi_civita3(i, a, b);
                    if e != 0.0 {
                        br = br + sigma(a).wedge(&sigma(b)) * (0.5 * e * f[a] * f[b]);
                    }
                }
            }
            d_a + br
        })
    }

    #[test]
    fn embedding_matches_generic_curvature() {
        let prof = perturbed_s4(64, 0.05, DEFAULT_ANISOTROPY).unwrap();
        let c = ansatz_curvature(&prof);
        let full = prof.full_nodes();
        let h = prof.h();
        for k in [5, 20, 40] {
            let df = std::array::from_fn(|i| (full[k + 2][i] - full[k][i]) / (2.0 * h));
            let oracle = generic_curvature(prof.f[k], df);
            let ours = embed(&c.p[k], &c.q[k]);
            for i in 0..3 {
                assert!((oracle[i] - ours[i]).max_abs() < 1e-3);
            }
            let g1 = curvature_gram(&ours, VolumeCoeff::STD).unwrap();
            let g2 = gram_on_grid(&c)[k];
            assert!((g1 - g2).frobenius() < 1e-14);
        }
    }

    #[test]
    fn isotropic_gram_is_scalar() {
        let prof = round_s4(64).unwrap();
        for m in gram_on_grid(&ansatz_curvature(&prof)) {
            assert!((m.0[0] - m.0[2]).abs() < 1e-14 && (m.0[0] - m.0[5]).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_signs_match_generic() {
        for (p, q) in [
            ([1.0, 2.0, 0.5], [0.3, 0.1, 2.0]),
            ([-1.0, 2.0, 0.5], [-0.3, 0.1, 2.0]),
            ([1.0, 2.0, 0.5], [-0.3, -0.1, -2.0]),
            ([-1.0, -2.0, -0.5], [0.3, 0.1, 2.0]),
        ] {
            let (_, sign) = diagonal_signs(&p, &q).unwrap();
            assert_eq!(sign, connection_sign_of(&embed(&p, &q)).unwrap());
        }
        assert!(diagonal_signs(&[1.0, 1.0, 1.0], &[1.0, -1.0, 1.0]).is_none());
    }

    #[test]
    fn round_profile_has_preset_sign() {
        let prof = round_s4(64).unwrap();
        let c = ansatz_curvature(&prof);
        let (_, sign) = diagonal_signs(&c.p[30], &c.q[30]).unwrap();
        assert_eq!(f64::from(sign), prof.lambda.signum());
    }

    #[test]
    fn diagonal_metric_matches_reconstruction() {
        let p = [0.4, -0.2, 0.9];
        let q = [0.5, -1.5, 0.25];
        let d = diagonal_metric(&p, &q, 2.0).unwrap();
        let (g, off) = reconstructed_metric(&p, &q, 2.0).unwrap();
        assert!(off < 1e-14);
        assert!((d.alpha2 - g.alpha2).abs() < 1e-12 * g.alpha2);
        for i in 0..3 {
            assert!((d.beta2[i] - g.beta2[i]).abs() < 1e-12 * g.beta2[i]);
        }
    }

    #[test]
    fn residual_vanishes_for_isotropic_profiles() {
        let sup_at = |n| {
            let r = el_residual(&round_s4(n).unwrap()).unwrap();
            r.iter().flatten().fold(0.0_f64, |a, &x| a.max(x.abs()))
        };
        let (coarse, fine) = (sup_at(128), sup_at(256));
        assert!(fine < 1e-5 && fine < coarse / 3.0, "{coarse} {fine}");
        let pert = perturbed_s4(256, 0.05, DEFAULT_ANISOTROPY).unwrap();
        let sup = el_residual(&pert).unwrap().iter().flatten().fold(0.0_f64, |a, &x| a.max(x.abs()));
        assert!(sup > 1e-3);
    }

    #[test]
    fn crossing_scan() {
        let round = round_s4(128).unwrap();
        assert!(eigen_crossing_scan(&round).is_empty());
        let t_star = (5.0_f64 / 6.0).acos();
        let counts: Vec<usize> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let prof = ProfileGrid::sample(0.0, std::f64::consts::PI, n, -3.0, |t| {
                    let r = 0.5 * (1.0 + t.cos());
                    [r + 0.3 * t.sin().powi(2), r, r]
                })
                .unwrap();
                let cr = eigen_crossing_scan(&prof);
                assert!(cr.iter().any(|c| c.index == 0 && (c.t - t_star).abs() < 5e-3), "{cr:?}");
                cr.len()
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn round_metric_has_constant_curvature() {
        let chk = sectional_curvature_check(&round_s4(256).unwrap()).unwrap();
        assert!(chk.max_rel_deviation < 1e-4, "{}", chk.max_rel_deviation);
        assert!(chk.max_anisotropy < 1e-12 && chk.max_off_diagonal < 1e-12);
    }
}
