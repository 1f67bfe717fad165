//! Pointwise algebra of a definite connection.
//!
//! A point sample is the triple of curvature components `F_i` in an oriented
//! orthonormal frame of `E`, together with a candidate Einstein constant `Λ`.
//! Volume coefficients are against `ν_std`, taken positive with respect to
//! the orientation induced by the triple.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms4::{hodge_star2, levi_civita3, levi_civita4, wedge, Metric4, TwoForm, VolumeCoeff};
use crate::sym3::{classify, spd_inv_sqrt, spd_sqrt, Definiteness, Sym3};

/// Relative eigenvalue tolerance used by [`is_definite`].
pub const DEFINITE_REL_TOL: f64 = 1e-12;
/// Self-duality residual accepted by [`metric_reconstruct`].
pub const SELF_DUALITY_TOL: f64 = 1e-9;
/// Relative eigenvalue spread below which `M_A` counts as isotropic.
pub const ISOTROPY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTriple {
    pub f: [TwoForm; 3],
    pub lambda: f64,
}

impl CurvatureTriple {
    pub fn new(f: [TwoForm; 3], lambda: f64) -> Self {
        Self { f, lambda }
    }

    /// `(ω_1, ω_2, ω_3)`.
    pub fn standard(lambda: f64) -> Self {
        Self::new([TwoForm::omega(0), TwoForm::omega(1), TwoForm::omega(2)], lambda)
    }

    /// Frame change `F_i ↦ Σ_j R_ij F_j`.
    pub fn rotated(&self, r: &Matrix3<f64>) -> Self {
        let f = std::array::from_fn(|i| {
            (0..3).fold(TwoForm::ZERO, |acc, j| acc + self.f[j] * r[(i, j)])
        });
        Self::new(f, self.lambda)
    }

    /// Pullback of every component along `x ↦ T x`.
    pub fn pullback(&self, t: &Matrix4<f64>) -> Self {
        Self::new(self.f.map(|a| a.pullback(t)), self.lambda)
    }
}

/// `M_ij` with `F_i ∧ F_j = M_ij ν`, where `ν = nu · ν_std`.
pub fn curvature_gram(f: &[TwoForm; 3], nu: VolumeCoeff) -> Result<Sym3> {
    if nu.0 == 0.0 || !nu.0.is_finite() {
        return Err(Error::ZeroVolume);
    }
    let mut m = Sym3::ZERO;
    for i in 0..3 {
        for j in 0..=i {
            m.set(i, j, wedge(&f[i], &f[j]).0 / nu.0);
        }
    }
    Ok(m)
}

fn gram_scale(m: &Sym3) -> f64 {
    m.0.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

/// Definiteness of the `ν_std` Gram with a relative tolerance.
pub fn is_definite(f: &[TwoForm; 3]) -> Definiteness {
    let m = curvature_gram(f, VolumeCoeff::STD).expect("ν_std is non-zero");
    let scale = gram_scale(&m);
    if scale == 0.0 {
        return Definiteness::Degenerate;
    }
    classify(&m, DEFINITE_REL_TOL * scale)
}

/// `+1` when the `ν_std` Gram is positive definite, `−1` when negative.
pub fn induced_orientation(f: &[TwoForm; 3]) -> Result<i8> {
    match is_definite(f) {
        Definiteness::PositiveDefinite => Ok(1),
        Definiteness::NegativeDefinite => Ok(-1),
        other => Err(Error::NotDefinite(format!("{other:?}"))),
    }
}

/// Urbantke tensor `Σ ε_ijk F^i_{μα} F^j_{βγ} F^k_{δν} ε^{αβγδ}`.
fn urbantke(f: &[TwoForm; 3]) -> Matrix4<f64> {
    let m = f.map(|a| a.to_matrix());
    let mut u = Matrix4::zeros();
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2)] {
        let e = levi_civita3(i, j, k);
        for mu in 0..4 {
            for nu in mu..4 {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            for d in 0..4 {
                                let eps = levi_civita4(a, b, c, d);
                                if eps != 0.0 {
                                    s += eps * m[i][(mu, a)] * m[j][(b, c)] * m[k][(d, nu)];
                                }
                            }
                        }
                    }
                }
                u[(mu, nu)] += e * s;
            }
        }
    }
    for mu in 0..4 {
        for nu in 0..mu {
            u[(mu, nu)] = u[(nu, mu)];
        }
    }
    u
}

/// Largest of `|*F_i − F_i| / |F_i|` in the max norm.
pub fn self_duality_residual(g: &Metric4, f: &[TwoForm; 3]) -> f64 {
    f.iter()
        .map(|a| {
            let scale = a.max_abs();
            if scale == 0.0 {
                0.0
            } else {
                (hodge_star2(g, a) - *a).max_abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// The metric for which every `F_i` is self-dual, with `√det g = nu_A` and
/// orientation induced by the triple.
pub fn metric_reconstruct(f: &[TwoForm; 3], nu_a: VolumeCoeff) -> Result<Metric4> {
    let orientation = induced_orientation(f)?;
    if !(nu_a.0 > 0.0) || !nu_a.0.is_finite() {
        return Err(Error::ZeroVolume);
    }
    let mut u = urbantke(f);
    if u.trace() < 0.0 {
        u = -u;
    }
    let det = u.determinant();
    if !(det > 0.0) || u.cholesky().is_none() {
        return Err(Error::NotDefinite("Urbantke tensor is not definite".into()));
    }
    let c = (nu_a.0 / det.sqrt()).sqrt();
    let g = Metric4::new(u * c, orientation)?;
    let residual = self_duality_residual(&g, f);
    if !(residual <= SELF_DUALITY_TOL) {
        return Err(Error::ReconstructionTolerance {
            residual,
            tol: SELF_DUALITY_TOL,
        });
    }
    Ok(g)
}

/// Orientation of `(F_1, F_2, F_3)` within `Λ⁺` of the metric `g`.
///
/// With `J_i = −g⁻¹ F_i`, an orthonormal triple obeying `J_1 J_2 = J_3` has
/// `tr(J_1 J_2 J_3) < 0`; the trace is multilinear and alternating on `Λ⁺`.
pub fn connection_sign(f: &[TwoForm; 3], g: &Metric4) -> Result<i8> {
    induced_orientation(f)?;
    let gi = g.inverse();
    let j = f.map(|a| -(gi * a.to_matrix()));
    let t = (j[0] * j[1] * j[2]).trace();
    if t == 0.0 || !t.is_finite() {
        return Err(Error::NotDefinite("triple does not span Λ⁺".into()));
    }
    Ok(if t < 0.0 { 1 } else { -1 })
}

/// Connection sign computed from the reconstructed conformal class.
pub fn connection_sign_of(f: &[TwoForm; 3]) -> Result<i8> {
    let g = metric_reconstruct(f, VolumeCoeff::STD)?;
    connection_sign(f, &g)
}

/// `ν_A` and `M_A` against an arbitrary reference `ν = nu_ref · ν_std`,
/// with `Λ` only entering through `|Λ|`.
pub fn normalize_unchecked(f: &[TwoForm; 3], lambda: f64, nu_ref: VolumeCoeff) -> Result<(VolumeCoeff, Sym3)> {
    if lambda == 0.0 {
        return Err(Error::ZeroLambda);
    }
    let orientation = f64::from(induced_orientation(f)?);
    let m = curvature_gram(f, nu_ref)?;
    // Reference volume re-expressed positively in the induced orientation.
    let s = orientation * nu_ref.0.signum();
    let m_pos = m * s;
    let tr = spd_sqrt(&m_pos)?.trace();
    let factor = tr * tr / (lambda * lambda);
    let nu_a = factor * nu_ref.0.abs();
    Ok((VolumeCoeff(nu_a), m_pos * (1.0 / factor)))
}

/// `ν_A = (tr √M_ν)² ν / Λ²` and `M_A`; rejects a `Λ` whose sign disagrees
/// with the connection sign.
pub fn normalize_volume(triple: &CurvatureTriple) -> Result<(VolumeCoeff, Sym3)> {
    normalize_volume_with_reference(triple, VolumeCoeff::STD)
}

pub fn normalize_volume_with_reference(triple: &CurvatureTriple, nu_ref: VolumeCoeff) -> Result<(VolumeCoeff, Sym3)> {
    if triple.lambda == 0.0 {
        return Err(Error::ZeroLambda);
    }
    let sign = connection_sign_of(&triple.f)?;
    if f64::from(sign) * triple.lambda < 0.0 {
        return Err(Error::SignMismatch {
            lambda: triple.lambda,
            connection_sign: sign,
        });
    }
    normalize_unchecked(&triple.f, triple.lambda, nu_ref)
}

/// `Φ_i = sign · Σ_j (M_A^{-1/2})_ij F_j`.
pub fn phi_map(f: &[TwoForm; 3], m_a: &Sym3, sign: i8) -> Result<[TwoForm; 3]> {
    let r = spd_inv_sqrt(m_a)?;
    let s = f64::from(sign.signum());
    Ok(std::array::from_fn(|i| {
        (0..3).fold(TwoForm::ZERO, |acc, j| acc + f[j] * (s * r.get(i, j)))
    }))
}

/// `p_1 = (1/4π²) Σ F_i ∧ F_i` against `ν_std`.
pub fn pontryagin_density(f: &[TwoForm; 3]) -> VolumeCoeff {
    let s: f64 = f.iter().map(|a| wedge(a, a).0).sum();
    VolumeCoeff(s / (4.0 * PI * PI))
}

/// `tr M`, `(tr √M)²` and `3 tr M` for an SPD matrix.
pub fn trace_sqrt_bounds(m: &Sym3) -> Result<(f64, f64, f64)> {
    let ev = m.eigenvalues();
    if !(ev[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: ev[0] });
    }
    let tr = ev.sum();
    let ts: f64 = ev.iter().map(|x| x.sqrt()).sum();
    Ok((tr, ts * ts, 3.0 * tr))
}

/// `3 tr M − (tr √M)² = Σ_{i<j} (√λ_i − √λ_j)²`, free of cancellation.
pub fn upper_gap(m: &Sym3) -> Result<f64> {
    let ev = m.eigenvalues();
    if !(ev[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: ev[0] });
    }
    let r = ev.map(f64::sqrt);
    Ok((r[0] - r[1]).powi(2) + (r[0] - r[2]).powi(2) + (r[1] - r[2]).powi(2))
}

/// Relative eigenvalue spread `(λ_max − λ_min) / λ_max`.
pub fn eigen_spread(m: &Sym3) -> f64 {
    let ev = m.eigenvalues();
    let scale = ev[0].abs().max(ev[2].abs());
    if scale == 0.0 {
        0.0
    } else {
        (ev[2] - ev[0]) / scale
    }
}

/// Equality case `(tr √M)² = 3 tr M`: `M` is a multiple of the identity.
pub fn is_upper_equality(m: &Sym3) -> bool {
    eigen_spread(m) < ISOTROPY_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub upper_equality: bool,
}

/// `((4π²/Λ²) p_1, ν_A, (12π²/Λ²) p_1)` with `p_1` in the induced orientation.
pub fn pointwise_bounds(f: &[TwoForm; 3], lambda: f64) -> Result<Bounds> {
    let (nu_a, m_a) = normalize_unchecked(f, lambda, VolumeCoeff::STD)?;
    let orientation = f64::from(induced_orientation(f)?);
    let p1 = orientation * pontryagin_density(f).0;
    let l2 = lambda * lambda;
    Ok(Bounds {
        lower: 4.0 * PI * PI / l2 * p1,
        value: nu_a.0,
        upper: 12.0 * PI * PI / l2 * p1,
        upper_equality: is_upper_equality(&m_a),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PointReport {
    pub M_nu: Sym3,
    pub verdict: Definiteness,
    pub orientation: i8,
    pub sign: i8,
    pub lambda: f64,
    pub lambda_sign_agrees: bool,
    /// `(sign · |Λ|, −sign · |Λ|)`: the connection-consistent choice first.
    pub lambda_candidates: [f64; 2],
    pub nu_A: VolumeCoeff,
    pub M_A: Sym3,
    pub g_A: Metric4,
    pub Phi: [TwoForm; 3],
    pub pontryagin: VolumeCoeff,
    pub bounds: Bounds,
    pub self_duality_residual: f64,
}

/// Full pointwise analysis; a `Λ` of the wrong sign is reported, not rejected.
pub fn analyze_point(triple: &CurvatureTriple) -> Result<PointReport> {
    let f = &triple.f;
    let m_nu = curvature_gram(f, VolumeCoeff::STD)?;
    let verdict = is_definite(f);
    if !verdict.is_definite() {
        return Err(Error::NotDefinite(format!("{verdict:?}")));
    }
    let orientation = induced_orientation(f)?;
    let (nu_a, m_a) = normalize_unchecked(f, triple.lambda, VolumeCoeff::STD)?;
    let g_a = metric_reconstruct(f, nu_a)?;
    let sign = connection_sign(f, &g_a)?;
    let phi = phi_map(f, &m_a, sign)?;
    let abs_l = triple.lambda.abs();
    Ok(PointReport {
        M_nu: m_nu,
        verdict,
        orientation,
        sign,
        lambda: triple.lambda,
        lambda_sign_agrees: f64::from(sign) * triple.lambda > 0.0,
        lambda_candidates: [f64::from(sign) * abs_l, -f64::from(sign) * abs_l],
        nu_A: nu_a,
        M_A: m_a,
        g_A: g_a,
        Phi: phi,
        pontryagin: pontryagin_density(f),
        bounds: pointwise_bounds(f, triple.lambda)?,
        self_duality_residual: self_duality_residual(&g_a, f),
    })
}
