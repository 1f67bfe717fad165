//! Riemannian-side diagnostics: `M = (Λ/3 + W⁺)²`, the curvature criterion
//! for definiteness, the pointwise Gursky chain and the Hitchin–Thorpe half.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::defpoint::CurvatureTriple;
use crate::error::{Error, Result};
use crate::forms4::TwoForm;
use crate::sym3::{classify, Definiteness, Sym3};

/// Trace tolerance for `W⁺`.
pub const TRACELESS_TOL: f64 = 1e-12;

/// Curvature data at a point, as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureData {
    pub s: f64,
    #[serde(rename = "Wplus")]
    pub w_plus: [[f64; 3]; 3],
    #[serde(rename = "Ric0")]
    pub ric0: [[f64; 3]; 3],
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

fn to_matrix(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

fn from_matrix(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

impl CurvatureData {
    /// Validates symmetry and trace of `W⁺`.
    pub fn new(s: f64, w_plus: Sym3, ric0: Matrix3<f64>, lambda: f64) -> Result<Self> {
        let d = Self {
            s,
            w_plus: from_matrix(&w_plus.to_matrix()),
            ric0: from_matrix(&ric0),
            lambda,
        };
        d.w_plus()?;
        Ok(d)
    }

    pub fn w_plus(&self) -> Result<Sym3> {
        let m = to_matrix(&self.w_plus);
        if (m - m.transpose()).amax() > TRACELESS_TOL * m.amax().max(1.0) {
            return Err(Error::InvalidInput("W⁺ must be symmetric".into()));
        }
        let w = Sym3::from_matrix(&m);
        check_traceless(&w)?;
        Ok(w)
    }

    pub fn ric0(&self) -> Matrix3<f64> {
        to_matrix(&self.ric0)
    }

    /// Hyperbolic space form: `s = −12`, `Λ = −3`.
    pub fn hyperbolic() -> Self {
        Self::einstein(-3.0, Sym3::ZERO)
    }

    /// Round `S⁴`: `s = 12`, `Λ = 3`.
    pub fn round() -> Self {
        Self::einstein(3.0, Sym3::ZERO)
    }

    /// Einstein data `s = 4Λ`, `Ric₀ = 0`.
    pub fn einstein(lambda: f64, w_plus: Sym3) -> Self {
        Self {
            s: 4.0 * lambda,
            w_plus: from_matrix(&w_plus.to_matrix()),
            ric0: [[0.0; 3]; 3],
            lambda,
        }
    }
}

fn check_traceless(w: &Sym3) -> Result<()> {
    let tr = w.trace();
    if tr.abs() > TRACELESS_TOL * w.frobenius().max(1.0) {
        return Err(Error::NotTraceless(tr));
    }
    Ok(())
}

/// `(Λ/3 · 1 + W⁺)²`.
pub fn m_from_einstein(lambda: f64, w_plus: &Sym3) -> Result<Sym3> {
    check_traceless(w_plus)?;
    let a = (Sym3::identity() * (lambda / 3.0) + *w_plus).to_matrix();
    Ok(Sym3::from_matrix(&(a * a)))
}

/// Curvature triple `F_i = Σ_j (Λ/3 + W⁺)_ij ω_j` modelling `Λ⁺` curvature.
pub fn synthesize_triple(lambda: f64, w_plus: &Sym3) -> CurvatureTriple {
    let a = Sym3::identity() * (lambda / 3.0) + *w_plus;
    let f = std::array::from_fn(|i| (0..3).fold(TwoForm::ZERO, |acc, j| acc + TwoForm::omega(j) * a.get(i, j)));
    CurvatureTriple::new(f, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub holds: bool,
    pub sign: Option<i8>,
}

/// `(s/12 + W⁺)² − Ric₀ᵀ Ric₀ ≻ 0`, signed by `det(s/12 + W⁺)`.
pub fn definite_criterion(data: &CurvatureData) -> Result<CriterionVerdict> {
    let w = data.w_plus()?;
    let a = (Sym3::identity() * (data.s / 12.0) + w).to_matrix();
    let r = data.ric0();
    let lhs = Sym3::from_matrix(&(a * a - r.transpose() * r));
    let scale = lhs.frobenius().max(f64::MIN_POSITIVE);
    let holds = classify(&lhs, 1e-14 * scale) == Definiteness::PositiveDefinite;
    let sign = holds.then(|| if a.determinant() > 0.0 { 1 } else { -1 });
    Ok(CriterionVerdict { holds, sign })
}

/// Pointwise chain behind the Gursky argument; `chain_holds` is the
/// conjunction of every inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GurskyReport {
    pub eigenvalues: [f64; 3],
    pub w_norm_sq: f64,
    pub six_w1_sq: f64,
    pub two_lambda_sq_over_3: f64,
    pub w3_nonnegative: bool,
    pub w3_le_minus_2w1: bool,
    pub w2_le_w1: bool,
    pub norm_le_six_w1_sq: bool,
    pub six_w1_sq_lt_bound: bool,
    pub chain_holds: bool,
}

/// Slack for the exact eigenvalue inequalities, relative to `|W⁺|`.
const CHAIN_SLACK: f64 = 1e-12;

pub fn gursky_check(lambda: f64, w_plus: &Sym3) -> Result<GurskyReport> {
    if w_plus.trace().abs() > TRACELESS_TOL * w_plus.frobenius().max(1.0) {
        return Err(Error::HypothesisNotMet(format!("W⁺ has trace {:e}", w_plus.trace())));
    }
    if !(lambda > 0.0) {
        return Err(Error::HypothesisNotMet("Λ must be positive".into()));
    }
    let shifted = Sym3::identity() * (lambda / 3.0) + *w_plus;
    if classify(&shifted, 0.0) != Definiteness::PositiveDefinite {
        return Err(Error::HypothesisNotMet("Λ/3 + W⁺ is not positive definite".into()));
    }
    let ev = w_plus.eigenvalues();
    let (w1, w2, w3) = (ev[0], ev[1], ev[2]);
    let slack = CHAIN_SLACK * w_plus.frobenius();
    let w_norm_sq = w1 * w1 + w2 * w2 + w3 * w3;
    let six_w1_sq = 6.0 * w1 * w1;
    let bound = 2.0 * lambda * lambda / 3.0;
    let w3_nonnegative = w3 >= -slack;
    let w3_le_minus_2w1 = w3 <= -2.0 * w1 + slack;
    let w2_le_w1 = w2.abs() <= w1.abs() + slack;
    let norm_le_six_w1_sq = w_norm_sq <= six_w1_sq * (1.0 + 1e-12) + slack * slack;
    let six_w1_sq_lt_bound = six_w1_sq < bound;
    Ok(GurskyReport {
        eigenvalues: [w1, w2, w3],
        w_norm_sq,
        six_w1_sq,
        two_lambda_sq_over_3: bound,
        w3_nonnegative,
        w3_le_minus_2w1,
        w2_le_w1,
        norm_le_six_w1_sq,
        six_w1_sq_lt_bound,
        chain_holds: w3_nonnegative && w3_le_minus_2w1 && w2_le_w1 && norm_le_six_w1_sq && six_w1_sq_lt_bound,
    })
}

/// `2χ + 3τ`.
pub fn hitchin_thorpe_value(chi: i64, tau: i64) -> i64 {
    2 * chi + 3 * tau
}

/// Necessary condition `2χ + 3τ > 0`.
pub fn hitchin_thorpe_half(chi: i64, tau: i64) -> bool {
    hitchin_thorpe_value(chi, tau) > 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defpoint::connection_sign_of;
    use crate::sampling::{random_traceless, stream};

    #[test]
    fn m_examples() {
        assert_eq!(m_from_einstein(-3.0, &Sym3::ZERO).unwrap(), Sym3::identity());
        assert_eq!(m_from_einstein(3.0, &Sym3::ZERO).unwrap(), Sym3::identity());
        let m = m_from_einstein(3.0, &Sym3::diag(-2.0, 1.0, 1.0)).unwrap();
        assert!((m - Sym3::diag(1.0, 4.0, 4.0)).frobenius() < 1e-14);
        assert!(matches!(m_from_einstein(3.0, &Sym3::identity()), Err(Error::NotTraceless(_))));
    }

    #[test]
    fn criterion_examples() {
        let v = definite_criterion(&CurvatureData::hyperbolic()).unwrap();
        assert_eq!(v, CriterionVerdict { holds: true, sign: Some(-1) });
        let v = definite_criterion(&CurvatureData::round()).unwrap();
        assert_eq!(v, CriterionVerdict { holds: true, sign: Some(1) });
        let d = CurvatureData::new(0.0, Sym3::ZERO, Matrix3::identity(), 1.0).unwrap();
        assert_eq!(definite_criterion(&d).unwrap(), CriterionVerdict { holds: false, sign: None });
    }

    #[test]
    fn gursky_examples() {
        let r = gursky_check(3.0, &Sym3::diag(-0.9, 0.4, 0.5)).unwrap();
        assert!((r.w_norm_sq - 1.22).abs() < 1e-12);
        assert!((r.six_w1_sq - 4.86).abs() < 1e-12);
        assert!((r.two_lambda_sq_over_3 - 6.0).abs() < 1e-12);
        assert!(r.chain_holds);
        let r = gursky_check(3.0, &Sym3::ZERO).unwrap();
        assert!(r.chain_holds && r.w_norm_sq == 0.0);
        assert!(matches!(
            gursky_check(3.0, &Sym3::diag(-1.5, 0.5, 1.0)),
            Err(Error::HypothesisNotMet(_))
        ));
        assert!(matches!(gursky_check(-3.0, &Sym3::ZERO), Err(Error::HypothesisNotMet(_))));
    }

    #[test]
    fn hitchin_thorpe_table() {
        assert_eq!((hitchin_thorpe_value(2, 0), hitchin_thorpe_half(2, 0)), (4, true));
        assert_eq!((hitchin_thorpe_value(3, 1), hitchin_thorpe_half(3, 1)), (9, true));
        assert_eq!((hitchin_thorpe_value(0, 0), hitchin_thorpe_half(0, 0)), (0, false));
    }

    #[test]
    fn sign_agrees_with_synthesized_triple() {
        let mut rng = stream(21, 0);
        let mut checked = 0;
        while checked < 200 {
            let lambda = if checked % 2 == 0 { 3.0 } else { -3.0 };
            let w = random_traceless(&mut rng) * 2.0;
            let a = Sym3::identity() * (lambda / 3.0) + w;
            if a.to_matrix().determinant().abs() > 1e-3 {
                let data = CurvatureData::einstein(lambda, w);
                let v = definite_criterion(&data).unwrap();
                let m = m_from_einstein(lambda, &w).unwrap();
                assert_eq!(classify(&m, 0.0), Definiteness::PositiveDefinite);
                let t = synthesize_triple(lambda, &w);
                assert_eq!(v.sign, Some(connection_sign_of(&t.f).unwrap()));
                checked += 1;
            }
        }
    }
}
