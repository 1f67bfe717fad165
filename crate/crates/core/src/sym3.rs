//! Symmetric 3×3 matrices: definiteness, square roots and their branches,
//! the Sylvester-type solve `G`, and the maps `H` and `L`.
//!
//! All matrix functions go through the eigendecomposition, so for
//! `M = Q diag(λ) Qᵀ` the Sylvester equation
//! `G M^{-1/2} + M^{-1/2} G = −M^{-1} N M^{-1}` decouples entrywise in the
//! eigenbasis.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Symmetric 3×3 matrix stored as its lower triangle
/// `(m00, m10, m11, m20, m21, m22)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3(pub [f64; 6]);

fn tri_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self([a, 0.0, b, 0.0, 0.0, c])
    }

    /// `E_ij + E_ji` for `i ≠ j`, `E_ii` otherwise.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut s = Self::ZERO;
        s.0[tri_index(i, j)] = 1.0;
        s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[tri_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[tri_index(i, j)] = v;
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j))
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let mut s = Self::ZERO;
        for i in 0..3 {
            for j in 0..=i {
                s.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        s
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[2] + self.0[5]
    }

    /// Frobenius inner product `tr(PQ)`.
    pub fn dot(&self, other: &Sym3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Coordinates in the `tr(PQ)`-orthonormal basis
    /// `E11, E22, E33, (E12+E21)/√2, (E13+E31)/√2, (E23+E32)/√2`.
    pub fn to_vec6(&self) -> Vector6<f64> {
        Vector6::new(
            self.get(0, 0),
            self.get(1, 1),
            self.get(2, 2),
            SQRT2 * self.get(0, 1),
            SQRT2 * self.get(0, 2),
            SQRT2 * self.get(1, 2),
        )
    }

    pub fn from_vec6(v: &Vector6<f64>) -> Self {
        let mut s = Self::ZERO;
        s.set(0, 0, v[0]);
        s.set(1, 1, v[1]);
        s.set(2, 2, v[2]);
        s.set(0, 1, v[3] / SQRT2);
        s.set(0, 2, v[4] / SQRT2);
        s.set(1, 2, v[5] / SQRT2);
        s
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vector3<f64>, Matrix3<f64>) {
        let se = SymmetricEigen::new(self.to_matrix());
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let vals = Vector3::from_fn(|i, _| se.eigenvalues[order[i]]);
        let vecs = Matrix3::from_fn(|r, c| se.eigenvectors[(r, order[c])]);
        (vals, vecs)
    }

    pub fn eigenvalues(&self) -> Vector3<f64> {
        self.eigen().0
    }

    pub fn matmul(&self, other: &Sym3) -> Matrix3<f64> {
        self.to_matrix() * other.to_matrix()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for Sym3 {
    type Output = Sym3;
    fn add(self, rhs: Sym3) -> Sym3 {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Sym3(c)
    }
}

impl Sub for Sym3 {
    type Output = Sym3;
    fn sub(self, rhs: Sym3) -> Sym3 {
        self + rhs * -1.0
    }
}

impl Neg for Sym3 {
    type Output = Sym3;
    fn neg(self) -> Sym3 {
        self * -1.0
    }
}

impl Mul<f64> for Sym3 {
    type Output = Sym3;
    fn mul(self, s: f64) -> Sym3 {
        Sym3(self.0.map(|x| x * s))
    }
}

/// Definiteness verdict for a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

impl Definiteness {
    pub fn is_definite(self) -> bool {
        matches!(self, Self::PositiveDefinite | Self::NegativeDefinite)
    }
}

/// Classifies by eigenvalue signs with absolute tolerance `tol`.
pub fn classify(m: &Sym3, tol: f64) -> Definiteness {
    let ev = m.eigenvalues();
    if ev.iter().any(|x| x.abs() <= tol || !x.is_finite()) {
        Definiteness::Degenerate
    } else if ev.iter().all(|&x| x > tol) {
        Definiteness::PositiveDefinite
    } else if ev.iter().all(|&x| x < -tol) {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    }
}

fn checked_spd_eigen(m: &Sym3) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let (vals, vecs) = m.eigen();
    if !(vals[0] > 0.0) || !m.is_finite() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: vals[0],
        });
    }
    Ok((vals, vecs))
}

fn from_eigen(vals: &Vector3<f64>, vecs: &Matrix3<f64>) -> Sym3 {
    Sym3::from_matrix(&(vecs * Matrix3::from_diagonal(vals) * vecs.transpose()))
}

/// Applies a scalar function to the eigenvalues of an SPD matrix.
pub fn spd_function(m: &Sym3, f: impl Fn(f64) -> f64) -> Result<Sym3> {
    let (vals, vecs) = checked_spd_eigen(m)?;
    Ok(from_eigen(&vals.map(f), &vecs))
}

/// Positive definite square root.
pub fn spd_sqrt(m: &Sym3) -> Result<Sym3> {
    spd_function(m, f64::sqrt)
}

pub fn spd_inv_sqrt(m: &Sym3) -> Result<Sym3> {
    spd_function(m, |x| 1.0 / x.sqrt())
}

pub fn spd_inverse(m: &Sym3) -> Result<Sym3> {
    spd_function(m, |x| 1.0 / x)
}

/// Relative tolerance below which two eigenvalues straddling a sign switch
/// make the branch ill-defined.
pub const BRANCH_DEGENERACY_TOL: f64 = 1e-8;

/// Square root with prescribed eigenvalue signs, `signs[i]` applying to the
/// `i`-th eigenvalue in ascending order.
pub fn sqrt_branch(m: &Sym3, signs: [i8; 3]) -> Result<Sym3> {
    let (vals, vecs) = checked_spd_eigen(m)?;
    let scale = vals[2];
    for i in 0..2 {
        if signs[i] != signs[i + 1] && (vals[i + 1] - vals[i]) <= BRANCH_DEGENERACY_TOL * scale {
            return Err(Error::DegenerateBranch {
                lower: vals[i],
                upper: vals[i + 1],
            });
        }
    }
    let roots = Vector3::from_fn(|i, _| {
        let s = if signs[i] < 0 { -1.0 } else { 1.0 };
        s * vals[i].sqrt()
    });
    Ok(from_eigen(&roots, &vecs))
}

/// Solves `G M^{-1/2} + M^{-1/2} G = −M^{-1} N M^{-1}` for symmetric `G`.
pub fn sylvester_g(m: &Sym3, n: &Sym3) -> Result<Sym3> {
    let (vals, q) = checked_spd_eigen(m)?;
    let n_eig = q.transpose() * n.to_matrix() * q;
    let g_eig = Matrix3::from_fn(|i, j| {
        let rhs = -n_eig[(i, j)] / (vals[i] * vals[j]);
        rhs / (1.0 / vals[i].sqrt() + 1.0 / vals[j].sqrt())
    });
    Ok(Sym3::from_matrix(&(q * g_eig * q.transpose())))
}

/// `H(N) = −M N M^{1/2} − M^{1/2} N M`, the inverse of [`sylvester_g`].
pub fn map_h(m: &Sym3, n: &Sym3) -> Result<Sym3> {
    let root = spd_sqrt(m)?.to_matrix();
    let mm = m.to_matrix();
    let nn = n.to_matrix();
    Ok(Sym3::from_matrix(&(-(mm * nn * root) - root * nn * mm)))
}

/// Tolerance on `tr √M_A = |Λ|` accepted by [`map_l`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// `L(N) = G(N − (1/|Λ|) tr(M^{-1/2} N) M)` at a normalized `M`.
pub fn map_l(m_a: &Sym3, lambda: f64, n: &Sym3) -> Result<Sym3> {
    if lambda == 0.0 {
        return Err(Error::ZeroLambda);
    }
    let abs_l = lambda.abs();
    let root = spd_sqrt(m_a)?;
    let tr = root.trace();
    if (tr - abs_l).abs() > NORMALIZATION_TOL * abs_l.max(1.0) {
        return Err(Error::Normalization {
            trace_sqrt: tr,
            abs_lambda: abs_l,
        });
    }
    let inv_root = spd_inv_sqrt(m_a)?;
    let c = inv_root.dot(n) / abs_l;
    sylvester_g(m_a, &(*n - *m_a * c))
}

/// Matrix of a linear map on `Sym3` in the orthonormal `vec6` coordinates.
pub fn operator_matrix(f: impl Fn(&Sym3) -> Result<Sym3>) -> Result<Matrix6<f64>> {
    let mut out = Matrix6::zeros();
    for k in 0..6 {
        let mut e = Vector6::zeros();
        e[k] = 1.0;
        let col = f(&Sym3::from_vec6(&e))?.to_vec6();
        out.set_column(k, &col);
    }
    Ok(out)
}

/// `L` as a 6×6 matrix.
pub fn map_l_matrix(m_a: &Sym3, lambda: f64) -> Result<Matrix6<f64>> {
    operator_matrix(|n| map_l(m_a, lambda, n))
}

/// Rescales an SPD matrix so that `tr √M = |Λ|`.
pub fn normalize_trace_sqrt(m: &Sym3, lambda: f64) -> Result<Sym3> {
    let tr = spd_sqrt(m)?.trace();
    Ok(*m * (lambda / tr).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Sym3, b: &Sym3, tol: f64) -> bool {
        (*a - *b).frobenius() <= tol * (1.0 + b.frobenius())
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&(Sym3::identity() * 2.0), 1e-9), Definiteness::PositiveDefinite);
        assert_eq!(classify(&Sym3::diag(2.0, 2.0, -2.0), 1e-9), Definiteness::Indefinite);
        assert_eq!(classify(&Sym3::diag(1.0, 1.0, 0.0), 1e-9), Definiteness::Degenerate);
        assert_eq!(classify(&Sym3::diag(-1.0, -3.0, -2.0), 1e-9), Definiteness::NegativeDefinite);
    }

    #[test]
    fn sqrt_examples() {
        assert!(close(&spd_sqrt(&(Sym3::identity() * 4.0)).unwrap(), &(Sym3::identity() * 2.0), 1e-15));
        assert!(close(&spd_sqrt(&Sym3::diag(4.0, 1.0, 1.0)).unwrap(), &Sym3::diag(2.0, 1.0, 1.0), 1e-15));
        assert!(spd_sqrt(&Sym3::diag(1.0, -1.0, 1.0)).is_err());
    }

    #[test]
    fn sqrt_of_gram_squares_back() {
        let r = Matrix3::new(1.0, 0.3, -0.2, 0.5, 2.0, 0.1, -0.4, 0.7, 1.5);
        let m = Sym3::from_matrix(&(r * r.transpose()));
        let root = spd_sqrt(&m).unwrap();
        let back = Sym3::from_matrix(&(root.matmul(&root)));
        assert!(close(&back, &m, 1e-12));
        assert!(classify(&root, 0.0) == Definiteness::PositiveDefinite);
    }

    #[test]
    fn branch_examples() {
        let b = sqrt_branch(&Sym3::diag(4.0, 1.0, 1.0), [-1, -1, 1]).unwrap();
        assert!(close(&b, &Sym3::diag(2.0, -1.0, -1.0), 1e-15));
        let sq = Sym3::from_matrix(&b.matmul(&b));
        assert!(close(&sq, &Sym3::diag(4.0, 1.0, 1.0), 1e-15));
        assert!(close(&sqrt_branch(&Sym3::identity(), [1, 1, 1]).unwrap(), &Sym3::identity(), 1e-15));
        assert!(close(&sqrt_branch(&Sym3::identity(), [-1, -1, -1]).unwrap(), &(-Sym3::identity()), 1e-15));
    }

    #[test]
    fn branch_refuses_degenerate_sign_boundary() {
        let err = sqrt_branch(&Sym3::identity(), [-1, 1, 1]).unwrap_err();
        assert!(matches!(err, Error::DegenerateBranch { .. }));
        assert!(sqrt_branch(&Sym3::diag(1.0, 1.0 + 1e-10, 3.0), [1, -1, -1]).is_err());
        assert!(sqrt_branch(&Sym3::diag(1.0, 1.0 + 1e-6, 3.0), [1, -1, -1]).is_ok());
    }

    #[test]
    fn all_positive_branch_is_spd_sqrt() {
        let m = Sym3([3.0, 0.2, 2.0, -0.1, 0.3, 1.0]);
        assert!(close(&sqrt_branch(&m, [1, 1, 1]).unwrap(), &spd_sqrt(&m).unwrap(), 1e-14));
    }

    #[test]
    fn sylvester_examples() {
        let n = Sym3([0.3, -0.2, 1.0, 0.5, 0.1, -0.7]);
        assert!(close(&sylvester_g(&Sym3::identity(), &n).unwrap(), &(n * -0.5), 1e-15));
        let g = sylvester_g(&Sym3::diag(4.0, 1.0, 1.0), &Sym3::unit(0, 0)).unwrap();
        assert!(close(&g, &(Sym3::unit(0, 0) * (-1.0 / 16.0)), 1e-15));
        assert_eq!(sylvester_g(&Sym3::diag(2.0, 3.0, 5.0), &Sym3::ZERO).unwrap(), Sym3::ZERO);
        assert!(sylvester_g(&Sym3::diag(1.0, 0.0, 1.0), &n).is_err());
    }

    #[test]
    fn map_h_examples() {
        let n = Sym3([0.3, -0.2, 1.0, 0.5, 0.1, -0.7]);
        assert!(close(&map_h(&Sym3::identity(), &n).unwrap(), &(n * -2.0), 1e-15));
        let h = map_h(&Sym3::diag(4.0, 1.0, 1.0), &Sym3::unit(0, 0)).unwrap();
        assert!(close(&h, &(Sym3::unit(0, 0) * -16.0), 1e-15));
    }

    #[test]
    fn map_l_examples() {
        let l = map_l(&Sym3::identity(), 3.0, &Sym3::identity()).unwrap();
        assert!(l.frobenius() < 1e-15);
        let traceless = Sym3([1.0, 0.4, -0.3, 0.2, 0.1, -0.7]);
        assert!(close(&map_l(&Sym3::identity(), 3.0, &traceless).unwrap(), &(traceless * -0.5), 1e-15));
        assert!(matches!(
            map_l(&Sym3::identity(), 2.0, &traceless),
            Err(Error::Normalization { .. })
        ));
        assert!(matches!(map_l(&Sym3::identity(), 0.0, &traceless), Err(Error::ZeroLambda)));
    }

    #[test]
    fn vec6_is_isometric() {
        let a = Sym3([1.0, 0.4, -0.3, 0.2, 0.1, -0.7]);
        let b = Sym3([0.5, -1.4, 2.3, 0.9, -0.1, 0.2]);
        assert!((a.to_vec6().dot(&b.to_vec6()) - a.dot(&b)).abs() < 1e-14);
        assert!(close(&Sym3::from_vec6(&a.to_vec6()), &a, 1e-15));
    }
}
