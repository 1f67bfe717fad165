//! Exterior algebra on a fixed oriented 4-dimensional inner-product fiber.
//!
//! Two-forms are stored in the fixed ordered basis
//! `(e⁰¹, e⁰², e⁰³, e²³, e³¹, e¹²)` and the reference volume form is
//! `ν_std = e⁰∧e¹∧e²∧e³`.  The self-dual basis `ω_i = e⁰ⁱ + eʲᵏ` and the
//! anti-self-dual basis `ᾱ_i = e⁰ⁱ − eʲᵏ` (cyclic `i, j, k`) are available as
//! constructors.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Matrix6, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index pairs of the 2-form basis, in storage order.
pub const BASIS_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)];

/// Levi-Civita symbol with `ε_{0123} = +1`.
pub fn levi_civita4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let idx = [a, b, c, d];
    for i in 0..4 {
        if idx[i] > 3 {
            return 0.0;
        }
        for j in (i + 1)..4 {
            if idx[i] == idx[j] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Totally antisymmetric symbol on three indices with `ε_{123} = +1`
/// (indices `0, 1, 2` here).
pub fn levi_civita3(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A 1-form with 4 coefficients against `(e⁰, e¹, e², e³)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OneForm(pub [f64; 4]);

impl OneForm {
    pub fn basis(mu: usize) -> Self {
        let mut c = [0.0; 4];
        c[mu] = 1.0;
        Self(c)
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self([v[0], v[1], v[2], v[3]])
    }

    /// `self ∧ other`.
    pub fn wedge(&self, other: &OneForm) -> TwoForm {
        let mut m = Matrix4::zeros();
        for mu in 0..4 {
            for nu in 0..4 {
                m[(mu, nu)] = self.0[mu] * other.0[nu] - self.0[nu] * other.0[mu];
            }
        }
        TwoForm::from_matrix(&m)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// A 3-form, stored through its components `β_{λμν}` for `λ < μ < ν` in the
/// order `(e¹²³, e⁰²³, e⁰¹³, e⁰¹²)`: component `n` omits index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreeForm(pub [f64; 4]);

impl ThreeForm {
    fn omitted_triple(n: usize) -> [usize; 3] {
        match n {
            0 => [1, 2, 3],
            1 => [0, 2, 3],
            2 => [0, 1, 3],
            _ => [0, 1, 2],
        }
    }

    /// Fully antisymmetric component `β_{abc}` for arbitrary indices.
    pub fn component(&self, a: usize, b: usize, c: usize) -> f64 {
        if a == b || b == c || a == c {
            return 0.0;
        }
        let omitted = 6 - a - b - c;
        // sign of the permutation (a, b, c) relative to the sorted triple
        let mut sign = 1.0;
        let t = [a, b, c];
        for i in 0..3 {
            for j in (i + 1)..3 {
                if t[i] > t[j] {
                    sign = -sign;
                }
            }
        }
        sign * self.0[omitted]
    }
}

/// A 2-form on the 4-dimensional fiber.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoForm(pub [f64; 6]);

impl TwoForm {
    pub const ZERO: TwoForm = TwoForm([0.0; 6]);

    pub fn new(c: [f64; 6]) -> Self {
        Self(c)
    }

    /// Basis element `eᵃ ∧ eᵇ` (any order; antisymmetry respected).
    pub fn elementary(a: usize, b: usize) -> Self {
        let mut m = Matrix4::zeros();
        m[(a, b)] = 1.0;
        m[(b, a)] = -1.0;
        Self::from_matrix(&m)
    }

    /// Standard self-dual form `ω_i`, `i ∈ {0, 1, 2}`.
    pub fn omega(i: usize) -> Self {
        let mut c = [0.0; 6];
        c[i] = 1.0;
        c[i + 3] = 1.0;
        Self(c)
    }

    /// Standard anti-self-dual form `ᾱ_i = e⁰ⁱ − eʲᵏ`.
    pub fn omega_bar(i: usize) -> Self {
        let mut c = [0.0; 6];
        c[i] = 1.0;
        c[i + 3] = -1.0;
        Self(c)
    }

    /// Antisymmetric 4×4 matrix `A_{μν}` with `a = ½ A_{μν} e^μ∧e^ν`.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for (k, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            m[(a, b)] = self.0[k];
            m[(b, a)] = -self.0[k];
        }
        m
    }

    /// Reads the antisymmetric part of `m`.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let mut c = [0.0; 6];
        for (k, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            c[k] = 0.5 * (m[(a, b)] - m[(b, a)]);
        }
        Self(c)
    }

    /// Pullback along a linear map `T`: `(T*a)(u, v) = a(Tu, Tv)`.
    pub fn pullback(&self, t: &Matrix4<f64>) -> Self {
        Self::from_matrix(&(t.transpose() * self.to_matrix() * t))
    }

    pub fn norm_sq_euclid(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn as_vector(&self) -> nalgebra::Vector6<f64> {
        nalgebra::Vector6::from_column_slice(&self.0)
    }

    pub fn from_vector(v: &nalgebra::Vector6<f64>) -> Self {
        let mut c = [0.0; 6];
        c.copy_from_slice(v.as_slice());
        Self(c)
    }
}

impl Add for TwoForm {
    type Output = TwoForm;
    fn add(self, rhs: TwoForm) -> TwoForm {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        TwoForm(c)
    }
}

impl Sub for TwoForm {
    type Output = TwoForm;
    fn sub(self, rhs: TwoForm) -> TwoForm {
        self + (-rhs)
    }
}

impl Neg for TwoForm {
    type Output = TwoForm;
    fn neg(self) -> TwoForm {
        self * -1.0
    }
}

impl Mul<f64> for TwoForm {
    type Output = TwoForm;
    fn mul(self, s: f64) -> TwoForm {
        TwoForm(self.0.map(|x| x * s))
    }
}

impl Mul<TwoForm> for f64 {
    type Output = TwoForm;
    fn mul(self, a: TwoForm) -> TwoForm {
        a * self
    }
}

/// Coefficient of a 4-form against `ν_std`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct VolumeCoeff(pub f64);

impl VolumeCoeff {
    pub const STD: VolumeCoeff = VolumeCoeff(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `a ∧ b = c · ν_std`; returns `c`.
pub fn wedge(a: &TwoForm, b: &TwoForm) -> VolumeCoeff {
    let (a, b) = (&a.0, &b.0);
    VolumeCoeff(a[0] * b[3] + a[3] * b[0] + a[1] * b[4] + a[4] * b[1] + a[2] * b[5] + a[5] * b[2])
}

/// The 6×6 Gram matrix of the wedge pairing in the storage basis.
pub fn wedge_pairing_matrix() -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for k in 0..3 {
        m[(k, k + 3)] = 1.0;
        m[(k + 3, k)] = 1.0;
    }
    m
}

/// Interior product `ι_u a`, with `(ι_u a)_ν = u^μ a_{μν}`.
pub fn interior(u: &Vector4<f64>, a: &TwoForm) -> OneForm {
    let v = a.to_matrix().transpose() * u;
    OneForm::from_vector(&v)
}

/// Interior product of a vector with a 1-form.
pub fn interior1(u: &Vector4<f64>, alpha: &OneForm) -> f64 {
    u.dot(&alpha.as_vector())
}

/// `α ∧ a` for a 1-form and a 2-form.
pub fn wedge_1_2(alpha: &OneForm, a: &TwoForm) -> ThreeForm {
    let am = a.to_matrix();
    let al = &alpha.0;
    let mut c = [0.0; 4];
    for (n, slot) in c.iter_mut().enumerate() {
        let [l, m, k] = ThreeForm::omitted_triple(n);
        *slot = al[l] * am[(m, k)] - al[m] * am[(l, k)] + al[k] * am[(l, m)];
    }
    ThreeForm(c)
}

/// Coefficient of `α ∧ β` against `ν_std` for a 1-form and a 3-form.
pub fn wedge_1_3(alpha: &OneForm, beta: &ThreeForm) -> f64 {
    // e^n ∧ (basis 3-form omitting n) = (−1)^n ν_std
    (0..4)
        .map(|n| {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            s * alpha.0[n] * beta.0[n]
        })
        .sum()
}

/// Riemannian metric on the fiber together with an orientation sign; the
/// oriented volume form is `orientation · √det g · ν_std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric4 {
    g: Matrix4<f64>,
    orientation: i8,
}

impl Metric4 {
    /// Builds a metric; rejects non-symmetric or non-positive-definite `g`.
    pub fn new(g: Matrix4<f64>, orientation: i8) -> Result<Self> {
        let scale = g.amax().max(f64::MIN_POSITIVE);
        if !g.iter().all(|x| x.is_finite()) || (g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::MetricNotPositiveDefinite);
        }
        let sym = 0.5 * (g + g.transpose());
        if sym.cholesky().is_none() {
            return Err(Error::MetricNotPositiveDefinite);
        }
        let eig = sym.symmetric_eigenvalues();
        if eig.min() <= 0.0 {
            return Err(Error::MetricNotPositiveDefinite);
        }
        Ok(Self {
            g: sym,
            orientation: if orientation < 0 { -1 } else { 1 },
        })
    }

    pub fn identity() -> Self {
        Self {
            g: Matrix4::identity(),
            orientation: 1,
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.g
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn inverse(&self) -> Matrix4<f64> {
        self.g
            .cholesky()
            .map(|c| c.inverse())
            .expect("metric validated positive definite")
    }

    /// `√det g`: the volume coefficient against `|ν_std|`.
    pub fn volume(&self) -> f64 {
        self.g.determinant().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.g * s, self.orientation)
    }

    /// Inner product of two 2-forms: `(a, b) = ½ a_{μν} b^{μν}`.
    pub fn inner2(&self, a: &TwoForm, b: &TwoForm) -> f64 {
        let gi = self.inverse();
        let raised = gi * b.to_matrix() * gi;
        0.5 * a.to_matrix().component_mul(&raised).sum()
    }

    pub fn inner1(&self, a: &OneForm, b: &OneForm) -> f64 {
        (a.as_vector().transpose() * self.inverse() * b.as_vector())[0]
    }
}

/// Hodge star on 2-forms: `β ∧ *γ = (β, γ) dvol`.
pub fn hodge_star2(g: &Metric4, a: &TwoForm) -> TwoForm {
    let gi = g.inverse();
    let raised = gi * a.to_matrix() * gi;
    let vol = g.volume() * f64::from(g.orientation());
    let mut out = Matrix4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            let mut s = 0.0;
            for al in 0..4 {
                for be in 0..4 {
                    s += levi_civita4(al, be, mu, nu) * raised[(al, be)];
                }
            }
            out[(mu, nu)] = 0.5 * vol * s;
        }
    }
    TwoForm::from_matrix(&out)
}

/// Hodge star on 3-forms, `(*β)_ν = (1/3!) √g β^{αβγ} ε_{αβγν}`.
pub fn hodge_star3(g: &Metric4, beta: &ThreeForm) -> OneForm {
    let gi = g.inverse();
    let vol = g.volume() * f64::from(g.orientation());
    let mut out = [0.0; 4];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let eps = levi_civita4(a, b, c, nu);
                    if eps == 0.0 {
                        continue;
                    }
                    // β^{abc} = g^{aa'} g^{bb'} g^{cc'} β_{a'b'c'}
                    let mut raised = 0.0;
                    for a2 in 0..4 {
                        for b2 in 0..4 {
                            for c2 in 0..4 {
                                let comp = beta.component(a2, b2, c2);
                                if comp != 0.0 {
                                    raised += gi[(a, a2)] * gi[(b, b2)] * gi[(c, c2)] * comp;
                                }
                            }
                        }
                    }
                    s += eps * raised;
                }
            }
        }
        *slot = vol * s / 6.0;
    }
    OneForm(out)
}

/// Matrix of the Hodge star on 2-forms in the storage basis.
pub fn hodge_star2_matrix(g: &Metric4) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        let mut e = [0.0; 6];
        e[k] = 1.0;
        let col = hodge_star2(g, &TwoForm(e));
        for r in 0..6 {
            m[(r, k)] = col.0[r];
        }
    }
    m
}

/// Projectors `P± = (1 ± *)/2` onto self-dual and anti-self-dual forms.
pub fn sd_projectors(g: &Metric4) -> (Matrix6<f64>, Matrix6<f64>) {
    let star = hodge_star2_matrix(g);
    let id = Matrix6::identity();
    ((id + star) * 0.5, (id - star) * 0.5)
}

/// Rank of a matrix by singular values above `rel_tol · σ_max`.
pub fn numerical_rank<R, C, S>(m: &nalgebra::Matrix<f64, R, C, S>, rel_tol: f64) -> usize
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::storage::Storage<f64, R, C>,
{
    let d = nalgebra::DMatrix::from_iterator(m.nrows(), m.ncols(), m.iter().copied());
    let sv = d.singular_values();
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asd1() -> TwoForm {
        TwoForm::omega_bar(0)
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge(&TwoForm::omega(0), &TwoForm::omega(0)).0, 2.0);
        assert_eq!(wedge(&TwoForm::omega(0), &TwoForm::omega(2)).0, 0.0);
        assert_eq!(wedge(&asd1(), &asd1()).0, -2.0);
    }

    #[test]
    fn wedge_matches_elementary_products() {
        // e^a∧e^b∧e^c∧e^d = ε_{abcd} ν_std
        for (i, &(a, b)) in BASIS_PAIRS.iter().enumerate() {
            for (j, &(c, d)) in BASIS_PAIRS.iter().enumerate() {
                let mut x = [0.0; 6];
                x[i] = 1.0;
                let mut y = [0.0; 6];
                y[j] = 1.0;
                assert_eq!(wedge(&TwoForm(x), &TwoForm(y)).0, levi_civita4(a, b, c, d));
            }
        }
    }

    #[test]
    fn gram_of_sd_and_asd_bases() {
        let basis: Vec<TwoForm> = (0..3)
            .map(TwoForm::omega)
            .chain((0..3).map(TwoForm::omega_bar))
            .collect();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i != j {
                    0.0
                } else if i < 3 {
                    2.0
                } else {
                    -2.0
                };
                assert_eq!(wedge(a, b).0, expected);
            }
        }
    }

    #[test]
    fn interior_examples() {
        let e0 = Vector4::new(1.0, 0.0, 0.0, 0.0);
        let e2 = Vector4::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(interior(&e0, &TwoForm::omega(0)), OneForm::basis(1));
        assert_eq!(interior(&e2, &TwoForm::omega(0)), OneForm::basis(3));
        assert_eq!(interior(&Vector4::zeros(), &TwoForm::omega(1)), OneForm::default());
    }

    #[test]
    fn star_examples() {
        let id = Metric4::identity();
        let w = TwoForm::omega(0);
        assert!((hodge_star2(&id, &w) - w).max_abs() < 1e-15);
        assert!((hodge_star2(&id, &asd1()) + asd1()).max_abs() < 1e-15);
        let two = Metric4::new(Matrix4::identity() * 2.0, 1).unwrap();
        assert!((hodge_star2(&two, &w) - w).max_abs() < 1e-14);
    }

    #[test]
    fn star_convention_matches_inner_product() {
        let g = Metric4::new(
            Matrix4::new(
                2.0, 0.3, 0.0, 0.1, 0.3, 1.5, 0.2, 0.0, 0.0, 0.2, 1.0, 0.4, 0.1, 0.0, 0.4, 3.0,
            ),
            1,
        )
        .unwrap();
        let b = TwoForm([0.3, -1.0, 0.5, 2.0, 0.1, -0.7]);
        let c = TwoForm([1.3, 0.2, -0.5, 0.4, 1.1, 0.9]);
        let lhs = wedge(&b, &hodge_star2(&g, &c)).0;
        let rhs = g.inner2(&b, &c) * g.volume();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn three_form_star_table() {
        let id = Metric4::identity();
        let expected = [-1.0, 1.0, -1.0, 1.0];
        for n in 0..4 {
            let mut c = [0.0; 4];
            c[n] = 1.0;
            let s = hodge_star3(&id, &ThreeForm(c));
            for nu in 0..4 {
                let want = if nu == n { expected[n] } else { 0.0 };
                assert_eq!(s.0[nu], want);
            }
        }
    }

    #[test]
    fn projector_examples() {
        let (pp, pm) = sd_projectors(&Metric4::identity());
        let w2 = TwoForm::omega(1).as_vector();
        assert!((pp * w2 - w2).amax() < 1e-15);
        assert!((pm * w2).amax() < 1e-15);
        assert_eq!(numerical_rank(&pp, 1e-9), 3);
        assert_eq!(numerical_rank(&pm, 1e-9), 3);
    }

    #[test]
    fn non_spd_metric_rejected() {
        assert!(Metric4::new(Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0)), 1).is_err());
        let mut asym = Matrix4::identity();
        asym[(0, 1)] = 0.5;
        assert!(Metric4::new(asym, 1).is_err());
    }

    #[test]
    fn interior_twice_vanishes() {
        let u = Vector4::new(0.3, -1.2, 0.7, 2.0);
        let a = TwoForm([0.4, 1.0, -2.0, 0.5, 0.3, -0.1]);
        assert!(interior1(&u, &interior(&u, &a)).abs() < 1e-14);
    }
}
