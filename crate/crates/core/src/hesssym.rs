//! Principal symbols of the gauge action and of the Hessian of the action.
//!
//! Every point is orthonormalized once: with `g_A = L Lᵀ` the coframe
//! `y = T x`, `T = R Lᵀ`, is `g_A`-orthonormal and positively oriented
//! (`R` reverses `y³` when the induced orientation is negative), so `ν_A`
//! becomes `dy⁰¹²³`. In that frame all adjoints are transposes.
//!
//! `Λ¹ ⊗ E` is indexed by `3μ + i` (coframe index `μ`, fiber index `i`);
//! `Sym3` uses the orthonormal `vec6` coordinates.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, SMatrix, SVector, SymmetricEigen, Vector4};

use crate::defpoint::{connection_sign, metric_reconstruct, normalize_unchecked, CurvatureTriple};
use crate::error::{Error, Result};
use crate::forms4::{hodge_star3, wedge, wedge_1_2, Metric4, OneForm, TwoForm, VolumeCoeff};
use crate::sym3::{map_l_matrix, Sym3};

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Vec12 = SVector<f64, 12>;
pub type FMap = SMatrix<f64, 12, 4>;
pub type DeltaMap = SMatrix<f64, 6, 12>;
pub type GaugeMap = SMatrix<f64, 12, 7>;

/// Relative singular-value threshold for ranks and kernels.
pub const RANK_REL_TOL: f64 = 1e-9;

/// `f(u) = ι_u F`, column `a` holding `ι_{e_a} F` in coordinates `3ν + i`.
pub fn f_map(f: &[TwoForm; 3]) -> FMap {
    let mut out = FMap::zeros();
    for (i, fi) in f.iter().enumerate() {
        let m = fi.to_matrix();
        for a in 0..4 {
            for nu in 0..4 {
                out[(3 * nu + i, a)] = m[(a, nu)];
            }
        }
    }
    out
}

/// `η ∧ a` for `a ∈ Λ¹ ⊗ E`, one 2-form per fiber index.
fn eta_wedge(eta: &Vector4<f64>, a: &Vec12) -> [TwoForm; 3] {
    let e = OneForm::from_vector(eta);
    std::array::from_fn(|i| e.wedge(&OneForm([a[i], a[3 + i], a[6 + i], a[9 + i]])))
}

/// Normalized data of a definite point expressed in its `g_A`-orthonormal frame.
#[derive(Debug, Clone)]
pub struct SymbolPoint {
    /// `y = T x`.
    pub t: Matrix4<f64>,
    pub g_a: Metric4,
    pub nu_a: VolumeCoeff,
    pub m_a: Sym3,
    pub abs_lambda: f64,
    pub sign: i8,
    /// Curvature components in the orthonormal frame.
    pub f: [TwoForm; 3],
    l_matrix: SMatrix<f64, 6, 6>,
}

impl SymbolPoint {
    pub fn new(triple: &CurvatureTriple) -> Result<Self> {
        let (nu_a, m_a) = normalize_unchecked(&triple.f, triple.lambda, VolumeCoeff::STD)?;
        let g_a = metric_reconstruct(&triple.f, nu_a)?;
        let sign = connection_sign(&triple.f, &g_a)?;
        let l = g_a
            .matrix()
            .cholesky()
            .ok_or(Error::MetricNotPositiveDefinite)?
            .l();
        let mut t = l.transpose();
        if g_a.orientation() < 0 {
            t.row_mut(3).neg_mut();
        }
        let t_inv = t.try_inverse().ok_or(Error::MetricNotPositiveDefinite)?;
        let f = triple.f.map(|a| a.pullback(&t_inv));
        let abs_lambda = triple.lambda.abs();
        let l_matrix = map_l_matrix(&m_a, abs_lambda)?;
        Ok(Self {
            t,
            g_a,
            nu_a,
            m_a,
            abs_lambda,
            sign,
            f,
            l_matrix,
        })
    }

    /// Covector in frame components, normalized to unit length.
    pub fn frame_covector(&self, eta: &Vector4<f64>) -> Result<Vector4<f64>> {
        let t_inv = self.t.try_inverse().ok_or(Error::MetricNotPositiveDefinite)?;
        let e = t_inv.transpose() * eta;
        let n = e.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidInput("covector must be non-zero".into()));
        }
        Ok(e / n)
    }

    /// Tangent vector in frame components.
    pub fn frame_vector(&self, u: &Vector4<f64>) -> Vector4<f64> {
        self.t * u
    }

    /// [`f_map`] in the frame.
    pub fn f_map(&self) -> FMap {
        f_map(&self.f)
    }

    /// Orthogonal projector onto `W_A = (im f)^⊥`.
    pub fn proj_w(&self) -> Mat12 {
        let fm = self.f_map();
        let gram = fm.transpose() * fm;
        let inv = gram.try_inverse().expect("f is injective on a definite point");
        Mat12::identity() - fm * inv * fm.transpose()
    }

    /// `(ξ, u) ↦ −η ⊗ ξ − ι_u F`, columns `ξ_1..ξ_3` then `u_0..u_3`.
    pub fn gauge_symbol(&self, eta: &Vector4<f64>) -> GaugeMap {
        let fm = self.f_map();
        let mut out = GaugeMap::zeros();
        for i in 0..3 {
            for mu in 0..4 {
                out[(3 * mu + i, i)] = -eta[mu];
            }
        }
        for a in 0..4 {
            for r in 0..12 {
                out[(r, 3 + a)] = -fm[(r, a)];
            }
        }
        out
    }

    /// `(δ_η a)_ij = η∧a_i∧F_j + F_i∧η∧a_j` against `ν_A`, for a frame covector `η`.
    pub fn delta_apply(&self, eta: &Vector4<f64>, a: &Vec12) -> Sym3 {
        let ea = eta_wedge(eta, a);
        let mut s = Sym3::ZERO;
        for i in 0..3 {
            for j in 0..=i {
                s.set(i, j, wedge(&ea[i], &self.f[j]).0 + wedge(&self.f[i], &ea[j]).0);
            }
        }
        s
    }

    /// `δ_η` as a 6×12 matrix.
    pub fn delta_symbol(&self, eta: &Vector4<f64>) -> DeltaMap {
        let mut out = DeltaMap::zeros();
        for k in 0..12 {
            let col = self.delta_apply(eta, &Vec12::from_fn(|r, _| if r == k { 1.0 } else { 0.0 }));
            out.set_column(k, &col.to_vec6());
        }
        out
    }

    /// `δ_η^*(N)_i = 2 *(η ∧ Σ_j N_ij F_j)`.
    pub fn delta_adjoint_apply(&self, eta: &Vector4<f64>, n: &Sym3) -> Vec12 {
        let e = OneForm::from_vector(eta);
        let id = Metric4::identity();
        let mut out = Vec12::zeros();
        for i in 0..3 {
            let g = (0..3).fold(TwoForm::ZERO, |acc, j| acc + self.f[j] * n.get(i, j));
            let one = hodge_star3(&id, &wedge_1_2(&e, &g));
            for mu in 0..4 {
                out[3 * mu + i] = 2.0 * one.0[mu];
            }
        }
        out
    }

    /// `δ_η^*` as a 12×6 matrix built from the explicit formula.
    pub fn delta_adjoint_symbol(&self, eta: &Vector4<f64>) -> SMatrix<f64, 12, 6> {
        let mut out = SMatrix::<f64, 12, 6>::zeros();
        for k in 0..6 {
            let mut v = SVector::<f64, 6>::zeros();
            v[k] = 1.0;
            out.set_column(k, &self.delta_adjoint_apply(eta, &Sym3::from_vec6(&v)));
        }
        out
    }

    /// `L_A` in `vec6` coordinates.
    pub fn l_matrix(&self) -> &SMatrix<f64, 6, 6> {
        &self.l_matrix
    }

    /// `σ(D, η) = (|Λ|/12π²) δ_η^* L_A δ_η`.
    pub fn hessian_symbol(&self, eta: &Vector4<f64>) -> Mat12 {
        let d = self.delta_symbol(eta);
        let s = d.transpose() * self.l_matrix * d * (self.abs_lambda / (12.0 * PI * PI));
        0.5 * (s + s.transpose())
    }

    /// `σ(D′, η) = σ(D, η) − Π p_η Π` with `p_η = ηηᵀ ⊗ 1`.
    pub fn gauge_fixed_symbol(&self, eta: &Vector4<f64>) -> Mat12 {
        let mut p = Mat12::zeros();
        for mu in 0..4 {
            for nu in 0..4 {
                for i in 0..3 {
                    p[(3 * mu + i, 3 * nu + i)] = eta[mu] * eta[nu];
                }
            }
        }
        let pi = self.proj_w();
        let s = self.hessian_symbol(eta) - pi * p * pi;
        0.5 * (s + s.transpose())
    }

    /// Least-squares `u` with `ι_u F ≈ a` in the `g_A` metric; `a` and `u`
    /// in original coordinates. Returns `u` and the relative residual.
    pub fn project_onto_im_f(&self, a: &Vec12) -> (Vector4<f64>, f64) {
        let t_inv = self.t.try_inverse().expect("frame map is invertible");
        let mut af = Vec12::zeros();
        for i in 0..3 {
            let v = t_inv.transpose() * Vector4::new(a[i], a[3 + i], a[6 + i], a[9 + i]);
            for mu in 0..4 {
                af[3 * mu + i] = v[mu];
            }
        }
        let fm = self.f_map();
        let gram = fm.transpose() * fm;
        let uf = gram.try_inverse().expect("f is injective on a definite point") * (fm.transpose() * af);
        let resid = (af - fm * uf).norm() / af.norm().max(f64::MIN_POSITIVE);
        (t_inv * uf, resid)
    }
}

/// Orthonormal basis of the column span, by relative singular-value threshold.
pub fn column_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.max();
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * max)
        .collect();
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| u[(r, cols[c])])
}

/// Eigen-analysis of a symmetric 12×12 operator.
#[derive(Debug, Clone)]
pub struct KernelAnalysis {
    pub max_eigenvalue: f64,
    pub spectral_radius: f64,
    pub kernel_dim: usize,
    pub kernel_projector: Mat12,
}

pub fn kernel_analysis(s: &Mat12, rel_tol: f64) -> KernelAnalysis {
    let eig = SymmetricEigen::new(*s);
    let radius = eig.eigenvalues.amax();
    let mut proj = Mat12::zeros();
    let mut dim = 0;
    for k in 0..12 {
        if eig.eigenvalues[k].abs() <= rel_tol * radius {
            let v = eig.eigenvectors.column(k);
            proj += v * v.transpose();
            dim += 1;
        }
    }
    KernelAnalysis {
        max_eigenvalue: eig.eigenvalues.max(),
        spectral_radius: radius,
        kernel_dim: dim,
        kernel_projector: proj,
    }
}

/// Projector onto `span{η ⊗ e} + im f`.
pub fn expected_kernel_projector(point: &SymbolPoint, eta: &Vector4<f64>) -> Mat12 {
    let g = point.gauge_symbol(eta);
    let basis = column_space_basis(&DMatrix::from_fn(12, 7, |r, c| g[(r, c)]), RANK_REL_TOL);
    let p = &basis * basis.transpose();
    Mat12::from_fn(|r, c| p[(r, c)])
}

/// Largest eigenvalue of `σ(D′, η)` restricted to `W_A`, and `dim W_A`.
pub fn max_eigenvalue_on_w(point: &SymbolPoint, eta: &Vector4<f64>) -> (f64, usize) {
    let pi = point.proj_w();
    let q = column_space_basis(&DMatrix::from_fn(12, 12, |r, c| pi[(r, c)]), RANK_REL_TOL);
    let s = point.gauge_fixed_symbol(eta);
    let sd = DMatrix::from_fn(12, 12, |r, c| s[(r, c)]);
    let restricted = q.transpose() * sd * &q;
    let ev = restricted.symmetric_eigenvalues();
    (ev.max(), q.ncols())
}

/// One-line summary of the symbol checks at a point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SymbolAudit {
    pub max_eigenvalue_normalized: f64,
    pub kernel_dim: usize,
    pub kernel_projector_distance: f64,
    pub w_dim: usize,
    pub w_max_eigenvalue: f64,
    pub delta_min_singular_value: f64,
    pub adjoint_mismatch: f64,
    pub gauge_annihilation: f64,
}

impl SymbolAudit {
    /// Passes the pinned tolerances.
    pub fn passes(&self) -> bool {
        self.max_eigenvalue_normalized <= 1e-9
            && self.kernel_dim == 7
            && self.kernel_projector_distance <= 1e-8
            && self.w_dim == 8
            && self.w_max_eigenvalue < 0.0
            && self.adjoint_mismatch <= 1e-10
            && self.gauge_annihilation <= 1e-10
    }
}

/// Runs every symbol check at `triple` for the covector `eta` (original coordinates).
pub fn audit_point(triple: &CurvatureTriple, eta: &Vector4<f64>) -> Result<SymbolAudit> {
    let p = SymbolPoint::new(triple)?;
    let e = p.frame_covector(eta)?;
    let sigma = p.hessian_symbol(&e);
    let ka = kernel_analysis(&sigma, RANK_REL_TOL);
    let expected = expected_kernel_projector(&p, &e);
    let (w_max, w_dim) = max_eigenvalue_on_w(&p, &e);
    let d = p.delta_symbol(&e);
    let adj = p.delta_adjoint_symbol(&e);
    let scale = d.amax().max(f64::MIN_POSITIVE);
    let annihilation = (sigma * p.gauge_symbol(&e)).amax() / ka.spectral_radius.max(f64::MIN_POSITIVE);
    Ok(SymbolAudit {
        max_eigenvalue_normalized: ka.max_eigenvalue / ka.spectral_radius,
        kernel_dim: ka.kernel_dim,
        kernel_projector_distance: (ka.kernel_projector - expected).norm(),
        w_dim,
        w_max_eigenvalue: w_max / ka.spectral_radius,
        delta_min_singular_value: d.singular_values().min(),
        adjoint_mismatch: (adj - d.transpose()).amax() / scale,
        gauge_annihilation: annihilation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms4::numerical_rank;
    use crate::sampling::{random_definite_triple, random_unit4, stream};

    fn standard() -> SymbolPoint {
        SymbolPoint::new(&CurvatureTriple::standard(3.0)).unwrap()
    }

    #[test]
    fn f_map_standard_e0() {
        let fm = f_map(&[0, 1, 2].map(TwoForm::omega));
        for i in 0..3 {
            for nu in 0..4 {
                let expect = if nu == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(fm[(3 * nu + i, 0)], expect);
            }
        }
    }

    #[test]
    fn f_map_rank() {
        let mut rng = stream(11, 0);
        for _ in 0..100 {
            let t = random_definite_triple(&mut rng);
            assert_eq!(numerical_rank(&f_map(&t.f), RANK_REL_TOL), 4);
        }
        // Every component annihilated by e_0.
        let f = [
            TwoForm::elementary(2, 3),
            TwoForm::elementary(3, 1),
            TwoForm::elementary(1, 2) + TwoForm::elementary(2, 3),
        ];
        assert!(numerical_rank(&f_map(&f), RANK_REL_TOL) < 4);
    }

    #[test]
    fn projector_axioms() {
        let mut rng = stream(12, 0);
        let p = SymbolPoint::new(&random_definite_triple(&mut rng)).unwrap();
        let pi = p.proj_w();
        assert!((pi * pi - pi).amax() < 1e-11);
        assert!((pi - pi.transpose()).amax() < 1e-11);
        assert_eq!(numerical_rank(&pi, RANK_REL_TOL), 8);
        assert!((pi * p.f_map()).amax() < 1e-11);
    }

    #[test]
    fn gauge_symbol_image_is_seven_dimensional() {
        let p = standard();
        let eta = Vector4::new(0.0, 1.0, 0.0, 0.0);
        let g = p.gauge_symbol(&eta);
        assert_eq!(numerical_rank(&g, RANK_REL_TOL), 7);
        for i in 0..3 {
            for mu in 0..4 {
                assert_eq!(g[(3 * mu + i, i)], -eta[mu]);
            }
        }
    }

    #[test]
    fn delta_on_gauge_directions() {
        let mut rng = stream(13, 0);
        let p = SymbolPoint::new(&random_definite_triple(&mut rng)).unwrap();
        let eta = random_unit4(&mut rng);
        let u = random_unit4(&mut rng);
        let a = p.f_map() * u;
        let d = p.delta_apply(&eta, &a);
        assert!((d - p.m_a * eta.dot(&u)).frobenius() < 1e-12 * p.m_a.frobenius());
        let mut along = Vec12::zeros();
        for mu in 0..4 {
            along[3 * mu + 1] = eta[mu];
        }
        assert!(p.delta_apply(&eta, &along).frobenius() < 1e-14);
        assert_eq!(numerical_rank(&p.delta_symbol(&eta), RANK_REL_TOL), 6);
    }

    #[test]
    fn explicit_adjoint_matches_transpose() {
        let mut rng = stream(14, 0);
        for _ in 0..20 {
            let p = SymbolPoint::new(&random_definite_triple(&mut rng)).unwrap();
            let eta = random_unit4(&mut rng);
            let d = p.delta_symbol(&eta);
            assert!((p.delta_adjoint_symbol(&eta) - d.transpose()).amax() < 1e-10 * d.amax());
        }
        let p = standard();
        let eta = Vector4::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(p.delta_adjoint_apply(&eta, &Sym3::ZERO), Vec12::zeros());
    }

    #[test]
    fn standard_point_symbol() {
        let p = standard();
        let eta = Vector4::new(0.6, 0.0, 0.8, 0.0);
        let a = audit_point(&CurvatureTriple::standard(3.0), &eta).unwrap();
        assert!(a.passes(), "{a:?}");
        assert!(p.gauge_fixed_symbol(&eta) == p.gauge_fixed_symbol(&eta).transpose());
    }

    #[test]
    fn random_points_pass_audit() {
        let mut rng = stream(15, 0);
        for _ in 0..50 {
            let t = random_definite_triple(&mut rng);
            let eta = random_unit4(&mut rng);
            let a = audit_point(&t, &eta).unwrap();
            assert!(a.passes(), "{a:?}");
        }
    }

    #[test]
    fn im_f_projection_recovers_vector() {
        let mut rng = stream(16, 0);
        let t = random_definite_triple(&mut rng);
        let p = SymbolPoint::new(&t).unwrap();
        let u = random_unit4(&mut rng);
        let (got, resid) = p.project_onto_im_f(&(f_map(&t.f) * u));
        assert!((got - u).amax() < 1e-12 && resid < 1e-12);
    }
}
