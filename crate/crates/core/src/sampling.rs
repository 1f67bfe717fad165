//! Seeded random inputs for sweeps and property checks.

use nalgebra::{Matrix3, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::defpoint::{connection_sign_of, CurvatureTriple};
use crate::forms4::TwoForm;
use crate::sym3::Sym3;

/// Independent stream for item `index` of a run seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

/// `R Rᵀ + εI` with `R` uniform in `[−1, 1]`, eigenvalues bounded below by `floor`.
pub fn random_spd(rng: &mut impl Rng, floor: f64) -> Sym3 {
    let r = Matrix3::from_fn(|_, _| uniform(rng));
    Sym3::from_matrix(&(r * r.transpose() + Matrix3::identity() * floor))
}

/// Arbitrary symmetric matrix with entries in `[−1, 1]`.
pub fn random_sym(rng: &mut impl Rng) -> Sym3 {
    Sym3(std::array::from_fn(|_| uniform(rng)))
}

/// Trace-free symmetric matrix.
pub fn random_traceless(rng: &mut impl Rng) -> Sym3 {
    let s = random_sym(rng);
    s - Sym3::identity() * (s.trace() / 3.0)
}

/// Haar-uniform rotation in SO(3) from a unit quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let q = loop {
        let v = Vector4::from_fn(|_, _| uniform(rng));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// `I + ½ U` with `U` uniform; condition number stays below 10 and `det > 0`.
pub fn random_gl_plus4(rng: &mut impl Rng) -> Matrix4<f64> {
    loop {
        let t = Matrix4::identity() + Matrix4::from_fn(|_, _| 0.5 * uniform(rng));
        let sv = t.singular_values();
        if t.determinant() > 0.0 && sv.max() / sv.min() < 10.0 {
            return t;
        }
    }
}

/// Invertible 3×3 with condition number below 10.
pub fn random_gl3(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let b = Matrix3::identity() * 1.5 + Matrix3::from_fn(|_, _| uniform(rng));
        let sv = b.singular_values();
        if sv.min() > 0.0 && sv.max() / sv.min() < 10.0 {
            return b;
        }
    }
}

/// Unit vector in `R⁴`.
pub fn random_unit4(rng: &mut impl Rng) -> Vector4<f64> {
    loop {
        let v = Vector4::from_fn(|_, _| uniform(rng));
        let n = v.norm();
        if n > 1e-2 && n <= 1.0 {
            return v / n;
        }
    }
}

/// `B · T*ω`: a definite triple, anti-self-dual for the standard
/// orientation with probability ½, with `Λ = ±3` matching the connection sign.
pub fn random_definite_triple(rng: &mut impl Rng) -> CurvatureTriple {
    let t = random_gl_plus4(rng);
    let b = random_gl3(rng);
    let asd = rng.gen_bool(0.5);
    let base: [TwoForm; 3] = std::array::from_fn(|i| if asd { TwoForm::omega_bar(i) } else { TwoForm::omega(i) });
    let pulled = base.map(|a| a.pullback(&t));
    let f = std::array::from_fn(|i| (0..3).fold(TwoForm::ZERO, |acc, j| acc + pulled[j] * b[(i, j)]));
    let sign = connection_sign_of(&f).expect("pullback of a definite triple is definite");
    CurvatureTriple::new(f, 3.0 * f64::from(sign))
}
