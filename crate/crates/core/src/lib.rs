//! Definite SO(3) connections on oriented 4-manifolds.
//!
//! A triple of curvature 2-forms `F = (F_1, F_2, F_3)` that is *definite*
//! (its wedge Gram matrix is definite) determines a conformal class, a
//! normalized volume form and hence a Riemannian metric `g_A`.  The total
//! volume `S(A) = Λ²/(12π²) ∫ ν_A` is an action whose critical points are
//! Einstein metrics.
//!
//! Layout:
//! - [`forms4`]: exterior algebra on a fixed oriented 4-dimensional fiber.
//! - [`sym3`]: symmetric 3×3 matrices, square roots and the Sylvester solve.
//! - [`defpoint`]: pointwise definite-connection algebra.
//! - [`hesssym`]: gauge action and Hessian symbols on `Λ¹ ⊗ E`.
//! - [`riemann`]: Riemannian-side diagnostics.
//! - [`cohom1`]: the SU(2)-invariant reduction, action, gradient flow.
//! - [`sampling`]: seeded random inputs shared by sweeps and tests.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohom1;
pub mod defpoint;
pub mod error;
pub mod forms4;
pub mod hesssym;
pub mod riemann;
pub mod sampling;
pub mod sym3;

pub use error::{Error, Result};
