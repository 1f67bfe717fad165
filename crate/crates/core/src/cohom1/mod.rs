//! SU(2)-invariant connections `A = Σ f_i(t) σ_i ⊗ e_i` on an interval.

pub mod action;
pub mod curvature;
pub mod flow;
pub mod hessian;
pub mod profile;

/// `∫ σ_1∧σ_2∧σ_3` over SU(2) with `dσ_i = −σ_j∧σ_k`.
pub const ORBIT_VOLUME: f64 = 16.0 * std::f64::consts::PI * std::f64::consts::PI;
