//! Profiles `f = (f_1, f_2, f_3)` on a uniform grid, presets and JSON config.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of interior nodes accepted.
pub const MIN_NODES: usize = 16;

/// Limit values of each `f_i` at the two ends of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub left: [f64; 3],
    pub right: [f64; 3],
}

/// Interior samples `f(t_k)`, `t_k = t0 + (k+1) h`, `h = (t1 − t0)/(n+1)`;
/// the end values come from `bc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub t0: f64,
    pub t1: f64,
    pub lambda: f64,
    pub f: Vec<[f64; 3]>,
    pub bc: Boundary,
}

impl ProfileGrid {
    pub fn new(t0: f64, t1: f64, lambda: f64, f: Vec<[f64; 3]>, bc: Boundary) -> Result<Self> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid("need t0 < t1".into()));
        }
        if f.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!("{} interior nodes, need at least {MIN_NODES}", f.len())));
        }
        if lambda == 0.0 {
            return Err(Error::ZeroLambda);
        }
        if f.iter().flatten().chain(bc.left.iter()).chain(bc.right.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(Self { t0, t1, lambda, f, bc })
    }

    /// Samples `f` at the interior nodes; end values are `f(t0)`, `f(t1)`.
    pub fn sample(t0: f64, t1: f64, n: usize, lambda: f64, f: impl Fn(f64) -> [f64; 3]) -> Result<Self> {
        let h = (t1 - t0) / (n as f64 + 1.0);
        let vals = (0..n).map(|k| f(t0 + (k as f64 + 1.0) * h)).collect();
        Self::new(t0, t1, lambda, vals, Boundary { left: f(t0), right: f(t1) })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / (self.n() as f64 + 1.0)
    }

    /// Time of interior node `k`.
    pub fn t(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 1.0) * self.h()
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n()).map(|k| self.t(k)).collect()
    }

    /// Values at all `n + 2` nodes, ends included.
    pub fn full_nodes(&self) -> Vec<[f64; 3]> {
        let mut v = Vec::with_capacity(self.n() + 2);
        v.push(self.bc.left);
        v.extend_from_slice(&self.f);
        v.push(self.bc.right);
        v
    }

    pub fn with_interior(&self, f: Vec<[f64; 3]>) -> Self {
        Self { f, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Interior values flattened as `3k + i`.
    pub fn flat(&self) -> Vec<f64> {
        self.f.iter().flatten().copied().collect()
    }

    pub fn from_flat(&self, x: &[f64]) -> Self {
        self.with_interior(x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    /// `f + ε d` with `d` given per interior node.
    pub fn perturbed(&self, d: &[[f64; 3]], eps: f64) -> Self {
        self.with_interior(
            self.f
                .iter()
                .zip(d)
                .map(|(a, b)| std::array::from_fn(|i| a[i] + eps * b[i]))
                .collect(),
        )
    }
}

/// Connection of `Λ⁺` for `dt² + Σ h_i² σ_i²` with `dσ_i = −σ_j∧σ_k`:
/// `f_i = h_i′ + (h_j² + h_k² − h_i²) / (2 h_j h_k)`.
///
/// The quotient is continued by `½` where all `h_i` coincide, which covers
/// the collapsing ends of an isotropic metric.
pub fn lambda_plus_profile(h: [f64; 3], dh: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let ratio = if h[i] == h[j] && h[j] == h[k] {
            0.5
        } else {
            (h[j] * h[j] + h[k] * h[k] - h[i] * h[i]) / (2.0 * h[j] * h[k])
        };
        dh[i] + ratio
    })
}

/// Round `S⁴` as `dt² + ¼ sin²t Σ σ_i²` on `(0, π)`.
pub fn round_metric(t: f64) -> ([f64; 3], [f64; 3]) {
    let h = 0.5 * t.sin();
    let dh = 0.5 * t.cos();
    ([h; 3], [dh; 3])
}

/// Einstein constant used by the `S⁴` presets. Its sign is the connection
/// sign of the derived round profile.
pub const ROUND_LAMBDA: f64 = -3.0;

/// Round `S⁴` profile obtained from [`lambda_plus_profile`] of [`round_metric`].
pub fn round_s4(n: usize) -> Result<ProfileGrid> {
    ProfileGrid::sample(0.0, PI, n, ROUND_LAMBDA, |t| {
        let (h, dh) = round_metric(t);
        lambda_plus_profile(h, dh)
    })
}

/// `ε c_i sin²(π (t − t0)/(t1 − t0))`, vanishing at both ends.
pub fn bump_direction(p: &ProfileGrid, c: [f64; 3], mode: usize) -> Vec<[f64; 3]> {
    let len = p.t1 - p.t0;
    (0..p.n())
        .map(|k| {
            let x = (p.t(k) - p.t0) / len;
            let b = if mode <= 1 {
                (PI * x).sin().powi(2)
            } else {
                (PI * x).sin() * (mode as f64 * PI * x).sin()
            };
            c.map(|ci| ci * b)
        })
        .collect()
}

/// Anisotropic perturbation of the round profile with weights `c`.
pub fn perturbed_s4(n: usize, eps: f64, c: [f64; 3]) -> Result<ProfileGrid> {
    let base = round_s4(n)?;
    let d = bump_direction(&base, c, 1);
    Ok(base.perturbed(&d, eps))
}

/// Default anisotropy weights, summing to zero.
pub const DEFAULT_ANISOTROPY: [f64; 3] = [1.0, 0.0, -1.0];

/// `f_i(t) = t` on `(0, 1)`.
pub fn linear(n: usize, lambda: f64) -> Result<ProfileGrid> {
    ProfileGrid::sample(0.0, 1.0, n, lambda, |t| [t; 3])
}

/// Profile source in a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(String),
    Preset(PresetSpec),
    Samples(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub weights: Option<[f64; 3]>,
}

/// JSON profile configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub f: ProfileSpec,
    #[serde(default)]
    pub bc: Option<Boundary>,
}

impl ProfileConfig {
    /// Builds the grid. Presets fix their own interval and end values
    /// (`bc` overrides the latter); sample arrays require `bc`.
    pub fn build(&self) -> Result<ProfileGrid> {
        let (name, eps, weights) = match &self.f {
            ProfileSpec::Samples(v) => {
                let bc = self.bc.ok_or_else(|| Error::InvalidInput("sample arrays need \"bc\"".into()))?;
                if v.len() != self.n {
                    return Err(Error::InvalidGrid(format!("n = {} but {} samples", self.n, v.len())));
                }
                return ProfileGrid::new(self.t0, self.t1, self.lambda, v.clone(), bc);
            }
            ProfileSpec::Named(name) => (name.as_str(), None, None),
            ProfileSpec::Preset(p) => (p.preset.as_str(), p.epsilon, p.weights),
        };
        let g = match name {
            "round_s4" => round_s4(self.n)?,
            "perturbed_s4" => perturbed_s4(self.n, eps.unwrap_or(0.01), weights.unwrap_or(DEFAULT_ANISOTROPY))?,
            "linear" => linear(self.n, self.lambda)?,
            other => return Err(Error::InvalidInput(format!("unknown preset {other:?}"))),
        };
        if (g.t0 - self.t0).abs() > 1e-12 || (g.t1 - self.t1).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("preset {name} lives on [{}, {}]", g.t0, g.t1)));
        }
        let bc = self.bc.unwrap_or(g.bc);
        ProfileGrid::new(g.t0, g.t1, self.lambda, g.f, bc)
    }
}
