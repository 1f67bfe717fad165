//! The action `S = (Λ²/12π²) ∫ ν_A` on cells between grid nodes.
//!
//! Cell `c` joins full nodes `c` and `c + 1`. On a cell `p = Δf/h` and `q`
//! is the cell average of `f_j f_k − f_i` along the linear interpolant,
//! `q_i = f̄_j f̄_k + Δf_j Δf_k / 12 − f̄_i`, so that
//! `Σ_i p_i q_i h = Δ(f_1 f_2 f_3 − ½ Σ f_i²)` holds exactly and the
//! discrete Pontryagin sum telescopes to its boundary value.
//!
//! With `m_i = 2 p_i q_i` and `T = Σ √(s m_i)`, `ν_A = T²/Λ²` against the
//! induced orientation and `S_h = (V/12π²) Σ_c h T_c²`.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::curvature::{cyc, diagonal_signs, embed};
use super::profile::ProfileGrid;
use super::ORBIT_VOLUME;
use crate::defpoint::{induced_orientation, normalize_unchecked};
use crate::error::{Error, Result};
use crate::forms4::{wedge, VolumeCoeff};
use crate::sym3::{map_l, spd_inv_sqrt, Sym3};

/// `V / 12π²`.
pub fn action_prefactor() -> f64 {
    ORBIT_VOLUME / (12.0 * PI * PI)
}

/// Curvature data of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p: [f64; 3],
    pub q: [f64; 3],
    pub mid: [f64; 3],
    pub delta: [f64; 3],
}

pub fn cell(fl: &[f64; 3], fr: &[f64; 3], h: f64) -> Cell {
    let mid: [f64; 3] = std::array::from_fn(|i| 0.5 * (fl[i] + fr[i]));
    let delta: [f64; 3] = std::array::from_fn(|i| fr[i] - fl[i]);
    Cell {
        p: delta.map(|d| d / h),
        q: std::array::from_fn(|i| {
            let (j, k) = cyc(i);
            mid[j] * mid[k] + delta[j] * delta[k] / 12.0 - mid[i]
        }),
        mid,
        delta,
    }
}

impl Cell {
    pub fn m(&self) -> [f64; 3] {
        std::array::from_fn(|i| 2.0 * self.p[i] * self.q[i])
    }

    /// `T = Σ √(s m_i)` for orientation `s`, `None` off the definite locus.
    pub fn t(&self, s: f64, margin: f64) -> Option<f64> {
        let m = self.m();
        if m.iter().all(|&x| s * x > margin) {
            Some(m.iter().map(|&x| (s * x).sqrt()).sum())
        } else {
            None
        }
    }

    /// `∂(T²)/∂(f_L, f_R)`.
    pub fn grad_t2(&self, s: f64, h: f64) -> Option<[f64; 6]> {
        let t = self.t(s, 0.0)?;
        let m = self.m();
        let w: [f64; 3] = std::array::from_fn(|i| s * t / (s * m[i]).sqrt());
        let mut g = [0.0; 6];
        for i in 0..3 {
            let dp = 2.0 * w[i] * self.q[i];
            let dq = 2.0 * w[i] * self.p[i];
            g[i] -= dp / h;
            g[3 + i] += dp / h;
            let (j, k) = cyc(i);
            g[i] -= 0.5 * dq;
            g[3 + i] -= 0.5 * dq;
            for (a, b) in [(j, k), (k, j)] {
                g[a] += dq * (0.5 * self.mid[b] - self.delta[b] / 12.0);
                g[3 + a] += dq * (0.5 * self.mid[b] + self.delta[b] / 12.0);
            }
        }
        Some(g)
    }
}

/// Orientation and connection sign shared by all cells, after checking
/// definiteness with `margin` and the sign of `Λ`.
fn cells_checked(prof: &ProfileGrid, margin: f64) -> Result<(Vec<Cell>, f64, i8)> {
    let full = prof.full_nodes();
    let h = prof.h();
    let cells: Vec<Cell> = full.windows(2).map(|w| cell(&w[0], &w[1], h)).collect();
    let lost = |c: usize| Error::DefinitenessLost {
        cell: c,
        t: prof.t0 + (c as f64 + 0.5) * h,
    };
    let (s, sign) = diagonal_signs(&cells[cells.len() / 2].p, &cells[cells.len() / 2].q).ok_or_else(|| lost(cells.len() / 2))?;
    for (c, cl) in cells.iter().enumerate() {
        match diagonal_signs(&cl.p, &cl.q) {
            Some((sc, gc)) if sc == s && gc == sign && cl.t(f64::from(s), margin).is_some() => {}
            _ => return Err(lost(c)),
        }
    }
    if f64::from(sign) * prof.lambda < 0.0 {
        return Err(Error::SignMismatch {
            lambda: prof.lambda,
            connection_sign: sign,
        });
    }
    Ok((cells, f64::from(s), sign))
}

/// `S_h`.
pub fn action(prof: &ProfileGrid) -> Result<f64> {
    let (cells, s, _) = cells_checked(prof, 0.0)?;
    let h = prof.h();
    let sum: f64 = cells.iter().map(|c| c.t(s, 0.0).map_or(0.0, |t| t * t)).sum();
    Ok(action_prefactor() * h * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub value: f64,
    pub orientation: i8,
    pub connection_sign: i8,
    /// `(V/12π²) Σ h tr(s M)`: the exact lower bound `S > ⅓ (2χ + 3τ)` side.
    pub lower: f64,
    /// `3 × lower`, equal to the telescoped boundary term.
    pub upper: f64,
    pub margin_min: f64,
    pub m_a_min: f64,
    pub m_a_max: f64,
    /// Largest per-cell `(max_i − min_i)/max_i` of the eigenvalues of `M_A`.
    pub isotropy_spread: f64,
    pub upper_equality: bool,
    /// `|S_h − S_{2h}| / 3` when the cells pair up.
    pub quadrature_error: Option<f64>,
}

/// Isotropy threshold for the equality flag.
pub const EQUALITY_TOL: f64 = 1e-7;

pub fn action_report(prof: &ProfileGrid, margin: f64) -> Result<ActionReport> {
    let (cells, s, sign) = cells_checked(prof, margin)?;
    let h = prof.h();
    let l2 = prof.lambda * prof.lambda;
    let mut value = 0.0;
    let mut trace = 0.0;
    let (mut margin_min, mut a_min, mut a_max, mut spread) = (f64::INFINITY, f64::INFINITY, 0.0_f64, 0.0_f64);
    for c in &cells {
        let t = c.t(s, margin).expect("checked definite");
        value += t * t;
        let sm = c.m().map(|x| s * x);
        trace += sm.iter().sum::<f64>();
        let ma = sm.map(|x| x * l2 / (t * t));
        let lo = ma.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ma.iter().copied().fold(0.0, f64::max);
        margin_min = margin_min.min(sm.iter().copied().fold(f64::INFINITY, f64::min));
        a_min = a_min.min(lo);
        a_max = a_max.max(hi);
        spread = spread.max((hi - lo) / hi);
    }
    let k = action_prefactor() * h;
    let value = k * value;
    let quadrature_error = if (prof.n() + 1).is_multiple_of(2) && prof.n() > 2 * super::profile::MIN_NODES {
        let coarse: Vec<[f64; 3]> = prof.f.iter().skip(1).step_by(2).copied().collect();
        let cg = ProfileGrid::new(prof.t0, prof.t1, prof.lambda, coarse, prof.bc)?;
        action(&cg).ok().map(|sc| (value - sc).abs() / 3.0)
    } else {
        None
    };
    Ok(ActionReport {
        value,
        orientation: s as i8,
        connection_sign: sign,
        lower: k * trace,
        upper: 3.0 * k * trace,
        margin_min,
        m_a_min: a_min,
        m_a_max: a_max,
        isotropy_spread: spread,
        upper_equality: spread < EQUALITY_TOL,
        quadrature_error,
    })
}

/// `∂S_h/∂f_k` at every interior node.
pub fn action_gradient(prof: &ProfileGrid) -> Result<Vec<[f64; 3]>> {
    let (cells, s, _) = cells_checked(prof, 0.0)?;
    let h = prof.h();
    let k = action_prefactor() * h;
    let n = prof.n();
    let mut g = vec![[0.0; 3]; n];
    for (c, cl) in cells.iter().enumerate() {
        let lg = cl.grad_t2(s, h).expect("checked definite");
        for i in 0..3 {
            if c >= 1 {
                g[c - 1][i] += k * lg[i];
            }
            if c < n {
                g[c][i] += k * lg[3 + i];
            }
        }
    }
    Ok(g)
}

/// `d_A Φ_A` components from the exact discrete gradient:
/// `R = −σ s 6π² G / (V |Λ|)` with `G = (∂S_h/∂f)/h`.
pub fn discrete_residual(prof: &ProfileGrid) -> Result<Vec<[f64; 3]>> {
    let (_, s, sign) = cells_checked(prof, 0.0)?;
    let g = action_gradient(prof)?;
    let c = -f64::from(sign) * s * 6.0 * PI * PI / (ORBIT_VOLUME * prof.lambda.abs() * prof.h());
    Ok(g.into_iter().map(|gk| gk.map(|x| c * x)).collect())
}

pub fn sup_norm(v: &[[f64; 3]]) -> f64 {
    v.iter().flatten().fold(0.0_f64, |a, &x| a.max(x.abs()))
}

/// Hessian of each cell term `(V/12π²) h T²` in `(f_L, f_R)`, by central
/// differences of the analytic gradient.
pub fn cell_hessians(prof: &ProfileGrid) -> Result<Vec<Matrix6<f64>>> {
    let (cells, s, _) = cells_checked(prof, 0.0)?;
    let h = prof.h();
    let k = action_prefactor() * h;
    let full = prof.full_nodes();
    cells
        .iter()
        .enumerate()
        .map(|(c, _)| {
            let x0: [f64; 6] = std::array::from_fn(|r| if r < 3 { full[c][r] } else { full[c + 1][r - 3] });
            let mut hm = Matrix6::zeros();
            for col in 0..6 {
                let step = 1e-6 * x0[col].abs().max(1.0);
                let eval = |d: f64| {
                    let mut x = x0;
                    x[col] += d;
                    let cl = cell(&[x[0], x[1], x[2]], &[x[3], x[4], x[5]], h);
                    cl.grad_t2(s, h).map(|g| Vector6::from_row_slice(&g))
                };
                match (eval(step), eval(-step)) {
                    (Some(a), Some(b)) => hm.set_column(col, &((a - b) * (k / (2.0 * step)))),
                    _ => {
                        return Err(Error::DefinitenessLost {
                            cell: c,
                            t: prof.t0 + (c as f64 + 0.5) * h,
                        })
                    }
                }
            }
            Ok(0.5 * (hm + hm.transpose()))
        })
        .collect()
}

/// Cell data for a variation `a` (zero at the ends): `F`, `d_A a`, `M_A`,
/// `ν_A` and the induced orientation, through the generic pointwise algebra.
struct VariationCell {
    f: [crate::forms4::TwoForm; 3],
    da: [crate::forms4::TwoForm; 3],
    m_a: Sym3,
    nu_a: f64,
    orientation: f64,
}

fn variation_cells(prof: &ProfileGrid, a: &[[f64; 3]]) -> Result<Vec<VariationCell>> {
    if a.len() != prof.n() {
        return Err(Error::InvalidInput("variation length differs from the grid".into()));
    }
    cells_checked(prof, 0.0)?;
    let full = prof.full_nodes();
    let mut af = vec![[0.0; 3]];
    af.extend_from_slice(a);
    af.push([0.0; 3]);
    let h = prof.h();
    // Two-point Gauss rule: exact for the quadratic cell average of `d_A a`.
    let nodes = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    (0..full.len() - 1)
        .map(|c| {
            let cl = cell(&full[c], &full[c + 1], h);
            let f = embed(&cl.p, &cl.q);
            let dp: [f64; 3] = std::array::from_fn(|i| (af[c + 1][i] - af[c][i]) / h);
            let dq: [f64; 3] = std::array::from_fn(|i| {
                let (j, k) = cyc(i);
                nodes
                    .iter()
                    .map(|&th| {
                        let fv = |r: usize| full[c][r] + th * (full[c + 1][r] - full[c][r]);
                        let av = |r: usize| af[c][r] + th * (af[c + 1][r] - af[c][r]);
                        0.5 * (fv(j) * av(k) + fv(k) * av(j) - av(i))
                    })
                    .sum()
            });
            let (nu_a, m_a) = normalize_unchecked(&f, prof.lambda, VolumeCoeff::STD)?;
            Ok(VariationCell {
                f,
                da: embed(&dp, &dq),
                m_a,
                nu_a: nu_a.0,
                orientation: f64::from(induced_orientation(&f)?),
            })
        })
        .collect()
}

/// `(|Λ|/6π²) ∫ Σ_ij (M_A^{-1/2})_ij F_i ∧ (d_A a)_j`, the first variation of `S`.
pub fn first_variation_pairing(prof: &ProfileGrid, a: &[[f64; 3]]) -> Result<f64> {
    let h = prof.h();
    let mut total = 0.0;
    for vc in variation_cells(prof, a)? {
        let r = spd_inv_sqrt(&vc.m_a)?;
        let mut w = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                w += r.get(i, j) * wedge(&vc.f[i], &vc.da[j]).0;
            }
        }
        total += vc.orientation * w * h;
    }
    Ok(prof.lambda.abs() / (6.0 * PI * PI) * ORBIT_VOLUME * total)
}

/// `(|Λ|/12π²) ∫ tr(δa · L_A(δa)) ν_A` with `δa` the variation of `M_A`.
pub fn symbol_quadratic_form(prof: &ProfileGrid, a: &[[f64; 3]]) -> Result<f64> {
    let h = prof.h();
    let abs_l = prof.lambda.abs();
    let mut total = 0.0;
    for vc in variation_cells(prof, a)? {
        let mut d = Sym3::ZERO;
        for i in 0..3 {
            for j in 0..=i {
                let v = wedge(&vc.da[i], &vc.f[j]).0 + wedge(&vc.f[i], &vc.da[j]).0;
                d.set(i, j, v / (vc.orientation * vc.nu_a));
            }
        }
        let l = map_l(&vc.m_a, abs_l, &d)?;
        total += d.dot(&l) * vc.nu_a * h;
    }
    Ok(abs_l / (12.0 * PI * PI) * ORBIT_VOLUME * total)
}
