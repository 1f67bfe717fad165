//! Ascending gradient flow of `S` within the ansatz, and its de Turck variant.
//!
//! In the `g_A` metric `‖a‖² = ∫ Σ a_i²/β_i² ν_A`, so the flow velocity at a
//! node is `v_i = W_i G_i` with `G = (∂S_h/∂f)/h` and
//! `W_i = β_i²/(V ν_A) = |p_i/q_i| / (V α²)`.
//!
//! Steps are explicit Euler inside the Gershgorin bound of `W J`, and
//! linearly implicit otherwise: `(W⁻¹ − dτ J) δ = dτ G` with `J = ∂G/∂f`
//! assembled from per-cell Hessians.

use nalgebra::{Matrix3, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::action::{action, action_gradient, action_report, cell, cell_hessians, discrete_residual, sup_norm};
use super::curvature::{diagonal_metric, embed};
use super::profile::ProfileGrid;
use super::ORBIT_VOLUME;
use crate::defpoint::CurvatureTriple;
use crate::error::{Error, Result};
use crate::hesssym::{f_map, SymbolPoint, Vec12};

/// Largest decrease of `S` accepted in one step.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Relative size of the non-diagonal part of `f_A(u_A)` tolerated by the
/// de Turck step.
pub const CLOSURE_TOL: f64 = 1e-8;

/// `W` at every interior node, from the cells on either side.
pub fn flow_weights(prof: &ProfileGrid) -> Result<Vec<[f64; 3]>> {
    let full = prof.full_nodes();
    let h = prof.h();
    let cw: Vec<[f64; 3]> = full
        .windows(2)
        .enumerate()
        .map(|(c, w)| {
            let cl = cell(&w[0], &w[1], h);
            let dm = diagonal_metric(&cl.p, &cl.q, prof.lambda).ok_or(Error::DefinitenessLost {
                cell: c,
                t: prof.t0 + (c as f64 + 0.5) * h,
            })?;
            Ok(std::array::from_fn(|i| dm.beta2[i] / (ORBIT_VOLUME * dm.nu_a)))
        })
        .collect::<Result<_>>()?;
    Ok(cw.windows(2).map(|w| std::array::from_fn(|i| 0.5 * (w[0][i] + w[1][i]))).collect())
}

/// `v = W G`.
pub fn flow_velocity(prof: &ProfileGrid) -> Result<Vec<[f64; 3]>> {
    let g = action_gradient(prof)?;
    let w = flow_weights(prof)?;
    let h = prof.h();
    Ok(g.iter().zip(&w).map(|(gk, wk)| std::array::from_fn(|i| wk[i] * gk[i] / h)).collect())
}

/// Hessian of `S_h` as diagonal blocks `D_k` and super-diagonal blocks `U_k`
/// coupling nodes `k` and `k + 1`.
pub struct BlockTridiagonal {
    pub diag: Vec<Matrix3<f64>>,
    pub upper: Vec<Matrix3<f64>>,
}

pub fn hessian_blocks(prof: &ProfileGrid) -> Result<BlockTridiagonal> {
    let cells = cell_hessians(prof)?;
    let n = prof.n();
    let diag = (0..n)
        .map(|k| cells[k].fixed_view::<3, 3>(3, 3).into_owned() + cells[k + 1].fixed_view::<3, 3>(0, 0).into_owned())
        .collect();
    let upper = (0..n - 1).map(|k| cells[k + 1].fixed_view::<3, 3>(0, 3).into_owned()).collect();
    Ok(BlockTridiagonal { diag, upper })
}

impl BlockTridiagonal {
    /// Solves `A x = r` for symmetric positive definite `A`; `None` when a
    /// pivot block is not positive definite.
    pub fn solve_spd(&self, r: &[Vector3<f64>]) -> Option<Vec<Vector3<f64>>> {
        let n = self.diag.len();
        let mut cp: Vec<Matrix3<f64>> = Vec::with_capacity(n);
        let mut dp: Vec<Vector3<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let (m, rhs) = if k == 0 {
                (self.diag[0], r[0])
            } else {
                let lt = self.upper[k - 1].transpose();
                (self.diag[k] - lt * cp[k - 1], r[k] - lt * dp[k - 1])
            };
            let chol = (0.5 * (m + m.transpose())).cholesky()?;
            cp.push(if k + 1 < n { chol.solve(&self.upper[k]) } else { Matrix3::zeros() });
            dp.push(chol.solve(&rhs));
        }
        let mut x = dp;
        for k in (0..n - 1).rev() {
            x[k] = x[k] - cp[k] * x[k + 1];
        }
        Some(x)
    }

    /// `Σ_l |(W J)_kl|` maximised over rows, with `J = H/h`.
    fn gershgorin(&self, w: &[[f64; 3]], h: f64) -> f64 {
        let n = self.diag.len();
        (0..n)
            .flat_map(|k| (0..3).map(move |i| (k, i)))
            .map(|(k, i)| {
                let mut s: f64 = self.diag[k].row(i).iter().map(|x| x.abs()).sum();
                if k + 1 < n {
                    s += self.upper[k].row(i).iter().map(|x| x.abs()).sum::<f64>();
                }
                if k > 0 {
                    s += self.upper[k - 1].column(i).iter().map(|x| x.abs()).sum::<f64>();
                }
                w[k][i] * s / h
            })
            .fold(0.0, f64::max)
    }
}

/// Largest `dτ` for which explicit Euler is stable by the Gershgorin bound.
pub fn stability_bound(prof: &ProfileGrid) -> Result<f64> {
    let w = flow_weights(prof)?;
    Ok(2.0 / hessian_blocks(prof)?.gershgorin(&w, prof.h()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub profile: ProfileGrid,
    pub scheme: Scheme,
    pub action_before: f64,
    pub action_after: f64,
}

/// One step with velocity `W (G − W⁻¹ c)`, where `c` is an explicit
/// correction per node.
fn step_with(prof: &ProfileGrid, dtau: f64, correction: Option<&[[f64; 3]]>) -> Result<Step> {
    let s0 = action(prof)?;
    if dtau == 0.0 {
        return Ok(Step {
            profile: prof.clone(),
            scheme: Scheme::Explicit,
            action_before: s0,
            action_after: s0,
        });
    }
    if !(dtau > 0.0) || !dtau.is_finite() {
        return Err(Error::InvalidInput(format!("dτ = {dtau}")));
    }
    let h = prof.h();
    let w = flow_weights(prof)?;
    let grad = action_gradient(prof)?;
    let blocks = hessian_blocks(prof)?;
    let rhs: Vec<[f64; 3]> = grad
        .iter()
        .enumerate()
        .map(|(k, g)| std::array::from_fn(|i| g[i] / h - correction.map_or(0.0, |c| c[k][i] / w[k][i])))
        .collect();
    let explicit = dtau <= blocks.gershgorin(&w, h).recip() * 2.0;
    let delta: Vec<[f64; 3]> = if explicit {
        rhs.iter().zip(&w).map(|(r, wk)| std::array::from_fn(|i| dtau * wk[i] * r[i])).collect()
    } else {
        let sys = BlockTridiagonal {
            diag: blocks
                .diag
                .iter()
                .zip(&w)
                .map(|(d, wk)| Matrix3::from_diagonal(&Vector3::new(1.0 / wk[0], 1.0 / wk[1], 1.0 / wk[2])) - d * (dtau / h))
                .collect(),
            upper: blocks.upper.iter().map(|u| -u * (dtau / h)).collect(),
        };
        let r: Vec<Vector3<f64>> = rhs.iter().map(|x| Vector3::from(*x) * dtau).collect();
        let x = sys.solve_spd(&r).ok_or(Error::StepRejected {
            dtau,
            reason: "implicit operator not positive definite".into(),
        })?;
        x.iter().map(|v| [v[0], v[1], v[2]]).collect()
    };
    let next = prof.perturbed(&delta, 1.0);
    let s1 = match action(&next) {
        Ok(s) => s,
        Err(Error::DefinitenessLost { .. }) | Err(Error::SignMismatch { .. }) => return Err(Error::StepLeavesDefiniteLocus),
        Err(e) => return Err(e),
    };
    if s1 < s0 - MONOTONE_TOL {
        return Err(Error::StepRejected {
            dtau,
            reason: format!("S decreased by {:e}", s0 - s1),
        });
    }
    Ok(Step {
        profile: next,
        scheme: if explicit { Scheme::Explicit } else { Scheme::Implicit },
        action_before: s0,
        action_after: s1,
    })
}

pub fn grad_flow_step_detailed(prof: &ProfileGrid, dtau: f64) -> Result<Step> {
    step_with(prof, dtau, None)
}

pub fn grad_flow_step(prof: &ProfileGrid, dtau: f64) -> Result<ProfileGrid> {
    step_with(prof, dtau, None).map(|s| s.profile)
}

/// Gauge term `f_A(u_A)` per node, with `u_A` the least-squares solution of
/// `f_A(u) = v` in the `g_A` metric.
///
/// The term `d_A d_A*(A − A₀)` vanishes for diagonal invariant 1-forms, so
/// the reference profile enters only through grid compatibility. The
/// non-diagonal part of `f_A(u_A)` must vanish; otherwise the flow would
/// leave the ansatz and [`Error::AnsatzClosure`] is returned.
pub fn gauge_term(prof: &ProfileGrid, v: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let full = prof.full_nodes();
    let h = prof.h();
    let cells: Vec<_> = full.windows(2).map(|w| cell(&w[0], &w[1], h)).collect();
    let out: Vec<([f64; 3], f64)> = (0..prof.n())
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&cells[k], &cells[k + 1]);
            let p: [f64; 3] = std::array::from_fn(|i| 0.5 * (a.p[i] + b.p[i]));
            let q: [f64; 3] = std::array::from_fn(|i| 0.5 * (a.q[i] + b.q[i]));
            let point = SymbolPoint::new(&CurvatureTriple::new(embed(&p, &q), prof.lambda))?;
            let mut raw = Vec12::zeros();
            for i in 0..3 {
                raw[3 * (i + 1) + i] = v[k][i];
            }
            let (u, _) = point.project_onto_im_f(&raw);
            let fu = f_map(&embed(&p, &q)) * u;
            let diag: [f64; 3] = std::array::from_fn(|i| fu[3 * (i + 1) + i]);
            let off = (0..12)
                .filter(|&r| r % 3 + 1 != r / 3)
                .map(|r| fu[r] * fu[r])
                .sum::<f64>()
                .sqrt();
            let scale = raw.norm().max(f64::MIN_POSITIVE);
            Ok((diag, off / scale))
        })
        .collect::<Result<_>>()?;
    let worst = out.iter().map(|o| o.1).fold(0.0, f64::max);
    if worst > CLOSURE_TOL {
        return Err(Error::AnsatzClosure(worst));
    }
    Ok(out.into_iter().map(|o| o.0).collect())
}

/// Time component `u_t` of `u_A` at every node, for diagnostics.
pub fn gauge_time_component(prof: &ProfileGrid) -> Result<Vec<f64>> {
    let v = flow_velocity(prof)?;
    let full = prof.full_nodes();
    let h = prof.h();
    (0..prof.n())
        .map(|k| {
            let (a, b) = (cell(&full[k], &full[k + 1], h), cell(&full[k + 1], &full[k + 2], h));
            let p: [f64; 3] = std::array::from_fn(|i| 0.5 * (a.p[i] + b.p[i]));
            let q: [f64; 3] = std::array::from_fn(|i| 0.5 * (a.q[i] + b.q[i]));
            let point = SymbolPoint::new(&CurvatureTriple::new(embed(&p, &q), prof.lambda))?;
            let mut raw = Vec12::zeros();
            for i in 0..3 {
                raw[3 * (i + 1) + i] = v[k][i];
            }
            let u: Vector4<f64> = point.project_onto_im_f(&raw).0;
            Ok(u[0])
        })
        .collect()
}

/// Gauge-fixed step: velocity `v − f_A(u_A)`.
pub fn deturck_flow_step_detailed(prof: &ProfileGrid, reference: &ProfileGrid, dtau: f64) -> Result<Step> {
    if reference.n() != prof.n() || reference.t0 != prof.t0 || reference.t1 != prof.t1 {
        return Err(Error::InvalidGrid("reference profile lives on another grid".into()));
    }
    let v = flow_velocity(prof)?;
    let c = gauge_term(prof, &v)?;
    step_with(prof, dtau, Some(&c))
}

pub fn deturck_flow_step(prof: &ProfileGrid, reference: &ProfileGrid, dtau: f64) -> Result<ProfileGrid> {
    deturck_flow_step_detailed(prof, reference, dtau).map(|s| s.profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub max_steps: usize,
    pub dtau: f64,
    pub dtau_max: f64,
    pub dtau_min: f64,
    pub tol: f64,
    pub margin: f64,
    pub deturck: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            dtau: 1e-3,
            dtau_max: 1e6,
            dtau_min: 1e-14,
            tol: 1e-6,
            margin: 0.0,
            deturck: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    DefinitenessLost,
}

impl FlowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxSteps => "max-steps",
            Self::DefinitenessLost => "definiteness-lost",
        }
    }
}

/// One telemetry row; `margin_min` is the smallest `s·M_ii` against the
/// coordinate volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub step: usize,
    pub tau: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub residual_sup: f64,
    pub margin_min: f64,
    #[serde(rename = "M_eig_min")]
    pub m_eig_min: f64,
    #[serde(rename = "M_eig_max")]
    pub m_eig_max: f64,
}

pub const TELEMETRY_HEADER: &str = "step,tau,S,residual_sup,margin_min,M_eig_min,M_eig_max";

impl TelemetryRow {
    pub fn observe(prof: &ProfileGrid, step: usize, tau: f64, margin: f64) -> Result<Self> {
        let r = action_report(prof, margin)?;
        Ok(Self {
            step,
            tau,
            s: r.value,
            residual_sup: sup_norm(&discrete_residual(prof)?),
            margin_min: r.margin_min,
            m_eig_min: r.m_a_min,
            m_eig_max: r.m_a_max,
        })
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{:.17e},{:.17e},{:.6e},{:.6e},{:.17e},{:.17e}",
            self.step, self.tau, self.s, self.residual_sup, self.margin_min, self.m_eig_min, self.m_eig_max
        )
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub status: FlowStatus,
    pub profile: ProfileGrid,
    pub rows: Vec<TelemetryRow>,
    pub rejected: usize,
}

/// Adaptive run: `dτ` halves on rejection and grows by `1.5` after success.
/// Row `0` is the initial state; `sink` sees each row as it is appended.
pub fn run_flow(
    prof: &ProfileGrid,
    reference: Option<&ProfileGrid>,
    cfg: &FlowConfig,
    mut sink: impl FnMut(&TelemetryRow),
) -> Result<FlowRun> {
    let mut cur = prof.clone();
    let mut row = TelemetryRow::observe(&cur, 0, 0.0, cfg.margin)?;
    sink(&row);
    let mut rows = vec![row];
    let mut dtau = cfg.dtau;
    let mut tau = 0.0;
    let mut rejected = 0;
    let mut status = FlowStatus::MaxSteps;
    let reference = reference.cloned().unwrap_or_else(|| prof.clone());
    for step in 1..=cfg.max_steps {
        if row.residual_sup < cfg.tol {
            status = FlowStatus::Converged;
            break;
        }
        let attempt = loop {
            let r = if cfg.deturck {
                deturck_flow_step_detailed(&cur, &reference, dtau)
            } else {
                grad_flow_step_detailed(&cur, dtau)
            };
            match r {
                Ok(s) => match TelemetryRow::observe(&s.profile, step, tau + dtau, cfg.margin) {
                    Ok(obs) => break Some((s, obs)),
                    Err(Error::DefinitenessLost { .. }) => {}
                    Err(e) => return Err(e),
                },
                Err(Error::StepLeavesDefiniteLocus) | Err(Error::StepRejected { .. }) => {}
                Err(e) => return Err(e),
            }
            rejected += 1;
            dtau *= 0.5;
            if dtau < cfg.dtau_min {
                break None;
            }
        };
        let Some((s, obs)) = attempt else {
            status = FlowStatus::DefinitenessLost;
            break;
        };
        tau += dtau;
        dtau = (dtau * 1.5).min(cfg.dtau_max);
        cur = s.profile;
        row = obs;
        sink(&row);
        rows.push(row);
    }
    if status == FlowStatus::MaxSteps && row.residual_sup < cfg.tol {
        status = FlowStatus::Converged;
    }
    Ok(FlowRun {
        status,
        profile: cur,
        rows,
        rejected,
    })
}

/// `S` after each of `steps` fixed-size steps of the plain or de Turck flow.
pub fn action_trajectory(prof: &ProfileGrid, dtau: f64, steps: usize, deturck: bool) -> Result<Vec<f64>> {
    let mut cur = prof.clone();
    let mut out = vec![action(&cur)?];
    for _ in 0..steps {
        let s = if deturck {
            deturck_flow_step_detailed(&cur, prof, dtau)?
        } else {
            grad_flow_step_detailed(&cur, dtau)?
        };
        out.push(s.action_after);
        cur = s.profile;
    }
    Ok(out)
}
