use std::fs;
use std::io::Write;
use std::path::Path;

use definite_gauge::cohom1::action::action_report;
use definite_gauge::cohom1::flow::{run_flow, FlowConfig, FlowStatus, TELEMETRY_HEADER};
use definite_gauge::cohom1::profile::{perturbed_s4, ProfileConfig, ProfileGrid, DEFAULT_ANISOTROPY};
use definite_gauge::defpoint::{analyze_point, curvature_gram, CurvatureTriple};
use definite_gauge::forms4::{TwoForm, VolumeCoeff};
use definite_gauge::hesssym::{audit_point, SymbolAudit};
use definite_gauge::riemann::{
    definite_criterion, gursky_check, hitchin_thorpe_half, hitchin_thorpe_value, m_from_einstein, CriterionVerdict,
    CurvatureData, GurskyReport,
};
use definite_gauge::sampling::{random_definite_triple, random_unit4, stream};
use definite_gauge::sym3::{classify, Definiteness, Sym3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Io;

pub enum Verdict {
    Positive,
    Negative,
}

type CliResult<T> = Result<T, String>;

fn read_input<T: for<'de> Deserialize<'de>>(io: &Io) -> CliResult<T> {
    let path = io.input.as_ref().ok_or("--input is required")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
            _ => Ok(()),
        },
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointInput {
    #[serde(rename = "F")]
    f: [[f64; 6]; 3],
    #[serde(rename = "Lambda")]
    lambda: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct NotDefiniteReport {
    verdict: Definiteness,
    M_nu: Sym3,
}

pub fn check_point(io: &Io, tol: f64) -> CliResult<Verdict> {
    let input: PointInput = read_input(io)?;
    let f = input.f.map(TwoForm::new);
    let m_nu = curvature_gram(&f, VolumeCoeff::STD).map_err(|e| e.to_string())?;
    let verdict = classify(&m_nu, tol * m_nu.frobenius());
    if !verdict.is_definite() {
        emit(io.output.as_deref(), &to_json(&NotDefiniteReport { verdict, M_nu: m_nu })?)?;
        return Ok(Verdict::Negative);
    }
    let report = analyze_point(&CurvatureTriple::new(f, input.lambda)).map_err(|e| e.to_string())?;
    emit(io.output.as_deref(), &to_json(&report)?)?;
    Ok(Verdict::Positive)
}

#[derive(Serialize)]
struct AuditSummary {
    seed: u64,
    count: u64,
    tol: f64,
    passes: u64,
    kernel_dim_7: u64,
    w_negative_definite: u64,
    worst_max_eigenvalue_normalized: f64,
    worst_kernel_projector_distance: f64,
    worst_w_max_eigenvalue: f64,
    min_delta_singular_value: f64,
    worst_adjoint_mismatch: f64,
    worst_gauge_annihilation: f64,
}

pub fn symbol_audit(output: Option<&Path>, seed: u64, count: u64, tol: f64) -> CliResult<Verdict> {
    let audits: Vec<SymbolAudit> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let t = random_definite_triple(&mut rng);
            audit_point(&t, &random_unit4(&mut rng)).map_err(|e| e.to_string())
        })
        .collect::<CliResult<_>>()?;
    let fold = |f: fn(&SymbolAudit) -> f64, init: f64, pick: fn(f64, f64) -> f64| audits.iter().map(f).fold(init, pick);
    let pass = |a: &SymbolAudit| a.passes() && a.max_eigenvalue_normalized <= tol;
    let summary = AuditSummary {
        seed,
        count,
        tol,
        passes: audits.iter().filter(|a| pass(a)).count() as u64,
        kernel_dim_7: audits.iter().filter(|a| a.kernel_dim == 7).count() as u64,
        w_negative_definite: audits.iter().filter(|a| a.w_dim == 8 && a.w_max_eigenvalue < 0.0).count() as u64,
        worst_max_eigenvalue_normalized: fold(|a| a.max_eigenvalue_normalized, f64::NEG_INFINITY, f64::max),
        worst_kernel_projector_distance: fold(|a| a.kernel_projector_distance, 0.0, f64::max),
        worst_w_max_eigenvalue: fold(|a| a.w_max_eigenvalue, f64::NEG_INFINITY, f64::max),
        min_delta_singular_value: fold(|a| a.delta_min_singular_value, f64::INFINITY, f64::min),
        worst_adjoint_mismatch: fold(|a| a.adjoint_mismatch, 0.0, f64::max),
        worst_gauge_annihilation: fold(|a| a.gauge_annihilation, 0.0, f64::max),
    };
    emit(output, &to_json(&summary)?)?;
    Ok(if summary.passes == count { Verdict::Positive } else { Verdict::Negative })
}

#[derive(Serialize)]
struct FlowSummary<'a> {
    status: &'static str,
    steps: usize,
    tau: f64,
    #[serde(rename = "S")]
    s: f64,
    residual_sup: f64,
    isotropy_spread: f64,
    rejected_steps: usize,
    profile: &'a ProfileGrid,
}

pub fn flow(io: &Io, tol: f64, steps: usize, dtau: f64, grid: Option<usize>, deturck: bool) -> CliResult<Verdict> {
    let start = match &io.input {
        Some(_) => {
            let mut cfg: ProfileConfig = read_input(io)?;
            if let Some(n) = grid {
                cfg.n = n;
            }
            cfg.build().map_err(|e| e.to_string())?
        }
        None => perturbed_s4(grid.unwrap_or(256), 0.01, DEFAULT_ANISOTROPY).map_err(|e| e.to_string())?,
    };
    if !(dtau > 0.0) {
        return Err(format!("--dtau must be positive, got {dtau}"));
    }
    let cfg = FlowConfig {
        max_steps: steps,
        dtau,
        tol,
        deturck,
        ..FlowConfig::default()
    };
    let mut csv: Box<dyn Write> = match &io.output {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let p = dir.join("telemetry.csv");
            Box::new(fs::File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut write_err = None;
    let mut line = |s: &str| {
        if let Err(e) = writeln!(csv, "{s}") {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                write_err.get_or_insert(e.to_string());
            }
        }
    };
    line(TELEMETRY_HEADER);
    let run = run_flow(&start, None, &cfg, |row| line(&row.csv())).map_err(|e| e.to_string())?;
    drop(csv);
    if let Some(e) = write_err {
        return Err(e);
    }
    let last = run.rows.last().expect("initial row is always recorded");
    let summary = FlowSummary {
        status: run.status.as_str(),
        steps: last.step,
        tau: last.tau,
        s: last.s,
        residual_sup: last.residual_sup,
        isotropy_spread: action_report(&run.profile, 0.0).map_err(|e| e.to_string())?.isotropy_spread,
        rejected_steps: run.rejected,
        profile: &run.profile,
    };
    let json = to_json(&summary)?;
    match &io.output {
        Some(dir) => emit(Some(&dir.join("profile.json")), &json)?,
        None => eprintln!("{json}"),
    }
    Ok(match run.status {
        FlowStatus::DefinitenessLost => Verdict::Negative,
        _ => Verdict::Positive,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RiemannInput {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    s: Option<f64>,
    #[serde(default, rename = "Wplus")]
    w_plus: Option<[[f64; 3]; 3]>,
    #[serde(default, rename = "Ric0")]
    ric0: Option<[[f64; 3]; 3]>,
    #[serde(default, rename = "Lambda")]
    lambda: Option<f64>,
    #[serde(default)]
    chi: Option<i64>,
    #[serde(default)]
    tau: Option<i64>,
}

impl RiemannInput {
    fn data(&self) -> CliResult<CurvatureData> {
        match (&self.preset, self.s, self.w_plus, self.ric0, self.lambda) {
            (Some(p), None, None, None, None) => match p.as_str() {
                "hyperbolic" => Ok(CurvatureData::hyperbolic()),
                "round" => Ok(CurvatureData::round()),
                other => Err(format!("unknown preset {other:?}")),
            },
            (None, Some(s), Some(w_plus), Some(ric0), Some(lambda)) => {
                let d = CurvatureData { s, w_plus, ric0, lambda };
                d.w_plus().map_err(|e| e.to_string())?;
                Ok(d)
            }
            _ => Err("give either \"preset\" or all of \"s\", \"Wplus\", \"Ric0\", \"Lambda\"".into()),
        }
    }
}

#[derive(Serialize)]
struct HitchinThorpe {
    chi: i64,
    tau: i64,
    value: i64,
    holds: bool,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct RiemannReport {
    data: CurvatureData,
    criterion: CriterionVerdict,
    M: Option<Sym3>,
    gursky: Option<GurskyReport>,
    gursky_not_applicable: Option<String>,
    hitchin_thorpe: Option<HitchinThorpe>,
}

pub fn riemann_check(io: &Io) -> CliResult<Verdict> {
    let input: RiemannInput = read_input(io)?;
    let data = input.data()?;
    let criterion = definite_criterion(&data).map_err(|e| e.to_string())?;
    let w = data.w_plus().map_err(|e| e.to_string())?;
    let einstein = data.ric0.iter().flatten().all(|&x| x == 0.0);
    let m = if einstein {
        Some(m_from_einstein(data.lambda, &w).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let (gursky, gursky_not_applicable) = match gursky_check(data.lambda, &w) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let hitchin_thorpe = match (input.chi, input.tau) {
        (Some(chi), Some(tau)) => Some(HitchinThorpe {
            chi,
            tau,
            value: hitchin_thorpe_value(chi, tau),
            holds: hitchin_thorpe_half(chi, tau),
        }),
        (None, None) => None,
        _ => return Err("\"chi\" and \"tau\" must be given together".into()),
    };
    let report = RiemannReport {
        data,
        criterion,
        M: m,
        gursky,
        gursky_not_applicable,
        hitchin_thorpe,
    };
    emit(io.output.as_deref(), &to_json(&report)?)?;
    Ok(if criterion.holds { Verdict::Positive } else { Verdict::Negative })
}
