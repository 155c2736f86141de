//! Configuration-driven experiments that tie the modules together and write
//! CSV, text-grid and manifest files.

mod config;
mod output;

pub use config::{
    apply_override, merge, paper_physical, preset, resolve, InitialQubit, ModelParams, Numerics, OutputFormat,
    OutputOptions, RunConfig, ScenarioKind, SolverChoice, Sweep, PRESETS, SWEEPABLE,
};
pub use output::{config_hash, fmt_num, hex_digest, wigner_text, Check, FailedPoint, FileRecord, Sink, Table};

use std::path::Path;

use faer::c64;
use log::{info, warn};
use rayon::prelude::*;

use crate::dressing::{
    alpha_beta, dress, effective_h, interaction_from_parts, interaction_parts, resonance_audit, DressedCoupling,
    SystemParams, TermKind,
};
use crate::error::{Error, Result};
use crate::fock::{
    annihilation, expectation, qubit_ops, DensityMatrix, HilbertSpace, Operator, EXCITED, GROUND, TAIL_TOL,
};
use crate::linalg;
use crate::lindblad::{
    adiabatic_elimination_valid, evolve_pure, fidelity, mode_a_in_a_basis, model_single_qubit_laser,
    model_squeezed_laser_effective, model_two_qubit_full, reduced_field, steady_state_with, MasterEquation,
    SteadyStateMethod, SteadyStateOptions,
};
use crate::meanfield::{gaussian_mf_solution, mf_ansatz, mf_photon_number, MFParams};
use crate::ode::OdeOptions;
use crate::wigner::{
    auto_grid, crest_along_axis, gaussian_wigner, wigner_change_basis, wigner_from_density, Basis, Crest, PhaseGrid,
    WignerField,
};

/// Summary returned to callers after files are written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub hash: String,
    pub tables: Vec<(String, Table)>,
    pub failed_points: usize,
    pub failed_checks: usize,
}

/// Process exit status for an error: 2 for invalid input, 4 for I/O and
/// 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Json(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

/// Runs a validated configuration, writing all files into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunOutcome> {
    cfg.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let hash = config_hash(cfg)?;
    let mut sink = Sink::new(out_dir, hash.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    info!("running {} (config {})", cfg.scenario, &hash[..12]);
    let result = pool.install(|| dispatch(cfg, &mut sink));
    match result {
        Ok(tables) => {
            sink.check("scenario completed", true, "");
            sink.finish(cfg)?;
            Ok(RunOutcome {
                hash,
                tables,
                failed_points: sink.failed.len(),
                failed_checks: sink.checks.iter().filter(|c| !c.passed).count(),
            })
        }
        Err(e) => {
            sink.check("scenario completed", false, e.to_string());
            sink.finish(cfg)?;
            Err(e)
        }
    }
}

fn dispatch(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<(String, Table)>> {
    match cfg.scenario {
        ScenarioKind::DressAudit => dress_audit(cfg, sink),
        ScenarioKind::RwaValidate => rwa_validate(cfg, sink),
        ScenarioKind::WignerPanels => wigner_panels(cfg, sink),
        _ => sweep(cfg, sink),
    }
}

fn squeezing(p: &ModelParams) -> Result<f64> {
    match p.r {
        Some(r) => Ok(r),
        None => Ok(dress(p.eta1, p.eta2, 1.0)?.r),
    }
}

fn with_param(base: &ModelParams, name: &str, value: f64) -> Result<ModelParams> {
    let mut v = serde_json::to_value(base)?;
    v[name] = serde_json::json!(value);
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn ode_options(n: &Numerics) -> OdeOptions {
    OdeOptions::with_tolerances(n.atol, n.rtol)
}

fn solve(me: &MasterEquation, n: &Numerics) -> Result<DensityMatrix> {
    let method = match n.solver {
        SolverChoice::Direct => SteadyStateMethod::Direct,
        SolverChoice::Evolve => SteadyStateMethod::Evolve,
    };
    steady_state_with(
        me,
        &SteadyStateOptions {
            method,
            ode: ode_options(n),
            ..SteadyStateOptions::default()
        },
    )
}

/// Repeats `f` with a larger Fock space after truncation failures.
fn with_retry<T>(n: &Numerics, mut f: impl FnMut(usize) -> Result<T>) -> Result<(T, usize)> {
    let mut dim = n.field_dim;
    loop {
        match f(dim) {
            Err(e) if e.is_truncation() && dim < n.max_field_dim => {
                let next = (dim * 3 / 2).clamp(dim + 1, n.max_field_dim);
                info!("{e}; retrying with field_dim = {next}");
                dim = next;
            }
            other => return other.map(|t| (t, dim)),
        }
    }
}

/// Invariant checks recorded for each solved state.
struct Health {
    trace_err: f64,
    hermitian_dev: f64,
    tail: f64,
}

impl Health {
    fn of(full: &DensityMatrix, field: &DensityMatrix) -> Self {
        Self {
            trace_err: (full.trace() - c64::new(1.0, 0.0)).norm(),
            hermitian_dev: linalg::hermitian_deviation(full.matrix()),
            tail: field.truncation_tail(),
        }
    }

    fn record(&self, sink: &mut Sink, label: &str) {
        sink.check(
            format!("{label}: trace"),
            self.trace_err <= 1e-10,
            format!("{:.3e}", self.trace_err),
        );
        sink.check(
            format!("{label}: hermiticity"),
            self.hermitian_dev <= 1e-10,
            format!("{:.3e}", self.hermitian_dev),
        );
        sink.check(
            format!("{label}: truncation"),
            self.tail <= TAIL_TOL,
            format!("{:.3e}", self.tail),
        );
    }
}

fn inversion(full: &DensityMatrix, qubit: usize) -> Result<f64> {
    let (_, sz, _) = qubit_ops(full.space(), qubit)?;
    Ok(-expectation(&sz, full)?.re)
}

fn photons(op_a: &Operator, rho: &DensityMatrix) -> Result<f64> {
    Ok(expectation(&(&op_a.adjoint() * op_a), rho)?.re)
}

/// Steady state of the effective squeezed-laser model together with the
/// mean-field parameters it was built from.
pub struct EffectivePoint {
    pub full: DensityMatrix,
    pub field: DensityMatrix,
    pub dressed: DressedCoupling,
    pub mf: MFParams,
    pub r: f64,
}

pub fn effective_point(p: &ModelParams, n: &Numerics, dim: usize) -> Result<EffectivePoint> {
    let r = squeezing(p)?;
    let mf = MFParams::from_cooperativity(p.c_tilde, p.gamma, p.kappa, p.c_prime)?;
    let dressed = DressedCoupling::from_squeezing(r, mf.g_tilde);
    let space = HilbertSpace::new(1, dim)?;
    let me = model_squeezed_laser_effective(&dressed, p.gamma, p.kappa, p.c_prime, space)?;
    let full = solve(&me, n)?;
    let field = reduced_field(&full)?;
    field.check_truncation("effective-model steady state")?;
    Ok(EffectivePoint {
        full,
        field,
        dressed,
        mf,
        r,
    })
}

/// Auxiliary-qubit parameters `(γ′, g̃′)` realizing `κC̃′` at ratio `g̃′/γ′`.
pub fn auxiliary_rates(p: &ModelParams, g_ratio: f64) -> Result<(f64, f64)> {
    if !(g_ratio > 0.0) || !(p.c_prime > 0.0) {
        return Err(Error::InvalidParameter(
            "two-qubit model needs g_ratio > 0 and c_prime > 0".into(),
        ));
    }
    let gamma_prime = p.kappa * p.c_prime / (g_ratio * g_ratio);
    Ok((gamma_prime, g_ratio * gamma_prime))
}

pub fn full_point(
    p: &ModelParams,
    g_ratio: f64,
    n: &Numerics,
    dim: usize,
) -> Result<(DensityMatrix, DensityMatrix, DressedCoupling)> {
    let r = squeezing(p)?;
    let mf = MFParams::from_cooperativity(p.c_tilde, p.gamma, p.kappa, p.c_prime)?;
    let dressed = DressedCoupling::from_squeezing(r, mf.g_tilde);
    let (gamma_prime, g_aux) = auxiliary_rates(p, g_ratio)?;
    let aux = DressedCoupling {
        u: dressed.v,
        v: dressed.u,
        r: dressed.r,
        g_tilde: g_aux,
        norm_n: dressed.norm_n,
    };
    let space = HilbertSpace::new(2, dim)?;
    let me = model_two_qubit_full(&dressed, &aux, p.gamma, gamma_prime, p.kappa, space)?;
    let full = solve(&me, n)?;
    let field = reduced_field(&full)?;
    field.check_truncation("two-qubit steady state")?;
    Ok((full, field, dressed))
}

fn ansatz_fidelity(p: &ModelParams, field: &DensityMatrix, mf: &MFParams, r: f64, n: &Numerics) -> Result<f64> {
    let f_mag = mf_photon_number(mf).sqrt();
    let ans = mf_ansatz(f_mag, p.c_prime, r, field.space(), n.n_phases)?;
    fidelity(field, &ans)
}

fn sweep_columns(cfg: &RunConfig) -> Vec<String> {
    let base: Vec<String> = match cfg.scenario {
        ScenarioKind::SingleLaser => [
            "c",
            "kappa",
            "mean_photons",
            "inversion",
            "purity",
            "mf_photons",
            "field_dim",
            "tail",
        ]
        .map(String::from)
        .to_vec(),
        ScenarioKind::SqueezedLaser => [
            "c_tilde",
            "r",
            "n_A",
            "n_a",
            "inversion",
            "purity",
            "mf_photons",
            "field_dim",
            "tail",
        ]
        .map(String::from)
        .to_vec(),
        ScenarioKind::TwoQubitFull => [
            "c_tilde",
            "g_ratio",
            "gamma_prime",
            "g_tilde_prime",
            "n_A",
            "n_a",
            "inversion",
            "purity",
            "adiabatic_ok",
            "field_dim",
            "tail",
        ]
        .map(String::from)
        .to_vec(),
        ScenarioKind::FidelitySweep => {
            let mut c = vec!["c_tilde".to_string(), "g_ratio".into(), "fidelity_eff".into()];
            if full_in_sweep(cfg) {
                c.push("fidelity_full".into());
            }
            for g in &cfg.params.g_ratio_values {
                c.push(format!("fidelity_full_{g}"));
            }
            c.extend(["n_A", "n_a", "inversion", "purity", "field_dim", "tail"].map(String::from));
            c
        }
        ScenarioKind::MfCompare => [
            "c_tilde",
            "mf_photons",
            "mf_n_A",
            "exact_n_A",
            "mf_inversion",
            "exact_inversion",
            "fidelity",
            "field_dim",
        ]
        .map(String::from)
        .to_vec(),
        _ => Vec::new(),
    };
    match &cfg.sweep {
        Some(s) if !base.contains(&s.parameter) => {
            let mut c = vec![s.parameter.clone()];
            c.extend(base);
            c
        }
        _ => base,
    }
}

fn full_in_sweep(cfg: &RunConfig) -> bool {
    cfg.numerics.two_qubit || cfg.sweep.as_ref().is_some_and(|s| s.parameter == "g_ratio")
}

fn effective_sweep(cfg: &RunConfig) -> Result<Sweep> {
    if cfg.scenario == ScenarioKind::FidelitySweep {
        return match &cfg.sweep {
            Some(s) if s.parameter == "c_tilde" || s.parameter == "g_ratio" => Ok(s.clone()),
            Some(s) => Err(Error::Config(format!(
                "fidelity_sweep axis must be c_tilde or g_ratio, got {}",
                s.parameter
            ))),
            None => Ok(Sweep {
                parameter: "c_tilde".into(),
                start: 1.5,
                stop: 6.0,
                steps: 10,
            }),
        };
    }
    Ok(cfg.sweep.clone().unwrap_or_else(|| {
        let (name, value) = match cfg.scenario {
            ScenarioKind::SingleLaser => ("c", cfg.params.c),
            _ => ("c_tilde", cfg.params.c_tilde),
        };
        Sweep {
            parameter: name.into(),
            start: value,
            stop: value,
            steps: 1,
        }
    }))
}

type PointOutput = (Vec<(String, f64)>, Vec<Health>);

fn sweep_point(cfg: &RunConfig, p: &ModelParams) -> Result<PointOutput> {
    let n = &cfg.numerics;
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut push = |k: &str, v: f64| out.push((k.to_string(), v));
    let mut health = Vec::new();
    match cfg.scenario {
        ScenarioKind::SingleLaser => {
            let g = (p.c * p.gamma * p.kappa).sqrt();
            let ((full, field), dim) = with_retry(n, |dim| {
                let space = HilbertSpace::new(1, dim)?;
                let me = model_single_qubit_laser(g, p.gamma, p.kappa, space)?;
                let full = solve(&me, n)?;
                let field = reduced_field(&full)?;
                field.check_truncation("single-qubit laser steady state")?;
                Ok((full, field))
            })?;
            let a = annihilation(field.space())?;
            let mf = MFParams::new(g, p.gamma, p.kappa, 0.0)?;
            push("c", p.c);
            push("kappa", p.kappa);
            push("mean_photons", photons(&a, &field)?);
            push("inversion", inversion(&full, 0)?);
            push("purity", field.purity());
            push("mf_photons", mf_photon_number(&mf));
            push("field_dim", dim as f64);
            push("tail", field.truncation_tail());
            health.push(Health::of(&full, &field));
        }
        ScenarioKind::SqueezedLaser => {
            let (pt, dim) = with_retry(n, |dim| effective_point(p, n, dim))?;
            let big_a = annihilation(pt.field.space())?;
            let a = mode_a_in_a_basis(&pt.dressed, pt.field.space())?;
            push("c_tilde", p.c_tilde);
            push("r", pt.r);
            push("n_A", photons(&big_a, &pt.field)?);
            push("n_a", photons(&a, &pt.field)?);
            push("inversion", inversion(&pt.full, 0)?);
            push("purity", pt.field.purity());
            push("mf_photons", mf_photon_number(&pt.mf));
            push("field_dim", dim as f64);
            push("tail", pt.field.truncation_tail());
            health.push(Health::of(&pt.full, &pt.field));
        }
        ScenarioKind::TwoQubitFull => {
            let ((full, field, dressed), dim) = with_retry(n, |dim| full_point(p, p.g_ratio, n, dim))?;
            let (gamma_prime, g_aux) = auxiliary_rates(p, p.g_ratio)?;
            let big_a = annihilation(field.space())?;
            let a = mode_a_in_a_basis(&dressed, field.space())?;
            let n_big = photons(&big_a, &field)?;
            push("c_tilde", p.c_tilde);
            push("g_ratio", p.g_ratio);
            push("gamma_prime", gamma_prime);
            push("g_tilde_prime", g_aux);
            push("n_A", n_big);
            push("n_a", photons(&a, &field)?);
            push("inversion", inversion(&full, 0)?);
            push("purity", field.purity());
            push(
                "adiabatic_ok",
                if adiabatic_elimination_valid(g_aux, gamma_prime, n_big) {
                    1.0
                } else {
                    0.0
                },
            );
            push("field_dim", dim as f64);
            push("tail", field.truncation_tail());
            health.push(Health::of(&full, &field));
        }
        ScenarioKind::FidelitySweep => {
            let ((pt, f_eff), dim) = with_retry(n, |dim| {
                let pt = effective_point(p, n, dim)?;
                let f = ansatz_fidelity(p, &pt.field, &pt.mf, pt.r, n)?;
                Ok((pt, f))
            })?;
            push("c_tilde", p.c_tilde);
            push("g_ratio", p.g_ratio);
            push("fidelity_eff", f_eff);
            let mut ratios = Vec::new();
            if full_in_sweep(cfg) {
                ratios.push(("fidelity_full".to_string(), p.g_ratio));
            }
            for g in &p.g_ratio_values {
                ratios.push((format!("fidelity_full_{g}"), *g));
            }
            for (name, g) in ratios {
                let ((full, field, _), _) = with_retry(n, |d| full_point(p, g, n, d.max(dim)))?;
                let ans = mf_ansatz(
                    mf_photon_number(&pt.mf).sqrt(),
                    p.c_prime,
                    pt.r,
                    field.space(),
                    n.n_phases,
                )?;
                push(&name, fidelity(&field, &ans)?);
                health.push(Health::of(&full, &field));
            }
            let big_a = annihilation(pt.field.space())?;
            let a = mode_a_in_a_basis(&pt.dressed, pt.field.space())?;
            push("n_A", photons(&big_a, &pt.field)?);
            push("n_a", photons(&a, &pt.field)?);
            push("inversion", inversion(&pt.full, 0)?);
            push("purity", pt.field.purity());
            push("field_dim", dim as f64);
            push("tail", pt.field.truncation_tail());
            health.push(Health::of(&pt.full, &pt.field));
        }
        ScenarioKind::MfCompare => {
            let ((pt, fid), dim) = with_retry(n, |dim| {
                let pt = effective_point(p, n, dim)?;
                let f = ansatz_fidelity(p, &pt.field, &pt.mf, pt.r, n)?;
                Ok((pt, f))
            })?;
            let f_bar = mf_photon_number(&pt.mf).sqrt();
            let gs = gaussian_mf_solution(c64::new(f_bar, 0.0), p.c_prime, pt.r)?;
            let c = pt.mf.c_tilde();
            let big_a = annihilation(pt.field.space())?;
            push("c_tilde", p.c_tilde);
            push("mf_photons", f_bar * f_bar);
            push("mf_n_A", gs.photon_number());
            push("exact_n_A", photons(&big_a, &pt.field)?);
            push("mf_inversion", if c <= 1.0 { 1.0 } else { 1.0 / c });
            push("exact_inversion", inversion(&pt.full, 0)?);
            push("fidelity", fid);
            push("field_dim", dim as f64);
            health.push(Health::of(&pt.full, &pt.field));
        }
        _ => unreachable!("not a sweep scenario"),
    }
    Ok((out, health))
}

fn sweep(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<(String, Table)>> {
    let axis = effective_sweep(cfg)?;
    axis.validate()?;
    let columns = sweep_columns(&RunConfig {
        sweep: Some(axis.clone()),
        ..cfg.clone()
    });
    let values = axis.values();
    let points: Vec<ModelParams> = values
        .iter()
        .map(|&v| with_param(&cfg.params, &axis.parameter, v))
        .collect::<Result<_>>()?;
    let results: Vec<Result<PointOutput>> = points.par_iter().map(|p| sweep_point(cfg, p)).collect();
    let mut table = Table {
        columns: columns.clone(),
        rows: Vec::new(),
    };
    for (i, (res, &v)) in results.into_iter().zip(&values).enumerate() {
        match res {
            Ok((cells, health)) => {
                let mut row = Vec::with_capacity(columns.len());
                for c in &columns {
                    let x = if *c == axis.parameter {
                        v
                    } else {
                        cells.iter().find(|(k, _)| k == c).map(|(_, x)| *x).unwrap_or(f64::NAN)
                    };
                    row.push(x);
                }
                if row.iter().any(|x| !x.is_finite()) {
                    warn!("point {i} ({} = {v}) produced non-finite output", axis.parameter);
                    sink.failed.push(FailedPoint {
                        index: i,
                        value: v,
                        error: "non-finite output".into(),
                    });
                    continue;
                }
                for (k, h) in health.iter().enumerate() {
                    h.record(sink, &format!("point {i} state {k}"));
                }
                table.rows.push(row);
            }
            Err(e) => {
                warn!("point {i} ({} = {v}) failed: {e}", axis.parameter);
                sink.failed.push(FailedPoint {
                    index: i,
                    value: v,
                    error: e.to_string(),
                });
            }
        }
    }
    let name = format!("{}.csv", cfg.scenario.name());
    sink.write(&name, &table.to_csv(&sink.hash.clone()))?;
    Ok(vec![(name, table)])
}

fn dress_audit(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<(String, Table)>> {
    let phys: &SystemParams = &cfg.params.physical;
    let d = dress(phys.eta1, phys.eta2, phys.g)?;
    let report = resonance_audit(phys, cfg.params.max_index, phys.g)?;
    let mut text = format!("# config_hash={}\n", sink.hash);
    text.push_str(&format!(
        "epsilon = {}\nomega = {}\ng = {}\neta1 = {}\neta2 = {}\n",
        phys.epsilon, phys.omega, phys.g, phys.eta1, phys.eta2
    ));
    text.push_str(&format!(
        "u = {:.12}\nv = {:.12}\nr = {:.12}\ng_tilde = {:.12e}\nu^2 - v^2 = {:.3e}\n",
        d.u,
        d.v,
        d.r,
        d.g_tilde,
        d.u * d.u - d.v * d.v
    ));
    let kind_name = |k: TermKind| match k {
        TermKind::Rotating => "rotating",
        TermKind::CounterRotating => "counter-rotating",
    };
    for t in &report.kept_terms {
        text.push_str(&format!(
            "kept {} term ({}, {}): detuning = {:.6e}, weight = {:.6e}\n",
            kind_name(t.kind),
            t.indices.0,
            t.indices.1,
            t.detuning,
            t.weight
        ));
    }
    for kind in [TermKind::Rotating, TermKind::CounterRotating] {
        match report.first_spurious(kind) {
            Some(t) => text.push_str(&format!(
                "first spurious {} resonance: ({}, {}) detuning = {:.6e}, weight = {:.6e}\n",
                kind_name(kind),
                t.indices.0,
                t.indices.1,
                t.detuning,
                t.weight
            )),
            None => text.push_str(&format!("first spurious {} resonance: none\n", kind_name(kind))),
        }
    }
    text.push_str(&format!(
        "spurious terms below threshold {}: {}\n",
        report.threshold,
        report.spurious_terms.len()
    ));
    sink.write("dress_audit.txt", &text)?;

    let mut table = Table::new(&["kind", "m1", "m2", "detuning", "weight", "kept"]);
    for (t, kept) in report
        .kept_terms
        .iter()
        .map(|t| (t, 1.0))
        .chain(report.spurious_terms.iter().map(|t| (t, 0.0)))
    {
        let kind = if t.kind == TermKind::Rotating { 0.0 } else { 1.0 };
        table.rows.push(vec![
            kind,
            t.indices.0 as f64,
            t.indices.1 as f64,
            t.detuning,
            t.weight,
            kept,
        ]);
    }
    sink.write("resonances.csv", &table.to_csv(&sink.hash.clone()))?;
    sink.check(
        "bogoliubov relation",
        (d.u * d.u - d.v * d.v - 1.0).abs() <= 1e-12,
        format!("{:.3e}", d.u * d.u - d.v * d.v - 1.0),
    );
    Ok(vec![("resonances.csv".into(), table)])
}

/// Interaction-picture and effective evolutions from the same initial
/// state, with times in units of `1/g̃`.
pub fn rwa_fidelities(p: &ModelParams, n: &Numerics) -> Result<Table> {
    let g = 1.0;
    let mut sys = SystemParams::sideband(p.omega, p.epsilon, g, p.eta1, p.eta2, 0.0, 0.0);
    let dressed = sys.dressed()?;
    sys.drive1 += p.drive1_offset * g;
    sys.drive2 += p.drive2_offset * g;
    let space = HilbertSpace::new(1, n.field_dim)?;
    let qubit = match p.initial {
        InitialQubit::Excited => EXCITED,
        InitialQubit::Ground => GROUND,
    };
    let mut psi0 = vec![c64::new(0.0, 0.0); space.dim()];
    psi0[space.index(&[qubit], 0)?] = c64::new(1.0, 0.0);
    let times: Vec<f64> = (0..p.n_times)
        .map(|k| p.t_max * k as f64 / (p.n_times - 1) as f64 / dressed.g_tilde)
        .collect();
    let opts = ode_options(n);
    let parts = interaction_parts(space)?;
    let cutoff = n.bessel_cutoff;
    let exact = evolve_pure(
        |t| {
            let (alpha, beta) = alpha_beta(&sys, t, cutoff);
            Ok(interaction_from_parts(&parts, sys.g, alpha, beta))
        },
        &psi0,
        &times,
        &opts,
    )?;
    let h_eff = effective_h(&dressed, space)?;
    let approx = evolve_pure(|_| Ok(h_eff.clone()), &psi0, &times, &opts)?;
    let mut table = Table::new(&["t_gtilde", "fidelity", "excited_exact", "excited_effective"]);
    let exc = |psi: &[c64]| -> Result<f64> {
        let mut s = 0.0;
        for k in 0..space.field_dim() {
            s += psi[space.index(&[EXCITED], k)?].norm_sqr();
        }
        Ok(s)
    };
    for (k, (a, b)) in exact.iter().zip(&approx).enumerate() {
        let overlap: c64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        table
            .rows
            .push(vec![times[k] * dressed.g_tilde, overlap.norm_sqr(), exc(a)?, exc(b)?]);
    }
    Ok(table)
}

fn rwa_validate(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<(String, Table)>> {
    let table = rwa_fidelities(&cfg.params, &cfg.numerics)?;
    let min_f = table
        .column("fidelity")
        .unwrap_or_default()
        .into_iter()
        .fold(1.0, f64::min);
    sink.check("minimum fidelity >= 0.99", min_f >= 0.99, format!("{min_f:.6}"));
    sink.write("rwa_validate.csv", &table.to_csv(&sink.hash.clone()))?;
    Ok(vec![("rwa_validate.csv".into(), table)])
}

/// A-basis panel grid: moment-based extents, with enough points to resolve
/// blobs of covariance `diag(blob)` and never fewer than `points` per axis.
pub fn panel_grid(field: &DensityMatrix, blob: [f64; 2], points: usize) -> Result<PhaseGrid> {
    let g = auto_grid(field, points)?;
    let count = |span: f64, var: f64| ((span / (0.5 * var.sqrt())).ceil() as usize).clamp(points, MAX_PANEL_POINTS);
    PhaseGrid::new(
        g.x_min,
        g.x_max,
        count(g.x_max - g.x_min, blob[0]),
        g.p_min,
        g.p_max,
        count(g.p_max - g.p_min, blob[1]),
    )
}

const MAX_PANEL_POINTS: usize = 1024;

/// A-basis Wigner function on `grid`, enlarging it once when the captured
/// mass falls short.
pub fn wigner_a_basis(field: &DensityMatrix, r: f64, grid: &PhaseGrid) -> Result<WignerField> {
    match wigner_from_density(field, grid, Basis::ModeA, r) {
        Err(Error::GridTooSmall {
            x_min,
            x_max,
            p_min,
            p_max,
            ..
        }) => {
            let (x_min, x_max) = (x_min.min(grid.x_min) - 1.0, x_max.max(grid.x_max) + 1.0);
            let (p_min, p_max) = (p_min.min(grid.p_min) - 1.0, p_max.max(grid.p_max) + 1.0);
            let nx =
                ((grid.nx as f64 * (x_max - x_min) / (grid.x_max - grid.x_min)).ceil() as usize).min(MAX_PANEL_POINTS);
            let np =
                ((grid.np as f64 * (p_max - p_min) / (grid.p_max - grid.p_min)).ceil() as usize).min(MAX_PANEL_POINTS);
            let grid = PhaseGrid::new(x_min, x_max, nx, p_min, p_max, np)?;
            wigner_from_density(field, &grid, Basis::ModeA, r)
        }
        other => other,
    }
}

/// Phase average of the Gaussian mean-field solutions sampled at the same
/// phases as the Fock-space ansatz.
pub fn ansatz_gaussian_wigner(
    f_mag: f64,
    c_prime: f64,
    r: f64,
    grid: &PhaseGrid,
    n_phases: usize,
) -> Result<WignerField> {
    let mut acc = vec![0.0; grid.len()];
    for k in 0..n_phases {
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_phases as f64;
        let gs = gaussian_mf_solution(c64::from_polar(f_mag, theta), c_prime, r)?;
        let w = gaussian_wigner(&gs, grid, Basis::ModeA, r);
        for (a, v) in acc.iter_mut().zip(&w.values) {
            *a += v;
        }
    }
    let scale = 1.0 / n_phases as f64;
    Ok(WignerField {
        grid: *grid,
        values: acc.into_iter().map(|v| v * scale).collect(),
        basis: Basis::ModeA,
        squeeze_r: r,
    })
}

struct Panel {
    source: &'static str,
    dim: usize,
    a_basis: WignerField,
    cavity: WignerField,
    crests: [Crest; 2],
    gaussian_dev: Option<f64>,
    health: Option<Health>,
}

fn panels_for(cfg: &RunConfig, c_prime: f64) -> Result<Vec<Panel>> {
    let n = &cfg.numerics;
    let p = ModelParams {
        c_prime,
        ..cfg.params.clone()
    };
    let r = squeezing(&p)?;
    let mf = MFParams::from_cooperativity(p.c_tilde, p.gamma, p.kappa, c_prime)?;
    let f_mag = mf_photon_number(&mf).sqrt();
    let blob = [
        (c_prime + (2.0 * r).exp()) / (1.0 + c_prime),
        (c_prime + (-2.0 * r).exp()) / (1.0 + c_prime),
    ];
    let (ansatz, adim) = with_retry(n, |dim| {
        mf_ansatz(f_mag, c_prime, r, HilbertSpace::field(dim)?, n.n_phases)
    })?;
    let (pt, dim) = with_retry(n, |dim| effective_point(&p, n, dim))?;
    let mut out = Vec::new();
    for (source, rho, d, health) in [
        ("ansatz", &ansatz, adim, None),
        ("exact", &pt.field, dim, Some(Health::of(&pt.full, &pt.field))),
    ] {
        let grid = panel_grid(rho, blob, n.grid_points)?;
        let a_basis = wigner_a_basis(rho, r, &grid)?;
        let gaussian_dev = if source == "ansatz" {
            let g = ansatz_gaussian_wigner(f_mag, c_prime, r, &a_basis.grid, n.n_phases)?;
            Some(
                a_basis
                    .values
                    .iter()
                    .zip(&g.values)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max),
            )
        } else {
            None
        };
        let cavity = wigner_change_basis(&a_basis, None)?;
        let crests = [crest_along_axis(rho, false)?, crest_along_axis(rho, true)?];
        out.push(Panel {
            source,
            dim: d,
            a_basis,
            cavity,
            crests,
            gaussian_dev,
            health,
        });
    }
    Ok(out)
}

fn wigner_panels(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<(String, Table)>> {
    let mut summary = Table::new(&[
        "c_prime",
        "source",
        "basis",
        "integral",
        "min_value",
        "mean_x",
        "mean_p",
        "var_x",
        "var_p",
        "crest_x",
        "crest_p",
        "cross_var_x",
        "cross_var_p",
        "anisotropy",
        "field_dim",
    ]);
    let all: Vec<Result<Vec<Panel>>> = cfg
        .params
        .c_prime_values
        .par_iter()
        .map(|&cp| panels_for(cfg, cp))
        .collect();
    for (&cp, res) in cfg.params.c_prime_values.iter().zip(all) {
        for panel in res? {
            if let Some(h) = &panel.health {
                h.record(sink, &format!("c_prime {cp}"));
            }
            if let Some(dev) = panel.gaussian_dev {
                sink.check(
                    format!("c_prime {cp}: gaussian vs fock ansatz panel"),
                    dev <= 1e-5,
                    format!("{dev:.3e}"),
                );
            }
            let prefix = if panel.source == "exact" {
                "wigner_exact"
            } else {
                "wigner"
            };
            let [cx, cpk] = panel.crests;
            for (tag, field) in [("A", &panel.a_basis), ("a", &panel.cavity)] {
                let name = format!("{prefix}_cprime_{cp}_{tag}.txt");
                let label = format!("c_prime={cp} source={}", panel.source);
                sink.write(&name, &wigner_text(field, &sink.hash.clone(), &label))?;
                let integral = field.integral();
                let min_v = field.min_value();
                let (m, v) = field.moments();
                // crests are measured in the A frame; x_a = e^{-r} X_A, p_a = e^{r} P_A
                let r = field.squeeze_r;
                let (sx, sp) = if tag == "A" { (1.0, 1.0) } else { ((-r).exp(), r.exp()) };
                let (vx, vp) = (cx.variance * sx * sx, cpk.variance * sp * sp);
                sink.check(
                    format!("{name}: normalization"),
                    (integral - 1.0).abs() <= 1e-3,
                    format!("{integral:.6}"),
                );
                sink.check(format!("{name}: non-negative"), min_v >= -1e-6, format!("{min_v:.3e}"));
                summary.rows.push(vec![
                    cp,
                    if panel.source == "exact" { 1.0 } else { 0.0 },
                    if tag == "A" { 0.0 } else { 1.0 },
                    integral,
                    min_v,
                    m[0],
                    m[1],
                    v[0][0],
                    v[1][1],
                    cx.position * sx,
                    cpk.position * sp,
                    vx,
                    vp,
                    vp / vx,
                    panel.dim as f64,
                ]);
            }
        }
    }
    sink.write("wigner_summary.csv", &summary.to_csv(&sink.hash.clone()))?;
    Ok(vec![("wigner_summary.csv".into(), summary)])
}
