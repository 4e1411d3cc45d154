//! Command implementations: one-shot allocation, experiment sweeps, and the
//! self-validation suites.

use crate::config::{ConfigDocument, KindCfg};
use crate::output::{self, Manifest};
use rand::Rng;
use semcom_core::alloc::{allocate, feasibility_report, AllocationProblem, Method};
use semcom_core::info_theory::{self, mi_bsc_exact, mi_uncoded_lemma2, BernoulliStream};
use semcom_core::link::{
    ber_bpsk, bler_fbl, power_coded_closed_form, snr_from_ber, snr_from_bler, watts_to_dbm,
    ChannelRealization,
};
use semcom_core::perception::{Metric, Scheme};
use semcom_core::simkit::{rng_stream, ExperimentKind, Simulator};
use std::path::Path;

/// Command failure carrying the process exit code: 1 for validation or
/// infeasibility, 3 for I/O.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<(ConfigDocument, String), CliError> {
    let (config, text) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            let config = ConfigDocument::from_json(&text).map_err(CliError::Validation)?;
            (config, text)
        }
        None => (
            ConfigDocument::bundled_default(),
            crate::config::DEFAULT_CONFIG_JSON.to_string(),
        ),
    };
    // Surface invariant violations at load time, not mid-run.
    config
        .build_model(config.scheme.into(), config.metric.into())
        .map_err(CliError::Validation)?;
    Ok((config, text))
}

/// `semcom allocate`: one channel draw (or fixed gains), one allocation per
/// requested method, human-readable summary on stdout.
pub fn cmd_allocate(
    config: &ConfigDocument,
    p_bar: f64,
    methods: &[Method],
    seed: u64,
    fixed_gains: Option<&[f64]>,
) -> Result<(), CliError> {
    let model = config
        .build_model(config.scheme.into(), config.metric.into())
        .map_err(CliError::Validation)?;
    let channel = config.channel_params();
    let realization = match fixed_gains {
        Some(gains) => {
            if gains.len() != model.n_streams() {
                return Err(CliError::Validation(format!(
                    "--fixed-gains needs {} values, got {}",
                    model.n_streams(),
                    gains.len()
                )));
            }
            ChannelRealization::fixed(gains.to_vec(), channel.noise_watts())
        }
        None => {
            let mut rng = rng_stream(seed, 0);
            channel.sample_realization(model.n_streams(), &mut rng)
        }
    };
    let problem = AllocationProblem::new(&model, &realization, p_bar)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let report = feasibility_report(&problem);
    if !report.feasible {
        return Err(CliError::Validation(format!(
            "target {} is infeasible: reachable perception range is [{}, {}]",
            output::fmt9(p_bar),
            output::fmt9(report.reachable_range.0),
            output::fmt9(report.reachable_range.1)
        )));
    }

    println!("p_bar = {}", output::fmt9(p_bar));
    println!(
        "gains |h|^2 = [{}]",
        realization
            .gain_sq
            .iter()
            .map(|&g| output::fmt9(g))
            .collect::<Vec<_>>()
            .join(", ")
    );
    for &method in methods {
        let result = allocate(&problem, method).map_err(|e| CliError::Validation(e.to_string()))?;
        println!(
            "method={} total_power_w={} total_power_dbm={} achieved_p={}{}",
            method.name(),
            output::fmt9(result.total_power_w),
            output::fmt9(watts_to_dbm(result.total_power_w)),
            output::fmt9(result.achieved_p),
            if result.near_infeasible {
                " (near-infeasible: snr cap reached)"
            } else {
                ""
            }
        );
        for (i, stream) in model.streams().iter().enumerate() {
            println!(
                "  stream={} q_w={} q_dbm={} error={}",
                stream.name,
                output::fmt9(result.powers_w[i]),
                output::fmt9(watts_to_dbm(result.powers_w[i])),
                output::fmt9(result.errors[i])
            );
        }
    }
    Ok(())
}

fn kind_file_name(kind: KindCfg) -> &'static str {
    match kind {
        KindCfg::PowerVsPbar => "power_vs_pbar.csv",
        KindCfg::PerBitPower => "per_bit_power.csv",
        KindCfg::ErrorCapacity => "error_capacity.csv",
        KindCfg::PerceptionCdf => "cdf.csv",
        KindCfg::LinkValidate => "link_validate.csv",
    }
}

/// `semcom experiment`: runs the selected experiment blocks and writes one
/// CSV per block plus a manifest recording the config hash and seeds.
pub fn cmd_experiment(
    config: &ConfigDocument,
    config_text: &str,
    name: Option<&str>,
    out_dir: &Path,
) -> Result<(), CliError> {
    let selected: Vec<_> = match name {
        Some(n) => vec![config.find_experiment(n).ok_or_else(|| {
            CliError::Validation(format!("no experiment named {n:?} in the config"))
        })?],
        None => config.experiments.iter().collect(),
    };
    if selected.is_empty() {
        return Err(CliError::Validation(
            "config has no experiment blocks".to_string(),
        ));
    }
    // File names are keyed by kind (frozen schema contract), so two selected
    // blocks of the same kind would silently overwrite each other.
    for (i, a) in selected.iter().enumerate() {
        if selected[..i].iter().any(|b| b.kind == a.kind) {
            return Err(CliError::Validation(format!(
                "two selected experiments share kind {:?}; run them separately with --name",
                a.kind
            )));
        }
    }

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    let channel = config.channel_params();
    let mut files = Vec::new();
    let mut seeds = Vec::new();
    for exp in &selected {
        let (scheme, metric) = config.experiment_scheme_metric(exp);
        let model = config
            .build_model(scheme, metric)
            .map_err(CliError::Validation)?;
        let sim = Simulator::new(&model, &channel);
        let spec = config.experiment_spec(exp);
        spec.validate()
            .map_err(|e| CliError::Validation(format!("experiment {:?}: {e}", exp.name)))?;
        let run = |spec: &semcom_core::simkit::ExperimentSpec| -> Result<String, CliError> {
            let csv = match spec.kind {
                ExperimentKind::PowerVsPbar => {
                    output::power_vs_pbar_csv(&sim.run_power_vs_pbar(spec).map_err(sim_err)?)
                }
                ExperimentKind::PerBitPower => {
                    output::per_bit_power_csv(&sim.run_per_bit_power(spec).map_err(sim_err)?)
                }
                ExperimentKind::ErrorAndCapacity => {
                    output::error_capacity_csv(&sim.run_error_capacity(spec).map_err(sim_err)?)
                }
                ExperimentKind::PerceptionCdf => {
                    output::perception_cdf_csv(&sim.run_perception_cdf(spec).map_err(sim_err)?)
                }
                ExperimentKind::LinkValidate => {
                    output::link_validate_csv(&sim.run_link_validate(spec).map_err(sim_err)?)
                }
            };
            Ok(csv)
        };
        let csv = run(&spec)?;
        let file_name = kind_file_name(exp.kind);
        output::write_file(&out_dir.join(file_name), &csv).map_err(CliError::Io)?;
        println!("wrote {}", out_dir.join(file_name).display());
        files.push(file_name.to_string());
        seeds.push(exp.seed);
    }

    // The normalized config (defaults resolved) goes next to the tables so a
    // run can be reproduced without the original file.
    output::write_file(&out_dir.join("resolved_config.json"), &config.to_json())
        .map_err(CliError::Io)?;
    files.push("resolved_config.json".to_string());

    // A single seed covers the common case of one block per run; with several
    // blocks the manifest keeps the first (all bundled blocks share it).
    let manifest = Manifest::new(config_text, name.unwrap_or("all"), seeds[0], files);
    output::write_file(&out_dir.join("manifest.json"), &manifest.to_json())
        .map_err(CliError::Io)?;
    println!("wrote {}", out_dir.join("manifest.json").display());
    Ok(())
}

fn sim_err(e: semcom_core::simkit::SimError) -> CliError {
    CliError::Validation(e.to_string())
}

struct SuiteResult {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// `semcom validate`: runs the oracle suites and reports per-suite pass/fail
/// with the worst residual observed.
pub fn cmd_validate(config: &ConfigDocument, suite: Option<&str>) -> Result<(), CliError> {
    let all: &[(&str, fn(&ConfigDocument) -> SuiteResult)] = &[
        ("constants", suite_constants),
        ("info", suite_info),
        ("link", suite_link),
        ("lambertw", suite_lambertw),
        ("montecarlo", suite_montecarlo),
    ];
    let selected: Vec<_> = match suite {
        Some(s) => {
            let found: Vec<_> = all.iter().filter(|(name, _)| *name == s).collect();
            if found.is_empty() {
                return Err(CliError::Validation(format!(
                    "unknown suite {s:?}; available: constants, info, link, lambertw, montecarlo"
                )));
            }
            found
        }
        None => all.iter().collect(),
    };

    let mut failed = false;
    for (_, run) in selected {
        let result = run(config);
        println!(
            "suite {}: {} ({})",
            result.name,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        failed |= !result.pass;
    }
    if failed {
        return Err(CliError::Validation("one or more suites failed".to_string()));
    }
    Ok(())
}

/// Calibration corners of both metric presets under both schemes.
fn suite_constants(_config: &ConfigDocument) -> SuiteResult {
    let mut max_residual: f64 = 0.0;
    for metric in [Metric::Clip, Metric::MsSsim] {
        for scheme in [Scheme::UncodedForward, Scheme::CodedDiscard] {
            let model = semcom_core::perception::default_model(scheme, metric);
            let zeros = vec![0.0; model.n_streams()];
            let worst = vec![model.max_error(); model.n_streams()];
            let at_best = model.evaluate(&zeros).unwrap();
            let at_worst = model.evaluate(&worst).unwrap();
            max_residual = max_residual
                .max((at_best - model.p_best()).abs())
                .max((at_worst - model.p_worst()).abs());
        }
    }
    SuiteResult {
        name: "constants",
        pass: max_residual <= 1e-12,
        detail: format!("max corner residual {}", output::fmt9(max_residual)),
    }
}

/// Random row-stochastic matrix with `rows` rows and `cols` columns.
fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let mut row: Vec<f64> = (0..cols).map(|_| rng.gen::<f64>() + 1e-6).collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect()
}

/// Mutual-information identities and the data-processing inequality on
/// random chains.
fn suite_info(_config: &ConfigDocument) -> SuiteResult {
    let mut max_residual: f64 = 0.0;
    let mut dpi_failures = 0usize;
    // Per-bit MI equals the exact BSC value for an unbiased source.
    let unbiased = BernoulliStream::new(vec![0.5]).unwrap();
    for &psi in &[1e-4, 1e-3, 0.01, 0.1, 0.3, 0.5] {
        let lemma2 = mi_uncoded_lemma2(&unbiased, &[psi]).unwrap();
        let exact = mi_bsc_exact(0.5, psi).unwrap();
        max_residual = max_residual.max((lemma2 - exact).abs());
    }
    let mut rng = rng_stream(0xD1, 0);
    for _ in 0..200 {
        let nx = rng.gen_range(2..=4usize);
        let ny = rng.gen_range(2..=4usize);
        let nz = rng.gen_range(2..=4usize);
        let mut source: Vec<f64> = (0..nx).map(|_| rng.gen::<f64>() + 1e-6).collect();
        let sum: f64 = source.iter().sum();
        for v in &mut source {
            *v /= sum;
        }
        let xy = random_stochastic(&mut rng, nx, ny);
        let yz = random_stochastic(&mut rng, ny, nz);
        let report = info_theory::dpi_check(&source, &xy, &yz).unwrap();
        if !report.holds {
            dpi_failures += 1;
        }
        max_residual = max_residual.max((report.i_xz - report.i_xy).max(0.0));
    }
    SuiteResult {
        name: "info",
        pass: max_residual <= 1e-10 && dpi_failures == 0,
        detail: format!(
            "max residual {}, dpi failures {dpi_failures}/200",
            output::fmt9(max_residual)
        ),
    }
}

/// BER/BLER round trips across their domains.
fn suite_link(_config: &ConfigDocument) -> SuiteResult {
    let mut max_rel: f64 = 0.0;
    let mut psi = 1e-8;
    while psi <= 0.5 {
        let s = snr_from_ber(psi).unwrap();
        let back = ber_bpsk(s).unwrap();
        max_rel = max_rel.max((back - psi).abs() / psi);
        psi *= 2.5;
    }
    let mut target = 1e-6;
    while target < 0.5 {
        let s = snr_from_bler(target, 800, 1000).unwrap();
        let back = bler_fbl(s, 800, 1000).unwrap();
        max_rel = max_rel.max((back - target).abs() / target);
        target *= 4.0;
    }
    SuiteResult {
        name: "link",
        pass: max_rel <= 1e-9,
        detail: format!("max round-trip relative error {}", output::fmt9(max_rel)),
    }
}

/// Closed-form power (generalized Lambert W route) against direct BLER
/// inversion on randomized instances.
fn suite_lambertw(_config: &ConfigDocument) -> SuiteResult {
    let mut rng = rng_stream(0xB0, 0);
    let mut max_rel: f64 = 0.0;
    for _ in 0..100 {
        let rate = *[0.5, 0.8, 0.95].iter().nth(rng.gen_range(0..3)).unwrap();
        let n = rng.gen_range(100u32..=2000);
        let k = ((f64::from(n) * rate).round() as u32).clamp(1, n);
        let target = 10f64.powf(rng.gen_range(-6.0..=-0.31));
        let target = target.min(0.49);
        let gain_sq = 10f64.powf(rng.gen_range(-12.0..-8.0));
        let noise_w = 1e-14;
        let closed = power_coded_closed_form(target, k, n, gain_sq, noise_w).unwrap();
        let direct = noise_w / gain_sq * snr_from_bler(target, k, n).unwrap();
        max_rel = max_rel.max((closed - direct).abs() / direct);
    }
    SuiteResult {
        name: "lambertw",
        pass: max_rel <= 1e-6,
        detail: format!("max route disagreement {}", output::fmt9(max_rel)),
    }
}

/// Bit-level Monte Carlo gates from the experiment engine.
fn suite_montecarlo(config: &ConfigDocument) -> SuiteResult {
    let model = semcom_core::perception::default_model(Scheme::CodedDiscard, Metric::Clip);
    let channel = config.channel_params();
    let sim = Simulator::new(&model, &channel);
    let spec = semcom_core::simkit::ExperimentSpec {
        kind: ExperimentKind::LinkValidate,
        scheme: Scheme::CodedDiscard,
        metric: Metric::Clip,
        p_bar_grid: vec![],
        power_budget_grid: vec![],
        n_realizations: 1,
        seed: 0xC0FFEE,
        methods: vec![Method::Unaware],
        link_psi_grid: vec![0.001, 0.01, 0.1],
        link_k_bits: 100,
        link_n_blocks: 100_000,
    };
    match sim.run_link_validate(&spec) {
        Ok(rows) => {
            let worst = rows
                .iter()
                .map(|r| r.z_score.abs())
                .fold(0.0f64, f64::max);
            let pass = rows.iter().all(|r| r.pass);
            SuiteResult {
                name: "montecarlo",
                pass,
                detail: format!("{} checks, worst |z| {}", rows.len(), output::fmt9(worst)),
            }
        }
        Err(e) => SuiteResult {
            name: "montecarlo",
            pass: false,
            detail: e.to_string(),
        },
    }
}
