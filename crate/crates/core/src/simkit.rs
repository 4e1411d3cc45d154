//! Monte Carlo experiment engine: sweeps the allocators over Rayleigh
//! channel draws and emits typed result rows, plus a bit-level transmission
//! simulator that checks the analytic error-rate and mutual-information
//! formulas empirically.
//!
//! Determinism contract: every run is a pure function of its
//! [`ExperimentSpec`]. Realization `r` draws all of its randomness from
//! [`rng_stream`]`(seed, r)`, so results do not depend on execution order or
//! the number of worker threads; aggregation uses pairwise summation in a
//! fixed order.

use crate::alloc::{allocate, AllocError, AllocationProblem, AllocationResult, Method};
use crate::info_theory::{mi_bsc_exact, JointPmf};
use crate::link::{ChannelParams, ChannelRealization};
use crate::perception::{Metric, PerceptionModel, Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("n_realizations must be ≥ 1")]
    NoRealizations,
    #[error("experiment needs at least one method")]
    NoMethods,
    #[error("experiment kind {0:?} requires {1}")]
    MissingField(ExperimentKind, &'static str),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PowerVsPbar,
    PerBitPower,
    ErrorAndCapacity,
    PerceptionCdf,
    LinkValidate,
}

/// Full description of one experiment run; determinism is with respect to
/// this value.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scheme: Scheme,
    pub metric: Metric,
    /// Perception targets for the sweep kinds.
    pub p_bar_grid: Vec<f64>,
    /// Power budgets in watts for [`ExperimentKind::PerceptionCdf`].
    pub power_budget_grid: Vec<f64>,
    pub n_realizations: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Flip probabilities exercised by [`ExperimentKind::LinkValidate`].
    pub link_psi_grid: Vec<f64>,
    /// Block length in bits for [`ExperimentKind::LinkValidate`].
    pub link_k_bits: usize,
    /// Number of simulated blocks for [`ExperimentKind::LinkValidate`].
    pub link_n_blocks: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_realizations == 0 {
            return Err(SimError::NoRealizations);
        }
        match self.kind {
            ExperimentKind::PerceptionCdf => {
                if self.power_budget_grid.is_empty() {
                    return Err(SimError::MissingField(self.kind, "power_budget_grid"));
                }
                check_grid(&self.power_budget_grid)?;
            }
            ExperimentKind::LinkValidate => {
                if self.link_psi_grid.is_empty() {
                    return Err(SimError::MissingField(self.kind, "link_psi_grid"));
                }
                if self.link_k_bits == 0 || self.link_n_blocks == 0 {
                    return Err(SimError::MissingField(self.kind, "link_k_bits/link_n_blocks"));
                }
            }
            _ => {
                if self.p_bar_grid.is_empty() {
                    return Err(SimError::MissingField(self.kind, "p_bar_grid"));
                }
                check_grid(&self.p_bar_grid)?;
            }
        }
        if self.kind != ExperimentKind::LinkValidate && self.methods.is_empty() {
            return Err(SimError::NoMethods);
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<(), SimError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::BadGrid);
    }
    Ok(())
}

/// Counter-based sub-stream derivation: `seed` selects the key,
/// `realization_index` the ChaCha stream, giving independent reproducible
/// generators regardless of execution order.
pub fn rng_stream(seed: u64, realization_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(realization_index);
    rng
}

/// One realization's channel draw plus each method's allocations across the
/// target grid.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub realization: usize,
    pub gain_sq: Vec<f64>,
    /// `results[g][m]`: outcome at `p_bar_grid[g]` under `methods[m]`;
    /// `None` when that target is infeasible.
    pub results: Vec<Vec<Option<AllocationResult>>>,
}

impl RunRecord {
    /// Per-stream capacity `log2(1 + snr_i)` for one allocation.
    pub fn capacities(&self, result: &AllocationResult, noise_w: f64) -> Vec<f64> {
        result
            .powers_w
            .iter()
            .zip(&self.gain_sq)
            .map(|(&q, &g)| (1.0 + q * g / noise_w).log2())
            .collect()
    }
}

// Typed rows mirroring the frozen CSV schemas.

#[derive(Debug, Clone, PartialEq)]
pub struct PowerVsPbarRow {
    pub pbar: f64,
    pub method: Method,
    pub mean_total_power_w: f64,
    pub stderr_w: f64,
    pub n_feasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerBitPowerRow {
    pub pbar: f64,
    pub method: Method,
    pub stream: String,
    pub mean_power_per_bit_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCapacityRow {
    pub pbar: f64,
    pub method: Method,
    pub stream: String,
    pub mean_error: f64,
    pub mean_capacity_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionCdfRow {
    pub budget_w: f64,
    pub method: Method,
    pub quantile: f64,
    pub perception: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkValidateRow {
    pub psi: f64,
    pub check: &'static str,
    pub empirical: f64,
    pub analytic: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Pairwise (cascade) summation: error grows as `O(log n)` rather than
/// `O(n)`, keeping parallel-vs-serial aggregation drift below 1e-12 relative.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Experiment driver bound to one perception model and channel description.
pub struct Simulator<'a> {
    pub model: &'a PerceptionModel,
    pub channel: &'a ChannelParams,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a PerceptionModel, channel: &'a ChannelParams) -> Self {
        Self { model, channel }
    }

    fn draw_realization(&self, seed: u64, index: usize) -> ChannelRealization {
        let mut rng = rng_stream(seed, index as u64);
        self.channel
            .sample_realization(self.model.n_streams(), &mut rng)
    }

    /// Runs every method on every grid target for every realization; the
    /// channel draw is shared across methods and targets within a
    /// realization (paired comparison).
    pub fn collect_records(&self, spec: &ExperimentSpec) -> Result<Vec<RunRecord>, SimError> {
        spec.validate()?;
        (0..spec.n_realizations)
            .into_par_iter()
            .map(|r| {
                let realization = self.draw_realization(spec.seed, r);
                let mut results = Vec::with_capacity(spec.p_bar_grid.len());
                for &p_bar in &spec.p_bar_grid {
                    let problem = AllocationProblem::new(self.model, &realization, p_bar)?;
                    let mut per_method = Vec::with_capacity(spec.methods.len());
                    for &method in &spec.methods {
                        match allocate(&problem, method) {
                            Ok(res) => per_method.push(Some(res)),
                            Err(AllocError::Infeasible { .. }) => per_method.push(None),
                            Err(e) => return Err(SimError::Alloc(e)),
                        }
                    }
                    results.push(per_method);
                }
                Ok(RunRecord {
                    realization: r,
                    gain_sq: realization.gain_sq,
                    results,
                })
            })
            .collect()
    }

    /// Mean total power (and its standard error) per `(P̄, method)`;
    /// infeasible realizations are excluded and counted via `n_feasible`.
    pub fn run_power_vs_pbar(&self, spec: &ExperimentSpec) -> Result<Vec<PowerVsPbarRow>, SimError> {
        let records = self.collect_records(spec)?;
        let mut rows = Vec::new();
        for (g, &pbar) in spec.p_bar_grid.iter().enumerate() {
            for (m, &method) in spec.methods.iter().enumerate() {
                let totals: Vec<f64> = records
                    .iter()
                    .filter_map(|rec| rec.results[g][m].as_ref())
                    .map(|res| res.total_power_w)
                    .collect();
                let (mean, stderr) = mean_and_stderr(&totals);
                rows.push(PowerVsPbarRow {
                    pbar,
                    method,
                    mean_total_power_w: mean,
                    stderr_w: stderr,
                    n_feasible: totals.len(),
                });
            }
        }
        Ok(rows)
    }

    /// Mean power per source bit, `N_i·q_i/K_i`, per `(P̄, method, stream)`.
    /// Streams dropped by the allocator show up as exact zeros.
    pub fn run_per_bit_power(&self, spec: &ExperimentSpec) -> Result<Vec<PerBitPowerRow>, SimError> {
        let records = self.collect_records(spec)?;
        let mut rows = Vec::new();
        for (g, &pbar) in spec.p_bar_grid.iter().enumerate() {
            for (m, &method) in spec.methods.iter().enumerate() {
                for (i, stream) in self.model.streams().iter().enumerate() {
                    let per_bit: Vec<f64> = records
                        .iter()
                        .filter_map(|rec| rec.results[g][m].as_ref())
                        .map(|res| {
                            res.powers_w[i] * f64::from(stream.n_symbols)
                                / f64::from(stream.k_bits)
                        })
                        .collect();
                    let (mean, _) = mean_and_stderr(&per_bit);
                    rows.push(PerBitPowerRow {
                        pbar,
                        method,
                        stream: stream.name.clone(),
                        mean_power_per_bit_w: mean,
                    });
                }
            }
        }
        Ok(rows)
    }

    /// Mean operating error (ψ or Ψ) and mean capacity `log2(1+snr)` per
    /// `(P̄, method, stream)`.
    pub fn run_error_capacity(
        &self,
        spec: &ExperimentSpec,
    ) -> Result<Vec<ErrorCapacityRow>, SimError> {
        let records = self.collect_records(spec)?;
        let noise_w = self.channel.noise_watts();
        let mut rows = Vec::new();
        for (g, &pbar) in spec.p_bar_grid.iter().enumerate() {
            for (m, &method) in spec.methods.iter().enumerate() {
                for (i, stream) in self.model.streams().iter().enumerate() {
                    let mut errors = Vec::new();
                    let mut capacities = Vec::new();
                    for rec in &records {
                        if let Some(res) = rec.results[g][m].as_ref() {
                            errors.push(res.errors[i]);
                            capacities.push(rec.capacities(res, noise_w)[i]);
                        }
                    }
                    let (mean_error, _) = mean_and_stderr(&errors);
                    let (mean_capacity, _) = mean_and_stderr(&capacities);
                    rows.push(ErrorCapacityRow {
                        pbar,
                        method,
                        stream: stream.name.clone(),
                        mean_error,
                        mean_capacity_bits: mean_capacity,
                    });
                }
            }
        }
        Ok(rows)
    }

    /// Smallest achievable perception under a total-power budget for one
    /// realization and method, found by monotone bisection on P̄ (required
    /// power is non-increasing in the target).
    fn best_perception_under_budget(
        &self,
        realization: &ChannelRealization,
        method: Method,
        budget_w: f64,
    ) -> Result<f64, SimError> {
        let power_at = |p_bar: f64| -> Result<f64, SimError> {
            let problem = AllocationProblem::new(self.model, realization, p_bar)?;
            Ok(allocate(&problem, method)?.total_power_w)
        };
        let mut lo = self.model.p_best();
        let mut hi = self.model.p_worst();
        if power_at(lo)? <= budget_w {
            return Ok(lo);
        }
        // The worst-case target needs no transmission, so `hi` is always
        // affordable; bisect the boundary of the affordable region.
        for _ in 0..40 {
            if hi - lo < 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if power_at(mid)? <= budget_w {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Empirical CDF (101 evenly spaced quantiles) of the achieved
    /// perception per `(budget, method)`.
    pub fn run_perception_cdf(
        &self,
        spec: &ExperimentSpec,
    ) -> Result<Vec<PerceptionCdfRow>, SimError> {
        spec.validate()?;
        let mut rows = Vec::new();
        for &budget_w in &spec.power_budget_grid {
            for &method in &spec.methods {
                let mut values: Vec<f64> = (0..spec.n_realizations)
                    .into_par_iter()
                    .map(|r| {
                        let realization = self.draw_realization(spec.seed, r);
                        self.best_perception_under_budget(&realization, method, budget_w)
                    })
                    .collect::<Result<_, _>>()?;
                values.sort_by(|a, b| a.total_cmp(b));
                for q in 0..=100usize {
                    let idx = (q * (values.len() - 1) + 50) / 100;
                    rows.push(PerceptionCdfRow {
                        budget_w,
                        method,
                        quantile: q as f64 / 100.0,
                        perception: values[idx],
                    });
                }
            }
        }
        Ok(rows)
    }

    /// Bit-level Monte Carlo validation of the analytic link formulas: for
    /// each flip probability the simulator pushes Bernoulli(0.5) blocks
    /// through an i.i.d. bit-flip channel and compares empirical BER, BLER,
    /// plug-in mutual information, and the discard-receiver subset mixture
    /// against their closed forms.
    pub fn run_link_validate(&self, spec: &ExperimentSpec) -> Result<Vec<LinkValidateRow>, SimError> {
        spec.validate()?;
        let mut rows = Vec::new();
        for (j, &psi) in spec.link_psi_grid.iter().enumerate() {
            rows.extend(validate_one_psi(
                self.model,
                psi,
                spec.link_k_bits,
                spec.link_n_blocks,
                spec.seed,
                j as u64,
            ));
        }
        Ok(rows)
    }
}

fn validate_one_psi(
    model: &PerceptionModel,
    psi: f64,
    k_bits: usize,
    n_blocks: usize,
    seed: u64,
    stream_offset: u64,
) -> Vec<LinkValidateRow> {
    // One RNG sub-stream per flip probability keeps the grid points
    // independent and the whole run order-insensitive.
    let mut rng = rng_stream(seed, 1_000_000 + stream_offset);
    let n_bits = (k_bits * n_blocks) as f64;

    let mut bit_errors: u64 = 0;
    let mut block_errors: u64 = 0;
    // Joint counts over (source bit, received bit).
    let mut joint = [[0u64; 2]; 2];
    // Delivered-subset counts for a two-stream discard receiver: block `b`
    // of this run and an independent flip pattern stand in for the two
    // streams' decoding outcomes.
    let n_subset_streams = model.n_streams().min(2);
    let mut subset_counts = vec![0u64; 1 << n_subset_streams];

    for _ in 0..n_blocks {
        let mut any_flip = [false; 2];
        for _ in 0..k_bits {
            let source = rng.gen_bool(0.5) as usize;
            let flip = rng.gen_bool(psi);
            let received = source ^ usize::from(flip);
            joint[source][received] += 1;
            if flip {
                bit_errors += 1;
                any_flip[0] = true;
            }
            // Second, independent stream for the subset mixture.
            if n_subset_streams == 2 && rng.gen_bool(psi) {
                any_flip[1] = true;
            }
        }
        if any_flip[0] {
            block_errors += 1;
        }
        let mut mask = 0usize;
        for (i, &failed) in any_flip.iter().take(n_subset_streams).enumerate() {
            if !failed {
                mask |= 1 << i;
            }
        }
        subset_counts[mask] += 1;
    }

    let mut rows = Vec::new();
    let mut push = |check: &'static str, empirical: f64, analytic: f64, stderr: f64, gate: f64| {
        let z_score = if stderr > 0.0 {
            (empirical - analytic) / stderr
        } else if empirical == analytic {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(LinkValidateRow {
            psi,
            check,
            empirical,
            analytic,
            stderr,
            z_score,
            pass: z_score.abs() <= gate,
        });
    };

    // Bit error rate against ψ (4σ gate).
    let ber_hat = bit_errors as f64 / n_bits;
    let ber_se = (psi * (1.0 - psi) / n_bits).sqrt();
    push("ber", ber_hat, psi, ber_se, 4.0);

    // Block error rate against 1 − (1−ψ)^K (4σ gate).
    let bler = 1.0 - (1.0 - psi).powi(k_bits as i32);
    let bler_hat = block_errors as f64 / n_blocks as f64;
    let bler_se = (bler * (1.0 - bler) / n_blocks as f64).sqrt();
    push("bler", bler_hat, bler, bler_se, 4.0);

    // Plug-in mutual information of the empirical joint against the exact
    // BSC value (3σ gate); the standard error comes from the delta method on
    // the pointwise information.
    let total = n_bits;
    let pmf: Vec<f64> = joint.iter().flatten().map(|&c| c as f64 / total).collect();
    let mi_hat = JointPmf::new(2, 2, pmf.clone())
        .map(|j| crate::info_theory::mi_joint(&j))
        .unwrap_or(f64::NAN);
    let mut info_second_moment = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let p = pmf[2 * x + y];
            if p > 0.0 {
                let px = pmf[2 * x] + pmf[2 * x + 1];
                let py = pmf[y] + pmf[2 + y];
                let i = (p / (px * py)).log2();
                info_second_moment += p * i * i;
            }
        }
    }
    let mi_se = ((info_second_moment - mi_hat * mi_hat).max(0.0) / total).sqrt();
    let mi_exact = mi_bsc_exact(0.5, psi).expect("valid flip probability");
    push("mi", mi_hat, mi_exact, mi_se, 3.0);

    // Discard receiver: the empirical mean of the subset perception table
    // under the delivered-subset distribution against perception_discard at
    // the block error rate (4σ gate).
    if n_subset_streams == 2 && model.scheme() == Scheme::CodedDiscard {
        let table = &model.preset().subset_perception;
        let mean_num: f64 = subset_counts
            .iter()
            .enumerate()
            .map(|(mask, &c)| c as f64 * table[mask])
            .sum();
        let mean_hat = mean_num / n_blocks as f64;
        let second: f64 = subset_counts
            .iter()
            .enumerate()
            .map(|(mask, &c)| c as f64 * table[mask] * table[mask])
            .sum::<f64>()
            / n_blocks as f64;
        let se = ((second - mean_hat * mean_hat).max(0.0) / n_blocks as f64).sqrt();
        let analytic = model
            .perception_discard(&[bler, bler])
            .expect("valid BLER pair");
        push("discard_mixture", mean_hat, analytic, se, 4.0);
    }

    rows
}
