//! Power allocation methods over a perception constraint.
//!
//! Three allocators solve "minimize total power subject to joint perception
//! ≤ P̄" for a fixed channel realization:
//!
//! - [`allocate_unaware`] — the semantic-unaware baseline: one common SNR for
//!   all streams, found by scalar bisection on the constraint.
//! - [`allocate_proportional`] — splits the target into per-stream semantic
//!   value requirements at a common ratio `ρ` (so `L̄_i/L_i` is equal across
//!   streams), then applies the per-stream closed forms.
//! - [`allocate_bisection`] — bisection along the two-stream constraint curve
//!   on the sign of the directional derivative of total power.
//!
//! Every feasible result satisfies the constraint with equality: the
//! perception is monotone in the errors, so slack always wastes power.

use crate::link::{
    self, ber_bpsk, bler_fbl, power_coded_closed_form, snr_from_ber, snr_from_bler, ChannelRealization,
    SNR_CAP,
};
use crate::perception::{PerceptionError, PerceptionModel, Scheme};
use crate::scalar;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("perception target {p_bar} below the best achievable {p_best}: infeasible")]
    Infeasible { p_bar: f64, p_best: f64 },
    #[error("bisection method requires exactly 2 streams, model has {0}")]
    NotTwoStreams(usize),
    #[error("stream count mismatch between model ({model}) and realization ({realization})")]
    RealizationMismatch { model: usize, realization: usize },
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Link(#[from] link::LinkError),
}

/// Allocation method label carried on results and CSV rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Unaware,
    Proportional,
    Bisection,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Unaware, Method::Proportional, Method::Bisection];

    pub fn name(self) -> &'static str {
        match self {
            Method::Unaware => "unaware",
            Method::Proportional => "proportional",
            Method::Bisection => "bisection",
        }
    }
}

/// One allocation instance: a perception model, a drawn channel, and the
/// perception target P̄.
#[derive(Debug, Clone)]
pub struct AllocationProblem<'a> {
    pub model: &'a PerceptionModel,
    pub realization: &'a ChannelRealization,
    pub p_bar: f64,
}

/// Outcome of one allocation.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    pub method: Method,
    /// Per-stream transmit power in watts (per channel symbol).
    pub powers_w: Vec<f64>,
    /// Per-stream operating error: BER for the uncoded scheme, BLER for the
    /// coded scheme.
    pub errors: Vec<f64>,
    pub achieved_p: f64,
    /// `Σ K_i·q_i` (uncoded) or `Σ N_i·q_i` (coded).
    pub total_power_w: f64,
    /// Set when the target forced an SNR at the search cap.
    pub near_infeasible: bool,
    /// Set when the target is met with no transmission at all.
    pub zero_power: bool,
}

/// Feasibility classification of a target against the reachable perception
/// range.
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub zero_power_sufficient: bool,
    /// `[p_best, perception at maximum errors]`.
    pub reachable_range: (f64, f64),
}

impl<'a> AllocationProblem<'a> {
    pub fn new(
        model: &'a PerceptionModel,
        realization: &'a ChannelRealization,
        p_bar: f64,
    ) -> Result<Self, AllocError> {
        if realization.gain_sq.len() != model.n_streams() {
            return Err(AllocError::RealizationMismatch {
                model: model.n_streams(),
                realization: realization.gain_sq.len(),
            });
        }
        Ok(Self {
            model,
            realization,
            p_bar,
        })
    }

    fn n(&self) -> usize {
        self.model.n_streams()
    }

    /// Channel-symbol count weighting the objective: K_i uncoded, N_i coded.
    fn unit_count(&self, i: usize) -> f64 {
        let s = &self.model.streams()[i];
        match self.model.scheme() {
            Scheme::UncodedForward => f64::from(s.k_bits),
            Scheme::CodedDiscard => f64::from(s.n_symbols),
        }
    }

    /// Operating error of stream `i` at a given SNR.
    fn error_from_snr(&self, i: usize, snr: f64) -> f64 {
        match self.model.scheme() {
            Scheme::UncodedForward => ber_bpsk(snr).expect("snr ≥ 0"),
            Scheme::CodedDiscard => {
                let s = &self.model.streams()[i];
                bler_fbl(snr, s.k_bits, s.n_symbols).expect("snr ≥ 0")
            }
        }
    }

    /// SNR needed for stream `i` to operate at a given error level; zero at
    /// the maximum error (no transmission).
    fn snr_from_error(&self, i: usize, error: f64) -> Result<f64, AllocError> {
        let max = self.model.max_error();
        if error >= max - 1e-13 {
            return Ok(0.0);
        }
        let snr = match self.model.scheme() {
            Scheme::UncodedForward => snr_from_ber(error.max(1e-300))?,
            Scheme::CodedDiscard => {
                let s = &self.model.streams()[i];
                snr_from_bler(error.max(1e-300), s.k_bits, s.n_symbols)?
            }
        };
        Ok(snr)
    }

    fn power_from_snr(&self, i: usize, snr: f64) -> f64 {
        snr * self.realization.noise_w / self.realization.gain_sq[i]
    }

    fn total_power(&self, powers: &[f64]) -> f64 {
        powers
            .iter()
            .enumerate()
            .map(|(i, &q)| self.unit_count(i) * q)
            .sum()
    }

    /// Objective value (total power) at a point on the error coordinates.
    fn objective(&self, errors: &[f64]) -> Result<f64, AllocError> {
        let mut total = 0.0;
        for (i, &e) in errors.iter().enumerate() {
            let snr = self.snr_from_error(i, e)?;
            total += self.unit_count(i) * self.power_from_snr(i, snr);
        }
        Ok(total)
    }

    fn result_from_errors(&self, method: Method, errors: Vec<f64>) -> Result<AllocationResult, AllocError> {
        let mut powers = Vec::with_capacity(self.n());
        let mut near_infeasible = false;
        for (i, &e) in errors.iter().enumerate() {
            let snr = self.snr_from_error(i, e)?;
            if snr >= SNR_CAP * (1.0 - 1e-9) {
                near_infeasible = true;
            }
            powers.push(self.power_from_snr(i, snr));
        }
        let achieved_p = self.model.evaluate(&errors)?;
        let total_power_w = self.total_power(&powers);
        let zero_power = powers.iter().all(|&q| q == 0.0);
        Ok(AllocationResult {
            method,
            powers_w: powers,
            errors,
            achieved_p,
            total_power_w,
            near_infeasible,
            zero_power,
        })
    }

    fn zero_power_result(&self, method: Method) -> Result<AllocationResult, AllocError> {
        let errors = vec![self.model.max_error(); self.n()];
        self.result_from_errors(method, errors)
    }
}

/// Classifies the target against `[p_best, perception at maximum errors]`.
pub fn feasibility_report(problem: &AllocationProblem) -> FeasibilityReport {
    let p_best = problem.model.p_best();
    let p_worst = problem.model.p_worst();
    FeasibilityReport {
        feasible: problem.p_bar >= p_best - 1e-12,
        zero_power_sufficient: problem.p_bar >= p_worst - 1e-12,
        reachable_range: (p_best, p_worst),
    }
}

fn check_feasible(problem: &AllocationProblem) -> Result<Option<()>, AllocError> {
    let report = feasibility_report(problem);
    if !report.feasible {
        return Err(AllocError::Infeasible {
            p_bar: problem.p_bar,
            p_best: problem.model.p_best(),
        });
    }
    // Some → zero power is enough, caller should short-circuit.
    Ok(report.zero_power_sufficient.then_some(()))
}

/// Semantic-unaware baseline: all streams share one received SNR, bisected so
/// the joint perception meets the target with equality.
pub fn allocate_unaware(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    if check_feasible(problem)?.is_some() {
        return problem.zero_power_result(Method::Unaware);
    }
    let perception_at = |snr: f64| -> f64 {
        let errors: Vec<f64> = (0..problem.n())
            .map(|i| problem.error_from_snr(i, snr))
            .collect();
        problem.model.evaluate(&errors).expect("valid errors")
    };
    // Perception decreases in the common SNR.
    if perception_at(SNR_CAP) > problem.p_bar {
        // Even the cap cannot reach the target; report the capped allocation.
        let errors: Vec<f64> = (0..problem.n())
            .map(|i| problem.error_from_snr(i, SNR_CAP))
            .collect();
        let mut result = problem.result_from_errors(Method::Unaware, errors)?;
        result.near_infeasible = true;
        return Ok(result);
    }
    let snr = scalar::bisect_log(
        |s| perception_at(s) - problem.p_bar,
        1e-12,
        SNR_CAP,
        1e-14,
        300,
    );
    let errors: Vec<f64> = (0..problem.n())
        .map(|i| problem.error_from_snr(i, snr))
        .collect();
    problem.result_from_errors(Method::Unaware, errors)
}

/// Per-stream errors at a common semantic-value ratio `ρ`: stream `i` is
/// driven to received semantic value `ρ·L_i`.
fn errors_at_ratio(problem: &AllocationProblem, rho: f64) -> Vec<f64> {
    (0..problem.n())
        .map(|i| {
            let l = problem.model.streams()[i].semantic_value;
            problem
                .model
                .invert_semantic_value(i, rho * l)
                .expect("ρ·L within [0, L]")
        })
        .collect()
}

/// Semantic-proportional method: finds the common ratio `ρ ∈ (0, 1]` at which
/// the joint perception meets the target, then applies the per-stream
/// closed-form powers. In the coded case all streams operate at the same
/// BLER `1 − ρ`.
pub fn allocate_proportional(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    if check_feasible(problem)?.is_some() {
        return problem.zero_power_result(Method::Proportional);
    }
    let perception_at = |rho: f64| -> f64 {
        problem
            .model
            .evaluate(&errors_at_ratio(problem, rho))
            .expect("valid errors")
    };
    // Perception decreases in ρ; ρ = 1 gives p_best, ρ = 0 the worst case.
    let rho = scalar::bisect(
        |r| perception_at(r) - problem.p_bar,
        0.0,
        1.0,
        1e-15,
        200,
    );
    let errors = errors_at_ratio(problem, rho);
    let mut result = problem.result_from_errors(Method::Proportional, errors)?;
    if problem.model.scheme() == Scheme::CodedDiscard {
        // Recompute the powers through the generalized Lambert W closed form
        // where its domain (Ψ* < 0.5) applies; the direct BLER inversion in
        // `result_from_errors` covers the rest and the two routes agree to
        // 1e-6 relative.
        for (i, &bler) in result.errors.iter().enumerate() {
            if bler > 0.0 && bler < 0.5 {
                let s = &problem.model.streams()[i];
                result.powers_w[i] = power_coded_closed_form(
                    bler,
                    s.k_bits,
                    s.n_symbols,
                    problem.realization.gain_sq[i],
                    problem.realization.noise_w,
                )?;
            }
        }
        result.total_power_w = problem.total_power(&result.powers_w);
    }
    Ok(result)
}

/// Endpoints of the feasible segment of the constraint curve
/// `P(Φ1, Φ2) = P̄`, as `(Φ1, Φ2)` pairs with `Φ1` smallest (left) and
/// largest (right).
fn curve_endpoints(problem: &AllocationProblem) -> Result<([f64; 2], [f64; 2]), AllocError> {
    let m = problem.model;
    let max = m.max_error();
    let p_bar = problem.p_bar;
    let left = if m.evaluate(&[0.0, max])? >= p_bar {
        [0.0, m.solve_constraint_curve(0, 0.0, p_bar)?]
    } else {
        [m.solve_constraint_curve(1, max, p_bar)?, max]
    };
    let right = if m.evaluate(&[max, 0.0])? >= p_bar {
        [m.solve_constraint_curve(1, 0.0, p_bar)?, 0.0]
    } else {
        [max, m.solve_constraint_curve(0, max, p_bar)?]
    };
    Ok((left, right))
}

/// Analytic or finite-difference partial derivatives of the objective with
/// respect to each stream's error level.
pub fn objective_gradient(
    problem: &AllocationProblem,
    point: &[f64],
) -> Result<Vec<f64>, AllocError> {
    let mut grad = Vec::with_capacity(point.len());
    for (i, &e) in point.iter().enumerate() {
        grad.push(objective_partial(problem, i, e)?);
    }
    Ok(grad)
}

fn objective_partial(problem: &AllocationProblem, i: usize, error: f64) -> Result<f64, AllocError> {
    let scale = problem.unit_count(i) * problem.realization.noise_w / problem.realization.gain_sq[i];
    match problem.model.scheme() {
        Scheme::UncodedForward => {
            // d/dψ of (Q⁻¹(ψ))²/2 = Q⁻¹(ψ)·dQ⁻¹/dψ, with
            // dQ⁻¹/dψ = −√(2π)·e^{(Q⁻¹(ψ))²/2}.
            let psi = error.clamp(1e-300, 0.5);
            let x = link::q_inv(psi);
            let dq_inv = -(2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
            Ok(scale * x * dq_inv)
        }
        Scheme::CodedDiscard => {
            // Central finite difference on snr(Ψ) with relative step 1e-6,
            // one-sided at the domain boundary.
            let s = &problem.model.streams()[i];
            let snr_at = |bler: f64| -> Result<f64, AllocError> {
                if bler >= 1.0 - 1e-13 {
                    Ok(0.0)
                } else {
                    Ok(snr_from_bler(bler, s.k_bits, s.n_symbols)?)
                }
            };
            let h = (error.abs() * 1e-6).max(1e-9);
            let lo = (error - h).max(1e-12);
            let hi = (error + h).min(1.0 - 1e-12);
            if hi <= lo {
                return Ok(0.0);
            }
            Ok(scale * (snr_at(hi)? - snr_at(lo)?) / (hi - lo))
        }
    }
}

/// Slope `dΦ2/dΦ1` along the constraint curve at `(e1, e2)` by implicit
/// differentiation of `P(Φ1, Φ2) = P̄`.
fn constraint_slope(problem: &AllocationProblem, e1: f64, e2: f64) -> Result<f64, AllocError> {
    let dp1 = perception_partial(problem, 0, &[e1, e2])?;
    let dp2 = perception_partial(problem, 1, &[e1, e2])?;
    if dp2 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-dp1 / dp2)
}

fn perception_partial(
    problem: &AllocationProblem,
    i: usize,
    point: &[f64; 2],
) -> Result<f64, AllocError> {
    let m = problem.model;
    if m.scheme() == Scheme::CodedDiscard {
        // The discard combinator is multilinear, so the partial is exact.
        let table = &m.preset().subset_perception;
        let other = point[1 - i];
        let (own_bit, other_bit) = (1usize << i, 1usize << (1 - i));
        let d_with_other = table[own_bit | other_bit] - table[other_bit];
        let d_without_other = table[own_bit] - table[0];
        return Ok(-((1.0 - other) * d_with_other + other * d_without_other));
    }
    let max = m.max_error();
    let h = (point[i].abs() * 1e-6).max(1e-9);
    let lo = (point[i] - h).max(0.0);
    let hi = (point[i] + h).min(max);
    let mut p_lo = *point;
    p_lo[i] = lo;
    let mut p_hi = *point;
    p_hi[i] = hi;
    Ok((m.evaluate(&p_hi)? - m.evaluate(&p_lo)?) / (hi - lo))
}

/// Directional derivative of the objective along the constraint curve,
/// `df/dΦ1 + (dΦ2/dΦ1)·df/dΦ2`.
fn directional_derivative(
    problem: &AllocationProblem,
    e1: f64,
    e2: f64,
) -> Result<f64, AllocError> {
    let g1 = objective_partial(problem, 0, e1)?;
    let g2 = objective_partial(problem, 1, e2)?;
    let slope = constraint_slope(problem, e1, e2)?;
    Ok(g1 + slope * g2)
}

const BISECTION_EPSILON: f64 = 1e-6;

/// Semantic-aware bisection along the two-stream constraint curve.
///
/// Checks the directional derivative at the curve endpoints first; if the
/// objective is monotone toward an endpoint the endpoint wins, otherwise the
/// sign of the directional derivative is bisected on `Φ1` until the bracket
/// is narrower than `1e-6`. The returned point is the best of the interior
/// candidate and both endpoints, which also covers objectives that dip at a
/// boundary (the zero-power regime).
pub fn allocate_bisection(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    if problem.n() != 2 {
        return Err(AllocError::NotTwoStreams(problem.n()));
    }
    if check_feasible(problem)?.is_some() {
        return problem.zero_power_result(Method::Bisection);
    }
    let (left, right) = curve_endpoints(problem)?;
    let mut candidates = vec![left, right];

    let d_left = directional_derivative(problem, left[0], left[1])?;
    let d_right = directional_derivative(problem, right[0], right[1])?;
    if d_left >= 0.0 {
        // Objective non-decreasing from the left endpoint.
    } else if d_right <= 0.0 {
        // Objective non-increasing into the right endpoint.
    } else {
        let mut lo = left[0];
        let mut hi = right[0];
        let mut interior = left;
        while hi - lo >= BISECTION_EPSILON {
            let mid = 0.5 * (lo + hi);
            let e2 = problem.model.solve_constraint_curve(0, mid, problem.p_bar)?;
            interior = [mid, e2];
            if directional_derivative(problem, mid, e2)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        candidates.push(interior);
    }

    let mut best: Option<([f64; 2], f64)> = None;
    for point in candidates {
        let value = problem.objective(&point)?;
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((point, value));
        }
    }
    let (point, _) = best.expect("at least the endpoints are candidates");
    problem.result_from_errors(Method::Bisection, point.to_vec())
}

/// Runs one method on a problem.
pub fn allocate(problem: &AllocationProblem, method: Method) -> Result<AllocationResult, AllocError> {
    match method {
        Method::Unaware => allocate_unaware(problem),
        Method::Proportional => allocate_proportional(problem),
        Method::Bisection => allocate_bisection(problem),
    }
}
