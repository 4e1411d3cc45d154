//! Calibrated perception-error models.
//!
//! A [`PerceptionModel`] maps per-stream transmission errors (BER for the
//! uncoded forward-with-error scheme, BLER for the coded discard-with-error
//! scheme) to a perceptual distance in `[p_best, 1]`. The endpoint constants
//! (`p_best`, `p_worst`, per-stream semantic values, per-subset base values)
//! are calibrated against published measurements; the curve in between is a
//! logistic-in-BER product model whose invariants (monotonicity, range,
//! corner exactness) hold for any admissible shape parameters.

use crate::scalar;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("error level {0} is outside [0, {1}]")]
    ErrorOutOfRange(f64, f64),
    #[error("expected {expected} per-stream error levels, got {got}")]
    StreamCountMismatch { expected: usize, got: usize },
    #[error("stream index {0} out of range")]
    StreamIndexOutOfRange(usize),
    #[error("target semantic value {target} exceeds the achievable maximum {max}")]
    TargetAboveMax { target: f64, max: f64 },
    #[error("perception target {target} below the reachable minimum {min} (constraint too strict)")]
    TargetTooStrict { target: f64, min: f64 },
    #[error("perception target {target} above the reachable maximum {max} (already satisfied at zero error)")]
    TargetAlreadySatisfied { target: f64, max: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Perceptual metric the calibration refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Clip,
    MsSsim,
}

/// Receiver-side error handling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Uncoded BPSK; corrupted streams are forwarded to the decoder.
    UncodedForward,
    /// Finite-blocklength coded; streams with block errors are discarded.
    CodedDiscard,
}

impl Scheme {
    /// Largest admissible per-stream error level: BER ≤ 0.5, BLER ≤ 1.
    pub fn max_error(self) -> f64 {
        match self {
            Scheme::UncodedForward => 0.5,
            Scheme::CodedDiscard => 1.0,
        }
    }
}

/// Shape of a stream's forward (uncoded) quality curve: a logistic in BER
/// with midpoint `m`, steepness `k`, and floor `u_min`.
#[derive(Debug, Clone, Copy)]
pub struct ForwardShape {
    pub midpoint: f64,
    pub steepness: f64,
    pub floor: f64,
}

impl ForwardShape {
    fn validate(&self) -> Result<(), PerceptionError> {
        if !(self.midpoint > 0.0) {
            return Err(PerceptionError::InvalidModel(format!(
                "midpoint {} must be positive",
                self.midpoint
            )));
        }
        if !(self.steepness > 0.0) {
            return Err(PerceptionError::InvalidModel(format!(
                "steepness {} must be positive",
                self.steepness
            )));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return Err(PerceptionError::InvalidModel(format!(
                "floor {} must lie in [0, 1)",
                self.floor
            )));
        }
        Ok(())
    }
}

/// Static description of one semantic data stream.
#[derive(Debug, Clone)]
pub struct StreamProfile {
    pub name: String,
    /// Payload length in bits.
    pub k_bits: u32,
    /// Codeword length in channel symbols (≥ `k_bits`).
    pub n_symbols: u32,
    /// Semantic value of the stream under the model's metric.
    pub semantic_value: f64,
    pub forward_shape: ForwardShape,
}

impl StreamProfile {
    pub fn coding_rate(&self) -> f64 {
        f64::from(self.k_bits) / f64::from(self.n_symbols)
    }
}

/// Per-metric calibration: best/worst-case perceptual distances plus the base
/// distance achievable from each subset of correctly received streams.
///
/// `subset_perception` is indexed by bitmask over stream indices (bit `i` set
/// means stream `i` is available); entry 0 is the no-signal distance 1.
#[derive(Debug, Clone)]
pub struct MetricPreset {
    pub metric: Metric,
    pub p_best: f64,
    pub p_worst_uncoded: f64,
    pub subset_perception: Vec<f64>,
}

impl MetricPreset {
    /// Calibration for the CLIP metric with (prompt, edge) streams.
    pub fn clip_default() -> Self {
        let l1 = 0.5887;
        let l2 = 0.3596;
        Self {
            metric: Metric::Clip,
            p_best: 0.3191,
            p_worst_uncoded: 0.8112,
            subset_perception: vec![1.0, 1.0 - l1, 1.0 - l2, 0.3191],
        }
    }

    /// Calibration for the MS-SSIM metric with (prompt, edge) streams.
    pub fn msssim_default() -> Self {
        let l1 = 0.5465;
        let l2 = 0.6355;
        Self {
            metric: Metric::MsSsim,
            p_best: 0.3313,
            p_worst_uncoded: 0.4720,
            subset_perception: vec![1.0, 1.0 - l1, 1.0 - l2, 0.3313],
        }
    }

    pub fn for_metric(metric: Metric) -> Self {
        match metric {
            Metric::Clip => Self::clip_default(),
            Metric::MsSsim => Self::msssim_default(),
        }
    }

    fn n_streams(&self) -> usize {
        self.subset_perception.len().trailing_zeros() as usize
    }

    fn validate(&self) -> Result<(), PerceptionError> {
        let n = self.subset_perception.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(PerceptionError::InvalidModel(format!(
                "subset table length {n} must be a power of two ≥ 2"
            )));
        }
        if !(0.0..=1.0).contains(&self.p_best) || !(0.0..=1.0).contains(&self.p_worst_uncoded) {
            return Err(PerceptionError::InvalidModel(
                "p_best and p_worst must lie in [0, 1]".into(),
            ));
        }
        if (self.subset_perception[0] - 1.0).abs() > 1e-12 {
            return Err(PerceptionError::InvalidModel(
                "empty-subset perception must be 1".into(),
            ));
        }
        let full = n - 1;
        if (self.subset_perception[full] - self.p_best).abs() > 1e-12 {
            return Err(PerceptionError::InvalidModel(
                "full-subset perception must equal p_best".into(),
            ));
        }
        for (mask, &v) in self.subset_perception.iter().enumerate() {
            if v < self.p_best - 1e-12 || v > 1.0 + 1e-12 {
                return Err(PerceptionError::InvalidModel(format!(
                    "subset {mask:#b} perception {v} outside [p_best, 1]"
                )));
            }
            // Monotone under inclusion: adding a stream cannot hurt.
            for bit in 0..self.n_streams() {
                let with = mask | (1 << bit);
                if with != mask && self.subset_perception[with] > v + 1e-12 {
                    return Err(PerceptionError::InvalidModel(format!(
                        "subset table not monotone under inclusion at {mask:#b} + stream {bit}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A joint perception-error function for one scheme and metric over a fixed
/// set of streams. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone)]
pub struct PerceptionModel {
    scheme: Scheme,
    preset: MetricPreset,
    streams: Vec<StreamProfile>,
}

impl PerceptionModel {
    pub fn new(
        scheme: Scheme,
        preset: MetricPreset,
        streams: Vec<StreamProfile>,
    ) -> Result<Self, PerceptionError> {
        preset.validate()?;
        if streams.len() != preset.n_streams() {
            return Err(PerceptionError::InvalidModel(format!(
                "subset table is for {} streams, got {}",
                preset.n_streams(),
                streams.len()
            )));
        }
        for (i, s) in streams.iter().enumerate() {
            s.forward_shape.validate()?;
            if s.n_symbols < s.k_bits || s.k_bits == 0 {
                return Err(PerceptionError::InvalidModel(format!(
                    "stream {i}: need n_symbols ≥ k_bits ≥ 1, got K={} N={}",
                    s.k_bits, s.n_symbols
                )));
            }
            let from_subset = 1.0 - preset.subset_perception[1 << i];
            if (s.semantic_value - from_subset).abs() > 1e-9 {
                return Err(PerceptionError::InvalidModel(format!(
                    "stream {i}: semantic value {} inconsistent with subset table ({from_subset})",
                    s.semantic_value
                )));
            }
            if scheme == Scheme::UncodedForward
                && s.semantic_value < 1.0 - preset.p_worst_uncoded - 1e-12
            {
                return Err(PerceptionError::InvalidModel(format!(
                    "stream {i}: semantic value {} below 1 − p_worst; the forward \
                     single-stream curve would leave [0, 1]",
                    s.semantic_value
                )));
            }
        }
        Ok(Self {
            scheme,
            preset,
            streams,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn preset(&self) -> &MetricPreset {
        &self.preset
    }

    pub fn streams(&self) -> &[StreamProfile] {
        &self.streams
    }

    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn p_best(&self) -> f64 {
        self.preset.p_best
    }

    /// Perception at the all-max-error corner: `p_worst_uncoded` for the
    /// forward scheme, 1 for the discard scheme.
    pub fn p_worst(&self) -> f64 {
        match self.scheme {
            Scheme::UncodedForward => self.preset.p_worst_uncoded,
            Scheme::CodedDiscard => self.preset.subset_perception[0],
        }
    }

    pub fn max_error(&self) -> f64 {
        self.scheme.max_error()
    }

    fn check_errors(&self, errors: &[f64]) -> Result<(), PerceptionError> {
        if errors.len() != self.streams.len() {
            return Err(PerceptionError::StreamCountMismatch {
                expected: self.streams.len(),
                got: errors.len(),
            });
        }
        let max = self.max_error();
        for &e in errors {
            if !(0.0..=max).contains(&e) {
                return Err(PerceptionError::ErrorOutOfRange(e, max));
            }
        }
        Ok(())
    }

    /// Logistic quality factor of one stream at a given BER:
    /// `u(ψ) = u_min + (1 − u_min) / (1 + (ψ/m)^k)`, strictly decreasing,
    /// with `u(0) = 1`.
    pub fn quality_factor(&self, stream_index: usize, ber: f64) -> Result<f64, PerceptionError> {
        let stream = self
            .streams
            .get(stream_index)
            .ok_or(PerceptionError::StreamIndexOutOfRange(stream_index))?;
        if !(0.0..=0.5).contains(&ber) {
            return Err(PerceptionError::ErrorOutOfRange(ber, 0.5));
        }
        Ok(quality(&stream.forward_shape, ber))
    }

    /// Joint perception of the uncoded forward-with-error scheme.
    ///
    /// `P = p_worst − (p_worst − p_best)·w` with
    /// `w = (Π u_i(ψ_i) − Π u_i(0.5)) / (1 − Π u_i(0.5))`, so the all-zero
    /// corner gives `p_best` and the all-max corner gives `p_worst`.
    pub fn perception_forward(&self, bers: &[f64]) -> Result<f64, PerceptionError> {
        self.check_errors(bers)?;
        debug_assert_eq!(self.scheme, Scheme::UncodedForward);
        let mut prod = 1.0;
        let mut prod_floor = 1.0;
        for (s, &psi) in self.streams.iter().zip(bers) {
            prod *= quality(&s.forward_shape, psi);
            prod_floor *= quality(&s.forward_shape, 0.5);
        }
        let w = (prod - prod_floor) / (1.0 - prod_floor);
        let p_best = self.preset.p_best;
        let p_worst = self.preset.p_worst_uncoded;
        Ok(p_worst - (p_worst - p_best) * w)
    }

    /// Joint perception of the coded discard-with-error scheme: the unique
    /// multilinear interpolation of the per-subset base values, weighting
    /// subset `S` by `Π_{i∈S}(1−Ψ_i) · Π_{j∉S}Ψ_j`.
    pub fn perception_discard(&self, blers: &[f64]) -> Result<f64, PerceptionError> {
        self.check_errors(blers)?;
        debug_assert_eq!(self.scheme, Scheme::CodedDiscard);
        let n = self.streams.len();
        let mut total = 0.0;
        for mask in 0..(1usize << n) {
            let mut weight = 1.0;
            for (i, &bler) in blers.iter().enumerate() {
                weight *= if mask & (1 << i) != 0 {
                    1.0 - bler
                } else {
                    bler
                };
            }
            total += weight * self.preset.subset_perception[mask];
        }
        Ok(total)
    }

    /// Joint perception under the model's scheme.
    pub fn evaluate(&self, errors: &[f64]) -> Result<f64, PerceptionError> {
        match self.scheme {
            Scheme::UncodedForward => self.perception_forward(errors),
            Scheme::CodedDiscard => self.perception_discard(errors),
        }
    }

    /// Semantic value of stream `i` when received with the given error level.
    ///
    /// Discard scheme: `(1 − Ψ)·L_i`. Forward scheme: `L_i·ũ(ψ)` where `ũ`
    /// rescales the stream's quality factor so that `ũ(0) = 1` and
    /// `ũ(0.5) = (1 − p_worst)/L_i` (the stream keeps a positive semantic
    /// value even at maximum BER).
    pub fn semantic_value_received(
        &self,
        stream_index: usize,
        error: f64,
    ) -> Result<f64, PerceptionError> {
        let stream = self
            .streams
            .get(stream_index)
            .ok_or(PerceptionError::StreamIndexOutOfRange(stream_index))?;
        let max = self.max_error();
        if !(0.0..=max).contains(&error) {
            return Err(PerceptionError::ErrorOutOfRange(error, max));
        }
        let l = stream.semantic_value;
        match self.scheme {
            Scheme::CodedDiscard => Ok((1.0 - error) * l),
            Scheme::UncodedForward => {
                let u = quality(&stream.forward_shape, error);
                let u_floor = quality(&stream.forward_shape, 0.5);
                // Per-stream worst-case perception defaults to the joint
                // worst case.
                let t = (1.0 - self.preset.p_worst_uncoded) / l;
                let u_tilde = t + (1.0 - t) * (u - u_floor) / (1.0 - u_floor);
                Ok(l * u_tilde)
            }
        }
    }

    /// Smallest semantic value stream `i` can be driven to (its value at
    /// maximum error).
    pub fn semantic_value_floor(&self, stream_index: usize) -> Result<f64, PerceptionError> {
        self.semantic_value_received(stream_index, self.max_error())
    }

    /// Inverts [`Self::semantic_value_received`]: the error level at which
    /// stream `i`'s received semantic value equals `target`.
    ///
    /// Discard scheme is closed form (`Ψ = 1 − target/L`). Forward targets
    /// below the curve's floor clamp to the maximum BER, since no error level
    /// can push the value lower.
    pub fn invert_semantic_value(
        &self,
        stream_index: usize,
        target: f64,
    ) -> Result<f64, PerceptionError> {
        let stream = self
            .streams
            .get(stream_index)
            .ok_or(PerceptionError::StreamIndexOutOfRange(stream_index))?;
        let l = stream.semantic_value;
        if target > l + 1e-12 {
            return Err(PerceptionError::TargetAboveMax { target, max: l });
        }
        if target < 0.0 {
            return Err(PerceptionError::ErrorOutOfRange(target, l));
        }
        let target = target.min(l);
        match self.scheme {
            Scheme::CodedDiscard => Ok(1.0 - target / l),
            Scheme::UncodedForward => {
                let floor = self.semantic_value_floor(stream_index)?;
                if target <= floor {
                    return Ok(0.5);
                }
                let root = scalar::bisect(
                    |psi| self.semantic_value_received(stream_index, psi).unwrap() - target,
                    0.0,
                    0.5,
                    1e-15,
                    200,
                );
                Ok(root)
            }
        }
    }

    /// Solves the joint perception constraint for the free stream of a
    /// two-stream model: given stream `fixed_index` pinned at `fixed_error`,
    /// returns the other stream's error level at which the joint perception
    /// equals `target_p`.
    pub fn solve_constraint_curve(
        &self,
        fixed_index: usize,
        fixed_error: f64,
        target_p: f64,
    ) -> Result<f64, PerceptionError> {
        if self.streams.len() != 2 {
            return Err(PerceptionError::InvalidModel(format!(
                "constraint-curve solve needs exactly 2 streams, model has {}",
                self.streams.len()
            )));
        }
        if fixed_index > 1 {
            return Err(PerceptionError::StreamIndexOutOfRange(fixed_index));
        }
        let max = self.max_error();
        if !(0.0..=max).contains(&fixed_error) {
            return Err(PerceptionError::ErrorOutOfRange(fixed_error, max));
        }
        let free = 1 - fixed_index;
        let eval = |e: f64| {
            let mut errors = [0.0; 2];
            errors[fixed_index] = fixed_error;
            errors[free] = e;
            self.evaluate(&errors).expect("in-range errors")
        };
        let at_zero = eval(0.0);
        let at_max = eval(max);
        if target_p < at_zero - 1e-12 {
            return Err(PerceptionError::TargetTooStrict {
                target: target_p,
                min: at_zero,
            });
        }
        if target_p > at_max + 1e-12 {
            return Err(PerceptionError::TargetAlreadySatisfied {
                target: target_p,
                max: at_max,
            });
        }
        if target_p <= at_zero {
            return Ok(0.0);
        }
        if target_p >= at_max {
            return Ok(max);
        }
        Ok(scalar::bisect(
            |e| eval(e) - target_p,
            0.0,
            max,
            1e-15,
            200,
        ))
    }
}

fn quality(shape: &ForwardShape, ber: f64) -> f64 {
    if ber == 0.0 {
        return 1.0;
    }
    shape.floor + (1.0 - shape.floor) / (1.0 + (ber / shape.midpoint).powf(shape.steepness))
}

/// Default stream profiles for the CLIP metric: a short textual prompt and a
/// longer, more BER-fragile edge map, at coding rate 0.8.
pub fn default_streams_clip() -> Vec<StreamProfile> {
    vec![
        StreamProfile {
            name: "prompt".into(),
            k_bits: 400,
            n_symbols: 500,
            semantic_value: 0.5887,
            forward_shape: ForwardShape {
                midpoint: 0.02,
                steepness: 1.5,
                floor: 0.05,
            },
        },
        StreamProfile {
            name: "edge".into(),
            k_bits: 1600,
            n_symbols: 2000,
            semantic_value: 0.3596,
            forward_shape: ForwardShape {
                midpoint: 0.005,
                steepness: 1.5,
                floor: 0.05,
            },
        },
    ]
}

/// Default stream profiles for the MS-SSIM metric.
pub fn default_streams_msssim() -> Vec<StreamProfile> {
    let mut streams = default_streams_clip();
    streams[0].semantic_value = 0.5465;
    streams[1].semantic_value = 0.6355;
    streams
}

/// Convenience constructor: default calibration for a scheme/metric pair.
pub fn default_model(scheme: Scheme, metric: Metric) -> PerceptionModel {
    let streams = match metric {
        Metric::Clip => default_streams_clip(),
        Metric::MsSsim => default_streams_msssim(),
    };
    PerceptionModel::new(scheme, MetricPreset::for_metric(metric), streams)
        .expect("default calibration is valid")
}
