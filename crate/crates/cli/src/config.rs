//! JSON configuration document: serde types, defaults mirroring the bundled
//! parameter table, and conversion into the core model types.

use semcom_core::alloc::Method;
use semcom_core::link::{ChannelParams, Fading};
use semcom_core::perception::{
    default_streams_clip, default_streams_msssim, ForwardShape, Metric, MetricPreset,
    PerceptionModel, Scheme, StreamProfile,
};
use semcom_core::simkit::{ExperimentKind, ExperimentSpec};
use serde::{Deserialize, Serialize};

/// Top-level configuration document. Unknown keys are rejected at load so a
/// typo cannot silently fall back to a default.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub scheme: SchemeCfg,
    pub metric: MetricCfg,
    #[serde(default)]
    pub channel: ChannelCfg,
    /// Stream profiles; omitted means the calibrated defaults for `metric`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<Vec<StreamCfg>>,
    /// Overrides for the metric preset's perception calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perception: Option<PerceptionCfg>,
    #[serde(default)]
    pub experiments: Vec<ExperimentCfg>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeCfg {
    UncodedForward,
    CodedDiscard,
}

impl From<SchemeCfg> for Scheme {
    fn from(s: SchemeCfg) -> Scheme {
        match s {
            SchemeCfg::UncodedForward => Scheme::UncodedForward,
            SchemeCfg::CodedDiscard => Scheme::CodedDiscard,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MetricCfg {
    Clip,
    MsSsim,
}

impl From<MetricCfg> for Metric {
    fn from(m: MetricCfg) -> Metric {
        match m {
            MetricCfg::Clip => Metric::Clip,
            MetricCfg::MsSsim => Metric::MsSsim,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelCfg {
    #[serde(default = "default_distance_m")]
    pub distance_m: f64,
    #[serde(default = "default_reference_distance_m")]
    pub reference_distance_m: f64,
    #[serde(default = "default_reference_loss_db")]
    pub reference_loss_db: f64,
    #[serde(default = "default_path_loss_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    #[serde(default)]
    pub fading: FadingCfg,
}

fn default_distance_m() -> f64 {
    100.0
}
fn default_reference_distance_m() -> f64 {
    1.0
}
fn default_reference_loss_db() -> f64 {
    -30.0
}
fn default_path_loss_exponent() -> f64 {
    3.4
}
fn default_noise_dbm() -> f64 {
    -110.0
}

impl Default for ChannelCfg {
    fn default() -> Self {
        Self {
            distance_m: default_distance_m(),
            reference_distance_m: default_reference_distance_m(),
            reference_loss_db: default_reference_loss_db(),
            path_loss_exponent: default_path_loss_exponent(),
            noise_dbm: default_noise_dbm(),
            fading: FadingCfg::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingCfg {
    #[default]
    Rayleigh,
    Fixed(f64),
}

impl From<ChannelCfg> for ChannelParams {
    fn from(c: ChannelCfg) -> ChannelParams {
        ChannelParams {
            distance_m: c.distance_m,
            reference_distance_m: c.reference_distance_m,
            reference_loss_db: c.reference_loss_db,
            path_loss_exponent: c.path_loss_exponent,
            noise_dbm: c.noise_dbm,
            fading: match c.fading {
                FadingCfg::Rayleigh => Fading::Rayleigh,
                FadingCfg::Fixed(m) => Fading::Fixed(m),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StreamCfg {
    pub name: String,
    pub k_bits: u32,
    pub n_symbols: u32,
    pub semantic_value: f64,
    pub forward_shape: ForwardShapeCfg,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ForwardShapeCfg {
    pub midpoint: f64,
    pub steepness: f64,
    pub floor: f64,
}

impl From<&StreamCfg> for StreamProfile {
    fn from(s: &StreamCfg) -> StreamProfile {
        StreamProfile {
            name: s.name.clone(),
            k_bits: s.k_bits,
            n_symbols: s.n_symbols,
            semantic_value: s.semantic_value,
            forward_shape: ForwardShape {
                midpoint: s.forward_shape.midpoint,
                steepness: s.forward_shape.steepness,
                floor: s.forward_shape.floor,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PerceptionCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_best: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_worst_uncoded: Option<f64>,
    /// Bitmask-indexed table of perception values per delivered subset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_perception: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentCfg {
    pub name: String,
    pub kind: KindCfg,
    /// Overrides the document-level scheme for this experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeCfg>,
    /// Overrides the document-level metric for this experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricCfg>,
    #[serde(default)]
    pub p_bar_grid: Vec<f64>,
    #[serde(default)]
    pub power_budget_grid: Vec<f64>,
    #[serde(default = "default_n_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodCfg>,
    #[serde(default = "default_link_psi_grid")]
    pub link_psi_grid: Vec<f64>,
    #[serde(default = "default_link_k_bits")]
    pub link_k_bits: usize,
    #[serde(default = "default_link_n_blocks")]
    pub link_n_blocks: usize,
}

fn default_n_realizations() -> usize {
    1000
}
fn default_seed() -> u64 {
    1
}
fn default_methods() -> Vec<MethodCfg> {
    vec![MethodCfg::Unaware, MethodCfg::Proportional, MethodCfg::Bisection]
}
fn default_link_psi_grid() -> Vec<f64> {
    vec![0.001, 0.01, 0.1]
}
fn default_link_k_bits() -> usize {
    100
}
fn default_link_n_blocks() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KindCfg {
    PowerVsPbar,
    PerBitPower,
    ErrorCapacity,
    PerceptionCdf,
    LinkValidate,
}

impl From<KindCfg> for ExperimentKind {
    fn from(k: KindCfg) -> ExperimentKind {
        match k {
            KindCfg::PowerVsPbar => ExperimentKind::PowerVsPbar,
            KindCfg::PerBitPower => ExperimentKind::PerBitPower,
            KindCfg::ErrorCapacity => ExperimentKind::ErrorAndCapacity,
            KindCfg::PerceptionCdf => ExperimentKind::PerceptionCdf,
            KindCfg::LinkValidate => ExperimentKind::LinkValidate,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodCfg {
    Unaware,
    Proportional,
    Bisection,
}

impl From<MethodCfg> for Method {
    fn from(m: MethodCfg) -> Method {
        match m {
            MethodCfg::Unaware => Method::Unaware,
            MethodCfg::Proportional => Method::Proportional,
            MethodCfg::Bisection => Method::Bisection,
        }
    }
}

/// Bundled defaults: urban-macro channel, CLIP calibration, coded
/// discard-with-error scheme, and one experiment block per table kind.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("default_config.json");

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn bundled_default() -> Self {
        Self::from_json(DEFAULT_CONFIG_JSON).expect("bundled config is valid")
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// Effective scheme/metric for one experiment block.
    pub fn experiment_scheme_metric(&self, exp: &ExperimentCfg) -> (Scheme, Metric) {
        (
            exp.scheme.unwrap_or(self.scheme).into(),
            exp.metric.unwrap_or(self.metric).into(),
        )
    }

    /// Builds the perception model for a given scheme/metric pair, applying
    /// the document's stream and calibration overrides. All core invariants
    /// are enforced here, so an invalid document fails at load time.
    pub fn build_model(&self, scheme: Scheme, metric: Metric) -> Result<PerceptionModel, String> {
        let mut preset = MetricPreset::for_metric(metric);
        if let Some(p) = &self.perception {
            if let Some(v) = p.p_best {
                preset.p_best = v;
            }
            if let Some(v) = p.p_worst_uncoded {
                preset.p_worst_uncoded = v;
            }
            if let Some(v) = &p.subset_perception {
                preset.subset_perception = v.clone();
            }
        }
        let streams: Vec<StreamProfile> = match &self.streams {
            Some(list) => list.iter().map(StreamProfile::from).collect(),
            None => match metric {
                Metric::Clip => default_streams_clip(),
                Metric::MsSsim => default_streams_msssim(),
            },
        };
        PerceptionModel::new(scheme, preset, streams).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn channel_params(&self) -> ChannelParams {
        self.channel.into()
    }

    pub fn find_experiment(&self, name: &str) -> Option<&ExperimentCfg> {
        self.experiments.iter().find(|e| e.name == name)
    }

    /// Converts one experiment block into the engine's spec type.
    pub fn experiment_spec(&self, exp: &ExperimentCfg) -> ExperimentSpec {
        let (scheme, metric) = self.experiment_scheme_metric(exp);
        ExperimentSpec {
            kind: exp.kind.into(),
            scheme,
            metric,
            p_bar_grid: exp.p_bar_grid.clone(),
            power_budget_grid: exp.power_budget_grid.clone(),
            n_realizations: exp.n_realizations,
            seed: exp.seed,
            methods: exp.methods.iter().map(|&m| m.into()).collect(),
            link_psi_grid: exp.link_psi_grid.clone(),
            link_k_bits: exp.link_k_bits,
            link_n_blocks: exp.link_n_blocks,
        }
    }
}
