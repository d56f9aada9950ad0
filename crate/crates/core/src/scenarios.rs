//! Runnable experiment definitions: the built-in presets and the JSON
//! configuration schema with its validation.
//!
//! A configuration file is one JSON object with the fields of
//! [`ScenarioConfig`]. Optional fields may be omitted; [`validate`] fills them.
//!
//! ```json
//! {
//!   "name": "my-run",
//!   "subflows": [
//!     { "link_rate_bps": 6e6, "one_way_delay_s": 0.005 },
//!     { "link_rate_bps": 6e6, "one_way_delay_s": 0.005, "per": 0.01 }
//!   ],
//!   "load": { "pattern": "constant-rate", "rate_bps": 50e6 },
//!   "scheduler": "queueaware",
//!   "duration_s": 60
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ValidationErrors};
use crate::proto::{ConnectionConfig, LoadPattern, SubflowConfig, TransportParams};
use crate::schedulers::SchedulerKind;
use crate::sim::SimTime;

pub const DEFAULT_DURATION_S: f64 = 60.0;
pub const DEFAULT_INTERVAL_S: f64 = 1.0;
pub const DEFAULT_WARMUP_S: f64 = 5.0;
pub const DEFAULT_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

pub const WIFI_DELAY_S: f64 = 0.005;
pub const LTE_DELAY_S: f64 = 0.030;
pub const OFFERED_LOAD_BPS: f64 = 50e6;
pub const UPLOAD_BYTES: u64 = 10_000_000;

pub const PRESET_NAMES: [&str; 7] = [
    "wifi-identical",
    "wifi-nonidentical",
    "wifi-4g",
    "wifi-lossy",
    "upload-wifi-identical",
    "upload-wifi-lossy",
    "upload-wifi-4g",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub subflows: Vec<SubflowConfig>,
    pub load: LoadPattern,
    #[serde(default = "default_scheduler")]
    pub scheduler: SchedulerKind,
    /// Simulated run length; for file loads, the give-up bound.
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub interval_s: Option<f64>,
    /// Leading span excluded from goodput means.
    #[serde(default)]
    pub warmup_s: Option<f64>,
    #[serde(default)]
    pub transport: TransportParams,
}

fn default_scheduler() -> SchedulerKind {
    SchedulerKind::QueueAware
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(format!("config parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Panics if `validate` has not filled the defaults.
    pub fn duration(&self) -> f64 {
        self.duration_s.expect("validated config")
    }

    pub fn interval(&self) -> f64 {
        self.interval_s.expect("validated config")
    }

    pub fn warmup(&self) -> f64 {
        self.warmup_s.expect("validated config")
    }

    pub fn seed_list(&self) -> &[u64] {
        self.seeds.as_deref().expect("validated config")
    }

    pub fn is_file(&self) -> bool {
        self.load.is_file()
    }

    pub fn connection(&self) -> ConnectionConfig {
        ConnectionConfig {
            subflows: self.subflows.clone(),
            load: self.load,
            transport: self.transport,
            duration: SimTime::from_secs_f64(self.duration()),
            interval: SimTime::from_secs_f64(self.interval()),
        }
    }
}

fn wifi() -> SubflowConfig {
    SubflowConfig::new(6e6, WIFI_DELAY_S)
}

fn base(name: &str, subflows: Vec<SubflowConfig>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        subflows,
        load: LoadPattern::ConstantRate {
            rate_bps: OFFERED_LOAD_BPS,
        },
        scheduler: default_scheduler(),
        duration_s: Some(DEFAULT_DURATION_S),
        seeds: Some(DEFAULT_SEEDS.collect()),
        interval_s: Some(DEFAULT_INTERVAL_S),
        warmup_s: Some(DEFAULT_WARMUP_S),
        transport: TransportParams::default(),
    }
}

fn upload(name: &str, subflows: Vec<SubflowConfig>) -> ScenarioConfig {
    ScenarioConfig {
        load: LoadPattern::File {
            size_bytes: UPLOAD_BYTES,
        },
        duration_s: Some(120.0),
        interval_s: Some(0.1),
        warmup_s: Some(0.0),
        ..base(name, subflows)
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let identical = || vec![wifi(), wifi()];
    let nonidentical = || vec![wifi(), SubflowConfig::new(12e6, WIFI_DELAY_S)];
    let lte = || vec![wifi(), SubflowConfig::new(12e6, LTE_DELAY_S)];
    let lossy = || vec![wifi().with_per(0.01), wifi()];
    let cfg = match name {
        "wifi-identical" => base(name, identical()),
        "wifi-nonidentical" => base(name, nonidentical()),
        "wifi-4g" => base(name, lte()),
        "wifi-lossy" => base(name, lossy()),
        "upload-wifi-identical" => upload(name, identical()),
        "upload-wifi-lossy" => upload(name, lossy()),
        "upload-wifi-4g" => upload(name, lte()),
        _ => {
            return Err(ConfigError::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(cfg)
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

/// Checks every constraint, reporting all violations, and fills defaults.
pub fn validate(mut cfg: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut errs = ValidationErrors::default();

    if cfg.subflows.is_empty() {
        errs.push("subflows", "at least one subflow is required");
    }
    for (i, s) in cfg.subflows.iter().enumerate() {
        if !positive(s.link_rate_bps) {
            errs.push(format!("subflows[{i}].link_rate_bps"), "rate must be > 0");
        }
        if !(s.one_way_delay_s >= 0.0 && s.one_way_delay_s.is_finite()) {
            errs.push(format!("subflows[{i}].one_way_delay_s"), "delay must be >= 0");
        }
        if !(0.0..1.0).contains(&s.per) {
            errs.push(format!("subflows[{i}].per"), "per must be in [0,1)");
        }
        if s.queue_capacity == 0 {
            errs.push(format!("subflows[{i}].queue_capacity"), "capacity must be at least 1");
        }
    }

    match cfg.load {
        LoadPattern::ConstantRate { rate_bps } | LoadPattern::Poisson { rate_bps } => {
            if !positive(rate_bps) {
                errs.push("load.rate_bps", "rate must be > 0");
            }
        }
        LoadPattern::File { size_bytes } => {
            if size_bytes == 0 {
                errs.push("load.size_bytes", "file size must be > 0");
            }
        }
    }

    let duration = *cfg.duration_s.get_or_insert(DEFAULT_DURATION_S);
    let interval = *cfg.interval_s.get_or_insert(DEFAULT_INTERVAL_S);
    let warmup = *cfg.warmup_s.get_or_insert(DEFAULT_WARMUP_S);
    if cfg.seeds.is_none() {
        cfg.seeds = Some(DEFAULT_SEEDS.collect());
    }
    if !positive(duration) {
        errs.push("duration_s", "duration must be > 0");
    }
    if !positive(interval) {
        errs.push("interval_s", "interval must be > 0");
    }
    if !(warmup >= 0.0 && warmup.is_finite()) {
        errs.push("warmup_s", "warmup must be >= 0");
    } else if duration.is_finite() && duration <= warmup {
        errs.push(
            "duration_s",
            format!("duration ({duration} s) must exceed warmup_s ({warmup} s)"),
        );
    }
    if cfg.seeds.as_ref().is_some_and(Vec::is_empty) {
        errs.push("seeds", "at least one seed is required");
    }

    let t = &cfg.transport;
    if t.packet_size_bytes == 0 {
        errs.push("transport.packet_size_bytes", "packet size must be > 0");
    }
    if t.backbone_rate_bps.is_some_and(|r| !positive(r)) {
        errs.push("transport.backbone_rate_bps", "rate must be > 0");
    }
    if t.core_rate_bps.is_some_and(|r| !positive(r)) {
        errs.push("transport.core_rate_bps", "rate must be > 0");
    }
    if t.send_buffer_packets == Some(0) {
        errs.push("transport.send_buffer_packets", "send buffer must hold at least 1 packet");
    }
    if !(t.initial_cwnd >= 1.0 && t.initial_cwnd.is_finite()) {
        errs.push("transport.initial_cwnd", "initial cwnd must be >= 1");
    }
    if t.initial_ssthresh.is_some_and(|s| !(s >= 1.0)) {
        errs.push("transport.initial_ssthresh", "ssthresh must be >= 1");
    }
    if !(t.jitter_s >= 0.0 && t.jitter_s.is_finite()) {
        errs.push("transport.jitter_s", "jitter must be >= 0");
    }
    if !(t.ewma.alpha > 0.0 && t.ewma.alpha < 1.0) {
        errs.push("transport.ewma.alpha", "alpha must be in (0,1)");
    }
    if !(t.ewma.srtt_gain > 0.0 && t.ewma.srtt_gain < 1.0) {
        errs.push("transport.ewma.srtt_gain", "gain must be in (0,1)");
    }
    if t.dupack_threshold == 0 {
        errs.push("transport.dupack_threshold", "threshold must be >= 1");
    }
    if !positive(t.min_rto_s) {
        errs.push("transport.min_rto_s", "minimum RTO must be > 0");
    }

    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errs))
    }
}
