//! TOML application config. Every section is optional and falls back to the
//! module defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vesselid_core::features::FeatureConfig;
use vesselid_core::gateway::AreaFilterConfig;
use vesselid_core::geoloc::GeolocConfig;
use vesselid_core::identify::IdentifyConfig;
use vesselid_core::imaging::{HistogramConfig, MaskConfig};
use vesselid_core::mission::MissionPolicy;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub imaging: ImagingSection,
    pub features: FeatureConfig,
    pub identify: IdentifySection,
    pub geoloc: GeolocConfig,
    pub gateway: GatewaySection,
    pub service: ServiceSection,
    pub mission: MissionPolicy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingSection {
    pub mask: MaskConfig,
    pub histogram: HistogramConfig,
}

/// The scalar identification thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifySection {
    pub p_max: f64,
    pub p_strong: f64,
    pub p_accept: f64,
    pub d_certain: f64,
    pub d_likely: f64,
    pub d_uncertain: f64,
    pub min_matches: usize,
    pub min_side: u32,
}

impl Default for IdentifySection {
    fn default() -> Self {
        let d = IdentifyConfig::default();
        Self {
            p_max: d.p_max,
            p_strong: d.p_strong,
            p_accept: d.p_accept,
            d_certain: d.d_certain,
            d_likely: d.d_likely,
            d_uncertain: d.d_uncertain,
            min_matches: d.min_matches,
            min_side: d.min_side,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    /// Default detection source for `run-mission`: a directory, `-` for
    /// stdin, or `tcp://host:port`.
    pub source: Option<String>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Frames buffered between the source reader and identification.
    pub queue_capacity: usize,
}

impl Default for GatewaySection {
    fn default() -> Self {
        let a = AreaFilterConfig::default();
        Self {
            source: None,
            alpha_min: a.alpha_min,
            alpha_max: a.alpha_max,
            queue_capacity: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: String,
    pub port: u16,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

impl AppConfig {
    /// Reads and validates `path`, or returns validated defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Data(format!("config {}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| CliError::Data(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.identify_config().validate().map_err(|e| e.to_string())?;
        self.geoloc.validate().map_err(|e| format!("geoloc: {e}"))?;
        if self.gateway.queue_capacity == 0 {
            return Err("gateway.queue_capacity must be positive".into());
        }
        Ok(())
    }

    pub fn identify_config(&self) -> IdentifyConfig {
        let s = &self.identify;
        IdentifyConfig {
            p_max: s.p_max,
            p_strong: s.p_strong,
            p_accept: s.p_accept,
            d_certain: s.d_certain,
            d_likely: s.d_likely,
            d_uncertain: s.d_uncertain,
            min_matches: s.min_matches,
            min_side: s.min_side,
            mask: self.imaging.mask.clone(),
            histogram: self.imaging.histogram.clone(),
            features: self.features.clone(),
            area: AreaFilterConfig {
                alpha_min: self.gateway.alpha_min,
                alpha_max: self.gateway.alpha_max,
            },
        }
    }

    /// The full config with every default filled in, as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
