//! Template preparation and the per-candidate identification pipeline:
//! background masking, binary feature matching against both templates,
//! hue histogram distance, and the threshold decision list.

mod pipeline;
mod template;

pub use pipeline::{assess_candidate, identify_frame, identify_frame_with_crops, AssessedCandidate};
pub use template::{load_template, load_template_bundle, save_template_bundle, TemplateModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureConfig, FeatureError};
use crate::gateway::{AreaFilterConfig, Detection};
use crate::imaging::{HistogramConfig, ImagingError, MaskConfig};

#[derive(Debug, Error)]
pub enum IdentifyError {
    #[error("invalid identify config: {0}")]
    InvalidConfig(String),
    #[error("template {id}: {source}")]
    Imaging {
        id: u8,
        #[source]
        source: ImagingError,
    },
    #[error("template {id} has no features")]
    NoFeatures { id: u8 },
    #[error("template {id}: {source}")]
    Features {
        id: u8,
        #[source]
        source: FeatureError,
    },
    #[error("template {id} has no alpha channel")]
    MissingAlpha { id: u8 },
    #[error("template bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyConfig {
    /// Largest masked-out fraction before a crop is discarded.
    pub p_max: f64,
    pub p_strong: f64,
    pub p_accept: f64,
    pub d_certain: f64,
    pub d_likely: f64,
    pub d_uncertain: f64,
    /// Matches required against each template.
    pub min_matches: usize,
    /// Crops whose shorter side is below this are upscaled.
    pub min_side: u32,
    pub mask: MaskConfig,
    pub histogram: HistogramConfig,
    pub features: FeatureConfig,
    pub area: AreaFilterConfig,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            p_max: 0.85,
            p_strong: 0.15,
            p_accept: 0.08,
            d_certain: 0.30,
            d_likely: 0.45,
            d_uncertain: 0.60,
            min_matches: 5,
            min_side: 80,
            mask: MaskConfig::default(),
            histogram: HistogramConfig::default(),
            features: FeatureConfig::default(),
            area: AreaFilterConfig::default(),
        }
    }
}

impl IdentifyConfig {
    pub fn validate(&self) -> Result<(), IdentifyError> {
        let bad = |m: String| Err(IdentifyError::InvalidConfig(m));
        if !(self.p_max > 0.0 && self.p_max < 1.0) {
            return bad(format!("p_max {} not in (0, 1)", self.p_max));
        }
        if !(0.0 <= self.p_accept && self.p_accept <= self.p_strong && self.p_strong <= 1.0) {
            return bad(format!(
                "need 0 <= p_accept ({}) <= p_strong ({}) <= 1",
                self.p_accept, self.p_strong
            ));
        }
        if !(0.0 < self.d_certain && self.d_certain < self.d_likely && self.d_likely < self.d_uncertain && self.d_uncertain <= 1.0) {
            return bad(format!(
                "need 0 < d_certain ({}) < d_likely ({}) < d_uncertain ({}) <= 1",
                self.d_certain, self.d_likely, self.d_uncertain
            ));
        }
        if self.histogram.num_bins == 0 {
            return bad("histogram.num_bins must be positive".into());
        }
        if self.min_side < self.features.min_image_side() {
            return bad(format!(
                "min_side {} below the feature detector minimum {}",
                self.min_side,
                self.features.min_image_side()
            ));
        }
        self.area
            .validate()
            .map_err(|e| IdentifyError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchStrength {
    Weak,
    Acceptable,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    AreaFiltered,
    TooFewPixels,
    NoFeatures,
    TooFewMatches,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Target,
    PossibleTarget,
    NotTarget,
    Rejected(RejectReason),
}

impl Verdict {
    /// Target > PossibleTarget > NotTarget; rejections rank with NotTarget.
    pub fn rank(&self) -> u8 {
        match self {
            Verdict::Target => 2,
            Verdict::PossibleTarget => 1,
            Verdict::NotTarget | Verdict::Rejected(_) => 0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Target => "target",
            Verdict::PossibleTarget => "possible_target",
            Verdict::NotTarget => "not_target",
            Verdict::Rejected(_) => "rejected",
        }
    }
}

/// Everything computed for one detection. Values from stages that were not
/// reached are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    /// `"<frame_id>-<index>"`, also the key for the crop image.
    pub candidate_id: String,
    pub frame_id: u64,
    pub timestamp: f64,
    /// Position of the detection in the frame's detection list.
    pub index: usize,
    pub detection: Detection,
    pub verdict: Verdict,
    pub retained_ratio: Option<f64>,
    pub keypoints: Option<usize>,
    pub matches1: Option<usize>,
    pub matches2: Option<usize>,
    pub p_m1: Option<f64>,
    pub p_m2: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d_hist: Option<f64>,
    pub strength: Option<MatchStrength>,
}

impl CandidateReport {
    pub fn candidate_id_for(frame_id: u64, index: usize) -> String {
        format!("{frame_id}-{index}")
    }

    pub(crate) fn new(frame_id: u64, timestamp: f64, index: usize, detection: Detection) -> Self {
        Self {
            candidate_id: Self::candidate_id_for(frame_id, index),
            frame_id,
            timestamp,
            index,
            detection,
            verdict: Verdict::NotTarget,
            retained_ratio: None,
            keypoints: None,
            matches1: None,
            matches2: None,
            p_m1: None,
            p_m2: None,
            d1: None,
            d2: None,
            d_hist: None,
            strength: None,
        }
    }

    pub fn to_ndjson(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

/// Strong when both templates match well, Acceptable when one does and the
/// other at least moderately.
pub fn classify_strength(p_m1: f64, p_m2: f64, cfg: &IdentifyConfig) -> MatchStrength {
    let (lo, hi) = (p_m1.min(p_m2), p_m1.max(p_m2));
    if lo >= cfg.p_strong {
        MatchStrength::Strong
    } else if hi >= cfg.p_strong && lo >= cfg.p_accept {
        MatchStrength::Acceptable
    } else {
        MatchStrength::Weak
    }
}

/// The decision list, first matching rule wins.
// The two PossibleTarget rules stay separate to mirror the list.
#[allow(clippy::if_same_then_else)]
pub fn decide(strength: MatchStrength, d_hist: f64, passed_min_matches: bool, cfg: &IdentifyConfig) -> Verdict {
    if !passed_min_matches {
        Verdict::NotTarget
    } else if d_hist < cfg.d_certain {
        Verdict::Target
    } else if d_hist < cfg.d_likely && strength >= MatchStrength::Acceptable {
        Verdict::PossibleTarget
    } else if d_hist < cfg.d_uncertain && strength == MatchStrength::Strong {
        Verdict::PossibleTarget
    } else {
        Verdict::NotTarget
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strength_examples() {
        let cfg = IdentifyConfig::default();
        assert_eq!(classify_strength(0.20, 0.18, &cfg), MatchStrength::Strong);
        assert_eq!(classify_strength(0.20, 0.10, &cfg), MatchStrength::Acceptable);
        assert_eq!(classify_strength(0.10, 0.20, &cfg), MatchStrength::Acceptable);
        assert_eq!(classify_strength(0.05, 0.05, &cfg), MatchStrength::Weak);
        assert_eq!(classify_strength(0.20, 0.05, &cfg), MatchStrength::Weak);
    }

    #[test]
    fn decide_examples() {
        let cfg = IdentifyConfig::default();
        assert_eq!(decide(MatchStrength::Weak, 0.20, true, &cfg), Verdict::Target);
        assert_eq!(decide(MatchStrength::Strong, 0.50, true, &cfg), Verdict::PossibleTarget);
        assert_eq!(decide(MatchStrength::Acceptable, 0.50, true, &cfg), Verdict::NotTarget);
        assert_eq!(decide(MatchStrength::Acceptable, 0.40, true, &cfg), Verdict::PossibleTarget);
        assert_eq!(decide(MatchStrength::Strong, 0.10, false, &cfg), Verdict::NotTarget);
    }

    #[test]
    fn threshold_order_validated() {
        assert!(IdentifyConfig::default().validate().is_ok());
        let cfg = IdentifyConfig {
            d_likely: 0.25,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(IdentifyError::InvalidConfig(_))));
        let cfg = IdentifyConfig {
            p_accept: 0.2,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = IdentifyConfig {
            min_side: 10,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn verdict_json_shape() {
        assert_eq!(serde_json::to_string(&Verdict::Target).unwrap(), "\"Target\"");
        assert_eq!(
            serde_json::to_string(&Verdict::Rejected(RejectReason::NoFeatures)).unwrap(),
            "{\"Rejected\":\"NoFeatures\"}"
        );
    }

    fn strength() -> impl Strategy<Value = MatchStrength> {
        prop_oneof![
            Just(MatchStrength::Weak),
            Just(MatchStrength::Acceptable),
            Just(MatchStrength::Strong)
        ]
    }

    proptest! {
        #[test]
        fn decide_monotone_in_d_hist(s in strength(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, pass: bool) {
            let cfg = IdentifyConfig::default();
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(decide(s, hi, pass, &cfg).rank() <= decide(s, lo, pass, &cfg).rank());
        }

        #[test]
        fn decide_monotone_in_strength(s1 in strength(), s2 in strength(), d in 0.0f64..=1.0, pass: bool) {
            let cfg = IdentifyConfig::default();
            let (lo, hi) = (s1.min(s2), s1.max(s2));
            prop_assert!(decide(lo, d, pass, &cfg).rank() <= decide(hi, d, pass, &cfg).rank());
        }
    }
}
