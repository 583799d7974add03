//! Known-target vessel identification for aerial maritime search.
//!
//! Detections of vessels in a frame are compared against two pre-segmented
//! template images of the target using binary feature matching and hue
//! histogram distance. Identified targets are localized by intersecting the
//! camera ray with the sea plane, and a small state machine drives the
//! operator-confirmation loop. [`evalkit`] holds detection/identification
//! metrics and a deterministic synthetic scene generator.

pub mod evalkit;
pub mod features;
pub mod gateway;
pub mod geoloc;
pub mod identify;
pub mod imaging;
pub mod mission;

pub use evalkit::{ConfusionCounts, GroundTruthFrame};
pub use features::{BinaryDescriptor, FeatureConfig, FeatureSet, Keypoint, MatchPair};
pub use gateway::{AreaFilterConfig, Detection, FrameDetections};
pub use geoloc::{CameraIntrinsics, Extrinsics, FixAggregate, TargetFix, UavPose};
pub use identify::{CandidateReport, IdentifyConfig, MatchStrength, TemplateModel, Verdict};
pub use imaging::{GrayImage, HueHistogram, ImageBuffer, NormBox, PixelMask};
pub use mission::{MissionAction, MissionEvent, MissionState};

