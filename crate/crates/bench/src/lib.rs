//! Benchmark fixtures; the benches themselves live in `benches/`.

use vesselid_core::evalkit::{SequenceFrame, SequenceSpec};
use vesselid_core::identify::load_template;
use vesselid_core::{IdentifyConfig, TemplateModel};

/// One rendered harness frame and the templates prepared from the spec.
pub fn harness(frame: u32) -> (SequenceFrame, [TemplateModel; 2], IdentifyConfig) {
    let spec = SequenceSpec::default();
    let cfg = IdentifyConfig::default();
    let [a, b] = spec.templates();
    let t1 = load_template(&a, 1, &cfg).expect("template 1");
    let t2 = load_template(&b, 2, &cfg).expect("template 2");
    (spec.frame(frame), [t1, t2], cfg)
}
