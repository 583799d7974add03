use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IdentifyConfig, IdentifyError};
use crate::features::{extract_features, FeatureSet};
use crate::imaging::{
    apply_mask_to_gray, hue_histogram, read_png, to_grayscale, write_png, HueHistogram, ImageBuffer,
    PixelMask,
};

/// Features and hue histogram of one pre-segmented template image.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateModel {
    pub template_id: u8,
    pub features: FeatureSet,
    pub histogram: HueHistogram,
    /// Hex SHA-256 of the RGBA content.
    pub source_hash: String,
}

impl TemplateModel {
    /// `.hist` cache body: `u32` bin count then `f64` bins, little-endian.
    pub fn histogram_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.histogram.len());
        out.extend_from_slice(&(self.histogram.len() as u32).to_le_bytes());
        for b in &self.histogram.bins {
            out.extend_from_slice(&b.to_le_bytes());
        }
        out
    }
}

fn parse_histogram(bytes: &[u8], pixel_count: u64) -> Option<HueHistogram> {
    let n = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
    let body = &bytes[4..];
    if body.len() != n * 8 {
        return None;
    }
    let bins = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Some(HueHistogram { bins, pixel_count })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn content_hash(img: &ImageBuffer) -> String {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    for p in img.pixels() {
        h.update(p);
    }
    if let Some(a) = img.alpha() {
        h.update(a);
    }
    hex(&h.finalize())
}

fn config_hash(cfg: &IdentifyConfig) -> String {
    let key = serde_json::to_vec(&(&cfg.features, &cfg.histogram)).expect("plain config");
    hex(&Sha256::digest(&key))
}

/// Builds a template from an RGBA cutout; pixels with alpha 0 are
/// background.
pub fn load_template(img: &ImageBuffer, id: u8, cfg: &IdentifyConfig) -> Result<TemplateModel, IdentifyError> {
    let mask = PixelMask::from_alpha(img).ok_or(IdentifyError::MissingAlpha { id })?;
    let histogram = hue_histogram(img, &mask, &cfg.histogram).map_err(|source| IdentifyError::Imaging { id, source })?;
    let mut gray = to_grayscale(img);
    apply_mask_to_gray(&mut gray, &mask).map_err(|source| IdentifyError::Imaging { id, source })?;
    let features = extract_features(&gray, &cfg.features).map_err(|source| IdentifyError::Features { id, source })?;
    if features.is_empty() {
        return Err(IdentifyError::NoFeatures { id });
    }
    Ok(TemplateModel {
        template_id: id,
        features,
        histogram,
        source_hash: content_hash(img),
    })
}

#[derive(Serialize, Deserialize)]
struct CacheMeta {
    source_hash: String,
    config_hash: String,
    pixel_count: u64,
}

/// Writes `template{1,2}.png` plus feature and histogram caches into `dir`.
pub fn save_template_bundle(
    dir: &Path,
    images: [&ImageBuffer; 2],
    cfg: &IdentifyConfig,
) -> Result<[TemplateModel; 2], IdentifyError> {
    let t1 = load_template(images[0], 1, cfg)?;
    let t2 = load_template(images[1], 2, cfg)?;
    fs::create_dir_all(dir)?;
    for (img, t) in images.iter().zip([&t1, &t2]) {
        let stem = dir.join(format!("template{}", t.template_id));
        write_png(img, stem.with_extension("png")).map_err(|source| IdentifyError::Imaging {
            id: t.template_id,
            source,
        })?;
        fs::write(stem.with_extension("vfset"), t.features.to_bytes())?;
        fs::write(stem.with_extension("hist"), t.histogram_bytes())?;
        let meta = CacheMeta {
            source_hash: t.source_hash.clone(),
            config_hash: config_hash(cfg),
            pixel_count: t.histogram.pixel_count,
        };
        fs::write(stem.with_extension("json"), serde_json::to_vec(&meta).expect("plain struct"))?;
    }
    Ok([t1, t2])
}

/// Loads both templates from a bundle directory, using the caches when
/// their recorded hashes match the image and the current config.
pub fn load_template_bundle(dir: &Path, cfg: &IdentifyConfig) -> Result<[TemplateModel; 2], IdentifyError> {
    let load = |id: u8| -> Result<TemplateModel, IdentifyError> {
        let stem = dir.join(format!("template{id}"));
        let png = stem.with_extension("png");
        if !png.is_file() {
            return Err(IdentifyError::Bundle(format!("missing {}", png.display())));
        }
        let img = read_png(&png).map_err(|source| IdentifyError::Imaging { id, source })?;
        if let Some(t) = read_cache(&stem, &img, id, cfg) {
            return Ok(t);
        }
        log::info!("template {id}: cache stale or missing, recomputing");
        load_template(&img, id, cfg)
    };
    Ok([load(1)?, load(2)?])
}

fn read_cache(stem: &Path, img: &ImageBuffer, id: u8, cfg: &IdentifyConfig) -> Option<TemplateModel> {
    let meta: CacheMeta = serde_json::from_slice(&fs::read(stem.with_extension("json")).ok()?).ok()?;
    let source_hash = content_hash(img);
    if meta.source_hash != source_hash || meta.config_hash != config_hash(cfg) {
        return None;
    }
    let features = FeatureSet::from_bytes(&fs::read(stem.with_extension("vfset")).ok()?).ok()?;
    let histogram = parse_histogram(&fs::read(stem.with_extension("hist")).ok()?, meta.pixel_count)?;
    if features.is_empty() || histogram.len() != cfg.histogram.num_bins {
        return None;
    }
    Some(TemplateModel {
        template_id: id,
        features,
        histogram,
        source_hash,
    })
}
