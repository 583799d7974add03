//! Little-endian feature-set cache format: `"VFSET1"`, keypoint count
//! (`u32`), then per keypoint `x, y, response, orientation` as `f32`
//! followed by the 32 descriptor bytes.

use super::{BinaryDescriptor, FeatureError, FeatureSet, Keypoint};

const MAGIC: &[u8; 6] = b"VFSET1";
const RECORD: usize = 16 + 32;

impl FeatureSet {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + self.len() * RECORD);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for (kp, d) in self.keypoints().iter().zip(self.descriptors()) {
            for v in [kp.x, kp.y, kp.response, kp.orientation] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&d.0);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FeatureError> {
        let body = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or_else(|| FeatureError::Format("bad magic".into()))?;
        if body.len() < 4 {
            return Err(FeatureError::Format("truncated header".into()));
        }
        let count = u32::from_le_bytes(body[..4].try_into().expect("4 bytes")) as usize;
        let records = &body[4..];
        if records.len() != count * RECORD {
            return Err(FeatureError::Format(format!(
                "expected {} record bytes, found {}",
                count * RECORD,
                records.len()
            )));
        }
        let mut keypoints = Vec::with_capacity(count);
        let mut descriptors = Vec::with_capacity(count);
        for rec in records.chunks_exact(RECORD) {
            let f = |i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().expect("4 bytes"));
            keypoints.push(Keypoint {
                x: f(0),
                y: f(1),
                response: f(2),
                orientation: f(3),
            });
            descriptors.push(BinaryDescriptor(rec[16..].try_into().expect("32 bytes")));
        }
        Ok(FeatureSet::new(keypoints, descriptors))
    }
}
