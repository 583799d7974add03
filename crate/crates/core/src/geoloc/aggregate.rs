use serde::{Deserialize, Serialize};

use super::{GeolocError, TargetFix};

/// 1-sigma ellipse: semi-axes in meters (major first) and the major axis
/// angle in `[0, pi)` measured from +x toward +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixAggregate {
    pub mean: [f64; 2],
    /// Unbiased sample covariance, row-major 2x2.
    pub covariance: [[f64; 2]; 2],
    pub ellipse: EllipseParams,
    pub count: usize,
    /// Set when fewer than two fixes exist or the scatter has rank < 2.
    pub degenerate: bool,
}

/// Mean, sample covariance and 1-sigma ellipse of a set of fixes.
pub fn aggregate_fixes(fixes: &[TargetFix]) -> Result<FixAggregate, GeolocError> {
    if fixes.is_empty() {
        return Err(GeolocError::NoFixes);
    }
    let n = fixes.len() as f64;
    let mx = fixes.iter().map(|f| f.x).sum::<f64>() / n;
    let my = fixes.iter().map(|f| f.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    if fixes.len() >= 2 {
        for f in fixes {
            let (dx, dy) = (f.x - mx, f.y - my);
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        let d = n - 1.0;
        sxx /= d;
        syy /= d;
        sxy /= d;
    }

    // Closed-form eigen decomposition of [[sxx, sxy], [sxy, syy]].
    let mid = (sxx + syy) / 2.0;
    let rad = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    let (l1, l2) = (mid + rad, (mid - rad).max(0.0));
    let mut orientation = if rad == 0.0 {
        0.0
    } else {
        0.5 * (2.0 * sxy).atan2(sxx - syy)
    };
    if orientation < 0.0 {
        orientation += std::f64::consts::PI;
    }
    if orientation >= std::f64::consts::PI {
        orientation -= std::f64::consts::PI;
    }
    let rank_deficient = l1 <= 0.0 || l2 <= l1 * 1e-12;

    Ok(FixAggregate {
        mean: [mx, my],
        covariance: [[sxx, sxy], [sxy, syy]],
        ellipse: EllipseParams {
            semi_major: l1.sqrt(),
            semi_minor: l2.sqrt(),
            orientation,
        },
        count: fixes.len(),
        degenerate: fixes.len() < 2 || rank_deficient,
    })
}
