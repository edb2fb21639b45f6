//! Per-point positional standard deviation from the confidence profile
//! along the normal.
//!
//! The confidence values around a detected point are modelled as a Gaussian
//! over position; the profile falls to `e^{-1/2}` of the peak confidence at
//! one standard deviation. Sigma is estimated by walking outward along the
//! normal on both sides until the sampled confidence drops to
//! `e^{-1/2} * c_d`, and averaging the two crossing distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::LanePoint;
use crate::probmap::ProbabilityMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarianceConfig {
    /// Step between samples along the normal, pixels.
    pub sigma_step: f64,
    /// Cap on the one-sided walk as a fraction of map width.
    pub sigma_cap_frac: f64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            sigma_step: 0.25,
            sigma_cap_frac: 0.05,
        }
    }
}

impl VarianceConfig {
    pub fn sigma_cap(&self, map_width: u32) -> f64 {
        self.sigma_cap_frac * map_width as f64
    }
}

/// Result of the one-sided walk.
enum SideDistance {
    Crossed(f64),
    Capped(f64),
    /// Raster edge reached before crossing or cap.
    Blocked,
}

/// Estimates sigma for one point from the profile along the unit `normal`.
///
/// Each side contributes its crossing distance (capped walks contribute the
/// cap); an edge-blocked side is excluded so truncation does not bias sigma
/// downward. Both sides blocked falls back to the cap.
pub fn estimate_point_sigma(
    map: &ProbabilityMap,
    channel: u32,
    x: f64,
    y: f64,
    c_d: f64,
    normal: (f64, f64),
    cfg: &VarianceConfig,
) -> Result<f64> {
    if c_d <= 0.0 {
        return Err(Error::Range("point confidence must be positive".into()));
    }
    let threshold = (-0.5f64).exp() * c_d;
    let cap = cfg.sigma_cap(map.width());
    let pos = walk_side(map, channel, x, y, normal, threshold, cap, cfg.sigma_step)?;
    let neg = walk_side(
        map,
        channel,
        x,
        y,
        (-normal.0, -normal.1),
        threshold,
        cap,
        cfg.sigma_step,
    )?;
    let sigma = match (side_value(pos), side_value(neg)) {
        (Some(a), Some(b)) => (a + b) / 2.0,
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => cap,
    };
    // a crossing inside the first step still yields a positive distance,
    // but guard against a degenerate zero from interpolation
    Ok(sigma.max(cfg.sigma_step * 1e-6))
}

fn side_value(side: SideDistance) -> Option<f64> {
    match side {
        SideDistance::Crossed(d) | SideDistance::Capped(d) => Some(d),
        SideDistance::Blocked => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn walk_side(
    map: &ProbabilityMap,
    channel: u32,
    x: f64,
    y: f64,
    dir: (f64, f64),
    threshold: f64,
    cap: f64,
    step: f64,
) -> Result<SideDistance> {
    let mut prev_t = 0.0;
    let mut prev_c = map.sample(channel, x, y)?;
    let mut t = step;
    while t <= cap {
        let px = x + t * dir.0;
        let py = y + t * dir.1;
        if !map.in_bounds(px, py) {
            return Ok(SideDistance::Blocked);
        }
        let c = map.sample(channel, px, py).expect("bounds checked");
        if c <= threshold {
            // linear interpolation between the last two samples refines the
            // crossing distance
            let frac = if prev_c > c {
                (prev_c - threshold) / (prev_c - c)
            } else {
                1.0
            };
            return Ok(SideDistance::Crossed(prev_t + frac * (t - prev_t)));
        }
        prev_t = t;
        prev_c = c;
        t += step;
    }
    Ok(SideDistance::Capped(cap))
}

/// RMS of the per-point sigmas: the standard deviation for the lane as a
/// whole.
///
/// ```
/// use lanetrack::lane_sigma;
/// let s = lane_sigma(&[3.0, 4.0]).unwrap();
/// assert!((s - 12.5f64.sqrt()).abs() < 1e-12);
/// ```
pub fn lane_sigma(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() {
        return Err(Error::Range("lane_sigma needs at least one point".into()));
    }
    Ok((sigmas.iter().map(|s| s * s).sum::<f64>() / sigmas.len() as f64).sqrt())
}

/// Attaches estimated sigmas to raw `(x, y, c)` points.
pub fn annotate_points(
    map: &ProbabilityMap,
    channel: u32,
    points: &[(f64, f64, f64)],
    normal: (f64, f64),
    cfg: &VarianceConfig,
) -> Result<Vec<LanePoint>> {
    points
        .iter()
        .map(|&(x, y, c)| {
            let sigma = estimate_point_sigma(map, channel, x, y, c, normal, cfg)?;
            Ok(LanePoint { x, y, c, sigma })
        })
        .collect()
}
