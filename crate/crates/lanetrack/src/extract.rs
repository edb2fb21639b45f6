//! Candidate lane-point extraction from a probability-map channel.
//!
//! Per sampled row (bottom up, every `row_stride` rows, below the horizon)
//! the maximum-confidence column is taken when it clears the confidence
//! threshold. An initial line fit through those raw points then defines a
//! local normal, and each point is moved to the highest-confidence sample
//! found along that normal within a half-width window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_weighted, LanePoint, LineFit};
use crate::probmap::ProbabilityMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// Rows between sampled scan lines.
    pub row_stride: u32,
    /// Minimum confidence for a row's argmax to yield a point.
    pub min_confidence: f64,
    /// Normal-refinement half-width as a fraction of map width
    /// (15 px at 800 px width).
    pub normal_halfwidth_frac: f64,
    /// Fraction of rows skipped at the top of the map.
    pub horizon_frac: f64,
    /// Step between samples along the refinement normal, pixels.
    pub refine_step: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            row_stride: 4,
            min_confidence: 0.3,
            normal_halfwidth_frac: 15.0 / 800.0,
            horizon_frac: 0.35,
            refine_step: 0.25,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.row_stride < 1 {
            return Err(Error::Config("row_stride must be >= 1".into()));
        }
        if !(self.min_confidence > 0.0 && self.min_confidence < 1.0) {
            return Err(Error::Config("min_confidence must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.horizon_frac) {
            return Err(Error::Config("horizon_frac must be in [0, 1)".into()));
        }
        if self.refine_step <= 0.0 || self.normal_halfwidth_frac <= 0.0 {
            return Err(Error::Config(
                "refine_step and normal_halfwidth_frac must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn normal_halfwidth(&self, map_width: u32) -> f64 {
        self.normal_halfwidth_frac * map_width as f64
    }
}

/// Raw per-channel points, ordered by strictly increasing y.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLanePoints {
    pub channel: u32,
    /// (x, y, confidence) triples.
    pub points: Vec<(f64, f64, f64)>,
}

impl RawLanePoints {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Extracts and normal-refines candidate lane points for one channel.
///
/// An empty result is valid: the channel contains no lane.
pub fn extract_points(
    map: &ProbabilityMap,
    channel: u32,
    cfg: &ExtractionConfig,
) -> Result<RawLanePoints> {
    cfg.validate()?;
    if channel >= map.channels() {
        return Err(Error::Range(format!(
            "channel {channel} out of range (have {})",
            map.channels()
        )));
    }

    let horizon_row = (cfg.horizon_frac * map.height() as f64).ceil() as u32;
    let mut points = Vec::new();
    let mut y = map.height() - 1;
    loop {
        let (best_x, best_c) = row_argmax(map, channel, y);
        if best_c >= cfg.min_confidence {
            points.push((best_x as f64, y as f64, best_c));
        }
        if y < horizon_row + cfg.row_stride {
            break;
        }
        y -= cfg.row_stride;
    }
    points.reverse(); // ascending y

    refine_along_normal(map, channel, &mut points, cfg);

    Ok(RawLanePoints { channel, points })
}

fn row_argmax(map: &ProbabilityMap, channel: u32, y: u32) -> (u32, f64) {
    let mut best_x = 0;
    let mut best_c = f64::NEG_INFINITY;
    for x in 0..map.width() {
        let c = map.get(channel, x, y) as f64;
        if c > best_c {
            best_c = c;
            best_x = x;
        }
    }
    (best_x, best_c)
}

/// Fits an initial line through the raw points and moves each point to the
/// highest-confidence sample along the local normal. Confidence never
/// decreases: the original location is always a candidate.
fn refine_along_normal(
    map: &ProbabilityMap,
    channel: u32,
    points: &mut Vec<(f64, f64, f64)>,
    cfg: &ExtractionConfig,
) {
    let Some(fit) = initial_fit(points) else {
        return;
    };
    let (nx, ny) = normal_of(&fit);
    let halfwidth = cfg.normal_halfwidth(map.width());

    for p in points.iter_mut() {
        let (mut best_x, mut best_y, mut best_c) = *p;
        let steps = (halfwidth / cfg.refine_step).floor() as i64;
        for i in -steps..=steps {
            let t = i as f64 * cfg.refine_step;
            let x = p.0 + t * nx;
            let y = p.1 + t * ny;
            if !map.in_bounds(x, y) {
                continue;
            }
            let c = map.sample(channel, x, y).expect("bounds checked");
            if c > best_c {
                best_x = x;
                best_y = y;
                best_c = c;
            }
        }
        *p = (best_x, best_y, best_c);
    }

    // refinement can perturb y on sloped lanes; restore strict ordering
    points.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    points.dedup_by(|b, a| {
        if b.1 == a.1 {
            if b.2 > a.2 {
                *a = *b;
            }
            true
        } else {
            false
        }
    });
}

fn initial_fit(points: &[(f64, f64, f64)]) -> Option<LineFit> {
    let pts: Vec<LanePoint> = points
        .iter()
        .map(|&(x, y, c)| LanePoint {
            x,
            y,
            c,
            sigma: 1.0,
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    fit_weighted(&pts).ok()
}

/// Unit normal to a fitted line in image coordinates.
pub fn normal_of(fit: &LineFit) -> (f64, f64) {
    let s = (1.0 + fit.m * fit.m).sqrt();
    (1.0 / s, -fit.m / s)
}
