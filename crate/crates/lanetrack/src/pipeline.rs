//! Per-frame wiring: extraction, variance estimation, and weighted fitting
//! per channel, producing the detections the tracker consumes.
//!
//! The stages are exposed separately so the bench workflow can time each
//! one.

use crate::config::RunConfig;
use crate::error::Result;
use crate::extract::{extract_points, normal_of, ExtractionConfig, RawLanePoints};
use crate::fit::{fit_weighted, DetectedLane, LanePoint};
use crate::probmap::ProbabilityMap;
use crate::variance::annotate_points;

/// Extraction stage: raw refined points for every channel.
pub fn extract_stage(map: &ProbabilityMap, cfg: &ExtractionConfig) -> Result<Vec<RawLanePoints>> {
    (0..map.channels())
        .map(|ch| extract_points(map, ch, cfg))
        .collect()
}

/// Variance stage: attaches per-point sigmas along the channel's fitted
/// normal.
pub fn variance_stage(
    map: &ProbabilityMap,
    raw: &[RawLanePoints],
    cfg: &RunConfig,
) -> Result<Vec<(u32, Vec<LanePoint>)>> {
    let mut out = Vec::with_capacity(raw.len());
    for channel in raw {
        if channel.points.len() < 2 {
            continue;
        }
        let plain: Vec<LanePoint> = channel
            .points
            .iter()
            .map(|&(x, y, c)| LanePoint {
                x,
                y,
                c,
                sigma: 1.0,
            })
            .collect();
        let Ok(fit) = fit_weighted(&plain) else {
            continue;
        };
        let normal = normal_of(&fit);
        let points = annotate_points(map, channel.channel, &channel.points, normal, &cfg.variance)?;
        out.push((channel.channel, points));
    }
    Ok(out)
}

/// Fit stage: weighted least squares per channel, dropping channels with
/// too few points or degenerate geometry.
pub fn fit_stage(channels: Vec<(u32, Vec<LanePoint>)>, cfg: &RunConfig) -> Vec<DetectedLane> {
    channels
        .into_iter()
        .filter_map(|(_, points)| DetectedLane::from_points(points, cfg.min_points).ok())
        .collect()
}

/// Full per-frame pass: probability map in, detections out.
pub fn detect_frame(map: &ProbabilityMap, cfg: &RunConfig) -> Result<Vec<DetectedLane>> {
    let raw = extract_stage(map, &cfg.extraction)?;
    let annotated = variance_stage(map, &raw, cfg)?;
    Ok(fit_stage(annotated, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Scenario, ScriptedLane};

    fn scenario(sigma: f64, peak: f64) -> Scenario {
        Scenario {
            frames: 1,
            width: 800,
            height: 288,
            noise: 0.0,
            dropout: 0.0,
            seed: 3,
            gt_top_frac: 0.35,
            lanes: vec![ScriptedLane {
                channel: 0,
                m: 0.1,
                b: 350.0,
                drift: 0.0,
                sigma,
                peak,
                appear: 0,
                disappear: 1,
                in_gt: true,
            }],
        }
    }

    #[test]
    fn detects_single_synthetic_lane() {
        let (map, _) = scenario(3.0, 0.9).render(0).unwrap();
        let cfg = RunConfig::default();
        let lanes = detect_frame(&map, &cfg).unwrap();
        assert_eq!(lanes.len(), 1);
        let lane = &lanes[0];
        assert!((lane.fit.m - 0.1).abs() < 0.02, "m = {}", lane.fit.m);
        assert!((lane.fit.b - 350.0).abs() < 3.0, "b = {}", lane.fit.b);
        assert!(
            (lane.sigma - 3.0).abs() / 3.0 < 0.15,
            "sigma = {}",
            lane.sigma
        );
    }

    #[test]
    fn sigma_recovery_across_widths() {
        for sigma_true in [2.0, 4.0, 6.0] {
            let (map, _) = scenario(sigma_true, 0.9).render(0).unwrap();
            let lanes = detect_frame(&map, &RunConfig::default()).unwrap();
            assert_eq!(lanes.len(), 1);
            let err = (lanes[0].sigma - sigma_true).abs() / sigma_true;
            assert!(
                err < 0.15,
                "sigma_true {sigma_true}: est {}",
                lanes[0].sigma
            );
        }
    }

    #[test]
    fn empty_map_yields_no_lanes() {
        let map = ProbabilityMap::new(64, 64, 2, vec![0.0; 64 * 64 * 2]).unwrap();
        let lanes = detect_frame(&map, &RunConfig::default()).unwrap();
        assert!(lanes.is_empty());
    }
}
