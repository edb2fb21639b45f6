//! Synthetic multi-frame probability-map sequences with known ground
//! truth.
//!
//! Each scripted lane contributes a Gaussian cross-section per row, scaled
//! by its peak confidence; overlapping lanes combine by per-pixel max so
//! values stay in `[0, 1]`. Noise is additive uniform, clipped to `[0, 1]`,
//! and fully determined by the scenario seed and frame index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::LanePolyline;
use crate::probmap::ProbabilityMap;

use serde::{Deserialize, Serialize};

/// One scripted straight lane: `x = m*y + b` with optional per-frame drift
/// of the intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedLane {
    /// Map channel the lane is rendered into (one channel per lane
    /// hypothesis, matching per-lane detector outputs).
    #[serde(default)]
    pub channel: u32,
    pub m: f64,
    pub b: f64,
    /// Intercept drift per frame since `appear`.
    #[serde(default)]
    pub drift: f64,
    /// Marking standard deviation of the rendered Gaussian profile, pixels.
    pub sigma: f64,
    /// Peak confidence in (0, 1].
    pub peak: f64,
    /// First frame the lane is visible.
    #[serde(default)]
    pub appear: u64,
    /// First frame the lane is no longer visible.
    pub disappear: u64,
    /// Whether the lane contributes a ground-truth polyline.
    #[serde(default = "default_true")]
    pub in_gt: bool,
}

fn default_true() -> bool {
    true
}

impl ScriptedLane {
    pub fn visible(&self, frame: u64) -> bool {
        frame >= self.appear && frame < self.disappear
    }

    pub fn center_at(&self, frame: u64, y: f64) -> f64 {
        self.m * y + self.b + self.drift * (frame - self.appear) as f64
    }
}

/// A full scripted sequence. Deterministic given the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub frames: u64,
    pub width: u32,
    pub height: u32,
    /// Additive uniform noise amplitude.
    #[serde(default)]
    pub noise: f64,
    /// Per-row probability that a lane's contribution is dropped.
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of the height where ground-truth polylines start; matches
    /// the extractor horizon so predicted and true lanes share a vertical
    /// extent.
    #[serde(default = "default_gt_top_frac")]
    pub gt_top_frac: f64,
    #[serde(rename = "lane", default)]
    pub lanes: Vec<ScriptedLane>,
}

fn default_gt_top_frac() -> f64 {
    0.35
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("scenario needs at least one frame".into()));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::Config("canvas must be at least 2x2".into()));
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            if lane.sigma <= 0.0 {
                return Err(Error::Config(format!("lane {i}: sigma must be > 0")));
            }
            if !(lane.peak > 0.0 && lane.peak <= 1.0) {
                return Err(Error::Config(format!("lane {i}: peak must be in (0, 1]")));
            }
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::Config("noise amplitude must be in [0, 0.5]".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn channel_count(&self) -> u32 {
        self.lanes.iter().map(|l| l.channel + 1).max().unwrap_or(1)
    }

    /// Renders one frame and its ground-truth polylines.
    ///
    /// Pure given `(scenario, frame)`: the RNG stream is derived from the
    /// seed and frame index, so frames may render in parallel and repeated
    /// renders are bit-identical.
    pub fn render(&self, frame: u64) -> Result<(ProbabilityMap, Vec<LanePolyline>)> {
        if frame >= self.frames {
            return Err(Error::Range(format!(
                "frame {frame} outside scenario of {} frames",
                self.frames
            )));
        }
        let w = self.width as usize;
        let h = self.height as usize;
        let channels = self.channel_count() as usize;
        let mut values = vec![0.0f32; w * h * channels];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(frame.wrapping_add(1));

        for lane in &self.lanes {
            if !lane.visible(frame) {
                continue;
            }
            let plane = lane.channel as usize * w * h;
            for y in 0..h {
                if self.dropout > 0.0 && rng.gen::<f64>() < self.dropout {
                    continue;
                }
                let center = lane.center_at(frame, y as f64);
                let reach = (4.0 * lane.sigma).ceil();
                let x_lo = ((center - reach).floor().max(0.0)) as usize;
                let x_hi = ((center + reach).ceil().min((w - 1) as f64)) as usize;
                if x_lo > x_hi || center < -reach {
                    continue;
                }
                for x in x_lo..=x_hi {
                    let d = x as f64 - center;
                    let v = lane.peak * (-d * d / (2.0 * lane.sigma * lane.sigma)).exp();
                    let cell = &mut values[plane + y * w + x];
                    *cell = cell.max(v as f32);
                }
            }
        }

        if self.noise > 0.0 {
            for cell in values.iter_mut() {
                let n = rng.gen::<f64>() * self.noise;
                *cell = (*cell + n as f32).clamp(0.0, 1.0);
            }
        }

        let map = ProbabilityMap::new(self.width, self.height, channels as u32, values)?;
        let gt = self.ground_truth(frame)?;
        Ok((map, gt))
    }

    /// Ground-truth polylines sampled from the scripted centerlines every
    /// 10 rows between the gt horizon and the bottom edge.
    pub fn ground_truth(&self, frame: u64) -> Result<Vec<LanePolyline>> {
        let y_top = self.gt_top_frac * self.height as f64;
        let y_bot = (self.height - 1) as f64;
        let mut lanes = Vec::new();
        for lane in &self.lanes {
            if !lane.visible(frame) || !lane.in_gt {
                continue;
            }
            let mut points = Vec::new();
            let mut y = y_top.ceil();
            while y <= y_bot {
                points.push((lane.center_at(frame, y), y));
                y += 10.0;
            }
            if points.len() < 2 {
                points = vec![
                    (lane.center_at(frame, y_top), y_top),
                    (lane.center_at(frame, y_bot), y_bot),
                ];
            }
            lanes.push(LanePolyline::new(points)?);
        }
        Ok(lanes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_lane_scenario() -> Scenario {
        Scenario {
            frames: 5,
            width: 800,
            height: 288,
            noise: 0.0,
            dropout: 0.0,
            seed: 7,
            gt_top_frac: 0.35,
            lanes: vec![ScriptedLane {
                channel: 0,
                m: 0.0,
                b: 400.0,
                drift: 0.0,
                sigma: 3.0,
                peak: 0.9,
                appear: 0,
                disappear: 5,
                in_gt: true,
            }],
        }
    }

    #[test]
    fn gaussian_profile_by_construction() {
        let s = one_lane_scenario();
        let (map, _) = s.render(0).unwrap();
        let y = 200;
        assert!((map.get(0, 400, y) - 0.9).abs() < 1e-6);
        let expected = 0.9 * (-0.5f64).exp();
        assert!((map.get(0, 403, y) as f64 - expected).abs() < 1e-6);
        assert!((map.get(0, 397, y) as f64 - expected).abs() < 1e-6);
    }

    #[test]
    fn render_is_deterministic() {
        let mut s = one_lane_scenario();
        s.noise = 0.1;
        s.dropout = 0.2;
        let (a, _) = s.render(3).unwrap();
        let (b, _) = s.render(3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lane_jump_moves_ground_truth() {
        let mut s = one_lane_scenario();
        s.frames = 10;
        s.lanes[0].disappear = 5;
        s.lanes.push(ScriptedLane {
            b: 250.0,
            appear: 5,
            disappear: 10,
            ..s.lanes[0]
        });
        let before = s.ground_truth(4).unwrap();
        let after = s.ground_truth(5).unwrap();
        assert!((before[0].points[0].0 - 400.0).abs() < 1e-9);
        assert!((after[0].points[0].0 - 250.0).abs() < 1e-9);
    }

    #[test]
    fn toml_round_trip() {
        let s = one_lane_scenario();
        let text = s.to_toml();
        let parsed = Scenario::parse(&text).unwrap();
        assert_eq!(parsed, s);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "frames = 1\nwidth = 8\nheight = 8\nbogus = 3\n";
        assert!(Scenario::parse(text).is_err());
    }

    #[test]
    fn overlapping_lanes_stay_in_unit_interval() {
        let mut s = one_lane_scenario();
        s.lanes.push(ScriptedLane {
            b: 402.0,
            ..s.lanes[0]
        });
        s.noise = 0.3;
        let (map, _) = s.render(0).unwrap();
        for y in 0..map.height() {
            for x in 0..map.width() {
                let v = map.get(0, x, y);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn frame_out_of_range_errors() {
        assert!(one_lane_scenario().render(5).is_err());
    }
}
