//! Cross-frame lane tracking.
//!
//! Detections are associated to tracked lanes by RMS line distance gated at
//! `match_k` lane standard deviations, lane weights are maintained as an
//! exponentially weighted moving average without bias correction, and
//! matched lane parameters are merged in Hesse form with weights
//! `omega_f / sigma_f` (current) and `Omega_{f-1} / sigma_{f-1}` (tracked).
//! The highest-weight lane in each image half is the frame's output.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{canonicalize_hesse, hesse_to_slope, DetectedLane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// EWMA smoothing coefficient in (0, 1].
    pub alpha: f64,
    /// Weight increment factor for potential active lane markings.
    pub psi_active: f64,
    /// Weight increment factor for nonactive lane markings.
    pub psi_nonactive: f64,
    /// Match gate in units of lane sigma.
    pub match_k: f64,
    /// Minimum EWMA weight for a lane to stay in the cache.
    pub prune_weight: f64,
    /// Fraction of the image height where fallback distance integration
    /// starts.
    pub horizon_frac: f64,
    /// Lane merge on/off (ablation switch); weights are EWMA-updated either
    /// way.
    pub merge_enabled: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            psi_active: 2.0,
            psi_nonactive: 1.0,
            match_k: 2.0,
            prune_weight: 0.04,
            horizon_frac: 0.35,
            merge_enabled: true,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must be in (0, 1]".into()));
        }
        if !(self.psi_active >= self.psi_nonactive && self.psi_nonactive > 0.0) {
            return Err(Error::Config("need psi_active >= psi_nonactive > 0".into()));
        }
        if self.match_k < 0.0 {
            return Err(Error::Config("match_k must be >= 0".into()));
        }
        if self.prune_weight <= 0.0 {
            return Err(Error::Config("prune_weight must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.horizon_frac) {
            return Err(Error::Config("horizon_frac must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Cross-frame lane state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedLane {
    pub id: u64,
    pub r: f64,
    pub theta: f64,
    /// Lane sigma, updated on merge.
    pub sigma: f64,
    /// EWMA weight Omega.
    pub omega_ewma: f64,
    pub last_seen: u64,
    /// Potential active-lane marking flag.
    pub active: bool,
    pub y_span: (f64, f64),
}

impl TrackedLane {
    /// Slope/intercept form, `None` for horizontal lines.
    pub fn slope_form(&self) -> Option<(f64, f64)> {
        hesse_to_slope(self.r, self.theta)
    }

    fn bottom_crossing(&self, height: u32) -> Option<f64> {
        self.slope_form().map(|(m, b)| m * (height - 1) as f64 + b)
    }
}

/// Per-frame output: chosen left/right active lanes plus the full tracked
/// set.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: u64,
    pub left: Option<TrackedLane>,
    pub right: Option<TrackedLane>,
    pub all_lanes: Vec<TrackedLane>,
}

/// RMS distance between two lines `x = m*y + b` over `[y0, y1]`, in closed
/// form:
///
/// `sqrt( dm^2 (y1^2 + y1 y0 + y0^2)/3 + dm db (y1 + y0) + db^2 )`
///
/// ```
/// use lanetrack::line_distance;
/// let d = line_distance((0.0, 10.0), (0.0, 15.0), (0.0, 100.0)).unwrap();
/// assert!((d - 5.0).abs() < 1e-12);
/// ```
pub fn line_distance(a: (f64, f64), b: (f64, f64), y_range: (f64, f64)) -> Result<f64> {
    let (y0, y1) = y_range;
    if y1 <= y0 {
        return Err(Error::Range(format!("empty y range [{y0}, {y1}]")));
    }
    let dm = a.0 - b.0;
    let db = a.1 - b.1;
    let sq = dm * dm * (y1 * y1 + y1 * y0 + y0 * y0) / 3.0 + dm * db * (y1 + y0) + db * db;
    Ok(sq.max(0.0).sqrt())
}

/// Current-frame lane weight `omega_f = psi * c_f * N_f`.
pub fn frame_weight(detected: &DetectedLane, cfg: &TrackerConfig) -> f64 {
    let psi = if detected.active {
        cfg.psi_active
    } else {
        cfg.psi_nonactive
    };
    psi * detected.c_f * detected.n_f as f64
}

/// EWMA update `Omega_f = alpha * omega_f + (1 - alpha) * Omega_{f-1}`.
///
/// No bias correction: a lane never seen before uses `Omega_{f-1} = 0`,
/// which gives older lanes a weight advantage. An unmatched stored lane
/// decays with `omega_f = 0`.
pub fn update_weight(omega_f: f64, prev_omega_ewma: Option<f64>, alpha: f64) -> f64 {
    alpha * omega_f + (1.0 - alpha) * prev_omega_ewma.unwrap_or(0.0)
}

/// Proportion of the merged parameters contributed by the current frame:
///
/// `zeta_f = omega_f sigma_{f-1} / (omega_f sigma_{f-1} + Omega_{f-1} sigma_f)`
pub fn merge_zeta(omega_f: f64, sigma_f: f64, prev_omega: f64, prev_sigma: f64) -> f64 {
    omega_f * prev_sigma / (omega_f * prev_sigma + prev_omega * sigma_f)
}

/// Merged lane parameters `(r_f, theta_f, sigma_merged)`.
///
/// The detection's `(r, theta)` is branch-aligned to the tracked lane
/// before averaging, so the convex combination never crosses the
/// `(r, theta)` / `(-r, theta + pi)` branch cut; the result is
/// re-canonicalized.
pub fn merge_params(
    zeta: f64,
    det_r: f64,
    det_theta: f64,
    det_sigma: f64,
    prev_r: f64,
    prev_theta: f64,
    prev_sigma: f64,
) -> (f64, f64, f64) {
    let (mut r_hat, theta_hat) = (det_r, det_theta);
    // align branches: flip the detection if the normals point apart
    let mut delta = wrap_angle(theta_hat - prev_theta);
    if delta.abs() > PI / 2.0 {
        r_hat = -r_hat;
        delta = wrap_angle(theta_hat + PI - prev_theta);
    }
    let r = zeta * r_hat + (1.0 - zeta) * prev_r;
    let theta = prev_theta + zeta * delta;
    let sigma = zeta * det_sigma + (1.0 - zeta) * prev_sigma;
    let (r, theta) = canonicalize_hesse(r, theta);
    (r, theta, sigma)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Single-stream tracker state. `step` calls must be serialized in frame
/// order; distinct streams are independent.
#[derive(Debug, Clone)]
pub struct Tracker {
    width: u32,
    height: u32,
    cfg: TrackerConfig,
    lanes: Vec<TrackedLane>,
    next_id: u64,
}

/// Versioned checkpoint document for a tracker stream.
#[derive(Debug, Serialize, Deserialize)]
struct TrackerState {
    version: u32,
    width: u32,
    height: u32,
    next_id: u64,
    lanes: Vec<TrackedLane>,
}

const STATE_VERSION: u32 = 1;

impl Tracker {
    pub fn new(cfg: TrackerConfig, width: u32, height: u32) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            width,
            height,
            cfg,
            lanes: Vec::new(),
            next_id: 0,
        })
    }

    pub fn lanes(&self) -> &[TrackedLane] {
        &self.lanes
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Serializes the stream state so it can be checkpointed and resumed
    /// bit-identically.
    pub fn checkpoint(&self) -> String {
        serde_json::to_string_pretty(&TrackerState {
            version: STATE_VERSION,
            width: self.width,
            height: self.height,
            next_id: self.next_id,
            lanes: self.lanes.clone(),
        })
        .expect("state serializes")
    }

    pub fn resume(cfg: TrackerConfig, state_json: &str) -> Result<Self> {
        cfg.validate()?;
        let state: TrackerState = serde_json::from_str(state_json)
            .map_err(|e| Error::Config(format!("bad tracker state: {e}")))?;
        if state.version != STATE_VERSION {
            return Err(Error::Config(format!(
                "unsupported tracker state version {}",
                state.version
            )));
        }
        Ok(Self {
            width: state.width,
            height: state.height,
            cfg,
            lanes: state.lanes,
            next_id: state.next_id,
        })
    }

    /// Distance-integration range for a detection/tracked pair: the
    /// intersection of their y spans, or the sub-horizon rows when the
    /// spans are disjoint.
    fn pair_range(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let y0 = a.0.max(b.0);
        let y1 = a.1.min(b.1);
        if y1 > y0 {
            (y0, y1)
        } else {
            (
                self.cfg.horizon_frac * self.height as f64,
                (self.height - 1) as f64,
            )
        }
    }

    /// Matches one detection against the stored lanes: nearest lane within
    /// the `match_k * max(sigma)` gate, or `None`.
    pub fn match_detection(&self, detected: &DetectedLane) -> Option<&TrackedLane> {
        let det_line = (detected.fit.m, detected.fit.b);
        let mut best: Option<(f64, &TrackedLane)> = None;
        for lane in &self.lanes {
            let Some(line) = lane.slope_form() else {
                continue;
            };
            let range = self.pair_range(detected.fit.y_span, lane.y_span);
            let d = line_distance(det_line, line, range).ok()?;
            let gate = self.cfg.match_k * detected.sigma.max(lane.sigma);
            if d <= gate && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, lane));
            }
        }
        best.map(|(_, lane)| lane)
    }

    /// Marks the detection nearest the image center on each side as a
    /// potential active lane marking.
    fn classify_active(&self, detections: &mut [DetectedLane]) {
        let center = self.width as f64 / 2.0;
        let bottom = (self.height - 1) as f64;
        let mut best: [Option<(f64, usize)>; 2] = [None, None];
        for (i, det) in detections.iter_mut().enumerate() {
            det.active = false;
            let x = det.fit.x_at(bottom);
            let side = usize::from(x >= center);
            let dist = (x - center).abs();
            if best[side].is_none_or(|(bd, _)| dist < bd) {
                best[side] = Some((dist, i));
            }
        }
        for slot in best.into_iter().flatten() {
            detections[slot.1].active = true;
        }
    }

    /// Advances the stream by one frame.
    pub fn step(&mut self, frame: u64, mut detections: Vec<DetectedLane>) -> FrameResult {
        self.classify_active(&mut detections);

        // candidate pairs within the sigma gate, greedily assigned by
        // ascending distance
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, det) in detections.iter().enumerate() {
            let det_line = (det.fit.m, det.fit.b);
            for (j, lane) in self.lanes.iter().enumerate() {
                let Some(line) = lane.slope_form() else {
                    continue;
                };
                let range = self.pair_range(det.fit.y_span, lane.y_span);
                let Ok(d) = line_distance(det_line, line, range) else {
                    continue;
                };
                if d <= self.cfg.match_k * det.sigma.max(lane.sigma) {
                    pairs.push((d, i, j));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        let mut det_matched = vec![usize::MAX; detections.len()];
        let mut lane_matched = vec![false; self.lanes.len()];
        for (_, i, j) in pairs {
            if det_matched[i] == usize::MAX && !lane_matched[j] {
                det_matched[i] = j;
                lane_matched[j] = true;
            }
        }

        // matched lanes: merge parameters and EWMA-update the weight
        for (i, det) in detections.iter().enumerate() {
            let omega = frame_weight(det, &self.cfg);
            if det_matched[i] != usize::MAX {
                let lane = &mut self.lanes[det_matched[i]];
                if self.cfg.merge_enabled {
                    let zeta = merge_zeta(omega, det.sigma, lane.omega_ewma, lane.sigma);
                    let (r, theta, sigma) = merge_params(
                        zeta,
                        det.fit.r,
                        det.fit.theta,
                        det.sigma,
                        lane.r,
                        lane.theta,
                        lane.sigma,
                    );
                    lane.r = r;
                    lane.theta = theta;
                    lane.sigma = sigma;
                } else {
                    lane.r = det.fit.r;
                    lane.theta = det.fit.theta;
                    lane.sigma = det.sigma;
                }
                lane.omega_ewma = update_weight(omega, Some(lane.omega_ewma), self.cfg.alpha);
                lane.last_seen = frame;
                lane.active = det.active;
                lane.y_span = det.fit.y_span;
            } else {
                self.lanes.push(TrackedLane {
                    id: self.next_id,
                    r: det.fit.r,
                    theta: det.fit.theta,
                    sigma: det.sigma,
                    omega_ewma: update_weight(omega, None, self.cfg.alpha),
                    last_seen: frame,
                    active: det.active,
                    y_span: det.fit.y_span,
                });
                self.next_id += 1;
            }
        }

        // unmatched stored lanes decay with omega_f = 0
        for (j, lane) in self.lanes.iter_mut().enumerate() {
            if j < lane_matched.len() && !lane_matched[j] && lane.last_seen != frame {
                lane.omega_ewma *= 1.0 - self.cfg.alpha;
            }
        }

        self.lanes.retain(|l| l.omega_ewma >= self.cfg.prune_weight);

        let (left, right) = self.select(frame);
        FrameResult {
            frame,
            left,
            right,
            all_lanes: self.lanes.clone(),
        }
    }

    /// Highest-weight lane in each image half, classified by bottom-edge
    /// crossing; ties break to the lower (older) id.
    fn select(&self, _frame: u64) -> (Option<TrackedLane>, Option<TrackedLane>) {
        let center = self.width as f64 / 2.0;
        let mut left: Option<&TrackedLane> = None;
        let mut right: Option<&TrackedLane> = None;
        for lane in &self.lanes {
            let Some(x) = lane.bottom_crossing(self.height) else {
                continue;
            };
            let slot = if x < center { &mut left } else { &mut right };
            let better = match slot {
                None => true,
                Some(cur) => {
                    lane.omega_ewma > cur.omega_ewma
                        || (lane.omega_ewma == cur.omega_ewma && lane.id < cur.id)
                }
            };
            if better {
                *slot = Some(lane);
            }
        }
        (left.cloned(), right.cloned())
    }
}
