//! IoU-based accuracy metric over predicted and ground-truth lane
//! polylines.
//!
//! Ground-truth and predicted lanes are rasterized as thick lines of 16 and
//! 30 pixels respectively at an 800-pixel canvas width, scaled
//! proportionally for other canvas sizes. A prediction whose IoU with a
//! ground truth clears the threshold is a true positive;
//! `accuracy = N_TP / N_gt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Base line widths at an 800-pixel canvas width.
pub const GT_WIDTH_PX: f64 = 16.0;
pub const PRED_WIDTH_PX: f64 = 30.0;

/// Ordered pixel coordinates of one lane marking.
#[derive(Debug, Clone, PartialEq)]
pub struct LanePolyline {
    pub points: Vec<(f64, f64)>,
}

impl LanePolyline {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Range("polyline needs at least 2 points".into()));
        }
        Ok(Self { points })
    }
}

/// Binary raster mask on the evaluation canvas.
#[derive(Debug, Clone)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn iou(&self, other: &Mask) -> f64 {
        debug_assert!(self.width == other.width && self.height == other.height);
        let mut inter = 0usize;
        let mut union = 0usize;
        for (a, b) in self.bits.iter().zip(&other.bits) {
            inter += usize::from(*a && *b);
            union += usize::from(*a || *b);
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Draws the polyline as a thick line with round caps and joins, clipped to
/// the canvas. `width_px` is the base width at 800-pixel canvas width and
/// scales with `canvas.0 / 800`.
pub fn rasterize(polyline: &LanePolyline, width_px: f64, canvas: (u32, u32)) -> Mask {
    let (w, h) = canvas;
    let scaled = width_px * w as f64 / 800.0;
    let radius = scaled / 2.0;
    let mut bits = vec![false; w as usize * h as usize];

    for seg in polyline.points.windows(2) {
        let (ax, ay) = seg[0];
        let (bx, by) = seg[1];
        let x_lo = ((ax.min(bx) - radius).floor().max(0.0)) as u32;
        let x_hi = ((ax.max(bx) + radius).ceil().min((w - 1) as f64)) as u32;
        let y_lo = ((ay.min(by) - radius).floor().max(0.0)) as u32;
        let y_hi = ((ay.max(by) + radius).ceil().min((h - 1) as f64)) as u32;
        // pixel (px, py) covers [px, px+1) x [py, py+1); test its center
        for py in y_lo..=y_hi {
            for px in x_lo..=x_hi {
                let d2 = segment_distance_sq(px as f64 + 0.5, py as f64 + 0.5, ax, ay, bx, by);
                if d2 < radius * radius {
                    bits[(py * w + px) as usize] = true;
                }
            }
        }
    }
    Mask {
        width: w,
        height: h,
        bits,
    }
}

fn segment_distance_sq(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = bx - ax;
    let dy = by - ay;
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len_sq).clamp(0.0, 1.0)
    };
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    (px - cx) * (px - cx) + (py - cy) * (py - cy)
}

/// IoU of the 16-px ground-truth mask and 30-px prediction mask (widths
/// scaled to the canvas).
pub fn lane_iou(gt: &LanePolyline, pred: &LanePolyline, canvas: (u32, u32)) -> f64 {
    lane_iou_widths(gt, pred, GT_WIDTH_PX, PRED_WIDTH_PX, canvas)
}

/// IoU with explicit base line widths.
pub fn lane_iou_widths(
    gt: &LanePolyline,
    pred: &LanePolyline,
    gt_width: f64,
    pred_width: f64,
    canvas: (u32, u32),
) -> f64 {
    rasterize(gt, gt_width, canvas).iou(&rasterize(pred, pred_width, canvas))
}

/// Per-threshold accuracy rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    /// (iou_threshold, n_tp, n_gt, accuracy) rows.
    pub rows: Vec<(f64, usize, usize, f64)>,
    pub warnings: Vec<String>,
}

impl AccuracyReport {
    /// CSV with header `threshold,n_tp,n_gt,accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,n_tp,n_gt,accuracy\n");
        for (t, tp, gt, acc) in &self.rows {
            writeln!(out, "{t},{tp},{gt},{acc}").unwrap();
        }
        out
    }
}

/// Computes accuracy over per-frame polyline sets aligned by frame index.
///
/// Per frame, predictions are greedily assigned to ground truths by
/// descending IoU, one-to-one; a ground truth whose assigned IoU clears a
/// threshold counts as TP at that threshold. Prediction frames with no
/// ground-truth frame contribute nothing and produce a warning.
pub fn accuracy(
    gt_set: &BTreeMap<u64, Vec<LanePolyline>>,
    pred_set: &BTreeMap<u64, Vec<LanePolyline>>,
    thresholds: &[f64],
    canvas: (u32, u32),
) -> Result<AccuracyReport> {
    for t in thresholds {
        if !(*t > 0.0 && *t < 1.0) {
            return Err(Error::Range(format!("threshold {t} outside (0, 1)")));
        }
    }
    let mut warnings = Vec::new();
    for frame in pred_set.keys() {
        if !gt_set.contains_key(frame) {
            warnings.push(format!(
                "prediction frame {frame} has no ground-truth frame"
            ));
        }
    }

    let mut n_gt = 0usize;
    let mut assigned_ious: Vec<f64> = Vec::new();
    for (frame, gts) in gt_set {
        n_gt += gts.len();
        let Some(preds) = pred_set.get(frame) else {
            continue;
        };
        // full IoU matrix, then greedy one-to-one by descending IoU
        let mut entries: Vec<(f64, usize, usize)> = Vec::new();
        for (gi, gt) in gts.iter().enumerate() {
            for (pi, pred) in preds.iter().enumerate() {
                let iou = lane_iou(gt, pred, canvas);
                if iou > 0.0 {
                    entries.push((iou, gi, pi));
                }
            }
        }
        entries.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut gt_used = vec![false; gts.len()];
        let mut pred_used = vec![false; preds.len()];
        for (iou, gi, pi) in entries {
            if !gt_used[gi] && !pred_used[pi] {
                gt_used[gi] = true;
                pred_used[pi] = true;
                assigned_ious.push(iou);
            }
        }
    }

    let rows = thresholds
        .iter()
        .map(|&t| {
            let n_tp = assigned_ious.iter().filter(|&&iou| iou >= t).count();
            let acc = if n_gt == 0 {
                0.0
            } else {
                n_tp as f64 / n_gt as f64
            };
            (t, n_tp, n_gt, acc)
        })
        .collect();
    Ok(AccuracyReport { rows, warnings })
}

/// Parses a CULane-style lane file: one lane per line, whitespace-separated
/// `x1 y1 x2 y2 ...`.
pub fn parse_lane_file(path: &Path, contents: &str) -> Result<Vec<LanePolyline>> {
    let mut lanes = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let nums: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let nums =
            nums.map_err(|_| Error::format(path, 0, format!("bad number on line {}", lineno + 1)))?;
        if nums.len() < 4 || nums.len() % 2 != 0 {
            return Err(Error::format(
                path,
                0,
                format!(
                    "line {} needs an even count of at least 4 numbers",
                    lineno + 1
                ),
            ));
        }
        let points = nums.chunks(2).map(|p| (p[0], p[1])).collect();
        lanes.push(LanePolyline::new(points)?);
    }
    Ok(lanes)
}

/// Formats lanes in the CULane-style text format.
pub fn format_lane_file(lanes: &[LanePolyline]) -> String {
    let mut out = String::new();
    for lane in lanes {
        let mut first = true;
        for (x, y) in &lane.points {
            if !first {
                out.push(' ');
            }
            write!(out, "{x} {y}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    out
}
