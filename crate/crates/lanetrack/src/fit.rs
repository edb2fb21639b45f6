//! Weighted straight-line fitting and Hesse normal form.
//!
//! Lanes are near-vertical in image space, so x is regressed on y
//! (`x = m*y + b`); a vertical lane then has slope 0 instead of infinity.
//! Each point is weighted by `c / sigma^2`, down-weighting points with low
//! confidence or high positional uncertainty.
//!
//! The fitted line is also expressed in Hesse normal form `(r, theta)`:
//! `r` is the length of the perpendicular from the origin to the line and
//! `theta` the angle between that perpendicular and the x-axis. Canonical
//! form here is `r >= 0` with `theta` in `[0, 2pi)`, and `theta` in
//! `[0, pi)` when `r = 0`; the `(r, theta)` / `(-r, theta + pi)` ambiguity
//! is resolved by flipping both.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-pixel lane location with confidence and positional standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanePoint {
    pub x: f64,
    pub y: f64,
    /// Confidence in (0, 1].
    pub c: f64,
    /// Positional standard deviation in pixels, > 0.
    pub sigma: f64,
}

/// Straight-line fit in both slope/intercept and Hesse form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// Slope of x as a function of y.
    pub m: f64,
    /// Intercept in pixels: x at y = 0.
    pub b: f64,
    pub r: f64,
    pub theta: f64,
    /// (y_min, y_max) pixel rows covered by the points.
    pub y_span: (f64, f64),
}

impl LineFit {
    pub fn x_at(&self, y: f64) -> f64 {
        self.m * y + self.b
    }
}

/// One frame's fitted lane: points, fit, and aggregate statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedLane {
    pub points: Vec<LanePoint>,
    pub fit: LineFit,
    /// RMS confidence of the points, in (0, 1].
    pub c_f: f64,
    /// Point count.
    pub n_f: usize,
    /// Lane standard deviation (RMS of point sigmas), pixels.
    pub sigma: f64,
    /// Set by the tracker's active/nonactive classification.
    pub active: bool,
}

impl DetectedLane {
    /// Builds a lane from points with estimated sigmas; fails with fewer
    /// than `min_points` points or a degenerate fit.
    pub fn from_points(points: Vec<LanePoint>, min_points: usize) -> Result<Self> {
        if points.len() < min_points {
            return Err(Error::Fit(format!(
                "need at least {min_points} points, got {}",
                points.len()
            )));
        }
        let fit = fit_weighted(&points)?;
        let n_f = points.len();
        let c_f = (points.iter().map(|p| p.c * p.c).sum::<f64>() / n_f as f64).sqrt();
        let sigma = (points.iter().map(|p| p.sigma * p.sigma).sum::<f64>() / n_f as f64).sqrt();
        Ok(Self {
            points,
            fit,
            c_f,
            n_f,
            sigma,
            active: false,
        })
    }
}

/// Weighted least squares of x on y with weights `c_i / sigma_i^2`.
///
/// Minimizes `sum w_i (x_i - m*y_i - b)^2`. Uses weighted centering for
/// conditioning. Fails if the weighted y variance vanishes (all points on
/// one row).
pub fn fit_weighted(points: &[LanePoint]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::Fit("need at least 2 points".into()));
    }
    let mut w_sum = 0.0;
    let mut wy = 0.0;
    let mut wx = 0.0;
    for p in points {
        let w = p.c / (p.sigma * p.sigma);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Fit(format!("non-positive weight for point {p:?}")));
        }
        w_sum += w;
        wy += w * p.y;
        wx += w * p.x;
    }
    let y_bar = wy / w_sum;
    let x_bar = wx / w_sum;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let w = p.c / (p.sigma * p.sigma);
        let dy = p.y - y_bar;
        syy += w * dy * dy;
        sxy += w * dy * (p.x - x_bar);
    }
    let y_extent = points
        .iter()
        .map(|p| (p.y - y_bar).abs())
        .fold(0.0f64, f64::max);
    if syy <= w_sum * (1e-12 * (1.0 + y_extent)).powi(2) {
        return Err(Error::Fit("all points on one row".into()));
    }
    let m = sxy / syy;
    let b = x_bar - m * y_bar;
    let (r, theta) = to_hesse(m, b);
    let y_min = points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y_max = points.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    Ok(LineFit {
        m,
        b,
        r,
        theta,
        y_span: (y_min, y_max),
    })
}

/// Converts `x = m*y + b` to canonical Hesse form.
///
/// ```
/// use lanetrack::to_hesse;
/// let (r, theta) = to_hesse(0.0, 50.0); // vertical line x = 50
/// assert!((r - 50.0).abs() < 1e-12 && theta.abs() < 1e-12);
/// ```
pub fn to_hesse(m: f64, b: f64) -> (f64, f64) {
    // x - m*y - b = 0, unit normal (1, -m)/s
    let s = (1.0 + m * m).sqrt();
    let mut r = b / s;
    let mut cos = 1.0 / s;
    let mut sin = -m / s;
    if r < 0.0 {
        r = -r;
        cos = -cos;
        sin = -sin;
    }
    let mut theta = sin.atan2(cos);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    if r == 0.0 && theta >= PI {
        theta -= PI;
    }
    (r, theta)
}

/// Converts canonical Hesse form back to `x = m*y + b`.
///
/// Returns `None` for horizontal lines (`cos(theta) = 0`), which cannot be
/// expressed as x over y.
pub fn hesse_to_slope(r: f64, theta: f64) -> Option<(f64, f64)> {
    let cos = theta.cos();
    if cos.abs() < 1e-12 {
        return None;
    }
    // x cos + y sin = r  =>  x = (r - y sin) / cos
    Some((-theta.sin() / cos, r / cos))
}

/// Remaps `(r, theta)` to the canonical branch.
pub fn canonicalize_hesse(r: f64, theta: f64) -> (f64, f64) {
    let mut r = r;
    let mut theta = theta.rem_euclid(2.0 * PI);
    if r < 0.0 {
        r = -r;
        theta = (theta + PI).rem_euclid(2.0 * PI);
    }
    if r == 0.0 && theta >= PI {
        theta -= PI;
    }
    (r, theta)
}
