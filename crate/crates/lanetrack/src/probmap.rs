//! Multi-channel probability-map raster: loading, validation, and sub-pixel
//! sampling.
//!
//! Two on-disk formats are accepted:
//!
//! * `LPM1` binary raster (authoritative, lossless f32): magic bytes `LPM1`,
//!   then little-endian `u32` width, height, channels, followed by
//!   `width * height * channels` little-endian `f32` values, channel-major
//!   then row-major.
//! * PGM `P5` with maxval 255, one file per channel; 8-bit values are scaled
//!   to `[0, 1]` by division by 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-lane-channel raster of confidences in `[0, 1]` for one frame.
///
/// Immutable after construction; any number of readers may sample it
/// concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: u32,
    height: u32,
    channels: u32,
    /// Channel-major, then row-major.
    values: Vec<f32>,
}

impl ProbabilityMap {
    pub fn new(width: u32, height: u32, channels: u32, values: Vec<f32>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Range(format!(
                "map dimensions must be at least 2x2, got {width}x{height}"
            )));
        }
        if channels < 1 {
            return Err(Error::Range("map must have at least one channel".into()));
        }
        let expected = width as usize * height as usize * channels as usize;
        if values.len() != expected {
            return Err(Error::Range(format!(
                "value count {} does not match {width}x{height}x{channels} = {expected}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Range(format!("confidence {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    /// Stored value at an integer grid point.
    pub fn get(&self, channel: u32, x: u32, y: u32) -> f32 {
        debug_assert!(channel < self.channels && x < self.width && y < self.height);
        let plane = self.width as usize * self.height as usize;
        self.values[channel as usize * plane + y as usize * self.width as usize + x as usize]
    }

    /// Bilinear interpolation of the four surrounding grid values.
    ///
    /// Exact grid points return the stored value. Coordinates must satisfy
    /// `0 <= x <= width-1` and `0 <= y <= height-1`.
    ///
    /// ```
    /// use lanetrack::ProbabilityMap;
    /// let m = ProbabilityMap::new(2, 2, 1, vec![0.2, 0.6, 0.2, 0.6]).unwrap();
    /// assert!((m.sample(0, 0.5, 0.0).unwrap() - 0.4).abs() < 1e-6);
    /// ```
    pub fn sample(&self, channel: u32, x: f64, y: f64) -> Result<f64> {
        if channel >= self.channels {
            return Err(Error::Range(format!(
                "channel {channel} out of range (have {})",
                self.channels
            )));
        }
        if !self.in_bounds(x, y) {
            return Err(Error::Range(format!(
                "sample point ({x}, {y}) outside [0, {}] x [0, {}]",
                self.width - 1,
                self.height - 1
            )));
        }
        let x0 = x.floor() as u32;
        let y0 = y.floor() as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(channel, x0, y0) as f64;
        let v10 = self.get(channel, x1, y0) as f64;
        let v01 = self.get(channel, x0, y1) as f64;
        let v11 = self.get(channel, x1, y1) as f64;
        let top = v00 + (v10 - v00) * fx;
        let bot = v01 + (v11 - v01) * fx;
        Ok(top + (bot - top) * fy)
    }

    pub fn in_bounds(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Loads a map from either format, dispatching on magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(b"LPM1") {
            Self::decode_lpm(path, &bytes)
        } else if bytes.starts_with(b"P5") {
            Self::decode_pgm(path, &bytes)
        } else {
            Err(Error::format(path, 0, "unrecognized magic bytes"))
        }
    }

    /// Writes the lossless binary raster format.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(16 + self.values.len() * 4);
        out.extend_from_slice(b"LPM1");
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    fn decode_lpm(path: &Path, bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::format(path, bytes.len() as u64, "truncated header"));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let width = u32_at(4);
        let height = u32_at(8);
        let channels = u32_at(12);
        let count = width as usize * height as usize * channels as usize;
        let expected_len = 16 + count * 4;
        if bytes.len() != expected_len {
            return Err(Error::format(
                path,
                bytes.len().min(expected_len) as u64,
                format!(
                    "payload size mismatch: header declares {count} values ({expected_len} bytes), file has {} bytes",
                    bytes.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let off = 16 + i * 4;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::format(
                    path,
                    off as u64,
                    format!("confidence {v} outside [0, 1]"),
                ));
            }
            values.push(v);
        }
        Self::new(width, height, channels, values)
    }

    fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut pos = 2usize; // past "P5"
        let mut fields = [0u32; 3]; // width, height, maxval
        for field in fields.iter_mut() {
            // skip whitespace and comment lines
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::format(path, pos as u64, "expected header integer"));
            }
            let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
            *field = text
                .parse()
                .map_err(|_| Error::format(path, start as u64, "bad header integer"))?;
        }
        let [width, height, maxval] = fields;
        if maxval != 255 {
            return Err(Error::format(
                path,
                pos as u64,
                format!("maxval must be 255, got {maxval}"),
            ));
        }
        // single whitespace byte after maxval, then raster
        pos += 1;
        let count = width as usize * height as usize;
        if bytes.len() - pos != count {
            return Err(Error::format(
                path,
                pos as u64,
                format!(
                    "raster size mismatch: expected {count} bytes, have {}",
                    bytes.len() - pos
                ),
            ));
        }
        let values = bytes[pos..].iter().map(|&b| b as f32 / 255.0).collect();
        Self::new(width, height, 1, values)
    }
}
