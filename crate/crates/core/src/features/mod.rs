//! Interest-point videos, codebooks and bag-of-words histograms.

mod bow;
mod codebook;
mod io;
pub mod synth;

pub use bow::{bow_histogram, IndexedVideo};
pub use codebook::{build_codebook, Codebook};
pub use io::{read_feature_file, read_features, write_features, write_feature_file};
pub use synth::{synth_dataset, Motif, SynthClass, SynthSpec};

use crate::error::{Error, Result};

/// One detected spatio-temporal interest point.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestPoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
    pub descriptor: Vec<f64>,
}

/// All interest points of one video plus its geometry and optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVideo {
    pub id: String,
    pub label: Option<String>,
    pub width: u32,
    pub height: u32,
    pub num_frames: u32,
    pub descriptor_dim: usize,
    pub points: Vec<InterestPoint>,
}

impl FeatureVideo {
    pub fn validate(&self) -> Result<()> {
        if self.num_frames == 0 {
            return Err(Error::format(format!("video {}: num_frames must be >= 1", self.id)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::format(format!("video {}: empty frame size", self.id)));
        }
        for (n, p) in self.points.iter().enumerate() {
            if p.frame >= self.num_frames {
                return Err(Error::format(format!(
                    "video {}: point {n} frame {} outside [0, {})",
                    self.id, p.frame, self.num_frames
                )));
            }
            let inside = p.x >= 0.0
                && p.x < self.width as f64
                && p.y >= 0.0
                && p.y < self.height as f64;
            if !inside {
                return Err(Error::format(format!(
                    "video {}: point {n} at ({}, {}) outside {}x{}",
                    self.id, p.x, p.y, self.width, self.height
                )));
            }
            if p.descriptor.len() != self.descriptor_dim {
                return Err(Error::format(format!(
                    "video {}: point {n} has descriptor length {}, expected {}",
                    self.id,
                    p.descriptor.len(),
                    self.descriptor_dim
                )));
            }
        }
        Ok(())
    }
}

/// Axis-aligned pixel rectangle, half-open: `x0 <= x < x1`, `y0 <= y < y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    /// A `w x h` box centered at `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect {
            x0: cx - w / 2.0,
            y0: cy - h / 2.0,
            x1: cx + w / 2.0,
            y1: cy + h / 2.0,
        }
    }

    pub fn clamp_to(&self, width: u32, height: u32) -> Rect {
        Rect {
            x0: self.x0.max(0.0),
            y0: self.y0.max(0.0),
            x1: self.x1.min(width as f64),
            y1: self.y1.min(height as f64),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// A spatio-temporal volume: frames within `span / 2` (floored) of
/// `center_frame`, inclusive on both sides, optionally restricted to a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region3D {
    pub center_frame: i64,
    pub span: u32,
    pub rect: Option<Rect>,
}

impl Region3D {
    pub fn full_frame(center_frame: i64, span: u32) -> Self {
        Region3D { center_frame, span, rect: None }
    }

    pub fn frame_bounds(&self) -> (i64, i64) {
        let half = (self.span / 2) as i64;
        (self.center_frame - half, self.center_frame + half)
    }

    pub fn contains(&self, frame: u32, x: f64, y: f64) -> bool {
        let (lo, hi) = self.frame_bounds();
        let f = frame as i64;
        f >= lo && f <= hi && self.rect.is_none_or(|r| r.contains(x, y))
    }
}

/// Segment-center anchor frames: `floor((t - 1/2) * num_frames / T)` for
/// `t = 1..=T`.
pub fn initial_anchors(num_frames: u32, segments: usize) -> Result<Vec<i64>> {
    if segments == 0 {
        return Err(Error::argument("number of anchor frames must be >= 1"));
    }
    if (num_frames as usize) < segments {
        return Err(Error::argument(format!(
            "video has {num_frames} frames, fewer than {segments} anchor segments"
        )));
    }
    let n = num_frames as i64;
    let t_total = segments as i64;
    // (2t - 1) * n / (2T), exact in integers
    Ok((1..=t_total).map(|t| ((2 * t - 1) * n) / (2 * t_total)).collect())
}
