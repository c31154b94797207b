//! Planted-motif synthetic datasets.
//!
//! Each class places clusters of interest points ("motifs") at chosen
//! anchor slots and grid cells; descriptors are a prototype vector plus
//! Gaussian noise. Uniform background clutter is added on top.
//!
//! Spec file (JSON):
//!
//! ```text
//! {
//!   "width": 160, "height": 120, "num_frames": 60, "descriptor_dim": 8,
//!   "slots": 3, "grid": [2, 2],
//!   "points_per_motif": 10, "clutter_points": 30,
//!   "spatial_spread": 8.0, "frame_spread": 2,
//!   "prototypes": { "m1": [1, 1, 0, 0, 0, 0, 0, 0], ... },
//!   "classes": [
//!     { "name": "A", "count": 20, "jitter": 3,
//!       "motifs": [ { "slot": 0, "cell": [0, 0], "modes": ["m1"], "noise": 0.05 } ] }
//!   ]
//! }
//! ```
//!
//! A motif listing several `modes` draws its prototype per video,
//! cycling through the modes by video index within the class.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{initial_anchors, FeatureVideo, InterestPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub slot: usize,
    /// `[row, col]` in the spatial grid.
    pub cell: [usize; 2],
    pub modes: Vec<String>,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub name: String,
    pub count: usize,
    /// Per-slot temporal jitter, uniform in `[-jitter, jitter]` frames.
    #[serde(default)]
    pub jitter: u32,
    pub motifs: Vec<Motif>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub num_frames: u32,
    pub descriptor_dim: usize,
    pub slots: usize,
    pub grid: [usize; 2],
    pub points_per_motif: usize,
    #[serde(default)]
    pub clutter_points: usize,
    pub spatial_spread: f64,
    #[serde(default)]
    pub frame_spread: u32,
    pub prototypes: BTreeMap<String, Vec<f64>>,
    pub classes: Vec<SynthClass>,
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec =
            serde_json::from_str(text).map_err(|e| Error::argument(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::argument(format!("cannot read synth spec {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::argument(format!("synth spec: {msg}")));
        if self.classes.len() < 2 {
            return bad("at least two classes are required".into());
        }
        if self.width == 0 || self.height == 0 || self.num_frames == 0 {
            return bad("width, height and num_frames must be positive".into());
        }
        if self.slots == 0 || self.slots > self.num_frames as usize {
            return bad(format!("slots must be in [1, {}]", self.num_frames));
        }
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if self.descriptor_dim == 0 {
            return bad("descriptor_dim must be positive".into());
        }
        if !(self.spatial_spread >= 0.0) {
            return bad("spatial_spread must be >= 0".into());
        }
        for (name, p) in &self.prototypes {
            if p.len() != self.descriptor_dim {
                return bad(format!("prototype {name} has length {}", p.len()));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for c in &self.classes {
            if !names.insert(&c.name) {
                return bad(format!("duplicate class {}", c.name));
            }
            for m in &c.motifs {
                if m.slot >= self.slots {
                    return bad(format!("class {}: slot {} out of range", c.name, m.slot));
                }
                if m.cell[0] >= self.grid[0] || m.cell[1] >= self.grid[1] {
                    return bad(format!("class {}: cell {:?} out of range", c.name, m.cell));
                }
                if m.modes.is_empty() {
                    return bad(format!("class {}: motif without modes", c.name));
                }
                if let Some(missing) = m.modes.iter().find(|n| !self.prototypes.contains_key(*n)) {
                    return bad(format!("class {}: unknown prototype {missing}", c.name));
                }
                if !(m.noise >= 0.0) {
                    return bad(format!("class {}: negative noise", c.name));
                }
            }
        }
        Ok(())
    }

    /// Orthogonal block prototypes `m1..mN`: prototype `n` is 1 on its own
    /// block of `dim / count` coordinates and 0 elsewhere.
    pub fn block_prototypes(count: usize, dim: usize) -> BTreeMap<String, Vec<f64>> {
        let block = (dim / count).max(1);
        (0..count)
            .map(|n| {
                let v = (0..dim).map(|d| if d / block == n { 1.0 } else { 0.0 }).collect();
                (format!("m{}", n + 1), v)
            })
            .collect()
    }

    /// Two classes with the same motifs in mirrored temporal order: class
    /// `A` plays `m1` early and `m2` late in cell (0,0), class `B` the
    /// reverse. Videos are 160x120 with 60 frames and 3 slots.
    pub fn order_swap(per_class: usize) -> Self {
        let motif = |slot, cell, mode: &str| Motif {
            slot,
            cell,
            modes: vec![mode.to_string()],
            noise: 0.08,
        };
        SynthSpec {
            width: 160,
            height: 120,
            num_frames: 60,
            descriptor_dim: 8,
            slots: 3,
            grid: [2, 2],
            points_per_motif: 12,
            clutter_points: 40,
            spatial_spread: 10.0,
            frame_spread: 2,
            prototypes: Self::block_prototypes(4, 8),
            classes: vec![
                SynthClass {
                    name: "A".into(),
                    count: per_class,
                    jitter: 3,
                    motifs: vec![
                        motif(0, [0, 0], "m1"),
                        motif(1, [1, 1], "m3"),
                        motif(2, [0, 0], "m2"),
                        motif(2, [1, 0], "m4"),
                    ],
                },
                SynthClass {
                    name: "B".into(),
                    count: per_class,
                    jitter: 3,
                    motifs: vec![
                        motif(2, [0, 0], "m1"),
                        motif(1, [1, 1], "m3"),
                        motif(0, [0, 0], "m2"),
                        motif(0, [1, 0], "m4"),
                    ],
                },
            ],
        }
    }

    /// Two classes sharing a motif in cell (1,1) at the middle slot. In
    /// cell (0,0) class `A` shows either `m1` or `m2` (alternating by
    /// video) while class `B` shows both at once, so no single appearance
    /// template for that cell separates the classes.
    pub fn two_modes(per_class: usize) -> Self {
        let motif = |slot, cell, modes: &[&str]| Motif {
            slot,
            cell,
            modes: modes.iter().map(|m| m.to_string()).collect(),
            noise: 0.08,
        };
        let mut spec = Self::order_swap(per_class);
        spec.classes = vec![
            SynthClass {
                name: "A".into(),
                count: per_class,
                jitter: 2,
                motifs: vec![motif(1, [0, 0], &["m1", "m2"]), motif(1, [1, 1], &["m3"])],
            },
            SynthClass {
                name: "B".into(),
                count: per_class,
                jitter: 2,
                motifs: vec![motif(1, [0, 0], &["m1"]), motif(1, [0, 0], &["m2"]), motif(1, [1, 1], &["m3"])],
            },
        ];
        spec
    }
}

/// Generates every class's videos, in class order. Deterministic in `seed`.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Result<Vec<FeatureVideo>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slot_centers = initial_anchors(spec.num_frames, spec.slots)?;
    let (rows, cols) = (spec.grid[0], spec.grid[1]);
    let (w, h) = (spec.width as f64, spec.height as f64);
    let max_x = w - 1.0;
    let max_y = h - 1.0;
    let last_frame = spec.num_frames as i64 - 1;
    let mut videos = Vec::new();
    for class in &spec.classes {
        for index in 0..class.count {
            let shifts: Vec<i64> = (0..spec.slots)
                .map(|_| {
                    let j = class.jitter as i64;
                    rng.random_range(-j..=j)
                })
                .collect();
            let mut points = Vec::new();
            for motif in &class.motifs {
                let proto = &spec.prototypes[&motif.modes[index % motif.modes.len()]];
                let center_frame = slot_centers[motif.slot] + shifts[motif.slot];
                let cx = (motif.cell[1] as f64 + 0.5) * w / cols as f64;
                let cy = (motif.cell[0] as f64 + 0.5) * h / rows as f64;
                for _ in 0..spec.points_per_motif {
                    let fs = spec.frame_spread as i64;
                    let df = rng.random_range(-fs..=fs);
                    let frame = (center_frame + df).clamp(0, last_frame) as u32;
                    let x = (cx + spread(&mut rng, spec.spatial_spread)).clamp(0.0, max_x);
                    let y = (cy + spread(&mut rng, spec.spatial_spread)).clamp(0.0, max_y);
                    let descriptor = proto
                        .iter()
                        .map(|m| {
                            let z: f64 = rng.sample(StandardNormal);
                            m + motif.noise * z
                        })
                        .collect();
                    points.push(InterestPoint { frame, x, y, descriptor });
                }
            }
            for _ in 0..spec.clutter_points {
                let frame = rng.random_range(0..spec.num_frames);
                let x = rng.random_range(0.0..w);
                let y = rng.random_range(0.0..h);
                let descriptor = (0..spec.descriptor_dim).map(|_| rng.random::<f64>()).collect();
                points.push(InterestPoint { frame, x, y, descriptor });
            }
            videos.push(FeatureVideo {
                id: format!("{}_{index:03}", class.name),
                label: Some(class.name.clone()),
                width: spec.width,
                height: spec.height,
                num_frames: spec.num_frames,
                descriptor_dim: spec.descriptor_dim,
                points,
            });
        }
    }
    Ok(videos)
}

fn spread(rng: &mut ChaCha8Rng, radius: f64) -> f64 {
    if radius > 0.0 {
        rng.random_range(-radius..=radius)
    } else {
        0.0
    }
}
