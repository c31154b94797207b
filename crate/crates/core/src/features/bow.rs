use super::{Codebook, FeatureVideo, Region3D};
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

/// L1-normalized bag-of-words histogram of the points inside `region`.
///
/// Each point is hard-assigned to its nearest centroid. An empty region
/// yields the zero vector.
pub fn bow_histogram(video: &FeatureVideo, region: &Region3D, codebook: &Codebook) -> Result<Vec<f64>> {
    if codebook.dim() != video.descriptor_dim {
        return Err(Error::format(format!(
            "codebook dim {} != descriptor dim {}",
            codebook.dim(),
            video.descriptor_dim
        )));
    }
    let mut hist = vec![0.0; codebook.len()];
    let mut total = 0usize;
    for p in video.points.iter().filter(|p| region.contains(p.frame, p.x, p.y)) {
        hist[codebook.nearest(&p.descriptor)] += 1.0;
        total += 1;
    }
    if total > 0 {
        let n = total as f64;
        hist.iter_mut().for_each(|h| *h /= n);
    }
    Ok(hist)
}

/// A video whose points are pre-quantized to visual words and bucketed by
/// frame, so region histograms only touch points inside the frame window.
#[derive(Debug, Clone)]
pub struct IndexedVideo {
    pub id: String,
    pub label: Option<String>,
    pub width: u32,
    pub height: u32,
    pub num_frames: u32,
    vocab: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    words: Vec<usize>,
    // points of frame f live at frame_start[f]..frame_start[f + 1]
    frame_start: Vec<usize>,
}

impl IndexedVideo {
    pub fn new(video: &FeatureVideo, codebook: &Codebook) -> Result<Self> {
        if codebook.dim() != video.descriptor_dim {
            return Err(Error::format(format!(
                "video {}: codebook dim {} != descriptor dim {}",
                video.id,
                codebook.dim(),
                video.descriptor_dim
            )));
        }
        video.validate()?;
        let mut order: Vec<usize> = (0..video.points.len()).collect();
        order.sort_by_key(|&n| video.points[n].frame);
        let mut frame_start = vec![0usize; video.num_frames as usize + 1];
        for p in &video.points {
            frame_start[p.frame as usize + 1] += 1;
        }
        for f in 1..frame_start.len() {
            frame_start[f] += frame_start[f - 1];
        }
        Ok(IndexedVideo {
            id: video.id.clone(),
            label: video.label.clone(),
            width: video.width,
            height: video.height,
            num_frames: video.num_frames,
            vocab: codebook.len(),
            xs: order.iter().map(|&n| video.points[n].x).collect(),
            ys: order.iter().map(|&n| video.points[n].y).collect(),
            words: order.iter().map(|&n| codebook.nearest(&video.points[n].descriptor)).collect(),
            frame_start,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn num_points(&self) -> usize {
        self.words.len()
    }

    /// Sparse form of [`bow_histogram`] over this video.
    pub fn region_histogram(&self, region: &Region3D) -> SparseVec {
        let (lo, hi) = region.frame_bounds();
        let last = self.num_frames as i64 - 1;
        if hi < 0 || lo > last {
            return SparseVec::new();
        }
        let lo = lo.max(0) as usize;
        let hi = hi.min(last) as usize;
        let range = self.frame_start[lo]..self.frame_start[hi + 1];
        let words = range.filter(|&n| region.rect.is_none_or(|r| r.contains(self.xs[n], self.ys[n])))
            .map(|n| self.words[n]);
        normalized(words)
    }

    /// Histogram of every point in the video.
    pub fn video_histogram(&self) -> SparseVec {
        normalized(self.words.iter().copied())
    }
}

fn normalized(words: impl Iterator<Item = usize>) -> SparseVec {
    let mut words: Vec<usize> = words.collect();
    if words.is_empty() {
        return SparseVec::new();
    }
    words.sort_unstable();
    let n = words.len() as f64;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for w in words {
        match entries.last_mut() {
            Some((last, c)) if *last == w => *c += 1.0,
            _ => entries.push((w, 1.0)),
        }
    }
    entries.iter_mut().for_each(|(_, c)| *c /= n);
    SparseVec::from_entries(entries)
}
