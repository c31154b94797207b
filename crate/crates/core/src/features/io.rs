//! Line-delimited JSON feature files, one video per line:
//!
//! ```text
//! {"id":"v1","label":"run","width":160,"height":120,"num_frames":60,
//!  "descriptor_dim":16,"points":[{"f":3,"x":40.5,"y":12.0,"d":[...]}]}
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureVideo, InterestPoint};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct PointRecord {
    f: u32,
    x: f64,
    y: f64,
    d: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VideoRecord {
    id: String,
    #[serde(default)]
    label: Option<String>,
    width: u32,
    height: u32,
    num_frames: u32,
    descriptor_dim: usize,
    points: Vec<PointRecord>,
}

impl From<&FeatureVideo> for VideoRecord {
    fn from(v: &FeatureVideo) -> Self {
        VideoRecord {
            id: v.id.clone(),
            label: v.label.clone(),
            width: v.width,
            height: v.height,
            num_frames: v.num_frames,
            descriptor_dim: v.descriptor_dim,
            points: v
                .points
                .iter()
                .map(|p| PointRecord { f: p.frame, x: p.x, y: p.y, d: p.descriptor.clone() })
                .collect(),
        }
    }
}

impl From<VideoRecord> for FeatureVideo {
    fn from(r: VideoRecord) -> Self {
        FeatureVideo {
            id: r.id,
            label: r.label,
            width: r.width,
            height: r.height,
            num_frames: r.num_frames,
            descriptor_dim: r.descriptor_dim,
            points: r
                .points
                .into_iter()
                .map(|p| InterestPoint { frame: p.f, x: p.x, y: p.y, descriptor: p.d })
                .collect(),
        }
    }
}

/// Parses a feature stream. Blank lines are skipped; every video is
/// validated, ids must be unique, and all videos must share one
/// descriptor dimension.
pub fn read_features<R: BufRead>(reader: R) -> Result<Vec<FeatureVideo>> {
    let mut videos: Vec<FeatureVideo> = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: VideoRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("line {}: {e}", n + 1)))?;
        let video = FeatureVideo::from(record);
        video
            .validate()
            .map_err(|e| Error::format(format!("line {}: {e}", n + 1)))?;
        if let Some(first) = videos.first() {
            if first.descriptor_dim != video.descriptor_dim {
                return Err(Error::format(format!(
                    "line {}: descriptor_dim {} differs from {}",
                    n + 1,
                    video.descriptor_dim,
                    first.descriptor_dim
                )));
            }
        }
        if !ids.insert(video.id.clone()) {
            return Err(Error::format(format!("line {}: duplicate id {}", n + 1, video.id)));
        }
        videos.push(video);
    }
    Ok(videos)
}

pub fn write_features<W: Write>(mut writer: W, videos: &[FeatureVideo]) -> Result<()> {
    for v in videos {
        serde_json::to_writer(&mut writer, &VideoRecord::from(v))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<Vec<FeatureVideo>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::format(format!("cannot open {}: {e}", path.display())))?;
    read_features(std::io::BufReader::new(file))
}

pub fn write_feature_file(path: &Path, videos: &[FeatureVideo]) -> Result<()> {
    let mut buf = Vec::new();
    write_features(&mut buf, videos)?;
    crate::commands::write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"id":"a","label":"run","width":20,"height":10,"num_frames":4,"descriptor_dim":2,"points":[{"f":1,"x":3.5,"y":2.0,"d":[0.1,0.2]}]}"#;

    #[test]
    fn parses_and_writes_back_identically() {
        let videos = read_features(LINE.as_bytes()).unwrap();
        assert_eq!(videos.len(), 1);
        assert_eq!(videos[0].points[0].descriptor, vec![0.1, 0.2]);
        let mut out = Vec::new();
        write_features(&mut out, &videos).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), LINE);
    }

    #[test]
    fn label_is_optional() {
        let line = LINE.replace(r#""label":"run","#, "");
        let videos = read_features(line.as_bytes()).unwrap();
        assert_eq!(videos[0].label, None);
    }

    #[test]
    fn rejects_duplicates_and_bad_dims() {
        let two = format!("{LINE}\n{LINE}\n");
        assert!(matches!(read_features(two.as_bytes()), Err(Error::Format(_))));
        let bad = LINE.replace("[0.1,0.2]", "[0.1]");
        assert!(matches!(read_features(bad.as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_features("{not json".as_bytes()), Err(Error::Format(_))));
    }
}
