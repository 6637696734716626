use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{Bundle, BundleWriter};
use crate::error::{Error, Result};
use crate::metrics::Vec2;

const KIND: &str = "feature-stream";

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    /// Capture position. Stored on disk at 32-bit precision.
    pub position: Vec2,
    pub features: Vec<f32>,
    /// Index into the stream's `label_names`.
    pub label: Option<u32>,
}

/// One recorded run: ordered frames of (position, features, label).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    pub sequence_id: String,
    pub feature_dim: usize,
    pub label_names: Vec<String>,
    pub frames: Vec<Frame>,
    /// Free-form producer metadata (model hash, preprocessing), kept verbatim.
    pub provenance: Option<serde_json::Value>,
}

impl FeatureStream {
    pub fn new(sequence_id: impl Into<String>, feature_dim: usize, label_names: Vec<String>) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            feature_dim,
            label_names,
            frames: Vec::new(),
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn label_name(&self, label: u32) -> Option<&str> {
        self.label_names.get(label as usize).map(String::as_str)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "feature_dim",
                reason: "must be at least 1".into(),
            });
        }
        for f in &self.frames {
            if f.features.len() != self.feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.feature_dim,
                    actual: f.features.len(),
                });
            }
            if !f.position.is_finite() {
                return Err(Error::NonFinite("position"));
            }
            if f.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("features"));
            }
            if let Some(l) = f.label {
                if l as usize >= self.label_names.len() {
                    return Err(Error::Usage(format!(
                        "frame {} has label {l} but only {} label names",
                        f.frame_id,
                        self.label_names.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRow {
    frame_id: String,
    label: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StreamManifest {
    sequence_id: String,
    feature_dim: usize,
    frame_count: usize,
    label_names: Vec<String>,
    frames: Vec<FrameRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

/// Write a stream bundle: manifest with the frame/label table plus
/// `positions.f32` (N×2) and `features.f32` (N×m).
pub fn save_stream(stream: &FeatureStream, dir: impl AsRef<Path>) -> Result<()> {
    stream.validate()?;
    let n = stream.len();
    let mut w = BundleWriter::new(dir, KIND);
    w.add_f32(
        "positions",
        n,
        2,
        stream
            .frames
            .iter()
            .flat_map(|f| [f.position.x as f32, f.position.y as f32]),
    );
    w.add_f32(
        "features",
        n,
        stream.feature_dim,
        stream.frames.iter().flat_map(|f| f.features.iter().copied()),
    );
    w.finish(StreamManifest {
        sequence_id: stream.sequence_id.clone(),
        feature_dim: stream.feature_dim,
        frame_count: n,
        label_names: stream.label_names.clone(),
        frames: stream
            .frames
            .iter()
            .map(|f| FrameRow {
                frame_id: f.frame_id.clone(),
                label: f.label,
            })
            .collect(),
        provenance: stream.provenance.clone(),
    })
}

/// Load a stream. Directories are read as bundles, plain files as text tables.
pub fn load_stream(path: impl AsRef<Path>) -> Result<FeatureStream> {
    let path = path.as_ref();
    if path.is_file() {
        return load_stream_text(path);
    }
    let bundle: Bundle<StreamManifest> = Bundle::open(path, KIND)?;
    let body = &bundle.body;
    let (n, m) = (body.frame_count, body.feature_dim);
    if body.frames.len() != n {
        return Err(Error::format(path, "frame table length differs from frame_count"));
    }
    let pos = bundle.read_f32("positions", n, 2)?;
    let feats = bundle.read_f32("features", n, m)?;
    let frames = body
        .frames
        .iter()
        .enumerate()
        .map(|(i, row)| Frame {
            frame_id: row.frame_id.clone(),
            position: Vec2::new(f64::from(pos[2 * i]), f64::from(pos[2 * i + 1])),
            features: feats[i * m..(i + 1) * m].to_vec(),
            label: row.label,
        })
        .collect();
    let stream = FeatureStream {
        sequence_id: body.sequence_id.clone(),
        feature_dim: m,
        label_names: body.label_names.clone(),
        frames,
        provenance: body.provenance.clone(),
    };
    stream
        .validate()
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(stream)
}

/// Read the plain-text table: one frame per row, `x, y, label, f1, f2, ...`,
/// separated by commas and/or whitespace. A label of `-` means unlabeled.
/// `#` starts a comment; `# sequence_id: NAME` and `# labels: a,b,c` are
/// recognized as directives.
pub fn load_stream_text(path: impl AsRef<Path>) -> Result<FeatureStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let default_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_stream_text(&text, &default_id).map_err(|reason| Error::format(path, reason))
}

fn parse_stream_text(text: &str, default_id: &str) -> Result<FeatureStream, String> {
    let mut sequence_id = default_id.to_owned();
    let mut label_names: Vec<String> = Vec::new();
    let mut frames = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("sequence_id:") {
                sequence_id = v.trim().to_owned();
            } else if let Some(v) = comment.strip_prefix("labels:") {
                label_names = v
                    .split(',')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect();
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() < 4 {
            return Err(format!("line {}: need x, y, label and at least one feature", lineno + 1));
        }
        let num = |s: &str| -> Result<f64, String> {
            s.parse::<f64>()
                .map_err(|e| format!("line {}: {s:?}: {e}", lineno + 1))
        };
        let position = Vec2::new(num(fields[0])?, num(fields[1])?);
        let label = match fields[2] {
            "-" => None,
            name => Some(match label_names.iter().position(|l| l == name) {
                Some(i) => i as u32,
                None => {
                    label_names.push(name.to_owned());
                    (label_names.len() - 1) as u32
                }
            }),
        };
        let features = fields[3..]
            .iter()
            .map(|s| s.parse::<f32>().map_err(|e| format!("line {}: {s:?}: {e}", lineno + 1)))
            .collect::<Result<Vec<f32>, String>>()?;
        match dim {
            None => dim = Some(features.len()),
            Some(d) if d != features.len() => {
                return Err(format!(
                    "line {}: expected {d} features, got {}",
                    lineno + 1,
                    features.len()
                ))
            }
            _ => {}
        }
        frames.push(Frame {
            frame_id: frames.len().to_string(),
            position,
            features,
            label,
        });
    }
    let stream = FeatureStream {
        sequence_id,
        feature_dim: dim.unwrap_or(0),
        label_names,
        frames,
        provenance: None,
    };
    if stream.is_empty() {
        return Ok(stream);
    }
    stream.validate().map_err(|e| e.to_string())?;
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::snapshot;
    use proptest::prelude::*;

    fn sample() -> FeatureStream {
        let mut s = FeatureStream::new("seq-a", 3, vec!["corridor".into(), "kitchen".into()]);
        for i in 0..5 {
            s.frames.push(Frame {
                frame_id: format!("img_{i:03}"),
                position: Vec2::new(i as f64 * 0.25, -1.5),
                features: vec![i as f32, 0.5, -2.25],
                label: if i == 2 { None } else { Some((i % 2) as u32) },
            });
        }
        s.provenance = Some(serde_json::json!({"model": "fixture"}));
        s
    }

    #[test]
    fn save_load_save() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let s = sample();
        save_stream(&s, &a).unwrap();
        let loaded = load_stream(&a).unwrap();
        assert_eq!(loaded, s);
        save_stream(&loaded, &b).unwrap();
        assert_eq!(snapshot(&a).unwrap(), snapshot(&b).unwrap());
    }

    #[test]
    fn truncated_blob_is_checksum_error() {
        let dir = tempfile::tempdir().unwrap();
        save_stream(&sample(), dir.path()).unwrap();
        let path = dir.path().join("features.f32");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_stream(dir.path()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn unknown_version_and_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        save_stream(&sample(), dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("\"feature_dim\": 3", "\"feature_dim\": 4")).unwrap();
        assert!(matches!(load_stream(dir.path()), Err(Error::DimensionMismatch { .. })));
        fs::write(&path, text.replace("\"format_version\": \"1.0\"", "\"format_version\": \"9.0\"")).unwrap();
        assert!(matches!(load_stream(dir.path()), Err(Error::UnsupportedVersion { .. })));
    }

    #[test]
    fn save_rejects_invalid_stream() {
        let mut s = sample();
        s.frames[1].features.push(1.0);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(save_stream(&s, dir.path()), Err(Error::DimensionMismatch { .. })));
        let mut s = sample();
        s.frames[0].label = Some(9);
        assert!(save_stream(&s, dir.path()).is_err());
    }

    #[test]
    fn text_table() {
        let text = "# sequence_id: hand\n# labels: corridor, office\n\
                    0.0, 0.0, corridor, 1, 2, 3\n\
                    0.5 0.0 office 4 5 6\n\
                    1.0, 0.0, -, 7, 8, 9\n\
                    1.5, 0.0, lab, 0, 0, 0\n";
        let s = parse_stream_text(text, "x").unwrap();
        assert_eq!(s.sequence_id, "hand");
        assert_eq!(s.feature_dim, 3);
        assert_eq!(s.label_names, vec!["corridor", "office", "lab"]);
        assert_eq!(s.frames[1].label, Some(1));
        assert_eq!(s.frames[2].label, None);
        assert_eq!(s.frames[3].label, Some(2));
        assert_eq!(s.frames[1].features, vec![4.0, 5.0, 6.0]);
        assert!(parse_stream_text("0,0,a,1,2\n0,0,a,1\n", "x").is_err());
        assert!(parse_stream_text("0,0,a,1,nan\n", "x").is_err());
    }

    fn arb_stream() -> impl Strategy<Value = FeatureStream> {
        (1usize..6, 0usize..12).prop_flat_map(|(m, n)| {
            prop::collection::vec(
                (
                    (-50.0f32..50.0, -50.0f32..50.0),
                    prop::collection::vec(-1e3f32..1e3, m),
                    prop::option::of(0u32..3),
                ),
                n,
            )
            .prop_map(move |rows| {
                let mut s = FeatureStream::new("p", m, vec!["a".into(), "b".into(), "c".into()]);
                for (i, ((x, y), features, label)) in rows.into_iter().enumerate() {
                    s.frames.push(Frame {
                        frame_id: i.to_string(),
                        position: Vec2::new(x as f64, y as f64),
                        features,
                        label,
                    });
                }
                s
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn stream_round_trip(s in arb_stream()) {
            let dir = tempfile::tempdir().unwrap();
            save_stream(&s, dir.path()).unwrap();
            prop_assert_eq!(load_stream(dir.path()).unwrap(), s);
        }
    }
}
