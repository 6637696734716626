use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::softmax;
use crate::codec::{Bundle, BundleWriter};
use crate::error::{check_dim, Error, Result};

const KIND: &str = "linear-head";

/// Object classes used for the subset softmax when no list is given.
pub const DEFAULT_OBJECT_CLASSES: [&str; 13] = [
    "washbasin",
    "soap dispenser",
    "toilet seat",
    "photocopier",
    "monitor",
    "desktop computer",
    "desk",
    "dining table",
    "barber chair",
    "microwave oven",
    "stove",
    "dishwasher",
    "toaster",
];

/// Pretrained linear classification layer, imported and never retrained.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    in_dim: usize,
    /// Row-major, `out_dim × in_dim`.
    weights: Vec<f32>,
    bias: Vec<f32>,
    class_names: Vec<String>,
}

impl LinearHead {
    pub fn new(in_dim: usize, weights: Vec<f32>, bias: Vec<f32>, class_names: Vec<String>) -> Result<Self> {
        let out_dim = class_names.len();
        check_dim(out_dim, bias.len())?;
        check_dim(out_dim * in_dim, weights.len())?;
        let unique: BTreeSet<&String> = class_names.iter().collect();
        if unique.len() != out_dim {
            return Err(Error::Usage("class names must be unique".into()));
        }
        Ok(Self {
            in_dim,
            weights,
            bias,
            class_names,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }
}

/// `W·c + b`.
pub fn head_logits(head: &LinearHead, c: &[f32]) -> Result<Vec<f64>> {
    check_dim(head.in_dim, c.len())?;
    Ok(head
        .weights
        .chunks_exact(head.in_dim.max(1))
        .take(head.out_dim())
        .zip(&head.bias)
        .map(|(row, &b)| {
            row.iter()
                .zip(c)
                .map(|(&w, &x)| f64::from(w) * f64::from(x))
                .sum::<f64>()
                + f64::from(b)
        })
        .collect())
}

/// Indices of the `k` largest logits, best first; ties go to the lowest index.
pub fn topk_labels(logits: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len()).collect();
    idx.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Softmax over the logits selected by `subset`, in subset order.
pub fn subset_softmax(logits: &[f64], subset: &[usize]) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::Usage("empty class subset".into()));
    }
    let picked = subset
        .iter()
        .map(|&i| {
            logits
                .get(i)
                .copied()
                .ok_or_else(|| Error::Usage(format!("class index {i} out of range")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(softmax(&picked))
}

fn normalize(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Resolve class names against a vocabulary. A vocabulary entry matches if
/// it equals the name or any of its comma-separated synonyms
/// (e.g. `"microwave, microwave oven"`), case-insensitively.
pub fn resolve_subset(names: &[impl AsRef<str>], vocabulary: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            let want = normalize(name.as_ref());
            vocabulary
                .iter()
                .position(|entry| normalize(entry) == want)
                .or_else(|| {
                    vocabulary
                        .iter()
                        .position(|entry| entry.split(',').any(|syn| normalize(syn) == want))
                })
                .ok_or_else(|| Error::Config(format!("class {:?} not found in vocabulary", name.as_ref())))
        })
        .collect()
}

/// One class name per line; blank lines and `#` comments are skipped.
pub fn load_subset_names(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct HeadManifest {
    out_dim: usize,
    in_dim: usize,
    class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

pub fn save_head(head: &LinearHead, dir: impl AsRef<Path>) -> Result<()> {
    let mut w = BundleWriter::new(dir, KIND);
    w.add_f32("weight", head.out_dim(), head.in_dim, head.weights.iter().copied());
    w.add_f32("bias", head.out_dim(), 1, head.bias.iter().copied());
    w.finish(HeadManifest {
        out_dim: head.out_dim(),
        in_dim: head.in_dim,
        class_names: head.class_names.clone(),
        provenance: None,
    })
}

pub fn load_head(dir: impl AsRef<Path>) -> Result<LinearHead> {
    let bundle: Bundle<HeadManifest> = Bundle::open(dir.as_ref(), KIND)?;
    let b = &bundle.body;
    check_dim(b.out_dim, b.class_names.len())?;
    let weights = bundle.read_f32("weight", b.out_dim, b.in_dim)?;
    let bias = bundle.read_f32("bias", b.out_dim, 1)?;
    LinearHead::new(b.in_dim, weights, bias, b.class_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::snapshot;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("class{i}")).collect()
    }

    #[test]
    fn logits_examples() {
        let eye = LinearHead::new(3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.], vec![0.; 3], names(3)).unwrap();
        assert_eq!(head_logits(&eye, &[2.0, -1.0, 0.5]).unwrap(), vec![2.0, -1.0, 0.5]);
        let zero = LinearHead::new(3, vec![0.; 6], vec![1.0, 2.0], names(2)).unwrap();
        assert_eq!(head_logits(&zero, &[9.0, 9.0, 9.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(head_logits(&zero, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(LinearHead::new(1, vec![0., 0.], vec![0., 0.], vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn topk_examples() {
        assert_eq!(topk_labels(&[0.0, 5.0, 3.0], 1), vec![1]);
        assert_eq!(topk_labels(&[0.0, 5.0, 3.0], 3), vec![1, 2, 0]);
        assert_eq!(topk_labels(&[1.0, 1.0, 0.0], 2), vec![0, 1]);
    }

    #[test]
    fn topk_matches_full_sort_over_1000() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let logits: Vec<f64> = (0..1000).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut pairs: Vec<(f64, usize)> = logits.iter().copied().zip(0..).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let oracle: Vec<usize> = pairs[..5].iter().map(|p| p.1).collect();
        assert_eq!(topk_labels(&logits, 5), oracle);
    }

    #[test]
    fn subset_softmax_examples() {
        let p = subset_softmax(&[0.7; 20], &(0..13).collect::<Vec<_>>()).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 13.0).abs() < 1e-15));
        let mut logits = vec![0.0; 5];
        logits[3] = 1000.0;
        let p = subset_softmax(&logits, &[0, 3, 4]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert!(matches!(subset_softmax(&logits, &[]), Err(Error::Usage(_))));
        assert!(subset_softmax(&logits, &[7]).is_err());
    }

    #[test]
    fn subset_softmax_matches_direct_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let logits: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let subset = [3usize, 9, 17, 21, 40];
        let p = subset_softmax(&logits, &subset).unwrap();
        let denom: f64 = subset.iter().map(|&i| logits[i].exp()).sum();
        for (k, &i) in subset.iter().enumerate() {
            assert!((p[k] - logits[i].exp() / denom).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resolves_synonyms() {
        let vocab: Vec<String> = vec![
            "monitor".into(),
            "microwave, microwave oven".into(),
            "washbasin, handbasin, washbowl, lavabo, wash-hand basin".into(),
        ];
        assert_eq!(resolve_subset(&["Microwave Oven", "monitor", "washbasin"], &vocab).unwrap(), vec![1, 0, 2]);
        assert!(matches!(resolve_subset(&["toaster"], &vocab), Err(Error::Config(_))));
    }

    #[test]
    fn head_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f32> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f32> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let head = LinearHead::new(8, w, b, names(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, c) = (dir.path().join("a"), dir.path().join("c"));
        save_head(&head, &a).unwrap();
        let loaded = load_head(&a).unwrap();
        assert_eq!(loaded, head);
        save_head(&loaded, &c).unwrap();
        assert_eq!(snapshot(&a).unwrap(), snapshot(&c).unwrap());

        let blob = a.join("weight.f32");
        let mut bytes = std::fs::read(&blob).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&blob, bytes).unwrap();
        assert!(matches!(load_head(&a), Err(Error::Checksum { .. })));
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(logits in prop::collection::vec(-50.0f64..50.0, 1..30), shift in -100.0f64..100.0) {
            let subset: Vec<usize> = (0..logits.len()).step_by(2).collect();
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            let a = subset_softmax(&logits, &subset).unwrap();
            let b = subset_softmax(&shifted, &subset).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn topk_prefix(logits in prop::collection::vec(-5.0f64..5.0, 2..40), k in 1usize..40) {
            let k = k.min(logits.len() - 1);
            let a = topk_labels(&logits, k);
            let b = topk_labels(&logits, k + 1);
            prop_assert_eq!(&a[..], &b[..k]);
        }
    }
}
