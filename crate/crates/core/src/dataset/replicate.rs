use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureStream, Frame};

/// Pick `round(fraction · N)` frames uniformly at random and follow each
/// with `copies` identical duplicates, simulating a robot standing still.
/// Duplicates get the frame id suffixed with `~rep<k>`.
pub fn replicate_frames(stream: &FeatureStream, fraction: f64, copies: usize, rng_seed: u64) -> FeatureStream {
    let n = stream.len();
    let fraction = fraction.clamp(0.0, 1.0);
    let selected_count = ((fraction * n as f64).round() as usize).min(n);
    let mut selected = vec![false; n];
    if copies > 0 && selected_count > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for i in rand::seq::index::sample(&mut rng, n, selected_count) {
            selected[i] = true;
        }
    }
    let mut frames = Vec::with_capacity(n + selected_count * copies);
    for (frame, &sel) in stream.frames.iter().zip(&selected) {
        frames.push(frame.clone());
        if sel {
            frames.extend((1..=copies).map(|k| Frame {
                frame_id: format!("{}~rep{k}", frame.frame_id),
                ..frame.clone()
            }));
        }
    }
    FeatureStream {
        frames,
        ..stream.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Vec2;

    fn stream(n: usize) -> FeatureStream {
        let mut s = FeatureStream::new("r", 2, vec![]);
        for i in 0..n {
            s.frames.push(Frame {
                frame_id: i.to_string(),
                position: Vec2::new(i as f64, 0.0),
                features: vec![i as f32, -(i as f32)],
                label: None,
            });
        }
        s
    }

    #[test]
    fn zero_copies_is_identity() {
        let s = stream(50);
        assert_eq!(replicate_frames(&s, 0.1, 0, 1), s);
        assert_eq!(replicate_frames(&s, 0.0, 20, 1), s);
    }

    #[test]
    fn length_and_consecutive_duplicates() {
        let s = stream(100);
        let r = replicate_frames(&s, 0.1, 20, 9);
        assert_eq!(r.len(), 300);
        let originals: Vec<&Frame> = r.frames.iter().filter(|f| !f.frame_id.contains('~')).collect();
        assert_eq!(originals.len(), 100);
        // original order preserved
        assert!(originals.windows(2).all(|w| w[0].position.x < w[1].position.x));
        let mut i = 0;
        let mut groups = 0;
        while i < r.len() {
            let mut j = i + 1;
            while j < r.len() && r.frames[j].frame_id.contains('~') {
                assert_eq!(r.frames[j].features, r.frames[i].features);
                assert_eq!(r.frames[j].position, r.frames[i].position);
                j += 1;
            }
            if j - i > 1 {
                assert_eq!(j - i, 21);
                groups += 1;
            }
            i = j;
        }
        assert_eq!(groups, 10);
    }

    #[test]
    fn seeded() {
        let s = stream(40);
        assert_eq!(replicate_frames(&s, 0.25, 3, 4), replicate_frames(&s, 0.25, 3, 4));
        assert_ne!(replicate_frames(&s, 0.25, 3, 4), replicate_frames(&s, 0.25, 3, 5));
    }
}
