//! Feature streams: the on-disk contract with the feature extractor, a
//! plain-text import for hand-written fixtures, a synthetic environment
//! generator, and frame replication.

mod replicate;
mod stream;
mod synth;

pub use replicate::replicate_frames;
pub use stream::{load_stream, load_stream_text, save_stream, FeatureStream, Frame};
pub use synth::{generate_synthetic, Rect, Room, SynthConfig};
