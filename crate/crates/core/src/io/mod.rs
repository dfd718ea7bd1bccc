//! Media and configuration I/O, plus the synthetic ground-truth generator.

mod config;
mod manifest;
mod ppm;
mod sequence;
mod synth;

pub use config::{parse_config, parse_homography, read_config, Config, CONFIG_KEYS};
pub use manifest::{format_manifest, parse_manifest, read_manifest, write_manifest, ManifestRecord};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use sequence::{frame_name, read_sequence, write_frame, write_sequence, FrameSequence, SequenceReader, DEFAULT_FPS};
pub use synth::{synth_feed, synth_scene, FeedParams, FeedSynth, QuadMotion, SceneParams, SceneSynth, FEED_BACKGROUND};
