//! Frame directories: `frame_000000.ppm`, `frame_000001.ppm`, … numbered
//! contiguously from 0.

use std::path::{Path, PathBuf};

use super::ppm::{read_ppm, write_ppm};
use crate::error::{Error, Result};
use crate::image::Image;

pub const DEFAULT_FPS: f64 = 30.0;

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:06}.ppm")
}

fn frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Image>,
    /// Nominal rate; metadata only.
    pub fps: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>) -> Self {
        Self { frames, fps: DEFAULT_FPS }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Lazily read frame directory; the file set is validated on open.
#[derive(Debug, Clone)]
pub struct SequenceReader {
    dir: PathBuf,
    len: usize,
}

impl SequenceReader {
    /// Fails when the directory is unreadable or the numbering has a gap.
    pub fn open(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut indices = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            if let Some(i) = entry.file_name().to_str().and_then(frame_index) {
                indices.push(i);
            }
        }
        indices.sort_unstable();
        for (expected, &i) in indices.iter().enumerate() {
            if i != expected {
                return Err(Error::MissingFrame { index: expected, dir: dir.to_path_buf() });
            }
        }
        Ok(Self { dir: dir.to_path_buf(), len: indices.len() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn read(&self, index: usize) -> Result<Image> {
        if index >= self.len {
            return Err(Error::MissingFrame { index, dir: self.dir.clone() });
        }
        read_ppm(&self.dir.join(frame_name(index)))
    }

    /// Frames in index order.
    pub fn iter(&self) -> impl Iterator<Item = Result<Image>> + '_ {
        (0..self.len).map(|i| self.read(i))
    }
}

/// Reads a whole directory; all frames must share dimensions.
pub fn read_sequence(dir: &Path) -> Result<FrameSequence> {
    let reader = SequenceReader::open(dir)?;
    let frames = reader.iter().collect::<Result<Vec<_>>>()?;
    if let Some(first) = frames.first() {
        let dims = (first.width(), first.height(), first.channels());
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| (f.width(), f.height(), f.channels()) != dims) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}x{} like frame 0", dims.0, dims.1, dims.2),
                actual: format!("{}x{}x{} in frame {i}", f.width(), f.height(), f.channels()),
            });
        }
    }
    Ok(FrameSequence { frames, fps: DEFAULT_FPS })
}

/// Creates `dir` if needed and writes every frame.
pub fn write_sequence(frames: &[Image], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        write_frame(f, dir, i)?;
    }
    Ok(())
}

pub fn write_frame(frame: &Image, dir: &Path, index: usize) -> Result<()> {
    write_ppm(frame, &dir.join(frame_name(index)))
}
