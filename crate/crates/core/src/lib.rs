//! Virtual-to-real mirrors and windows.
//!
//! A scene video carries cross-shaped black/white circle markers that pin the
//! corners of a mirror or window. This crate finds those markers, turns them
//! into a quad, maps a second "feed" camera into the quad through a
//! scale-constrained homography, and composites the result frame by frame.
//!
//! Modules, bottom-up:
//!
//! 1. [`image`] – float raster, filters, gradients, sampling, integral images.
//! 2. [`marker`] – marker templates, NCC, Harris, Hough, detection, quads.
//! 3. [`geometry`] – homographies, DLT, mirror reflection, the scale family.
//! 4. [`temporal`] – smoothing, track hold-over, subject localisation.
//! 5. [`compositor`] – rectify, crop, warp, blend, the per-frame pipeline.
//! 6. [`io`] – PPM/PGM, frame sequences, config, manifests, synthetic data.

pub mod compositor;
pub mod error;
pub mod geometry;
pub mod image;
pub mod io;
pub mod marker;
pub mod temporal;

pub use error::{Error, Result};
