//! Cross-shaped black/white circle markers: templates, the three matching
//! operators (NCC, Harris, Hough), the fused detector, and quad assembly.
//!
//! Class ids encode both the mirror and the corner: `class = 4·mirror + role`
//! with roles TL, TR, BR, BL. Within a mirror, class parity flips the quadrant
//! colors and the second pair carries an inverted outer ring. Mirrors are
//! told apart by rotating the cross by 22.5° per mirror id (four distinct
//! mirrors before the pattern repeats).

mod detect;
mod harris;
mod hough;
mod ncc;
mod quad;
mod template;

pub use detect::{detect_markers, detect_markers_in, DetectionConfig, SearchWindow};
pub use harris::harris_response;
pub use hough::{edge_map, edge_map_from_gradients, hough_circles, Circle};
pub use ncc::{ncc, ncc_score_map};
pub use quad::{corners_to_quad, single_marker_quads, MirrorQuad};
pub use template::{classify_marker, load_template, marker_value, procedural_bank, render_marker, MarkerTemplate};

use crate::geometry::Point2;

/// Which quad corner a marker pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CornerRole {
    TopLeft,
    TopRight,
    BottomRight,
    BottomLeft,
    Unassigned,
}

impl CornerRole {
    pub const CORNERS: [CornerRole; 4] =
        [CornerRole::TopLeft, CornerRole::TopRight, CornerRole::BottomRight, CornerRole::BottomLeft];

    pub fn from_class(class_id: u32) -> Self {
        Self::CORNERS[(class_id % 4) as usize]
    }

    pub fn index(self) -> Option<usize> {
        Self::CORNERS.iter().position(|&r| r == self)
    }
}

/// Mirror a class id belongs to.
pub fn mirror_of(class_id: u32) -> u32 {
    class_id / 4
}

/// One detected marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerHit {
    /// Subpixel center in frame coordinates.
    pub center: Point2,
    /// NCC of the winning template, in `[-1, 1]`.
    pub score: f64,
    pub class_id: u32,
    pub radius: f64,
    pub corner_role: CornerRole,
}
