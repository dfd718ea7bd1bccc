use crate::error::{Error, Result};
use crate::image::Image;

/// Centered crop window in source pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

/// Window of width `2 f tan(fov/2)` (clamped to the frame) with the frame's
/// aspect ratio, centered.
pub fn field_angle_window(width: usize, height: usize, fov_deg: f64, focal_px: f64) -> Result<CropWindow> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::param(format!("field angle must lie in (0, 180) degrees, got {fov_deg}")));
    }
    if !(focal_px > 0.0 && focal_px.is_finite()) {
        return Err(Error::param(format!("focal length must be positive, got {focal_px}")));
    }
    let span = 2.0 * focal_px * (fov_deg.to_radians() / 2.0).tan();
    let cw = (span.round() as usize).clamp(1, width);
    let ch = ((cw as f64 * height as f64 / width as f64).round() as usize).clamp(1, height);
    Ok(CropWindow { x0: (width - cw) / 2, y0: (height - ch) / 2, width: cw, height: ch })
}

/// Crops to the camera field angle; returns the crop and its top-left offset.
pub fn crop_field_angle(img: &Image, fov_deg: f64, focal_px: f64) -> Result<(Image, (usize, usize))> {
    let win = field_angle_window(img.width(), img.height(), fov_deg, focal_px)?;
    if win.width == img.width() && win.height == img.height() {
        return Ok((img.clone(), (0, 0)));
    }
    Ok((img.crop(win.x0, win.y0, win.width, win.height)?, (win.x0, win.y0)))
}
