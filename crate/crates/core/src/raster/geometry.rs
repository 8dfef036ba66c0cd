use serde::{Deserialize, Serialize};

use super::patch::{Provenance, RasterPatch};
use super::relation::BBox;
use super::RasterError;

/// Pan moves the window by half its extent unless a step is given.
pub const DEFAULT_PAN_STEP_FRAC: f64 = 0.5;
/// Zoom-out doubles the visible extent unless a factor is given.
pub const DEFAULT_ZOOM_FACTOR: f64 = 2.0;

/// Normalized axis-aligned area of interest; `0 <= x0 < x1 <= 1`, same for y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aoi {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Aoi {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, RasterError> {
        let coords = [x0, y0, x1, y1];
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(RasterError::AoiOutOfRange);
        }
        if !(x0 < x1) || !(y0 < y1) {
            return Err(RasterError::DegenerateAoi);
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub const FULL: Aoi = Aoi {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };
}

#[derive(Debug, Clone)]
pub struct CropOutcome {
    pub patch: RasterPatch,
    /// Window origin inside the input patch, in pixels.
    pub origin: (u32, u32),
}

/// Crops a patch to a normalized AOI. Pixel edges round outward (floor on
/// the min edge, ceil on the max edge) so a valid AOI always yields at least
/// one pixel. Provenance is composed when the input carries one.
pub fn crop_aoi(patch: &RasterPatch, aoi: Aoi) -> Result<CropOutcome, RasterError> {
    let w = patch.width() as f64;
    let h = patch.height() as f64;
    let x0 = (aoi.x0 * w).floor() as u32;
    let y0 = (aoi.y0 * h).floor() as u32;
    let x1 = ((aoi.x1 * w).ceil() as u32).clamp(x0 + 1, patch.width());
    let y1 = ((aoi.y1 * h).ceil() as u32).clamp(y0 + 1, patch.height());
    let x0 = x0.min(patch.width() - 1);
    let y0 = y0.min(patch.height() - 1);
    let mut out = patch.extract_window(x0, y0, x1 - x0, y1 - y0)?;
    out.provenance = patch.provenance.as_ref().map(|p| Provenance {
        base_image_id: p.base_image_id.clone(),
        origin_x: p.origin_x + x0,
        origin_y: p.origin_y + y0,
    });
    Ok(CropOutcome {
        patch: out,
        origin: (x0, y0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanDirection {
    Up,
    Down,
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct PanOutcome {
    pub patch: RasterPatch,
    /// True when the base-image edge truncated the requested shift; the
    /// window may then equal the input.
    pub clamped: bool,
}

fn window_of(patch: &RasterPatch, base: &RasterPatch) -> Result<(u32, u32), RasterError> {
    let prov = patch
        .provenance
        .as_ref()
        .ok_or(RasterError::MissingProvenance)?;
    if patch.channels() != base.channels() {
        return Err(RasterError::ChannelMismatch {
            patch: patch.channels(),
            base: base.channels(),
        });
    }
    if prov.origin_x + patch.width() > base.width()
        || prov.origin_y + patch.height() > base.height()
    {
        return Err(RasterError::ProvenanceOutOfBounds);
    }
    Ok((prov.origin_x, prov.origin_y))
}

/// Shifts the window over its base image, preserving the window size. The
/// step is a fraction of the window extent along the pan axis, rounded to
/// whole pixels and clamped at the base edges.
pub fn pan(
    patch: &RasterPatch,
    base: &RasterPatch,
    direction: PanDirection,
    step_frac: Option<f64>,
) -> Result<PanOutcome, RasterError> {
    let (ox, oy) = window_of(patch, base)?;
    let step = step_frac.unwrap_or(DEFAULT_PAN_STEP_FRAC).abs();
    let dx = (step * patch.width() as f64).round() as i64;
    let dy = (step * patch.height() as f64).round() as i64;
    let (sx, sy) = match direction {
        PanDirection::Up => (0, -dy),
        PanDirection::Down => (0, dy),
        PanDirection::Left => (-dx, 0),
        PanDirection::Right => (dx, 0),
    };
    let max_x = (base.width() - patch.width()) as i64;
    let max_y = (base.height() - patch.height()) as i64;
    let want_x = ox as i64 + sx;
    let want_y = oy as i64 + sy;
    let new_x = want_x.clamp(0, max_x);
    let new_y = want_y.clamp(0, max_y);
    let clamped = new_x != want_x || new_y != want_y;
    let mut out = base.extract_window(new_x as u32, new_y as u32, patch.width(), patch.height())?;
    out.provenance = Some(Provenance {
        base_image_id: patch.provenance.as_ref().unwrap().base_image_id.clone(),
        origin_x: new_x as u32,
        origin_y: new_y as u32,
    });
    Ok(PanOutcome {
        patch: out,
        clamped,
    })
}

#[derive(Debug, Clone)]
pub struct ZoomOutcome {
    pub patch: RasterPatch,
    /// True when the base-image bounds truncated the requested extent.
    pub clamped: bool,
}

/// Expands the visible window by `factor`, centered on the current window
/// and clamped to the base image. The result always contains the input
/// window.
pub fn zoom_out(
    patch: &RasterPatch,
    base: &RasterPatch,
    factor: Option<f64>,
) -> Result<ZoomOutcome, RasterError> {
    let factor = factor.unwrap_or(DEFAULT_ZOOM_FACTOR);
    if !(factor > 1.0) {
        return Err(RasterError::InvalidZoomFactor(factor));
    }
    let (ox, oy) = window_of(patch, base)?;
    let want_w = (patch.width() as f64 * factor).round() as u32;
    let want_h = (patch.height() as f64 * factor).round() as u32;
    let new_w = want_w.clamp(patch.width(), base.width());
    let new_h = want_h.clamp(patch.height(), base.height());
    let center_x = ox as f64 + patch.width() as f64 / 2.0;
    let center_y = oy as f64 + patch.height() as f64 / 2.0;
    // center, clamp to the base, then force containment of the old window
    let place = |center: f64, new_len: u32, old_org: u32, old_len: u32, base_len: u32| -> u32 {
        let desired = (center - new_len as f64 / 2.0).round() as i64;
        let lo_contain = old_org as i64 + old_len as i64 - new_len as i64;
        let hi_contain = old_org as i64;
        desired
            .clamp(0, (base_len - new_len) as i64)
            .clamp(lo_contain.max(0), hi_contain)
            .max(0) as u32
    };
    let new_x = place(center_x, new_w, ox, patch.width(), base.width());
    let new_y = place(center_y, new_h, oy, patch.height(), base.height());
    let clamped = new_w != want_w || new_h != want_h;
    let mut out = base.extract_window(new_x, new_y, new_w, new_h)?;
    out.provenance = Some(Provenance {
        base_image_id: patch.provenance.as_ref().unwrap().base_image_id.clone(),
        origin_x: new_x,
        origin_y: new_y,
    });
    Ok(ZoomOutcome {
        patch: out,
        clamped,
    })
}

/// Rescales box coordinates from one image size to another; labels, scores,
/// and ordering are preserved.
pub fn normalize_bboxes(
    boxes: &[BBox],
    from_dims: (u32, u32),
    to_dims: (u32, u32),
) -> Result<Vec<BBox>, RasterError> {
    if from_dims.0 == 0 || from_dims.1 == 0 || to_dims.0 == 0 || to_dims.1 == 0 {
        return Err(RasterError::NonPositiveDims);
    }
    let sx = to_dims.0 as f64 / from_dims.0 as f64;
    let sy = to_dims.1 as f64 / from_dims.1 as f64;
    boxes
        .iter()
        .map(|b| {
            BBox::new(
                b.x_min * sx,
                b.y_min * sy,
                b.x_max * sx,
                b.y_max * sy,
                b.label.clone(),
                b.score,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> RasterPatch {
        let mut p = RasterPatch::filled(w, h, 1, 0.0).unwrap();
        for y in 0..h {
            for x in 0..w {
                p.set(x, y, 0, (x + y * w) as f32 / (w * h) as f32);
            }
        }
        p
    }

    #[test]
    fn full_aoi_is_identity() {
        let p = gradient(10, 10);
        let out = crop_aoi(&p, Aoi::FULL).unwrap();
        assert_eq!(out.patch.pixels(), p.pixels());
        assert_eq!(out.origin, (0, 0));
    }

    #[test]
    fn centered_quarter_crop() {
        let p = gradient(100, 100);
        let out = crop_aoi(&p, Aoi::new(0.25, 0.25, 0.75, 0.75).unwrap()).unwrap();
        assert_eq!((out.patch.width(), out.patch.height()), (50, 50));
        assert_eq!(out.origin, (25, 25));
    }

    #[test]
    fn crop_pixels_match_direct_lookup() {
        let p = gradient(17, 13);
        let out = crop_aoi(&p, Aoi::new(0.2, 0.3, 0.9, 0.8).unwrap()).unwrap();
        let (ox, oy) = out.origin;
        for y in 0..out.patch.height() {
            for x in 0..out.patch.width() {
                assert_eq!(out.patch.get(x, y, 0), p.get(ox + x, oy + y, 0));
            }
        }
    }

    #[test]
    fn invalid_aoi_is_rejected() {
        assert!(matches!(
            Aoi::new(0.5, 0.1, 0.5, 0.9),
            Err(RasterError::DegenerateAoi)
        ));
        assert!(matches!(
            Aoi::new(-0.1, 0.0, 0.5, 0.5),
            Err(RasterError::AoiOutOfRange)
        ));
    }

    fn window(base: &RasterPatch, x: u32, y: u32, w: u32, h: u32) -> RasterPatch {
        let mut p = base.extract_window(x, y, w, h).unwrap();
        p.provenance = Some(Provenance {
            base_image_id: "base".into(),
            origin_x: x,
            origin_y: y,
        });
        p
    }

    #[test]
    fn pan_right_moves_half_window() {
        let base = gradient(200, 200);
        let crop = window(&base, 75, 75, 50, 50);
        let out = pan(&crop, &base, PanDirection::Right, None).unwrap();
        assert!(!out.clamped);
        assert_eq!(out.patch.provenance.as_ref().unwrap().origin_x, 100);
        assert_eq!(out.patch.provenance.as_ref().unwrap().origin_y, 75);
    }

    #[test]
    fn pan_at_edge_clamps_to_noop() {
        let base = gradient(100, 100);
        let crop = window(&base, 10, 0, 30, 30);
        let out = pan(&crop, &base, PanDirection::Up, None).unwrap();
        assert!(out.clamped);
        assert_eq!(out.patch.provenance.as_ref().unwrap().origin_y, 0);
        assert_eq!(out.patch.pixels(), crop.pixels());
    }

    #[test]
    fn pan_requires_provenance() {
        let base = gradient(10, 10);
        let free = gradient(4, 4);
        assert!(matches!(
            pan(&free, &base, PanDirection::Down, None),
            Err(RasterError::MissingProvenance)
        ));
    }

    #[test]
    fn pan_round_trip_restores_origin() {
        let base = gradient(120, 120);
        let crop = window(&base, 40, 40, 20, 20);
        let right = pan(&crop, &base, PanDirection::Right, Some(0.4)).unwrap();
        let back = pan(&right.patch, &base, PanDirection::Left, Some(0.4)).unwrap();
        assert!(!right.clamped && !back.clamped);
        assert_eq!(back.patch.provenance, crop.provenance);
        assert_eq!(back.patch.pixels(), crop.pixels());
    }

    #[test]
    fn zoom_out_doubles_around_center() {
        let base = gradient(200, 200);
        let crop = window(&base, 75, 75, 50, 50);
        let out = zoom_out(&crop, &base, None).unwrap();
        assert!(!out.clamped);
        assert_eq!((out.patch.width(), out.patch.height()), (100, 100));
        let p = out.patch.provenance.as_ref().unwrap();
        assert_eq!((p.origin_x, p.origin_y), (50, 50));
    }

    #[test]
    fn zoom_out_on_full_base_is_noop() {
        let base = gradient(64, 64);
        let crop = window(&base, 0, 0, 64, 64);
        let out = zoom_out(&crop, &base, Some(2.0)).unwrap();
        assert!(out.clamped);
        assert_eq!(out.patch.pixels(), base.pixels());
    }

    #[test]
    fn zoom_out_always_contains_input_window() {
        let base = gradient(97, 61);
        for (x, y, w, h, f) in [
            (0u32, 0u32, 10u32, 10u32, 3.0),
            (80, 40, 17, 21, 2.5),
            (30, 20, 40, 30, 1.5),
            (90, 55, 7, 6, 10.0),
        ] {
            let crop = window(&base, x, y, w, h);
            let out = zoom_out(&crop, &base, Some(f)).unwrap();
            let p = out.patch.provenance.as_ref().unwrap();
            assert!(p.origin_x <= x && p.origin_y <= y);
            assert!(p.origin_x + out.patch.width() >= x + w);
            assert!(p.origin_y + out.patch.height() >= y + h);
        }
    }

    #[test]
    fn normalize_round_trip() {
        let boxes = vec![
            BBox::new(10.0, 10.0, 20.0, 20.0, "a".into(), Some(0.9)).unwrap(),
            BBox::new(3.0, 7.0, 91.0, 55.0, "b".into(), None).unwrap(),
        ];
        let up = normalize_bboxes(&boxes, (100, 100), (200, 200)).unwrap();
        assert_eq!(up[0].x_min, 20.0);
        assert_eq!(up[0].y_max, 40.0);
        let back = normalize_bboxes(&up, (200, 200), (100, 100)).unwrap();
        for (orig, rt) in boxes.iter().zip(&back) {
            assert!((orig.x_min - rt.x_min).abs() < 1e-9);
            assert!((orig.y_max - rt.y_max).abs() < 1e-9);
            assert_eq!(orig.label, rt.label);
            assert_eq!(orig.score, rt.score);
        }
        assert!(matches!(
            normalize_bboxes(&boxes, (0, 100), (10, 10)),
            Err(RasterError::NonPositiveDims)
        ));
    }
}
