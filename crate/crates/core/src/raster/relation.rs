use serde::{Deserialize, Serialize};

use super::patch::BinaryMask;
use super::RasterError;

/// Axis-aligned pixel-space box with a label and optional detector score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BBox {
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        label: String,
        score: Option<f64>,
    ) -> Result<Self, RasterError> {
        if [x_min, y_min, x_max, y_max].iter().any(|v| !v.is_finite()) {
            return Err(RasterError::InvalidBox("non-finite coordinate".into()));
        }
        if !(x_min < x_max) || !(y_min < y_max) {
            return Err(RasterError::InvalidBox(
                "min edge must be strictly below max edge".into(),
            ));
        }
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(RasterError::InvalidBox("score outside [0, 1]".into()));
            }
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
            label,
            score,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn translated(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
            label: self.label.clone(),
            score: self.score,
        }
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Restricts the box to `(width, height)` image bounds, or `None` when
    /// nothing remains.
    pub fn clamped_to(&self, width: u32, height: u32) -> Option<BBox> {
        let x_min = self.x_min.max(0.0);
        let y_min = self.y_min.max(0.0);
        let x_max = self.x_max.min(width as f64);
        let y_max = self.y_max.min(height as f64);
        (x_min < x_max && y_min < y_max).then(|| BBox {
            x_min,
            y_min,
            x_max,
            y_max,
            label: self.label.clone(),
            score: self.score,
        })
    }
}

/// Eight-sector compass in image coordinates: the origin is the top-left
/// corner and +y points down, so "below" means larger y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompassDirection {
    Right,
    BelowRight,
    Below,
    BelowLeft,
    Left,
    AboveLeft,
    Above,
    AboveRight,
}

impl CompassDirection {
    /// Sector of the offset vector `(dx, dy)`, or `None` for a zero vector.
    pub fn of_offset(dx: f64, dy: f64) -> Option<CompassDirection> {
        if dx == 0.0 && dy == 0.0 {
            return None;
        }
        let angle = dy.atan2(dx).to_degrees();
        let sector = ((angle / 45.0).round().rem_euclid(8.0)) as usize;
        Some(
            [
                CompassDirection::Right,
                CompassDirection::BelowRight,
                CompassDirection::Below,
                CompassDirection::BelowLeft,
                CompassDirection::Left,
                CompassDirection::AboveLeft,
                CompassDirection::Above,
                CompassDirection::AboveRight,
            ][sector],
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CompassDirection::Right => "right",
            CompassDirection::BelowRight => "below-right",
            CompassDirection::Below => "below",
            CompassDirection::BelowLeft => "below-left",
            CompassDirection::Left => "left",
            CompassDirection::AboveLeft => "above-left",
            CompassDirection::Above => "above",
            CompassDirection::AboveRight => "above-right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRelation {
    Disjoint,
    Overlapping,
    AContainsB,
    BContainsA,
    MutualContainment,
}

/// Outcome of a pairwise spatial comparison between boxes, points, or masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: SpatialRelation,
    /// Compass sector from a's center (or centroid) toward b's.
    pub direction: Option<CompassDirection>,
    pub iou: f64,
    /// `(b - a)` center offset in pixels.
    pub center_offset: (f64, f64),
    /// Fraction of a's area (or foreground) inside b, and vice versa.
    pub a_frac_in_b: f64,
    pub b_frac_in_a: f64,
    /// Set only by mask comparisons where both masks have no foreground.
    pub both_empty: bool,
}

/// Either operand of a box relationship; points are zero-extent boxes.
#[derive(Debug, Clone, PartialEq)]
pub enum RelationOperand {
    Box(BBox),
    Point(f64, f64),
}

impl RelationOperand {
    fn rect(&self) -> (f64, f64, f64, f64) {
        match self {
            RelationOperand::Box(b) => (b.x_min, b.y_min, b.x_max, b.y_max),
            RelationOperand::Point(x, y) => (*x, *y, *x, *y),
        }
    }

    fn center(&self) -> (f64, f64) {
        let (x0, y0, x1, y1) = self.rect();
        ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    }

    fn area(&self) -> f64 {
        let (x0, y0, x1, y1) = self.rect();
        (x1 - x0) * (y1 - y0)
    }

    fn validate(&self, frame: Option<(u32, u32)>) -> Result<(), RasterError> {
        let (x0, y0, x1, y1) = self.rect();
        if [x0, y0, x1, y1].iter().any(|v| !v.is_finite()) {
            return Err(RasterError::InvalidBox("non-finite coordinate".into()));
        }
        if let Some((w, h)) = frame {
            if x1 < 0.0 || y1 < 0.0 || x0 > w as f64 || y0 > h as f64 {
                return Err(RasterError::InvalidBox(
                    "operand lies entirely outside the frame".into(),
                ));
            }
        }
        Ok(())
    }
}

fn rect_intersection(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let w = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let h = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    w * h
}

fn rect_inside(inner: (f64, f64, f64, f64), outer: (f64, f64, f64, f64)) -> bool {
    inner.0 >= outer.0 && inner.1 >= outer.1 && inner.2 <= outer.2 && inner.3 <= outer.3
}

/// Coarse relative position of `b` with respect to `a`.
///
/// Touching-edge operands have zero intersection area and therefore report a
/// compass direction rather than an overlap.
pub fn bbox_relationship(
    a: &RelationOperand,
    b: &RelationOperand,
    frame_dims: Option<(u32, u32)>,
) -> Result<RelationReport, RasterError> {
    a.validate(frame_dims)?;
    b.validate(frame_dims)?;
    let ra = a.rect();
    let rb = b.rect();
    let inter = rect_intersection(ra, rb);
    let union = a.area() + b.area() - inter;
    let iou = if union <= 0.0 { 0.0 } else { inter / union };
    let overlapping = inter > 0.0 || rect_inside(ra, rb) || rect_inside(rb, ra);
    let relation = if !overlapping {
        SpatialRelation::Disjoint
    } else if ra == rb {
        SpatialRelation::MutualContainment
    } else if rect_inside(rb, ra) {
        SpatialRelation::AContainsB
    } else if rect_inside(ra, rb) {
        SpatialRelation::BContainsA
    } else {
        SpatialRelation::Overlapping
    };
    let (acx, acy) = a.center();
    let (bcx, bcy) = b.center();
    let offset = (bcx - acx, bcy - acy);
    Ok(RelationReport {
        relation,
        direction: CompassDirection::of_offset(offset.0, offset.1),
        iou,
        center_offset: offset,
        a_frac_in_b: if a.area() > 0.0 { inter / a.area() } else { 0.0 },
        b_frac_in_a: if b.area() > 0.0 { inter / b.area() } else { 0.0 },
        both_empty: false,
    })
}

/// Pixel-exact overlap, containment, and centroid relation of two masks of
/// equal dimensions. The IoU of two empty masks is defined as 0 and flagged
/// via `both_empty`.
pub fn mask_relationship(a: &BinaryMask, b: &BinaryMask) -> Result<RelationReport, RasterError> {
    if !a.same_dims(b) {
        return Err(RasterError::DimensionMismatch {
            a_width: a.width(),
            a_height: a.height(),
            b_width: b.width(),
            b_height: b.height(),
        });
    }
    let inter = a.intersection_count(b);
    let union = a.union_count(b);
    let na = a.count_ones();
    let nb = b.count_ones();
    let iou = if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    };
    let relation = if inter == 0 {
        SpatialRelation::Disjoint
    } else if na == inter && nb == inter {
        SpatialRelation::MutualContainment
    } else if nb == inter {
        SpatialRelation::AContainsB
    } else if na == inter {
        SpatialRelation::BContainsA
    } else {
        SpatialRelation::Overlapping
    };
    let (offset, direction) = match (a.centroid(), b.centroid()) {
        (Some((ax, ay)), Some((bx, by))) => {
            let off = (bx - ax, by - ay);
            (off, CompassDirection::of_offset(off.0, off.1))
        }
        _ => ((0.0, 0.0), None),
    };
    Ok(RelationReport {
        relation,
        direction,
        iou,
        center_offset: offset,
        a_frac_in_b: if na > 0 { inter as f64 / na as f64 } else { 0.0 },
        b_frac_in_a: if nb > 0 { inter as f64 / nb as f64 } else { 0.0 },
        both_empty: union == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> RelationOperand {
        RelationOperand::Box(BBox::new(x0, y0, x1, y1, "t".into(), None).unwrap())
    }

    #[test]
    fn identical_boxes_are_mutually_contained() {
        let r = bbox_relationship(&bx(1.0, 1.0, 5.0, 5.0), &bx(1.0, 1.0, 5.0, 5.0), None).unwrap();
        assert_eq!(r.relation, SpatialRelation::MutualContainment);
        assert_eq!(r.iou, 1.0);
        assert_eq!(r.direction, None);
    }

    #[test]
    fn disjoint_box_to_the_right() {
        let r =
            bbox_relationship(&bx(0.0, 0.0, 10.0, 10.0), &bx(20.0, 0.0, 30.0, 10.0), None).unwrap();
        assert_eq!(r.relation, SpatialRelation::Disjoint);
        assert_eq!(r.iou, 0.0);
        assert_eq!(r.direction, Some(CompassDirection::Right));
    }

    #[test]
    fn partial_overlap_iou_matches_area_arithmetic() {
        // inter = 5x5 = 25, union = 100 + 100 - 25 = 175
        let r =
            bbox_relationship(&bx(0.0, 0.0, 10.0, 10.0), &bx(5.0, 5.0, 15.0, 15.0), None).unwrap();
        assert_eq!(r.relation, SpatialRelation::Overlapping);
        assert!((r.iou - 25.0 / 175.0).abs() < 1e-12);
        assert_eq!(r.direction, Some(CompassDirection::BelowRight));
    }

    #[test]
    fn image_convention_points_down() {
        let r = bbox_relationship(
            &RelationOperand::Point(5.0, 5.0),
            &RelationOperand::Point(5.0, 9.0),
            None,
        )
        .unwrap();
        assert_eq!(r.direction, Some(CompassDirection::Below));
        let up = bbox_relationship(
            &RelationOperand::Point(5.0, 9.0),
            &RelationOperand::Point(5.0, 5.0),
            None,
        )
        .unwrap();
        assert_eq!(up.direction, Some(CompassDirection::Above));
    }

    #[test]
    fn point_in_box_is_containment() {
        let r = bbox_relationship(
            &bx(0.0, 0.0, 10.0, 10.0),
            &RelationOperand::Point(3.0, 3.0),
            None,
        )
        .unwrap();
        assert_eq!(r.relation, SpatialRelation::AContainsB);
    }

    #[test]
    fn operand_outside_frame_is_invalid() {
        let r = bbox_relationship(
            &bx(50.0, 50.0, 60.0, 60.0),
            &bx(0.0, 0.0, 1.0, 1.0),
            Some((20, 20)),
        );
        assert!(matches!(r, Err(RasterError::InvalidBox(_))));
    }

    #[test]
    fn equal_masks_and_disjoint_quadrants() {
        let a = BinaryMask::from_fn(8, 8, |x, y| x < 4 && y < 4);
        let r = mask_relationship(&a, &a).unwrap();
        assert_eq!(r.relation, SpatialRelation::MutualContainment);
        assert_eq!(r.iou, 1.0);
        assert_eq!(r.a_frac_in_b, 1.0);

        let b = BinaryMask::from_fn(8, 8, |x, y| x >= 4 && y >= 4);
        let r = mask_relationship(&a, &b).unwrap();
        assert_eq!(r.relation, SpatialRelation::Disjoint);
        assert_eq!(r.iou, 0.0);
        assert_eq!(r.direction, Some(CompassDirection::BelowRight));
    }

    #[test]
    fn both_empty_masks_flagged_not_nan() {
        let a = BinaryMask::new(4, 4);
        let r = mask_relationship(&a, &a).unwrap();
        assert!(r.both_empty);
        assert_eq!(r.iou, 0.0);
    }

    #[test]
    fn mask_dimension_mismatch_errors() {
        let a = BinaryMask::new(4, 4);
        let b = BinaryMask::new(4, 5);
        assert!(matches!(
            mask_relationship(&a, &b),
            Err(RasterError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mask_iou_matches_per_pixel_count() {
        // simple seeded LCG keeps the fixture reproducible
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) & 1 == 1
        };
        let a = BinaryMask::from_fn(32, 32, |_, _| next());
        let b = BinaryMask::from_fn(32, 32, |_, _| next());
        let mut inter = 0usize;
        let mut union = 0usize;
        for y in 0..32 {
            for x in 0..32 {
                if a.get(x, y) && b.get(x, y) {
                    inter += 1;
                }
                if a.get(x, y) || b.get(x, y) {
                    union += 1;
                }
            }
        }
        let r = mask_relationship(&a, &b).unwrap();
        assert_eq!(r.iou, inter as f64 / union as f64);
    }
}
