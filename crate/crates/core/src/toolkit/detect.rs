//! Detection backends: the verified route passes ground-truth boxes through
//! the semantic target filter; the unverified desk backend is a seeded noisy
//! oracle that perturbs the same ground truth.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::filter::{normalize_label, SynonymTable};
use super::AnnotatedObject;
use crate::raster::BBox;

/// Ground-truth boxes whose labels the semantic filter accepts for `target`,
/// in annotation order. Output depends only on (annotation, target, table).
pub fn verified_boxes(
    objects: &[AnnotatedObject],
    target: &str,
    table: &SynonymTable,
) -> Vec<BBox> {
    let target_norm = normalize_label(target);
    objects
        .iter()
        .filter(|o| table.matches(&target_norm, &normalize_label(&o.label)))
        .map(|o| o.bbox.clone())
        .collect()
}

/// Noise model of the unverified desk backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Per-coordinate Gaussian jitter, pixels.
    pub sigma_px: f64,
    /// Probability of dropping a ground-truth box.
    pub drop_prob: f64,
    /// Probability of emitting a spurious near-duplicate per retained box.
    pub false_positive_rate: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            sigma_px: 2.0,
            drop_prob: 0.15,
            false_positive_rate: 0.1,
        }
    }
}

impl NoiseParams {
    /// Degenerate noise: output coincides with the verified route.
    pub const NONE: NoiseParams = NoiseParams {
        sigma_px: 0.0,
        drop_prob: 0.0,
        false_positive_rate: 0.0,
    };
}

fn jitter_box(bbox: &BBox, frame: (u32, u32), normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> BBox {
    let (fw, fh) = (frame.0 as f64, frame.1 as f64);
    let mut x0 = bbox.x_min + normal.sample(rng);
    let mut y0 = bbox.y_min + normal.sample(rng);
    let mut x1 = bbox.x_max + normal.sample(rng);
    let mut y1 = bbox.y_max + normal.sample(rng);
    if x1 < x0 {
        std::mem::swap(&mut x0, &mut x1);
    }
    if y1 < y0 {
        std::mem::swap(&mut y0, &mut y1);
    }
    x0 = x0.clamp(0.0, fw);
    x1 = x1.clamp(0.0, fw);
    y0 = y0.clamp(0.0, fh);
    y1 = y1.clamp(0.0, fh);
    if x1 - x0 < 1e-6 {
        if x0 >= 1.0 { x0 -= 1.0 } else { x1 += 1.0 }
    }
    if y1 - y0 < 1e-6 {
        if y0 >= 1.0 { y0 -= 1.0 } else { y1 += 1.0 }
    }
    BBox {
        x_min: x0,
        y_min: y0,
        x_max: x1.min(fw),
        y_max: y1.min(fh),
        label: bbox.label.clone(),
        score: bbox.score,
    }
}

/// Perturbs ground-truth boxes: each box is dropped with `drop_prob`, the
/// survivors are jittered with `sigma_px`, and each survivor spawns a shifted
/// duplicate with `false_positive_rate`. Byte-identical on replay for a fixed
/// seed; with zero noise the output equals [`verified_boxes`] output.
pub fn noisy_boxes(
    ground_truth: &[BBox],
    frame: (u32, u32),
    params: NoiseParams,
    seed: u64,
) -> Vec<BBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, params.sigma_px.max(0.0)).expect("finite sigma");
    let mut out = Vec::new();
    for bbox in ground_truth {
        if params.drop_prob > 0.0 && rng.gen::<f64>() < params.drop_prob {
            continue;
        }
        let kept = if params.sigma_px > 0.0 {
            jitter_box(bbox, frame, &normal, &mut rng)
        } else {
            bbox.clone()
        };
        if params.false_positive_rate > 0.0 && rng.gen::<f64>() < params.false_positive_rate {
            // spurious duplicate displaced by a couple of box extents
            let dx = (rng.gen::<f64>() - 0.5) * 4.0 * kept.width();
            let dy = (rng.gen::<f64>() - 0.5) * 4.0 * kept.height();
            let duplicate = jitter_box(&kept.translated(dx, dy), frame, &normal, &mut rng);
            out.push(kept);
            out.push(duplicate);
        } else {
            out.push(kept);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt() -> Vec<BBox> {
        vec![
            BBox::new(10.0, 10.0, 30.0, 30.0, "ship".into(), None).unwrap(),
            BBox::new(50.0, 40.0, 70.0, 80.0, "ship".into(), None).unwrap(),
            BBox::new(5.0, 90.0, 25.0, 110.0, "car".into(), None).unwrap(),
        ]
    }

    fn objects() -> Vec<AnnotatedObject> {
        gt().into_iter()
            .map(|bbox| AnnotatedObject {
                label: bbox.label.clone(),
                bbox,
                damage: None,
            })
            .collect()
    }

    #[test]
    fn verified_filters_by_label() {
        let table = SynonymTable::builtin();
        let ships = verified_boxes(&objects(), "ship", &table);
        assert_eq!(ships.len(), 2);
        assert!(ships.iter().all(|b| b.label == "ship"));
        assert!(verified_boxes(&objects(), "runway", &table).is_empty());
    }

    #[test]
    fn hypernym_target_returns_member_boxes() {
        let table = SynonymTable::builtin();
        let vehicles = verified_boxes(&objects(), "vehicle", &table);
        assert_eq!(vehicles.len(), 1);
        assert_eq!(vehicles[0].label, "car");
    }

    #[test]
    fn drop_everything_yields_empty() {
        let params = NoiseParams {
            drop_prob: 1.0,
            ..NoiseParams::default()
        };
        assert!(noisy_boxes(&gt(), (128, 128), params, 7).is_empty());
    }

    #[test]
    fn zero_noise_equals_ground_truth() {
        let out = noisy_boxes(&gt(), (128, 128), NoiseParams::NONE, 99);
        assert_eq!(out, gt());
    }

    #[test]
    fn same_seed_replays_identically() {
        let a = noisy_boxes(&gt(), (128, 128), NoiseParams::default(), 1234);
        let b = noisy_boxes(&gt(), (128, 128), NoiseParams::default(), 1234);
        assert_eq!(a, b);
        let c = noisy_boxes(&gt(), (128, 128), NoiseParams::default(), 1235);
        assert_ne!(a, c);
    }

    #[test]
    fn jittered_boxes_stay_in_frame_and_valid() {
        let params = NoiseParams {
            sigma_px: 25.0,
            drop_prob: 0.0,
            false_positive_rate: 1.0,
        };
        for seed in 0..50 {
            for b in noisy_boxes(&gt(), (128, 128), params, seed) {
                assert!(b.x_min >= 0.0 && b.x_max <= 128.0);
                assert!(b.y_min >= 0.0 && b.y_max <= 128.0);
                assert!(b.x_min < b.x_max && b.y_min < b.y_max);
            }
        }
    }
}
