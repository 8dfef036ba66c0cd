//! Seeded synthetic fixture corpus: rasters with planted geometry, a
//! manifest, ground-truth annotations, evaluation tasks spanning all six EO
//! task families, and the reference scripts the optimal agent replays.
//!
//! Everything is a pure function of the spec, so the same spec produces
//! byte-identical fixture trees.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{TimeZone, Utc};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::agents::{ScriptedCall, TaskScript};
use super::HarnessError;
use crate::datalake::{BaseImageRef, DataLakeRecord, GeoPoint, Modality};
use crate::episode::{EoTask, ResolutionRule, Task};
use crate::raster::{bbox_relationship, BBox, CompassDirection, RasterPatch, RelationOperand};
use crate::spectral::{IndexKind, Platform, SceneDescriptor};
use crate::toolkit::{AnnotatedObject, AnnotationStore, DatasetFamily, GroundTruthAnnotation};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    /// Side length of plain task images.
    pub image_dim: u32,
    /// Side length of the spatial-navigation base images.
    pub nav_base_dim: u32,
    /// Side length of temporal RGB frames.
    pub frame_dim: u32,
    /// Side length of multispectral scenes.
    pub scene_dim: u32,
    /// Frames in the optical temporal sequence (2..=8).
    pub optical_sequence_len: u32,
    /// Scenes in the primary multispectral sequence (2..=8).
    pub scene_sequence_len: u32,
    /// Aligned optical/SAR pairs.
    pub pair_count: u32,
    /// Extra geolocated distractor records per modality (no tasks).
    pub extra_optical: u32,
    pub extra_sar: u32,
    /// Label vocabulary for distractor content.
    pub object_vocab: Vec<String>,
    /// Platforms of the generated scene groups (first gets the temporal
    /// sequence, second a two-scene group).
    pub scene_band_plan: Vec<Platform>,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            image_dim: 128,
            nav_base_dim: 256,
            frame_dim: 96,
            scene_dim: 48,
            optical_sequence_len: 4,
            scene_sequence_len: 3,
            pair_count: 2,
            extra_optical: 6,
            extra_sar: 2,
            object_vocab: ["ship", "car", "truck", "bridge", "oil tank", "lighthouse"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            scene_band_plan: vec![Platform::Sentinel2a, Platform::Landsat9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FixtureSummary {
    pub record_count: usize,
    pub task_count: usize,
    pub optical: usize,
    pub sar: usize,
    pub scenes: usize,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const TASKS_FILE: &str = "tasks.jsonl";
pub const SCRIPTS_FILE: &str = "scripts.jsonl";

const SHIP: [f32; 3] = [0.1, 0.2, 0.9];
const CAR: [f32; 3] = [0.9, 0.1, 0.1];
const TRUCK: [f32; 3] = [0.9, 0.9, 0.1];
const LIGHTHOUSE: [f32; 3] = [1.0, 1.0, 1.0];
const BUILDING: [f32; 3] = [0.5, 0.5, 0.5];
const ROAD: [f32; 3] = [0.2, 0.2, 0.2];
const BRIDGE: [f32; 3] = [0.1, 0.9, 0.9];
const RUBBLE: [f32; 3] = [0.3, 0.25, 0.2];
const TERRAIN: [f32; 3] = [0.35, 0.42, 0.3];

fn color_of(label: &str) -> [f32; 3] {
    match label {
        "ship" => SHIP,
        "car" => CAR,
        "truck" => TRUCK,
        "lighthouse" => LIGHTHOUSE,
        "building" => BUILDING,
        "road" => ROAD,
        "bridge" => BRIDGE,
        _ => [0.9, 0.1, 0.9],
    }
}

struct Object {
    label: String,
    rect: (u32, u32, u32, u32),
    damage: Option<String>,
}

fn object(label: &str, x0: u32, y0: u32, x1: u32, y1: u32) -> Object {
    Object {
        label: label.to_string(),
        rect: (x0, y0, x1, y1),
        damage: None,
    }
}

fn damaged(label: &str, x0: u32, y0: u32, x1: u32, y1: u32, damage: &str) -> Object {
    Object {
        label: label.to_string(),
        rect: (x0, y0, x1, y1),
        damage: Some(damage.to_string()),
    }
}

struct Builder {
    spec: FixtureSpec,
    out: std::path::PathBuf,
    rng: ChaCha8Rng,
    counter: u64,
    records: Vec<DataLakeRecord>,
    annotations: AnnotationStore,
    tasks: Vec<Task>,
    scripts: Vec<TaskScript>,
}

impl Builder {
    fn new(spec: FixtureSpec, out: &Path) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Self {
            spec,
            out: out.to_path_buf(),
            rng,
            counter: 0,
            records: Vec::new(),
            annotations: AnnotationStore::new(),
            tasks: Vec::new(),
            scripts: Vec::new(),
        }
    }

    /// Content-hash-style masked id, deterministic in (seed, creation order).
    fn next_id(&mut self, kind: &str) -> String {
        self.counter += 1;
        let mut hasher = Sha256::new();
        hasher.update(self.spec.seed.to_le_bytes());
        hasher.update(self.counter.to_le_bytes());
        hasher.update(kind.as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn jitter(&mut self, base: (f64, f64)) -> GeoPoint {
        let lat = base.0 + self.rng.gen_range(-0.2..0.2);
        let lon = base.1 + self.rng.gen_range(-0.2..0.2);
        GeoPoint::new(lat.clamp(-89.0, 89.0), lon.clamp(-179.0, 179.0)).expect("jitter in range")
    }

    fn optical_image(&mut self, dim: u32, objects: &[Object]) -> RasterPatch {
        let mut patch = RasterPatch::filled(dim, dim, 3, 0.0).expect("patch");
        for y in 0..dim {
            for x in 0..dim {
                // light deterministic texture so images are not flat
                let t = 0.02 * ((x / 8 + y / 8) % 2) as f32;
                patch.set(x, y, 0, TERRAIN[0] + t);
                patch.set(x, y, 1, TERRAIN[1] + t);
                patch.set(x, y, 2, TERRAIN[2] + t);
            }
        }
        for o in objects {
            let (x0, y0, x1, y1) = o.rect;
            patch.fill_rect(x0, y0, x1 - x0, y1 - y0, &color_of(&o.label));
        }
        patch
    }

    fn sar_image(&mut self, dim: u32, objects: &[Object]) -> RasterPatch {
        let mut patch = RasterPatch::filled(dim, dim, 1, 0.0).expect("patch");
        for y in 0..dim {
            for x in 0..dim {
                patch.set(x, y, 0, 0.08 + self.rng.gen_range(0.0..0.06));
            }
        }
        for o in objects {
            let (x0, y0, x1, y1) = o.rect;
            patch.fill_rect(x0, y0, x1 - x0, y1 - y0, &[0.9]);
        }
        patch
    }

    fn annotate(&mut self, record_id: &str, objects: &[Object]) {
        let objects = objects
            .iter()
            .map(|o| AnnotatedObject {
                label: o.label.clone(),
                bbox: BBox::new(
                    o.rect.0 as f64,
                    o.rect.1 as f64,
                    o.rect.2 as f64,
                    o.rect.3 as f64,
                    o.label.clone(),
                    None,
                )
                .expect("planted boxes are valid"),
                damage: o.damage.clone(),
            })
            .collect();
        self.annotations.insert(GroundTruthAnnotation {
            record_id: record_id.to_string(),
            objects,
        });
    }

    fn push_raster(
        &mut self,
        patch: &RasterPatch,
        modality: Modality,
        location: Option<GeoPoint>,
        capture_time: Option<chrono::DateTime<Utc>>,
        sequence: Option<(&str, u32)>,
        base: Option<BaseImageRef>,
    ) -> Result<String, HarnessError> {
        let id = self.next_id("raster");
        let rel = format!("rasters/{id}.rpf");
        crate::raster::write_patch(patch, &self.out.join(&rel))?;
        self.records.push(DataLakeRecord {
            record_id: id.clone(),
            modality,
            location,
            capture_time,
            sensor: "synthetic".into(),
            gsd_m: Some(0.5),
            sequence_id: sequence.map(|(s, _)| s.to_string()),
            frame_index: sequence.map(|(_, i)| i),
            companion_id: None,
            base_image_id: base,
            band_files: Vec::new(),
            path: rel,
        });
        Ok(id)
    }

    fn link_pair(&mut self, optical_id: &str, sar_id: &str) {
        for record in &mut self.records {
            if record.record_id == optical_id {
                record.companion_id = Some(sar_id.to_string());
            } else if record.record_id == sar_id {
                record.companion_id = Some(optical_id.to_string());
            }
        }
    }

    fn task(
        &mut self,
        eo_task: EoTask,
        family: DatasetFamily,
        question: &str,
        start: &[&str],
        answer: Option<String>,
        resolution: Option<ResolutionRule>,
        calls: Vec<ScriptedCall>,
    ) {
        let task_id = self.next_id("task");
        let reference_tools: Vec<String> = calls.iter().map(|c| c.name.clone()).collect();
        self.tasks.push(Task {
            task_id: task_id.clone(),
            question: question.to_string(),
            start_records: start.iter().map(|s| s.to_string()).collect(),
            dataset_family: family,
            eo_task,
            deferred: answer.is_none(),
            reference_answer: answer,
            reference_call_count: reference_tools.len() as u32,
            reference_tools,
            resolution,
        });
        self.scripts.push(TaskScript { task_id, calls });
    }
}

fn call(name: &str, arguments: serde_json::Value, rationale: &str) -> ScriptedCall {
    ScriptedCall {
        name: name.to_string(),
        arguments,
        rationale: Some(rationale.to_string()),
    }
}

/// Scene region values per band role for the planted multispectral scenes.
/// Background stays below every thematic threshold; each themed region trips
/// exactly its own index.
fn sentinel_band_value(band: &str, region: u8) -> f32 {
    // region: 0 background, 1 vegetation, 2 water
    match (band, region) {
        ("B2", 2) => 0.4,
        ("B2", _) => 0.1,
        ("B3", 1) => 0.15,
        ("B3", 2) => 0.6,
        ("B3", _) => 0.1,
        ("B4", 1) => 0.2,
        ("B4", 2) => 0.05,
        ("B4", _) => 0.2,
        ("B8", 1) => 0.8,
        ("B8", 2) => 0.05,
        ("B8", _) => 0.1,
        ("B11", 1) => 0.1,
        ("B11", 2) => 0.02,
        ("B11", _) => 0.1,
        _ => 0.05,
    }
}

fn landsat_band_value(band: &str, nir: f32) -> f32 {
    match band {
        "SR_B5" => nir,
        "SR_B4" => 0.2,
        "SR_B3" => 0.15,
        "SR_B6" => 0.1,
        _ => 0.05,
    }
}

impl Builder {
    /// Writes one multispectral scene folder and its record. `veg_cols`
    /// columns on the left are vegetation, `water_cols` on the right are
    /// water, the rest is background.
    fn sentinel_scene(
        &mut self,
        dim: u32,
        veg_cols: u32,
        water_cols: u32,
        when: chrono::DateTime<Utc>,
        sequence: (&str, u32),
        location: GeoPoint,
    ) -> Result<String, HarnessError> {
        let id = self.next_id("scene");
        let platform = Platform::Sentinel2a;
        let band_names: Vec<&str> = crate::spectral::band_roles(platform)
            .iter()
            .map(|(n, _)| *n)
            .collect();
        let mut band_files = Vec::new();
        for band in &band_names {
            let mut patch = RasterPatch::filled(dim, dim, 1, 0.0).expect("band");
            for y in 0..dim {
                for x in 0..dim {
                    let region = if x < veg_cols {
                        1
                    } else if x >= dim - water_cols {
                        2
                    } else {
                        0
                    };
                    patch.set(x, y, 0, sentinel_band_value(band, region));
                }
            }
            let rel = format!("scenes/{id}/{band}.rpf");
            crate::raster::write_patch(&patch, &self.out.join(&rel))?;
            band_files.push((band.to_string(), rel));
        }
        SceneDescriptor {
            platform,
            capture_time: Some(when),
            gsd_m: Some(10.0),
        }
        .write(&self.out.join(format!("scenes/{id}")))?;
        self.records.push(DataLakeRecord {
            record_id: id.clone(),
            modality: Modality::MultispectralScene,
            location: Some(location),
            capture_time: Some(when),
            sensor: platform.to_string(),
            gsd_m: Some(10.0),
            sequence_id: Some(sequence.0.to_string()),
            frame_index: Some(sequence.1),
            companion_id: None,
            base_image_id: None,
            band_files,
            path: format!("scenes/{id}"),
        });
        Ok(id)
    }

    fn landsat_scene(
        &mut self,
        dim: u32,
        nir: f32,
        when: chrono::DateTime<Utc>,
        sequence: (&str, u32),
        location: GeoPoint,
    ) -> Result<String, HarnessError> {
        let id = self.next_id("scene");
        let platform = Platform::Landsat9;
        let mut band_files = Vec::new();
        for (band, _) in crate::spectral::band_roles(platform) {
            let patch =
                RasterPatch::filled(dim, dim, 1, landsat_band_value(band, nir)).expect("band");
            let rel = format!("scenes/{id}/{band}.rpf");
            crate::raster::write_patch(&patch, &self.out.join(&rel))?;
            band_files.push((band.to_string(), rel));
        }
        SceneDescriptor {
            platform,
            capture_time: Some(when),
            gsd_m: Some(30.0),
        }
        .write(&self.out.join(format!("scenes/{id}")))?;
        self.records.push(DataLakeRecord {
            record_id: id.clone(),
            modality: Modality::MultispectralScene,
            location: Some(location),
            capture_time: Some(when),
            sensor: platform.to_string(),
            gsd_m: Some(30.0),
            sequence_id: Some(sequence.0.to_string()),
            frame_index: Some(sequence.1),
            companion_id: None,
            base_image_id: None,
            band_files,
            path: format!("scenes/{id}"),
        });
        Ok(id)
    }
}

/// Generates the fixture corpus under `out_dir` and returns a summary. The
/// produced tasks cover all six EO task families, every reference trajectory
/// fits the evaluation budget, and each task is solvable by the optimal
/// scripted agent in verified mode by construction.
pub fn gen_fixtures(spec: &FixtureSpec, out_dir: &Path) -> Result<FixtureSummary, HarnessError> {
    if !(2..=8).contains(&spec.optical_sequence_len) || !(2..=8).contains(&spec.scene_sequence_len)
    {
        return Err(HarnessError::Fixture(
            "sequence lengths must be within 2..=8".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut b = Builder::new(spec.clone(), out_dir);
    let dim = spec.image_dim.max(128);
    let scale = |v: u32| v * dim / 128;

    // --- counting / attribute / relationship image -----------------------
    let ships = [
        object("ship", scale(10), scale(16), scale(34), scale(32)),
        object("ship", scale(80), scale(60), scale(104), scale(76)),
        object("ship", scale(16), scale(88), scale(40), scale(104)),
    ];
    let img_count_objects = [
        ships[0].rect,
        ships[1].rect,
        ships[2].rect,
        (scale(108), scale(20), scale(120), scale(56)), // lighthouse
        (scale(52), scale(108), scale(64), scale(116)), // car
        (scale(70), scale(40), scale(82), scale(48)),   // car
    ];
    let img_count_spec = vec![
        object("ship", img_count_objects[0].0, img_count_objects[0].1, img_count_objects[0].2, img_count_objects[0].3),
        object("ship", img_count_objects[1].0, img_count_objects[1].1, img_count_objects[1].2, img_count_objects[1].3),
        object("ship", img_count_objects[2].0, img_count_objects[2].1, img_count_objects[2].2, img_count_objects[2].3),
        object("lighthouse", img_count_objects[3].0, img_count_objects[3].1, img_count_objects[3].2, img_count_objects[3].3),
        object("car", img_count_objects[4].0, img_count_objects[4].1, img_count_objects[4].2, img_count_objects[4].3),
        object("car", img_count_objects[5].0, img_count_objects[5].1, img_count_objects[5].2, img_count_objects[5].3),
    ];
    let patch = b.optical_image(dim, &img_count_spec);
    let loc_a = b.jitter((34.0, -118.2));
    let img_a = b.push_raster(&patch, Modality::OpticalRgb, Some(loc_a), None, None, None)?;
    b.annotate(&img_a, &img_count_spec);

    let ship_count = img_count_spec.iter().filter(|o| o.label == "ship").count();
    b.task(
        EoTask::ObjectCounting,
        DatasetFamily::Dota,
        "How many ships are visible in this image?",
        &[&img_a],
        Some(ship_count.to_string()),
        None,
        vec![call(
            "get_object_bbox_by_optical_image",
            json!({"image": img_a, "target": "ship"}),
            "Detect every ship in the image to count them.",
        )],
    );

    // left-half cut: planted so no ship straddles the midline
    let left_half: usize = img_count_spec
        .iter()
        .filter(|o| o.label == "ship" && o.rect.2 <= dim / 2)
        .count();
    b.task(
        EoTask::SpatialNavigation,
        DatasetFamily::Dior,
        "How many ships are in the left half of this image?",
        &[&img_a],
        Some(left_half.to_string()),
        None,
        vec![
            call(
                "crop_optical_or_sar_image",
                json!({"image": img_a, "x0": 0.0, "y0": 0.0, "x1": 0.5, "y1": 1.0}),
                "Restrict the view to the left half.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-1", "target": "ship"}),
                "Count ships inside the cropped half.",
            ),
        ],
    );

    // lighthouse vs ship relationship, answer derived from the geometry
    let ship_box = &img_count_spec[0].rect;
    let lh_box = &img_count_spec[3].rect;
    let relation = bbox_relationship(
        &RelationOperand::Box(
            BBox::new(ship_box.0 as f64, ship_box.1 as f64, ship_box.2 as f64, ship_box.3 as f64, "ship".into(), None).unwrap(),
        ),
        &RelationOperand::Box(
            BBox::new(lh_box.0 as f64, lh_box.1 as f64, lh_box.2 as f64, lh_box.3 as f64, "lighthouse".into(), None).unwrap(),
        ),
        Some((dim, dim)),
    )
    .map_err(|e| HarnessError::Fixture(e.to_string()))?;
    let direction_word = match relation.direction {
        Some(CompassDirection::Right) => "right",
        Some(CompassDirection::Left) => "left",
        other => {
            return Err(HarnessError::Fixture(format!(
                "lighthouse layout must be horizontal, got {other:?}"
            )))
        }
    };
    b.task(
        EoTask::GeospatialReasoning,
        DatasetFamily::Dior,
        "Relative to the ship in the upper left, is the lighthouse to the left or to the right?",
        &[&img_a],
        Some(direction_word.to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": img_a, "target": "ship"}),
                "Locate the ships.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": img_a, "target": "lighthouse"}),
                "Locate the lighthouse.",
            ),
            call(
                "get_bbox_geospatial_relationship",
                json!({
                    "a": [ship_box.0, ship_box.1, ship_box.2, ship_box.3],
                    "b": [lh_box.0, lh_box.1, lh_box.2, lh_box.3],
                    "frame_width": dim, "frame_height": dim,
                }),
                "Compare the two boxes to get the compass direction.",
            ),
        ],
    );

    b.task(
        EoTask::VisualUnderstanding,
        DatasetFamily::Dior,
        "Which object category appears most often in this image?",
        &[&img_a],
        Some("ship".to_string()),
        None,
        vec![call(
            "analyze_optical_scene",
            json!({"image": img_a}),
            "Summarize the scene to find the dominant category.",
        )],
    );

    b.task(
        EoTask::VisualUnderstanding,
        DatasetFamily::Xview,
        "What color are the ships in this image?",
        &[&img_a],
        Some("blue".to_string()),
        None,
        vec![call(
            "describe_optical_object",
            json!({"image": img_a, "target": "ship"}),
            "Inspect the visual attributes of the ships.",
        )],
    );

    // --- arithmetic image -------------------------------------------------
    let img_arith_spec = vec![
        object("car", scale(8), scale(8), scale(24), scale(20)),
        object("car", scale(40), scale(8), scale(56), scale(20)),
        object("car", scale(72), scale(8), scale(88), scale(20)),
        object("car", scale(104), scale(8), scale(120), scale(20)),
        object("truck", scale(8), scale(36), scale(28), scale(52)),
        object("ship", scale(40), scale(70), scale(70), scale(90)),
        object("ship", scale(80), scale(96), scale(110), scale(116)),
    ];
    let patch = b.optical_image(dim, &img_arith_spec);
    let loc_b = b.jitter((51.5, -0.1));
    let img_b = b.push_raster(&patch, Modality::OpticalRgb, Some(loc_b), None, None, None)?;
    b.annotate(&img_b, &img_arith_spec);

    let cars = img_arith_spec.iter().filter(|o| o.label == "car").count();
    let arith_ships = img_arith_spec.iter().filter(|o| o.label == "ship").count();
    let trucks = img_arith_spec.iter().filter(|o| o.label == "truck").count();
    b.task(
        EoTask::ObjectCounting,
        DatasetFamily::Dota,
        "How many more cars than ships are visible in this image?",
        &[&img_b],
        Some((cars - arith_ships).to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": img_b, "target": "car"}),
                "Count the cars.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": img_b, "target": "ship"}),
                "Count the ships.",
            ),
            call(
                "basic_calculator",
                json!({"expression": format!("{cars} - {arith_ships}")}),
                "Subtract the ship count from the car count.",
            ),
        ],
    );
    b.task(
        EoTask::ObjectCounting,
        DatasetFamily::Xview,
        "How many vehicles (cars or trucks) are visible in this image?",
        &[&img_b],
        Some((cars + trucks).to_string()),
        None,
        vec![call(
            "get_object_bbox_by_optical_image",
            json!({"image": img_b, "target": "vehicle"}),
            "A vehicle query matches both cars and trucks.",
        )],
    );

    // --- building/road geospatial image -----------------------------------
    let img_geo_spec = vec![
        object("building", scale(10), scale(10), scale(40), scale(34)),
        object("building", scale(60), scale(12), scale(92), scale(36)),
        object("road", 0, scale(90), dim, scale(104)),
    ];
    let patch = b.optical_image(dim, &img_geo_spec);
    let loc_g = b.jitter((48.8, 2.35));
    let img_geo = b.push_raster(&patch, Modality::OpticalRgb, Some(loc_g), None, None, None)?;
    b.annotate(&img_geo, &img_geo_spec);
    b.task(
        EoTask::GeospatialReasoning,
        DatasetFamily::Xview,
        "Do the building areas and the road area overlap in this image?",
        &[&img_geo],
        Some("no".to_string()),
        None,
        vec![
            call(
                "get_building_mask_by_optical_image",
                json!({"image": img_geo}),
                "Extract the building footprint mask.",
            ),
            call(
                "get_road_mask_by_optical_image",
                json!({"image": img_geo}),
                "Extract the road mask.",
            ),
            call(
                "get_mask_geospatial_relationship",
                json!({"mask_a": "mask-1", "mask_b": "mask-2"}),
                "Check the two masks for overlap.",
            ),
        ],
    );

    // --- spatial navigation bases and crops --------------------------------
    let nav = spec.nav_base_dim.max(2 * dim);
    let nav_loc = b.jitter((35.6, 139.7));

    // base 1: pan right reveals the third ship
    let base1_spec = vec![
        object("ship", 110, 100, 130, 120),
        object("ship", 140, 150, 160, 170),
        object("ship", 215, 130, 235, 150),
    ];
    let base1_img = b.optical_image(nav, &base1_spec);
    let base1 = b.push_raster(&base1_img, Modality::OpticalRgb, Some(nav_loc), None, None, None)?;
    b.annotate(&base1, &base1_spec);
    let crop1_img = {
        let mut p = crate::raster::crop_aoi(
            &base1_img,
            crate::raster::Aoi::new(96.0 / nav as f64, 64.0 / nav as f64, 224.0 / nav as f64, 192.0 / nav as f64)
                .expect("window aoi"),
        )
        .expect("crop")
        .patch;
        p.provenance = None;
        p
    };
    let crop1 = b.push_raster(
        &crop1_img,
        Modality::OpticalRgb,
        Some(nav_loc),
        None,
        None,
        Some(BaseImageRef {
            record_id: base1.clone(),
            offset_x: 96,
            offset_y: 64,
        }),
    )?;
    b.task(
        EoTask::SpatialNavigation,
        DatasetFamily::Fair1m,
        "How many distinct ships are visible in this area? Move the view right if objects are cut off at the edge.",
        &[&crop1],
        Some("3".to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": crop1, "target": "ship"}),
                "Detect ships in the initial view; one is cut at the right edge.",
            ),
            call(
                "move_right_optical_image",
                json!({"image": crop1}),
                "Shift the view right to see the truncated ship fully.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-1", "target": "ship"}),
                "Confirm the third ship in the shifted view.",
            ),
        ],
    );

    // zoom task on base 1: a 64x64 window that doubles to show two ships
    let crop3_img = {
        let mut p = crate::raster::crop_aoi(
            &base1_img,
            crate::raster::Aoi::new(96.0 / nav as f64, 96.0 / nav as f64, 160.0 / nav as f64, 160.0 / nav as f64)
                .expect("window aoi"),
        )
        .expect("crop")
        .patch;
        p.provenance = None;
        p
    };
    let crop3 = b.push_raster(
        &crop3_img,
        Modality::OpticalRgb,
        Some(nav_loc),
        None,
        None,
        Some(BaseImageRef {
            record_id: base1.clone(),
            offset_x: 96,
            offset_y: 96,
        }),
    )?;
    b.task(
        EoTask::SpatialNavigation,
        DatasetFamily::Fair1m,
        "Widen the view around this crop and count the ships visible in the expanded area.",
        &[&crop3],
        Some("2".to_string()),
        None,
        vec![
            call(
                "zoom_out_optical_image",
                json!({"image": crop3}),
                "Expand the visible area around the crop.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-1", "target": "ship"}),
                "Count ships in the expanded view.",
            ),
        ],
    );

    // base 2: one pan down reveals the third car
    let base2_spec = vec![
        object("car", 100, 20, 120, 36),
        object("car", 140, 80, 160, 96),
        object("car", 110, 150, 130, 166),
    ];
    let base2_img = b.optical_image(nav, &base2_spec);
    let base2 = b.push_raster(&base2_img, Modality::OpticalRgb, Some(nav_loc), None, None, None)?;
    b.annotate(&base2, &base2_spec);
    let crop2_img = {
        let mut p = crate::raster::crop_aoi(
            &base2_img,
            crate::raster::Aoi::new(64.0 / nav as f64, 0.0, 192.0 / nav as f64, 128.0 / nav as f64)
                .expect("window aoi"),
        )
        .expect("crop")
        .patch;
        p.provenance = None;
        p
    };
    let crop2 = b.push_raster(
        &crop2_img,
        Modality::OpticalRgb,
        Some(nav_loc),
        None,
        None,
        Some(BaseImageRef {
            record_id: base2.clone(),
            offset_x: 64,
            offset_y: 0,
        }),
    )?;
    b.task(
        EoTask::SpatialNavigation,
        DatasetFamily::Fair1m,
        "How many distinct cars are in this area? Move the view down if needed to check the edge.",
        &[&crop2],
        Some("3".to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": crop2, "target": "car"}),
                "Detect cars in the initial view.",
            ),
            call(
                "move_down_optical_image",
                json!({"image": crop2}),
                "Shift downward to reveal anything below the view.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-1", "target": "car"}),
                "Detect cars in the shifted view and merge the counts.",
            ),
        ],
    );

    // base 3: two pans down, four cars along the column
    let base3_spec = vec![
        object("car", 80, 20, 100, 36),
        object("car", 150, 70, 170, 86),
        object("car", 100, 150, 120, 166),
        object("car", 140, 215, 160, 231),
    ];
    let base3_img = b.optical_image(nav, &base3_spec);
    let base3 = b.push_raster(&base3_img, Modality::OpticalRgb, Some(nav_loc), None, None, None)?;
    b.annotate(&base3, &base3_spec);
    let crop5_img = {
        let mut p = crate::raster::crop_aoi(
            &base3_img,
            crate::raster::Aoi::new(64.0 / nav as f64, 0.0, 192.0 / nav as f64, 128.0 / nav as f64)
                .expect("window aoi"),
        )
        .expect("crop")
        .patch;
        p.provenance = None;
        p
    };
    let crop5 = b.push_raster(
        &crop5_img,
        Modality::OpticalRgb,
        Some(nav_loc),
        None,
        None,
        Some(BaseImageRef {
            record_id: base3.clone(),
            offset_x: 64,
            offset_y: 0,
        }),
    )?;
    b.task(
        EoTask::SpatialNavigation,
        DatasetFamily::Fair1m,
        "Count all distinct cars along this strip, moving the view down until the bottom of the area.",
        &[&crop5],
        Some("4".to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": crop5, "target": "car"}),
                "Detect cars in the starting view.",
            ),
            call(
                "move_down_optical_image",
                json!({"image": crop5}),
                "Advance one step down the strip.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-1", "target": "car"}),
                "Detect cars in the middle view.",
            ),
            call(
                "move_down_optical_image",
                json!({"image": "patch-1"}),
                "Advance to the bottom of the strip.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": "patch-2", "target": "car"}),
                "Detect cars in the bottom view and merge distinct counts.",
            ),
        ],
    );

    // --- optical temporal sequence -----------------------------------------
    let len = spec.optical_sequence_len;
    let fdim = spec.frame_dim.max(64);
    let seq_id = b.next_id("seq");
    let seq_loc = b.jitter((-33.9, 18.4));
    let slot = |i: u32| -> (u32, u32, u32, u32) {
        let col = i % 3;
        let row = i / 3;
        (8 + col * 32, 8 + row * 32, 28 + col * 32, 24 + row * 32)
    };
    let mut frame_ids = Vec::new();
    for i in 0..len {
        let count = i + 1;
        let objects: Vec<Object> = (0..count)
            .map(|j| {
                let (x0, y0, x1, y1) = slot(j);
                object("ship", x0.min(fdim - 24), y0.min(fdim - 20), x1.min(fdim - 4), y1.min(fdim - 4))
            })
            .collect();
        let img = b.optical_image(fdim, &objects);
        let when = Utc
            .with_ymd_and_hms(2019, 3, 1, 10, 0, 0)
            .unwrap()
            + chrono::Duration::days(107 * i as i64);
        let id = b.push_raster(
            &img,
            Modality::OpticalRgb,
            Some(seq_loc),
            Some(when),
            Some((&seq_id, i)),
            None,
        )?;
        b.annotate(&id, &objects);
        frame_ids.push(id);
    }
    let mid = &frame_ids[(len / 2) as usize];
    let first = &frame_ids[0];
    let last = &frame_ids[(len - 1) as usize];
    b.task(
        EoTask::TemporalReasoning,
        DatasetFamily::Fmow,
        "Comparing the earliest and the latest frames of this location, did the number of ships increase or decrease?",
        &[mid],
        Some("increased".to_string()),
        None,
        vec![
            call(
                "get_optical_image_list",
                json!({"image": mid}),
                "List the frames of this sequence in time order.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": first, "target": "ship"}),
                "Count ships in the earliest frame.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": last, "target": "ship"}),
                "Count ships in the latest frame.",
            ),
        ],
    );
    b.task(
        EoTask::TemporalReasoning,
        DatasetFamily::Fmow,
        "How many frames are available for this location?",
        &[mid],
        Some(len.to_string()),
        None,
        vec![call(
            "get_optical_image_list",
            json!({"image": mid}),
            "The frame listing gives the count directly.",
        )],
    );
    let next_of_mid = &frame_ids[(len / 2 + 1) as usize];
    let next_count = (len / 2 + 2).to_string();
    b.task(
        EoTask::TemporalReasoning,
        DatasetFamily::Fmow,
        "How many ships are visible in the frame captured immediately after this one?",
        &[mid],
        Some(next_count),
        None,
        vec![
            call(
                "get_next_optical_image",
                json!({"image": mid}),
                "Fetch the next frame in the sequence.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": next_of_mid, "target": "ship"}),
                "Count ships in that frame.",
            ),
        ],
    );

    // --- disaster pre/post pair ---------------------------------------------
    let pre_spec = vec![
        object("building", scale(10), scale(10), scale(34), scale(30)),
        object("building", scale(50), scale(10), scale(74), scale(30)),
        object("building", scale(90), scale(10), scale(114), scale(30)),
        object("building", scale(10), scale(60), scale(34), scale(80)),
        object("building", scale(50), scale(60), scale(74), scale(80)),
        object("building", scale(90), scale(60), scale(114), scale(80)),
    ];
    let post_spec = vec![
        damaged("building", scale(10), scale(10), scale(34), scale(30), "no-damage"),
        damaged("building", scale(50), scale(10), scale(74), scale(30), "no-damage"),
        damaged("building", scale(10), scale(60), scale(34), scale(80), "minor-damage"),
        damaged("building", scale(90), scale(60), scale(114), scale(80), "no-damage"),
    ];
    let xbd_loc = b.jitter((29.9, -90.1));
    let xbd_seq = b.next_id("seq");
    let pre_img = b.optical_image(dim, &pre_spec);
    let pre_when = Utc.with_ymd_and_hms(2021, 8, 20, 15, 0, 0).unwrap();
    let pre = b.push_raster(
        &pre_img,
        Modality::OpticalRgb,
        Some(xbd_loc),
        Some(pre_when),
        Some((&xbd_seq, 0)),
        None,
    )?;
    b.annotate(&pre, &pre_spec);
    let mut post_img = b.optical_image(dim, &post_spec);
    // razed footprints show rubble where buildings 3 and 5 used to stand
    post_img.fill_rect(scale(90), scale(10), scale(24), scale(20), &RUBBLE);
    post_img.fill_rect(scale(50), scale(60), scale(24), scale(20), &RUBBLE);
    let post_when = Utc.with_ymd_and_hms(2021, 9, 5, 15, 0, 0).unwrap();
    let post = b.push_raster(
        &post_img,
        Modality::OpticalRgb,
        Some(xbd_loc),
        Some(post_when),
        Some((&xbd_seq, 1)),
        None,
    )?;
    b.annotate(&post, &post_spec);

    let destroyed = pre_spec.len() - post_spec.len();
    b.task(
        EoTask::DisasterImpact,
        DatasetFamily::Xbd,
        "Comparing the pre-disaster and post-disaster images, how many buildings were destroyed?",
        &[&pre, &post],
        Some(destroyed.to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": pre, "target": "building"}),
                "Count buildings before the event.",
            ),
            call(
                "get_object_bbox_by_optical_image",
                json!({"image": post, "target": "building"}),
                "Count buildings still standing after the event.",
            ),
            call(
                "basic_calculator",
                json!({"expression": format!("{} - {}", pre_spec.len(), post_spec.len())}),
                "The difference is the number of destroyed buildings.",
            ),
        ],
    );
    b.task(
        EoTask::DisasterImpact,
        DatasetFamily::Xbd,
        "What is the most common damage state among the buildings still standing in this post-disaster image?",
        &[&post],
        Some("no-damage".to_string()),
        None,
        vec![call(
            "analyze_optical_scene",
            json!({"image": post}),
            "The scene summary lists the damage breakdown per category.",
        )],
    );
    b.task(
        EoTask::DisasterImpact,
        DatasetFamily::Xbd,
        "Did any standing building in this post-disaster image sustain damage? Answer yes or no.",
        &[&post],
        Some("yes".to_string()),
        None,
        vec![call(
            "analyze_optical_scene",
            json!({"image": post}),
            "Check the damage breakdown for non-intact buildings.",
        )],
    );

    // --- cross-modal optical/SAR pairs ---------------------------------------
    let pair_specs: [Vec<Object>; 2] = [
        vec![
            object("bridge", 8, 30, 60, 44),
            object("bridge", 30, 60, 82, 74),
            object("ship", 70, 8, 90, 24),
        ],
        vec![
            object("ship", 20, 20, 44, 40),
            object("bridge", 50, 60, 90, 74),
        ],
    ];
    let pdim = spec.frame_dim.max(96);
    let mut pair_ids = Vec::new();
    for i in 0..spec.pair_count.min(2) as usize {
        let objects = &pair_specs[i];
        let loc = b.jitter((1.35, 103.8));
        let when = Utc.with_ymd_and_hms(2022, 3 + i as u32, 10, 6, 0, 0).unwrap();
        let optical_img = b.optical_image(pdim, objects);
        let optical = b.push_raster(&optical_img, Modality::OpticalRgb, Some(loc), Some(when), None, None)?;
        let sar_img = b.sar_image(pdim, objects);
        let sar = b.push_raster(&sar_img, Modality::Sar, Some(loc), Some(when), None, None)?;
        b.link_pair(&optical, &sar);
        b.annotate(&optical, objects);
        b.annotate(&sar, objects);
        pair_ids.push((optical, sar));
    }
    if let Some((_, sar1)) = pair_ids.first() {
        let bridges = pair_specs[0].iter().filter(|o| o.label == "bridge").count();
        b.task(
            EoTask::VisualUnderstanding,
            DatasetFamily::M4Sar,
            "How many bridges are present here? Use the aligned optical companion to verify the SAR returns.",
            &[sar1],
            Some(bridges.to_string()),
            None,
            vec![
                call(
                    "get_optical_from_sar",
                    json!({"image": sar1}),
                    "Fetch the aligned optical view as setup.",
                ),
                call(
                    "get_object_bbox_by_optical_sar_image",
                    json!({"image": sar1, "target": "bridge"}),
                    "Keep only bridge boxes consistent across both modalities.",
                ),
            ],
        );
    }
    if let Some((optical2, _)) = pair_ids.get(1) {
        let pair_ships = pair_specs[1].iter().filter(|o| o.label == "ship").count();
        b.task(
            EoTask::VisualUnderstanding,
            DatasetFamily::M4Sar,
            "How many ships are confirmed by both the optical and the SAR view of this location?",
            &[optical2],
            Some(pair_ships.to_string()),
            None,
            vec![
                call(
                    "get_sar_from_optical",
                    json!({"image": optical2}),
                    "Fetch the aligned SAR view as setup.",
                ),
                call(
                    "get_object_bbox_by_optical_sar_image",
                    json!({"image": optical2, "target": "ship"}),
                    "Count cross-modal consistent ship boxes.",
                ),
            ],
        );
    }

    // --- standalone SAR records ----------------------------------------------
    let sar_a_spec = vec![
        object("oil tank", 10, 10, 30, 30),
        object("oil tank", 50, 10, 70, 30),
        object("oil tank", 90, 10, 110, 30),
        object("bridge", 10, 60, 60, 74),
        object("bridge", 70, 90, 120, 104),
    ];
    let sar_a_img = b.sar_image(dim, &sar_a_spec);
    let sar_loc = b.jitter((25.0, 55.3));
    let sar_a = b.push_raster(&sar_a_img, Modality::Sar, Some(sar_loc), None, None, None)?;
    b.annotate(&sar_a, &sar_a_spec);
    let sar_b_spec = vec![
        object("ship", 20, 20, 50, 40),
        object("ship", 70, 60, 100, 80),
    ];
    let sar_b_img = b.sar_image(dim, &sar_b_spec);
    let sar_loc_b = b.jitter((-23.5, -46.6));
    let sar_b = b.push_raster(&sar_b_img, Modality::Sar, Some(sar_loc_b), None, None, None)?;
    b.annotate(&sar_b, &sar_b_spec);

    let tanks = sar_a_spec.iter().filter(|o| o.label == "oil tank").count();
    let sar_bridges = sar_a_spec.iter().filter(|o| o.label == "bridge").count();
    b.task(
        EoTask::ObjectCounting,
        DatasetFamily::Sardet100k,
        "How many oil tanks are visible in this SAR image?",
        &[&sar_a],
        Some(tanks.to_string()),
        None,
        vec![call(
            "get_object_bbox_by_sar_image",
            json!({"image": sar_a, "target": "oil tank"}),
            "Detect the oil tanks in the SAR image.",
        )],
    );
    b.task(
        EoTask::ObjectCounting,
        DatasetFamily::Sardet100k,
        "In this SAR image, how many more oil tanks than bridges are there?",
        &[&sar_a],
        Some((tanks - sar_bridges).to_string()),
        None,
        vec![
            call(
                "get_object_bbox_by_sar_image",
                json!({"image": sar_a, "target": "oil tank"}),
                "Count the oil tanks.",
            ),
            call(
                "get_object_bbox_by_sar_image",
                json!({"image": sar_a, "target": "bridge"}),
                "Count the bridges.",
            ),
            call(
                "basic_calculator",
                json!({"expression": format!("{tanks} - {sar_bridges}")}),
                "Take the difference of the two counts.",
            ),
        ],
    );

    // --- multispectral scene groups -------------------------------------------
    let sdim = spec.scene_dim.max(16);
    let slen = spec.scene_sequence_len;
    let ms_seq = b.next_id("seq");
    let ms_loc = b.jitter((45.4, -75.7));
    let water_cols = sdim / 4;
    let mut scene_ids = Vec::new();
    for i in 0..slen {
        // vegetation share grows with every capture
        let veg_cols = sdim * (i + 1) / (slen + 1);
        let when = Utc
            .with_ymd_and_hms(2020, 4, 1, 11, 0, 0)
            .unwrap()
            + chrono::Duration::days(118 * i as i64);
        let id = b.sentinel_scene(sdim, veg_cols, water_cols, when, (&ms_seq, i), ms_loc)?;
        scene_ids.push(id);
    }
    let current = scene_ids[(slen / 2) as usize].clone();
    b.task(
        EoTask::TemporalReasoning,
        DatasetFamily::Multispectral,
        "Between the previous multispectral capture and this one, did the vegetation extent increase, decrease, or stay stable?",
        &[&current],
        None,
        Some(ResolutionRule::IndexTrend {
            scene: current.clone(),
            index: IndexKind::Ndvi,
            epsilon: 0.02,
            increased: "increased".to_string(),
            decreased: "decreased".to_string(),
            stable: "stable".to_string(),
        }),
        vec![
            call(
                "get_previous_multispectral",
                json!({"image": current}),
                "Fetch the capture right before this one.",
            ),
            call(
                "compute_ndvi_by_multispectral",
                json!({"scene": scene_ids[(slen / 2 - 1) as usize]}),
                "Vegetation statistics of the previous capture.",
            ),
            call(
                "compute_ndvi_by_multispectral",
                json!({"scene": current}),
                "Vegetation statistics of the current capture.",
            ),
        ],
    );
    let veg_cols_current = sdim * (slen / 2 + 1) / (slen + 1);
    let veg_fraction = veg_cols_current as f64 / sdim as f64;
    b.task(
        EoTask::TemporalReasoning,
        DatasetFamily::Multispectral,
        "What fraction of this multispectral scene is vegetated? Answer with two decimals.",
        &[&current],
        Some(format!("{veg_fraction:.2}")),
        None,
        vec![call(
            "compute_vegetation_mask_by_multispectral",
            json!({"scene": current}),
            "The vegetation mask coverage gives the fraction directly.",
        )],
    );
    let water_fraction = water_cols as f64 / sdim as f64;
    let dominant_theme = if veg_fraction > water_fraction {
        "vegetation"
    } else {
        "water"
    };
    b.task(
        EoTask::GeospatialReasoning,
        DatasetFamily::Multispectral,
        "Which theme covers more of this scene, water or vegetation?",
        &[&current],
        Some(dominant_theme.to_string()),
        None,
        vec![
            call(
                "compute_vegetation_mask_by_multispectral",
                json!({"scene": current}),
                "Vegetation coverage fraction.",
            ),
            call(
                "compute_water_mask_by_multispectral",
                json!({"scene": current}),
                "Water coverage fraction, for comparison.",
            ),
        ],
    );

    if spec.scene_band_plan.len() > 1 {
        let ldim = (sdim / 2).max(16);
        let l_seq = b.next_id("seq");
        let l_loc = b.jitter((41.9, 12.5));
        let mut landsat_ids = Vec::new();
        for (i, nir) in [0.3f32, 0.6].iter().enumerate() {
            let when = Utc
                .with_ymd_and_hms(2021, 1, 10, 9, 30, 0)
                .unwrap()
                + chrono::Duration::days(130 * i as i64);
            let id = b.landsat_scene(ldim, *nir, when, (&l_seq, i as u32), l_loc)?;
            landsat_ids.push(id);
        }
        b.task(
            EoTask::TemporalReasoning,
            DatasetFamily::Multispectral,
            "How many multispectral observations are available for this location?",
            &[&landsat_ids[1]],
            Some(landsat_ids.len().to_string()),
            None,
            vec![call(
                "get_multispectral_list",
                json!({"image": landsat_ids[1]}),
                "The observation listing gives the count.",
            )],
        );
    }

    // --- extra geolocated distractors ------------------------------------------
    for i in 0..spec.extra_optical {
        let label = spec.object_vocab[(i as usize) % spec.object_vocab.len()].clone();
        let img = b.optical_image(16, &[object(&label, 2, 2, 10, 10)]);
        let loc = b.jitter((10.0 + i as f64 * 7.0 - 30.0, i as f64 * 23.0 - 60.0));
        b.push_raster(&img, Modality::OpticalRgb, Some(loc), None, None, None)?;
    }
    for i in 0..spec.extra_sar {
        let img = b.sar_image(16, &[object("ship", 2, 2, 10, 10)]);
        let loc = b.jitter((-40.0 + i as f64 * 11.0, 140.0 - i as f64 * 17.0));
        b.push_raster(&img, Modality::Sar, Some(loc), None, None, None)?;
    }

    // --- persist ------------------------------------------------------------------
    crate::episode::save_jsonl(&out_dir.join(MANIFEST_FILE), &b.records)
        .map_err(|e| HarnessError::Fixture(e.to_string()))?;
    b.annotations
        .save_jsonl(&out_dir.join(ANNOTATIONS_FILE))
        .map_err(|e| HarnessError::Fixture(e.to_string()))?;
    crate::episode::save_tasks(&out_dir.join(TASKS_FILE), &b.tasks)
        .map_err(|e| HarnessError::Fixture(e.to_string()))?;
    crate::episode::save_jsonl(&out_dir.join(SCRIPTS_FILE), &b.scripts)
        .map_err(|e| HarnessError::Fixture(e.to_string()))?;

    let optical = b
        .records
        .iter()
        .filter(|r| r.modality == Modality::OpticalRgb)
        .count();
    let sar = b.records.iter().filter(|r| r.modality == Modality::Sar).count();
    let scenes = b
        .records
        .iter()
        .filter(|r| r.modality == Modality::MultispectralScene)
        .count();
    Ok(FixtureSummary {
        record_count: b.records.len(),
        task_count: b.tasks.len(),
        optical,
        sar,
        scenes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalake::Index;

    #[test]
    fn fixture_generation_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let spec = FixtureSpec::default();
        let a = gen_fixtures(&spec, dir_a.path()).unwrap();
        let b = gen_fixtures(&spec, dir_b.path()).unwrap();
        assert_eq!(a, b);
        for file in [MANIFEST_FILE, ANNOTATIONS_FILE, TASKS_FILE, SCRIPTS_FILE] {
            let bytes_a = std::fs::read(dir_a.path().join(file)).unwrap();
            let bytes_b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{file} differs");
        }
    }

    #[test]
    fn fixture_index_builds_clean_and_covers_families() {
        let dir = tempfile::tempdir().unwrap();
        let summary = gen_fixtures(&FixtureSpec::default(), dir.path()).unwrap();
        assert!(summary.task_count >= 20);
        let report = Index::build_from_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(report.rejected.is_empty(), "{:?}", report.rejected);
        assert_eq!(report.index.counts().total(), summary.record_count);
        // summary counts double as an independent modality scan
        assert_eq!(report.index.counts().optical, summary.optical);
        assert_eq!(report.index.counts().sar, summary.sar);
        assert_eq!(report.index.counts().scenes, summary.scenes);

        let tasks = crate::episode::load_tasks(&dir.path().join(TASKS_FILE)).unwrap();
        let mut families: std::collections::BTreeSet<EoTask> = std::collections::BTreeSet::new();
        for task in &tasks {
            families.insert(task.eo_task);
            assert!(task.reference_call_count >= 1);
            assert!(task.reference_call_count <= 15, "{}", task.task_id);
            for record in &task.start_records {
                assert!(report.index.get(record).is_some(), "missing {record}");
            }
        }
        assert_eq!(families.len(), 6);
    }

    #[test]
    fn planted_scene_regions_trip_only_their_index() {
        let dir = tempfile::tempdir().unwrap();
        gen_fixtures(&FixtureSpec::default(), dir.path()).unwrap();
        let report = Index::build_from_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        let scene_record = report
            .index
            .records()
            .find(|r| r.modality == Modality::MultispectralScene && r.sensor == "sentinel2a")
            .unwrap();
        let scene = crate::spectral::load_bands(
            dir.path(),
            Platform::Sentinel2a,
            scene_record.capture_time,
            scene_record.gsd_m,
            &scene_record.band_files,
        )
        .unwrap();
        let veg = crate::spectral::thematic_mask(&scene, crate::spectral::Theme::Vegetation, None)
            .unwrap();
        let water =
            crate::spectral::thematic_mask(&scene, crate::spectral::Theme::Water, None).unwrap();
        // themed regions are disjoint by construction
        assert_eq!(veg.intersection_count(&water), 0);
        assert!(veg.count_ones() > 0);
        assert!(water.count_ones() > 0);
    }
}
