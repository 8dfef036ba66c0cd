//! Tool-call dispatch against the data lake, raster, and spectral engines.
//!
//! Every failure becomes an error [`Observation`] with a machine-readable
//! code; tool execution never aborts an episode.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::Value;

use super::calc::evaluate_expression;
use super::detect::{noisy_boxes, verified_boxes, NoiseParams};
use super::filter::{normalize_label, SynonymTable};
use super::registry::{inverse_rename_tool_name, ToolRegistry};
use super::{
    AnnotatedObject, AnnotationStore, ExecutionMode, IndexStatsPayload, MaskSummary, Observation,
    PatchSummary, Payload, RecordSummary, ResponseMode, SceneSummary, ToolCall,
};
use crate::datalake::{DataLakeRecord, Index, Modality, TemporalDirection};
use crate::raster::{
    bbox_relationship, crop_aoi, mask_relationship, normalize_bboxes, pan, read_patch, zoom_out,
    Aoi, BBox, BinaryMask, PanDirection, Provenance, RasterError, RasterPatch, RelationOperand,
};
use crate::spectral::{
    compute_index, load_bands, thematic_mask, theme_index_lookup, BandSet, IndexKind, Platform,
    SpectralError, Theme,
};

/// Immutable environment shared by every episode: the index, the storage
/// root, ground truth, the tool registry, and the filter/noise configuration.
#[derive(Debug)]
pub struct EnvData {
    pub index: Arc<Index>,
    pub root: PathBuf,
    pub annotations: Arc<AnnotationStore>,
    pub registry: Arc<ToolRegistry>,
    pub synonyms: Arc<SynonymTable>,
    pub noise: NoiseParams,
    /// Minimum cross-modal IoU for the paired optical/SAR detection tool.
    pub crossmodal_iou: f64,
}

impl EnvData {
    pub fn new(index: Index, root: PathBuf, annotations: AnnotationStore) -> Self {
        Self {
            index: Arc::new(index),
            root,
            annotations: Arc::new(annotations),
            registry: Arc::new(ToolRegistry::new()),
            synonyms: Arc::new(SynonymTable::builtin()),
            noise: NoiseParams::default(),
            crossmodal_iou: 0.5,
        }
    }

    pub fn with_noise(mut self, noise: NoiseParams) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_synonyms(mut self, table: SynonymTable) -> Self {
        self.synonyms = Arc::new(table);
        self
    }

    /// Loads the band set of a multispectral record straight from storage,
    /// outside any episode (deferred-answer resolution, audits).
    pub fn load_scene(&self, record_id: &str) -> Result<BandSet, String> {
        let record = self
            .index
            .get(record_id)
            .ok_or_else(|| format!("no record {record_id}"))?;
        if record.modality != Modality::MultispectralScene {
            return Err(format!("{record_id} is not a multispectral scene"));
        }
        let platform: Platform = record.sensor.parse().map_err(|e: SpectralError| e.to_string())?;
        load_bands(
            &self.root,
            platform,
            record.capture_time,
            record.gsd_m,
            &record.band_files,
        )
        .map_err(|e| e.to_string())
    }
}

struct Failure {
    code: &'static str,
    message: String,
}

type ToolResult<T> = Result<T, Failure>;

fn fail(code: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn raster_failure(err: RasterError) -> Failure {
    let code = match &err {
        RasterError::DegenerateAoi => "degenerate-aoi",
        RasterError::AoiOutOfRange => "aoi-out-of-range",
        RasterError::MissingProvenance => "missing-provenance",
        RasterError::ProvenanceOutOfBounds => "invalid-provenance",
        RasterError::InvalidZoomFactor(_) => "invalid-zoom-factor",
        RasterError::NonPositiveDims => "non-positive-dims",
        RasterError::InvalidBox(_) => "invalid-box",
        RasterError::DimensionMismatch { .. } => "dimension-mismatch",
        RasterError::Io(_) | RasterError::Format(_) => "io-error",
        _ => "raster-error",
    };
    fail(code, err.to_string())
}

fn spectral_failure(err: SpectralError) -> Failure {
    let code = match &err {
        SpectralError::MissingBand { .. } => "missing-band",
        SpectralError::UnknownPlatform(_) => "unknown-platform",
        SpectralError::UnknownTheme { .. } => "unknown-theme",
        SpectralError::Raster(_) | SpectralError::Descriptor { .. } => "io-error",
        _ => "spectral-error",
    };
    fail(code, err.to_string())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-call RNG seed: a pure mix of the episode seed and the call index, so
/// replays are byte-identical.
pub(crate) fn call_seed(episode_seed: u64, call_index: u32) -> u64 {
    splitmix64(episode_seed.wrapping_add(splitmix64(call_index as u64 + 1)))
}

/// An image argument resolved to pixels plus its identity in the root image
/// whose ground truth applies.
struct ResolvedImage {
    patch: RasterPatch,
    root_id: String,
    /// Absolute window `(x, y, w, h)` inside the root image.
    window: (u32, u32, u32, u32),
    modality: Modality,
}

/// Per-episode mutable tool-execution state. Confined to one episode; shares
/// only the immutable [`EnvData`] with other episodes.
#[derive(Debug)]
pub struct EpisodeContext {
    env: Arc<EnvData>,
    mode: ExecutionMode,
    patches: BTreeMap<String, RasterPatch>,
    patch_modality: BTreeMap<String, Modality>,
    masks: BTreeMap<String, BinaryMask>,
    scenes: BTreeMap<String, BandSet>,
    record_pixels: BTreeMap<String, RasterPatch>,
    record_scenes: BTreeMap<String, BandSet>,
    next_handle: u32,
}

impl EpisodeContext {
    pub fn new(env: Arc<EnvData>, mode: ExecutionMode) -> Self {
        Self {
            env,
            mode,
            patches: BTreeMap::new(),
            patch_modality: BTreeMap::new(),
            masks: BTreeMap::new(),
            scenes: BTreeMap::new(),
            record_pixels: BTreeMap::new(),
            record_scenes: BTreeMap::new(),
            next_handle: 0,
        }
    }

    pub fn env(&self) -> &EnvData {
        &self.env
    }

    pub fn mode(&self) -> ExecutionMode {
        self.mode
    }

    pub fn mask(&self, handle: &str) -> Option<&BinaryMask> {
        self.masks.get(handle)
    }

    pub fn patch(&self, handle: &str) -> Option<&RasterPatch> {
        self.patches.get(handle)
    }

    /// Executes one call. Unknown tools, malformed arguments, and backend
    /// failures all surface as error observations.
    pub fn execute(&mut self, call: &ToolCall) -> Observation {
        let canonical = if self.mode.rename {
            inverse_rename_tool_name(&call.name).name
        } else {
            call.name.clone()
        };
        let Some(schema) = self.env.registry.get(&canonical).cloned() else {
            return Observation::error("unknown-tool", format!("no tool named {}", call.name));
        };
        let args = match parse_arguments(&call.arguments) {
            Ok(args) => args,
            Err(f) => return Observation::error(f.code, f.message),
        };
        for param in &schema.params {
            if param.required && !args.contains_key(param.name) {
                return Observation::error(
                    "illegal-arguments",
                    format!("missing required argument {}", param.name),
                );
            }
        }
        let seed = call_seed(self.mode.seed, call.call_index);
        match self.dispatch(&canonical, &args, seed) {
            Ok(observation) => observation,
            Err(f) => Observation::error(f.code, f.message),
        }
    }

    fn dispatch(
        &mut self,
        name: &str,
        args: &serde_json::Map<String, Value>,
        seed: u64,
    ) -> ToolResult<Observation> {
        match name {
            "crop_optical_or_sar_image" => self.tool_crop_image(args),
            "crop_multispectral_image" => self.tool_crop_scene(args),
            "move_up_optical_image" => self.tool_pan(args, PanDirection::Up),
            "move_down_optical_image" => self.tool_pan(args, PanDirection::Down),
            "move_left_optical_image" => self.tool_pan(args, PanDirection::Left),
            "move_right_optical_image" => self.tool_pan(args, PanDirection::Right),
            "zoom_out_optical_image" => self.tool_zoom_out(args),
            "get_multispectral_list" => self.tool_temporal_list(args, Modality::MultispectralScene),
            "get_optical_image_list" => self.tool_temporal_list(args, Modality::OpticalRgb),
            "get_next_multispectral" => self.tool_temporal_neighbor(
                args,
                Modality::MultispectralScene,
                TemporalDirection::Next,
            ),
            "get_previous_multispectral" => self.tool_temporal_neighbor(
                args,
                Modality::MultispectralScene,
                TemporalDirection::Previous,
            ),
            "get_next_optical_image" => {
                self.tool_temporal_neighbor(args, Modality::OpticalRgb, TemporalDirection::Next)
            }
            "get_previous_optical_image" => {
                self.tool_temporal_neighbor(args, Modality::OpticalRgb, TemporalDirection::Previous)
            }
            "get_optical_from_sar" => self.tool_companion(args, Modality::Sar),
            "get_sar_from_optical" => self.tool_companion(args, Modality::OpticalRgb),
            "analyze_optical_scene" => self.tool_analyze_scene(args),
            "describe_optical_object" => self.tool_describe_object(args),
            "get_object_bbox_by_optical_image" => self.tool_detect_optical(args, seed),
            "get_object_bbox_by_sar_image" => self.tool_detect_sar(args),
            "get_object_bbox_by_optical_sar_image" => self.tool_detect_crossmodal(args),
            "get_building_mask_by_optical_image" => self.tool_object_mask(args, Some("building"), seed),
            "get_road_mask_by_optical_image" => self.tool_object_mask(args, Some("road"), seed),
            "get_object_mask_by_optical_image" => self.tool_object_mask(args, None, seed),
            "compute_urban_mask_by_multispectral" => self.tool_theme_mask(args, Theme::Urban),
            "compute_vegetation_mask_by_multispectral" => {
                self.tool_theme_mask(args, Theme::Vegetation)
            }
            "compute_water_mask_by_multispectral" => self.tool_theme_mask(args, Theme::Water),
            "compute_ndvi_by_multispectral" => self.tool_index(args, IndexKind::Ndvi),
            "compute_ndwi_by_multispectral" => self.tool_index(args, IndexKind::Ndwi),
            "compute_ndbi_by_multispectral" => self.tool_index(args, IndexKind::Ndbi),
            "compute_ndsi_by_multispectral" => self.tool_index(args, IndexKind::Ndsi),
            "theme_index_lookup" => self.tool_theme_lookup(args),
            "get_bbox_geospatial_relationship" => self.tool_bbox_relationship(args),
            "get_mask_geospatial_relationship" => self.tool_mask_relationship(args),
            "normalize_bounding_boxes" => self.tool_normalize_boxes(args),
            "basic_calculator" => self.tool_calculator(args),
            other => Err(fail("unknown-tool", format!("no tool named {other}"))),
        }
    }

    // ------------------------------------------------------------------
    // argument and resource resolution

    fn record(&self, id: &str) -> ToolResult<&DataLakeRecord> {
        self.env
            .index
            .get(id)
            .ok_or_else(|| fail("unknown-record", format!("no record {id}")))
    }

    fn load_record_pixels(&mut self, id: &str) -> ToolResult<RasterPatch> {
        if let Some(p) = self.record_pixels.get(id) {
            return Ok(p.clone());
        }
        let record = self.record(id)?.clone();
        let patch = read_patch(&self.env.root.join(&record.path))
            .map_err(|e| fail("io-error", format!("reading {}: {e}", record.record_id)))?;
        self.record_pixels.insert(id.to_string(), patch.clone());
        Ok(patch)
    }

    /// Follows crop-to-base references up to the root record and returns the
    /// root id plus the absolute offset of this record inside it.
    fn root_of(&self, id: &str) -> ToolResult<(String, u32, u32)> {
        let mut current = self.record(id)?;
        let (mut ox, mut oy) = (0u32, 0u32);
        for _ in 0..8 {
            match &current.base_image_id {
                None => return Ok((current.record_id.clone(), ox, oy)),
                Some(base) => {
                    ox += base.offset_x;
                    oy += base.offset_y;
                    current = self.record(&base.record_id)?;
                }
            }
        }
        Err(fail("invalid-provenance", "base image chain too deep"))
    }

    fn resolve_image(&mut self, id: &str) -> ToolResult<ResolvedImage> {
        if let Some(patch) = self.patches.get(id).cloned() {
            let prov = patch
                .provenance
                .clone()
                .ok_or_else(|| fail("missing-provenance", "patch handle lost its provenance"))?;
            let modality = self.patch_modality[id];
            return Ok(ResolvedImage {
                window: (prov.origin_x, prov.origin_y, patch.width(), patch.height()),
                root_id: prov.base_image_id,
                patch,
                modality,
            });
        }
        let record = self
            .env
            .index
            .get(id)
            .ok_or_else(|| fail("unknown-record", format!("no record or patch handle {id}")))?;
        if record.modality == Modality::MultispectralScene {
            return Err(fail(
                "wrong-modality",
                format!("{id} is a multispectral scene; pass it as a scene argument"),
            ));
        }
        let modality = record.modality;
        let (root_id, ox, oy) = self.root_of(id)?;
        let mut patch = self.load_record_pixels(id)?;
        patch.provenance = Some(Provenance {
            base_image_id: root_id.clone(),
            origin_x: ox,
            origin_y: oy,
        });
        Ok(ResolvedImage {
            window: (ox, oy, patch.width(), patch.height()),
            root_id,
            patch,
            modality,
        })
    }

    fn resolve_scene(&mut self, id: &str) -> ToolResult<BandSet> {
        if let Some(scene) = self.scenes.get(id) {
            return Ok(scene.clone());
        }
        if let Some(scene) = self.record_scenes.get(id) {
            return Ok(scene.clone());
        }
        let record = self
            .env
            .index
            .get(id)
            .ok_or_else(|| fail("unknown-record", format!("no record or scene handle {id}")))?
            .clone();
        if record.modality != Modality::MultispectralScene {
            return Err(fail(
                "wrong-modality",
                format!("{id} is not a multispectral scene"),
            ));
        }
        let platform: Platform = record
            .sensor
            .parse()
            .map_err(|e: SpectralError| fail("unknown-platform", e.to_string()))?;
        let scene = load_bands(
            &self.env.root,
            platform,
            record.capture_time,
            record.gsd_m,
            &record.band_files,
        )
        .map_err(spectral_failure)?;
        self.record_scenes.insert(id.to_string(), scene.clone());
        Ok(scene)
    }

    fn expect_modality(
        &self,
        image: &ResolvedImage,
        want: Modality,
        tool_hint: &str,
    ) -> ToolResult<()> {
        if image.modality != want {
            return Err(fail(
                "wrong-modality",
                format!(
                    "{tool_hint} expects a {want} image, got {}",
                    image.modality
                ),
            ));
        }
        Ok(())
    }

    /// Ground-truth objects visible in an absolute window of a root record,
    /// translated to window coordinates and clipped.
    fn annotation_in_window(
        &self,
        root_id: &str,
        window: (u32, u32, u32, u32),
    ) -> ToolResult<Vec<AnnotatedObject>> {
        let annotation = self
            .env
            .annotations
            .get(root_id)
            .ok_or_else(|| fail("no-ground-truth", format!("no annotation for {root_id}")))?;
        let (wx, wy, ww, wh) = window;
        let mut out = Vec::new();
        for object in &annotation.objects {
            let moved = object.bbox.translated(-(wx as f64), -(wy as f64));
            if let Some(clipped) = moved.clamped_to(ww, wh) {
                out.push(AnnotatedObject {
                    label: object.label.clone(),
                    bbox: clipped,
                    damage: object.damage.clone(),
                });
            }
        }
        Ok(out)
    }

    fn next_id(&mut self, prefix: &str) -> String {
        self.next_handle += 1;
        format!("{prefix}-{}", self.next_handle)
    }

    fn register_patch(&mut self, patch: RasterPatch, modality: Modality) -> PatchSummary {
        let id = self.next_id("patch");
        let summary = PatchSummary {
            patch_id: id.clone(),
            width: patch.width(),
            height: patch.height(),
            channels: patch.channels(),
            base_image_id: patch.provenance.as_ref().map(|p| p.base_image_id.clone()),
            origin: patch.provenance.as_ref().map(|p| (p.origin_x, p.origin_y)),
            clamped: None,
        };
        self.patch_modality.insert(id.clone(), modality);
        self.patches.insert(id, patch);
        summary
    }

    fn register_mask(&mut self, mask: BinaryMask) -> MaskSummary {
        let id = self.next_id("mask");
        let foreground = mask.count_ones();
        let total = mask.width() as usize * mask.height() as usize;
        let summary = MaskSummary {
            mask_id: id.clone(),
            width: mask.width(),
            height: mask.height(),
            foreground_pixels: foreground,
            foreground_fraction: foreground as f64 / total as f64,
        };
        self.masks.insert(id, mask);
        summary
    }

    fn register_scene(&mut self, scene: BandSet) -> SceneSummary {
        let id = self.next_id("scene");
        let (width, height) = scene.dims();
        let summary = SceneSummary {
            scene_id: id.clone(),
            platform: scene.platform().to_string(),
            width,
            height,
            bands: scene.band_names().map(str::to_string).collect(),
            capture_time: scene.capture_time,
        };
        self.scenes.insert(id, scene);
        summary
    }

    // ------------------------------------------------------------------
    // tools

    fn tool_crop_image(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        let aoi = aoi_from_args(args)?;
        let out = crop_aoi(&image.patch, aoi).map_err(raster_failure)?;
        let summary = self.register_patch(out.patch, image.modality);
        Ok(Observation::ok(
            Payload::Patch(summary.clone()),
            format!(
                "cropped to {}x{} px at ({}, {}) of {}",
                summary.width,
                summary.height,
                summary.origin.map_or(0, |o| o.0),
                summary.origin.map_or(0, |o| o.1),
                summary.base_image_id.as_deref().unwrap_or("input"),
            ),
        ))
    }

    fn tool_crop_scene(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let scene = self.resolve_scene(arg_str(args, "scene")?)?;
        let aoi = aoi_from_args(args)?;
        let cropped = scene.crop(aoi).map_err(spectral_failure)?;
        let summary = self.register_scene(cropped);
        Ok(Observation::ok(
            Payload::Scene(summary.clone()),
            format!(
                "cropped scene to {}x{} px, {} bands",
                summary.width,
                summary.height,
                summary.bands.len()
            ),
        ))
    }

    fn tool_pan(&mut self, args: &ArgMap, direction: PanDirection) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "pan")?;
        let step = arg_opt_f64(args, "step_frac")?;
        let base = self.load_record_pixels(&image.root_id)?;
        let out = pan(&image.patch, &base, direction, step).map_err(raster_failure)?;
        let clamped = out.clamped;
        let mut summary = self.register_patch(out.patch, image.modality);
        summary.clamped = Some(clamped);
        let note = if clamped { " (clamped at base edge)" } else { "" };
        Ok(Observation::ok(
            Payload::Patch(summary.clone()),
            format!(
                "view moved to ({}, {}){note}",
                summary.origin.unwrap().0,
                summary.origin.unwrap().1
            ),
        ))
    }

    fn tool_zoom_out(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "zoom")?;
        let factor = arg_opt_f64(args, "factor")?;
        let base = self.load_record_pixels(&image.root_id)?;
        let out = zoom_out(&image.patch, &base, factor).map_err(raster_failure)?;
        let clamped = out.clamped;
        let mut summary = self.register_patch(out.patch, image.modality);
        summary.clamped = Some(clamped);
        let note = if clamped { " (clamped at base bounds)" } else { "" };
        Ok(Observation::ok(
            Payload::Patch(summary.clone()),
            format!(
                "view expanded to {}x{} px{note}",
                summary.width, summary.height
            ),
        ))
    }

    fn root_record_for_temporal(&mut self, args: &ArgMap, want: Modality) -> ToolResult<String> {
        let id = arg_str(args, "image")?;
        // accept a patch handle by walking back to its root record
        let root_id = if let Some(patch) = self.patches.get(id) {
            patch
                .provenance
                .as_ref()
                .map(|p| p.base_image_id.clone())
                .ok_or_else(|| fail("missing-provenance", "patch handle lost its provenance"))?
        } else {
            id.to_string()
        };
        let record = self.record(&root_id)?;
        if record.modality != want {
            return Err(fail(
                "wrong-modality",
                format!("{root_id} is {}, expected {want}", record.modality),
            ));
        }
        Ok(root_id)
    }

    fn tool_temporal_list(&mut self, args: &ArgMap, want: Modality) -> ToolResult<Observation> {
        let root_id = self.root_record_for_temporal(args, want)?;
        let list = self
            .env
            .index
            .temporal_list(&root_id)
            .map_err(|e| fail("unknown-record", e.to_string()))?;
        let records: Vec<RecordSummary> = list.iter().map(|r| RecordSummary::of(r)).collect();
        let message = format!("{} observation(s) in capture order", records.len());
        Ok(Observation::ok(Payload::Records { records }, message))
    }

    fn tool_temporal_neighbor(
        &mut self,
        args: &ArgMap,
        want: Modality,
        direction: TemporalDirection,
    ) -> ToolResult<Observation> {
        let root_id = self.root_record_for_temporal(args, want)?;
        let neighbor = self
            .env
            .index
            .temporal_neighbor(&root_id, direction)
            .map_err(|e| match e {
                crate::datalake::DataLakeError::NotInTemporalGroup(_) => {
                    fail("not-in-temporal-group", e.to_string())
                }
                other => fail("unknown-record", other.to_string()),
            })?;
        match neighbor {
            None => Ok(Observation::empty(match direction {
                TemporalDirection::Previous => "no earlier capture in this group",
                TemporalDirection::Next => "no later capture in this group",
            })),
            Some(record) => Ok(Observation::ok(
                Payload::Records {
                    records: vec![RecordSummary::of(record)],
                },
                format!("{} capture: {}", direction_word(direction), record.record_id),
            )),
        }
    }

    fn tool_companion(&mut self, args: &ArgMap, expect_input: Modality) -> ToolResult<Observation> {
        let id = arg_str(args, "image")?;
        let root_id = if let Some(patch) = self.patches.get(id) {
            patch
                .provenance
                .as_ref()
                .map(|p| p.base_image_id.clone())
                .ok_or_else(|| fail("missing-provenance", "patch handle lost its provenance"))?
        } else {
            id.to_string()
        };
        let record = self.record(&root_id)?;
        if record.modality != expect_input {
            return Err(fail(
                "wrong-modality",
                format!("{root_id} is {}, expected {expect_input}", record.modality),
            ));
        }
        match self
            .env
            .index
            .companion(&root_id)
            .map_err(|e| fail("unknown-record", e.to_string()))?
        {
            None => Ok(Observation::empty("no aligned companion for this record")),
            Some(partner) => Ok(Observation::ok(
                Payload::Records {
                    records: vec![RecordSummary::of(partner)],
                },
                format!("aligned {} companion: {}", partner.modality, partner.record_id),
            )),
        }
    }

    fn tool_analyze_scene(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "scene analysis")?;
        let objects = self.annotation_in_window(&image.root_id, image.window)?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut damage: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for object in &objects {
            *counts.entry(object.label.as_str()).or_default() += 1;
            if let Some(d) = &object.damage {
                *damage
                    .entry(object.label.as_str())
                    .or_default()
                    .entry(d.as_str())
                    .or_default() += 1;
            }
        }
        let mut parts: Vec<String> = Vec::new();
        for (label, n) in &counts {
            let mut part = format!("{n} {label}");
            if let Some(breakdown) = damage.get(label) {
                let detail: Vec<String> = breakdown
                    .iter()
                    .map(|(d, c)| format!("{c} {d}"))
                    .collect();
                part.push_str(&format!(" ({})", detail.join(", ")));
            }
            parts.push(part);
        }
        let dominant = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(label, _)| *label);
        let text = if parts.is_empty() {
            format!(
                "Optical view {}x{} px with no annotated objects.",
                image.patch.width(),
                image.patch.height()
            )
        } else {
            format!(
                "Optical view {}x{} px. Objects: {}. Dominant category: {}.",
                image.patch.width(),
                image.patch.height(),
                parts.join("; "),
                dominant.unwrap_or("none"),
            )
        };
        Ok(Observation::ok(Payload::Text { text }, "scene summary"))
    }

    fn tool_describe_object(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "object description")?;
        let target = arg_str(args, "target")?;
        let objects = self.annotation_in_window(&image.root_id, image.window)?;
        let target_norm = normalize_label(target);
        let matched: Vec<&AnnotatedObject> = objects
            .iter()
            .filter(|o| {
                self.env
                    .synonyms
                    .matches(&target_norm, &normalize_label(&o.label))
            })
            .collect();
        if matched.is_empty() {
            return Ok(Observation::empty(format!("no {target} visible in this view")));
        }
        let mut lines = Vec::new();
        for (i, object) in matched.iter().take(10).enumerate() {
            let color = dominant_color(&image.patch, &object.bbox);
            let position = position_word(&image.patch, &object.bbox);
            let mut line = format!(
                "{} {}: {color}, {:.0}x{:.0} px, {position}",
                object.label,
                i + 1,
                object.bbox.width(),
                object.bbox.height()
            );
            if let Some(d) = &object.damage {
                line.push_str(&format!(", damage: {d}"));
            }
            lines.push(line);
        }
        let text = format!("{} matching object(s). {}.", matched.len(), lines.join("; "));
        Ok(Observation::ok(Payload::Text { text }, "object description"))
    }

    fn detection_observation(&self, boxes: Vec<BBox>, target: &str) -> Observation {
        if boxes.is_empty() {
            Observation::empty(format!("no {target} found"))
        } else {
            let message = format!("{} box(es) for {target}", boxes.len());
            Observation::ok(Payload::Boxes { boxes }, message)
        }
    }

    fn tool_detect_optical(&mut self, args: &ArgMap, seed: u64) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "optical detection")?;
        let target = arg_str(args, "target")?;
        let objects = self.annotation_in_window(&image.root_id, image.window)?;
        let truth = verified_boxes(&objects, target, &self.env.synonyms);
        let boxes = match self.mode.response {
            ResponseMode::Verified => truth,
            ResponseMode::Unverified => noisy_boxes(
                &truth,
                (image.patch.width(), image.patch.height()),
                self.env.noise,
                seed,
            ),
        };
        Ok(self.detection_observation(boxes, target))
    }

    /// SAR detection lacks an unverified backend and always runs verified.
    fn tool_detect_sar(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::Sar, "SAR detection")?;
        let target = arg_str(args, "target")?;
        let objects = self.annotation_in_window(&image.root_id, image.window)?;
        let boxes = verified_boxes(&objects, target, &self.env.synonyms);
        Ok(self.detection_observation(boxes, target))
    }

    /// Cross-modal detection also always runs verified: boxes of the input
    /// modality are kept only if the aligned companion has a same-label box
    /// with IoU at or above the configured threshold.
    fn tool_detect_crossmodal(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        let target = arg_str(args, "target")?;
        if image.modality == Modality::MultispectralScene {
            return Err(fail("wrong-modality", "needs an optical or SAR image"));
        }
        let partner = self
            .env
            .index
            .companion(&image.root_id)
            .map_err(|e| fail("unknown-record", e.to_string()))?
            .ok_or_else(|| {
                fail(
                    "missing-companion",
                    format!("{} has no aligned companion", image.root_id),
                )
            })?;
        let partner_id = partner.record_id.clone();
        let own = self.annotation_in_window(&image.root_id, image.window)?;
        let other = self.annotation_in_window(&partner_id, image.window)?;
        let own_boxes = verified_boxes(&own, target, &self.env.synonyms);
        let other_boxes = verified_boxes(&other, target, &self.env.synonyms);
        let consistent: Vec<BBox> = own_boxes
            .into_iter()
            .filter(|mine| {
                other_boxes.iter().any(|theirs| {
                    normalize_label(&theirs.label) == normalize_label(&mine.label)
                        && mine.iou(theirs) >= self.env.crossmodal_iou
                })
            })
            .collect();
        Ok(self.detection_observation(consistent, target))
    }

    fn tool_object_mask(
        &mut self,
        args: &ArgMap,
        fixed_target: Option<&str>,
        seed: u64,
    ) -> ToolResult<Observation> {
        let image = self.resolve_image(arg_str(args, "image")?)?;
        self.expect_modality(&image, Modality::OpticalRgb, "masking")?;
        let target = match fixed_target {
            Some(t) => t.to_string(),
            None => arg_str(args, "target")?.to_string(),
        };
        let objects = self.annotation_in_window(&image.root_id, image.window)?;
        let truth = verified_boxes(&objects, &target, &self.env.synonyms);
        let boxes = match self.mode.response {
            ResponseMode::Verified => truth,
            ResponseMode::Unverified => noisy_boxes(
                &truth,
                (image.patch.width(), image.patch.height()),
                self.env.noise,
                seed,
            ),
        };
        if boxes.is_empty() {
            return Ok(Observation::empty(format!("no {target} found to mask")));
        }
        let mask = rasterize_boxes(&boxes, image.patch.width(), image.patch.height());
        let summary = self.register_mask(mask);
        Ok(Observation::ok(
            Payload::Mask(summary.clone()),
            format!(
                "{} mask covers {:.1}% of the view",
                target,
                summary.foreground_fraction * 100.0
            ),
        ))
    }

    fn tool_theme_mask(&mut self, args: &ArgMap, theme: Theme) -> ToolResult<Observation> {
        let scene = self.resolve_scene(arg_str(args, "scene")?)?;
        let threshold = arg_opt_f64(args, "threshold")?;
        let mask = thematic_mask(&scene, theme, threshold).map_err(spectral_failure)?;
        let summary = self.register_mask(mask);
        Ok(Observation::ok(
            Payload::Mask(summary.clone()),
            format!(
                "{:?} mask covers {:.1}% of the scene",
                theme,
                summary.foreground_fraction * 100.0
            ),
        ))
    }

    fn tool_index(&mut self, args: &ArgMap, kind: IndexKind) -> ToolResult<Observation> {
        let scene = self.resolve_scene(arg_str(args, "scene")?)?;
        let threshold = arg_opt_f64(args, "threshold")?;
        let result = compute_index(&scene, kind, threshold).map_err(spectral_failure)?;
        if result.stats.valid_pixels == 0 {
            return Ok(Observation::empty(
                "index undefined everywhere (zero denominators)",
            ));
        }
        let message = format!(
            "{} mean {:.4}, median {:.4}, {:.1}% above {:.2}",
            kind.name(),
            result.stats.mean.unwrap_or(f64::NAN),
            result.stats.median.unwrap_or(f64::NAN),
            result.stats.fraction_above * 100.0,
            result.stats.threshold,
        );
        Ok(Observation::ok(
            Payload::IndexStats(IndexStatsPayload {
                index_name: kind.name().to_string(),
                width: result.width,
                height: result.height,
                stats: result.stats,
            }),
            message,
        ))
    }

    fn tool_theme_lookup(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let theme = arg_str(args, "theme")?;
        let info = theme_index_lookup(theme).map_err(spectral_failure)?;
        let text = format!(
            "{}: {} = {}; bands: {}, {}; default threshold {:.2}",
            info.theme,
            info.index_name.to_uppercase(),
            info.expression,
            info.required_roles.0,
            info.required_roles.1,
            info.default_threshold,
        );
        Ok(Observation::ok(Payload::Text { text }, "index recommendation"))
    }

    fn tool_bbox_relationship(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let a = operand_from_value(args.get("a").unwrap(), "a")?;
        let b = operand_from_value(args.get("b").unwrap(), "b")?;
        let frame = match (
            arg_opt_f64(args, "frame_width")?,
            arg_opt_f64(args, "frame_height")?,
        ) {
            (None, None) => None,
            (Some(w), Some(h)) if w > 0.0 && h > 0.0 => Some((w as u32, h as u32)),
            _ => {
                return Err(fail(
                    "illegal-arguments",
                    "frame_width and frame_height must be given together and positive",
                ))
            }
        };
        let report = bbox_relationship(&a, &b, frame).map_err(raster_failure)?;
        let message = relation_message(&report);
        Ok(Observation::ok(Payload::Relation(report), message))
    }

    fn tool_mask_relationship(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let a = arg_str(args, "mask_a")?;
        let b = arg_str(args, "mask_b")?;
        let mask_a = self
            .masks
            .get(a)
            .ok_or_else(|| fail("unknown-handle", format!("no mask {a}")))?;
        let mask_b = self
            .masks
            .get(b)
            .ok_or_else(|| fail("unknown-handle", format!("no mask {b}")))?;
        let report = mask_relationship(mask_a, mask_b).map_err(raster_failure)?;
        let message = relation_message(&report);
        Ok(Observation::ok(Payload::Relation(report), message))
    }

    fn tool_normalize_boxes(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let raw = args
            .get("boxes")
            .and_then(Value::as_array)
            .ok_or_else(|| fail("illegal-arguments", "boxes must be an array"))?;
        let mut boxes = Vec::with_capacity(raw.len());
        for (i, entry) in raw.iter().enumerate() {
            boxes.push(bbox_from_value(entry, &format!("box {i}"))?);
        }
        let from = (
            arg_dim(args, "from_width")?,
            arg_dim(args, "from_height")?,
        );
        let to = (arg_dim(args, "to_width")?, arg_dim(args, "to_height")?);
        let scaled = normalize_bboxes(&boxes, from, to).map_err(raster_failure)?;
        let message = format!(
            "{} box(es) rescaled from {}x{} to {}x{}",
            scaled.len(),
            from.0,
            from.1,
            to.0,
            to.1
        );
        Ok(Observation::ok(Payload::Boxes { boxes: scaled }, message))
    }

    fn tool_calculator(&mut self, args: &ArgMap) -> ToolResult<Observation> {
        let expression = arg_str(args, "expression")?;
        let value =
            evaluate_expression(expression).map_err(|e| fail("calc-error", e.to_string()))?;
        Ok(Observation::ok(
            Payload::Scalar { value },
            format!("{expression} = {value}"),
        ))
    }
}

type ArgMap = serde_json::Map<String, Value>;

/// Accepts a JSON object directly or the chat convention of a string holding
/// a JSON object.
fn parse_arguments(arguments: &Value) -> ToolResult<ArgMap> {
    match arguments {
        Value::Object(map) => Ok(map.clone()),
        Value::String(s) => match serde_json::from_str::<Value>(s) {
            Ok(Value::Object(map)) => Ok(map),
            _ => Err(fail(
                "illegal-arguments",
                "argument string does not hold a JSON object",
            )),
        },
        _ => Err(fail("illegal-arguments", "arguments must be a JSON object")),
    }
}

fn arg_str<'a>(args: &'a ArgMap, name: &str) -> ToolResult<&'a str> {
    args.get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| fail("illegal-arguments", format!("{name} must be a string")))
}

fn arg_f64(args: &ArgMap, name: &str) -> ToolResult<f64> {
    let v = args
        .get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| fail("illegal-arguments", format!("{name} must be a number")))?;
    if !v.is_finite() {
        return Err(fail("illegal-arguments", format!("{name} must be finite")));
    }
    Ok(v)
}

fn arg_opt_f64(args: &ArgMap, name: &str) -> ToolResult<Option<f64>> {
    match args.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => arg_f64(args, name).map(Some),
    }
}

fn arg_dim(args: &ArgMap, name: &str) -> ToolResult<u32> {
    let v = arg_f64(args, name)?;
    if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(fail(
            "illegal-arguments",
            format!("{name} must be a positive integer"),
        ));
    }
    Ok(v as u32)
}

fn aoi_from_args(args: &ArgMap) -> ToolResult<Aoi> {
    Aoi::new(
        arg_f64(args, "x0")?,
        arg_f64(args, "y0")?,
        arg_f64(args, "x1")?,
        arg_f64(args, "y1")?,
    )
    .map_err(raster_failure)
}

fn numbers_from_array(value: &Value, what: &str) -> ToolResult<Vec<f64>> {
    let arr = value
        .as_array()
        .ok_or_else(|| fail("illegal-arguments", format!("{what} must be an array")))?;
    arr.iter()
        .map(|v| {
            v.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| fail("illegal-arguments", format!("{what} must hold numbers")))
        })
        .collect()
}

fn bbox_from_value(value: &Value, what: &str) -> ToolResult<BBox> {
    if value.is_object() {
        return serde_json::from_value::<BBox>(value.clone())
            .map_err(|e| fail("illegal-arguments", format!("{what}: {e}")));
    }
    let nums = numbers_from_array(value, what)?;
    if nums.len() != 4 {
        return Err(fail(
            "illegal-arguments",
            format!("{what} must be [x0, y0, x1, y1]"),
        ));
    }
    BBox::new(nums[0], nums[1], nums[2], nums[3], String::new(), None)
        .map_err(|e| fail("invalid-box", e.to_string()))
}

fn operand_from_value(value: &Value, what: &str) -> ToolResult<RelationOperand> {
    if value.is_object() {
        return Ok(RelationOperand::Box(bbox_from_value(value, what)?));
    }
    let nums = numbers_from_array(value, what)?;
    match nums.len() {
        2 => Ok(RelationOperand::Point(nums[0], nums[1])),
        4 => Ok(RelationOperand::Box(
            BBox::new(nums[0], nums[1], nums[2], nums[3], String::new(), None)
                .map_err(|e| fail("invalid-box", e.to_string()))?,
        )),
        _ => Err(fail(
            "illegal-arguments",
            format!("{what} must be [x, y] or [x0, y0, x1, y1]"),
        )),
    }
}

/// Integer rasterization of boxes into a window-sized mask: a pixel is
/// foreground when its unit square falls inside a box after outward edge
/// rounding, which reproduces planted integer rectangles exactly.
fn rasterize_boxes(boxes: &[BBox], width: u32, height: u32) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    for b in boxes {
        let x0 = b.x_min.floor().max(0.0) as u32;
        let y0 = b.y_min.floor().max(0.0) as u32;
        let x1 = (b.x_max.ceil() as u32).min(width);
        let y1 = (b.y_max.ceil() as u32).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

fn direction_word(direction: TemporalDirection) -> &'static str {
    match direction {
        TemporalDirection::Previous => "previous",
        TemporalDirection::Next => "next",
    }
}

fn relation_message(report: &crate::raster::RelationReport) -> String {
    use crate::raster::SpatialRelation::*;
    let relation = match report.relation {
        Disjoint => "disjoint",
        Overlapping => "overlapping",
        AContainsB => "a contains b",
        BContainsA => "b contains a",
        MutualContainment => "identical extent",
    };
    match report.direction {
        Some(d) => format!("{relation}; b is {} of a; iou {:.4}", d.as_str(), report.iou),
        None => format!("{relation}; iou {:.4}", report.iou),
    }
}

const COLOR_PALETTE: &[(&str, [f32; 3])] = &[
    ("black", [0.0, 0.0, 0.0]),
    ("white", [1.0, 1.0, 1.0]),
    ("gray", [0.5, 0.5, 0.5]),
    ("red", [0.9, 0.1, 0.1]),
    ("green", [0.1, 0.8, 0.1]),
    ("blue", [0.1, 0.2, 0.9]),
    ("yellow", [0.9, 0.9, 0.1]),
    ("cyan", [0.1, 0.9, 0.9]),
    ("magenta", [0.9, 0.1, 0.9]),
];

/// Nearest palette name to the mean RGB inside the box; reads actual pixels,
/// so it only ever reports what is rendered in the raster.
fn dominant_color(patch: &RasterPatch, bbox: &BBox) -> &'static str {
    let x0 = bbox.x_min.floor().max(0.0) as u32;
    let y0 = bbox.y_min.floor().max(0.0) as u32;
    let x1 = (bbox.x_max.ceil() as u32).min(patch.width()).max(x0 + 1);
    let y1 = (bbox.y_max.ceil() as u32).min(patch.height()).max(y0 + 1);
    let mut sum = [0.0f64; 3];
    let mut n = 0.0f64;
    for y in y0..y1.min(patch.height()) {
        for x in x0..x1.min(patch.width()) {
            for c in 0..patch.channels().min(3) {
                sum[c as usize] += patch.get(x, y, c) as f64;
            }
            n += 1.0;
        }
    }
    if n == 0.0 {
        return "unknown";
    }
    let mean = [
        (sum[0] / n) as f32,
        (sum[1] / n) as f32,
        (sum[2] / n) as f32,
    ];
    COLOR_PALETTE
        .iter()
        .min_by(|(_, a), (_, b)| {
            let da: f32 = a.iter().zip(&mean).map(|(x, y)| (x - y).powi(2)).sum();
            let db: f32 = b.iter().zip(&mean).map(|(x, y)| (x - y).powi(2)).sum();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(name, _)| *name)
        .unwrap_or("unknown")
}

fn position_word(patch: &RasterPatch, bbox: &BBox) -> String {
    let (cx, cy) = bbox.center();
    let dx = cx - patch.width() as f64 / 2.0;
    let dy = cy - patch.height() as f64 / 2.0;
    // inner third of the view counts as central
    if dx.abs() < patch.width() as f64 / 6.0 && dy.abs() < patch.height() as f64 / 6.0 {
        return "in the central part".to_string();
    }
    match crate::raster::CompassDirection::of_offset(dx, dy) {
        Some(d) => format!("toward the {} edge", d.as_str()),
        None => "in the central part".to_string(),
    }
}
