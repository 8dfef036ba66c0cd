//! The 35-tool action space: declared schemas, Skill/All filtering, the
//! tool-renaming protocol, and execution dispatch under Verified/Unverified
//! response modes.

mod calc;
mod detect;
mod execute;
mod filter;
mod registry;

pub use calc::{evaluate_expression, CalcError};
pub use detect::{noisy_boxes, verified_boxes, NoiseParams};
pub use execute::{EnvData, EpisodeContext};
pub use filter::{normalize_label, semantic_target_filter, SynonymTable};
pub use registry::{
    function_manifest, inverse_rename_tool_name, rename_tool_name, DatasetFamily, ParamSpec,
    ParamType, RenameOutcome, ToolGroup, ToolRegistry, ToolSchema, RENAME_RULES, TOOL_COUNT,
};

use serde::{Deserialize, Serialize};

use crate::raster::{BBox, RelationReport};
use crate::spectral::IndexStats;

/// One tool invocation as recorded in a trajectory step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    /// Structured argument document. Anything that is not a JSON object (or
    /// a string containing one, the chat-tool convention) is an illegal
    /// call; it is still recorded and answered with an error observation.
    pub arguments: serde_json::Value,
    pub call_index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationStatus {
    Ok,
    Empty,
    Error,
}

/// Heterogeneous tool result payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Patch(PatchSummary),
    Scene(SceneSummary),
    Boxes { boxes: Vec<BBox> },
    Mask(MaskSummary),
    IndexStats(IndexStatsPayload),
    Relation(RelationReport),
    Records { records: Vec<RecordSummary> },
    Text { text: String },
    Scalar { value: f64 },
}

/// Reference to a patch registered in the episode context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSummary {
    pub patch_id: String,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_image_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<(u32, u32)>,
    /// Set by pan/zoom when the base-image edge truncated the request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub scene_id: String,
    pub platform: String,
    pub width: u32,
    pub height: u32,
    pub bands: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_time: Option<chrono::DateTime<chrono::Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSummary {
    pub mask_id: String,
    pub width: u32,
    pub height: u32,
    pub foreground_pixels: usize,
    pub foreground_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStatsPayload {
    pub index_name: String,
    pub width: u32,
    pub height: u32,
    pub stats: IndexStats,
}

/// Record listing entry; paths are hash-masked storage names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub record_id: String,
    pub modality: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_time: Option<chrono::DateTime<chrono::Utc>>,
    pub sensor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_m: Option<f64>,
}

impl RecordSummary {
    pub fn of(record: &crate::datalake::DataLakeRecord) -> Self {
        Self {
            record_id: record.record_id.clone(),
            modality: record.modality.to_string(),
            capture_time: record.capture_time,
            sensor: record.sensor.clone(),
            gsd_m: record.gsd_m,
        }
    }
}

/// Result of one tool execution. Errors carry a machine-readable code and
/// never abort the episode; empty results carry no payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub status: ObservationStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    pub message: String,
}

impl Observation {
    pub fn ok(payload: Payload, message: impl Into<String>) -> Self {
        Self {
            status: ObservationStatus::Ok,
            payload: Some(payload),
            code: None,
            message: message.into(),
        }
    }

    pub fn empty(message: impl Into<String>) -> Self {
        Self {
            status: ObservationStatus::Empty,
            payload: None,
            code: None,
            message: message.into(),
        }
    }

    pub fn error(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status: ObservationStatus::Error,
            payload: None,
            code: Some(code.into()),
            message: message.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ObservationStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Simple,
    Detailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaSetMode {
    Skill,
    All,
}

/// The independent operation axes of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionMode {
    pub response: ResponseMode,
    pub prompt: PromptMode,
    pub schema_set: SchemaSetMode,
    pub rename: bool,
    pub seed: u64,
}

impl Default for ExecutionMode {
    fn default() -> Self {
        Self {
            response: ResponseMode::Verified,
            prompt: PromptMode::Simple,
            schema_set: SchemaSetMode::Skill,
            rename: false,
            seed: 0,
        }
    }
}

/// One annotated object; damage subtype present for disaster imagery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedObject {
    pub label: String,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damage: Option<String>,
}

/// Ground truth backing the Verified response mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    pub record_id: String,
    pub objects: Vec<AnnotatedObject>,
}

/// All annotations of a fixture corpus, keyed by record id.
#[derive(Debug, Default, Clone)]
pub struct AnnotationStore {
    map: std::collections::BTreeMap<String, GroundTruthAnnotation>,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, annotation: GroundTruthAnnotation) {
        self.map.insert(annotation.record_id.clone(), annotation);
    }

    pub fn get(&self, record_id: &str) -> Option<&GroundTruthAnnotation> {
        self.map.get(record_id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn save_jsonl(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for annotation in self.map.values() {
            serde_json::to_writer(&mut out, annotation)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn load_jsonl(path: &std::path::Path) -> std::io::Result<Self> {
        use std::io::BufRead;
        let mut store = Self::new();
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let annotation: GroundTruthAnnotation = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            store.insert(annotation);
        }
        Ok(store)
    }
}
