//! Gymnasium-style episode state machine: reset opens a session over one
//! task, step executes tool calls under a budget, finalize closes the
//! trajectory. Also the deterministic structural trajectory validator.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{compute_index, IndexKind};
use crate::toolkit::{
    inverse_rename_tool_name, DatasetFamily, EnvData, EpisodeContext, ExecutionMode, Observation,
    PromptMode, RecordSummary, SchemaSetMode, ToolCall, ToolRegistry, ToolSchema,
};

/// Model-facing system prompt for the simple configuration.
pub const SIMPLE_SYSTEM_PROMPT: &str = include_str!("../assets/simple_prompt.txt");
/// Model-facing system prompt for the detailed configuration.
pub const DETAILED_SYSTEM_PROMPT: &str = include_str!("../assets/detailed_prompt.txt");

pub fn system_prompt(mode: PromptMode) -> &'static str {
    match mode {
        PromptMode::Simple => SIMPLE_SYSTEM_PROMPT,
        PromptMode::Detailed => DETAILED_SYSTEM_PROMPT,
    }
}

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("budget must be positive")]
    InvalidBudget,
    #[error("task {task} references missing start record {record}")]
    MissingStartRecord { task: String, record: String },
    #[error("task {0} must reference at least one tool (L >= 1)")]
    EmptyReference(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("function-call budget exhausted")]
    BudgetExhausted,
    #[error("task {0} has no reference answer")]
    MissingReferenceAnswer(String),
    #[error("failed to resolve deferred answer: {0}")]
    Resolution(String),
    #[error("i/o failure on {path}: {detail}")]
    Io { path: String, detail: String },
}

/// Six top-level EO task families used for report breakdowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EoTask {
    TemporalReasoning,
    DisasterImpact,
    GeospatialReasoning,
    VisualUnderstanding,
    SpatialNavigation,
    ObjectCounting,
}

impl EoTask {
    pub const ALL: [EoTask; 6] = [
        EoTask::TemporalReasoning,
        EoTask::DisasterImpact,
        EoTask::GeospatialReasoning,
        EoTask::VisualUnderstanding,
        EoTask::SpatialNavigation,
        EoTask::ObjectCounting,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EoTask::TemporalReasoning => "temporal_reasoning",
            EoTask::DisasterImpact => "disaster_impact",
            EoTask::GeospatialReasoning => "geospatial_reasoning",
            EoTask::VisualUnderstanding => "visual_understanding",
            EoTask::SpatialNavigation => "spatial_navigation",
            EoTask::ObjectCounting => "object_counting",
        }
    }
}

/// Rule for tasks whose reference answer is resolved from the environment at
/// evaluation time instead of being stored statically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ResolutionRule {
    /// Compare the mean index of `scene` against its previous temporal
    /// neighbor and answer with one of the three trend words.
    IndexTrend {
        scene: String,
        index: IndexKind,
        epsilon: f64,
        increased: String,
        decreased: String,
        stable: String,
    },
}

/// One evaluation question: start context, reference answer, and the
/// reference tool path of length `reference_call_count` (L).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub question: String,
    pub start_records: Vec<String>,
    pub dataset_family: DatasetFamily,
    pub eo_task: EoTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    pub reference_tools: Vec<String>,
    pub reference_call_count: u32,
    #[serde(default)]
    pub deferred: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionRule>,
}

/// Static reference answer, or the environment-resolved one for deferred
/// tasks.
pub fn resolve_reference_answer(task: &Task, env: &EnvData) -> Result<String, EpisodeError> {
    if !task.deferred {
        return task
            .reference_answer
            .clone()
            .ok_or_else(|| EpisodeError::MissingReferenceAnswer(task.task_id.clone()));
    }
    match &task.resolution {
        None => Err(EpisodeError::Resolution(format!(
            "deferred task {} has no resolution rule",
            task.task_id
        ))),
        Some(ResolutionRule::IndexTrend {
            scene,
            index,
            epsilon,
            increased,
            decreased,
            stable,
        }) => {
            let previous = env
                .index
                .temporal_neighbor(scene, crate::datalake::TemporalDirection::Previous)
                .map_err(|e| EpisodeError::Resolution(e.to_string()))?
                .ok_or_else(|| {
                    EpisodeError::Resolution(format!("{scene} has no previous capture"))
                })?
                .record_id
                .clone();
            let mean_of = |record_id: &str| -> Result<f64, EpisodeError> {
                let scene = env
                    .load_scene(record_id)
                    .map_err(EpisodeError::Resolution)?;
                let result = compute_index(&scene, *index, None)
                    .map_err(|e| EpisodeError::Resolution(e.to_string()))?;
                result
                    .stats
                    .mean
                    .ok_or_else(|| EpisodeError::Resolution("index undefined everywhere".into()))
            };
            let current_mean = mean_of(scene)?;
            let previous_mean = mean_of(&previous)?;
            let delta = current_mean - previous_mean;
            Ok(if delta > *epsilon {
                increased.clone()
            } else if delta < -*epsilon {
                decreased.clone()
            } else {
                stable.clone()
            })
        }
    }
}

/// Function-call cap per rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeBudget {
    pub max_calls: u32,
}

impl EpisodeBudget {
    /// Evaluation rollouts allow at most 15 function calls.
    pub const EVAL: EpisodeBudget = EpisodeBudget { max_calls: 15 };
    /// Trajectory synthesis allows up to 50.
    pub const SYNTHESIS: EpisodeBudget = EpisodeBudget { max_calls: 50 };

    pub fn new(max_calls: u32) -> Result<Self, EpisodeError> {
        if max_calls == 0 {
            return Err(EpisodeError::InvalidBudget);
        }
        Ok(Self { max_calls })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub call: ToolCall,
    pub observation: Observation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Answered,
    BudgetExhausted,
    Aborted,
}

/// Persisted record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schema_version: u32,
    pub task_id: String,
    pub config: ExecutionMode,
    pub steps: Vec<TrajectoryStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<String>,
    pub termination: Termination,
    pub zero_call: bool,
    pub seed: u64,
}

impl Trajectory {
    /// Tool names in call order, inverse-renamed to canonical names when the
    /// episode ran with renaming on.
    pub fn canonical_tool_names(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| {
                if self.config.rename {
                    inverse_rename_tool_name(&s.call.name).name
                } else {
                    s.call.name.clone()
                }
            })
            .collect()
    }

    /// Copy with canonical tool names and the rename flag cleared; two runs
    /// that differ only in renaming collapse to the same value.
    pub fn derenamed(&self) -> Trajectory {
        let mut out = self.clone();
        if out.config.rename {
            for step in &mut out.steps {
                step.call.name = inverse_rename_tool_name(&step.call.name).name;
            }
            out.config.rename = false;
        }
        out
    }
}

/// What the agent receives on reset.
#[derive(Debug, Clone)]
pub struct InitialObservation {
    pub system_prompt: String,
    pub question: String,
    pub start_images: Vec<RecordSummary>,
    pub schemas: Vec<ToolSchema>,
    pub max_calls: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub calls_remaining: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SessionState {
    Open,
    Exhausted,
    Closed,
}

/// One live episode. Sessions are single-threaded and share only the
/// immutable environment with other sessions.
#[derive(Debug)]
pub struct Session {
    task: Task,
    mode: ExecutionMode,
    budget: EpisodeBudget,
    ctx: EpisodeContext,
    steps: Vec<TrajectoryStep>,
    state: SessionState,
}

impl Session {
    /// Opens a fresh trajectory over the task, returning the configured
    /// system prompt, start images, and exposed tool schemas.
    pub fn reset(
        env: Arc<EnvData>,
        task: Task,
        mode: ExecutionMode,
        budget: EpisodeBudget,
    ) -> Result<(Session, InitialObservation), EpisodeError> {
        if task.reference_call_count == 0 || task.reference_tools.is_empty() {
            return Err(EpisodeError::EmptyReference(task.task_id.clone()));
        }
        let mut start_images = Vec::new();
        for record_id in &task.start_records {
            let record =
                env.index
                    .get(record_id)
                    .ok_or_else(|| EpisodeError::MissingStartRecord {
                        task: task.task_id.clone(),
                        record: record_id.clone(),
                    })?;
            start_images.push(RecordSummary::of(record));
        }
        let schemas = env
            .registry
            .schema_set(task.dataset_family, mode.schema_set, mode.rename);
        let init = InitialObservation {
            system_prompt: system_prompt(mode.prompt).to_string(),
            question: task.question.clone(),
            start_images,
            schemas,
            max_calls: budget.max_calls,
        };
        let ctx = EpisodeContext::new(env, mode);
        Ok((
            Session {
                task,
                mode,
                budget,
                ctx,
                steps: Vec::new(),
                state: SessionState::Open,
            },
            init,
        ))
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn mode(&self) -> ExecutionMode {
        self.mode
    }

    pub fn calls_remaining(&self) -> u32 {
        self.budget.max_calls - self.steps.len() as u32
    }

    pub fn is_open(&self) -> bool {
        self.state == SessionState::Open
    }

    pub fn context(&self) -> &EpisodeContext {
        &self.ctx
    }

    /// Executes one tool call and appends the step. Illegal calls are
    /// recorded with their error observation and still consume budget; the
    /// cap counts calls, not successes.
    pub fn step(
        &mut self,
        name: String,
        arguments: serde_json::Value,
        rationale: Option<String>,
    ) -> Result<StepOutcome, EpisodeError> {
        match self.state {
            SessionState::Closed => return Err(EpisodeError::SessionClosed),
            SessionState::Exhausted => return Err(EpisodeError::BudgetExhausted),
            SessionState::Open => {}
        }
        let call = ToolCall {
            name,
            arguments,
            call_index: self.steps.len() as u32,
        };
        let observation = self.ctx.execute(&call);
        self.steps.push(TrajectoryStep {
            rationale,
            call,
            observation: observation.clone(),
        });
        if self.calls_remaining() == 0 {
            self.state = SessionState::Exhausted;
        }
        Ok(StepOutcome {
            observation,
            calls_remaining: self.calls_remaining(),
        })
    }

    /// Closes the session. An answer terminates as `answered`; closing
    /// without one terminates as `budget_exhausted` when the cap was hit and
    /// `aborted` otherwise.
    pub fn finalize(&mut self, answer: Option<String>) -> Result<Trajectory, EpisodeError> {
        if self.state == SessionState::Closed {
            return Err(EpisodeError::SessionClosed);
        }
        let termination = match (&answer, self.state) {
            (Some(_), _) => Termination::Answered,
            (None, SessionState::Exhausted) => Termination::BudgetExhausted,
            (None, _) => Termination::Aborted,
        };
        self.state = SessionState::Closed;
        Ok(Trajectory {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: self.task.task_id.clone(),
            config: self.mode,
            zero_call: answer.is_some() && self.steps.is_empty(),
            steps: std::mem::take(&mut self.steps),
            final_answer: answer,
            termination,
            seed: self.mode.seed,
        })
    }

    /// Persists whatever happened so far as an aborted trajectory (agent
    /// disconnect, idle timeout). No step is lost.
    pub fn abort(&mut self) -> Result<Trajectory, EpisodeError> {
        if self.state == SessionState::Closed {
            return Err(EpisodeError::SessionClosed);
        }
        self.state = SessionState::Closed;
        Ok(Trajectory {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: self.task.task_id.clone(),
            config: self.mode,
            steps: std::mem::take(&mut self.steps),
            final_answer: None,
            termination: Termination::Aborted,
            zero_call: false,
            seed: self.mode.seed,
        })
    }
}

// ---------------------------------------------------------------------
// structural validation

/// Failure category raised when every observation is an error or empty.
pub const CATEGORY_NO_SUCCESSFUL_OBSERVATION: &str = "No successful observation";
pub const CATEGORY_NO_TOOL_STEP: &str = "no-tool-step";
pub const CATEGORY_MALFORMED_PAYLOAD: &str = "malformed-tool-payload";
pub const CATEGORY_UNKNOWN_TOOL: &str = "unknown-tool";
pub const CATEGORY_MISSING_CORE_TOOL: &str = "missing-core-tool";
pub const CATEGORY_BUDGET_EXCEEDED: &str = "budget-exceeded";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub category: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub task_id: String,
    pub valid: bool,
    pub failures: Vec<ValidationFailure>,
}

fn arguments_structurally_valid(arguments: &serde_json::Value) -> bool {
    match arguments {
        serde_json::Value::Object(_) => true,
        serde_json::Value::String(s) => matches!(
            serde_json::from_str::<serde_json::Value>(s),
            Ok(serde_json::Value::Object(_))
        ),
        _ => false,
    }
}

/// Deterministic first-layer trajectory check: at least one tool step, at
/// least one successful observation, structurally valid call payloads,
/// resolvable tool names, core-tool presence for the task's dataset family,
/// and the budget cap when one is given.
pub fn validate_structure(
    trajectory: &Trajectory,
    task: Option<&Task>,
    registry: &ToolRegistry,
    budget: Option<EpisodeBudget>,
) -> ValidationReport {
    let mut failures = Vec::new();
    if trajectory.steps.is_empty() {
        failures.push(ValidationFailure {
            category: CATEGORY_NO_TOOL_STEP.into(),
            detail: "trajectory contains no tool call".into(),
        });
    } else if !trajectory.steps.iter().any(|s| s.observation.is_ok()) {
        failures.push(ValidationFailure {
            category: CATEGORY_NO_SUCCESSFUL_OBSERVATION.into(),
            detail: "all observations are errors or empty".into(),
        });
    }
    let canonical = trajectory.canonical_tool_names();
    for (step, name) in trajectory.steps.iter().zip(&canonical) {
        if !arguments_structurally_valid(&step.call.arguments) {
            failures.push(ValidationFailure {
                category: CATEGORY_MALFORMED_PAYLOAD.into(),
                detail: format!(
                    "call {} arguments are not a JSON object",
                    step.call.call_index
                ),
            });
        }
        if registry.get(name).is_none() {
            failures.push(ValidationFailure {
                category: CATEGORY_UNKNOWN_TOOL.into(),
                detail: format!("call {} names unknown tool {}", step.call.call_index, name),
            });
        }
    }
    if let Some(task) = task {
        let core: std::collections::BTreeSet<String> = registry
            .schema_set(task.dataset_family, SchemaSetMode::Skill, false)
            .into_iter()
            .map(|s| s.name)
            .collect();
        if !trajectory.steps.is_empty() && !canonical.iter().any(|n| core.contains(n)) {
            failures.push(ValidationFailure {
                category: CATEGORY_MISSING_CORE_TOOL.into(),
                detail: format!(
                    "no call uses a core tool of the {} family",
                    task.dataset_family
                ),
            });
        }
    }
    if let Some(budget) = budget {
        if trajectory.steps.len() as u32 > budget.max_calls {
            failures.push(ValidationFailure {
                category: CATEGORY_BUDGET_EXCEEDED.into(),
                detail: format!(
                    "{} steps exceed the cap of {}",
                    trajectory.steps.len(),
                    budget.max_calls
                ),
            });
        }
    }
    ValidationReport {
        task_id: trajectory.task_id.clone(),
        valid: failures.is_empty(),
        failures,
    }
}

// ---------------------------------------------------------------------
// persistence

fn io_err(path: &Path, detail: impl ToString) -> EpisodeError {
    EpisodeError::Io {
        path: path.display().to_string(),
        detail: detail.to_string(),
    }
}

pub fn save_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), EpisodeError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| io_err(path, e))?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_err(path, e))?;
        out.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

pub fn load_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EpisodeError> {
    let reader = std::io::BufReader::new(std::fs::File::open(path).map_err(|e| io_err(path, e))?);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(
            serde_json::from_str(&line)
                .map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(items)
}

pub fn save_tasks(path: &Path, tasks: &[Task]) -> Result<(), EpisodeError> {
    save_jsonl(path, tasks)
}

pub fn load_tasks(path: &Path) -> Result<Vec<Task>, EpisodeError> {
    load_jsonl(path)
}

pub fn save_trajectories(path: &Path, trajectories: &[Trajectory]) -> Result<(), EpisodeError> {
    save_jsonl(path, trajectories)
}

pub fn load_trajectories(path: &Path) -> Result<Vec<Trajectory>, EpisodeError> {
    load_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalake::{DataLakeRecord, Index, Modality};
    use crate::raster::{write_patch, RasterPatch};
    use crate::toolkit::{AnnotatedObject, AnnotationStore, GroundTruthAnnotation};
    use serde_json::json;

    fn test_env(dir: &Path) -> Arc<EnvData> {
        let mut image = RasterPatch::filled(32, 32, 3, 0.2).unwrap();
        image.fill_rect(4, 4, 8, 6, &[0.1, 0.2, 0.9]);
        write_patch(&image, &dir.join("rasters/opt-a.rpf")).unwrap();
        let record = DataLakeRecord {
            record_id: "opt-a".into(),
            modality: Modality::OpticalRgb,
            location: None,
            capture_time: None,
            sensor: "synthetic".into(),
            gsd_m: Some(0.5),
            sequence_id: None,
            frame_index: None,
            companion_id: None,
            base_image_id: None,
            band_files: vec![],
            path: "rasters/opt-a.rpf".into(),
        };
        let index = Index::build(vec![record]).index;
        let mut annotations = AnnotationStore::new();
        annotations.insert(GroundTruthAnnotation {
            record_id: "opt-a".into(),
            objects: vec![AnnotatedObject {
                label: "ship".into(),
                bbox: crate::raster::BBox::new(4.0, 4.0, 12.0, 10.0, "ship".into(), None).unwrap(),
                damage: None,
            }],
        });
        Arc::new(EnvData::new(index, dir.to_path_buf(), annotations))
    }

    fn task() -> Task {
        Task {
            task_id: "t1".into(),
            question: "How many ships are visible?".into(),
            start_records: vec!["opt-a".into()],
            dataset_family: DatasetFamily::Dota,
            eo_task: EoTask::ObjectCounting,
            reference_answer: Some("1".into()),
            reference_tools: vec!["get_object_bbox_by_optical_image".into()],
            reference_call_count: 1,
            deferred: false,
            resolution: None,
        }
    }

    fn open(env: Arc<EnvData>, budget: EpisodeBudget) -> (Session, InitialObservation) {
        Session::reset(env, task(), ExecutionMode::default(), budget).unwrap()
    }

    #[test]
    fn reset_exposes_prompt_and_schemas() {
        let dir = tempfile::tempdir().unwrap();
        let (_, init) = open(test_env(dir.path()), EpisodeBudget::EVAL);
        assert!(init
            .system_prompt
            .starts_with("You are an expert remote-sensing analyst."));
        assert_eq!(init.schemas.len(), 10); // dota skill subset
        assert_eq!(init.max_calls, 15);
        assert_eq!(init.start_images[0].record_id, "opt-a");
    }

    #[test]
    fn renamed_reset_exposes_alias_names() {
        let dir = tempfile::tempdir().unwrap();
        let mode = ExecutionMode {
            rename: true,
            ..ExecutionMode::default()
        };
        let (_, init) =
            Session::reset(test_env(dir.path()), task(), mode, EpisodeBudget::EVAL).unwrap();
        assert!(init
            .schemas
            .iter()
            .any(|s| s.name == "clip_optical_or_sar_image"));
        assert!(init.schemas.iter().all(|s| !s.name.starts_with("get_")));
    }

    #[test]
    fn reset_rejects_missing_start_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut bad = task();
        bad.start_records = vec!["ghost".into()];
        let err = Session::reset(
            test_env(dir.path()),
            bad,
            ExecutionMode::default(),
            EpisodeBudget::EVAL,
        )
        .unwrap_err();
        assert!(matches!(err, EpisodeError::MissingStartRecord { .. }));
    }

    #[test]
    fn budget_exhaustion_blocks_further_steps() {
        let dir = tempfile::tempdir().unwrap();
        let (mut session, _) = open(test_env(dir.path()), EpisodeBudget::new(2).unwrap());
        for _ in 0..2 {
            session
                .step(
                    "basic_calculator".into(),
                    json!({"expression": "1+1"}),
                    None,
                )
                .unwrap();
        }
        let err = session
            .step("basic_calculator".into(), json!({"expression": "2"}), None)
            .unwrap_err();
        assert!(matches!(err, EpisodeError::BudgetExhausted));
        let trajectory = session.finalize(None).unwrap();
        assert_eq!(trajectory.termination, Termination::BudgetExhausted);
        assert_eq!(trajectory.steps.len(), 2);
    }

    #[test]
    fn illegal_call_is_recorded_and_consumes_budget() {
        let dir = tempfile::tempdir().unwrap();
        let (mut session, _) = open(test_env(dir.path()), EpisodeBudget::EVAL);
        let outcome = session
            .step("basic_calculator".into(), json!([1, 2, 3]), None)
            .unwrap();
        assert_eq!(
            outcome.observation.code.as_deref(),
            Some("illegal-arguments")
        );
        assert_eq!(outcome.calls_remaining, 14);
        let trajectory = session.finalize(Some("unknown".into())).unwrap();
        assert_eq!(trajectory.steps.len(), 1);
        assert_eq!(trajectory.termination, Termination::Answered);
    }

    #[test]
    fn scripted_three_call_episode_records_ok_steps() {
        let dir = tempfile::tempdir().unwrap();
        let (mut session, _) = open(test_env(dir.path()), EpisodeBudget::EVAL);
        let calls = [
            (
                "get_object_bbox_by_optical_image",
                json!({"image": "opt-a", "target": "ship"}),
            ),
            (
                "crop_optical_or_sar_image",
                json!({"image": "opt-a", "x0": 0.0, "y0": 0.0, "x1": 0.5, "y1": 0.5}),
            ),
            ("basic_calculator", json!({"expression": "1"})),
        ];
        for (name, args) in calls {
            let outcome = session
                .step(name.into(), args, Some("because".into()))
                .unwrap();
            assert!(
                outcome.observation.is_ok(),
                "{name}: {:?}",
                outcome.observation
            );
        }
        let trajectory = session.finalize(Some("1".into())).unwrap();
        assert_eq!(trajectory.steps.len(), 3);
        assert!(!trajectory.zero_call);
        assert!(trajectory.steps.iter().all(|s| s.observation.is_ok()));
        let indices: Vec<u32> = trajectory.steps.iter().map(|s| s.call.call_index).collect();
        assert_eq!(indices, vec![0, 1, 2]);
    }

    #[test]
    fn zero_call_finalize_sets_flag() {
        let dir = tempfile::tempdir().unwrap();
        let (mut session, _) = open(test_env(dir.path()), EpisodeBudget::EVAL);
        let trajectory = session.finalize(Some("guess".into())).unwrap();
        assert!(trajectory.zero_call);
        assert_eq!(trajectory.termination, Termination::Answered);
        assert!(session.finalize(None).is_err());
    }

    #[test]
    fn validator_flags_the_review_categories() {
        let registry = ToolRegistry::new();
        let mut trajectory = Trajectory {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: "t1".into(),
            config: ExecutionMode::default(),
            steps: vec![],
            final_answer: Some("x".into()),
            termination: Termination::Answered,
            zero_call: true,
            seed: 0,
        };
        let report = validate_structure(&trajectory, None, &registry, None);
        assert!(!report.valid);
        assert_eq!(report.failures[0].category, CATEGORY_NO_TOOL_STEP);

        trajectory.steps = vec![TrajectoryStep {
            rationale: None,
            call: ToolCall {
                name: "basic_calculator".into(),
                arguments: json!({"expression": "1/0"}),
                call_index: 0,
            },
            observation: Observation::error("calc-error", "division by zero"),
        }];
        let report = validate_structure(&trajectory, Some(&task()), &registry, None);
        assert!(!report.valid);
        assert!(report
            .failures
            .iter()
            .any(|f| f.category == CATEGORY_NO_SUCCESSFUL_OBSERVATION));

        trajectory.steps[0].observation =
            Observation::ok(crate::toolkit::Payload::Scalar { value: 2.0 }, "ok");
        let report = validate_structure(&trajectory, Some(&task()), &registry, None);
        assert!(report.valid, "{:?}", report.failures);
    }

    #[test]
    fn validator_checks_payloads_names_and_budget() {
        let registry = ToolRegistry::new();
        let trajectory = Trajectory {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: "t1".into(),
            config: ExecutionMode::default(),
            steps: vec![
                TrajectoryStep {
                    rationale: None,
                    call: ToolCall {
                        name: "warp_drive".into(),
                        arguments: json!(42),
                        call_index: 0,
                    },
                    observation: Observation::error("unknown-tool", "no tool"),
                },
                TrajectoryStep {
                    rationale: None,
                    call: ToolCall {
                        name: "basic_calculator".into(),
                        arguments: json!({"expression": "1"}),
                        call_index: 1,
                    },
                    observation: Observation::ok(
                        crate::toolkit::Payload::Scalar { value: 1.0 },
                        "ok",
                    ),
                },
            ],
            final_answer: Some("1".into()),
            termination: Termination::Answered,
            zero_call: false,
            seed: 0,
        };
        let report = validate_structure(
            &trajectory,
            None,
            &registry,
            Some(EpisodeBudget::new(1).unwrap()),
        );
        let categories: Vec<&str> = report
            .failures
            .iter()
            .map(|f| f.category.as_str())
            .collect();
        assert!(categories.contains(&CATEGORY_MALFORMED_PAYLOAD));
        assert!(categories.contains(&CATEGORY_UNKNOWN_TOOL));
        assert!(categories.contains(&CATEGORY_BUDGET_EXCEEDED));
    }

    #[test]
    fn trajectory_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let env = test_env(dir.path());
        let (mut session, _) = open(env, EpisodeBudget::EVAL);
        session
            .step(
                "basic_calculator".into(),
                json!({"expression": "(3+5)/2"}),
                None,
            )
            .unwrap();
        let trajectory = session.finalize(Some("4".into())).unwrap();
        let path = dir.path().join("out/trajectories.jsonl");
        save_trajectories(&path, &[trajectory.clone()]).unwrap();
        let back = load_trajectories(&path).unwrap();
        assert_eq!(back, vec![trajectory]);
    }

    #[test]
    fn derenamed_collapses_rename_runs() {
        let config = ExecutionMode {
            rename: true,
            ..ExecutionMode::default()
        };
        let trajectory = Trajectory {
            schema_version: TRAJECTORY_SCHEMA_VERSION,
            task_id: "t".into(),
            config,
            steps: vec![TrajectoryStep {
                rationale: None,
                call: ToolCall {
                    name: "simple_calculator".into(),
                    arguments: json!({"expression": "1"}),
                    call_index: 0,
                },
                observation: Observation::ok(crate::toolkit::Payload::Scalar { value: 1.0 }, "ok"),
            }],
            final_answer: Some("1".into()),
            termination: Termination::Answered,
            zero_call: false,
            seed: 7,
        };
        let plain = trajectory.derenamed();
        assert_eq!(plain.steps[0].call.name, "basic_calculator");
        assert!(!plain.config.rename);
    }
}
