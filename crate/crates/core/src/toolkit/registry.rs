//! Static catalog of the 35 tool schemas, the dataset-mapped Skill subsets,
//! and the first-token renaming protocol.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub const TOOL_COUNT: usize = 35;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown dataset family {0}")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolGroup {
    SpatialPlanning,
    TemporalFetching,
    CrossmodalSwitching,
    Semantic,
    Detection,
    Masking,
    Spectral,
    RelationMeasure,
}

impl ToolGroup {
    /// Data-gathering groups acquire new evidence; the rest analyze it.
    pub fn is_gathering(&self) -> bool {
        matches!(
            self,
            ToolGroup::SpatialPlanning | ToolGroup::TemporalFetching | ToolGroup::CrossmodalSwitching
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    /// Record id or registered patch handle.
    Image,
    /// Multispectral record id or registered scene handle.
    Scene,
    /// Registered mask handle.
    Mask,
    /// Free-text object category.
    Target,
    Number,
    Text,
    /// `[x0, y0, x1, y1]` box or `[x, y]` point.
    BoxOrPoint,
    /// Array of boxes.
    BoxArray,
}

impl ParamType {
    fn json_type(&self) -> &'static str {
        match self {
            ParamType::Image | ParamType::Scene | ParamType::Mask | ParamType::Target
            | ParamType::Text => "string",
            ParamType::Number => "number",
            ParamType::BoxOrPoint | ParamType::BoxArray => "array",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub ty: ParamType,
    pub required: bool,
    pub description: &'static str,
}

const fn req(name: &'static str, ty: ParamType, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: true,
        description,
    }
}

const fn opt(name: &'static str, ty: ParamType, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: false,
        description,
    }
}

/// Declared signature of one tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub group: ToolGroup,
}

const IMAGE: ParamSpec = req("image", ParamType::Image, "record id or patch handle");
const SCENE: ParamSpec = req(
    "scene",
    ParamType::Scene,
    "multispectral record id or scene handle",
);
const TARGET: ParamSpec = req("target", ParamType::Target, "object category to look for");
const THRESHOLD: ParamSpec = opt("threshold", ParamType::Number, "override the index threshold");

fn aoi_params() -> Vec<ParamSpec> {
    vec![
        req("x0", ParamType::Number, "normalized left edge in [0, 1]"),
        req("y0", ParamType::Number, "normalized top edge in [0, 1]"),
        req("x1", ParamType::Number, "normalized right edge in [0, 1]"),
        req("y1", ParamType::Number, "normalized bottom edge in [0, 1]"),
    ]
}

fn catalog() -> Vec<ToolSchema> {
    use ToolGroup::*;
    let tool = |name: &str, group: ToolGroup, description: &str, params: Vec<ParamSpec>| ToolSchema {
        name: name.to_string(),
        description: description.to_string(),
        params,
        group,
    };
    let pan = |name: &str, dir: &str| {
        tool(
            name,
            SpatialPlanning,
            &format!("Shift the current optical crop {dir} over its base image, keeping the crop size."),
            vec![
                IMAGE,
                opt("step_frac", ParamType::Number, "shift as a fraction of the crop extent (default 0.5)"),
            ],
        )
    };
    let nd = |name: &str, what: &str| {
        tool(
            name,
            Spectral,
            &format!("Compute per-pixel {what} statistics (mean, median, fraction above threshold) for a multispectral observation."),
            vec![SCENE, THRESHOLD],
        )
    };
    let theme_mask = |name: &str, theme: &str, index: &str| {
        tool(
            name,
            Masking,
            &format!("Build a binary {theme} mask from multispectral bands using {index} thresholding."),
            vec![SCENE, THRESHOLD],
        )
    };
    vec![
        // spatial planning (7)
        {
            let mut p = vec![SCENE];
            p.extend(aoi_params());
            tool(
                "crop_multispectral_image",
                SpatialPlanning,
                "Crop every band of a multispectral observation to a normalized AOI for later index or mask analysis.",
                p,
            )
        },
        {
            let mut p = vec![IMAGE];
            p.extend(aoi_params());
            tool(
                "crop_optical_or_sar_image",
                SpatialPlanning,
                "Crop an optical or SAR image to a normalized AOI for focused inspection.",
                p,
            )
        },
        pan("move_down_optical_image", "downward"),
        pan("move_left_optical_image", "left"),
        pan("move_right_optical_image", "right"),
        pan("move_up_optical_image", "upward"),
        tool(
            "zoom_out_optical_image",
            SpatialPlanning,
            "Expand the visible area around an optical crop, keeping it centered and inside the base image.",
            vec![
                IMAGE,
                opt("factor", ParamType::Number, "extent multiplier greater than 1 (default 2)"),
            ],
        ),
        // temporal fetching (6)
        tool(
            "get_multispectral_list",
            TemporalFetching,
            "List the multispectral observations available for this location, ordered by capture time.",
            vec![IMAGE],
        ),
        tool(
            "get_next_multispectral",
            TemporalFetching,
            "Fetch the next multispectral observation after the given one.",
            vec![IMAGE],
        ),
        tool(
            "get_next_optical_image",
            TemporalFetching,
            "Fetch the closest later RGB frame in the same sequence.",
            vec![IMAGE],
        ),
        tool(
            "get_optical_image_list",
            TemporalFetching,
            "List the co-located RGB frames of the sequence, ordered by capture time.",
            vec![IMAGE],
        ),
        tool(
            "get_previous_multispectral",
            TemporalFetching,
            "Fetch the most recent multispectral observation before the given one.",
            vec![IMAGE],
        ),
        tool(
            "get_previous_optical_image",
            TemporalFetching,
            "Fetch the closest earlier RGB frame in the same sequence.",
            vec![IMAGE],
        ),
        // cross-modal switching (2)
        tool(
            "get_optical_from_sar",
            CrossmodalSwitching,
            "Fetch the aligned optical companion of a SAR image.",
            vec![IMAGE],
        ),
        tool(
            "get_sar_from_optical",
            CrossmodalSwitching,
            "Fetch the aligned SAR companion of an optical image.",
            vec![IMAGE],
        ),
        // semantic understanding (2)
        tool(
            "analyze_optical_scene",
            Semantic,
            "Summarize the scene content of an optical image; not intended for counting or detection.",
            vec![IMAGE],
        ),
        tool(
            "describe_optical_object",
            Semantic,
            "Describe visible attributes (color, size, placement) of the target objects in an optical image.",
            vec![IMAGE, TARGET],
        ),
        // object detection (3)
        tool(
            "get_object_bbox_by_optical_image",
            Detection,
            "Detect the target objects in an optical image and return their bounding boxes.",
            vec![IMAGE, TARGET],
        ),
        tool(
            "get_object_bbox_by_sar_image",
            Detection,
            "Detect the target objects in a SAR image and return their bounding boxes.",
            vec![IMAGE, TARGET],
        ),
        tool(
            "get_object_bbox_by_optical_sar_image",
            Detection,
            "Use an aligned optical and SAR pair to keep only target boxes consistent across both modalities.",
            vec![IMAGE, TARGET],
        ),
        // area masking (6)
        tool(
            "get_building_mask_by_optical_image",
            Masking,
            "Extract a binary building mask from an optical image.",
            vec![IMAGE],
        ),
        tool(
            "get_road_mask_by_optical_image",
            Masking,
            "Extract a binary road mask from an optical image.",
            vec![IMAGE],
        ),
        tool(
            "get_object_mask_by_optical_image",
            Masking,
            "Segment the target objects in an optical image and return a binary mask.",
            vec![IMAGE, TARGET],
        ),
        theme_mask("compute_urban_mask_by_multispectral", "urban and built-up", "NDBI"),
        theme_mask("compute_vegetation_mask_by_multispectral", "vegetation", "NDVI"),
        theme_mask("compute_water_mask_by_multispectral", "water", "NDWI"),
        // spectral analysis (5)
        nd("compute_ndbi_by_multispectral", "built-up NDBI"),
        nd("compute_ndsi_by_multispectral", "snow and ice NDSI"),
        nd("compute_ndvi_by_multispectral", "vegetation NDVI"),
        nd("compute_ndwi_by_multispectral", "water NDWI"),
        tool(
            "theme_index_lookup",
            Spectral,
            "Recommend the spectral index expression and required bands for a theme such as vegetation, water, urban, or snow.",
            vec![req("theme", ParamType::Text, "theme keyword")],
        ),
        // relationship and measurement (4)
        tool(
            "get_bbox_geospatial_relationship",
            RelationMeasure,
            "Compute the coarse relative position, overlap, and IoU between two boxes or points.",
            vec![
                req("a", ParamType::BoxOrPoint, "first box [x0,y0,x1,y1] or point [x,y]"),
                req("b", ParamType::BoxOrPoint, "second box [x0,y0,x1,y1] or point [x,y]"),
                opt("frame_width", ParamType::Number, "image width the coordinates live in"),
                opt("frame_height", ParamType::Number, "image height the coordinates live in"),
            ],
        ),
        tool(
            "get_mask_geospatial_relationship",
            RelationMeasure,
            "Compare two binary masks for overlap, containment, and centroid direction.",
            vec![
                req("mask_a", ParamType::Mask, "first mask handle"),
                req("mask_b", ParamType::Mask, "second mask handle"),
            ],
        ),
        tool(
            "normalize_bounding_boxes",
            RelationMeasure,
            "Rescale box coordinates from one image size to another shared scale.",
            vec![
                req("boxes", ParamType::BoxArray, "boxes as [x0,y0,x1,y1] arrays"),
                req("from_width", ParamType::Number, "source image width"),
                req("from_height", ParamType::Number, "source image height"),
                req("to_width", ParamType::Number, "target image width"),
                req("to_height", ParamType::Number, "target image height"),
            ],
        ),
        tool(
            "basic_calculator",
            RelationMeasure,
            "Evaluate simple arithmetic (+, -, *, /, parentheses) over counts, areas, or ratios.",
            vec![req("expression", ParamType::Text, "arithmetic expression")],
        ),
    ]
}

/// Dataset families of the Skill tool mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFamily {
    Multispectral,
    Fmow,
    Fair1m,
    Dior,
    Dota,
    Xview,
    Xbd,
    M4Sar,
    Sardet100k,
}

impl DatasetFamily {
    pub const ALL: [DatasetFamily; 9] = [
        DatasetFamily::Multispectral,
        DatasetFamily::Fmow,
        DatasetFamily::Fair1m,
        DatasetFamily::Dior,
        DatasetFamily::Dota,
        DatasetFamily::Xview,
        DatasetFamily::Xbd,
        DatasetFamily::M4Sar,
        DatasetFamily::Sardet100k,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetFamily::Multispectral => "multispectral",
            DatasetFamily::Fmow => "fmow",
            DatasetFamily::Fair1m => "fair1m",
            DatasetFamily::Dior => "dior",
            DatasetFamily::Dota => "dota",
            DatasetFamily::Xview => "xview",
            DatasetFamily::Xbd => "xbd",
            DatasetFamily::M4Sar => "m4_sar",
            DatasetFamily::Sardet100k => "sardet_100k",
        }
    }
}

impl fmt::Display for DatasetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetFamily {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        DatasetFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == norm)
            .ok_or_else(|| RegistryError::UnknownFamily(s.to_string()))
    }
}

fn skill_names(family: DatasetFamily) -> &'static [&'static str] {
    match family {
        DatasetFamily::Multispectral => &[
            "get_multispectral_list",
            "get_previous_multispectral",
            "get_next_multispectral",
            "crop_multispectral_image",
            "compute_ndvi_by_multispectral",
            "compute_ndwi_by_multispectral",
            "compute_ndbi_by_multispectral",
            "compute_ndsi_by_multispectral",
            "compute_water_mask_by_multispectral",
            "compute_vegetation_mask_by_multispectral",
            "compute_urban_mask_by_multispectral",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "basic_calculator",
            "theme_index_lookup",
        ],
        DatasetFamily::Fmow => &[
            "get_optical_image_list",
            "get_previous_optical_image",
            "get_next_optical_image",
            "crop_optical_or_sar_image",
            "get_object_bbox_by_optical_image",
            "get_object_mask_by_optical_image",
            "get_road_mask_by_optical_image",
            "get_building_mask_by_optical_image",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "basic_calculator",
            "normalize_bounding_boxes",
        ],
        DatasetFamily::Fair1m => &[
            "crop_optical_or_sar_image",
            "zoom_out_optical_image",
            "move_up_optical_image",
            "move_down_optical_image",
            "move_left_optical_image",
            "move_right_optical_image",
            "basic_calculator",
            "get_object_bbox_by_optical_image",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "get_object_mask_by_optical_image",
        ],
        DatasetFamily::Dior | DatasetFamily::Dota | DatasetFamily::Xview => &[
            "crop_optical_or_sar_image",
            "get_object_bbox_by_optical_image",
            "get_object_mask_by_optical_image",
            "get_road_mask_by_optical_image",
            "get_building_mask_by_optical_image",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "basic_calculator",
            "analyze_optical_scene",
            "describe_optical_object",
        ],
        DatasetFamily::Xbd => &[
            "crop_optical_or_sar_image",
            "get_object_bbox_by_optical_image",
            "get_object_mask_by_optical_image",
            "get_building_mask_by_optical_image",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "basic_calculator",
            "analyze_optical_scene",
            "describe_optical_object",
        ],
        DatasetFamily::M4Sar => &[
            "get_object_bbox_by_optical_sar_image",
            "get_optical_from_sar",
            "get_sar_from_optical",
            "crop_optical_or_sar_image",
            "get_bbox_geospatial_relationship",
            "get_mask_geospatial_relationship",
            "basic_calculator",
        ],
        DatasetFamily::Sardet100k => &[
            "crop_optical_or_sar_image",
            "get_object_bbox_by_sar_image",
            "get_bbox_geospatial_relationship",
            "basic_calculator",
            "get_mask_geospatial_relationship",
        ],
    }
}

/// First-token aliases of the renaming protocol.
pub const RENAME_RULES: &[(&str, &str)] = &[
    ("get", "access"),
    ("compute", "derive"),
    ("analyze", "inspect"),
    ("describe", "characterize"),
    ("crop", "clip"),
    ("move", "shift"),
    ("zoom", "widen"),
    ("normalize", "standardize"),
    ("theme", "topic"),
    ("basic", "simple"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenameOutcome {
    pub name: String,
    /// False when the first token had no alias and passed through unchanged.
    pub mapped: bool,
}

fn map_first_token(name: &str, table: impl Fn(&str) -> Option<&'static str>) -> RenameOutcome {
    let (first, rest) = match name.split_once('_') {
        Some((first, rest)) => (first, Some(rest)),
        None => (name, None),
    };
    match table(first) {
        Some(alias) => RenameOutcome {
            name: match rest {
                Some(rest) => format!("{alias}_{rest}"),
                None => alias.to_string(),
            },
            mapped: true,
        },
        None => RenameOutcome {
            name: name.to_string(),
            mapped: false,
        },
    }
}

/// Substitutes the initial underscore-delimited token with its alias.
pub fn rename_tool_name(name: &str) -> RenameOutcome {
    map_first_token(name, |t| {
        RENAME_RULES.iter().find(|(from, _)| *from == t).map(|(_, to)| *to)
    })
}

/// Inverse of [`rename_tool_name`], used to dispatch renamed calls.
pub fn inverse_rename_tool_name(name: &str) -> RenameOutcome {
    map_first_token(name, |t| {
        RENAME_RULES.iter().find(|(_, to)| *to == t).map(|(from, _)| *from)
    })
}

/// Immutable registry of all 35 tool schemas.
#[derive(Debug)]
pub struct ToolRegistry {
    schemas: Vec<ToolSchema>,
    by_name: BTreeMap<String, usize>,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl ToolRegistry {
    pub fn new() -> Self {
        let schemas = catalog();
        debug_assert_eq!(schemas.len(), TOOL_COUNT);
        let by_name = schemas
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), i))
            .collect();
        Self { schemas, by_name }
    }

    /// Every schema, in catalog order.
    pub fn all(&self) -> &[ToolSchema] {
        &self.schemas
    }

    pub fn get(&self, name: &str) -> Option<&ToolSchema> {
        self.by_name.get(name).map(|i| &self.schemas[*i])
    }

    /// Schemas exposed for a dataset family under the given schema-set mode,
    /// with renaming applied last.
    pub fn schema_set(
        &self,
        family: DatasetFamily,
        mode: super::SchemaSetMode,
        rename: bool,
    ) -> Vec<ToolSchema> {
        let names: Vec<&str> = match mode {
            super::SchemaSetMode::All => self.schemas.iter().map(|s| s.name.as_str()).collect(),
            super::SchemaSetMode::Skill => skill_names(family).to_vec(),
        };
        let mut out: Vec<ToolSchema> = names
            .iter()
            .map(|n| self.get(n).expect("skill names come from the catalog").clone())
            .collect();
        if rename {
            for schema in &mut out {
                schema.name = rename_tool_name(&schema.name).name;
            }
        }
        out
    }
}

/// Chat-tool-convention manifest: one function declaration per schema.
pub fn function_manifest(schemas: &[ToolSchema]) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = schemas
        .iter()
        .map(|schema| {
            let mut properties = serde_json::Map::new();
            let mut required = Vec::new();
            for p in &schema.params {
                properties.insert(
                    p.name.to_string(),
                    json!({ "type": p.ty.json_type(), "description": p.description }),
                );
                if p.required {
                    required.push(p.name);
                }
            }
            json!({
                "type": "function",
                "function": {
                    "name": schema.name,
                    "description": schema.description,
                    "parameters": {
                        "type": "object",
                        "properties": properties,
                        "required": required,
                    }
                }
            })
        })
        .collect();
    serde_json::Value::Array(entries)
}

#[cfg(test)]
mod tests {
    use super::super::SchemaSetMode;
    use super::*;

    #[test]
    fn catalog_has_35_tools_in_the_right_groups() {
        let registry = ToolRegistry::new();
        assert_eq!(registry.all().len(), TOOL_COUNT);
        let count = |g: ToolGroup| registry.all().iter().filter(|s| s.group == g).count();
        assert_eq!(count(ToolGroup::SpatialPlanning), 7);
        assert_eq!(count(ToolGroup::TemporalFetching), 6);
        assert_eq!(count(ToolGroup::CrossmodalSwitching), 2);
        assert_eq!(count(ToolGroup::Semantic), 2);
        assert_eq!(count(ToolGroup::Detection), 3);
        assert_eq!(count(ToolGroup::Masking), 6);
        assert_eq!(count(ToolGroup::Spectral), 5);
        assert_eq!(count(ToolGroup::RelationMeasure), 4);
        let gathering = registry
            .all()
            .iter()
            .filter(|s| s.group.is_gathering())
            .count();
        assert_eq!(gathering, 15);
        assert_eq!(TOOL_COUNT - gathering, 20);
    }

    #[test]
    fn skill_counts_match_the_family_mapping() {
        let registry = ToolRegistry::new();
        let expect = [
            (DatasetFamily::Multispectral, 15),
            (DatasetFamily::Fmow, 12),
            (DatasetFamily::Fair1m, 11),
            (DatasetFamily::Dior, 10),
            (DatasetFamily::Dota, 10),
            (DatasetFamily::Xview, 10),
            (DatasetFamily::Xbd, 9),
            (DatasetFamily::M4Sar, 7),
            (DatasetFamily::Sardet100k, 5),
        ];
        for (family, n) in expect {
            assert_eq!(
                registry.schema_set(family, SchemaSetMode::Skill, false).len(),
                n,
                "{family}"
            );
            assert_eq!(
                registry.schema_set(family, SchemaSetMode::All, false).len(),
                TOOL_COUNT
            );
        }
        let sardet: Vec<String> = registry
            .schema_set(DatasetFamily::Sardet100k, SchemaSetMode::Skill, false)
            .iter()
            .map(|s| s.name.clone())
            .collect();
        assert!(sardet.contains(&"crop_optical_or_sar_image".to_string()));
        assert!(sardet.contains(&"get_object_bbox_by_sar_image".to_string()));
        assert!(sardet.contains(&"get_bbox_geospatial_relationship".to_string()));
        assert!(sardet.contains(&"basic_calculator".to_string()));
        assert!(sardet.contains(&"get_mask_geospatial_relationship".to_string()));
    }

    #[test]
    fn renaming_matches_the_alias_table() {
        assert_eq!(
            rename_tool_name("get_object_bbox_by_sar_image").name,
            "access_object_bbox_by_sar_image"
        );
        assert_eq!(rename_tool_name("basic_calculator").name, "simple_calculator");
        assert_eq!(
            rename_tool_name("crop_optical_or_sar_image").name,
            "clip_optical_or_sar_image"
        );
        assert_eq!(
            rename_tool_name("analyze_optical_scene").name,
            "inspect_optical_scene"
        );
        assert_eq!(
            rename_tool_name("compute_vegetation_mask_by_multispectral").name,
            "derive_vegetation_mask_by_multispectral"
        );
        let unmapped = rename_tool_name("launch_rocket");
        assert_eq!(unmapped.name, "launch_rocket");
        assert!(!unmapped.mapped);
    }

    #[test]
    fn renaming_is_a_bijection_on_the_catalog() {
        let registry = ToolRegistry::new();
        let mut seen = std::collections::BTreeSet::new();
        for schema in registry.all() {
            let renamed = rename_tool_name(&schema.name);
            assert!(renamed.mapped, "{} has no alias", schema.name);
            assert!(seen.insert(renamed.name.clone()), "alias collision");
            let back = inverse_rename_tool_name(&renamed.name);
            assert_eq!(back.name, schema.name);
        }
        assert_eq!(seen.len(), TOOL_COUNT);
    }

    #[test]
    fn renamed_schema_set_renames_every_exposed_name() {
        let registry = ToolRegistry::new();
        let renamed = registry.schema_set(DatasetFamily::M4Sar, SchemaSetMode::Skill, true);
        for schema in &renamed {
            assert!(registry.get(&schema.name).is_none(), "{} leaked", schema.name);
            assert!(registry
                .get(&inverse_rename_tool_name(&schema.name).name)
                .is_some());
        }
    }

    #[test]
    fn manifest_is_chat_tool_shaped() {
        let registry = ToolRegistry::new();
        let manifest = function_manifest(registry.all());
        let entries = manifest.as_array().unwrap();
        assert_eq!(entries.len(), TOOL_COUNT);
        let calc = entries
            .iter()
            .find(|e| e["function"]["name"] == "basic_calculator")
            .unwrap();
        assert_eq!(calc["type"], "function");
        assert_eq!(
            calc["function"]["parameters"]["required"][0],
            "expression"
        );
    }

    #[test]
    fn family_parsing_accepts_paper_spellings() {
        assert_eq!(
            "M4-SAR".parse::<DatasetFamily>().unwrap(),
            DatasetFamily::M4Sar
        );
        assert_eq!(
            "SARDet-100K".parse::<DatasetFamily>().unwrap(),
            DatasetFamily::Sardet100k
        );
        assert!("landsat".parse::<DatasetFamily>().is_err());
    }
}
