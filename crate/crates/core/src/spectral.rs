//! Multispectral band handling and normalized-difference index computation.
//!
//! A [`BandSet`] is a folder of co-registered single-channel bands from one
//! satellite capture. Band names map to physical roles per platform, and the
//! four supported indices (NDVI, NDWI, NDBI, NDSI) are computed per pixel
//! from the role table, with NaN marking zero-denominator pixels.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{read_patch, BinaryMask, RasterPatch};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("unknown platform {0}")]
    UnknownPlatform(String),
    #[error("band {band} is not part of the {platform} band list")]
    UnknownBand { platform: Platform, band: String },
    #[error("band {band} must be single-channel")]
    MultiChannelBand { band: String },
    #[error("band {band} is {got_w}x{got_h}, scene is {want_w}x{want_h}")]
    BandDimensionMismatch {
        band: String,
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("platform {platform} has no {role} band loaded")]
    MissingBand { platform: Platform, role: BandRole },
    #[error("unknown theme {got}; known themes: {known}")]
    UnknownTheme { got: String, known: String },
    #[error("scene has no bands")]
    EmptyScene,
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
    #[error("failed to read scene descriptor {path}: {detail}")]
    Descriptor { path: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Landsat8,
    Landsat9,
    Sentinel2a,
    Sentinel2b,
    Synthetic,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Platform::Landsat8 => "landsat8",
            Platform::Landsat9 => "landsat9",
            Platform::Sentinel2a => "sentinel2a",
            Platform::Sentinel2b => "sentinel2b",
            Platform::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

impl FromStr for Platform {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "landsat8" => Ok(Platform::Landsat8),
            "landsat9" => Ok(Platform::Landsat9),
            "sentinel2a" => Ok(Platform::Sentinel2a),
            "sentinel2b" => Ok(Platform::Sentinel2b),
            "synthetic" => Ok(Platform::Synthetic),
            other => Err(SpectralError::UnknownPlatform(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandRole {
    CoastalAerosol,
    Blue,
    Green,
    Red,
    RedEdge,
    NearInfrared,
    NarrowNearInfrared,
    WaterVapor,
    Swir1,
    Swir2,
    Thermal,
    SceneClassification,
    CloudProbability,
}

impl fmt::Display for BandRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BandRole::CoastalAerosol => "coastal aerosol",
            BandRole::Blue => "blue",
            BandRole::Green => "green",
            BandRole::Red => "red",
            BandRole::RedEdge => "red edge",
            BandRole::NearInfrared => "near infrared",
            BandRole::NarrowNearInfrared => "narrow near infrared",
            BandRole::WaterVapor => "water vapor",
            BandRole::Swir1 => "SWIR 1",
            BandRole::Swir2 => "SWIR 2",
            BandRole::Thermal => "thermal",
            BandRole::SceneClassification => "scene classification",
            BandRole::CloudProbability => "cloud probability",
        };
        f.write_str(s)
    }
}

const LANDSAT_BANDS: &[(&str, BandRole)] = &[
    ("SR_B1", BandRole::CoastalAerosol),
    ("SR_B2", BandRole::Blue),
    ("SR_B3", BandRole::Green),
    ("SR_B4", BandRole::Red),
    ("SR_B5", BandRole::NearInfrared),
    ("SR_B6", BandRole::Swir1),
    ("SR_B7", BandRole::Swir2),
    ("ST_B10", BandRole::Thermal),
];

const SENTINEL2_BANDS: &[(&str, BandRole)] = &[
    ("B1", BandRole::CoastalAerosol),
    ("B2", BandRole::Blue),
    ("B3", BandRole::Green),
    ("B4", BandRole::Red),
    ("B5", BandRole::RedEdge),
    ("B6", BandRole::RedEdge),
    ("B7", BandRole::RedEdge),
    ("B8", BandRole::NearInfrared),
    ("B8A", BandRole::NarrowNearInfrared),
    ("B9", BandRole::WaterVapor),
    ("B11", BandRole::Swir1),
    ("B12", BandRole::Swir2),
    ("SCL", BandRole::SceneClassification),
    ("MSK_CLDPRB", BandRole::CloudProbability),
];

/// Minimal synthetic platform used by the fixture corpus; Sentinel-2 naming,
/// just the five bands the four indices need.
const SYNTHETIC_BANDS: &[(&str, BandRole)] = &[
    ("B2", BandRole::Blue),
    ("B3", BandRole::Green),
    ("B4", BandRole::Red),
    ("B8", BandRole::NearInfrared),
    ("B11", BandRole::Swir1),
];

/// Band-name-to-role table for a platform.
pub fn band_roles(platform: Platform) -> &'static [(&'static str, BandRole)] {
    match platform {
        Platform::Landsat8 | Platform::Landsat9 => LANDSAT_BANDS,
        Platform::Sentinel2a | Platform::Sentinel2b => SENTINEL2_BANDS,
        Platform::Synthetic => SYNTHETIC_BANDS,
    }
}

fn role_of(platform: Platform, band: &str) -> Option<BandRole> {
    band_roles(platform)
        .iter()
        .find(|(name, _)| *name == band)
        .map(|(_, role)| *role)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Ndvi,
    Ndwi,
    Ndbi,
    Ndsi,
}

impl IndexKind {
    pub fn name(&self) -> &'static str {
        match self {
            IndexKind::Ndvi => "ndvi",
            IndexKind::Ndwi => "ndwi",
            IndexKind::Ndbi => "ndbi",
            IndexKind::Ndsi => "ndsi",
        }
    }

    /// `(a, b)` roles of the normalized difference `(a - b) / (a + b)`.
    pub fn roles(&self) -> (BandRole, BandRole) {
        match self {
            IndexKind::Ndvi => (BandRole::NearInfrared, BandRole::Red),
            IndexKind::Ndwi => (BandRole::Green, BandRole::NearInfrared),
            IndexKind::Ndbi => (BandRole::Swir1, BandRole::NearInfrared),
            IndexKind::Ndsi => (BandRole::Green, BandRole::Swir1),
        }
    }

    pub fn expression(&self) -> &'static str {
        match self {
            IndexKind::Ndvi => "(NIR - Red) / (NIR + Red)",
            IndexKind::Ndwi => "(Green - NIR) / (Green + NIR)",
            IndexKind::Ndbi => "(SWIR1 - NIR) / (SWIR1 + NIR)",
            IndexKind::Ndsi => "(Green - SWIR1) / (Green + SWIR1)",
        }
    }

    /// Conventional remote-sensing default for the "fraction above" statistic
    /// and the thematic masks; overridable per call.
    pub fn default_threshold(&self) -> f64 {
        match self {
            IndexKind::Ndvi => 0.3,
            IndexKind::Ndwi => 0.2,
            IndexKind::Ndbi => 0.0,
            IndexKind::Ndsi => 0.4,
        }
    }
}

impl FromStr for IndexKind {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ndvi" => Ok(IndexKind::Ndvi),
            "ndwi" => Ok(IndexKind::Ndwi),
            "ndbi" => Ok(IndexKind::Ndbi),
            "ndsi" => Ok(IndexKind::Ndsi),
            other => Err(SpectralError::UnknownTheme {
                got: other.to_string(),
                known: "ndvi, ndwi, ndbi, ndsi".to_string(),
            }),
        }
    }
}

/// Co-registered single-channel bands of one capture, reflectance-scaled to
/// `[0, 1]`. Extra bands beyond what an index needs are carried through
/// untouched (scene classification and cloud probability included).
#[derive(Debug, Clone)]
pub struct BandSet {
    platform: Platform,
    bands: BTreeMap<String, RasterPatch>,
    pub capture_time: Option<DateTime<Utc>>,
    pub gsd_m: Option<f64>,
}

impl BandSet {
    pub fn new(
        platform: Platform,
        bands: BTreeMap<String, RasterPatch>,
        capture_time: Option<DateTime<Utc>>,
        gsd_m: Option<f64>,
    ) -> Result<Self, SpectralError> {
        let mut dims: Option<(u32, u32)> = None;
        if bands.is_empty() {
            return Err(SpectralError::EmptyScene);
        }
        for (name, patch) in &bands {
            if role_of(platform, name).is_none() {
                return Err(SpectralError::UnknownBand {
                    platform,
                    band: name.clone(),
                });
            }
            if patch.channels() != 1 {
                return Err(SpectralError::MultiChannelBand { band: name.clone() });
            }
            match dims {
                None => dims = Some((patch.width(), patch.height())),
                Some((w, h)) => {
                    if patch.width() != w || patch.height() != h {
                        return Err(SpectralError::BandDimensionMismatch {
                            band: name.clone(),
                            got_w: patch.width(),
                            got_h: patch.height(),
                            want_w: w,
                            want_h: h,
                        });
                    }
                }
            }
        }
        Ok(Self {
            platform,
            bands,
            capture_time,
            gsd_m,
        })
    }

    pub fn platform(&self) -> Platform {
        self.platform
    }

    pub fn dims(&self) -> (u32, u32) {
        let first = self.bands.values().next().expect("non-empty scene");
        (first.width(), first.height())
    }

    pub fn band_names(&self) -> impl Iterator<Item = &str> {
        self.bands.keys().map(|s| s.as_str())
    }

    pub fn band(&self, name: &str) -> Option<&RasterPatch> {
        self.bands.get(name)
    }

    pub fn band_by_role(&self, role: BandRole) -> Result<&RasterPatch, SpectralError> {
        for (name, patch) in &self.bands {
            if role_of(self.platform, name) == Some(role) {
                return Ok(patch);
            }
        }
        Err(SpectralError::MissingBand {
            platform: self.platform,
            role,
        })
    }

    /// Crops every band to the same normalized AOI, yielding a derived scene.
    pub fn crop(&self, aoi: crate::raster::Aoi) -> Result<BandSet, SpectralError> {
        let mut bands = BTreeMap::new();
        for (name, patch) in &self.bands {
            bands.insert(name.clone(), crate::raster::crop_aoi(patch, aoi)?.patch);
        }
        BandSet::new(self.platform, bands, self.capture_time, self.gsd_m)
    }
}

/// Sidecar descriptor stored next to the band files of a scene folder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneDescriptor {
    pub platform: Platform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_time: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_m: Option<f64>,
}

pub const SCENE_DESCRIPTOR_FILE: &str = "scene.json";

impl SceneDescriptor {
    pub fn write(&self, scene_dir: &Path) -> Result<(), SpectralError> {
        std::fs::create_dir_all(scene_dir).map_err(|e| SpectralError::Descriptor {
            path: scene_dir.display().to_string(),
            detail: e.to_string(),
        })?;
        let path = scene_dir.join(SCENE_DESCRIPTOR_FILE);
        let body = serde_json::to_string_pretty(self).expect("descriptor serializes");
        std::fs::write(&path, body).map_err(|e| SpectralError::Descriptor {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }

    pub fn read(scene_dir: &Path) -> Result<Self, SpectralError> {
        let path = scene_dir.join(SCENE_DESCRIPTOR_FILE);
        let body = std::fs::read_to_string(&path).map_err(|e| SpectralError::Descriptor {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        serde_json::from_str(&body).map_err(|e| SpectralError::Descriptor {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}

/// Loads a band set from `(band_name, path relative to root)` pairs.
pub fn load_bands(
    root: &Path,
    platform: Platform,
    capture_time: Option<DateTime<Utc>>,
    gsd_m: Option<f64>,
    band_files: &[(String, String)],
) -> Result<BandSet, SpectralError> {
    let mut bands = BTreeMap::new();
    for (name, rel) in band_files {
        bands.insert(name.clone(), read_patch(&root.join(rel))?);
    }
    BandSet::new(platform, bands, capture_time, gsd_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub valid_pixels: usize,
    /// Absent when every pixel had a zero denominator.
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub fraction_above: f64,
    pub threshold: f64,
}

/// Per-pixel index grid plus summary statistics over valid pixels.
#[derive(Debug, Clone)]
pub struct IndexResult {
    pub index: IndexKind,
    pub width: u32,
    pub height: u32,
    /// Row-major values in `[-1, 1]`, NaN where the denominator was zero.
    pub values: Vec<f32>,
    pub stats: IndexStats,
}

/// Computes a normalized-difference index over the scene. Pixels with a zero
/// denominator become NaN and are excluded from the statistics.
pub fn compute_index(
    scene: &BandSet,
    kind: IndexKind,
    threshold: Option<f64>,
) -> Result<IndexResult, SpectralError> {
    let (role_a, role_b) = kind.roles();
    let a = scene.band_by_role(role_a)?;
    let b = scene.band_by_role(role_b)?;
    let threshold = threshold.unwrap_or_else(|| kind.default_threshold());
    let values: Vec<f32> = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&va, &vb)| {
            let denom = va + vb;
            if denom == 0.0 {
                f32::NAN
            } else {
                ((va - vb) / denom).clamp(-1.0, 1.0)
            }
        })
        .collect();
    let mut valid: Vec<f64> = values
        .iter()
        .filter(|v| !v.is_nan())
        .map(|v| *v as f64)
        .collect();
    valid.sort_by(|x, y| x.partial_cmp(y).expect("no NaN after filter"));
    let stats = if valid.is_empty() {
        IndexStats {
            valid_pixels: 0,
            mean: None,
            median: None,
            fraction_above: 0.0,
            threshold,
        }
    } else {
        let n = valid.len();
        let mean = valid.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            valid[n / 2]
        } else {
            (valid[n / 2 - 1] + valid[n / 2]) / 2.0
        };
        let above = valid.iter().filter(|v| **v > threshold).count();
        IndexStats {
            valid_pixels: n,
            mean: Some(mean),
            median: Some(median),
            fraction_above: above as f64 / n as f64,
            threshold,
        }
    };
    Ok(IndexResult {
        index: kind,
        width: a.width(),
        height: a.height(),
        values,
        stats,
    })
}

/// Themes with a shipped thematic mask tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theme {
    Vegetation,
    Water,
    Urban,
}

impl Theme {
    pub fn index(&self) -> IndexKind {
        match self {
            Theme::Vegetation => IndexKind::Ndvi,
            Theme::Water => IndexKind::Ndwi,
            Theme::Urban => IndexKind::Ndbi,
        }
    }
}

/// Foreground where the theme's index strictly exceeds the threshold; NaN
/// pixels stay background.
pub fn thematic_mask(
    scene: &BandSet,
    theme: Theme,
    threshold: Option<f64>,
) -> Result<BinaryMask, SpectralError> {
    let result = compute_index(scene, theme.index(), threshold)?;
    let threshold = result.stats.threshold as f32;
    let mut mask = BinaryMask::new(result.width, result.height);
    for y in 0..result.height {
        for x in 0..result.width {
            let v = result.values[(y * result.width + x) as usize];
            if !v.is_nan() && v > threshold {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeIndexInfo {
    pub theme: String,
    pub index_name: &'static str,
    pub expression: &'static str,
    pub required_roles: (BandRole, BandRole),
    pub default_threshold: f64,
}

const KNOWN_THEMES: &[(&str, IndexKind)] = &[
    ("vegetation", IndexKind::Ndvi),
    ("water", IndexKind::Ndwi),
    ("urban", IndexKind::Ndbi),
    ("snow", IndexKind::Ndsi),
];

/// Recommends the index expression and its band roles for a theme.
pub fn theme_index_lookup(theme: &str) -> Result<ThemeIndexInfo, SpectralError> {
    let normalized = theme.trim().to_ascii_lowercase();
    for (name, kind) in KNOWN_THEMES {
        if *name == normalized {
            return Ok(ThemeIndexInfo {
                theme: normalized,
                index_name: kind.name(),
                expression: kind.expression(),
                required_roles: kind.roles(),
                default_threshold: kind.default_threshold(),
            });
        }
    }
    Err(SpectralError::UnknownTheme {
        got: theme.to_string(),
        known: KNOWN_THEMES
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", "),
    })
}
