//! Metadata index over the multimodal file corpus.
//!
//! The index is built once from a line-delimited JSON manifest, validates the
//! record invariants (unique ids, symmetric companions, strictly ordered
//! temporal groups, band files only on scenes), and then serves
//! temporal-neighbor, spatial-nearest, and cross-modal-companion lookups as
//! pure in-memory operations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IUGG mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error)]
pub enum DataLakeError {
    #[error("failed to read manifest {path}: {source}")]
    ManifestIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path} line {line}: {source}")]
    ManifestParse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeRange(f64),
    #[error("longitude {0} outside [-180, 180]")]
    LongitudeRange(f64),
    #[error("unknown record id {0}")]
    UnknownRecord(String),
    #[error("record {0} is not part of any temporal group")]
    NotInTemporalGroup(String),
}

/// WGS84 coordinate in degrees. Construction validates the ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, DataLakeError> {
        if !(-90.0..=90.0).contains(&lat_deg) || lat_deg.is_nan() {
            return Err(DataLakeError::LatitudeRange(lat_deg));
        }
        if !(-180.0..=180.0).contains(&lon_deg) || lon_deg.is_nan() {
            return Err(DataLakeError::LongitudeRange(lon_deg));
        }
        Ok(Self { lat_deg, lon_deg })
    }

    pub fn is_valid(&self) -> bool {
        GeoPoint::new(self.lat_deg, self.lon_deg).is_ok()
    }
}

/// Great-circle distance in kilometers between two validated points.
///
/// Symmetric, zero exactly for identical points.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat_deg.to_radians();
    let lat2 = b.lat_deg.to_radians();
    let dlat = (b.lat_deg - a.lat_deg).to_radians();
    let dlon = (b.lon_deg - a.lon_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    OpticalRgb,
    Sar,
    MultispectralScene,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::OpticalRgb => "optical_rgb",
            Modality::Sar => "sar",
            Modality::MultispectralScene => "multispectral_scene",
        };
        f.write_str(s)
    }
}

/// Crop-to-base mapping: the record is a pixel window into another record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseImageRef {
    pub record_id: String,
    pub offset_x: u32,
    pub offset_y: u32,
}

/// One indexed file or scene. `record_id` is a content-hash style opaque
/// string; filenames in `path` are masked the same way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataLakeRecord {
    pub record_id: String,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_time: Option<DateTime<Utc>>,
    pub sensor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_image_id: Option<BaseImageRef>,
    /// `(band_name, relative path)` pairs; non-empty exactly for
    /// `multispectral_scene` records.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub band_files: Vec<(String, String)>,
    pub path: String,
}

impl DataLakeRecord {
    /// Ordering key inside a temporal group. Ties on the full key are an
    /// indexing error, so prev/next lookups stay deterministic.
    fn order_key(&self) -> (Option<DateTime<Utc>>, Option<u32>) {
        (self.capture_time, self.frame_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalDirection {
    Previous,
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    DuplicateRecordId,
    InvalidLocation,
    NonPositiveGsd,
    SceneWithoutBands,
    BandsOnNonScene,
    AsymmetricCompanion,
    DuplicateSequenceOrderKey,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::DuplicateRecordId => "duplicate record id",
            Violation::InvalidLocation => "location outside WGS84 ranges",
            Violation::NonPositiveGsd => "gsd_m must be positive",
            Violation::SceneWithoutBands => "multispectral scene without band files",
            Violation::BandsOnNonScene => "band files on a non-scene record",
            Violation::AsymmetricCompanion => "companion relation not symmetric",
            Violation::DuplicateSequenceOrderKey => "duplicate order key within sequence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    pub record_id: String,
    pub violation: Violation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityCounts {
    pub optical: usize,
    pub sar: usize,
    pub scenes: usize,
}

impl ModalityCounts {
    pub fn total(&self) -> usize {
        self.optical + self.sar + self.scenes
    }
}

/// Which modalities a spatial query should consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModalitySet {
    pub optical: bool,
    pub sar: bool,
    pub scenes: bool,
}

impl ModalitySet {
    pub fn all() -> Self {
        Self { optical: true, sar: true, scenes: true }
    }

    pub fn only(modality: Modality) -> Self {
        let mut s = Self { optical: false, sar: false, scenes: false };
        match modality {
            Modality::OpticalRgb => s.optical = true,
            Modality::Sar => s.sar = true,
            Modality::MultispectralScene => s.scenes = true,
        }
        s
    }

    pub fn contains(&self, modality: Modality) -> bool {
        match modality {
            Modality::OpticalRgb => self.optical,
            Modality::Sar => self.sar,
            Modality::MultispectralScene => self.scenes,
        }
    }
}

/// Result of building an index: the immutable index plus every rejected
/// record with the invariant it violated.
#[derive(Debug)]
pub struct BuildReport {
    pub index: Index,
    pub rejected: Vec<Rejection>,
}

/// Immutable queryable metadata index. Safe to share across threads.
#[derive(Debug, Default)]
pub struct Index {
    records: BTreeMap<String, DataLakeRecord>,
    /// sequence_id -> record ids in ascending (capture_time, frame_index).
    sequences: BTreeMap<String, Vec<String>>,
    counts: ModalityCounts,
}

impl Index {
    /// Parses a line-delimited JSON manifest and builds the index. I/O or
    /// JSON syntax failures abort; invariant violations reject records and
    /// are collected in the report.
    pub fn build_from_manifest(path: &Path) -> Result<BuildReport, DataLakeError> {
        let file = std::fs::File::open(path).map_err(|source| DataLakeError::ManifestIo {
            path: path.display().to_string(),
            source,
        })?;
        let reader = std::io::BufReader::new(file);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| DataLakeError::ManifestIo {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DataLakeRecord =
                serde_json::from_str(&line).map_err(|source| DataLakeError::ManifestParse {
                    path: path.display().to_string(),
                    line: i + 1,
                    source,
                })?;
            records.push(record);
        }
        Ok(Self::build(records))
    }

    /// Validates and indexes an in-memory record set.
    pub fn build(records: Vec<DataLakeRecord>) -> BuildReport {
        let mut rejected = Vec::new();
        let mut accepted: BTreeMap<String, DataLakeRecord> = BTreeMap::new();

        // Per-record structural checks; first occurrence wins on id clashes.
        for record in records {
            if accepted.contains_key(&record.record_id) {
                rejected.push(Rejection {
                    record_id: record.record_id,
                    violation: Violation::DuplicateRecordId,
                });
                continue;
            }
            let violation = if record.location.map_or(false, |p| !p.is_valid()) {
                Some(Violation::InvalidLocation)
            } else if record.gsd_m.map_or(false, |g| !(g > 0.0)) {
                Some(Violation::NonPositiveGsd)
            } else if record.modality == Modality::MultispectralScene && record.band_files.is_empty()
            {
                Some(Violation::SceneWithoutBands)
            } else if record.modality != Modality::MultispectralScene
                && !record.band_files.is_empty()
            {
                Some(Violation::BandsOnNonScene)
            } else {
                None
            };
            match violation {
                Some(violation) => rejected.push(Rejection {
                    record_id: record.record_id,
                    violation,
                }),
                None => {
                    accepted.insert(record.record_id.clone(), record);
                }
            }
        }

        // Temporal groups: every record involved in an order-key tie goes.
        let mut tied: BTreeSet<String> = BTreeSet::new();
        let mut groups: HashMap<&str, Vec<&DataLakeRecord>> = HashMap::new();
        for record in accepted.values() {
            if let Some(seq) = &record.sequence_id {
                groups.entry(seq.as_str()).or_default().push(record);
            }
        }
        for members in groups.values() {
            let mut by_key: HashMap<_, Vec<&str>> = HashMap::new();
            for r in members {
                by_key.entry(r.order_key()).or_default().push(&r.record_id);
            }
            for ids in by_key.values() {
                if ids.len() > 1 {
                    tied.extend(ids.iter().map(|id| id.to_string()));
                }
            }
        }
        for id in tied {
            accepted.remove(&id);
            rejected.push(Rejection {
                record_id: id,
                violation: Violation::DuplicateSequenceOrderKey,
            });
        }

        // Companion symmetry, to a fixpoint: removing one half of a broken
        // pair can orphan further links.
        loop {
            let mut bad: Vec<String> = Vec::new();
            for record in accepted.values() {
                if let Some(partner_id) = &record.companion_id {
                    let ok = accepted.get(partner_id).map_or(false, |partner| {
                        partner.companion_id.as_deref() == Some(record.record_id.as_str())
                            && partner.modality != record.modality
                            && record.modality != Modality::MultispectralScene
                            && partner.modality != Modality::MultispectralScene
                    });
                    if !ok {
                        bad.push(record.record_id.clone());
                    }
                }
            }
            if bad.is_empty() {
                break;
            }
            for id in bad {
                accepted.remove(&id);
                rejected.push(Rejection {
                    record_id: id,
                    violation: Violation::AsymmetricCompanion,
                });
            }
        }

        let mut sequences: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for record in accepted.values() {
            if let Some(seq) = &record.sequence_id {
                sequences
                    .entry(seq.clone())
                    .or_default()
                    .push(record.record_id.clone());
            }
        }
        for ids in sequences.values_mut() {
            ids.sort_by_key(|id| accepted[id].order_key());
        }

        let mut counts = ModalityCounts::default();
        for record in accepted.values() {
            match record.modality {
                Modality::OpticalRgb => counts.optical += 1,
                Modality::Sar => counts.sar += 1,
                Modality::MultispectralScene => counts.scenes += 1,
            }
        }

        rejected.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        BuildReport {
            index: Index {
                records: accepted,
                sequences,
                counts,
            },
            rejected,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> ModalityCounts {
        self.counts
    }

    pub fn get(&self, record_id: &str) -> Option<&DataLakeRecord> {
        self.records.get(record_id)
    }

    pub fn require(&self, record_id: &str) -> Result<&DataLakeRecord, DataLakeError> {
        self.get(record_id)
            .ok_or_else(|| DataLakeError::UnknownRecord(record_id.to_string()))
    }

    /// All records in ascending record-id order.
    pub fn records(&self) -> impl Iterator<Item = &DataLakeRecord> {
        self.records.values()
    }

    /// Full temporal group of the record, ascending capture order. A record
    /// outside any sequence is its own singleton group.
    pub fn temporal_list(&self, record_id: &str) -> Result<Vec<&DataLakeRecord>, DataLakeError> {
        let record = self.require(record_id)?;
        match &record.sequence_id {
            None => Ok(vec![record]),
            Some(seq) => Ok(self.sequences[seq]
                .iter()
                .map(|id| &self.records[id])
                .collect()),
        }
    }

    /// Strictly adjacent record in capture order within the same group, or
    /// `None` at a boundary.
    pub fn temporal_neighbor(
        &self,
        record_id: &str,
        direction: TemporalDirection,
    ) -> Result<Option<&DataLakeRecord>, DataLakeError> {
        let record = self.require(record_id)?;
        let seq = record
            .sequence_id
            .as_ref()
            .ok_or_else(|| DataLakeError::NotInTemporalGroup(record_id.to_string()))?;
        let ids = &self.sequences[seq];
        let pos = ids.iter().position(|id| id == record_id).expect("indexed");
        let neighbor = match direction {
            TemporalDirection::Previous => pos.checked_sub(1),
            TemporalDirection::Next => {
                if pos + 1 < ids.len() {
                    Some(pos + 1)
                } else {
                    None
                }
            }
        };
        Ok(neighbor.map(|i| &self.records[&ids[i]]))
    }

    /// Geolocated record of an allowed modality closest to `point`; ties are
    /// broken by lexicographic record id (scan order already guarantees it).
    pub fn nearest_record(
        &self,
        point: GeoPoint,
        filter: ModalitySet,
    ) -> Option<(&DataLakeRecord, f64)> {
        let mut best: Option<(&DataLakeRecord, f64)> = None;
        for record in self.records.values() {
            if !filter.contains(record.modality) {
                continue;
            }
            let Some(location) = record.location else {
                continue;
            };
            let d = haversine_km(point, location);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((record, d));
            }
        }
        best
    }

    /// Aligned cross-modal partner, or `None` for unpaired records.
    pub fn companion(&self, record_id: &str) -> Result<Option<&DataLakeRecord>, DataLakeError> {
        let record = self.require(record_id)?;
        Ok(record
            .companion_id
            .as_ref()
            .map(|id| &self.records[id.as_str()]))
    }
}

/// Nearest-training-source distance statistics for a split leakage audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearestAuditStats {
    pub test_count: usize,
    pub median_km: f64,
    pub p90_km: f64,
    pub frac_within_1km: f64,
}

/// For each test point, the distance to its nearest train point; summarized
/// as median, P90 (linear-interpolation quantile), and the share under 1 km.
pub fn nearest_train_audit(test: &[GeoPoint], train: &[GeoPoint]) -> Option<NearestAuditStats> {
    if test.is_empty() || train.is_empty() {
        return None;
    }
    let mut nearest: Vec<f64> = test
        .iter()
        .map(|t| {
            train
                .iter()
                .map(|s| haversine_km(*t, *s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nearest.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let within = nearest.iter().filter(|d| **d < 1.0).count();
    Some(NearestAuditStats {
        test_count: nearest.len(),
        median_km: quantile_sorted(&nearest, 0.5),
        p90_km: quantile_sorted(&nearest, 0.9),
        frac_within_1km: within as f64 / nearest.len() as f64,
    })
}

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn record(id: &str, modality: Modality) -> DataLakeRecord {
        DataLakeRecord {
            record_id: id.to_string(),
            modality,
            location: None,
            capture_time: None,
            sensor: "synthetic".to_string(),
            gsd_m: Some(0.5),
            sequence_id: None,
            frame_index: None,
            companion_id: None,
            base_image_id: None,
            band_files: if modality == Modality::MultispectralScene {
                vec![("B2".to_string(), "scenes/x/B2.rpf".to_string())]
            } else {
                Vec::new()
            },
            path: format!("rasters/{id}.rpf"),
        }
    }

    fn at(id: &str, seq: &str, day: u32) -> DataLakeRecord {
        let mut r = record(id, Modality::OpticalRgb);
        r.sequence_id = Some(seq.to_string());
        r.capture_time = Some(Utc.with_ymd_and_hms(2021, 3, day, 0, 0, 0).unwrap());
        r
    }

    #[test]
    fn empty_manifest_builds_empty_index() {
        let report = Index::build(Vec::new());
        assert_eq!(report.index.len(), 0);
        assert!(report.rejected.is_empty());
    }

    #[test]
    fn duplicate_ids_reject_later_record() {
        let report = Index::build(vec![
            record("a", Modality::OpticalRgb),
            record("a", Modality::Sar),
        ]);
        assert_eq!(report.index.len(), 1);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].violation, Violation::DuplicateRecordId);
        assert_eq!(report.index.get("a").unwrap().modality, Modality::OpticalRgb);
    }

    #[test]
    fn asymmetric_companion_rejects_the_pair() {
        let mut a = record("a", Modality::OpticalRgb);
        a.companion_id = Some("b".to_string());
        let mut b = record("b", Modality::Sar);
        b.companion_id = Some("c".to_string());
        let report = Index::build(vec![a, b]);
        assert_eq!(report.index.len(), 0);
        assert_eq!(report.rejected.len(), 2);
        assert!(report
            .rejected
            .iter()
            .all(|r| r.violation == Violation::AsymmetricCompanion));
    }

    #[test]
    fn companion_requires_opposite_modalities() {
        let mut a = record("a", Modality::OpticalRgb);
        a.companion_id = Some("b".to_string());
        let mut b = record("b", Modality::OpticalRgb);
        b.companion_id = Some("a".to_string());
        let report = Index::build(vec![a, b]);
        assert_eq!(report.index.len(), 0);
        assert_eq!(report.rejected.len(), 2);
    }

    #[test]
    fn scene_without_bands_rejected() {
        let mut s = record("s", Modality::MultispectralScene);
        s.band_files.clear();
        let report = Index::build(vec![s]);
        assert_eq!(report.rejected[0].violation, Violation::SceneWithoutBands);
    }

    #[test]
    fn sequence_tie_rejects_all_tied_records() {
        let a = at("a", "seq", 1);
        let b = at("b", "seq", 2);
        let c = {
            let mut c = at("c", "seq", 2);
            c.frame_index = None;
            c
        };
        let report = Index::build(vec![a, b, c]);
        assert_eq!(report.index.len(), 1);
        assert_eq!(report.rejected.len(), 2);
        assert!(report
            .rejected
            .iter()
            .all(|r| r.violation == Violation::DuplicateSequenceOrderKey));
    }

    #[test]
    fn temporal_neighbor_walks_capture_order() {
        let report = Index::build(vec![at("b", "s", 2), at("a", "s", 1), at("c", "s", 3)]);
        let index = &report.index;
        assert!(index
            .temporal_neighbor("a", TemporalDirection::Previous)
            .unwrap()
            .is_none());
        let next = index
            .temporal_neighbor("b", TemporalDirection::Next)
            .unwrap()
            .unwrap();
        assert_eq!(next.record_id, "c");
        // derived from a plain sort over the fixture dates
        let listed: Vec<_> = index
            .temporal_list("b")
            .unwrap()
            .iter()
            .map(|r| r.record_id.clone())
            .collect();
        assert_eq!(listed, vec!["a", "b", "c"]);
    }

    #[test]
    fn temporal_list_singleton() {
        let report = Index::build(vec![record("solo", Modality::OpticalRgb)]);
        let list = report.index.temporal_list("solo").unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].record_id, "solo");
    }

    #[test]
    fn neighbor_requires_temporal_group() {
        let report = Index::build(vec![record("solo", Modality::OpticalRgb)]);
        let err = report
            .index
            .temporal_neighbor("solo", TemporalDirection::Next)
            .unwrap_err();
        assert!(matches!(err, DataLakeError::NotInTemporalGroup(_)));
        assert!(matches!(
            report.index.temporal_neighbor("nope", TemporalDirection::Next),
            Err(DataLakeError::UnknownRecord(_))
        ));
    }

    #[test]
    fn haversine_identity_and_quarter_meridian() {
        let origin = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(haversine_km(origin, origin), 0.0);
        let east = GeoPoint::new(0.0, 90.0).unwrap();
        // analytic (pi/2) * R
        let expected = std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM;
        assert!((haversine_km(origin, east) - expected).abs() < 1e-9);
        assert!((haversine_km(origin, east) - 10_007.557).abs() < 0.01);
    }

    #[test]
    fn geopoint_rejects_out_of_range() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn nearest_record_matches_full_scan() {
        let mut records = Vec::new();
        // deterministic pseudo-grid of 50 geolocated records
        for i in 0..50u32 {
            let mut r = record(&format!("r{i:02}"), Modality::OpticalRgb);
            let lat = -60.0 + (i as f64 * 7.3) % 120.0;
            let lon = -170.0 + (i as f64 * 31.7) % 340.0;
            r.location = Some(GeoPoint::new(lat, lon).unwrap());
            records.push(r);
        }
        let report = Index::build(records);
        let query = GeoPoint::new(10.0, 20.0).unwrap();
        let (hit, dist) = report
            .index
            .nearest_record(query, ModalitySet::all())
            .unwrap();
        // brute-force oracle over every record
        for r in report.index.records() {
            let d = haversine_km(query, r.location.unwrap());
            assert!(dist <= d + 1e-12, "{} closer than reported", r.record_id);
        }
        let best = report
            .index
            .records()
            .map(|r| (haversine_km(query, r.location.unwrap()), r.record_id.clone()))
            .fold(None::<(f64, String)>, |acc, cur| match acc {
                None => Some(cur),
                Some(best) => Some(if cur.0 < best.0 { cur } else { best }),
            })
            .unwrap();
        assert_eq!(hit.record_id, best.1);
    }

    #[test]
    fn nearest_record_respects_filter_and_absence() {
        let mut sar = record("s", Modality::Sar);
        sar.location = Some(GeoPoint::new(1.0, 1.0).unwrap());
        let report = Index::build(vec![record("no-geo", Modality::OpticalRgb), sar]);
        let q = GeoPoint::new(0.0, 0.0).unwrap();
        assert!(report
            .index
            .nearest_record(q, ModalitySet::only(Modality::OpticalRgb))
            .is_none());
        let (hit, _) = report
            .index
            .nearest_record(q, ModalitySet::only(Modality::Sar))
            .unwrap();
        assert_eq!(hit.record_id, "s");
    }

    #[test]
    fn companion_round_trips() {
        let mut a = record("a", Modality::OpticalRgb);
        a.companion_id = Some("b".to_string());
        let mut b = record("b", Modality::Sar);
        b.companion_id = Some("a".to_string());
        let report = Index::build(vec![a, b, record("c", Modality::OpticalRgb)]);
        let index = &report.index;
        assert!(report.rejected.is_empty());
        for r in index.records() {
            if let Some(partner) = index.companion(&r.record_id).unwrap() {
                assert_ne!(partner.modality, r.modality);
                let back = index.companion(&partner.record_id).unwrap().unwrap();
                assert_eq!(back.record_id, r.record_id);
            }
        }
        assert!(index.companion("c").unwrap().is_none());
    }

    #[test]
    fn audit_median_matches_all_pairs_scan() {
        let train: Vec<GeoPoint> = (0..20)
            .map(|i| GeoPoint::new((i as f64) - 10.0, (i as f64) * 2.0 - 20.0).unwrap())
            .collect();
        let test: Vec<GeoPoint> = (0..7)
            .map(|i| GeoPoint::new((i as f64) * 3.0 - 9.0, (i as f64) * -4.0 + 12.0).unwrap())
            .collect();
        let stats = nearest_train_audit(&test, &train).unwrap();
        // O(n^2) oracle
        let mut dists: Vec<f64> = test
            .iter()
            .map(|t| {
                train
                    .iter()
                    .map(|s| haversine_km(*t, *s))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(stats.median_km, dists[3]);
        assert_eq!(stats.test_count, 7);
    }
}
