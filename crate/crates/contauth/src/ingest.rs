//! Parsing of the two source datasets and the canonical fused CSV.
//!
//! Source exports are comma-separated text. Because neither upstream
//! dataset pins an on-disk layout, both parsers take a [`ColumnMapping`]
//! that names (or positions) the source column for every field. Rows that
//! violate a record invariant are rejected with their row index; nothing is
//! imputed.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::fusion::{FusedDataset, FusedSample};

/// The 15 touch-dynamics feature names, in canonical column order.
pub const STROKE_FEATURES: [&str; 15] = [
    "stroke_duration",
    "start_x",
    "start_y",
    "stop_x",
    "stop_y",
    "direct_end_to_end_distance",
    "mean_resultant_length",
    "up_down_left_right",
    "direction_of_end_to_end_line",
    "largest_deviation_from_end_to_end",
    "average_direction",
    "length_of_trajectory",
    "average_velocity",
    "mid_stroke_pressure",
    "mid_stroke_area_covered",
];

/// The 9 phone-movement feature names, in canonical column order.
pub const MOTION_FEATURES: [&str; 9] = [
    "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "mag_x", "mag_y", "mag_z",
];

/// Canonical CSV header: `user_id` first, then the 15 touch features, then
/// the 9 motion features.
pub const CANONICAL_HEADER: &str = "user_id,stroke_duration,start_x,start_y,stop_x,stop_y,\
direct_end_to_end_distance,mean_resultant_length,up_down_left_right,\
direction_of_end_to_end_line,largest_deviation_from_end_to_end,average_direction,\
length_of_trajectory,average_velocity,mid_stroke_pressure,mid_stroke_area_covered,\
acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,mag_x,mag_y,mag_z";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,
    #[error("missing required column `{column}`")]
    MissingColumn { column: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column `{column}`: malformed numeric cell `{cell}`")]
    BadCell {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },
    #[error("bad header: expected canonical 25-column header")]
    BadHeader,
    #[error("row {row}: unknown user id `{user}` (not in supplied roster)")]
    UnknownUser { row: usize, user: String },
    #[error("column mapping line {line}: expected `field = source_column`")]
    BadMapping { line: usize },
}

/// One swipe gesture: the 15 BioIdent touch-dynamics features plus the
/// user who produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeRecord {
    pub user_id: String,
    pub stroke_duration: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub stop_x: f64,
    pub stop_y: f64,
    pub direct_end_to_end_distance: f64,
    pub mean_resultant_length: f64,
    /// Orientation category code, 0–3.
    pub up_down_left_right: f64,
    pub direction_of_end_to_end_line: f64,
    pub largest_deviation_from_end_to_end: f64,
    pub average_direction: f64,
    pub length_of_trajectory: f64,
    pub average_velocity: f64,
    pub mid_stroke_pressure: f64,
    pub mid_stroke_area_covered: f64,
}

impl StrokeRecord {
    /// Feature values in canonical order (user id excluded).
    pub fn features(&self) -> [f64; 15] {
        [
            self.stroke_duration,
            self.start_x,
            self.start_y,
            self.stop_x,
            self.stop_y,
            self.direct_end_to_end_distance,
            self.mean_resultant_length,
            self.up_down_left_right,
            self.direction_of_end_to_end_line,
            self.largest_deviation_from_end_to_end,
            self.average_direction,
            self.length_of_trajectory,
            self.average_velocity,
            self.mid_stroke_pressure,
            self.mid_stroke_area_covered,
        ]
    }

    /// Checks the stroke invariants; returns a human-readable reason on
    /// failure.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in STROKE_FEATURES.iter().zip(self.features()) {
            if !v.is_finite() {
                return Err(format!("non-finite value in `{name}`"));
            }
        }
        if self.stroke_duration <= 0.0 {
            return Err(format!(
                "stroke_duration must be > 0, got {}",
                self.stroke_duration
            ));
        }
        if self.direct_end_to_end_distance < 0.0 {
            return Err(format!(
                "direct_end_to_end_distance must be >= 0, got {}",
                self.direct_end_to_end_distance
            ));
        }
        if self.length_of_trajectory < self.direct_end_to_end_distance {
            return Err(format!(
                "length_of_trajectory {} < direct_end_to_end_distance {}",
                self.length_of_trajectory, self.direct_end_to_end_distance
            ));
        }
        if !(0.0..=1.0).contains(&self.mean_resultant_length) {
            return Err(format!(
                "mean_resultant_length must be in [0,1], got {}",
                self.mean_resultant_length
            ));
        }
        Ok(())
    }
}

/// One motion snapshot: accelerometer, gyroscope and magnetometer axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionRecord {
    pub user_id: String,
    pub acc_x: f64,
    pub acc_y: f64,
    pub acc_z: f64,
    pub gyro_x: f64,
    pub gyro_y: f64,
    pub gyro_z: f64,
    pub mag_x: f64,
    pub mag_y: f64,
    pub mag_z: f64,
}

impl MotionRecord {
    pub fn features(&self) -> [f64; 9] {
        [
            self.acc_x, self.acc_y, self.acc_z, self.gyro_x, self.gyro_y, self.gyro_z,
            self.mag_x, self.mag_y, self.mag_z,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in MOTION_FEATURES.iter().zip(self.features()) {
            if !v.is_finite() {
                return Err(format!("non-finite value in `{name}`"));
            }
        }
        Ok(())
    }
}

/// Maps record fields to source columns.
///
/// Parsed from plain-text `field = source_column` lines. A key may be
/// prefixed `touch.` or `motion.` to scope it to one parser (useful when
/// the two exports name their user column differently); unprefixed keys
/// apply to both. Fields without an entry default to a source column of
/// the same name. Lines starting with `#` are comments.
#[derive(Debug, Clone, Default)]
pub struct ColumnMapping {
    entries: HashMap<String, String>,
}

impl ColumnMapping {
    /// Identity mapping: every field reads the source column of the same
    /// name.
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(IngestError::BadMapping { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(IngestError::BadMapping { line: i + 1 });
            }
            entries.insert(key.to_string(), value.to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, field: &str, source_column: &str) {
        self.entries
            .insert(field.to_string(), source_column.to_string());
    }

    /// Source column for `field` within `scope` (`touch` or `motion`).
    fn resolve(&self, scope: &str, field: &str) -> String {
        self.entries
            .get(&format!("{scope}.{field}"))
            .or_else(|| self.entries.get(field))
            .cloned()
            .unwrap_or_else(|| field.to_string())
    }
}

/// A parsed comma-separated table: header plus rows of raw cells.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn parse(source: &str) -> Result<Self, IngestError> {
        let mut lines = source.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or(IngestError::EmptyInput)?
            .split(',')
            .map(|c| c.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if cells.len() != header.len() {
                return Err(IngestError::RowLength {
                    row: i + 1,
                    expected: header.len(),
                    found: cells.len(),
                });
            }
            rows.push(cells);
        }
        Ok(Self { header, rows })
    }

    fn column_index(&self, column: &str) -> Result<usize, IngestError> {
        self.header
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IngestError::MissingColumn {
                column: column.to_string(),
            })
    }

    fn numeric_cell(&self, row: usize, col: usize) -> Result<f64, IngestError> {
        let cell = &self.rows[row][col];
        cell.parse::<f64>().map_err(|_| IngestError::BadCell {
            row: row + 1,
            column: self.header[col].clone(),
            cell: cell.clone(),
        })
    }
}

/// Parses a BioIdent-style touch export into validated [`StrokeRecord`]s.
///
/// Rows are rejected (with their 1-based index) when any invariant fails;
/// parsing is order-preserving.
pub fn parse_bioident(source: &str, mapping: &ColumnMapping) -> Result<Vec<StrokeRecord>, IngestError> {
    let table = RawTable::parse(source)?;
    let user_col = table.column_index(&mapping.resolve("touch", "user_id"))?;
    let mut feature_cols = [0usize; 15];
    for (slot, field) in feature_cols.iter_mut().zip(STROKE_FEATURES) {
        *slot = table.column_index(&mapping.resolve("touch", field))?;
    }
    let mut records = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let mut v = [0.0f64; 15];
        for (slot, &col) in v.iter_mut().zip(&feature_cols) {
            *slot = table.numeric_cell(row, col)?;
        }
        let rec = StrokeRecord {
            user_id: table.rows[row][user_col].clone(),
            stroke_duration: v[0],
            start_x: v[1],
            start_y: v[2],
            stop_x: v[3],
            stop_y: v[4],
            direct_end_to_end_distance: v[5],
            mean_resultant_length: v[6],
            up_down_left_right: v[7],
            direction_of_end_to_end_line: v[8],
            largest_deviation_from_end_to_end: v[9],
            average_direction: v[10],
            length_of_trajectory: v[11],
            average_velocity: v[12],
            mid_stroke_pressure: v[13],
            mid_stroke_area_covered: v[14],
        };
        rec.validate()
            .map_err(|reason| IngestError::InvalidRecord { row: row + 1, reason })?;
        records.push(rec);
    }
    Ok(records)
}

/// Parses an HMOG-style sensor export into validated [`MotionRecord`]s.
pub fn parse_hmog(source: &str, mapping: &ColumnMapping) -> Result<Vec<MotionRecord>, IngestError> {
    let table = RawTable::parse(source)?;
    let user_col = table.column_index(&mapping.resolve("motion", "user_id"))?;
    let mut feature_cols = [0usize; 9];
    for (slot, field) in feature_cols.iter_mut().zip(MOTION_FEATURES) {
        *slot = table.column_index(&mapping.resolve("motion", field))?;
    }
    let mut records = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let mut v = [0.0f64; 9];
        for (slot, &col) in v.iter_mut().zip(&feature_cols) {
            *slot = table.numeric_cell(row, col)?;
        }
        let rec = MotionRecord {
            user_id: table.rows[row][user_col].clone(),
            acc_x: v[0],
            acc_y: v[1],
            acc_z: v[2],
            gyro_x: v[3],
            gyro_y: v[4],
            gyro_z: v[5],
            mag_x: v[6],
            mag_y: v[7],
            mag_z: v[8],
        };
        rec.validate()
            .map_err(|reason| IngestError::InvalidRecord { row: row + 1, reason })?;
        records.push(rec);
    }
    Ok(records)
}

/// Renders a fused dataset as canonical CSV: fixed 25-column header,
/// shortest round-trip decimals, `\n` newlines.
pub fn write_canonical(dataset: &FusedDataset) -> String {
    let mut out = String::with_capacity(64 * (dataset.samples().len() + 1));
    out.push_str(CANONICAL_HEADER);
    out.push('\n');
    for sample in dataset.samples() {
        out.push_str(sample.user_id());
        for v in sample.features() {
            // `{}` on f64 is the shortest decimal that round-trips
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses canonical CSV back into a fused dataset.
///
/// When `roster` is supplied, rows naming a user outside it are rejected.
pub fn read_canonical(source: &str, roster: Option<&[String]>) -> Result<FusedDataset, IngestError> {
    let table = RawTable::parse(source)?;
    if table.header.join(",") != CANONICAL_HEADER {
        return Err(IngestError::BadHeader);
    }
    let mut samples = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        let user_id = table.rows[row][0].clone();
        if let Some(roster) = roster {
            if !roster.iter().any(|u| *u == user_id) {
                return Err(IngestError::UnknownUser { row: row + 1, user: user_id });
            }
        }
        let mut features = [0.0f64; 24];
        for (j, slot) in features.iter_mut().enumerate() {
            *slot = table.numeric_cell(row, j + 1)?;
            if !slot.is_finite() {
                return Err(IngestError::InvalidRecord {
                    row: row + 1,
                    reason: format!("non-finite value in column {}", j + 1),
                });
            }
        }
        samples.push(FusedSample::new(user_id, features));
    }
    Ok(FusedDataset::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stroke_csv(rows: &[&str]) -> String {
        let mut s = String::from("user_id,");
        s.push_str(&STROKE_FEATURES.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn minimal_bioident_row() {
        // duration 0.5, trajectory 120 >= direct 100
        let src = stroke_csv(&["u1,0.5,0,0,3,4,100,0.9,1,0.2,5,0.1,120,240,0.4,0.02"]);
        let recs = parse_bioident(&src, &ColumnMapping::identity()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].user_id, "u1");
        assert_eq!(recs[0].stroke_duration, 0.5);
        assert_eq!(recs[0].length_of_trajectory, 120.0);
    }

    #[test]
    fn rejects_trajectory_shorter_than_chord() {
        let src = stroke_csv(&["u1,0.5,0,0,3,4,100,0.9,1,0.2,5,0.1,50,240,0.4,0.02"]);
        let err = parse_bioident(&src, &ColumnMapping::identity()).unwrap_err();
        match err {
            IngestError::InvalidRecord { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let src = stroke_csv(&["u1,0.5,0,0,3,4,100,0.9,abc,0.2,5,0.1,120,240,0.4,0.02"]);
        let err = parse_bioident(&src, &ColumnMapping::identity()).unwrap_err();
        match err {
            IngestError::BadCell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "up_down_left_right");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let src = "user_id,stroke_duration\nu1,0.5\n";
        let err = parse_bioident(src, &ColumnMapping::identity()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { .. }));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            parse_bioident("", &ColumnMapping::identity()),
            Err(IngestError::EmptyInput)
        ));
    }

    #[test]
    fn minimal_hmog_row() {
        let src = "user_id,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,mag_x,mag_y,mag_z\n\
                   h1,0.1,0.2,9.8,0,0,0.01,30,-12,44\n";
        let recs = parse_hmog(src, &ColumnMapping::identity()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].mag_z, 44.0);
    }

    #[test]
    fn hmog_non_numeric_cell() {
        let src = "user_id,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,mag_x,mag_y,mag_z\n\
                   h1,0.1,NaNope,9.8,0,0,0.01,30,-12,44\n";
        let err = parse_hmog(src, &ColumnMapping::identity()).unwrap_err();
        match err {
            IngestError::BadCell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "acc_y");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mapping_renames_and_scopes() {
        let mapping = ColumnMapping::parse(
            "# comment\n\
             touch.user_id = subject\n\
             stroke_duration = dur\n",
        )
        .unwrap();
        let mut src = String::from("subject,dur,");
        src.push_str(&STROKE_FEATURES[1..].join(","));
        src.push_str("\nu1,0.5,0,0,3,4,100,0.9,1,0.2,5,0.1,120,240,0.4,0.02\n");
        let recs = parse_bioident(&src, &mapping).unwrap();
        assert_eq!(recs[0].user_id, "u1");
    }

    #[test]
    fn bad_mapping_line() {
        assert!(matches!(
            ColumnMapping::parse("just words"),
            Err(IngestError::BadMapping { line: 1 })
        ));
    }

    #[test]
    fn short_row_is_rejected() {
        let src = stroke_csv(&["u1,0.5,0,0"]);
        assert!(matches!(
            parse_bioident(&src, &ColumnMapping::identity()),
            Err(IngestError::RowLength { row: 1, .. })
        ));
    }

    #[test]
    fn canonical_round_trip_empty_and_single() {
        let empty = FusedDataset::from_samples(vec![]);
        let text = write_canonical(&empty);
        assert_eq!(text, format!("{CANONICAL_HEADER}\n"));
        assert_eq!(read_canonical(&text, None).unwrap().samples().len(), 0);

        let one = FusedDataset::from_samples(vec![FusedSample::new(
            "u7".into(),
            [0.125; 24],
        )]);
        let text = write_canonical(&one);
        assert_eq!(text.lines().count(), 2);
        let back = read_canonical(&text, None).unwrap();
        assert_eq!(back.samples(), one.samples());
    }

    #[test]
    fn canonical_rejects_unknown_user_with_roster() {
        let d = FusedDataset::from_samples(vec![FusedSample::new("u7".into(), [1.0; 24])]);
        let text = write_canonical(&d);
        let err = read_canonical(&text, Some(&["u1".to_string()])).unwrap_err();
        assert!(matches!(err, IngestError::UnknownUser { row: 1, .. }));
    }
}
