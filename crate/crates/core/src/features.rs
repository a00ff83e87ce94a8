//! Feature engineering: turn each participant's daily records into one
//! row of the 35-attribute schema.
//!
//! Attributes that evolve over the study are summarized three ways: the
//! overall mean, the means of the former and latter halves of the
//! participant's upload days, and the absolute change between the two
//! halves. Blood glucose additionally gets the gap between before-meal
//! and after-meal means, and physical activity collapses into a single
//! intensity-weighted score.

use crate::domain::{
    ActivityKind, Cell, Cohort, ColumnKind, ColumnSpec, DailyRecord, Drinking, Ethnicity,
    FeatureMatrix, Gender, MealTag, ParticipantProfile, Smoking,
};
use crate::error::Error;
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Number of engineered attributes per participant.
pub const N_ATTRIBUTES: usize = 35;

/// Activities performed by fewer than this many distinct participants
/// are folded into `Others` before scoring.
pub const DEFAULT_RARE_ACTIVITY_MIN_PARTICIPANTS: usize = 50;

/// Energy-expenditure intensity code per activity kind.
pub fn intensity_code(kind: ActivityKind) -> f64 {
    match kind {
        ActivityKind::Housework => 2.5,
        ActivityKind::Walking => 3.5,
        ActivityKind::Jogging => 6.0,
        ActivityKind::AerobicWorkout => 8.0,
        ActivityKind::Cycling => 4.0,
        ActivityKind::Swimming => 6.0,
        ActivityKind::Others => 6.0,
    }
}

/// The fixed 35-column schema, in attribute-index order.
pub fn canonical_schema() -> Vec<ColumnSpec> {
    let gender: Vec<&str> = Gender::ALL.iter().map(|g| g.as_str()).collect();
    let ethnicity: Vec<&str> = Ethnicity::ALL.iter().map(|e| e.as_str()).collect();
    let smoking: Vec<&str> = Smoking::ALL.iter().map(|s| s.as_str()).collect();
    let drinking: Vec<&str> = Drinking::ALL.iter().map(|d| d.as_str()).collect();
    vec![
        ColumnSpec::categorical("gender", &gender),
        ColumnSpec::numeric("age", Some("years")),
        ColumnSpec::categorical("ethnicity", &ethnicity),
        ColumnSpec::numeric("bmi", Some("kg/m2")),
        ColumnSpec::categorical("smoking", &smoking),
        ColumnSpec::categorical("drinking", &drinking),
        ColumnSpec::numeric("bg", Some("mmol/L")),
        ColumnSpec::numeric("bg_bm", Some("mmol/L")),
        ColumnSpec::numeric("bg_am", Some("mmol/L")),
        ColumnSpec::numeric("bg_c", Some("mmol/L")),
        ColumnSpec::numeric("sbp", Some("mmHg")),
        ColumnSpec::numeric("sbp_f", Some("mmHg")),
        ColumnSpec::numeric("sbp_l", Some("mmHg")),
        ColumnSpec::numeric("sbp_c", Some("mmHg")),
        ColumnSpec::numeric("dbp", Some("mmHg")),
        ColumnSpec::numeric("dbp_f", Some("mmHg")),
        ColumnSpec::numeric("dbp_l", Some("mmHg")),
        ColumnSpec::numeric("dbp_c", Some("mmHg")),
        ColumnSpec::numeric("step", Some("steps")),
        ColumnSpec::numeric("step_f", Some("steps")),
        ColumnSpec::numeric("step_l", Some("steps")),
        ColumnSpec::numeric("step_c", Some("steps")),
        ColumnSpec::numeric("step_count", Some("events")),
        ColumnSpec::numeric("step_f_count", Some("events")),
        ColumnSpec::numeric("step_l_count", Some("events")),
        ColumnSpec::numeric("step_c_count", Some("events")),
        ColumnSpec::numeric("sleep", Some("minutes")),
        ColumnSpec::numeric("sleep_f", Some("minutes")),
        ColumnSpec::numeric("sleep_l", Some("minutes")),
        ColumnSpec::numeric("sleep_c", Some("minutes")),
        ColumnSpec::numeric("sleep_count", Some("events")),
        ColumnSpec::numeric("sleep_f_count", Some("events")),
        ColumnSpec::numeric("sleep_l_count", Some("events")),
        ColumnSpec::numeric("sleep_c_count", Some("events")),
        ColumnSpec::numeric("activity", Some("score")),
    ]
}

/// One participant's records divided evenly at the chronological
/// midpoint; odd counts put the extra record in the former half.
#[derive(Debug, Clone)]
pub struct HalfSplit<'a> {
    pub former: Vec<&'a DailyRecord>,
    pub latter: Vec<&'a DailyRecord>,
}

/// Split records by upload order: the first ceil(n/2) go to the former
/// half. Input order does not matter; records are sorted by day index.
pub fn split_halves<'a>(records: &[&'a DailyRecord]) -> HalfSplit<'a> {
    let mut sorted: Vec<&DailyRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.day_index);
    let cut = sorted.len().div_ceil(2);
    let latter = sorted.split_off(cut);
    HalfSplit {
        former: sorted,
        latter,
    }
}

/// Absolute change between the former- and latter-half means; missing
/// whenever either half is missing.
pub fn change_feature(mean_former: Option<f64>, mean_latter: Option<f64>) -> Option<f64> {
    match (mean_former, mean_latter) {
        (Some(f), Some(l)) => Some((f - l).abs()),
        _ => None,
    }
}

/// Absolute gap between the before-meal and after-meal glucose means.
pub fn bg_gap(mean_before_meal: Option<f64>, mean_after_meal: Option<f64>) -> Option<f64> {
    match (mean_before_meal, mean_after_meal) {
        (Some(bm), Some(am)) => Some((am - bm).abs()),
        _ => None,
    }
}

/// Relabel as `Others` every activity kind uploaded by fewer than
/// `min_participants` distinct participants across the whole cohort.
pub fn fold_rare_activities(records: &[DailyRecord], min_participants: usize) -> Vec<DailyRecord> {
    let mut uploaders: HashMap<ActivityKind, HashSet<&crate::domain::ParticipantId>> =
        HashMap::new();
    for record in records {
        for activity in &record.activities {
            uploaders
                .entry(activity.kind)
                .or_default()
                .insert(&record.participant_id);
        }
    }
    let rare: HashSet<ActivityKind> = uploaders
        .iter()
        .filter(|(_, who)| who.len() < min_participants)
        .map(|(&kind, _)| kind)
        .collect();
    if rare.is_empty() {
        return records.to_vec();
    }
    records
        .iter()
        .map(|record| {
            let mut record = record.clone();
            for activity in &mut record.activities {
                if rare.contains(&activity.kind) {
                    activity.kind = ActivityKind::Others;
                }
            }
            record
        })
        .collect()
}

/// Intensity-weighted physical-activity score.
///
/// For each activity kind: intensity code times the number of days the
/// participant performed it times the mean minutes per day-session.
/// Missing when the participant logged no activities at all.
pub fn activity_score(records: &[&DailyRecord]) -> Option<f64> {
    // per kind: the distinct days performed and the total minutes
    let mut per_kind: BTreeMap<usize, (HashSet<u32>, f64)> = BTreeMap::new();
    for record in records {
        for activity in &record.activities {
            let slot = per_kind
                .entry(activity.kind as usize)
                .or_insert_with(|| (HashSet::new(), 0.0));
            slot.0.insert(record.day_index);
            slot.1 += activity.duration_minutes;
        }
    }
    if per_kind.is_empty() {
        return None;
    }
    let mut score = 0.0;
    for (kind_index, (days, total_minutes)) in per_kind {
        let kind = ActivityKind::ALL[kind_index];
        let sessions = days.len() as f64;
        let mean_minutes = total_minutes / sessions;
        score += intensity_code(kind) * sessions * mean_minutes;
    }
    Some(score)
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn count_cell(n: usize) -> Cell {
    if n == 0 {
        Cell::Missing
    } else {
        Cell::Number(n as f64)
    }
}

/// Overall/former/latter/change cells for one value family.
fn summary_cells(all: &[f64], former: &[f64], latter: &[f64]) -> [Cell; 4] {
    let f = mean(former);
    let l = mean(latter);
    [
        Cell::from_option(mean(all)),
        Cell::from_option(f),
        Cell::from_option(l),
        Cell::from_option(change_feature(f, l)),
    ]
}

/// Count cells (overall/former/latter/change) for one value family.
fn count_cells(former_n: usize, latter_n: usize) -> [Cell; 4] {
    let change = if former_n > 0 && latter_n > 0 {
        Cell::Number((former_n as f64 - latter_n as f64).abs())
    } else {
        Cell::Missing
    };
    [
        count_cell(former_n + latter_n),
        count_cell(former_n),
        count_cell(latter_n),
        change,
    ]
}

fn profile_cells(profile: &ParticipantProfile) -> [Cell; 6] {
    [
        match profile.gender {
            Some(g) => Cell::Category(g as usize),
            None => Cell::Missing,
        },
        Cell::from_option(profile.age.map(|a| a as f64)),
        match profile.ethnicity {
            Some(e) => Cell::Category(e as usize),
            None => Cell::Missing,
        },
        Cell::from_option(profile.bmi),
        match profile.smoking {
            Some(s) => Cell::Category(s as usize),
            None => Cell::Missing,
        },
        match profile.drinking {
            Some(d) => Cell::Category(d as usize),
            None => Cell::Missing,
        },
    ]
}

fn featurize_participant(profile: &ParticipantProfile, records: &[&DailyRecord]) -> Vec<Cell> {
    let upload_days: Vec<&DailyRecord> = records
        .iter()
        .copied()
        .filter(|r| r.has_any_data())
        .collect();
    let split = split_halves(&upload_days);

    let bg_values = |records: &[&DailyRecord], tag: Option<MealTag>| -> Vec<f64> {
        records
            .iter()
            .flat_map(|r| r.bg_readings.iter())
            .filter(|b| tag.map_or(true, |t| b.meal_tag == t))
            .map(|b| b.value)
            .collect()
    };
    let bp_values = |records: &[&DailyRecord], systolic: bool| -> Vec<f64> {
        records
            .iter()
            .flat_map(|r| r.bp_readings.iter())
            .map(|b| if systolic { b.systolic } else { b.diastolic })
            .collect()
    };
    let step_values = |records: &[&DailyRecord]| -> Vec<f64> {
        records
            .iter()
            .filter_map(|r| r.steps.map(|s| s as f64))
            .collect()
    };
    let sleep_values = |records: &[&DailyRecord]| -> Vec<f64> {
        records.iter().filter_map(|r| r.sleep_minutes).collect()
    };

    let mut cells = Vec::with_capacity(N_ATTRIBUTES);
    cells.extend(profile_cells(profile));

    // Blood glucose: overall, before-meal, after-meal means plus gap.
    let bg_all = bg_values(&upload_days, None);
    let bm = mean(&bg_values(&upload_days, Some(MealTag::BeforeMeal)));
    let am = mean(&bg_values(&upload_days, Some(MealTag::AfterMeal)));
    cells.push(Cell::from_option(mean(&bg_all)));
    cells.push(Cell::from_option(bm));
    cells.push(Cell::from_option(am));
    cells.push(Cell::from_option(bg_gap(bm, am)));

    for systolic in [true, false] {
        cells.extend(summary_cells(
            &bp_values(&upload_days, systolic),
            &bp_values(&split.former, systolic),
            &bp_values(&split.latter, systolic),
        ));
    }

    let step_former = step_values(&split.former);
    let step_latter = step_values(&split.latter);
    cells.extend(summary_cells(
        &step_values(&upload_days),
        &step_former,
        &step_latter,
    ));
    cells.extend(count_cells(step_former.len(), step_latter.len()));

    let sleep_former = sleep_values(&split.former);
    let sleep_latter = sleep_values(&split.latter);
    cells.extend(summary_cells(
        &sleep_values(&upload_days),
        &sleep_former,
        &sleep_latter,
    ));
    cells.extend(count_cells(sleep_former.len(), sleep_latter.len()));

    cells.push(Cell::from_option(activity_score(&upload_days)));
    cells
}

/// Build the 35-attribute matrix for a cohort. Rare activity kinds are
/// folded cohort-wide first; each participant then summarizes
/// independently.
pub fn build_feature_matrix(cohort: &Cohort) -> Result<FeatureMatrix> {
    build_feature_matrix_with(cohort, DEFAULT_RARE_ACTIVITY_MIN_PARTICIPANTS)
}

pub fn build_feature_matrix_with(
    cohort: &Cohort,
    rare_activity_min_participants: usize,
) -> Result<FeatureMatrix> {
    let folded = fold_rare_activities(&cohort.records, rare_activity_min_participants);
    let folded_cohort = Cohort::new(cohort.profiles.clone(), folded);
    let by_participant = folded_cohort.records_by_participant();

    let rows: Vec<Vec<Cell>> = folded_cohort
        .profiles
        .par_iter()
        .map(|profile| {
            let records = by_participant
                .get(&profile.id)
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            featurize_participant(profile, records)
        })
        .collect();

    FeatureMatrix::new(
        canonical_schema(),
        folded_cohort
            .profiles
            .iter()
            .map(|p| p.id.clone())
            .collect(),
        rows,
    )
}

/// One column of an encoded matrix, with the attribute it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub name: String,
    /// Source attribute in the pre-expansion schema.
    pub source: String,
}

/// Fully numeric matrix: numeric attributes passed through, each
/// categorical attribute expanded into one indicator column per
/// category. Cells that were missing before encoding are listed in
/// `missing`; learners refuse matrices with a non-empty list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub columns: Vec<EncodedColumn>,
    pub row_ids: Vec<crate::domain::ParticipantId>,
    pub rows: Vec<Vec<f64>>,
    /// (row, column) pairs flagged missing, sorted.
    pub missing: Vec<(usize, usize)>,
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Hex digest of the encoded column layout; models store this and
    /// refuse prediction inputs whose layout differs.
    pub fn schema_fingerprint(&self) -> String {
        schema_fingerprint(&self.columns)
    }

    pub fn select_rows(&self, rows: &[usize]) -> EncodedMatrix {
        let index_of: HashMap<usize, usize> = rows
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        EncodedMatrix {
            columns: self.columns.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            missing: self
                .missing
                .iter()
                .filter_map(|(r, c)| index_of.get(r).map(|&new| (new, *c)))
                .collect(),
        }
    }
}

pub fn schema_fingerprint(columns: &[EncodedColumn]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for column in columns {
        hasher.update(column.name.as_bytes());
        hasher.update(b"\x1f");
        hasher.update(column.source.as_bytes());
        hasher.update(b"\x1e");
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Expand categoricals into indicators. For observed cells the
/// indicators of one source attribute sum to exactly 1; missing
/// categorical cells become all-zero indicator blocks flagged missing.
pub fn one_hot_encode(matrix: &FeatureMatrix) -> Result<EncodedMatrix> {
    let mut columns = Vec::new();
    for spec in &matrix.column_schema {
        match &spec.kind {
            ColumnKind::Numeric => columns.push(EncodedColumn {
                name: spec.name.clone(),
                source: spec.name.clone(),
            }),
            ColumnKind::Categorical { categories } => {
                for category in categories {
                    columns.push(EncodedColumn {
                        name: format!("{}={}", spec.name, category),
                        source: spec.name.clone(),
                    });
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(matrix.n_rows());
    let mut missing = Vec::new();
    for (row_index, row) in matrix.values.iter().enumerate() {
        let mut encoded = Vec::with_capacity(columns.len());
        for (cell, spec) in row.iter().zip(&matrix.column_schema) {
            match (&spec.kind, cell) {
                (ColumnKind::Numeric, Cell::Number(v)) => encoded.push(*v),
                (ColumnKind::Numeric, Cell::Missing) => {
                    missing.push((row_index, encoded.len()));
                    encoded.push(0.0);
                }
                (ColumnKind::Categorical { categories }, Cell::Category(c)) => {
                    if *c >= categories.len() {
                        return Err(Error::UnseenCategory {
                            column: spec.name.clone(),
                            value: format!("#{c}"),
                        });
                    }
                    for k in 0..categories.len() {
                        encoded.push(if k == *c { 1.0 } else { 0.0 });
                    }
                }
                (ColumnKind::Categorical { categories }, Cell::Missing) => {
                    for _ in 0..categories.len() {
                        missing.push((row_index, encoded.len()));
                        encoded.push(0.0);
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "cell type does not match column '{}'",
                        spec.name
                    )))
                }
            }
        }
        rows.push(encoded);
    }
    missing.sort_unstable();

    Ok(EncodedMatrix {
        columns,
        row_ids: matrix.row_ids.clone(),
        rows,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActivityEntry, BgReading, BpReading, DiabetesStatus, ParticipantId};

    fn record(id: &str, day: u32) -> DailyRecord {
        DailyRecord::empty(id.into(), day)
    }

    fn profile(id: &str) -> ParticipantProfile {
        ParticipantProfile {
            id: id.into(),
            gender: Some(Gender::Female),
            age: Some(60),
            ethnicity: Some(Ethnicity::Malay),
            bmi: Some(23.4),
            smoking: Some(Smoking::NonSmoker),
            drinking: Some(Drinking::NonDrinker),
            diabetes_label: DiabetesStatus::NoDm,
            hyperlipidemia_label: false,
            hypertension_label: false,
        }
    }

    fn with_steps(id: &str, day: u32, steps: u64) -> DailyRecord {
        let mut r = record(id, day);
        r.steps = Some(steps);
        r
    }

    #[test]
    fn split_even_count() {
        let records: Vec<DailyRecord> = (0..4).map(|d| with_steps("a", d, 100)).collect();
        let refs: Vec<&DailyRecord> = records.iter().collect();
        let split = split_halves(&refs);
        assert_eq!(split.former.len(), 2);
        assert_eq!(split.latter.len(), 2);
    }

    #[test]
    fn split_odd_count_favors_former() {
        let records: Vec<DailyRecord> = (0..5).map(|d| with_steps("a", d, 100)).collect();
        let refs: Vec<&DailyRecord> = records.iter().collect();
        let split = split_halves(&refs);
        assert_eq!(split.former.len(), 3);
        assert_eq!(split.latter.len(), 2);
        assert!(split.former.iter().all(|r| r.day_index < 3));
    }

    #[test]
    fn split_single_record() {
        let records = [with_steps("a", 7, 100)];
        let refs: Vec<&DailyRecord> = records.iter().collect();
        let split = split_halves(&refs);
        assert_eq!(split.former.len(), 1);
        assert!(split.latter.is_empty());
    }

    #[test]
    fn change_feature_examples() {
        assert_eq!(change_feature(Some(120.0), Some(130.0)), Some(10.0));
        assert_eq!(change_feature(Some(42.0), Some(42.0)), Some(0.0));
        assert_eq!(change_feature(None, Some(130.0)), None);
    }

    #[test]
    fn bg_gap_is_absolute() {
        assert_eq!(bg_gap(Some(5.0), Some(8.0)), Some(3.0));
        assert_eq!(bg_gap(Some(8.0), Some(5.0)), Some(3.0));
        assert_eq!(bg_gap(Some(6.0), Some(6.0)), Some(0.0));
    }

    fn cohort_with_activity(kind: ActivityKind, n_participants: usize) -> Vec<DailyRecord> {
        (0..n_participants)
            .map(|i| {
                let mut r = record(&format!("p{i}"), 0);
                r.activities.push(ActivityEntry {
                    kind,
                    duration_minutes: 30.0,
                });
                r
            })
            .collect()
    }

    #[test]
    fn rare_activity_folds_below_threshold() {
        let records = cohort_with_activity(ActivityKind::Swimming, 46);
        let folded = fold_rare_activities(&records, 50);
        assert!(folded
            .iter()
            .all(|r| r.activities[0].kind == ActivityKind::Others));
    }

    #[test]
    fn common_activity_is_kept() {
        let records = cohort_with_activity(ActivityKind::Walking, 315);
        let folded = fold_rare_activities(&records, 50);
        assert!(folded
            .iter()
            .all(|r| r.activities[0].kind == ActivityKind::Walking));
    }

    #[test]
    fn activity_at_exact_threshold_is_kept() {
        let records = cohort_with_activity(ActivityKind::Cycling, 50);
        let folded = fold_rare_activities(&records, 50);
        assert!(folded
            .iter()
            .all(|r| r.activities[0].kind == ActivityKind::Cycling));
    }

    #[test]
    fn activity_score_single_kind() {
        let records: Vec<DailyRecord> = (0..4)
            .map(|d| {
                let mut r = record("a", d);
                r.activities.push(ActivityEntry {
                    kind: ActivityKind::Jogging,
                    duration_minutes: 30.0,
                });
                r
            })
            .collect();
        let refs: Vec<&DailyRecord> = records.iter().collect();
        assert_eq!(activity_score(&refs), Some(720.0));
    }

    #[test]
    fn activity_score_two_kinds() {
        let mut records: Vec<DailyRecord> = (0..10)
            .map(|d| {
                let mut r = record("a", d);
                r.activities.push(ActivityEntry {
                    kind: ActivityKind::Walking,
                    duration_minutes: 30.0,
                });
                r
            })
            .collect();
        for d in 10..15 {
            let mut r = record("a", d);
            r.activities.push(ActivityEntry {
                kind: ActivityKind::Housework,
                duration_minutes: 60.0,
            });
            records.push(r);
        }
        let refs: Vec<&DailyRecord> = records.iter().collect();
        assert_eq!(activity_score(&refs), Some(1800.0));
    }

    #[test]
    fn activity_score_missing_without_entries() {
        let records = [with_steps("a", 0, 100)];
        let refs: Vec<&DailyRecord> = records.iter().collect();
        assert_eq!(activity_score(&refs), None);
    }

    #[test]
    fn activity_score_additive_over_kinds() {
        let mut records = Vec::new();
        for d in 0..6 {
            let mut r = record("a", d);
            r.activities.push(ActivityEntry {
                kind: ActivityKind::Walking,
                duration_minutes: 25.0 + d as f64,
            });
            if d % 2 == 0 {
                r.activities.push(ActivityEntry {
                    kind: ActivityKind::Swimming,
                    duration_minutes: 40.0,
                });
            }
            records.push(r);
        }
        let refs: Vec<&DailyRecord> = records.iter().collect();
        let total = activity_score(&refs).unwrap();

        let only = |kind: ActivityKind| -> f64 {
            let filtered: Vec<DailyRecord> = records
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.activities.retain(|a| a.kind == kind);
                    r
                })
                .collect();
            let refs: Vec<&DailyRecord> = filtered.iter().collect();
            activity_score(&refs).unwrap_or(0.0)
        };
        let sum = only(ActivityKind::Walking) + only(ActivityKind::Swimming);
        assert!((total - sum).abs() < 1e-9);
    }

    #[test]
    fn matrix_has_35_columns_in_order() {
        let cohort = Cohort::new(vec![profile("a")], vec![with_steps("a", 0, 100)]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        assert_eq!(matrix.n_cols(), N_ATTRIBUTES);
        assert_eq!(matrix.column_schema[0].name, "gender");
        assert_eq!(matrix.column_schema[6].name, "bg");
        assert_eq!(matrix.column_schema[10].name, "sbp");
        assert_eq!(matrix.column_schema[18].name, "step");
        assert_eq!(matrix.column_schema[26].name, "sleep");
        assert_eq!(matrix.column_schema[34].name, "activity");
    }

    #[test]
    fn no_bg_readings_leaves_bg_block_missing() {
        let cohort = Cohort::new(vec![profile("a")], vec![with_steps("a", 0, 100)]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        for col in 6..10 {
            assert!(matrix.cell(0, col).is_missing());
        }
    }

    #[test]
    fn bp_only_in_former_half_marks_latter_missing() {
        let mut records = Vec::new();
        for d in 0..4u32 {
            let mut r = with_steps("a", d, 1000);
            if d < 2 {
                r.bp_readings.push(BpReading {
                    systolic: 120.0 + d as f64,
                    diastolic: 80.0,
                    time_of_day: 480,
                });
            }
            records.push(r);
        }
        let cohort = Cohort::new(vec![profile("a")], records);
        let matrix = build_feature_matrix(&cohort).unwrap();
        let col = |name: &str| matrix.column_index(name).unwrap();
        assert!(!matrix.cell(0, col("sbp")).is_missing());
        assert!(!matrix.cell(0, col("sbp_f")).is_missing());
        assert!(matrix.cell(0, col("sbp_l")).is_missing());
        assert!(matrix.cell(0, col("sbp_c")).is_missing());
        assert!(matrix.cell(0, col("dbp_l")).is_missing());
        assert!(matrix.cell(0, col("dbp_c")).is_missing());
    }

    #[test]
    fn overall_mean_is_count_weighted_half_mean() {
        let mut records = Vec::new();
        for d in 0..5u32 {
            let mut r = record("a", d);
            r.bp_readings.push(BpReading {
                systolic: 110.0 + 3.0 * d as f64,
                diastolic: 70.0 + d as f64,
                time_of_day: 480,
            });
            if d % 2 == 0 {
                r.bp_readings.push(BpReading {
                    systolic: 115.0 + d as f64,
                    diastolic: 74.0,
                    time_of_day: 960,
                });
            }
            records.push(r);
        }
        let cohort = Cohort::new(vec![profile("a")], records.clone());
        let matrix = build_feature_matrix(&cohort).unwrap();
        let col = |name: &str| matrix.column_index(name).unwrap();

        let refs: Vec<&DailyRecord> = records.iter().collect();
        let split = split_halves(&refs);
        let nf: usize = split.former.iter().map(|r| r.bp_readings.len()).sum();
        let nl: usize = split.latter.iter().map(|r| r.bp_readings.len()).sum();
        let f = matrix.cell(0, col("sbp_f")).as_number().unwrap();
        let l = matrix.cell(0, col("sbp_l")).as_number().unwrap();
        let overall = matrix.cell(0, col("sbp")).as_number().unwrap();
        let weighted = (f * nf as f64 + l * nl as f64) / (nf + nl) as f64;
        assert!((overall - weighted).abs() / overall.abs() < 1e-9);
    }

    #[test]
    fn bg_block_from_tagged_readings() {
        let mut r = record("a", 0);
        r.bg_readings.push(BgReading {
            value: 5.0,
            meal_tag: MealTag::BeforeMeal,
            time_of_day: 450,
        });
        r.bg_readings.push(BgReading {
            value: 8.0,
            meal_tag: MealTag::AfterMeal,
            time_of_day: 780,
        });
        let cohort = Cohort::new(vec![profile("a")], vec![r]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        let col = |name: &str| matrix.column_index(name).unwrap();
        assert_eq!(matrix.cell(0, col("bg")).as_number(), Some(6.5));
        assert_eq!(matrix.cell(0, col("bg_bm")).as_number(), Some(5.0));
        assert_eq!(matrix.cell(0, col("bg_am")).as_number(), Some(8.0));
        assert_eq!(matrix.cell(0, col("bg_c")).as_number(), Some(3.0));
    }

    #[test]
    fn one_hot_expands_categories() {
        let cohort = Cohort::new(vec![profile("a")], vec![with_steps("a", 0, 100)]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        let encoded = one_hot_encode(&matrix).unwrap();

        let female = encoded.column_index("gender=female").unwrap();
        let male = encoded.column_index("gender=male").unwrap();
        assert_eq!(encoded.rows[0][female], 1.0);
        assert_eq!(encoded.rows[0][male], 0.0);

        // Malay sits second in the six-category ethnicity block.
        let block: Vec<f64> = Ethnicity::ALL
            .iter()
            .map(|e| {
                let idx = encoded
                    .column_index(&format!("ethnicity={}", e.as_str()))
                    .unwrap();
                encoded.rows[0][idx]
            })
            .collect();
        assert_eq!(block, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(block.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn one_hot_flags_missing_blocks() {
        let mut p = profile("a");
        p.gender = None;
        let cohort = Cohort::new(vec![p], vec![with_steps("a", 0, 100)]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        let encoded = one_hot_encode(&matrix).unwrap();
        let female = encoded.column_index("gender=female").unwrap();
        let male = encoded.column_index("gender=male").unwrap();
        assert_eq!(encoded.rows[0][female], 0.0);
        assert_eq!(encoded.rows[0][male], 0.0);
        assert!(encoded.missing.contains(&(0, female)));
        assert!(encoded.missing.contains(&(0, male)));
    }

    #[test]
    fn one_hot_rejects_out_of_range_category() {
        let schema = vec![ColumnSpec::categorical("g", &["x", "y"])];
        let matrix = FeatureMatrix {
            column_schema: schema,
            row_ids: vec![ParticipantId::from("p")],
            values: vec![vec![Cell::Category(5)]],
        };
        assert!(matches!(
            one_hot_encode(&matrix),
            Err(Error::UnseenCategory { .. })
        ));
    }

    #[test]
    fn fingerprint_tracks_schema_changes() {
        let cohort = Cohort::new(vec![profile("a")], vec![with_steps("a", 0, 100)]);
        let matrix = build_feature_matrix(&cohort).unwrap();
        let encoded = one_hot_encode(&matrix).unwrap();
        let fp = encoded.schema_fingerprint();
        let mut tampered = encoded.clone();
        tampered.columns[0].name = "renamed".to_string();
        assert_ne!(fp, tampered.schema_fingerprint());
    }
}
