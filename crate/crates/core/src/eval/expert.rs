//! The blood-pressure expert rule: hypertension when at least two
//! readings on at least two distinct days exceed 140 mmHg systolic, or
//! likewise 90 mmHg diastolic. Thresholds are strict (more than).

use crate::domain::{Cell, Cohort, FeatureMatrix, ParticipantId};
use std::collections::{HashMap, HashSet};

pub const DEFAULT_SYSTOLIC_THRESHOLD: f64 = 140.0;
pub const DEFAULT_DIASTOLIC_THRESHOLD: f64 = 90.0;

/// One dated reading: (day index, systolic, diastolic).
pub type DatedReading = (u32, f64, f64);

/// Apply the rule to a participant's raw reading history. Order of the
/// readings does not matter.
pub fn expert_rule_raw(
    readings: &[DatedReading],
    systolic_threshold: f64,
    diastolic_threshold: f64,
) -> bool {
    let exceeds = |pick: fn(&DatedReading) -> f64, threshold: f64| {
        let mut count = 0usize;
        let mut days = HashSet::new();
        for reading in readings {
            if pick(reading) > threshold {
                count += 1;
                days.insert(reading.0);
            }
        }
        count >= 2 && days.len() >= 2
    };
    exceeds(|r| r.1, systolic_threshold) || exceeds(|r| r.2, diastolic_threshold)
}

/// Apply the rule to imputed features, treating the former- and
/// latter-half means as two readings on two occasions.
pub fn expert_rule_imputed(
    sbp_former: f64,
    sbp_latter: f64,
    dbp_former: f64,
    dbp_latter: f64,
    systolic_threshold: f64,
    diastolic_threshold: f64,
) -> bool {
    (sbp_former > systolic_threshold && sbp_latter > systolic_threshold)
        || (dbp_former > diastolic_threshold && dbp_latter > diastolic_threshold)
}

/// Collect every participant's dated BP readings.
pub fn bp_histories(cohort: &Cohort) -> HashMap<ParticipantId, Vec<DatedReading>> {
    let mut histories: HashMap<ParticipantId, Vec<DatedReading>> = HashMap::new();
    for record in &cohort.records {
        for bp in &record.bp_readings {
            histories
                .entry(record.participant_id.clone())
                .or_default()
                .push((record.day_index, bp.systolic, bp.diastolic));
        }
    }
    histories
}

/// Rule predictions over an imputed feature matrix, one per row.
pub fn imputed_rule_predictions(
    matrix: &FeatureMatrix,
    systolic_threshold: f64,
    diastolic_threshold: f64,
) -> Vec<bool> {
    let col = |name: &str| matrix.column_index(name).expect("bp feature column");
    let sbp_f = col("sbp_f");
    let sbp_l = col("sbp_l");
    let dbp_f = col("dbp_f");
    let dbp_l = col("dbp_l");
    let value = |cell: Cell| cell.as_number().unwrap_or(f64::NEG_INFINITY);
    matrix
        .values
        .iter()
        .map(|row| {
            expert_rule_imputed(
                value(row[sbp_f]),
                value(row[sbp_l]),
                value(row[dbp_f]),
                value(row[dbp_l]),
                systolic_threshold,
                diastolic_threshold,
            )
        })
        .collect()
}
