//! Cohort cleaning: drop unreliable uploaders before featurization.
//!
//! Three rules run in a fixed order, and each removed participant is
//! attributed to the first rule that catches them, so the report counts
//! partition the removals:
//!
//! 1. uploaded data on fewer than ten days;
//! 2. profile missing a critical field (age, gender, or BMI);
//! 3. reported the exact same sleep duration on more than ten days.

use crate::domain::{Cohort, ParticipantId};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const DEFAULT_MIN_UPLOAD_DAYS: usize = 10;
pub const DEFAULT_CONSTANT_SLEEP_MIN_DAYS: usize = 10;

/// Which participants each rule removed, plus the retained count.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub removed_short_upload: Vec<ParticipantId>,
    pub removed_missing_profile: Vec<ParticipantId>,
    pub removed_constant_sleep: Vec<ParticipantId>,
    pub retained: usize,
}

impl CleaningReport {
    pub fn total_removed(&self) -> usize {
        self.removed_short_upload.len()
            + self.removed_missing_profile.len()
            + self.removed_constant_sleep.len()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (
            self.removed_short_upload.len(),
            self.removed_missing_profile.len(),
            self.removed_constant_sleep.len(),
        )
    }

    /// Flat text summary, one line per rule.
    pub fn to_text(&self) -> String {
        format!(
            "removed: short upload {}, missing critical profile {}, constant sleep {}\nretained: {}\n",
            self.removed_short_upload.len(),
            self.removed_missing_profile.len(),
            self.removed_constant_sleep.len(),
            self.retained,
        )
    }
}

/// Distinct days on which the participant uploaded at least one field.
fn upload_day_count(cohort: &Cohort, id: &ParticipantId) -> usize {
    let mut days = HashSet::new();
    for record in &cohort.records {
        if &record.participant_id == id && record.has_any_data() {
            days.insert(record.day_index);
        }
    }
    days.len()
}

fn violates_short_upload(cohort: &Cohort, id: &ParticipantId, min_days: usize) -> bool {
    upload_day_count(cohort, id) < min_days
}

fn violates_missing_profile(cohort: &Cohort, id: &ParticipantId) -> bool {
    cohort
        .profiles
        .iter()
        .find(|p| &p.id == id)
        .map(|p| !p.has_critical_fields())
        .unwrap_or(false)
}

/// Sleep reported on more than `min_days` days with zero spread across
/// every entry. Exact equality, not a float-std threshold: the rule
/// targets literally repeated values.
fn violates_constant_sleep(cohort: &Cohort, id: &ParticipantId, min_days: usize) -> bool {
    let mut days = HashSet::new();
    let mut values: Vec<f64> = Vec::new();
    for record in &cohort.records {
        if &record.participant_id == id {
            if let Some(sleep) = record.sleep_minutes {
                days.insert(record.day_index);
                values.push(sleep);
            }
        }
    }
    days.len() > min_days && values.windows(2).all(|w| w[0] == w[1])
}

fn partition(
    cohort: &Cohort,
    predicate: impl Fn(&ParticipantId) -> bool,
) -> (Cohort, Vec<ParticipantId>) {
    let removed: Vec<ParticipantId> = cohort
        .profiles
        .iter()
        .filter(|p| predicate(&p.id))
        .map(|p| p.id.clone())
        .collect();
    let removed_set: HashSet<ParticipantId> = removed.iter().cloned().collect();
    let keep: HashSet<ParticipantId> = cohort
        .profiles
        .iter()
        .filter(|p| !removed_set.contains(&p.id))
        .map(|p| p.id.clone())
        .collect();
    (cohort.retain_participants(&keep), removed)
}

/// Remove participants with fewer than `min_days` distinct upload days.
pub fn filter_min_upload_days(cohort: &Cohort, min_days: usize) -> (Cohort, Vec<ParticipantId>) {
    partition(cohort, |id| violates_short_upload(cohort, id, min_days))
}

/// Remove participants missing age, gender, or BMI.
pub fn filter_missing_critical_profile(cohort: &Cohort) -> (Cohort, Vec<ParticipantId>) {
    partition(cohort, |id| violates_missing_profile(cohort, id))
}

/// Remove participants who reported identical sleep on more than
/// `min_days` days.
pub fn filter_constant_sleep(cohort: &Cohort, min_days: usize) -> (Cohort, Vec<ParticipantId>) {
    partition(cohort, |id| violates_constant_sleep(cohort, id, min_days))
}

/// Run all three filters in order and report the partitioned removals.
pub fn clean(cohort: &Cohort) -> (Cohort, CleaningReport) {
    clean_with(
        cohort,
        DEFAULT_MIN_UPLOAD_DAYS,
        DEFAULT_CONSTANT_SLEEP_MIN_DAYS,
    )
}

pub fn clean_with(
    cohort: &Cohort,
    min_upload_days: usize,
    constant_sleep_min_days: usize,
) -> (Cohort, CleaningReport) {
    let (after_short, removed_short_upload) = filter_min_upload_days(cohort, min_upload_days);
    let (after_profile, removed_missing_profile) = filter_missing_critical_profile(&after_short);
    let (retained, removed_constant_sleep) =
        filter_constant_sleep(&after_profile, constant_sleep_min_days);
    let report = CleaningReport {
        removed_short_upload,
        removed_missing_profile,
        removed_constant_sleep,
        retained: retained.n_participants(),
    };
    (retained, report)
}
