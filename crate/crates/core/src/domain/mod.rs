//! Core data types shared by every pipeline stage.
//!
//! All types here are plain immutable values: construction is the only
//! mutation point, so they can be shared freely across worker threads.

mod matrix;

pub use matrix::{Cell, ColumnKind, ColumnSpec, Disease, FeatureMatrix, LabelVector};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;

/// Opaque participant identifier, unique within a cohort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ParticipantId {
    fn from(s: &str) -> Self {
        ParticipantId(s.to_string())
    }
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum!(Gender { Female => "female", Male => "male" });

string_enum!(Ethnicity {
    Chinese => "Chinese",
    Malay => "Malay",
    Indian => "Indian",
    Eurasian => "Eurasian",
    Philippines => "Philippines",
    Others => "Others",
});

string_enum!(Smoking {
    NonSmoker => "non-smoker",
    ExSmoker => "ex-smoker",
    Smoker => "smoker",
});

string_enum!(Drinking {
    NonDrinker => "non-drinker",
    ExDrinker => "ex-drinker",
    Drinker => "drinker",
});

string_enum!(
    /// Three-class diabetes status.
    DiabetesStatus {
        NoDm => "no_DM",
        PreDm => "pre_DM",
        Dm => "DM",
    }
);

string_enum!(
    /// Activity kinds kept after rare kinds are folded into `Others`.
    ActivityKind {
        Housework => "Housework",
        Walking => "Walking",
        Jogging => "Jogging",
        AerobicWorkout => "AerobicWorkout",
        Cycling => "Cycling",
        Swimming => "Swimming",
        Others => "Others",
    }
);

/// Immutable per-participant demographics, habits, and disease labels.
///
/// Profile fields are optional because raw intake data can lack them;
/// the cleaning stage removes participants missing any critical field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub id: ParticipantId,
    pub gender: Option<Gender>,
    /// Age in whole years, 18 or older.
    pub age: Option<u32>,
    pub ethnicity: Option<Ethnicity>,
    /// Body mass index in kg/m², strictly positive.
    pub bmi: Option<f64>,
    pub smoking: Option<Smoking>,
    pub drinking: Option<Drinking>,
    pub diabetes_label: DiabetesStatus,
    pub hyperlipidemia_label: bool,
    pub hypertension_label: bool,
}

impl ParticipantProfile {
    /// True when age, gender, and BMI are all present.
    pub fn has_critical_fields(&self) -> bool {
        self.age.is_some() && self.gender.is_some() && self.bmi.is_some()
    }
}

/// One blood-pressure reading: systolic over diastolic, in mmHg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpReading {
    pub systolic: f64,
    pub diastolic: f64,
    /// Minutes since midnight.
    pub time_of_day: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MealTag {
    BeforeMeal,
    AfterMeal,
}

impl MealTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MealTag::BeforeMeal => "before_meal",
            MealTag::AfterMeal => "after_meal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "before_meal" => Some(MealTag::BeforeMeal),
            "after_meal" => Some(MealTag::AfterMeal),
            _ => None,
        }
    }
}

/// One blood-glucose reading in mmol/L, tagged by meal timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgReading {
    pub value: f64,
    pub meal_tag: MealTag,
    /// Minutes since midnight.
    pub time_of_day: u16,
}

/// One activity session with its duration in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityEntry {
    pub kind: ActivityKind,
    pub duration_minutes: f64,
}

/// Everything one participant uploaded on one day.
///
/// Days are integer indices in chronological order rather than calendar
/// dates; ingestion of dated data maps dates to indices by sort order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub participant_id: ParticipantId,
    pub day_index: u32,
    pub steps: Option<u64>,
    pub sleep_minutes: Option<f64>,
    pub bp_readings: Vec<BpReading>,
    pub bg_readings: Vec<BgReading>,
    pub activities: Vec<ActivityEntry>,
}

impl DailyRecord {
    pub fn empty(participant_id: ParticipantId, day_index: u32) -> Self {
        DailyRecord {
            participant_id,
            day_index,
            steps: None,
            sleep_minutes: None,
            bp_readings: Vec::new(),
            bg_readings: Vec::new(),
            activities: Vec::new(),
        }
    }

    /// True when at least one field carries data, making this an upload day.
    pub fn has_any_data(&self) -> bool {
        self.steps.is_some()
            || self.sleep_minutes.is_some()
            || !self.bp_readings.is_empty()
            || !self.bg_readings.is_empty()
            || !self.activities.is_empty()
    }
}

/// A full cohort: profiles plus every daily record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub profiles: Vec<ParticipantProfile>,
    pub records: Vec<DailyRecord>,
}

impl Cohort {
    pub fn new(profiles: Vec<ParticipantProfile>, records: Vec<DailyRecord>) -> Self {
        Cohort { profiles, records }
    }

    pub fn n_participants(&self) -> usize {
        self.profiles.len()
    }

    /// Records grouped per participant, each group sorted by day index.
    /// Participants without records map to an empty slice.
    pub fn records_by_participant(&self) -> BTreeMap<&ParticipantId, Vec<&DailyRecord>> {
        let mut map: BTreeMap<&ParticipantId, Vec<&DailyRecord>> = BTreeMap::new();
        for profile in &self.profiles {
            map.insert(&profile.id, Vec::new());
        }
        for record in &self.records {
            map.entry(&record.participant_id).or_default().push(record);
        }
        for group in map.values_mut() {
            group.sort_by_key(|r| r.day_index);
        }
        map
    }

    /// Retain only the given participants, dropping their records too.
    pub fn retain_participants(&self, keep: &HashSet<ParticipantId>) -> Cohort {
        Cohort {
            profiles: self
                .profiles
                .iter()
                .filter(|p| keep.contains(&p.id))
                .cloned()
                .collect(),
            records: self
                .records
                .iter()
                .filter(|r| keep.contains(&r.participant_id))
                .cloned()
                .collect(),
        }
    }
}

/// One structural problem found by [`validate_cohort`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub participant_id: Option<ParticipantId>,
    pub message: String,
}

/// All structural problems in a cohort; empty means well-formed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a cohort for structural violations: duplicate ids, records for
/// unknown participants, duplicate day indices, non-positive measurement
/// values, and systolic/diastolic inversions. Pure: identical inputs
/// always produce the identical report.
pub fn validate_cohort(cohort: &Cohort) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen_ids = HashSet::new();
    for profile in &cohort.profiles {
        if !seen_ids.insert(&profile.id) {
            violations.push(Violation {
                participant_id: Some(profile.id.clone()),
                message: format!("duplicate id {}", profile.id),
            });
        }
        if let Some(bmi) = profile.bmi {
            if bmi <= 0.0 || !bmi.is_finite() {
                violations.push(Violation {
                    participant_id: Some(profile.id.clone()),
                    message: format!("bmi {bmi} is not positive"),
                });
            }
        }
        if let Some(age) = profile.age {
            if age < 18 {
                violations.push(Violation {
                    participant_id: Some(profile.id.clone()),
                    message: format!("age {age} is below 18"),
                });
            }
        }
    }

    let mut seen_days: HashSet<(&ParticipantId, u32)> = HashSet::new();
    for record in &cohort.records {
        let pid = &record.participant_id;
        if !seen_ids.contains(pid) {
            violations.push(Violation {
                participant_id: Some(pid.clone()),
                message: format!("record for unknown participant {pid}"),
            });
        }
        if !seen_days.insert((pid, record.day_index)) {
            violations.push(Violation {
                participant_id: Some(pid.clone()),
                message: format!("duplicate day_index {} for {pid}", record.day_index),
            });
        }
        for bp in &record.bp_readings {
            if bp.systolic <= bp.diastolic {
                violations.push(Violation {
                    participant_id: Some(pid.clone()),
                    message: format!(
                        "systolic {} <= diastolic {} on day {}",
                        bp.systolic, bp.diastolic, record.day_index
                    ),
                });
            }
            if bp.systolic <= 0.0 || bp.diastolic <= 0.0 {
                violations.push(Violation {
                    participant_id: Some(pid.clone()),
                    message: format!("non-positive BP reading on day {}", record.day_index),
                });
            }
        }
        for bg in &record.bg_readings {
            if bg.value <= 0.0 || !bg.value.is_finite() {
                violations.push(Violation {
                    participant_id: Some(pid.clone()),
                    message: format!("non-positive BG reading on day {}", record.day_index),
                });
            }
        }
        if let Some(sleep) = record.sleep_minutes {
            if sleep < 0.0 || !sleep.is_finite() {
                violations.push(Violation {
                    participant_id: Some(pid.clone()),
                    message: format!("negative sleep duration on day {}", record.day_index),
                });
            }
        }
        for activity in &record.activities {
            if activity.duration_minutes <= 0.0 || !activity.duration_minutes.is_finite() {
                violations.push(Violation {
                    participant_id: Some(pid.clone()),
                    message: format!(
                        "non-positive activity duration on day {}",
                        record.day_index
                    ),
                });
            }
        }
    }

    ValidationReport { violations }
}
