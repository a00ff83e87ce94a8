//! Synthetic cohort generation.
//!
//! Each participant carries a latent risk state: one shared scalar plus
//! three correlated axes (glycemic, vascular, adiposity). Measurements
//! are noisy views of the axes — glucose readings track the glycemic
//! axis, blood pressure the vascular axis, BMI the adiposity axis, and
//! steps/sleep/activity load negatively on the shared scalar. Disease
//! labels are drawn from per-disease risk drivers built from the same
//! axes (with an interaction term, so the feature/label link is not
//! purely linear), which makes the labels learnable from the features
//! at a strength set by `signal_strength`.
//!
//! Class fractions are hit by rank-thresholding noisy risk scores, and
//! per-family missingness is assigned by quota, so both land on their
//! configured targets up to integer rounding for every seed.
//!
//! Determinism: every participant draws from an RNG stream derived from
//! (seed, participant index), so parallel generation is reproducible
//! and independent of scheduling.

use crate::domain::{
    ActivityEntry, ActivityKind, BgReading, BpReading, Cohort, DailyRecord, DiabetesStatus,
    Disease, Drinking, Ethnicity, Gender, MealTag, ParticipantId, ParticipantProfile, Smoking,
};
use crate::error::Error;
use crate::Result;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Study length in days; day indices run 0..STUDY_DAYS.
pub const STUDY_DAYS: u32 = 90;
/// Upload-day count range for clean participants.
pub const MIN_GENERATED_UPLOAD_DAYS: usize = 10;
pub const MAX_GENERATED_UPLOAD_DAYS: usize = 90;

/// Logistic slope applied to risk drivers at signal_strength = 1.
const SIGNAL_SLOPE_MAX: f64 = 8.0;
/// Loading of each axis on the shared risk scalar.
const AXIS_LOADING: f64 = 0.78;

/// Hard measurement bounds used by the samplers (and asserted in tests).
pub mod ranges {
    pub const BMI: (f64, f64) = (16.44, 55.0);
    pub const BG_BEFORE_MEAL: (f64, f64) = (4.0, 13.27);
    pub const BG_AFTER_MEAL: (f64, f64) = (4.71, 29.0);
    pub const SYSTOLIC: (f64, f64) = (96.0, 163.5);
    pub const DIASTOLIC: (f64, f64) = (57.0, 99.5);
    pub const STEPS: (f64, f64) = (1.0, 27437.0);
    pub const SLEEP_MINUTES: (f64, f64) = (45.0, 604.0);
    pub const ACTIVITY_MINUTES: (f64, f64) = (10.0, 150.0);
    pub const AGE: (f64, f64) = (18.0, 95.0);
}

/// Target class fractions per disease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassRatios {
    /// no_DM, pre_DM, DM fractions; must sum to 1.
    pub diabetes: [f64; 3],
    pub hyperlipidemia_yes: f64,
    pub hypertension_yes: f64,
}

impl Default for ClassRatios {
    fn default() -> Self {
        ClassRatios {
            diabetes: [0.5549, 0.0572, 0.3879],
            hyperlipidemia_yes: 0.5787,
            hypertension_yes: 0.5564,
        }
    }
}

/// Target fraction of participants with no data at all for each
/// attribute family, plus the conditional sub-patterns that shape the
/// half-split and meal-tagged variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissingnessTargets {
    pub bg: f64,
    pub bp: f64,
    pub step: f64,
    pub sleep: f64,
    pub activity: f64,
    /// Among BG uploaders: fraction with before-meal readings.
    pub bg_before_given_any: f64,
    /// Among BG uploaders: fraction with after-meal readings.
    pub bg_after_given_any: f64,
    /// Among uploaders of the family: fraction who stop after the
    /// former half of their upload days.
    pub bp_latter_dropout: f64,
    pub step_latter_dropout: f64,
    pub sleep_latter_dropout: f64,
}

impl Default for MissingnessTargets {
    fn default() -> Self {
        MissingnessTargets {
            bg: 0.6879,
            bp: 0.3062,
            step: 0.0656,
            sleep: 0.1511,
            activity: 0.0517,
            bg_before_given_any: 0.9109,
            bg_after_given_any: 0.6943,
            bp_latter_dropout: 0.1088,
            step_latter_dropout: 0.0213,
            sleep_latter_dropout: 0.0796,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Demographics {
    pub age_mean: f64,
    pub age_std: f64,
    pub female_fraction: f64,
    /// Weights over Chinese, Malay, Indian, Eurasian, Philippines, Others.
    pub ethnicity_weights: [f64; 6],
}

impl Default for Demographics {
    fn default() -> Self {
        Demographics {
            age_mean: 57.96,
            age_std: 13.23,
            female_fraction: 0.6391,
            ethnicity_weights: [0.7838, 0.1065, 0.0859, 0.008, 0.008, 0.0078],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_participants: usize,
    pub seed: u64,
    pub class_ratios: ClassRatios,
    pub missingness: MissingnessTargets,
    pub demographics: Demographics,
    /// 0 = labels independent of features, 1 = strongest planted link.
    pub signal_strength: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_participants: 629,
            seed: 42,
            class_ratios: ClassRatios::default(),
            missingness: MissingnessTargets::default(),
            demographics: Demographics::default(),
            signal_strength: 0.9,
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.n_participants == 0 {
            return Err(Error::InvalidConfig(
                "n_participants must be at least 1".to_string(),
            ));
        }
        let dm_sum: f64 = self.class_ratios.diabetes.iter().sum();
        if (dm_sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "diabetes class ratios sum to {dm_sum}, expected 1"
            )));
        }
        let fractions = [
            self.class_ratios.hyperlipidemia_yes,
            self.class_ratios.hypertension_yes,
            self.missingness.bg,
            self.missingness.bp,
            self.missingness.step,
            self.missingness.sleep,
            self.missingness.activity,
            self.signal_strength,
        ];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidConfig(
                "fractions must lie in [0, 1]".to_string(),
            ));
        }
        Ok(())
    }
}

/// How many violating participants to append per cleaning rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViolationSpec {
    pub n_short_uploaders: usize,
    pub n_missing_profile: usize,
    pub n_constant_sleep: usize,
}

impl Default for ViolationSpec {
    fn default() -> Self {
        ViolationSpec {
            n_short_uploaders: 113,
            n_missing_profile: 6,
            n_constant_sleep: 7,
        }
    }
}

impl ViolationSpec {
    pub const NONE: ViolationSpec = ViolationSpec {
        n_short_uploaders: 0,
        n_missing_profile: 0,
        n_constant_sleep: 0,
    };

    pub fn total(&self) -> usize {
        self.n_short_uploaders + self.n_missing_profile + self.n_constant_sleep
    }
}

/// Per-participant latent risk state, exposed for oracle evaluation in
/// tests; never written to cohort files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentState {
    pub shared: f64,
    pub glycemic: f64,
    pub vascular: f64,
    pub adiposity: f64,
    /// Risk drivers in Disease::ALL order.
    pub drivers: [f64; 3],
}

impl LatentState {
    pub fn driver(&self, disease: Disease) -> f64 {
        match disease {
            Disease::Diabetes => self.drivers[0],
            Disease::Hyperlipidemia => self.drivers[1],
            Disease::Hypertension => self.drivers[2],
        }
    }
}

/// A generated cohort plus its hidden risk states.
#[derive(Debug, Clone)]
pub struct GeneratedCohort {
    pub cohort: Cohort,
    pub latents: Vec<LatentState>,
}

// RNG stream layout: one ChaCha stream per purpose, all under one key.
const STREAM_PARTICIPANT_BASE: u64 = 1;
const STREAM_QUOTA_BASE: u64 = 1 << 40;
const STREAM_INJECT_BASE: u64 = 1 << 41;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Truncated normal by rejection; falls back to clamping after 64
/// attempts so the stream cannot stall on tiny intervals.
fn trunc_normal(rng: &mut ChaCha8Rng, mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..64 {
        let v = mean + std * normal(rng);
        if v >= lo && v <= hi {
            return v;
        }
    }
    mean.clamp(lo, hi)
}

fn logistic_noise(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen_range(1e-12..1.0 - 1e-12);
    (u / (1.0 - u)).ln()
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Risk drivers per disease: axis mix plus an axis-product interaction,
/// scaled to unit variance. The product term carries roughly half the
/// driver variance and is uncorrelated with both axes, so a linear
/// read-out of the features caps well below the full signal while
/// interaction-capable learners can recover it.
fn drivers(glycemic: f64, vascular: f64, adiposity: f64) -> [f64; 3] {
    let r = AXIS_LOADING * AXIS_LOADING;
    let scale = |a: f64, b: f64, c: f64| (a * a + b * b + 2.0 * a * b * r + c * c * (1.0 + r * r)).sqrt();

    let dm = (0.80 * glycemic + 0.18 * adiposity + 0.72 * (glycemic * adiposity - r))
        / scale(0.80, 0.18, 0.72);
    let lip = (0.60 * glycemic + 0.38 * adiposity + 0.70 * (glycemic * adiposity - r))
        / scale(0.60, 0.38, 0.70);
    let htn = (0.62 * vascular + 0.44 * adiposity + 0.80 * (vascular * adiposity - r))
        / scale(0.62, 0.44, 0.80);
    [dm, lip, htn]
}

/// Which families a participant uploads, and in what pattern.
#[derive(Debug, Clone, Copy)]
struct UploadPlan {
    has_bg: bool,
    has_bp: bool,
    has_step: bool,
    has_sleep: bool,
    has_activity: bool,
    bg_before: bool,
    bg_after: bool,
    bp_former_only: bool,
    step_former_only: bool,
    sleep_former_only: bool,
}

/// Length overrides used when synthesizing rule violators.
#[derive(Debug, Clone, Copy, Default)]
struct BodyOverride {
    n_days_range: Option<(usize, usize)>,
    force_sleep_every_day: bool,
}

struct ParticipantBody {
    profile_base: ProfileBase,
    records: Vec<DailyRecord>,
    latent: LatentState,
    label_noise: [f64; 3],
}

struct ProfileBase {
    gender: Gender,
    age: u32,
    ethnicity: Ethnicity,
    bmi: f64,
    smoking: Smoking,
    drinking: Drinking,
}

#[allow(clippy::too_many_arguments)]
fn generate_body(
    rng: &mut ChaCha8Rng,
    id: &ParticipantId,
    config: &GeneratorConfig,
    plan: UploadPlan,
    overrides: BodyOverride,
) -> ParticipantBody {
    // latent axes first so the stream prefix is identical for all plans
    let shared = normal(rng);
    let resid = (1.0 - AXIS_LOADING * AXIS_LOADING).sqrt();
    let glycemic = AXIS_LOADING * shared + resid * normal(rng);
    let vascular = AXIS_LOADING * shared + resid * normal(rng);
    let adiposity = AXIS_LOADING * shared + resid * normal(rng);
    let label_noise = [
        logistic_noise(rng),
        logistic_noise(rng),
        logistic_noise(rng),
    ];

    let demo = &config.demographics;
    let gender = if rng.gen::<f64>() < demo.female_fraction {
        Gender::Female
    } else {
        Gender::Male
    };
    let age = trunc_normal(
        rng,
        demo.age_mean,
        demo.age_std,
        ranges::AGE.0,
        ranges::AGE.1,
    )
    .round() as u32;
    let ethnicity = Ethnicity::ALL[pick_weighted(rng, &demo.ethnicity_weights)];
    let smoking = Smoking::ALL[pick_weighted(rng, &[0.78, 0.13, 0.09])];
    let drinking = Drinking::ALL[pick_weighted(rng, &[0.62, 0.08, 0.30])];
    let bmi = trunc_normal(
        rng,
        25.5 + 3.2 * adiposity,
        1.2,
        ranges::BMI.0,
        ranges::BMI.1,
    );

    // stable per-participant measurement levels
    let sbp_level = 124.0 + 11.0 * vascular + 3.0 * normal(rng);
    let dbp_level = 76.0 + 7.0 * vascular + 2.0 * normal(rng);
    let bg_before_level = 6.5 + 1.35 * glycemic + 0.35 * normal(rng);
    let bg_after_level = bg_before_level + 1.75 + 0.45 * glycemic + 0.3 * normal(rng);
    let step_level = (6400.0 - 950.0 * shared + 500.0 * normal(rng)).clamp(1200.0, 20000.0);
    let sleep_level = (415.0 - 22.0 * shared + 30.0 * normal(rng)).clamp(240.0, 560.0);
    let activity_propensity = (0.42 - 0.15 * shared + 0.08 * normal(rng)).clamp(0.12, 0.85);
    let activity_minutes_level = 42.0 - 7.0 * shared;

    // 1-3 preferred activity kinds per participant
    let kind_weights = [0.30, 0.27, 0.13, 0.08, 0.08, 0.06, 0.08];
    let n_preferred = 1 + pick_weighted(rng, &[0.25, 0.45, 0.30]);
    let mut preferred: Vec<ActivityKind> = Vec::with_capacity(n_preferred);
    while preferred.len() < n_preferred {
        let kind = ActivityKind::ALL[pick_weighted(rng, &kind_weights)];
        if !preferred.contains(&kind) {
            preferred.push(kind);
        }
    }

    let (days_lo, days_hi) = overrides
        .n_days_range
        .unwrap_or((MIN_GENERATED_UPLOAD_DAYS, MAX_GENERATED_UPLOAD_DAYS));
    let n_days = rng.gen_range(days_lo..=days_hi);
    let mut all_days: Vec<u32> = (0..STUDY_DAYS).collect();
    all_days.shuffle(rng);
    let mut days: Vec<u32> = all_days.into_iter().take(n_days).collect();
    days.sort_unstable();

    let former_len = n_days.div_ceil(2);
    let mut records: Vec<DailyRecord> = Vec::with_capacity(n_days);

    for (position, &day) in days.iter().enumerate() {
        let in_former = position < former_len;
        let mut record = DailyRecord::empty(id.clone(), day);

        let step_today = plan.has_step
            && (in_former || !plan.step_former_only)
            && rng.gen::<f64>() < 0.92;
        if step_today {
            let steps = trunc_normal(rng, step_level, 1000.0, ranges::STEPS.0, ranges::STEPS.1);
            record.steps = Some(steps.round() as u64);
        }

        let sleep_today = overrides.force_sleep_every_day
            || (plan.has_sleep
                && (in_former || !plan.sleep_former_only)
                && rng.gen::<f64>() < 0.85);
        if sleep_today {
            let minutes = trunc_normal(
                rng,
                sleep_level,
                38.0,
                ranges::SLEEP_MINUTES.0,
                ranges::SLEEP_MINUTES.1,
            );
            // sleep is reported at minute granularity
            record.sleep_minutes = Some(minutes.round());
        }

        let bp_today =
            plan.has_bp && (in_former || !plan.bp_former_only) && rng.gen::<f64>() < 0.8;
        if bp_today {
            let day_shift = 3.0 * normal(rng);
            for session in 0..2u16 {
                let systolic = trunc_normal(
                    rng,
                    sbp_level + day_shift,
                    2.5,
                    ranges::SYSTOLIC.0,
                    ranges::SYSTOLIC.1,
                );
                let mut diastolic = trunc_normal(
                    rng,
                    dbp_level + 0.5 * day_shift,
                    2.0,
                    ranges::DIASTOLIC.0,
                    ranges::DIASTOLIC.1,
                );
                if diastolic >= systolic {
                    diastolic = systolic - 5.0;
                }
                let time = 480 + session * 480 + rng.gen_range(0..60);
                record.bp_readings.push(BpReading {
                    systolic,
                    diastolic,
                    time_of_day: time,
                });
            }
        }

        if plan.has_bg {
            if plan.bg_before && rng.gen::<f64>() < 0.75 {
                let value = trunc_normal(
                    rng,
                    bg_before_level,
                    0.55,
                    ranges::BG_BEFORE_MEAL.0,
                    ranges::BG_BEFORE_MEAL.1,
                );
                record.bg_readings.push(BgReading {
                    value,
                    meal_tag: MealTag::BeforeMeal,
                    time_of_day: 440 + rng.gen_range(0..40),
                });
            }
            if plan.bg_after && rng.gen::<f64>() < 0.75 {
                let value = trunc_normal(
                    rng,
                    bg_after_level,
                    0.8,
                    ranges::BG_AFTER_MEAL.0,
                    ranges::BG_AFTER_MEAL.1,
                );
                record.bg_readings.push(BgReading {
                    value,
                    meal_tag: MealTag::AfterMeal,
                    time_of_day: 790 + rng.gen_range(0..40),
                });
            }
        }

        if plan.has_activity && rng.gen::<f64>() < activity_propensity {
            let n_entries = if rng.gen::<f64>() < 0.8 { 1 } else { 2 };
            for _ in 0..n_entries {
                let kind = preferred[rng.gen_range(0..preferred.len())];
                let duration = trunc_normal(
                    rng,
                    activity_minutes_level,
                    14.0,
                    ranges::ACTIVITY_MINUTES.0,
                    ranges::ACTIVITY_MINUTES.1,
                );
                record.activities.push(ActivityEntry {
                    kind,
                    duration_minutes: duration,
                });
            }
        }

        records.push(record);
    }

    ensure_planned_data(rng, &mut records, &plan, former_len, step_level, sleep_level);

    // guard against a natural all-identical sleep series tripping the
    // constant-sleep cleaning rule
    if !overrides.force_sleep_every_day {
        let sleeps: Vec<f64> = records.iter().filter_map(|r| r.sleep_minutes).collect();
        if sleeps.len() > 10 && sleeps.windows(2).all(|w| w[0] == w[1]) {
            if let Some(r) = records.iter_mut().find(|r| r.sleep_minutes.is_some()) {
                r.sleep_minutes = Some(r.sleep_minutes.unwrap() + 1.0);
            }
        }
    }

    ParticipantBody {
        profile_base: ProfileBase {
            gender,
            age,
            ethnicity,
            bmi,
            smoking,
            drinking,
        },
        records,
        latent: LatentState {
            shared,
            glycemic,
            vascular,
            adiposity,
            drivers: drivers(glycemic, vascular, adiposity),
        },
        label_noise,
    }
}

/// Make sure every family the plan promises actually has at least one
/// entry, and that no upload day ends up empty.
fn ensure_planned_data(
    rng: &mut ChaCha8Rng,
    records: &mut [DailyRecord],
    plan: &UploadPlan,
    former_len: usize,
    step_level: f64,
    sleep_level: f64,
) {
    if records.is_empty() {
        return;
    }
    if plan.has_step && !records.iter().any(|r| r.steps.is_some()) {
        records[0].steps = Some(step_level.round().clamp(1.0, 27437.0) as u64);
    }
    if plan.has_sleep && !records.iter().any(|r| r.sleep_minutes.is_some()) {
        records[0].sleep_minutes = Some(sleep_level.round());
    }
    if plan.has_bp && !records.iter().any(|r| !r.bp_readings.is_empty()) {
        records[0].bp_readings.push(BpReading {
            systolic: 120.0,
            diastolic: 78.0,
            time_of_day: 480,
        });
    }
    if plan.has_bg {
        if plan.bg_before
            && !records
                .iter()
                .any(|r| r.bg_readings.iter().any(|b| b.meal_tag == MealTag::BeforeMeal))
        {
            records[0].bg_readings.push(BgReading {
                value: 6.2,
                meal_tag: MealTag::BeforeMeal,
                time_of_day: 450,
            });
        }
        if plan.bg_after
            && !records
                .iter()
                .any(|r| r.bg_readings.iter().any(|b| b.meal_tag == MealTag::AfterMeal))
        {
            records[0].bg_readings.push(BgReading {
                value: 8.1,
                meal_tag: MealTag::AfterMeal,
                time_of_day: 800,
            });
        }
    }
    if plan.has_activity && !records.iter().any(|r| !r.activities.is_empty()) {
        records[0].activities.push(ActivityEntry {
            kind: ActivityKind::Walking,
            duration_minutes: 30.0,
        });
    }
    // no empty upload days: fall back to a steps entry, which keeps the
    // day countable without touching quota-managed families that the
    // plan marked absent... unless everything is absent, in which case
    // steps still wins (the step quota drifts by at most one).
    for (position, record) in records.iter_mut().enumerate() {
        let in_former = position < former_len;
        if !record.has_any_data() {
            if plan.has_sleep && (in_former || !plan.sleep_former_only) {
                record.sleep_minutes = Some((sleep_level + (position % 7) as f64).round());
            } else {
                record.steps = Some(step_level.round().clamp(1.0, 27437.0) as u64 + position as u64);
            }
        }
    }
    let _ = rng;
}

/// Quota assignment: exactly round(n * fraction) participants flagged,
/// chosen by a seeded shuffle.
fn quota_flags(seed: u64, stream_tag: u64, n: usize, fraction: f64) -> Vec<bool> {
    let mut rng = stream_rng(seed, STREAM_QUOTA_BASE + stream_tag);
    let k = (n as f64 * fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut flags = vec![false; n];
    for &i in order.iter().take(k.min(n)) {
        flags[i] = true;
    }
    flags
}

fn build_plan(rng: &mut ChaCha8Rng, missing_flags: [bool; 5], targets: &MissingnessTargets) -> UploadPlan {
    // draw all pattern decisions unconditionally to keep the stream
    // layout identical for every flag combination
    let bp_former_only = rng.gen::<f64>() < targets.bp_latter_dropout;
    let step_former_only = rng.gen::<f64>() < targets.step_latter_dropout;
    let sleep_former_only = rng.gen::<f64>() < targets.sleep_latter_dropout;
    let mode_draw: f64 = rng.gen();

    let [bg_missing, bp_missing, step_missing, sleep_missing, activity_missing] = missing_flags;
    let p_both = (targets.bg_before_given_any + targets.bg_after_given_any - 1.0).max(0.0);
    let p_before_only = targets.bg_before_given_any - p_both;
    let (bg_before, bg_after) = if mode_draw < p_both {
        (true, true)
    } else if mode_draw < p_both + p_before_only {
        (true, false)
    } else {
        (false, true)
    };

    UploadPlan {
        has_bg: !bg_missing,
        has_bp: !bp_missing,
        has_step: !step_missing,
        has_sleep: !sleep_missing,
        has_activity: !activity_missing,
        bg_before,
        bg_after,
        bp_former_only,
        step_former_only,
        sleep_former_only,
    }
}

fn assign_labels(
    config: &GeneratorConfig,
    latents: &[LatentState],
    noises: &[[f64; 3]],
) -> Vec<(DiabetesStatus, bool, bool)> {
    let n = latents.len();
    let slope = SIGNAL_SLOPE_MAX * config.signal_strength;

    // rank participants by noisy risk score per disease
    let ranked = |disease_index: usize| -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let score_a = slope * latents[a].drivers[disease_index] + noises[a][disease_index];
            let score_b = slope * latents[b].drivers[disease_index] + noises[b][disease_index];
            score_b.partial_cmp(&score_a).unwrap().then(a.cmp(&b))
        });
        order
    };

    let mut labels = vec![(DiabetesStatus::NoDm, false, false); n];

    let dm_order = ranked(0);
    let k_dm = (config.class_ratios.diabetes[2] * n as f64).round() as usize;
    let k_no = ((config.class_ratios.diabetes[0] * n as f64).round() as usize).min(n - k_dm.min(n));
    for (rank, &i) in dm_order.iter().enumerate() {
        labels[i].0 = if rank < k_dm {
            DiabetesStatus::Dm
        } else if rank >= n - k_no {
            DiabetesStatus::NoDm
        } else {
            DiabetesStatus::PreDm
        };
    }

    let lip_order = ranked(1);
    let k_lip = (config.class_ratios.hyperlipidemia_yes * n as f64).round() as usize;
    for &i in lip_order.iter().take(k_lip) {
        labels[i].1 = true;
    }

    let htn_order = ranked(2);
    let k_htn = (config.class_ratios.hypertension_yes * n as f64).round() as usize;
    for &i in htn_order.iter().take(k_htn) {
        labels[i].2 = true;
    }

    labels
}

fn participant_id(index: usize) -> ParticipantId {
    ParticipantId(format!("p{:04}", index + 1))
}

/// Generate a violation-free cohort. Deterministic for a fixed config;
/// per-participant work runs in parallel without affecting the output.
pub fn generate_cohort(config: &GeneratorConfig) -> Result<GeneratedCohort> {
    config.validate()?;
    let n = config.n_participants;
    let targets = &config.missingness;

    let bg_flags = quota_flags(config.seed, 0, n, targets.bg);
    let bp_flags = quota_flags(config.seed, 1, n, targets.bp);
    let step_flags = quota_flags(config.seed, 2, n, targets.step);
    let sleep_flags = quota_flags(config.seed, 3, n, targets.sleep);
    let activity_flags = quota_flags(config.seed, 4, n, targets.activity);

    let bodies: Vec<ParticipantBody> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, STREAM_PARTICIPANT_BASE + i as u64);
            let mut flags = [
                bg_flags[i],
                bp_flags[i],
                step_flags[i],
                sleep_flags[i],
                activity_flags[i],
            ];
            // a participant with every family absent would have zero
            // upload days; give steps back so cleaning keeps them
            if flags.iter().all(|&f| f) {
                flags[2] = false;
            }
            let plan = build_plan(&mut rng, flags, targets);
            generate_body(
                &mut rng,
                &participant_id(i),
                config,
                plan,
                BodyOverride::default(),
            )
        })
        .collect();

    let latents: Vec<LatentState> = bodies.iter().map(|b| b.latent).collect();
    let noises: Vec<[f64; 3]> = bodies.iter().map(|b| b.label_noise).collect();
    let labels = assign_labels(config, &latents, &noises);

    let mut profiles = Vec::with_capacity(n);
    let mut records = Vec::new();
    for (i, body) in bodies.into_iter().enumerate() {
        let (diabetes_label, hyperlipidemia_label, hypertension_label) = labels[i];
        profiles.push(ParticipantProfile {
            id: participant_id(i),
            gender: Some(body.profile_base.gender),
            age: Some(body.profile_base.age),
            ethnicity: Some(body.profile_base.ethnicity),
            bmi: Some(body.profile_base.bmi),
            smoking: Some(body.profile_base.smoking),
            drinking: Some(body.profile_base.drinking),
            diabetes_label,
            hyperlipidemia_label,
            hypertension_label,
        });
        records.extend(body.records);
    }

    Ok(GeneratedCohort {
        cohort: Cohort::new(profiles, records),
        latents,
    })
}

/// Ground-truth ids of the violators appended by [`inject_violations`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InjectedIds {
    pub short_upload: Vec<ParticipantId>,
    pub missing_profile: Vec<ParticipantId>,
    pub constant_sleep: Vec<ParticipantId>,
}

impl InjectedIds {
    pub fn total(&self) -> usize {
        self.short_upload.len() + self.missing_profile.len() + self.constant_sleep.len()
    }
}

/// Append synthetic participants that each trip exactly one cleaning
/// rule: short uploaders, profiles missing a critical field, and
/// constant-sleep reporters. Violations never overlap, so the cleaning
/// report attributes each id to one rule.
pub fn inject_violations(
    cohort: &Cohort,
    spec: &ViolationSpec,
    config: &GeneratorConfig,
    seed: u64,
) -> Result<(Cohort, InjectedIds)> {
    if spec.total() > cohort.n_participants() {
        return Err(Error::CohortTooSmall(format!(
            "{} injections requested into a cohort of {}",
            spec.total(),
            cohort.n_participants()
        )));
    }

    let existing: HashSet<&ParticipantId> = cohort.profiles.iter().map(|p| &p.id).collect();
    let mut next_index = cohort.n_participants();
    let mut fresh_id = || {
        loop {
            let id = participant_id(next_index);
            next_index += 1;
            if !existing.contains(&id) {
                return id;
            }
        }
    };

    let mut out = cohort.clone();
    let mut injected = InjectedIds::default();
    let targets = &config.missingness;

    for i in 0..spec.total() {
        let mut rng = stream_rng(seed, STREAM_INJECT_BASE + i as u64);
        let id = fresh_id();

        let kind = if i < spec.n_short_uploaders {
            0
        } else if i < spec.n_short_uploaders + spec.n_missing_profile {
            1
        } else {
            2
        };

        // violators upload everything except what their rule needs absent
        let plan = build_plan(&mut rng, [false; 5], targets);
        let overrides = match kind {
            0 => BodyOverride {
                n_days_range: Some((3, MIN_GENERATED_UPLOAD_DAYS - 1)),
                force_sleep_every_day: false,
            },
            2 => BodyOverride {
                n_days_range: Some((12, MAX_GENERATED_UPLOAD_DAYS)),
                force_sleep_every_day: true,
            },
            _ => BodyOverride::default(),
        };
        let body = generate_body(&mut rng, &id, config, plan, overrides);

        let mut profile = ParticipantProfile {
            id: id.clone(),
            gender: Some(body.profile_base.gender),
            age: Some(body.profile_base.age),
            ethnicity: Some(body.profile_base.ethnicity),
            bmi: Some(body.profile_base.bmi),
            smoking: Some(body.profile_base.smoking),
            drinking: Some(body.profile_base.drinking),
            diabetes_label: if rng.gen::<f64>() < config.class_ratios.diabetes[2] {
                DiabetesStatus::Dm
            } else {
                DiabetesStatus::NoDm
            },
            hyperlipidemia_label: rng.gen::<f64>() < config.class_ratios.hyperlipidemia_yes,
            hypertension_label: rng.gen::<f64>() < config.class_ratios.hypertension_yes,
        };

        let mut records = body.records;
        match kind {
            0 => injected.short_upload.push(id.clone()),
            1 => {
                match injected.missing_profile.len() % 3 {
                    0 => profile.age = None,
                    1 => profile.gender = None,
                    _ => profile.bmi = None,
                }
                injected.missing_profile.push(id.clone());
            }
            _ => {
                for record in &mut records {
                    record.sleep_minutes = Some(440.0);
                }
                injected.constant_sleep.push(id.clone());
            }
        }

        out.profiles.push(profile);
        out.records.extend(records);
    }

    Ok((out, injected))
}
