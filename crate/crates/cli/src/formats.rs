//! Plain-text file formats. Everything is UTF-8 CSV (or JSON for model
//! files) with missing values encoded as empty fields, written
//! deterministically so identical runs produce byte-identical files.
//!
//! daily_records.csv is long-format (participant_id, day_index, field,
//! value, tag) so one day can carry any number of BP/BG readings:
//!
//! - steps:    value = count,                 tag empty
//! - sleep:    value = minutes,               tag empty
//! - bp:       value = "systolic/diastolic",  tag = minutes since midnight
//! - bg:       value = mmol/L,                tag = "meal_tag/minutes"
//! - activity: value = duration minutes,      tag = activity kind

use crate::error::{CliError, CliResult};
use std::collections::HashMap;
use std::path::Path;
use trihealth::cleaning::CleaningReport;
use trihealth::domain::{
    ActivityEntry, ActivityKind, BgReading, BpReading, Cell, Cohort, ColumnKind, DailyRecord,
    DiabetesStatus, Drinking, Ethnicity, FeatureMatrix, Gender, MealTag, ParticipantId,
    ParticipantProfile, Smoking,
};
use trihealth::eval::EvalReport;
use trihealth::explain::ShapleyReport;
use trihealth::features::canonical_schema;
use trihealth::learners::TrainedModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

// ---- profiles.csv ----

pub fn profiles_to_csv(profiles: &[ParticipantProfile]) -> String {
    let mut out =
        String::from("id,gender,age,ethnicity,bmi,smoking,drinking,diabetes,hyperlipidemia,hypertension\n");
    for p in profiles {
        let opt = |s: Option<String>| s.unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p.id,
            opt(p.gender.map(|g| g.as_str().to_string())),
            opt(p.age.map(|a| a.to_string())),
            opt(p.ethnicity.map(|e| e.as_str().to_string())),
            opt(p.bmi.map(|b| b.to_string())),
            opt(p.smoking.map(|s| s.as_str().to_string())),
            opt(p.drinking.map(|d| d.as_str().to_string())),
            p.diabetes_label.as_str(),
            if p.hyperlipidemia_label { "yes" } else { "no" },
            if p.hypertension_label { "yes" } else { "no" },
        ));
    }
    out
}

pub fn write_profiles(path: &Path, profiles: &[ParticipantProfile]) -> CliResult<()> {
    write_atomic(path, &profiles_to_csv(profiles))
}

fn parse_opt<T>(
    field: &str,
    parse: impl Fn(&str) -> Option<T>,
    path: &Path,
    line: usize,
    what: &str,
) -> CliResult<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    parse(field)
        .map(Some)
        .ok_or_else(|| data_err(path, line, format!("bad {what} '{field}'")))
}

pub fn read_profiles(path: &Path) -> CliResult<Vec<ParticipantProfile>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::from(e).in_file(path))?;
    let mut profiles = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let line = index + 2; // header is line 1
        let row = row?;
        if row.len() != 10 {
            return Err(data_err(path, line, format!("expected 10 fields, got {}", row.len())));
        }
        let yes_no = |field: &str| match field {
            "yes" => Some(true),
            "no" => Some(false),
            _ => None,
        };
        profiles.push(ParticipantProfile {
            id: ParticipantId(row[0].to_string()),
            gender: parse_opt(&row[1], Gender::parse, path, line, "gender")?,
            age: parse_opt(&row[2], |s| s.parse().ok(), path, line, "age")?,
            ethnicity: parse_opt(&row[3], Ethnicity::parse, path, line, "ethnicity")?,
            bmi: parse_opt(&row[4], |s| s.parse().ok(), path, line, "bmi")?,
            smoking: parse_opt(&row[5], Smoking::parse, path, line, "smoking")?,
            drinking: parse_opt(&row[6], Drinking::parse, path, line, "drinking")?,
            diabetes_label: DiabetesStatus::parse(&row[7])
                .ok_or_else(|| data_err(path, line, format!("bad diabetes label '{}'", &row[7])))?,
            hyperlipidemia_label: yes_no(&row[8])
                .ok_or_else(|| data_err(path, line, format!("bad label '{}'", &row[8])))?,
            hypertension_label: yes_no(&row[9])
                .ok_or_else(|| data_err(path, line, format!("bad label '{}'", &row[9])))?,
        });
    }
    Ok(profiles)
}

// ---- daily_records.csv ----

pub fn records_to_csv(records: &[DailyRecord]) -> String {
    let mut out = String::from("participant_id,day_index,field,value,tag\n");
    for r in records {
        let base = |field: &str, value: &str, tag: &str| {
            format!("{},{},{field},{value},{tag}\n", r.participant_id, r.day_index)
        };
        if let Some(steps) = r.steps {
            out.push_str(&base("steps", &steps.to_string(), ""));
        }
        if let Some(sleep) = r.sleep_minutes {
            out.push_str(&base("sleep", &sleep.to_string(), ""));
        }
        for bp in &r.bp_readings {
            out.push_str(&base(
                "bp",
                &format!("{}/{}", bp.systolic, bp.diastolic),
                &bp.time_of_day.to_string(),
            ));
        }
        for bg in &r.bg_readings {
            out.push_str(&base(
                "bg",
                &bg.value.to_string(),
                &format!("{}/{}", bg.meal_tag.as_str(), bg.time_of_day),
            ));
        }
        for a in &r.activities {
            out.push_str(&base(
                "activity",
                &a.duration_minutes.to_string(),
                a.kind.as_str(),
            ));
        }
    }
    out
}

pub fn write_records(path: &Path, records: &[DailyRecord]) -> CliResult<()> {
    write_atomic(path, &records_to_csv(records))
}

pub fn read_records(path: &Path) -> CliResult<Vec<DailyRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::from(e).in_file(path))?;
    // records keyed by (participant, day) in first-appearance order
    let mut order: Vec<(ParticipantId, u32)> = Vec::new();
    let mut by_key: HashMap<(ParticipantId, u32), DailyRecord> = HashMap::new();

    for (index, row) in reader.records().enumerate() {
        let line = index + 2;
        let row = row?;
        if row.len() != 5 {
            return Err(data_err(path, line, format!("expected 5 fields, got {}", row.len())));
        }
        let id = ParticipantId(row[0].to_string());
        let day: u32 = row[1]
            .parse()
            .map_err(|_| data_err(path, line, format!("bad day_index '{}'", &row[1])))?;
        let key = (id.clone(), day);
        let record = by_key.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            DailyRecord::empty(id.clone(), day)
        });

        let value = &row[3];
        let tag = &row[4];
        let bad_value = || data_err(path, line, format!("bad value '{value}'"));
        match &row[2] {
            "steps" => record.steps = Some(value.parse().map_err(|_| bad_value())?),
            "sleep" => record.sleep_minutes = Some(value.parse().map_err(|_| bad_value())?),
            "bp" => {
                let (sys, dia) = value
                    .split_once('/')
                    .ok_or_else(bad_value)?;
                record.bp_readings.push(BpReading {
                    systolic: sys.parse().map_err(|_| bad_value())?,
                    diastolic: dia.parse().map_err(|_| bad_value())?,
                    time_of_day: tag
                        .parse()
                        .map_err(|_| data_err(path, line, format!("bad time tag '{tag}'")))?,
                });
            }
            "bg" => {
                let (meal, time) = tag
                    .split_once('/')
                    .ok_or_else(|| data_err(path, line, format!("bad bg tag '{tag}'")))?;
                record.bg_readings.push(BgReading {
                    value: value.parse().map_err(|_| bad_value())?,
                    meal_tag: MealTag::parse(meal)
                        .ok_or_else(|| data_err(path, line, format!("bad meal tag '{meal}'")))?,
                    time_of_day: time
                        .parse()
                        .map_err(|_| data_err(path, line, format!("bad time tag '{tag}'")))?,
                });
            }
            "activity" => {
                record.activities.push(ActivityEntry {
                    kind: ActivityKind::parse(tag)
                        .ok_or_else(|| data_err(path, line, format!("unknown activity '{tag}'")))?,
                    duration_minutes: value.parse().map_err(|_| bad_value())?,
                });
            }
            other => return Err(data_err(path, line, format!("unknown field '{other}'"))),
        }
    }

    Ok(order.into_iter().map(|key| by_key.remove(&key).unwrap()).collect())
}

pub fn read_cohort(profiles_path: &Path, records_path: &Path) -> CliResult<Cohort> {
    Ok(Cohort::new(
        read_profiles(profiles_path)?,
        read_records(records_path)?,
    ))
}

// ---- features.csv ----

pub fn features_to_csv(matrix: &FeatureMatrix) -> String {
    let mut out = String::from("id");
    for spec in &matrix.column_schema {
        out.push(',');
        out.push_str(&spec.name);
    }
    out.push('\n');
    for (id, row) in matrix.row_ids.iter().zip(&matrix.values) {
        out.push_str(id.as_str());
        for (cell, spec) in row.iter().zip(&matrix.column_schema) {
            out.push(',');
            match (cell, &spec.kind) {
                (Cell::Missing, _) => {}
                (Cell::Number(v), _) => out.push_str(&v.to_string()),
                (Cell::Category(c), ColumnKind::Categorical { categories }) => {
                    out.push_str(&categories[*c])
                }
                (Cell::Category(c), _) => out.push_str(&c.to_string()),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_features(path: &Path, matrix: &FeatureMatrix) -> CliResult<()> {
    write_atomic(path, &features_to_csv(matrix))
}

/// Read a features file against the canonical 35-column schema. Header
/// or category values that do not match the schema are data errors
/// naming the column and value.
pub fn read_features(path: &Path) -> CliResult<FeatureMatrix> {
    let schema = canonical_schema();
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::from(e).in_file(path))?;

    let header = reader.headers()?.clone();
    if header.len() != schema.len() + 1 || &header[0] != "id" {
        return Err(data_err(path, 1, "header does not match the feature schema"));
    }
    for (i, spec) in schema.iter().enumerate() {
        if &header[i + 1] != spec.name.as_str() {
            return Err(data_err(
                path,
                1,
                format!("column {} is '{}', expected '{}'", i + 1, &header[i + 1], spec.name),
            ));
        }
    }

    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let line = index + 2;
        let row = row?;
        if row.len() != schema.len() + 1 {
            return Err(data_err(path, line, format!("expected {} fields, got {}", schema.len() + 1, row.len())));
        }
        row_ids.push(ParticipantId(row[0].to_string()));
        let mut cells = Vec::with_capacity(schema.len());
        for (spec, field) in schema.iter().zip(row.iter().skip(1)) {
            if field.is_empty() {
                cells.push(Cell::Missing);
                continue;
            }
            let cell = match &spec.kind {
                ColumnKind::Numeric => Cell::Number(field.parse().map_err(|_| {
                    data_err(path, line, format!("bad number '{field}' in column '{}'", spec.name))
                })?),
                ColumnKind::Categorical { categories } => {
                    let position = categories.iter().position(|c| c == field).ok_or_else(|| {
                        CliError::from(trihealth::Error::UnseenCategory {
                            column: spec.name.clone(),
                            value: field.to_string(),
                        })
                        .in_file(path)
                    })?;
                    Cell::Category(position)
                }
            };
            cells.push(cell);
        }
        values.push(cells);
    }

    FeatureMatrix::new(schema, row_ids, values).map_err(CliError::from)
}

// ---- cleaning report ----

pub fn cleaning_report_to_text(report: &CleaningReport) -> String {
    let ids = |ids: &[ParticipantId]| {
        ids.iter().map(|i| i.as_str()).collect::<Vec<_>>().join(" ")
    };
    format!(
        "{}\nshort_upload_ids: {}\nmissing_profile_ids: {}\nconstant_sleep_ids: {}\n",
        report.to_text().trim_end(),
        ids(&report.removed_short_upload),
        ids(&report.removed_missing_profile),
        ids(&report.removed_constant_sleep),
    )
}

// ---- evaluation report ----

pub fn eval_report_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("disease,model,imputation,accuracy,f1,recall,precision,tpr,tnr\n");
    for row in &report.rows {
        let m = &row.metrics;
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            row.disease, row.model, row.imputation, m.accuracy, m.f1, m.recall, m.precision,
            m.tpr, m.tnr,
        ));
    }
    out
}

pub fn eval_folds_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("disease,model,imputation,fold,chosen,accuracy\n");
    for row in &report.rows {
        for (fold, outcome) in row.folds.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{:.4}\n",
                row.disease,
                row.model,
                row.imputation,
                fold,
                outcome.chosen.describe().replace(',', ";"),
                outcome.metrics.accuracy,
            ));
        }
    }
    out
}

// ---- attribution report ----

pub fn shapley_report_to_csv(report: &ShapleyReport) -> String {
    let mut out = String::from("feature,class,mean_abs_value,rank\n");
    for (class_index, class) in report.class_names.iter().enumerate() {
        for (rank, &feature) in report.ranking[class_index].iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.6},{}\n",
                report.feature_names[feature],
                class,
                report.mean_abs[class_index][feature],
                rank + 1,
            ));
        }
    }
    out
}

// ---- model files ----

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

pub fn write_model(path: &Path, model: &TrainedModel) -> CliResult<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(path, &(json + "\n"))
}

pub fn read_model(path: &Path) -> CliResult<TrainedModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::from(e).in_file(path))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported model format version {}",
            path.display(),
            file.format_version
        )));
    }
    Ok(file.model)
}
