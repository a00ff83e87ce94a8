//! Stage runners. Each stage reads its inputs from the output
//! directory, writes its outputs there, and records a manifest of
//! config and file hashes; `run_all` consults those manifests to skip
//! stages that are already up to date.

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::formats;
use crate::manifest::StageManifest;
use crate::summary;
use std::path::{Path, PathBuf};
use trihealth::cleaning;
use trihealth::domain::{Cohort, Disease, LabelVector};
use trihealth::eval::evaluate_all;
use trihealth::explain::{explain_instances, subsample_background, summarize};
use trihealth::features::{build_feature_matrix_with, one_hot_encode};
use trihealth::impute::{impute, ImputeConfig, ImputeMethod};
use trihealth::learners::{fit, ClassifierSpec, Labels, TrainedModel};
use trihealth::synthgen::{generate_cohort, inject_violations};

pub const STAGES: [&str; 7] = [
    "generate",
    "clean",
    "featurize",
    "impute",
    "train",
    "eval",
    "explain",
];

pub struct Paths {
    pub out: PathBuf,
}

impl Paths {
    pub fn new(out: &Path) -> Self {
        Paths { out: out.to_path_buf() }
    }

    pub fn profiles(&self) -> PathBuf {
        self.out.join("profiles.csv")
    }
    pub fn records(&self) -> PathBuf {
        self.out.join("daily_records.csv")
    }
    pub fn clean_profiles(&self) -> PathBuf {
        self.out.join("clean/profiles.csv")
    }
    pub fn clean_records(&self) -> PathBuf {
        self.out.join("clean/daily_records.csv")
    }
    pub fn cleaning_report(&self) -> PathBuf {
        self.out.join("clean/cleaning_report.txt")
    }
    pub fn features(&self) -> PathBuf {
        self.out.join("features/features.csv")
    }
    pub fn imputed(&self, method: ImputeMethod) -> PathBuf {
        match method {
            ImputeMethod::Mean => self.out.join("imputed/features_mi.csv"),
            ImputeMethod::Knn => self.out.join("imputed/features_knni.csv"),
        }
    }
    pub fn model(&self, disease: Disease) -> PathBuf {
        self.out.join(format!("models/model_{disease}.json"))
    }
    pub fn eval_report(&self) -> PathBuf {
        self.out.join("eval/report.csv")
    }
    pub fn eval_folds(&self) -> PathBuf {
        self.out.join("eval/folds.csv")
    }
    pub fn shapley_csv(&self, disease: Disease) -> PathBuf {
        self.out.join(format!("explain/shapley_{disease}.csv"))
    }
    pub fn shapley_svg(&self, disease: Disease) -> PathBuf {
        self.out.join(format!("explain/shapley_{disease}.svg"))
    }
    pub fn summary(&self) -> PathBuf {
        self.out.join("summary.txt")
    }
}

fn require(path: &Path, produced_by: &str) -> CliResult<()> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{} not found; run the {produced_by} stage first",
            path.display()
        )));
    }
    Ok(())
}

pub fn cmd_generate(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    let generated = generate_cohort(&config.generator)?;
    let cohort = if config.violations.total() > 0 {
        let (cohort, _) = inject_violations(
            &generated.cohort,
            &config.violations,
            &config.generator,
            config.injection_seed(),
        )?;
        cohort
    } else {
        generated.cohort
    };

    formats::write_profiles(&paths.profiles(), &cohort.profiles)?;
    formats::write_records(&paths.records(), &cohort.records)?;

    let mut manifest = StageManifest::new("generate", config.content_hash());
    manifest.record_output(out, &paths.profiles())?;
    manifest.record_output(out, &paths.records())?;
    manifest.save(out)?;
    println!("[generate] wrote {} profiles", cohort.n_participants());
    Ok(())
}

fn load_raw_cohort(paths: &Paths) -> CliResult<Cohort> {
    require(&paths.profiles(), "generate")?;
    require(&paths.records(), "generate")?;
    formats::read_cohort(&paths.profiles(), &paths.records())
}

pub fn cmd_clean(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    let cohort = load_raw_cohort(&paths)?;
    let (cleaned, report) = cleaning::clean_with(
        &cohort,
        config.cleaning.min_upload_days,
        config.cleaning.constant_sleep_min_days,
    );

    formats::write_profiles(&paths.clean_profiles(), &cleaned.profiles)?;
    formats::write_records(&paths.clean_records(), &cleaned.records)?;
    std::fs::write(
        paths.cleaning_report(),
        formats::cleaning_report_to_text(&report),
    )?;

    let mut manifest = StageManifest::new("clean", config.content_hash());
    manifest.record_input(out, &paths.profiles())?;
    manifest.record_input(out, &paths.records())?;
    manifest.record_output(out, &paths.clean_profiles())?;
    manifest.record_output(out, &paths.clean_records())?;
    manifest.record_output(out, &paths.cleaning_report())?;
    manifest.save(out)?;
    let (a, b, c) = report.counts();
    println!(
        "[clean] removed {a}+{b}+{c}, retained {}",
        report.retained
    );
    Ok(())
}

pub fn cmd_featurize(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    require(&paths.clean_profiles(), "clean")?;
    let cohort = formats::read_cohort(&paths.clean_profiles(), &paths.clean_records())?;
    let matrix = build_feature_matrix_with(
        &cohort,
        config.features.rare_activity_min_participants,
    )?;
    formats::write_features(&paths.features(), &matrix)?;

    let mut manifest = StageManifest::new("featurize", config.content_hash());
    manifest.record_input(out, &paths.clean_profiles())?;
    manifest.record_input(out, &paths.clean_records())?;
    manifest.record_output(out, &paths.features())?;
    manifest.save(out)?;
    println!(
        "[featurize] wrote {} rows x {} attributes",
        matrix.n_rows(),
        matrix.n_cols()
    );
    Ok(())
}

pub fn cmd_impute(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    require(&paths.features(), "featurize")?;
    let matrix = formats::read_features(&paths.features())?;

    let mut manifest = StageManifest::new("impute", config.content_hash());
    manifest.record_input(out, &paths.features())?;
    for method in [ImputeMethod::Knn, ImputeMethod::Mean] {
        let method_config = ImputeConfig {
            method,
            ..config.impute.clone()
        };
        let imputed = impute(&matrix, &method_config)?;
        let path = paths.imputed(method);
        formats::write_features(&path, &imputed)?;
        manifest.record_output(out, &path)?;
    }
    manifest.save(out)?;
    println!("[impute] wrote MI and KNNI matrices");
    Ok(())
}

fn load_imputed(paths: &Paths, method: ImputeMethod) -> CliResult<trihealth::domain::FeatureMatrix> {
    let path = paths.imputed(method);
    require(&path, "impute")?;
    formats::read_features(&path)
}

pub fn cmd_train(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    require(&paths.clean_profiles(), "clean")?;
    let profiles = formats::read_profiles(&paths.clean_profiles())?;
    let imputed = load_imputed(&paths, config.impute.method)?;
    let encoded = one_hot_encode(&imputed)?;

    let mut manifest = StageManifest::new("train", config.content_hash());
    manifest.record_input(out, &paths.clean_profiles())?;
    manifest.record_input(out, &paths.imputed(config.impute.method))?;

    for (index, disease) in Disease::ALL.into_iter().enumerate() {
        let labels = Labels::from(&LabelVector::from_profiles(disease, &profiles));
        let spec = ClassifierSpec::new(config.train.params()?, config.train_seed(index as u64));
        let model = fit(&spec, &encoded, &labels)?;
        let path = paths.model(disease);
        formats::write_model(&path, &model)?;
        manifest.record_output(out, &path)?;
        println!("[train] {disease}: {} fitted", spec.kind());
    }
    manifest.save(out)?;
    Ok(())
}

/// Refuse to evaluate features whose encoded schema no longer matches
/// models trained earlier in the same output tree.
fn check_model_fingerprints(paths: &Paths, fingerprint: &str) -> CliResult<()> {
    for disease in Disease::ALL {
        let path = paths.model(disease);
        if path.exists() {
            let model = formats::read_model(&path)?;
            if model.schema_fingerprint != fingerprint {
                return Err(CliError::from(trihealth::Error::SchemaMismatch {
                    expected: model.schema_fingerprint,
                    actual: fingerprint.to_string(),
                }));
            }
        }
    }
    Ok(())
}

pub fn cmd_eval(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    require(&paths.clean_profiles(), "clean")?;
    require(&paths.features(), "featurize")?;
    let cohort = formats::read_cohort(&paths.clean_profiles(), &paths.clean_records())?;
    let matrix = formats::read_features(&paths.features())?;
    check_model_fingerprints(&paths, &one_hot_encode(&matrix)?.schema_fingerprint())?;

    let report = evaluate_all(&cohort, &matrix, &config.eval)?;
    std::fs::create_dir_all(paths.eval_report().parent().unwrap())?;
    std::fs::write(paths.eval_report(), formats::eval_report_to_csv(&report))?;
    std::fs::write(paths.eval_folds(), formats::eval_folds_to_csv(&report))?;

    let mut manifest = StageManifest::new("eval", config.content_hash());
    manifest.record_input(out, &paths.clean_profiles())?;
    manifest.record_input(out, &paths.clean_records())?;
    manifest.record_input(out, &paths.features())?;
    manifest.record_output(out, &paths.eval_report())?;
    manifest.record_output(out, &paths.eval_folds())?;
    manifest.save(out)?;
    println!("[eval] wrote {} comparison rows", report.rows.len());
    Ok(())
}

pub fn cmd_explain(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    let imputed = load_imputed(&paths, config.impute.method)?;
    let encoded = one_hot_encode(&imputed)?;

    let settings = &config.explain;
    if settings.background_size > encoded.n_rows() {
        eprintln!(
            "warning: background size {} exceeds cohort size {}; clamping",
            settings.background_size,
            encoded.n_rows()
        );
    }
    let background = subsample_background(&encoded, settings.background_size, settings.seed);
    let instances = if settings.instance_limit == 0 || settings.instance_limit >= encoded.n_rows()
    {
        encoded.clone()
    } else {
        subsample_background(&encoded, settings.instance_limit, settings.seed ^ 0x5555)
    };

    let mut manifest = StageManifest::new("explain", config.content_hash());
    manifest.record_input(out, &paths.imputed(config.impute.method))?;

    for disease in Disease::ALL {
        let model_path = paths.model(disease);
        require(&model_path, "train")?;
        let model: TrainedModel = formats::read_model(&model_path)?;
        manifest.record_input(out, &model_path)?;

        let values = explain_instances(
            &model,
            &instances,
            &background,
            settings.n_permutations,
            settings.seed,
        )?;
        let feature_names: Vec<String> =
            encoded.columns.iter().map(|c| c.name.clone()).collect();
        let report = summarize(&values, &feature_names, &model.classes)?;

        let csv_path = paths.shapley_csv(disease);
        std::fs::create_dir_all(csv_path.parent().unwrap())?;
        std::fs::write(&csv_path, formats::shapley_report_to_csv(&report))?;
        let svg_path = paths.shapley_svg(disease);
        std::fs::write(
            &svg_path,
            trihealth::explain::render_summary_svg(&report, settings.top_n),
        )?;
        manifest.record_output(out, &csv_path)?;
        manifest.record_output(out, &svg_path)?;
        println!(
            "[explain] {disease}: top feature {}",
            report.top_features(report.class_names.len() - 1, 1)[0]
        );
    }
    manifest.save(out)?;
    Ok(())
}

fn write_summary(config: &PipelineConfig, out: &Path) -> CliResult<()> {
    let paths = Paths::new(out);
    let eval_csv = std::fs::read_to_string(paths.eval_report())?;
    let mut shapley = Vec::new();
    for disease in Disease::ALL {
        shapley.push((
            disease,
            std::fs::read_to_string(paths.shapley_csv(disease))?,
        ));
    }
    let text = summary::render_summary(&eval_csv, &shapley, config.explain.top_n);
    std::fs::write(paths.summary(), text)?;
    println!("[summary] wrote {}", paths.summary().display());
    Ok(())
}

fn run_stage(stage: &str, config: &PipelineConfig, out: &Path) -> CliResult<()> {
    match stage {
        "generate" => cmd_generate(config, out),
        "clean" => cmd_clean(config, out),
        "featurize" => cmd_featurize(config, out),
        "impute" => cmd_impute(config, out),
        "train" => cmd_train(config, out),
        "eval" => cmd_eval(config, out),
        "explain" => cmd_explain(config, out),
        other => Err(CliError::Internal(format!("unknown stage {other}"))),
    }
}

/// Run every stage in order, skipping stages whose manifests still
/// match the config and the files on disk. Any failure aborts with the
/// stage name attached.
pub fn cmd_run_all(config: &PipelineConfig, out: &Path, dry_run: bool) -> CliResult<()> {
    let config_hash = config.content_hash();
    if dry_run {
        println!("plan (dry run, nothing written):");
    }
    for stage in STAGES {
        let up_to_date = StageManifest::load(out, stage)
            .map(|m| m.still_valid(out, &config_hash))
            .unwrap_or(false);
        if dry_run {
            println!(
                "  {stage}: {}",
                if up_to_date { "up to date, would skip" } else { "would run" }
            );
            continue;
        }
        if up_to_date {
            println!("[{stage}] up to date, skipping");
            continue;
        }
        run_stage(stage, config, out)
            .map_err(|e| match e {
                CliError::Data(msg) => CliError::Data(format!("stage {stage}: {msg}")),
                CliError::Internal(msg) => CliError::Internal(format!("stage {stage}: {msg}")),
                other => other,
            })?;
    }
    if dry_run {
        println!("  summary: would write");
        return Ok(());
    }
    write_summary(config, out)
}
