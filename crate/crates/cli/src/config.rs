//! Pipeline configuration: one TOML file covering every stage, with
//! working defaults throughout. Unknown keys are rejected. The
//! top-level seed is the single source of randomness; per-stage seeds
//! derive from it when the config loads.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use trihealth::eval::EvalConfig;
use trihealth::explain::ExplainConfig;
use trihealth::impute::ImputeConfig;
use trihealth::learners::{ClassifierKind, GbtParams, KnnParams, ModelParams, RfParams, SvmParams};
use trihealth::synthgen::{GeneratorConfig, ViolationSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleaningConfig {
    pub min_upload_days: usize,
    pub constant_sleep_min_days: usize,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            min_upload_days: trihealth::cleaning::DEFAULT_MIN_UPLOAD_DAYS,
            constant_sleep_min_days: trihealth::cleaning::DEFAULT_CONSTANT_SLEEP_MIN_DAYS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    pub rare_activity_min_participants: usize,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            rare_activity_min_participants:
                trihealth::features::DEFAULT_RARE_ACTIVITY_MIN_PARTICIPANTS,
        }
    }
}

/// Final-model settings for the train stage: one family applied to all
/// three diseases, with per-family parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub model: String,
    pub rf: RfParams,
    pub gbt: GbtParams,
    pub knn: KnnParams,
    pub svm: SvmParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: "GBT".to_string(),
            rf: RfParams {
                n_trees: 300,
                max_depth: Some(8),
                ..RfParams::default()
            },
            gbt: GbtParams {
                n_rounds: 150,
                learning_rate: 0.1,
                max_depth: 4,
                ..GbtParams::default()
            },
            knn: KnnParams::default(),
            svm: SvmParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn kind(&self) -> CliResult<ClassifierKind> {
        ClassifierKind::parse(&self.model)
            .ok_or_else(|| CliError::Data(format!("unknown model kind '{}'", self.model)))
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(match self.kind()? {
            ClassifierKind::Rf => ModelParams::Rf(self.rf.clone()),
            ClassifierKind::Gbt => ModelParams::Gbt(self.gbt.clone()),
            ClassifierKind::Knn => ModelParams::Knn(self.knn.clone()),
            ClassifierKind::Svm => ModelParams::Svm(self.svm.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Master seed; generator, evaluation, training, and explanation
    /// seeds all derive from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub generator: GeneratorConfig,
    pub violations: ViolationSpec,
    pub cleaning: CleaningConfig,
    pub features: FeaturesConfig,
    pub impute: ImputeConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub explain: ExplainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut config = PipelineConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            // 503 clean participants plus the default 113/6/7 injected
            // violators gives the full 629-row intake
            generator: GeneratorConfig {
                n_participants: 503,
                ..GeneratorConfig::default()
            },
            violations: ViolationSpec::default(),
            cleaning: CleaningConfig::default(),
            features: FeaturesConfig::default(),
            impute: ImputeConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            explain: ExplainConfig::default(),
        };
        config.apply_seed(42);
        config
    }
}

fn derive_seed(base: u64, tag: u64) -> u64 {
    base.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(tag) | 1
}

impl PipelineConfig {
    /// Propagate the master seed into every stage's seed slot.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.generator.seed = seed;
        self.eval.seed = derive_seed(seed, 2);
        self.explain.seed = derive_seed(seed, 3);
    }

    pub fn injection_seed(&self) -> u64 {
        derive_seed(self.seed, 1)
    }

    pub fn train_seed(&self, disease_index: u64) -> u64 {
        derive_seed(self.seed, 16 + disease_index)
    }

    pub fn load(path: &Path) -> CliResult<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        config.apply_seed(config.seed);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.kind()?;
        if self.eval.k_outer < 2 || self.eval.k_inner < 2 {
            return Err(CliError::Data(
                "eval fold counts must be at least 2".to_string(),
            ));
        }
        if self.explain.n_permutations == 0 {
            return Err(CliError::Data(
                "explain.n_permutations must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Hash of everything that affects outputs; the output directory
    /// itself is excluded so identical runs at different paths produce
    /// identical manifests.
    pub fn content_hash(&self) -> String {
        let mut clone = self.clone();
        clone.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&clone).expect("config serializes");
        crate::manifest::sha256_hex(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn seed_propagates_to_stages() {
        let mut config = PipelineConfig::default();
        config.apply_seed(7);
        assert_eq!(config.generator.seed, 7);
        assert_ne!(config.eval.seed, config.explain.seed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let toml_text = "seed = 1\nnonsense = true\n";
        let parsed: Result<PipelineConfig, _> = toml::from_str(toml_text);
        assert!(parsed.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let toml_text = "seed = 9\n[generator]\nn_participants = 20\n";
        let parsed: PipelineConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(parsed.generator.n_participants, 20);
        assert_eq!(parsed.eval.k_outer, 5);
    }

    #[test]
    fn content_hash_ignores_out_dir() {
        let mut a = PipelineConfig::default();
        let mut b = PipelineConfig::default();
        a.out_dir = PathBuf::from("x");
        b.out_dir = PathBuf::from("y");
        assert_eq!(a.content_hash(), b.content_hash());
        b.apply_seed(99);
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
