use std::io::Write;
use std::time::Instant;
use trihealth::domain::{Disease, LabelVector};
use trihealth::eval::{evaluate_all, EvalConfig};
use trihealth::explain::{explain_instances, subsample_background, summarize, ExplainConfig};
use trihealth::features::{build_feature_matrix, one_hot_encode};
use trihealth::impute::ImputeConfig;
use trihealth::learners::{fit, ClassifierSpec, GbtParams, Labels, ModelParams};
use trihealth::synthgen::{generate_cohort, GeneratorConfig};

fn main() {
    let t0 = Instant::now();
    let config = GeneratorConfig {
        n_participants: 503,
        ..GeneratorConfig::default()
    };
    let generated = generate_cohort(&config).unwrap();
    let matrix = build_feature_matrix(&generated.cohort).unwrap();
    let imputed = trihealth::impute::impute(&matrix, &ImputeConfig::knn(200)).unwrap();
    let encoded = one_hot_encode(&imputed).unwrap();
    println!("generate+featurize+impute: {:?}", t0.elapsed());

    // criterion-9 style check: final GBT models + attribution rankings
    for disease in Disease::ALL {
        let labels = Labels::from(&LabelVector::from_profiles(
            disease,
            &generated.cohort.profiles,
        ));
        let spec = ClassifierSpec::new(
            ModelParams::Gbt(GbtParams {
                n_rounds: 200,
                learning_rate: 0.1,
                max_depth: 4,
                ..GbtParams::default()
            }),
            9,
        );
        let t = Instant::now();
        let model = fit(&spec, &encoded, &labels).unwrap();
        let background = subsample_background(&encoded, 50, 7);
        let explain_cfg = ExplainConfig::default();
        let values =
            explain_instances(&model, &encoded, &background, explain_cfg.n_permutations, 11)
                .unwrap();
        let names: Vec<String> = encoded.columns.iter().map(|c| c.name.clone()).collect();
        let report = summarize(&values, &names, &model.classes).unwrap();
        print!("{disease} explain ({:?}): ", t.elapsed());
        for class in 0..model.classes.len() {
            print!(
                "[{}]: {} | ",
                model.classes[class],
                report.top_features(class, 5).join(", ")
            );
        }
        println!();
        std::io::stdout().flush().unwrap();
    }

    let t = Instant::now();
    let report = evaluate_all(&generated.cohort, &matrix, &EvalConfig::default()).unwrap();
    println!("evaluate_all: {:?}", t.elapsed());
    for row in &report.rows {
        println!(
            "{:<16} {:<20} {:<6} acc {:.3} f1 {:.3} tpr {:.3} tnr {:.3} prec {:.3}",
            row.disease.as_str(),
            row.model,
            row.imputation,
            row.metrics.accuracy,
            row.metrics.f1,
            row.metrics.tpr,
            row.metrics.tnr,
            row.metrics.precision,
        );
    }
    println!("total: {:?}", t0.elapsed());
}
