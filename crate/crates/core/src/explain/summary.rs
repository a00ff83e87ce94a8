//! Cohort-level attribution summary: per-class feature rankings by mean
//! absolute attribution, with plot-ready value lists and a static SVG
//! bar chart.

use super::ShapleyValues;
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// `mean_abs[class][feature]`: mean |attribution| over instances.
    pub mean_abs: Vec<Vec<f64>>,
    /// `ranking[class]`: feature indices, best first; ties keep schema order.
    pub ranking: Vec<Vec<usize>>,
    /// `values[class][feature]`: per-instance attributions, for plotting.
    pub values: Vec<Vec<Vec<f64>>>,
}

impl ShapleyReport {
    /// Top `n` feature names for one class.
    pub fn top_features(&self, class: usize, n: usize) -> Vec<&str> {
        self.ranking[class]
            .iter()
            .take(n)
            .map(|&f| self.feature_names[f].as_str())
            .collect()
    }

    /// Features ranked by the mean over classes of mean |attribution|;
    /// the overall importance ordering used by the chart.
    pub fn overall_ranking(&self) -> Vec<usize> {
        let n_features = self.feature_names.len();
        let n_classes = self.class_names.len();
        let mut order: Vec<usize> = (0..n_features).collect();
        let score = |f: usize| -> f64 {
            (0..n_classes).map(|c| self.mean_abs[c][f]).sum::<f64>() / n_classes as f64
        };
        order.sort_by(|&a, &b| score(b).partial_cmp(&score(a)).unwrap().then(a.cmp(&b)));
        order
    }
}

/// Aggregate per-instance attributions into rankings.
pub fn summarize(
    values: &[ShapleyValues],
    feature_names: &[String],
    class_names: &[String],
) -> Result<ShapleyReport> {
    if values.is_empty() {
        return Err(Error::InvalidInput(
            "no attribution values to summarize".to_string(),
        ));
    }
    let n_features = feature_names.len();
    let n_classes = class_names.len();
    for v in values {
        if v.n_features() != n_features || v.n_classes() != n_classes {
            return Err(Error::LengthMismatch {
                left: v.n_features(),
                right: n_features,
                context: "attribution shape vs schema",
            });
        }
    }

    let mut per_values = vec![vec![Vec::with_capacity(values.len()); n_features]; n_classes];
    let mut mean_abs = vec![vec![0.0; n_features]; n_classes];
    for instance in values {
        for (feature, per_class) in instance.attributions.iter().enumerate() {
            for (class, &v) in per_class.iter().enumerate() {
                per_values[class][feature].push(v);
                mean_abs[class][feature] += v.abs();
            }
        }
    }
    for class_means in &mut mean_abs {
        for m in class_means.iter_mut() {
            *m /= values.len() as f64;
        }
    }

    let ranking = mean_abs
        .iter()
        .map(|class_means| {
            let mut order: Vec<usize> = (0..n_features).collect();
            order.sort_by(|&a, &b| {
                class_means[b]
                    .partial_cmp(&class_means[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();

    Ok(ShapleyReport {
        feature_names: feature_names.to_vec(),
        class_names: class_names.to_vec(),
        mean_abs,
        ranking,
        values: per_values,
    })
}

const BAR_COLORS: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Static summary chart: the top features overall, one horizontal bar
/// stack per feature with a segment per class.
pub fn render_summary_svg(report: &ShapleyReport, top_n: usize) -> String {
    let order = report.overall_ranking();
    let shown: Vec<usize> = order.into_iter().take(top_n).collect();
    let n_classes = report.class_names.len();

    let row_height = 26.0;
    let label_width = 150.0;
    let plot_width = 420.0;
    let legend_height = 24.0;
    let height = legend_height + shown.len() as f64 * row_height + 30.0;
    let width = label_width + plot_width + 20.0;

    let max_total: f64 = shown
        .iter()
        .map(|&f| (0..n_classes).map(|c| report.mean_abs[c][f]).sum::<f64>())
        .fold(f64::MIN_POSITIVE, f64::max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n",
        fmt(width),
        fmt(height)
    ));
    svg.push_str("<style>text{fill:#333}</style>\n");

    let mut legend_x = label_width;
    for (class, name) in report.class_names.iter().enumerate() {
        let color = BAR_COLORS[class % BAR_COLORS.len()];
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"6\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            fmt(legend_x)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"16\">{name}</text>\n",
            fmt(legend_x + 16.0)
        ));
        legend_x += 16.0 + 9.0 * name.len() as f64 + 14.0;
    }

    for (row, &feature) in shown.iter().enumerate() {
        let y = legend_height + row as f64 * row_height;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt(label_width - 6.0),
            fmt(y + 16.0),
            report.feature_names[feature]
        ));
        let mut x = label_width;
        for class in 0..n_classes {
            let value = report.mean_abs[class][feature];
            let bar = value / max_total * plot_width;
            let color = BAR_COLORS[class % BAR_COLORS.len()];
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"18\" fill=\"{color}\"/>\n",
                fmt(x),
                fmt(y + 4.0),
                fmt(bar)
            ));
            x += bar;
        }
    }

    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">mean |attribution|</text>\n",
        fmt(label_width),
        fmt(height - 8.0)
    ));
    svg.push_str("</svg>\n");
    svg
}
