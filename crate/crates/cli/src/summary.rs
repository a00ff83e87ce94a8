//! The run-all summary: the model comparison table plus the top
//! attributions per disease, rendered as aligned plain text.

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

/// Render the comparison CSV as an aligned table.
fn render_table(eval_csv: &str) -> String {
    let rows: Vec<Vec<&str>> = eval_csv
        .lines()
        .map(|line| line.split(',').collect())
        .collect();
    if rows.is_empty() {
        return String::new();
    }
    let n_cols = rows[0].len();
    let mut widths = vec![0usize; n_cols];
    for row in &rows {
        for (i, field) in row.iter().enumerate() {
            widths[i] = widths[i].max(field.len());
        }
    }
    let mut out = String::new();
    for (index, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, field)| pad(field, widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if index == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (n_cols - 1)));
            out.push('\n');
        }
    }
    out
}

/// Top features per disease from a shapley CSV (feature,class,value,rank),
/// aggregated as the best rank each feature reaches in any class.
fn render_top_features(shapley_csv: &str, top_n: usize) -> String {
    let mut best: Vec<(String, f64)> = Vec::new();
    for line in shapley_csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            continue;
        }
        let feature = fields[0].to_string();
        let value: f64 = fields[2].parse().unwrap_or(0.0);
        match best.iter_mut().find(|(name, _)| *name == feature) {
            Some((_, v)) => *v = v.max(value),
            None => best.push((feature, value)),
        }
    }
    best.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut out = String::new();
    for (rank, (feature, value)) in best.into_iter().take(top_n).enumerate() {
        out.push_str(&format!("  {:>2}. {feature} ({value:.4})\n", rank + 1));
    }
    out
}

pub fn render_summary(
    eval_csv: &str,
    shapley: &[(trihealth::domain::Disease, String)],
    top_n: usize,
) -> String {
    let mut out = String::new();
    out.push_str("== Model comparison ==\n");
    out.push_str(&render_table(eval_csv));
    for (disease, csv) in shapley {
        out.push_str(&format!("\n== Top attributions: {disease} ==\n"));
        out.push_str(&render_top_features(csv, top_n));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use trihealth::domain::Disease;

    #[test]
    fn summary_renders_table_and_rankings() {
        let eval_csv = "disease,model,imputation,accuracy\ndiabetes,GBT,KNNI,0.8012\n";
        let shapley = vec![(
            Disease::Diabetes,
            "feature,class,mean_abs_value,rank\nbg,DM,0.12,1\nbmi,DM,0.08,2\n".to_string(),
        )];
        let text = render_summary(eval_csv, &shapley, 10);
        assert!(text.contains("== Model comparison =="));
        // columns pad to the widest entry, header included
        assert!(text.contains("diabetes  GBT    KNNI        0.8012"), "{text}");
        assert!(text.contains("1. bg (0.1200)"));
        assert!(text.contains("2. bmi (0.0800)"));
    }
}
