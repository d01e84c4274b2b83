//! Aligned plain-text tables for evaluation reports.

use std::fmt;

use serde::Serialize;

use devsent_core::evalkit::{AblationReport, ChiSquared, ConfusionMatrix, PrfReport, REPORT_ORDER};
use devsent_core::learner::TuneResult;

/// A simple column-aligned table. The first column is left-aligned, the
/// others right-aligned.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ncols = self.rows.iter().map(Vec::len).chain([self.header.len()]).max().unwrap_or(0);
        let mut width = vec![0; ncols];
        for r in self.rows.iter().chain([&self.header]) {
            for (i, c) in r.iter().enumerate() {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            let mut out = String::new();
            for (i, w) in width.iter().enumerate() {
                let c = cells.get(i).map_or("", String::as_str);
                if i == 0 {
                    out.push_str(&format!("{c:<w$}"));
                } else {
                    out.push_str(&format!("  {c:>w$}"));
                }
            }
            writeln!(f, "{}", out.trim_end())
        };
        line(f, &self.header)?;
        let total: usize = width.iter().sum::<usize>() + 2 * ncols.saturating_sub(1);
        writeln!(f, "{}", "-".repeat(total))?;
        for r in &self.rows {
            line(f, r)?;
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:.3}")
}

/// Per-class and overall recall/precision/F for one or more classifiers.
pub fn prf_table(reports: &[(&str, &PrfReport)]) -> Table {
    let mut t = Table::new(["Classifier", "Class", "R", "P", "F"]);
    for (name, r) in reports {
        for (i, class) in REPORT_ORDER.iter().enumerate() {
            let p = r.per_class[i];
            t.row([name.to_string(), class.to_string(), num(p.recall), num(p.precision), num(p.f1)]);
        }
        let m = r.micro;
        t.row([name.to_string(), "overall".into(), num(m.recall), num(m.precision), num(m.f1)]);
    }
    t
}

/// Gold rows × predicted columns, with each cell's share of its row.
pub fn confusion_table(cm: &ConfusionMatrix) -> Table {
    let mut header = vec!["gold \\ predicted".to_string()];
    header.extend(REPORT_ORDER.iter().map(|p| p.to_string()));
    let mut t = Table::new(header);
    for (g, class) in REPORT_ORDER.iter().enumerate() {
        let row_total: u64 = cm.counts[g].iter().sum();
        let mut cells = vec![class.to_string()];
        for p in 0..3 {
            let c = cm.counts[g][p];
            let share = if row_total == 0 { 0.0 } else { 100.0 * c as f64 / row_total as f64 };
            cells.push(format!("{c} ({share:.1}%)"));
        }
        t.row(cells);
    }
    t
}

fn stars(test: &ChiSquared) -> &'static str {
    match test.p_value {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        _ => "",
    }
}

/// One row per feature setting: C, overall and per-class F, and the
/// chi-squared significance of the change from the previous setting.
pub fn ablation_table(report: &AblationReport) -> Table {
    let mut header: Vec<String> = ["Setting", "C", "R", "P", "F"].map(String::from).to_vec();
    header.extend(REPORT_ORDER.iter().map(|p| format!("F {p}")));
    header.extend(["chi2", "p", "sig"].map(String::from));
    let mut t = Table::new(header);
    for (i, s) in report.settings.iter().enumerate() {
        let m = s.report.micro;
        let mut cells = vec![s.name.clone(), format!("{}", s.c), num(m.recall), num(m.precision), num(m.f1)];
        cells.extend(s.report.per_class.iter().map(|p| num(p.f1)));
        match i.checked_sub(1).and_then(|j| report.comparisons.get(j)) {
            Some(c) => cells.extend([format!("{:.3}", c.test.statistic), format!("{:.4}", c.test.p_value), stars(&c.test).into()]),
            None => cells.extend(["", "", ""].map(String::from)),
        }
        t.row(cells);
    }
    t
}

pub fn tune_table(result: &TuneResult) -> Table {
    let mut t = Table::new(["C", "mean accuracy", "best"]);
    for &(c, acc) in &result.per_c {
        t.row([format!("{c}"), format!("{acc:.4}"), if c == result.best_c { "*".into() } else { String::new() }]);
    }
    t
}

/// Agreement between one pair of coders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAgreement {
    pub coder_a: String,
    pub coder_b: String,
    pub items: usize,
    pub weighted_kappa: f64,
    pub degenerate: bool,
    pub observed_agreement: f64,
}

pub fn kappa_table(pairs: &[PairAgreement]) -> Table {
    let mut t = Table::new(["Coders", "Items", "Weighted kappa", "Observed agreement"]);
    for p in pairs {
        let kappa = if p.degenerate { format!("{:.2} (degenerate)", p.weighted_kappa) } else { format!("{:.2}", p.weighted_kappa) };
        t.row([format!("{} / {}", p.coder_a, p.coder_b), p.items.to_string(), kappa, format!("{:.2}", p.observed_agreement)]);
    }
    if !pairs.is_empty() {
        let n = pairs.len() as f64;
        t.row([
            "average".to_string(),
            String::new(),
            format!("{:.2}", pairs.iter().map(|p| p.weighted_kappa).sum::<f64>() / n),
            format!("{:.2}", pairs.iter().map(|p| p.observed_agreement).sum::<f64>() / n),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let mut t = Table::new(["name", "value"]);
        t.row(["a", "1.000"]);
        t.row(["longer", "10.5"]);
        let s = t.to_string();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "name    value");
        assert_eq!(lines[1], "-------------");
        assert_eq!(lines[2], "a       1.000");
        assert_eq!(lines[3], "longer   10.5");
    }
}
