//! Tab-separated result tables.

use cobrar_core::evaluation::{EvalReport, MetricComparison};

use crate::commands::LoadedModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub label: String,
    pub ndcg: f64,
    pub arp: f64,
    pub pop_rsp: Option<f64>,
    pub coverage: f64,
    pub params_branch: u64,
    pub params_total: u64,
}

impl ModelSummary {
    pub fn new(model: &LoadedModel, report: &EvalReport) -> Self {
        let p = model.params();
        ModelSummary {
            label: model.label(),
            ndcg: report.mean_ndcg,
            arp: report.mean_arp,
            pop_rsp: report.pop_rsp,
            coverage: report.coverage,
            params_branch: p.branch_params,
            params_total: p.total,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn aggregate_header() -> &'static str {
    "model\tndcg\tarp\tpoprsp\tcoverage\tparams_branch\tparams_total\n"
}

pub fn aggregate_row(s: &ModelSummary) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        s.label,
        s.ndcg,
        s.arp,
        opt(s.pop_rsp),
        s.coverage,
        s.params_branch,
        s.params_total
    )
}

/// Branch parameters relative to the smallest non-zero count in the table, printed
/// exactly when the ratio is an integer.
fn branch_ratio(params: u64, min: Option<u64>) -> String {
    match min {
        Some(m) if params % m == 0 => (params / m).to_string(),
        Some(m) => (params as f64 / m as f64).to_string(),
        None => "NA".to_string(),
    }
}

/// One row per model. `*_delta` is the difference to the best model on that metric,
/// `*_p` the Bonferroni-judged p-value against it, and `*_sig` holds `*` on the best
/// model's row when it differs significantly from every other model. `alpha_corrected`
/// is the per-test level after the Bonferroni division.
pub fn comparison_table(models: &[ModelSummary], ndcg: &MetricComparison, arp: &MetricComparison) -> String {
    let mut out = String::from(
        "model\tndcg\tndcg_delta\tndcg_p\tndcg_sig\tarp\tarp_delta\tarp_p\tarp_sig\tpoprsp\tcoverage\tparams_branch\tparams_total\tbranch_ratio\talpha_corrected\n",
    );
    let alpha = ndcg
        .tests
        .iter()
        .flatten()
        .next()
        .map_or_else(|| "NA".to_string(), |t| t.corrected_alpha.to_string());
    let min_branch = models.iter().map(|m| m.params_branch).filter(|&p| p > 0).min();
    let cell = |cmp: &MetricComparison, i: usize| -> (String, &'static str) {
        match &cmp.tests[i] {
            Some(t) => (t.p_value.to_string(), ""),
            None => ("-".to_string(), if cmp.best_is_significant() { "*" } else { "" }),
        }
    };
    for (i, m) in models.iter().enumerate() {
        let (ndcg_p, ndcg_sig) = cell(ndcg, i);
        let (arp_p, arp_sig) = cell(arp, i);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            m.label,
            m.ndcg,
            m.ndcg - models[ndcg.best].ndcg,
            ndcg_p,
            ndcg_sig,
            m.arp,
            m.arp - models[arp.best].arp,
            arp_p,
            arp_sig,
            opt(m.pop_rsp),
            m.coverage,
            m.params_branch,
            m.params_total,
            branch_ratio(m.params_branch, min_branch),
            alpha
        ));
    }
    out
}
