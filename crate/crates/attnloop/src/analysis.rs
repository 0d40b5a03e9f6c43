//! The analyses behind `analyze` and `fit`, turned into [`Report`]s.

use std::collections::BTreeSet;

use attnloop_core::estimators::{
    binned_mean, compare_geometric_vs_powerlaw, contribution_histogram, fit_geometric, fit_powerlaw, hazard,
    linear_fit, paired_t_test_less, popularity_threshold, reverse_index_ratio, weekly_final_ratio, BinScheme,
    BinnedMeans, ContributionHistogram, RatioLabel, Verdict,
};
use attnloop_core::ingest::{fan_attention_join, CohortWindow, FanSnapshot};
use attnloop_core::time::SECONDS_PER_MONTH;
use attnloop_core::{EstimateError, EventLog, UserId};
use clap::ValueEnum;
use serde_json::json;
use thiserror::Error;

use crate::report::{Cell, Report, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Analysis {
    Dist,
    Hazard,
    ReverseIndex,
    WeeklyFinal,
    FanBins,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Dist => "dist",
            Analysis::Hazard => "hazard",
            Analysis::ReverseIndex => "reverse_index",
            Analysis::WeeklyFinal => "weekly_final",
            Analysis::FanBins => "fan_bins",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Geometric,
    Powerlaw,
    Both,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    /// A required option is absent or out of range; names the flag.
    #[error("--{flag}: {reason}")]
    Option { flag: &'static str, reason: String },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

fn option_error(flag: &'static str, reason: impl Into<String>) -> AnalysisError {
    AnalysisError::Option {
        flag,
        reason: reason.into(),
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    /// Trailing submissions per user for `reverse_index`.
    pub k: usize,
    /// Popularity quantile.
    pub q: f64,
    /// Inactivity (and finality) period, in 30-day months.
    pub t_months: u32,
    pub window: Option<CohortWindow>,
    pub snapshot: Option<FanSnapshot>,
    pub exclude: BTreeSet<UserId>,
    /// Fixed bin width for `fan_bins`; powers of two when absent.
    pub bin_width: Option<u64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            k: 5,
            q: 0.9,
            t_months: 3,
            window: None,
            snapshot: None,
            exclude: BTreeSet::new(),
            bin_width: None,
        }
    }
}

impl AnalysisOptions {
    fn cutoff_seconds(&self) -> i64 {
        i64::from(self.t_months) * SECONDS_PER_MONTH
    }

    fn threshold(&self, log: &EventLog) -> Result<f64, AnalysisError> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(option_error("q", "must lie in (0, 1]"));
        }
        let xs: Vec<f64> = log.records().iter().map(|r| r.x).collect();
        Ok(popularity_threshold(&xs, self.q)?)
    }
}

fn stopped_histogram(log: &EventLog, t_months: u32) -> Result<(ContributionHistogram, usize), AnalysisError> {
    let report = contribution_histogram(log, i64::from(t_months) * SECONDS_PER_MONTH);
    if report.histogram.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "contribution counts (users inactive for the last T months)",
            needed: 1,
            got: 0,
        }
        .into());
    }
    Ok((report.histogram, report.excluded_active))
}

pub fn run_analysis(log: &EventLog, analysis: Analysis, opts: &AnalysisOptions) -> Result<Report, AnalysisError> {
    let mut report = Report::new(analysis.name());
    report.field("analysis", analysis.name());
    report.field("records", log.len() as u64);
    report.field("capture_time", log.capture_time());
    match analysis {
        Analysis::Dist => dist(log, opts, &mut report)?,
        Analysis::Hazard => hazard_report(log, opts, &mut report)?,
        Analysis::ReverseIndex => reverse_index(log, opts, &mut report)?,
        Analysis::WeeklyFinal => weekly_final(log, opts, &mut report)?,
        Analysis::FanBins => fan_bins(log, opts, &mut report)?,
    }
    Ok(report)
}

fn dist(log: &EventLog, opts: &AnalysisOptions, report: &mut Report) -> Result<(), AnalysisError> {
    let (hist, active) = stopped_histogram(log, opts.t_months)?;
    let mut table = Table::new(&["n", "users", "ccdf"]);
    for (&n, &users) in hist.counts() {
        table.push(vec![n.into(), users.into(), (hist.at_least(n) as f64 / hist.total_users() as f64).into()]);
    }
    report.field("stopped_users", hist.total_users());
    report.field("excluded_active", active as u64);
    report.field("max_n", hist.max_n());
    report.summary = format!(
        "dist: {} stopped users ({} still active), largest count {}",
        hist.total_users(),
        active,
        hist.max_n().unwrap_or(0)
    );
    report.tables.push(("dist".into(), table));
    Ok(())
}

fn hazard_report(log: &EventLog, opts: &AnalysisOptions, report: &mut Report) -> Result<(), AnalysisError> {
    let (hist, active) = stopped_histogram(log, opts.t_months)?;
    let curve = hazard(&hist)?;
    let mut table = Table::new(&["n", "hazard", "events", "at_risk", "survival"]);
    for (p, (_, g)) in curve.points.iter().zip(curve.survival()) {
        table.push(vec![p.n.into(), p.hazard.into(), p.events.into(), p.at_risk.into(), g.into()]);
    }
    report.field("stopped_users", hist.total_users());
    report.field("excluded_active", active as u64);
    report.summary = format!(
        "hazard: {} points from {} stopped users, h(1) = {:.6}",
        curve.points.len(),
        hist.total_users(),
        curve.points[0].hazard
    );
    report.tables.push(("hazard".into(), table));
    Ok(())
}

fn reverse_index(log: &EventLog, opts: &AnalysisOptions, report: &mut Report) -> Result<(), AnalysisError> {
    if opts.k == 0 {
        return Err(option_error("K", "must be at least 1"));
    }
    let threshold = opts.threshold(log)?;
    let series = reverse_index_ratio(log, opts.k, threshold, opts.cutoff_seconds());
    if series.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "reverse-index ratios (stopped users with at least K submissions)",
            needed: 1,
            got: 0,
        }
        .into());
    }
    let mut table = Table::new(&["index", "ratio", "users", "std_error"]);
    for i in 0..series.len() {
        let RatioLabel::ReverseIndex(j) = series.labels[i] else { unreachable!() };
        table.push(vec![j.into(), series.values[i].into(), series.counts[i].into(), series.std_error(i).into()]);
    }
    report.real("threshold", threshold);
    report.field("q", opts.q);
    report.field("users", series.counts[0]);
    let values: Vec<String> = series.values.iter().map(|v| format!("{v:.4}")).collect();
    report.summary = format!(
        "reverse_index: {} users, threshold {threshold:.6}, ratios -{}..-1: {}",
        series.counts[0],
        opts.k,
        values.join(" ")
    );
    report.tables.push(("reverse_index".into(), table));
    Ok(())
}

fn weekly_final(log: &EventLog, opts: &AnalysisOptions, report: &mut Report) -> Result<(), AnalysisError> {
    let threshold = opts.threshold(log)?;
    let w = weekly_final_ratio(log, threshold, opts.cutoff_seconds())?;
    let test = paired_t_test_less(&w.finals.values, &w.all.values)?;
    let mut table = Table::new(&["week", "ratio_all", "submissions", "ratio_final", "finals"]);
    for i in 0..w.all.len() {
        table.push(vec![
            w.all.labels[i].to_string().into(),
            w.all.values[i].into(),
            w.all.counts[i].into(),
            w.finals.values[i].into(),
            w.finals.counts[i].into(),
        ]);
    }
    report.real("threshold", threshold);
    report.field("q", opts.q);
    report.field("weeks", w.all.len() as u64);
    report.real("t_stat", test.t_stat);
    report.real("p_value", test.p_value);
    report.field("dof", test.dof);
    report.real("mean_difference", test.mean_difference);
    report.summary = format!(
        "weekly_final: {} weeks, t = {:.6}, one-sided p = {:.6e} (final below all)",
        w.all.len(),
        test.t_stat,
        test.p_value
    );
    report.tables.push(("weekly_final".into(), table));
    Ok(())
}

fn binned_table(b: &BinnedMeans) -> Table {
    let mut table = Table::new(&["bin", "lower", "upper", "key_mean", "mean", "count"]);
    for bin in &b.bins {
        table.push(vec![
            bin.label.into(),
            bin.lower.into(),
            bin.upper.into(),
            bin.key_mean.into(),
            bin.mean.into(),
            bin.count.into(),
        ]);
    }
    table
}

fn line_json(b: &BinnedMeans) -> serde_json::Value {
    let pts: Vec<(f64, f64)> = b.bins.iter().map(|b| (b.key_mean, b.mean)).collect();
    match linear_fit(&pts) {
        Some(f) => json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared }),
        None => serde_json::Value::Null,
    }
}

fn fan_bins(log: &EventLog, opts: &AnalysisOptions, report: &mut Report) -> Result<(), AnalysisError> {
    let snapshot = opts
        .snapshot
        .as_ref()
        .ok_or_else(|| option_error("snapshot", "required for fan_bins"))?;
    let window = opts
        .window
        .ok_or_else(|| option_error("window-start", "fan_bins needs --window-start and --window-end"))?;
    let joined = fan_attention_join(log, snapshot, window, &opts.exclude)?;
    if joined.outside_span || joined.rows.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "fan join (contributors submitting inside the window)",
            needed: 1,
            got: 0,
        }
        .into());
    }
    let scheme = match opts.bin_width {
        Some(0) => return Err(option_error("bin-width", "must be positive")),
        Some(w) => BinScheme::FixedWidth(w),
        None => BinScheme::Pow2,
    };
    let productivity = binned_mean(joined.productivity_vs_fans(), scheme);
    let attention = binned_mean(joined.fans_vs_attention(), scheme);
    report.field("contributors", joined.rows.len() as u64);
    report.field("submissions", joined.submissions() as u64);
    report.field("excluded", opts.exclude.len() as u64);
    report.field("productivity_rejected", productivity.rejected);
    report.field("attention_rejected", attention.rejected);
    report.field("fans_vs_productivity_line", line_json(&productivity));
    report.field("attention_vs_fans_line", line_json(&attention));
    report.summary = format!(
        "fan_bins: {} contributors, {} in-window submissions, {} productivity bins, {} fan bins",
        joined.rows.len(),
        joined.submissions(),
        productivity.bins.len(),
        attention.bins.len()
    );
    report.tables.push(("fan_bins_productivity".into(), binned_table(&productivity)));
    report.tables.push(("fan_bins_attention".into(), binned_table(&attention)));
    Ok(())
}

pub fn run_fit(log: &EventLog, model: FitModel, x_min: Option<u64>, t_months: u32) -> Result<Report, AnalysisError> {
    let (hist, active) = stopped_histogram(log, t_months)?;
    let mut report = Report::new("fit");
    report.field("stopped_users", hist.total_users());
    report.field("excluded_active", active as u64);
    let mut table = Table::new(&["model", "parameter", "value"]);
    let mut lines = Vec::new();
    if matches!(model, FitModel::Geometric | FitModel::Both) {
        let p = fit_geometric(&hist)?;
        report.real("geometric_p", p);
        table.push(vec!["geometric".into(), "p".into(), Cell::Real(p)]);
        lines.push(format!("geometric: stop probability p = {p:.6}"));
    }
    if matches!(model, FitModel::Powerlaw | FitModel::Both) {
        let x_min = x_min.ok_or_else(|| option_error("x-min", "required for power-law fits"))?;
        let fit = fit_powerlaw(&hist, x_min)?;
        report.real("powerlaw_alpha", fit.alpha);
        report.real("powerlaw_std_error", fit.std_error());
        report.field("x_min", x_min);
        report.field("n_tail", fit.n_tail);
        table.push(vec!["powerlaw".into(), "alpha".into(), Cell::Real(fit.alpha)]);
        table.push(vec!["powerlaw".into(), "std_error".into(), Cell::Real(fit.std_error())]);
        table.push(vec!["powerlaw".into(), "x_min".into(), Cell::UInt(x_min)]);
        table.push(vec!["powerlaw".into(), "n_tail".into(), Cell::UInt(fit.n_tail)]);
        lines.push(format!(
            "power law: alpha = {:.6} +/- {:.6} on {} users with n >= {x_min}",
            fit.alpha,
            fit.std_error(),
            fit.n_tail
        ));
        if model == FitModel::Both {
            let cmp = compare_geometric_vs_powerlaw(&hist, x_min)?;
            let verdict = match cmp.verdict() {
                Verdict::PowerLaw => "the power law fits the tail better",
                Verdict::Geometric => "the geometric law fits the tail better",
                Verdict::Inconclusive => "neither model is clearly better",
            };
            report.real("llr_per_observation", cmp.llr_per_observation);
            report.real("geometric_tail_p", cmp.geometric.p);
            report.field("verdict", verdict);
            table.push(vec!["comparison".into(), "llr_per_observation".into(), Cell::Real(cmp.llr_per_observation)]);
            lines.push(format!(
                "log-likelihood ratio (power law - geometric) per observation: {:+.6}",
                cmp.llr_per_observation
            ));
            lines.push(format!("verdict: {verdict}"));
        }
    }
    report.summary = lines.join("\n");
    report.tables.push(("fit".into(), table));
    Ok(report)
}
