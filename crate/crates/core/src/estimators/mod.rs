//! Statistical procedures over contribution logs.

mod binning;
mod fit;
mod histogram;
mod ratios;
mod regression;
pub mod special;
mod ttest;

pub use binning::{binned_mean, Bin, BinScheme, BinnedMeans};
pub use fit::{
    compare_geometric_vs_powerlaw, fit_geometric, fit_geometric_tail, fit_powerlaw, fit_powerlaw_with_min_tail,
    GeometricTailFit, ModelComparison, PowerLawFit, Verdict, DECISIVE_LLR, MIN_TAIL_POINTS,
};
pub use histogram::{contribution_histogram, hazard, ContributionHistogram, HazardCurve, HazardPoint, HistogramReport};
pub use ratios::{
    final_flags, is_popular, popularity_threshold, reverse_index_ratio, weekly_final_ratio,
    weekly_final_ratio_from_flags, RatioLabel, RatioSeries, WeeklyFinalRatios,
};
pub use regression::{linear_fit, LinearFit};
pub use ttest::{paired_t_test_less, PairedTTest};
