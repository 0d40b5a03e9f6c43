//! Estimators against closed forms and independent simulation oracles.

use attnloop_core::estimators::*;
use attnloop_core::ingest::{fan_attention_join, CohortWindow};
use attnloop_core::sim::{self, population_chunk, PopulationWindow};
use attnloop_core::time::{epoch_of, SECONDS_PER_DAY, SECONDS_PER_MONTH};
use attnloop_core::{simulate_population, ModelParams, NoiseKernel, UserSeed};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, Geometric};

fn lifetimes(params: &ModelParams, users: u64, seed: u64) -> ContributionHistogram {
    let mut h = ContributionHistogram::new();
    for u in 0..users {
        let l = sim::lifetime(params, UserSeed::new(seed, u));
        if l.stopped {
            h.add(l.n, 1);
        }
    }
    h
}

/// Discrete power-law sample by continuous inverse CDF, rounded.
fn powerlaw_sample(rng: &mut StdRng, alpha: f64, x_min: u64, n: usize) -> ContributionHistogram {
    let shift = x_min as f64 - 0.5;
    ContributionHistogram::from_counts((0..n).map(|_| {
        let u: f64 = rng.random();
        (shift * (1.0 - u).powf(-1.0 / (alpha - 1.0)) + 0.5).floor() as u64
    }))
}

#[test]
fn geometric_hazard_is_flat() {
    let h = lifetimes(&ModelParams::iid(1.0, 1.0, NoiseKernel::Exponential), 300_000, 11);
    let p = 1.0 - (-1.0f64).exp();
    let curve = hazard(&h).unwrap();
    for n in 1..=10 {
        let Some(pt) = curve.get(n) else { continue };
        let se = (p * (1.0 - p) / pt.at_risk as f64).sqrt();
        assert!((pt.hazard - p).abs() < 5.0 * se, "n={n}: {} vs {p}", pt.hazard);
    }
}

#[test]
fn powerlaw_large_sample() {
    let mut rng = StdRng::seed_from_u64(25);
    let fit = fit_powerlaw(&powerlaw_sample(&mut rng, 2.5, 10, 1_000_000), 10).unwrap();
    assert!((fit.alpha - 2.5).abs() < 0.05, "{}", fit.alpha);
}

#[test]
fn powerlaw_standard_error_covers_truth() {
    let mut rng = StdRng::seed_from_u64(100);
    let covered = (0..100)
        .filter(|_| {
            let fit = fit_powerlaw(&powerlaw_sample(&mut rng, 2.5, 10, 5_000), 10).unwrap();
            (fit.alpha - 2.5).abs() <= 1.96 * fit.std_error()
        })
        .count();
    // 95% nominal; 90 leaves about two binomial standard deviations.
    assert!(covered >= 90, "{covered}");
}

#[test]
fn exponential_decile() {
    let mut rng = StdRng::seed_from_u64(10);
    let exp = Exp::new(1.0).unwrap();
    let xs: Vec<f64> = (0..1_000_000).map(|_| exp.sample(&mut rng)).collect();
    let q = popularity_threshold(&xs, 0.9).unwrap();
    assert!((q - 10f64.ln()).abs() < 0.01, "{q}");
}

#[test]
fn likelihood_ratio_sign() {
    // p = 1 - exp(-0.1): a long geometric tail past x_min.
    let geometric = lifetimes(&ModelParams::iid(10.0, 1.0, NoiseKernel::Exponential), 200_000, 12);
    let c = compare_geometric_vs_powerlaw(&geometric, 10).unwrap();
    assert!(c.llr_per_observation < 0.0, "{}", c.llr_per_observation);
    let reinforced = lifetimes(&ModelParams::reinforced(1.0, 1.0, NoiseKernel::Exponential), 200_000, 12);
    let c = compare_geometric_vs_powerlaw(&reinforced, 10).unwrap();
    assert!(c.llr_per_observation > 0.0, "{}", c.llr_per_observation);
    let single = ContributionHistogram::from_counts([12]);
    assert!(compare_geometric_vs_powerlaw(&single, 10).is_err());
}

#[test]
fn reinforced_tail_exponent() {
    let h = lifetimes(&ModelParams::reinforced(1.0, 1.0, NoiseKernel::Exponential), 200_000, 13);
    let fit = fit_powerlaw(&h, 10).unwrap();
    assert!((fit.alpha - 2.0).abs() < 0.15, "{}", fit.alpha);
}

/// Mean contribution count against a direct re-implementation of the
/// reinforced process with an unrelated generator.
#[test]
fn mean_lifetime_matches_direct_oracle() {
    let params = ModelParams::reinforced(1.0, 1.0, NoiseKernel::Exponential).with_n_cap(10_000);
    let users = 1_000_000u64;
    let (mut s1, mut s2) = (0f64, 0f64);
    for u in 0..users {
        let n = sim::lifetime(&params, UserSeed::new(14, u)).n as f64;
        s1 += n;
        s2 += n * n;
    }
    let mut rng = StdRng::seed_from_u64(14);
    let exp = Exp::new(1.0).unwrap();
    let (mut o1, mut o2) = (0f64, 0f64);
    for _ in 0..users {
        let mut n = 0u64;
        loop {
            n += 1;
            let y: f64 = exp.sample(&mut rng);
            if n as f64 * y <= 1.0 || n == 10_000 {
                break;
            }
        }
        o1 += n as f64;
        o2 += (n * n) as f64;
    }
    let m = users as f64;
    let (mean, omean) = (s1 / m, o1 / m);
    let se = ((s2 / m - mean * mean) / m + (o2 / m - omean * omean) / m).sqrt();
    assert!((mean - omean).abs() < 4.0 * se, "{mean} vs {omean} (se {se})");
}

/// Share of users counted as still active, against an oracle that draws
/// geometric lifetimes, arrivals and gaps directly.
#[test]
fn excluded_fraction_matches_oracle() {
    let start = epoch_of(2007, 1, 1);
    let capture = start + 730 * SECONDS_PER_DAY;
    let cutoff = 3 * SECONDS_PER_MONTH;
    let params = ModelParams::iid(1.0, 2.0, NoiseKernel::Exponential);
    let users = 200_000u64;
    let log = simulate_population(&params, users, 15, start, capture).unwrap();
    let report = contribution_histogram(&log, cutoff);
    let observed = report.excluded_active as f64 / users as f64;

    let p = 1.0 - (-2.0f64).exp();
    let geometric = Geometric::new(p).unwrap();
    let gap = Exp::new(1.0 / params.gap_mean_seconds).unwrap();
    let mut rng = StdRng::seed_from_u64(15);
    let mut active = 0u64;
    for _ in 0..users {
        let n = 1 + geometric.sample(&mut rng);
        let mut t = rng.random_range(start..capture);
        let mut last = t;
        for _ in 1..n {
            t += (gap.sample(&mut rng).ceil() as i64).max(1);
            if t > capture {
                break;
            }
            last = t;
        }
        active += u64::from(last > capture - cutoff);
    }
    let expected = active as f64 / users as f64;
    let se = (2.0 * expected * (1.0 - expected) / users as f64).sqrt();
    assert!((observed - expected).abs() < 4.0 * se, "{observed} vs {expected}");
}

#[test]
fn iid_reverse_index_is_flat_before_the_last() {
    let start = epoch_of(2007, 1, 1);
    let params = ModelParams::iid(3.0, 1.0, NoiseKernel::Exponential);
    let log = simulate_population(&params, 100_000, 16, start, start + 730 * SECONDS_PER_DAY).unwrap();
    let xs: Vec<f64> = log.records().iter().map(|r| r.x).collect();
    let threshold = popularity_threshold(&xs, 0.9).unwrap();
    let s = reverse_index_ratio(&log, 5, threshold, 3 * SECONDS_PER_MONTH);
    assert_eq!(s.len(), 5);
    let pooled: f64 = s.values[..4].iter().sum::<f64>() / 4.0;
    for i in 0..4 {
        let se = (pooled * (1.0 - pooled) / s.counts[i] as f64).sqrt();
        assert!((s.values[i] - pooled).abs() < 3.0 * se, "{:?}", s.values);
    }
    // The last submission fell below theta, hence below the threshold.
    assert_eq!(s.values[4], 0.0);
}

#[test]
fn reinforced_finals_lose_most_weeks() {
    let start = epoch_of(2007, 1, 1);
    let params = ModelParams::reinforced(1.0, 1.0, NoiseKernel::Exponential);
    let log = simulate_population(&params, 50_000, 17, start, start + 364 * SECONDS_PER_DAY).unwrap();
    let xs: Vec<f64> = log.records().iter().map(|r| r.x).collect();
    let threshold = popularity_threshold(&xs, 0.9).unwrap();
    let w = weekly_final_ratio(&log, threshold, 3 * SECONDS_PER_MONTH).unwrap();
    let below = (0..w.all.len()).filter(|&i| w.finals.values[i] < w.all.values[i]).count();
    assert!(2 * below > w.all.len());
}

/// Fans against past productivity, through the snapshot join.
#[test]
fn joined_fans_grow_linearly_with_productivity() {
    let start = epoch_of(2007, 1, 1);
    let snapshot_time = start + 300 * SECONDS_PER_DAY;
    let window = PopulationWindow::new(start, snapshot_time + 14 * SECONDS_PER_DAY).unwrap();
    let params = ModelParams::fan_loop(100.0, 0.05, 0.1, 1.0, NoiseKernel::Exponential);
    let chunk = population_chunk(&params, 0..20_000, 18, window, Some(snapshot_time));
    let log = sim::assemble_log([chunk.records], window.capture_time);
    let mut snap = attnloop_core::ingest::FanSnapshot::new(snapshot_time);
    snap.entries.extend(chunk.fans);
    let cohort = CohortWindow::new(snapshot_time, window.capture_time).unwrap();
    let joined = fan_attention_join(&log, &snap, cohort, &Default::default()).unwrap();
    let bins = binned_mean(joined.productivity_vs_fans(), BinScheme::Pow2);
    let pts: Vec<(f64, f64)> = bins.bins.iter().map(|b| (b.key_mean, b.mean)).collect();
    let fit = linear_fit(&pts).unwrap();
    assert!((fit.slope / 10.0 - 1.0).abs() < 0.1, "{fit:?}");
}
