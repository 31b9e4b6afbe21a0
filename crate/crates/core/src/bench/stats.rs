//! Aggregation of sample records into summary statistics and rates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bench::SampleRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub record_count: usize,
    pub found_count: usize,
    /// Means over pairs that found at least one path.
    pub mean_conditional_eta: Option<f64>,
    pub mean_conditional_fidelity: Option<f64>,
    /// Mean over all pairs, counting unrouted pairs as zero efficiency.
    pub mean_unconditional_eta: f64,
    /// How many records found exactly j paths; sums to `record_count`.
    pub path_counts: Vec<usize>,
    /// path_counts normalized; entry j is P_j.
    pub path_probs: Vec<f64>,
    /// Probability of at least two paths, the purification rate.
    pub prob_purification: f64,
    /// Success rate of the pair served last in each round-robin queue.
    pub last_pair_success: Option<f64>,
    pub mean_manhattan: f64,
    pub conditional_mean_manhattan: Option<f64>,
    /// Mean hop count of the first (shortest) accepted path.
    pub mean_shortest_path_len: Option<f64>,
    /// Mean and maximum of the per-sample deepest layer reached; absent for
    /// static runs.
    pub mean_depth_reached: Option<f64>,
    pub max_depth_reached: Option<usize>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

pub fn summarize(records: &[SampleRecord]) -> Result<SummaryStats> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot summarize zero records".into()));
    }
    let total = records.len();
    let max_paths = records.iter().map(|r| r.path_count).max().unwrap_or(0);
    let mut path_counts = vec![0usize; max_paths + 1];
    for r in records {
        path_counts[r.path_count] += 1;
    }
    let path_probs: Vec<f64> = path_counts.iter().map(|&c| c as f64 / total as f64).collect();
    let prob_purification: f64 = path_counts
        .iter()
        .skip(2)
        .map(|&c| c as f64 / total as f64)
        .sum();

    let found: Vec<&SampleRecord> = records.iter().filter(|r| r.found).collect();

    // depth_reached repeats on every record of a sample, so deduplicate by
    // sample id before averaging.
    let mut seen = BTreeSet::new();
    let depths: Vec<usize> = records
        .iter()
        .filter(|r| seen.insert(r.sample_id))
        .filter_map(|r| r.depth_reached)
        .collect();

    Ok(SummaryStats {
        record_count: total,
        found_count: found.len(),
        mean_conditional_eta: mean(found.iter().filter_map(|r| r.eta)),
        mean_conditional_fidelity: mean(found.iter().filter_map(|r| r.fidelity)),
        mean_unconditional_eta: records.iter().map(|r| r.eta.unwrap_or(0.0)).sum::<f64>()
            / total as f64,
        path_counts,
        path_probs,
        prob_purification,
        last_pair_success: mean(
            records
                .iter()
                .filter(|r| r.last_in_queue)
                .map(|r| if r.found { 1.0 } else { 0.0 }),
        ),
        mean_manhattan: records.iter().map(|r| r.manhattan as f64).sum::<f64>() / total as f64,
        conditional_mean_manhattan: mean(found.iter().map(|r| r.manhattan as f64)),
        mean_shortest_path_len: mean(found.iter().filter_map(|r| r.lengths.first().map(|&l| l as f64))),
        mean_depth_reached: mean(depths.iter().map(|&d| d as f64)),
        max_depth_reached: depths.iter().max().copied(),
    })
}

/// Per-user and whole-network raw Bell pair rates over `tau` time steps:
/// R_u = (1 - P_0) <eta> / tau and R_n = M R_u, with M taken from the
/// distinct pair ids in the records.
pub fn network_rates(records: &[SampleRecord], tau: usize) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot rate zero records".into()));
    }
    if tau == 0 {
        return Err(Error::InvalidConfig("tau must be at least 1".into()));
    }
    let stats = summarize(records)?;
    let p0 = 1.0 - stats.found_count as f64 / stats.record_count as f64;
    let eta = stats.mean_conditional_eta.unwrap_or(0.0);
    let r_user = (1.0 - p0) * eta / tau as f64;
    let pairs: BTreeSet<u32> = records.iter().map(|r| r.pair_id).collect();
    Ok((r_user, pairs.len() as f64 * r_user))
}

/// Rate of pairs meeting a fidelity floor: R times the fraction of all
/// records whose end-to-end fidelity reaches `f_threshold`.
pub fn threshold_rate(records: &[SampleRecord], f_threshold: f64, rate: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("cannot rate zero records".into()));
    }
    if !(f_threshold >= 0.5 && rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "threshold rate needs F_th >= 1/2 and R >= 0, got ({f_threshold}, {rate})"
        )));
    }
    let qualified = records
        .iter()
        .filter(|r| r.fidelity.is_some_and(|f| f >= f_threshold))
        .count();
    Ok(rate * qualified as f64 / records.len() as f64)
}

/// Normalized 2-D histogram over (efficiency, fidelity), efficiency binned
/// on [0, 1] and fidelity on [1/2, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    pub bins: usize,
    /// mass[eta_bin][fidelity_bin]; sums to 1 when any record had a path.
    pub mass: Vec<Vec<f64>>,
}

pub fn heatmap_bins(records: &[SampleRecord], bins: usize) -> Result<HeatMap> {
    if bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin per axis".into()));
    }
    let mut mass = vec![vec![0.0; bins]; bins];
    let mut points = 0usize;
    for r in records {
        let (Some(eta), Some(f)) = (r.eta, r.fidelity) else {
            continue;
        };
        let e_bin = ((eta * bins as f64) as usize).min(bins - 1);
        let f_bin = (((f - 0.5) * 2.0 * bins as f64) as usize).min(bins - 1);
        mass[e_bin][f_bin] += 1.0;
        points += 1;
    }
    if points > 0 {
        for row in &mut mass {
            for cell in row {
                *cell /= points as f64;
            }
        }
    }
    Ok(HeatMap { bins, mass })
}
