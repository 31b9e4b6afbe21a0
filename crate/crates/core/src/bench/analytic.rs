//! Closed-form companions to the Monte-Carlo data: exact pair-distance
//! statistics on the grid, competition-free path-count and cost models, and
//! the application-level rate formulas.

use serde::{Deserialize, Serialize};

use crate::cost::{purify, to_physical, CostVector, PhysicalCost};
use crate::{Error, Result};

/// Mean Manhattan distance between two distinct nodes of an n-by-n grid,
/// exactly 2n/3.
pub fn mean_manhattan(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::GridTooSmall(n));
    }
    Ok(2.0 * n as f64 / 3.0)
}

/// Exact distribution of the Manhattan distance between two distinct
/// uniformly drawn nodes; entry `d` is P(L1 = d), for d up to 2(n-1).
pub fn manhattan_distribution(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::GridTooSmall(n));
    }
    // Ways to draw an ordered coordinate pair at axis distance dx.
    let axis = |dx: usize| -> u128 {
        if dx == 0 {
            n as u128
        } else {
            2 * (n - dx) as u128
        }
    };
    let total = {
        let v = (n * n) as u128;
        v * (v - 1)
    };
    let mut probs = vec![0.0; 2 * n - 1];
    for (d, p) in probs.iter_mut().enumerate() {
        let mut count: u128 = 0;
        for dx in 0..=d.min(n - 1) {
            let dy = d - dx;
            if dy <= n - 1 {
                count += axis(dx) * axis(dy);
            }
        }
        if d == 0 {
            // dx = dy = 0 is the same node twice, which is excluded.
            count -= (n * n) as u128;
        }
        *p = count as f64 / total as f64;
    }
    Ok(probs)
}

/// Competition-free path-count probabilities on an n-by-n grid: a pair can
/// use `min(deg(A), deg(B), max_paths)` edge-disjoint paths, and grid
/// degrees depend only on corner/edge/interior position. Entry `j` is P_j.
pub fn analytic_path_probs(n: usize, max_paths: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::GridTooSmall(n));
    }
    if max_paths == 0 {
        return Err(Error::InvalidConfig("max_paths must be at least 1".into()));
    }
    let corners = 4u128;
    let edges = (4 * (n - 2)) as u128;
    let interior = ((n - 2) * (n - 2)) as u128;
    let choose2 = |x: u128| x * (x.saturating_sub(1)) / 2;
    let total = choose2((n * n) as u128);
    // Unordered pair counts by the smaller endpoint degree.
    let by_min_degree = [
        (2usize, choose2(corners) + corners * (edges + interior)),
        (3usize, choose2(edges) + edges * interior),
        (4usize, choose2(interior)),
    ];
    let mut probs = vec![0.0; max_paths + 1];
    for (deg, count) in by_min_degree {
        probs[deg.min(max_paths)] += count as f64 / total as f64;
    }
    Ok(probs)
}

/// One point of the competition-free cost model: `paths` identical channels
/// of single-path efficiency `e1` (and the fidelity implied by symmetric
/// loss and dephasing) merged into one purified pair.
pub fn tradeoff_point(e1: f64, paths: usize) -> Result<PhysicalCost> {
    if !(e1 > 0.0 && e1 <= 1.0) {
        return Err(Error::InvalidPhysical {
            eta: e1,
            fidelity: f64::NAN,
        });
    }
    if !(1..=4).contains(&paths) {
        return Err(Error::InvalidConfig(format!(
            "tradeoff curves cover 1 to 4 paths, got {paths}"
        )));
    }
    let base = PhysicalCost::new(e1, (e1 + 1.0) / 2.0)?;
    let mut acc = base;
    for _ in 1..paths {
        acc = purify(acc, base);
    }
    Ok(acc)
}

/// Samples [`tradeoff_point`] over a grid of single-path efficiencies,
/// returning (efficiency, fidelity) pairs.
pub fn analytic_tradeoff(e1_grid: &[f64], paths: usize) -> Result<Vec<(f64, f64)>> {
    e1_grid
        .iter()
        .map(|&e1| tradeoff_point(e1, paths).map(|p| (p.eta(), p.fidelity())))
        .collect()
}

/// Bounding cost estimates for multi-path routing on an n-by-n grid at a
/// given path budget, built from the two canonical edge-disjoint path-length
/// sets with L fixed at the mean Manhattan distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub paths: usize,
    /// Pair sharing a row or column: lengths (L, L+2, L+2, L+8).
    pub same_row: PhysicalCost,
    /// Generic interior pair: lengths (L, L, L+4, L+4).
    pub off_axis: PhysicalCost,
}

pub fn purified_scaling_estimates(
    n: usize,
    edge_cost: CostVector,
    max_paths: usize,
) -> Result<Vec<ScalingEstimate>> {
    if edge_cost.is_blocked() {
        return Err(Error::InvalidConfig("edge cost may not be blocked".into()));
    }
    if !(1..=4).contains(&max_paths) {
        return Err(Error::InvalidConfig(format!(
            "estimates cover 1 to 4 paths, got {max_paths}"
        )));
    }
    let l = mean_manhattan(n)?;
    let path = |hops: f64| -> Result<PhysicalCost> {
        Ok(to_physical(CostVector::new(
            hops * edge_cost.loss_db(),
            hops * edge_cost.deph_db(),
        )?))
    };
    let sets = [
        [l, l + 2.0, l + 2.0, l + 8.0],
        [l, l, l + 4.0, l + 4.0],
    ];
    let mut out = Vec::with_capacity(max_paths);
    for paths in 1..=max_paths {
        let mut merged = [PhysicalCost::PERFECT; 2];
        for (i, set) in sets.iter().enumerate() {
            let mut acc = path(set[0])?;
            for &hops in &set[1..paths] {
                acc = purify(acc, path(hops)?);
            }
            merged[i] = acc;
        }
        out.push(ScalingEstimate {
            paths,
            same_row: merged[0],
            off_axis: merged[1],
        });
    }
    Ok(out)
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Secret key rate C = R (1 - H(1 - F)) for raw pair rate R at fidelity F.
pub fn secret_key_rate(fidelity: f64, rate: f64) -> Result<f64> {
    if !((0.5..=1.0).contains(&fidelity) && rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "secret key rate needs F in [1/2, 1] and R >= 0, got ({fidelity}, {rate})"
        )));
    }
    Ok(rate * (1.0 - binary_entropy(1.0 - fidelity)))
}

/// Computational advantage of merging N nodes of n qubits into one machine
/// under a scaling law: lambda = f(N n) / (N f(n)).
pub fn unification_advantage<F: Fn(f64) -> f64>(scaling: F, machines: u32, qubits: u32) -> Result<f64> {
    if machines == 0 || qubits == 0 {
        return Err(Error::InvalidConfig(
            "advantage needs at least one machine and one qubit".into(),
        ));
    }
    let single = scaling(qubits as f64);
    let merged = scaling((machines * qubits) as f64);
    if !(single > 0.0 && merged > 0.0) {
        return Err(Error::InvalidConfig(
            "scaling function must be positive".into(),
        ));
    }
    Ok(merged / (machines as f64 * single))
}
