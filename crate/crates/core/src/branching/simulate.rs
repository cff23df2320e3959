//! Sampling hull profiles and skeleton forests, and composing the forward
//! kernel numerically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::forest::SkeletonForest;
use super::kernel::{
    forward_row_capped, sample_backward_step, sample_forward_step, sample_step_composition,
};
use super::BranchingError;

/// The generator behind every replica.
pub type ReplicaRng = ChaCha8Rng;

/// Independent stream for (seed, stream index).
pub fn replica_rng(seed: u64, stream: u64) -> ReplicaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Profile draws use the even stream of a replica, composition draws the odd.
fn profile_stream(replica: u64) -> u64 {
    replica.wrapping_mul(2)
}

fn composition_stream(replica: u64) -> u64 {
    replica.wrapping_mul(2).wrapping_add(1)
}

/// Default tail tolerance for kernel rows.
pub const DEFAULT_EPS: f64 = 1e-12;

fn check_start(r: usize, m0: usize) -> Result<(), BranchingError> {
    if m0 < 2 {
        return Err(BranchingError::InvalidState { state: m0 });
    }
    let _ = r;
    Ok(())
}

fn profile_with<Rn: Rng + ?Sized>(
    r: usize,
    m0: usize,
    eps: f64,
    rng: &mut Rn,
    mut on_step: impl FnMut(usize, usize, f64),
) -> Result<Vec<usize>, BranchingError> {
    let mut path = Vec::with_capacity(r + 1);
    path.push(m0);
    let mut l = m0;
    for _ in 0..r {
        let (k, kernel) = sample_forward_step(l, eps, rng)?;
        on_step(l, k, kernel);
        path.push(k);
        l = k;
    }
    Ok(path)
}

/// One path m₀, m₁(B̄₁), …, m₁(B̄_R) of the forward boundary chain.
pub fn simulate_hull_profile(
    r: usize,
    m0: usize,
    seed: u64,
    replica: u64,
    eps: f64,
) -> Result<Vec<usize>, BranchingError> {
    check_start(r, m0)?;
    let mut rng = replica_rng(seed, profile_stream(replica));
    profile_with(r, m0, eps, &mut rng, |_, _, _| {})
}

/// Many replicas in parallel; the output depends only on the seed.
pub fn simulate_hull_profiles(
    r: usize,
    m0: usize,
    replicas: usize,
    seed: u64,
    eps: f64,
) -> Result<Vec<Vec<usize>>, BranchingError> {
    check_start(r, m0)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| simulate_hull_profile(r, m0, seed, i, eps))
        .collect()
}

/// A full skeleton forest of depth R whose inner boundary has m0 edges.
/// Its generation sizes equal `simulate_hull_profile` for the same seed and
/// replica, read outer to inner.
pub fn simulate_skeleton(
    r: usize,
    m0: usize,
    seed: u64,
    replica: u64,
    eps: f64,
) -> Result<SkeletonForest, BranchingError> {
    check_start(r, m0)?;
    let mut prng = replica_rng(seed, profile_stream(replica));
    let mut crng = replica_rng(seed, composition_stream(replica));
    let lower_root = crng.gen_range(0..m0);
    let mut steps = Vec::with_capacity(r);
    let path = profile_with(r, m0, eps, &mut prng, |l, k, kernel| {
        steps.push(sample_step_composition(k, l, kernel, &mut crng));
    })?;
    steps.reverse();
    SkeletonForest::new(*path.last().unwrap(), steps, lower_root)
}

pub fn simulate_skeletons(
    r: usize,
    m0: usize,
    replicas: usize,
    seed: u64,
    eps: f64,
) -> Result<Vec<SkeletonForest>, BranchingError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| simulate_skeleton(r, m0, seed, i, eps))
        .collect()
}

/// A ζ̄ forest grown inwards from `outer` particles over `depth` steps.
pub fn simulate_backward_forest<Rn: Rng + ?Sized>(
    outer: usize,
    depth: usize,
    rng: &mut Rn,
) -> SkeletonForest {
    let mut steps = Vec::with_capacity(depth);
    let mut n = outer;
    for _ in 0..depth {
        let d = sample_backward_step(n, rng);
        n = d.iter().map(|&x| x as usize).sum();
        steps.push(d);
    }
    let inner = n;
    let root = if inner > 0 {
        rng.gen_range(0..inner)
    } else {
        0
    };
    SkeletonForest::new(outer, steps, root).expect("sampled compositions are consistent")
}

/// P{m₁(B̄_R) = k | m₀ = l} for k ≤ k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDistribution {
    pub r: usize,
    pub l: usize,
    pub k_max: usize,
    /// Indexed by k.
    pub probabilities: Vec<f64>,
    /// Total mass sent above k_max over all steps.
    pub lost_mass: f64,
    /// Certified bound on the error of the mean.
    pub truncation_bound: f64,
    /// Bound on the deficit of each probability and of the total.
    pub mass_bound: f64,
}

impl BoundaryDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// Largest one-step mean growth E[m₁ | m₀ = l]/l, attained at l = 2.
pub const MEAN_GROWTH: f64 = 35.0 / 8.0;

/// R-fold composition of the forward kernel started at l, on states ≤ k_max.
///
/// The bound on the mean charges every unit of dropped first moment with the
/// worst one-step growth for each remaining step, plus a summation rounding
/// allowance of R·k_max·u relative to the mean.
pub fn boundary_distribution_exact(
    r: usize,
    l: usize,
    k_max: usize,
    tolerance: f64,
) -> Result<BoundaryDistribution, BranchingError> {
    let mut all = boundary_distributions_exact(r, l, k_max, tolerance)?;
    Ok(all.pop().expect("at least the initial state"))
}

/// The distributions after 0, 1, …, r steps.
pub fn boundary_distributions_exact(
    r: usize,
    l: usize,
    k_max: usize,
    tolerance: f64,
) -> Result<Vec<BoundaryDistribution>, BranchingError> {
    if l < 2 || l > k_max {
        return Err(BranchingError::InvalidState { state: l });
    }
    let mut cur = vec![0.0; k_max + 1];
    cur[l] = 1.0;
    let mut lost_mass = 0.0;
    let mut growth = MEAN_GROWTH;
    let mut lost_moments = Vec::with_capacity(r);
    let mut out = Vec::with_capacity(r + 1);
    out.push(BoundaryDistribution {
        r: 0,
        l,
        k_max,
        probabilities: cur.clone(),
        lost_mass: 0.0,
        truncation_bound: 0.0,
        mass_bound: 0.0,
    });
    for step in 1..=r {
        let rows: Vec<(usize, f64, super::kernel::CappedRow)> = cur
            .par_iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, &w)| forward_row_capped(s, k_max).map(|row| (s, w, row)))
            .collect::<Result<_, _>>()?;
        let mut next = vec![0.0; k_max + 1];
        let mut lost_moment = 0.0;
        for (s, w, row) in &rows {
            for (k, q) in row.probabilities.iter().enumerate() {
                next[k] += w * q;
            }
            lost_mass += w * row.tail_mass;
            lost_moment += w * row.tail_moment;
            let row_mean: f64 = row
                .probabilities
                .iter()
                .enumerate()
                .map(|(k, q)| k as f64 * q)
                .sum::<f64>()
                + row.tail_moment;
            growth = growth.max(row_mean / *s as f64);
        }
        lost_moments.push(lost_moment);
        cur = next;
        let moment_bound: f64 = lost_moments
            .iter()
            .enumerate()
            .map(|(i, m)| m * growth.powi((step - 1 - i) as i32))
            .sum();
        let mean: f64 = cur.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let rounding = (step * k_max) as f64 * f64::EPSILON;
        let bound = moment_bound + rounding * mean;
        if bound > tolerance {
            return Err(BranchingError::TruncationBound { bound, tolerance });
        }
        out.push(BoundaryDistribution {
            r: step,
            l,
            k_max,
            probabilities: cur.clone(),
            lost_mass,
            truncation_bound: bound,
            mass_bound: lost_mass + rounding,
        });
    }
    Ok(out)
}
