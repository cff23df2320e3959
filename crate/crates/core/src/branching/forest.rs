//! Skeleton forests, their exact weights, and exhaustive enumeration of
//! small forests.

use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{
    f0_exact, kernel_modified_with, modified_table, offspring_table, BranchingError,
    DegenerationRule,
};
use crate::numeric::{rat, BigRational};

type Q = BigRational;

/// Offspring compositions per generation, outer boundary first.
pub type Trajectory = Vec<Vec<u32>>;

/// An ordered planar forest of a ζ̄ trajectory. Generation 0 is the outer
/// boundary, generation `depth()` the inner one. Vertex order in generation 0
/// starts at the upper root and induces the order of every later generation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SkeletonForest {
    offspring: Trajectory,
    sizes: Vec<usize>,
    lower_root: usize,
}

impl SkeletonForest {
    /// Builds a forest from its outer size and per-generation compositions.
    pub fn new(
        outer: usize,
        offspring: Trajectory,
        lower_root: usize,
    ) -> Result<Self, BranchingError> {
        let mut sizes = vec![outer];
        for (r, d) in offspring.iter().enumerate() {
            if d.len() != sizes[r] {
                return Err(BranchingError::MalformedForest(format!(
                    "generation {r} has {} vertices but {} offspring entries",
                    sizes[r],
                    d.len()
                )));
            }
            sizes.push(d.iter().map(|&x| x as usize).sum());
        }
        let inner = *sizes.last().unwrap();
        if inner > 0 && lower_root >= inner {
            return Err(BranchingError::MalformedForest(format!(
                "lower root {lower_root} outside inner generation of size {inner}"
            )));
        }
        Ok(SkeletonForest {
            offspring,
            sizes,
            lower_root,
        })
    }

    pub fn depth(&self) -> usize {
        self.offspring.len()
    }

    /// Boundary lengths, outer first.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn generation_size(&self, r: usize) -> usize {
        self.sizes[r]
    }

    /// Offspring counts of generation r's vertices.
    pub fn offspring(&self, r: usize) -> &[u32] {
        &self.offspring[r]
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.offspring
    }

    pub fn lower_root(&self) -> usize {
        self.lower_root
    }

    /// Parent index in generation r of each vertex of generation r+1.
    pub fn parents(&self, r: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes[r + 1]);
        for (i, &d) in self.offspring[r].iter().enumerate() {
            out.extend(std::iter::repeat_n(i, d as usize));
        }
        out
    }

    /// Per step: one vertex parents the entire nonempty next generation.
    pub fn single_parent_flags(&self) -> Vec<bool> {
        self.offspring
            .iter()
            .map(|d| d.iter().filter(|&&x| x > 0).count() == 1)
            .collect()
    }

    /// For each vertex of generation `from`, whether it has a descendant
    /// in generation `to` (from ≤ to).
    pub fn has_descendant(&self, from: usize, to: usize) -> Vec<bool> {
        let mut alive = vec![true; self.sizes[to]];
        for r in (from..to).rev() {
            let mut up = vec![false; self.sizes[r]];
            for (child, parent) in self.parents(r).into_iter().enumerate() {
                if alive[child] {
                    up[parent] = true;
                }
            }
            alive = up;
        }
        alive
    }
}

/// Exact weight of one step's composition.
pub fn step_weight(d: &[u32], modified: Option<DegenerationRule>, p: &[Q], pbar: &[Q]) -> Q {
    let n = d.len();
    if n == 0 {
        return Q::one();
    }
    let l: usize = d.iter().map(|&x| x as usize).sum();
    let plain = || d.iter().fold(Q::one(), |acc, &x| acc * &p[x as usize]);
    let Some(rule) = modified else {
        return plain();
    };
    let p0_pow = p[0].pow(n as i32 - 1);
    if l == 0 {
        return match rule {
            DegenerationRule::Uniform => &p0_pow * &p[0] + &p0_pow * rat(n as i64, 6),
            DegenerationRule::Printed => &pbar[0] * p0_pow,
        };
    }
    if d.iter().filter(|&&x| x > 0).count() == 1 {
        return &pbar[l] * p0_pow;
    }
    plain()
}

/// ω(x) or ω̄(x): the product over all vertices above the inner generation.
pub fn trajectory_weight(forest: &SkeletonForest, modified: bool) -> Q {
    trajectory_weight_with(forest, modified.then_some(DegenerationRule::Uniform))
}

pub fn trajectory_weight_with(forest: &SkeletonForest, rule: Option<DegenerationRule>) -> Q {
    let max_d = forest
        .offspring
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let n = max_d.max(*forest.sizes.iter().max().unwrap()) + 1;
    let p = offspring_table(n);
    let pbar = modified_table(n);
    forest
        .offspring
        .iter()
        .fold(Q::one(), |acc, d| acc * step_weight(d, rule, &p, &pbar))
}

/// All compositions of l into k ordered nonnegative parts.
pub fn compositions(k: usize, l: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return if l == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(i: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left as u32;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v as u32;
            rec(i + 1, left - v, cur, out);
        }
    }
    rec(0, l, &mut cur, &mut out);
    out
}

/// Exhaustive list of small trajectories with exact probabilities, plus the
/// mass of everything that leaves the size cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub start: usize,
    pub depth: usize,
    pub cap: usize,
    pub weights: HashMap<Trajectory, Q>,
    /// Probability of ever exceeding the cap, from exact row totals.
    pub overflow: Q,
}

impl Enumeration {
    pub fn total(&self) -> Q {
        self.weights
            .values()
            .fold(self.overflow.clone(), |a, w| a + w)
    }
}

/// ζ̄ trajectories of the given depth from `start` outer particles, with all
/// generation sizes ≤ cap. Overflow mass is 1 − Σ_{l≤cap} K(k,l) per step,
/// with K from series powers, independently of the composition weights.
pub fn enumerate_backward(
    start: usize,
    depth: usize,
    cap: usize,
    rule: DegenerationRule,
) -> Enumeration {
    let p = offspring_table(cap + 1);
    let pbar = modified_table(cap + 1);
    let row_out: Vec<Q> = (0..=cap)
        .map(|k| (0..=cap).fold(Q::one(), |acc, l| acc - kernel_modified_with(k, l, rule)))
        .collect();
    let mut weights = HashMap::new();
    let mut overflow = Q::zero();
    let mut frontier: Vec<(Trajectory, usize, Q)> = vec![(vec![], start, Q::one())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (traj, n, w) in frontier {
            overflow += &w * &row_out[n];
            for l in 0..=cap {
                for d in compositions(n, l) {
                    let sw = step_weight(&d, Some(rule), &p, &pbar);
                    if sw.is_zero() {
                        continue;
                    }
                    let mut t = traj.clone();
                    t.push(d);
                    next.push((t, l, &w * sw));
                }
            }
        }
        frontier = next;
    }
    for (t, _, w) in frontier {
        weights.insert(t, w);
    }
    Enumeration {
        start,
        depth,
        cap,
        weights,
        overflow,
    }
}

/// Forward (h-transformed) trajectories from inner size m0 over `depth`
/// steps with all sizes ≤ cap. Trajectories are keyed inner step first:
/// entry i is the composition of step i outwards. Each step carries
/// F₀ₖ/F₀ₗ times the ζ̄ composition weight.
pub fn enumerate_forward(m0: usize, depth: usize, cap: usize) -> Enumeration {
    let rule = DegenerationRule::Uniform;
    let p = offspring_table(cap + 1);
    let pbar = modified_table(cap + 1);
    let row_out: Vec<Q> = (0..=cap)
        .map(|l| {
            if l < 2 {
                return Q::zero();
            }
            (2..=cap).fold(Q::one(), |acc, k| {
                acc - f0_exact(k) * kernel_modified_with(k, l, rule) / f0_exact(l)
            })
        })
        .collect();
    let mut weights = HashMap::new();
    let mut overflow = Q::zero();
    let mut frontier: Vec<(Trajectory, usize, Q)> = vec![(vec![], m0, Q::one())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (traj, l, w) in frontier {
            overflow += &w * &row_out[l];
            for k in 2..=cap {
                let h = f0_exact(k) / f0_exact(l);
                for d in compositions(k, l) {
                    let sw = step_weight(&d, Some(rule), &p, &pbar);
                    if sw.is_zero() {
                        continue;
                    }
                    let mut t = traj.clone();
                    t.push(d);
                    next.push((t, k, &w * &h * sw));
                }
            }
        }
        frontier = next;
    }
    for (t, _, w) in frontier {
        weights.insert(t, w);
    }
    Enumeration {
        start: m0,
        depth,
        cap,
        weights,
        overflow,
    }
}

/// Expected-count test of sampled trajectory frequencies against exact
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCheck {
    pub samples: usize,
    pub cells_tested: usize,
    pub worst_z: f64,
    pub pooled_expected: f64,
    pub pooled_observed: usize,
    pub pooled_z: f64,
}

impl FrequencyCheck {
    pub fn passes(&self, z: f64) -> bool {
        self.worst_z <= z && self.pooled_z <= z
    }
}

/// Compares counts with exact probabilities. Cells with expected count
/// ≥ `min_expected` are tested alone; the rest, together with overflow and
/// unseen trajectories, form one pooled cell.
pub fn compare_frequencies(
    exact: &Enumeration,
    counts: &HashMap<Trajectory, usize>,
    samples: usize,
    min_expected: f64,
) -> FrequencyCheck {
    let n = samples as f64;
    let z = |obs: f64, prob: f64| {
        let sd = (n * prob * (1.0 - prob)).sqrt();
        if sd > 0.0 {
            (obs - n * prob).abs() / sd
        } else if obs == n * prob {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    let mut tested_prob = 0.0;
    let mut tested_obs = 0usize;
    for (t, w) in &exact.weights {
        let prob = crate::numeric::rational_to_f64(w);
        if n * prob >= min_expected {
            let obs = counts.get(t).copied().unwrap_or(0);
            worst = worst.max(z(obs as f64, prob));
            tested += 1;
            tested_prob += prob;
            tested_obs += obs;
        }
    }
    let pooled_prob = (1.0 - tested_prob).max(0.0);
    let pooled_obs = samples - tested_obs;
    FrequencyCheck {
        samples,
        cells_tested: tested,
        worst_z: worst,
        pooled_expected: n * pooled_prob,
        pooled_observed: pooled_obs,
        pooled_z: z(pooled_obs as f64, pooled_prob),
    }
}

/// Exact probability mass of one ζ̄ row to state l, summed over enumerated
/// compositions.
pub fn composition_row_total(k: usize, l: usize, rule: DegenerationRule) -> Q {
    let p = offspring_table(l.max(1) + 1);
    let pbar = modified_table(l.max(1) + 1);
    compositions(k, l).iter().fold(Q::zero(), |acc, d| {
        acc + step_weight(d, Some(rule), &p, &pbar)
    })
}

/// Sum of the modified weights of all depth-1 forests from k roots into at
/// most `max_l` particles.
pub fn depth_one_mass(k: usize, max_l: usize) -> Q {
    (0..=max_l).fold(Q::zero(), |acc, l| {
        acc + composition_row_total(k, l, DegenerationRule::Uniform)
    })
}

/// Helper: exact weight of a one-vertex, zero-offspring, depth-1 forest.
pub fn lone_vertex_weight(modified: bool) -> Q {
    let f = SkeletonForest::new(1, vec![vec![0]], 0).expect("well formed");
    trajectory_weight(&f, modified)
}
