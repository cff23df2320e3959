//! Float kernels for large states.
//!
//! [tˡ]φᵏ is never formed by series powers here. Two exact order-2
//! recurrences drive everything instead:
//!
//! in k (l fixed), stable forwards from a₀ = 0, a₁ = p_l:
//!   6(k+1)(k+2)(k+2l)a_k − (k+2)(14k²+(20l+23)k+(2l+1)(l+9))a_{k+1}
//!     + 2(k+1)(2k+l+3)(2k+l+4)a_{k+2} = 0
//!
//! in l (k fixed), stable forwards up to l = k and backwards above:
//!   2(2l+k)(2l+k+1)a(l) − (14l²+(20k+33)l+(k+1)(2k+19))a(l+1)
//!     + 6(l+2)(l+2k+2)a(l+2) = 0

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;

use super::BranchingError;

const TABLE_SIZE: usize = 1 << 18;
const P0: f64 = 0.75;
/// Rescaling threshold for the column recurrences.
const BIG: f64 = 1e150;
/// Extra depth for the backward column recurrence; the unwanted solution
/// decays like (3/4)ⁿ against it.
const BACKWARD_PAD: usize = 160;

struct Tables {
    p: Vec<f64>,
    f0: Vec<f64>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut p = Vec::with_capacity(TABLE_SIZE);
        let mut v = P0;
        for d in 0..TABLE_SIZE {
            p.push(v);
            v *= (2 * d + 1) as f64 / (2 * (d + 3)) as f64;
        }
        let mut f0 = vec![0.0; TABLE_SIZE];
        f0[2] = 0.5;
        for k in 2..TABLE_SIZE - 1 {
            f0[k + 1] = f0[k] * f0_ratio(k);
        }
        Tables { p, f0 }
    })
}

/// [t^{k+1}]F₀ / [tᵏ]F₀ for k ≥ 2.
fn f0_ratio(k: usize) -> f64 {
    let k = k as f64;
    k * (2.0 * k - 1.0) / (2.0 * (k - 1.0) * (k + 1.0))
}

/// p_d as a float.
pub fn p(d: usize) -> f64 {
    let t = tables();
    if d < TABLE_SIZE {
        return t.p[d];
    }
    let mut v = t.p[TABLE_SIZE - 1];
    for i in TABLE_SIZE - 1..d {
        v *= (2 * i + 1) as f64 / (2 * (i + 3)) as f64;
    }
    v
}

/// p̄_d as a float.
pub fn pbar(d: usize) -> f64 {
    if d == 0 {
        P0 + 1.0 / 6.0
    } else {
        (p(d) - p(d - 1) / 6.0).max(0.0)
    }
}

/// [tᵏ]F₀ as a float.
pub fn f0(k: usize) -> f64 {
    let t = tables();
    if k < TABLE_SIZE {
        return t.f0[k];
    }
    let mut v = t.f0[TABLE_SIZE - 1];
    for i in TABLE_SIZE - 1..k {
        v *= f0_ratio(i);
    }
    v
}

/// Default k-ceiling for rows out of state l.
pub fn default_ceiling(l: usize) -> usize {
    let lf = l as f64;
    (4 * l).max((lf + 64.0 * lf.sqrt() + 256.0).ceil() as usize)
}

/// Walks [tˡ]φᵏ over k = 1, 2, … with the k-recurrence.
#[derive(Debug, Clone)]
pub struct PowerRow {
    l: usize,
    k: usize,
    a_k: f64,
    a_next: f64,
}

impl PowerRow {
    /// Positioned at k = 1.
    pub fn new(l: usize) -> Self {
        let a1 = p(l);
        let a2 = {
            let lf = l as f64;
            (2.0 * lf + 1.0) * (lf + 9.0) * a1 / ((lf + 3.0) * (lf + 4.0))
        };
        PowerRow {
            l,
            k: 1,
            a_k: a1,
            a_next: a2,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// [tˡ]φᵏ at the current k.
    pub fn value(&self) -> f64 {
        self.a_k
    }

    pub fn advance(&mut self) {
        // a_{k+2} from a_k and a_{k+1}, written at index j = k
        let j = self.k as f64;
        let l = self.l as f64;
        let c1 = (j + 2.0) * (14.0 * j * j + (20.0 * l + 23.0) * j + (2.0 * l + 1.0) * (l + 9.0));
        let c0 = 6.0 * (j + 1.0) * (j + 2.0) * (j + 2.0 * l);
        let c2 = 2.0 * (j + 1.0) * (2.0 * j + l + 3.0) * (2.0 * j + l + 4.0);
        let a = ((c1 * self.a_next - c0 * self.a_k) / c2).max(0.0);
        self.a_k = self.a_next;
        self.a_next = a;
        self.k += 1;
    }
}

/// Walks the forward transition q(l→k) over k = 2, 3, ….
#[derive(Debug, Clone)]
pub struct ForwardRow {
    row: PowerRow,
    p0_pow: f64,
    corr: f64,
    f0k: f64,
    inv_f0l: f64,
}

impl ForwardRow {
    pub fn new(l: usize) -> Result<Self, BranchingError> {
        if l < 2 {
            return Err(BranchingError::InvalidState { state: l });
        }
        let mut row = PowerRow::new(l);
        row.advance();
        Ok(ForwardRow {
            row,
            p0_pow: P0,
            corr: p(l - 1) / 6.0,
            f0k: f0(2),
            inv_f0l: 1.0 / f0(l),
        })
    }

    pub fn k(&self) -> usize {
        self.row.k()
    }

    /// K(k,l) at the current k.
    pub fn kernel(&self) -> f64 {
        let k = self.row.k() as f64;
        (self.row.value() - k * self.p0_pow * self.corr).max(0.0)
    }

    /// q(l→k) at the current k.
    pub fn value(&self) -> f64 {
        self.f0k * self.kernel() * self.inv_f0l
    }

    pub fn advance(&mut self) {
        let k = self.row.k();
        self.f0k *= f0_ratio(k);
        self.p0_pow *= P0;
        self.row.advance();
    }
}

/// A truncated probability row of a boundary-length transition.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub from_state: usize,
    /// State of `probabilities[0]`.
    pub first_state: usize,
    pub probabilities: Vec<f64>,
    /// Mass not represented in `probabilities`.
    pub tail_mass: f64,
}

impl KernelRow {
    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, q)| (self.first_state + i) as f64 * q)
            .sum()
    }

    pub fn get(&self, state: usize) -> f64 {
        state
            .checked_sub(self.first_state)
            .and_then(|i| self.probabilities.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Row q(l→·), cut once the retained mass reaches 1 − ε. The ceiling starts
/// at `default_ceiling(l)` and doubles up to four times on failure.
pub fn forward_step_distribution(l: usize, eps: f64) -> Result<KernelRow, BranchingError> {
    let mut row = ForwardRow::new(l)?;
    let mut ceiling = default_ceiling(l);
    let hard = ceiling << 4;
    let mut probs = Vec::new();
    let mut acc = 0.0;
    loop {
        let q = row.value();
        probs.push(q);
        acc += q;
        if acc >= 1.0 - eps {
            break;
        }
        if row.k() >= ceiling {
            if ceiling >= hard {
                return Err(BranchingError::CeilingExceeded {
                    state: l,
                    ceiling,
                    mass: acc,
                    eps,
                });
            }
            ceiling *= 2;
        }
        row.advance();
    }
    Ok(KernelRow {
        from_state: l,
        first_state: 2,
        probabilities: probs,
        tail_mass: (1.0 - acc).max(0.0),
    })
}

/// Ratio bound for [tˡ]φ^{k+1}/[tˡ]φᵏ. Writing φ = p₀ + (φ − p₀), every
/// term of the binomial expansion grows by at most p₀(k+1)/(k+1−l).
fn power_ratio_bound(l: usize, k: usize) -> f64 {
    if k < l {
        f64::INFINITY
    } else {
        P0 * (k + 1) as f64 / (k + 1 - l) as f64
    }
}

/// Relative size below which the backward walk may stop.
const NEGLIGIBLE: f64 = 1e-40;
/// Start offset of the backward k-recurrence; the unwanted solution decays
/// like (3/4)ⁿ against it.
const MILLER_PAD: usize = 300;

/// [tˡ]φᵏ for k = 0..=top, with ρ < 1 bounding every later ratio.
///
/// The k-recurrence has characteristic roots 1 and 3/4 and the wanted
/// solution is the decaying one, so it runs forwards only up to the mode
/// and backwards (Miller) beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct StablePowerRow {
    pub values: Vec<f64>,
    pub rho: f64,
}

pub fn stable_power_row(l: usize, min_top: usize) -> StablePowerRow {
    let mut values = vec![0.0];
    let mut row = PowerRow::new(l);
    loop {
        let v = row.value();
        let k = row.k();
        if k >= 2 && v < values[k - 1] {
            break;
        }
        values.push(v);
        row.advance();
    }
    let mid = values.len() - 1;
    // past K the ratio bound is below one and a_K/a_mid is negligible
    let mut log_drop = 0.0;
    let mut k = mid;
    loop {
        let rb = power_ratio_bound(l, k);
        if rb < 1.0 && log_drop < NEGLIGIBLE.ln() {
            break;
        }
        if rb < 1.0 {
            log_drop += rb.ln();
        }
        k += 1;
    }
    let top = k.max(min_top);
    let start = top + MILLER_PAD;
    let mut b = vec![0.0; start + 2 - mid];
    b[start - mid] = 1.0;
    let lf = l as f64;
    for j in (mid..start).rev() {
        let i = j - mid;
        let jf = j as f64;
        let c1 =
            (jf + 2.0) * (14.0 * jf * jf + (20.0 * lf + 23.0) * jf + (2.0 * lf + 1.0) * (lf + 9.0));
        let c0 = 6.0 * (jf + 1.0) * (jf + 2.0) * (jf + 2.0 * lf);
        let c2 = 2.0 * (jf + 1.0) * (2.0 * jf + lf + 3.0) * (2.0 * jf + lf + 4.0);
        let v = ((c1 * b[i + 1] - c2 * b[i + 2]) / c0).max(0.0);
        b[i] = v;
        if v > BIG {
            scale_all(&mut b[i..], 1.0 / BIG);
        }
    }
    let scale = if b[0] > 0.0 { values[mid] / b[0] } else { 0.0 };
    values.extend(b[1..=top - mid].iter().map(|x| x * scale));
    StablePowerRow {
        values,
        rho: power_ratio_bound(l, top),
    }
}

/// Forward row restricted to k ≤ k_max. The dropped mass and first moment
/// are summed from the terms beyond k_max plus a geometric remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedRow {
    pub probabilities: Vec<f64>,
    pub tail_mass: f64,
    pub tail_moment: f64,
}

#[allow(clippy::needless_range_loop)]
pub fn forward_row_capped(l: usize, k_max: usize) -> Result<CappedRow, BranchingError> {
    if l < 2 {
        return Err(BranchingError::InvalidState { state: l });
    }
    let row = stable_power_row(l, k_max);
    let top = row.values.len() - 1;
    let corr = p(l - 1) / 6.0;
    let inv_f0l = 1.0 / f0(l);
    let mut probs = vec![0.0; k_max.max(1) + 1];
    let (mut mass, mut moment) = (0.0, 0.0);
    let mut f0k = f0(2);
    let mut p0_pow = P0;
    for k in 2..=top {
        let kernel = (row.values[k] - k as f64 * p0_pow * corr).max(0.0);
        let q = f0k * kernel * inv_f0l;
        if k <= k_max {
            probs[k] = q;
        } else {
            mass += q;
            moment += q * k as f64;
        }
        f0k *= f0_ratio(k);
        p0_pow *= P0;
    }
    // F₀ₖ decreases and K(k,l) ≤ [tˡ]φᵏ, so ρ bounds the remainder
    let rho = row.rho;
    let last = f0(top) * row.values[top] * inv_f0l;
    let g = rho / (1.0 - rho);
    mass += last * g;
    moment += last * (top as f64 * g + g / (1.0 - rho));
    Ok(CappedRow {
        probabilities: probs,
        tail_mass: mass,
        tail_moment: moment,
    })
}

/// Draws k from q(l→·) by inversion.
pub fn sample_forward_step<R: Rng + ?Sized>(
    l: usize,
    eps: f64,
    rng: &mut R,
) -> Result<(usize, f64), BranchingError> {
    let u: f64 = rng.gen();
    let ceiling = default_ceiling(l) << 4;
    let mut row = ForwardRow::new(l)?;
    let mut acc = 0.0;
    loop {
        let q = row.value();
        acc += q;
        if acc > u {
            return Ok((row.k(), row.kernel()));
        }
        if row.k() >= ceiling {
            break;
        }
        row.advance();
    }
    // u fell in the unrepresented tail: renormalize over the walked range
    if 1.0 - acc > eps {
        return Err(BranchingError::CeilingExceeded {
            state: l,
            ceiling,
            mass: acc,
            eps,
        });
    }
    let target = u * acc;
    let mut row = ForwardRow::new(l)?;
    let mut run = 0.0;
    loop {
        run += row.value();
        if run > target || row.k() >= ceiling {
            return Ok((row.k(), row.kernel()));
        }
        row.advance();
    }
}

fn scale_all(v: &mut [f64], s: f64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

/// Values proportional to [tᵐ]φᵏ for m = 0..=l, normalized to max 1.
pub fn power_column(k: usize, l: usize) -> Vec<f64> {
    if k == 0 {
        let mut v = vec![0.0; l + 1];
        v[0] = 1.0;
        return v;
    }
    if k == 1 {
        let mut v: Vec<f64> = (0..=l).map(p).collect();
        normalize_max(&mut v);
        return v;
    }
    let kf = k as f64;
    let c0 = |m: f64| 2.0 * (2.0 * m + kf) * (2.0 * m + kf + 1.0);
    let c1 = |m: f64| 14.0 * m * m + (20.0 * kf + 33.0) * m + (kf + 1.0) * (2.0 * kf + 19.0);
    let c2 = |m: f64| 6.0 * (m + 2.0) * (m + 2.0 * kf + 2.0);
    let split = k.min(l);
    // forward, scaled by p₀⁻ᵏ: f₀ = 1, f₁ = k/6
    let mut f = Vec::with_capacity(l + 1);
    f.push(1.0);
    if split >= 1 {
        f.push(kf / 6.0);
    }
    while f.len() <= split {
        let m = (f.len() - 2) as f64;
        let n = f.len();
        let v = ((c1(m) * f[n - 1] - c0(m) * f[n - 2]) / c2(m)).max(0.0);
        f.push(v);
        if v > BIG {
            scale_all(&mut f, 1.0 / BIG);
        }
    }
    if l > split {
        let top = l + BACKWARD_PAD;
        let mut b = vec![0.0; top + 2 - split];
        // b[i] holds the value at index split + i
        b[top - split] = 1.0;
        for m in (split..top).rev() {
            let i = m - split;
            let mf = m as f64;
            let v = ((c1(mf) * b[i + 1] - c2(mf) * b[i + 2]) / c0(mf)).max(0.0);
            b[i] = v;
            if v > BIG {
                scale_all(&mut b[i..], 1.0 / BIG);
            }
        }
        let fs = f[split];
        let bs = b[0];
        if bs > 0.0 && fs > 0.0 {
            // bring both halves to a common scale without overflow
            let (sf, sb) = if fs > bs {
                (bs / fs, 1.0)
            } else {
                (1.0, fs / bs)
            };
            scale_all(&mut f, sf);
            f.extend(b[1..=l - split].iter().map(|x| x * sb));
        } else {
            f.extend(b[1..=l - split].iter().copied());
        }
    }
    normalize_max(&mut f);
    f
}

fn normalize_max(v: &mut [f64]) {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        scale_all(v, 1.0 / m);
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > u {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Appends an iid composition (d₁,…,d_k) ~ p^{⊗k} conditioned on Σd = l,
/// by splitting k in halves and drawing the left half's share from the
/// product of two columns.
pub fn sample_conditioned_composition<R: Rng + ?Sized>(
    k: usize,
    l: usize,
    rng: &mut R,
    out: &mut Vec<u32>,
) {
    let mut cache = ColumnCache::new(l);
    cache.sample(k, l, rng, out);
}

/// Power columns [tᵐ]φᵏ, m ≤ top, one per k. A column serves every
/// sub-sum of a single divide-and-conquer draw.
struct ColumnCache {
    top: usize,
    columns: HashMap<usize, Vec<f64>>,
}

impl ColumnCache {
    fn new(top: usize) -> Self {
        ColumnCache {
            top,
            columns: HashMap::new(),
        }
    }

    fn ensure(&mut self, k: usize) {
        let top = self.top;
        self.columns
            .entry(k)
            .or_insert_with(|| power_column(k, top));
    }

    fn sample<R: Rng + ?Sized>(&mut self, k: usize, l: usize, rng: &mut R, out: &mut Vec<u32>) {
        if k == 0 {
            return;
        }
        if l == 0 {
            out.extend(std::iter::repeat_n(0, k));
            return;
        }
        if k == 1 {
            out.push(l as u32);
            return;
        }
        let k1 = k / 2;
        let k2 = k - k1;
        self.ensure(k1);
        self.ensure(k2);
        let c1 = &self.columns[&k1];
        let c2 = &self.columns[&k2];
        let w: Vec<f64> = (0..=l).map(|m| c1[m] * c2[l - m]).collect();
        let m = sample_index(&w, rng);
        self.sample(k1, m, rng, out);
        self.sample(k2, l - m, rng, out);
    }
}

/// True when exactly one part is nonzero.
pub fn is_single_parent(d: &[u32]) -> bool {
    d.iter().filter(|&&x| x > 0).count() == 1
}

/// Draws the offspring composition of a ζ̄ step from k particles to l,
/// given K(k,l) > 0. A single-parent pattern is chosen with probability
/// k p̄_l p₀^{k−1}/K(k,l); otherwise an iid composition conditioned on the
/// sum, excluding single-parent outcomes.
pub fn sample_step_composition<R: Rng + ?Sized>(
    k: usize,
    l: usize,
    kernel: f64,
    rng: &mut R,
) -> Vec<u32> {
    let mut out = Vec::with_capacity(k);
    if l == 0 {
        out.resize(k, 0);
        return out;
    }
    if k == 1 {
        out.push(l as u32);
        return out;
    }
    let single = k as f64 * pbar(l) * P0.powi(k as i32 - 1);
    let single_prob = if kernel > 0.0 {
        (single / kernel).min(1.0)
    } else {
        0.0
    };
    if rng.gen::<f64>() < single_prob {
        out.resize(k, 0);
        let parent = rng.gen_range(0..k);
        out[parent] = l as u32;
        return out;
    }
    let mut cache = ColumnCache::new(l);
    loop {
        out.clear();
        cache.sample(k, l, rng, &mut out);
        if !is_single_parent(&out) {
            return out;
        }
    }
}

/// Draws one offspring count from p by inversion.
pub fn sample_offspring<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut d = 0;
    loop {
        acc += p(d);
        if acc > u || d >= TABLE_SIZE * 64 {
            return d;
        }
        d += 1;
    }
}

/// Draws one ζ̄ step from n particles: iid offspring, where a single-parent
/// outcome with l ≥ 1 survives with probability p̄_l/p_l and otherwise
/// becomes the all-zero composition.
pub fn sample_backward_step<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut d: Vec<u32> = (0..n).map(|_| sample_offspring(rng) as u32).collect();
    if is_single_parent(&d) {
        let l = d.iter().map(|&x| x as usize).sum::<usize>();
        if rng.gen::<f64>() >= pbar(l) / p(l) {
            d.iter_mut().for_each(|x| *x = 0);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::{kernel_modified, offspring_table};
    use crate::numeric::rational_to_f64;
    use crate::series::PowerSeries;

    #[test]
    fn row_matches_exact_powers() {
        let l = 9;
        let phi = PowerSeries::new(offspring_table(l + 1));
        let mut row = PowerRow::new(l);
        for k in 1..30u32 {
            let exact = rational_to_f64(phi.pow(k).c(l));
            assert!(
                (row.value() - exact).abs() <= 1e-13 * exact.max(1e-300),
                "k={k}"
            );
            row.advance();
        }
    }

    #[test]
    fn column_matches_exact_powers() {
        for &(k, l) in &[(2usize, 30usize), (7, 40), (25, 12), (3, 3)] {
            let phi = PowerSeries::new(offspring_table(l + 1));
            let pw = phi.pow(k as u32);
            let exact: Vec<f64> = pw.coeffs().iter().map(rational_to_f64).collect();
            let m = exact.iter().cloned().fold(0.0, f64::max);
            let col = power_column(k, l);
            for i in 0..=l {
                assert!((col[i] - exact[i] / m).abs() < 1e-11, "k={k} l={l} i={i}");
            }
        }
    }

    #[test]
    fn forward_kernel_matches_exact() {
        let mut row = ForwardRow::new(5).unwrap();
        for k in 2..20 {
            let exact = rational_to_f64(&kernel_modified(k, 5));
            assert!((row.kernel() - exact).abs() < 1e-14);
            row.advance();
        }
    }

    #[test]
    fn rows_normalize() {
        for l in [2, 3, 10, 50, 400] {
            let r = forward_step_distribution(l, 1e-12).unwrap();
            assert!((r.sum() - 1.0).abs() < 1e-10, "l={l}");
        }
        let r = forward_step_distribution(2, 1e-13).unwrap();
        assert!((r.mean() - 8.75).abs() < 1e-6);
    }
}
