//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! A FAIL is reported, not hidden; the process exits 0 so the report is
//! always produced. Set `UIPT_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL.

use std::collections::HashMap;
use std::time::Instant;

use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uipt::branching::forest::{compare_frequencies, enumerate_backward, Trajectory};
use uipt::branching::simulate::{
    boundary_distributions_exact, simulate_backward_forest, simulate_hull_profiles, DEFAULT_EPS,
};
use uipt::branching::{
    phi_iter_of, phi_iter_series, phi_series, phibar_from_w, phibar_series, survival_probability,
    DegenerationRule,
};
use uipt::contour::{contour_coefficient, expected_ancestors};
use uipt::gf::{
    b_series, f0_coefficient_gamma, f0_series, offspring_from_u0, tutte_formula, u0_series,
};
use uipt::layer::{apply_a, fixed_point_holds, moments_all, verify_m_identities, WFunction};
use uipt::numeric::{int, rat, rational_to_f64, BigRational, SqrtSixNumber};
use uipt::stats::{ks_gamma32, moment_summary};

type Q = BigRational;
type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn counting() -> Outcome {
    let grid = u0_series(13, 7).expect("U0 series");
    let mut checked = 0;
    for n in 0..=12u64 {
        for m in 2..=8u64 {
            if let Some(v) = tutte_formula(n, m) {
                let series = grid.c(n as usize, m as usize - 2);
                if *series != Q::from_integer(v.clone()) {
                    return (false, format!("N={n} m={m}: formula {v}, series {series}"));
                }
                checked += 1;
            }
        }
    }
    (checked > 0, format!("{checked} (N, m) pairs agree exactly"))
}

fn fixed_point() -> Outcome {
    let symbolic = fixed_point_holds().expect("B g0");
    let series = apply_a(&WFunction::g0(), 30).expect("A f0") == b_series(30);
    (
        symbolic && series,
        format!("B g0 = g0: {symbolic}; A f0 = f0 to order 30: {series}"),
    )
}

fn offspring_identity() -> Outcome {
    let from_u0 = offspring_from_u0(50).expect("U0 at x0");
    let phi = phi_series(50);
    let s6 = |q: &Q| SqrtSixNumber::from_rational(q.clone());
    let phi_ok = (0..50).all(|d| from_u0.c(d) == &s6(phi.c(d)));
    let head = [rat(3, 4), rat(1, 8), rat(3, 64)];
    let head_ok = head.iter().enumerate().all(|(d, v)| from_u0.c(d) == &s6(v));
    let bar = phibar_from_w(30).expect("phibar via W");
    let direct = phibar_series(30);
    let bar_ok = (0..30).all(|d| bar.c(d) == &s6(direct.c(d)));
    (
        phi_ok && head_ok && bar_ok,
        format!("phi to order 50: {phi_ok}; head 3/4, 1/8, 3/64: {head_ok}; phibar via W to order 30: {bar_ok}"),
    )
}

fn iterate_laws() -> Outcome {
    let order = 12;
    let survival = (0..=50).all(|r| survival_probability(r) == int((r as i64 + 1).pow(2)).recip());
    let first = phi_iter_series(1, order) == phi_series(order);
    let iterates: Vec<_> = (0..=100).map(|r| phi_iter_series(r, order)).collect();
    let mut semigroup = true;
    'outer: for r in 0..=50 {
        for s in 0..=50 {
            if phi_iter_of(s, &iterates[r]).expect("compose") != iterates[r + s] {
                semigroup = false;
                break 'outer;
            }
        }
    }
    (
        survival && first && semigroup,
        format!("1 - phi_r(0) = 1/(r+1)^2: {survival}; phi_1 = phi: {first}; phi_(r+s) = phi_r o phi_s (order {order}): {semigroup}"),
    )
}

fn moment_normalization() -> Outcome {
    let all = moments_all(0, 256).expect("moments");
    match all.iter().position(|v| !v.is_one()) {
        None => (true, "E[m^0] = 1 exactly for R <= 256".into()),
        Some(r) => (false, format!("E[m^0] = {} at R = {r}", all[r])),
    }
}

fn scaling_limit() -> Outcome {
    let rs = [16usize, 32, 64, 128];
    let m1 = moments_all(1, 128).expect("first moments");
    let m2 = moments_all(2, 128).expect("second moments");
    let dev = |v: &Q, r: usize, pow: i32, target: f64| {
        (rational_to_f64(v) / (r as f64).powi(pow) / target - 1.0).abs()
    };
    let d1: Vec<f64> = rs.iter().map(|&r| dev(&m1[r], r, 2, 1.5)).collect();
    let d2: Vec<f64> = rs.iter().map(|&r| dev(&m2[r], r, 4, 3.75)).collect();
    let decreasing = |d: &[f64]| d.windows(2).all(|w| w[1] < w[0]);
    let at64 = d1[2] <= 0.05 && d2[2] <= 0.10;
    let ok = at64 && decreasing(&d1) && decreasing(&d2);
    let fmt = |d: &[f64]| {
        d.iter()
            .map(|x| format!("{:.2}%", 100.0 * x))
            .collect::<Vec<_>>()
            .join(", ")
    };
    (
        ok,
        format!(
            "R = 16, 32, 64, 128: |m1/R^2 / 1.5 - 1| = {}; |m2/R^4 / 3.75 - 1| = {} (limits 5%, 10% at R = 64)",
            fmt(&d1),
            fmt(&d2)
        ),
    )
}

fn cross_engine() -> Outcome {
    let exact = moments_all(1, 8).expect("first moments");
    let dists = boundary_distributions_exact(8, 2, 3500, 1e-9).expect("boundary distributions");
    let mut worst_gap: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    let mut within = true;
    for (r, d) in dists.iter().enumerate().skip(1) {
        let gap = (d.mean() - rational_to_f64(&exact[r])).abs();
        within &= gap <= d.truncation_bound && d.truncation_bound <= 1e-9;
        worst_gap = worst_gap.max(gap);
        worst_bound = worst_bound.max(d.truncation_bound);
    }
    let m_series = verify_m_identities(2, 32).is_ok();
    (
        within && m_series,
        format!(
            "R <= 8: max |mean - E[m1]| = {worst_gap:.2e} <= bound {worst_bound:.2e} <= 1e-9: {within}; M-series = B iterates for R <= 32, j <= 2: {m_series}"
        ),
    )
}

fn monte_carlo() -> Outcome {
    let r = 50;
    let replicas = 10_000;
    let profiles = simulate_hull_profiles(r, 2, replicas, 20240601, DEFAULT_EPS).expect("profiles");
    let finals: Vec<f64> = profiles.iter().map(|p| *p.last().unwrap() as f64).collect();
    let s = moment_summary(&finals, (r * r) as f64).expect("summary");
    let z = (s.mean - 1.5) / s.se_mean;
    let scaled: Vec<f64> = finals.iter().map(|v| v / (r * r) as f64).collect();
    let ks = ks_gamma32(&scaled).expect("ks");
    let finite_r = rational_to_f64(&moments_all(1, r).expect("moments")[r]) / (r * r) as f64;
    (
        z.abs() <= 3.0 && ks < 0.05,
        format!(
            "mean m1/R^2 = {:.4} +- {:.4} (z = {z:.2} vs 3/2; exact at R = 50 is {finite_r:.4}); KS = {ks:.4} < 0.05: {}",
            s.mean,
            s.se_mean,
            ks < 0.05
        ),
    )
}

fn small_forests() -> Outcome {
    let samples = 1_000_000;
    let cap = 4;
    let mut sums_ok = true;
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for start in 1..=4 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + start as u64);
        let mut counts: Vec<HashMap<Trajectory, usize>> = vec![HashMap::new(); 3];
        for _ in 0..samples {
            let f = simulate_backward_forest(start, 3, &mut rng);
            let t = f.trajectory();
            for depth in 1..=3 {
                *counts[depth - 1].entry(t[..depth].to_vec()).or_default() += 1;
            }
        }
        for depth in 1..=3 {
            let e = enumerate_backward(start, depth, cap, DegenerationRule::Uniform);
            sums_ok &= e.total().is_one();
            let check = compare_frequencies(&e, &counts[depth - 1], samples, 20.0);
            worst = worst.max(check.worst_z).max(check.pooled_z);
            cells += check.cells_tested + 1;
        }
    }
    (
        sums_ok && worst <= 4.0,
        format!("exact weights sum to 1 for starts <= 4, depth <= 3: {sums_ok}; {cells} cells, worst |z| = {worst:.2} <= 4"),
    )
}

fn ancestors_and_contour() -> Outcome {
    let mut gaps = Vec::new();
    for x in [0.5, 1.0, 2.0] {
        let n = (x * 1024.0) as usize;
        gaps.push(expected_ancestors(32, n).expect("ancestors").relative_gap());
    }
    let anc_ok = gaps.iter().all(|g| *g <= 0.10);
    let f0 = f0_series(65).expect("F0");
    let f0_ok = (2..=64).all(|n| f0.c(n) == &f0_coefficient_gamma(n as u64));
    let c = contour_coefficient();
    let c_ok = c == rat(11, 2) && c < int(10);
    (
        anc_ok && f0_ok && c_ok,
        format!(
            "relative gaps at x = 0.5, 1, 2: {}; [t^n]F0 = Gamma ratio for n <= 64: {f0_ok}; contour coefficient {c} = 11/2 < 10: {c_ok}",
            gaps.iter().map(|g| format!("{:.2}%", 100.0 * g)).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("counting cross-check", counting),
        ("fixed point", fixed_point),
        ("offspring identity", offspring_identity),
        ("iterate laws", iterate_laws),
        ("moment normalization", moment_normalization),
        ("scaling limit", scaling_limit),
        ("cross-engine agreement", cross_engine),
        ("Monte Carlo", monte_carlo),
        ("small-forest oracle", small_forests),
        ("ancestors and contour", ancestors_and_contour),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f();
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 && std::env::var("UIPT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
