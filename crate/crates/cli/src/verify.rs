//! The cross-engine identity suite behind `uipt verify`.

use num_traits::One;
use serde_json::{json, Value};

use uipt::branching::forest::enumerate_backward;
use uipt::branching::kernel::forward_row_capped;
use uipt::branching::{
    phi_iter_of, phi_iter_series, phi_series, phibar_from_w, phibar_series, survival_probability,
    DegenerationRule,
};
use uipt::contour::f_anc_series;
use uipt::gf::{
    b_series, boundary_coeffs, f0_coefficient_from_b, f0_coefficient_gamma, f0_series,
    offspring_from_u0, tutte_formula, u0_series, w_series,
};
use uipt::layer::{apply_a, fixed_point_holds, moments_all, verify_m_identities, WFunction};
use uipt::limits::max_part_probability;
use uipt::numeric::{int, BigRational, SqrtSixNumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sabotage {
    /// Perturbs the fixed-point input so that check must fail.
    FixedPoint,
}

pub struct CheckResult {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn to_json(&self) -> Value {
        json!({
            "check_id": self.id,
            "status": if self.passed { "pass" } else { "fail" },
            "detail": self.detail,
        })
    }
}

type Outcome = Result<String, String>;
type Check = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail())
    }
}

fn s6(q: &BigRational) -> SqrtSixNumber {
    SqrtSixNumber::from_rational(q.clone())
}

fn counting(order: usize) -> Outcome {
    let n_max = order.min(12);
    let m_max = 8;
    let grid = u0_series(n_max + 1, m_max - 1).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for n in 0..=n_max {
        for m in 2..=m_max {
            if let Some(v) = tutte_formula(n as u64, m as u64) {
                let c = grid.c(n, m - 2);
                if *c != BigRational::from_integer(v.clone()) {
                    return Err(format!("N={n} m={m}: formula {v} vs series {c}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} counts with N <= {n_max}, m <= {m_max} agree"
    ))
}

fn fixed_point(order: usize, sabotage: bool) -> Outcome {
    let mut g = WFunction::g0();
    if sabotage {
        g = g.add(&WFunction::psi());
    }
    let symbolic = if sabotage {
        g.apply_b().map_err(|e| e.to_string())? == g
    } else {
        fixed_point_holds().map_err(|e| e.to_string())?
    };
    let series = apply_a(&g, order).map_err(|e| e.to_string())? == b_series(order);
    ensure(
        symbolic && series,
        format!("B g0 = g0 symbolically and A f0 = f0 to order {order}"),
        || format!("symbolic identity {symbolic}, series identity {series}"),
    )
}

fn offspring(order: usize) -> Outcome {
    let from_u0 = offspring_from_u0(order).map_err(|e| e.to_string())?;
    let phi = phi_series(order);
    if let Some(d) = (0..order).find(|&d| from_u0.c(d) != &s6(phi.c(d))) {
        return Err(format!("coefficient {d}: {} vs {}", from_u0.c(d), phi.c(d)));
    }
    let bar = phibar_from_w(order).map_err(|e| e.to_string())?;
    let direct = phibar_series(order);
    if let Some(d) = (0..order).find(|&d| bar.c(d) != &s6(direct.c(d))) {
        return Err(format!(
            "modified coefficient {d}: {} vs {}",
            bar.c(d),
            direct.c(d)
        ));
    }
    Ok(format!(
        "phi and phibar agree with U0 and W to order {order}"
    ))
}

fn iterates(order: usize) -> Outcome {
    let r_max = order.min(50);
    for r in 0..=r_max {
        let s = survival_probability(r);
        if s != int((r as i64 + 1).pow(2)).recip() {
            return Err(format!("1 - phi_{r}(0) = {s}"));
        }
    }
    let n = order.min(20);
    let small = order.min(8);
    if phi_iter_series(1, n) != phi_series(n) {
        return Err("phi_1 differs from phi".into());
    }
    for r in 0..=small {
        let inner = phi_iter_series(r, n);
        for s in 0..=small {
            let composed = phi_iter_of(s, &inner).map_err(|e| e.to_string())?;
            if composed != phi_iter_series(r + s, n) {
                return Err(format!("phi_{s} o phi_{r} != phi_{}", r + s));
            }
        }
    }
    Ok(format!(
        "survival 1/(r+1)^2 for r <= {r_max}; semigroup for r, s <= {small}"
    ))
}

fn m_series(order: usize) -> Outcome {
    let r_max = order.min(16);
    let rep = verify_m_identities(2, r_max).map_err(|e| e.to_string())?;
    Ok(format!(
        "M-series equals B iterates for j <= 2, R <= {r_max}; growth {:?}",
        rep.growth
    ))
}

fn moment_normalization(order: usize) -> Outcome {
    let all = moments_all(0, order).map_err(|e| e.to_string())?;
    match all.iter().position(|v| !v.is_one()) {
        None => Ok(format!("E[m^0] = 1 for R <= {order}")),
        Some(r) => Err(format!("E[m^0] = {} at R = {r}", all[r])),
    }
}

fn forward_normalization(order: usize) -> Outcome {
    let l_max = order.clamp(2, 24);
    let mut worst: f64 = 0.0;
    for l in 2..=l_max {
        let row = forward_row_capped(l, 8 * l + 256).map_err(|e| e.to_string())?;
        let total: f64 = row.probabilities.iter().sum::<f64>() + row.tail_mass;
        worst = worst.max((total - 1.0).abs());
    }
    ensure(
        worst < 1e-12,
        format!("forward rows l <= {l_max} sum to 1 within {worst:e}"),
        || format!("row total off by {worst:e}"),
    )
}

fn w_symmetry(order: usize) -> Outcome {
    let o = order.min(6);
    let w = w_series(o, o, o).map_err(|e| e.to_string())?;
    ensure(
        w.is_symmetric(),
        format!("W(x,y,z) = W(x,z,y) to order {o}"),
        || "W is not symmetric".into(),
    )
}

fn f0_coefficients(order: usize) -> Outcome {
    let order = order.max(3);
    let series = f0_series(order).map_err(|e| e.to_string())?;
    let coeffs = boundary_coeffs(order).map_err(|e| e.to_string())?;
    for n in 2..order {
        let g = f0_coefficient_gamma(n as u64);
        if series.c(n) != &g {
            return Err(format!("n={n}: series {} vs gamma {g}", series.c(n)));
        }
        if let Some(b) = f0_coefficient_from_b(&coeffs, n) {
            if b != s6(&g) {
                return Err(format!("n={n}: from b(n) {b} vs gamma {g}"));
            }
        }
    }
    Ok(format!("[t^n]F0 agrees three ways for n < {order}"))
}

fn ancestor_routes(order: usize) -> Outcome {
    let o = order.min(64);
    for r in [1, 2, 5, 10] {
        f_anc_series(r, o).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "closed form and partial fractions agree to order {o}"
    ))
}

fn hole_partition(_order: usize) -> Outcome {
    let holes = [2, 3, 5];
    let total = (1..=holes.len()).try_fold(SqrtSixNumber::zero(), |acc, j| {
        max_part_probability(j, &holes).map(|p| acc + p)
    });
    let total = total.map_err(|e| e.to_string())?;
    ensure(
        total == SqrtSixNumber::one(),
        "infinite-hole probabilities sum to 1".into(),
        || format!("sum is {total}"),
    )
}

fn small_forests(order: usize) -> Outcome {
    let depth = if order < 10 { 1 } else { 2 };
    for start in 1..=3 {
        let e = enumerate_backward(start, depth, 3, DegenerationRule::Uniform);
        if !e.total().is_one() {
            return Err(format!("start {start}: total {}", e.total()));
        }
    }
    Ok(format!("enumerated forests of depth {depth} sum to 1"))
}

pub fn run(order: usize, sabotage: Option<Sabotage>) -> Vec<CheckResult> {
    let sab = sabotage == Some(Sabotage::FixedPoint);
    let checks: Vec<Check> = vec![
        ("counting", Box::new(move || counting(order))),
        ("fixed-point", Box::new(move || fixed_point(order, sab))),
        ("offspring-identity", Box::new(move || offspring(order))),
        ("iterate-laws", Box::new(move || iterates(order))),
        ("m-series", Box::new(move || m_series(order))),
        (
            "moment-normalization",
            Box::new(move || moment_normalization(order)),
        ),
        (
            "forward-normalization",
            Box::new(move || forward_normalization(order)),
        ),
        ("w-symmetry", Box::new(move || w_symmetry(order))),
        ("f0-coefficients", Box::new(move || f0_coefficients(order))),
        ("ancestor-routes", Box::new(move || ancestor_routes(order))),
        ("hole-partition", Box::new(move || hole_partition(order))),
        ("small-forests", Box::new(move || small_forests(order))),
    ];
    checks
        .into_iter()
        .map(|(id, f)| {
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { id, passed, detail }
        })
        .collect()
}
