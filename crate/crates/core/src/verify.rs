//! Finite-size acceptance checks, one function per criterion.

use std::fmt;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::chain::{chain_sweep, lower_bound_p2n, DEFAULT_STATE_BUDGET};
use crate::dirichlet::{
    box_return_probabilities, cosine_eigenpair, operator_norm, random_connected_chain, FiniteSubset,
};
use crate::error::Result;
use crate::ids::{
    chebyshev_upper, default_epsilon_grid, exact_table, geometric_grid, ids_one_dim,
    ids_one_dim_moment, lifshitz_fit, lower_envelope, TailBoundCurve,
};
use crate::lehmer::factorial;
use crate::peierls::{partition_all, sample_classes, DEFAULT_CLASS_BUDGET};
use crate::spectra::{kn_moment, verify_decomposition, FiniteGraph};
use crate::walk::{
    binomial, exact_return_count, flex_statistics, mc_return_probability, walk_rng,
    DEFAULT_ENUMERATION_BUDGET,
};

/// Seed shared by the randomized criteria.
pub const ACCEPTANCE_SEED: u64 = 20_240_917;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    /// All assertions held and the run finished within its time limit.
    pub passed: bool,
    pub checks_passed: bool,
    pub elapsed_secs: f64,
    pub limit_secs: f64,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {:<28} {:>7.2}s / {:>5.0}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_secs,
            self.limit_secs,
            self.detail
        )
    }
}

fn timed(
    id: u8,
    name: &str,
    limit_secs: f64,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let outcome = body();
    let elapsed_secs = start.elapsed().as_secs_f64();
    let (checks_passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        name: name.to_string(),
        passed: checks_passed && elapsed_secs < limit_secs,
        checks_passed,
        elapsed_secs,
        limit_secs,
        detail,
    }
}

fn exact_p(d: usize, two_n: usize, workers: usize) -> Result<BigRational> {
    let c = exact_return_count(d, two_n, DEFAULT_ENUMERATION_BUDGET, workers)?;
    Ok(BigRational::new(c.identity_count.into(), c.total.into()))
}

fn to_f64(r: &BigRational) -> f64 {
    crate::scalar::Scalar::to_f64(r)
}

/// `d = 1`: identity counts are central binomial coefficients for `2n ≤ 14`.
pub fn criterion_1(workers: usize) -> CriterionReport {
    timed(1, "d=1 moment identity", 10.0, || {
        let mut bad = Vec::new();
        for two_n in (0..=14).step_by(2) {
            let c = exact_return_count(1, two_n, DEFAULT_ENUMERATION_BUDGET, workers)?;
            let expected = binomial(two_n as u64, two_n as u64 / 2);
            if c.identity_count != expected {
                bad.push(format!("2n={two_n}: {} != {expected}", c.identity_count));
            }
        }
        Ok(if bad.is_empty() {
            (true, "count(1,2n) = C(2n,n) for 2n <= 14".into())
        } else {
            (false, bad.join("; "))
        })
    })
}

/// `d = 2`, `2n ∈ {2,4,6,8}`: enumeration, Monte Carlo and the chain lower bound agree.
pub fn criterion_2(workers: usize) -> CriterionReport {
    timed(2, "three-way p_2n(Z^2)", 120.0, || {
        let mut ok = true;
        let mut notes = Vec::new();
        for two_n in [2usize, 4, 6, 8] {
            let exact = exact_p(2, two_n, workers)?;
            let p = to_f64(&exact);
            let mc = mc_return_probability(2, two_n, 1_000_000, ACCEPTANCE_SEED, workers)?;
            let chain: f64 = lower_bound_p2n(2, 1, two_n, DEFAULT_STATE_BUDGET, workers)?;
            let in_ci = mc.contains(p);
            let below = chain <= p;
            ok &= in_ci && below;
            notes.push(format!(
                "2n={two_n}: exact={exact} mc={:.5}[{:.5},{:.5}]{} chain={chain:.5}{}",
                mc.p_hat,
                mc.ci_low,
                mc.ci_high,
                if in_ci { "" } else { "(miss)" },
                if below { "" } else { "(above)" }
            ));
        }
        ok &= exact_p(2, 2, workers)? == BigRational::new(1.into(), 4.into());
        ok &= exact_p(2, 4, workers)? == BigRational::new(7.into(), 64.into());
        Ok((ok, notes.join("; ")))
    })
}

/// Flip classes hold at most one identity product: sampled at `2n = 30`, exhaustive for `2n ≤ 8`.
pub fn criterion_3(workers: usize) -> CriterionReport {
    timed(3, "flip-class uniqueness", 120.0, || {
        let records = sample_classes(
            2,
            30,
            10_000,
            ACCEPTANCE_SEED,
            DEFAULT_CLASS_BUDGET,
            workers,
        )?;
        let sampled_max = records
            .iter()
            .map(|r| r.identity_members)
            .max()
            .unwrap_or(0);
        let sampled_hits = records.iter().filter(|r| r.identity_members > 0).count();
        let mut ok = sampled_max <= 1;
        let mut notes = vec![format!(
            "sampled 10^4 classes at 2n=30: {sampled_hits} with an identity, max {sampled_max}"
        )];
        for two_n in [2usize, 4, 6, 8] {
            let report = partition_all(2, two_n, DEFAULT_ENUMERATION_BUDGET)?;
            let exact = exact_return_count(2, two_n, DEFAULT_ENUMERATION_BUDGET, workers)?;
            let counts_match = BigUint::from(report.identity_paths) == exact.identity_count;
            let unique = report.max_identity_per_class <= 1;
            ok &= counts_match && unique;
            notes.push(format!(
                "2n={two_n}: {} identity paths in {} classes, max {} per class{}",
                report.identity_paths,
                report.classes_with_identity,
                report.max_identity_per_class,
                if counts_match {
                    ""
                } else {
                    " (count mismatch)"
                }
            ));
        }
        Ok((ok, notes.join("; ")))
    })
}

/// Regular spectrum equals the Plancherel assembly of irreducible spectra.
pub fn criterion_4(_workers: usize) -> CriterionReport {
    timed(4, "Plancherel decomposition", 60.0, || {
        let graphs = [
            FiniteGraph::complete(2)?,
            FiniteGraph::complete(3)?,
            FiniteGraph::complete(4)?,
            FiniteGraph::path(3)?,
            FiniteGraph::path(4)?,
            FiniteGraph::cycle(4)?,
        ];
        let mut ok = true;
        let mut worst = 0.0f64;
        let mut notes = Vec::new();
        for g in &graphs {
            let r = verify_decomposition(g)?;
            let v = g.len();
            let identity = r.regular_count == v * factorial(v) as usize
                && r.assembled_count == r.regular_count;
            ok &= r.passed() && identity;
            worst = worst.max(r.max_deviation);
            if !r.passed() {
                notes.push(format!("{} failed: dev {:.2e}", g.label, r.max_deviation));
            }
        }
        notes.insert(0, format!("6 graphs, max pairing deviation {worst:.2e}"));
        Ok((ok, notes.join("; ")))
    })
}

/// `K_N` scaled moments: `(N-1)/N` at `n = 2`, increasing towards 2 at `n = 4`.
pub fn criterion_5(_workers: usize) -> CriterionReport {
    timed(5, "K_N semicircle moments", 60.0, || {
        let mut ok = true;
        for n in 2..=8usize {
            let m = kn_moment(n, 2)?;
            ok &= m.scaled == Some(BigRational::new((n as i64 - 1).into(), (n as i64).into()));
        }
        let fourth: Vec<BigRational> = (4..=8)
            .map(|n| kn_moment(n, 4).map(|m| m.scaled.expect("even moment")))
            .collect::<Result<_>>()?;
        let two = BigRational::from_integer(2.into());
        ok &= fourth.windows(2).all(|w| w[0] < w[1]) && fourth.iter().all(|v| *v < two);
        let shown: Vec<String> = fourth.iter().map(|v| format!("{:.4}", to_f64(v))).collect();
        Ok((
            ok,
            format!("n=2 exact for N<=8; n=4, N=4..8: {}", shown.join(" < ")),
        ))
    })
}

/// Cosine eigenpairs of boxes, domain monotonicity, and the box bound on random connected sets.
pub fn criterion_6(_workers: usize) -> CriterionReport {
    timed(6, "Dirichlet lemmas", 60.0, || {
        let mut ok = true;
        let mut worst_residual = 0.0f64;
        for d in 1..=2 {
            for l in 1..=5 {
                let pair = cosine_eigenpair::<f64>(d, l)?;
                let bound = 1.0 - std::f64::consts::PI.powi(2) / (8.0 * (l * l) as f64);
                let top = operator_norm::<f64>(&FiniteSubset::cube(d, l)?);
                worst_residual = worst_residual.max(pair.residual);
                ok &= pair.residual <= 1e-10
                    && pair.eigenvalue >= bound
                    && (top - pair.eigenvalue).abs() <= 1e-10;
            }
        }
        let mut rng = walk_rng(ACCEPTANCE_SEED, 6);
        let mut monotone_failures = 0;
        let mut box_failures = 0;
        for _ in 0..100 {
            use rand::Rng;
            let size = rng.random_range(2..=60);
            let mut previous = 0.0f64;
            for sites in random_connected_chain(&mut rng, 2, size) {
                let subset = FiniteSubset::new(sites)?;
                let norm = operator_norm::<f64>(&subset);
                if norm < previous - 1e-12 {
                    monotone_failures += 1;
                }
                let l = subset.enclosing_half_side();
                let cap = (std::f64::consts::PI / (2.0 * (l as f64 + 1.0))).cos();
                if norm > cap + 1e-12 {
                    box_failures += 1;
                }
                previous = norm;
            }
        }
        ok &= monotone_failures == 0 && box_failures == 0;
        Ok((
            ok,
            format!(
                "max residual {worst_residual:.1e}; 100 nested chains: {monotone_failures} monotonicity and {box_failures} box-bound violations"
            ),
        ))
    })
}

/// `stay/|B|! ≤ chain ≤ stay` on small boxes, with `stay` matched against the Dirichlet walk.
pub fn criterion_7(workers: usize) -> CriterionReport {
    timed(7, "chain sandwich", 300.0, || {
        let mut ok = true;
        let mut notes = Vec::new();
        for (d, l, max_t) in [(1usize, 1usize, 20usize), (1, 2, 20), (2, 1, 40)] {
            let sweep = chain_sweep::<f64>(d, l, max_t, DEFAULT_STATE_BUDGET, workers)?;
            let dirichlet = box_return_probabilities::<f64>(d, l, max_t)?;
            let volume = (2 * l + 1).pow(d as u32);
            let inv_fact = 1.0 / factorial(volume) as f64;
            let mut sandwich = true;
            let mut max_gap = 0.0f64;
            for t in (0..=max_t).step_by(2) {
                let (chain, stay) = (sweep.chain_return[t], sweep.stay_return[t]);
                sandwich &= stay * inv_fact <= chain && chain <= stay;
                max_gap = max_gap.max((stay - dirichlet[t]).abs());
            }
            ok &= sandwich && max_gap <= 1e-12;
            notes.push(format!(
                "d={d} L={l} 2n<={max_t}: sandwich {} stay-vs-dirichlet {max_gap:.1e}",
                if sandwich { "ok" } else { "violated" }
            ));
        }
        Ok((ok, notes.join("; ")))
    })
}

/// Tail bounds: validity against the exact `d = 1` law, moment quadrature, `d = 2` consistency, fit self-test.
pub fn criterion_8(workers: usize) -> CriterionReport {
    timed(8, "IDS pipeline sanity", 60.0, || {
        let mut ok = true;
        let table1 = exact_table(1, 20, workers)?;
        let grid1 = default_epsilon_grid(1)?;
        let mut dominated = true;
        for &eps in &grid1 {
            dominated &= chebyshev_upper(eps, &table1)?.value >= ids_one_dim(-2.0 + eps);
        }
        let mut worst_moment = 0.0f64;
        for n in 0..=5u64 {
            let exact = to_f64(&BigRational::from_integer(binomial(2 * n, n).into()));
            worst_moment = worst_moment.max((ids_one_dim_moment(2 * n as u32, 4000) - exact).abs());
        }
        let table2 = exact_table(2, 12, workers)?;
        let grid2 = default_epsilon_grid(2)?;
        let lower_values = table2.lower_values();
        let mut ordered = true;
        for &eps in &grid2 {
            ordered &=
                lower_envelope(eps, 2, &lower_values).value <= chebyshev_upper(eps, &table2)?.value;
        }
        let synthetic =
            TailBoundCurve::from_upper(1, geometric_grid(0.05, 1.0, 16)?, |e| (-1.0 / e).exp());
        let fit = lifshitz_fit(&synthetic)?;
        let fit_ok = (fit.slope - 1.0).abs() <= 1e-6;
        ok &= dominated && worst_moment <= 1e-6 && ordered && fit_ok;
        let d2 = TailBoundCurve::new(&grid2, &table2, &lower_values)?;
        let diagnostic = match lifshitz_fit(&d2) {
            Ok(f) => format!("d=2 fit slope {:.3} (target {})", f.slope, f.target),
            Err(e) => format!("d=2 fit unavailable: {e}"),
        };
        Ok((
            ok,
            format!(
                "upper>=N_Z: {dominated}; moment err {worst_moment:.1e}; lower<=upper: {ordered}; synthetic slope {:.8}; {diagnostic}",
                fit.slope
            ),
        ))
    })
}

/// Repeated runs with different worker counts give identical records.
pub fn criterion_9(_workers: usize) -> CriterionReport {
    timed(9, "determinism", 30.0, || {
        let render = |workers: usize| -> Result<String> {
            let exact = exact_return_count(2, 8, DEFAULT_ENUMERATION_BUDGET, workers)?;
            let mc = mc_return_probability(2, 6, 50_000, 7, workers)?;
            let flex = flex_statistics(2, 40, 5_000, 7, workers)?;
            let classes = sample_classes(2, 16, 200, 7, DEFAULT_CLASS_BUDGET, workers)?;
            Ok(format!("{exact:?}\n{mc:?}\n{flex:?}\n{classes:?}"))
        };
        let base = render(1)?;
        let again = render(1)?;
        let parallel = render(3)?;
        let ok = base == again && base == parallel;
        Ok((
            ok,
            format!(
                "workers 1, 1, 3 give {} records",
                if ok { "identical" } else { "differing" }
            ),
        ))
    })
}

pub fn run_all(workers: usize) -> Vec<CriterionReport> {
    let criteria: [fn(usize) -> CriterionReport; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    criteria.iter().map(|c| c(workers)).collect()
}

pub fn run_one(id: u8, workers: usize) -> Option<CriterionReport> {
    let report = match id {
        1 => criterion_1(workers),
        2 => criterion_2(workers),
        3 => criterion_3(workers),
        4 => criterion_4(workers),
        5 => criterion_5(workers),
        6 => criterion_6(workers),
        7 => criterion_7(workers),
        8 => criterion_8(workers),
        9 => criterion_9(workers),
        _ => return None,
    };
    Some(report)
}
