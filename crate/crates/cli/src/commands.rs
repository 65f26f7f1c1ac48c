use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use umpteen::chain::{chain_sweep, lower_bound_p2n};
use umpteen::dirichlet::{
    cosine_eigenpair, operator_norm, random_connected_chain, FiniteSubset, LaplacianRecord,
};
use umpteen::ids::{
    default_epsilon_grid, geometric_grid, lifshitz_fit, MomentTable, TailBoundCurve,
};
use umpteen::peierls::{partition_all, sample_classes};
use umpteen::spectra::{
    box_ids_check, default_ids_grid, kn_moment, verify_decomposition, FiniteGraph,
};
use umpteen::walk::{exact_return_count, flex_statistics, mc_return_probability, walk_rng};
use umpteen::{verify, Error, Result};

use crate::args::*;

/// Module output in both tabular and structured form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Payload {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub data: Value,
}

impl Payload {
    fn new(schema: &str, columns: &[&str], rows: Vec<Vec<String>>, data: Value) -> Self {
        Payload {
            schema: format!("{schema}/1"),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            data,
        }
    }
}

pub struct Outcome {
    pub payload: Payload,
    pub summary: String,
    /// An assertion carried by the command did not hold.
    pub failed: bool,
}

fn ok(payload: Payload, summary: String) -> Result<Outcome> {
    Ok(Outcome {
        payload,
        summary,
        failed: false,
    })
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable record")
}

fn require_even(two_n: usize) -> Result<()> {
    if two_n.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "walk length {two_n} must be even"
        )))
    }
}

fn seed_of(seed: Option<u64>) -> u64 {
    seed.expect("seed resolved before dispatch")
}

pub fn run(command: &Command, workers: usize) -> Result<Outcome> {
    match command {
        Command::ExactMoments(a) => exact_moments(a, workers),
        Command::McReturn(a) => mc_return(a, workers),
        Command::FlexStats(a) => flex_stats(a, workers),
        Command::PeierlsClasses(a) => peierls_classes(a, workers),
        Command::Decorated(a) => decorated(a, workers),
        Command::Laplacian(a) => laplacian(a),
        Command::Spectra(a) => spectra(a),
        Command::IdsBounds(a) => ids_bounds(a, workers),
        Command::LifshitzFit(a) => fit(a, workers),
        Command::Verify(a) => run_verify(a, workers),
    }
}

fn exact_moments(a: &ExactMoments, workers: usize) -> Result<Outcome> {
    require_even(a.max_two_n)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for two_n in (2..=a.max_two_n).step_by(2) {
        let c = exact_return_count(a.d, two_n, a.budget, workers)?;
        let exact =
            umpteen::ExactProb::new(c.identity_count.clone().into(), c.total.clone().into());
        rows.push(vec![
            a.d.to_string(),
            two_n.to_string(),
            c.identity_count.to_string(),
            c.total.to_string(),
            num(c.probability()),
            exact.to_string(),
        ]);
        records.push(c);
    }
    let summary = format!(
        "{} exact rows for d={} up to 2n={}",
        rows.len(),
        a.d,
        a.max_two_n
    );
    ok(
        Payload::new(
            "exact-moments",
            &["d", "two_n", "count", "total", "p", "p_exact"],
            rows,
            to_value(&records),
        ),
        summary,
    )
}

fn mc_return(a: &McReturn, workers: usize) -> Result<Outcome> {
    let lengths: Vec<usize> = match a.max_two_n {
        Some(max) => {
            require_even(max)?;
            (2..=max).step_by(2).collect()
        }
        None => {
            require_even(a.two_n)?;
            vec![a.two_n]
        }
    };
    let seed = seed_of(a.seed);
    let estimates = lengths
        .iter()
        .map(|&two_n| mc_return_probability(a.d, two_n, a.samples, seed, workers))
        .collect::<Result<Vec<_>>>()?;
    let rows = estimates
        .iter()
        .map(|e| {
            vec![
                e.d.to_string(),
                e.two_n.to_string(),
                e.samples.to_string(),
                e.hits.to_string(),
                num(e.p_hat),
                num(e.ci_low),
                num(e.ci_high),
                e.seed.to_string(),
            ]
        })
        .collect();
    let last = estimates.last().expect("at least one length");
    let summary = format!(
        "p_{}(Z^{}) ~ {} in [{}, {}] from {} samples",
        last.two_n, last.d, last.p_hat, last.ci_low, last.ci_high, last.samples
    );
    ok(
        Payload::new(
            "mc-return",
            &[
                "d", "two_n", "samples", "hits", "p_hat", "ci_low", "ci_high", "seed",
            ],
            rows,
            to_value(&estimates),
        ),
        summary,
    )
}

fn flex_stats(a: &FlexStats, workers: usize) -> Result<Outcome> {
    let s = flex_statistics(a.d, a.n_steps, a.samples, seed_of(a.seed), workers)?;
    let q = s.quantiles;
    let row = vec![
        s.d.to_string(),
        s.n_steps.to_string(),
        s.samples.to_string(),
        s.seed.to_string(),
        num(s.mean_flexible_even),
        q[0].to_string(),
        q[1].to_string(),
        q[2].to_string(),
        q[3].to_string(),
        q[4].to_string(),
        num(s.flexible_fraction),
        num(s.fraction_stderr),
        s.decidable_total.to_string(),
        s.flexible_total.to_string(),
    ];
    let summary = format!(
        "mean even flexible sites {} over {} walks; flexible fraction {} +- {}",
        s.mean_flexible_even, s.samples, s.flexible_fraction, s.fraction_stderr
    );
    ok(
        Payload::new(
            "flex-stats",
            &[
                "d",
                "n",
                "samples",
                "seed",
                "mean_flexible_even",
                "q0",
                "q25",
                "q50",
                "q75",
                "q100",
                "flexible_fraction",
                "fraction_stderr",
                "decidable_total",
                "flexible_total",
            ],
            vec![row],
            to_value(&s),
        ),
        summary,
    )
}

fn peierls_classes(a: &PeierlsClasses, workers: usize) -> Result<Outcome> {
    require_even(a.two_n)?;
    if a.partition {
        let reports = (2..=a.two_n)
            .step_by(2)
            .map(|two_n| partition_all(a.d, two_n, a.budget))
            .collect::<Result<Vec<_>>>()?;
        let rows = reports
            .iter()
            .map(|r| {
                vec![
                    r.d.to_string(),
                    r.two_n.to_string(),
                    r.sequences.to_string(),
                    r.classes.to_string(),
                    r.identity_paths.to_string(),
                    r.classes_with_identity.to_string(),
                    r.max_identity_per_class.to_string(),
                ]
            })
            .collect();
        let worst = reports
            .iter()
            .map(|r| r.max_identity_per_class)
            .max()
            .unwrap_or(0);
        return ok(
            Payload::new(
                "peierls-partition",
                &[
                    "d",
                    "two_n",
                    "sequences",
                    "classes",
                    "identity_paths",
                    "classes_with_identity",
                    "max_identity_per_class",
                ],
                rows,
                to_value(&reports),
            ),
            format!(
                "flip partition up to 2n={}: at most {worst} identity paths per class",
                a.two_n
            ),
        );
    }
    let records = sample_classes(
        a.d,
        a.two_n,
        a.samples,
        seed_of(a.seed),
        a.class_budget,
        workers,
    )?;
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.path_id.to_string(),
                r.two_n.to_string(),
                r.class_size.to_string(),
                r.flexible_even_count.to_string(),
                r.identity_members.to_string(),
            ]
        })
        .collect();
    let worst = records
        .iter()
        .map(|r| r.identity_members)
        .max()
        .unwrap_or(0);
    let with_identity = records.iter().filter(|r| r.identity_members > 0).count();
    ok(
        Payload::new(
            "peierls-classes",
            &[
                "path_id",
                "two_n",
                "class_size",
                "flexible_even_count",
                "identity_members",
            ],
            rows,
            to_value(&records),
        ),
        format!(
            "{} classes, {with_identity} with an identity member, max {worst} per class",
            records.len()
        ),
    )
}

fn decorated(a: &Decorated, workers: usize) -> Result<Outcome> {
    require_even(a.two_n)?;
    let sweep = chain_sweep::<f64>(a.d, a.l, a.two_n, a.state_budget, workers)?;
    let records = sweep.records();
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.d.to_string(),
                r.l.to_string(),
                r.two_n.to_string(),
                num(r.chain_return),
                num(r.stay_return),
                num(r.lower_bound),
            ]
        })
        .collect();
    let last = records.last().expect("time zero row");
    let summary = format!(
        "d={} L={} 2n={}: chain_return {} stay_return {}",
        a.d, a.l, a.two_n, last.chain_return, last.stay_return
    );
    ok(
        Payload::new(
            "decorated",
            &[
                "d",
                "L",
                "two_n",
                "chain_return",
                "stay_return",
                "lower_bound",
            ],
            rows,
            to_value(&records),
        ),
        summary,
    )
}

fn laplacian(a: &Laplacian) -> Result<Outcome> {
    let mut records = Vec::new();
    for l in 1..=a.l {
        let pair = cosine_eigenpair::<f64>(a.d, l)?;
        records.push(LaplacianRecord {
            label: "box".into(),
            d: a.d,
            l_or_size: l,
            norm_or_eigenvalue: pair.eigenvalue,
            bound: 1.0 - std::f64::consts::PI.powi(2) / (8.0 * (l * l) as f64),
            residual: pair.residual,
        });
    }
    if a.subsets > 0 {
        use rand::Rng;
        let mut rng = walk_rng(seed_of(a.seed), 0);
        for _ in 0..a.subsets {
            let size = rng.random_range(1..=a.max_size.max(1));
            let sites = random_connected_chain(&mut rng, a.d, size)
                .pop()
                .expect("nonempty chain");
            let subset = FiniteSubset::new(sites)?;
            let half = subset.enclosing_half_side();
            records.push(LaplacianRecord {
                label: "subset".into(),
                d: a.d,
                l_or_size: subset.len(),
                norm_or_eigenvalue: operator_norm::<f64>(&subset),
                bound: (std::f64::consts::PI / (2.0 * (half as f64 + 1.0))).cos(),
                residual: 0.0,
            });
        }
    }
    let violations = records
        .iter()
        .filter(|r| r.label == "subset" && r.norm_or_eigenvalue > r.bound + 1e-12)
        .count();
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.d.to_string(),
                r.l_or_size.to_string(),
                num(r.norm_or_eigenvalue),
                num(r.bound),
                num(r.residual),
            ]
        })
        .collect();
    Ok(Outcome {
        payload: Payload::new(
            "laplacian",
            &[
                "label",
                "d",
                "L_or_size",
                "norm_or_eigenvalue",
                "bound",
                "residual",
            ],
            rows,
            to_value(&records),
        ),
        summary: format!("{} rows, {violations} box-bound violations", records.len()),
        failed: violations > 0,
    })
}

pub fn parse_graph(spec: &str) -> Result<FiniteGraph> {
    let bad = || {
        Error::InvalidArgument(format!(
            "graph '{spec}': expected K<n>, P<n>, C<n> or B<d>,<L>"
        ))
    };
    let (kind, rest) = spec.split_at(spec.chars().next().map_or(0, char::len_utf8));
    let number = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    match kind {
        "K" => FiniteGraph::complete(number(rest)?),
        "P" => FiniteGraph::path(number(rest)?),
        "C" => FiniteGraph::cycle(number(rest)?),
        "B" => {
            let (d, l) = rest.split_once(',').ok_or_else(bad)?;
            FiniteGraph::lattice_box(number(d)?, number(l)?)
        }
        _ => Err(bad()),
    }
}

fn spectra(a: &Spectra) -> Result<Outcome> {
    if let Some(spec) = &a.graph {
        let graph = parse_graph(spec)?;
        let report = verify_decomposition(&graph)?;
        let mut rows: Vec<Vec<String>> = report
            .regular
            .eigenvalues
            .iter()
            .map(|e| vec![graph.label.clone(), "regular".into(), "1".into(), num(*e)])
            .collect();
        for (lambda, dim, spectrum) in &report.irreps {
            rows.extend(spectrum.eigenvalues.iter().map(|e| {
                vec![
                    graph.label.clone(),
                    lambda.to_string(),
                    dim.to_string(),
                    num(*e),
                ]
            }));
        }
        let summary = format!(
            "{}: {} eigenvalues, assembly deviation {:e}, counting deviation {:e}",
            graph.label, report.regular_count, report.max_deviation, report.counting_deviation
        );
        return Ok(Outcome {
            failed: !report.passed(),
            payload: Payload::new(
                "spectra-decomposition",
                &["graph", "block", "multiplicity", "eigenvalue"],
                rows,
                to_value(&report),
            ),
            summary,
        });
    }
    if let Some(max) = a.kn_max {
        let moments = (2..=max)
            .map(|n| kn_moment(n, a.moment_n))
            .collect::<Result<Vec<_>>>()?;
        let rows = moments
            .iter()
            .map(|m| {
                vec![
                    m.vertices.to_string(),
                    m.n.to_string(),
                    m.identity_walks.to_string(),
                    m.scaled.as_ref().map_or("0".into(), |s| s.to_string()),
                    num(m.scaled_f64()),
                ]
            })
            .collect();
        return ok(
            Payload::new(
                "spectra-kn-moments",
                &[
                    "N",
                    "n",
                    "identity_walks",
                    "scaled_moment",
                    "scaled_moment_f64",
                ],
                rows,
                to_value(&moments),
            ),
            format!("scaled moments of order {} for N = 2..={max}", a.moment_n),
        );
    }
    let l = a.box_l.expect("clap requires one target");
    let report = box_ids_check(l, &default_ids_grid())?;
    let rows = report
        .grid
        .iter()
        .zip(&report.counting)
        .zip(&report.limit)
        .map(|((t, c), lim)| vec![num(*t), num(*c), num(*lim)])
        .collect();
    let summary = format!(
        "B_{l}: sup distance to the arcsine law {}, interior moments exact: {}",
        report.sup_distance,
        report.interior_exact()
    );
    Ok(Outcome {
        failed: !report.interior_exact() || report.trace_deviation > 1e-9,
        payload: Payload::new(
            "spectra-box-ids",
            &["lambda", "counting", "limit"],
            rows,
            to_value(&report),
        ),
        summary,
    })
}

fn bound_rows(curve: &TailBoundCurve) -> Vec<Vec<String>> {
    let n = |b: &umpteen::ids::Bound| b.best_two_n.map_or(String::new(), |t| (t / 2).to_string());
    curve
        .epsilons
        .iter()
        .zip(&curve.upper)
        .zip(&curve.lower)
        .map(|((e, u), l)| vec![num(*e), num(u.value), num(l.value), n(u), n(l)])
        .collect()
}

fn ids_bounds(a: &IdsBounds, workers: usize) -> Result<Outcome> {
    require_even(a.max_two_n)?;
    let table = MomentTable::mixed(
        a.d,
        a.max_two_n,
        a.budget,
        a.samples,
        seed_of(a.seed),
        workers,
    )?;
    let mut lower_values = table.lower_values();
    if let Some(l) = a.chain_l {
        for (two_n, value) in lower_values.iter_mut().skip(1) {
            let chain: f64 = lower_bound_p2n(a.d, l, *two_n, a.state_budget, workers)?;
            *value = value.max(chain);
        }
    }
    let grid = default_epsilon_grid(a.d)?;
    let curve = TailBoundCurve::new(&grid, &table, &lower_values)?;
    let consistent = curve.is_consistent();
    let summary = format!(
        "d={}: {} grid points, moments to 2n={}, lower <= upper: {consistent}",
        a.d,
        grid.len(),
        a.max_two_n
    );
    Ok(Outcome {
        failed: !consistent,
        payload: Payload::new(
            "ids-bounds",
            &["eps", "upper", "lower", "best_n_upper", "best_n_lower"],
            bound_rows(&curve),
            json!({ "table": to_value(&table), "curve": to_value(&curve) }),
        ),
        summary,
    })
}

fn fit(a: &LifshitzFit, workers: usize) -> Result<Outcome> {
    let curve = if a.synthetic {
        let power = a.d as f64 / 2.0;
        TailBoundCurve::from_upper(a.d, geometric_grid(0.05, 1.0, 16)?, move |e| {
            (-e.powf(-power)).exp()
        })
    } else {
        require_even(a.max_two_n)?;
        let table = MomentTable::exact(a.d, a.max_two_n, a.budget, workers)?;
        TailBoundCurve::new(&default_epsilon_grid(a.d)?, &table, &table.lower_values())?
    };
    let f = lifshitz_fit(&curve)?;
    let note = "diagnostic only: finite moment tables cannot certify the edge exponent; \
                the one-dimensional law used elsewhere is (2/pi) asin(sqrt((2+x)/4))";
    let row = vec![
        num(f.slope),
        num(f.intercept),
        num(f.residual),
        f.points.to_string(),
        num(f.target),
    ];
    ok(
        Payload::new(
            "lifshitz-fit",
            &["slope", "intercept", "residual", "points", "target"],
            vec![row],
            json!({ "slope": f.slope, "residual": f.residual, "target": f.target, "points": f.points, "note": note }),
        ),
        format!(
            "slope {} (target {}), residual {}",
            f.slope, f.target, f.residual
        ),
    )
}

fn run_verify(a: &Verify, workers: usize) -> Result<Outcome> {
    let reports = match a.criterion {
        Some(id) => vec![verify::run_one(id, workers)
            .ok_or_else(|| Error::InvalidArgument(format!("criterion {id} outside 1..=9")))?],
        None => verify::run_all(workers),
    };
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                r.name.clone(),
                r.passed.to_string(),
                num(r.elapsed_secs),
                num(r.limit_secs),
                r.detail.clone(),
            ]
        })
        .collect();
    let table: Vec<String> = reports.iter().map(|r| r.to_string()).collect();
    let passed = reports.iter().filter(|r| r.passed).count();
    Ok(Outcome {
        failed: passed < reports.len(),
        payload: Payload::new(
            "verify",
            &[
                "id",
                "name",
                "passed",
                "elapsed_secs",
                "limit_secs",
                "detail",
            ],
            rows,
            to_value(&reports),
        ),
        summary: format!(
            "{}\n{passed}/{} criteria passed",
            table.join("\n"),
            reports.len()
        ),
    })
}
