//! Acceptance checks. Runs as a plain binary (`harness = false`) so every
//! criterion prints exactly one PASS/FAIL line, and exits non-zero if any fail.
//!
//!     cargo test -p phasecoh --test acceptance

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use phasecoh::analysis::{
    cluster_assignment, contains, estimate_drift, first_below, occupancy_fraction, wrap_events,
    ClusterLabel, LyapunovMode, PhaseSetSpec, SetKind,
};
use phasecoh::bounds::{prop2_relaxed, theorem1_inphase, theorem3_random, BoundInputs};
use phasecoh::coupling::CouplingSpec;
use phasecoh::dynamics::{
    apply_step, compact_relative_update, relative_phases, simulate, PhaseState, Scenario, StepDraws,
};
use phasecoh::graph::{
    graph_laplacian, min_spanning_tree_eigenvalue, spanning_tree_edge_sets, Graph,
};
use phasecoh::presets::{benchmark_graph, preset};
use phasecoh::stochastic::{folded_normal_mean, GapMode, SeedPolicy, UncertaintyModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn with_seed(mut sc: Scenario, seed: u64) -> Scenario {
    sc.seed = SeedPolicy::new(seed);
    sc
}

fn scenario(name: &str) -> Scenario {
    preset(name).expect("preset exists").scenario
}

fn inputs(sc: &Scenario) -> BoundInputs {
    BoundInputs::derive(
        &sc.graph,
        &sc.coupling,
        &sc.arcs,
        &sc.model,
        GapMode::NominalEdgewise,
    )
    .expect("inputs derive")
}

/// Occupancy of the final quarter of a trajectory.
fn tail_occupancy(sc: &Scenario, set: &PhaseSetSpec) -> f64 {
    let traj = simulate(sc).expect("simulates");
    let burn_in = traj.len() - traj.len() / 4;
    occupancy_fraction(&traj, set, burn_in).expect("burn-in fits")
}

fn in_phase_bound() -> Outcome {
    // figures as quoted for the benchmark: gap 3, margin 0.3, |Psi(gamma)| 0.66, lambda 0.382
    let mut x = inputs(&scenario("exp1"));
    x.e_max_gap = 3.0;
    x.mu_min = 0.3 + x.noise_term;
    x.psi_gamma = 0.66;
    x.lambda_min_tree = 0.382;
    let k = theorem1_inphase(&x, None).kappa_min.unwrap_or(f64::NAN);
    let exact = theorem1_inphase(&inputs(&scenario("exp1")), None)
        .kappa_min
        .unwrap_or(f64::NAN);
    let rel = (k - 39.7).abs() / 39.7;
    outcome(
        rel <= 0.01,
        format!("kappa_min {k:.3} vs 39.7 (rel err {rel:.4}); unrounded inputs give {exact:.3}"),
    )
}

fn spectral_values() -> Outcome {
    let lam = min_spanning_tree_eigenvalue(&benchmark_graph()).unwrap_or(f64::NAN);
    let psi = CouplingSpec::benchmark_odd().evaluate(PI / 8.0).abs();
    outcome(
        (lam - 0.382).abs() <= 1e-3 && (psi - 0.660).abs() <= 1e-3,
        format!("lambda_min_tree {lam:.6} (0.382 +- 1e-3), |Psi(pi/8)| {psi:.6} (0.660 +- 1e-3)"),
    )
}

fn relaxed_bound() -> Outcome {
    let sc = scenario("exp5");
    let mut x = inputs(&sc);
    let computed = x.psi_gamma;
    // quoted figure: |Psi_r(gamma)| = 2
    x.psi_gamma = 2.0;
    let r = match prop2_relaxed(&x, 0.2, None) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let lhat = r.intermediate("lambda_hat").unwrap_or(f64::NAN);
    let k = r.kappa_min.unwrap_or(f64::NAN);
    let (el, ek) = ((lhat - 0.98).abs() / 0.98, (k - 10.0).abs() / 10.0);
    outcome(
        el <= 0.03 && ek <= 0.05,
        format!(
            "lambda_hat {lhat:.4} (rel err {el:.4} vs 0.98), kappa_min {k:.3} (rel err {ek:.4} vs 10); |Psi_r(gamma)| evaluates to {computed:.4}"
        ),
    )
}

fn random_bound() -> Outcome {
    let sc = scenario("exp4");
    let x = inputs(&sc);
    let k = theorem3_random(&x, 0.8, None).kappa_min.unwrap_or(f64::NAN);
    outcome(
        x.e_max_gap == 3.0 && (k - 14.9).abs() <= 0.3,
        format!("gap {} , kappa_min {k:.3} (14.9 +- 0.3)", x.e_max_gap),
    )
}

fn cohesion(name: &str, kind: SetKind) -> Outcome {
    let base = scenario(name);
    let set = PhaseSetSpec::from_arcs(kind, &base.arcs)
        .and_then(|s| s.with_tolerance(0.05))
        .expect("valid set");
    let occ: Vec<f64> = (0..SEEDS)
        .map(|s| tail_occupancy(&with_seed(base.clone(), s), &set))
        .collect();
    let min = occ.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        min >= 0.95,
        format!(
            "{SEEDS} seeds x {} steps, min final-quarter occupancy {min:.4} (>= 0.95)",
            base.steps
        ),
    )
}

fn clustering() -> Outcome {
    let base = scenario("exp3");
    let means = match &base.model {
        UncertaintyModel::Gaussian(m) => m.edge_means.clone(),
        _ => unreachable!("exp3 is Gaussian"),
    };
    let want: Vec<ClusterLabel> = means
        .iter()
        .map(|&m| {
            if m < 0.0 {
                ClusterLabel::AntiPhase
            } else {
                ClusterLabel::InPhase
            }
        })
        .collect();
    let hits = (0..SEEDS)
        .filter(|&s| {
            let traj = simulate(&with_seed(base.clone(), s)).expect("simulates");
            cluster_assignment(&traj, &base.arcs, 0.25).expect("labels") == want
        })
        .count();
    outcome(
        hits >= 18,
        format!("{hits}/{SEEDS} seeds labelled as expected (>= 18)"),
    )
}

fn random_contrast() -> Outcome {
    let set = PhaseSetSpec::in_phase(PI / 8.0).expect("valid set");
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["exp4", "exp4-strong"] {
        let base = scenario(name);
        let min = (0..SEEDS)
            .map(|s| tail_occupancy(&with_seed(base.clone(), s), &set))
            .fold(f64::INFINITY, f64::min);
        pass &= min >= 0.9;
        parts.push(format!("{name} min occupancy {min:.3} (>= 0.9)"));
    }
    let weak = scenario("exp4-weak");
    let mut max_occ: f64 = 0.0;
    let mut min_wraps = u64::MAX;
    let mut peak_rel: f64 = 0.0;
    for s in 0..SEEDS {
        let traj = simulate(&with_seed(weak.clone(), s)).expect("simulates");
        let burn_in = traj.len() - traj.len() / 4;
        max_occ = max_occ.max(occupancy_fraction(&traj, &set, burn_in).expect("burn-in fits"));
        let wraps: u64 = wrap_events(&traj).iter().map(|w| w.unsigned_abs()).sum();
        min_wraps = min_wraps.min(wraps);
        peak_rel = traj.max_relative.iter().cloned().fold(peak_rel, f64::max);
    }
    pass &= max_occ <= 0.5 && min_wraps >= 1;
    parts.push(format!(
        "exp4-weak max occupancy {max_occ:.3} (<= 0.5), min wrap events per run {min_wraps} (>= 1), largest |rel| seen {peak_rel:.3}"
    ));
    outcome(pass, parts.join("; "))
}

fn phase_locking() -> Outcome {
    let (dense, sparse) = (scenario("exp6"), scenario("exp6-sparse"));
    let mut worst: f64 = 0.0;
    let mut faster = 0;
    for s in 0..SEEDS {
        let a = simulate(&with_seed(dense.clone(), s)).expect("simulates");
        let b = simulate(&with_seed(sparse.clone(), s)).expect("simulates");
        worst = worst
            .max(a.max_relative[10_000])
            .max(b.max_relative[10_000]);
        match (first_below(&a, 0.1), first_below(&b, 0.1)) {
            (Some(x), Some(y)) if x < y => faster += 1,
            (Some(_), None) => faster += 1,
            _ => {}
        }
    }
    outcome(
        worst <= 0.01 && faster >= 18,
        format!("largest max|rel| at step 10^4 {worst:.2e} (<= 0.01); p=0.8 faster in {faster}/{SEEDS} pairs (>= 18)"),
    )
}

/// Phase vectors with exactly one edge in the middle arc and every other edge within gamma/2.
fn exterior_states(sc: &Scenario, count: usize) -> Vec<PhaseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (g, a) = (&sc.graph, &sc.arcs);
    let mut out = Vec::new();
    while out.len() < count {
        let phases: Vec<f64> = (0..g.node_count())
            .map(|_| rng.gen_range(-0.8..0.8))
            .collect();
        let st = PhaseState::new(phases).expect("finite");
        let rel = relative_phases(g, &st);
        let middle = rel.iter().filter(|r| a.in_middle(r.abs())).count();
        let small = rel.iter().filter(|r| r.abs() <= a.gamma / 2.0).count();
        if middle == 1 && small == rel.len() - 1 {
            out.push(st);
        }
    }
    out
}

fn drift_sign() -> Outcome {
    let sc = scenario("exp1");
    let states = exterior_states(&sc, 50);
    let mut neg = 0;
    let mut pos = 0;
    let mut worst_z = f64::INFINITY;
    for st in &states {
        let d = estimate_drift(&sc, st, 10_000, LyapunovMode::InPhase).expect("drift");
        let z = -d.delta_v / d.standard_error;
        worst_z = worst_z.min(z);
        if z >= 3.0 {
            neg += 1;
        }
        let e = estimate_drift(&sc, st, 10_000, LyapunovMode::AntiPhase).expect("drift");
        if e.delta_v / e.standard_error >= 3.0 {
            pos += 1;
        }
    }
    outcome(
        neg == states.len() && pos == states.len(),
        format!(
            "{neg}/{n} states with delta_v < 0 at >= 3 SE (smallest z {worst_z:.1}); {pos}/{n} anti-phase delta_v > 0",
            n = states.len()
        ),
    )
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Determinant of an integer matrix by fraction-free elimination.
fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn matrix_tree_count(g: &Graph) -> i128 {
    let l = graph_laplacian(g);
    let n = g.node_count();
    let reduced = (1..n)
        .map(|i| (1..n).map(|j| l[(i, j)].round() as i128).collect())
        .collect();
    bareiss_det(reduced)
}

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    loop {
        let p = rng.gen_range(0.3..0.9);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(p))
            .collect();
        if edges.len() > 20 {
            continue;
        }
        if let Ok(g) = Graph::new(n, edges) {
            if g.is_connected() {
                return g;
            }
        }
    }
}

fn oracle_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_step: f64 = 0.0;
    for trial in 0..200 {
        let g = random_connected_graph(&mut rng, 5);
        let phases: Vec<f64> = (0..5).map(|_| rng.gen_range(-PI..PI)).collect();
        let draws = StepDraws {
            weights: (0..g.edge_count())
                .map(|_| rng.gen_range(-2.0..3.0))
                .collect(),
            freqs: (0..5).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        };
        let (kappa, tau) = (rng.gen_range(0.1..40.0), rng.gen_range(1e-4..1e-2));
        let c = if trial % 2 == 0 {
            CouplingSpec::benchmark_odd()
        } else {
            CouplingSpec::sine()
        };
        let st = PhaseState::new(phases).expect("finite");
        let next =
            PhaseState::new(apply_step(&g, &c, kappa, tau, &st.phases, &draws)).expect("finite");
        let via_nodes = relative_phases(&g, &next);
        let via_edges =
            compact_relative_update(&g, &c, kappa, tau, &relative_phases(&g, &st), &draws);
        for (a, b) in via_nodes.iter().zip(&via_edges) {
            let d = (a - b).rem_euclid(2.0 * PI);
            worst_step = worst_step.max(d.min(2.0 * PI - d));
        }
    }

    let mut worst_fold: f64 = 0.0;
    for _ in 0..100 {
        let mu = rng.gen_range(-5.0..5.0);
        let var: f64 = rng.gen_range(0.01..4.0);
        let sd = var.sqrt();
        let density =
            |x: f64| x.abs() * (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        let (lo, hi) = (mu - 12.0 * sd, mu + 12.0 * sd);
        // split at zero so the kink of |x| sits on a node
        let quad = if lo < 0.0 && hi > 0.0 {
            simpson(&density, lo, 0.0, 20_000) + simpson(&density, 0.0, hi, 20_000)
        } else {
            simpson(&density, lo, hi, 40_000)
        };
        let closed = folded_normal_mean(mu, var).expect("valid");
        worst_fold = worst_fold.max((closed - quad).abs());
    }

    let mut corpus: Vec<Graph> = vec![
        benchmark_graph(),
        Graph::path(7).expect("path"),
        Graph::new(6, (0..6).map(|i| (i, (i + 1) % 6)).collect()).expect("cycle"),
        Graph::new(
            5,
            (0..5)
                .flat_map(|i| (i + 1..5).map(move |j| (i, j)))
                .collect(),
        )
        .expect("K5"),
        Graph::new(
            6,
            (0..6)
                .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
                .collect(),
        )
        .expect("K6"),
    ];
    for n in 2..=7 {
        for _ in 0..15 {
            corpus.push(random_connected_graph(&mut rng, n));
        }
    }
    let mismatches = corpus
        .iter()
        .filter(|g| {
            spanning_tree_edge_sets(g).map(|t| t.len() as i128).ok() != Some(matrix_tree_count(g))
        })
        .count();

    outcome(
        worst_step <= 1e-12 && worst_fold <= 1e-8 && mismatches == 0,
        format!(
            "node vs compact step max diff {worst_step:.1e} (200 cases); folded mean vs quadrature max diff {worst_fold:.1e} (100 cases); tree-count mismatches {mismatches}/{}",
            corpus.len()
        ),
    )
}

fn horizon_tagging() -> Outcome {
    // infinite-horizon recurrence cannot be checked; confirm estimates carry their horizon
    let sc = with_seed(scenario("exp1"), 0);
    let set = PhaseSetSpec::from_arcs(SetKind::InPhase, &sc.arcs).expect("set");
    let stats = phasecoh::analysis::estimate_recurrence(&sc, &set, 4, 2_000).expect("stats");
    let st = PhaseState::new(phasecoh::presets::initial_phases()).expect("finite");
    let d = estimate_drift(&sc, &st, 100, LyapunovMode::InPhase).expect("drift");
    let start_inside = contains(&set, &relative_phases(&sc.graph, &st));
    outcome(
        stats.horizon == 2_000 && d.samples == 100 && !start_inside,
        format!(
            "recurrence over a finite horizon only (horizon {} tagged, estimate {:.2}); drift tagged with {} samples; criteria 5-10 stand in for the infinite-horizon claims",
            stats.horizon, stats.return_probability_estimate, d.samples
        ),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("in-phase gain bound", Box::new(in_phase_bound)),
        ("spectral and coupling values", Box::new(spectral_values)),
        ("relaxed-coupling bound", Box::new(relaxed_bound)),
        ("random-network bound", Box::new(random_bound)),
        (
            "in-phase cohesion (exp1)",
            Box::new(|| cohesion("exp1", SetKind::InPhase)),
        ),
        (
            "anti-phase cohesion (exp2)",
            Box::new(|| cohesion("exp2", SetKind::AntiPhase)),
        ),
        ("clustering on a line (exp3)", Box::new(clustering)),
        ("random-network contrast (exp4)", Box::new(random_contrast)),
        ("phase locking (exp6)", Box::new(phase_locking)),
        ("drift sign", Box::new(drift_sign)),
        ("oracle equivalences", Box::new(oracle_equivalences)),
        ("finite-horizon statement", Box::new(horizon_tagging)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict} [{name}] {} ({:.2}s)",
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
