//! Built-in scenarios on the five-node benchmark network.
//!
//! | name          | coupling  | model     | kappa | tau   | notes                              |
//! |---------------|-----------|-----------|-------|-------|------------------------------------|
//! | `exp1`        | odd       | Gaussian  | 40    | 0.001 | positive edge means                |
//! | `exp2`        | odd       | Gaussian  | 40    | 0.001 | every edge mean negated            |
//! | `exp3`        | odd       | Gaussian  | 2     | 0.001 | line graph, means -1,-1,+1,+1      |
//! | `exp4`        | odd       | Bernoulli | 19    | 0.01  | p = 0.8                            |
//! | `exp4-weak`   | odd       | Bernoulli | 12    | 0.01  | p = 0.3                            |
//! | `exp4-strong` | odd       | Bernoulli | 30    | 0.01  | p = 0.3                            |
//! | `exp5`        | non-odd   | Gaussian  | 10    | 0.001 | line graph, relaxed arcs           |
//! | `exp6`        | odd       | Bernoulli | 0.5   | 0.01  | identical frequencies, p = 0.8     |
//! | `exp6-sparse` | odd       | Bernoulli | 0.5   | 0.01  | identical frequencies, p = 0.1     |

use std::f64::consts::PI;

use crate::analysis::SetKind;
use crate::coupling::{ArcPartition, CouplingSpec};
use crate::dynamics::{InitialPhases, Scenario};
use crate::graph::Graph;
use crate::stochastic::{BernoulliModel, GaussianUncertainty, SeedPolicy, UncertaintyModel};

pub const PRESET_NAMES: &[&str] = &[
    "exp1",
    "exp2",
    "exp3",
    "exp4",
    "exp4-weak",
    "exp4-strong",
    "exp5",
    "exp6",
    "exp6-sparse",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub scenario: Scenario,
    /// Set the Monte Carlo commands measure against.
    pub set: SetKind,
}

/// One-based edge list of the benchmark network.
pub const BENCHMARK_EDGES: [(usize, usize); 5] = [(1, 2), (2, 3), (3, 4), (1, 4), (4, 5)];
/// The benchmark network without edge (3,4): the path 3-2-1-4-5.
pub const BENCHMARK_TREE_EDGES: [(usize, usize); 4] = [(1, 2), (2, 3), (1, 4), (4, 5)];

const EDGE_MEANS: [f64; 5] = [1.0, 3.0, 0.85, 1.5, 2.0];
const EDGE_VARIANCE: f64 = 0.5;
const FREQ_CONST: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
const FREQ_NOISE_MEANS: [f64; 5] = [4.0, 2.0, 0.0, 1.0, -2.0];
const FREQ_NOISE_VARIANCES: [f64; 5] = [1.0, 2.0, 1.0, 3.0, 1.5];

pub fn initial_phases() -> Vec<f64> {
    vec![PI / 4.0, PI / 8.0, -PI / 8.0, -PI / 5.0, PI / 5.0]
}

pub fn benchmark_graph() -> Graph {
    Graph::from_one_based(5, &BENCHMARK_EDGES).expect("benchmark edges are valid")
}

pub fn benchmark_tree() -> Graph {
    Graph::from_one_based(5, &BENCHMARK_TREE_EDGES).expect("tree edges are valid")
}

/// `[0, pi/8]` and `[7 pi/8, pi]`: the two arcs on which `|Psi|` equals `|Psi(pi/8)|`.
pub fn benchmark_arcs() -> ArcPartition {
    ArcPartition::new(PI / 8.0, 7.0 * PI / 8.0).expect("valid arcs")
}

/// Relaxed arcs for the non-odd coupling: `gamma = 0.4 pi`, `gamma_c` at its
/// positive root, `psi_bar = 0.2`, `gamma_max` level-matched.
pub fn relaxed_arcs() -> ArcPartition {
    let c = CouplingSpec::benchmark_relaxed();
    let gamma = 0.4 * PI;
    let gamma_c = bisect_root(&c, 0.1, 1.0);
    let matched = ArcPartition::level_matched(&c, gamma, gamma + 1e-3).expect("level exists");
    ArcPartition::relaxed(gamma, matched.gamma_max, Some(gamma_c), Some(0.2)).expect("valid arcs")
}

fn bisect_root(c: &CouplingSpec, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = c.evaluate(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (c.evaluate(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gaussian(edge_means: Vec<f64>, freq_const: Vec<f64>, noise_means: Vec<f64>) -> UncertaintyModel {
    UncertaintyModel::Gaussian(GaussianUncertainty {
        edge_means,
        edge_variance: EDGE_VARIANCE,
        freq_const,
        freq_noise_means: noise_means,
        freq_noise_variances: FREQ_NOISE_VARIANCES.to_vec(),
    })
}

fn bernoulli(p: f64, freqs: Vec<f64>) -> UncertaintyModel {
    UncertaintyModel::Bernoulli(BernoulliModel {
        p,
        freq_const: freqs,
    })
}

fn scenario(
    graph: Graph,
    coupling: CouplingSpec,
    arcs: ArcPartition,
    kappa: f64,
    tau: f64,
    model: UncertaintyModel,
    steps: usize,
) -> Scenario {
    Scenario {
        graph,
        coupling,
        arcs,
        kappa,
        tau,
        model,
        initial: InitialPhases::Explicit(initial_phases()),
        steps,
        seed: SeedPolicy::new(0),
    }
}

pub fn preset(name: &str) -> Option<Preset> {
    let odd = CouplingSpec::benchmark_odd;
    let means = EDGE_MEANS.to_vec();
    let freqs = FREQ_CONST.to_vec();
    let noise = FREQ_NOISE_MEANS.to_vec();
    let random = |name, summary, p, kappa, freqs: Vec<f64>, set| Preset {
        name,
        summary,
        scenario: scenario(
            benchmark_graph(),
            odd(),
            benchmark_arcs(),
            kappa,
            0.01,
            bernoulli(p, freqs),
            10_000,
        ),
        set,
    };
    let p = match name {
        "exp1" => Preset {
            name: "exp1",
            summary: "Gaussian uncertainty, positive edge means, kappa 40",
            scenario: scenario(benchmark_graph(), odd(), benchmark_arcs(), 40.0, 0.001, gaussian(means, freqs, noise), 20_000),
            set: SetKind::InPhase,
        },
        "exp2" => Preset {
            name: "exp2",
            summary: "Gaussian uncertainty, negative edge means, kappa 40",
            scenario: scenario(
                benchmark_graph(),
                odd(),
                benchmark_arcs(),
                40.0,
                0.001,
                gaussian(means.iter().map(|m| -m).collect(), freqs, noise),
                20_000,
            ),
            set: SetKind::AntiPhase,
        },
        "exp3" => Preset {
            name: "exp3",
            summary: "line graph, edge means -1 on (1,2),(2,3) and +1 elsewhere, zero mean frequencies, kappa 2",
            scenario: scenario(
                benchmark_tree(),
                odd(),
                benchmark_arcs(),
                2.0,
                0.001,
                gaussian(vec![-1.0, -1.0, 1.0, 1.0], vec![0.0; 5], vec![0.0; 5]),
                20_000,
            ),
            set: SetKind::Union,
        },
        "exp4" => random("exp4", "random links p 0.8, kappa 19", 0.8, 19.0, freqs, SetKind::InPhase),
        "exp4-weak" => random("exp4-weak", "random links p 0.3, kappa 12", 0.3, 12.0, freqs, SetKind::InPhase),
        "exp4-strong" => random("exp4-strong", "random links p 0.3, kappa 30", 0.3, 30.0, freqs, SetKind::InPhase),
        "exp5" => Preset {
            name: "exp5",
            summary: "non-odd coupling on the line graph, relaxed arcs, kappa 10",
            scenario: scenario(
                benchmark_tree(),
                CouplingSpec::benchmark_relaxed(),
                relaxed_arcs(),
                10.0,
                0.001,
                gaussian(vec![1.0, 3.0, 1.5, 2.0], freqs, noise),
                20_000,
            ),
            set: SetKind::Relaxed,
        },
        "exp6" => random("exp6", "identical frequencies, random links p 0.8, kappa 0.5", 0.8, 0.5, vec![1.0; 5], SetKind::Origin),
        "exp6-sparse" => random("exp6-sparse", "identical frequencies, random links p 0.1, kappa 0.5", 0.1, 0.5, vec![1.0; 5], SetKind::Origin),
        _ => return None,
    };
    Some(p)
}
