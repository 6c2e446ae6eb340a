//! The discrete-time phase update and trajectory recording.
//!
//! Node form, for every node `i`:
//!
//! ```text
//! theta_i <- wrap(theta_i + tau * w_i - kappa * tau * sum_{j in N(i)} a_ij * Psi(wrap(theta_i - theta_j)))
//! ```
//!
//! with one weight `a_ij = a_ji` per undirected edge and one frequency `w_i`
//! per node, redrawn every step. Draw order per step is fixed: edge weights
//! (or Bernoulli mask entries) in edge listing order, then node frequencies
//! in node order. The Bernoulli model draws no frequencies.

use std::f64::consts::{PI, TAU};

use crate::coupling::{ArcPartition, CouplingSpec};
use crate::error::{Error, Result};
use crate::graph::{incidence_matrix, Graph};
use crate::stochastic::{
    sample_bernoulli_mask, sample_edge_weights, sample_frequencies, SeedPolicy, Stream,
    UncertaintyModel,
};

/// Wraps into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(wrap(x))
}

#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shorter arc length between two angles, in `[0, pi]`.
pub fn geodesic_distance(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub phases: Vec<f64>,
    pub step: u64,
}

impl PhaseState {
    /// Wraps every phase and starts the step counter at zero.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        let phases = phases.into_iter().map(wrap_angle).collect::<Result<_>>()?;
        Ok(Self { phases, step: 0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhases {
    Explicit(Vec<f64>),
    /// Uniform on `(-pi, pi]`, drawn from the head of the trial stream.
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Graph,
    pub coupling: CouplingSpec,
    pub arcs: ArcPartition,
    pub kappa: f64,
    pub tau: f64,
    pub model: UncertaintyModel,
    pub initial: InitialPhases,
    pub steps: usize,
    pub seed: SeedPolicy,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        self.model.validate(&self.graph)?;
        if let InitialPhases::Explicit(p) = &self.initial {
            if p.len() != self.graph.node_count() {
                return Err(Error::Dimension {
                    what: "initial_phases",
                    expected: self.graph.node_count(),
                    got: p.len(),
                });
            }
            if let Some(&bad) = p.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(bad));
            }
        }
        Ok(())
    }

    /// Initial state for a trial; consumes `n` uniforms when random.
    pub fn initial_state(&self, stream: &mut Stream) -> PhaseState {
        let phases = match &self.initial {
            InitialPhases::Explicit(p) => p.iter().map(|&x| wrap(x)).collect(),
            InitialPhases::UniformRandom => (0..self.graph.node_count())
                .map(|_| wrap(-PI + TAU * stream.uniform()))
                .collect(),
        };
        PhaseState { phases, step: 0 }
    }
}

/// The random quantities consumed by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDraws {
    /// Per-edge coupling weight (Gaussian draw or 0/1 mask entry).
    pub weights: Vec<f64>,
    /// Per-node frequency.
    pub freqs: Vec<f64>,
}

impl StepDraws {
    pub fn draw(model: &UncertaintyModel, g: &Graph, stream: &mut Stream) -> Self {
        match model {
            UncertaintyModel::Gaussian(m) => {
                let weights = sample_edge_weights(m, stream);
                let freqs = sample_frequencies(m, stream);
                Self { weights, freqs }
            }
            UncertaintyModel::Bernoulli(m) => Self {
                weights: sample_bernoulli_mask(m, g.edge_count(), stream),
                freqs: m.freq_const.clone(),
            },
        }
    }
}

/// Applies one node-form update with the given draws.
pub fn apply_step(
    g: &Graph,
    coupling: &CouplingSpec,
    kappa: f64,
    tau: f64,
    phases: &[f64],
    draws: &StepDraws,
) -> Vec<f64> {
    let mut force = vec![0.0; phases.len()];
    for (l, &(t, h)) in g.edges().iter().enumerate() {
        let w = draws.weights[l];
        if w == 0.0 {
            continue;
        }
        force[t] += w * coupling.evaluate(wrap(phases[t] - phases[h]));
        force[h] += w * coupling.evaluate(wrap(phases[h] - phases[t]));
    }
    phases
        .iter()
        .zip(&draws.freqs)
        .zip(&force)
        .map(|((&th, &w), &f)| wrap(th + tau * w - kappa * tau * f))
        .collect()
}

/// Relative-phase update in compact form,
/// `wrap(rel + tau B^T w - tau kappa B^T B diag(a) Psi(rel))`.
///
/// Matches [`apply_step`] for odd couplings.
pub fn compact_relative_update(
    g: &Graph,
    coupling: &CouplingSpec,
    kappa: f64,
    tau: f64,
    rel: &[f64],
    draws: &StepDraws,
) -> Vec<f64> {
    let b = incidence_matrix(g);
    let bt = b.transpose();
    let weighted: Vec<f64> = rel
        .iter()
        .zip(&draws.weights)
        .map(|(&r, &a)| a * coupling.evaluate(r))
        .collect();
    let node_force = b.mul_vec(&weighted);
    let edge_force = bt.mul_vec(&node_force);
    let drift = bt.mul_vec(&draws.freqs);
    rel.iter()
        .zip(&drift)
        .zip(&edge_force)
        .map(|((&r, &d), &f)| wrap(r + tau * d - tau * kappa * f))
        .collect()
}

fn require_gaussian(sc: &Scenario) -> Result<()> {
    match sc.model {
        UncertaintyModel::Gaussian(_) => Ok(()),
        UncertaintyModel::Bernoulli(_) => Err(Error::Parameter(
            "step_uncertain needs a Gaussian model".into(),
        )),
    }
}

fn advance(sc: &Scenario, s: &PhaseState, stream: &mut Stream) -> PhaseState {
    let draws = StepDraws::draw(&sc.model, &sc.graph, stream);
    PhaseState {
        phases: apply_step(&sc.graph, &sc.coupling, sc.kappa, sc.tau, &s.phases, &draws),
        step: s.step + 1,
    }
}

/// One step under Gaussian edge and frequency noise.
pub fn step_uncertain(sc: &Scenario, s: &PhaseState, stream: &mut Stream) -> Result<PhaseState> {
    require_gaussian(sc)?;
    Ok(advance(sc, s, stream))
}

/// One step over a Bernoulli random network.
pub fn step_random(sc: &Scenario, s: &PhaseState, stream: &mut Stream) -> Result<PhaseState> {
    match sc.model {
        UncertaintyModel::Bernoulli(_) => Ok(advance(sc, s, stream)),
        UncertaintyModel::Gaussian(_) => Err(Error::Parameter(
            "step_random needs a Bernoulli model".into(),
        )),
    }
}

/// One step under whichever model the scenario carries.
pub fn step(sc: &Scenario, s: &PhaseState, stream: &mut Stream) -> PhaseState {
    advance(sc, s, stream)
}

/// `wrap(theta_head - theta_tail)` per edge.
pub fn relative_phases(g: &Graph, s: &PhaseState) -> Vec<f64> {
    relative_of(g, &s.phases)
}

pub(crate) fn relative_of(g: &Graph, phases: &[f64]) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|&(t, h)| wrap(phases[h] - phases[t]))
        .collect()
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub relative: Vec<Vec<f64>>,
    pub max_relative: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            states: Vec::with_capacity(n),
            relative: Vec::with_capacity(n),
            max_relative: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, g: &Graph, phases: Vec<f64>) {
        let rel = relative_of(g, &phases);
        self.max_relative.push(max_abs(&rel));
        self.relative.push(rel);
        self.states.push(phases);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Runs `sc.steps` steps on trial stream 0 of the scenario seed.
pub fn simulate(sc: &Scenario) -> Result<Trajectory> {
    sc.validate()?;
    let mut stream = sc.seed.stream(0);
    let start = sc.initial_state(&mut stream);
    Ok(simulate_from(sc, start, sc.steps, &mut stream))
}

/// Runs `steps` steps from `start` on an explicit stream.
pub fn simulate_from(
    sc: &Scenario,
    start: PhaseState,
    steps: usize,
    stream: &mut Stream,
) -> Trajectory {
    let mut traj = Trajectory::with_capacity(steps + 1);
    let mut state = start;
    traj.push(&sc.graph, state.phases.clone());
    for _ in 0..steps {
        state = advance(sc, &state, stream);
        traj.push(&sc.graph, state.phases.clone());
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{BernoulliModel, GaussianUncertainty};

    fn pair_scenario(model: UncertaintyModel, phases: Vec<f64>) -> Scenario {
        Scenario {
            graph: Graph::new(2, vec![(1, 0)]).unwrap(),
            coupling: CouplingSpec::sine(),
            arcs: ArcPartition::new(PI / 8.0, 7.0 * PI / 8.0).unwrap(),
            kappa: 1.0,
            tau: 0.1,
            model,
            initial: InitialPhases::Explicit(phases),
            steps: 10,
            seed: SeedPolicy::new(0),
        }
    }

    fn quiet_gaussian(n: usize, m: usize, mean: f64, freq: f64) -> UncertaintyModel {
        UncertaintyModel::Gaussian(GaussianUncertainty {
            edge_means: vec![mean; m],
            edge_variance: 0.0,
            freq_const: vec![freq; n],
            freq_noise_means: vec![0.0; n],
            freq_noise_variances: vec![0.0; n],
        })
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_angle(1.5 * PI).unwrap() + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(-PI).unwrap(), PI);
        assert_eq!(wrap_angle(PI).unwrap(), PI);
        assert_eq!(wrap_angle(0.1).unwrap(), 0.1);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn geodesic_examples() {
        assert!((geodesic_distance(0.1, -0.1) - 0.2).abs() < 1e-15);
        assert!((geodesic_distance(3.0, -3.0) - (TAU - 6.0)).abs() < 1e-12);
        assert!((geodesic_distance(PI, 0.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn relative_phase_examples() {
        let g = Graph::path(3).unwrap();
        let s = PhaseState::new(vec![0.4; 3]).unwrap();
        assert_eq!(relative_phases(&g, &s), vec![0.0, 0.0]);

        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let s = PhaseState::new(vec![0.0, PI / 4.0]).unwrap();
        assert_eq!(relative_phases(&g, &s), vec![PI / 4.0]);

        // head - tail = -3 - 3 = -6, wrapped to 2pi - 6
        let s = PhaseState::new(vec![3.0, -3.0]).unwrap();
        let r = relative_phases(&g, &s)[0];
        assert!((r - (TAU - 6.0)).abs() < 1e-12);
        let s = PhaseState::new(vec![-3.0, 3.0]).unwrap();
        assert!((relative_phases(&g, &s)[0] + 0.283_185_307).abs() < 1e-8);
    }

    #[test]
    fn pairwise_sine_step() {
        let sc = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.0), vec![PI / 2.0, 0.0]);
        let mut stream = sc.seed.stream(0);
        let s0 = sc.initial_state(&mut stream);
        let s1 = step_uncertain(&sc, &s0, &mut stream).unwrap();
        let rel = wrap(s1.phases[0] - s1.phases[1]);
        assert!((rel - (PI / 2.0 - 0.2)).abs() < 1e-12);
        assert!((rel - 1.3708).abs() < 1e-4);
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn zero_coupling_zero_noise_is_fixed() {
        let sc = pair_scenario(quiet_gaussian(2, 1, 0.0, 0.0), vec![0.3, -1.0]);
        let traj = simulate(&sc).unwrap();
        assert!(traj.states.iter().all(|s| s == &traj.states[0]));
    }

    #[test]
    fn common_frequency_shifts_without_changing_relatives() {
        let g = Graph::path(3).unwrap();
        let mut sc = pair_scenario(quiet_gaussian(3, 2, 1.0, 2.0), vec![0.1, 0.5, -0.2]);
        sc.graph = g;
        let mut stream = sc.seed.stream(0);
        let s0 = sc.initial_state(&mut stream);
        let s1 = step(&sc, &s0, &mut stream);
        let mut no_drift = sc.clone();
        no_drift.model = quiet_gaussian(3, 2, 1.0, 0.0);
        let s1b = step(&no_drift, &s0, &mut stream);
        for (a, b) in s1.phases.iter().zip(&s1b.phases) {
            assert!((wrap(a - b) - sc.tau * 2.0).abs() < 1e-12);
        }
        let ra = relative_phases(&sc.graph, &s1);
        let rb = relative_phases(&sc.graph, &s1b);
        for (a, b) in ra.iter().zip(&rb) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bernoulli_full_mask_matches_deterministic_gaussian() {
        let phases = vec![1.0, -0.4];
        let gauss = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.7), phases.clone());
        let bern = pair_scenario(
            UncertaintyModel::Bernoulli(BernoulliModel {
                p: 1.0,
                freq_const: vec![0.7; 2],
            }),
            phases,
        );
        assert_eq!(simulate(&gauss).unwrap(), simulate(&bern).unwrap());
    }

    #[test]
    fn empty_mask_drifts_by_frequency_gap() {
        let sc = pair_scenario(
            UncertaintyModel::Bernoulli(BernoulliModel {
                p: 0.0,
                freq_const: vec![1.0, 3.0],
            }),
            vec![0.0, 0.0],
        );
        let traj = simulate(&sc).unwrap();
        // edge is (tail 1, head 0): rel = theta_0 - theta_1
        for (k, rel) in traj.relative.iter().enumerate() {
            assert!((rel[0] + 0.2 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn half_mask_step_matches_drawn_branch() {
        let sc = pair_scenario(
            UncertaintyModel::Bernoulli(BernoulliModel {
                p: 0.5,
                freq_const: vec![1.0, 2.0],
            }),
            vec![0.8, 0.1],
        );
        // replay the single uniform the step will consume
        let mut probe = sc.seed.stream(0);
        let on = probe.uniform() < 0.5;
        let mut stream = sc.seed.stream(0);
        let s0 = sc.initial_state(&mut stream);
        let s1 = step_random(&sc, &s0, &mut stream).unwrap();
        let a = if on { 1.0 } else { 0.0 };
        let want0 = 0.8 + 0.1 * 1.0 - 0.1 * a * (0.8f64 - 0.1).sin();
        let want1 = 0.1 + 0.1 * 2.0 - 0.1 * a * (0.1f64 - 0.8).sin();
        assert!((s1.phases[0] - want0).abs() < 1e-15);
        assert!((s1.phases[1] - want1).abs() < 1e-15);
    }

    #[test]
    fn step_kind_checks() {
        let sc = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.0), vec![0.0, 0.0]);
        let mut stream = sc.seed.stream(0);
        let s0 = sc.initial_state(&mut stream);
        assert!(step_random(&sc, &s0, &mut stream).is_err());
    }

    #[test]
    fn simulate_zero_steps_and_determinism() {
        let mut sc = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.0), vec![0.5, 0.0]);
        sc.steps = 0;
        let traj = simulate(&sc).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], vec![0.5, 0.0]);

        sc.steps = 200;
        sc.model = UncertaintyModel::Gaussian(GaussianUncertainty {
            edge_means: vec![1.0],
            edge_variance: 0.5,
            freq_const: vec![1.0, 2.0],
            freq_noise_means: vec![0.0, 0.0],
            freq_noise_variances: vec![1.0, 1.0],
        });
        assert_eq!(simulate(&sc).unwrap(), simulate(&sc).unwrap());
    }

    #[test]
    fn uniform_initializer_is_seeded() {
        let mut sc = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.0), vec![]);
        sc.initial = InitialPhases::UniformRandom;
        let a = sc.initial_state(&mut sc.seed.stream(0));
        let b = sc.initial_state(&mut sc.seed.stream(0));
        let c = sc.initial_state(&mut sc.seed.stream(1));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.phases.iter().all(|p| *p > -PI && *p <= PI));
    }

    #[test]
    fn scenario_validation() {
        let mut sc = pair_scenario(quiet_gaussian(2, 1, 1.0, 0.0), vec![0.0, 0.0]);
        sc.kappa = -1.0;
        assert!(sc
            .validate()
            .unwrap_err()
            .to_string()
            .contains("kappa must be positive"));
        sc.kappa = 1.0;
        sc.tau = 0.0;
        assert!(sc.validate().is_err());
        sc.tau = 0.1;
        sc.initial = InitialPhases::Explicit(vec![0.0]);
        assert!(matches!(sc.validate(), Err(Error::Dimension { .. })));
    }
}
