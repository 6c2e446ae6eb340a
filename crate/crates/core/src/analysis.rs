//! Monte Carlo diagnostics: set membership, first-return times, recurrence
//! estimates, occupancy, one-step Lyapunov drift and cluster labels.
//!
//! Every estimate is tagged with the finite horizon or sample count it was
//! computed from. A return probability of 1.0 over a horizon says nothing
//! about the infinite-horizon chain.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::coupling::{ArcPartition, CouplingSpec};
use crate::dynamics::{max_abs, relative_of, step, wrap, PhaseState, Scenario, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    /// Every `|rel|` in `[0, gamma]`.
    InPhase,
    /// Every `|rel|` in `[gamma_max, pi]`.
    AntiPhase,
    /// Every `|rel|` in either of the two arcs above.
    Union,
    /// Every `|rel|` in `[0, gamma_c] ∪ [gamma_c, gamma]`.
    Relaxed,
    /// Every `|rel|` within the tolerance of zero.
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSetSpec {
    pub kind: SetKind,
    pub gamma: f64,
    pub gamma_max: f64,
    pub gamma_c: Option<f64>,
    /// Widens every arc by this many radians.
    pub tolerance: f64,
}

fn check_angle(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < PI {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must lie in (0, pi), got {v}"
        )))
    }
}

impl PhaseSetSpec {
    pub fn in_phase(gamma: f64) -> Result<Self> {
        check_angle("gamma", gamma)?;
        Ok(Self {
            kind: SetKind::InPhase,
            gamma,
            gamma_max: PI,
            gamma_c: None,
            tolerance: 0.0,
        })
    }

    pub fn anti_phase(gamma_max: f64) -> Result<Self> {
        check_angle("gamma_max", gamma_max)?;
        Ok(Self {
            kind: SetKind::AntiPhase,
            gamma: 0.0,
            gamma_max,
            gamma_c: None,
            tolerance: 0.0,
        })
    }

    pub fn union(gamma: f64, gamma_max: f64) -> Result<Self> {
        check_angle("gamma", gamma)?;
        check_angle("gamma_max", gamma_max)?;
        if gamma >= gamma_max {
            return Err(Error::Parameter(format!(
                "gamma {gamma} must be below gamma_max {gamma_max}"
            )));
        }
        Ok(Self {
            kind: SetKind::Union,
            gamma,
            gamma_max,
            gamma_c: None,
            tolerance: 0.0,
        })
    }

    pub fn relaxed(gamma_c: f64, gamma: f64) -> Result<Self> {
        check_angle("gamma", gamma)?;
        if !(gamma_c > 0.0 && gamma_c < gamma) {
            return Err(Error::Parameter(format!(
                "gamma_c must lie in (0, gamma), got {gamma_c}"
            )));
        }
        Ok(Self {
            kind: SetKind::Relaxed,
            gamma,
            gamma_max: PI,
            gamma_c: Some(gamma_c),
            tolerance: 0.0,
        })
    }

    pub fn origin(tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Parameter(format!(
                "tolerance must be non-negative, got {tolerance}"
            )));
        }
        Ok(Self {
            kind: SetKind::Origin,
            gamma: 0.0,
            gamma_max: PI,
            gamma_c: None,
            tolerance,
        })
    }

    /// Builds the set of the given kind from an arc partition.
    pub fn from_arcs(kind: SetKind, arcs: &ArcPartition) -> Result<Self> {
        match kind {
            SetKind::InPhase => Self::in_phase(arcs.gamma),
            SetKind::AntiPhase => Self::anti_phase(arcs.gamma_max),
            SetKind::Union => Self::union(arcs.gamma, arcs.gamma_max),
            SetKind::Relaxed => match arcs.gamma_c {
                Some(c) => Self::relaxed(c, arcs.gamma),
                None => Err(Error::Parameter("relaxed set needs gamma_c".into())),
            },
            SetKind::Origin => Self::origin(0.0),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Parameter(format!(
                "tolerance must be non-negative, got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    fn edge_in(&self, abs_rel: f64) -> bool {
        let t = self.tolerance;
        match self.kind {
            SetKind::InPhase | SetKind::Relaxed => abs_rel <= self.gamma + t,
            SetKind::AntiPhase => abs_rel >= self.gamma_max - t,
            SetKind::Union => abs_rel <= self.gamma + t || abs_rel >= self.gamma_max - t,
            SetKind::Origin => abs_rel <= t,
        }
    }
}

/// True iff every edge's `|rel|` lies in the set.
pub fn contains(set: &PhaseSetSpec, rel: &[f64]) -> bool {
    rel.iter().all(|r| set.edge_in(r.abs()))
}

/// Smallest `n >= 1` with the relative phases at index `n` inside the set.
pub fn first_return_time(traj: &Trajectory, set: &PhaseSetSpec) -> Option<usize> {
    traj.relative
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, rel)| contains(set, rel))
        .map(|(n, _)| n)
}

/// Fraction of trajectory indices `burn_in..len` inside the set.
pub fn occupancy_fraction(traj: &Trajectory, set: &PhaseSetSpec, burn_in: usize) -> Result<f64> {
    if burn_in >= traj.len() {
        return Err(Error::Parameter(format!(
            "burn_in {burn_in} must be below the trajectory length {}",
            traj.len()
        )));
    }
    let tail = &traj.relative[burn_in..];
    let inside = tail.iter().filter(|rel| contains(set, rel)).count();
    Ok(inside as f64 / tail.len() as f64)
}

/// Net number of times each edge's relative phase winds through `±pi`.
///
/// Increments between consecutive samples are taken on the circle, so a
/// value of `k` means the unwrapped relative phase moved by about `2 pi k`.
pub fn wrap_events(traj: &Trajectory) -> Vec<i64> {
    let m = traj.relative.first().map_or(0, Vec::len);
    (0..m)
        .map(|e| {
            let mut unwrapped = 0.0;
            for w in traj.relative.windows(2) {
                unwrapped += wrap(w[1][e] - w[0][e]);
            }
            let start = traj.relative[0][e];
            let lap = |x: f64| ((x + PI) / (2.0 * PI)).floor() as i64;
            lap(start + unwrapped) - lap(start)
        })
        .collect()
}

/// Sum with a running compensation term.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean and standard error, shifted by the first value so identical samples give exactly zero spread.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let mean_shift = neumaier_sum(xs.iter().map(|x| x - x0)) / n;
    let ss = neumaier_sum(xs.iter().map(|x| (x - x0 - mean_shift).powi(2)));
    let var = if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    (x0 + mean_shift, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartRule {
    /// The scenario's own initial phases (or its random draw).
    Initial,
    Explicit(Vec<f64>),
    /// Run a pilot from the initial phases until the chain enters the set
    /// and then leaves it; the return clock starts at the exit state.
    /// Trials with no exit within `pilot_steps` are counted as censored.
    FirstExit {
        pilot_steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrencePlan {
    pub set: PhaseSetSpec,
    pub trials: usize,
    pub horizon: usize,
    /// Occupancy ignores indices below this one.
    pub burn_in: usize,
    pub start: StartRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub returned: bool,
    pub return_time: Option<u64>,
    /// Occupancy of the set over indices `burn_in..=horizon`; NaN when censored.
    pub occupancy: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTimeStats {
    pub trials: usize,
    pub returned: usize,
    /// `returned / (trials - censored)`.
    pub return_probability_estimate: f64,
    pub return_times: Vec<u64>,
    pub mean_return_time: Option<f64>,
    pub horizon: usize,
    pub censored: usize,
    pub records: Vec<TrialRecord>,
}

/// Recurrence with the scenario's initial phases and no burn-in.
pub fn estimate_recurrence(
    sc: &Scenario,
    set: &PhaseSetSpec,
    trials: usize,
    horizon: usize,
) -> Result<ReturnTimeStats> {
    estimate_recurrence_with(
        sc,
        &RecurrencePlan {
            set: *set,
            trials,
            horizon,
            burn_in: 0,
            start: StartRule::Initial,
        },
    )
}

pub fn estimate_recurrence_with(sc: &Scenario, plan: &RecurrencePlan) -> Result<ReturnTimeStats> {
    sc.validate()?;
    if plan.trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    if plan.horizon == 0 || plan.burn_in > plan.horizon {
        return Err(Error::Parameter(format!(
            "need horizon >= 1 and burn_in <= horizon, got {} and {}",
            plan.horizon, plan.burn_in
        )));
    }
    if let StartRule::Explicit(p) = &plan.start {
        if p.len() != sc.graph.node_count() {
            return Err(Error::Dimension {
                what: "start phases",
                expected: sc.graph.node_count(),
                got: p.len(),
            });
        }
    }
    let records: Vec<TrialRecord> = (0..plan.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(sc, plan, trial))
        .collect();

    let censored = records.iter().filter(|r| r.censored).count();
    let return_times: Vec<u64> = records.iter().filter_map(|r| r.return_time).collect();
    let returned = return_times.len();
    let started = plan.trials - censored;
    let return_probability_estimate = if started == 0 {
        1.0
    } else {
        returned as f64 / started as f64
    };
    let mean_return_time = (returned > 0)
        .then(|| neumaier_sum(return_times.iter().map(|&t| t as f64)) / returned as f64);
    Ok(ReturnTimeStats {
        trials: plan.trials,
        returned,
        return_probability_estimate,
        return_times,
        mean_return_time,
        horizon: plan.horizon,
        censored,
        records,
    })
}

fn run_trial(sc: &Scenario, plan: &RecurrencePlan, trial: u64) -> TrialRecord {
    let mut stream = sc.seed.stream(trial);
    let mut state = match &plan.start {
        StartRule::Explicit(p) => PhaseState {
            phases: p.iter().map(|&x| wrap(x)).collect(),
            step: 0,
        },
        _ => sc.initial_state(&mut stream),
    };
    if let StartRule::FirstExit { pilot_steps } = plan.start {
        let mut entered = contains(&plan.set, &relative_of(&sc.graph, &state.phases));
        let mut exited = false;
        for _ in 0..pilot_steps {
            state = step(sc, &state, &mut stream);
            let inside = contains(&plan.set, &relative_of(&sc.graph, &state.phases));
            if entered && !inside {
                exited = true;
                break;
            }
            entered |= inside;
        }
        if !exited {
            return TrialRecord {
                trial,
                returned: false,
                return_time: None,
                occupancy: f64::NAN,
                censored: true,
            };
        }
        state.step = 0;
    }

    let mut return_time = None;
    let mut inside_count = 0usize;
    if plan.burn_in == 0 && contains(&plan.set, &relative_of(&sc.graph, &state.phases)) {
        inside_count += 1;
    }
    for n in 1..=plan.horizon {
        state = step(sc, &state, &mut stream);
        let inside = contains(&plan.set, &relative_of(&sc.graph, &state.phases));
        if inside && return_time.is_none() {
            return_time = Some(n as u64);
        }
        if inside && n >= plan.burn_in {
            inside_count += 1;
        }
    }
    let counted = plan.horizon + 1 - plan.burn_in;
    TrialRecord {
        trial,
        returned: return_time.is_some(),
        return_time,
        occupancy: inside_count as f64 / counted as f64,
        censored: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovMode {
    /// Distance to the in-phase set.
    InPhase,
    /// The same weights applied to `pi - |rel|`.
    AntiPhase,
}

/// Small positive weight for edges inside the lower arc: `|Psi(gamma / 100)|`.
pub fn default_psi_o(coupling: &CouplingSpec, arcs: &ArcPartition) -> f64 {
    coupling.evaluate(arcs.gamma / 100.0).abs()
}

/// Per-edge weights: `|Psi(gamma)|` in the middle arc, `psi_o` in the lower arc, 0 in the upper arc.
pub fn lyapunov_weights(
    rel: &[f64],
    arcs: &ArcPartition,
    coupling: &CouplingSpec,
    psi_o: f64,
) -> Vec<f64> {
    let psi_gamma = coupling.evaluate(arcs.gamma).abs();
    rel.iter()
        .map(|r| {
            let a = r.abs();
            if arcs.in_lower(a) {
                psi_o
            } else if arcs.in_middle(a) {
                psi_gamma
            } else {
                0.0
            }
        })
        .collect()
}

fn weighted(weights: &[f64], rel: &[f64], mode: LyapunovMode) -> f64 {
    neumaier_sum(weights.iter().zip(rel).map(|(w, r)| match mode {
        LyapunovMode::InPhase => w * r.abs(),
        LyapunovMode::AntiPhase => w * (PI - r.abs()),
    }))
}

pub fn lyapunov_value(
    rel: &[f64],
    arcs: &ArcPartition,
    coupling: &CouplingSpec,
    mode: LyapunovMode,
    psi_o: f64,
) -> f64 {
    weighted(&lyapunov_weights(rel, arcs, coupling, psi_o), rel, mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub state: Vec<f64>,
    pub samples: usize,
    pub v_now: f64,
    pub v_next_mean: f64,
    pub delta_v: f64,
    pub standard_error: f64,
}

/// One-step drift with the default `psi_o`.
pub fn estimate_drift(
    sc: &Scenario,
    state: &PhaseState,
    samples: usize,
    mode: LyapunovMode,
) -> Result<DriftEstimate> {
    estimate_drift_with(
        sc,
        state,
        samples,
        mode,
        default_psi_o(&sc.coupling, &sc.arcs),
    )
}

/// Mean of `V` over `samples` independent successors of `state`, minus `V(state)`.
///
/// The edge weights are fixed by the conditioning state, so the anti-phase
/// drift is exactly the negated in-phase drift.
pub fn estimate_drift_with(
    sc: &Scenario,
    state: &PhaseState,
    samples: usize,
    mode: LyapunovMode,
    psi_o: f64,
) -> Result<DriftEstimate> {
    sc.validate()?;
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "samples must be at least 2, got {samples}"
        )));
    }
    if state.phases.len() != sc.graph.node_count() {
        return Err(Error::Dimension {
            what: "state phases",
            expected: sc.graph.node_count(),
            got: state.phases.len(),
        });
    }
    let rel_now = relative_of(&sc.graph, &state.phases);
    let weights = lyapunov_weights(&rel_now, &sc.arcs, &sc.coupling, psi_o);
    let v_now = weighted(&weights, &rel_now, mode);
    let next: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = sc.seed.stream(i);
            let succ = step(sc, state, &mut stream);
            weighted(&weights, &relative_of(&sc.graph, &succ.phases), mode)
        })
        .collect();
    let (v_next_mean, standard_error) = mean_and_se(&next);
    Ok(DriftEstimate {
        state: state.phases.clone(),
        samples,
        v_now,
        v_next_mean,
        delta_v: v_next_mean - v_now,
        standard_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterLabel {
    InPhase,
    AntiPhase,
    Unresolved,
}

impl ClusterLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InPhase => "in_phase",
            Self::AntiPhase => "anti_phase",
            Self::Unresolved => "unresolved",
        }
    }
}

pub const CLUSTER_THRESHOLD: f64 = 0.9;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

/// Per-edge label with the default 90% threshold.
pub fn cluster_assignment(
    traj: &Trajectory,
    arcs: &ArcPartition,
    tail_fraction: f64,
) -> Result<Vec<ClusterLabel>> {
    cluster_assignment_with(traj, arcs, tail_fraction, CLUSTER_THRESHOLD)
}

/// Labels an edge by the arc holding more than `threshold` of its trailing samples.
pub fn cluster_assignment_with(
    traj: &Trajectory,
    arcs: &ArcPartition,
    tail_fraction: f64,
    threshold: f64,
) -> Result<Vec<ClusterLabel>> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    if traj.is_empty() {
        return Err(Error::Parameter("empty trajectory".into()));
    }
    let len = traj.len();
    let tail_len = ((len as f64 * tail_fraction).ceil() as usize).clamp(1, len);
    let tail = &traj.relative[len - tail_len..];
    let m = tail[0].len();
    Ok((0..m)
        .map(|e| {
            let lower = tail.iter().filter(|r| arcs.in_lower(r[e].abs())).count();
            let upper = tail.iter().filter(|r| arcs.in_upper(r[e].abs())).count();
            let n = tail_len as f64;
            if lower as f64 / n > threshold {
                ClusterLabel::InPhase
            } else if upper as f64 / n > threshold {
                ClusterLabel::AntiPhase
            } else {
                ClusterLabel::Unresolved
            }
        })
        .collect())
}

/// Largest `|rel|` at the final index.
pub fn final_max_relative(traj: &Trajectory) -> Option<f64> {
    traj.relative.last().map(|r| max_abs(r))
}

/// First index at which the largest `|rel|` drops below `level`.
pub fn first_below(traj: &Trajectory, level: f64) -> Option<usize> {
    traj.max_relative.iter().position(|&m| m < level)
}
