//! Scenario files, presets and the four commands behind the `phasecoh` binary.
//!
//! Scenario files are TOML; the grammar is documented in `SCENARIO_FORMAT.md`
//! next to this crate's manifest.

use std::io::Write;

use phasecoh::analysis::{
    estimate_recurrence_with, PhaseSetSpec, RecurrencePlan, ReturnTimeStats, SetKind, StartRule,
};
use phasecoh::bounds::{
    corollary1_ultimate, line_clustering_report, prop2_relaxed, theorem1_antiphase,
    theorem1_inphase, theorem3_random, BoundInputs, BoundsReport, MeanSigns,
};
use phasecoh::coupling::{
    check_assumption1, check_assumption1_prime, ArcPartition, CouplingSpec, Term,
    VerificationReport,
};
use phasecoh::dynamics::{simulate, InitialPhases, Scenario, Trajectory};
use phasecoh::graph::Graph;
use phasecoh::presets::{preset, PRESET_NAMES};
use phasecoh::stochastic::{
    BernoulliModel, GapMode, GaussianUncertainty, SeedPolicy, UncertaintyModel,
};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Model(#[from] phasecoh::Error),
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("unknown preset '{0}' (known: {known})", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit status for a successful command.
pub const EXIT_OK: u8 = 0;
/// Exit status for errors (bad input, I/O).
pub const EXIT_ERROR: u8 = 1;
/// Exit status for infeasible bounds or a failed assumption check.
pub const EXIT_NEGATIVE: u8 = 2;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    graph: GraphSection,
    coupling: CouplingSection,
    arcs: ArcsSection,
    kappa: f64,
    tau: f64,
    steps: usize,
    #[serde(default)]
    seed: u64,
    model: ModelSection,
    initial_phases: InitialSection,
    analysis: Option<AnalysisSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    nodes: usize,
    /// One-based `[tail, head]` pairs.
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    preset: Option<String>,
    terms: Option<Vec<TermSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSection {
    kind: String,
    amp: f64,
    freq: f64,
    #[serde(default)]
    phase: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcsSection {
    gamma: f64,
    gamma_max: Option<f64>,
    gamma_c: Option<f64>,
    psi_bar: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: String,
    edge_means: Option<Vec<f64>>,
    edge_variance: Option<f64>,
    freq_const: Vec<f64>,
    freq_noise_means: Option<Vec<f64>>,
    freq_noise_variances: Option<Vec<f64>>,
    p: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InitialSection {
    Explicit(Vec<f64>),
    Keyword(String),
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub set: Option<String>,
    pub tolerance: Option<f64>,
    pub trials: Option<usize>,
    pub horizon: Option<usize>,
    pub burn_in: Option<usize>,
    pub start: Option<String>,
    pub pilot_steps: Option<usize>,
}

/// A scenario plus the Monte Carlo settings that travel with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub name: String,
    pub scenario: Scenario,
    pub analysis: AnalysisSection,
    pub default_set: SetKind,
}

fn parse_set_kind(s: &str) -> Result<SetKind> {
    match s {
        "in_phase" => Ok(SetKind::InPhase),
        "anti_phase" => Ok(SetKind::AntiPhase),
        "union" => Ok(SetKind::Union),
        "relaxed" => Ok(SetKind::Relaxed),
        "origin" => Ok(SetKind::Origin),
        other => Err(CliError::Parse(format!(
            "analysis.set: unknown set '{other}' (expected in_phase, anti_phase, union, relaxed or origin)"
        ))),
    }
}

fn missing(key: &str, kind: &str) -> CliError {
    CliError::Parse(format!(
        "model.{key} is required when model.kind = \"{kind}\""
    ))
}

fn unexpected(key: &str, kind: &str) -> CliError {
    CliError::Parse(format!(
        "model.{key} is not allowed when model.kind = \"{kind}\""
    ))
}

/// Parses and validates a TOML scenario document.
pub fn parse_scenario(text: &str) -> Result<Loaded> {
    let f: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;

    let edges: Vec<(usize, usize)> = f.graph.edges.iter().map(|e| (e[0], e[1])).collect();
    let graph = Graph::from_one_based(f.graph.nodes, &edges)?;

    let coupling = match (&f.coupling.preset, &f.coupling.terms) {
        (Some(p), None) => match p.as_str() {
            "odd" => CouplingSpec::benchmark_odd(),
            "relaxed" => CouplingSpec::benchmark_relaxed(),
            "sine" => CouplingSpec::sine(),
            other => {
                return Err(CliError::Parse(format!(
                    "coupling.preset: unknown coupling '{other}' (expected odd, relaxed or sine)"
                )))
            }
        },
        (None, Some(terms)) => {
            let terms = terms
                .iter()
                .enumerate()
                .map(|(i, t)| match t.kind.as_str() {
                    "sin" => Ok(Term {
                        phase: t.phase,
                        ..Term::sin(t.amp, t.freq)
                    }),
                    "cos" => Ok(Term::cos(t.amp, t.freq, t.phase)),
                    other => Err(CliError::Parse(format!(
                        "coupling.terms[{i}].kind: expected sin or cos, got '{other}'"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            CouplingSpec::new(terms)?
        }
        _ => {
            return Err(CliError::Parse(
                "coupling: give exactly one of `preset` or `terms`".into(),
            ))
        }
    };

    let a = &f.arcs;
    let gamma_max = match a.gamma_max {
        Some(g) => g,
        None => ArcPartition::level_matched(&coupling, a.gamma, a.gamma + 1e-3)?.gamma_max,
    };
    let arcs = ArcPartition::relaxed(a.gamma, gamma_max, a.gamma_c, a.psi_bar)?;

    let m = f.model;
    let model = match m.kind.as_str() {
        "gaussian" => {
            if m.p.is_some() {
                return Err(unexpected("p", "gaussian"));
            }
            UncertaintyModel::Gaussian(GaussianUncertainty {
                edge_means: m
                    .edge_means
                    .ok_or_else(|| missing("edge_means", "gaussian"))?,
                edge_variance: m
                    .edge_variance
                    .ok_or_else(|| missing("edge_variance", "gaussian"))?,
                freq_noise_means: m
                    .freq_noise_means
                    .unwrap_or_else(|| vec![0.0; m.freq_const.len()]),
                freq_noise_variances: m
                    .freq_noise_variances
                    .unwrap_or_else(|| vec![0.0; m.freq_const.len()]),
                freq_const: m.freq_const,
            })
        }
        "bernoulli" => {
            for (key, present) in [
                ("edge_means", m.edge_means.is_some()),
                ("edge_variance", m.edge_variance.is_some()),
                ("freq_noise_means", m.freq_noise_means.is_some()),
                ("freq_noise_variances", m.freq_noise_variances.is_some()),
            ] {
                if present {
                    return Err(unexpected(key, "bernoulli"));
                }
            }
            UncertaintyModel::Bernoulli(BernoulliModel {
                p: m.p.ok_or_else(|| missing("p", "bernoulli"))?,
                freq_const: m.freq_const,
            })
        }
        other => {
            return Err(CliError::Parse(format!(
                "model.kind: expected gaussian or bernoulli, got '{other}'"
            )))
        }
    };

    let initial = match f.initial_phases {
        InitialSection::Explicit(v) => InitialPhases::Explicit(v),
        InitialSection::Keyword(k) if k == "uniform_random" => InitialPhases::UniformRandom,
        InitialSection::Keyword(k) => {
            return Err(CliError::Parse(format!(
                "initial_phases: expected a list of radians or \"uniform_random\", got '{k}'"
            )))
        }
    };

    let scenario = Scenario {
        graph,
        coupling,
        arcs,
        kappa: f.kappa,
        tau: f.tau,
        model,
        initial,
        steps: f.steps,
        seed: SeedPolicy::new(f.seed),
    };
    scenario.validate()?;

    let analysis = f.analysis.unwrap_or_default();
    let default_set = match &analysis.set {
        Some(s) => parse_set_kind(s)?,
        None if arcs.gamma_c.is_some() => SetKind::Relaxed,
        None => SetKind::InPhase,
    };
    Ok(Loaded {
        name: "scenario".into(),
        scenario,
        analysis,
        default_set,
    })
}

/// A built-in preset with the Monte Carlo settings used for it.
pub fn load_preset(name: &str) -> Result<Loaded> {
    let p = preset(name).ok_or_else(|| CliError::UnknownPreset(name.to_string()))?;
    let tolerance = if p.set == SetKind::Origin { 0.01 } else { 0.05 };
    let horizon = p.scenario.steps;
    Ok(Loaded {
        name: p.name.to_string(),
        analysis: AnalysisSection {
            tolerance: Some(tolerance),
            horizon: Some(horizon),
            ..AnalysisSection::default()
        },
        scenario: p.scenario,
        default_set: p.set,
    })
}

pub fn load_file(path: &str) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })?;
    let mut l = parse_scenario(&text)?;
    l.name = path.to_string();
    Ok(l)
}

/// Nine significant digits.
fn num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_trajectory_csv(
    w: &mut dyn Write,
    g: &Graph,
    traj: &Trajectory,
) -> std::io::Result<()> {
    let mut header = vec!["step".to_string()];
    header.extend((1..=g.node_count()).map(|i| format!("theta_{i}")));
    header.extend(
        g.edges()
            .iter()
            .map(|(t, h)| format!("rel_{}_{}", t + 1, h + 1)),
    );
    header.push("max_rel".into());
    writeln!(w, "{}", header.join(","))?;
    for k in 0..traj.len() {
        let mut row = vec![k.to_string()];
        row.extend(traj.states[k].iter().map(|&x| num(x)));
        row.extend(traj.relative[k].iter().map(|&x| num(x)));
        row.push(num(traj.max_relative[k]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn run_simulate(l: &Loaded, w: &mut dyn Write) -> Result<()> {
    let traj = simulate(&l.scenario)?;
    write_trajectory_csv(w, &l.scenario.graph, &traj).map_err(|source| CliError::Io {
        path: "<output>".into(),
        source,
    })
}

/// Every bound that applies to the scenario's model, coupling and sign pattern.
pub fn scenario_bounds(sc: &Scenario, mode: GapMode) -> Result<Vec<BoundsReport>> {
    let x = BoundInputs::derive(&sc.graph, &sc.coupling, &sc.arcs, &sc.model, mode)?;
    let k = Some(sc.kappa);
    let mut out = Vec::new();
    match &sc.model {
        UncertaintyModel::Bernoulli(m) => out.push(theorem3_random(&x, m.p, k)),
        UncertaintyModel::Gaussian(_) => {
            if let (Some(_), Some(psi_bar)) = (sc.arcs.gamma_c, sc.arcs.psi_bar) {
                out.push(prop2_relaxed(&x, psi_bar, k)?);
            } else {
                match x.mean_signs {
                    MeanSigns::AllPositive => {
                        out.push(theorem1_inphase(&x, k));
                        out.push(corollary1_ultimate(&x, sc.tau, k));
                    }
                    MeanSigns::AllNegative => out.push(theorem1_antiphase(&x, k)),
                    MeanSigns::Mixed => out.push(line_clustering_report(&x, sc.kappa)),
                }
            }
        }
    }
    Ok(out)
}

pub struct BoundsOutcome {
    pub text: String,
    pub flat: String,
    pub feasible: bool,
}

pub fn run_bounds(l: &Loaded, mode: GapMode) -> Result<BoundsOutcome> {
    let sc = &l.scenario;
    let reports = scenario_bounds(sc, mode)?;
    let mut text = format!(
        "scenario {}  (gap mode {mode}, kappa {}, tau {})\n",
        l.name, sc.kappa, sc.tau
    );
    let mut flat = format!("scenario={}\ngap_mode={mode}\n", l.name);
    for (i, r) in reports.iter().enumerate() {
        text.push_str(&r.to_string());
        if let Some(t) = r.tau_max {
            let verdict = if sc.tau <= t {
                "admissible"
            } else {
                "exceeds tau_max"
            };
            text.push_str(&format!(
                "  {:<18} {} ({verdict})\n",
                "scenario tau", sc.tau
            ));
        }
        for line in r.to_flat().lines() {
            flat.push_str(&format!("report.{i}.{line}\n"));
        }
    }
    Ok(BoundsOutcome {
        text,
        flat,
        feasible: reports.iter().all(|r| r.feasible),
    })
}

/// Monte Carlo plan from the scenario's analysis block, with command-line overrides.
pub fn recurrence_plan(
    l: &Loaded,
    trials: Option<usize>,
    horizon: Option<usize>,
) -> Result<RecurrencePlan> {
    let a = &l.analysis;
    let kind = match &a.set {
        Some(s) => parse_set_kind(s)?,
        None => l.default_set,
    };
    let set = PhaseSetSpec::from_arcs(kind, &l.scenario.arcs)?
        .with_tolerance(a.tolerance.unwrap_or(0.0))?;
    let horizon = horizon.or(a.horizon).unwrap_or(l.scenario.steps);
    // default window: the final quarter of the horizon
    let burn_in = a.burn_in.unwrap_or(horizon - horizon / 4);
    let start = match a.start.as_deref() {
        None | Some("initial") => StartRule::Initial,
        Some("first_exit") => StartRule::FirstExit {
            pilot_steps: a.pilot_steps.unwrap_or(horizon),
        },
        Some(other) => {
            return Err(CliError::Parse(format!(
                "analysis.start: expected initial or first_exit, got '{other}'"
            )))
        }
    };
    Ok(RecurrencePlan {
        set,
        trials: trials.or(a.trials).unwrap_or(200),
        horizon,
        burn_in,
        start,
    })
}

pub fn write_montecarlo_csv(
    w: &mut dyn Write,
    plan: &RecurrencePlan,
    st: &ReturnTimeStats,
) -> std::io::Result<()> {
    writeln!(w, "trial,returned,return_time,occupancy")?;
    for r in &st.records {
        let t = r.return_time.map_or_else(String::new, |t| t.to_string());
        let occ = if r.occupancy.is_nan() {
            String::new()
        } else {
            num(r.occupancy)
        };
        writeln!(w, "{},{},{},{}", r.trial, u8::from(r.returned), t, occ)?;
    }
    writeln!(
        w,
        "# set={:?} tolerance={}",
        plan.set.kind, plan.set.tolerance
    )?;
    writeln!(
        w,
        "# trials={} horizon={} burn_in={}",
        st.trials, st.horizon, plan.burn_in
    )?;
    writeln!(w, "# returned={} censored={}", st.returned, st.censored)?;
    writeln!(
        w,
        "# return_probability_estimate={} (finite horizon {})",
        num(st.return_probability_estimate),
        st.horizon
    )?;
    match st.mean_return_time {
        Some(m) => writeln!(w, "# mean_return_time={}", num(m))?,
        None => writeln!(w, "# mean_return_time=none")?,
    }
    let occ: Vec<f64> = st
        .records
        .iter()
        .map(|r| r.occupancy)
        .filter(|o| !o.is_nan())
        .collect();
    if !occ.is_empty() {
        let mean = occ.iter().sum::<f64>() / occ.len() as f64;
        let min = occ.iter().cloned().fold(f64::INFINITY, f64::min);
        writeln!(
            w,
            "# occupancy_mean={} occupancy_min={}",
            num(mean),
            num(min)
        )?;
    }
    Ok(())
}

pub fn run_montecarlo(
    l: &Loaded,
    plan: &RecurrencePlan,
    w: &mut dyn Write,
) -> Result<ReturnTimeStats> {
    let st = estimate_recurrence_with(&l.scenario, plan)?;
    write_montecarlo_csv(w, plan, &st).map_err(|source| CliError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(st)
}

pub fn run_verify(l: &Loaded) -> Result<VerificationReport> {
    let sc = &l.scenario;
    if sc.arcs.gamma_c.is_some() {
        Ok(check_assumption1_prime(&sc.coupling, &sc.arcs)?)
    } else {
        Ok(check_assumption1(&sc.coupling, &sc.arcs))
    }
}
