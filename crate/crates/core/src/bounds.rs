//! Closed-form sufficient conditions on the coupling gain `kappa` and the
//! sampling time `tau`.
//!
//! Every calculator works from a [`BoundInputs`] record, so the same formulas
//! can be fed either values derived from a scenario ([`BoundInputs::derive`])
//! or externally supplied figures. Infeasible inputs produce a report with
//! `feasible == false` and a diagnosis instead of an error.

use std::f64::consts::PI;
use std::fmt;

use crate::coupling::{psi_max, ArcPartition, CouplingSpec};
use crate::error::{Error, Result};
use crate::graph::{edge_laplacian, min_spanning_tree_eigenvalue, symmetric_eigenvalues, Graph};
use crate::stochastic::{
    constant_gap, max_expected_freq_gap, max_mean_freq_gap, noise_gap_term, GapMode,
    UncertaintyModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanSigns {
    AllPositive,
    AllNegative,
    Mixed,
}

/// Scalar ingredients shared by the bound formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    /// `E_max |delta omega|`.
    pub e_max_gap: f64,
    /// `max |E[delta omega]|`, used by the signed variant of the anti-phase bound.
    pub e_max_mean_gap: f64,
    /// Smallest `|edge mean|`.
    pub mu_min: f64,
    /// Largest `|edge mean|`.
    pub mu_max: f64,
    /// `sqrt(2 sigma^2 / pi)`.
    pub noise_term: f64,
    /// `|Psi(gamma)|`.
    pub psi_gamma: f64,
    pub psi_max: f64,
    /// Smallest edge-Laplacian eigenvalue over all spanning trees.
    pub lambda_min_tree: f64,
    /// Largest edge-Laplacian eigenvalue of the full graph.
    pub lambda_max_edge: f64,
    pub gamma: f64,
    pub gamma_max: f64,
    pub edges: usize,
    pub max_degree: usize,
    pub is_tree: bool,
    pub is_line: bool,
    pub has_odd_cycle: bool,
    pub mean_signs: MeanSigns,
}

impl BoundInputs {
    /// Derives every ingredient from the graph, coupling, arcs and model.
    /// Bernoulli models get unit means and no noise term.
    pub fn derive(
        g: &Graph,
        coupling: &CouplingSpec,
        arcs: &ArcPartition,
        model: &UncertaintyModel,
        mode: GapMode,
    ) -> Result<Self> {
        model.validate(g)?;
        let lambda_min_tree = min_spanning_tree_eigenvalue(g)?;
        let lambda_max_edge = symmetric_eigenvalues(&edge_laplacian(g))?.lambda_max;
        let (e_max_gap, e_max_mean_gap, mu_min, mu_max, noise_term, mean_signs) = match model {
            UncertaintyModel::Gaussian(m) => {
                let (lo, hi) = m.abs_mean_range();
                let signs = if m.edge_means.iter().all(|&x| x > 0.0) {
                    MeanSigns::AllPositive
                } else if m.edge_means.iter().all(|&x| x < 0.0) {
                    MeanSigns::AllNegative
                } else {
                    MeanSigns::Mixed
                };
                (
                    max_expected_freq_gap(m, g, mode)?,
                    max_mean_freq_gap(m, g, mode),
                    lo,
                    hi,
                    noise_gap_term(m.edge_variance),
                    signs,
                )
            }
            UncertaintyModel::Bernoulli(m) => {
                let gap = constant_gap(&m.freq_const, g, mode);
                (gap, gap, 1.0, 1.0, 0.0, MeanSigns::AllPositive)
            }
        };
        Ok(Self {
            e_max_gap,
            e_max_mean_gap,
            mu_min,
            mu_max,
            noise_term,
            psi_gamma: coupling.evaluate(arcs.gamma).abs(),
            psi_max: psi_max(coupling),
            lambda_min_tree,
            lambda_max_edge,
            gamma: arcs.gamma,
            gamma_max: arcs.gamma_max,
            edges: g.edge_count(),
            max_degree: g.max_degree(),
            is_tree: g.is_tree(),
            is_line: g.is_line(),
            has_odd_cycle: g.has_odd_cycle(),
            mean_signs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Which set or regime the bound certifies.
    pub target: &'static str,
    /// Gain at which `tau_max` was evaluated.
    pub kappa: Option<f64>,
    pub kappa_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub feasible: bool,
    pub intermediates: Vec<(&'static str, f64)>,
    pub diagnostics: Vec<String>,
    pub warnings: Vec<String>,
}

impl BoundsReport {
    fn new(target: &'static str) -> Self {
        Self {
            target,
            kappa: None,
            kappa_min: None,
            tau_max: None,
            feasible: true,
            intermediates: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn note(&mut self, key: &'static str, value: f64) {
        self.intermediates.push((key, value));
    }

    fn infeasible(&mut self, why: String) {
        self.feasible = false;
        self.diagnostics.push(why);
    }

    pub fn intermediate(&self, key: &str) -> Option<f64> {
        self.intermediates
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
    }

    /// Flat `key=value` lines, one per field and intermediate.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.12e}"));
        out.push_str(&format!("target={}\n", self.target));
        out.push_str(&format!("feasible={}\n", self.feasible));
        out.push_str(&format!("kappa_min={}\n", opt(self.kappa_min)));
        out.push_str(&format!("kappa={}\n", opt(self.kappa)));
        out.push_str(&format!("tau_max={}\n", opt(self.tau_max)));
        for (k, v) in &self.intermediates {
            out.push_str(&format!("{k}={v:.12e}\n"));
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            out.push_str(&format!("diagnostic.{i}={d}\n"));
        }
        for (i, w) in self.warnings.iter().enumerate() {
            out.push_str(&format!("warning.{i}={w}\n"));
        }
        out
    }

    fn set_tau(&mut self, kappa: Option<f64>, tau_of: impl Fn(f64) -> f64) {
        let k = match (kappa, self.kappa_min) {
            (Some(k), _) => k,
            (None, Some(k)) if k > 0.0 => k,
            _ => return,
        };
        if let (Some(given), Some(min)) = (kappa, self.kappa_min) {
            if given <= min {
                self.warnings.push(format!(
                    "kappa {given} does not exceed the sufficient bound {min:.6}"
                ));
            }
        }
        self.kappa = Some(k);
        self.tau_max = Some(tau_of(k));
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        writeln!(f, "[{}]", self.target)?;
        writeln!(f, "  {:<18} {}", "feasible", self.feasible)?;
        writeln!(f, "  {:<18} {}", "kappa_min", opt(self.kappa_min))?;
        writeln!(f, "  {:<18} {}", "kappa", opt(self.kappa))?;
        writeln!(f, "  {:<18} {}", "tau_max", opt(self.tau_max))?;
        for (k, v) in &self.intermediates {
            writeln!(f, "  {k:<18} {v:.6}")?;
        }
        for d in &self.diagnostics {
            writeln!(f, "  infeasible: {d}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

fn common_intermediates(r: &mut BoundsReport, x: &BoundInputs) {
    r.note("e_max_gap", x.e_max_gap);
    r.note("mu_m", x.mu_min);
    r.note("mu_M", x.mu_max);
    r.note("sqrt_term", x.noise_term);
    r.note("psi_gamma", x.psi_gamma);
    r.note("psi_max", x.psi_max);
    r.note("lambda_min_tree", x.lambda_min_tree);
    r.note("lambda_max_edge", x.lambda_max_edge);
}

/// Return to the in-phase set under positive edge means.
pub fn theorem1_inphase(x: &BoundInputs, kappa: Option<f64>) -> BoundsReport {
    let mut r = BoundsReport::new("in_phase");
    common_intermediates(&mut r, x);
    r.note("max_degree", x.max_degree as f64);
    let margin = x.mu_min - x.noise_term;
    r.note("mu_margin", margin);
    if x.mean_signs != MeanSigns::AllPositive {
        r.infeasible("in-phase bound needs every edge mean positive".into());
    }
    if margin <= 0.0 {
        r.infeasible(format!(
            "mu_m {:.6} does not exceed sqrt(2 sigma^2/pi) {:.6} (short by {:.6})",
            x.mu_min, x.noise_term, -margin
        ));
    }
    if !r.feasible {
        return r;
    }
    r.kappa_min = Some(x.e_max_gap / (margin * x.psi_gamma * x.lambda_min_tree));
    let denom_gain = (x.mu_max + x.noise_term) * x.psi_max * x.lambda_max_edge;
    r.set_tau(kappa, |k| x.gamma / (k * denom_gain + x.e_max_gap));
    r
}

/// Return to the anti-phase set under negative edge means.
pub fn theorem1_antiphase(x: &BoundInputs, kappa: Option<f64>) -> BoundsReport {
    let mut r = BoundsReport::new("anti_phase");
    common_intermediates(&mut r, x);
    r.note("e_max_mean_gap", x.e_max_mean_gap);
    if x.mean_signs != MeanSigns::AllNegative {
        r.infeasible("anti-phase bound needs every edge mean negative".into());
        return r;
    }
    let denom = x.psi_gamma * x.mu_min * x.lambda_min_tree;
    r.kappa_min = Some(x.e_max_gap / denom);
    r.note("kappa_min_mean_gap", x.e_max_mean_gap / denom);
    if x.has_odd_cycle && x.gamma_max > PI / 2.0 {
        r.warnings.push(format!(
            "graph has an odd cycle and gamma_max {:.6} > pi/2: not every relative phase can reach the anti-phase arc",
            x.gamma_max
        ));
    }
    let gain = x.psi_max * x.mu_max * x.lambda_max_edge;
    r.set_tau(kappa, |k| (PI - x.gamma_max) / (k * gain + x.e_max_gap));
    r
}

/// Ultimate (bounded mean return time) variant of the in-phase bound at sampling time `tau`.
pub fn corollary1_ultimate(x: &BoundInputs, tau: f64, kappa: Option<f64>) -> BoundsReport {
    let mut r = BoundsReport::new("ultimate_in_phase");
    common_intermediates(&mut r, x);
    r.note("tau", tau);
    let margin = x.mu_min - x.noise_term;
    r.note("mu_margin", margin);
    let numerator = x.gamma - 1.0 / (x.edges as f64 * x.psi_max);
    r.note("tau_numerator", numerator);
    if x.mean_signs != MeanSigns::AllPositive {
        r.infeasible("ultimate bound needs every edge mean positive".into());
    }
    if margin <= 0.0 {
        r.infeasible(format!(
            "mu_m {:.6} does not exceed sqrt(2 sigma^2/pi) {:.6}",
            x.mu_min, x.noise_term
        ));
    }
    if numerator <= 0.0 {
        r.infeasible(format!(
            "gamma {:.6} does not exceed 1/(m psi_max) {:.6}",
            x.gamma,
            x.gamma - numerator
        ));
    }
    if !(tau > 0.0) {
        r.infeasible(format!("tau must be positive, got {tau}"));
    }
    if !r.feasible {
        return r;
    }
    r.kappa_min = Some(
        (1.0 / (tau * x.psi_gamma) + x.e_max_gap) / (margin * x.psi_gamma * x.lambda_min_tree),
    );
    let gain = (x.mu_max + x.noise_term) * x.psi_max * x.lambda_max_edge;
    r.set_tau(kappa, |k| numerator / (k * gain + x.e_max_gap));
    r
}

/// Sampling-time bound for a line graph whose edge means are `+-lambda`.
pub fn prop1_line_clustering(kappa: f64, lambda: f64, psi_max: f64, gamma: f64) -> Result<f64> {
    for (name, v) in [
        ("kappa", kappa),
        ("lambda", lambda),
        ("psi_max", psi_max),
        ("gamma", gamma),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(gamma / (2.0 * kappa * lambda * psi_max))
}

/// Report wrapper around [`prop1_line_clustering`] for mixed-sign means on a line.
pub fn line_clustering_report(x: &BoundInputs, kappa: f64) -> BoundsReport {
    let mut r = BoundsReport::new("line_clustering");
    common_intermediates(&mut r, x);
    if !x.is_line {
        r.infeasible("clustering bound needs a line graph".into());
        return r;
    }
    if (x.mu_max - x.mu_min).abs() > 1e-12 {
        r.warnings.push(format!(
            "edge means differ in magnitude ({:.6} to {:.6}); using the largest",
            x.mu_min, x.mu_max
        ));
    }
    if x.e_max_mean_gap > 0.0 {
        r.warnings
            .push("clustering bound assumes zero mean frequency differences".into());
    }
    r.kappa_min = Some(0.0);
    r.kappa = Some(kappa);
    match prop1_line_clustering(kappa, x.mu_max, x.psi_max, x.gamma) {
        Ok(t) => r.tau_max = Some(t),
        Err(e) => r.infeasible(e.to_string()),
    }
    r
}

/// Bound for a non-odd coupling on a tree. `x.psi_gamma` is `|Psi_r(gamma)|`.
pub fn prop2_relaxed(x: &BoundInputs, psi_bar: f64, kappa: Option<f64>) -> Result<BoundsReport> {
    if !x.is_tree {
        return Err(Error::Parameter(
            "relaxed-coupling bound needs a tree graph".into(),
        ));
    }
    let mut r = BoundsReport::new("relaxed_coupling");
    common_intermediates(&mut r, x);
    r.note("psi_bar", psi_bar);
    let root = ((x.edges as f64) - 1.0).sqrt();
    let l1 = x.mu_min * x.psi_gamma;
    let l2 = x.mu_max * psi_bar;
    let lhat = l1 - l2 * root;
    r.note("lambda_hat_1", l1);
    r.note("lambda_hat_2", l2);
    r.note("lambda_hat", lhat);
    if x.mean_signs != MeanSigns::AllPositive {
        r.infeasible("relaxed-coupling bound needs every edge mean positive".into());
    }
    if lhat <= 0.0 {
        r.infeasible(format!("lambda_hat {lhat:.6} is not positive"));
    }
    if !r.feasible {
        return Ok(r);
    }
    let m1 = (x.edges as f64) - 1.0;
    r.kappa_min =
        Some((l1 + l2 * m1) * x.e_max_gap / (lhat * x.lambda_min_tree * (l1 + l2 * root)));
    let gain = x.psi_max * x.lambda_max_edge * x.mu_max;
    r.set_tau(kappa, |k| x.gamma / (k * gain + x.e_max_gap));
    Ok(r)
}

/// Bound for the Bernoulli random network with link probability `p`.
/// `x.e_max_gap` is the constant-frequency gap.
pub fn theorem3_random(x: &BoundInputs, p: f64, kappa: Option<f64>) -> BoundsReport {
    let mut r = BoundsReport::new("random_network");
    r.note("delta_max_omega", x.e_max_gap);
    r.note("p", p);
    r.note("psi_gamma", x.psi_gamma);
    r.note("psi_max", x.psi_max);
    r.note("lambda_min_tree", x.lambda_min_tree);
    r.note("lambda_max_edge", x.lambda_max_edge);
    if !(0.0..=1.0).contains(&p) {
        r.infeasible(format!("p must lie in [0, 1], got {p}"));
        return r;
    }
    if x.e_max_gap == 0.0 {
        // identical frequencies: cohesion towards the origin for any kappa > 0
        r.kappa_min = Some(0.0);
        if p == 0.0 {
            r.warnings.push("p = 0: the network never couples".into());
        }
    } else if p == 0.0 {
        r.infeasible("p = 0 with distinct frequencies".into());
        return r;
    } else {
        r.kappa_min = Some(x.e_max_gap / (x.psi_gamma * p * x.lambda_min_tree));
    }
    let gain = x.psi_max * x.lambda_max_edge;
    r.set_tau(kappa, |k| x.gamma / (k * gain + x.e_max_gap));
    r
}
