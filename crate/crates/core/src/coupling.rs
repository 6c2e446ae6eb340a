//! Coupling functions as finite trigonometric series and the arcs that split
//! `[0, pi]` into the in-phase, intermediate and anti-phase regions.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

const VERIFY_GRID: usize = 10_000;
const EXTREMUM_GRID: usize = 1_000_000;
const EQ_TOL: f64 = 1e-9;
const DOMINANCE_SLACK: f64 = 1e-12;
/// Tolerance on `|Psi(gamma)| = |Psi(gamma_max)|`.
pub const ARC_LEVEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Term {
    pub fn sin(amp: f64, freq: f64) -> Self {
        Self {
            kind: TermKind::Sin,
            amp,
            freq,
            phase: 0.0,
        }
    }

    pub fn cos(amp: f64, freq: f64, phase: f64) -> Self {
        Self {
            kind: TermKind::Cos,
            amp,
            freq,
            phase,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let arg = self.freq * x + self.phase;
        match self.kind {
            TermKind::Sin => self.amp * arg.sin(),
            TermKind::Cos => self.amp * arg.cos(),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        let arg = self.freq * x + self.phase;
        match self.kind {
            TermKind::Sin => self.amp * self.freq * arg.cos(),
            TermKind::Cos => -self.amp * self.freq * arg.sin(),
        }
    }
}

/// `Psi(x) = sum of amp * sin|cos(freq * x + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    terms: Vec<Term>,
}

impl CouplingSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter("coupling needs at least one term".into()));
        }
        for t in &terms {
            for v in [t.amp, t.freq, t.phase] {
                if !v.is_finite() {
                    return Err(Error::NonFinite(v));
                }
            }
        }
        Ok(Self { terms })
    }

    /// `sin(x) + 0.3 sin(3x)`.
    pub fn benchmark_odd() -> Self {
        Self::new(vec![Term::sin(1.0, 1.0), Term::sin(0.3, 3.0)]).unwrap()
    }

    /// `1.5 sin(1.1x) - 0.7 cos(3.3x - 0.4 pi)`.
    pub fn benchmark_relaxed() -> Self {
        Self::new(vec![Term::sin(1.5, 1.1), Term::cos(-0.7, 3.3, -0.4 * PI)]).unwrap()
    }

    pub fn sine() -> Self {
        Self::new(vec![Term::sin(1.0, 1.0)]).unwrap()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.deriv(x)).sum()
    }

    pub fn has_integer_frequencies(&self) -> bool {
        self.terms.iter().all(|t| t.freq.fract() == 0.0)
    }

    /// `max |Psi|` on `[-pi, pi]` and an angle attaining it.
    pub fn abs_max(&self) -> (f64, f64) {
        self.abs_max_on(-PI, PI)
    }

    /// `max |Psi|` on `[lo, hi]`: dense grid, then golden-section refinement
    /// around the best grid point.
    pub fn abs_max_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let f = |x: f64| self.evaluate(x).abs();
        if hi <= lo {
            return (f(lo), lo);
        }
        let h = (hi - lo) / EXTREMUM_GRID as f64;
        let mut best_i = 0;
        let mut best = f(lo);
        for i in 1..=EXTREMUM_GRID {
            let v = f(lo + h * i as f64);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let mut a = (lo + h * (best_i as f64 - 1.0)).max(lo);
        let mut b = (lo + h * (best_i as f64 + 1.0)).min(hi);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-10 {
            let c = b - inv_phi * (b - a);
            let d = a + inv_phi * (b - a);
            if f(c) >= f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        let v = f(x);
        if v >= best {
            (v, x)
        } else {
            (best, lo + h * best_i as f64)
        }
    }

    /// Finds `x` in `[lo, hi]` with `|Psi(x)| = level` by bisection. The bracket
    /// must straddle the level.
    pub fn solve_abs_level(&self, level: f64, lo: f64, hi: f64) -> Result<f64> {
        let g = |x: f64| self.evaluate(x).abs() - level;
        let (mut a, mut b) = (lo, hi);
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            return Ok(a);
        }
        if gb == 0.0 {
            return Ok(b);
        }
        if ga.signum() == gb.signum() {
            return Err(Error::Parameter(format!(
                "level {level} is not bracketed on [{lo}, {hi}]"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let gm = g(mid);
            if gm == 0.0 || b - a < 1e-15 {
                return Ok(mid);
            }
            if gm.signum() == ga.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

impl fmt::Display for CouplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let name = match t.kind {
                TermKind::Sin => "sin",
                TermKind::Cos => "cos",
            };
            write!(f, "{}*{}({}x{:+})", t.amp, name, t.freq, t.phase)?;
        }
        Ok(())
    }
}

/// `max |Psi|` over `[-pi, pi]`.
pub fn psi_max(spec: &CouplingSpec) -> f64 {
    spec.abs_max().0
}

/// Arc boundaries. In-phase arc `[0, gamma]`, intermediate arc
/// `(gamma, gamma_max)`, anti-phase arc `[gamma_max, pi]`. The relaxed case
/// adds `gamma_c` and the bound `psi_bar` on `|Psi_r|` over `[-gamma_c, gamma_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPartition {
    pub gamma: f64,
    pub gamma_max: f64,
    pub gamma_c: Option<f64>,
    pub psi_bar: Option<f64>,
}

impl ArcPartition {
    pub fn new(gamma: f64, gamma_max: f64) -> Result<Self> {
        Self::relaxed(gamma, gamma_max, None, None)
    }

    pub fn relaxed(
        gamma: f64,
        gamma_max: f64,
        gamma_c: Option<f64>,
        psi_bar: Option<f64>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < gamma_max && gamma_max < PI) {
            return Err(Error::Parameter(format!(
                "arcs need 0 < gamma < gamma_max < pi, got gamma={gamma}, gamma_max={gamma_max}"
            )));
        }
        if let Some(gc) = gamma_c {
            if !(gc > 0.0 && gc < gamma) {
                return Err(Error::Parameter(format!(
                    "gamma_c must lie in (0, gamma), got {gc}"
                )));
            }
        }
        if let Some(pb) = psi_bar {
            if !(pb.is_finite() && pb >= 0.0) {
                return Err(Error::Parameter(format!("psi_bar must be >= 0, got {pb}")));
            }
        }
        Ok(Self {
            gamma,
            gamma_max,
            gamma_c,
            psi_bar,
        })
    }

    /// Arcs with `gamma_max` placed where `|Psi|` comes back down to `|Psi(gamma)|`,
    /// searching `[search_from, pi)`.
    pub fn level_matched(spec: &CouplingSpec, gamma: f64, search_from: f64) -> Result<Self> {
        let level = spec.evaluate(gamma).abs();
        let gamma_max = spec.solve_abs_level(level, search_from, PI - 1e-12)?;
        Self::new(gamma, gamma_max)
    }

    pub fn in_lower(&self, abs_rel: f64) -> bool {
        abs_rel <= self.gamma
    }

    pub fn in_middle(&self, abs_rel: f64) -> bool {
        abs_rel > self.gamma && abs_rel < self.gamma_max
    }

    pub fn in_upper(&self, abs_rel: f64) -> bool {
        abs_rel >= self.gamma_max
    }

    /// `| |Psi(gamma)| - |Psi(gamma_max)| |`.
    pub fn level_defect(&self, spec: &CouplingSpec) -> f64 {
        (spec.evaluate(self.gamma).abs() - spec.evaluate(self.gamma_max).abs()).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// Recorded but not counted against the report.
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub name: &'static str,
    pub outcome: Outcome,
    /// Measured quantity behind the verdict (a defect or a margin).
    pub measured: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub assumption: &'static str,
    pub clauses: Vec<Clause>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.assumption,
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        for c in &self.clauses {
            let tag = match c.outcome {
                Outcome::Pass => "pass",
                Outcome::Warn => "warn",
                Outcome::Fail => "FAIL",
            };
            writeln!(
                f,
                "  [{tag}] {:<22} {:>12.3e}  {}",
                c.name, c.measured, c.detail
            )?;
        }
        Ok(())
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / n as f64;
    (0..=n).map(move |i| lo + h * i as f64)
}

fn periodicity_clause(spec: &CouplingSpec) -> Clause {
    let defect = grid(-PI, PI, VERIFY_GRID)
        .map(|x| (spec.evaluate(x + 2.0 * PI) - spec.evaluate(x)).abs())
        .fold(0.0, f64::max);
    let outcome = if defect <= EQ_TOL {
        Outcome::Pass
    } else {
        Outcome::Warn
    };
    let detail = if spec.has_integer_frequencies() {
        "max |Psi(x+2pi) - Psi(x)|".to_string()
    } else {
        "max |Psi(x+2pi) - Psi(x)|; non-integer frequency multipliers".to_string()
    };
    Clause {
        name: "periodicity",
        outcome,
        measured: defect,
        detail,
    }
}

fn oddness_clause(spec: &CouplingSpec, from: f64) -> Clause {
    let defect = grid(from, PI, VERIFY_GRID)
        .map(|x| (spec.evaluate(x) + spec.evaluate(-x)).abs())
        .fold(0.0, f64::max);
    Clause {
        name: "oddness",
        outcome: if defect <= EQ_TOL {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: defect,
        detail: format!("max |Psi(x) + Psi(-x)| for |x| in [{from:.6}, pi]"),
    }
}

fn level_clause(spec: &CouplingSpec, arcs: &ArcPartition) -> Clause {
    let defect = arcs.level_defect(spec);
    Clause {
        name: "arc_levels",
        outcome: if defect <= ARC_LEVEL_TOL {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: defect,
        detail: "| |Psi(gamma)| - |Psi(gamma_max)| |".into(),
    }
}

/// `inf |Psi|` over the open middle arc against `sup |Psi|` over the closed
/// outer arcs. The closed ends of the middle arc stand in for its infimum.
fn dominance_clause(spec: &CouplingSpec, arcs: &ArcPartition) -> Clause {
    let abs = |x: f64| spec.evaluate(x).abs();
    let mid_min = grid(arcs.gamma, arcs.gamma_max, VERIFY_GRID)
        .map(|x| abs(x).min(abs(-x)))
        .fold(f64::INFINITY, f64::min);
    let lower_max = grid(0.0, arcs.gamma, VERIFY_GRID)
        .map(|x| abs(x).max(abs(-x)))
        .fold(0.0, f64::max);
    let upper_max = grid(arcs.gamma_max, PI, VERIFY_GRID)
        .map(|x| abs(x).max(abs(-x)))
        .fold(0.0, f64::max);
    let outer = lower_max.max(upper_max);
    let margin = mid_min - outer;
    Clause {
        name: "arc_dominance",
        outcome: if margin >= -DOMINANCE_SLACK {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: margin,
        detail: format!("min|Psi| on middle arc {mid_min:.6} - max|Psi| on outer arcs {outer:.6}"),
    }
}

/// Checks the odd-coupling hypotheses on a 10^4-point grid.
pub fn check_assumption1(spec: &CouplingSpec, arcs: &ArcPartition) -> VerificationReport {
    let root_defect = spec.evaluate(0.0).abs().max(spec.evaluate(PI).abs());
    let roots = Clause {
        name: "roots_at_0_and_pi",
        outcome: if root_defect <= EQ_TOL {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: root_defect,
        detail: "max(|Psi(0)|, |Psi(pi)|)".into(),
    };
    VerificationReport {
        assumption: "odd coupling (in-phase/anti-phase arcs)",
        clauses: vec![
            periodicity_clause(spec),
            oddness_clause(spec, 0.0),
            roots,
            level_clause(spec, arcs),
            dominance_clause(spec, arcs),
        ],
    }
}

/// Checks the relaxed hypotheses: oddness only for `|x| >= gamma_c`, and
/// `|Psi_r| <= psi_bar < |Psi_r(gamma)|` on `[-gamma_c, gamma_c]`.
pub fn check_assumption1_prime(
    spec: &CouplingSpec,
    arcs: &ArcPartition,
) -> Result<VerificationReport> {
    let (Some(gamma_c), Some(psi_bar)) = (arcs.gamma_c, arcs.psi_bar) else {
        return Err(Error::Parameter(
            "relaxed check needs both gamma_c and psi_bar".into(),
        ));
    };
    let inner_max = grid(-gamma_c, gamma_c, 2 * VERIFY_GRID)
        .map(|x| spec.evaluate(x).abs())
        .fold(0.0, f64::max);
    let bound_margin = psi_bar - inner_max;
    let bound = Clause {
        name: "inner_bound",
        outcome: if bound_margin >= -DOMINANCE_SLACK {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: bound_margin,
        detail: format!("psi_bar {psi_bar:.6} - max|Psi| on [-gamma_c, gamma_c] {inner_max:.6}"),
    };
    let psi_gamma = spec.evaluate(arcs.gamma).abs();
    let sep_margin = psi_gamma - psi_bar;
    let separation = Clause {
        name: "inner_below_gamma",
        outcome: if sep_margin > 0.0 {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        measured: sep_margin,
        detail: format!("|Psi(gamma)| {psi_gamma:.6} - psi_bar {psi_bar:.6}"),
    };
    Ok(VerificationReport {
        assumption: "relaxed coupling (odd outside [-gamma_c, gamma_c])",
        clauses: vec![
            periodicity_clause(spec),
            oddness_clause(spec, gamma_c),
            bound,
            separation,
            dominance_clause(spec, arcs),
        ],
    })
}
