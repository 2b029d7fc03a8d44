//! Gate IR, decomposition passes and resource counting.
//!
//! Gate lists are in time order: the first gate acts first. A gate applies
//! `exp(i s param G)` with `s = -1` when `dagger` is set; generators are
//! `R: X`, `G: X^2`, `V: X^3`, `Q: X^4`, `Cz: X_a X_b`, `Shift1: P_t X_s`,
//! `Shift2: P_t X_s^2` and `Fourier: (pi/2)(X^2 + P^2)` (no parameter).
//!
//! Conjugating by `exp(i c P_t A)` translates `X_t` by `c A / 2`, so a shift by
//! `A` uses parameter `2A`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bosonize::{Quad, QuadratureTerm, TermShape};
use crate::trotter::TrotterPlan;
use crate::{Error, Result};

/// Translation per unit shift parameter, from `[X, P] = i/2`.
pub const KAPPA: f64 = 0.5;
/// Cz gates per quartic gate as stated in the literature count.
pub const STATED_CZ_PER_Q: usize = 9;
/// Cubic gate strength in a second-order shift: gamma = sign(beta) * scale * sqrt|beta|.
pub const SHIFT2_GAMMA_SCALE: f64 = 0.6;
/// Ancilla displacement in a quartic gate: lambda = scale * sqrt|alpha|.
pub const QUARTIC_LAMBDA_SCALE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    R,
    G,
    V,
    Fourier,
    FourierDag,
    Cz,
    Q,
    Shift1,
    Shift2,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::R,
        GateKind::G,
        GateKind::V,
        GateKind::Fourier,
        GateKind::FourierDag,
        GateKind::Cz,
        GateKind::Q,
        GateKind::Shift1,
        GateKind::Shift2,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cz | GateKind::Shift1 | GateKind::Shift2 => 2,
            _ => 1,
        }
    }

    pub fn is_universal(self) -> bool {
        !matches!(self, GateKind::Q | GateKind::Shift1 | GateKind::Shift2)
    }

    pub fn is_fourier(self) -> bool {
        matches!(self, GateKind::Fourier | GateKind::FourierDag)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::R => "R",
            GateKind::G => "G",
            GateKind::V => "V",
            GateKind::Fourier => "Fourier",
            GateKind::FourierDag => "FourierDag",
            GateKind::Cz => "Cz",
            GateKind::Q => "Q",
            GateKind::Shift1 => "Shift1",
            GateKind::Shift2 => "Shift2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub kind: GateKind,
    pub modes: Vec<usize>,
    pub param: f64,
    pub dagger: bool,
}

impl Gate {
    pub fn new(kind: GateKind, modes: Vec<usize>, param: f64) -> Self {
        Gate { kind, modes, param, dagger: false }
    }

    pub fn single(kind: GateKind, mode: usize, param: f64) -> Self {
        Gate::new(kind, vec![mode], param)
    }

    pub fn fourier(mode: usize) -> Self {
        Gate::single(GateKind::Fourier, mode, 0.0)
    }

    pub fn fourier_dag(mode: usize) -> Self {
        Gate::single(GateKind::FourierDag, mode, 0.0)
    }

    pub fn dag(mut self) -> Self {
        self.dagger = !self.dagger;
        self
    }

    pub fn signed_param(&self) -> f64 {
        if self.dagger {
            -self.param
        } else {
            self.param
        }
    }

    fn is_inverse_of(&self, other: &Gate) -> bool {
        self.modes == other.modes
            && matches!(
                (self.kind, other.kind),
                (GateKind::Fourier, GateKind::FourierDag) | (GateKind::FourierDag, GateKind::Fourier)
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Raw,
    Universal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    #[serde(rename = "modes")]
    pub n_modes: usize,
    pub level: Level,
    pub gates: Vec<Gate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trotter: Option<TrotterPlan>,
}

impl Circuit {
    /// A raw-level circuit.
    pub fn new(n_modes: usize, gates: Vec<Gate>) -> Self {
        Circuit { n_modes, level: Level::Raw, gates, trotter: None }
    }

    fn spanning(gates: Vec<Gate>) -> Self {
        let n = gates.iter().flat_map(|g| g.modes.iter()).max().map_or(0, |m| m + 1);
        Circuit::new(n, gates)
    }

    pub fn is_universal(&self) -> bool {
        self.gates.iter().all(|g| g.kind.is_universal())
    }

    /// Structural checks; the error names the violated invariant.
    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.gates.iter().enumerate() {
            if g.modes.len() != g.kind.arity() {
                return Err(Error::invariant("gate-arity", format!("gate {i} ({}) has {} modes", g.kind.name(), g.modes.len())));
            }
            if let Some(m) = g.modes.iter().find(|&&m| m >= self.n_modes) {
                return Err(Error::invariant("mode-range", format!("gate {i} uses mode {m} of {}", self.n_modes)));
            }
            if g.modes.len() == 2 && g.modes[0] == g.modes[1] {
                return Err(Error::invariant("distinct-modes", format!("gate {i} acts twice on mode {}", g.modes[0])));
            }
            if !g.param.is_finite() {
                return Err(Error::invariant("finite-param", format!("gate {i} has a non-finite parameter")));
            }
            if g.kind.is_fourier() && (g.param != 0.0 || g.dagger) {
                return Err(Error::invariant("fourier-fixed", format!("gate {i} gives a Fourier gate a parameter")));
            }
            if self.level == Level::Universal && !g.kind.is_universal() {
                return Err(Error::invariant("universal-kinds", format!("gate {i} ({}) in a universal circuit", g.kind.name())));
            }
        }
        Ok(())
    }

    pub fn append(&mut self, other: &Circuit) {
        self.n_modes = self.n_modes.max(other.n_modes);
        if other.level == Level::Raw {
            self.level = Level::Raw;
        }
        self.gates.extend(other.gates.iter().cloned());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Identity {
    EightTerm,
    FifteenTerm,
}

fn distinct(modes: &[usize]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::invalid(format!("mode {m} used twice in one decomposition")));
        }
    }
    Ok(())
}

/// exp(i beta P_t X_s) = F_t exp(i beta X_t X_s) F_t^dag.
pub fn decompose_shift1(target: usize, source: usize, beta: f64) -> Result<Circuit> {
    distinct(&[target, source])?;
    Ok(Circuit {
        level: Level::Universal,
        ..Circuit::spanning(shift1_gates(target, source, beta))
    })
}

fn shift1_gates(t: usize, s: usize, beta: f64) -> Vec<Gate> {
    vec![Gate::fourier_dag(t), Gate::new(GateKind::Cz, vec![t, s], beta), Gate::fourier(t)]
}

/// Parameters `(gamma, a, c)` of the second-order shift construction.
pub fn shift2_params(beta: f64) -> (f64, f64, f64) {
    if beta == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let gamma = beta.signum() * SHIFT2_GAMMA_SCALE * beta.abs().sqrt();
    // group commutator of exp(i gamma P_t^3) and exp(i a X_t X_s) gives
    // exp(i 12 a^2 gamma kappa^2 P_t X_s^2) exp(i 18 a^3 gamma kappa^3 X_s^3)
    let a = (beta / (12.0 * KAPPA * KAPPA * gamma)).sqrt();
    let c = -18.0 * KAPPA.powi(3) * a.powi(3) * gamma;
    (gamma, a, c)
}

/// exp(i beta P_t X_s^2) from cubic phase and Cz gates.
pub fn decompose_shift2(target: usize, source: usize, beta: f64) -> Result<Circuit> {
    distinct(&[target, source])?;
    Ok(Circuit {
        level: Level::Universal,
        ..Circuit::spanning(shift2_gates(target, source, beta))
    })
}

fn shift2_gates(t: usize, s: usize, beta: f64) -> Vec<Gate> {
    let (gamma, a, c) = shift2_params(beta);
    // V' = F V F^dag on the target carries exp(i gamma P_t^3)
    let vp = |dag: bool| {
        let v = Gate::single(GateKind::V, t, gamma);
        vec![Gate::fourier_dag(t), if dag { v.dag() } else { v }, Gate::fourier(t)]
    };
    let cz = |p: f64| Gate::new(GateKind::Cz, vec![t, s], p);
    let mut g = vec![Gate::single(GateKind::V, s, c), cz(2.0 * a)];
    g.extend(vp(true));
    g.push(cz(a));
    g.extend(vp(false));
    g.push(cz(-2.0 * a));
    g.extend(vp(true));
    g.push(cz(-a));
    g.extend(vp(false));
    g
}

/// `(lambda, mu)` for the quartic construction.
pub fn quartic_params(alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        return (0.0, 0.0);
    }
    let lambda = QUARTIC_LAMBDA_SCALE * alpha.abs().sqrt();
    (lambda, alpha / (lambda * lambda))
}

/// exp(i alpha X_t^4) via X^4 = [(Y + l X^2)^2 - Y^2 - 2 l Y X^2] / l^2 on an ancilla Y.
pub fn decompose_quartic_gate(target: usize, ancilla: usize, alpha: f64) -> Result<Circuit> {
    distinct(&[target, ancilla])?;
    Ok(Circuit::spanning(quartic_gates(target, ancilla, alpha)))
}

fn quartic_gates(t: usize, anc: usize, alpha: f64) -> Vec<Gate> {
    let (lambda, mu) = quartic_params(alpha);
    let shift = lambda / KAPPA;
    let cross = if alpha == 0.0 { 0.0 } else { -2.0 * alpha / lambda };
    let s2 = |p: f64| Gate::new(GateKind::Shift2, vec![anc, t], p);
    vec![
        s2(shift).dag(),
        Gate::single(GateKind::G, anc, mu),
        s2(shift),
        Gate::single(GateKind::G, anc, -mu),
        // F^dag exp(i b P Y^2) F = exp(i b X Y^2)
        Gate::fourier(anc),
        s2(cross),
        Gate::fourier_dag(anc),
    ]
}

/// Wraps an X-form block so it acts on the P quadrature of `p_modes`.
fn wrap_momenta(p_modes: &[usize], block: Vec<Gate>) -> Vec<Gate> {
    let mut out: Vec<Gate> = p_modes.iter().map(|&m| Gate::fourier_dag(m)).collect();
    out.extend(block);
    out.extend(p_modes.iter().map(|&m| Gate::fourier(m)));
    out
}

fn p_modes(term: &QuadratureTerm) -> Vec<usize> {
    term.factors.iter().filter(|f| f.quad == Quad::P).map(|f| f.mode).collect()
}

/// exp(i w (X_q + sum_j s_j X_j)^4) with the quartic gate on `q`.
fn shifted_quartic(q: usize, shifts: &[(usize, f64)], w: f64) -> Vec<Gate> {
    let mut g: Vec<Gate> = shifts
        .iter()
        .map(|&(m, s)| Gate::new(GateKind::Shift1, vec![q, m], s / KAPPA).dag())
        .collect();
    g.push(Gate::single(GateKind::Q, q, w));
    g.extend(shifts.iter().map(|&(m, s)| Gate::new(GateKind::Shift1, vec![q, m], s / KAPPA)));
    g
}

/// Sign vectors (s2, s3, s4) and weights of the eight-term identity.
pub fn eight_term_signs() -> Vec<([f64; 3], f64)> {
    let mut out = Vec::new();
    for bits in 0..8u32 {
        let s = [0, 1, 2].map(|i| if bits >> (2 - i) & 1 == 1 { -1.0 } else { 1.0 });
        out.push((s, s[0] * s[1] * s[2]));
    }
    out
}

/// Subsets of the four slots with inclusion-exclusion weights, smallest first.
pub fn fifteen_term_subsets() -> Vec<(Vec<usize>, f64)> {
    let mut subsets: Vec<Vec<usize>> =
        (1..16u32).map(|mask| (0..4).filter(|i| mask >> i & 1 == 1).collect()).collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    subsets
        .into_iter()
        .map(|s| {
            let w = if (4 - s.len()) % 2 == 0 { 1.0 } else { -1.0 };
            (s, w)
        })
        .collect()
}

pub fn eight_term_rhs(x: [f64; 4]) -> f64 {
    eight_term_signs()
        .iter()
        .map(|(s, w)| w * (x[0] + s[0] * x[1] + s[1] * x[2] + s[2] * x[3]).powi(4))
        .sum::<f64>()
        / 192.0
}

/// The eight-term identity with the sign list exactly as printed in the source.
pub fn eight_term_printed_rhs(x: [f64; 4]) -> f64 {
    let rows: [([f64; 3], f64); 8] = [
        ([1.0, 1.0, 1.0], 1.0),
        ([-1.0, -1.0, -1.0], 1.0),
        ([-1.0, 1.0, 1.0], -1.0),
        ([1.0, -1.0, 1.0], -1.0),
        ([1.0, 1.0, -1.0], -1.0),
        ([-1.0, -1.0, 1.0], 1.0),
        ([-1.0, 1.0, -1.0], 1.0),
        ([1.0, -1.0, -1.0], 1.0),
    ];
    rows.iter()
        .map(|(s, w)| w * (x[0] + s[0] * x[1] + s[1] * x[2] + s[2] * x[3]).powi(4))
        .sum::<f64>()
        / 192.0
}

pub fn fifteen_term_rhs(x: [f64; 4]) -> f64 {
    fifteen_term_subsets()
        .iter()
        .map(|(s, w)| w * s.iter().map(|&i| x[i]).sum::<f64>().powi(4))
        .sum::<f64>()
        / 24.0
}

/// x^2 y^2 = [(x+y)^4 + (x-y)^4]/12 - x^4/6 - y^4/6
pub fn two_mode_rhs(x: f64, y: f64) -> f64 {
    ((x + y).powi(4) + (x - y).powi(4)) / 12.0 - x.powi(4) / 6.0 - y.powi(4) / 6.0
}

pub fn two_mode_printed_rhs(x: f64, y: f64) -> f64 {
    ((x + y).powi(4) + (x - y).powi(4) - 2.0 * x * x - 2.0 * y * y) / 12.0
}

/// exp(i scale c q1 q2 q3 q4) as quartic gates conjugated by first-order shifts.
pub fn decompose_four_mode(term: &QuadratureTerm, identity: Identity, scale: f64) -> Result<Circuit> {
    if term.shape() != TermShape::FourMode {
        return Err(Error::invalid("four-mode decomposition needs four distinct linear factors"));
    }
    let alpha = term.coefficient * scale;
    if alpha == 0.0 {
        return Ok(Circuit::spanning(vec![]));
    }
    let m: Vec<usize> = term.factors.iter().map(|f| f.mode).collect();
    let mut block = Vec::new();
    match identity {
        Identity::EightTerm => {
            for (s, w) in eight_term_signs() {
                let shifts = [(m[1], s[0]), (m[2], s[1]), (m[3], s[2])];
                block.extend(shifted_quartic(m[0], &shifts, w * alpha / 192.0));
            }
        }
        Identity::FifteenTerm => {
            for (subset, w) in fifteen_term_subsets() {
                let shifts: Vec<(usize, f64)> = subset[1..].iter().map(|&i| (m[i], 1.0)).collect();
                block.extend(shifted_quartic(m[subset[0]], &shifts, w * alpha / 24.0));
            }
        }
    }
    Ok(Circuit::spanning(wrap_momenta(&p_modes(term), block)))
}

/// exp(i scale c q_a^2 q_b^2) as four quartic gates and four first-order shifts.
pub fn decompose_two_mode(term: &QuadratureTerm, scale: f64) -> Result<Circuit> {
    if term.shape() != TermShape::TwoMode {
        return Err(Error::invalid("two-mode decomposition needs two distinct squared factors"));
    }
    let alpha = term.coefficient * scale;
    if alpha == 0.0 {
        return Ok(Circuit::spanning(vec![]));
    }
    let (a, b) = (term.factors[0].mode, term.factors[1].mode);
    let mut block = shifted_quartic(a, &[(b, 1.0)], alpha / 12.0);
    block.extend(shifted_quartic(a, &[(b, -1.0)], alpha / 12.0));
    block.push(Gate::single(GateKind::Q, a, -alpha / 6.0));
    block.push(Gate::single(GateKind::Q, b, -alpha / 6.0));
    Ok(Circuit::spanning(wrap_momenta(&p_modes(term), block)))
}

pub fn decompose_quadratic(term: &QuadratureTerm, scale: f64) -> Result<Circuit> {
    if term.shape() != TermShape::Quadratic {
        return Err(Error::invalid("quadratic decomposition needs a single squared factor"));
    }
    let alpha = term.coefficient * scale;
    if alpha == 0.0 {
        return Ok(Circuit::spanning(vec![]));
    }
    let mode = term.factors[0].mode;
    let block = vec![Gate::single(GateKind::G, mode, alpha)];
    Ok(Circuit { level: Level::Universal, ..Circuit::spanning(wrap_momenta(&p_modes(term), block)) })
}

pub fn decompose_term(term: &QuadratureTerm, identity: Identity, scale: f64) -> Result<Circuit> {
    match term.shape() {
        TermShape::FourMode => decompose_four_mode(term, identity, scale),
        TermShape::TwoMode => decompose_two_mode(term, scale),
        TermShape::Quadratic => decompose_quadratic(term, scale),
        TermShape::Other => Err(Error::invalid("term shape has no decomposition")),
    }
}

/// Cancels Fourier / inverse-Fourier pairs with no other gate on that mode between them.
pub fn peephole(gates: Vec<Gate>) -> Vec<Gate> {
    let n_modes = gates.iter().flat_map(|g| g.modes.iter()).max().map_or(0, |m| m + 1);
    let mut kept: Vec<Option<Gate>> = Vec::with_capacity(gates.len());
    let mut last: Vec<Vec<usize>> = vec![Vec::new(); n_modes];
    for g in gates {
        if g.kind.is_fourier() {
            let m = g.modes[0];
            if let Some(&j) = last[m].last() {
                if kept[j].as_ref().is_some_and(|prev| prev.is_inverse_of(&g)) {
                    kept[j] = None;
                    last[m].pop();
                    continue;
                }
            }
        }
        let idx = kept.len();
        for &m in &g.modes {
            last[m].push(idx);
        }
        kept.push(Some(g));
    }
    kept.into_iter().flatten().collect()
}

/// Replaces quartic gates by their shift-gate construction on a fresh ancilla
/// mode (appended after the existing ones); other gates pass through.
pub fn expand_quartic(circuit: &Circuit) -> Circuit {
    let has_q = circuit.gates.iter().any(|g| g.kind == GateKind::Q);
    let anc = circuit.n_modes;
    let mut gates = Vec::new();
    for g in &circuit.gates {
        if g.kind == GateKind::Q {
            gates.extend(quartic_gates(g.modes[0], anc, g.signed_param()));
        } else {
            gates.push(g.clone());
        }
    }
    Circuit {
        n_modes: circuit.n_modes + usize::from(has_q),
        level: Level::Raw,
        gates,
        trotter: circuit.trotter.clone(),
    }
}

/// Lowers to the universal set {R, G, V, Fourier, Cz}.
pub fn lower(circuit: &Circuit) -> Circuit {
    let expanded = expand_quartic(circuit);
    let mut gates = Vec::new();
    for g in expanded.gates {
        match g.kind {
            GateKind::Shift2 => gates.extend(shift2_gates(g.modes[0], g.modes[1], g.signed_param())),
            GateKind::Shift1 => gates.extend(shift1_gates(g.modes[0], g.modes[1], g.signed_param())),
            _ => gates.push(g),
        }
    }
    Circuit { n_modes: expanded.n_modes, level: Level::Universal, gates: peephole(gates), trotter: expanded.trotter }
}

pub type Counts = BTreeMap<GateKind, usize>;

pub fn count_gates(gates: &[Gate]) -> Counts {
    let mut c: Counts = GateKind::ALL.iter().map(|&k| (k, 0)).collect();
    for g in gates {
        *c.entry(g.kind).or_insert(0) += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageCounts {
    /// gates as emitted by the term decompositions
    pub raw: Counts,
    /// quartic gates replaced by shift gates
    pub expanded: Counts,
    pub universal: Counts,
}

impl StageCounts {
    fn scaled(&self, k: usize) -> StageCounts {
        let s = |c: &Counts| c.iter().map(|(&g, &n)| (g, n * k)).collect();
        StageCounts { raw: s(&self.raw), expanded: s(&self.expanded), universal: s(&self.universal) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerQuartic {
    pub v: usize,
    pub cz_derived: usize,
    pub cz_stated: usize,
    pub shift2: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub trotter_steps: usize,
    pub per_step: StageCounts,
    pub counts: StageCounts,
    pub per_quartic: PerQuartic,
}

pub fn per_quartic_costs() -> PerQuartic {
    let q = Circuit::new(1, vec![Gate::single(GateKind::Q, 0, 0.1)]);
    let expanded = count_gates(&expand_quartic(&q).gates);
    let low = count_gates(&lower(&q).gates);
    PerQuartic {
        v: low[&GateKind::V],
        cz_derived: low[&GateKind::Cz],
        cz_stated: STATED_CZ_PER_Q,
        shift2: expanded[&GateKind::Shift2],
    }
}

/// Counts for a circuit holding one Trotter step, repeated `steps` times.
pub fn count_resources(step: &Circuit, steps: usize) -> ResourceReport {
    let per_step = StageCounts {
        raw: count_gates(&step.gates),
        expanded: count_gates(&expand_quartic(step).gates),
        universal: count_gates(&lower(step).gates),
    };
    ResourceReport { trotter_steps: steps, counts: per_step.scaled(steps), per_step, per_quartic: per_quartic_costs() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bosonize::QFactor;

    fn term(coefficient: f64, parts: &[(usize, Quad, u8)]) -> QuadratureTerm {
        QuadratureTerm {
            coefficient,
            factors: parts.iter().map(|&(mode, quad, power)| QFactor { mode, quad, power }).collect(),
        }
    }

    fn xxxx() -> QuadratureTerm {
        term(1.0, &[(0, Quad::X, 1), (1, Quad::X, 1), (2, Quad::X, 1), (3, Quad::X, 1)])
    }

    fn count(c: &Circuit, k: GateKind) -> usize {
        c.gates.iter().filter(|g| g.kind == k).count()
    }

    #[test]
    fn quartic_gate_shape() {
        let c = decompose_quartic_gate(0, 1, 0.05).unwrap();
        assert_eq!(count(&c, GateKind::Shift2), 3);
        assert_eq!(count(&c, GateKind::G), 2);
        assert_eq!(count(&c, GateKind::Fourier) + count(&c, GateKind::FourierDag), 2);
        let zero = decompose_quartic_gate(0, 1, 0.0).unwrap();
        assert!(zero.gates.iter().all(|g| g.param == 0.0));
        assert!(decompose_quartic_gate(2, 2, 0.1).is_err());
    }

    #[test]
    fn shift_gate_shapes() {
        let c = decompose_shift2(0, 1, 0.03).unwrap();
        assert_eq!(count(&c, GateKind::V), 5);
        assert_eq!(count(&c, GateKind::Cz), 4);
        assert_eq!(c.level, Level::Universal);
        let c = decompose_shift1(0, 1, 0.3).unwrap();
        let kinds: Vec<GateKind> = c.gates.iter().map(|g| g.kind).collect();
        assert_eq!(kinds, vec![GateKind::FourierDag, GateKind::Cz, GateKind::Fourier]);
        assert!(decompose_shift2(1, 1, 0.1).is_err());
        let (gamma, a, c) = shift2_params(0.03);
        assert!((12.0 * KAPPA * KAPPA * a * a * gamma - 0.03).abs() < 1e-15);
        assert!((c + 18.0 * KAPPA.powi(3) * a.powi(3) * gamma).abs() < 1e-15);
    }

    #[test]
    fn eight_term_counts() {
        let c = decompose_four_mode(&xxxx(), Identity::EightTerm, 1.0).unwrap();
        assert_eq!(count(&c, GateKind::Q), 8);
        assert_eq!(count(&c, GateKind::Shift1), 48);
        assert_eq!(count(&expand_quartic(&c), GateKind::Shift2), 24);
        let q: Vec<f64> = c.gates.iter().filter(|g| g.kind == GateKind::Q).map(|g| g.param * 192.0).collect();
        assert!(q.iter().all(|p| (p.abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fifteen_term_counts() {
        let c = decompose_four_mode(&xxxx(), Identity::FifteenTerm, 1.0).unwrap();
        assert_eq!(count(&c, GateKind::Q), 15);
        assert_eq!(count(&c, GateKind::Shift1), 34);
        assert_eq!(count(&expand_quartic(&c), GateKind::Shift2), 45);
    }

    #[test]
    fn arity_errors() {
        let two = term(1.0, &[(0, Quad::X, 2), (1, Quad::P, 2)]);
        assert!(decompose_four_mode(&two, Identity::EightTerm, 1.0).is_err());
        assert!(decompose_two_mode(&xxxx(), 1.0).is_err());
        assert!(decompose_quadratic(&two, 1.0).is_err());
    }

    #[test]
    fn momentum_wrapping() {
        let t = term(1.0, &[(0, Quad::P, 1), (1, Quad::X, 1), (2, Quad::P, 1), (3, Quad::X, 1)]);
        let c = decompose_four_mode(&t, Identity::EightTerm, 0.5).unwrap();
        let first: Vec<&Gate> = c.gates.iter().take(2).collect();
        assert_eq!(first, vec![&Gate::fourier_dag(0), &Gate::fourier_dag(2)]);
        assert_eq!(&c.gates[c.gates.len() - 2..], &[Gate::fourier(0), Gate::fourier(2)]);
    }

    #[test]
    fn two_mode_shape() {
        let t = term(0.4, &[(1, Quad::X, 2), (3, Quad::X, 2)]);
        let c = decompose_two_mode(&t, 1.0).unwrap();
        assert_eq!(count(&c, GateKind::Q), 4);
        assert_eq!(count(&c, GateKind::Shift1), 4);
        assert_eq!(count(&c, GateKind::G), 0);
        let zero = decompose_two_mode(&term(0.0, &[(1, Quad::X, 2), (3, Quad::X, 2)]), 1.0).unwrap();
        assert!(zero.gates.is_empty());
    }

    #[test]
    fn quadratic_examples() {
        let c = decompose_quadratic(&term(0.3, &[(2, Quad::X, 2)]), 1.0).unwrap();
        assert_eq!(c.gates, vec![Gate::single(GateKind::G, 2, 0.3)]);
        let c = decompose_quadratic(&term(0.3, &[(2, Quad::P, 2)]), 2.0).unwrap();
        assert_eq!(c.gates, vec![Gate::fourier_dag(2), Gate::single(GateKind::G, 2, 0.6), Gate::fourier(2)]);
        assert!(decompose_quadratic(&term(0.0, &[(2, Quad::X, 2)]), 1.0).unwrap().gates.is_empty());
    }

    #[test]
    fn lowering() {
        let q = Circuit::new(1, vec![Gate::single(GateKind::Q, 0, 0.05)]);
        let low = lower(&q);
        assert!(low.is_universal());
        assert_eq!(low.n_modes, 2);
        assert_eq!(count(&low, GateKind::V), 15);
        assert_eq!(count(&low, GateKind::Cz), 12);
        assert_eq!(lower(&low), low);
        assert!(lower(&Circuit::new(0, vec![])).gates.is_empty());
        low.validate().unwrap();
    }

    #[test]
    fn peephole_cancels_adjacent_pairs() {
        let g = vec![
            Gate::fourier_dag(0),
            Gate::single(GateKind::G, 1, 0.1),
            Gate::fourier(0),
            Gate::fourier(1),
            Gate::new(GateKind::Cz, vec![0, 1], 0.2),
            Gate::fourier_dag(1),
        ];
        let out = peephole(g);
        // the Cz touches mode 1, so only the mode-0 pair cancels
        assert_eq!(out.len(), 4);
        assert_eq!(out[0].kind, GateKind::G);
    }

    #[test]
    fn identities_hold() {
        let pts = [[0.3, -1.2, 0.7, 2.1], [1.0, 1.0, 1.0, 1.0], [-0.5, 0.25, 3.0, -2.0]];
        for x in pts {
            let lhs = x[0] * x[1] * x[2] * x[3];
            assert!((eight_term_rhs(x) - lhs).abs() < 1e-12 * lhs.abs().max(1.0));
            assert!((fifteen_term_rhs(x) - lhs).abs() < 1e-12 * lhs.abs().max(1.0));
            let (a, b) = (x[0], x[2]);
            assert!((two_mode_rhs(a, b) - a * a * b * b).abs() < 1e-12);
        }
        assert!((two_mode_printed_rhs(1.0, 2.0) - 4.0).abs() > 0.1);
        assert!((eight_term_printed_rhs([1.0, 1.0, 1.0, 1.0]) - 1.0).abs() > 0.1);
    }

    #[test]
    fn validation_names_invariant() {
        let mut c = Circuit::new(2, vec![Gate::new(GateKind::Cz, vec![0, 1], 0.1)]);
        c.validate().unwrap();
        c.gates[0].modes = vec![0, 5];
        assert!(matches!(c.validate(), Err(Error::Invariant { name: "mode-range", .. })));
        c.gates[0].modes = vec![0];
        assert!(matches!(c.validate(), Err(Error::Invariant { name: "gate-arity", .. })));
        let mut u = lower(&Circuit::new(1, vec![Gate::single(GateKind::Q, 0, 0.1)]));
        u.gates.push(Gate::single(GateKind::Q, 0, 0.1));
        assert!(matches!(u.validate(), Err(Error::Invariant { name: "universal-kinds", .. })));
    }

    #[test]
    fn report_scales_with_steps() {
        let step = decompose_four_mode(&xxxx(), Identity::EightTerm, 0.1).unwrap();
        let r1 = count_resources(&step, 1);
        let r10 = count_resources(&step, 10);
        assert_eq!(r1.counts.raw[&GateKind::Shift1], 48);
        assert_eq!(r1.counts.expanded[&GateKind::Shift2], 24);
        for k in GateKind::ALL {
            assert_eq!(r10.counts.universal[&k], 10 * r1.counts.universal[&k]);
        }
        assert_eq!(r1.per_quartic.v, 15);
        assert_eq!(r1.per_quartic.cz_derived, 12);
        assert_eq!(r1.per_quartic.cz_stated, 9);
    }
}
