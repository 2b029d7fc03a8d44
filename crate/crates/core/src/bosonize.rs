//! Jordan-Schwinger bosonization: two modes per site, ladder form and
//! quadrature form of the lattice Hamiltonian.
//!
//! Site `k` owns mode `2k` (spin up) and `2k + 1` (spin down). Coefficients are
//! chosen so that the ladder Hamiltonian restricted to one photon per site
//! reproduces the Pauli-matrix Hamiltonian of [`crate::model`] exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::SpinModel;
use crate::simulate::mode_operators;
use crate::{CMat, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LadderOp {
    Create,
    Annihilate,
    Number,
}

/// Product of ladder operators, left factor acting last.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderTerm {
    pub coefficient: f64,
    pub factors: Vec<(usize, LadderOp)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quad {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QFactor {
    pub mode: usize,
    pub quad: Quad,
    pub power: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureTerm {
    #[serde(rename = "coeff")]
    pub coefficient: f64,
    pub factors: Vec<QFactor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermShape {
    /// q q q q on four distinct modes
    FourMode,
    /// q^2 q^2 on two distinct modes
    TwoMode,
    /// q^2 on one mode
    Quadratic,
    Other,
}

impl QuadratureTerm {
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.power as u32).sum()
    }

    pub fn modes(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.factors.iter().map(|f| f.mode).collect();
        m.dedup();
        m
    }

    pub fn shape(&self) -> TermShape {
        let distinct = self.modes().len() == self.factors.len();
        let powers: Vec<u8> = self.factors.iter().map(|f| f.power).collect();
        match (distinct, powers.as_slice()) {
            (true, [1, 1, 1, 1]) => TermShape::FourMode,
            (true, [2, 2]) => TermShape::TwoMode,
            (true, [2]) => TermShape::Quadratic,
            _ => TermShape::Other,
        }
    }

    fn sort_key(&self) -> (u8, Vec<usize>, usize, Vec<(Quad, u8)>) {
        let modes = self.modes();
        let quads = self.factors.iter().map(|f| (f.quad, f.power)).collect();
        match self.shape() {
            TermShape::FourMode => {
                let pattern = [0, 1, 2, 3].map(|i| self.factors[i].quad);
                let row = TABLE.iter().position(|e| e.pattern == pattern).unwrap_or(TABLE.len());
                (0, modes, row, quads)
            }
            TermShape::TwoMode => (1, modes, 0, quads),
            TermShape::Quadratic => (2, modes, 0, quads),
            TermShape::Other => (3, modes, 0, quads),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureHamiltonian {
    #[serde(rename = "modes")]
    pub n_modes: usize,
    pub terms: Vec<QuadratureTerm>,
    #[serde(rename = "offset")]
    pub constant_offset: f64,
}

impl QuadratureHamiltonian {
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            if t.factors.is_empty() {
                return Err(Error::invalid(format!("term {i} has no factors")));
            }
            if !t.factors.windows(2).all(|w| w[0].mode <= w[1].mode) {
                return Err(Error::invalid(format!("term {i} factors not sorted by mode")));
            }
            if t.factors.iter().any(|f| f.mode >= self.n_modes || !(1..=2).contains(&f.power)) {
                return Err(Error::invalid(format!("term {i} has a bad factor")));
            }
            if !matches!(t.degree(), 2 | 4) || t.modes().len() > 4 {
                return Err(Error::invalid(format!("term {i} has unsupported degree")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignTableEntry {
    pub pattern: [Quad; 4],
    pub c: i32,
    pub f: i32,
}

const fn row(pattern: [Quad; 4], c: i32, f: i32) -> SignTableEntry {
    SignTableEntry { pattern, c, f }
}

use Quad::{P, X};

/// Quartic sign table over the slots (k up, k down, l up, l down).
pub const TABLE: [SignTableEntry; 8] = [
    row([X, X, X, X], 1, 1),
    row([P, P, X, X], 1, 1),
    row([X, X, P, P], 1, 1),
    row([P, X, P, X], 1, -1),
    row([X, P, X, P], 1, -1),
    row([X, P, P, X], -1, 1),
    row([P, X, X, P], -1, 1),
    row([P, P, P, P], 1, 1),
];

pub fn sign_table(pattern: [Quad; 4]) -> Option<(i32, i32)> {
    TABLE.iter().find(|e| e.pattern == pattern).map(|e| (e.c, e.f))
}

/// Four-mode coefficient of a pattern in the quadrature Hamiltonian.
pub fn table_coefficient(c: i32, f: i32, jx: f64, jy: f64) -> f64 {
    -2.0 * (c as f64 * (jx + jy) + f as f64 * (jx - jy))
}

/// S+, S-, Sz on the (up, down) two-mode space at cutoff `d`, up mode major.
pub struct JsOperators {
    pub s_plus: CMat,
    pub s_minus: CMat,
    pub s_z: CMat,
}

pub fn jordan_schwinger_operators(d: usize) -> Result<JsOperators> {
    if d < 2 {
        return Err(Error::invalid("cutoff must be at least 2"));
    }
    let ops = mode_operators(d);
    let id = CMat::identity(d, d);
    Ok(JsOperators {
        s_plus: ops.adag.kronecker(&ops.a),
        s_minus: ops.a.kronecker(&ops.adag),
        s_z: (ops.n.kronecker(&id) - id.kronecker(&ops.n)) * C64::new(0.5, 0.0),
    })
}

pub fn bosonize(model: &SpinModel) -> Vec<LadderTerm> {
    use LadderOp::*;
    let mut out = Vec::new();
    let mut push = |coefficient: f64, factors: Vec<(usize, LadderOp)>| {
        if coefficient != 0.0 {
            out.push(LadderTerm { coefficient, factors });
        }
    };
    for c in &model.couplings {
        let (ku, kd, lu, ld) = (2 * c.k, 2 * c.k + 1, 2 * c.l, 2 * c.l + 1);
        let exchange = -(c.jx + c.jy);
        push(exchange, vec![(ku, Create), (kd, Annihilate), (ld, Create), (lu, Annihilate)]);
        push(exchange, vec![(kd, Create), (ku, Annihilate), (lu, Create), (ld, Annihilate)]);
        let pair = -(c.jx - c.jy);
        push(pair, vec![(ku, Create), (kd, Annihilate), (lu, Create), (ld, Annihilate)]);
        push(pair, vec![(kd, Create), (ku, Annihilate), (ld, Create), (lu, Annihilate)]);
        for (a, b, s) in [(ku, lu, 1.0), (ku, ld, -1.0), (kd, lu, -1.0), (kd, ld, 1.0)] {
            push(-c.jz * s, vec![(a, Number), (b, Number)]);
        }
    }
    for k in 0..model.n_sites {
        push(-model.field_b0, vec![(2 * k, Number)]);
        push(model.field_b0, vec![(2 * k + 1, Number)]);
    }
    out
}

/// Single-mode monomials produced by the substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Word {
    X,
    P,
    XX,
    PP,
}

fn expand(op: LadderOp) -> Vec<(C64, Option<Word>)> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match op {
        LadderOp::Annihilate => vec![(one, Some(Word::X)), (i, Some(Word::P))],
        LadderOp::Create => vec![(one, Some(Word::X)), (-i, Some(Word::P))],
        LadderOp::Number => {
            vec![(one, Some(Word::XX)), (one, Some(Word::PP)), (C64::new(-0.5, 0.0), None)]
        }
    }
}

const DROP_TOL: f64 = 1e-14;
const IMAG_TOL: f64 = 1e-12;

/// Substitutes a = X + iP, a+ = X - iP, n = X^2 + P^2 - 1/2 and collects terms.
pub fn to_quadrature(terms: &[LadderTerm], model: &SpinModel) -> Result<QuadratureHamiltonian> {
    let mut acc: BTreeMap<Vec<(usize, Word)>, C64> = BTreeMap::new();
    let mut offset = C64::new(0.0, 0.0);
    for term in terms {
        let mut modes: Vec<usize> = term.factors.iter().map(|f| f.0).collect();
        modes.sort_unstable();
        modes.dedup();
        if modes.len() != term.factors.len() {
            return Err(Error::invalid("ladder term repeats a mode"));
        }
        let mut partial: Vec<(C64, Vec<(usize, Word)>)> = vec![(C64::new(term.coefficient, 0.0), vec![])];
        for &(mode, op) in &term.factors {
            let mut next = Vec::with_capacity(partial.len() * 3);
            for (coef, word) in &partial {
                for (c, w) in expand(op) {
                    let mut wv = word.clone();
                    if let Some(w) = w {
                        wv.push((mode, w));
                    }
                    next.push((coef * c, wv));
                }
            }
            partial = next;
        }
        for (coef, mut word) in partial {
            if word.is_empty() {
                offset += coef;
            } else {
                word.sort_unstable();
                *acc.entry(word).or_insert(C64::new(0.0, 0.0)) += coef;
            }
        }
    }
    if offset.im.abs() > IMAG_TOL {
        return Err(Error::invariant("real-coefficients", "imaginary constant offset"));
    }
    let mut out = Vec::new();
    for (word, coef) in acc {
        if coef.im.abs() > IMAG_TOL {
            return Err(Error::invariant("real-coefficients", format!("imaginary coefficient on {word:?}")));
        }
        if coef.re.abs() <= DROP_TOL {
            continue;
        }
        let factors = word
            .iter()
            .map(|&(mode, w)| {
                let (quad, power) = match w {
                    Word::X => (Quad::X, 1),
                    Word::P => (Quad::P, 1),
                    Word::XX => (Quad::X, 2),
                    Word::PP => (Quad::P, 2),
                };
                QFactor { mode, quad, power }
            })
            .collect();
        out.push(QuadratureTerm { coefficient: coef.re, factors });
    }
    out.sort_by_key(|a| a.sort_key());
    let offset = if offset.re.abs() <= DROP_TOL { 0.0 } else { offset.re };
    Ok(QuadratureHamiltonian { n_modes: model.n_modes(), terms: out, constant_offset: offset })
}

pub fn quadrature_hamiltonian(model: &SpinModel) -> Result<QuadratureHamiltonian> {
    to_quadrature(&bosonize(model), model)
}
