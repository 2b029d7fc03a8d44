//! First-order product formula over blocks of the quadrature Hamiltonian.
//!
//! A block is a single four-mode term, all two-mode terms of one site pair, or
//! all quadratic terms of one site. The two-mode and quadratic blocks are
//! functions of photon numbers, so they commute with each other.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bosonize::{QFactor, QuadratureHamiltonian, QuadratureTerm, TermShape};
use crate::circuit::{decompose_term, Circuit, Identity, Level};
use crate::simulate::{apply_local, expm_i_hermitian, quadrature_term_matrix, FockSpace};
use crate::{CMat, Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterPlan {
    pub t: f64,
    pub steps: usize,
    #[serde(skip)]
    pub term_order: Vec<usize>,
    pub gamma: f64,
    pub cutoff_for_gamma: usize,
    /// global phase t * offset, not emitted as a gate
    pub phase: f64,
}

/// N_t^2 t^2 gamma^2 / K, with the big-O constant taken as 1.
pub fn error_bound(n_terms: usize, t: f64, steps: usize, gamma: f64) -> f64 {
    let n = n_terms as f64;
    n * n * t * t * gamma * gamma / steps as f64
}

pub fn choose_steps(n_terms: usize, t: f64, gamma: f64, eps: f64) -> Result<usize> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let k = (error_bound(n_terms, t, 1, gamma) / eps).ceil();
    if !k.is_finite() || k > usize::MAX as f64 {
        return Err(Error::Guard("step count overflows".into()));
    }
    Ok((k as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// four-mode terms alone, number-function terms per site set
    Blocks,
    /// every term on its own
    Terms,
}

/// Term indices per product-formula factor, in canonical order.
pub fn groups(h: &QuadratureHamiltonian, grouping: Grouping) -> Vec<Vec<usize>> {
    let mut out: Vec<(Option<BTreeSet<usize>>, Vec<usize>)> = Vec::new();
    for (i, term) in h.terms.iter().enumerate() {
        let key = match (grouping, term.shape()) {
            (Grouping::Blocks, TermShape::TwoMode | TermShape::Quadratic) => {
                Some(term.modes().iter().map(|m| m / 2).collect::<BTreeSet<_>>())
            }
            _ => None,
        };
        match out.iter_mut().find(|(k, _)| key.is_some() && *k == key) {
            Some((_, v)) => v.push(i),
            None => out.push((key, vec![i])),
        }
    }
    out.into_iter().map(|(_, v)| v).collect()
}

fn group_modes(h: &QuadratureHamiltonian, group: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = group.iter().flat_map(|&i| h.terms[i].modes()).collect();
    set.into_iter().collect()
}

/// Hamiltonian of a group on its own modes (ascending, relabelled from 0).
fn group_matrix(h: &QuadratureHamiltonian, group: &[usize], cutoff: usize) -> Result<(Vec<usize>, CMat)> {
    let modes = group_modes(h, group);
    let space = FockSpace::new(modes.len(), cutoff)?;
    let mut m = CMat::zeros(space.dim(), space.dim());
    for &i in group {
        let t = &h.terms[i];
        let local = QuadratureTerm {
            coefficient: t.coefficient,
            factors: t
                .factors
                .iter()
                .map(|f| QFactor { mode: modes.iter().position(|&m| m == f.mode).unwrap(), ..*f })
                .collect(),
        };
        m += quadrature_term_matrix(&local, &space)?;
    }
    Ok((modes, m))
}

/// Largest block spectral norm at the given cutoff.
pub fn gamma(h: &QuadratureHamiltonian, cutoff: usize) -> Result<f64> {
    let mut g: f64 = 0.0;
    for group in groups(h, Grouping::Blocks) {
        let (_, m) = group_matrix(h, &group, cutoff)?;
        let eig = nalgebra::SymmetricEigen::new(m);
        g = g.max(eig.eigenvalues.iter().fold(0.0, |a: f64, e| a.max(e.abs())));
    }
    Ok(g)
}

pub fn plan(h: &QuadratureHamiltonian, t: f64, steps: usize, cutoff: usize) -> Result<TrotterPlan> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    Ok(TrotterPlan {
        t,
        steps,
        term_order: groups(h, Grouping::Blocks).concat(),
        gamma: gamma(h, cutoff)?,
        cutoff_for_gamma: cutoff,
        phase: t * h.constant_offset,
    })
}

/// Product formula on the full truncated space, including the offset phase.
pub fn trotter_unitary(
    h: &QuadratureHamiltonian,
    t: f64,
    steps: usize,
    space: &FockSpace,
    grouping: Grouping,
) -> Result<CMat> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let tau = t / steps as f64;
    let factors: Vec<(Vec<usize>, CMat)> = groups(h, grouping)
        .iter()
        .map(|g| group_matrix(h, g, space.cutoff).map(|(modes, m)| (modes, expm_i_hermitian(&m, tau))))
        .collect::<Result<_>>()?;
    let mut u = CMat::identity(space.dim(), space.dim()) * C64::from_polar(1.0, t * h.constant_offset);
    for _ in 0..steps {
        for (modes, local) in &factors {
            apply_local(space, modes, local, &mut u);
        }
    }
    Ok(u)
}

/// Raw circuit: `steps` repetitions of the per-term decompositions with
/// coefficients scaled by t / steps, block order.
pub fn build_evolution_circuit(
    h: &QuadratureHamiltonian,
    t: f64,
    steps: usize,
    identity: Identity,
    cutoff_for_gamma: usize,
) -> Result<Circuit> {
    let plan = plan(h, t, steps, cutoff_for_gamma)?;
    let step = step_circuit(h, t / steps as f64, identity, &plan.term_order)?;
    let mut c = Circuit::new(h.n_modes, vec![]);
    for _ in 0..steps {
        c.append(&step);
    }
    c.level = Level::Raw;
    c.trotter = Some(plan);
    Ok(c)
}

/// One step at time step `tau`.
pub fn step_circuit(h: &QuadratureHamiltonian, tau: f64, identity: Identity, order: &[usize]) -> Result<Circuit> {
    let mut c = Circuit::new(h.n_modes, vec![]);
    for &i in order {
        c.append(&decompose_term(&h.terms[i], identity, tau)?);
    }
    c.n_modes = h.n_modes;
    c.level = Level::Raw;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bosonize::quadrature_hamiltonian;
    use crate::model::{parse_spin_model, SpinModel};
    use crate::simulate::{column_error, exact_evolution, quadrature_hamiltonian_matrix, FockSpace};

    #[test]
    fn bound_examples() {
        assert_eq!(error_bound(2, 1.0, 4, 1.0), 1.0);
        assert_eq!(error_bound(3, 0.0, 1, 2.0), 0.0);
        assert_eq!(error_bound(2, 1.0, 8, 1.0), error_bound(2, 1.0, 4, 1.0) / 2.0);
        assert_eq!(choose_steps(2, 1.0, 1.0, 0.5).unwrap(), 8);
        assert_eq!(choose_steps(2, 1.0, 1.0, 10.0).unwrap(), 1);
        assert!(choose_steps(2, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_quadratic_term() {
        let h = QuadratureHamiltonian {
            n_modes: 1,
            terms: vec![QuadratureTerm {
                coefficient: 0.3,
                factors: vec![QFactor { mode: 0, quad: crate::bosonize::Quad::X, power: 2 }],
            }],
            constant_offset: 0.0,
        };
        let c = build_evolution_circuit(&h, 2.0, 1, Identity::EightTerm, 4).unwrap();
        assert_eq!(c.gates.len(), 1);
        assert!((c.gates[0].param - 0.6).abs() < 1e-15);
    }

    #[test]
    fn repetition_structure() {
        let m = parse_spin_model(r#"{"sites":2,"field":0.3,"couplings":[{"k":0,"l":1,"jx":1,"jy":1,"jz":1}]}"#)
            .unwrap();
        let h = quadrature_hamiltonian(&m).unwrap();
        let c1 = build_evolution_circuit(&h, 0.3, 1, Identity::EightTerm, 3).unwrap();
        let c3 = build_evolution_circuit(&h, 0.3, 3, Identity::EightTerm, 3).unwrap();
        assert_eq!(c3.gates.len(), 3 * c1.gates.len());
        let n = c1.gates.len();
        let plan = c3.trotter.as_ref().unwrap();
        let step = step_circuit(&h, 0.3 / 3.0, Identity::EightTerm, &plan.term_order).unwrap();
        for (i, g) in c3.gates.iter().enumerate() {
            let base = &c1.gates[i % n];
            assert_eq!((g.kind, &g.modes, g.dagger), (base.kind, &base.modes, base.dagger));
            assert_eq!(g, &step.gates[i % n]);
        }
    }

    #[test]
    fn block_grouping() {
        let m = parse_spin_model(r#"{"sites":2,"field":0.3,"couplings":[{"k":0,"l":1,"jx":1,"jy":1,"jz":1}]}"#)
            .unwrap();
        let h = quadrature_hamiltonian(&m).unwrap();
        let g = groups(&h, Grouping::Blocks);
        // 8 four-mode terms, one zz block, two field blocks
        assert_eq!(g.len(), 11);
        assert_eq!(g[8].len(), 16);
        assert_eq!(groups(&h, Grouping::Terms).len(), h.terms.len());
    }

    #[test]
    fn commuting_model_is_exact() {
        let m = SpinModel::new(
            2,
            vec![crate::model::CouplingEntry { k: 0, l: 1, jx: 0.0, jy: 0.0, jz: 0.8 }],
            0.4,
        )
        .unwrap();
        let h = quadrature_hamiltonian(&m).unwrap();
        let space = FockSpace::new(4, 3).unwrap();
        let exact = exact_evolution(&quadrature_hamiltonian_matrix(&h, &space).unwrap(), 0.7);
        let u = trotter_unitary(&h, 0.7, 1, &space, Grouping::Blocks).unwrap();
        let cols: Vec<usize> = (0..space.dim()).collect();
        assert!(column_error(&u, &exact, &cols) < 1e-9);
    }
}
