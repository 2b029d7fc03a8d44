//! Spin-lattice input model and the dense Pauli-matrix oracle.
//!
//! Basis convention: site 0 is the most significant qubit, spin up is `|0>`.

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::{CMat, Error, Result, C64};

/// Largest lattice for which the dense oracle is built.
pub const MAX_ORACLE_SITES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEntry {
    pub k: usize,
    pub l: usize,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    pub n_sites: usize,
    pub couplings: Vec<CouplingEntry>,
    pub field_b0: f64,
}

impl SpinModel {
    pub fn new(n_sites: usize, couplings: Vec<CouplingEntry>, field_b0: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::invalid("lattice needs at least one site"));
        }
        if !field_b0.is_finite() {
            return Err(Error::invalid("field must be finite"));
        }
        let mut seen = BTreeSet::new();
        for c in &couplings {
            if c.k >= c.l {
                return Err(Error::invalid(format!("coupling ({}, {}) needs k < l", c.k, c.l)));
            }
            if c.l >= n_sites {
                return Err(Error::invalid(format!(
                    "coupling ({}, {}) out of range for {} sites",
                    c.k, c.l, n_sites
                )));
            }
            if ![c.jx, c.jy, c.jz].iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("coupling ({}, {}) is not finite", c.k, c.l)));
            }
            if !seen.insert((c.k, c.l)) {
                return Err(Error::invalid(format!("duplicate coupling ({}, {})", c.k, c.l)));
            }
        }
        Ok(SpinModel { n_sites, couplings, field_b0 })
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_sites
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    k: usize,
    l: usize,
    #[serde(default)]
    jx: f64,
    #[serde(default)]
    jy: f64,
    #[serde(default)]
    jz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    sites: usize,
    #[serde(default)]
    field: f64,
    #[serde(default)]
    couplings: Vec<RawCoupling>,
}

pub fn parse_spin_model(text: &str) -> Result<SpinModel> {
    let raw: RawModel = serde_json::from_str(text)?;
    let couplings = raw
        .couplings
        .into_iter()
        .map(|c| CouplingEntry { k: c.k, l: c.l, jx: c.jx, jy: c.jy, jz: c.jz })
        .collect();
    SpinModel::new(raw.sites, couplings, raw.field)
}

/// Dense matrix that is Hermitian to 1e-12 per entry.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    entries: CMat,
}

impl HermitianMatrix {
    pub const TOL: f64 = 1e-12;

    pub fn new(entries: CMat) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("matrix is not square"));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in i..n {
                if (entries[(i, j)] - entries[(j, i)].conj()).norm() > Self::TOL {
                    return Err(Error::invalid(format!("matrix not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(HermitianMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }
}

/// H = -sum_{k<l} (Jx sx sx + Jy sy sy + Jz sz sz) - B0 sum_k sz with Pauli matrices.
pub fn spin_hamiltonian_matrix(model: &SpinModel) -> Result<HermitianMatrix> {
    let n = model.n_sites;
    if n > MAX_ORACLE_SITES {
        return Err(Error::Guard(format!(
            "dense spin oracle limited to {MAX_ORACLE_SITES} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    let bit = |site: usize| 1usize << (n - 1 - site);
    // sz eigenvalue: +1 for bit 0 (up), -1 for bit 1 (down)
    let sz = |state: usize, site: usize| if state & bit(site) == 0 { 1.0 } else { -1.0 };
    for s in 0..dim {
        let mut diag = 0.0;
        for k in 0..n {
            diag -= model.field_b0 * sz(s, k);
        }
        for c in &model.couplings {
            diag -= c.jz * sz(s, c.k) * sz(s, c.l);
            let flipped = s ^ bit(c.k) ^ bit(c.l);
            // sy|0> = i|1>, sy|1> = -i|0>, so sy sy contributes -sz_k sz_l on the flipped state
            let yy = -sz(s, c.k) * sz(s, c.l);
            h[(flipped, s)] -= C64::new(c.jx + c.jy * yy, 0.0);
        }
        h[(s, s)] += C64::new(diag, 0.0);
    }
    HermitianMatrix::new(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_of(m: &CMat) -> Vec<f64> {
        (0..m.nrows()).map(|i| m[(i, i)].re).collect()
    }

    #[test]
    fn parses_examples() {
        let m = parse_spin_model(r#"{"sites":2,"field":0.0,"couplings":[{"k":0,"l":1,"jx":0,"jy":0,"jz":1}]}"#)
            .unwrap();
        assert_eq!(m.n_sites, 2);
        assert_eq!(m.couplings[0].jz, 1.0);
        let m = parse_spin_model(r#"{"sites":1,"field":0.5,"couplings":[]}"#).unwrap();
        assert_eq!(m.field_b0, 0.5);
        assert!(m.couplings.is_empty());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_spin_model(r#"{"sites":2,"couplings":[{"k":1,"l":0,"jz":1}]}"#).is_err());
        assert!(parse_spin_model(r#"{"sites":2,"couplings":[{"k":0,"l":2}]}"#).is_err());
        assert!(parse_spin_model(r#"{"sites":3,"couplings":[{"k":0,"l":1},{"k":0,"l":1}]}"#).is_err());
        assert!(parse_spin_model(r#"{"sites":2,"colour":1}"#).is_err());
        assert!(parse_spin_model(r#"{"sites":2,"couplings":[{"k":0,"l":1,"jw":1}]}"#).is_err());
        assert!(parse_spin_model("not json").is_err());
        assert!(parse_spin_model(r#"{"sites":0}"#).is_err());
    }

    #[test]
    fn zz_bond() {
        let m = parse_spin_model(r#"{"sites":2,"couplings":[{"k":0,"l":1,"jz":1}]}"#).unwrap();
        let h = spin_hamiltonian_matrix(&m).unwrap();
        assert_eq!(diag_of(h.matrix()), vec![-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn single_zeeman() {
        let m = SpinModel::new(1, vec![], 1.0).unwrap();
        let h = spin_hamiltonian_matrix(&m).unwrap();
        assert_eq!(diag_of(h.matrix()), vec![-1.0, 1.0]);
    }

    #[test]
    fn empty_model_is_zero() {
        let m = SpinModel::new(2, vec![], 0.0).unwrap();
        assert!(spin_hamiltonian_matrix(&m).unwrap().matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn xx_and_yy_elements() {
        // sx sx + sy sy swaps |01> and |10> with weight 2, and annihilates |00>, |11>
        let m = parse_spin_model(r#"{"sites":2,"couplings":[{"k":0,"l":1,"jx":1,"jy":1}]}"#).unwrap();
        let h = spin_hamiltonian_matrix(&m).unwrap().into_matrix();
        assert_eq!(h[(1, 2)], C64::new(-2.0, 0.0));
        assert_eq!(h[(0, 3)], C64::new(0.0, 0.0));
        let m = parse_spin_model(r#"{"sites":2,"couplings":[{"k":0,"l":1,"jx":1,"jy":-1}]}"#).unwrap();
        let h = spin_hamiltonian_matrix(&m).unwrap().into_matrix();
        assert_eq!(h[(0, 3)], C64::new(-2.0, 0.0));
        assert_eq!(h[(1, 2)], C64::new(0.0, 0.0));
    }

    #[test]
    fn guard() {
        let m = SpinModel::new(13, vec![], 0.0).unwrap();
        assert!(matches!(spin_hamiltonian_matrix(&m), Err(Error::Guard(_))));
    }
}
