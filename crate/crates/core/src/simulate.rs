//! Truncated Fock-space numerics.
//!
//! Conventions: `x = (a + a+)/2`, `p = (a - a+)/(2i)`, so `[x, p] = i/2` and the
//! vacuum has `<x^2> = 1/4`. Mode 0 is the most significant digit of a basis index.
//!
//! Two gate back ends are provided. [`Backend::Generator`] exponentiates the
//! truncated generator matrix. [`Backend::Compressed`] projects the exact
//! infinite-dimensional gate onto the first `d` levels, computing matrix
//! elements by quadrature over Hermite functions; it is the reference used to
//! judge decompositions because it carries no generator truncation artefacts.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use crate::bosonize::{LadderOp, LadderTerm, Quad, QuadratureHamiltonian, QuadratureTerm};
use crate::circuit::{decompose_shift2, expand_quartic, lower, Circuit, Gate, GateKind};
use crate::model::HermitianMatrix;
use crate::{CMat, CVec, Error, Result, C64};

pub const MAX_DIM: usize = 20000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_modes: usize,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::invalid("cutoff must be at least 2"));
        }
        let dim = (cutoff as f64).powi(n_modes as i32);
        if dim > MAX_DIM as f64 {
            return Err(Error::Guard(format!(
                "Fock space {cutoff}^{n_modes} exceeds {MAX_DIM} states"
            )));
        }
        Ok(FockSpace { n_modes, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_modes as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    pub fn digit(&self, index: usize, mode: usize) -> usize {
        index / self.stride(mode) % self.cutoff
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &n| acc * self.cutoff + n)
    }

    /// Basis states with every mode at most `d - 2`, where quadrature and
    /// ladder forms of the number operator agree.
    pub fn interior(&self) -> Vec<usize> {
        self.filter(|digits| digits.iter().all(|&n| n + 2 <= self.cutoff))
    }

    pub fn filter(&self, keep: impl Fn(&[usize]) -> bool) -> Vec<usize> {
        let mut digits = vec![0; self.n_modes];
        (0..self.dim())
            .filter(|&i| {
                for (m, d) in digits.iter_mut().enumerate() {
                    *d = self.digit(i, m);
                }
                keep(&digits)
            })
            .collect()
    }
}

pub struct ModeOperators {
    pub x: CMat,
    pub p: CMat,
    pub a: CMat,
    pub adag: CMat,
    pub n: CMat,
}

pub fn mode_operators(d: usize) -> ModeOperators {
    let mut a = CMat::zeros(d, d);
    for k in 1..d {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let x = (&a + &adag) * C64::new(0.5, 0.0);
    let p = (&a - &adag) * C64::new(0.0, -0.5);
    let n = CMat::from_diagonal(&CVec::from_fn(d, |k, _| C64::new(k as f64, 0.0)));
    ModeOperators { x, p, a, adag, n }
}

/// Left-multiplies `target` by `local` acting on `modes` (first listed mode is
/// the most significant digit of `local`).
pub fn apply_local(space: &FockSpace, modes: &[usize], local: &CMat, target: &mut CMat) {
    let d = space.cutoff;
    let k = modes.len();
    let ld = d.pow(k as u32);
    assert_eq!(local.nrows(), ld, "local operator dimension");
    let strides: Vec<usize> = modes.iter().map(|&m| space.stride(m)).collect();
    let offsets: Vec<usize> = (0..ld)
        .map(|li| {
            let mut rem = li;
            let mut off = 0;
            for j in (0..k).rev() {
                off += (rem % d) * strides[j];
                rem /= d;
            }
            off
        })
        .collect();
    let ncols = target.ncols();
    let mut buf = CMat::zeros(ld, ncols);
    for base in 0..space.dim() {
        if modes.iter().any(|&m| space.digit(base, m) != 0) {
            continue;
        }
        for (r, off) in offsets.iter().enumerate() {
            buf.row_mut(r).copy_from(&target.row(base + off));
        }
        let out = local * &buf;
        for (r, off) in offsets.iter().enumerate() {
            target.row_mut(base + off).copy_from(&out.row(r));
        }
    }
}

pub fn embed(space: &FockSpace, modes: &[usize], local: &CMat) -> Result<CMat> {
    check_modes(space, modes)?;
    let mut m = CMat::identity(space.dim(), space.dim());
    apply_local(space, modes, local, &mut m);
    Ok(m)
}

fn check_modes(space: &FockSpace, modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= space.n_modes {
            return Err(Error::invalid(format!("mode {m} outside {}-mode space", space.n_modes)));
        }
        if modes[..i].contains(&m) {
            return Err(Error::invalid(format!("mode {m} repeated")));
        }
    }
    Ok(())
}

/// Groups per-mode factor matrices (in operator order) into one local operator.
fn local_product(d: usize, factors: &[(usize, CMat)]) -> (Vec<usize>, CMat) {
    let mut modes: Vec<usize> = factors.iter().map(|f| f.0).collect();
    modes.sort_unstable();
    modes.dedup();
    let mut local = CMat::identity(1, 1);
    for &m in &modes {
        let mut single = CMat::identity(d, d);
        for (fm, mat) in factors {
            if *fm == m {
                single *= mat;
            }
        }
        local = local.kronecker(&single);
    }
    (modes, local)
}

pub fn quadrature_term_matrix(term: &QuadratureTerm, space: &FockSpace) -> Result<CMat> {
    let ops = mode_operators(space.cutoff);
    let factors: Vec<(usize, CMat)> = term
        .factors
        .iter()
        .map(|f| {
            let q = match f.quad {
                Quad::X => &ops.x,
                Quad::P => &ops.p,
            };
            let mut m = CMat::identity(space.cutoff, space.cutoff);
            for _ in 0..f.power {
                m *= q;
            }
            (f.mode, m)
        })
        .collect();
    let (modes, local) = local_product(space.cutoff, &factors);
    Ok(embed(space, &modes, &local)? * C64::new(term.coefficient, 0.0))
}

pub fn ladder_term_matrix(term: &LadderTerm, space: &FockSpace) -> Result<CMat> {
    let ops = mode_operators(space.cutoff);
    let factors: Vec<(usize, CMat)> = term
        .factors
        .iter()
        .map(|&(mode, op)| {
            let m = match op {
                LadderOp::Create => ops.adag.clone(),
                LadderOp::Annihilate => ops.a.clone(),
                LadderOp::Number => ops.n.clone(),
            };
            (mode, m)
        })
        .collect();
    let (modes, local) = local_product(space.cutoff, &factors);
    Ok(embed(space, &modes, &local)? * C64::new(term.coefficient, 0.0))
}

pub fn ladder_hamiltonian_matrix(terms: &[LadderTerm], space: &FockSpace) -> Result<HermitianMatrix> {
    let mut h = CMat::zeros(space.dim(), space.dim());
    for t in terms {
        h += ladder_term_matrix(t, space)?;
    }
    HermitianMatrix::new(h)
}

/// Sum of the term matrices plus `offset * I`.
pub fn quadrature_hamiltonian_matrix(h: &QuadratureHamiltonian, space: &FockSpace) -> Result<HermitianMatrix> {
    let mut m = CMat::identity(space.dim(), space.dim()) * C64::new(h.constant_offset, 0.0);
    for t in &h.terms {
        m += quadrature_term_matrix(t, space)?;
    }
    HermitianMatrix::new(m)
}

/// exp(i t H) for Hermitian H.
pub fn expm_i_hermitian(h: &CMat, t: f64) -> CMat {
    let eig = SymmetricEigen::new(h.clone());
    let phases = CVec::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, t * e)),
    );
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (j, mut col) in vd.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    vd * v.adjoint()
}

pub fn exact_evolution(h: &HermitianMatrix, t: f64) -> CMat {
    expm_i_hermitian(h.matrix(), t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// exp(i theta G) with G built from truncated x and p
    Generator,
    /// exact gate projected onto the truncated space
    Compressed,
}

/// Signed angle of a parameterised gate.
pub fn effective_param(gate: &Gate) -> f64 {
    if gate.dagger {
        -gate.param
    } else {
        gate.param
    }
}

/// Generator matrix on the gate's own modes (first listed mode major).
pub fn gate_generator(kind: GateKind, d: usize) -> CMat {
    let ops = mode_operators(d);
    let x2 = &ops.x * &ops.x;
    match kind {
        GateKind::R => ops.x.clone(),
        GateKind::G => x2,
        GateKind::V => &x2 * &ops.x,
        GateKind::Q => &x2 * &x2,
        GateKind::Fourier | GateKind::FourierDag => (&x2 + &ops.p * &ops.p) * C64::new(PI / 2.0, 0.0),
        GateKind::Cz => ops.x.kronecker(&ops.x),
        GateKind::Shift1 => ops.p.kronecker(&ops.x),
        GateKind::Shift2 => ops.p.kronecker(&x2),
    }
}

fn fourier_exact(d: usize, sign: f64) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(d, |n, _| C64::from_polar(1.0, sign * PI / 2.0 * (n as f64 + 0.5))))
}

pub fn local_gate_unitary(gate: &Gate, d: usize, backend: Backend) -> CMat {
    let theta = effective_param(gate);
    match backend {
        Backend::Generator => {
            let theta = match gate.kind {
                GateKind::Fourier => 1.0,
                GateKind::FourierDag => -1.0,
                _ => theta,
            };
            expm_i_hermitian(&gate_generator(gate.kind, d), theta)
        }
        Backend::Compressed => {
            let grid = HermiteGrid::new(d);
            match gate.kind {
                GateKind::R => grid.single(|x| theta * x),
                GateKind::G => grid.single(|x| theta * x * x),
                GateKind::V => grid.single(|x| theta * x * x * x),
                GateKind::Q => grid.single(|x| theta * x.powi(4)),
                GateKind::Fourier => fourier_exact(d, 1.0),
                GateKind::FourierDag => fourier_exact(d, -1.0),
                GateKind::Cz => grid.two(|x, y| theta * x * y),
                GateKind::Shift1 | GateKind::Shift2 => {
                    let inner = if gate.kind == GateKind::Shift1 {
                        grid.two(|x, y| theta * x * y)
                    } else {
                        grid.two(|x, y| theta * x * y * y)
                    };
                    let f = fourier_exact(d, 1.0).kronecker(&CMat::identity(d, d));
                    &f * inner * f.adjoint()
                }
            }
        }
    }
}

pub fn gate_unitary(gate: &Gate, space: &FockSpace, backend: Backend) -> Result<CMat> {
    embed(space, &gate.modes, &local_gate_unitary(gate, space.cutoff, backend))
}

/// Ordered product of gate unitaries; the first gate acts first.
pub fn circuit_unitary(circuit: &Circuit, space: &FockSpace, backend: Backend) -> Result<CMat> {
    if circuit.n_modes > space.n_modes {
        return Err(Error::invalid("circuit has more modes than the Fock space"));
    }
    let mut u = CMat::identity(space.dim(), space.dim());
    let mut cache: Vec<(Gate, CMat)> = Vec::new();
    for g in &circuit.gates {
        check_modes(space, &g.modes)?;
        let key = Gate { modes: vec![], ..g.clone() };
        let local = match cache.iter().find(|(k, _)| *k == key) {
            Some((_, m)) => m.clone(),
            None => {
                let m = local_gate_unitary(g, space.cutoff, backend);
                cache.push((key, m.clone()));
                m
            }
        };
        apply_local(space, &g.modes, &local, &mut u);
    }
    Ok(u)
}

/// Uniform quadrature grid carrying Hermite functions up to order `d - 1`.
pub struct HermiteGrid {
    d: usize,
    /// quadrature values X = u / sqrt(2)
    xs: Vec<f64>,
    weight: f64,
    /// psi[n][g]
    psi: Vec<Vec<f64>>,
}

impl HermiteGrid {
    pub const SPACING: f64 = 0.025;

    pub fn new(d: usize) -> Self {
        Self::with_spacing(d, Self::SPACING)
    }

    pub fn with_spacing(d: usize, h: f64) -> Self {
        let half = (2.0 * d as f64 + 1.0).sqrt() + 7.0;
        let n = (2.0 * half / h).ceil() as usize + 1;
        let us: Vec<f64> = (0..n).map(|i| -half + i as f64 * h).collect();
        let mut psi = vec![vec![0.0; n]; d];
        for (g, &u) in us.iter().enumerate() {
            psi[0][g] = PI.powf(-0.25) * (-u * u / 2.0).exp();
            if d > 1 {
                psi[1][g] = 2f64.sqrt() * u * psi[0][g];
            }
            for k in 2..d {
                let kf = k as f64;
                psi[k][g] = (2.0 / kf).sqrt() * u * psi[k - 1][g] - ((kf - 1.0) / kf).sqrt() * psi[k - 2][g];
            }
        }
        let xs = us.iter().map(|u| u / 2f64.sqrt()).collect();
        HermiteGrid { d, xs, weight: h, psi }
    }

    /// <m| exp(i f(X)) |n>
    pub fn single(&self, f: impl Fn(f64) -> f64) -> CMat {
        let phase: Vec<C64> = self.xs.iter().map(|&x| C64::from_polar(self.weight, f(x))).collect();
        CMat::from_fn(self.d, self.d, |m, n| {
            let (pm, pn) = (&self.psi[m], &self.psi[n]);
            phase.iter().enumerate().map(|(g, ph)| ph * (pm[g] * pn[g])).sum()
        })
    }

    /// <m1 m2| exp(i f(X1, X2)) |n1 n2>, first mode major.
    pub fn two(&self, f: impl Fn(f64, f64) -> f64) -> CMat {
        let d = self.d;
        let g = self.xs.len();
        // rows of phi: pair (m, n) -> psi_m psi_n on the grid, skipping negligible tails
        let phi = CMat::from_fn(d * d, g, |r, k| C64::new(self.psi[r / d][k] * self.psi[r % d][k], 0.0));
        let w2 = self.weight * self.weight;
        let kernel = CMat::from_fn(g, g, |i, j| C64::from_polar(w2, f(self.xs[i], self.xs[j])));
        let t = &phi * kernel;
        let pairs = t * phi.transpose();
        // pairs[(m1 n1), (m2 n2)] -> out[(m1 m2), (n1 n2)]
        CMat::from_fn(d * d, d * d, |r, c| {
            let (m1, m2) = (r / d, r % d);
            let (n1, n2) = (c / d, c % d);
            pairs[(m1 * d + n1, m2 * d + n2)]
        })
    }
}

/// Error of the second-order shift construction against the exact gate on
/// inputs with both modes at most `n_in` photons.
pub fn shift2_decomposition_error(beta: f64, d: usize, n_in: usize, backend: Backend) -> Result<f64> {
    let space = FockSpace::new(2, d)?;
    let circ = decompose_shift2(0, 1, beta)?;
    let u = circuit_unitary(&circ, &space, backend)?;
    let exact = gate_unitary(&Gate::new(GateKind::Shift2, vec![0, 1], beta), &space, Backend::Compressed)?;
    let cols = space.filter(|n| n[0] <= n_in && n[1] <= n_in);
    Ok(column_error(&u, &exact, &cols))
}

/// Error of the quartic construction (target mode 0, ancilla mode 1 in vacuum)
/// against exact exp(i alpha X^4), on target inputs with at most `n_in` photons.
/// With `full` the shift gates are lowered as well.
pub fn quartic_decomposition_error(alpha: f64, d: usize, n_in: usize, full: bool, backend: Backend) -> Result<f64> {
    let space = FockSpace::new(2, d)?;
    let q = Circuit::new(1, vec![Gate::single(GateKind::Q, 0, alpha)]);
    let circ = if full { lower(&q) } else { expand_quartic(&q) };
    let u = circuit_unitary(&circ, &space, backend)?;
    let exact = gate_unitary(&Gate::single(GateKind::Q, 0, alpha), &space, Backend::Compressed)?;
    let cols = space.filter(|n| n[0] <= n_in && n[1] == 0);
    Ok(column_error(&u, &exact, &cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

pub fn parse_spins(s: &str) -> Result<Vec<Spin>> {
    s.chars()
        .map(|c| match c {
            '↑' | 'u' | 'U' | '0' => Ok(Spin::Up),
            '↓' | 'd' | 'D' | '1' => Ok(Spin::Down),
            other => Err(Error::invalid(format!("unknown spin symbol {other:?}"))),
        })
        .collect()
}

/// Occupation digits (n_up, n_down) per site.
fn spin_digits(spins: &[Spin]) -> Vec<usize> {
    spins
        .iter()
        .flat_map(|s| match s {
            Spin::Up => [1, 0],
            Spin::Down => [0, 1],
        })
        .collect()
}

pub fn embed_spin_state(spins: &[Spin], space: &FockSpace) -> Result<CVec> {
    if space.n_modes != 2 * spins.len() {
        return Err(Error::invalid("space must have two modes per spin"));
    }
    let mut v = CVec::zeros(space.dim());
    v[space.index(&spin_digits(spins))] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Fock indices of the one-photon-per-site states, in spin-oracle order.
pub fn spin_subspace_indices(n_sites: usize, space: &FockSpace) -> Vec<usize> {
    (0..1usize << n_sites)
        .map(|s| {
            let spins: Vec<Spin> = (0..n_sites)
                .map(|k| if s >> (n_sites - 1 - k) & 1 == 0 { Spin::Up } else { Spin::Down })
                .collect();
            space.index(&spin_digits(&spins))
        })
        .collect()
}

pub fn restrict(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Operator norm of (u - r) applied to the listed input basis states.
pub fn column_error(u: &CMat, r: &CMat, cols: &[usize]) -> f64 {
    let all: Vec<usize> = (0..u.nrows()).collect();
    spectral_norm(&(restrict(u, &all, cols) - restrict(r, &all, cols)))
}

pub fn max_entry_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    max_entry_diff(&(u.adjoint() * u), &CMat::identity(u.ncols(), u.ncols()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kind: GateKind, modes: Vec<usize>, param: f64) -> Gate {
        Gate { kind, modes, param, dagger: false }
    }

    fn block(m: &CMat, n: usize) -> CMat {
        m.view((0, 0), (n, n)).into_owned()
    }

    #[test]
    fn mode_operator_examples() {
        let ops = mode_operators(2);
        assert!((ops.x[(0, 1)].re - 0.5).abs() < 1e-15 && (ops.x[(1, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!(ops.x[(0, 0)].norm(), 0.0);
        for d in 2..8 {
            let ops = mode_operators(d);
            let x2 = &ops.x * &ops.x;
            assert!((x2[(0, 0)].re - 0.25).abs() < 1e-15);
            let c = commutator(&ops.x, &ops.p);
            let want = CMat::identity(d - 1, d - 1) * C64::new(0.0, 0.5);
            assert!(max_entry_diff(&block(&c, d - 1), &want) < 1e-12);
            let nq = &x2 + &ops.p * &ops.p - CMat::identity(d, d) * C64::new(0.5, 0.0);
            assert!(max_entry_diff(&block(&nq, d - 1), &block(&ops.n, d - 1)) < 1e-12);
            assert!(max_entry_diff(&(&ops.x + &ops.p * C64::new(0.0, 1.0)), &ops.a) < 1e-15);
        }
    }

    #[test]
    fn term_matrix_examples() {
        use crate::bosonize::QFactor;
        let space = FockSpace::new(2, 2).unwrap();
        let t = QuadratureTerm { coefficient: 1.0, factors: vec![QFactor { mode: 0, quad: Quad::X, power: 1 }] };
        let want = mode_operators(2).x.kronecker(&CMat::identity(2, 2));
        assert!(max_entry_diff(&quadrature_term_matrix(&t, &space).unwrap(), &want) < 1e-15);
        let nn = LadderTerm { coefficient: 1.0, factors: vec![(0, LadderOp::Number), (1, LadderOp::Number)] };
        let m = ladder_term_matrix(&nn, &space).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 0.0, 0.0, 1.0]);
        let space = FockSpace::new(4, 3).unwrap();
        let xxxx = QuadratureTerm {
            coefficient: 0.7,
            factors: (0..4).map(|mode| QFactor { mode, quad: Quad::X, power: 1 }).collect(),
        };
        let m = quadrature_term_matrix(&xxxx, &space).unwrap();
        assert!(m.iter().all(|z| z.im == 0.0));
        assert!(max_entry_diff(&m, &m.transpose()) < 1e-15);
    }

    #[test]
    fn guard_and_modes() {
        assert!(matches!(FockSpace::new(5, 10), Err(Error::Guard(_))));
        assert!(FockSpace::new(4, 10).is_ok());
        assert!(FockSpace::new(1, 1).is_err());
        let s = FockSpace::new(2, 3).unwrap();
        assert!(embed(&s, &[2], &CMat::identity(3, 3)).is_err());
        assert!(embed(&s, &[0, 0], &CMat::identity(9, 9)).is_err());
    }

    #[test]
    fn apply_local_matches_kron() {
        let space = FockSpace::new(3, 2).unwrap();
        let ops = mode_operators(2);
        let local = ops.a.kronecker(&ops.x);
        let id = CMat::identity(2, 2);
        // modes (2, 0): local is a on mode 2 and x on mode 0
        let want = ops.x.kronecker(&id).kronecker(&ops.a);
        assert!(max_entry_diff(&embed(&space, &[2, 0], &local).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn zero_gate_is_identity() {
        for backend in [Backend::Generator, Backend::Compressed] {
            let u = local_gate_unitary(&g(GateKind::G, vec![0], 0.0), 6, backend);
            assert!(max_entry_diff(&u, &CMat::identity(6, 6)) < 1e-12, "{backend:?}");
        }
    }

    #[test]
    fn fourier_fourth_power_is_phase_on_interior() {
        let d = 12;
        let f = local_gate_unitary(&g(GateKind::Fourier, vec![0], 0.0), d, Backend::Generator);
        let f4 = &f * &f * &f * &f;
        // exact rotation by 2 pi gives -1 on every level below the top one
        let want = CMat::identity(d - 1, d - 1) * C64::new(-1.0, 0.0);
        assert!(max_entry_diff(&block(&f4, d - 1), &want) < 1e-6);
        let fc = local_gate_unitary(&g(GateKind::Fourier, vec![0], 0.0), d, Backend::Compressed);
        let f4 = &fc * &fc * &fc * &fc;
        assert!(max_entry_diff(&f4, &(CMat::identity(d, d) * C64::new(-1.0, 0.0))) < 1e-12);
    }

    #[test]
    fn fourier_maps_x_to_p() {
        let d = 10;
        let ops = mode_operators(d);
        for backend in [Backend::Generator, Backend::Compressed] {
            let f = local_gate_unitary(&g(GateKind::Fourier, vec![0], 0.0), d, backend);
            let fx = &f * &ops.x * f.adjoint();
            assert!(max_entry_diff(&block(&fx, d - 2), &block(&ops.p, d - 2)) < 1e-9, "{backend:?}");
        }
    }

    #[test]
    fn cz_commutes_with_positions() {
        let d = 5;
        let ops = mode_operators(d);
        let id = CMat::identity(d, d);
        let u = local_gate_unitary(&g(GateKind::Cz, vec![0, 1], 0.3), d, Backend::Generator);
        assert!(commutator(&u, &ops.x.kronecker(&id)).iter().all(|z| z.norm() < 1e-10));
        assert!(commutator(&u, &id.kronecker(&ops.x)).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn gates_are_unitary() {
        let kinds = [
            (GateKind::R, 1),
            (GateKind::G, 1),
            (GateKind::V, 1),
            (GateKind::Q, 1),
            (GateKind::Fourier, 1),
            (GateKind::FourierDag, 1),
            (GateKind::Cz, 2),
            (GateKind::Shift1, 2),
            (GateKind::Shift2, 2),
        ];
        for (kind, arity) in kinds {
            let gate = g(kind, (0..arity).collect(), 0.37);
            let u = local_gate_unitary(&gate, 6, Backend::Generator);
            assert!(unitarity_defect(&u) < 1e-9, "{kind:?}");
        }
    }

    #[test]
    fn compressed_converges_with_spacing() {
        let coarse = HermiteGrid::with_spacing(6, 0.05).two(|x, y| 0.4 * x * y * y);
        let fine = HermiteGrid::with_spacing(6, 0.0125).two(|x, y| 0.4 * x * y * y);
        assert!(max_entry_diff(&coarse, &fine) < 1e-10);
        let grid = HermiteGrid::new(8);
        assert!(max_entry_diff(&grid.single(|_| 0.0), &CMat::identity(8, 8)) < 1e-12);
    }

    #[test]
    fn circuit_composition() {
        let space = FockSpace::new(1, 6).unwrap();
        let empty = Circuit::new(1, vec![]);
        let u = circuit_unitary(&empty, &space, Backend::Generator).unwrap();
        assert_eq!(u, CMat::identity(6, 6));
        let c = Circuit::new(1, vec![g(GateKind::G, vec![0], 0.2), g(GateKind::G, vec![0], 0.5)]);
        let u = circuit_unitary(&c, &space, Backend::Generator).unwrap();
        let want = gate_unitary(&g(GateKind::G, vec![0], 0.7), &space, Backend::Generator).unwrap();
        assert!(max_entry_diff(&u, &want) < 1e-10);
    }

    #[test]
    fn evolution_examples() {
        let h = HermitianMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-2.0, 0.0),
        ])))
        .unwrap();
        assert!(max_entry_diff(&exact_evolution(&h, 0.0), &CMat::identity(2, 2)) < 1e-14);
        let u = exact_evolution(&h, 0.3);
        assert!((u[(0, 0)] - C64::from_polar(1.0, 0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, -0.6)).norm() < 1e-14);
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn spin_embedding() {
        let space = FockSpace::new(2, 2).unwrap();
        let v = embed_spin_state(&parse_spins("↑").unwrap(), &space).unwrap();
        assert_eq!(v[space.index(&[1, 0])], C64::new(1.0, 0.0));
        let space = FockSpace::new(4, 3).unwrap();
        let v = embed_spin_state(&parse_spins("↓↓").unwrap(), &space).unwrap();
        assert_eq!(v[space.index(&[0, 1, 0, 1])], C64::new(1.0, 0.0));
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(parse_spins("x").is_err());
        assert_eq!(spin_subspace_indices(2, &space).len(), 4);
    }
}
