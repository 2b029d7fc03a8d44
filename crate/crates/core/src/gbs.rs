//! Hafnians, Gaussian covariance algebra and photon-counting probabilities.
//!
//! Ladder-basis covariances use the ordering `(b_1..b_M, b_1+..b_M+)` with
//! `sigma_ij = <{xi_i, xi_j+}>/2`; the vacuum is `I/2`. Quadrature moment
//! matrices `<q_i q_j>` are a separate type.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{CMat, Error, Result, C64};

/// Largest matrix accepted by the enumeration Hafnian.
pub const MAX_HAFNIAN_DIM: usize = 16;
const SYM_TOL: f64 = 1e-10;

fn check_hafnian_input(mat: &CMat) -> Result<()> {
    if !mat.is_square() || !mat.nrows().is_multiple_of(2) {
        return Err(Error::invalid("Hafnian needs a square matrix of even dimension"));
    }
    if mat.nrows() > MAX_HAFNIAN_DIM {
        return Err(Error::Guard(format!("Hafnian limited to {MAX_HAFNIAN_DIM} rows")));
    }
    let n = mat.nrows();
    for i in 0..n {
        for j in i + 1..n {
            if (mat[(i, j)] - mat[(j, i)]).norm() > SYM_TOL {
                return Err(Error::invalid(format!("Hafnian input not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Sum over perfect matchings by direct enumeration.
pub fn hafnian(mat: &CMat) -> Result<C64> {
    check_hafnian_input(mat)?;
    let mut free: Vec<usize> = (0..mat.nrows()).collect();
    Ok(matchings(mat, &mut free))
}

fn matchings(mat: &CMat, free: &mut Vec<usize>) -> C64 {
    if free.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let i = free.remove(0);
    let mut total = C64::new(0.0, 0.0);
    for pos in 0..free.len() {
        let j = free.remove(pos);
        let w = mat[(i, j)];
        if w != C64::new(0.0, 0.0) {
            total += w * matchings(mat, free);
        }
        free.insert(pos, j);
    }
    free.insert(0, i);
    total
}

/// Bitmask recursion over unmatched vertices; independent check of [`hafnian`].
pub fn hafnian_bitmask(mat: &CMat) -> Result<C64> {
    check_hafnian_input(mat)?;
    let n = mat.nrows();
    let full = (1usize << n) - 1;
    // memo[mask] = Hafnian of the vertices in mask
    let mut memo = vec![C64::new(0.0, 0.0); 1 << n];
    memo[0] = C64::new(1.0, 0.0);
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut acc = C64::new(0.0, 0.0);
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc += mat[(i, j)] * memo[rest & !(1 << j)];
        }
        memo[mask] = acc;
    }
    Ok(memo[full])
}

/// Symmetric real matrix of zero-mean quadrature moments <q_i q_j>.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMoments {
    pub sigma: DMatrix<f64>,
}

impl QuadratureMoments {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::invalid("moment matrix must be square"));
        }
        if (&sigma - sigma.transpose()).amax() > SYM_TOL {
            return Err(Error::invalid("moment matrix must be symmetric"));
        }
        Ok(QuadratureMoments { sigma })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    fn complex(&self) -> CMat {
        self.sigma.map(|v| C64::new(v, 0.0))
    }
}

/// <q_a q_b q_c q_d ...> of a zero-mean Gaussian as the Hafnian of the selected block.
pub fn wick_moment(sigma: &QuadratureMoments, indices: &[usize]) -> Result<f64> {
    if !indices.len().is_multiple_of(2) {
        return Err(Error::invalid("Wick moment needs an even number of operators"));
    }
    if indices.iter().any(|&i| i >= sigma.dim()) {
        return Err(Error::invalid("moment index out of range"));
    }
    let sub = CMat::from_fn(indices.len(), indices.len(), |i, j| {
        C64::new(sigma.sigma[(indices[i], indices[j])], 0.0)
    });
    Ok(hafnian(&sub)?.re)
}

/// Sample mean and standard error of prod_i q_{indices[i]} over `samples` draws.
pub fn monte_carlo_moment(sigma: &QuadratureMoments, indices: &[usize], samples: usize, seed: u64) -> Result<(f64, f64)> {
    let chol = Cholesky::new(sigma.sigma.clone())
        .ok_or_else(|| Error::invalid("moment matrix must be positive definite for sampling"))?;
    let l = chol.l();
    let n = sigma.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            q[i] = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
        }
        let p: f64 = indices.iter().map(|&i| q[i]).product();
        sum += p;
        sum2 += p * p;
    }
    let s = samples as f64;
    let mean = sum / s;
    let var = (sum2 / s - mean * mean) * s / (s - 1.0);
    Ok((mean, (var / s).sqrt()))
}

/// `Sigma (+) Sigma`.
pub fn doubled_embedding(sigma: &QuadratureMoments) -> DMatrix<f64> {
    let n = sigma.dim();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&sigma.sigma);
    a.view_mut((n, n), (n, n)).copy_from(&sigma.sigma);
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub m_modes: usize,
    pub sigma: CMat,
}

fn block_swap(m: usize) -> CMat {
    let mut x = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        x[(i, i + m)] = C64::new(1.0, 0.0);
        x[(i + m, i)] = C64::new(1.0, 0.0);
    }
    x
}

fn min_eigenvalue(h: &CMat) -> f64 {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

const PHYS_TOL: f64 = 1e-9;

impl CovarianceMatrix {
    /// Validates Hermiticity, the (b, b+) block structure and the uncertainty relation.
    pub fn new(sigma: CMat) -> Result<Self> {
        let n = sigma.nrows();
        if !sigma.is_square() || !n.is_multiple_of(2) || n == 0 {
            return Err(Error::invalid("covariance must be 2M x 2M"));
        }
        let m = n / 2;
        let herm = (&sigma - sigma.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > SYM_TOL {
            return Err(Error::Unphysical("covariance not Hermitian".into()));
        }
        let c = sigma.view((0, 0), (m, m));
        let d = sigma.view((0, m), (m, m));
        let structure = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| {
                (sigma[(i + m, j + m)] - c[(i, j)].conj()).norm()
                    + (sigma[(i + m, j)] - d[(i, j)].conj()).norm()
                    + (d[(i, j)] - d[(j, i)]).norm()
            })
            .fold(0.0, f64::max);
        if structure > SYM_TOL {
            return Err(Error::Unphysical("covariance lacks the (b, b+) block structure".into()));
        }
        let mut z = CMat::identity(n, n) * C64::new(0.5, 0.0);
        for i in m..n {
            z[(i, i)] = C64::new(-0.5, 0.0);
        }
        if min_eigenvalue(&(&sigma + z)) < -PHYS_TOL {
            return Err(Error::Unphysical("uncertainty relation violated".into()));
        }
        Ok(CovarianceMatrix { m_modes: m, sigma })
    }

    pub fn vacuum(m: usize) -> Self {
        CovarianceMatrix { m_modes: m, sigma: CMat::identity(2 * m, 2 * m) * C64::new(0.5, 0.0) }
    }

    /// State reached from vacuum by b -> U b + V b+ (U U+ - V V+ = I).
    pub fn from_bogoliubov(u: &CMat, v: &CMat) -> Result<Self> {
        let m = u.nrows();
        let mut s = CMat::zeros(2 * m, 2 * m);
        s.view_mut((0, 0), (m, m)).copy_from(u);
        s.view_mut((0, m), (m, m)).copy_from(v);
        s.view_mut((m, 0), (m, m)).copy_from(&v.map(|z| z.conj()));
        s.view_mut((m, m), (m, m)).copy_from(&u.map(|z| z.conj()));
        CovarianceMatrix::new(&s * s.adjoint() * C64::new(0.5, 0.0))
    }

    /// Two-mode squeezed vacuum on modes (0, 1), squeezing r.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let u = CMat::identity(2, 2) * C64::new(r.cosh(), 0.0);
        let v = CMat::from_row_slice(2, 2, &[0.0, r.sinh(), r.sinh(), 0.0].map(|x| C64::new(x, 0.0)));
        CovarianceMatrix::from_bogoliubov(&u, &v).expect("two-mode squeezing is physical")
    }

    /// Independent two-mode squeezed pairs (2j, 2j+1).
    pub fn squeezed_pairs(rs: &[f64]) -> Self {
        let m = 2 * rs.len();
        let mut u = CMat::zeros(m, m);
        let mut v = CMat::zeros(m, m);
        for (j, &r) in rs.iter().enumerate() {
            let (a, b) = (2 * j, 2 * j + 1);
            u[(a, a)] = C64::new(r.cosh(), 0.0);
            u[(b, b)] = C64::new(r.cosh(), 0.0);
            v[(a, b)] = C64::new(r.sinh(), 0.0);
            v[(b, a)] = C64::new(r.sinh(), 0.0);
        }
        CovarianceMatrix::from_bogoliubov(&u, &v).expect("squeezed pairs are physical")
    }

    /// sigma + I/2
    pub fn sigma_q(&self) -> CMat {
        &self.sigma + CMat::identity(2 * self.m_modes, 2 * self.m_modes) * C64::new(0.5, 0.0)
    }
}

/// A = X (I - (sigma + I/2)^-1)
pub fn a_from_covariance(cov: &CovarianceMatrix) -> Result<CMat> {
    let n = 2 * cov.m_modes;
    let inv = cov
        .sigma_q()
        .try_inverse()
        .ok_or_else(|| Error::Singular("sigma + I/2 is singular".into()))?;
    Ok(block_swap(cov.m_modes) * (CMat::identity(n, n) - inv))
}

/// Inverse of [`a_from_covariance`]: sigma = (I - X A)^-1 - I/2, checked for physicality.
pub fn covariance_from_a(a: &CMat) -> Result<CovarianceMatrix> {
    let n = a.nrows();
    if !a.is_square() || !n.is_multiple_of(2) {
        return Err(Error::invalid("A must be 2M x 2M"));
    }
    let m = n / 2;
    let sq = (CMat::identity(n, n) - block_swap(m) * a)
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - X A is singular".into()))?;
    if min_eigenvalue(&sq) <= PHYS_TOL {
        return Err(Error::Unphysical("sigma + I/2 is not positive definite".into()));
    }
    CovarianceMatrix::new(sq - CMat::identity(n, n) * C64::new(0.5, 0.0))
}

/// The commuting, positive off-diagonal block condition on A.
pub fn block_valid(a: &CMat) -> bool {
    let m = a.nrows() / 2;
    let a11 = a.view((0, 0), (m, m)).into_owned();
    let a12 = a.view((0, m), (m, m)).into_owned();
    let comm = (&a11 * &a12 - &a12 * &a11).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let herm = (&a12 - a12.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    comm <= SYM_TOL && herm <= SYM_TOL && (m == 0 || min_eigenvalue(&a12) >= -SYM_TOL)
}

/// Rows/columns i and i + M for each photon in mode i (repeated m_i times).
fn select(a: &CMat, pattern: &[usize]) -> CMat {
    let m = pattern.len();
    let mut idx: Vec<usize> = Vec::new();
    for (i, &k) in pattern.iter().enumerate() {
        idx.extend(std::iter::repeat_n(i, k));
    }
    let n = idx.len();
    let full: Vec<usize> = idx.iter().cloned().chain(idx.iter().map(|i| i + m)).collect();
    CMat::from_fn(2 * n, 2 * n, |r, c| a[(full[r], full[c])])
}

fn sqrt_det(cov: &CovarianceMatrix) -> f64 {
    cov.sigma_q().determinant().re.sqrt()
}

fn check_pattern(cov: &CovarianceMatrix, pattern: &[usize]) -> Result<usize> {
    if pattern.len() != cov.m_modes {
        return Err(Error::invalid("pattern length differs from mode count"));
    }
    let total: usize = pattern.iter().sum();
    if total > MAX_HAFNIAN_DIM / 2 {
        return Err(Error::Guard(format!("at most {} photons supported", MAX_HAFNIAN_DIM / 2)));
    }
    Ok(total)
}

fn real_probability(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-9 * z.norm().max(1e-12) && z.im.abs() > 1e-12 {
        return Err(Error::Unphysical(format!("probability has imaginary part {}", z.im)));
    }
    Ok(z.re)
}

/// Pr(m) = Haf(A_S) / sqrt(det sigma_Q) for collision-free patterns.
pub fn gbs_probability(cov: &CovarianceMatrix, pattern: &[usize]) -> Result<f64> {
    check_pattern(cov, pattern)?;
    if pattern.iter().any(|&k| k > 1) {
        return Err(Error::invalid("collision patterns are outside the primary path"));
    }
    let a = a_from_covariance(cov)?;
    real_probability(hafnian(&select(&a, pattern))? / sqrt_det(cov))
}

/// Pr(m) = Haf(A_S) / (prod m_i! sqrt(det sigma_Q)) with rows repeated per photon.
pub fn gbs_probability_collisions(cov: &CovarianceMatrix, pattern: &[usize]) -> Result<f64> {
    check_pattern(cov, pattern)?;
    let a = a_from_covariance(cov)?;
    let fact: f64 = pattern.iter().map(|&k| (1..=k).map(|v| v as f64).product::<f64>()).product();
    real_probability(hafnian(&select(&a, pattern))? / (fact * sqrt_det(cov)))
}

/// Same as [`gbs_probability_collisions`] with sqrt(prod m_i!) in the denominator.
pub fn gbs_probability_printed(cov: &CovarianceMatrix, pattern: &[usize]) -> Result<f64> {
    check_pattern(cov, pattern)?;
    let a = a_from_covariance(cov)?;
    let fact: f64 = pattern.iter().map(|&k| (1..=k).map(|v| v as f64).product::<f64>()).product();
    real_probability(hafnian(&select(&a, pattern))? / (fact.sqrt() * sqrt_det(cov)))
}

/// All patterns over `m` modes with total photons <= cap.
pub fn patterns(m: usize, cap: usize, collision_free: bool) -> Vec<Vec<usize>> {
    let max_per = if collision_free { 1 } else { cap };
    let mut out = Vec::new();
    let mut cur = vec![0; m];
    fn rec(i: usize, left: usize, max_per: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left.min(max_per) {
            cur[i] = k;
            rec(i + 1, left - k, max_per, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, cap, max_per, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub haf_sigma: f64,
    pub sqrt_haf_a: f64,
    pub embedding_physical: bool,
    pub postselect_pattern: Vec<usize>,
    /// Pr(1, ..., 1) when the embedding is a physical state
    pub probability: Option<f64>,
}

/// Reads <q_1 ... q_n> off the all-ones photon pattern of the doubled embedding.
pub fn estimate_quartic_moment(sigma: &QuadratureMoments) -> Result<MomentEstimate> {
    let n = sigma.dim();
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::invalid("moment matrix needs even, non-zero dimension"));
    }
    let haf_sigma = hafnian(&sigma.complex())?;
    if haf_sigma.im.abs() > 1e-12 {
        return Err(Error::invalid("real moment matrix gave a complex Hafnian"));
    }
    let a = doubled_embedding(sigma).map(|v| C64::new(v, 0.0));
    let pattern = vec![1; n];
    match covariance_from_a(&a) {
        Ok(cov) => {
            let pr = gbs_probability(&cov, &pattern)?;
            // Pr(1..1) sqrt(det sigma_Q) = Haf(A) = Haf(Sigma)^2
            let sqrt_haf_a = (pr * sqrt_det(&cov)).max(0.0).sqrt();
            Ok(MomentEstimate {
                haf_sigma: haf_sigma.re,
                sqrt_haf_a,
                embedding_physical: true,
                postselect_pattern: pattern,
                probability: Some(pr),
            })
        }
        Err(Error::Unphysical(_)) | Err(Error::Singular(_)) => Ok(MomentEstimate {
            haf_sigma: haf_sigma.re,
            sqrt_haf_a: hafnian(&a)?.re.abs().sqrt(),
            embedding_physical: false,
            postselect_pattern: pattern,
            probability: None,
        }),
        Err(e) => Err(e),
    }
}

/// Optical modes for an N-site lattice: two per site, doubled for the embedding.
pub fn optical_modes(n_sites: usize) -> usize {
    4 * n_sites
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64], n: usize) -> CMat {
        CMat::from_row_slice(n, n, &v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn hafnian_examples() {
        let m = c(&[2.0, 0.7, 0.7, -1.0], 2);
        assert_eq!(hafnian(&m).unwrap(), C64::new(0.7, 0.0));
        let ones = c(&[1.0; 16], 4);
        assert_eq!(hafnian(&ones).unwrap(), C64::new(3.0, 0.0));
        assert_eq!(hafnian(&CMat::zeros(0, 0)).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(hafnian_bitmask(&ones).unwrap(), C64::new(3.0, 0.0));
        assert!(hafnian(&c(&[1.0; 9], 3)).is_err());
        assert!(hafnian(&c(&[0.0, 1.0, 2.0, 0.0], 2)).is_err());
        // K_6 has 15 perfect matchings
        assert_eq!(hafnian(&c(&[1.0; 36], 6)).unwrap(), C64::new(15.0, 0.0));
    }

    #[test]
    fn wick_examples() {
        let mut s = DMatrix::<f64>::identity(4, 4) * 0.3;
        s[(0, 1)] = 0.2;
        s[(1, 0)] = 0.2;
        s[(2, 3)] = 0.2;
        s[(3, 2)] = 0.2;
        let q = QuadratureMoments::new(s).unwrap();
        assert!((wick_moment(&q, &[0, 1, 2, 3]).unwrap() - 0.04).abs() < 1e-15);
        let all = QuadratureMoments::new(DMatrix::from_element(4, 4, 0.5)).unwrap();
        assert!((wick_moment(&all, &[0, 1, 2, 3]).unwrap() - 0.75).abs() < 1e-15);
        assert!(wick_moment(&all, &[0, 1, 2]).is_err());
    }

    #[test]
    fn vacuum_probabilities() {
        let v = CovarianceMatrix::vacuum(3);
        assert!(a_from_covariance(&v).unwrap().iter().all(|z| z.norm() < 1e-15));
        assert!((gbs_probability(&v, &[0, 0, 0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gbs_probability(&v, &[1, 1, 0]).unwrap(), 0.0);
        assert!(gbs_probability(&v, &[2, 0, 0]).is_err());
    }

    #[test]
    fn two_mode_squeezed_distribution() {
        // Pr(n, n) = tanh^{2n} r / cosh^2 r
        let r = 0.4;
        let cov = CovarianceMatrix::two_mode_squeezed(r);
        let p00 = gbs_probability(&cov, &[0, 0]).unwrap();
        let p11 = gbs_probability(&cov, &[1, 1]).unwrap();
        let ch2 = r.cosh().powi(2);
        assert!((p00 - 1.0 / ch2).abs() < 1e-12);
        assert!((p11 - r.tanh().powi(2) / ch2).abs() < 1e-12);
        assert!(gbs_probability(&cov, &[1, 0]).unwrap().abs() < 1e-15);
        let p22 = gbs_probability_collisions(&cov, &[2, 2]).unwrap();
        assert!((p22 - r.tanh().powi(4) / ch2).abs() < 1e-12);
        assert!(block_valid(&a_from_covariance(&cov).unwrap()));
    }

    #[test]
    fn single_mode_squeezed_pair_probability() {
        // Pr(2) = tanh^2 r / (2 cosh r) for a single-mode squeezed vacuum
        let r: f64 = 0.5;
        let u = c(&[r.cosh()], 1);
        let v = c(&[r.sinh()], 1);
        let cov = CovarianceMatrix::from_bogoliubov(&u, &v).unwrap();
        let p2 = gbs_probability_collisions(&cov, &[2]).unwrap();
        assert!((p2 - r.tanh().powi(2) / (2.0 * r.cosh())).abs() < 1e-12);
        let printed = gbs_probability_printed(&cov, &[2]).unwrap();
        assert!((printed / p2 - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_unphysical() {
        let bad = CMat::identity(2, 2) * C64::new(0.1, 0.0);
        assert!(matches!(CovarianceMatrix::new(bad), Err(Error::Unphysical(_))));
        let big = c(&[0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 1.5, 0.0, 0.0, 1.5, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0], 4);
        assert!(covariance_from_a(&big).is_err());
    }

    #[test]
    fn estimator_examples() {
        let mut s = DMatrix::<f64>::identity(4, 4) * 0.25;
        s[(0, 1)] = 0.1;
        s[(1, 0)] = 0.1;
        s[(2, 3)] = 0.1;
        s[(3, 2)] = 0.1;
        let est = estimate_quartic_moment(&QuadratureMoments::new(s).unwrap()).unwrap();
        assert!(est.embedding_physical);
        assert!((est.haf_sigma - 0.01).abs() < 1e-15);
        assert!((est.sqrt_haf_a - 0.01).abs() < 1e-10);
        let vac = estimate_quartic_moment(&QuadratureMoments::new(DMatrix::identity(4, 4) * 0.25).unwrap()).unwrap();
        assert_eq!(vac.haf_sigma, 0.0);
        assert!(vac.sqrt_haf_a.abs() < 1e-8);
        let strong = estimate_quartic_moment(&QuadratureMoments::new(DMatrix::from_element(4, 4, 1.0)).unwrap()).unwrap();
        assert!(!strong.embedding_physical);
        assert!((strong.haf_sigma - 3.0).abs() < 1e-12);
        assert_eq!(optical_modes(3), 12);
    }

    #[test]
    fn pattern_enumeration() {
        assert_eq!(patterns(2, 2, false).len(), 6);
        assert_eq!(patterns(4, 4, true).len(), 16);
        assert_eq!(patterns(3, 0, true), vec![vec![0, 0, 0]]);
    }
}
