//! Brute-force dense oracle over `H_n = span{|σ⟩ : σ ∈ S_n}` for `n ≤ 7`.
//!
//! Everything here is built straight from the sum formulas over `S_n` or
//! `E_n`, never from the sparse code path, so it can be used to check that
//! path. Basis vector `|σ⟩` has index `rank(σ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PlusMinus, SparseState};
use crate::error::{Error, Result};
use crate::permgroup::{factorial, Permutation};

/// Largest degree the dense oracle accepts (`7! = 5040`).
pub const MAX_ORACLE_DEGREE: usize = 7;
/// Tolerance for every exact identity checked by [`verify_identities`].
pub const ORACLE_TOLERANCE: f64 = 1e-9;

pub type Matrix = DMatrix<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    Plus,
    Minus,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub n: usize,
    pub entries: Matrix,
}

fn dim(n: usize) -> Result<usize> {
    if n > MAX_ORACLE_DEGREE {
        return Err(Error::OracleTooLarge(n));
    }
    Permutation::identity(n)?;
    Ok(factorial(n) as usize)
}

fn index(p: &Permutation) -> usize {
    p.rank().value as usize
}

fn require_key(pi: &Permutation) -> Result<()> {
    if pi.is_fixed_point_free_involution() {
        Ok(())
    } else {
        Err(Error::NotInvolution(pi.to_string()))
    }
}

/// Adds `w (|a⟩ + s|b⟩)(⟨a| + s⟨b|)` to `m`.
fn add_pair_projector(m: &mut Matrix, a: usize, b: usize, s: f64, w: f64) {
    m[(a, a)] += w;
    m[(b, b)] += w;
    m[(a, b)] += s * w;
    m[(b, a)] += s * w;
}

fn sign_of(kind: PlusMinus) -> f64 {
    match kind {
        PlusMinus::Plus => 1.0,
        PlusMinus::Minus => -1.0,
    }
}

/// `ρ^±_π = (1/2n!) Σ_{σ∈S_n} (|σ⟩ ± |σ∘π⟩)(⟨σ| ± ⟨σ∘π|)`, or `𝟙/n!`.
pub fn oracle_density(kind: Ensemble, pi: &Permutation) -> Result<DensityMatrix> {
    let n = pi.degree();
    let d = dim(n)?;
    let mut m = Matrix::zeros(d, d);
    let s = match kind {
        Ensemble::Mixed => {
            for i in 0..d {
                m[(i, i)] = Complex64::new(1.0 / d as f64, 0.0);
            }
            return Ok(DensityMatrix { n, entries: m });
        }
        Ensemble::Plus => 1.0,
        Ensemble::Minus => -1.0,
    };
    require_key(pi)?;
    let w = 1.0 / (2.0 * d as f64);
    for sigma in Permutation::all(n)? {
        add_pair_projector(&mut m, index(&sigma), index(&sigma.compose(pi)?), s, w);
    }
    Ok(DensityMatrix { n, entries: m })
}

/// `P^±_π = (1/2) Σ_{σ∈E_n} (|σ⟩ ± |σ∘π⟩)(⟨σ| ± ⟨σ∘π|)`.
pub fn projector_sum(pi: &Permutation, kind: PlusMinus) -> Result<Matrix> {
    let n = pi.degree();
    let d = dim(n)?;
    require_key(pi)?;
    let mut m = Matrix::zeros(d, d);
    for sigma in Permutation::all(n)?.filter(|s| s.sign() == 1) {
        add_pair_projector(&mut m, index(&sigma), index(&sigma.compose(pi)?), sign_of(kind), 0.5);
    }
    Ok(m)
}

/// `R_π |σ⟩ = |σ∘π⟩`.
pub fn flip_operator(pi: &Permutation) -> Result<Matrix> {
    let n = pi.degree();
    let d = dim(n)?;
    let mut m = Matrix::zeros(d, d);
    for sigma in Permutation::all(n)? {
        m[(index(&sigma.compose(pi)?), index(&sigma))] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// `(I ± R_π)/2`.
pub fn flip_projector(pi: &Permutation, kind: PlusMinus) -> Result<Matrix> {
    let r = flip_operator(pi)?;
    let d = r.nrows();
    Ok((Matrix::identity(d, d) + r * Complex64::new(sign_of(kind), 0.0)) * Complex64::new(0.5, 0.0))
}

/// `C_sgn |α⟩ = sgn(α) |α⟩`.
pub fn sign_operator(n: usize) -> Result<Matrix> {
    let d = dim(n)?;
    let mut m = Matrix::zeros(d, d);
    for sigma in Permutation::all(n)? {
        let i = index(&sigma);
        m[(i, i)] = Complex64::new(sigma.sign() as f64, 0.0);
    }
    Ok(m)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_deviation(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

impl DensityMatrix {
    /// `|s⟩⟨s|` for a one-register state without ancilla.
    pub fn pure(state: &SparseState) -> Result<Self> {
        let n = state.layout().n;
        let d = dim(n)?;
        let entries = state.dense_entries()?;
        let mut m = Matrix::zeros(d, d);
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                m[(i, j)] += a * b.conj();
            }
        }
        Ok(Self { n, entries: m })
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `max |ρ - ρ†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        max_deviation(&self.entries, &self.entries.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&e| e.abs() > tol).count()
    }

    /// `Tr[A ρ]` without forming the product.
    pub fn expectation(&self, op: &Matrix) -> Complex64 {
        let d = self.entries.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += op[(i, j)] * self.entries[(j, i)];
            }
        }
        acc
    }

    /// `U ρ U†`.
    pub fn conjugated(&self, u: &Matrix) -> Self {
        Self {
            n: self.n,
            entries: u * &self.entries * u.adjoint(),
        }
    }
}

/// Running average of `|s⟩⟨s|` over sampled pure states, kept sparse, with
/// per-entry second moments for Monte Carlo error bars.
#[derive(Clone, Debug, Default)]
pub struct EnsembleEstimate {
    samples: usize,
    sums: std::collections::BTreeMap<(usize, usize), (Complex64, f64)>,
}

/// Entrywise comparison of an [`EnsembleEstimate`] against a dense matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleComparison {
    pub samples: usize,
    pub entries_checked: usize,
    /// Entries whose deviation exceeds three standard errors.
    pub beyond_3_sigma: usize,
    pub max_z: f64,
    pub max_abs_deviation: f64,
}

impl EnsembleComparison {
    /// Every entry within five standard errors and at most 1% of entries
    /// beyond three.
    pub fn is_consistent(&self) -> bool {
        self.max_z <= 5.0 && (self.beyond_3_sigma as f64) <= 0.01 * self.entries_checked as f64
    }
}

impl EnsembleEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, state: &SparseState) -> Result<()> {
        let entries = state.dense_entries()?;
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                let v = a * b.conj();
                let slot = self.sums.entry((i, j)).or_insert((Complex64::new(0.0, 0.0), 0.0));
                slot.0 += v;
                slot.1 += v.norm_sqr();
            }
        }
        self.samples += 1;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn compare(&self, target: &DensityMatrix) -> EnsembleComparison {
        let n = self.samples.max(1) as f64;
        let d = target.entries.nrows();
        let mut out = EnsembleComparison {
            samples: self.samples,
            entries_checked: 0,
            beyond_3_sigma: 0,
            max_z: 0.0,
            max_abs_deviation: 0.0,
        };
        let mut check = |mean: Complex64, second: f64, expected: Complex64| {
            let dev = (mean - expected).norm();
            let var = (second / n - mean.norm_sqr()).max(0.0);
            let se = (var / n).sqrt();
            let z = if dev <= 1e-12 {
                0.0
            } else if se == 0.0 {
                f64::INFINITY
            } else {
                dev / se
            };
            out.entries_checked += 1;
            out.max_abs_deviation = out.max_abs_deviation.max(dev);
            out.max_z = out.max_z.max(z);
            if z > 3.0 {
                out.beyond_3_sigma += 1;
            }
        };
        for (&(i, j), &(sum, second)) in &self.sums {
            check(sum / n, second, target.entries[(i, j)]);
        }
        // entries never hit by a sample have estimate zero
        for i in 0..d {
            for j in 0..d {
                let expected = target.entries[(i, j)];
                if expected.norm() > 1e-15 && !self.sums.contains_key(&(i, j)) {
                    check(Complex64::new(0.0, 0.0), 0.0, expected);
                }
            }
        }
        out
    }
}

/// One identity of the dense oracle suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: impl Into<String>, deviation: f64) -> Self {
        Self {
            name: name.into(),
            deviation,
            tolerance: ORACLE_TOLERANCE,
            passed: deviation <= ORACLE_TOLERANCE,
        }
    }
}

/// Runs the dense identities for key `pi`; `other` (a different key) enables
/// the wrong-key checks.
pub fn verify_identities(pi: &Permutation, other: Option<&Permutation>) -> Result<Vec<OracleCheck>> {
    let n = pi.degree();
    let d = dim(n)?;
    require_key(pi)?;
    // For n ≡ 0 (mod 4) the key is even and the sign flip no longer swaps ρ^±.
    if n % 4 != 2 {
        return Err(Error::InvalidParams(format!(
            "the ρ^± identities need n = 2(2m+1), got {n}"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let identity = Matrix::identity(d, d);
    let mut checks = Vec::new();

    let plus = oracle_density(Ensemble::Plus, pi)?;
    let minus = oracle_density(Ensemble::Minus, pi)?;
    let mixed = oracle_density(Ensemble::Mixed, pi)?;

    for (label, rho) in [("rho+", &plus), ("rho-", &minus), ("mixed", &mixed)] {
        checks.push(OracleCheck::new(
            format!("{label} hermitian"),
            rho.hermitian_deviation(),
        ));
        checks.push(OracleCheck::new(format!("{label} trace 1"), (rho.trace() - one).norm()));
    }
    for (label, rho) in [("rho+", &plus), ("rho-", &minus)] {
        let ev = rho.eigenvalues();
        checks.push(OracleCheck::new(format!("{label} psd"), (-ev[0]).max(0.0)));
        let rank = ev.iter().filter(|e| e.abs() > ORACLE_TOLERANCE).count();
        checks.push(OracleCheck::new(
            format!("{label} rank n!/2 (rank {rank})"),
            (rank as f64 - d as f64 / 2.0).abs(),
        ));
    }
    checks.push(OracleCheck::new(
        "rho+ rho- = 0",
        max_abs(&(&plus.entries * &minus.entries)),
    ));

    let sum_plus = projector_sum(pi, PlusMinus::Plus)?;
    let sum_minus = projector_sum(pi, PlusMinus::Minus)?;
    let flip_plus = flip_projector(pi, PlusMinus::Plus)?;
    let flip_minus = flip_projector(pi, PlusMinus::Minus)?;
    checks.push(OracleCheck::new(
        "(I+R)/2 = E_n sum P+",
        max_deviation(&flip_plus, &sum_plus),
    ));
    checks.push(OracleCheck::new(
        "(I-R)/2 = E_n sum P-",
        max_deviation(&flip_minus, &sum_minus),
    ));
    checks.push(OracleCheck::new(
        "P+ + P- = I",
        max_deviation(&(&sum_plus + &sum_minus), &identity),
    ));
    checks.push(OracleCheck::new("P+ P- = 0", max_abs(&(&sum_plus * &sum_minus))));
    checks.push(OracleCheck::new(
        "P+ P+ = P+",
        max_deviation(&(&sum_plus * &sum_plus), &sum_plus),
    ));

    checks.push(OracleCheck::new(
        "Tr[P+ rho+] = 1",
        (plus.expectation(&sum_plus) - one).norm(),
    ));
    checks.push(OracleCheck::new(
        "Tr[P- rho-] = 1",
        (minus.expectation(&sum_minus) - one).norm(),
    ));
    checks.push(OracleCheck::new(
        "Tr[P+ mixed] = 1/2",
        (mixed.expectation(&sum_plus) - Complex64::new(0.5, 0.0)).norm(),
    ));
    if let Some(other) = other {
        let wrong_plus = projector_sum(other, PlusMinus::Plus)?;
        let half = Complex64::new(0.5, 0.0);
        checks.push(OracleCheck::new(
            format!("Tr[P'+ rho+] = 1/2 (pi' = {other})"),
            (plus.expectation(&wrong_plus) - half).norm(),
        ));
        checks.push(OracleCheck::new(
            "Tr[P'+ rho-] = 1/2",
            (minus.expectation(&wrong_plus) - half).norm(),
        ));
    }

    let sgn = sign_operator(n)?;
    checks.push(OracleCheck::new(
        "C_sgn rho+ C_sgn = rho-",
        max_deviation(&plus.conjugated(&sgn).entries, &minus.entries),
    ));
    checks.push(OracleCheck::new(
        "C_sgn mixed C_sgn = mixed",
        max_deviation(&mixed.conjugated(&sgn).entries, &mixed.entries),
    ));

    // The E_n-indexed form of rho+ agrees with the S_n-indexed one, and the
    // sparse psi states reproduce it.
    let mut from_even = Matrix::zeros(d, d);
    let mut from_sparse = Matrix::zeros(d, d);
    let w = Complex64::new(2.0 / d as f64, 0.0);
    for sigma in Permutation::all(n)?.filter(|s| s.sign() == 1) {
        add_pair_projector(
            &mut from_even,
            index(&sigma),
            index(&sigma.compose(pi)?),
            1.0,
            1.0 / d as f64,
        );
        let psi = SparseState::psi(pi, &sigma, PlusMinus::Plus)?;
        from_sparse += DensityMatrix::pure(&psi)?.entries * w;
    }
    checks.push(OracleCheck::new(
        "rho+ over E_n = rho+ over S_n",
        max_deviation(&from_even, &plus.entries),
    ));
    checks.push(OracleCheck::new(
        "sparse psi+ ensemble = rho+",
        max_deviation(&from_sparse, &plus.entries),
    ));

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key() -> Permutation {
        Permutation::parse_cycles(6, "(1 2)(3 4)(5 6)").unwrap()
    }

    #[test]
    fn rejects_large_degree() {
        let pi = Permutation::parse_cycles(8, "(1 2)(3 4)(5 6)(7 8)").unwrap();
        assert_eq!(oracle_density(Ensemble::Plus, &pi), Err(Error::OracleTooLarge(8)));
    }

    #[test]
    fn small_degree_identities_hold() {
        let pi = Permutation::parse_cycles(2, "(1 2)").unwrap();
        let checks = verify_identities(&pi, None).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn identities_need_an_odd_key() {
        let pi = Permutation::parse_cycles(4, "(1 2)(3 4)").unwrap();
        assert!(matches!(verify_identities(&pi, None), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn pure_projector_matches_sparse_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = SparseState::random(crate::qsim::RegisterLayout::single(4).unwrap(), 6, &mut rng).unwrap();
        let rho = DensityMatrix::pure(&s).unwrap();
        assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(rho.hermitian_deviation() < 1e-15);
        assert_eq!(rho.rank(1e-9), 1);
    }

    #[test]
    fn ensemble_estimate_detects_wrong_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pi = Permutation::parse_cycles(4, "(1 2)(3 4)").unwrap();
        let mut est = EnsembleEstimate::new();
        for _ in 0..2000 {
            let sigma = Permutation::random(&mut rng, 4).unwrap();
            est.add(&SparseState::psi(&pi, &sigma, PlusMinus::Plus).unwrap())
                .unwrap();
        }
        assert!(est
            .compare(&oracle_density(Ensemble::Plus, &pi).unwrap())
            .is_consistent());
        assert!(!est
            .compare(&oracle_density(Ensemble::Minus, &pi).unwrap())
            .is_consistent());
        assert!(!est
            .compare(&oracle_density(Ensemble::Mixed, &pi).unwrap())
            .is_consistent());
    }

    #[test]
    fn flip_projector_matches_sparse_projection() {
        let pi = key();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = SparseState::random(crate::qsim::RegisterLayout::single(6).unwrap(), 5, &mut rng).unwrap();
        let (plus, _) = s.pm_projections(&pi, crate::qsim::RegisterId(0)).unwrap();
        let p = projector_sum(&pi, PlusMinus::Plus).unwrap();
        let d = p.nrows();
        let mut v = nalgebra::DVector::<Complex64>::zeros(d);
        for (i, a) in s.dense_entries().unwrap() {
            v[i] = a;
        }
        let pv = &p * v;
        let mut w = nalgebra::DVector::<Complex64>::zeros(d);
        for (i, a) in plus.dense_entries().unwrap() {
            w[i] = a;
        }
        assert!((pv - w).iter().all(|x| x.norm() < 1e-12));
    }
}
