//! State generation, sign conversion and trapdoor measurement for the
//! `ρ^±_π` ensembles.
//!
//! Each message bit travels as one pure member `|ψ^±_π(σ)⟩` of the ensemble
//! with a fresh uniformly random `σ`. Since every statistic the protocol
//! produces is linear in the density matrix, sampling `σ` per bit reproduces
//! `ρ^±_π` exactly in distribution.
//!
//! Bit labels: a message bit `1` is encoded as `ρ^+_π` and `0` as `ρ^-_π`.
//! The raw outcome label of the distinguishing circuit is the opposite
//! (`ρ^+ ↦ 0`), so [`decode_bit`] maps `+ ↦ 1` and `− ↦ 0`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::qsim::{Branch, PlusMinus, RegisterId, RegisterLayout, SparseState};

const ANCILLA_REG: RegisterId = RegisterId(0);
const SAMPLE_REG: RegisterId = RegisterId(1);
const PAYLOAD: RegisterId = RegisterId(0);

/// Capability for reading amplitudes and preparation metadata. Party code
/// never holds one; tests and the post-hoc inspector do.
#[derive(Debug, Clone, Copy)]
pub struct Inspector(());

impl Inspector {
    pub fn privileged() -> Self {
        Inspector(())
    }
}

/// How an honest sample was prepared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Origin {
    pub sigma: Permutation,
    pub key: Permutation,
    pub sign: PlusMinus,
}

/// One transmitted system: a one-register state over `S_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct QscdSample {
    payload: SparseState,
    origin: Option<Origin>,
}

impl QscdSample {
    /// Wraps an arbitrary one-register state, as an adversary would send.
    pub fn from_payload(payload: SparseState) -> Result<Self> {
        let layout = payload.layout();
        if layout.has_ancilla || layout.perm_registers != 1 {
            return Err(Error::LayoutMismatch);
        }
        payload.check_normalized()?;
        Ok(Self { payload, origin: None })
    }

    pub fn degree(&self) -> usize {
        self.payload.layout().n
    }

    pub fn payload(&self, _: &Inspector) -> &SparseState {
        &self.payload
    }

    pub fn origin(&self, _: &Inspector) -> Option<&Origin> {
        self.origin.as_ref()
    }

    fn with_payload(&self, payload: SparseState) -> Self {
        Self {
            payload,
            origin: self.origin,
        }
    }
}

fn require_key(pi: &Permutation) -> Result<()> {
    if pi.is_fixed_point_free_involution() {
        Ok(())
    } else {
        Err(Error::NotInvolution(pi.to_string()))
    }
}

/// Runs the six-step preparation circuit on `|0⟩|id_n⟩|σ⟩` and returns the
/// full final state, which is `|0⟩|σ⟩|ψ^+_π(σ)⟩`.
pub fn preparation_circuit(pi: &Permutation, sigma: &Permutation) -> Result<SparseState> {
    require_key(pi)?;
    let n = pi.degree();
    let layout = RegisterLayout::new(true, 2, n)?;
    let start = SparseState::basis(layout, 0, &[Permutation::identity(n)?, *sigma])?;
    start
        .hadamard_ancilla()?
        .c_pi(pi, ANCILLA_REG)?
        .c_one(ANCILLA_REG)?
        .c_swap(ANCILLA_REG, SAMPLE_REG)?
        .c_compose_right(ANCILLA_REG, SAMPLE_REG)
}

/// `ψ^+_π(σ)` for a given `σ`, produced by the preparation circuit.
pub fn generate_plus_from(pi: &Permutation, sigma: &Permutation) -> Result<QscdSample> {
    let payload = preparation_circuit(pi, sigma)?.extract_register(SAMPLE_REG)?;
    Ok(QscdSample {
        payload,
        origin: Some(Origin {
            sigma: *sigma,
            key: *pi,
            sign: PlusMinus::Plus,
        }),
    })
}

/// One member of `ρ^+_π` with uniformly random `σ ∈ S_n`.
pub fn generate_plus<R: Rng + ?Sized>(pi: &Permutation, rng: &mut R) -> Result<QscdSample> {
    let sigma = Permutation::random(rng, pi.degree())?;
    generate_plus_from(pi, &sigma)
}

/// Applies `C_sgn`, turning `ψ^+_π(σ)` into `±ψ^-_π(σ)` without knowledge of
/// `π`. Basis states only pick up a sign.
pub fn convert_sign(sample: &QscdSample) -> Result<QscdSample> {
    let payload = sample.payload.c_sgn(PAYLOAD)?;
    let mut out = sample.with_payload(payload);
    if let Some(origin) = out.origin.as_mut() {
        origin.sign = match origin.sign {
            PlusMinus::Plus => PlusMinus::Minus,
            PlusMinus::Minus => PlusMinus::Plus,
        };
    }
    Ok(out)
}

/// The distinguishing circuit up to (not including) the final measurement:
/// adjoin `|0⟩`, `H`, `C_π`, `H`.
pub fn distinguishing_state(pi: &Permutation, payload: &SparseState) -> Result<SparseState> {
    require_key(pi)?;
    payload
        .with_ancilla()?
        .hadamard_ancilla()?
        .c_pi(pi, PAYLOAD)?
        .hadamard_ancilla()
}

/// Exact ancilla-outcome branches of the distinguishing circuit.
pub fn circuit_branches(pi: &Permutation, payload: &SparseState) -> Result<[Branch; 2]> {
    distinguishing_state(pi, payload)?.ancilla_branches()
}

/// Runs the distinguishing circuit and measures the ancilla. Returns `0` for
/// `ρ^+_π`, `1` for `ρ^-_π`, and the post-measurement sample.
pub fn distinguish_circuit<R: Rng + ?Sized>(
    pi: &Permutation,
    sample: &QscdSample,
    rng: &mut R,
) -> Result<(u8, QscdSample)> {
    let (bit, post) = distinguishing_state(pi, &sample.payload)?.measure_ancilla(rng)?;
    Ok((bit, sample.with_payload(post)))
}

/// Measures `M_π` on the sample.
pub fn measure_pm<R: Rng + ?Sized>(
    pi: &Permutation,
    sample: &QscdSample,
    rng: &mut R,
) -> Result<(PlusMinus, QscdSample)> {
    require_key(pi)?;
    let (outcome, post) = sample.payload.measure_pm(pi, PAYLOAD, rng)?;
    Ok((outcome, sample.with_payload(post)))
}

/// Exact `M_π` branches of an arbitrary payload.
pub fn measurement_branches(pi: &Permutation, payload: &SparseState) -> Result<[Branch; 2]> {
    payload.pm_branches(pi, PAYLOAD)
}

/// `M_π` with the distinguishing circuit's labels: `+ ↦ 0`, `− ↦ 1`.
pub fn measure_bit<R: Rng + ?Sized>(pi: &Permutation, sample: &QscdSample, rng: &mut R) -> Result<(u8, QscdSample)> {
    let (outcome, post) = measure_pm(pi, sample, rng)?;
    Ok((label_of(outcome), post))
}

pub fn label_of(outcome: PlusMinus) -> u8 {
    match outcome {
        PlusMinus::Plus => 0,
        PlusMinus::Minus => 1,
    }
}

/// Message bit carried by a measurement outcome: `+ ↦ 1`, `− ↦ 0`.
pub fn decode_bit(outcome: PlusMinus) -> u8 {
    match outcome {
        PlusMinus::Plus => 1,
        PlusMinus::Minus => 0,
    }
}

/// `1 ↦ ρ^+_π`, `0 ↦ ρ^-_π`.
pub fn encode_bit<R: Rng + ?Sized>(bit: u8, pi: &Permutation, rng: &mut R) -> Result<QscdSample> {
    let plus = generate_plus(pi, rng)?;
    match bit {
        1 => Ok(plus),
        0 => convert_sign(&plus),
        other => Err(Error::InvalidParams(format!("bit value {other}"))),
    }
}

/// Majority vote over the decoded copies of one bit; ties go to the first
/// copy. `None` for no copies.
pub fn majority(bits: &[u8]) -> Option<u8> {
    let first = *bits.first()?;
    let ones = bits.iter().filter(|&&b| b == 1).count();
    Some(match (2 * ones).cmp(&bits.len()) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => first,
    })
}

/// Measures `M_π` on every copy of one bit and returns the majority-decoded
/// bit with the post-measurement copies.
pub fn decode_copies<R: Rng + ?Sized>(
    pi: &Permutation,
    copies: &[QscdSample],
    rng: &mut R,
) -> Result<(u8, Vec<QscdSample>)> {
    let mut bits = Vec::with_capacity(copies.len());
    let mut posts = Vec::with_capacity(copies.len());
    for copy in copies {
        let (outcome, post) = measure_pm(pi, copy, rng)?;
        bits.push(decode_bit(outcome));
        posts.push(post);
    }
    let bit = majority(&bits).ok_or_else(|| Error::InvalidParams("no copies".into()))?;
    Ok((bit, posts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::oracle::{oracle_density, Ensemble, EnsembleEstimate};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key() -> Permutation {
        Permutation::parse_cycles(6, "(1 4)(2 6)(3 5)").unwrap()
    }

    fn inspector() -> Inspector {
        Inspector::privileged()
    }

    #[test]
    fn preparation_circuit_trace() {
        let pi = key();
        let sigma = Permutation::parse_cycles(6, "(1 2 3)(4 5)").unwrap();
        let id = Permutation::identity(6).unwrap();
        let layout = RegisterLayout::new(true, 2, 6).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;

        let s0 = SparseState::basis(layout, 0, &[id, sigma]).unwrap();
        let s1 = s0.hadamard_ancilla().unwrap();
        let s2 = s1.c_pi(&pi, ANCILLA_REG).unwrap();
        assert_eq!(s2.amplitude(1, &[pi, sigma]).unwrap(), Complex64::new(h, 0.0));
        let s3 = s2.c_one(ANCILLA_REG).unwrap();
        assert_eq!(s3.amplitude(0, &[pi, sigma]).unwrap(), Complex64::new(h, 0.0));
        assert_eq!(s3.amplitude(0, &[id, sigma]).unwrap(), Complex64::new(h, 0.0));
        let s4 = s3.c_swap(ANCILLA_REG, SAMPLE_REG).unwrap();
        let s5 = s4.c_compose_right(ANCILLA_REG, SAMPLE_REG).unwrap();
        assert_eq!(s5, preparation_circuit(&pi, &sigma).unwrap());

        let expected = SparseState::from_terms(
            layout,
            [
                (0, vec![sigma, sigma], Complex64::new(h, 0.0)),
                (0, vec![sigma, sigma.compose(&pi).unwrap()], Complex64::new(h, 0.0)),
            ],
        )
        .unwrap();
        assert!(s5.equals_up_to_phase(&expected, 1e-12));

        let sample = generate_plus_from(&pi, &sigma).unwrap();
        let psi = SparseState::psi(&pi, &sigma, PlusMinus::Plus).unwrap();
        assert!(sample.payload(&inspector()).equals_up_to_phase(&psi, 1e-12));
        assert_eq!(sample.origin(&inspector()).unwrap().sigma, sigma);
    }

    #[test]
    fn generate_from_identity() {
        let pi = key();
        let id = Permutation::identity(6).unwrap();
        let sample = generate_plus_from(&pi, &id).unwrap();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let p = sample.payload(&inspector());
        assert_eq!(p.support_size(), 2);
        assert_eq!(p.amplitude(0, &[id]).unwrap(), h);
        assert_eq!(p.amplitude(0, &[pi]).unwrap(), h);
    }

    #[test]
    fn generation_rejects_non_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = Permutation::parse_cycles(6, "(1 2 3)(4 5)").unwrap();
        assert!(matches!(generate_plus(&bad, &mut rng), Err(Error::NotInvolution(_))));
    }

    #[test]
    fn convert_sign_examples() {
        let pi = key();
        let id = Permutation::identity(6).unwrap();
        let plus = generate_plus_from(&pi, &id).unwrap();
        let minus = convert_sign(&plus).unwrap();
        let expected = SparseState::psi(&pi, &id, PlusMinus::Minus).unwrap();
        let overlap = minus.payload(&inspector()).inner_product(&expected).unwrap();
        assert!((overlap - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let odd = Permutation::parse_cycles(6, "(1 2 3)(4 5)").unwrap();
        let plus = generate_plus_from(&pi, &odd).unwrap();
        let minus = convert_sign(&plus).unwrap();
        let expected = SparseState::psi(&pi, &odd, PlusMinus::Minus).unwrap();
        let overlap = minus.payload(&inspector()).inner_product(&expected).unwrap();
        assert!((overlap + Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(minus.origin(&inspector()).unwrap().sign, PlusMinus::Minus);

        // twice is the identity up to phase
        let back = convert_sign(&minus).unwrap();
        assert!(back
            .payload(&inspector())
            .equals_up_to_phase(plus.payload(&inspector()), 1e-12));
    }

    #[test]
    fn ensembles_match_dense_oracle() {
        let pi = key();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut plus = EnsembleEstimate::new();
        let mut minus = EnsembleEstimate::new();
        for _ in 0..40_000 {
            let s = generate_plus(&pi, &mut rng).unwrap();
            plus.add(s.payload(&inspector())).unwrap();
            minus.add(convert_sign(&s).unwrap().payload(&inspector())).unwrap();
        }
        let rho_plus = oracle_density(Ensemble::Plus, &pi).unwrap();
        let rho_minus = oracle_density(Ensemble::Minus, &pi).unwrap();
        let c = plus.compare(&rho_plus);
        assert!(c.is_consistent(), "{c:?}");
        let c = minus.compare(&rho_minus);
        assert!(c.is_consistent(), "{c:?}");
        assert!(!plus.compare(&rho_minus).is_consistent());
    }

    #[test]
    fn circuit_distinguishes_with_certainty() {
        let pi = key();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let plus = generate_plus(&pi, &mut rng).unwrap();
            let (bit, post) = distinguish_circuit(&pi, &plus, &mut rng).unwrap();
            assert_eq!(bit, 0);
            assert!(post
                .payload(&inspector())
                .equals_up_to_phase(plus.payload(&inspector()), 1e-12));
            let minus = convert_sign(&plus).unwrap();
            assert_eq!(distinguish_circuit(&pi, &minus, &mut rng).unwrap().0, 1);
        }
    }

    #[test]
    fn circuit_with_wrong_key_is_a_coin_flip() {
        let pi = key();
        let keys = Permutation::all_involutions(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 10_000;
        let mut zeros = 0;
        for _ in 0..trials {
            let wrong = loop {
                let k = keys[rng.random_range(0..keys.len())];
                if k != pi {
                    break k;
                }
            };
            let plus = generate_plus(&pi, &mut rng).unwrap();
            if distinguish_circuit(&wrong, &plus, &mut rng).unwrap().0 == 0 {
                zeros += 1;
            }
        }
        let f = zeros as f64 / trials as f64;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn circuit_and_measurement_agree_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let layout = RegisterLayout::single(6).unwrap();
        for _ in 0..200 {
            let pi = Permutation::random_involution(&mut rng, 6).unwrap();
            let support = rng.random_range(1..40);
            let s = SparseState::random(layout, support, &mut rng).unwrap();
            let a = circuit_branches(&pi, &s).unwrap();
            let b = measurement_branches(&pi, &s).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x.probability - y.probability).abs() < 1e-12);
                match (&x.state, &y.state) {
                    (Some(u), Some(v)) => assert!(u.equals_up_to_phase(v, 1e-12)),
                    (None, None) => {}
                    _ => panic!("branch support differs"),
                }
            }
        }
    }

    #[test]
    fn uniform_superposition_always_reads_plus() {
        let u = QscdSample::from_payload(SparseState::uniform_superposition(6).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for pi in Permutation::all_involutions(6).unwrap() {
            let [plus, _] = measurement_branches(&pi, u.payload(&inspector())).unwrap();
            assert!((plus.probability - 1.0).abs() < 1e-12);
            assert_eq!(measure_bit(&pi, &u, &mut rng).unwrap().0, 0);
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let pi = Permutation::random_involution(&mut rng, 6).unwrap();
            let message: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            for &bit in &message {
                let sample = encode_bit(bit, &pi, &mut rng).unwrap();
                let (outcome, _) = measure_pm(&pi, &sample, &mut rng).unwrap();
                assert_eq!(decode_bit(outcome), bit);
            }
        }
    }

    #[test]
    fn exact_wrong_key_probability_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let pi = Permutation::random_involution(&mut rng, 6).unwrap();
            let other = Permutation::random_involution(&mut rng, 6).unwrap();
            if other == pi {
                continue;
            }
            let s = generate_plus(&pi, &mut rng).unwrap();
            for sample in [s.clone(), convert_sign(&s).unwrap()] {
                let [p, m] = measurement_branches(&other, sample.payload(&inspector())).unwrap();
                assert!((p.probability - 0.5).abs() < 1e-12);
                assert!((m.probability - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decode_copies_majority() {
        let pi = key();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let copies: Vec<_> = (0..3).map(|_| encode_bit(0, &pi, &mut rng).unwrap()).collect();
        assert_eq!(decode_copies(&pi, &copies, &mut rng).unwrap().0, 0);
        assert!(decode_copies(&pi, &[], &mut rng).is_err());
    }

    #[test]
    fn majority_ties_go_to_first() {
        assert_eq!(majority(&[]), None);
        assert_eq!(majority(&[1, 0]), Some(1));
        assert_eq!(majority(&[0, 1]), Some(0));
        assert_eq!(majority(&[0, 1, 1]), Some(1));
        assert_eq!(majority(&[1, 0, 0, 0]), Some(0));
    }
}
