//! Exact sparse pure-state simulation over an optional ancilla qubit and a
//! handful of permutation-valued registers.
//!
//! A basis configuration is `(ancilla bit, r_1, ..., r_k)` with each `r_j`
//! an element of `S_n`, stored by Lehmer rank. Only the unitaries the
//! protocol needs are provided; each of them permutes basis configurations
//! (up to a phase) except the Hadamard on the ancilla.
//!
//! Amplitudes live in a `BTreeMap` so that iteration order, and therefore
//! every floating-point sum, is reproducible run to run.

mod dump;
pub mod oracle;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{factorial, Permutation};

/// Amplitudes below this magnitude are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Allowed deviation of `Σ|a|²` from one.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Maximum number of permutation registers in one state.
pub const MAX_REGISTERS: usize = 4;

/// Index of a permutation register within a layout (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub has_ancilla: bool,
    pub perm_registers: usize,
    pub n: usize,
}

impl RegisterLayout {
    pub fn new(has_ancilla: bool, perm_registers: usize, n: usize) -> Result<Self> {
        if perm_registers == 0 || perm_registers > MAX_REGISTERS {
            return Err(Error::InvalidRegister {
                index: perm_registers,
                count: MAX_REGISTERS,
            });
        }
        Permutation::identity(n)?;
        Ok(Self {
            has_ancilla,
            perm_registers,
            n,
        })
    }

    /// One permutation register, no ancilla: the layout of a transmitted
    /// sample.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(false, 1, n)
    }

    fn check_register(&self, r: RegisterId) -> Result<()> {
        if r.0 < self.perm_registers {
            Ok(())
        } else {
            Err(Error::InvalidRegister {
                index: r.0,
                count: self.perm_registers,
            })
        }
    }

    fn check_pair(&self, a: RegisterId, b: RegisterId) -> Result<()> {
        self.check_register(a)?;
        self.check_register(b)?;
        if a == b {
            return Err(Error::SameRegister(a.0));
        }
        Ok(())
    }
}

/// One basis configuration. Unused register slots are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisConfig {
    pub ancilla: u8,
    regs: [u64; MAX_REGISTERS],
}

impl BasisConfig {
    pub fn register(&self, r: RegisterId) -> u64 {
        self.regs[r.0]
    }
}

/// Outcome of the two-outcome measurement `{P^+_π, P^-_π}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlusMinus {
    Plus,
    Minus,
}

impl PlusMinus {
    pub fn symbol(self) -> char {
        match self {
            PlusMinus::Plus => '+',
            PlusMinus::Minus => '-',
        }
    }
}

/// One branch of a projective measurement: its probability and, when the
/// probability is nonzero, the renormalized post-measurement state.
#[derive(Clone, Debug)]
pub struct Branch {
    pub probability: f64,
    pub state: Option<SparseState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    layout: RegisterLayout,
    amps: BTreeMap<BasisConfig, Complex64>,
}

impl SparseState {
    /// The basis state `|ancilla⟩|r_1⟩...|r_k⟩`. `ancilla` is ignored when the
    /// layout has none.
    pub fn basis(layout: RegisterLayout, ancilla: u8, regs: &[Permutation]) -> Result<Self> {
        let config = Self::config(&layout, ancilla, regs)?;
        let mut amps = BTreeMap::new();
        amps.insert(config, Complex64::new(1.0, 0.0));
        Ok(Self { layout, amps })
    }

    /// Builds a state from `(ancilla, registers, amplitude)` terms, summing
    /// repeated configurations. The result must already be normalized.
    pub fn from_terms<I>(layout: RegisterLayout, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, Vec<Permutation>, Complex64)>,
    {
        let state = Self::unnormalized(layout, terms)?;
        state.check_normalized()?;
        Ok(state)
    }

    /// Like [`SparseState::from_terms`] but rescales to unit norm.
    pub fn normalized_from_terms<I>(layout: RegisterLayout, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, Vec<Permutation>, Complex64)>,
    {
        let state = Self::unnormalized(layout, terms)?;
        let norm = state.norm_sqr().sqrt();
        if norm < PRUNE_THRESHOLD {
            return Err(Error::ZeroProjection);
        }
        Ok(state.scaled(1.0 / norm))
    }

    fn unnormalized<I>(layout: RegisterLayout, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, Vec<Permutation>, Complex64)>,
    {
        let mut amps = BTreeMap::new();
        for (ancilla, regs, amp) in terms {
            let config = Self::config(&layout, ancilla, &regs)?;
            *amps.entry(config).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = Self { layout, amps };
        state.prune();
        Ok(state)
    }

    fn config(layout: &RegisterLayout, ancilla: u8, regs: &[Permutation]) -> Result<BasisConfig> {
        if regs.len() != layout.perm_registers {
            return Err(Error::LayoutMismatch);
        }
        if ancilla > 1 {
            return Err(Error::InvalidParams(format!("ancilla bit {ancilla}")));
        }
        let mut out = [0u64; MAX_REGISTERS];
        for (slot, p) in out.iter_mut().zip(regs) {
            if p.degree() != layout.n {
                return Err(Error::DegreeMismatch {
                    left: layout.n,
                    right: p.degree(),
                });
            }
            *slot = p.rank().value;
        }
        Ok(BasisConfig {
            ancilla: if layout.has_ancilla { ancilla } else { 0 },
            regs: out,
        })
    }

    /// A random normalized state supported on `support` random basis
    /// configurations with uniformly random complex amplitudes.
    pub fn random<R: Rng + ?Sized>(layout: RegisterLayout, support: usize, rng: &mut R) -> Result<Self> {
        let terms = (0..support.max(1))
            .map(|_| {
                let ancilla = if layout.has_ancilla { rng.random_range(0..2) } else { 0 };
                let regs = (0..layout.perm_registers)
                    .map(|_| Permutation::random(rng, layout.n))
                    .collect::<Result<Vec<_>>>()?;
                let amp = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                Ok((ancilla, regs, amp))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::normalized_from_terms(layout, terms)
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn support_size(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(())
    }

    /// Amplitude of one basis configuration (zero when absent).
    pub fn amplitude(&self, ancilla: u8, regs: &[Permutation]) -> Result<Complex64> {
        let config = Self::config(&self.layout, ancilla, regs)?;
        Ok(self.amps.get(&config).copied().unwrap_or_default())
    }

    /// Iterates over `(ancilla, registers, amplitude)` in configuration order.
    pub fn terms(&self) -> impl Iterator<Item = (u8, Vec<Permutation>, Complex64)> + '_ {
        self.amps.iter().map(move |(c, &a)| {
            let regs = (0..self.layout.perm_registers)
                .map(|r| Permutation::unrank_unchecked(c.regs[r], self.layout.n))
                .collect();
            (c.ancilla, regs, a)
        })
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    fn scaled(mut self, factor: f64) -> Self {
        for a in self.amps.values_mut() {
            *a *= factor;
        }
        self
    }

    fn perm(&self, config: &BasisConfig, r: RegisterId) -> Permutation {
        Permutation::unrank_unchecked(config.regs[r.0], self.layout.n)
    }

    /// Applies a map that sends each basis configuration to another one times
    /// a phase. Collisions are summed, so non-injective maps still produce a
    /// well-defined (if non-unitary) result.
    fn map_configs<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&BasisConfig) -> (BasisConfig, Complex64),
    {
        let mut amps = BTreeMap::new();
        for (config, &amp) in &self.amps {
            let (next, phase) = f(config);
            *amps.entry(next).or_insert(Complex64::new(0.0, 0.0)) += amp * phase;
        }
        let mut out = Self {
            layout: self.layout,
            amps,
        };
        out.prune();
        out
    }

    fn require_ancilla(&self) -> Result<()> {
        if self.layout.has_ancilla {
            Ok(())
        } else {
            Err(Error::NoAncilla)
        }
    }

    fn with_register(config: &BasisConfig, r: RegisterId, p: &Permutation) -> BasisConfig {
        let mut next = *config;
        next.regs[r.0] = p.rank().value;
        next
    }

    fn require_degree(&self, p: &Permutation) -> Result<()> {
        if p.degree() != self.layout.n {
            return Err(Error::DegreeMismatch {
                left: self.layout.n,
                right: p.degree(),
            });
        }
        Ok(())
    }

    /// `H ⊗ 1`: Hadamard on the ancilla qubit.
    pub fn hadamard_ancilla(&self) -> Result<Self> {
        self.require_ancilla()?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = BTreeMap::new();
        for (config, &amp) in &self.amps {
            let mut zero = *config;
            zero.ancilla = 0;
            let mut one = *config;
            one.ancilla = 1;
            let sign = if config.ancilla == 0 { 1.0 } else { -1.0 };
            *amps.entry(zero).or_insert(Complex64::new(0.0, 0.0)) += amp * h;
            *amps.entry(one).or_insert(Complex64::new(0.0, 0.0)) += amp * (sign * h);
        }
        let mut out = Self {
            layout: self.layout,
            amps,
        };
        out.prune();
        Ok(out)
    }

    /// `C_π`: on the ancilla-1 branch replace `|σ⟩` in `target` with `|σ∘π⟩`.
    pub fn c_pi(&self, pi: &Permutation, target: RegisterId) -> Result<Self> {
        self.require_ancilla()?;
        self.layout.check_register(target)?;
        self.require_degree(pi)?;
        Ok(self.map_configs(|c| {
            if c.ancilla == 1 {
                let sigma = self.perm(c, target);
                (
                    Self::with_register(c, target, &sigma.compose_unchecked(pi)),
                    Complex64::new(1.0, 0.0),
                )
            } else {
                (*c, Complex64::new(1.0, 0.0))
            }
        }))
    }

    /// `C_1`: flip the ancilla on every branch whose `target` register is not
    /// the identity. This is a CNOT controlled on "register ≠ id_n", which
    /// agrees with `|0⟩|σ⟩ + |1⟩|π⟩ ↦ |0⟩(|σ⟩ + |π⟩)` when `σ = id_n`.
    pub fn c_one(&self, target: RegisterId) -> Result<Self> {
        self.require_ancilla()?;
        self.layout.check_register(target)?;
        Ok(self.map_configs(|c| {
            let mut next = *c;
            if c.regs[target.0] != 0 {
                next.ancilla ^= 1;
            }
            (next, Complex64::new(1.0, 0.0))
        }))
    }

    /// `C^r_∘`: `|φ⟩_src |ψ⟩_dst ↦ |φ⟩|φ∘ψ⟩`.
    pub fn c_compose_right(&self, src: RegisterId, dst: RegisterId) -> Result<Self> {
        self.layout.check_pair(src, dst)?;
        Ok(self.map_configs(|c| {
            let phi = self.perm(c, src);
            let psi = self.perm(c, dst);
            (
                Self::with_register(c, dst, &phi.compose_unchecked(&psi)),
                Complex64::new(1.0, 0.0),
            )
        }))
    }

    /// `C^l_∘`: `|φ⟩_src |ψ⟩_dst ↦ |φ⟩|ψ∘φ⟩`.
    pub fn c_compose_left(&self, src: RegisterId, dst: RegisterId) -> Result<Self> {
        self.layout.check_pair(src, dst)?;
        Ok(self.map_configs(|c| {
            let phi = self.perm(c, src);
            let psi = self.perm(c, dst);
            (
                Self::with_register(c, dst, &psi.compose_unchecked(&phi)),
                Complex64::new(1.0, 0.0),
            )
        }))
    }

    /// Replaces `dst` content `ψ` with `φ⁻¹∘ψ`; the inverse of `C^r_∘`.
    pub fn c_uncompose_right(&self, src: RegisterId, dst: RegisterId) -> Result<Self> {
        self.layout.check_pair(src, dst)?;
        Ok(self.map_configs(|c| {
            let phi = self.perm(c, src).inverse();
            let psi = self.perm(c, dst);
            (
                Self::with_register(c, dst, &phi.compose_unchecked(&psi)),
                Complex64::new(1.0, 0.0),
            )
        }))
    }

    /// Replaces `dst` content `ψ` with `ψ∘φ⁻¹`; the inverse of `C^l_∘`.
    pub fn c_uncompose_left(&self, src: RegisterId, dst: RegisterId) -> Result<Self> {
        self.layout.check_pair(src, dst)?;
        Ok(self.map_configs(|c| {
            let phi = self.perm(c, src).inverse();
            let psi = self.perm(c, dst);
            (
                Self::with_register(c, dst, &psi.compose_unchecked(&phi)),
                Complex64::new(1.0, 0.0),
            )
        }))
    }

    pub fn c_swap(&self, r1: RegisterId, r2: RegisterId) -> Result<Self> {
        self.layout.check_pair(r1, r2)?;
        Ok(self.map_configs(|c| {
            let mut next = *c;
            next.regs.swap(r1.0, r2.0);
            (next, Complex64::new(1.0, 0.0))
        }))
    }

    /// `C_sgn`: multiplies each branch by `sgn(α)` of the `target` content.
    pub fn c_sgn(&self, target: RegisterId) -> Result<Self> {
        self.layout.check_register(target)?;
        Ok(self.map_configs(|c| {
            let sign = self.perm(c, target).sign() as f64;
            (*c, Complex64::new(sign, 0.0))
        }))
    }

    /// `R_π`: replaces `σ` in `target` with `σ∘π` on every branch.
    pub fn apply_flip(&self, pi: &Permutation, target: RegisterId) -> Result<Self> {
        self.layout.check_register(target)?;
        self.require_degree(pi)?;
        Ok(self.map_configs(|c| {
            let sigma = self.perm(c, target);
            (
                Self::with_register(c, target, &sigma.compose_unchecked(pi)),
                Complex64::new(1.0, 0.0),
            )
        }))
    }

    /// Adjoins an ancilla qubit in `|0⟩`.
    pub fn with_ancilla(&self) -> Result<Self> {
        if self.layout.has_ancilla {
            return Err(Error::AncillaPresent);
        }
        let layout = RegisterLayout {
            has_ancilla: true,
            ..self.layout
        };
        Ok(Self {
            layout,
            amps: self.amps.clone(),
        })
    }

    /// Splits `target` off a product state whose other registers and ancilla
    /// are in a single basis configuration, returning it as a one-register
    /// state without ancilla.
    pub fn extract_register(&self, target: RegisterId) -> Result<Self> {
        self.layout.check_register(target)?;
        let mut rest: Option<BasisConfig> = None;
        let mut amps = BTreeMap::new();
        for (config, &amp) in &self.amps {
            let mut others = *config;
            others.regs[target.0] = 0;
            match rest {
                None => rest = Some(others),
                Some(r) if r != others => return Err(Error::NotSeparable(target.0)),
                Some(_) => {}
            }
            let mut regs = [0u64; MAX_REGISTERS];
            regs[0] = config.regs[target.0];
            amps.insert(BasisConfig { ancilla: 0, regs }, amp);
        }
        Ok(Self {
            layout: RegisterLayout {
                has_ancilla: false,
                perm_registers: 1,
                n: self.layout.n,
            },
            amps,
        })
    }

    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (config, a) in small {
            if let Some(b) = large.get(config) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Maximum amplitude distance after aligning `other`'s global phase to
    /// `self` via their inner product. `None` if the layouts differ or the
    /// states are orthogonal.
    pub fn phase_distance(&self, other: &Self) -> Option<f64> {
        let overlap = self.inner_product(other).ok()?;
        if overlap.norm() < PRUNE_THRESHOLD {
            return None;
        }
        let phase = overlap / overlap.norm();
        let mut worst = 0.0f64;
        for (config, a) in &self.amps {
            let b = other.amps.get(config).copied().unwrap_or_default();
            worst = worst.max((a * phase - b).norm());
        }
        for (config, b) in &other.amps {
            if !self.amps.contains_key(config) {
                worst = worst.max(b.norm());
            }
        }
        Some(worst)
    }

    /// Equality up to an unobservable global phase.
    pub fn equals_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.phase_distance(other).is_some_and(|d| d <= tol)
    }

    /// The unnormalized projections `(P^+_π s, P^-_π s)` with
    /// `P^±_π = (I ± R_π)/2` acting on `target`.
    pub fn pm_projections(&self, pi: &Permutation, target: RegisterId) -> Result<(Self, Self)> {
        if !pi.is_fixed_point_free_involution() {
            return Err(Error::NotInvolution(pi.to_string()));
        }
        let flipped = self.apply_flip(pi, target)?;
        let combine = |sign: f64| {
            let mut amps = self.amps.clone();
            for (config, &b) in &flipped.amps {
                *amps.entry(*config).or_insert(Complex64::new(0.0, 0.0)) += b * sign;
            }
            for a in amps.values_mut() {
                *a *= 0.5;
            }
            let mut out = Self {
                layout: self.layout,
                amps,
            };
            out.prune();
            out
        };
        Ok((combine(1.0), combine(-1.0)))
    }

    /// Exact outcome probabilities and post-measurement states of `M_π`.
    pub fn pm_branches(&self, pi: &Permutation, target: RegisterId) -> Result<[Branch; 2]> {
        let (plus, minus) = self.pm_projections(pi, target)?;
        Ok([Self::branch(plus), Self::branch(minus)])
    }

    fn branch(projected: Self) -> Branch {
        let probability = projected.norm_sqr();
        let state =
            (probability > PRUNE_THRESHOLD * PRUNE_THRESHOLD).then(|| projected.scaled(1.0 / probability.sqrt()));
        Branch { probability, state }
    }

    /// Samples an outcome with probability `‖P^± s‖²` and returns the
    /// collapsed state.
    pub fn measure_pm<R: Rng + ?Sized>(
        &self,
        pi: &Permutation,
        target: RegisterId,
        rng: &mut R,
    ) -> Result<(PlusMinus, Self)> {
        let [plus, minus] = self.pm_branches(pi, target)?;
        let outcome = Self::sample(plus.probability, minus.probability, rng)?;
        let chosen = match outcome {
            0 => (PlusMinus::Plus, plus.state),
            _ => (PlusMinus::Minus, minus.state),
        };
        Ok((chosen.0, chosen.1.ok_or(Error::ZeroProjection)?))
    }

    fn sample<R: Rng + ?Sized>(p0: f64, p1: f64, rng: &mut R) -> Result<u8> {
        let total = p0 + p1;
        if total < PRUNE_THRESHOLD {
            return Err(Error::ZeroProjection);
        }
        // Always draw, so the RNG stream does not depend on whether the
        // outcome was certain.
        let u: f64 = rng.random();
        Ok(if p1 == 0.0 || u * total < p0 { 0 } else { 1 })
    }

    /// Branches of a computational-basis measurement of the ancilla. The
    /// post-measurement states have the ancilla removed.
    pub fn ancilla_branches(&self) -> Result<[Branch; 2]> {
        self.require_ancilla()?;
        let layout = RegisterLayout {
            has_ancilla: false,
            ..self.layout
        };
        let part = |bit: u8| {
            let amps = self
                .amps
                .iter()
                .filter(|(c, _)| c.ancilla == bit)
                .map(|(c, &a)| {
                    (
                        BasisConfig {
                            ancilla: 0,
                            regs: c.regs,
                        },
                        a,
                    )
                })
                .collect();
            Self::branch(Self { layout, amps })
        };
        Ok([part(0), part(1)])
    }

    pub fn measure_ancilla<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u8, Self)> {
        let [zero, one] = self.ancilla_branches()?;
        let bit = Self::sample(zero.probability, one.probability, rng)?;
        let state = if bit == 0 { zero.state } else { one.state };
        Ok((bit, state.ok_or(Error::ZeroProjection)?))
    }

    /// The uniform superposition `(1/√n!) Σ_σ |σ⟩` on one register.
    pub fn uniform_superposition(n: usize) -> Result<Self> {
        let layout = RegisterLayout::single(n)?;
        let amp = Complex64::new(1.0 / (factorial(n) as f64).sqrt(), 0.0);
        let amps = (0..factorial(n))
            .map(|v| {
                let mut regs = [0u64; MAX_REGISTERS];
                regs[0] = v;
                (BasisConfig { ancilla: 0, regs }, amp)
            })
            .collect();
        Ok(Self { layout, amps })
    }

    /// `|ψ^±_π(σ)⟩ = (|σ⟩ ± |σ∘π⟩)/√2` on one register.
    pub fn psi(pi: &Permutation, sigma: &Permutation, sign: PlusMinus) -> Result<Self> {
        let layout = RegisterLayout::single(sigma.degree())?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = match sign {
            PlusMinus::Plus => h,
            PlusMinus::Minus => -h,
        };
        Self::from_terms(
            layout,
            [
                (0, vec![*sigma], Complex64::new(h, 0.0)),
                (0, vec![sigma.compose(pi)?], Complex64::new(s, 0.0)),
            ],
        )
    }

    /// Basis index of a single-register state entry, for the dense oracle.
    pub(crate) fn dense_entries(&self) -> Result<Vec<(usize, Complex64)>> {
        if self.layout.has_ancilla || self.layout.perm_registers != 1 {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amps.iter().map(|(c, &a)| (c.regs[0] as usize, a)).collect())
    }
}
