//! Privileged post-hoc checks on finished sessions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::session::SessionOutcome;
use crate::error::Result;
use crate::permgroup::Permutation;
use crate::protocol::Terminal;
use crate::qscd::Inspector;
use crate::qsim::oracle::{oracle_density, Ensemble, EnsembleComparison, EnsembleEstimate};
use crate::qsim::{PlusMinus, SparseState};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub violations: Vec<String>,
}

impl InspectionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `γ ∈ K_n` and that every transmitted system is the honest
/// `ψ^±_π(σ)` for Alice's key, with the sign of its message bit.
pub fn inspector_verify(outcome: &SessionOutcome, inspector: &Inspector) -> InspectionReport {
    let mut violations = Vec::new();
    if let Some(g) = &outcome.gamma {
        if !g.is_fixed_point_free_involution() {
            violations.push(format!("γ = {g} is not in K_n"));
        }
    }
    if outcome.verdict.terminal == Terminal::ProtocolViolation {
        violations.push(format!(
            "protocol violation: {}",
            outcome.verdict.reason.as_deref().unwrap_or("unspecified")
        ));
    }
    let (Some(transfer), Some(pi), Some(m)) = (&outcome.transfer, &outcome.pi, &outcome.message) else {
        return InspectionReport { violations };
    };
    let copies = transfer.handles.len() / m.len().max(1);
    for (idx, &h) in transfer.handles.iter().enumerate() {
        let sample = match outcome.registry.inspect_sent(h, inspector) {
            Ok(Some(s)) => s,
            Ok(None) => {
                violations.push(format!("handle {}: never transferred", h.id()));
                continue;
            }
            Err(e) => {
                violations.push(format!("handle {}: {e}", h.id()));
                continue;
            }
        };
        let payload = sample.payload(inspector);
        if payload.support_size() != 2 {
            violations.push(format!(
                "handle {}: payload support {} ≠ 2",
                h.id(),
                payload.support_size()
            ));
            continue;
        }
        let Some(origin) = sample.origin(inspector) else {
            violations.push(format!("handle {}: no preparation record", h.id()));
            continue;
        };
        if origin.key != *pi {
            violations.push(format!(
                "handle {}: prepared under {} instead of {pi}",
                h.id(),
                origin.key
            ));
        }
        let bit = m.get(idx / copies.max(1));
        let expected_sign = if bit { PlusMinus::Plus } else { PlusMinus::Minus };
        if origin.sign != expected_sign {
            violations.push(format!(
                "handle {}: sign {} for message bit {}",
                h.id(),
                origin.sign.symbol(),
                bit as u8
            ));
        }
        match SparseState::psi(&origin.key, &origin.sigma, origin.sign) {
            Ok(psi) if payload.equals_up_to_phase(&psi, 1e-9) => {}
            _ => violations.push(format!(
                "handle {}: payload is not ψ^{}_π(σ)",
                h.id(),
                origin.sign.symbol()
            )),
        }
    }
    InspectionReport { violations }
}

/// Ensemble estimate of the transmitted systems for one `(π, sign)` pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleGroup {
    pub key: Permutation,
    pub sign: PlusMinus,
    pub comparison: EnsembleComparison,
}

impl EnsembleGroup {
    pub fn is_consistent(&self) -> bool {
        self.comparison.is_consistent()
    }
}

/// Groups every honest transmitted system by key and sign and compares the
/// group average of `|ψ⟩⟨ψ|` with the dense `ρ^±_π`. Meaningful only when a
/// group holds many samples, e.g. sessions run with a fixed Alice key.
pub fn ensemble_check(outcomes: &[SessionOutcome], inspector: &Inspector) -> Result<Vec<EnsembleGroup>> {
    let mut groups: BTreeMap<(Permutation, bool), EnsembleEstimate> = BTreeMap::new();
    for outcome in outcomes {
        let Some(transfer) = &outcome.transfer else {
            continue;
        };
        for &h in &transfer.handles {
            let Some(sample) = outcome.registry.inspect_sent(h, inspector)? else {
                continue;
            };
            let Some(origin) = sample.origin(inspector) else {
                continue;
            };
            groups
                .entry((origin.key, origin.sign == PlusMinus::Plus))
                .or_default()
                .add(sample.payload(inspector))?;
        }
    }
    groups
        .into_iter()
        .map(|((key, plus), est)| {
            let (kind, sign) = if plus {
                (Ensemble::Plus, PlusMinus::Plus)
            } else {
                (Ensemble::Minus, PlusMinus::Minus)
            };
            Ok(EnsembleGroup {
                key,
                sign,
                comparison: est.compare(&oracle_density(kind, &key)?),
            })
        })
        .collect()
}
