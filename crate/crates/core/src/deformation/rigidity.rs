//! Killing leading terms by conjugation, and the `H²(f, f) = 0` rigidity test.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cohomology::{CochainComplex, MorphismComplex};
use crate::sample;

use super::isomorphism::{conjugate, FormalIsomorphism};
use super::{DeformationError, TruncatedDeformation};

#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    /// `Id + φ t^l`, or the identity when nothing was left to kill.
    pub iso: FormalIsomorphism,
    pub deformation: TruncatedDeformation,
    /// The order `l` that was killed.
    pub order: Option<usize>,
}

/// Conjugates by `Id + φ t^l`, where `l` is the leading order and `d¹_f φ = θ_l`,
/// then checks that `θ̄₁ … θ̄_l` vanish.
pub fn normalize_leading_term(theta: &TruncatedDeformation) -> Result<Normalization, DeformationError> {
    let complex = theta.complex();
    let identity = FormalIsomorphism::identity(complex.morphism().field(), complex.source_dim(), complex.target_dim());
    let Some(l) = theta.leading_order() else {
        return Ok(Normalization {
            iso: identity,
            deformation: theta.clone(),
            order: None,
        });
    };
    let leading = theta.term(l);
    let Some(phi) = complex.coboundary_preimage(leading)? else {
        let witness = complex.non_coboundary_witness(leading)?.unwrap_or_default();
        return Err(DeformationError::NotCoboundary { order: l, witness });
    };
    let iso = FormalIsomorphism::monomial(l, phi)?;
    let deformation = conjugate(theta, &iso)?;
    if let Some(order) = (1..=l).find(|&i| !deformation.term(i).is_zero()) {
        return Err(DeformationError::NormalizationFailed { order });
    }
    Ok(Normalization {
        iso,
        deformation,
        order: Some(l),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trivialization {
    /// The isomorphisms applied, first to last.
    pub steps: Vec<FormalIsomorphism>,
    /// Their composite, truncated at the order of the deformation.
    pub composite: FormalIsomorphism,
    pub deformation: TruncatedDeformation,
}

/// Applies [`normalize_leading_term`] until the deformation is trivial and
/// checks that the composite isomorphism alone does the same.
pub fn trivialize(theta: &TruncatedDeformation) -> Result<Trivialization, DeformationError> {
    let complex = theta.complex();
    let n = theta.order();
    let mut composite = FormalIsomorphism::identity(complex.morphism().field(), complex.source_dim(), complex.target_dim());
    let mut steps = Vec::new();
    let mut current = theta.clone();
    while !current.is_trivial() {
        let step = normalize_leading_term(&current)?;
        composite = step.iso.compose_truncated(&composite, n);
        steps.push(step.iso);
        current = step.deformation;
    }
    let direct = conjugate(theta, &composite)?;
    if let Some(order) = direct.leading_order() {
        return Err(DeformationError::NormalizationFailed { order });
    }
    Ok(Trivialization {
        steps,
        composite,
        deformation: current,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `H²(f, f) = 0`, which suffices for rigidity.
    Rigid,
    /// `H²(f, f) ≠ 0`; no conclusion is drawn.
    Inconclusive,
}

/// Random deformations to try trivializing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeConfig {
    pub order: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeOutcome {
    pub sample: usize,
    /// Leading order of the random deformation before normalization.
    pub leading_order: Option<usize>,
    /// Number of normalization steps that were applied.
    pub steps: usize,
    /// `None` on success, else the order whose term is not a coboundary.
    pub stuck_at: Option<usize>,
}

impl ProbeOutcome {
    pub fn trivialized(&self) -> bool {
        self.stuck_at.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RigidityReport {
    pub h2: usize,
    pub verdict: Verdict,
    pub probes: Vec<ProbeOutcome>,
}

pub fn rigidity_check(
    complex: &Arc<MorphismComplex>,
    probe: Option<ProbeConfig>,
) -> Result<RigidityReport, DeformationError> {
    let h2 = complex.cohomology_dim(2)?;
    let verdict = if h2 == 0 { Verdict::Rigid } else { Verdict::Inconclusive };
    let mut probes = Vec::new();
    if let Some(cfg) = probe {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let cocycles = sample::cocycle_basis(complex)?;
        for k in 0..cfg.samples {
            let theta = sample::random_deformation(&mut rng, complex, &cocycles, cfg.order)?;
            let leading_order = theta.leading_order();
            let outcome = match trivialize(&theta) {
                Ok(t) => ProbeOutcome {
                    sample: k,
                    leading_order,
                    steps: t.steps.len(),
                    stuck_at: None,
                },
                Err(DeformationError::NotCoboundary { order, .. }) => ProbeOutcome {
                    sample: k,
                    leading_order,
                    steps: 0,
                    stuck_at: Some(order),
                },
                Err(e) => return Err(e),
            };
            probes.push(outcome);
        }
    }
    Ok(RigidityReport { h2, verdict, probes })
}

#[cfg(test)]
mod tests {
    use super::super::tests::*;
    use super::super::{check_deformation, extend_from_cocycle, ExtensionOutcome};
    use super::*;
    use crate::algebra::AlgebraMorphism;
    use crate::cohomology::{Cochain, TripleCochain};
    use crate::field::Field;

    #[test]
    fn nothing_to_normalize() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        let theta = TruncatedDeformation::trivial(&c, 2);
        let n = normalize_leading_term(&theta).unwrap();
        assert!(n.iso.is_identity());
        assert_eq!(n.deformation, theta);
        assert_eq!(n.order, None);
    }

    #[test]
    fn coboundary_infinitesimal_is_killed() {
        let field = Field::prime(7).unwrap();
        let c = complex(AlgebraMorphism::identity(square_zero_line(field)));
        let p = TripleCochain::pair(
            Cochain::from_coeffs(field, 1, 2, 2, [3, 1, 0, 5].map(|k| field.from_i64(k)).to_vec()).unwrap(),
            Cochain::from_coeffs(field, 1, 2, 2, [2, 2, 6, 1].map(|k| field.from_i64(k)).to_vec()).unwrap(),
        )
        .unwrap();
        let theta1 = c.differential(&p).unwrap();
        assert!(!theta1.is_zero());
        let ExtensionOutcome::Complete(theta) = extend_from_cocycle(&c, theta1, 4).unwrap() else {
            panic!("coboundary infinitesimals extend")
        };
        let n = normalize_leading_term(&theta).unwrap();
        assert!(n.deformation.term(1).is_zero());
        assert_eq!(n.order, Some(1));
    }

    #[test]
    fn non_coboundary_leading_term() {
        let line = abelian(Q, 1);
        let c = complex(AlgebraMorphism::identity(line));
        let theta1 = TripleCochain::new(mu(Q), mu(Q), Cochain::zero(Q, 1, 1, 1)).unwrap();
        let theta = check_deformation(&c, vec![c.base_point(), theta1]).unwrap();
        let err = normalize_leading_term(&theta).unwrap_err();
        assert!(matches!(err, DeformationError::NotCoboundary { order: 1, .. }));
    }

    #[test]
    fn rigidity_verdicts() {
        let empty = abelian(Q, 0);
        let c = complex(AlgebraMorphism::identity(empty));
        let r = rigidity_check(&c, None).unwrap();
        assert_eq!((r.h2, r.verdict), (0, Verdict::Rigid));

        let c = complex(AlgebraMorphism::identity(abelian(Q, 1)));
        let r = rigidity_check(&c, None).unwrap();
        assert_eq!((r.h2, r.verdict), (1, Verdict::Inconclusive));
    }
}
