//! Obstruction classes and order-by-order extension.

use std::sync::Arc;

use crate::cohomology::{
    differential, push_forward_left, push_forward_right, Cochain, MorphismComplex, TripleCochain,
};
use crate::matrix::Vector;

use super::{associator, check_deformation, DeformationError, TruncatedDeformation};

/// `Ob_Θ = (Ob_R; Ob_S; Ob_f)` of an order-`N` deformation, a degree-3 element
/// of `C³(f, f)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstructionClass {
    /// `N`, the order of the deformation it obstructs extending.
    pub order: usize,
    pub cochain: TripleCochain,
}

impl ObstructionClass {
    pub fn is_zero(&self) -> bool {
        self.cochain.is_zero()
    }
}

/// `Σ_{i=1}^{N} [m_i(m_{N+1−i}(x,y), z) − m_i(x, m_{N+1−i}(y,z) + m_{N+1−i}(z,y))]`.
fn product_obstruction(m: &[&Cochain]) -> Cochain {
    let n = m.len() - 1;
    let mut out = Cochain::zero(m[0].field(), 3, m[0].source_dim(), m[0].target_dim());
    for i in 1..=n {
        out.add_assign(&associator(m[i], m[n + 1 - i]));
    }
    out
}

/// `Σ′ m_{S,i}(f_j x, f_k y) − Σ_{i=1}^{N} f_i m_{R,N+1−i}(x, y)`, where `Σ′`
/// runs over `i + j + k = N + 1` with at least two of `i, j, k` positive.
fn morphism_obstruction(terms: &[TripleCochain]) -> Cochain {
    let n = terms.len() - 1;
    let top = n + 1;
    let m_s = |i: usize| &terms[i].pi;
    let f = |j: usize| &terms[j].phi;
    let t0 = &terms[0];
    let mut out = Cochain::zero(t0.field(), 2, t0.source_dim(), t0.target_dim());
    let mut add = |i: usize, j: usize, k: usize| out.add_assign(&m_s(i).precompose(&[f(j), f(k)]));
    // i + j = N + 1, k = 0
    for i in 1..top {
        add(i, top - i, 0);
    }
    // i + k = N + 1, j = 0
    for i in 1..top {
        add(i, 0, top - i);
    }
    // j + k = N + 1, i = 0
    for j in 1..top {
        add(0, j, top - j);
    }
    // i + j + k = N + 1, all positive
    for i in 1..top {
        for j in 1..top - i {
            add(i, j, top - i - j);
        }
    }
    for i in 1..=n {
        out.sub_assign(&terms[top - i].xi.then(f(i)));
    }
    out
}

/// The obstruction to extending `theta` by one order.
pub fn obstruction(theta: &TruncatedDeformation) -> ObstructionClass {
    let terms = theta.terms();
    let xis: Vec<&Cochain> = terms.iter().map(|t| &t.xi).collect();
    let pis: Vec<&Cochain> = terms.iter().map(|t| &t.pi).collect();
    let cochain = TripleCochain::new(
        product_obstruction(&xis),
        product_obstruction(&pis),
        morphism_obstruction(terms),
    )
    .expect("obstruction is well formed");
    ObstructionClass {
        order: theta.order(),
        cochain,
    }
}

/// Result of trying to add `θ_{N+1}`.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Extension {
    Extended {
        term: TripleCochain,
        deformation: TruncatedDeformation,
    },
    /// No `θ_{N+1}` with `d²_f θ_{N+1} = Ob` exists; `witness` is a covector
    /// vanishing on the image of `d²_f` but not on `Ob`.
    Obstructed {
        obstruction: ObstructionClass,
        witness: Vector,
    },
}

/// Solves `d²_f θ_{N+1} = Ob_Θ`, taking the solution with free variables zero.
pub fn extend_one_order(theta: &TruncatedDeformation) -> Result<Extension, DeformationError> {
    let complex = theta.complex();
    let ob = obstruction(theta);
    match complex.coboundary_preimage(&ob.cochain)? {
        Some(term) => {
            let mut terms = theta.terms().to_vec();
            terms.push(term.clone());
            let deformation = check_deformation(complex, terms)?;
            Ok(Extension::Extended { term, deformation })
        }
        None => {
            let witness = complex
                .non_coboundary_witness(&ob.cochain)?
                .expect("an inconsistent system has a separating covector");
            Ok(Extension::Obstructed {
                obstruction: ob,
                witness,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ExtensionOutcome {
    Complete(TruncatedDeformation),
    /// Extension from order `at_order − 1` to `at_order` failed.
    Obstructed {
        at_order: usize,
        partial: TruncatedDeformation,
        obstruction: ObstructionClass,
        witness: Vector,
    },
}

/// Extends `θ₀ + θ₁t` order by order up to `target`.
pub fn extend_from_cocycle(
    complex: &Arc<MorphismComplex>,
    theta1: TripleCochain,
    target: usize,
) -> Result<ExtensionOutcome, DeformationError> {
    let check = complex.is_cocycle(&theta1)?;
    if !check.holds() {
        return Err(DeformationError::NotCocycle {
            residual: Box::new(check.residual),
        });
    }
    let mut theta = check_deformation(complex, vec![complex.base_point(), theta1])?;
    if target == 0 {
        return Ok(ExtensionOutcome::Complete(theta.truncate(0)));
    }
    while theta.order() < target {
        match extend_one_order(&theta)? {
            Extension::Extended { deformation, .. } => theta = deformation,
            Extension::Obstructed {
                obstruction,
                witness,
            } => {
                return Ok(ExtensionOutcome::Obstructed {
                    at_order: theta.order() + 1,
                    partial: theta,
                    obstruction,
                    witness,
                })
            }
        }
    }
    Ok(ExtensionOutcome::Complete(theta))
}

/// `f Ob_R − Ob_S f` and `d² Ob_f` in `C³(R, S)`, computed separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstructionIdentity {
    pub lhs: Cochain,
    pub rhs: Cochain,
}

impl ObstructionIdentity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn verify_obstruction_identity(theta: &TruncatedDeformation) -> Result<ObstructionIdentity, DeformationError> {
    let complex = theta.complex();
    let ob = obstruction(theta).cochain;
    let f = complex.morphism();
    let mut lhs = push_forward_left(f, &ob.xi);
    lhs.sub_assign(&push_forward_right(f, &ob.pi));
    let rhs = differential(complex.cross_module(), &ob.phi)?;
    Ok(ObstructionIdentity { lhs, rhs })
}
