//! Exact certificates: rational Gram matrices, exact PSD decisions, SOS
//! decompositions and padded verified upper bounds.

mod file;
mod project;
mod psd;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyalg::{QPoly, Rational};
use crate::ratmat::RatMatrix;
use crate::sosform::{BasisPair, Block, GramProblem, Sense};

pub use file::{BasisText, CertificateFile};
pub use project::{
    enclose_upper, padded_bound, project_to_rational, project_with_limits, rationalize, EnclosureOptions, EnclosureReport,
    EnclosureStatus,
};
pub use psd::{char_poly, check_psd_exact, ldl_psd, sign_violation, LdlFactor, PsdReport, PsdWitness};

/// Exact Gram blocks plus the data that makes them a proof.
#[derive(Debug, Clone)]
pub struct RationalCertificate {
    pub basis: BasisPair,
    /// Symmetric block then antisymmetric block; either may be 0x0.
    pub gram_blocks: Vec<RatMatrix>,
    /// Constant, or a polynomial in the parameters.
    pub bound_value: QPoly,
    pub aux_coeffs: Vec<Rational>,
    pub aux_function: QPoly,
    pub sense: Sense,
}

impl RationalCertificate {
    /// Packages an exact assignment of a Gram problem.
    pub fn from_problem(g: &GramProblem, blocks: Vec<RatMatrix>, values: &[Rational]) -> Self {
        let n_aux = g.s.n_aux();
        RationalCertificate {
            basis: g.basis.clone(),
            gram_blocks: blocks,
            bound_value: g.s.bound_value(values),
            aux_coeffs: values[..n_aux].to_vec(),
            aux_function: g.s.aux_function(values),
            sense: g.s.sense,
        }
    }

    /// `sum_blocks b^T Q b`.
    pub fn quadratic_form(&self) -> QPoly {
        let vars = self.bound_value.vars();
        let mut out = QPoly::zero(vars);
        let two = Rational::from_integer(2.into());
        for (elems, q) in self.basis.blocks().iter().zip(&self.gram_blocks) {
            for i in 0..elems.len() {
                for j in i..elems.len() {
                    let c = if i == j { q[(i, j)].clone() } else { &q[(i, j)] * &two };
                    if !c.is_zero() {
                        out = &out + &(&elems[i] * &elems[j]).scale(&c);
                    }
                }
            }
        }
        out
    }
}

/// The bound polynomial determined by `phi`, the field, `v` and the bound.
pub fn bound_polynomial(phi: &QPoly, f: &[QPoly], v: &QPoly, bound: &QPoly, sense: Sense) -> Result<QPoly> {
    let lie = v.lie_derivative(f)?;
    let s = phi.checked_sub(bound)?.checked_add(&lie)?;
    Ok(match sense {
        Sense::Lower => s,
        Sense::Upper => -s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Verification {
    Valid,
    /// The Gram expansion differs from the bound polynomial at `monomial`.
    Mismatch { monomial: String, difference: String },
    NotPsd { block: Block, witness: PsdWitness },
    Malformed { reason: String },
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verification::Valid)
    }
}

/// Checks `S == sum b^T Q b` identically and that every block is PSD.
pub fn verify_certificate(cert: &RationalCertificate, phi: &QPoly, f: &[QPoly], v: &QPoly) -> Verification {
    if cert.gram_blocks.len() != 2 {
        return Verification::Malformed { reason: "expected two Gram blocks".into() };
    }
    for (elems, q) in cert.basis.blocks().iter().zip(&cert.gram_blocks) {
        if q.nrows() != elems.len() || q.ncols() != elems.len() || !q.is_symmetric() {
            return Verification::Malformed { reason: "Gram block shape does not match basis".into() };
        }
    }
    let s = match bound_polynomial(phi, f, v, &cert.bound_value, cert.sense) {
        Ok(s) => s,
        Err(e) => return Verification::Malformed { reason: e.to_string() },
    };
    let q = cert.quadratic_form();
    if **q.vars() != **s.vars() {
        return Verification::Malformed { reason: "basis and system use different variables".into() };
    }
    let diff = &s - &q;
    if let Some((m, c)) = diff.terms().next_back() {
        let one = Rational::from_integer(1.into());
        return Verification::Mismatch {
            monomial: QPoly::term(s.vars(), m.clone(), one).to_string(),
            difference: c.to_string(),
        };
    }
    for (b, q) in cert.gram_blocks.iter().enumerate() {
        let report = check_psd_exact(q);
        if !report.psd {
            let block = if b == 0 { Block::Symmetric } else { Block::Antisymmetric };
            return Verification::NotPsd { block, witness: report.witness };
        }
    }
    Verification::Valid
}

/// `weight * base^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSquare {
    pub weight: Rational,
    pub base: QPoly,
    pub block: Block,
}

/// Rational SOS form read off exact LDL^T factors of the Gram blocks.
pub fn sos_decompose(cert: &RationalCertificate) -> Result<Vec<WeightedSquare>> {
    let mut out = Vec::new();
    for (b, (elems, q)) in cert.basis.blocks().iter().zip(&cert.gram_blocks).enumerate() {
        let f = ldl_psd(q).map_err(|()| Error::Consistency("Gram block is not PSD".into()))?;
        let block = if b == 0 { Block::Symmetric } else { Block::Antisymmetric };
        for (d, l) in f.pivots.iter().zip(&f.rows) {
            if d.is_zero() {
                continue;
            }
            let mut base = QPoly::zero(cert.bound_value.vars());
            for (c, e) in l.iter().zip(elems.iter()) {
                if !c.is_zero() {
                    base = &base + &e.scale(c);
                }
            }
            out.push(WeightedSquare { weight: d.clone(), base, block });
        }
    }
    Ok(out)
}

/// `sum weight * base^2`.
pub fn expand_squares(vars: &std::sync::Arc<crate::polyalg::VarSet>, squares: &[WeightedSquare]) -> QPoly {
    squares.iter().fold(QPoly::zero(vars), |acc, s| &acc + &s.base.pow(2).scale(&s.weight))
}
