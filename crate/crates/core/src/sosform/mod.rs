//! Bound polynomials, symmetry-split bases and Gram coefficient matching.

mod basis;
mod gram;
mod rescale;
mod sdp;

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{Monomial, QPoly, Rational, VarSet};

pub use basis::{
    gen_basis_pair, gen_lorenz_v_basis, reduce_basis, BasisPair, Block, Locus, NullMerge,
};
pub use basis::vanishes_on;
pub use gram::{assemble_gram_constraints, GramLayout, GramProblem, GramRow, Objective};
pub use rescale::ScaleMap;
pub use sdp::{
    rescale_problem, FloatScaleMap, ObjectiveSense, SdpConstraint, SdpInstance, SdpMeta,
    SdpObjective,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Lower,
    Upper,
}

/// Candidate terms of the auxiliary function, each with its own unknown.
#[derive(Debug, Clone)]
pub struct AuxAnsatz {
    pub basis: Vec<QPoly>,
    pub names: Vec<String>,
}

impl AuxAnsatz {
    pub fn new(basis: Vec<QPoly>) -> Self {
        let names = (1..=basis.len()).map(|i| format!("c{i}")).collect();
        AuxAnsatz { basis, names }
    }

    pub fn empty() -> Self {
        AuxAnsatz { basis: Vec::new(), names: Vec::new() }
    }

    /// A fully specified auxiliary function with no unknowns.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// `fixed + sum_j u_j * poly_j` with the polys depending on parameters only.
#[derive(Debug, Clone)]
pub struct BoundAnsatz {
    pub fixed: QPoly,
    pub unknowns: Vec<(String, QPoly)>,
}

impl BoundAnsatz {
    /// A single free constant `u0`.
    pub fn free(vars: &Arc<VarSet>) -> Self {
        Self::offset(QPoly::zero(vars))
    }

    /// `fixed + u0`.
    pub fn offset(fixed: QPoly) -> Self {
        let one = QPoly::constant(fixed.vars(), Rational::one());
        BoundAnsatz { fixed, unknowns: vec![("u0".into(), one)] }
    }

    /// No unknowns: the bound is prescribed.
    pub fn fixed(fixed: QPoly) -> Self {
        BoundAnsatz { fixed, unknowns: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownKind {
    Aux,
    Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unknown {
    pub name: String,
    pub kind: UnknownKind,
}

/// Polynomial whose coefficients are affine in a list of unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePoly {
    pub constant: QPoly,
    pub linear: Vec<QPoly>,
}

impl AffinePoly {
    pub fn evaluate(&self, values: &[Rational]) -> QPoly {
        assert_eq!(values.len(), self.linear.len(), "wrong number of unknown values");
        let mut out = self.constant.clone();
        for (p, v) in self.linear.iter().zip(values) {
            out = &out + &p.scale(v);
        }
        out
    }

    /// Union of the supports of all parts.
    pub fn support(&self) -> BTreeSet<Monomial> {
        let mut s: BTreeSet<Monomial> = self.constant.monomials().cloned().collect();
        for p in &self.linear {
            s.extend(p.monomials().cloned());
        }
        s
    }

    pub fn degree(&self) -> u32 {
        self.support().iter().map(Monomial::degree).max().unwrap_or(0)
    }
}

/// `phi - L + f.grad V` (lower) or `-(phi - U + f.grad V)` (upper).
#[derive(Debug, Clone)]
pub struct SFunction {
    pub poly: AffinePoly,
    pub sense: Sense,
    pub unknowns: Vec<Unknown>,
    pub phi: QPoly,
    pub field: Vec<QPoly>,
    pub ansatz: AuxAnsatz,
    pub bound: BoundAnsatz,
}

impl SFunction {
    pub fn vars(&self) -> &Arc<VarSet> {
        self.phi.vars()
    }

    pub fn n_aux(&self) -> usize {
        self.ansatz.len()
    }

    pub fn evaluate(&self, values: &[Rational]) -> QPoly {
        self.poly.evaluate(values)
    }

    /// The auxiliary function for given unknown values (aux part first).
    pub fn aux_function(&self, values: &[Rational]) -> QPoly {
        let mut v = QPoly::zero(self.vars());
        for (b, c) in self.ansatz.basis.iter().zip(values) {
            v = &v + &b.scale(c);
        }
        v
    }

    pub fn bound_value(&self, values: &[Rational]) -> QPoly {
        let mut u = self.bound.fixed.clone();
        for ((_, p), c) in self.bound.unknowns.iter().zip(&values[self.n_aux()..]) {
            u = &u + &p.scale(c);
        }
        u
    }

    /// State degree of the averaged quantity.
    pub fn moment_degree(&self) -> u32 {
        self.phi.state_degree()
    }
}

/// Assembles the bound polynomial from its ingredients.
pub fn build_bound_poly(
    phi: &QPoly,
    f: &[QPoly],
    ansatz: &AuxAnsatz,
    sense: Sense,
    bound: &BoundAnsatz,
) -> Result<SFunction> {
    let vars = phi.vars();
    let same = |p: &QPoly| Arc::ptr_eq(p.vars(), vars) || **p.vars() == **vars;
    if !f.iter().chain(&ansatz.basis).chain(std::iter::once(&bound.fixed)).all(same)
        || !bound.unknowns.iter().all(|(_, p)| same(p))
    {
        return Err(Error::Structural("ingredients live on different variable sets".into()));
    }
    if f.len() != vars.n_state() {
        return Err(Error::Structural("vector field dimension mismatch".into()));
    }
    if !bound.fixed.is_param_only() || !bound.unknowns.iter().all(|(_, p)| p.is_param_only()) {
        return Err(Error::Structural("bound ansatz may depend on parameters only".into()));
    }
    if ansatz.names.len() != ansatz.basis.len() {
        return Err(Error::Structural("ansatz names and basis differ in length".into()));
    }
    let sign = match sense {
        Sense::Lower => Rational::one(),
        Sense::Upper => -Rational::one(),
    };
    let mut linear = Vec::new();
    let mut unknowns = Vec::new();
    for (b, name) in ansatz.basis.iter().zip(&ansatz.names) {
        linear.push(b.lie_derivative(f)?.scale(&sign));
        unknowns.push(Unknown { name: name.clone(), kind: UnknownKind::Aux });
    }
    for (name, p) in &bound.unknowns {
        linear.push(p.scale(&-sign.clone()));
        unknowns.push(Unknown { name: name.clone(), kind: UnknownKind::Bound });
    }
    let constant = (phi - &bound.fixed).scale(&sign);
    Ok(SFunction {
        poly: AffinePoly { constant, linear },
        sense,
        unknowns,
        phi: phi.clone(),
        field: f.to_vec(),
        ansatz: ansatz.clone(),
        bound: bound.clone(),
    })
}

#[cfg(test)]
mod tests;
