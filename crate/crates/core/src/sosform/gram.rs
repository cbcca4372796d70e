use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{BasisPair, SFunction, Sense, UnknownKind};
use crate::error::{Error, Result};
use crate::polyalg::{Monomial, QPoly, Rational};
use crate::ratmat::{Echelon, RatMatrix, SparseRow};

/// Flat numbering of the upper-triangular Gram entries of every block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramLayout {
    pub dims: Vec<usize>,
}

impl GramLayout {
    pub fn n_entries(&self) -> usize {
        self.dims.iter().map(|n| n * (n + 1) / 2).sum()
    }

    pub fn offset(&self, block: usize) -> usize {
        self.dims[..block].iter().map(|n| n * (n + 1) / 2).sum()
    }

    pub fn index(&self, block: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.dims[block];
        // row-major upper triangle
        self.offset(block) + i * n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    pub fn entry(&self, k: usize) -> (usize, usize, usize) {
        let mut rest = k;
        for (b, &n) in self.dims.iter().enumerate() {
            let size = n * (n + 1) / 2;
            if rest < size {
                for i in 0..n {
                    let len = n - i;
                    if rest < len {
                        return (b, i, i + rest);
                    }
                    rest -= len;
                }
            }
            rest -= size;
        }
        panic!("Gram entry index {k} out of range");
    }

    /// Splits a flat vector of entries into symmetric matrices.
    pub fn unflatten(&self, values: &[Rational]) -> Vec<RatMatrix> {
        let mut out: Vec<RatMatrix> = self.dims.iter().map(|&n| RatMatrix::zeros(n, n)).collect();
        for (k, v) in values.iter().enumerate().take(self.n_entries()) {
            let (b, i, j) = self.entry(k);
            out[b][(i, j)] = v.clone();
            out[b][(j, i)] = v.clone();
        }
        out
    }

    pub fn flatten(&self, blocks: &[RatMatrix]) -> Vec<Rational> {
        (0..self.n_entries())
            .map(|k| {
                let (b, i, j) = self.entry(k);
                blocks[b][(i, j)].clone()
            })
            .collect()
    }
}

/// One coefficient-matching equation:
/// `sum gram_k * Q_k + sum free_k * w_k = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramRow {
    pub monomial: Monomial,
    pub gram: SparseRow,
    pub free: SparseRow,
    pub rhs: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "unknown")]
pub enum Objective {
    Minimize(usize),
    Maximize(usize),
    Feasibility,
}

/// Bound polynomial, its Gram basis and the exact matching constraints.
#[derive(Debug, Clone)]
pub struct GramProblem {
    pub s: SFunction,
    pub basis: BasisPair,
    pub layout: GramLayout,
    pub rows: Vec<GramRow>,
    pub independent: Vec<bool>,
    pub objective: Objective,
}

impl GramProblem {
    pub fn n_unknowns(&self) -> usize {
        self.s.unknowns.len()
    }

    pub fn rank(&self) -> usize {
        self.independent.iter().filter(|&&b| b).count()
    }

    pub fn independent_rows(&self) -> impl Iterator<Item = &GramRow> {
        self.rows.iter().zip(&self.independent).filter(|(_, &k)| k).map(|(r, _)| r)
    }

    /// Total number of scalar unknowns: Gram entries followed by free scalars.
    pub fn n_columns(&self) -> usize {
        self.layout.n_entries() + self.n_unknowns()
    }

    /// Rows in augmented sparse form over `[gram entries, free scalars, rhs]`.
    pub fn augmented_rows(&self) -> Vec<SparseRow> {
        let e = self.layout.n_entries();
        let rhs_col = self.n_columns();
        self.rows
            .iter()
            .map(|r| {
                let mut row: SparseRow = r.gram.clone();
                row.extend(r.free.iter().map(|(k, v)| (e + k, v.clone())));
                if !r.rhs.is_zero() {
                    row.push((rhs_col, r.rhs.clone()));
                }
                row
            })
            .collect()
    }

    /// Values fixed uniquely by the affine constraints, per column.
    pub fn determined_values(&self) -> Vec<Option<Rational>> {
        let mut ech = Echelon::new();
        for row in self.augmented_rows() {
            ech.insert(row);
        }
        let n = self.n_columns();
        let mut out = vec![None; n];
        for row in ech.into_rref() {
            let (p, _) = row[0];
            if p >= n {
                continue;
            }
            let others: Vec<&(usize, Rational)> = row[1..].iter().filter(|(c, _)| *c < n).collect();
            if others.is_empty() {
                let rhs = row.iter().find(|(c, _)| *c == n).map_or_else(Rational::zero, |e| e.1.clone());
                out[p] = Some(rhs);
            }
        }
        out
    }

    /// `sum_blocks b^T Q b`.
    pub fn quadratic_form(&self, blocks: &[RatMatrix]) -> QPoly {
        let mut out = QPoly::zero(self.s.vars());
        for (elems, q) in self.basis.blocks().iter().zip(blocks) {
            for i in 0..elems.len() {
                for j in i..elems.len() {
                    let c = if i == j { q[(i, j)].clone() } else { &q[(i, j)] * Rational::from_integer(2.into()) };
                    if !c.is_zero() {
                        out = &out + &(&elems[i] * &elems[j]).scale(&c);
                    }
                }
            }
        }
        out
    }

    /// `S(values) - sum b^T Q b`, zero exactly for a valid assignment.
    pub fn residual(&self, blocks: &[RatMatrix], values: &[Rational]) -> QPoly {
        &self.s.evaluate(values) - &self.quadratic_form(blocks)
    }

    /// State degree of each basis element, per block.
    pub fn gram_degrees(&self) -> Vec<Vec<u32>> {
        self.basis.blocks().iter().map(|b| b.iter().map(QPoly::state_degree).collect()).collect()
    }

    /// State degree of each free scalar's natural scaling.
    pub fn free_degrees(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.s.ansatz.basis.iter().map(QPoly::state_degree).collect();
        out.extend(self.s.bound.unknowns.iter().map(|_| 0));
        out
    }
}

/// Expands `S = b_s^T Q_s b_s + b_a^T Q_a b_a` into one equation per monomial.
pub fn assemble_gram_constraints(s: &SFunction, basis: &BasisPair) -> Result<GramProblem> {
    let vars = s.vars();
    for p in basis.symmetric.iter().chain(&basis.antisymmetric) {
        if **p.vars() != **vars {
            return Err(Error::Structural("basis lives on a different variable set".into()));
        }
    }
    if vars.symmetry_indices().is_some() {
        if let Some(p) = basis.symmetric.iter().find(|p| !p.is_symmetric()) {
            return Err(Error::Structural(format!("basis element {p} is not symmetric")));
        }
        if let Some(p) = basis.antisymmetric.iter().find(|p| !p.is_antisymmetric()) {
            return Err(Error::Structural(format!("basis element {p} is not antisymmetric")));
        }
    }
    let layout = GramLayout { dims: vec![basis.symmetric.len(), basis.antisymmetric.len()] };
    let mut acc: BTreeMap<Monomial, (BTreeMap<usize, Rational>, SparseRow, Rational)> = BTreeMap::new();
    let two = Rational::from_integer(2.into());
    for (b, elems) in basis.blocks().iter().enumerate() {
        for i in 0..elems.len() {
            for j in i..elems.len() {
                let k = layout.index(b, i, j);
                let prod = &elems[i] * &elems[j];
                for (m, c) in prod.terms() {
                    let c = if i == j { c.clone() } else { c * &two };
                    let entry = acc.entry(m.clone()).or_default();
                    *entry.0.entry(k).or_insert_with(Rational::zero) += c;
                }
            }
        }
    }
    for (k, p) in s.poly.linear.iter().enumerate() {
        for (m, c) in p.terms() {
            acc.entry(m.clone()).or_default().1.push((k, -c.clone()));
        }
    }
    for (m, c) in s.poly.constant.terms() {
        acc.entry(m.clone()).or_default().2 = c.clone();
    }
    let mut rows = Vec::new();
    for (m, (gram, free, rhs)) in acc {
        let gram: SparseRow = gram.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        if gram.is_empty() && free.is_empty() && rhs.is_zero() {
            continue;
        }
        rows.push(GramRow { monomial: m, gram, free, rhs });
    }
    let objective = objective_for(s);
    let mut g = GramProblem {
        s: s.clone(),
        basis: basis.clone(),
        layout,
        rows,
        independent: Vec::new(),
        objective,
    };
    let rhs_col = g.n_columns();
    let mut ech = Echelon::new();
    let mut independent = Vec::with_capacity(g.rows.len());
    for (row, r) in g.augmented_rows().into_iter().zip(&g.rows) {
        match ech.insert(row) {
            Some(red) if red[0].0 == rhs_col => {
                return Err(Error::InfeasibleStructure {
                    monomial: QPoly::term(vars, r.monomial.clone(), Rational::one()).to_string(),
                })
            }
            Some(_) => independent.push(true),
            None => independent.push(false),
        }
    }
    g.independent = independent;
    Ok(g)
}

fn objective_for(s: &SFunction) -> Objective {
    match s.unknowns.iter().position(|u| u.kind == UnknownKind::Bound) {
        None => Objective::Feasibility,
        Some(k) => match s.sense {
            Sense::Upper => Objective::Minimize(k),
            Sense::Lower => Objective::Maximize(k),
        },
    }
}
