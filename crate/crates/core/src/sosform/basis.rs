use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::{AuxAnsatz, SFunction};
use crate::error::{Error, Result};
use crate::polyalg::{Monomial, QPoly, Rational, VarSet};
use crate::ratmat::RatMatrix;

/// Symmetric and antisymmetric parts of a Gram basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    pub symmetric: Vec<QPoly>,
    pub antisymmetric: Vec<QPoly>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Symmetric,
    Antisymmetric,
}

impl BasisPair {
    pub fn block(&self, b: Block) -> &[QPoly] {
        match b {
            Block::Symmetric => &self.symmetric,
            Block::Antisymmetric => &self.antisymmetric,
        }
    }

    pub fn blocks(&self) -> [&[QPoly]; 2] {
        [&self.symmetric, &self.antisymmetric]
    }

    pub fn len(&self) -> usize {
        self.symmetric.len() + self.antisymmetric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Simultaneous substitutions describing one vanishing locus, e.g. `z = rho, x = y`.
pub type Locus = Vec<(String, QPoly)>;

/// Gram null direction along which a block of the basis is merged.
#[derive(Debug, Clone)]
pub struct NullMerge {
    pub block: Block,
    pub vector: Vec<Rational>,
}

fn parity(m: &Monomial, sym: Option<[usize; 2]>) -> u32 {
    match sym {
        Some([a, b]) => (m.exps()[a] + m.exps()[b]) % 2,
        None => 0,
    }
}

/// All monomials of total degree `deg`, in descending grlex order.
fn monomials_of_degree(n: usize, deg: u32) -> Vec<Monomial> {
    fn rec(n: usize, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == n - 1 {
            cur[i] = left;
            out.push(Monomial::new(cur.clone()));
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(n, i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if n == 0 {
        return if deg == 0 { vec![Monomial::new(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(n, 0, deg, &mut vec![0; n], &mut out);
    out
}

/// Monomials of degree up to `deg`, ascending degree and descending lex within a degree.
fn monomials_up_to(n: usize, deg: u32) -> Vec<Monomial> {
    (0..=deg).flat_map(|d| monomials_of_degree(n, d)).collect()
}

/// General symmetric auxiliary-function ansatz for Lorenz-type fields.
///
/// Lower-degree terms are all symmetric monomials involving a state variable;
/// top-degree terms are `x^p (y^2+z^2)^q`, or with a parameter variable
/// `r^s x^p (y^2+z^2-2rz)^q`.
pub fn gen_lorenz_v_basis(vars: &Arc<VarSet>, degree: u32, include_param: bool) -> Result<AuxAnsatz> {
    if degree == 0 || degree % 2 == 1 {
        return Err(Error::Argument(format!("auxiliary degree must be even and positive, got {degree}")));
    }
    let (ix, iy, iz) = match (vars.index_of("x"), vars.index_of("y"), vars.index_of("z")) {
        (Some(a), Some(b), Some(c)) if vars.n_state() == 3 => (a, b, c),
        _ => return Err(Error::Structural("expected state variables x, y, z".into())),
    };
    let param = if include_param {
        match vars.param_vars().first() {
            Some(p) => Some(vars.index_of(p).unwrap()),
            None => return Err(Error::Structural("no parameter variable available".into())),
        }
    } else {
        None
    };
    let n = vars.len();
    let allowed = |m: &Monomial| {
        m.exps().iter().enumerate().all(|(i, &e)| e == 0 || i == ix || i == iy || i == iz || Some(i) == param)
    };
    let mut basis = Vec::new();
    for d in 1..degree {
        for m in monomials_of_degree(n, d) {
            if allowed(&m) && m.state_degree(3) > 0 && (m.exps()[ix] + m.exps()[iy]) % 2 == 0 {
                basis.push(QPoly::term(vars, m, Rational::one()));
            }
        }
    }
    let x = QPoly::term(vars, Monomial::var(n, ix), Rational::one());
    let y = QPoly::term(vars, Monomial::var(n, iy), Rational::one());
    let z = QPoly::term(vars, Monomial::var(n, iz), Rational::one());
    let mut quad = &(&y * &y) + &(&z * &z);
    let pvar = param.map(|i| QPoly::term(vars, Monomial::var(n, i), Rational::one()));
    if let Some(p) = &pvar {
        quad = &quad - &(&p.scale(&Rational::from_integer(2.into())) * &z);
    }
    let smax = if pvar.is_some() { degree } else { 0 };
    for s in 0..=smax {
        for q in 0..=(degree - s) / 2 {
            let pw = degree - s - 2 * q;
            if pw % 2 == 1 || pw + q == 0 {
                continue;
            }
            let mut t = &x.pow(pw) * &quad.pow(q);
            if let Some(p) = &pvar {
                t = &t * &p.pow(s);
            }
            basis.push(t);
        }
    }
    Ok(AuxAnsatz::new(basis))
}

/// Monomial Gram basis for `s`, split by parity and pruned against the support of `s`.
pub fn gen_basis_pair(s: &SFunction) -> BasisPair {
    let vars = s.vars();
    let support = s.poly.support();
    let half = s.poly.degree().div_ceil(2);
    let sym = vars.symmetry_indices();
    let mut keep: Vec<Monomial> = monomials_up_to(vars.len(), half);
    loop {
        let before = keep.len();
        let current = keep.clone();
        keep.retain(|m| {
            support.contains(&m.mul(m))
                || current.iter().any(|o| {
                    o != m && parity(o, sym) == parity(m, sym) && support.contains(&m.mul(o))
                })
        });
        if keep.len() == before {
            break;
        }
    }
    let mut pair = BasisPair { symmetric: Vec::new(), antisymmetric: Vec::new() };
    for m in keep {
        let odd = parity(&m, sym) == 1;
        let p = QPoly::term(vars, m, Rational::one());
        if odd {
            pair.antisymmetric.push(p);
        } else {
            pair.symmetric.push(p);
        }
    }
    pair
}

fn normalize_sign(p: QPoly) -> QPoly {
    let neg = p.terms().next_back().is_some_and(|(_, c)| c.is_negative());
    if neg {
        -p
    } else {
        p
    }
}

fn reduce_block(block: &[QPoly], loci: &[Vec<(usize, QPoly)>]) -> Result<Vec<QPoly>> {
    if loci.is_empty() || block.is_empty() {
        return Ok(block.to_vec());
    }
    // Rows indexed by (locus, monomial); columns by basis element.
    let mut images: Vec<Vec<QPoly>> = Vec::new();
    for locus in loci {
        let mut col = Vec::new();
        for b in block {
            col.push(b.substitute(locus)?);
        }
        images.push(col);
    }
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for col in &images {
        let mons: BTreeSet<Monomial> = col.iter().flat_map(|p| p.monomials().cloned()).collect();
        for m in mons {
            rows.push(col.iter().map(|p| p.coeff(&m)).collect());
        }
    }
    if rows.is_empty() {
        return Ok(block.to_vec());
    }
    let kernel = RatMatrix::from_rows(rows).kernel();
    let vars = block[0].vars();
    Ok(kernel
        .into_iter()
        .map(|v| {
            let mut p = QPoly::zero(vars);
            for (c, b) in v.iter().zip(block) {
                if !c.is_zero() {
                    p = &p + &b.scale(c);
                }
            }
            normalize_sign(p)
        })
        .collect())
}

fn merge_block(block: Vec<QPoly>, v: &[Rational]) -> Result<Vec<QPoly>> {
    if v.len() != block.len() {
        return Err(Error::Argument(format!(
            "null vector has length {} for a block of {} elements",
            v.len(),
            block.len()
        )));
    }
    let Some(j0) = v.iter().position(|c| !c.is_zero()) else {
        return Err(Error::Argument("null vector is zero".into()));
    };
    let mut out = Vec::new();
    for (j, b) in block.iter().enumerate() {
        if j == j0 {
            continue;
        }
        if v[j].is_zero() {
            out.push(b.clone());
        } else {
            let p = &b.scale(&v[j0]) - &block[j0].scale(&v[j]);
            out.push(normalize_sign(p));
        }
    }
    Ok(out)
}

/// Restricts each block to elements vanishing on every locus, then merges
/// along the supplied Gram null directions.
pub fn reduce_basis(pair: &BasisPair, loci: &[Locus], merges: &[NullMerge]) -> Result<BasisPair> {
    let vars = match pair.symmetric.first().or(pair.antisymmetric.first()) {
        Some(p) => p.vars().clone(),
        None => return Ok(pair.clone()),
    };
    let mut resolved = Vec::new();
    for locus in loci {
        let mut subs = Vec::new();
        for (name, p) in locus {
            let i = vars
                .index_of(name)
                .ok_or_else(|| Error::Structural(format!("unknown variable `{name}` in locus")))?;
            subs.push((i, p.rebase(&vars)?));
        }
        resolved.push(subs);
    }
    let mut symmetric = reduce_block(&pair.symmetric, &resolved)?;
    let mut antisymmetric = reduce_block(&pair.antisymmetric, &resolved)?;
    for m in merges {
        match m.block {
            Block::Symmetric => symmetric = merge_block(symmetric, &m.vector)?,
            Block::Antisymmetric => antisymmetric = merge_block(antisymmetric, &m.vector)?,
        }
    }
    Ok(BasisPair { symmetric, antisymmetric })
}

/// True when `p` vanishes identically after substituting the locus.
pub fn vanishes_on(p: &QPoly, locus: &Locus) -> Result<bool> {
    let subs: Vec<(&str, QPoly)> = locus.iter().map(|(n, q)| (n.as_str(), q.clone())).collect();
    Ok(p.substitute_named(&subs)?.is_zero())
}
