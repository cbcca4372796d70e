//! Sparse multivariate polynomials over state and parameter variables.

mod coeff;
mod parse;
pub mod ratser;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coeff::{
    f64_to_rational, parse_rational, rat, rational_abs, rational_powi, rational_to_f64, Coeff,
    Rational,
};

/// Ordered state variables followed by ordered parameter variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarSet {
    state: Vec<String>,
    params: Vec<String>,
}

impl VarSet {
    pub fn new(state: &[&str], params: &[&str]) -> Result<Arc<VarSet>> {
        let vs = VarSet {
            state: state.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
        };
        vs.validate()?;
        Ok(Arc::new(vs))
    }

    pub fn validate(&self) -> Result<()> {
        let all: Vec<&String> = self.state.iter().chain(self.params.iter()).collect();
        if all.len() > 8 {
            return Err(Error::Structural("at most 8 variables are supported".into()));
        }
        for (i, a) in all.iter().enumerate() {
            let ok = !a.is_empty()
                && a.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(Error::Structural(format!("invalid variable name `{a}`")));
            }
            if all[..i].contains(a) {
                return Err(Error::Structural(format!("duplicate variable `{a}`")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.len() + self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_state(&self) -> usize {
        self.state.len()
    }

    pub fn state_vars(&self) -> &[String] {
        &self.state
    }

    pub fn param_vars(&self) -> &[String] {
        &self.params
    }

    pub fn name(&self, i: usize) -> &str {
        if i < self.state.len() {
            &self.state[i]
        } else {
            &self.params[i - self.state.len()]
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.state
            .iter()
            .chain(self.params.iter())
            .position(|v| v == name)
    }

    pub fn is_state(&self, i: usize) -> bool {
        i < self.state.len()
    }

    /// Indices negated by the reflection (x, y) -> (-x, -y), when both exist.
    pub fn symmetry_indices(&self) -> Option<[usize; 2]> {
        Some([self.index_of("x")?, self.index_of("y")?])
    }
}

/// Exponent vector, one entry per variable of the owning [`VarSet`].
///
/// Ordered graded-lexicographically: total degree first, then
/// lexicographic with earlier variables ranking higher.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Degree in the first `n_state` variables only.
    pub fn state_degree(&self, n_state: usize) -> u32 {
        self.0[..n_state].iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial; coefficients are exact rationals or doubles.
#[derive(Clone)]
pub struct Poly<C: Coeff = Rational> {
    vars: Arc<VarSet>,
    terms: BTreeMap<Monomial, C>,
}

pub type QPoly = Poly<Rational>;
pub type FPoly = Poly<f64>;

fn same_vars(a: &Arc<VarSet>, b: &Arc<VarSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl<C: Coeff> Poly<C> {
    pub fn zero(vars: &Arc<VarSet>) -> Self {
        Poly { vars: vars.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VarSet>, c: C) -> Self {
        Self::term(vars, Monomial::one(vars.len()), c)
    }

    pub fn term(vars: &Arc<VarSet>, m: Monomial, c: C) -> Self {
        assert_eq!(m.0.len(), vars.len(), "monomial length does not match variable set");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { vars: vars.clone(), terms }
    }

    pub fn var(vars: &Arc<VarSet>, name: &str) -> Result<Self> {
        let i = vars
            .index_of(name)
            .ok_or_else(|| Error::Structural(format!("unknown variable `{name}`")))?;
        Ok(Self::term(vars, Monomial::var(vars.len(), i), C::one()))
    }

    pub fn from_terms(vars: &Arc<VarSet>, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            assert_eq!(m.0.len(), vars.len(), "monomial length does not match variable set");
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Total degree; the zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn state_degree(&self) -> u32 {
        let n = self.vars.n_state();
        self.terms.keys().map(|m| m.state_degree(n)).max().unwrap_or(0)
    }

    /// Lowest state degree over the terms; 0 for the zero polynomial.
    pub fn min_state_degree(&self) -> u32 {
        let n = self.vars.n_state();
        self.terms.keys().map(|m| m.state_degree(n)).min().unwrap_or(0)
    }

    /// True when no state variable occurs.
    pub fn is_param_only(&self) -> bool {
        let n = self.vars.n_state();
        self.terms.keys().all(|m| m.state_degree(n) == 0)
    }

    pub fn constant_value(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_vars(&self, other: &Self) -> Result<()> {
        if same_vars(&self.vars, &other.vars) {
            Ok(())
        } else {
            Err(Error::Structural("polynomials live on different variable sets".into()))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_vars(other)?;
        let mut out = Self::zero(&self.vars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(&self.vars, C::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative with respect to a state variable.
    pub fn differentiate(&self, var: &str) -> Result<Self> {
        let i = self
            .vars
            .index_of(var)
            .filter(|&i| self.vars.is_state(i))
            .ok_or_else(|| Error::Structural(format!("`{var}` is not a state variable")))?;
        Ok(self.differentiate_index(i))
    }

    fn differentiate_index(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[i] -= 1;
            out.add_term(dm, c.clone() * C::from_int(e as i64));
        }
        out
    }

    /// `sum_i f_i * dV/dx_i` over the state variables.
    pub fn lie_derivative(&self, f: &[Self]) -> Result<Self> {
        if f.len() != self.vars.n_state() {
            return Err(Error::Structural(format!(
                "vector field has {} components for {} state variables",
                f.len(),
                self.vars.n_state()
            )));
        }
        let mut out = Self::zero(&self.vars);
        for (i, fi) in f.iter().enumerate() {
            let d = self.differentiate_index(i);
            out = out.checked_add(&fi.checked_mul(&d)?)?;
        }
        Ok(out)
    }

    /// Negates the listed variables.
    pub fn reflect(&self, idx: &[usize]) -> Self {
        let mut out = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let odd = idx.iter().map(|&i| m.0[i]).sum::<u32>() % 2 == 1;
            out.add_term(m.clone(), if odd { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Image under (x, y) -> (-x, -y); identity when x or y is absent.
    pub fn apply_symmetry(&self) -> Self {
        match self.vars.symmetry_indices() {
            Some(idx) => self.reflect(&idx),
            None => self.clone(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.apply_symmetry() == *self
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.apply_symmetry() == -self.clone()
    }

    /// Evaluates at a point given in VarSet order.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.vars.len(), "point dimension mismatch");
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (e, x) in m.0.iter().zip(point) {
                for _ in 0..*e {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Evaluates with named assignments; unassigned variables that occur are an error.
    pub fn eval_named(&self, point: &HashMap<String, C>) -> Result<C> {
        let n = self.vars.len();
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let name = self.vars.name(i);
            match point.get(name) {
                Some(v) => vals.push(v.clone()),
                None => {
                    if self.terms.keys().any(|m| m.0[i] > 0) {
                        return Err(Error::Structural(format!("no value for `{name}`")));
                    }
                    vals.push(C::zero());
                }
            }
        }
        Ok(self.eval(&vals))
    }

    /// Simultaneous substitution `var_i -> poly_i` in the same variable set.
    pub fn substitute(&self, subs: &[(usize, Self)]) -> Result<Self> {
        for (_, p) in subs {
            self.check_vars(p)?;
        }
        let mut out = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let mut t = Self::constant(&self.vars, c.clone());
            for (i, p) in subs {
                let e = rest.0[*i];
                if e > 0 {
                    rest.0[*i] = 0;
                    t = &t * &p.pow(e);
                }
            }
            let mono = Self::term(&self.vars, rest, C::one());
            out = &out + &(&t * &mono);
        }
        Ok(out)
    }

    pub fn substitute_named(&self, subs: &[(&str, Self)]) -> Result<Self> {
        let mut idx = Vec::with_capacity(subs.len());
        for (name, p) in subs {
            let i = self
                .vars
                .index_of(name)
                .ok_or_else(|| Error::Structural(format!("unknown variable `{name}`")))?;
            idx.push((i, p.clone()));
        }
        self.substitute(&idx)
    }

    /// Re-expresses the polynomial over a different variable set, matching by name.
    pub fn rebase(&self, target: &Arc<VarSet>) -> Result<Self> {
        let map: Vec<Option<usize>> =
            (0..self.vars.len()).map(|i| target.index_of(self.vars.name(i))).collect();
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut e = vec![0; target.len()];
            for (i, &k) in m.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                match map[i] {
                    Some(j) => e[j] = k,
                    None => {
                        return Err(Error::Structural(format!(
                            "variable `{}` is not available",
                            self.vars.name(i)
                        )))
                    }
                }
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::<D>::zero(&self.vars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> FPoly {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn parse(vars: &Arc<VarSet>, text: &str) -> Result<Self> {
        parse::parse_poly(vars, text)
    }
}

impl<C: Coeff> PartialEq for Poly<C> {
    fn eq(&self, other: &Self) -> bool {
        same_vars(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl<C: Coeff> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({})", self)
    }
}

impl<C: Coeff> fmt::Display for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = if neg { -c.clone() } else { c.clone() };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut first = true;
            if !mag.is_one() || m.is_one() {
                mag.write_literal(f)?;
                first = false;
            }
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.vars.name(i))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<C: Coeff> std::ops::$tr<&Poly<C>> for &Poly<C> {
            type Output = Poly<C>;
            fn $method(self, rhs: &Poly<C>) -> Poly<C> {
                self.$checked(rhs).expect("polynomials live on different variable sets")
            }
        }
        impl<C: Coeff> std::ops::$tr<Poly<C>> for Poly<C> {
            type Output = Poly<C>;
            fn $method(self, rhs: Poly<C>) -> Poly<C> {
                (&self).$checked(&rhs).expect("polynomials live on different variable sets")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl<C: Coeff> std::ops::Neg for Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        self.scale(&-C::one())
    }
}

impl<C: Coeff> std::ops::Neg for &Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        self.scale(&-C::one())
    }
}

impl Serialize for QPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests;
