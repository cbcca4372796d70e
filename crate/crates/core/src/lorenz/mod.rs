//! The Lorenz system: dynamics, equilibria, moments and relations, built-in
//! certificates and the parameter region of the cubic bound.

mod builtin;
mod gamma;
mod relations;

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{parse_rational, rat, rational_powi, rational_to_f64, Monomial, QPoly, Rational, VarSet};

pub use builtin::{builtin_certificate, z3_certificate, BuiltinCertificate, BuiltinName};
pub use gamma::{margin as gamma_block_margin, 
    gamma_feasible, gamma_margin, z3_gram_blocks, z3_inequalities, z3_region_bounds, z3_upper_beta, GammaRegion,
};
pub use relations::{appendix_relations, minimal_set, proportional_family, LinearCombination, ProportionalRecord, Relation};

/// How `r` enters: a number, the variable `r`, or the variable `rho = r - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RParam {
    Numeric(Rational),
    Symbolic,
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LorenzParams {
    pub beta: Rational,
    pub sigma: Rational,
    pub r: RParam,
}

impl LorenzParams {
    pub fn new(beta: Rational, sigma: Rational, r: RParam) -> Result<Self> {
        if sigma.is_zero() {
            return Err(Error::Argument("sigma must be nonzero".into()));
        }
        Ok(LorenzParams { beta, sigma, r })
    }

    /// `(8/3, 10, 28)`.
    pub fn standard() -> Self {
        LorenzParams { beta: rat(8, 3), sigma: rat(10, 1), r: RParam::Numeric(rat(28, 1)) }
    }

    /// Parses `beta`, `sigma` and `r` given as rational text; `r` may be `"r"` or `"rho"`.
    pub fn parse(beta: &str, sigma: &str, r: &str) -> Result<Self> {
        let num = |s: &str| parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational {s:?}")));
        let r = match r.trim() {
            "r" => RParam::Symbolic,
            "rho" => RParam::Shifted,
            other => RParam::Numeric(num(other)?),
        };
        Self::new(num(beta)?, num(sigma)?, r)
    }

    pub fn with_r(&self, r: RParam) -> Self {
        LorenzParams { r, ..self.clone() }
    }

    pub fn numeric_r(&self) -> Option<&Rational> {
        match &self.r {
            RParam::Numeric(r) => Some(r),
            _ => None,
        }
    }

    pub fn vars(&self) -> Arc<VarSet> {
        let params: &[&str] = match self.r {
            RParam::Numeric(_) => &[],
            RParam::Symbolic => &["r"],
            RParam::Shifted => &["rho"],
        };
        VarSet::new(&["x", "y", "z"], params).expect("fixed variable names are valid")
    }

    /// `r` as a polynomial over [`Self::vars`].
    pub fn r_poly(&self, vars: &Arc<VarSet>) -> QPoly {
        match &self.r {
            RParam::Numeric(r) => QPoly::constant(vars, r.clone()),
            RParam::Symbolic => QPoly::var(vars, "r").expect("r is a parameter"),
            RParam::Shifted => &QPoly::var(vars, "rho").expect("rho is a parameter") + &QPoly::constant(vars, Rational::one()),
        }
    }

    /// `r - 1`, the height of the nonzero equilibria.
    pub fn rho_poly(&self, vars: &Arc<VarSet>) -> QPoly {
        &self.r_poly(vars) - &QPoly::constant(vars, Rational::one())
    }

    /// Labels for certificate files.
    pub fn labels(&self) -> std::collections::BTreeMap<String, String> {
        let r = match &self.r {
            RParam::Numeric(r) => r.to_string(),
            RParam::Symbolic => "r".into(),
            RParam::Shifted => "rho + 1".into(),
        };
        [("beta", self.beta.to_string()), ("sigma", self.sigma.to_string()), ("r", r)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

impl fmt::Display for LorenzParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = match &self.r {
            RParam::Numeric(r) => r.to_string(),
            RParam::Symbolic => "r".into(),
            RParam::Shifted => "rho+1".into(),
        };
        write!(f, "beta={}, sigma={}, r={}", self.beta, self.sigma, r)
    }
}

/// `(sigma (y - x), r x - y - x z, x y - beta z)` over [`LorenzParams::vars`].
pub fn vector_field(p: &LorenzParams) -> Vec<QPoly> {
    let v = p.vars();
    let x = QPoly::var(&v, "x").unwrap();
    let y = QPoly::var(&v, "y").unwrap();
    let z = QPoly::var(&v, "z").unwrap();
    vec![
        (&y - &x).scale(&p.sigma),
        &(&(&p.r_poly(&v) * &x) - &y) - &(&x * &z),
        &(&x * &y) - &z.scale(&p.beta),
    ]
}

/// Floating-point right-hand side for numeric `r`.
pub fn field_f64(beta: f64, sigma: f64, r: f64, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [sigma * (y - x), r * x - y - x * z, x * y - beta * z]
}

/// The origin, plus `x^+` and `x^-` when `beta (r - 1) > 0`.
pub fn equilibria(p: &LorenzParams) -> Result<Vec<[f64; 3]>> {
    let r = p.numeric_r().ok_or_else(|| Error::Argument("equilibria need a numeric r".into()))?;
    let mut out = vec![[0.0; 3]];
    let b = &p.beta * (r - Rational::one());
    if b.is_positive() {
        let s = rational_to_f64(&b).sqrt();
        let h = rational_to_f64(r) - 1.0;
        out.push([s, s, h]);
        out.push([-s, -s, h]);
    }
    Ok(out)
}

/// Exponents of `x^l y^m z^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MomentSpec {
    pub l: u32,
    pub m: u32,
    pub n: u32,
}

impl MomentSpec {
    pub const fn new(l: u32, m: u32, n: u32) -> Self {
        MomentSpec { l, m, n }
    }

    pub fn degree(&self) -> u32 {
        self.l + self.m + self.n
    }

    pub fn is_symmetric(&self) -> bool {
        (self.l + self.m) % 2 == 0
    }

    pub fn poly(&self, vars: &Arc<VarSet>) -> QPoly {
        let mut e = vec![0; vars.len()];
        e[0] = self.l;
        e[1] = self.m;
        e[2] = self.n;
        QPoly::term(vars, Monomial::new(e), Rational::one())
    }

    pub fn eval(&self, s: [f64; 3]) -> f64 {
        s[0].powi(self.l as i32) * s[1].powi(self.m as i32) * s[2].powi(self.n as i32)
    }

    /// Parses monomial text such as `x^2*z` or `1`.
    pub fn parse(text: &str) -> Result<Self> {
        let v = VarSet::new(&["x", "y", "z"], &[])?;
        let p = QPoly::parse(&v, text)?;
        let mut terms = p.terms();
        match (terms.next(), terms.next()) {
            (Some((m, c)), None) if c.is_one() => Ok(MomentSpec::new(m.exps()[0], m.exps()[1], m.exps()[2])),
            _ => Err(Error::Parse(format!("{text:?} is not a single monomial"))),
        }
    }
}

impl fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = VarSet::new(&["x", "y", "z"], &[]).expect("valid");
        write!(f, "{}", self.poly(&v))
    }
}

/// The eighteen symmetric moments of degree one to four.
pub fn symmetric_moments() -> Vec<MomentSpec> {
    let mut out = Vec::new();
    for d in 1..=4 {
        for l in (0..=d).rev() {
            for m in (0..=d - l).rev() {
                let s = MomentSpec::new(l, m, d - l - m);
                if s.is_symmetric() {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// `x^l y^m z^n` at `x^+-`: `beta^((l+m)/2) (r-1)^((l+m)/2 + n)`.
pub fn moment_at_nonzero_eq(spec: MomentSpec, p: &LorenzParams) -> Result<Rational> {
    if !spec.is_symmetric() {
        return Err(Error::Argument(format!("{spec} is not symmetric under (x,y) -> (-x,-y)")));
    }
    let r = p.numeric_r().ok_or_else(|| Error::Argument("a numeric r is required".into()))?;
    let rho = r - Rational::one();
    if !(&p.beta * &rho).is_positive() {
        return Err(Error::Argument("nonzero equilibria need beta (r - 1) > 0".into()));
    }
    let h = ((spec.l + spec.m) / 2) as i32;
    Ok(rational_powi(&p.beta, h) * rational_powi(&rho, h + spec.n as i32))
}

/// Average divided by its value at the nonzero equilibria.
pub fn normalize(value: f64, spec: MomentSpec, p: &LorenzParams) -> Result<f64> {
    let d = moment_at_nonzero_eq(spec, p)?;
    if d.is_zero() {
        return Err(Error::Argument(format!("{spec} vanishes at the nonzero equilibria")));
    }
    Ok(value / rational_to_f64(&d))
}

/// Exact value of a symmetric polynomial on `x = y = +-sqrt(beta (r-1))`, `z = r - 1`.
///
/// Works for symbolic `r` too; the result depends on parameters only.
pub fn eval_at_nonzero_eq(q: &QPoly, p: &LorenzParams) -> Result<QPoly> {
    let v = q.vars();
    if !q.is_symmetric() {
        return Err(Error::Argument("polynomial is not symmetric".into()));
    }
    let rho = p.rho_poly(v);
    let s2 = rho.scale(&p.beta);
    let mut out = QPoly::zero(v);
    for (m, c) in q.terms() {
        let e = m.exps();
        let k = e[0] + e[1];
        let mut rest = m.exps().to_vec();
        rest[0] = 0;
        rest[1] = 0;
        rest[2] = 0;
        let params = QPoly::term(v, Monomial::new(rest), c.clone());
        out = &out + &(&(&params * &s2.pow(k / 2)) * &rho.pow(e[2]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
