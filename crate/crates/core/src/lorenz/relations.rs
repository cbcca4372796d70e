use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{vector_field, LorenzParams, MomentSpec};
use crate::error::{Error, Result};
use crate::polyalg::{QPoly, Rational};

/// `sum coeff * mean(moment)`, coefficients depending on parameters only.
pub type LinearCombination = BTreeMap<MomentSpec, QPoly>;

/// `mean(target) = mean(rhs)` because `target + f . grad V = rhs` pointwise.
#[derive(Debug, Clone)]
pub struct Relation {
    pub target: MomentSpec,
    pub aux: QPoly,
    pub rhs: LinearCombination,
    /// `rhs` rewritten over [`minimal_set`] only.
    pub chained: LinearCombination,
}

impl Relation {
    /// `target + f . grad V - rhs`, identically zero for a valid record.
    pub fn residual(&self, p: &LorenzParams) -> Result<QPoly> {
        let v = self.aux.vars();
        let lhs = &self.target.poly(v) + &self.aux.lie_derivative(&vector_field(p))?;
        Ok(&lhs - &combination_poly(&self.rhs, v))
    }

    /// Numeric value of the chained combination given minimal-set averages.
    pub fn evaluate_chained(&self, minimal: &BTreeMap<MomentSpec, f64>, params: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (m, c) in &self.chained {
            let a = minimal.get(m).ok_or_else(|| Error::Argument(format!("missing average of {m}")))?;
            total += c.to_float().eval(&pad_point(c, params)) * a;
        }
        Ok(total)
    }
}

fn pad_point(c: &QPoly, params: &[f64]) -> Vec<f64> {
    let mut pt = vec![0.0; 3];
    pt.extend_from_slice(params);
    pt.truncate(c.vars().len());
    pt
}

fn combination_poly(lc: &LinearCombination, v: &std::sync::Arc<crate::polyalg::VarSet>) -> QPoly {
    lc.iter().fold(QPoly::zero(v), |acc, (m, c)| &acc + &(c * &m.poly(v)))
}

/// The moments every symmetric quartic average reduces to.
pub fn minimal_set() -> Vec<MomentSpec> {
    [(0, 0, 1), (0, 0, 2), (0, 2, 1), (0, 0, 3), (0, 2, 2), (0, 0, 4)]
        .into_iter()
        .map(|(l, m, n)| MomentSpec::new(l, m, n))
        .collect()
}

/// The two families `mean(x^(n-1) y) = mean(x^n)` and `mean(x y z^(n-1)) = beta mean(z^n)`.
#[derive(Debug, Clone)]
pub struct ProportionalRecord {
    pub lhs: MomentSpec,
    pub aux: QPoly,
    pub rhs: MomentSpec,
    pub factor: Rational,
}

pub fn proportional_family(n: u32, p: &LorenzParams) -> Result<[ProportionalRecord; 2]> {
    if n == 0 {
        return Err(Error::Argument("family index starts at 1".into()));
    }
    let v = p.vars();
    let nq = Rational::from_integer(n.into());
    let xn = MomentSpec::new(n, 0, 0).poly(&v);
    let zn = MomentSpec::new(0, 0, n).poly(&v);
    let recs = [
        ProportionalRecord {
            lhs: MomentSpec::new(n - 1, 1, 0),
            aux: xn.scale(&-(&nq * &p.sigma).recip()),
            rhs: MomentSpec::new(n, 0, 0),
            factor: Rational::one(),
        },
        ProportionalRecord {
            lhs: MomentSpec::new(1, 1, n - 1),
            aux: zn.scale(&-nq.recip()),
            rhs: MomentSpec::new(0, 0, n),
            factor: p.beta.clone(),
        },
    ];
    let f = vector_field(p);
    for r in &recs {
        let lhs = &r.lhs.poly(&v) + &r.aux.lie_derivative(&f)?;
        if lhs != r.rhs.poly(&v).scale(&r.factor) {
            return Err(Error::Consistency(format!("proportionality for {} failed", r.lhs)));
        }
    }
    Ok(recs)
}

/// The twelve relations expressing symmetric quartic averages through the
/// minimal set, each checked symbolically.
pub fn appendix_relations(p: &LorenzParams) -> Result<Vec<Relation>> {
    let v = p.vars();
    let poly = |t: &str| QPoly::parse(&v, t);
    let r = p.r_poly(&v);
    let beta = QPoly::constant(&v, p.beta.clone());
    let sigma = QPoly::constant(&v, p.sigma.clone());
    let one = QPoly::constant(&v, Rational::one());
    let two = QPoly::constant(&v, Rational::from_integer(2.into()));
    let m = MomentSpec::new;
    let d = &(&one + &beta) + &sigma.scale(&Rational::from_integer(2.into()));
    let dinv = d.constant_value().filter(|c| !c.is_zero()).map(|c| c.recip())
        .ok_or_else(|| Error::Argument("1 + beta + 2 sigma must be nonzero".into()))?;
    let s2 = |a: &QPoly| a.scale(&dinv);
    let neg = |a: &QPoly| -a.clone();

    // (target, V, rhs terms)
    let table: Vec<(MomentSpec, QPoly, Vec<(MomentSpec, QPoly)>)> = vec![
        (m(1, 1, 0), poly("-z")?, vec![(m(0, 0, 1), beta.clone())]),
        (m(2, 0, 0), poly("x^2").map(|q| q.scale(&(&p.sigma * Rational::from_integer(2.into())).recip()))?, vec![(m(1, 1, 0), one.clone())]),
        (m(0, 2, 0), poly("1/2*(y^2 + z^2)")?, vec![(m(1, 1, 0), r.clone()), (m(0, 0, 2), neg(&beta))]),
        (
            m(2, 0, 1),
            poly("x*y")?,
            vec![(m(2, 0, 0), r.clone()), (m(1, 1, 0), neg(&(&one + &sigma))), (m(0, 2, 0), sigma.clone())],
        ),
        (m(1, 1, 1), poly("-1/2*z^2")?, vec![(m(0, 0, 2), beta.clone())]),
        (
            m(3, 1, 0),
            poly("-x^2*z")?,
            vec![(m(2, 0, 1), &beta + &(&two * &sigma)), (m(1, 1, 1), neg(&(&two * &sigma)))],
        ),
        (m(4, 0, 0), poly("x^4").map(|q| q.scale(&(&p.sigma * Rational::from_integer(4.into())).recip()))?, vec![(m(3, 1, 0), one.clone())]),
        (m(1, 1, 2), poly("-1/3*z^3")?, vec![(m(0, 0, 3), beta.clone())]),
        (
            m(1, 3, 0),
            poly("-y^2*z")?,
            vec![(m(0, 2, 1), &two + &beta), (m(1, 1, 1), neg(&(&two * &r))), (m(1, 1, 2), two.clone())],
        ),
        (
            m(2, 0, 2),
            s2(&(&(&poly("x*y*z")? * &(&one + &sigma)).scale(&Rational::from_integer(2.into())) + &poly("x^2*(y^2 + z^2)")?))
                .scale(&Rational::new(1.into(), 2.into())),
            vec![
                (m(0, 2, 1), s2(&(&sigma * &(&sigma + &one)))),
                (m(2, 0, 1), s2(&(&r * &(&one + &sigma)))),
                (m(1, 1, 1), s2(&neg(&(&(&one + &sigma) * &(&(&one + &beta) + &sigma))))),
                (m(3, 1, 0), s2(&r)),
                (m(1, 3, 0), s2(&sigma)),
                (m(1, 1, 2), s2(&sigma)),
            ],
        ),
        (
            m(2, 2, 0),
            poly("-x*y*z")?,
            vec![
                (m(0, 2, 1), neg(&sigma)),
                (m(2, 0, 1), neg(&r)),
                (m(1, 1, 1), &(&one + &beta) + &sigma),
                (m(2, 0, 2), one.clone()),
            ],
        ),
        (
            m(0, 4, 0),
            poly("1/4*(y^2 + z^2)^2")?,
            vec![
                (m(1, 3, 0), r.clone()),
                (m(1, 1, 2), r.clone()),
                (m(0, 2, 2), neg(&(&one + &beta))),
                (m(0, 0, 4), neg(&beta)),
            ],
        ),
    ];

    let minimal = minimal_set();
    let mut known: BTreeMap<MomentSpec, LinearCombination> =
        minimal.iter().map(|&s| (s, LinearCombination::from([(s, one.clone())]))).collect();
    let mut out = Vec::new();
    for (target, aux, terms) in table {
        let mut rhs = LinearCombination::new();
        for (s, c) in terms {
            add_into(&mut rhs, s, &c);
        }
        let mut chained = LinearCombination::new();
        for (s, c) in &rhs {
            let sub = known
                .get(s)
                .ok_or_else(|| Error::Consistency(format!("{s} used before it is expressed")))?;
            for (t, c2) in sub {
                add_into(&mut chained, *t, &(c * c2));
            }
        }
        let rel = Relation { target, aux, rhs, chained: chained.clone() };
        let res = rel.residual(p)?;
        if !res.is_zero() {
            return Err(Error::Consistency(format!("relation for {target} leaves residual {res}")));
        }
        known.insert(target, chained);
        out.push(rel);
    }
    Ok(out)
}

fn add_into(lc: &mut LinearCombination, s: MomentSpec, c: &QPoly) {
    let e = lc.entry(s).or_insert_with(|| QPoly::zero(c.vars()));
    *e = &*e + c;
    if e.is_zero() {
        lc.remove(&s);
    }
}
