use nalgebra::{Matrix3, SymmetricEigen};
use num_traits::{One, Signed};
use serde::Serialize;

use crate::certify::{check_psd_exact, rationalize};
use crate::error::{Error, Result};
use crate::polyalg::{ratser, rat, rational_to_f64, Rational};
use crate::ratmat::RatMatrix;

/// Exact symmetric and antisymmetric Gram blocks of the cubic certificate.
pub fn z3_gram_blocks(beta: &Rational, sigma: &Rational, g1: &Rational, g2: &Rational) -> [RatMatrix; 2] {
    let one = Rational::one();
    let two = rat(2, 1);
    let half = rat(1, 2);
    let s = (&two * beta).recip();
    let a13 = &one + &two * beta * g1;
    let a23 = beta * (g2 - &one) - &one;
    let qs = RatMatrix::from_rows(vec![
        vec![&two * &s, -s.clone(), &a13 * &s],
        vec![-s.clone(), &two * &s, &a23 * &s],
        vec![&a13 * &s, &a23 * &s, &two * beta * &s],
    ]);
    let k = -(&half / (&one + sigma));
    let qa = RatMatrix::from_rows(vec![
        vec![rat(3, 1) / beta, k.clone(), -half.clone()],
        vec![k, &one - &two * g1 - g2, g1.clone()],
        vec![-half, g1.clone(), g2.clone()],
    ]);
    [qs, qa]
}

fn blocks_f64(beta: f64, sigma: f64, g1: f64, g2: f64) -> [Matrix3<f64>; 2] {
    let s = 1.0 / (2.0 * beta);
    let a13 = (1.0 + 2.0 * beta * g1) * s;
    let a23 = (beta * (g2 - 1.0) - 1.0) * s;
    let qs = Matrix3::new(2.0 * s, -s, a13, -s, 2.0 * s, a23, a13, a23, 1.0);
    let k = -0.5 / (1.0 + sigma);
    let qa = Matrix3::new(3.0 / beta, k, -0.5, k, 1.0 - 2.0 * g1 - g2, g1, -0.5, g1, g2);
    [qs, qa]
}

pub fn margin(beta: f64, sigma: f64, g1: f64, g2: f64) -> f64 {
    let [qs, qa] = blocks_f64(beta, sigma, g1, g2);
    let a = SymmetricEigen::new(qs).eigenvalues.min();
    let b = SymmetricEigen::new(qa).eigenvalues.min();
    a.min(b)
}

/// The five polynomial conditions, each rewritten as `value >= 0`.
pub fn z3_inequalities(beta: &Rational, sigma: &Rational, g1: &Rational, g2: &Rational) -> [Rational; 5] {
    let one = Rational::one();
    let n = |k: i64| rat(k, 1);
    let b2 = beta * beta;
    let s1 = sigma + &one;
    let s1sq = &s1 * &s1;
    let gm = g2 - &one;
    let i1 = -(&b2 * (n(4) * g1 * g1 + n(2) * &gm * g1 + &gm * &gm)) + beta * (n(2) + g2 - n(2) * g1) - &one;
    let i2 = -(&b2 * (n(4) * g1 * g1 + &gm * &gm) + beta * (n(4) * g1 - n(2) * (g2 + n(3))) - &one);
    let i3 = n(2) * g1 * &s1 * (beta * (sigma + n(2)) - n(12) * g2 * &s1)
        + g2 * ((beta + n(12)) * sigma * (sigma + n(2)) - n(12) * g2 * &s1sq + n(12))
        - beta * &s1sq
        - n(12) * g1 * g1 * &s1sq;
    let i4 = -(n(4) * &s1sq * (beta * g1 * g1 + n(2) * g1 * (beta * g2 + n(3)) + beta * &gm * g2)
        + beta * (sigma * (sigma + n(2)) + n(2))
        - n(12) * &s1sq);
    let i5 = beta * (&one - n(2) * g1) + n(3);
    [i1, i2, i3, i4, i5]
}

/// `12 (1 + sigma)^2 / (2 + sigma)^2`, the largest admissible beta.
pub fn z3_upper_beta(sigma: &Rational) -> Rational {
    let a = sigma + Rational::one();
    let b = sigma + rat(2, 1);
    rat(12, 1) * &a * &a / (&b * &b)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRegion {
    #[serde(serialize_with = "ratser::one")]
    pub beta: Rational,
    #[serde(serialize_with = "ratser::one")]
    pub sigma: Rational,
    pub feasible: bool,
    /// Whether the verdict is backed by an exact witness or by the
    /// infeasibility evidence; `false` means the search was inconclusive.
    pub conclusive: bool,
    #[serde(serialize_with = "witness_text")]
    pub witness: Option<(Rational, Rational)>,
    /// Largest smallest-eigenvalue found, and where.
    pub margin: f64,
    pub best: (f64, f64),
    pub note: String,
}

fn witness_text<S: serde::Serializer>(w: &Option<(Rational, Rational)>, s: S) -> Result<S::Ok, S::Error> {
    let t = w.as_ref().map(|(a, b)| [a.to_string(), b.to_string()]);
    serde::Serialize::serialize(&t, s)
}

fn ternary(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

// The optimal gammas grow like 1/beta as beta shrinks.
fn search_width(beta: f64) -> f64 {
    4.0 + 2.0 / beta
}

/// Best margin over `gamma_1` for fixed `gamma_2`; concave, so exact up to rounding.
pub fn margin_given_gamma2(beta: f64, sigma: f64, g2: f64) -> (f64, f64) {
    let w = search_width(beta);
    ternary(-w, w, |g1| margin(beta, sigma, g1, g2))
}

/// Float maximum of the smallest Gram eigenvalue over `(gamma_1, gamma_2)`.
///
/// A 200x200 grid over `[-1,1] x [0,1]`, then nested ternary searches over a
/// box widening like `1/beta`; these are exact for the concave margin.
pub fn gamma_margin(beta: f64, sigma: f64) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..200 {
        let g2 = i as f64 / 199.0;
        for j in 0..200 {
            let g1 = -1.0 + 2.0 * j as f64 / 199.0;
            let m = margin(beta, sigma, g1, g2);
            if m > best.0 {
                best = (m, g1, g2);
            }
        }
    }
    let (g2, _) = ternary(-1.0, 1.0 + search_width(beta), |g2| margin_given_gamma2(beta, sigma, g2).1);
    let (g1, m) = margin_given_gamma2(beta, sigma, g2);
    if m > best.0 {
        best = (m, g1, g2);
    }
    best
}

fn exact_ok(beta: &Rational, sigma: &Rational, g1: &Rational, g2: &Rational) -> Result<bool> {
    let by_ineq = z3_inequalities(beta, sigma, g1, g2).iter().all(|v| !v.is_negative());
    let by_psd = z3_gram_blocks(beta, sigma, g1, g2).iter().all(|m| check_psd_exact(m).psd);
    if by_ineq != by_psd {
        return Err(Error::Consistency(format!(
            "inequalities and PSD test disagree at gamma = ({g1}, {g2})"
        )));
    }
    Ok(by_ineq)
}

/// Searches `(gamma_1, gamma_2)` making both Gram blocks PSD and verifies
/// any candidate exactly.
pub fn gamma_feasible(beta: &Rational, sigma: &Rational) -> Result<GammaRegion> {
    if !beta.is_positive() || !sigma.is_positive() {
        return Err(Error::Argument("beta and sigma must be positive".into()));
    }
    let (bf, sf) = (rational_to_f64(beta), rational_to_f64(sigma));
    let (m, g1, g2) = gamma_margin(bf, sf);
    let mut region = GammaRegion {
        beta: beta.clone(),
        sigma: sigma.clone(),
        feasible: false,
        conclusive: false,
        witness: None,
        margin: m,
        best: (g1, g2),
        note: String::new(),
    };
    let upper = z3_upper_beta(sigma);
    if *beta > upper {
        region.conclusive = true;
        region.note = format!("beta exceeds the upper limit {upper}");
        return Ok(region);
    }
    // Short denominators first, then neighbours of the finest rounding.
    let mut candidates = Vec::new();
    for den in [2u64, 4, 8, 16, 32, 64, 100, 1000, 10_000, 100_000, 1_000_000] {
        candidates.push((rationalize(g1, den), rationalize(g2, den)));
    }
    let (c1, c2) = candidates.last().cloned().expect("nonempty");
    let step = rat(1, 1_000_000);
    candidates.push((&c1 + &step, c2.clone()));
    candidates.push((&c1 - &step, c2.clone()));
    candidates.push((c1.clone(), &c2 + &step));
    candidates.push((c1, &c2 - &step));
    for (a, b) in candidates {
        if exact_ok(beta, sigma, &a, &b)? {
            region.feasible = true;
            region.conclusive = true;
            region.note = "exact witness".into();
            region.witness = Some((a, b));
            return Ok(region);
        }
    }
    if m < -1e-4 {
        region.conclusive = true;
        region.note = format!("largest smallest eigenvalue {m:.3e} is below -1e-4");
    } else {
        region.note = format!("no exact witness; largest smallest eigenvalue {m:.3e}");
    }
    Ok(region)
}

/// `(lower, upper)` beta limits at `sigma`: the lower one by bisection on the
/// sign of the float margin (not certified), the upper one exact.
pub fn z3_region_bounds(sigma: &Rational) -> Result<(f64, Rational)> {
    if !sigma.is_positive() {
        return Err(Error::Argument("sigma must be positive".into()));
    }
    let sf = rational_to_f64(sigma);
    let upper = z3_upper_beta(sigma);
    let feasible = |b: f64| gamma_margin(b, sf).0 >= 0.0;
    let (mut lo, mut hi) = (1e-3, 0.5 * rational_to_f64(&upper).min(1.0));
    if feasible(lo) || !feasible(hi) {
        return Err(Error::Consistency("lower beta limit is not bracketed".into()));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi), upper))
}
