use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::polyalg::{ratser, Rational};
use crate::ratmat::RatMatrix;

/// Coefficients `a_0..a_n` of `det(t I - m)`, lowest power first.
///
/// Faddeev-LeVerrier recursion on the integer matrix `d m`, `d` the common
/// denominator, which avoids gcd work on growing rationals; exact.
pub fn char_poly(m: &RatMatrix) -> Vec<Rational> {
    let n = m.nrows();
    let d = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(BigInt::one(), |acc, (i, j)| acc.lcm(m[(i, j)].denom()));
    let a: Vec<Vec<BigInt>> =
        (0..n).map(|i| (0..n).map(|j| m[(i, j)].numer() * (&d / m[(i, j)].denom())).collect()).collect();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    // am = A * M_k, starting from M_1 = I
    let mut am = a.clone();
    for k in 1..=n {
        let tr: BigInt = (0..n).map(|i| &am[i][i]).sum();
        c[n - k] = -tr / BigInt::from(k);
        if k < n {
            for (i, row) in am.iter_mut().enumerate() {
                row[i] += &c[n - k];
            }
            am = int_mul(&a, &am);
        }
    }
    let mut scale = BigInt::one();
    let mut out = vec![Rational::zero(); n + 1];
    for j in (0..=n).rev() {
        out[j] = Rational::new(std::mem::take(&mut c[j]), scale.clone());
        scale *= &d;
    }
    out
}

fn int_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

/// `m = sum_k d_k l_k l_k^T`, one rank-one term per nonzero pivot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdlFactor {
    /// Index eliminated at each step.
    pub order: Vec<usize>,
    #[serde(serialize_with = "ratser::many")]
    pub pivots: Vec<Rational>,
    /// Row `k` is `l_k`, with `l_k[order[k]] = 1`.
    #[serde(serialize_with = "ratser::nested")]
    pub rows: Vec<Vec<Rational>>,
}

impl LdlFactor {
    pub fn rank(&self) -> usize {
        self.pivots.iter().filter(|d| !d.is_zero()).count()
    }

    pub fn reconstruct(&self, n: usize) -> RatMatrix {
        let mut out = RatMatrix::zeros(n, n);
        for (d, l) in self.pivots.iter().zip(&self.rows) {
            for i in 0..n {
                if l[i].is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += d * &l[i] * &l[j];
                }
            }
        }
        out
    }
}

/// Why a matrix is not positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsdWitness {
    /// `det(t I - m)` coefficient of `t^power` has the wrong sign.
    SignViolation {
        power: usize,
        #[serde(serialize_with = "ratser::one")]
        coefficient: Rational,
    },
    Factorization(LdlFactor),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport {
    pub psd: bool,
    pub definite: bool,
    #[serde(serialize_with = "ratser::many")]
    pub char_poly: Vec<Rational>,
    pub by_char_poly: bool,
    pub by_ldl: bool,
    pub witness: PsdWitness,
}

/// First coefficient breaking the sign alternation, if any.
pub fn sign_violation(coeffs: &[Rational]) -> Option<usize> {
    let n = coeffs.len() - 1;
    (0..=n).find(|&k| {
        let c = &coeffs[k];
        if (n - k) % 2 == 0 {
            c.is_negative()
        } else {
            c.is_positive()
        }
    })
}

/// Symmetric elimination taking the first positive diagonal at each step.
///
/// Returns `Err` as soon as a Schur complement shows the matrix is indefinite.
pub fn ldl_psd(m: &RatMatrix) -> Result<LdlFactor, ()> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut f = LdlFactor { order: Vec::new(), pivots: Vec::new(), rows: Vec::new() };
    while !active.is_empty() {
        if active.iter().any(|&i| a[(i, i)].is_negative()) {
            return Err(());
        }
        let Some(pos) = active.iter().position(|&i| a[(i, i)].is_positive()) else {
            // Zero diagonal: PSD only if the remaining block vanishes.
            let nonzero = active.iter().any(|&i| active.iter().any(|&j| !a[(i, j)].is_zero()));
            return if nonzero { Err(()) } else { Ok(f) };
        };
        let p = active.remove(pos);
        let d = a[(p, p)].clone();
        let mut l = vec![Rational::zero(); n];
        l[p] = Rational::one();
        for &j in &active {
            l[j] = &a[(p, j)] / &d;
        }
        for &i in &active {
            if l[i].is_zero() {
                continue;
            }
            for &j in &active {
                let delta = &l[i] * &a[(p, j)];
                a[(i, j)] -= delta;
            }
        }
        f.order.push(p);
        f.pivots.push(d);
        f.rows.push(l);
    }
    Ok(f)
}

/// Exact PSD decision by two independent methods.
pub fn check_psd_exact(m: &RatMatrix) -> PsdReport {
    assert!(m.is_square() && m.is_symmetric(), "check_psd_exact needs a symmetric matrix");
    let cp = char_poly(m);
    let viol = sign_violation(&cp);
    let ldl = ldl_psd(m);
    let by_char_poly = viol.is_none();
    let by_ldl = ldl.is_ok();
    let psd = by_char_poly && by_ldl;
    let definite = psd && !cp[0].is_zero();
    let witness = match (viol, ldl) {
        (Some(k), _) => PsdWitness::SignViolation { power: k, coefficient: cp[k].clone() },
        (None, Ok(f)) => PsdWitness::Factorization(f),
        // Cannot happen for a symmetric matrix; surfaced through the flags.
        (None, Err(())) => PsdWitness::SignViolation { power: 0, coefficient: cp[0].clone() },
    };
    PsdReport { psd, definite, char_poly: cp, by_char_poly, by_ldl, witness }
}
