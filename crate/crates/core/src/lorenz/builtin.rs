use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use super::{gamma_feasible, vector_field, z3_gram_blocks, LorenzParams};
use crate::certify::{verify_certificate, CertificateFile, RationalCertificate, Verification};
use crate::error::{Error, Result};
use crate::polyalg::{rat, QPoly, Rational};
use crate::ratmat::RatMatrix;
use crate::sosform::{BasisPair, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinName {
    /// Sharp `mean(z^2) <= (r-1)^2`, all `beta > 0`.
    Z2,
    /// Sharp `(r-1) mean(z^3) <= (r-1)^4` on the admissible `(beta, sigma)` region.
    Z3,
    /// `r mean(x y^3) >= 0` for `beta^2 - 12 beta + 4 < 0`.
    Xy3,
}

impl FromStr for BuiltinName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z2" => Ok(BuiltinName::Z2),
            "z3" => Ok(BuiltinName::Z3),
            "xy3" => Ok(BuiltinName::Xy3),
            other => Err(Error::Argument(format!("unknown certificate {other:?} (expected z2, z3 or xy3)"))),
        }
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinName::Z2 => "z2",
            BuiltinName::Z3 => "z3",
            BuiltinName::Xy3 => "xy3",
        })
    }
}

/// A certificate together with the system data it certifies.
#[derive(Debug, Clone)]
pub struct BuiltinCertificate {
    pub name: BuiltinName,
    pub params: LorenzParams,
    pub phi: QPoly,
    pub field: Vec<QPoly>,
    pub cert: RationalCertificate,
    /// `(gamma_1, gamma_2)` for the cubic certificate.
    pub witness: Option<(Rational, Rational)>,
}

impl BuiltinCertificate {
    pub fn verify(&self) -> Verification {
        verify_certificate(&self.cert, &self.phi, &self.field, &self.cert.aux_function)
    }

    pub fn to_file(&self) -> CertificateFile {
        let mut labels = self.params.labels();
        labels.insert("certificate".into(), self.name.to_string());
        if let Some((a, b)) = &self.witness {
            labels.insert("gamma".into(), format!("{a}, {b}"));
        }
        CertificateFile::new(&self.cert, &self.phi, &self.field, labels)
    }
}

fn one_by_one(q: Rational) -> RatMatrix {
    RatMatrix::from_rows(vec![vec![q]])
}

fn polys(p: &LorenzParams) -> (QPoly, QPoly, QPoly, QPoly, QPoly) {
    let v = p.vars();
    let var = |n: &str| QPoly::var(&v, n).expect("state variable");
    (var("x"), var("y"), var("z"), p.r_poly(&v), p.rho_poly(&v))
}

fn z2(p: &LorenzParams) -> Result<BuiltinCertificate> {
    if !p.beta.is_positive() {
        return Err(Error::RegionViolation("the z^2 certificate needs beta > 0".into()));
    }
    let (x, y, z, r, rho) = polys(p);
    let two = rat(2, 1);
    let inner = &(&(&z.scale(&two) - &(&r * &z).scale(&two)) + &(&x * &x).scale(&p.sigma.recip()))
        + &(&(&y * &y) + &(&z * &z));
    let aux = inner.scale(&p.beta.recip());
    let cert = RationalCertificate {
        basis: BasisPair { symmetric: vec![&z - &rho], antisymmetric: vec![&x - &y] },
        gram_blocks: vec![one_by_one(Rational::one()), one_by_one(&two / &p.beta)],
        bound_value: rho.pow(2),
        aux_coeffs: vec![],
        aux_function: aux,
        sense: Sense::Upper,
    };
    Ok(BuiltinCertificate {
        name: BuiltinName::Z2,
        params: p.clone(),
        phi: z.pow(2),
        field: vector_field(p),
        cert,
        witness: None,
    })
}

/// Cubic certificate at a given `(gamma_1, gamma_2)`; PSD only inside the region.
pub fn z3_certificate(p: &LorenzParams, g1: &Rational, g2: &Rational) -> Result<BuiltinCertificate> {
    if p.beta.is_zero() || p.sigma.is_zero() || (&p.sigma + Rational::one()).is_zero() {
        return Err(Error::Argument("beta, sigma and 1 + sigma must be nonzero".into()));
    }
    let (x, y, z, _, rho) = polys(p);
    let c1 = (rat(4, 1) * &p.beta).recip();
    let c2 = &p.sigma / (rat(2, 1) * (&p.sigma + Rational::one()));
    let sinv = p.sigma.recip();
    let q = &(&(&y * &y) + &(&z * &z)) - &(&rho * &z).scale(&rat(2, 1));
    let rho2 = rho.pow(2);
    let bracket = &(&(&x.pow(4).scale(&sinv) + &q.pow(2)) + &(&rho2 * &q).scale(&rat(8, 1)))
        + &(&rho2 * &x.pow(2)).scale(&(rat(6, 1) * &sinv));
    let aux = &bracket.scale(&c1) - &(&rho * &(&x.scale(&sinv) + &y).pow(2)).scale(&c2);
    let zr = &z - &rho;
    let basis = BasisPair {
        symmetric: vec![&(&x * &x) - &(&x * &y), &(&x * &x) - &(&y * &y), zr.pow(2)],
        antisymmetric: vec![&rho * &(&x - &y), &x * &zr, &y * &zr],
    };
    let [qs, qa] = z3_gram_blocks(&p.beta, &p.sigma, g1, g2);
    let cert = RationalCertificate {
        basis,
        gram_blocks: vec![qs, qa],
        bound_value: rho.pow(4),
        aux_coeffs: vec![c1, c2],
        aux_function: aux,
        sense: Sense::Upper,
    };
    Ok(BuiltinCertificate {
        name: BuiltinName::Z3,
        params: p.clone(),
        phi: &rho * &z.pow(3),
        field: vector_field(p),
        cert,
        witness: Some((g1.clone(), g2.clone())),
    })
}

fn xy3(p: &LorenzParams) -> Result<BuiltinCertificate> {
    let b = &p.beta;
    let disc = b * b - rat(12, 1) * b + rat(4, 1);
    if !b.is_positive() || !disc.is_negative() {
        return Err(Error::RegionViolation(format!(
            "the x y^3 certificate needs beta^2 - 12 beta + 4 < 0, got {disc} at beta = {b}"
        )));
    }
    let (x, y, z, r, _) = polys(p);
    let two = rat(2, 1);
    let four = rat(4, 1);
    let y2 = &y * &y;
    let z2 = &z * &z;
    // The Gram matrices below represent twice the bound polynomial of
    // r x y^3, so the target and V carry the same factor 2.
    let v = &(&(&(-&(&r.pow(2) * &z2)) + &(&r * &(&y2 * &z))) + &(&r * &z.pow(3)).scale(&rat(4, 3)))
        - &(&y2 + &z2).pow(2).scale(&rat(1, 2));
    let qa = &two * b;
    let off = b + &two;
    let qs = RatMatrix::from_rows(vec![
        vec![&four * b, -off.clone(), -(&four * b)],
        vec![-off.clone(), four.clone(), off.clone()],
        vec![-(&four * b), off, &four * b],
    ]);
    let cert = RationalCertificate {
        basis: BasisPair { symmetric: vec![&r * &z, y2.clone(), z2.clone()], antisymmetric: vec![&y * &z] },
        gram_blocks: vec![qs, one_by_one(qa)],
        bound_value: QPoly::zero(x.vars()),
        aux_coeffs: vec![],
        aux_function: v.scale(&two),
        sense: Sense::Lower,
    };
    Ok(BuiltinCertificate {
        name: BuiltinName::Xy3,
        params: p.clone(),
        phi: (&r * &(&x * &y.pow(3))).scale(&two),
        field: vector_field(p),
        cert,
        witness: None,
    })
}

/// One of the three analytic certificates, or the violated validity condition.
pub fn builtin_certificate(name: BuiltinName, p: &LorenzParams) -> Result<BuiltinCertificate> {
    match name {
        BuiltinName::Z2 => z2(p),
        BuiltinName::Xy3 => xy3(p),
        BuiltinName::Z3 => {
            let region = gamma_feasible(&p.beta, &p.sigma)?;
            match region.witness {
                Some((g1, g2)) if region.feasible => z3_certificate(p, &g1, &g2),
                _ => Err(Error::RegionViolation(format!(
                    "no admissible (gamma_1, gamma_2) at beta = {}, sigma = {}: {}",
                    p.beta, p.sigma, region.note
                ))),
            }
        }
    }
}
