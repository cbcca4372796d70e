use nalgebra::DMatrix;

use super::{assemble_gram_constraints, build_bound_poly, AuxAnsatz, BasisPair, BoundAnsatz, GramProblem};
use crate::error::{Error, Result};
use crate::polyalg::{rational_powi, rational_to_f64, QPoly, Rational};
use crate::ratmat::RatMatrix;

/// Exact map from a problem in rescaled state variables back to the original.
///
/// Under `x = s * x'` the bound polynomial is multiplied by
/// `kappa = s^(-moment degree)`, basis element `b_i` becomes
/// `s^(-d_i) b_i(s x')` and free scalar `w_k` becomes `factor_k * w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMap {
    pub scale: Rational,
    pub kappa: Rational,
    pub gram_degrees: Vec<Vec<u32>>,
    pub free_factors: Vec<Rational>,
}

fn scale_state(p: &QPoly, s: &Rational) -> QPoly {
    let n = p.vars().n_state();
    QPoly::from_terms(
        p.vars(),
        p.terms().map(|(m, c)| (m.clone(), c * rational_powi(s, m.state_degree(n) as i32))),
    )
}

impl ScaleMap {
    pub fn unscale_blocks(&self, blocks: &[RatMatrix]) -> Vec<RatMatrix> {
        let kinv = self.kappa.recip();
        blocks
            .iter()
            .zip(&self.gram_degrees)
            .map(|(q, d)| {
                let mut out = q.clone();
                for i in 0..q.nrows() {
                    for j in 0..q.ncols() {
                        out[(i, j)] = &q[(i, j)] * rational_powi(&self.scale, -((d[i] + d[j]) as i32)) * &kinv;
                    }
                }
                out
            })
            .collect()
    }

    pub fn unscale_unknowns(&self, w: &[Rational]) -> Vec<Rational> {
        w.iter().zip(&self.free_factors).map(|(v, f)| v / f).collect()
    }

    pub fn unscale_blocks_f64(&self, blocks: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let s = rational_to_f64(&self.scale);
        let k = rational_to_f64(&self.kappa);
        blocks
            .iter()
            .zip(&self.gram_degrees)
            .map(|(q, d)| DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * s.powi(-((d[i] + d[j]) as i32)) / k))
            .collect()
    }

    pub fn unscale_unknowns_f64(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.free_factors).map(|(v, f)| v / rational_to_f64(f)).collect()
    }
}

impl GramProblem {
    /// The same problem for the dynamics in variables `x' = x / scale`.
    pub fn rescaled(&self, scale: &Rational) -> Result<(GramProblem, ScaleMap)> {
        if *scale <= Rational::from_integer(0.into()) {
            return Err(Error::Argument("state scale must be positive".into()));
        }
        let s = &self.s;
        let kappa = rational_powi(scale, -(s.moment_degree() as i32));
        let inv = scale.recip();
        let phi = scale_state(&s.phi, scale).scale(&kappa);
        let field: Vec<QPoly> = s.field.iter().map(|f| scale_state(f, scale).scale(&inv)).collect();
        let basis: Vec<QPoly> = s
            .ansatz
            .basis
            .iter()
            .map(|v| scale_state(v, scale).scale(&rational_powi(scale, -(v.state_degree() as i32))))
            .collect();
        let ansatz = AuxAnsatz { basis, names: s.ansatz.names.clone() };
        let bound = BoundAnsatz { fixed: s.bound.fixed.scale(&kappa), unknowns: s.bound.unknowns.clone() };
        let s2 = build_bound_poly(&phi, &field, &ansatz, s.sense, &bound)?;
        let rescale_elems = |v: &[QPoly]| -> Vec<QPoly> {
            v.iter()
                .map(|b| scale_state(b, scale).scale(&rational_powi(scale, -(b.state_degree() as i32))))
                .collect()
        };
        let pair = BasisPair {
            symmetric: rescale_elems(&self.basis.symmetric),
            antisymmetric: rescale_elems(&self.basis.antisymmetric),
        };
        let g = assemble_gram_constraints(&s2, &pair)?;
        let mut free_factors: Vec<Rational> = s
            .ansatz
            .basis
            .iter()
            .map(|v| &kappa * rational_powi(scale, v.state_degree() as i32))
            .collect();
        free_factors.extend(s.bound.unknowns.iter().map(|_| kappa.clone()));
        let map = ScaleMap {
            scale: scale.clone(),
            kappa: kappa.clone(),
            gram_degrees: self.gram_degrees(),
            free_factors,
        };
        Ok((g, map))
    }
}
