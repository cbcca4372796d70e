use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Block, GramProblem, Objective};
use crate::error::{Error, Result};
use crate::polyalg::{rational_to_f64, QPoly, Rational};

/// Equality `sum_(b,i,j) a * X_b[i,j] + sum_k g_k * w_k = rhs`.
///
/// Each upper-triangular entry `(i, j)` with `i <= j` appears at most once and
/// its coefficient already accounts for both symmetric positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpConstraint {
    pub label: String,
    pub gram: Vec<(usize, usize, usize, f64)>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
    /// State degree of the monomial this row matches.
    pub degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
    Feasibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpObjective {
    pub sense: ObjectiveSense,
    pub free: Vec<(usize, f64)>,
}

/// Bookkeeping that lets the instance be rescaled and mapped back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpMeta {
    pub block_roles: Vec<Block>,
    pub gram_degrees: Vec<Vec<u32>>,
    pub free_names: Vec<String>,
    pub free_degrees: Vec<u32>,
    pub moment_degree: u32,
}

/// Block-diagonal SDP in equality form with free scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpInstance {
    pub blocks: Vec<usize>,
    pub n_free: usize,
    pub constraints: Vec<SdpConstraint>,
    pub objective: SdpObjective,
    pub meta: SdpMeta,
}

impl SdpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.contains(&0) {
            return Err(Error::Structural("empty PSD block".into()));
        }
        let finite = |v: f64| v.is_finite();
        for c in &self.constraints {
            if !finite(c.rhs)
                || c.gram.iter().any(|&(b, i, j, v)| {
                    !finite(v) || b >= self.blocks.len() || i > j || j >= self.blocks[b]
                })
                || c.free.iter().any(|&(k, v)| !finite(v) || k >= self.n_free)
            {
                return Err(Error::Structural(format!("malformed constraint `{}`", c.label)));
            }
        }
        if self.objective.free.iter().any(|&(k, v)| !finite(v) || k >= self.n_free) {
            return Err(Error::Structural("malformed objective".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: SdpInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

impl GramProblem {
    /// Floating-point SDP over the independent matching equations.
    pub fn to_sdp(&self) -> SdpInstance {
        let degrees = self.gram_degrees();
        let mut block_map = Vec::new();
        let mut blocks = Vec::new();
        let mut block_roles = Vec::new();
        let mut gram_degrees = Vec::new();
        for (b, &n) in self.layout.dims.iter().enumerate() {
            if n > 0 {
                block_map.push(Some(blocks.len()));
                blocks.push(n);
                block_roles.push(if b == 0 { Block::Symmetric } else { Block::Antisymmetric });
                gram_degrees.push(degrees[b].clone());
            } else {
                block_map.push(None);
            }
        }
        let n_state = self.s.vars().n_state();
        let constraints = self
            .independent_rows()
            .map(|r| SdpConstraint {
                label: QPoly::term(self.s.vars(), r.monomial.clone(), Rational::from_integer(1.into()))
                    .to_string(),
                gram: r
                    .gram
                    .iter()
                    .map(|(k, v)| {
                        let (b, i, j) = self.layout.entry(*k);
                        (block_map[b].expect("entry in empty block"), i, j, rational_to_f64(v))
                    })
                    .collect(),
                free: r.free.iter().map(|(k, v)| (*k, rational_to_f64(v))).collect(),
                rhs: rational_to_f64(&r.rhs),
                degree: r.monomial.state_degree(n_state),
            })
            .collect();
        let objective = match self.objective {
            Objective::Minimize(k) => SdpObjective { sense: ObjectiveSense::Minimize, free: vec![(k, 1.0)] },
            Objective::Maximize(k) => SdpObjective { sense: ObjectiveSense::Maximize, free: vec![(k, 1.0)] },
            Objective::Feasibility => SdpObjective { sense: ObjectiveSense::Feasibility, free: vec![] },
        };
        SdpInstance {
            blocks,
            n_free: self.n_unknowns(),
            constraints,
            objective,
            meta: SdpMeta {
                block_roles,
                gram_degrees,
                free_names: self.s.unknowns.iter().map(|u| u.name.clone()).collect(),
                free_degrees: self.free_degrees(),
                moment_degree: self.s.moment_degree(),
            },
        }
    }
}

/// Converts solutions of a rescaled instance back to original variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatScaleMap {
    pub scale: f64,
    pub kappa: f64,
    pub gram_degrees: Vec<Vec<u32>>,
    pub free_degrees: Vec<u32>,
}

impl FloatScaleMap {
    /// Original Gram block from a rescaled one.
    pub fn unscale_block(&self, block: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        let d = &self.gram_degrees[block];
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            x[(i, j)] * self.scale.powi(-((d[i] + d[j]) as i32)) / self.kappa
        })
    }

    pub fn unscale_free(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.free_degrees)
            .map(|(v, &e)| v / (self.kappa * self.scale.powi(e as i32)))
            .collect()
    }

    /// Objective values scale by `kappa`.
    pub fn unscale_objective(&self, v: f64) -> f64 {
        v / self.kappa
    }
}

/// Instance for the dynamics rescaled by `x -> scale * x`, with the map back.
pub fn rescale_problem(inst: &SdpInstance, scale: f64) -> Result<(SdpInstance, FloatScaleMap)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Argument(format!("state scale must be positive, got {scale}")));
    }
    let kappa = scale.powi(-(inst.meta.moment_degree as i32));
    let sp = |e: i64| scale.powi(e as i32);
    let gd = &inst.meta.gram_degrees;
    let fd = &inst.meta.free_degrees;
    let constraints = inst
        .constraints
        .iter()
        .map(|c| {
            let m = c.degree as i64;
            SdpConstraint {
                label: c.label.clone(),
                gram: c
                    .gram
                    .iter()
                    .map(|&(b, i, j, v)| (b, i, j, v * sp(m - gd[b][i] as i64 - gd[b][j] as i64)))
                    .collect(),
                free: c.free.iter().map(|&(k, v)| (k, v * sp(m - fd[k] as i64))).collect(),
                rhs: c.rhs * kappa * sp(m),
                degree: c.degree,
            }
        })
        .collect();
    let objective = SdpObjective {
        sense: inst.objective.sense,
        free: inst.objective.free.iter().map(|&(k, v)| (k, v * sp(-(fd[k] as i64)))).collect(),
    };
    let map = FloatScaleMap {
        scale,
        kappa,
        gram_degrees: gd.clone(),
        free_degrees: fd.clone(),
    };
    Ok((SdpInstance { constraints, objective, ..inst.clone() }, map))
}
