//! Dense primal-dual interior-point solver for small block SDPs with free scalars.

mod ipm;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sosform::{ObjectiveSense, SdpInstance};
use ipm::{IpmOutcome, StdSdp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub step_fraction: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iterations: 200, gap_tolerance: 1e-9, feasibility_tolerance: 1e-9, step_fraction: 0.98 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tolerance > 0.0 && self.feasibility_tolerance > 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::Argument("step fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Marginal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    /// Optimal or marginal: the point is usable.
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Marginal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

mod matrices {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(blocks: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Vec<f64>>> = blocks
            .iter()
            .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let rows: Vec<Vec<Vec<f64>>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|b| {
                let n = b.len();
                DMatrix::from_fn(n, n, |i, j| b[i][j])
            })
            .collect())
    }
}

/// Primal-dual solution in the instance's own variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    #[serde(with = "matrices")]
    pub gram_blocks: Vec<DMatrix<f64>>,
    #[serde(with = "matrices")]
    pub dual_blocks: Vec<DMatrix<f64>>,
    pub free_scalars: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    pub message: String,
    pub trace: Vec<IterationRecord>,
}

impl SdpSolution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Maps between `svec` coordinates and symmetric blocks.
struct Svec {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl Svec {
    fn new(dims: &[usize]) -> Self {
        let mut offsets = Vec::new();
        let mut len = 0;
        for &n in dims {
            offsets.push(len);
            len += n * (n + 1) / 2;
        }
        Svec { dims: dims.to_vec(), offsets, len }
    }

    fn index(&self, b: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.dims[b];
        self.offsets[b] + i * n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    fn to_blocks(&self, v: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.dims
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                DMatrix::from_fn(n, n, |i, j| {
                    let x = v[self.index(b, i, j)];
                    if i == j {
                        x
                    } else {
                        x / SQRT2
                    }
                })
            })
            .collect()
    }

    fn from_blocks(&self, blocks: &[DMatrix<f64>]) -> DVector<f64> {
        let mut v = DVector::zeros(self.len);
        for (b, m) in blocks.iter().enumerate() {
            for i in 0..m.nrows() {
                for j in i..m.ncols() {
                    v[self.index(b, i, j)] = if i == j { m[(i, i)] } else { m[(i, j)] * SQRT2 };
                }
            }
        }
        v
    }
}

/// Orthonormal basis of the column space and of its complement, via SVD.
fn split_range(g: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let m = g.nrows();
    let p = g.ncols();
    if p == 0 || m == 0 {
        return (DMatrix::zeros(m, 0), DMatrix::identity(m, m), DVector::zeros(0), DMatrix::zeros(p, 0));
    }
    // Pad to a square-ish problem so the full left singular basis is available.
    let aug = if p < m {
        let mut a = DMatrix::zeros(m, m);
        a.view_mut((0, 0), (m, p)).copy_from(g);
        a
    } else {
        g.clone()
    };
    let svd = aug.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let sv = svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let keep: Vec<usize> = order.iter().copied().filter(|&k| sv[k] > rel_tol * smax && smax > 0.0).collect();
    let rest: Vec<usize> = (0..m).filter(|k| !keep.contains(k)).collect();
    let ur = DMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])]);
    let uperp = DMatrix::from_fn(m, rest.len(), |i, j| u[(i, rest[j])]);
    let s = DVector::from_iterator(keep.len(), keep.iter().map(|&k| sv[k]));
    // Right singular vectors restricted to the first p coordinates.
    let vr = DMatrix::from_fn(p, keep.len(), |i, j| vt[(keep[j], i)]);
    (ur, uperp, s, vr)
}

fn min_eigenvalue(blocks: &[DMatrix<f64>]) -> f64 {
    blocks
        .iter()
        .filter(|b| b.nrows() > 0)
        .map(|b| SymmetricEigen::new(b.clone()).eigenvalues.min())
        .fold(f64::INFINITY, f64::min)
}

/// Solves the instance; free scalars are eliminated by orthogonal projection.
pub fn solve(inst: &SdpInstance, settings: &SolverSettings) -> Result<SdpSolution> {
    settings.validate()?;
    inst.validate()?;
    let feas = inst.objective.sense == ObjectiveSense::Feasibility;
    let user_blocks = inst.blocks.len();
    let n_free = inst.n_free;
    // Feasibility: X = Xt + t I, maximize t <= 1 through a 1x1 slack block.
    let mut dims = inst.blocks.clone();
    if feas {
        dims.push(1);
    }
    let sv = Svec::new(&dims);
    let m0 = inst.constraints.len() + usize::from(feas);
    let p = n_free + usize::from(feas);
    let mut a = DMatrix::zeros(m0, sv.len);
    let mut g = DMatrix::zeros(m0, p);
    let mut h = DVector::zeros(m0);
    for (k, c) in inst.constraints.iter().enumerate() {
        for &(b, i, j, v) in &c.gram {
            a[(k, sv.index(b, i, j))] += if i == j { v } else { v / SQRT2 };
            if feas && i == j {
                g[(k, n_free)] += v;
            }
        }
        for &(f, v) in &c.free {
            g[(k, f)] += v;
        }
        h[k] = c.rhs;
    }
    let mut cvec = DVector::zeros(p);
    let flip = if inst.objective.sense == ObjectiveSense::Maximize { -1.0 } else { 1.0 };
    for &(k, v) in &inst.objective.free {
        cvec[k] += flip * v;
    }
    if feas {
        let k = m0 - 1;
        g[(k, n_free)] = 1.0;
        a[(k, sv.index(user_blocks, 0, 0))] = 1.0;
        h[k] = 1.0;
        cvec[n_free] = -1.0;
    }
    let fail = |status: SolveStatus, message: String| SdpSolution {
        status,
        gram_blocks: inst.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        dual_blocks: inst.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        free_scalars: vec![0.0; n_free],
        objective_value: f64::NAN,
        dual_objective: f64::NAN,
        duality_gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        min_eigenvalue: f64::NAN,
        iterations: 0,
        message,
        trace: Vec::new(),
    };

    // Free-scalar elimination: w = G^+ (h - A x), rows restricted to range(G)^perp.
    let (ur, uperp, sg, vr) = split_range(&g, 1e-11);
    let gpinv = &vr * DMatrix::from_diagonal(&sg.map(|s| 1.0 / s)) * ur.transpose();
    if cvec.norm() > 0.0 {
        let in_row = &vr * (vr.transpose() * &cvec);
        if (&cvec - in_row).norm() > 1e-9 * cvec.norm() {
            return Ok(fail(SolveStatus::Infeasible, "objective unbounded along free scalars".into()));
        }
    }
    let ared = uperp.transpose() * &a;
    let hred = uperp.transpose() * &h;
    // Objective in X: c^T G^+ (h - A x).
    let obj_const = cvec.dot(&(&gpinv * &h));
    let cx = -(a.transpose() * (gpinv.transpose() * &cvec));
    // Drop dependent rows and orthonormalize.
    let (u2, _, s2, v2) = split_range(&ared.transpose(), 1e-10);
    let arows = u2.transpose();
    let bhat = DMatrix::from_diagonal(&s2.map(|s| 1.0 / s)) * v2.transpose() * &hred;
    let consistent = &v2 * (v2.transpose() * &hred);
    if (&hred - consistent).norm() > 1e-8 * (1.0 + hred.norm()) {
        return Ok(fail(SolveStatus::Infeasible, "equality constraints are inconsistent".into()));
    }

    let mut result_x: Vec<DMatrix<f64>>;
    let result_z: Vec<DMatrix<f64>>;
    let mut message = String::new();
    let mut trace = Vec::new();
    let mut outcome = IpmOutcome::Converged;
    let (mut relgap, mut dinf, mut dobj_std) = (0.0, 0.0, 0.0);
    if sv.len == 0 {
        result_x = Vec::new();
        result_z = Vec::new();
    } else {
        let std = StdSdp {
            dims: dims.clone(),
            a: (0..arows.nrows())
                .map(|k| sv.to_blocks(&arows.row(k).transpose()))
                .collect(),
            b: bhat,
            c: sv.to_blocks(&cx),
        };
        let res = ipm::solve_std(&std, settings);
        result_x = res.x;
        result_z = res.z;
        relgap = res.relgap;
        dinf = res.dinf;
        dobj_std = res.dobj;
        outcome = res.outcome;
        trace = res.trace;
    }
    let xvec = sv.from_blocks(&result_x);
    let mut w = &gpinv * (&h - &a * &xvec);
    let resid = &h - &a * &xvec - &g * &w;
    let hmax = h.amax().max(1.0);
    let primal_residual = resid.amax() / hmax;
    let objective_std = cvec.dot(&w);
    if feas {
        let t = w[n_free];
        for b in result_x.iter_mut().take(user_blocks) {
            let n = b.nrows();
            *b += DMatrix::identity(n, n) * t;
        }
        w = w.rows(0, n_free).into_owned();
    }
    result_x.truncate(user_blocks);
    let mut zblocks = result_z;
    zblocks.truncate(user_blocks);
    let min_eig = min_eigenvalue(&result_x);
    let objective_value = if feas { 0.0 } else { flip * objective_std };
    let dual_objective = if feas { 0.0 } else { flip * (dobj_std + obj_const) };
    let tol = settings.feasibility_tolerance;
    let status = match outcome {
        IpmOutcome::Converged => {
            if feas {
                let t = -objective_std;
                message = format!("maximal eigenvalue margin {t:.3e}");
                if t < -10.0 * tol {
                    SolveStatus::Infeasible
                } else if t < 10.0 * tol {
                    SolveStatus::Marginal
                } else {
                    SolveStatus::Optimal
                }
            } else if min_eig < 10.0 * tol {
                SolveStatus::Marginal
            } else {
                SolveStatus::Optimal
            }
        }
        IpmOutcome::PrimalInfeasible => {
            message = "primal infeasibility detected".into();
            SolveStatus::Infeasible
        }
        IpmOutcome::DualInfeasible => {
            message = "dual infeasibility (unbounded objective) detected".into();
            SolveStatus::Infeasible
        }
        IpmOutcome::IterationLimit => {
            message = "iteration limit reached; best iterate returned".into();
            SolveStatus::NumericalFailure
        }
        IpmOutcome::Stalled => {
            message = "interior-point iteration stalled; best iterate returned".into();
            SolveStatus::NumericalFailure
        }
    };
    Ok(SdpSolution {
        status,
        gram_blocks: result_x.iter().map(|b| (b + b.transpose()) * 0.5).collect(),
        dual_blocks: zblocks,
        free_scalars: w.iter().copied().collect(),
        objective_value,
        dual_objective,
        duality_gap: relgap,
        primal_residual,
        dual_residual: dinf,
        min_eigenvalue: min_eig,
        iterations: trace.len(),
        message,
        trace,
    })
}
