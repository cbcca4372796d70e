//! Infeasible-start primal-dual path following with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps, for `min <C,X> s.t. <A_k,X> = b_k, X >= 0`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{IterationRecord, SolverSettings};

/// Standard-form problem with symmetric block data.
pub(crate) struct StdSdp {
    pub dims: Vec<usize>,
    /// `a[k][b]`: block `b` of constraint matrix `k`.
    pub a: Vec<Vec<DMatrix<f64>>>,
    pub b: DVector<f64>,
    pub c: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmOutcome {
    Converged,
    IterationLimit,
    Stalled,
    PrimalInfeasible,
    DualInfeasible,
}

pub(crate) struct IpmResult {
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    pub outcome: IpmOutcome,
    pub dobj: f64,
    pub relgap: f64,
    pub dinf: f64,
    pub trace: Vec<IterationRecord>,
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct Nt {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
    lx: DMatrix<f64>,
    lz: DMatrix<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Nt> {
    let lx = Cholesky::new(x.clone())?.l();
    let lz = Cholesky::new(z.clone())?.l();
    let svd = (lz.transpose() * &lx).svd(true, true);
    let u = svd.v_t?.transpose();
    let d = svd.singular_values;
    if d.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let dm12 = DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt()));
    let dp12 = DMatrix::from_diagonal(&d.map(f64::sqrt));
    let g = &lx * &u * dm12;
    let lx_inv = lx.clone().solve_lower_triangular(&DMatrix::identity(x.nrows(), x.nrows()))?;
    let ginv = dp12 * u.transpose() * lx_inv;
    let w = &g * g.transpose();
    Some(Nt { g, ginv, w, d, lx, lz })
}

/// Largest step keeping `L L^T + a * dm` positive semidefinite.
fn max_step(l: &DMatrix<f64>, dm: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    let Some(t) = l.clone().solve_lower_triangular(dm) else { return 0.0 };
    let Some(s) = l.clone().solve_lower_triangular(&t.transpose()) else { return 0.0 };
    let lmin = SymmetricEigen::new(sym(&s)).eigenvalues.min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn apply_a(p: &StdSdp, x: &[DMatrix<f64>]) -> DVector<f64> {
    DVector::from_iterator(p.a.len(), p.a.iter().map(|ak| inner(ak, x)))
}

fn apply_at(p: &StdSdp, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for (k, ak) in p.a.iter().enumerate() {
        if y[k] != 0.0 {
            for (o, a) in out.iter_mut().zip(ak) {
                *o += a * y[k];
            }
        }
    }
    out
}

pub(crate) fn solve_std(p: &StdSdp, s: &SolverSettings) -> IpmResult {
    let m = p.a.len();
    let nblocks = p.dims.len();
    let ntot: usize = p.dims.iter().sum();
    let anorm = p.a.iter().map(|ak| fro(ak)).fold(0.0, f64::max);
    let cnorm = fro(&p.c);
    let bnorm = p.b.norm();
    let mut xi = 10f64.max((ntot as f64).sqrt());
    let mut eta = 10f64.max((ntot as f64).sqrt());
    for (k, ak) in p.a.iter().enumerate() {
        xi = xi.max((ntot as f64) * (1.0 + p.b[k].abs()) / (1.0 + fro(ak)));
    }
    eta = eta.max(anorm).max(cnorm);
    let mut x: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
    let mut z: Vec<DMatrix<f64>> = p.dims.iter().map(|&n| DMatrix::identity(n, n) * eta).collect();
    let mut y = DVector::zeros(m);
    let mut trace = Vec::new();
    let mut outcome = IpmOutcome::IterationLimit;
    let mut small_steps = 0;
    let mut best: Option<(f64, Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> = None;

    let measure = |x: &[DMatrix<f64>], y: &DVector<f64>, z: &[DMatrix<f64>]| {
        let rp = &p.b - apply_a(p, x);
        let aty = apply_at(p, y);
        let rd: Vec<DMatrix<f64>> = (0..nblocks).map(|b| &p.c[b] - &aty[b] - &z[b]).collect();
        let pobj = inner(&p.c, x);
        let dobj = p.b.dot(y);
        let xz = inner(x, z);
        let relgap = xz / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = fro(&rd) / (1.0 + cnorm);
        (rp, rd, pobj, dobj, xz, relgap, pinf, dinf)
    };

    for iter in 0..=s.max_iterations {
        let (rp, rd, pobj, dobj, xz, relgap, pinf, dinf) = measure(&x, &y, &z);
        let mu = if ntot > 0 { xz / ntot as f64 } else { 0.0 };
        let merit = relgap.max(pinf).max(dinf);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), z.clone()));
        }
        if relgap < s.gap_tolerance && pinf < s.feasibility_tolerance && dinf < s.feasibility_tolerance {
            outcome = IpmOutcome::Converged;
            break;
        }
        if iter > 5 {
            let aty_z: Vec<DMatrix<f64>> = {
                let aty = apply_at(p, &y);
                aty.iter().zip(&z).map(|(a, b)| a + b).collect()
            };
            if dobj > 0.0 && dobj / fro(&aty_z).max(1e-300) > 1e8 && pinf > 1e-6 {
                outcome = IpmOutcome::PrimalInfeasible;
                break;
            }
            let ax = apply_a(p, &x);
            if pobj < 0.0 && -pobj / ax.norm().max(1e-300) > 1e8 && dinf > 1e-6 {
                outcome = IpmOutcome::DualInfeasible;
                break;
            }
        }
        if iter == s.max_iterations {
            break;
        }
        let Some(nts) = x.iter().zip(&z).map(|(xb, zb)| nt_scaling(xb, zb)).collect::<Option<Vec<Nt>>>()
        else {
            outcome = IpmOutcome::Stalled;
            break;
        };
        // W A_k W per constraint and block, then the Schur complement.
        let waw: Vec<Vec<DMatrix<f64>>> = p
            .a
            .iter()
            .map(|ak| ak.iter().zip(&nts).map(|(a, nt)| &nt.w * a * &nt.w).collect())
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = inner(&p.a[i], &waw[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let reg = 1e-14 * schur.diagonal().amax().max(1.0);
                match Cholesky::new(schur + DMatrix::identity(m, m) * reg) {
                    Some(c) => c,
                    None => {
                        outcome = IpmOutcome::Stalled;
                        break;
                    }
                }
            }
        };
        let wrdw: Vec<DMatrix<f64>> = rd.iter().zip(&nts).map(|(r, nt)| &nt.w * r * &nt.w).collect();
        let direction = |rtilde: &[DMatrix<f64>]| {
            let grg: Vec<DMatrix<f64>> = rtilde
                .iter()
                .zip(&nts)
                .map(|(rt, nt)| {
                    let n = rt.nrows();
                    let rhat = DMatrix::from_fn(n, n, |i, j| 2.0 * rt[(i, j)] / (nt.d[i] + nt.d[j]));
                    &nt.g * rhat * nt.g.transpose()
                })
                .collect();
            let rhs = &rp - apply_a(p, &grg) + apply_a(p, &wrdw);
            let dy = chol.solve(&rhs);
            let atdy = apply_at(p, &dy);
            let dz: Vec<DMatrix<f64>> = rd.iter().zip(&atdy).map(|(r, a)| sym(&(r - a))).collect();
            let dx: Vec<DMatrix<f64>> =
                (0..nblocks).map(|b| sym(&(&grg[b] - &nts[b].w * &dz[b] * &nts[b].w))).collect();
            (dx, dy, dz)
        };
        let d2: Vec<DMatrix<f64>> = nts.iter().map(|nt| DMatrix::from_diagonal(&nt.d.map(|v| -v * v))).collect();
        let (dxa, _, dza) = direction(&d2);
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = nts.iter().zip(dx).map(|(nt, d)| max_step(&nt.lx, d)).fold(f64::INFINITY, f64::min);
            let ad = nts.iter().zip(dz).map(|(nt, d)| max_step(&nt.lz, d)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };
        let (apa, ada) = steps(&dxa, &dza);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let xa: Vec<DMatrix<f64>> = (0..nblocks).map(|b| &x[b] + &dxa[b] * apa).collect();
        let za: Vec<DMatrix<f64>> = (0..nblocks).map(|b| &z[b] + &dza[b] * ada).collect();
        let ratio = if xz > 0.0 { (inner(&xa, &za) / xz).max(0.0) } else { 0.0 };
        let expon = if mu > 1e-6 { 1f64.max(3.0 * apa.min(ada).powi(2)) } else { 3.0 };
        let sigma = ratio.powf(expon).min(1.0);
        let corr: Vec<DMatrix<f64>> = nts
            .iter()
            .enumerate()
            .map(|(b, nt)| {
                let n = nt.d.len();
                let dxt = &nt.ginv * &dxa[b] * nt.ginv.transpose();
                let dzt = nt.g.transpose() * &dza[b] * &nt.g;
                let mut r = DMatrix::identity(n, n) * (sigma * mu) + &d2[b];
                r -= sym(&(dxt * dzt));
                r
            })
            .collect();
        let (dx, dy, dz) = direction(&corr);
        let (ap, ad) = steps(&dx, &dz);
        let ap = (s.step_fraction * ap).min(1.0);
        let ad = (s.step_fraction * ad).min(1.0);
        for b in 0..nblocks {
            x[b] += &dx[b] * ap;
            z[b] += &dz[b] * ad;
            x[b] = sym(&x[b]);
            z[b] = sym(&z[b]);
        }
        y += &dy * ad;
        trace.push(IterationRecord {
            iteration: iter,
            primal_objective: pobj,
            dual_objective: dobj,
            relative_gap: relgap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            mu,
            step_primal: ap,
            step_dual: ad,
        });
        if ap < 1e-10 && ad < 1e-10 {
            small_steps += 1;
            if small_steps >= 3 {
                outcome = IpmOutcome::Stalled;
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    if outcome != IpmOutcome::Converged {
        if let Some((_, bx, by, bz)) = best {
            if matches!(outcome, IpmOutcome::IterationLimit | IpmOutcome::Stalled) {
                x = bx;
                y = by;
                z = bz;
            }
        }
    }
    let (_, _, _, dobj, _, relgap, _, dinf) = measure(&x, &y, &z);
    IpmResult { x, z, outcome, dobj, relgap, dinf, trace }
}
