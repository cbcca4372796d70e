//! End-to-end bound computation for Lorenz moments, and the summary table
//! combining trajectories, orbits, built-in certificates and solved SDPs.

use serde::Serialize;

use crate::certify::{enclose_upper, EnclosureOptions, EnclosureStatus, RationalCertificate};
use crate::dynsim::{find_periodic_orbit, orbit_average, time_average, TrajectoryConfig};
use crate::error::{Error, Result};
use crate::lorenz::{
    builtin_certificate, moment_at_nonzero_eq, symmetric_moments, vector_field, BuiltinName, LorenzParams, MomentSpec,
    RParam,
};
use crate::polyalg::{rat, rational_to_f64, Rational};
use crate::sdpsolve::{solve, SdpSolution, SolveStatus, SolverSettings};
use crate::sosform::{
    assemble_gram_constraints, build_bound_poly, AuxAnsatz, gen_basis_pair, gen_lorenz_v_basis, rescale_problem, BoundAnsatz,
    GramProblem, Sense,
};

/// Default state scale applied before solving.
pub const DEFAULT_SCALE: i64 = 20;

#[derive(Debug, Clone)]
pub struct BoundRequest {
    pub params: LorenzParams,
    pub moment: MomentSpec,
    /// Degree of the auxiliary function.
    pub degree: u32,
    pub sense: Sense,
    pub scale: Rational,
    /// Scales tried in turn when the solver fails at `scale`.
    pub fallback_scales: Vec<Rational>,
    pub settings: SolverSettings,
    /// Attempt a verified rational enclosure (upper bounds only).
    pub certify: bool,
    pub enclosure: EnclosureOptions,
}

impl BoundRequest {
    pub fn new(params: LorenzParams, moment: MomentSpec, degree: u32) -> Self {
        BoundRequest {
            params,
            moment,
            degree,
            sense: Sense::Upper,
            scale: rat(DEFAULT_SCALE, 1),
            fallback_scales: vec![rat(10, 1), rat(30, 1), rat(25, 1)],
            settings: SolverSettings::default(),
            certify: true,
            enclosure: EnclosureOptions::default(),
        }
    }
}

/// Gram problem for `mean(moment)` with a full auxiliary function of `degree`.
pub fn formulate(p: &LorenzParams, moment: MomentSpec, degree: u32, sense: Sense) -> Result<GramProblem> {
    if p.numeric_r().is_none() {
        return Err(Error::Argument("numeric bounds need a numeric r".into()));
    }
    let v = p.vars();
    // a constant V contributes nothing
    let ansatz = if degree == 0 { AuxAnsatz::empty() } else { gen_lorenz_v_basis(&v, degree, false)? };
    let s = build_bound_poly(&moment.poly(&v), &vector_field(p), &ansatz, sense, &BoundAnsatz::free(&v))?;
    assemble_gram_constraints(&s, &gen_basis_pair(&s))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub moment: String,
    pub degree: u32,
    pub sense: Sense,
    /// Scale the reported solution was computed at.
    pub scale: String,
    pub scale_attempts: Vec<String>,
    pub status: String,
    pub message: String,
    pub iterations: usize,
    pub blocks: Vec<usize>,
    pub constraints: usize,
    pub numeric_optimum: Option<f64>,
    pub normalized_optimum: Option<f64>,
    pub verified: bool,
    pub verified_bound: Option<String>,
    pub verified_value: Option<f64>,
    pub normalized_verified: Option<f64>,
    pub padding: Option<String>,
    pub enclosure_attempts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BoundOutcome {
    pub report: BoundReport,
    pub problem: Option<GramProblem>,
    pub solution: Option<SdpSolution>,
    pub certificate: Option<RationalCertificate>,
}

fn status_text(s: SolveStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Rescale, formulate, solve and (for upper bounds) enclose.
pub fn run_bound(req: &BoundRequest) -> Result<BoundOutcome> {
    let eq = moment_at_nonzero_eq(req.moment, &req.params).ok().map(|v| rational_to_f64(&v)).filter(|v| *v != 0.0);
    let norm = |v: f64| eq.map(|e| v / e);
    let mut report = BoundReport {
        moment: req.moment.to_string(),
        degree: req.degree,
        sense: req.sense,
        scale: req.scale.to_string(),
        scale_attempts: vec![],
        status: String::new(),
        message: String::new(),
        iterations: 0,
        blocks: vec![],
        constraints: 0,
        numeric_optimum: None,
        normalized_optimum: None,
        verified: false,
        verified_bound: None,
        verified_value: None,
        normalized_verified: None,
        padding: None,
        enclosure_attempts: vec![],
    };
    let g = match formulate(&req.params, req.moment, req.degree, req.sense) {
        Ok(g) => g,
        Err(Error::InfeasibleStructure { monomial }) => {
            report.status = "infeasible".into();
            report.message = format!("monomial {monomial} cannot be matched by any sum of squares");
            return Ok(BoundOutcome { report, problem: None, solution: None, certificate: None });
        }
        Err(e) => return Err(e),
    };
    let inst = g.to_sdp();
    report.blocks = inst.blocks.clone();
    report.constraints = inst.constraints.len();
    let mut scales = vec![req.scale.clone()];
    scales.extend(req.fallback_scales.iter().filter(|s| **s != req.scale).cloned());
    let mut best = None;
    for scale in scales {
        let (scaled, map) = rescale_problem(&inst, rational_to_f64(&scale))?;
        let sol = solve(&scaled, &req.settings)
            .map_err(|e| Error::Stage { stage: "solve", message: e.to_string() })?;
        report.scale_attempts.push(format!("{scale}: {}", status_text(sol.status)));
        let solved = sol.status.is_solved();
        best = Some((scale, map, sol));
        if solved {
            break;
        }
    }
    let (scale, map, sol) = best.expect("at least one scale is tried");
    report.scale = scale.to_string();
    report.status = status_text(sol.status);
    report.message = sol.message.clone();
    report.iterations = sol.iterations;
    let mut certificate = None;
    if sol.status.is_solved() {
        let opt = map.unscale_objective(sol.objective_value);
        report.numeric_optimum = Some(opt);
        report.normalized_optimum = norm(opt);
        if req.certify && req.sense == Sense::Upper {
            let opts = EnclosureOptions { scale, ..req.enclosure.clone() };
            let enc = enclose_upper(&g, &sol, &opts)?;
            report.enclosure_attempts = enc.attempts;
            if enc.status == EnclosureStatus::Verified {
                let b = enc.verified_bound.expect("verified enclosure has a bound");
                let bv = rational_to_f64(&b);
                report.verified = true;
                report.verified_value = Some(bv);
                report.normalized_verified = norm(bv);
                report.verified_bound = Some(b.to_string());
                report.padding = enc.padding.map(|p| p.to_string());
                certificate = enc.certificate;
            }
        }
    }
    Ok(BoundOutcome { report, problem: Some(g), solution: Some(sol), certificate })
}

/// Whether numeric optima never get worse as the degree grows (within `tol` relative).
pub fn is_monotone(reports: &[BoundReport], tol: f64) -> bool {
    let vals: Vec<(Sense, f64)> = reports.iter().filter_map(|r| r.numeric_optimum.map(|v| (r.sense, v))).collect();
    vals.windows(2).all(|w| {
        let ((s, a), (_, b)) = (w[0], w[1]);
        let slack = tol * a.abs().max(1.0);
        match s {
            Sense::Upper => b <= a + slack,
            Sense::Lower => b >= a - slack,
        }
    })
}

#[derive(Debug, Clone)]
pub struct TableOptions {
    pub degree: u32,
    pub trajectory: TrajectoryConfig,
    pub scale: Rational,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { degree: 4, trajectory: TrajectoryConfig::default(), scale: rat(DEFAULT_SCALE, 1) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub moment: String,
    pub chaotic_mean: Option<f64>,
    pub max_known_mean: Option<f64>,
    pub max_known_source: String,
    pub best_bound: Option<f64>,
    pub bound_source: String,
    /// `100 (bound - max known) / max known`.
    pub excess_percent: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryTable {
    pub params: String,
    pub degree: u32,
    pub horizon: f64,
    pub rows: Vec<TableRow>,
}

/// Normalized chaotic means, largest known means and best verified bounds
/// for the eighteen symmetric moments. Failed cells stay empty.
pub fn summary_table(p: &LorenzParams, opts: &TableOptions) -> Result<SummaryTable> {
    let moments = symmetric_moments();
    let chaotic = time_average(p, &moments, &opts.trajectory);
    let orbit = find_periodic_orbit(p, "+-").and_then(|o| orbit_average(&o, p, &moments));
    let sharp = |name: BuiltinName| -> Option<f64> {
        let q = match name {
            BuiltinName::Z3 => p.with_r(RParam::Shifted),
            _ => p.with_r(RParam::Symbolic),
        };
        let c = builtin_certificate(name, &q).ok()?;
        c.verify().is_valid().then_some(1.0)
    };
    let z2 = sharp(BuiltinName::Z2);
    let z3 = sharp(BuiltinName::Z3);
    let mut rows = Vec::new();
    for m in moments {
        let mut notes = Vec::new();
        let chaotic_mean = match &chaotic {
            Ok(r) => r.normalized(m),
            Err(e) => {
                notes.push(format!("trajectory: {e}"));
                None
            }
        };
        let orbit_mean = match &orbit {
            Ok(r) => r.normalized(m),
            Err(e) => {
                notes.push(format!("orbit: {e}"));
                None
            }
        };
        let (max_known_mean, max_known_source) = match orbit_mean {
            Some(o) if o > 1.0 => (Some(o), "+- orbit".to_string()),
            _ => (Some(1.0), "nonzero equilibria".to_string()),
        };
        let builtin = match (m.l, m.m, m.n) {
            (0, 0, 2) | (1, 1, 1) => z2.map(|b| (b, "z2 certificate, sharp")),
            (0, 0, 3) | (1, 1, 2) => z3.map(|b| (b, "z3 certificate, sharp")),
            _ => None,
        };
        let (best_bound, bound_source) = if let Some((b, src)) = builtin {
            (Some(b), src.to_string())
        } else {
            let req = BoundRequest { scale: opts.scale.clone(), ..BoundRequest::new(p.clone(), m, opts.degree) };
            match run_bound(&req) {
                Ok(o) if o.report.verified => (o.report.normalized_verified, format!("degree {} enclosure", opts.degree)),
                Ok(o) => {
                    notes.push(format!("not verified: {} {}", o.report.status, o.report.message));
                    (None, String::new())
                }
                Err(e) => {
                    notes.push(format!("bound: {e}"));
                    (None, String::new())
                }
            }
        };
        let excess_percent = match (best_bound, max_known_mean) {
            (Some(b), Some(k)) => Some(100.0 * (b - k) / k),
            _ => None,
        };
        rows.push(TableRow {
            moment: m.to_string(),
            chaotic_mean,
            max_known_mean,
            max_known_source,
            best_bound,
            bound_source,
            excess_percent,
            notes,
        });
    }
    Ok(SummaryTable {
        params: p.to_string(),
        degree: opts.degree,
        horizon: opts.trajectory.t_total - opts.trajectory.t_transient,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(l: u32, mm: u32, n: u32) -> MomentSpec {
        MomentSpec::new(l, mm, n)
    }

    #[test]
    fn mean_z_degree_two_is_sharp() {
        let o = run_bound(&BoundRequest::new(LorenzParams::standard(), m(0, 0, 1), 2)).unwrap();
        let r = o.report;
        assert!((r.normalized_optimum.unwrap() - 1.0).abs() < 1e-4);
        assert!(r.verified);
        let v = r.normalized_verified.unwrap();
        assert!(v >= r.normalized_optimum.unwrap() && v <= 1.0 + 1e-6, "{v}");
        assert!(o.certificate.is_some());
    }

    #[test]
    fn constant_aux_function_is_infeasible() {
        // U - z is never SOS, but only weakly: bounds run off to infinity,
        // so the solver may stall instead of detecting infeasibility.
        let o = run_bound(&BoundRequest::new(LorenzParams::standard(), m(0, 0, 1), 0)).unwrap();
        assert!(["infeasible", "numerical-failure"].contains(&o.report.status.as_str()), "{:?}", o.report);
        assert!(o.report.numeric_optimum.is_none() && !o.report.verified);
    }

    #[test]
    fn lower_bound_of_y_squared_is_zero() {
        let mut req = BoundRequest::new(LorenzParams::standard(), m(0, 2, 0), 2);
        req.sense = Sense::Lower;
        let r = run_bound(&req).unwrap().report;
        assert!(r.normalized_optimum.unwrap().abs() < 1e-4, "{r:?}");
        assert!(!r.verified);
    }

    #[test]
    fn degrees_tighten_monotonically() {
        let reports: Vec<BoundReport> = [2, 4]
            .into_iter()
            .map(|d| {
                let mut req = BoundRequest::new(LorenzParams::standard(), m(0, 2, 0), d);
                req.certify = false;
                run_bound(&req).unwrap().report
            })
            .collect();
        assert!(is_monotone(&reports, 1e-6));
        let mut swapped = reports.clone();
        swapped.reverse();
        assert!(!is_monotone(&swapped, 1e-6));
    }

    #[test]
    fn symbolic_r_is_rejected() {
        let p = LorenzParams::standard().with_r(RParam::Symbolic);
        assert!(run_bound(&BoundRequest::new(p, m(0, 0, 1), 2)).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let req = BoundRequest::new(LorenzParams::standard(), m(0, 0, 2), 2);
        let a = serde_json::to_string(&run_bound(&req).unwrap().report).unwrap();
        let b = serde_json::to_string(&run_bound(&req).unwrap().report).unwrap();
        assert_eq!(a, b);
    }
}
