use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{check_psd_exact, verify_certificate, RationalCertificate, Verification};
use crate::error::{Error, Result};
use crate::polyalg::{f64_to_rational, rational_to_f64, Rational};
use crate::ratmat::{Echelon, SparseRow};
use crate::sdpsolve::{solve, SdpSolution, SolveStatus, SolverSettings};
use crate::sosform::{
    assemble_gram_constraints, build_bound_poly, BoundAnsatz, GramProblem, Objective, ScaleMap, Sense,
};

fn fail(message: impl Into<String>) -> Error {
    Error::Stage { stage: "certification", message: message.into() }
}

/// Best rational approximation of `x` with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: u64) -> Rational {
    let exact = f64_to_rational(x).unwrap_or_else(Rational::zero);
    let max_den = BigInt::from(max_den.max(1));
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let (mut num, mut den) = (exact.numer().clone(), exact.denom().clone());
    loop {
        let (a, r) = num.div_mod_floor(&den);
        let q2 = &a * &q1 + &q0;
        if q2 > max_den {
            // Best semiconvergent versus the last convergent.
            let k = (&max_den - &q0) / &q1;
            let semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let conv = Rational::new(p1.clone(), q1.clone());
            return if (&semi - &exact).abs() < (&conv - &exact).abs() { semi } else { conv };
        }
        let p2 = &a * &p1 + &p0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if r.is_zero() {
            return Rational::new(p1, q1);
        }
        (num, den) = (den, r);
    }
}

/// Numeric bound moved outward by `padding`, rounded outward to a short decimal.
///
/// Without padding the value is rounded like any other entry, which recovers
/// exact optima with small denominators.
pub fn padded_bound(numeric: f64, padding: &Rational, sense: Sense, denominator_limit: u64) -> Rational {
    if padding.is_zero() {
        return rationalize(numeric, denominator_limit);
    }
    let exact = f64_to_rational(numeric).unwrap_or_else(Rational::zero);
    let target = match sense {
        Sense::Upper => &exact + padding,
        Sense::Lower => &exact - padding,
    };
    // Granularity at most a hundredth of the padding.
    let mut den = BigInt::one();
    let ten = BigInt::from(10);
    while Rational::new(BigInt::from(100), den.clone()) > *padding {
        den *= &ten;
    }
    let scaled = &target * Rational::from_integer(den.clone());
    let rounded = match sense {
        Sense::Upper => scaled.ceil(),
        Sense::Lower => scaled.floor(),
    };
    rounded / Rational::from_integer(den)
}

/// Rounds an approximate solution to an exact certificate at a padded bound.
///
/// The bound is fixed, an interior point is recovered by a feasibility solve,
/// entries are rounded by continued fractions and the affine equations are
/// restored exactly by solving for the auxiliary coefficients and the
/// trailing Gram entries.
pub fn project_to_rational(
    sol: &SdpSolution,
    g: &GramProblem,
    denominator_limit: u64,
    padding: &Rational,
) -> Result<RationalCertificate> {
    project_with_limits(sol, g, &[denominator_limit], padding)
}

/// As [`project_to_rational`], retrying the rounding with each limit in turn.
pub fn project_with_limits(
    sol: &SdpSolution,
    g: &GramProblem,
    denominator_limits: &[u64],
    padding: &Rational,
) -> Result<RationalCertificate> {
    if !sol.status.is_solved() {
        return Err(fail(format!("solution status {:?} cannot be certified", sol.status)));
    }
    if padding.is_negative() {
        return Err(Error::Argument("padding must be nonnegative".into()));
    }
    let Some(&first_limit) = denominator_limits.first() else {
        return Err(Error::Argument("no denominator limit given".into()));
    };
    let s = &g.s;
    let fixed = match g.objective {
        Objective::Feasibility => s.bound.fixed.clone(),
        Objective::Minimize(k) | Objective::Maximize(k) => {
            if s.bound.unknowns.len() != 1 {
                return Err(Error::Argument("certification supports a single bound unknown".into()));
            }
            let value = padded_bound(sol.free_scalars[k], padding, s.sense, first_limit);
            &s.bound.fixed + &s.bound.unknowns[0].1.scale(&value)
        }
    };
    let sf = build_bound_poly(&s.phi, &s.field, &s.ansatz, s.sense, &BoundAnsatz::fixed(fixed))?;
    let gf = assemble_gram_constraints(&sf, &g.basis).map_err(|e| fail(e.to_string()))?;
    let centered = solve(&gf.to_sdp(), &SolverSettings::default())?;
    if centered.status == SolveStatus::Infeasible {
        return Err(fail(format!("no feasible point at the padded bound: {}", centered.message)));
    }
    let mut last = fail("no denominator limit tried");
    for &limit in denominator_limits {
        match round_and_repair(&centered, &gf, limit) {
            Ok(cert) => return Ok(cert),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn round_and_repair(centered: &SdpSolution, gf: &GramProblem, limit: u64) -> Result<RationalCertificate> {
    let n_aux = gf.s.n_aux();
    // Rounded values in column order [gram entries, aux coefficients].
    let ne = gf.layout.n_entries();
    let mut values: Vec<Rational> = Vec::with_capacity(ne + n_aux);
    let mut sdp_block = 0;
    for &n in &gf.layout.dims {
        if n == 0 {
            continue;
        }
        let x = &centered.gram_blocks[sdp_block];
        for i in 0..n {
            for j in i..n {
                values.push(rationalize(0.5 * (x[(i, j)] + x[(j, i)]), limit));
            }
        }
        sdp_block += 1;
    }
    values.extend(centered.free_scalars.iter().map(|&w| rationalize(w, limit)));

    // Affine repair: aux columns pivot first, then Gram entries from the end.
    let total = ne + n_aux;
    let pos_of = |c: usize| if c >= ne { c - ne } else { n_aux + (ne - 1 - c) };
    let col_of = |p: usize| if p < n_aux { ne + p } else { ne - 1 - (p - n_aux) };
    let mut ech = Echelon::new();
    for row in gf.augmented_rows() {
        let mut permuted: SparseRow =
            row.into_iter().map(|(c, v)| (if c == total { total } else { pos_of(c) }, v)).collect();
        permuted.sort_by_key(|e| e.0);
        if let Some(red) = ech.insert(permuted) {
            if red[0].0 == total {
                return Err(fail("affine equations are inconsistent at the padded bound"));
            }
        }
    }
    for row in &ech.into_rref() {
        let pivot = col_of(row[0].0);
        let mut v = Rational::zero();
        for (p, c) in &row[1..] {
            if *p == total {
                v += c;
            } else {
                v -= c * &values[col_of(*p)];
            }
        }
        values[pivot] = v / &row[0].1;
    }

    let blocks = gf.layout.unflatten(&values[..ne]);
    if !gf.residual(&blocks, &values[ne..]).is_zero() {
        return Err(Error::Consistency("affine repair left a nonzero residual".into()));
    }
    for q in &blocks {
        if !check_psd_exact(q).psd {
            return Err(fail(format!("rounded Gram matrix is not positive semidefinite (denominators <= {limit})")));
        }
    }
    Ok(RationalCertificate::from_problem(gf, blocks, &values[ne..]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnclosureStatus {
    Verified,
    Failed,
}

#[derive(Debug, Clone)]
pub struct EnclosureOptions {
    /// Paddings relative to `max(1, |numeric optimum|)`, tried in order.
    pub schedule: Vec<f64>,
    /// Rounding granularities tried at each padding, coarsest first.
    pub denominator_limits: Vec<u64>,
    /// State scale the solution was computed at.
    pub scale: Rational,
}

impl Default for EnclosureOptions {
    fn default() -> Self {
        EnclosureOptions {
            schedule: vec![0.0, 1e-9, 1e-7, 1e-5, 1e-3],
            denominator_limits: vec![1_000_000, 1_000_000_000, 1_000_000_000_000],
            scale: Rational::one(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnclosureReport {
    pub verified_bound: Option<Rational>,
    pub numeric_optimum: f64,
    pub padding: Option<Rational>,
    pub status: EnclosureStatus,
    pub certificate: Option<RationalCertificate>,
    pub attempts: Vec<String>,
}

fn unscale_certificate(cert: &RationalCertificate, g: &GramProblem, map: &ScaleMap) -> RationalCertificate {
    let blocks = map.unscale_blocks(&cert.gram_blocks);
    let n_aux = cert.aux_coeffs.len();
    let aux: Vec<Rational> =
        cert.aux_coeffs.iter().zip(&map.free_factors[..n_aux]).map(|(v, f)| v / f).collect();
    let bound = cert.bound_value.scale(&map.kappa.recip());
    let mut values = aux.clone();
    values.extend(g.s.bound.unknowns.iter().map(|_| Rational::zero()));
    RationalCertificate {
        basis: g.basis.clone(),
        gram_blocks: blocks,
        bound_value: bound,
        aux_coeffs: aux,
        aux_function: g.s.aux_function(&values),
        sense: g.s.sense,
    }
}

/// Smallest scheduled padding whose rounded certificate verifies exactly.
///
/// `sol` solves `g` rescaled by `opts.scale`; the certificate returned lives
/// in the original variables.
pub fn enclose_upper(g: &GramProblem, sol: &SdpSolution, opts: &EnclosureOptions) -> Result<EnclosureReport> {
    let Objective::Minimize(k) = g.objective else {
        return Err(Error::Argument("enclose_upper needs an upper-bound problem".into()));
    };
    let (gs, map) = if opts.scale.is_one() {
        let map = ScaleMap {
            scale: Rational::one(),
            kappa: Rational::one(),
            gram_degrees: g.gram_degrees(),
            free_factors: vec![Rational::one(); g.n_unknowns()],
        };
        (g.clone(), map)
    } else {
        g.rescaled(&opts.scale)?
    };
    let scaled_opt = f64_to_rational(sol.free_scalars.get(k).copied().unwrap_or(f64::NAN))
        .ok_or_else(|| fail("numeric optimum is not finite"))?;
    let opt = &scaled_opt / &map.free_factors[k];
    let numeric_optimum = rational_to_f64(&opt);
    let mut report = EnclosureReport {
        verified_bound: None,
        numeric_optimum,
        padding: None,
        status: EnclosureStatus::Failed,
        certificate: None,
        attempts: Vec::new(),
    };
    let magnitude = numeric_optimum.abs().max(1.0);
    for &rel in &opts.schedule {
        let pad = rationalize(rel * magnitude, 1_000_000_000_000);
        let pad = if pad.is_negative() { Rational::zero() } else { pad };
        let pad_scaled = &pad * &map.free_factors[k];
        let attempt = project_with_limits(sol, &gs, &opts.denominator_limits, &pad_scaled)
            .map(|c| unscale_certificate(&c, g, &map));
        match attempt {
            Ok(cert) => {
                let verdict = verify_certificate(&cert, &g.s.phi, &g.s.field, &cert.aux_function);
                let Some(bound) = cert.bound_value.constant_value() else {
                    return Err(Error::Consistency("numeric bound certificate is not constant".into()));
                };
                if verdict == Verification::Valid && bound >= opt {
                    report.attempts.push(format!("padding {rel:e}: verified"));
                    report.verified_bound = Some(bound);
                    report.padding = Some(pad);
                    report.status = EnclosureStatus::Verified;
                    report.certificate = Some(cert);
                    return Ok(report);
                }
                report.attempts.push(format!("padding {rel:e}: {verdict:?}"));
            }
            Err(e) => report.attempts.push(format!("padding {rel:e}: {e}")),
        }
    }
    Ok(report)
}
