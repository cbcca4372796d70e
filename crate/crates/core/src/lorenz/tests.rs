use num_traits::{One, Signed};
use proptest::prelude::*;

use super::*;
use crate::certify::{check_psd_exact, ldl_psd, Verification};
use crate::polyalg::{rat, rational_to_f64, QPoly, Rational};
use crate::ratmat::RatMatrix;

fn sym(beta: Rational, sigma: Rational) -> LorenzParams {
    LorenzParams::new(beta, sigma, RParam::Symbolic).unwrap()
}

fn mat(rows: &[&[(i64, i64)]]) -> RatMatrix {
    RatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect()).collect())
}

#[test]
fn field_vanishes_at_equilibria() {
    let p = LorenzParams::standard();
    for e in equilibria(&p).unwrap() {
        let f = field_f64(8.0 / 3.0, 10.0, 28.0, e);
        assert!(f.iter().all(|v| v.abs() < 1e-12), "{f:?}");
    }
    let eq = equilibria(&p).unwrap();
    assert_eq!(eq.len(), 3);
    assert!((eq[1][0].abs() - 72f64.sqrt()).abs() < 1e-12);
    assert_eq!(eq[1][2], 27.0);
    assert_eq!(equilibria(&p.with_r(RParam::Numeric(Rational::one()))).unwrap().len(), 1);
    assert_eq!(equilibria(&p.with_r(RParam::Numeric(rat(1, 2)))).unwrap().len(), 1);
}

#[test]
fn shifted_field_expands_r() {
    let p = LorenzParams::standard().with_r(RParam::Shifted);
    let f = vector_field(&p);
    let v = p.vars();
    assert_eq!(f[1], QPoly::parse(&v, "rho*x + x - y - x*z").unwrap());
}

#[test]
fn moment_values_at_equilibria() {
    let p = LorenzParams::standard();
    assert_eq!(moment_at_nonzero_eq(MomentSpec::new(0, 0, 1), &p).unwrap(), rat(27, 1));
    assert_eq!(moment_at_nonzero_eq(MomentSpec::new(2, 0, 0), &p).unwrap(), rat(72, 1));
    assert_eq!(moment_at_nonzero_eq(MomentSpec::new(2, 0, 1), &p).unwrap(), rat(1944, 1));
    assert!(moment_at_nonzero_eq(MomentSpec::new(1, 0, 1), &p).is_err());
    assert_eq!(normalize(27.0, MomentSpec::new(0, 0, 1), &p).unwrap(), 1.0);
    assert_eq!(normalize(0.0, MomentSpec::new(0, 0, 1), &p).unwrap(), 0.0);
    assert!((normalize(23.550, MomentSpec::new(0, 0, 1), &p).unwrap() - 0.87223).abs() < 1e-4);
}

#[test]
fn eighteen_symmetric_moments() {
    let m = symmetric_moments();
    assert_eq!(m.len(), 18);
    assert!(m.iter().all(|s| s.is_symmetric() && (1..=4).contains(&s.degree())));
    for s in &m {
        assert_eq!(MomentSpec::parse(&s.to_string()).unwrap(), *s);
    }
}

#[test]
fn proportional_families() {
    let p = sym(rat(8, 3), rat(10, 1));
    let [a, b] = proportional_family(2, &p).unwrap();
    assert_eq!((a.lhs, a.rhs), (MomentSpec::new(1, 1, 0), MomentSpec::new(2, 0, 0)));
    assert_eq!((b.lhs, b.rhs, b.factor), (MomentSpec::new(1, 1, 1), MomentSpec::new(0, 0, 2), rat(8, 3)));
    let [_, b3] = proportional_family(3, &p).unwrap();
    assert_eq!(b3.lhs, MomentSpec::new(1, 1, 2));
    let [a4, _] = proportional_family(4, &p).unwrap();
    assert_eq!((a4.lhs, a4.rhs), (MomentSpec::new(3, 1, 0), MomentSpec::new(4, 0, 0)));
    assert!(proportional_family(0, &p).is_err());
}

#[test]
fn relation_table_rows() {
    let p = sym(rat(8, 3), rat(10, 1));
    let rels = appendix_relations(&p).unwrap();
    assert_eq!(rels.len(), 12);
    let v = p.vars();
    let minimal = minimal_set();
    for r in &rels {
        assert!(r.residual(&p).unwrap().is_zero(), "{}", r.target);
        assert!(r.chained.keys().all(|m| minimal.contains(m)), "{}", r.target);
    }
    let find = |s: MomentSpec| rels.iter().find(|r| r.target == s).unwrap();
    let xy = find(MomentSpec::new(1, 1, 0));
    assert_eq!(xy.aux, QPoly::parse(&v, "-z").unwrap());
    assert_eq!(xy.rhs[&MomentSpec::new(0, 0, 1)], QPoly::parse(&v, "8/3").unwrap());
    let y2 = find(MomentSpec::new(0, 2, 0));
    assert_eq!(y2.chained[&MomentSpec::new(0, 0, 1)], QPoly::parse(&v, "8/3*r").unwrap());
    assert_eq!(y2.chained[&MomentSpec::new(0, 0, 2)], QPoly::parse(&v, "-8/3").unwrap());
    let x2z = find(MomentSpec::new(2, 0, 1));
    assert_eq!(x2z.aux, QPoly::parse(&v, "x*y").unwrap());
    assert_eq!(x2z.chained[&MomentSpec::new(0, 0, 1)], QPoly::parse(&v, "88/3*r - 88/3").unwrap());
    assert_eq!(x2z.chained[&MomentSpec::new(0, 0, 2)], QPoly::parse(&v, "-80/3").unwrap());
}

#[test]
fn chained_relations_hold_at_equilibria() {
    let p = LorenzParams::standard();
    let rels = appendix_relations(&p).unwrap();
    let minimal = minimal_set()
        .into_iter()
        .map(|m| (m, rational_to_f64(&moment_at_nonzero_eq(m, &p).unwrap())))
        .collect();
    for r in &rels {
        let lhs = rational_to_f64(&moment_at_nonzero_eq(r.target, &p).unwrap());
        let rhs = r.evaluate_chained(&minimal, &[]).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{}: {lhs} vs {rhs}", r.target);
    }
}

fn bound_poly(c: &BuiltinCertificate) -> QPoly {
    crate::certify::bound_polynomial(&c.phi, &c.field, &c.cert.aux_function, &c.cert.bound_value, c.cert.sense)
        .unwrap()
}

#[test]
fn z2_certificate_blocks_and_identity() {
    for (b, s) in [((8, 3), (10, 1)), ((1, 1), (1, 1)), ((4, 1), (2, 1))] {
        let p = sym(rat(b.0, b.1), rat(s.0, s.1));
        let c = builtin_certificate(BuiltinName::Z2, &p).unwrap();
        assert!(c.verify().is_valid());
        let v = p.vars();
        let expect = QPoly::parse(&v, &format!("(z - r + 1)^2 + 2/({}) * (x - y)^2", p.beta)).unwrap();
        assert_eq!(bound_poly(&c), expect);
        assert!(eval_at_nonzero_eq(&bound_poly(&c), &p).unwrap().is_zero());
    }
    let c = builtin_certificate(BuiltinName::Z2, &sym(rat(1, 1), rat(1, 1))).unwrap();
    assert_eq!(c.cert.gram_blocks[0], mat(&[&[(1, 1)]]));
    assert_eq!(c.cert.gram_blocks[1], mat(&[&[(2, 1)]]));
    assert!(builtin_certificate(BuiltinName::Z2, &sym(rat(-1, 1), rat(1, 1))).is_err());
}

#[test]
fn z3_certificate_at_standard_parameters() {
    let p = LorenzParams::standard().with_r(RParam::Shifted);
    let c = z3_certificate(&p, &rat(0, 1), &rat(3, 8)).unwrap();
    let qs = mat(&[
        &[(3, 8), (-3, 16), (3, 16)],
        &[(-3, 16), (3, 8), (-1, 2)],
        &[(3, 16), (-1, 2), (1, 1)],
    ]);
    let qa = mat(&[
        &[(9, 8), (-1, 22), (-1, 2)],
        &[(-1, 22), (5, 8), (0, 1)],
        &[(-1, 2), (0, 1), (3, 8)],
    ]);
    assert_eq!(c.cert.gram_blocks, vec![qs.clone(), qa.clone()]);
    assert_eq!(c.verify(), Verification::Valid);
    for m in [&qs, &qa] {
        let rep = check_psd_exact(m);
        assert!(rep.by_char_poly && rep.by_ldl && rep.definite);
        assert_eq!(ldl_psd(m).unwrap().rank(), 3);
    }
    assert!(eval_at_nonzero_eq(&bound_poly(&c), &p).unwrap().is_zero());
    // also with numeric r, through the search
    let c = builtin_certificate(BuiltinName::Z3, &LorenzParams::standard()).unwrap();
    assert!(c.verify().is_valid());
}

#[test]
fn z3_rejected_outside_region() {
    let p = LorenzParams::new(rat(11, 1), rat(10, 1), RParam::Shifted).unwrap();
    match builtin_certificate(BuiltinName::Z3, &p) {
        Err(crate::error::Error::RegionViolation(msg)) => assert!(msg.contains("upper limit"), "{msg}"),
        other => panic!("expected a region violation, got {other:?}"),
    }
}

#[test]
fn xy3_flips_with_discriminant() {
    for (b, ok) in [((1, 3), false), ((8, 3), true), ((11, 1), true), ((12, 1), false)] {
        let p = sym(rat(b.0, b.1), rat(10, 1));
        let c = builtin_certificate(BuiltinName::Xy3, &p);
        assert_eq!(c.is_ok(), ok, "beta = {}/{}", b.0, b.1);
        if let Ok(c) = c {
            assert!(c.verify().is_valid());
            assert_eq!(c.cert.gram_blocks[1], mat(&[&[(2 * b.0, b.1)]]));
        }
    }
    // Just inside 6 +- 4 sqrt 2, the Gram block is still PSD.
    for b in [rat(3432, 10000), rat(11656, 1000)] {
        let p = sym(b, rat(1, 1));
        assert!(builtin_certificate(BuiltinName::Xy3, &p).unwrap().verify().is_valid());
    }
}

#[test]
fn xy3_square_weight_matches_discriminant() {
    // The y^4 weight of the decomposition is -(b^2 - 12 b + 4)/(4 b) up to the
    // overall factor; it is positive exactly inside the interval.
    for b in [rat(1, 3), rat(3432, 10000), rat(8, 3), rat(11656, 1000), rat(12, 1)] {
        let disc = &b * &b - rat(12, 1) * &b + rat(4, 1);
        let p = sym(b.clone(), rat(10, 1));
        let c = xy3_unchecked(&p);
        let rep = check_psd_exact(&c.cert.gram_blocks[0]);
        assert_eq!(rep.psd, disc.is_negative(), "beta = {b}");
    }
}

fn xy3_unchecked(p: &LorenzParams) -> BuiltinCertificate {
    // Build the inside-region certificate at beta = 1 and swap in the blocks for p.
    let base = builtin_certificate(BuiltinName::Xy3, &sym(Rational::one(), p.sigma.clone())).unwrap();
    let b = &p.beta;
    let off = b + rat(2, 1);
    let four = rat(4, 1);
    let qs = RatMatrix::from_rows(vec![
        vec![&four * b, -off.clone(), -(&four * b)],
        vec![-off.clone(), four.clone(), off.clone()],
        vec![-(&four * b), off, &four * b],
    ]);
    let mut c = base;
    c.cert.gram_blocks[0] = qs;
    c
}

#[test]
fn builtin_names_parse() {
    for n in ["z2", "z3", "xy3"] {
        assert_eq!(n.parse::<BuiltinName>().unwrap().to_string(), n);
    }
    assert!("z4".parse::<BuiltinName>().is_err());
}

#[test]
fn gamma_witness_at_standard() {
    let (b, s) = (rat(8, 3), rat(10, 1));
    assert!(z3_inequalities(&b, &s, &rat(0, 1), &rat(3, 8)).iter().all(|v| !v.is_negative()));
    let g = gamma_feasible(&b, &s).unwrap();
    assert!(g.feasible && g.conclusive);
    let (g1, g2) = g.witness.unwrap();
    assert!(z3_inequalities(&b, &s, &g1, &g2).iter().all(|v| !v.is_negative()));
}

#[test]
fn gamma_infeasible_above_limit() {
    assert_eq!(z3_upper_beta(&rat(10, 1)), rat(121, 12));
    let g = gamma_feasible(&rat(11, 1), &rat(10, 1)).unwrap();
    assert!(!g.feasible && g.conclusive);
}

#[test]
fn gamma_two_interval_at_standard() {
    // Feasible gamma_2 values form an interval starting at 2/9; its upper end
    // is the largest root of a quartic, near 2.2399.
    let (b, s) = (8.0 / 3.0, 10.0);
    let ok = |g2: f64| super::gamma::margin_given_gamma2(b, s, g2).1 >= 0.0;
    assert!(ok(2.0 / 9.0 + 1e-6) && !ok(2.0 / 9.0 - 1e-4));
    assert!(ok(0.2370) && ok(1.0) && ok(2.2398) && !ok(2.2400));
}

#[test]
fn region_limits() {
    let (lo, hi) = z3_region_bounds(&rat(10, 1)).unwrap();
    assert_eq!(hi, rat(121, 12));
    assert!(lo > 0.0454 && lo < 0.0457, "{lo}");
    let big = rational_to_f64(&z3_upper_beta(&rat(1_000_000, 1)));
    assert!((big - 12.0).abs() < 1e-4);
    let small = rational_to_f64(&z3_upper_beta(&rat(1, 1_000_000)));
    assert!((small - 3.0).abs() < 1e-4);
}

#[test]
fn gamma_grid_witnesses_verify() {
    for b in [rat(1, 10), rat(1, 1), rat(8, 3), rat(5, 1), rat(10, 1)] {
        for s in [rat(1, 1), rat(10, 1), rat(100, 1)] {
            let g = gamma_feasible(&b, &s).unwrap();
            if let Some((g1, g2)) = &g.witness {
                assert!(g.feasible);
                assert!(z3_inequalities(&b, &s, g1, g2).iter().all(|v| !v.is_negative()));
                let p = LorenzParams::new(b.clone(), s.clone(), RParam::Shifted).unwrap();
                assert!(z3_certificate(&p, g1, g2).unwrap().verify().is_valid());
            } else {
                assert!(!g.feasible);
                if b > z3_upper_beta(&s) {
                    assert!(g.conclusive);
                }
            }
        }
    }
}

#[test]
fn symmetric_moments_unchanged_by_normalize_roundtrip() {
    let p = LorenzParams::standard();
    for s in symmetric_moments() {
        let d = rational_to_f64(&moment_at_nonzero_eq(s, &p).unwrap());
        let v = 0.731 * d;
        assert!((normalize(v, s, &p).unwrap() * d - v).abs() <= 1e-12 * v.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relations_verify_for_random_parameters(bn in 1i64..40, bd in 1i64..9, sn in -30i64..30, sd in 1i64..9) {
        prop_assume!(sn != 0);
        let p = sym(rat(bn, bd), rat(sn, sd));
        let rels = appendix_relations(&p).unwrap();
        for r in &rels {
            prop_assert!(r.residual(&p).unwrap().is_zero());
        }
        for n in 1..=4 {
            proportional_family(n, &p).unwrap();
        }
    }

    #[test]
    fn builtins_verify_symbolically(bn in 1i64..40, bd in 1i64..9, sn in 1i64..30, sd in 1i64..9) {
        let p = sym(rat(bn, bd), rat(sn, sd));
        prop_assert!(builtin_certificate(BuiltinName::Z2, &p).unwrap().verify().is_valid());
        if let Ok(c) = builtin_certificate(BuiltinName::Xy3, &p) {
            prop_assert!(c.verify().is_valid());
        }
        // The identity holds for any gamma, even where the blocks are not PSD.
        let c = z3_certificate(&p.with_r(RParam::Shifted), &rat(1, 7), &rat(-2, 5)).unwrap();
        let residual = &bound_poly(&c) - &c.cert.quadratic_form();
        prop_assert!(residual.is_zero());
    }

    #[test]
    fn normalize_inverts_equilibrium_value(v in -1e6f64..1e6, idx in 0usize..18) {
        let p = LorenzParams::standard();
        let s = symmetric_moments()[idx];
        let d = rational_to_f64(&moment_at_nonzero_eq(s, &p).unwrap());
        prop_assert!((normalize(v, s, &p).unwrap() * d - v).abs() <= 1e-9 * v.abs().max(1.0));
    }
}
