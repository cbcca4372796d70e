use super::*;
use crate::polyalg::{rat, Monomial};
use crate::ratmat::{Echelon, RatMatrix};
use num_traits::Zero;
use proptest::prelude::*;

fn vs(param: &str) -> Arc<VarSet> {
    VarSet::new(&["x", "y", "z"], &[param]).unwrap()
}

fn p(v: &Arc<VarSet>, s: &str) -> QPoly {
    QPoly::parse(v, s).unwrap()
}

/// Lorenz field with the middle coefficient given as text (may involve a parameter).
fn field(v: &Arc<VarSet>, beta: &str, sigma: &str, r: &str) -> Vec<QPoly> {
    vec![
        p(v, &format!("({sigma})*(y - x)")),
        p(v, &format!("({r})*x - y - x*z")),
        p(v, &format!("x*y - ({beta})*z")),
    ]
}

fn set(polys: &[QPoly]) -> Vec<String> {
    let mut s: Vec<String> = polys.iter().map(|q| q.to_string()).collect();
    s.sort();
    s
}

fn z2_problem(beta: &str, sigma: &str) -> SFunction {
    let v = vs("r");
    let f = field(&v, beta, sigma, "r");
    let ansatz = AuxAnsatz::new(vec![p(&v, "z"), p(&v, "x^2"), p(&v, "y^2 + z^2 - 2*r*z")]);
    build_bound_poly(&p(&v, "z^2"), &f, &ansatz, Sense::Upper, &BoundAnsatz::fixed(p(&v, "(r-1)^2"))).unwrap()
}

fn z3_problem(beta: &str, sigma: &str) -> SFunction {
    let v = vs("rho");
    let f = field(&v, beta, sigma, "rho + 1");
    let v1 = p(&v, &format!("x^4/({sigma}) + (y^2+z^2-2*rho*z)^2 + 8*rho^2*(y^2+z^2-2*rho*z) + 6/({sigma})*rho^2*x^2"));
    let v2 = p(&v, &format!("-rho*(x/({sigma}) + y)^2"));
    let ansatz = AuxAnsatz::new(vec![v1, v2]);
    build_bound_poly(&p(&v, "rho*z^3"), &f, &ansatz, Sense::Upper, &BoundAnsatz::fixed(p(&v, "rho^4"))).unwrap()
}

fn z3_reduced(s: &SFunction) -> BasisPair {
    let v = s.vars().clone();
    let pair = gen_basis_pair(s);
    let locus = vec![("z".to_string(), p(&v, "rho")), ("x".to_string(), p(&v, "y"))];
    let merge = NullMerge { block: Block::Symmetric, vector: vec![rat(0, 1), rat(0, 1), rat(1, 1), rat(2, 1)] };
    reduce_basis(&pair, &[locus], &[merge]).unwrap()
}

/// Same linear span, compared by exact rank.
fn same_span(a: &[QPoly], b: &[QPoly]) -> bool {
    let mons: Vec<Monomial> = a.iter().chain(b).flat_map(|q| q.monomials().cloned()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mat = |ps: &[QPoly]| RatMatrix::from_rows(ps.iter().map(|q| mons.iter().map(|m| q.coeff(m)).collect()).collect());
    let both: Vec<QPoly> = a.iter().chain(b).cloned().collect();
    a.len() == b.len() && mat(a).rank() == a.len() && mat(&both).rank() == a.len()
}

#[test]
fn z2_bound_poly_coefficient() {
    let s = z2_problem("8/3", "10");
    let v = s.vars().clone();
    let z2 = Monomial::new(vec![0, 0, 2, 0]);
    assert_eq!(s.poly.constant.coeff(&z2), rat(-1, 1));
    assert_eq!(s.poly.linear[2].coeff(&z2), rat(16, 3));
    assert!(s.poly.linear[0].coeff(&z2).is_zero());
    assert_eq!(s.poly.degree(), 2);
    assert_eq!(s.bound_value(&[rat(0, 1), rat(0, 1), rat(0, 1)]), p(&v, "r^2 - 2*r + 1"));
}

#[test]
fn lower_bound_examples() {
    let v = vs("r");
    let f = field(&v, "8/3", "10", "28");
    let ansatz = AuxAnsatz::new(vec![p(&v, "-1/20*x^2")]);
    let s = build_bound_poly(&p(&v, "x*y"), &f, &ansatz, Sense::Lower, &BoundAnsatz::fixed(QPoly::zero(&v))).unwrap();
    assert_eq!(s.evaluate(&[rat(1, 1)]), p(&v, "x^2"));
    let s0 = build_bound_poly(&p(&v, "x^2"), &f, &AuxAnsatz::empty(), Sense::Lower, &BoundAnsatz::fixed(QPoly::zero(&v))).unwrap();
    assert_eq!(s0.evaluate(&[]), p(&v, "x^2"));
}

#[test]
fn bound_ansatz_must_be_parametric() {
    let v = vs("r");
    let f = field(&v, "8/3", "10", "28");
    let r = build_bound_poly(&p(&v, "z"), &f, &AuxAnsatz::empty(), Sense::Upper, &BoundAnsatz::fixed(p(&v, "x")));
    assert!(matches!(r, Err(Error::Structural(_))));
    let other = VarSet::new(&["x", "y", "z"], &[]).unwrap();
    let r = build_bound_poly(&QPoly::parse(&other, "z").unwrap(), &f, &AuxAnsatz::empty(), Sense::Upper, &BoundAnsatz::free(&v));
    assert!(matches!(r, Err(Error::Structural(_))));
}

#[test]
fn lorenz_v_bases() {
    let v = VarSet::new(&["x", "y", "z"], &[]).unwrap();
    let b2 = gen_lorenz_v_basis(&v, 2, false).unwrap();
    assert_eq!(set(&b2.basis), set(&[p(&v, "z"), p(&v, "x^2"), p(&v, "y^2 + z^2")]));
    let b4 = gen_lorenz_v_basis(&v, 4, false).unwrap();
    let expect: Vec<QPoly> = ["z", "x^2", "x*y", "y^2", "z^2", "x^2*z", "x*y*z", "y^2*z", "z^3", "x^4", "x^2*(y^2+z^2)", "(y^2+z^2)^2"]
        .iter()
        .map(|s| p(&v, s))
        .collect();
    assert_eq!(set(&b4.basis), set(&expect));
    let w = vs("r");
    let b2r = gen_lorenz_v_basis(&w, 2, true).unwrap();
    assert_eq!(set(&b2r.basis), set(&[p(&w, "z"), p(&w, "x^2"), p(&w, "y^2 + z^2 - 2*r*z")]));
    assert!(matches!(gen_lorenz_v_basis(&v, 3, false), Err(Error::Argument(_))));
}

#[test]
fn lorenz_v_bases_cancel_top_degree() {
    let w = vs("r");
    for d in [2, 4, 6] {
        for include in [false, true] {
            let f = field(&w, "8/3", "10", if include { "r" } else { "28" });
            for b in gen_lorenz_v_basis(&w, d, include).unwrap().basis {
                assert!(b.is_symmetric());
                assert!(b.lie_derivative(&f).unwrap().degree() <= d, "{b}");
            }
        }
    }
}

#[test]
fn basis_pair_examples() {
    let v = vs("r");
    let f = field(&v, "8/3", "10", "28");
    let s = build_bound_poly(&p(&v, "x^2"), &f, &AuxAnsatz::empty(), Sense::Lower, &BoundAnsatz::fixed(QPoly::zero(&v))).unwrap();
    let pair = gen_basis_pair(&s);
    assert!(pair.symmetric.is_empty());
    assert_eq!(pair.antisymmetric, vec![p(&v, "x")]);

    let pair = gen_basis_pair(&z2_problem("8/3", "10"));
    assert_eq!(set(&pair.symmetric), set(&[p(&v, "1"), p(&v, "r"), p(&v, "z")]));
    assert_eq!(set(&pair.antisymmetric), set(&[p(&v, "x"), p(&v, "y")]));

    let s3 = z3_problem("8/3", "10");
    let w = s3.vars().clone();
    assert_eq!(s3.poly.degree(), 4);
    let pair = gen_basis_pair(&s3);
    let sym: Vec<QPoly> = ["x^2", "x*y", "y^2", "rho^2", "rho*z", "z^2"].iter().map(|t| p(&w, t)).collect();
    let anti: Vec<QPoly> = ["rho*x", "rho*y", "x*z", "y*z"].iter().map(|t| p(&w, t)).collect();
    assert_eq!(set(&pair.symmetric), set(&sym));
    assert_eq!(set(&pair.antisymmetric), set(&anti));
}

#[test]
fn z3_reduction_matches_known_bases() {
    let s = z3_problem("8/3", "10");
    let w = s.vars().clone();
    let red = z3_reduced(&s);
    let sym: Vec<QPoly> = ["x^2 - x*y", "x^2 - y^2", "(z - rho)^2"].iter().map(|t| p(&w, t)).collect();
    let anti: Vec<QPoly> = ["rho*(x - y)", "x*(z - rho)", "y*(z - rho)"].iter().map(|t| p(&w, t)).collect();
    assert!(same_span(&red.symmetric, &sym), "{:?}", red.symmetric);
    assert!(same_span(&red.antisymmetric, &anti), "{:?}", red.antisymmetric);
    assert!(red.symmetric.contains(&p(&w, "(z - rho)^2")));
    let locus = vec![("z".to_string(), p(&w, "rho")), ("x".to_string(), p(&w, "y"))];
    for q in red.symmetric.iter().chain(&red.antisymmetric) {
        assert!(vanishes_on(q, &locus).unwrap());
    }
}

#[test]
fn z2_reduction_and_unique_solution() {
    for (beta, sigma) in [("8/3", "10"), ("1", "1"), ("4", "2")] {
        let s = z2_problem(beta, sigma);
        let v = s.vars().clone();
        let locus = vec![("z".to_string(), p(&v, "r - 1")), ("x".to_string(), p(&v, "y"))];
        let red = reduce_basis(&gen_basis_pair(&s), &[locus], &[]).unwrap();
        assert_eq!(red.symmetric, vec![p(&v, "z - r + 1")]);
        assert_eq!(red.antisymmetric, vec![p(&v, "x - y")]);
        let g = assemble_gram_constraints(&s, &red).unwrap();
        let vals = g.determined_values();
        let b = crate::polyalg::parse_rational(beta).unwrap();
        let sg = crate::polyalg::parse_rational(sigma).unwrap();
        let two = rat(2, 1);
        assert_eq!(vals[0], Some(rat(1, 1)));
        assert_eq!(vals[1], Some(&two / &b));
        assert_eq!(vals[2], Some(&two / &b));
        assert_eq!(vals[3], Some((&b * &sg).recip()));
        assert_eq!(vals[4], Some(b.recip()));
    }
}

#[test]
fn reduce_basis_edge_cases() {
    let s = z2_problem("8/3", "10");
    let pair = gen_basis_pair(&s);
    assert_eq!(reduce_basis(&pair, &[], &[]).unwrap(), pair);
    let bad = vec![("w".to_string(), p(s.vars(), "1"))];
    assert!(matches!(reduce_basis(&pair, &[bad], &[]), Err(Error::Structural(_))));
}

#[test]
fn z3_constraint_system() {
    let s = z3_problem("8/3", "10");
    let g = assemble_gram_constraints(&s, &z3_reduced(&s)).unwrap();
    assert_eq!(g.layout.n_entries() + g.n_unknowns(), 14);
    assert_eq!(g.rank(), 12);
    let vals = g.determined_values();
    assert_eq!(vals[12], Some(rat(3, 32)));
    assert_eq!(vals[13], Some(rat(5, 11)));
    assert_eq!(g.objective, Objective::Feasibility);
}

#[test]
fn single_entry_and_infeasible_toys() {
    let v = vs("r");
    let f = field(&v, "8/3", "10", "28");
    let s = build_bound_poly(&p(&v, "x^2"), &f, &AuxAnsatz::empty(), Sense::Lower, &BoundAnsatz::fixed(QPoly::zero(&v))).unwrap();
    let pair = BasisPair { symmetric: vec![], antisymmetric: vec![p(&v, "x")] };
    let g = assemble_gram_constraints(&s, &pair).unwrap();
    assert_eq!(g.rows.len(), 1);
    assert_eq!(g.determined_values()[0], Some(rat(1, 1)));

    let s = build_bound_poly(&p(&v, "-1"), &f, &AuxAnsatz::empty(), Sense::Lower, &BoundAnsatz::fixed(QPoly::zero(&v))).unwrap();
    let empty = BasisPair { symmetric: vec![], antisymmetric: vec![] };
    match assemble_gram_constraints(&s, &empty) {
        Err(Error::InfeasibleStructure { monomial }) => assert_eq!(monomial, "1"),
        other => panic!("unexpected {other:?}"),
    }
    let bad = BasisPair { symmetric: vec![p(&v, "x")], antisymmetric: vec![] };
    assert!(assemble_gram_constraints(&s, &bad).is_err());
}

#[test]
fn layout_indexing_round_trips() {
    let l = GramLayout { dims: vec![4, 0, 3] };
    assert_eq!(l.n_entries(), 16);
    for k in 0..l.n_entries() {
        let (b, i, j) = l.entry(k);
        assert!(i <= j);
        assert_eq!(l.index(b, i, j), k);
        assert_eq!(l.index(b, j, i), k);
    }
}

#[test]
fn sdp_conversion_and_rescaling_agree() {
    let v = VarSet::new(&["x", "y", "z"], &[]).unwrap();
    let f = field(&v, "8/3", "10", "28");
    let ansatz = gen_lorenz_v_basis(&v, 4, false).unwrap();
    let s = build_bound_poly(&p(&v, "x^2*z"), &f, &ansatz, Sense::Upper, &BoundAnsatz::free(&v)).unwrap();
    let g = assemble_gram_constraints(&s, &gen_basis_pair(&s)).unwrap();
    let inst = g.to_sdp();
    inst.validate().unwrap();
    assert_eq!(inst.constraints.len(), g.rank());
    assert_eq!(inst.objective.sense, ObjectiveSense::Minimize);

    let (same, map) = rescale_problem(&inst, 1.0).unwrap();
    assert_eq!(same, inst);
    assert_eq!(map.unscale_objective(3.5), 3.5);

    let (scaled, fmap) = rescale_problem(&inst, 20.0).unwrap();
    let (g20, emap) = g.rescaled(&rat(20, 1)).unwrap();
    let exact = g20.to_sdp();
    assert_eq!(exact.constraints.len(), scaled.constraints.len());
    for (a, b) in exact.constraints.iter().zip(&scaled.constraints) {
        assert_eq!(a.label, b.label);
        let tol = 1e-12 * (1.0 + a.rhs.abs());
        assert!((a.rhs - b.rhs).abs() <= tol);
        for (x, y) in a.gram.iter().zip(&b.gram) {
            assert_eq!((x.0, x.1, x.2), (y.0, y.1, y.2));
            assert!((x.3 - y.3).abs() <= 1e-12 * (1.0 + x.3.abs()));
        }
        for (x, y) in a.free.iter().zip(&b.free) {
            assert!((x.1 - y.1).abs() <= 1e-12 * (1.0 + x.1.abs()));
        }
    }
    assert!((fmap.unscale_objective(1.0) - 8000.0).abs() < 1e-9);
    assert_eq!(emap.kappa, rat(1, 8000));
    assert!(rescale_problem(&inst, 0.0).is_err());
    let back = SdpInstance::from_json(&inst.to_json().unwrap()).unwrap();
    assert_eq!(back, inst);
}

#[test]
fn rescaled_exact_solution_maps_back() {
    let s = z2_problem("8/3", "10");
    let v = s.vars().clone();
    let locus = vec![("z".to_string(), p(&v, "r - 1")), ("x".to_string(), p(&v, "y"))];
    let g = assemble_gram_constraints(&s, &reduce_basis(&gen_basis_pair(&s), &[locus], &[]).unwrap()).unwrap();
    let (g2, map) = g.rescaled(&rat(20, 1)).unwrap();
    let vals: Vec<Rational> = g2.determined_values().into_iter().map(|x| x.unwrap()).collect();
    let e = g2.layout.n_entries();
    let blocks = map.unscale_blocks(&g2.layout.unflatten(&vals[..e]));
    let unknowns = map.unscale_unknowns(&vals[e..]);
    assert!(g.residual(&blocks, &unknowns).is_zero());
}

/// Random point of the affine constraint set: free columns chosen, pivots solved.
fn random_feasible(g: &GramProblem, picks: &[i64]) -> Vec<Rational> {
    let mut ech = Echelon::new();
    for r in g.augmented_rows() {
        ech.insert(r);
    }
    let n = g.n_columns();
    let rows = ech.into_rref();
    let pivots: Vec<usize> = rows.iter().map(|r| r[0].0).collect();
    let mut vals: Vec<Rational> = (0..n).map(|k| rat(picks[k % picks.len()], 7)).collect();
    for r in &rows {
        let mut v = r.iter().find(|(c, _)| *c == n).map_or_else(Rational::zero, |e| e.1.clone());
        for (c, a) in &r[1..] {
            if *c < n && !pivots.contains(c) {
                v -= a * &vals[*c];
            }
        }
        vals[r[0].0] = v;
    }
    vals
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction_is_exact(picks in prop::collection::vec(-20i64..20, 1..6)) {
        for s in [z2_problem("8/3", "10"), z3_problem("8/3", "10")] {
            let g = assemble_gram_constraints(&s, &gen_basis_pair(&s)).unwrap();
            let vals = random_feasible(&g, &picks);
            let e = g.layout.n_entries();
            let blocks = g.layout.unflatten(&vals[..e]);
            prop_assert!(g.residual(&blocks, &vals[e..]).is_zero());
        }
    }

    #[test]
    fn quadratic_forms_are_symmetric(picks in prop::collection::vec(-9i64..9, 1..8)) {
        let s = z3_problem("8/3", "10");
        let g = assemble_gram_constraints(&s, &gen_basis_pair(&s)).unwrap();
        let vals: Vec<Rational> = (0..g.layout.n_entries()).map(|k| rat(picks[k % picks.len()], 3)).collect();
        let q = g.quadratic_form(&g.layout.unflatten(&vals));
        prop_assert!(q.is_symmetric());
    }
}
