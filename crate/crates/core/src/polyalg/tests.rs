use super::*;
use proptest::prelude::*;

fn xyz() -> Arc<VarSet> {
    VarSet::new(&["x", "y", "z"], &["rho"]).unwrap()
}

fn p(vars: &Arc<VarSet>, s: &str) -> QPoly {
    QPoly::parse(vars, s).unwrap()
}

fn lorenz(vars: &Arc<VarSet>, beta: &str, sigma: &str, r: &str) -> Vec<QPoly> {
    vec![
        p(vars, &format!("-{sigma}*x + {sigma}*y")),
        p(vars, &format!("({r})*x - y - x*z")),
        p(vars, &format!("x*y - ({beta})*z")),
    ]
}

#[test]
fn add_and_mul_examples() {
    let v = xyz();
    assert!((p(&v, "x^2") + p(&v, "-x^2")).is_zero());
    assert_eq!(p(&v, "x*y") + p(&v, "x*y"), p(&v, "2*x*y"));
    assert_eq!(p(&v, "1/3*z") + p(&v, "1/6*z"), p(&v, "1/2*z"));
    assert_eq!(p(&v, "x - y") * p(&v, "x - y"), p(&v, "x^2 - 2*x*y + y^2"));
    assert!((QPoly::zero(&v) * p(&v, "x + 3")).is_zero());
    assert_eq!(p(&v, "z - rho") * p(&v, "z + rho"), p(&v, "z^2 - rho^2"));
}

#[test]
fn mismatched_varsets_are_structural_errors() {
    let a = xyz();
    let b = VarSet::new(&["x", "y"], &[]).unwrap();
    let r = p(&a, "x").checked_add(&QPoly::parse(&b, "x").unwrap());
    assert!(matches!(r, Err(Error::Structural(_))));
}

#[test]
fn varset_rejects_duplicates() {
    assert!(VarSet::new(&["x", "x"], &[]).is_err());
    assert!(VarSet::new(&["x"], &["x"]).is_err());
}

#[test]
fn derivatives() {
    let v = xyz();
    assert_eq!(p(&v, "x^2").differentiate("x").unwrap(), p(&v, "2*x"));
    assert_eq!(
        p(&v, "y^2 + z^2 - 2*rho*z").differentiate("z").unwrap(),
        p(&v, "2*z - 2*rho")
    );
    assert!(p(&v, "x^4").differentiate("y").unwrap().is_zero());
    assert!(p(&v, "x").differentiate("rho").is_err());
    assert!(p(&v, "x").differentiate("w").is_err());
}

#[test]
fn lie_derivative_examples() {
    let v = xyz();
    let f = lorenz(&v, "8/3", "10", "28");
    let lv = p(&v, "-1/20*x^2").lie_derivative(&f).unwrap();
    assert_eq!(lv, p(&v, "x^2 - x*y"));
    assert_eq!(p(&v, "x*y") + lv, p(&v, "x^2"));
    let lz = p(&v, "-z").lie_derivative(&f).unwrap();
    assert_eq!(p(&v, "x*y") + lz, p(&v, "8/3*z"));
    assert!(p(&v, "7").lie_derivative(&f).unwrap().is_zero());
    assert!(p(&v, "x").lie_derivative(&f[..2]).is_err());
}

#[test]
fn symmetry_examples() {
    let v = xyz();
    assert_eq!(p(&v, "x*y").apply_symmetry(), p(&v, "x*y"));
    assert_eq!(p(&v, "x^2*z").apply_symmetry(), p(&v, "x^2*z"));
    assert_eq!(p(&v, "x*z").apply_symmetry(), p(&v, "-x*z"));
    assert!(p(&v, "x*z").is_antisymmetric());
    assert!(p(&v, "x*y + z").is_symmetric());
}

#[test]
fn eval_examples() {
    let v = xyz();
    assert_eq!(p(&v, "z^3").eval(&[rat(0, 1), rat(0, 1), rat(27, 1), rat(0, 1)]), rat(19683, 1));
    let w = VarSet::new(&["x", "y", "z"], &["r"]).unwrap();
    let s = QPoly::parse(&w, "(z - (r - 1))^2 + 2/(8/3)*(x - y)^2").unwrap().to_float();
    let e = 72f64.sqrt();
    assert!(s.eval(&[e, e, 27.0, 28.0]).abs() < 1e-12);
    let d = p(&v, "x^2 - x*y");
    assert_eq!(d.eval(&[rat(5, 3), rat(5, 3), rat(2, 1), rat(9, 1)]), rat(0, 1));
    let mut point = HashMap::new();
    point.insert("x".to_string(), rat(1, 1));
    assert!(p(&v, "x*y").eval_named(&point).is_err());
    assert_eq!(p(&v, "3*x").eval_named(&point).unwrap(), rat(3, 1));
}

#[test]
fn text_round_trip() {
    let w = VarSet::new(&["x", "y", "z"], &["r"]).unwrap();
    let q = QPoly::parse(&w, "3/8*x^2*y - 2*r*z^2").unwrap();
    assert_eq!(q.to_string(), "3/8*x^2*y - 2*z^2*r");
    assert_eq!(QPoly::parse(&w, &q.to_string()).unwrap(), q);
    let f = FPoly::parse(&w, "1e-20*x - 0.1*y + 3").unwrap();
    assert_eq!(FPoly::parse(&w, &f.to_string()).unwrap(), f);
    assert_eq!(QPoly::zero(&w).to_string(), "0");
    assert!(QPoly::parse(&w, "x +").is_err());
    assert!(QPoly::parse(&w, "x/y").is_err());
    assert!(QPoly::parse(&w, "q").is_err());
}

#[test]
fn substitution_and_rebase() {
    let v = xyz();
    let q = p(&v, "x^2 - x*y + z*rho");
    let s = q.substitute_named(&[("x", p(&v, "y")), ("z", p(&v, "rho"))]).unwrap();
    assert_eq!(s, p(&v, "rho^2"));
    let small = VarSet::new(&["x", "y", "z"], &[]).unwrap();
    let r = QPoly::parse(&small, "x*y - z").unwrap().rebase(&v).unwrap();
    assert_eq!(r, p(&v, "x*y - z"));
    assert!(p(&v, "rho").rebase(&small).is_err());
}

#[test]
fn grlex_order() {
    let a = Monomial::new(vec![2, 0, 0]);
    let b = Monomial::new(vec![0, 1, 1]);
    let c = Monomial::new(vec![0, 0, 1]);
    assert!(c < a && c < b);
    assert!(b < a);
    assert!(Monomial::new(vec![0, 2, 0]) < Monomial::new(vec![1, 1, 0]));
}

fn small_poly() -> impl Strategy<Value = Vec<(Vec<u32>, i64, i64)>> {
    prop::collection::vec(
        (prop::collection::vec(0u32..3, 4), -5i64..6, 1i64..4),
        0..5,
    )
}

fn build(vars: &Arc<VarSet>, t: &[(Vec<u32>, i64, i64)]) -> QPoly {
    QPoly::from_terms(vars, t.iter().map(|(e, n, d)| (Monomial::new(e.clone()), rat(*n, *d))))
}

proptest! {
    #[test]
    fn ring_axioms(a in small_poly(), b in small_poly(), c in small_poly()) {
        let v = xyz();
        let (a, b, c) = (build(&v, &a), build(&v, &b), build(&v, &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        if !a.is_zero() && !b.is_zero() {
            prop_assert_eq!((&a * &b).degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn lie_derivative_is_linear(a in small_poly(), b in small_poly(), s in -4i64..5, t in -4i64..5) {
        let v = xyz();
        let f = lorenz(&v, "8/3", "10", "rho + 1");
        let (a, b) = (build(&v, &a), build(&v, &b));
        let (s, t) = (rat(s, 3), rat(t, 2));
        let lhs = (&a.scale(&s) + &b.scale(&t)).lie_derivative(&f).unwrap();
        let rhs = &a.lie_derivative(&f).unwrap().scale(&s) + &b.lie_derivative(&f).unwrap().scale(&t);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn symmetry_is_an_involution(a in small_poly()) {
        let v = xyz();
        let a = build(&v, &a);
        prop_assert_eq!(a.apply_symmetry().apply_symmetry(), a.clone());
        for (m, c) in a.terms() {
            let image = a.apply_symmetry().coeff(m);
            if (m.exps()[0] + m.exps()[1]) % 2 == 0 {
                prop_assert_eq!(image, c.clone());
            } else {
                prop_assert_eq!(image, -c.clone());
            }
        }
    }

    #[test]
    fn text_round_trips(a in small_poly()) {
        let v = xyz();
        let a = build(&v, &a);
        prop_assert_eq!(QPoly::parse(&v, &a.to_string()).unwrap(), a);
    }

    #[test]
    fn lorenz_top_forms_keep_degree(pw in 0u32..3, q in 0u32..3, low in small_poly()) {
        prop_assume!(pw + q > 0);
        let v = xyz();
        let f = lorenz(&v, "8/3", "10", "28");
        let top = &p(&v, "x").pow(2 * pw) * &p(&v, "y^2 + z^2").pow(q);
        let lower: QPoly = QPoly::from_terms(&v, build(&v, &low)
            .terms()
            .filter(|(m, _)| m.state_degree(3) < 2 * (pw + q) && m.exps()[3] == 0)
            .map(|(m, c)| (m.clone(), c.clone())));
        let vfun = &top + &lower;
        let d = vfun.lie_derivative(&f).unwrap();
        prop_assert!(d.degree() <= vfun.degree());
    }
}
