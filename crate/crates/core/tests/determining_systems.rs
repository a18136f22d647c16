use fpsym::catalog::{load_point_generators, load_potential_generators, GeneratorRecord, Target};
use fpsym::determining::{
    check_membership, derive_determining, parse_constraints, unsatisfied_constraints, verify_generator, Ansatz,
    DeterminingSystem, DEFAULT_CLOSURE_ORDER, REFERENCE_POINT_SYSTEM,
};
use fpsym::expr::{parse, Expr, SymbolTable};
use fpsym::fpe::{FormalRule, FpeParams};
use fpsym::jet::VectorField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(target: Target) -> (DeterminingSystem, Ansatz) {
    let a = match target {
        Target::Fpe => Ansatz::point(),
        Target::Auxiliary => Ansatz::potential(),
    };
    let d = derive_determining(&target.system(&FpeParams::symbolic()), &a, 2).unwrap();
    (d, a)
}

fn rules(g: &GeneratorRecord) -> Vec<FormalRule> {
    g.rule.iter().cloned().collect()
}

fn check_sound(gens: &[GeneratorRecord], target: Target) {
    let (d, a) = system(target);
    let sys = target.system(&FpeParams::symbolic());
    for g in gens {
        let left = unsatisfied_constraints(&d, &a, &g.field, &rules(g)).unwrap();
        assert!(left.is_empty(), "{} violates {left:?}", g.id);
        let (report, _) = verify_generator(&g.field, &sys, 2, &rules(g)).unwrap();
        assert!(report.pass, "{}: {:?}", g.id, report.residuals);
    }
}

#[test]
fn point_catalog_satisfies_derived_system() {
    check_sound(&load_point_generators(&FpeParams::symbolic()).unwrap(), Target::Fpe);
}

#[test]
fn potential_catalog_satisfies_derived_system() {
    check_sound(&load_potential_generators(&FpeParams::symbolic()).unwrap(), Target::Auxiliary);
}

fn random_poly(rng: &mut ChaCha8Rng, vars: &[&str]) -> String {
    let mut terms = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let c: i64 = rng.random_range(1..=5) * if rng.random_bool(0.5) { 1 } else { -1 };
        let mut mono = Vec::new();
        for v in vars {
            if rng.random_bool(0.5) {
                mono.push(format!("{v}^{}", rng.random_range(1..=2)));
            }
        }
        terms.push(if mono.is_empty() { c.to_string() } else { format!("{c}*{}", mono.join("*")) });
    }
    terms.join(" + ")
}

#[test]
fn random_fields_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let table = SymbolTable::fpe();
    let sys = Target::Fpe.system(&FpeParams::symbolic());
    let (d, a) = system(Target::Fpe);
    for _ in 0..5 {
        let mut v = VectorField::zero(&sys.ctx);
        // a nonlinear η makes the field a non-symmetry regardless of ξ, τ
        for (coord, extra) in [("x", ""), ("t", ""), ("u", " + u^2")] {
            let s = format!("{}{extra}", random_poly(&mut rng, &["x", "t", "u"]));
            v = v.with(coord, parse(&s, &table).unwrap());
        }
        assert!(!unsatisfied_constraints(&d, &a, &v, &[]).unwrap().is_empty(), "{v}");
        let (report, _) = verify_generator(&v, &sys, 2, &[]).unwrap();
        assert!(!report.pass, "{v}");
    }
}

#[test]
fn derived_systems_contain_basic_constraints() {
    let (d, a) = system(Target::Fpe);
    for s in ["eta_uu(x,t,u)", "2*xi_x(x,t,u) - tau_t(x,t,u)"] {
        let e = parse_constraints(&[s], &a).unwrap().remove(0);
        assert!(d.contains(&e), "{s} missing");
    }
    let (d, a) = system(Target::Auxiliary);
    for s in ["phi_u(x,t,u,v)", "phi_vv(x,t,u,v)"] {
        let e = parse_constraints(&[s], &a).unwrap().remove(0);
        assert!(d.contains(&e), "{s} missing");
    }
}

#[test]
fn point_system_matches_reference_both_ways() {
    let (d, a) = system(Target::Fpe);
    let claimed = parse_constraints(REFERENCE_POINT_SYSTEM, &a).unwrap();
    let r = check_membership(&claimed, &d.constraints, &a.ctx, DEFAULT_CLOSURE_ORDER);
    assert!(r.equivalent());
}

#[test]
fn residual_is_the_sum_of_collected_coefficients() {
    for t in [Target::Fpe, Target::Auxiliary] {
        let (d, _) = system(t);
        for (i, r) in d.residuals.iter().enumerate() {
            assert_eq!(&d.reconstruct(i), r);
        }
        assert!(d.constraints.iter().all(|c| !c.is_zero()));
        assert!(d.constraints.iter().all(|c: &Expr| c.jets().iter().all(|j| j.order() == 0)));
    }
}
