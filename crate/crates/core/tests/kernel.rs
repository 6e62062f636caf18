use proptest::prelude::*;

use proofgrove::kernel::{
    check_closed_proof, check_new_assignments, Binder, CheckStats, FVarId, KernelError, LocalContext, MetavarContext,
    MvarKind, Tc, Term,
};
use proofgrove::prelude::prelude;

fn eq(a: Term, b: Term) -> Term {
    Term::apps(Term::cnst("Eq"), [a, b])
}

fn op(name: &str, a: u64, b: u64) -> Term {
    Term::apps(Term::cnst(name), [Term::numeral(a), Term::numeral(b)])
}

fn def_eq(a: &Term, b: &Term) -> bool {
    let env = prelude();
    let mctx = MetavarContext::new();
    let lctx = LocalContext::new();
    Tc::new(&env, &mctx, &lctx).def_eq(a, b)
}

#[test]
fn refl_proof_checks_and_sorry_is_rejected() {
    let env = prelude();
    let ty = eq(op("Nat.add", 2, 2), Term::numeral(4));
    let proof = Term::app(Term::cnst("Eq.refl"), Term::numeral(4));
    let mut stats = CheckStats::default();
    check_closed_proof(&env, &proof, &ty, &mut stats).unwrap();
    assert_eq!(stats.checks, 1);
    let r = check_closed_proof(&env, &Term::sorry(ty.clone()), &ty, &mut stats);
    assert_eq!(r, Err(KernelError::ContainsSorry));
    let wrong = eq(Term::numeral(2), Term::numeral(3));
    assert!(matches!(
        check_closed_proof(&env, &proof, &wrong, &mut stats),
        Err(KernelError::TypeMismatch { .. })
    ));
}

#[test]
fn unassigned_mvar_is_a_hole() {
    let env = prelude();
    let mut mctx = MetavarContext::new();
    let ty = eq(Term::numeral(1), Term::numeral(1));
    let m = mctx.new_mvar(LocalContext::new(), ty.clone(), MvarKind::Synthetic, None);
    let r = check_closed_proof(&env, &Term::Mvar(m), &ty, &mut CheckStats::default());
    assert!(matches!(r, Err(KernelError::ContainsHole(_))), "{r:?}");
}

#[test]
fn incremental_check_counts_each_assignment_once() {
    let env = prelude();
    let mut mctx = MetavarContext::new();
    let ty = eq(Term::numeral(3), Term::numeral(3));
    let a = mctx.new_mvar(LocalContext::new(), ty.clone(), MvarKind::Synthetic, None);
    let b = mctx.new_mvar(LocalContext::new(), Term::nat(), MvarKind::Natural, None);
    mctx.assign(b, Term::numeral(3));
    mctx.assign(a, Term::app(Term::cnst("Eq.refl"), Term::Mvar(b)));
    let mut stats = CheckStats::default();
    check_new_assignments(&env, &mctx, &[b, a], &mut stats).unwrap();
    assert_eq!(stats.checks, 2);
    assert_eq!(stats.checked_size, Term::numeral(3).size() + 3);
}

#[test]
fn occurs_check_blocks_cyclic_assignment() {
    let env = prelude();
    let mut mctx = MetavarContext::new();
    let m = mctx.new_mvar(LocalContext::new(), Term::nat(), MvarKind::Natural, None);
    let lctx = LocalContext::new();
    let mut tc = Tc::new_mut(&env, &mut mctx, &lctx);
    assert!(!tc.unify(&Term::Mvar(m), &Term::app(Term::cnst("Nat.succ"), Term::Mvar(m))));
    assert!(tc.unify(&Term::Mvar(m), &Term::numeral(7)));
    assert_eq!(mctx.instantiate(&Term::Mvar(m)), Term::numeral(7));
}

#[test]
fn truncated_subtraction() {
    assert!(def_eq(&op("Nat.sub", 2, 5), &Term::numeral(0)));
    assert!(def_eq(&op("Nat.sub", 5, 2), &Term::numeral(3)));
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u32..3).prop_map(|i| Term::FVar(FVarId(i))),
        Just(Term::nat()),
        (0u64..4).prop_map(Term::numeral),
        Just(Term::cnst("Nat.succ")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            (inner.clone(), inner).prop_map(|(t, b)| Term::lam(Binder::new("x", t), b)),
        ]
    })
}

proptest! {
    #[test]
    fn abstract_then_instantiate_is_identity(t in term()) {
        let fvars = [FVarId(0), FVarId(1), FVarId(2)];
        let closed = t.abstract_fvars(&fvars);
        prop_assert!(!closed.has_any_fvar(&fvars));
        let back: Vec<Term> = fvars.iter().map(|f| Term::FVar(*f)).collect();
        prop_assert_eq!(closed.instantiate(&back), t);
    }

    #[test]
    fn arithmetic_agrees_with_u64(a in 0u64..12, b in 0u64..12) {
        prop_assert!(def_eq(&op("Nat.add", a, b), &Term::numeral(a + b)));
        prop_assert!(def_eq(&op("Nat.mul", a, b), &Term::numeral(a * b)));
        prop_assert!(def_eq(&op("Nat.sub", a, b), &Term::numeral(a.saturating_sub(b))));
        prop_assert_eq!(def_eq(&Term::numeral(a), &Term::numeral(b)), a == b);
    }
}
