use proofgrove::elab::Elab;
use proofgrove::kernel::{pretty, LocalContext, MetavarContext, Tc, Term};
use proofgrove::prelude::prelude;
use proofgrove::syntax::parse_term;

#[test]
fn prelude_loads() {
    let env = prelude();
    assert!(env.contains("Nat.le_trans"));
    assert!(env.contains("Nat.mul"));
}

fn elab_str(text: &str) -> (Term, String) {
    let env = prelude();
    let mut mctx = MetavarContext::new();
    let mut el = Elab::new(&env, &mut mctx, LocalContext::new(), &[]);
    let t = el.elab_type(&parse_term(text).unwrap()).unwrap();
    let t = mctx.instantiate(&t);
    let s = pretty(&t, &LocalContext::new());
    (t, s)
}

#[test]
fn statements_elaborate_and_print() {
    let (_, s) = elab_str("∀ (n m : Nat), n * m = 0 ↔ n = 0 ∨ m = 0");
    assert_eq!(s, "∀ (n m : Nat), n * m = 0 ↔ n = 0 ∨ m = 0");
    let (_, s) = elab_str("2 + 3 = 5");
    assert_eq!(s, "2 + 3 = 5");
}

#[test]
fn arithmetic_is_definitional() {
    let env = prelude();
    let mctx = MetavarContext::new();
    let lctx = LocalContext::new();
    let mut tc = Tc::new(&env, &mctx, &lctx);
    let sum = Term::apps(Term::cnst("Nat.add"), [Term::numeral(2), Term::numeral(3)]);
    assert_eq!(tc.whnf(&sum), Term::numeral(5));
    let prod = Term::apps(Term::cnst("Nat.mul"), [Term::numeral(2), Term::numeral(3)]);
    assert!(tc.def_eq(&prod, &Term::numeral(6)));
    let sub = Term::apps(Term::cnst("Nat.sub"), [Term::numeral(2), Term::numeral(3)]);
    assert!(tc.def_eq(&sub, &Term::numeral(0)));
    let lt = Term::apps(Term::cnst("Nat.lt"), [Term::numeral(1), Term::numeral(2)]);
    let le = Term::apps(Term::cnst("Nat.le"), [Term::numeral(2), Term::numeral(2)]);
    assert_eq!(tc.whnf(&lt), le);
}
