#[path = "support/refs.rs"]
mod refs;

use pact_core::fixtures::logic_env;
use pact_core::kernel::expr::{alpha_eq, loose_bvar_range};
use pact_core::kernel::{
    get_at, parse_explicit, parse_expr, parse_with_locals, print_expr, subterms, Expr, ParseOptions, PrintMode,
    SubtermContext,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fixture_types_round_trip_through_pretty_printing() {
    let env = logic_env();
    for d in env.decls() {
        let s = print_expr(&d.ty, &env, PrintMode::Pretty, None);
        let back = parse_expr(&s, &env).unwrap_or_else(|e| panic!("{}: {s}: {e}", d.name));
        assert!(alpha_eq(&back, &d.ty), "{}: {s}", d.name);
    }
}

#[test]
fn fixture_values_round_trip_through_verbose_printing() {
    let env = logic_env();
    for d in env.theorems() {
        let v = d.value.as_ref().unwrap();
        let s = print_expr(v, &env, PrintMode::Verbose, None);
        let back = parse_explicit(&s, &env, &SubtermContext::default()).unwrap();
        assert!(alpha_eq(&back, v), "{}: {s}", d.name);
        // Hidden eliminator motives are higher-order; first-order
        // unification cannot recover them from pretty text.
        let mut consts = Vec::new();
        v.constants_preorder(&mut consts);
        if consts.iter().any(|c| c.ends_with(".dcases_on")) {
            continue;
        }
        let pretty = print_expr(v, &env, PrintMode::Pretty, None);
        let elaborated = parse_with_locals(&pretty, &env, &[], &ParseOptions::typed(d.ty.clone()))
            .unwrap_or_else(|e| panic!("{}: {pretty}: {e}", d.name));
        assert!(alpha_eq(&elaborated, v), "{}: {pretty}", d.name);
    }
}

#[test]
fn subterms_are_in_scope_and_addressable() {
    let env = logic_env();
    for d in env.theorems() {
        let v = d.value.as_ref().unwrap();
        let subs = subterms(v);
        assert_eq!(subs.len(), v.size());
        for (s, ctx) in subs {
            assert!(loose_bvar_range(&s) as usize <= ctx.bs.len());
            assert_eq!(get_at(v, &ctx.path), Some(&s));
        }
    }
}

#[test]
fn depth_limit_is_exact_at_term_depth() {
    let env = logic_env();
    for d in env.theorems() {
        let v = d.value.as_ref().unwrap();
        let full = print_expr(v, &env, PrintMode::Verbose, None);
        assert_eq!(print_expr(v, &env, PrintMode::Verbose, Some(v.depth())), full);
        let cut = print_expr(v, &env, PrintMode::Verbose, Some(0));
        assert!(cut.contains('…'), "{}", d.name);
    }
}

fn with_props() -> (pact_core::kernel::Environment, Vec<Expr>) {
    let env = logic_env();
    let hyps = ["P", "Q", "R", "S"].iter().map(|n| Expr::fvar(n, Expr::prop())).collect();
    (env, hyps)
}

proptest! {
    /// Canonical formula text prints back identically after elaboration.
    #[test]
    fn formula_text_is_a_print_fixpoint(seed in any::<u64>(), depth in 0usize..6) {
        let f = refs::random_formula(&mut ChaCha8Rng::seed_from_u64(seed), 4, depth);
        let text = f.render(&["P", "Q", "R", "S"]);
        let (env, hyps) = with_props();
        let e = parse_with_locals(&text, &env, &hyps, &ParseOptions::default()).unwrap();
        prop_assert_eq!(print_expr(&e, &env, PrintMode::Pretty, None), text);
    }

    /// Printing with a depth budget never grows and marks every cut.
    #[test]
    fn depth_budget_monotone(seed in any::<u64>(), depth in 1usize..6, budget in 0usize..8) {
        let f = refs::random_formula(&mut ChaCha8Rng::seed_from_u64(seed), 4, depth);
        let (env, hyps) = with_props();
        let e = parse_with_locals(&f.render(&["P", "Q", "R", "S"]), &env, &hyps, &ParseOptions::default()).unwrap();
        let cut = print_expr(&e, &env, PrintMode::Pretty, Some(budget));
        let full = print_expr(&e, &env, PrintMode::Pretty, None);
        if budget >= e.depth() {
            prop_assert_eq!(cut, full);
        } else {
            prop_assert!(cut.contains('…'));
        }
    }
}
