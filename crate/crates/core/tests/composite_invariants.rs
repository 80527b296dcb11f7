//! Property suites for the abstract-domain laws and the composite
//! analysis invariants: explicit-state subsumption is a partial order
//! with a least-upper-bound join, symbolic join is an upper bound, and
//! every reached composite state respects the variable partition and
//! the one-state-per-explicit-part merge contract.

mod common;

use std::collections::HashSet;
use std::time::Duration;

use domcheck_core::bdd::{Bdd, TRUE};
use domcheck_core::cfa::{Expr, Op, VarId};
use domcheck_core::engine::{verify, Config, DomainAssignment, Verdict, WaitlistOrder};
use domcheck_core::explicit::ExplicitState;
use domcheck_core::frontend::compile;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng_of(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Keeps a random subset of a state's bindings, giving a state that
/// covers the original by construction.
fn weaken(rng: &mut impl Rng, s: &ExplicitState) -> ExplicitState {
    let mut out = ExplicitState::top();
    for (&v, &c) in s.bindings() {
        if rng.random_bool(0.7) {
            out = out
                .transfer(&Op::Assign { var: v, expr: Expr::Const(c) })
                .expect("constant assignment is always feasible");
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    /// Reflexivity, antisymmetry and transitivity of explicit
    /// subsumption, on chains built by dropping bindings.
    #[test]
    fn explicit_subsumption_is_a_partial_order(seed: u64) {
        let mut rng = rng_of(seed);
        let a = common::gen_explicit(&mut rng, 6, 4);
        let b = weaken(&mut rng, &a);
        let c = weaken(&mut rng, &b);
        prop_assert!(a.covers(&a));
        prop_assert!(b.covers(&a));
        prop_assert!(c.covers(&b));
        prop_assert!(c.covers(&a), "transitivity");
        if a.covers(&b) {
            prop_assert_eq!(&a, &b, "antisymmetry");
        }
        // An unrelated state: covering must mean binding containment.
        let d = common::gen_explicit(&mut rng, 6, 4);
        if d.covers(&a) && a.covers(&d) {
            prop_assert_eq!(&d, &a, "antisymmetry (independent pair)");
        }
    }

    /// Explicit join is the least upper bound: it covers both sides, any
    /// common weakening covers it, and it is commutative, idempotent and
    /// associative.
    #[test]
    fn explicit_join_is_a_least_upper_bound(seed: u64) {
        let mut rng = rng_of(seed);
        let a = common::gen_explicit(&mut rng, 6, 4);
        let b = common::gen_explicit(&mut rng, 6, 4);
        let j = a.join(&b);
        prop_assert!(j.covers(&a), "upper bound of the left side");
        prop_assert!(j.covers(&b), "upper bound of the right side");
        let c = common::gen_explicit(&mut rng, 6, 4);
        if c.covers(&a) && c.covers(&b) {
            prop_assert!(c.covers(&j), "least among upper bounds");
        }
        let w = weaken(&mut rng, &j);
        prop_assert!(w.covers(&a) && w.covers(&b), "weakenings of the join stay above");
        prop_assert_eq!(&j, &b.join(&a), "commutativity");
        prop_assert_eq!(&a.join(&a), &a, "idempotence");
        prop_assert_eq!(&j.join(&c), &a.join(&b.join(&c)), "associativity");
    }

    /// Assume may only add bindings; assign changes at most one.
    #[test]
    fn explicit_transfer_contracts(seed: u64) {
        let mut rng = rng_of(seed);
        let s = common::gen_explicit(&mut rng, 6, 4);
        let e = common::gen_expr(&mut rng, 6, 3);
        let polarity = rng.random_bool(0.5);
        if let Some(s2) = s.transfer(&Op::Assume { expr: e, polarity }) {
            prop_assert!(
                s.covers(&s2),
                "assume dropped or changed a binding: {s:?} -> {s2:?}"
            );
        }
        let var = VarId(rng.random_range(0..6));
        let rhs = if rng.random_bool(0.15) {
            Expr::Nondet
        } else {
            common::gen_expr(&mut rng, 6, 3)
        };
        let s2 = s
            .transfer(&Op::Assign { var, expr: rhs })
            .expect("assignment is always feasible");
        for (&v, &c) in s.bindings() {
            if v != var {
                prop_assert_eq!(s2.get(v), Some(c), "assignment touched {:?}", v);
            }
        }
        for (&v, _) in s2.bindings() {
            prop_assert!(v == var || s.get(v).is_some(), "assignment invented {v:?}");
        }
    }

    /// Symbolic join is an upper bound: each operand entails the join.
    #[test]
    fn symbolic_join_is_an_upper_bound(seed: u64) {
        let mut rng = rng_of(seed);
        let mut bdd = Bdd::new(1 << 18);
        let f = common::gen_formula(&mut bdd, &mut rng, 8, 5).unwrap();
        let g = common::gen_formula(&mut bdd, &mut rng, 8, 5).unwrap();
        let j = bdd.or(f, g).unwrap();
        prop_assert_eq!(bdd.implies(f, j).unwrap(), TRUE);
        prop_assert_eq!(bdd.implies(g, j).unwrap(), TRUE);
        // Least among upper bounds.
        let h = common::gen_formula(&mut bdd, &mut rng, 8, 5).unwrap();
        let fh = bdd.implies(f, h).unwrap();
        let gh = bdd.implies(g, h).unwrap();
        if fh == TRUE && gh == TRUE {
            prop_assert_eq!(bdd.implies(j, h).unwrap(), TRUE);
        }
    }

    /// On random programs under a random assignment: every reached
    /// composite state keeps the explicit and symbolic variable sets
    /// disjoint, no location holds two states with equal explicit parts
    /// (arrivals with one must have merged), analysis is deterministic,
    /// and FALSE traces are connected error paths.
    #[test]
    fn reached_states_respect_partition_and_merge(seed: u64) {
        let mut rng = rng_of(seed);
        let src = common::gen_program(&mut rng);
        let cfa = compile(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let a = DomainAssignment::ALL[rng.random_range(0..DomainAssignment::ALL.len())];
        let mut cfg = Config::with_assignment(a);
        cfg.bv_width = 8;
        cfg.max_states = 5_000;
        cfg.node_limit = 1 << 20;
        cfg.timeout = Some(Duration::from_secs(30));
        cfg.collect_reached = true;
        cfg.waitlist = if rng.random_bool(0.5) {
            WaitlistOrder::Dfs
        } else {
            WaitlistOrder::Bfs
        };
        let out = verify(&cfa, &cfg).unwrap();

        let reached = out.reached.as_ref().expect("requested reached set");
        let mut seen = HashSet::new();
        for info in reached {
            for (v, _) in &info.explicit {
                prop_assert!(
                    !info.bdd_vars.contains(v),
                    "{v:?} tracked by both components under {a}:\n{src}"
                );
            }
            prop_assert!(
                seen.insert((info.loc, info.explicit.clone())),
                "two states at {:?} share an explicit part under {a}:\n{src}",
                info.loc
            );
        }

        if let Verdict::False { trace, .. } = &out.verdict {
            if !trace.is_empty() {
                prop_assert_eq!(cfa.edges[trace[0]].source, cfa.entry);
                for w in trace.windows(2) {
                    prop_assert_eq!(cfa.edges[w[0]].target, cfa.edges[w[1]].source);
                }
                prop_assert!(cfa.is_error(cfa.edges[*trace.last().unwrap()].target));
            }
        }

        let again = verify(&cfa, &cfg).unwrap();
        prop_assert_eq!(&out.verdict, &again.verdict, "verdict not deterministic");
        prop_assert_eq!(out.stats.reached_states, again.stats.reached_states);
        prop_assert_eq!(out.stats.expanded, again.stats.expanded);
        prop_assert_eq!(out.stats.bdd_peak_nodes, again.stats.bdd_peak_nodes);
    }
}
