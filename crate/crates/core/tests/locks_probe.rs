use std::time::Instant;

use domcheck_core::engine::{verify, Config, DomainAssignment, Verdict};
use domcheck_core::frontend::compile;
use domcheck_core::locks::gen_locks;

#[test]
#[ignore]
fn probe() {
    for k in 6..=12 {
        let cfa = compile(&gen_locks(k)).unwrap();
        let mut cfg = Config::with_assignment(DomainAssignment::ExplicitInt);
        cfg.max_states = 10_000_000;
        let t = Instant::now();
        let out = verify(&cfa, &cfg).unwrap();
        println!(
            "explicit k={k}: verdict={} reached={} expanded={} time={:.2}s",
            out.verdict.word(),
            out.stats.reached_states,
            out.stats.expanded,
            t.elapsed().as_secs_f64()
        );
    }
    {
        let k = 16;
        let cfa = compile(&gen_locks(k)).unwrap();
        let cfg = Config::with_assignment(DomainAssignment::ExplicitInt);
        let t = Instant::now();
        let out = verify(&cfa, &cfg).unwrap();
        println!(
            "explicit k={k} (1e6 cap): verdict={:?} reached={} time={:.2}s",
            out.verdict,
            out.stats.reached_states,
            t.elapsed().as_secs_f64()
        );
    }
    for k in [6, 8, 10, 12, 14, 16] {
        let cfa = compile(&gen_locks(k)).unwrap();
        let cfg = Config::with_assignment(DomainAssignment::BddBool);
        let t = Instant::now();
        let out = verify(&cfa, &cfg).unwrap();
        assert_eq!(out.verdict, Verdict::True);
        println!(
            "bdd-bool k={k}: reached={} expanded={} peak_nodes={} time={:.3}s",
            out.stats.reached_states,
            out.stats.expanded,
            out.stats.bdd_peak_nodes,
            t.elapsed().as_secs_f64()
        );
    }
}
