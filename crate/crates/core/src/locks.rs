//! Generator for the scalable lock-discipline program family.
//!
//! `gen_locks(k)` emits a safe program over `k` (process-flag, lock)
//! pairs: every flagged process acquires its lock, then every flagged
//! process asserts its lock is held and releases it. All variables are
//! compared against zero only, so the whole family classifies as Bool.
//!
//! The family separates the analyses sharply. A BDD over the flag/lock
//! bits stays near one state per location (the pair correlations fit in
//! a small diagram), while the explicit domain must enumerate the
//! branch combinations: each pair independently triples the paths
//! through the release sweep, so reached states grow exponentially
//! in `k`.

use std::fmt::Write;

/// MiniC source for the `k`-pair lock-discipline program.
pub fn gen_locks(k: usize) -> String {
    assert!(k >= 1, "need at least one lock pair");
    let mut s = String::new();
    s.push_str("void main() {\n");
    // Interleaved declarations keep each flag next to its lock in the
    // default (declaration-order) BDD layout.
    for i in 1..=k {
        let _ = writeln!(s, "    int p{i};");
        let _ = writeln!(s, "    int lk{i} = 0;");
    }
    for i in 1..=k {
        let _ = writeln!(s, "    p{i} = __VERIFIER_nondet_int();");
    }
    // Acquire sweep.
    for i in 1..=k {
        let _ = writeln!(s, "    if (p{i} != 0) {{ lk{i} = 1; }}");
    }
    // Release sweep: a flagged process must hold its lock.
    for i in 1..=k {
        let _ = writeln!(s, "    if (p{i} != 0) {{ assert(lk{i} != 0); lk{i} = 0; }}");
    }
    s.push_str("}\n");
    s
}
