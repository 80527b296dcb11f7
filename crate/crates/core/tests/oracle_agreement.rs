//! Cross-checks the analysis against the brute-force concrete
//! interpreter: outcome agreement on the bundled corpus, the worked
//! examples under every domain assignment, and randomized soundness
//! fuzzing on generated programs.

mod common;

use std::fs;
use std::path::PathBuf;

use domcheck_core::cfa::Cfa;
use domcheck_core::engine::oracle::{interpret, OracleConfig, OracleVerdict};
use domcheck_core::engine::{verify, Config, DomainAssignment, Verdict};
use domcheck_core::frontend::compile;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn programs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/programs")
}

fn load(path: &PathBuf) -> (String, Cfa) {
    let src = fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    let cfa = compile(&src).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    (src, cfa)
}

fn corpus_tasks() -> Vec<(String, Cfa, &'static str)> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mc"))
        .collect();
    paths.sort();
    for p in paths {
        let (_, cfa) = load(&p);
        let expect = fs::read_to_string(p.with_extension("expect"))
            .unwrap_or_else(|e| panic!("{p:?} sidecar: {e}"));
        let expect = match expect.trim() {
            "TRUE" => "TRUE",
            "FALSE" => "FALSE",
            other => panic!("{p:?} sidecar holds {other:?}"),
        };
        out.push((p.file_stem().unwrap().to_string_lossy().into_owned(), cfa, expect));
    }
    out
}

#[test]
fn corpus_has_at_least_twenty_programs() {
    assert!(corpus_tasks().len() >= 20);
}

/// Every corpus program: the concrete interpreter agrees with the
/// sidecar, and the analysis agrees with the interpreter under both the
/// all-explicit and the all-symbolic assignment, with every reported bug
/// concretely confirmed.
#[test]
fn corpus_outcomes_match_the_interpreter() {
    for (name, cfa, expect) in corpus_tasks() {
        let report = interpret(&cfa, &OracleConfig::default());
        let oracle_word = match report.verdict {
            OracleVerdict::Safe => "TRUE",
            OracleVerdict::Unsafe => "FALSE",
            OracleVerdict::Inconclusive => panic!("{name}: interpreter hit its budget"),
        };
        assert_eq!(oracle_word, expect, "{name}: sidecar disagrees with interpreter");
        for a in [DomainAssignment::ExplicitInt, DomainAssignment::BddInt] {
            let out = verify(&cfa, &Config::with_assignment(a)).unwrap();
            assert_eq!(out.verdict.word(), expect, "{name} under {a}");
            if let Verdict::False { confirmed, .. } = out.verdict {
                assert!(confirmed, "{name} under {a}: unconfirmed counterexample");
            }
        }
    }
}

/// The guarded-square example must be found unsafe with a confirmed
/// trace under every assignment, and its nonnegative-square variant
/// proved safe under every assignment.
#[test]
fn worked_examples_hold_under_every_assignment() {
    let (_, buggy) = load(&programs_dir().join("guarded_square.mc"));
    let (_, safe) = load(&programs_dir().join("guarded_square_nonneg.mc"));
    for a in DomainAssignment::ALL {
        match verify(&buggy, &Config::with_assignment(a)).unwrap().verdict {
            Verdict::False { confirmed, .. } => {
                assert!(confirmed, "unconfirmed counterexample under {a}")
            }
            v => panic!("guarded_square under {a}: expected FALSE, got {v:?}"),
        }
        assert_eq!(
            verify(&safe, &Config::with_assignment(a)).unwrap().verdict,
            Verdict::True,
            "guarded_square_nonneg under {a}"
        );
    }
}

/// No (program, assignment) pair may be proved safe while the concrete
/// interpreter reaches an error on it.
#[test]
fn never_true_where_the_interpreter_finds_a_bug() {
    let mut all: Vec<(String, Cfa)> =
        corpus_tasks().into_iter().map(|(n, c, _)| (n, c)).collect();
    for name in ["guarded_square", "guarded_square_nonneg", "branch_shared_constants"] {
        let (_, cfa) = load(&programs_dir().join(format!("{name}.mc")));
        all.push((name.to_string(), cfa));
    }
    for (name, cfa) in &all {
        let report = interpret(cfa, &OracleConfig::default());
        for a in DomainAssignment::ALL {
            let out = verify(cfa, &Config::with_assignment(a)).unwrap();
            assert!(
                !(out.verdict.is_true() && report.verdict == OracleVerdict::Unsafe),
                "{name} under {a}: proved safe but concretely unsafe"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Soundness fuzz: on random bounded programs, a TRUE verdict under
    /// a random assignment must never contradict a concrete bug found
    /// by the interpreter. Any nondet value range makes the check valid
    /// (a found bug is a bug); a small one keeps enumeration cheap.
    #[test]
    fn generated_programs_are_never_proved_safe_while_unsafe(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = common::gen_program(&mut rng);
        let cfa = compile(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        let a = DomainAssignment::ALL[rng.random_range(0..DomainAssignment::ALL.len())];
        let mut cfg = Config::with_assignment(a);
        cfg.max_states = 10_000;
        cfg.node_limit = 1 << 21;
        let out = verify(&cfa, &cfg).unwrap();
        if out.verdict.is_true() {
            let oracle_cfg = OracleConfig {
                values: (-2..=2).collect(),
                max_steps_per_path: 2_000,
                max_total_steps: 50_000,
            };
            let report = interpret(&cfa, &oracle_cfg);
            prop_assert!(
                report.verdict != OracleVerdict::Unsafe,
                "proved safe under {a} but concretely unsafe:\n{src}"
            );
        }
    }
}
