//! Reachability checking for a small imperative language.
//!
//! The pipeline: parse and lower a program to a control-flow automaton
//! ([`frontend`], [`cfa`]), classify every variable by how it is used
//! ([`domtype`]), split the variables between an explicit-value domain
//! ([`explicit`]) and a BDD domain ([`bdd_domain`], backed by the kernel
//! in [`bdd`]) according to a configuration, and run a composite
//! reachability analysis ([`engine`]) that decides whether any error
//! location is reachable.

pub mod cfa;
pub mod frontend;

pub mod domtype;

pub mod bdd;

pub mod explicit;

pub mod bdd_domain;

pub mod engine;

pub mod bench;

pub mod locks;
