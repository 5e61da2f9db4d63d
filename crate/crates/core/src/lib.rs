//! Workbench for finite combinatorics around countable homogeneous
//! structures: finite relational structures and their embeddings, brute-force
//! amalgamation-class checkers, seeded lazy generators of the classical
//! homogeneous graphs and tournaments, back-and-forth automorphisms, witness
//! procedures for conjugation and transport lemmas, and a catalogue of flow
//! descriptors with finite-stage evidence runs.

pub mod autos;
pub mod catalog;
pub mod fraisse;
pub mod limits;
pub mod relstruct;
pub mod rng;
pub mod verify;
pub mod witnesses;
