//! Property tests for the structural invariants: embedding self-consistency,
//! serialization round trips, free-amalgam verification, and stage
//! nestedness under arbitrary seeds.

use proptest::prelude::*;

use homog::fraisse::{amalgamate, AmalgamInstance, AmalgamMode};
use homog::limits::{Expansion, Family, LimitHandle, LimitSpec};
use homog::relstruct::{enumerate_embeddings, Embedding, FinStructure};

/// A graph on up to 6 vertices from an edge bitmask.
fn graph_strategy() -> impl Strategy<Value = FinStructure> {
    (0usize..=6, any::<u32>()).prop_map(|(n, mask)| {
        let mut edges = Vec::new();
        let mut bit = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if mask >> (bit % 32) & 1 == 1 {
                    edges.push((i, j));
                }
                bit += 1;
            }
        }
        FinStructure::graph_from_edges(n, &edges).expect("valid edge list")
    })
}

proptest! {
    #[test]
    fn graphs_validate_and_roundtrip(g in graph_strategy()) {
        prop_assert!(g.validate().is_ok());
        let j = g.to_json();
        let back = FinStructure::from_json(&j).unwrap();
        prop_assert_eq!(&back, &g);
        // Byte stability of the serialized form.
        prop_assert_eq!(
            serde_json::to_string(&j).unwrap(),
            serde_json::to_string(&back.to_json()).unwrap()
        );
    }

    #[test]
    fn enumerated_embeddings_verify(a in graph_strategy(), b in graph_strategy()) {
        if a.n() <= b.n() {
            let embs = enumerate_embeddings(&a, &b, Some(50)).unwrap();
            for e in &embs {
                prop_assert!(e.verify());
            }
            // Determinism: a second run yields the same maps.
            let again = enumerate_embeddings(&a, &b, Some(50)).unwrap();
            prop_assert_eq!(
                embs.iter().map(|e| e.map.clone()).collect::<Vec<_>>(),
                again.iter().map(|e| e.map.clone()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn induced_inclusion_is_embedding(g in graph_strategy(), mask in any::<u8>()) {
        let support: Vec<usize> = (0..g.n()).filter(|&v| mask >> v & 1 == 1).collect();
        let (sub, inc) = g.induced(&support).unwrap();
        prop_assert!(inc.verify());
        prop_assert!(sub.validate().is_ok());
        prop_assert_eq!(sub.n(), support.len());
    }

    #[test]
    fn free_amalgams_verify(b in graph_strategy(), c in graph_strategy(), mask in any::<u8>()) {
        // A = an induced substructure of B, embedded into C wherever possible.
        let support: Vec<usize> = (0..b.n()).filter(|&v| mask >> v & 1 == 1).collect();
        let (a, f) = b.induced(&support).unwrap();
        if let Some(g) = enumerate_embeddings(&a, &c, Some(1)).unwrap().into_iter().next() {
            let inst = AmalgamInstance::new(a, b.clone(), c.clone(), f, g).unwrap();
            let am = amalgamate(&inst, AmalgamMode::Free).unwrap();
            prop_assert!(am.verify(&inst, true));
            prop_assert!(am.d.validate().is_ok());
        }
    }

    #[test]
    fn stages_nest_for_any_seed(seed in any::<u64>(), n in 0usize..30, extra in 1usize..30) {
        let h = LimitHandle::new(
            LimitSpec::new(Family::RandomGraph, seed, Expansion::Order).unwrap(),
        );
        let m = n + extra;
        let big = h.stage(m).unwrap();
        let small = h.stage(n).unwrap();
        let support: Vec<usize> = (0..n).collect();
        let (induced, _) = big.induced(&support).unwrap();
        prop_assert_eq!(induced, small);
        prop_assert!(big.validate().is_ok());
    }

    #[test]
    fn s2_stages_are_tournaments(seed in any::<u64>(), n in 0usize..25) {
        let h = LimitHandle::new(
            LimitSpec::new(Family::S2, seed, Expansion::OrderParts).unwrap(),
        );
        let s = h.stage(n).unwrap();
        prop_assert!(s.validate().is_ok());
    }

    #[test]
    fn embedding_constructor_rejects_non_embeddings(g in graph_strategy()) {
        if g.n() >= 2 {
            // A constant map is never injective.
            let map = vec![0; g.n()];
            prop_assert!(Embedding::new(g.clone(), g.clone(), map).is_err());
        }
    }
}
