//! The verification suite: nine numbered criteria covering the class
//! checkers, the generators, the automorphisms, the witness procedures and
//! the catalogue, each with a pinned runtime budget. The CLI `verify`
//! subcommand and the acceptance test target both drive this module.

use std::collections::BTreeSet;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::autos::{
    betweenness, canonical_auto, preserves_parts, AutoKind, PartClass, PartialAuto,
};
use crate::catalog;
use crate::fraisse::{
    check_ap, check_chain_condition, AmalgamInstance, ClassSpec, Counterexample,
};
use crate::limits::{Expansion, ExtensionRequest, Family, Level, LimitError, LimitHandle, LimitSpec};
use crate::relstruct::enumerate_embeddings;
use crate::rng::SplitMix64;
use crate::witnesses::{
    conjugate_order_preserving, disjoint_copy, s2_conjugate_parts, s2_monotone_copy,
};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub millis: u128,
    pub budget_millis: u128,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.millis <= self.budget_millis
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "name": self.name,
            "verdict": if self.passed { "pass" } else { "fail" },
            "details": self.details,
            "millis": self.millis,
            "budget_millis": self.budget_millis,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": "all",
            "seed": self.seed,
            "all_passed": self.all_passed(),
            "total_millis": self.results.iter().map(|r| r.millis).sum::<u128>(),
            "criteria": self.results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    }
}

type CriterionFn = fn(u64) -> Result<String, String>;

const CRITERIA: [(&str, u128, CriterionFn); 9] = [
    ("strong and plain amalgamation verdicts", 60_000, c1_amalgamation),
    ("limit stage integrity", 60_000, c2_limit_integrity),
    ("one-point extension axioms", 30_000, c3_extension_axioms),
    ("disjoint copies avoiding an automorphism", 60_000, c4_disjoint_copies),
    ("order-reversal conjugated order-preserving", 60_000, c5_conjugates),
    ("dense local order procedures", 60_000, c6_s2_suite),
    ("catalogue evidence and consistency", 60_000, c7_catalog),
    ("betweenness invariance under order reversal", 5_000, c8_betweenness),
    ("two-generator chain condition", 30_000, c9_chains),
];

pub fn criterion_count() -> usize {
    CRITERIA.len()
}

/// Run one criterion (ids are 1-based).
pub fn run_criterion(id: usize, seed: u64) -> CriterionResult {
    let (name, budget, f) = CRITERIA[id - 1];
    let start = Instant::now();
    let outcome = f(seed);
    let millis = start.elapsed().as_millis();
    match outcome {
        Ok(details) => CriterionResult { id, name, passed: true, details, millis, budget_millis: budget },
        Err(details) => {
            CriterionResult { id, name, passed: false, details, millis, budget_millis: budget }
        }
    }
}

/// Run all criteria in order.
pub fn run_suite(seed: u64) -> SuiteReport {
    let results = (1..=CRITERIA.len()).map(|id| run_criterion(id, seed)).collect();
    SuiteReport { seed, results }
}

fn handle(fam: Family, seed: u64, exp: Expansion) -> Result<LimitHandle, String> {
    Ok(LimitHandle::new(LimitSpec::new(fam, seed, exp).map_err(|e| e.to_string())?))
}

/// Independent amalgam oracle: enumerate every labeled class member up to
/// |B| + |C| - |A| and every commuting embedding pair. Used to confirm
/// reported counterexamples against a path that shares nothing with the
/// search engine's gluing construction.
fn oracle_has_amalgam(
    inst: &AmalgamInstance,
    class: &ClassSpec,
    strong: bool,
) -> Result<bool, String> {
    let max = inst.b.n() + inst.c.n() - inst.a.n();
    for n in inst.b.n().max(inst.c.n())..=max {
        for d in class.labeled_members(n).map_err(|e| e.to_string())? {
            for r in enumerate_embeddings(&inst.b, &d, None).map_err(|e| e.to_string())? {
                's: for s in enumerate_embeddings(&inst.c, &d, None).map_err(|e| e.to_string())? {
                    for v in 0..inst.a.n() {
                        if r.map[inst.f.map[v]] != s.map[inst.g.map[v]] {
                            continue 's;
                        }
                    }
                    if strong {
                        let rb: BTreeSet<usize> = r.map.iter().copied().collect();
                        let sc: BTreeSet<usize> = s.map.iter().copied().collect();
                        let ra: BTreeSet<usize> =
                            (0..inst.a.n()).map(|v| r.map[inst.f.map[v]]).collect();
                        let inter: BTreeSet<usize> = rb.intersection(&sc).copied().collect();
                        if inter != ra {
                            continue 's;
                        }
                    }
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

fn c1_amalgamation(_seed: u64) -> Result<String, String> {
    let mut details = Vec::new();
    let strong_classes = [
        ClassSpec::all_graphs(4),
        ClassSpec::kfree_graphs(3, 4),
        ClassSpec::all_tournaments(4),
        ClassSpec::all_linear_orders(4),
        ClassSpec::all_pure_sets(4),
    ];
    for class in &strong_classes {
        let r = check_ap(class, true).map_err(|e| e.to_string())?;
        if !r.holds() {
            return Err(format!("strong amalgamation fails for {}", class.name));
        }
        details.push(format!("{}: {} instances", class.name, r.instances_checked));
    }
    let ordered = ClassSpec::ordered(ClassSpec::all_graphs(4)).map_err(|e| e.to_string())?;
    let r = check_ap(&ordered, false).map_err(|e| e.to_string())?;
    if !r.holds() {
        return Err("plain amalgamation fails for ordered(all-graphs)".into());
    }
    details.push(format!("{}: {} instances", ordered.name, r.instances_checked));
    // The designed failing class must fail, with a counterexample that an
    // independent exhaustive oracle confirms.
    let bad = ClassSpec::at_most_one_marked(4);
    let r = check_ap(&bad, true).map_err(|e| e.to_string())?;
    if r.holds() {
        return Err("at-most-one-p unexpectedly has strong amalgamation".into());
    }
    let inst = match &r.counterexample {
        Some(Counterexample::Amalgam(inst)) => inst.as_ref().clone(),
        other => return Err(format!("missing amalgam counterexample, got {other:?}")),
    };
    if oracle_has_amalgam(&inst, &bad, true)? {
        return Err("oracle found a strong amalgam for the reported counterexample".into());
    }
    if !oracle_has_amalgam(&inst, &bad, false)? {
        return Err("oracle found no plain amalgam for the counterexample (expected gluing)".into());
    }
    details.push("at-most-one-p: fails with oracle-confirmed counterexample".into());
    Ok(details.join("; "))
}

fn family_roster() -> Vec<(Family, Expansion)> {
    vec![
        (Family::PureSet, Expansion::None),
        (Family::Rationals, Expansion::None),
        (Family::RandomGraph, Expansion::None),
        (Family::Henson(3), Expansion::None),
        (Family::RandomTournament, Expansion::None),
        (Family::S2, Expansion::OrderParts),
        (Family::InKinf(3), Expansion::None),
        (Family::IinfKn(2), Expansion::None),
        (Family::IinfKinf, Expansion::None),
    ]
}

fn c2_limit_integrity(seed: u64) -> Result<String, String> {
    let mut pairs_checked = 0;
    for (idx, (fam, exp)) in family_roster().into_iter().enumerate() {
        let h = handle(fam, seed, exp)?;
        let mut r = SplitMix64::new(seed ^ (idx as u64) << 8);
        for _ in 0..10 {
            let m = 2 + r.below(199);
            let n = 1 + r.below(m - 1);
            let big = h.stage(m).map_err(|e| e.to_string())?;
            let small = h.stage(n).map_err(|e| e.to_string())?;
            let support: Vec<usize> = (0..n).collect();
            let (induced, _) = big.induced(&support).map_err(|e| e.to_string())?;
            if induced != small {
                return Err(format!("nestedness fails for {} at ({n}, {m})", fam.name()));
            }
            pairs_checked += 1;
        }
        // Seed determinism of the serialized stage across fresh handles.
        let h1 = handle(fam, seed, exp)?;
        let h2 = handle(fam, seed, exp)?;
        let s1 = serde_json::to_string(&h1.stage(100).map_err(|e| e.to_string())?.to_json())
            .map_err(|e| e.to_string())?;
        let s2 = serde_json::to_string(&h2.stage(100).map_err(|e| e.to_string())?.to_json())
            .map_err(|e| e.to_string())?;
        if s1 != s2 {
            return Err(format!("stage(100) not deterministic for {}", fam.name()));
        }
    }
    // The triangle-free generator is triangle-free at stage 50.
    let h = handle(Family::Henson(3), 1, Expansion::None)?;
    let s = h.stage(50).map_err(|e| e.to_string())?;
    for a in 0..50 {
        for b in (a + 1)..50 {
            if !s.has_pair(0, a, b) {
                continue;
            }
            for c in (b + 1)..50 {
                if s.has_pair(0, a, c) && s.has_pair(0, b, c) {
                    return Err(format!("triangle {a},{b},{c} in the K3-free stage"));
                }
            }
        }
    }
    // Stage 60 of the dense local order is a tournament whose in- and
    // out-neighborhoods are transitive.
    let h = handle(Family::S2, seed, Expansion::OrderParts)?;
    let s = h.stage_at(60, Level::Base).map_err(|e| e.to_string())?;
    s.validate().map_err(|v| format!("s2 stage invalid: {v}"))?;
    for v in 0..60 {
        let out: Vec<usize> = (0..60).filter(|&w| w != v && s.has_pair(0, v, w)).collect();
        let inn: Vec<usize> = (0..60).filter(|&w| w != v && s.has_pair(0, w, v)).collect();
        for hood in [&out, &inn] {
            for &a in hood.iter() {
                for &b in hood.iter() {
                    for &c in hood.iter() {
                        if a != b
                            && b != c
                            && a != c
                            && s.has_pair(0, a, b)
                            && s.has_pair(0, b, c)
                            && !s.has_pair(0, a, c)
                        {
                            return Err(format!(
                                "neighborhood of {v} not transitive at ({a},{b},{c})"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{pairs_checked} nested pairs; 9 deterministic stages; K3-free and local-order checks exact"))
}

fn c3_extension_axioms(seed: u64) -> Result<String, String> {
    let mut demands = 0;
    for fam in [Family::RandomGraph, Family::RandomTournament, Family::Rationals] {
        let h = handle(fam, seed, Expansion::None)?;
        let rep = h.verify_extension_axioms(2, 200).map_err(|e| e.to_string())?;
        if !rep.holds() {
            return Err(format!(
                "extension axioms fail for {}: {:?}",
                fam.name(),
                rep.failures.first()
            ));
        }
        demands += rep.demands_checked;
    }
    // The K3-free generator: independent-set demands only; adjacent demands
    // are skipped as unsatisfiable by the checker and rejected by
    // find_extension.
    let h = handle(Family::Henson(3), seed, Expansion::None)?;
    let rep = h.verify_extension_axioms(2, 650).map_err(|e| e.to_string())?;
    if !rep.holds() {
        return Err(format!("K3-free extension axioms fail: {:?}", rep.failures.first()));
    }
    if rep.skipped_unsatisfiable == 0 {
        return Err("expected some adjacent-pair demands to be skipped as unsatisfiable".into());
    }
    demands += rep.demands_checked;
    let s = h.stage(10).map_err(|e| e.to_string())?;
    let mut edge = None;
    'outer: for i in 0..10 {
        for j in (i + 1)..10 {
            if s.has_pair(0, i, j) {
                edge = Some((i, j));
                break 'outer;
            }
        }
    }
    let (i, j) = edge.ok_or("no edge in the K3-free stage")?;
    match h.find_extension(&ExtensionRequest::new().adjacent(&[i, j])) {
        Err(LimitError::Unsatisfiable(_)) => {}
        other => return Err(format!("adjacent-pair demand should be unsatisfiable, got {other:?}")),
    }
    Ok(format!("{demands} demands witnessed; unsatisfiable demand rejected"))
}

fn c4_disjoint_copies(seed: u64) -> Result<String, String> {
    let mut r = SplitMix64::new(seed ^ 0x04);
    let families =
        [Family::PureSet, Family::Rationals, Family::RandomGraph, Family::Henson(3), Family::RandomTournament];
    for t in 0..200u64 {
        let fam = families[(t as usize) % families.len()];
        // The pure set takes its order expansion so the shift automorphism
        // is available on it too.
        let exp = if fam == Family::PureSet { Expansion::Order } else { Expansion::None };
        let h = handle(fam, seed.wrapping_add(t), exp)?;
        h.ensure(12).map_err(|e| e.to_string())?;
        let use_shift =
            matches!(fam, Family::PureSet | Family::Rationals) && t % 2 == 0;
        let auto = if use_shift {
            canonical_auto(&h, AutoKind::Shift).map_err(|e| e.to_string())?
        } else {
            canonical_auto(
                &h,
                AutoKind::SeededBackForth {
                    seed: r.next_u64(),
                    level: Level::Base,
                    fixed_point_free: true,
                },
            )
            .map_err(|e| e.to_string())?
        };
        let size = 1 + r.below(6);
        let a = r.subset(12, size);
        let (emb, report) =
            disjoint_copy(&h, &auto, &a).map_err(|e| format!("instance {t} ({}): {e}", fam.name()))?;
        if !report.all_pass() || !emb.verify() {
            return Err(format!("instance {t} failed verification"));
        }
        // Exact disjointness, re-checked here.
        for &x in &emb.map {
            let hx = auto.image(x).map_err(|e| e.to_string())?;
            if emb.map.contains(&hx) {
                return Err(format!("instance {t}: image meets its automorphism image"));
            }
        }
    }
    Ok("200 randomized instances, all postconditions exact".into())
}

fn c5_conjugates(seed: u64) -> Result<String, String> {
    let mut r = SplitMix64::new(seed ^ 0x05);
    for t in 0..100u64 {
        let fam = if t % 2 == 0 { Family::PureSet } else { Family::RandomGraph };
        let h = handle(fam, seed.wrapping_add(t), Expansion::Order)?;
        h.ensure(12).map_err(|e| e.to_string())?;
        let sigma = canonical_auto(&h, AutoKind::OrderReversal).map_err(|e| e.to_string())?;
        let size = 1 + r.below(8);
        let a = r.subset(12, size);
        let (g, report) = conjugate_order_preserving(&h, &sigma, &a)
            .map_err(|e| format!("instance {t} ({}): {e}", fam.name()))?;
        if !report.all_pass() {
            return Err(format!("instance {t} failed verification"));
        }
        // Evaluate g sigma g^{-1} pointwise and confirm strict increase.
        let mut images = Vec::new();
        for &av in &a {
            let pre = g.preimage(av).ok_or_else(|| format!("instance {t}: {av} not in range"))?;
            let mid = sigma.image(pre).map_err(|e| e.to_string())?;
            let img =
                g.image(mid).ok_or_else(|| format!("instance {t}: conjugate undefined"))?;
            images.push(img);
        }
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                let before = h.coord(a[i]).map_err(|e| e.to_string())?
                    < h.coord(a[j]).map_err(|e| e.to_string())?;
                let after = h.coord(images[i]).map_err(|e| e.to_string())?
                    < h.coord(images[j]).map_err(|e| e.to_string())?;
                if before != after {
                    return Err(format!("instance {t}: conjugate not increasing"));
                }
            }
        }
    }
    Ok("100 randomized instances over both carriers, conjugates strictly increasing".into())
}

fn c6_s2_suite(seed: u64) -> Result<String, String> {
    use crate::limits::{s2_arc, ArcDirection};
    let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    // The three worked orientation examples, including the 3-cycle.
    if s2_arc((&rat(0, 1), 0), (&rat(1, 1), 0)).map_err(|e| e.to_string())? != ArcDirection::YToX {
        return Err("same-part pair must point from larger to smaller".into());
    }
    if s2_arc((&rat(0, 1), 0), (&rat(1, 2), 1)).map_err(|e| e.to_string())? != ArcDirection::XToY {
        return Err("cross-part pair must point from smaller to larger".into());
    }
    let cyc1 = s2_arc((&rat(0, 1), 0), (&rat(1, 2), 1)).map_err(|e| e.to_string())?;
    let cyc2 = s2_arc((&rat(1, 2), 1), (&rat(1, 1), 0)).map_err(|e| e.to_string())?;
    let cyc3 = s2_arc((&rat(1, 1), 0), (&rat(0, 1), 0)).map_err(|e| e.to_string())?;
    if !(cyc1 == ArcDirection::XToY && cyc2 == ArcDirection::XToY && cyc3 == ArcDirection::XToY) {
        return Err("0 -> 1/2 -> 1 -> 0 must be a directed 3-cycle".into());
    }
    // 100 randomized monotone-copy and part-conjugation instances.
    let mut r = SplitMix64::new(seed ^ 0x06);
    for t in 0..100u64 {
        let h = handle(Family::S2, seed.wrapping_add(t), Expansion::OrderParts)?;
        h.ensure(12).map_err(|e| e.to_string())?;
        let sw = canonical_auto(&h, AutoKind::PartSwap).map_err(|e| e.to_string())?;
        let size = 1 + r.below(5);
        let a = r.subset(12, size);
        let (_, rep1) =
            s2_monotone_copy(&h, &sw, &a).map_err(|e| format!("monotone instance {t}: {e}"))?;
        let (_, rep2) =
            s2_conjugate_parts(&h, &sw, &a).map_err(|e| format!("conjugate instance {t}: {e}"))?;
        if !rep1.all_pass() || !rep2.all_pass() {
            return Err(format!("instance {t} failed verification"));
        }
    }
    // Part classification of the three reference maps.
    let h = handle(Family::S2, seed, Expansion::OrderParts)?;
    h.ensure(12).map_err(|e| e.to_string())?;
    let sample: Vec<usize> = (0..12).collect();
    let id = PartialAuto::identity_on(&h, Level::Base, &sample).map_err(|e| e.to_string())?;
    if preserves_parts(&id, &h, &sample).map_err(|e| e.to_string())? != PartClass::PreservesEach {
        return Err("identity must preserve each part".into());
    }
    let sw = canonical_auto(&h, AutoKind::PartSwap).map_err(|e| e.to_string())?;
    if preserves_parts(&sw, &h, &sample).map_err(|e| e.to_string())? != PartClass::Swaps {
        return Err("part swap must swap".into());
    }
    let mut mixed = false;
    for s in 0..8 {
        let g = canonical_auto(
            &h,
            AutoKind::SeededBackForth {
                seed: seed.wrapping_add(s),
                level: Level::Base,
                fixed_point_free: false,
            },
        )
        .map_err(|e| e.to_string())?;
        if preserves_parts(&g, &h, &sample).map_err(|e| e.to_string())? == PartClass::Mixed {
            mixed = true;
            break;
        }
    }
    if !mixed {
        return Err("no sampled tournament-level map classified as mixed".into());
    }
    Ok("arc convention exact; 100 instances verified; classifications exact".into())
}

fn c7_catalog(seed: u64) -> Result<String, String> {
    let entry = catalog::get_entry("in-kinf(3)").map_err(|e| e.to_string())?;
    let record = catalog::run_evidence(&entry, seed, 50).map_err(|e| e.to_string())?;
    if !record.pass() {
        return Err(format!("evidence failed: {:?}", record.procedures));
    }
    for (name, ok) in catalog::consistency_check() {
        if !ok {
            return Err(format!("catalogue entry {name} inconsistent"));
        }
    }
    Ok(format!(
        "quotient homomorphism and kernel factorization over 50 samples; {} entries consistent",
        catalog::entries().len()
    ))
}

fn c8_betweenness(seed: u64) -> Result<String, String> {
    let h = handle(Family::PureSet, seed, Expansion::Order)?;
    h.ensure(30).map_err(|e| e.to_string())?;
    let sigma = canonical_auto(&h, AutoKind::OrderReversal).map_err(|e| e.to_string())?;
    let mut r = SplitMix64::new(seed ^ 0x08);
    let mut checked = 0;
    while checked < 100 {
        let x = r.below(30);
        let y = r.below(30);
        let z = r.below(30);
        if x == y || x == z || y == z {
            continue;
        }
        let c = |v: usize| h.coord(v).map_err(|e| e.to_string());
        let before = betweenness(&c(x)?, &c(y)?, &c(z)?).map_err(|e| e.to_string())?;
        let sx = sigma.image(x).map_err(|e| e.to_string())?;
        let sy = sigma.image(y).map_err(|e| e.to_string())?;
        let sz = sigma.image(z).map_err(|e| e.to_string())?;
        let after = betweenness(&c(sx)?, &c(sy)?, &c(sz)?).map_err(|e| e.to_string())?;
        if before != after {
            return Err(format!("betweenness not invariant on triple ({x},{y},{z})"));
        }
        checked += 1;
    }
    Ok("100 random triples invariant under order-reversal images".into())
}

fn c9_chains(seed: u64) -> Result<String, String> {
    // The dense order with u, v at coordinates 0 and 1: every increasing
    // pair connects in one step.
    let h = handle(Family::Rationals, seed, Expansion::None)?;
    h.ensure(20).map_err(|e| e.to_string())?;
    let zero = BigRational::from_integer(BigInt::from(0));
    let one = BigRational::from_integer(BigInt::from(1));
    let u = h.materialize_at_coord(&zero, None).map_err(|e| e.to_string())?;
    let v = h.materialize_at_coord(&one, None).map_err(|e| e.to_string())?;
    let mut r = SplitMix64::new(seed ^ 0x09);
    let mut samples = Vec::new();
    while samples.len() < 50 {
        let i = r.below(20);
        let j = r.below(20);
        if i != j && h.coord(i).map_err(|e| e.to_string())? < h.coord(j).map_err(|e| e.to_string())? {
            samples.push((i, j));
        }
    }
    let rep = check_chain_condition(&h, u, v, &samples, 4).map_err(|e| e.to_string())?;
    if !rep.holds() {
        return Err("chain condition fails on the dense order".into());
    }
    if rep.chains.iter().any(|c| c.chain.len() != 2) {
        return Err("dense-order chains must have length two".into());
    }
    // The ordered random graph: chains within four vertices.
    let h = handle(Family::RandomGraph, seed, Expansion::Order)?;
    h.ensure(12).map_err(|e| e.to_string())?;
    let mut uv = None;
    'outer: for i in 0..12 {
        for j in 0..12 {
            if i == j {
                continue;
            }
            let rec = h.relation(i, j).map_err(|e| e.to_string())?;
            if rec.edge == Some(true) && rec.before == Some(true) {
                uv = Some((i, j));
                break 'outer;
            }
        }
    }
    let (u, v) = uv.ok_or("no adjacent increasing pair in the stage")?;
    let mut samples = Vec::new();
    while samples.len() < 50 {
        let i = r.below(12);
        let j = r.below(12);
        if i != j && h.coord(i).map_err(|e| e.to_string())? < h.coord(j).map_err(|e| e.to_string())? {
            samples.push((i, j));
        }
    }
    let rep = check_chain_condition(&h, u, v, &samples, 4).map_err(|e| e.to_string())?;
    if !rep.holds() {
        let miss = rep.chains.iter().find(|c| !c.ok);
        return Err(format!("ordered-graph chain missing: {miss:?}"));
    }
    Ok("50 dense-order pairs at length 2; 50 ordered-graph pairs within length 4".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    // The full suite runs in the dedicated acceptance test target; here we
    // only pin the shape of the driver.
    #[test]
    fn criterion_ids_and_budgets() {
        assert_eq!(criterion_count(), 9);
        let r = run_criterion(8, 7);
        assert_eq!(r.id, 8);
        assert!(r.passed, "{}", r.details);
        assert!(r.budget_millis >= 5_000);
    }

    #[test]
    fn suite_json_shape() {
        let r = run_criterion(8, 7);
        let j = r.to_json();
        assert_eq!(j["id"], 8);
        assert_eq!(j["verdict"], "pass");
    }
}
