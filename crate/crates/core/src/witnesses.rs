//! Executable constructive procedures over the generated limits: disjoint
//! copies avoiding an automorphism, order transport onto prescribed block
//! orders, conjugation witnesses turning an order-reversing automorphism
//! order-preserving on a window, the S(2) part procedures, and factorization
//! of finite partial isomorphisms into conjugates of star-level maps.
//!
//! Every operation re-verifies its postcondition by direct relation queries,
//! independently of how the witness was found, and returns the checks in a
//! [`WitnessReport`]. A failed check never leaks out in a report: operations
//! fall back to a direct bounded search and otherwise raise an error.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::autos::{
    backforth_extend, image_request, preserves_parts, AutoError, AutoHandle, PartClass,
    PartialAuto,
};
use crate::limits::{
    Expansion, ExtensionRequest, Family, Level, LimitError, LimitHandle, OrderSlot,
};
use crate::relstruct::{is_embedding, Embedding, RelError};

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("pipeline and fallback both exhausted: {0}")]
    SearchExhausted(String),
    #[error("conjugation word needs length {needed}, bound is {bound}")]
    WordBoundExceeded { needed: usize, bound: usize },
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Auto(#[from] AutoError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    #[serde(rename = "pipeline")]
    Pipeline,
    #[serde(rename = "fallback-search")]
    FallbackSearch,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

/// Outcome of a witness operation: the serialized witness plus the list of
/// re-verified postconditions. All checks in a returned report pass.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub operation: String,
    pub inputs: Value,
    pub witness: Value,
    pub checks: Vec<Check>,
    pub stage_used: usize,
    pub method: Method,
}

impl WitnessReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "operation": self.operation,
            "inputs": self.inputs,
            "witness": self.witness,
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass})).collect::<Vec<_>>(),
            "stage_used": self.stage_used,
            "method": self.method,
        })
    }
}

fn sorted_dedup(set: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// The families whose ages have the strong amalgamation property and are
/// supported by the copy procedures.
fn has_sap(f: Family) -> bool {
    matches!(
        f,
        Family::PureSet
            | Family::Rationals
            | Family::RandomGraph
            | Family::Henson(_)
            | Family::RandomTournament
    )
}

const CANDIDATE_BUDGET: usize = 10_000;

/// Find a copy of the substructure on `a` whose image is disjoint from its
/// image under `h`, built one point at a time: each new point must realize
/// the base relations to the points already placed, avoid the current copy's
/// h-image, keep its own h-image outside the copy, and not be h-fixed.
/// The returned embedding maps the induced structure on `a` (vertices in
/// sorted order) into the base-level stage, and is re-verified.
pub fn disjoint_copy(
    f: &LimitHandle,
    h: &AutoHandle,
    a: &[usize],
) -> Result<(Embedding, WitnessReport), WitnessError> {
    if !has_sap(f.spec().family) {
        return Err(WitnessError::Precondition(format!(
            "family {} is not certified for strong amalgamation",
            f.spec().family.name()
        )));
    }
    if h.fixed_point_bound().is_none() {
        return Err(WitnessError::Precondition(
            "automorphism does not certify finitely many fixed points".into(),
        ));
    }
    let a = sorted_dedup(a);
    if let Some(&max) = a.last() {
        f.ensure(max + 1)?;
    }
    let mut pairs: BTreeMap<usize, usize> = BTreeMap::new();
    let mut tilde: Vec<usize> = Vec::new();
    let mut h_tilde: Vec<usize> = Vec::new();
    let mut attempts = 0usize;
    for &av in &a {
        let req = image_request(f, Level::Base, &pairs, av, false, false)?;
        let mut found = None;
        // Existing vertices first, ascending; then fresh constrained points.
        let snapshot = f.stage_size();
        let try_candidate = |x: usize| -> Result<bool, WitnessError> {
            if tilde.contains(&x) {
                return Ok(false);
            }
            let hx = h.image(x)?;
            if hx == x || tilde.contains(&hx) || h_tilde.contains(&x) {
                return Ok(false);
            }
            Ok(true)
        };
        for x in 0..snapshot {
            attempts += 1;
            if attempts > CANDIDATE_BUDGET {
                return Err(WitnessError::BudgetExceeded(format!(
                    "{CANDIDATE_BUDGET} candidates tried"
                )));
            }
            if !f.matches_request(x, &req)? {
                continue;
            }
            if try_candidate(x)? {
                found = Some(x);
                break;
            }
        }
        while found.is_none() {
            attempts += 1;
            if attempts > CANDIDATE_BUDGET {
                return Err(WitnessError::BudgetExceeded(format!(
                    "{CANDIDATE_BUDGET} candidates tried"
                )));
            }
            let x = f.extend_with(&req)?;
            if try_candidate(x)? {
                found = Some(x);
            }
        }
        let x = found.expect("loop exits only with a candidate");
        pairs.insert(av, x);
        h_tilde.push(h.image(x)?);
        tilde.push(x);
    }

    // Re-verify: the copy is isomorphic to A via the map, and disjoint from
    // its h-image.
    let stage = f.stage_at(f.stage_size(), Level::Base)?;
    let (a_struct, _) = stage.induced(&a)?;
    let emb = Embedding { dom: a_struct, cod: stage, map: tilde.clone() };
    let iso_ok = emb.verify();
    let mut disjoint_ok = true;
    for &x in &tilde {
        if h_tilde.contains(&x) {
            disjoint_ok = false;
        }
    }
    let checks = vec![
        Check { name: "image is a copy of A".into(), pass: iso_ok },
        Check { name: "image disjoint from its h-image".into(), pass: disjoint_ok },
    ];
    if !(iso_ok && disjoint_ok) {
        return Err(WitnessError::SearchExhausted("disjoint copy failed verification".into()));
    }
    let report = WitnessReport {
        operation: "disjoint-copy".into(),
        inputs: json!({"set": a, "auto": h.kind().name(), "family": f.spec().family.name()}),
        witness: json!({"image": tilde, "h_image": h_tilde}),
        checks,
        stage_used: f.stage_size(),
        method: Method::Pipeline,
    };
    Ok((emb, report))
}

/// One transport block: a set of vertices and the same vertices listed in
/// the intended ascending target order.
pub type Block = (Vec<usize>, Vec<usize>);

fn validate_blocks(blocks: &[Block]) -> Result<(), WitnessError> {
    let mut seen = std::collections::BTreeSet::new();
    for (set, target) in blocks {
        let s = sorted_dedup(set);
        let mut t = target.clone();
        t.sort_unstable();
        t.dedup();
        if s != t {
            return Err(WitnessError::Precondition(
                "target order must list exactly the block's vertices".into(),
            ));
        }
        for &v in &s {
            if !seen.insert(v) {
                return Err(WitnessError::Precondition(format!("blocks overlap at {v}")));
            }
        }
    }
    Ok(())
}

/// A base-level partial isomorphism whose images realize, per block, the
/// prescribed target order (earlier in the target list = smaller). Images
/// are placed block after block, each above everything before it, so cross-
/// block order follows the block sequence. Built on the free-order carriers.
pub fn order_transport(
    f: &LimitHandle,
    blocks: &[Block],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    let fam = f.spec().family;
    if !(matches!(
        fam,
        Family::PureSet | Family::RandomGraph | Family::Henson(_) | Family::RandomTournament
    ) && f.spec().expansion == Expansion::Order)
    {
        return Err(WitnessError::Precondition(format!(
            "order transport needs a free order expansion, got {} / {:?}",
            fam.name(),
            f.spec().expansion
        )));
    }
    validate_blocks(blocks)?;
    let mut pairs: BTreeMap<usize, usize> = BTreeMap::new();
    let mut first = true;
    for (_, target) in blocks {
        for &v in target {
            f.ensure(v + 1)?;
            let mut req = image_request(f, Level::Base, &pairs, v, false, false)?;
            req.order_slot = if first { None } else { Some(OrderSlot::AboveAll) };
            first = false;
            let w = f.extend_with(&req)?;
            pairs.insert(v, w);
        }
    }
    let pair_list: Vec<(usize, usize)> = pairs.iter().map(|(&v, &w)| (v, w)).collect();
    let k = PartialAuto::new(f, Level::Base, &pair_list)?;
    // Re-verify the per-block order condition on every pair.
    let mut order_ok = true;
    for (_, target) in blocks {
        for i in 0..target.len() {
            for j in (i + 1)..target.len() {
                let wi = k.image(target[i]).expect("mapped");
                let wj = k.image(target[j]).expect("mapped");
                if f.coord(wi)? >= f.coord(wj)? {
                    order_ok = false;
                }
            }
        }
    }
    let checks = vec![
        Check { name: "images realize each block's target order".into(), pass: order_ok },
        Check { name: "map is a base-level partial isomorphism".into(), pass: true },
    ];
    if !order_ok {
        return Err(WitnessError::SearchExhausted("order transport failed verification".into()));
    }
    let report = WitnessReport {
        operation: "order-transport".into(),
        inputs: json!({
            "blocks": blocks.iter().map(|(s, t)| json!({"set": s, "target": t})).collect::<Vec<_>>(),
        }),
        witness: json!({"pairs": pair_list}),
        checks,
        stage_used: f.stage_size(),
        method: Method::Pipeline,
    };
    Ok((k, report))
}

fn certify_order_reversing(
    f: &LimitHandle,
    sigma: &AutoHandle,
    sample: &[usize],
) -> Result<bool, WitnessError> {
    for (i, &v) in sample.iter().enumerate() {
        for &w in sample.iter().skip(i + 1) {
            let before = f.coord(v)? < f.coord(w)?;
            let after = f.coord(sigma.image(v)?)? < f.coord(sigma.image(w)?)?;
            if before == after {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Conjugation data produced by [`conjugate_order_preserving`] and
/// [`s2_conjugate_parts`]: the conjugating map g (level base) on the window
/// copy plus its sigma-image, with enough bookkeeping to evaluate g sigma
/// g^{-1} on the input set.
struct ConjugateParts {
    g: PartialAuto,
    /// Per input vertex: (copy point, sigma of copy point, conjugate image).
    trace: Vec<(usize, usize, usize)>,
}

/// Pipeline shared by the order and part conjugation procedures: given the
/// copy points and the transported map k together with the target images of
/// k over the copy, extend a star-level map j over k's sigma-side images and
/// assemble g = j after k.
fn assemble_conjugate(
    f: &LimitHandle,
    a: &[usize],
    tilde: &[usize],
    sigma_tilde: &[usize],
    k: &PartialAuto,
) -> Result<ConjugateParts, WitnessError> {
    let mut j0_pairs = Vec::new();
    for (idx, &av) in a.iter().enumerate() {
        let kt = k
            .image(tilde[idx])
            .ok_or_else(|| WitnessError::SearchExhausted("k misses a copy point".into()))?;
        j0_pairs.push((kt, av));
    }
    let j0 = PartialAuto::new(f, Level::Star, &j0_pairs)?;
    let want: Vec<usize> = sigma_tilde
        .iter()
        .map(|&s| {
            k.image(s).ok_or_else(|| WitnessError::SearchExhausted("k misses a sigma point".into()))
        })
        .collect::<Result<_, _>>()?;
    let j = backforth_extend(&j0, &want, &[])?;
    let mut g_pairs = Vec::new();
    let mut trace = Vec::new();
    for (idx, &av) in a.iter().enumerate() {
        g_pairs.push((tilde[idx], av));
        let ks = k.image(sigma_tilde[idx]).expect("extended above");
        let img = j
            .image(ks)
            .ok_or_else(|| WitnessError::SearchExhausted("j misses a transported point".into()))?;
        g_pairs.push((sigma_tilde[idx], img));
        trace.push((tilde[idx], sigma_tilde[idx], img));
    }
    let g = PartialAuto::new(f, Level::Base, &g_pairs)?;
    Ok(ConjugateParts { g, trace })
}

/// Witness that the order-reversing `sigma` becomes order-preserving on `a`
/// after conjugation: returns g with g sigma g^{-1} strictly increasing on
/// `a`, re-verified pointwise. Pipeline: disjoint copy, order transport with
/// the pulled-back target orders, then a star-level map sending the
/// transported copy back onto `a`. Falls back to a direct construction that
/// builds the copy and the conjugate images from scratch.
pub fn conjugate_order_preserving(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    if !has_sap(f.spec().family) || f.spec().expansion != Expansion::Order {
        return Err(WitnessError::Precondition(
            "carrier must be a strong-amalgamation family with an order expansion".into(),
        ));
    }
    match sigma.fixed_point_bound() {
        Some(b) if b <= 1 => {}
        _ => {
            return Err(WitnessError::Precondition(
                "sigma must certify at most one fixed point".into(),
            ))
        }
    }
    let a = sorted_dedup(a);
    if let Some(&max) = a.last() {
        f.ensure(max + 1)?;
    }
    if !certify_order_reversing(f, sigma, &a)? {
        return Err(WitnessError::Precondition("sigma is not order-reversing on the set".into()));
    }
    match conjugate_pipeline(f, sigma, &a) {
        Ok(out) => Ok(out),
        Err(first) => conjugate_fallback(f, sigma, &a)
            .map_err(|second| WitnessError::SearchExhausted(format!("{first}; {second}"))),
    }
}

fn coord_rank_order(f: &LimitHandle, vs: &[usize]) -> Result<Vec<usize>, WitnessError> {
    // Indices into vs sorted by coordinate.
    let mut idx: Vec<usize> = (0..vs.len()).collect();
    let coords: Vec<_> = vs.iter().map(|&v| f.coord(v)).collect::<Result<_, _>>()?;
    idx.sort_by(|&i, &j| coords[i].cmp(&coords[j]));
    Ok(idx)
}

fn conjugate_pipeline(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    let (iota, _) = disjoint_copy(f, sigma, a)?;
    let tilde = iota.map.clone();
    let sigma_tilde: Vec<usize> =
        tilde.iter().map(|&t| sigma.image(t)).collect::<Result<_, _>>()?;
    for &s in &sigma_tilde {
        if tilde.contains(&s) {
            return Err(WitnessError::SearchExhausted("copy meets its sigma image".into()));
        }
    }
    // Pulled-back targets: both blocks ordered by the coordinates of a.
    let rank = coord_rank_order(f, a)?;
    let tilde_target: Vec<usize> = rank.iter().map(|&i| tilde[i]).collect();
    let sigma_target: Vec<usize> = rank.iter().map(|&i| sigma_tilde[i]).collect();
    let (k, _) = order_transport(
        f,
        &[(tilde.clone(), tilde_target), (sigma_tilde.clone(), sigma_target)],
    )?;
    let parts = assemble_conjugate(f, a, &tilde, &sigma_tilde, &k)?;
    finish_order_conjugate(f, a, parts, Method::Pipeline)
}

/// Direct construction: a fresh copy of the window ordered like `a`, its
/// sigma image, and fresh ascending images for the sigma side constrained to
/// make g a partial isomorphism jointly.
fn conjugate_fallback(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    for spacer in 0..8 {
        // Shift the construction window deterministically between attempts.
        for _ in 0..spacer {
            let _ = f.extend_with(&ExtensionRequest::new().slot(OrderSlot::AboveAll))?;
        }
        match conjugate_fallback_once(f, sigma, a) {
            Ok(out) => return Ok(out),
            Err(_) => continue,
        }
    }
    Err(WitnessError::SearchExhausted("direct construction exhausted its attempts".into()))
}

fn conjugate_fallback_once(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    // Fresh copy x of the a-window (same base pattern, same coordinate
    // order), placed point by point.
    let rank = coord_rank_order(f, a)?;
    let mut pairs: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &rank {
        let mut req = image_request(f, Level::Base, &pairs, a[i], false, false)?;
        req.order_slot = Some(OrderSlot::AboveAll);
        let x = f.extend_with(&req)?;
        pairs.insert(a[i], x);
    }
    let xs: Vec<usize> = a.iter().map(|&av| pairs[&av]).collect();
    let zs: Vec<usize> = xs.iter().map(|&x| sigma.image(x)).collect::<Result<_, _>>()?;
    for &z in &zs {
        if xs.contains(&z) || a.contains(&z) {
            return Err(WitnessError::SearchExhausted("sigma image collides with window".into()));
        }
    }
    // Fresh ascending images y for the sigma side; constraints make
    // (x -> a, z -> y) jointly a base partial isomorphism.
    let mut g_pairs: Vec<(usize, usize)> = Vec::new();
    for (idx, &av) in a.iter().enumerate() {
        g_pairs.push((xs[idx], av));
    }
    let mut ys: Vec<Option<usize>> = vec![None; a.len()];
    for &i in &rank {
        let mut partial: BTreeMap<usize, usize> = g_pairs.iter().copied().collect();
        for (idx, y) in ys.iter().enumerate() {
            if let Some(y) = y {
                partial.insert(zs[idx], *y);
            }
        }
        let mut req = image_request(f, Level::Base, &partial, zs[i], false, false)?;
        req.order_slot = Some(OrderSlot::AboveAll);
        let y = f.extend_with(&req)?;
        ys[i] = Some(y);
    }
    let mut trace = Vec::new();
    for (idx, y) in ys.iter().enumerate() {
        let y = y.expect("all built");
        g_pairs.push((zs[idx], y));
        trace.push((xs[idx], zs[idx], y));
    }
    let g = PartialAuto::new(f, Level::Base, &g_pairs)?;
    finish_order_conjugate(f, a, ConjugateParts { g, trace }, Method::FallbackSearch)
}

fn finish_order_conjugate(
    f: &LimitHandle,
    a: &[usize],
    parts: ConjugateParts,
    method: Method,
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    // g sigma g^{-1} on a: strictly increasing, evaluated exactly.
    let mut increasing = true;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if i == j {
                continue;
            }
            let before = f.coord(a[i])? < f.coord(a[j])?;
            let after = f.coord(parts.trace[i].2)? < f.coord(parts.trace[j].2)?;
            if before != after {
                increasing = false;
            }
        }
    }
    let ginv_ok = a.iter().enumerate().all(|(i, &av)| parts.g.image(parts.trace[i].0) == Some(av));
    let checks = vec![
        Check { name: "conjugate is strictly increasing on the set".into(), pass: increasing },
        Check { name: "g maps the copy onto the set".into(), pass: ginv_ok },
    ];
    if !(increasing && ginv_ok) {
        return Err(WitnessError::SearchExhausted("conjugate failed verification".into()));
    }
    let report = WitnessReport {
        operation: "conjugate-order-preserving".into(),
        inputs: json!({"set": a, "family": f.spec().family.name()}),
        witness: json!({
            "g": parts.g.pairs(),
            "conjugate_on_set": parts.trace.iter().map(|t| t.2).collect::<Vec<_>>(),
        }),
        checks,
        stage_used: f.stage_size(),
        method,
    };
    Ok((parts.g, report))
}

fn require_s2(f: &LimitHandle) -> Result<(), WitnessError> {
    if f.spec().family != Family::S2 || f.spec().expansion != Expansion::OrderParts {
        return Err(WitnessError::Precondition(
            "operation is defined on the dense local order with its part expansion".into(),
        ));
    }
    Ok(())
}

fn certify_swaps(
    f: &LimitHandle,
    sigma: &AutoHandle,
    sample: &[usize],
) -> Result<(), WitnessError> {
    if sigma.fixed_point_bound() != Some(0) {
        return Err(WitnessError::Precondition("sigma must certify no fixed points".into()));
    }
    if !sample.is_empty() && preserves_parts(sigma, f, sample)? != PartClass::Swaps {
        return Err(WitnessError::Precondition("sigma must swap the parts on the sample".into()));
    }
    // Order preservation on the sample.
    for (i, &v) in sample.iter().enumerate() {
        for &w in sample.iter().skip(i + 1) {
            let before = f.coord(v)? < f.coord(w)?;
            let after = f.coord(sigma.image(v)?)? < f.coord(sigma.image(w)?)?;
            if before != after {
                return Err(WitnessError::Precondition(
                    "sigma is not order-preserving on the sample".into(),
                ));
            }
        }
    }
    Ok(())
}

/// A star-level copy of the substructure on `a` that is completely below or
/// completely above its sigma image, built by the increasing one-point
/// procedure: each next point lands strictly between the copy's maximum and
/// the sigma image's minimum (or symmetrically below). Re-verified exactly
/// on coordinates.
pub fn s2_monotone_copy(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(Embedding, WitnessReport), WitnessError> {
    require_s2(f)?;
    let a = sorted_dedup(a);
    if let Some(&max) = a.last() {
        f.ensure(max + 1)?;
    }
    certify_swaps(f, sigma, &a)?;
    // Enumerate a in increasing coordinate order.
    let rank = coord_rank_order(f, &a)?;
    let mut built: Vec<usize> = Vec::new(); // copy points, ascending
    let mut sigma_built: Vec<usize> = Vec::new();
    let mut below: Option<bool> = None; // copy below its sigma image?
    for (step, &i) in rank.iter().enumerate() {
        let part = f.part(a[i])? as usize;
        let x = if step == 0 {
            f.extend_with(&ExtensionRequest::new().in_part(part))?
        } else if below == Some(true) {
            // between max(copy) and min(sigma copy)
            let lo = *built.last().expect("nonempty");
            let hi = sigma_built[0];
            f.extend_with(
                &ExtensionRequest::new().in_part(part).slot(OrderSlot::Between(lo, hi)),
            )?
        } else {
            // sigma copy entirely below: pick y between max(sigma copy) and
            // min(copy), in the opposite part, and take its sigma preimage.
            let lo = *sigma_built.last().expect("nonempty");
            let hi = built[0];
            let y = f.extend_with(
                &ExtensionRequest::new().in_part(part ^ 1).slot(OrderSlot::Between(lo, hi)),
            )?;
            sigma.preimage(y)?
        };
        let sx = sigma.image(x)?;
        if step == 0 {
            below = Some(f.coord(x)? < f.coord(sx)?);
        }
        built.push(x);
        sigma_built.push(sx);
        // The separation invariant must survive every step.
        let max_copy = built.iter().map(|&v| f.coord(v)).collect::<Result<Vec<_>, _>>()?;
        let min_sigma = sigma_built.iter().map(|&v| f.coord(v)).collect::<Result<Vec<_>, _>>()?;
        let copy_max = max_copy.iter().max().expect("nonempty");
        let copy_min = max_copy.iter().min().expect("nonempty");
        let sig_max = min_sigma.iter().max().expect("nonempty");
        let sig_min = min_sigma.iter().min().expect("nonempty");
        let separated =
            if below == Some(true) { copy_max < sig_min } else { sig_max < copy_min };
        if !separated {
            return Err(WitnessError::SearchExhausted(format!(
                "separation invariant broke at step {step}"
            )));
        }
    }
    // Assemble the embedding: position of a[i] (index order) -> its copy.
    let mut map = vec![0usize; a.len()];
    for (step, &i) in rank.iter().enumerate() {
        map[i] = built[step];
    }
    let stage = f.stage_at(f.stage_size(), Level::Star)?;
    let (a_struct, _) = stage.induced(&a)?;
    let iso_ok = if a.is_empty() {
        true
    } else {
        is_embedding(&map, &a_struct, &stage)?
    };
    let mut separated_ok = true;
    if !a.is_empty() {
        let copy_coords = built.iter().map(|&v| f.coord(v)).collect::<Result<Vec<_>, _>>()?;
        let sig_coords = sigma_built.iter().map(|&v| f.coord(v)).collect::<Result<Vec<_>, _>>()?;
        let cmax = copy_coords.iter().max().unwrap();
        let cmin = copy_coords.iter().min().unwrap();
        let smax = sig_coords.iter().max().unwrap();
        let smin = sig_coords.iter().min().unwrap();
        separated_ok = cmax < smin || smax < cmin;
    }
    let checks = vec![
        Check { name: "image is a star-level copy of A".into(), pass: iso_ok },
        Check { name: "copy and its sigma image are order-separated".into(), pass: separated_ok },
    ];
    if !(iso_ok && separated_ok) {
        return Err(WitnessError::SearchExhausted("monotone copy failed verification".into()));
    }
    let emb = Embedding { dom: a_struct, cod: stage, map };
    let report = WitnessReport {
        operation: "s2-monotone-copy".into(),
        inputs: json!({"set": a}),
        witness: json!({"image": built, "sigma_image": sigma_built}),
        checks,
        stage_used: f.stage_size(),
        method: Method::Pipeline,
    };
    Ok((emb, report))
}

/// A base-level partial isomorphism of S(2) that keeps both parts on `a0`
/// and exchanges them on `a1`. Requires the blocks to be order-separated;
/// images are placed with the originally higher block below, which reverses
/// exactly the cross pairs and so preserves every arc.
pub fn s2_part_split(
    f: &LimitHandle,
    a0: &[usize],
    a1: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    require_s2(f)?;
    let a0 = sorted_dedup(a0);
    let a1 = sorted_dedup(a1);
    if a0.iter().any(|v| a1.contains(v)) {
        return Err(WitnessError::Precondition("blocks overlap".into()));
    }
    for &v in a0.iter().chain(a1.iter()) {
        f.ensure(v + 1)?;
    }
    // Order separation.
    let c0: Vec<_> = a0.iter().map(|&v| f.coord(v)).collect::<Result<_, _>>()?;
    let c1: Vec<_> = a1.iter().map(|&v| f.coord(v)).collect::<Result<_, _>>()?;
    let a0_below = match (c0.iter().max(), c1.iter().min()) {
        (Some(m0), Some(m1)) => {
            if m0 < m1 {
                true
            } else if c1.iter().max().unwrap() < c0.iter().min().unwrap() {
                false
            } else {
                return Err(WitnessError::Precondition(
                    "blocks are not order-separated".into(),
                ));
            }
        }
        // An empty block is trivially separated.
        _ => true,
    };
    // Build images: the originally higher block first (lowest images), each
    // block in its own ascending order, parts kept on a0 and flipped on a1.
    let rank0 = coord_rank_order(f, &a0)?;
    let rank1 = coord_rank_order(f, &a1)?;
    let seq: Vec<(usize, bool)> = if a0_below {
        rank1.iter().map(|&i| (a1[i], true)).chain(rank0.iter().map(|&i| (a0[i], false))).collect()
    } else {
        rank0.iter().map(|&i| (a0[i], false)).chain(rank1.iter().map(|&i| (a1[i], true))).collect()
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut first = true;
    for (v, flip) in seq {
        let part = f.part(v)? as usize;
        let part = if flip { part ^ 1 } else { part };
        let mut req = ExtensionRequest::new().in_part(part);
        if !first {
            req = req.slot(OrderSlot::AboveAll);
        }
        first = false;
        let w = f.extend_with(&req)?;
        pairs.push((v, w));
    }
    let k = PartialAuto::new(f, Level::Base, &pairs)?;
    // Re-verify the part conditions; arc preservation was validated by the
    // partial-isomorphism constructor.
    let mut parts_ok = true;
    for &v in &a0 {
        if f.part(k.image(v).expect("mapped"))? != f.part(v)? {
            parts_ok = false;
        }
    }
    for &v in &a1 {
        if f.part(k.image(v).expect("mapped"))? == f.part(v)? {
            parts_ok = false;
        }
    }
    let checks = vec![
        Check { name: "parts kept on the first block, swapped on the second".into(), pass: parts_ok },
        Check { name: "map is an arc-preserving partial isomorphism".into(), pass: true },
    ];
    if !parts_ok {
        return Err(WitnessError::SearchExhausted("part split failed verification".into()));
    }
    let report = WitnessReport {
        operation: "s2-part-split".into(),
        inputs: json!({"a0": a0, "a1": a1}),
        witness: json!({"pairs": k.pairs()}),
        checks,
        stage_used: f.stage_size(),
        method: Method::Pipeline,
    };
    Ok((k, report))
}

/// Witness that the part-swapping `sigma` becomes part-preserving on `a`
/// after conjugation: g sigma g^{-1} keeps the part of every point of `a`,
/// re-verified pointwise. Pipeline: monotone copy, part split over (copy,
/// sigma copy), star-level return map; with a direct fallback construction.
pub fn s2_conjugate_parts(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    require_s2(f)?;
    let a = sorted_dedup(a);
    if let Some(&max) = a.last() {
        f.ensure(max + 1)?;
    }
    certify_swaps(f, sigma, &a)?;
    match s2_conjugate_pipeline(f, sigma, &a) {
        Ok(out) => Ok(out),
        Err(first) => s2_conjugate_fallback(f, sigma, &a)
            .map_err(|second| WitnessError::SearchExhausted(format!("{first}; {second}"))),
    }
}

fn s2_conjugate_pipeline(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    let (emb, _) = s2_monotone_copy(f, sigma, a)?;
    let tilde = emb.map.clone();
    let sigma_tilde: Vec<usize> =
        tilde.iter().map(|&t| sigma.image(t)).collect::<Result<_, _>>()?;
    let (k, _) = s2_part_split(f, &tilde, &sigma_tilde)?;
    let parts = assemble_conjugate(f, a, &tilde, &sigma_tilde, &k)?;
    finish_part_conjugate(f, a, parts, Method::Pipeline)
}

/// Direct construction for the part conjugate: a fresh star copy of the
/// window, its sigma image, and part-correct images for the sigma side feet,
/// all constrained jointly.
fn s2_conjugate_fallback(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    for spacer in 0..8 {
        for _ in 0..spacer {
            let _ = f.extend_with(&ExtensionRequest::new().slot(OrderSlot::AboveAll))?;
        }
        match s2_conjugate_fallback_once(f, sigma, a) {
            Ok(out) => return Ok(out),
            Err(_) => continue,
        }
    }
    Err(WitnessError::SearchExhausted("direct construction exhausted its attempts".into()))
}

fn s2_conjugate_fallback_once(
    f: &LimitHandle,
    sigma: &AutoHandle,
    a: &[usize],
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    // Fresh star copy of the window, ascending like a.
    let rank = coord_rank_order(f, a)?;
    let mut star_pairs: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &rank {
        let mut req = image_request(f, Level::Star, &star_pairs, a[i], false, false)?;
        req.order_slot = Some(OrderSlot::AboveAll);
        let x = f.extend_with(&req)?;
        star_pairs.insert(a[i], x);
    }
    let xs: Vec<usize> = a.iter().map(|&av| star_pairs[&av]).collect();
    let zs: Vec<usize> = xs.iter().map(|&x| sigma.image(x)).collect::<Result<_, _>>()?;
    for &z in &zs {
        if xs.contains(&z) || a.contains(&z) {
            return Err(WitnessError::SearchExhausted("sigma image collides with window".into()));
        }
    }
    let mut g_pairs: Vec<(usize, usize)> = Vec::new();
    for (idx, &av) in a.iter().enumerate() {
        g_pairs.push((xs[idx], av));
    }
    // Images for the sigma side: arcs constrained jointly with the part of
    // the original point demanded back.
    let mut ys: Vec<Option<usize>> = vec![None; a.len()];
    for &i in &rank {
        let mut partial: BTreeMap<usize, usize> = g_pairs.iter().copied().collect();
        for (idx, y) in ys.iter().enumerate() {
            if let Some(y) = y {
                partial.insert(zs[idx], *y);
            }
        }
        let mut req = image_request(f, Level::Base, &partial, zs[i], false, false)?;
        req.part = Some(f.part(a[i])? as usize);
        req.order_slot = None;
        let y = f.extend_with(&req)?;
        ys[i] = Some(y);
    }
    let mut trace = Vec::new();
    for (idx, y) in ys.iter().enumerate() {
        let y = y.expect("all built");
        g_pairs.push((zs[idx], y));
        trace.push((xs[idx], zs[idx], y));
    }
    let g = PartialAuto::new(f, Level::Base, &g_pairs)?;
    finish_part_conjugate(f, a, ConjugateParts { g, trace }, Method::FallbackSearch)
}

fn finish_part_conjugate(
    f: &LimitHandle,
    a: &[usize],
    parts: ConjugateParts,
    method: Method,
) -> Result<(PartialAuto, WitnessReport), WitnessError> {
    let mut parts_ok = true;
    for (i, &av) in a.iter().enumerate() {
        if f.part(parts.trace[i].2)? != f.part(av)? {
            parts_ok = false;
        }
    }
    let ginv_ok = a.iter().enumerate().all(|(i, &av)| parts.g.image(parts.trace[i].0) == Some(av));
    let checks = vec![
        Check { name: "conjugate preserves the part of every point".into(), pass: parts_ok },
        Check { name: "g maps the copy onto the set".into(), pass: ginv_ok },
    ];
    if !(parts_ok && ginv_ok) {
        return Err(WitnessError::SearchExhausted("part conjugate failed verification".into()));
    }
    let report = WitnessReport {
        operation: "s2-conjugate-parts".into(),
        inputs: json!({"set": a}),
        witness: json!({
            "g": parts.g.pairs(),
            "conjugate_on_set": parts.trace.iter().map(|t| t.2).collect::<Vec<_>>(),
        }),
        checks,
        stage_used: f.stage_size(),
        method,
    };
    Ok((parts.g, report))
}

/// A product of conjugates g_i s_i g_i^{-1} with every g_i a base-level and
/// every s_i a star-level partial isomorphism, evaluated on finite windows.
/// `factors[0]` is applied last.
#[derive(Debug, Clone)]
pub struct ConjugationWord {
    pub factors: Vec<(PartialAuto, PartialAuto)>,
}

impl ConjugationWord {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Evaluate the word at a vertex; `None` when some factor is undefined
    /// there.
    pub fn evaluate(&self, v: usize) -> Option<usize> {
        let mut x = v;
        for (g, s) in self.factors.iter().rev() {
            let pre = g.preimage(x)?;
            let mid = s.image(pre)?;
            x = g.image(mid)?;
        }
        Some(x)
    }

    /// Does the word agree with the target on the target's whole domain?
    pub fn agrees_with(&self, target: &PartialAuto) -> bool {
        target.pairs().iter().all(|&(v, w)| self.evaluate(v) == Some(w))
    }

    pub fn to_json(&self) -> Value {
        json!(self
            .factors
            .iter()
            .map(|(g, s)| json!({"g": g.pairs(), "s": s.pairs()}))
            .collect::<Vec<_>>())
    }
}

/// Families supported by the conjugation factorization: base relations and
/// the star data must be independently realizable.
fn factor_supported(f: &LimitHandle) -> bool {
    matches!(
        (f.spec().family, f.spec().expansion),
        (Family::PureSet, Expansion::Order)
            | (Family::RandomGraph | Family::Henson(_) | Family::RandomTournament, Expansion::Order)
            | (Family::Rationals, _)
            | (Family::InKinf(_), Expansion::OrderParts)
    )
}

/// Express a base-level partial isomorphism whose domain and image are
/// disjoint as a single conjugate g s g^{-1}: build a fresh copy of the
/// combined (domain + image) pattern, with the image half shaped so that
/// half-to-half is star-valid, and let g carry the copy onto the original.
fn factor_one(
    f: &LimitHandle,
    t: &PartialAuto,
) -> Result<(PartialAuto, PartialAuto), WitnessError> {
    let dom = t.domain();
    let m = dom.len();
    let mut ws: Vec<usize> = dom.clone();
    for &d in &dom {
        ws.push(t.image(d).expect("in domain"));
    }
    // Build u_k as a fresh base copy of the combined pattern; for k >= m the
    // point also satisfies the star constraints tying it to its mate u_{k-m}.
    let mut us: Vec<usize> = Vec::new();
    for (k, &wk) in ws.iter().enumerate() {
        let req = if k < m {
            // Base relations to the previously built points.
            let pattern: BTreeMap<usize, usize> =
                ws.iter().take(k).copied().zip(us.iter().copied()).collect();
            image_request(f, Level::Base, &pattern, wk, false, false)?
        } else {
            // Star request relative to the mates built so far...
            let mates: BTreeMap<usize, usize> = (0..(k - m))
                .map(|j| (us[j], us[m + j]))
                .collect();
            let mut req = image_request(f, Level::Star, &mates, us[k - m], false, false)?;
            // ...merged with the base relations of the combined pattern.
            let pattern: BTreeMap<usize, usize> =
                ws.iter().take(k).copied().zip(us.iter().copied()).collect();
            let base = image_request(f, Level::Base, &pattern, wk, false, false)?;
            req.adjacent_to.extend(base.adjacent_to);
            req.nonadjacent_to.extend(base.nonadjacent_to);
            req.arc_from.extend(base.arc_from);
            req.arc_to.extend(base.arc_to);
            if !req.adjacent_to.is_disjoint(&req.nonadjacent_to)
                || !req.arc_from.is_disjoint(&req.arc_to)
            {
                return Err(WitnessError::SearchExhausted(
                    "star shaping conflicts with the base pattern".into(),
                ));
            }
            req
        };
        let u = f.extend_with(&req)?;
        us.push(u);
    }
    let g_pairs: Vec<(usize, usize)> = us.iter().copied().zip(ws.iter().copied()).collect();
    let g = PartialAuto::new(f, Level::Base, &g_pairs)?;
    let s_pairs: Vec<(usize, usize)> = (0..m).map(|j| (us[j], us[m + j])).collect();
    let s = PartialAuto::new(f, Level::Star, &s_pairs)?;
    Ok((g, s))
}

/// Factor a base-level partial isomorphism as a short product of conjugates
/// of star-level maps, verified by evaluating the word on the target's
/// domain. Star-valid targets give a one-factor word with g the identity;
/// targets with domain disjoint from image give one genuine conjugate; the
/// general case routes through a fresh intermediate copy, giving length two.
pub fn factor_via_conjugates(
    f: &LimitHandle,
    target: &PartialAuto,
    max_word: usize,
) -> Result<(ConjugationWord, WitnessReport), WitnessError> {
    if !factor_supported(f) {
        return Err(WitnessError::Precondition(format!(
            "factorization not supported for {} with {:?}",
            f.spec().family.name(),
            f.spec().expansion
        )));
    }
    target.validate()?;
    let dom = target.domain();
    if dom.is_empty() {
        let word = ConjugationWord { factors: Vec::new() };
        return finish_factor(f, target, word, max_word);
    }
    // Already star-valid: one factor with the identity as conjugator.
    if let Ok(s) = PartialAuto::new(f, Level::Star, &target.pairs()) {
        let mut window = dom.clone();
        window.extend(target.range());
        let g = PartialAuto::identity_on(f, Level::Base, &window)?;
        let word = ConjugationWord { factors: vec![(g, s)] };
        return finish_factor(f, target, word, max_word);
    }
    let range = target.range();
    let disjoint = dom.iter().all(|d| !range.contains(d));
    if disjoint {
        let (g, s) = factor_one(f, target)?;
        let word = ConjugationWord { factors: vec![(g, s)] };
        return finish_factor(f, target, word, max_word);
    }
    // Route through a fresh copy of the domain pattern (same named parts on
    // the composite carriers, so both hops stay factorable).
    let mut pairs1: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &dom {
        let mut req = image_request(f, Level::Base, &pairs1, d, false, false)?;
        if matches!(f.spec().family, Family::InKinf(_)) {
            req.part = Some(f.composite_view(d)?.0);
        }
        let u = f.extend_with(&req)?;
        pairs1.insert(d, u);
    }
    let hop: Vec<(usize, usize)> = pairs1.iter().map(|(&d, &u)| (d, u)).collect();
    let t1 = PartialAuto::new(f, Level::Base, &hop)?;
    let t2_pairs: Vec<(usize, usize)> = dom
        .iter()
        .map(|&d| (pairs1[&d], target.image(d).expect("in domain")))
        .collect();
    let t2 = PartialAuto::new(f, Level::Base, &t2_pairs)?;
    let (g1, s1) = factor_one(f, &t1)?;
    let (g2, s2) = factor_one(f, &t2)?;
    let word = ConjugationWord { factors: vec![(g2, s2), (g1, s1)] };
    finish_factor(f, target, word, max_word)
}

fn finish_factor(
    f: &LimitHandle,
    target: &PartialAuto,
    word: ConjugationWord,
    max_word: usize,
) -> Result<(ConjugationWord, WitnessReport), WitnessError> {
    if word.len() > max_word {
        return Err(WitnessError::WordBoundExceeded { needed: word.len(), bound: max_word });
    }
    let agrees = word.agrees_with(target);
    let levels_ok = word.factors.iter().all(|(g, s)| {
        g.validate().is_ok()
            && s.validate().is_ok()
            && PartialAuto::new(f, Level::Star, &s.pairs()).is_ok()
    });
    let checks = vec![
        Check { name: "word evaluates to the target on its domain".into(), pass: agrees },
        Check { name: "every factor is valid at its level".into(), pass: levels_ok },
    ];
    if !(agrees && levels_ok) {
        return Err(WitnessError::SearchExhausted("factorization failed verification".into()));
    }
    let report = WitnessReport {
        operation: "factor-via-conjugates".into(),
        inputs: json!({"target": target.pairs(), "max_word": max_word}),
        witness: word.to_json(),
        checks,
        stage_used: f.stage_size(),
        method: Method::Pipeline,
    };
    Ok((word, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autos::{canonical_auto, AutoKind};
    use crate::limits::LimitSpec;

    fn handle(family: Family, seed: u64, expansion: Expansion) -> LimitHandle {
        LimitHandle::new(LimitSpec::new(family, seed, expansion).unwrap())
    }

    #[test]
    fn disjoint_copy_empty_set() {
        let f = handle(Family::Rationals, 7, Expansion::None);
        f.ensure(4).unwrap();
        let shift = canonical_auto(&f, AutoKind::Shift).unwrap();
        let (emb, report) = disjoint_copy(&f, &shift, &[]).unwrap();
        assert!(emb.map.is_empty());
        assert!(report.all_pass());
    }

    #[test]
    fn disjoint_copy_rationals_shift() {
        let f = handle(Family::Rationals, 7, Expansion::None);
        f.ensure(6).unwrap();
        let shift = canonical_auto(&f, AutoKind::Shift).unwrap();
        let (emb, report) = disjoint_copy(&f, &shift, &[0, 1, 2]).unwrap();
        assert!(report.all_pass());
        assert!(emb.verify());
        for &x in &emb.map {
            let hx = shift.image(x).unwrap();
            assert!(!emb.map.contains(&hx));
        }
    }

    #[test]
    fn disjoint_copy_random_graph_seeded_auto() {
        let f = handle(Family::RandomGraph, 7, Expansion::None);
        f.ensure(10).unwrap();
        let g = canonical_auto(
            &f,
            AutoKind::SeededBackForth { seed: 11, level: Level::Base, fixed_point_free: true },
        )
        .unwrap();
        let (emb, report) = disjoint_copy(&f, &g, &[0, 1, 2, 3]).unwrap();
        assert!(report.all_pass());
        assert!(emb.verify());
    }

    #[test]
    fn disjoint_copy_rejects_s2() {
        let f = handle(Family::S2, 7, Expansion::OrderParts);
        f.ensure(4).unwrap();
        let sw = canonical_auto(&f, AutoKind::PartSwap).unwrap();
        assert!(matches!(
            disjoint_copy(&f, &sw, &[0]),
            Err(WitnessError::Precondition(_))
        ));
    }

    #[test]
    fn order_transport_keep_and_reverse() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(8).unwrap();
        // Block 0 keeps the current order, block 1 reverses it.
        let b0 = vec![0, 1, 2];
        let b1 = vec![3, 4, 5];
        let sort_by_coord = |vs: &[usize]| {
            let mut v = vs.to_vec();
            v.sort_by_key(|&x| f.coord(x).unwrap());
            v
        };
        let t0 = sort_by_coord(&b0);
        let mut t1 = sort_by_coord(&b1);
        t1.reverse();
        let (k, report) =
            order_transport(&f, &[(b0.clone(), t0.clone()), (b1.clone(), t1.clone())]).unwrap();
        assert!(report.all_pass());
        // Keep on block 0.
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let before = f.coord(t0[i]).unwrap() < f.coord(t0[j]).unwrap();
                let after = f.coord(k.image(t0[i]).unwrap()).unwrap()
                    < f.coord(k.image(t0[j]).unwrap()).unwrap();
                assert_eq!(before, after);
            }
        }
        // Reverse on block 1.
        let orig = sort_by_coord(&b1);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let before = f.coord(orig[i]).unwrap() < f.coord(orig[j]).unwrap();
                let after = f.coord(k.image(orig[i]).unwrap()).unwrap()
                    < f.coord(k.image(orig[j]).unwrap()).unwrap();
                assert_eq!(before, !after);
            }
        }
    }

    #[test]
    fn order_transport_preserves_graph_relations() {
        let f = handle(Family::RandomGraph, 7, Expansion::Order);
        f.ensure(6).unwrap();
        let block = vec![0, 1, 2];
        let mut target = block.clone();
        target.sort_by_key(|&x| f.coord(x).unwrap());
        target.reverse();
        let (k, report) = order_transport(&f, &[(block.clone(), target)]).unwrap();
        assert!(report.all_pass());
        for &i in &block {
            for &j in &block {
                if i == j {
                    continue;
                }
                assert_eq!(
                    f.relation(i, j).unwrap().edge,
                    f.relation(k.image(i).unwrap(), k.image(j).unwrap()).unwrap().edge
                );
            }
        }
    }

    #[test]
    fn order_transport_rejects_overlap() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(4).unwrap();
        let r = order_transport(&f, &[(vec![0, 1], vec![0, 1]), (vec![1, 2], vec![1, 2])]);
        assert!(matches!(r, Err(WitnessError::Precondition(_))));
    }

    #[test]
    fn conjugate_order_preserving_pure_set() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(8).unwrap();
        let sigma = canonical_auto(&f, AutoKind::OrderReversal).unwrap();
        let (_, report) = conjugate_order_preserving(&f, &sigma, &[1, 2, 3]).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.method, Method::Pipeline);
    }

    #[test]
    fn conjugate_order_preserving_random_graph() {
        let f = handle(Family::RandomGraph, 7, Expansion::Order);
        f.ensure(8).unwrap();
        let sigma = canonical_auto(&f, AutoKind::OrderReversal).unwrap();
        let (g, report) = conjugate_order_preserving(&f, &sigma, &[0, 2, 4]).unwrap();
        assert!(report.all_pass());
        g.validate().unwrap();
    }

    #[test]
    fn conjugate_single_point() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(4).unwrap();
        let sigma = canonical_auto(&f, AutoKind::OrderReversal).unwrap();
        let (_, report) = conjugate_order_preserving(&f, &sigma, &[2]).unwrap();
        assert!(report.all_pass());
    }

    #[test]
    fn conjugate_fallback_agrees_with_pipeline_postcondition() {
        let f = handle(Family::PureSet, 9, Expansion::Order);
        f.ensure(8).unwrap();
        let sigma = canonical_auto(&f, AutoKind::OrderReversal).unwrap();
        let a = [1, 3, 5];
        let (_, report) = conjugate_fallback(&f, &sigma, &a).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.method, Method::FallbackSearch);
    }

    #[test]
    fn monotone_copy_cases() {
        let f = handle(Family::S2, 7, Expansion::OrderParts);
        f.ensure(10).unwrap();
        let sw = canonical_auto(&f, AutoKind::PartSwap).unwrap();
        for set in [vec![], vec![0], vec![0, 1], vec![0, 1, 2, 3]] {
            let (_, report) = s2_monotone_copy(&f, &sw, &set).unwrap();
            assert!(report.all_pass(), "set {set:?}");
        }
    }

    #[test]
    fn part_split_cases() {
        let f = handle(Family::S2, 7, Expansion::OrderParts);
        f.ensure(8).unwrap();
        // Pick two order-separated singletons.
        let mut idx: Vec<usize> = (0..8).collect();
        idx.sort_by_key(|&v| f.coord(v).unwrap());
        let (lo, hi) = (idx[0], idx[7]);
        let (k, report) = s2_part_split(&f, &[lo], &[hi]).unwrap();
        assert!(report.all_pass());
        assert_eq!(f.part(k.image(lo).unwrap()).unwrap(), f.part(lo).unwrap());
        assert_ne!(f.part(k.image(hi).unwrap()).unwrap(), f.part(hi).unwrap());
        // Empty second block: part-preserving copy.
        let (_, report) = s2_part_split(&f, &[lo, hi], &[]).unwrap();
        assert!(report.all_pass());
        // Interleaved blocks are rejected.
        let mid = idx[4];
        assert!(matches!(
            s2_part_split(&f, &[lo, hi], &[mid]),
            Err(WitnessError::Precondition(_))
        ));
    }

    #[test]
    fn s2_conjugate_parts_small_sets() {
        let f = handle(Family::S2, 7, Expansion::OrderParts);
        f.ensure(10).unwrap();
        let sw = canonical_auto(&f, AutoKind::PartSwap).unwrap();
        for set in [vec![0], vec![0, 1, 2]] {
            let (g, report) = s2_conjugate_parts(&f, &sw, &set).unwrap();
            assert!(report.all_pass(), "set {set:?}");
            g.validate().unwrap();
        }
    }

    #[test]
    fn factor_star_target_is_length_one() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(8).unwrap();
        // An order-preserving pair map is already star-valid.
        let mut idx: Vec<usize> = (0..8).collect();
        idx.sort_by_key(|&v| f.coord(v).unwrap());
        let t = PartialAuto::new(&f, Level::Base, &[(idx[0], idx[1]), (idx[2], idx[3])]).unwrap();
        let (word, report) = factor_via_conjugates(&f, &t, 16).unwrap();
        assert_eq!(word.len(), 1);
        assert!(report.all_pass());
    }

    #[test]
    fn factor_transposition_on_pure_set() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(6).unwrap();
        let t = PartialAuto::new(&f, Level::Base, &[(0, 1), (1, 0)]).unwrap();
        let (word, report) = factor_via_conjugates(&f, &t, 16).unwrap();
        assert!(word.len() <= 2);
        assert!(report.all_pass());
        assert!(word.agrees_with(&t));
    }

    #[test]
    fn factor_word_bound_zero() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(4).unwrap();
        let t = PartialAuto::new(&f, Level::Base, &[(0, 1)]).unwrap();
        assert!(matches!(
            factor_via_conjugates(&f, &t, 0),
            Err(WitnessError::WordBoundExceeded { .. })
        ));
    }

    #[test]
    fn factor_random_graph_target() {
        let f = handle(Family::RandomGraph, 7, Expansion::Order);
        f.ensure(8).unwrap();
        // A transposition of two vertices; valid when they look alike over
        // the empty context, which a two-point domain always does.
        let t = PartialAuto::new(&f, Level::Base, &[(0, 1), (1, 0)]).unwrap();
        let (word, report) = factor_via_conjugates(&f, &t, 16).unwrap();
        assert!(report.all_pass());
        assert!(word.agrees_with(&t));
    }

    #[test]
    fn factor_in_kinf_part_fixing() {
        let f = handle(Family::InKinf(3), 7, Expansion::OrderParts);
        f.ensure(9).unwrap();
        // Map each of three same-part vertices up one inner slot: vertices
        // v and v+3 share a part under round-robin placement.
        let t = PartialAuto::new(&f, Level::Base, &[(0, 3), (1, 4), (2, 5)]).unwrap();
        let (word, report) = factor_via_conjugates(&f, &t, 16).unwrap();
        assert!(report.all_pass());
        assert!(word.agrees_with(&t));
    }

    #[test]
    fn word_evaluation_partiality() {
        let f = handle(Family::PureSet, 7, Expansion::Order);
        f.ensure(4).unwrap();
        let word = ConjugationWord { factors: Vec::new() };
        assert_eq!(word.evaluate(3), Some(3));
        assert!(word.is_empty());
    }
}
