//! Partial automorphisms and lazily realized total automorphisms of the
//! generated limits, built by back-and-forth extension.
//!
//! An [`AutoHandle`] realizes its vertex-image graph on demand. For the
//! closed-form kinds (coordinate negation, coordinate shift) every query is a
//! pure coordinate lookup. The back-and-forth kinds realize images and
//! preimages for all indices up to the queried vertex in index order, so the
//! realized graph depends only on how far the handle has been queried, not on
//! the order of the queries; conflicts are repaired by a canonical ascending
//! scan. Concurrent stage growth from other operations on the same limit can
//! still shift which witnesses are chosen, so reproducibility is guaranteed
//! for identical operation sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_rational::BigRational;
use thiserror::Error;

use crate::limits::{
    Expansion, ExtensionRequest, Family, Level, LimitError, LimitHandle, OrderSlot,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutoError {
    #[error("kind not compatible with family {0}")]
    IncompatibleKind(String),
    #[error("map is not a partial isomorphism at its level: {0}")]
    NotPartialIso(String),
    #[error("vertex {0} not in the domain of the partial map")]
    NotInDomain(usize),
    #[error("arguments must be pairwise distinct")]
    NotDistinct,
    #[error("operation requires family {0}")]
    WrongFamily(String),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Level-relevant relations between an ordered pair of limit vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairProfile {
    pub edge: Option<bool>,
    /// `Some(true)` when the arc runs first -> second.
    pub arc_forward: Option<bool>,
    /// `Some(true)` when the first vertex precedes the second.
    pub before: Option<bool>,
}

fn order_visible(h: &LimitHandle, level: Level) -> bool {
    h.spec().family == Family::Rationals
        || (level == Level::Star && !matches!(h.spec().expansion, Expansion::None))
}

fn parts_visible(h: &LimitHandle, level: Level) -> bool {
    h.spec().family == Family::S2
        && level == Level::Star
        && matches!(h.spec().expansion, Expansion::OrderParts)
}

fn comp_parts_visible(h: &LimitHandle, level: Level) -> bool {
    matches!(h.spec().family, Family::InKinf(_))
        && level == Level::Star
        && matches!(h.spec().expansion, Expansion::OrderParts)
}

/// The quantifier-free relations between `i` and `j` that are visible at the
/// given level.
pub fn pair_profile(
    h: &LimitHandle,
    level: Level,
    i: usize,
    j: usize,
) -> Result<PairProfile, AutoError> {
    let rec = h.relation(i, j)?;
    Ok(PairProfile {
        edge: rec.edge,
        arc_forward: rec.arc.map(|(src, _)| src == i),
        before: if order_visible(h, level) { rec.before } else { None },
    })
}

/// Unary data visible at the given level: the S(2) part and the named
/// composite part.
pub fn point_profile(
    h: &LimitHandle,
    level: Level,
    v: usize,
) -> Result<(Option<u8>, Option<usize>), AutoError> {
    let part = if parts_visible(h, level) { Some(h.part(v)?) } else { None };
    let comp = if comp_parts_visible(h, level) { Some(h.composite_view(v)?.0) } else { None };
    Ok((part, comp))
}

/// Check that mapping `(i, j)` to `(gi, gj)` preserves and reflects every
/// level-visible pair relation.
pub fn pair_matches(
    h: &LimitHandle,
    level: Level,
    i: usize,
    j: usize,
    gi: usize,
    gj: usize,
) -> Result<bool, AutoError> {
    Ok(pair_profile(h, level, i, j)? == pair_profile(h, level, gi, gj)?)
}

/// A finite partial isomorphism of a limit at a declared level.
#[derive(Clone)]
pub struct PartialAuto {
    limit: LimitHandle,
    level: Level,
    pairs: BTreeMap<usize, usize>,
}

impl fmt::Debug for PartialAuto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialAuto")
            .field("level", &self.level)
            .field("pairs", &self.pairs)
            .finish()
    }
}

impl PartialAuto {
    /// Build and validate a partial isomorphism from explicit pairs.
    pub fn new(
        limit: &LimitHandle,
        level: Level,
        pairs: &[(usize, usize)],
    ) -> Result<PartialAuto, AutoError> {
        let mut map = BTreeMap::new();
        let mut used = BTreeMap::new();
        for &(v, w) in pairs {
            if let Some(&old) = map.get(&v) {
                if old != w {
                    return Err(AutoError::NotPartialIso(format!("{v} has two images")));
                }
                continue;
            }
            if used.insert(w, v).is_some() {
                return Err(AutoError::NotPartialIso(format!("{w} has two preimages")));
            }
            map.insert(v, w);
        }
        let pa = PartialAuto { limit: limit.clone(), level, pairs: map };
        pa.validate()?;
        Ok(pa)
    }

    pub fn empty(limit: &LimitHandle, level: Level) -> PartialAuto {
        PartialAuto { limit: limit.clone(), level, pairs: BTreeMap::new() }
    }

    pub fn identity_on(
        limit: &LimitHandle,
        level: Level,
        domain: &[usize],
    ) -> Result<PartialAuto, AutoError> {
        let pairs: Vec<(usize, usize)> = domain.iter().map(|&v| (v, v)).collect();
        PartialAuto::new(limit, level, &pairs)
    }

    /// Re-check the partial-isomorphism condition from scratch.
    pub fn validate(&self) -> Result<(), AutoError> {
        let verts: Vec<usize> = self.pairs.keys().copied().collect();
        for &v in &verts {
            let w = self.pairs[&v];
            let (pv, cv) = point_profile(&self.limit, self.level, v)?;
            let (pw, cw) = point_profile(&self.limit, self.level, w)?;
            if pv != pw {
                return Err(AutoError::NotPartialIso(format!("part of {v} not preserved")));
            }
            if cv != cw {
                return Err(AutoError::NotPartialIso(format!(
                    "clique index of {v} not preserved"
                )));
            }
        }
        for (a, &v) in verts.iter().enumerate() {
            for &w in verts.iter().skip(a + 1) {
                if !pair_matches(&self.limit, self.level, v, w, self.pairs[&v], self.pairs[&w])? {
                    return Err(AutoError::NotPartialIso(format!("pair ({v}, {w}) not preserved")));
                }
            }
        }
        Ok(())
    }

    pub fn limit(&self) -> &LimitHandle {
        &self.limit
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn image(&self, v: usize) -> Option<usize> {
        self.pairs.get(&v).copied()
    }

    pub fn preimage(&self, w: usize) -> Option<usize> {
        self.pairs.iter().find(|&(_, &x)| x == w).map(|(&v, _)| v)
    }

    pub fn domain(&self) -> Vec<usize> {
        self.pairs.keys().copied().collect()
    }

    pub fn range(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.pairs.values().copied().collect();
        r.sort_unstable();
        r
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|(&v, &w)| (v, w)).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> PartialAuto {
        let pairs: BTreeMap<usize, usize> = self.pairs.iter().map(|(&v, &w)| (w, v)).collect();
        PartialAuto { limit: self.limit.clone(), level: self.level, pairs }
    }

    /// `self` after `inner`: defined where `inner`'s image lies in `self`'s
    /// domain. The result is validated at the coarser of the two levels.
    pub fn compose(&self, inner: &PartialAuto) -> Result<PartialAuto, AutoError> {
        let level = if self.level == Level::Star && inner.level == Level::Star {
            Level::Star
        } else {
            Level::Base
        };
        let mut pairs = Vec::new();
        for (&v, &mid) in &inner.pairs {
            match self.pairs.get(&mid) {
                Some(&w) => pairs.push((v, w)),
                None => {
                    return Err(AutoError::NotInDomain(mid));
                }
            }
        }
        PartialAuto::new(&self.limit, level, &pairs)
    }
}

/// Build the one-point extension request that a new image for `v` must
/// satisfy, given the realized pairs. `reverse_order` flips the order
/// constraint (for order-reversing maps); `flip_part` demands the opposite
/// S(2) part.
pub(crate) fn image_request(
    h: &LimitHandle,
    level: Level,
    pairs: &BTreeMap<usize, usize>,
    v: usize,
    reverse_order: bool,
    flip_part: bool,
) -> Result<ExtensionRequest, AutoError> {
    let mut req = ExtensionRequest::new();
    let fam = h.spec().family;
    for (&u, &w) in pairs {
        if u == v {
            continue;
        }
        let rec = h.relation(v, u)?;
        if let Some(e) = rec.edge {
            if e {
                req.adjacent_to.insert(w);
            } else {
                req.nonadjacent_to.insert(w);
            }
        }
        if let Some((src, _)) = rec.arc {
            if src == v {
                req.arc_to.insert(w);
            } else {
                req.arc_from.insert(w);
            }
        }
    }
    if order_visible(h, level) || reverse_order {
        // Flanking realized domain vertices by coordinate.
        let cv = h.coord(v)?;
        let mut below: Option<(BigRational, usize)> = None;
        let mut above: Option<(BigRational, usize)> = None;
        for (&u, &w) in pairs {
            if u == v {
                continue;
            }
            let cu = h.coord(u)?;
            if cu < cv {
                if below.as_ref().is_none_or(|(c, _)| cu > *c) {
                    below = Some((cu, w));
                }
            } else if above.as_ref().is_none_or(|(c, _)| cu < *c) {
                above = Some((cu, w));
            }
        }
        let (lo, hi) = if reverse_order {
            // u < v must map to image(v) < image(u).
            (above.map(|(_, w)| w), below.map(|(_, w)| w))
        } else {
            (below.map(|(_, w)| w), above.map(|(_, w)| w))
        };
        req.order_slot = match (lo, hi) {
            (Some(a), Some(b)) => Some(OrderSlot::Between(a, b)),
            // One-sided bounds are tightened to a global extreme; any witness
            // of the stronger demand satisfies the original one.
            (Some(_), None) => Some(OrderSlot::AboveAll),
            (None, Some(_)) => Some(OrderSlot::BelowAll),
            (None, None) => None,
        };
    }
    if fam == Family::S2 && (parts_visible(h, level) || flip_part) {
        let p = h.part(v)?;
        req.part = Some(if flip_part { (p ^ 1) as usize } else { p as usize });
    }
    if comp_parts_visible(h, level) {
        req.part = Some(h.composite_view(v)?.0);
    }
    Ok(req)
}

/// Extend a partial isomorphism so that its domain covers `want_domain` and
/// its range covers `want_range`, one deterministic point at a time,
/// preserving the declared level. Existing vertices are scanned first in
/// ascending order; otherwise a fresh constrained vertex is materialized.
pub fn backforth_extend(
    p: &PartialAuto,
    want_domain: &[usize],
    want_range: &[usize],
) -> Result<PartialAuto, AutoError> {
    p.validate()?;
    let h = p.limit.clone();
    let level = p.level;
    let mut pairs = p.pairs.clone();
    let mut used: BTreeMap<usize, usize> = pairs.iter().map(|(&v, &w)| (w, v)).collect();
    let mut dom: Vec<usize> = want_domain.to_vec();
    dom.sort_unstable();
    dom.dedup();
    for v in dom {
        if pairs.contains_key(&v) {
            continue;
        }
        h.ensure(v + 1)?;
        let req = image_request(&h, level, &pairs, v, false, false)?;
        let mut chosen = None;
        for w in 0..h.stage_size() {
            if !used.contains_key(&w) && h.matches_request(w, &req)? {
                chosen = Some(w);
                break;
            }
        }
        let w = match chosen {
            Some(w) => w,
            None => h.extend_with(&req)?,
        };
        pairs.insert(v, w);
        used.insert(w, v);
    }
    let mut rng: Vec<usize> = want_range.to_vec();
    rng.sort_unstable();
    rng.dedup();
    for w in rng {
        if used.contains_key(&w) {
            continue;
        }
        h.ensure(w + 1)?;
        let inv: BTreeMap<usize, usize> = pairs.iter().map(|(&v, &x)| (x, v)).collect();
        let req = image_request(&h, level, &inv, w, false, false)?;
        let mut chosen = None;
        for v in 0..h.stage_size() {
            if !pairs.contains_key(&v) && h.matches_request(v, &req)? {
                chosen = Some(v);
                break;
            }
        }
        let v = match chosen {
            Some(v) => v,
            None => h.extend_with(&req)?,
        };
        pairs.insert(v, w);
        used.insert(w, v);
    }
    let out = PartialAuto { limit: h, level, pairs };
    out.validate()?;
    Ok(out)
}

/// The built-in total automorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoKind {
    /// Coordinate negation q -> -q on the pure-set carrier with order
    /// expansion; realized by reversed back-and-forth on the seeded graph
    /// and tournament carriers.
    OrderReversal,
    /// Coordinate shift q -> q + 1.
    Shift,
    /// Order-preserving part exchange of S(2).
    PartSwap,
    /// Generic seeded back-and-forth automorphism at a level.
    SeededBackForth { seed: u64, level: Level, fixed_point_free: bool },
}

impl AutoKind {
    pub fn name(&self) -> String {
        match self {
            AutoKind::OrderReversal => "order-reversal".into(),
            AutoKind::Shift => "shift".into(),
            AutoKind::PartSwap => "part-swap".into(),
            AutoKind::SeededBackForth { seed, level, fixed_point_free } => format!(
                "seeded-back-and-forth(seed={seed}, level={level:?}, fixed-point-free={fixed_point_free})"
            ),
        }
    }
}

struct AutoState {
    fwd: BTreeMap<usize, usize>,
    bwd: BTreeMap<usize, usize>,
    frontier: usize,
}

/// A lazily realized total automorphism of a limit.
#[derive(Clone)]
pub struct AutoHandle {
    limit: LimitHandle,
    kind: AutoKind,
    state: Arc<RwLock<AutoState>>,
}

impl fmt::Debug for AutoHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AutoHandle").field("kind", &self.kind).finish()
    }
}

/// Construct a named automorphism of the limit.
pub fn canonical_auto(h: &LimitHandle, kind: AutoKind) -> Result<AutoHandle, AutoError> {
    let fam = h.spec().family;
    let exp = h.spec().expansion;
    let ok = match kind {
        AutoKind::OrderReversal => matches!(
            (fam, exp),
            (Family::PureSet, Expansion::Order)
                | (Family::RandomGraph, Expansion::Order)
                | (Family::Henson(_), Expansion::Order)
                | (Family::RandomTournament, Expansion::Order)
        ),
        AutoKind::Shift => {
            matches!((fam, exp), (Family::PureSet, Expansion::Order) | (Family::Rationals, _))
        }
        AutoKind::PartSwap => fam == Family::S2 && exp == Expansion::OrderParts,
        AutoKind::SeededBackForth { .. } => true,
    };
    if !ok {
        return Err(AutoError::IncompatibleKind(fam.name()));
    }
    Ok(AutoHandle {
        limit: h.clone(),
        kind,
        state: Arc::new(RwLock::new(AutoState {
            fwd: BTreeMap::new(),
            bwd: BTreeMap::new(),
            frontier: 0,
        })),
    })
}

impl AutoHandle {
    pub fn kind(&self) -> AutoKind {
        self.kind
    }

    pub fn limit(&self) -> &LimitHandle {
        &self.limit
    }

    /// The level at which this automorphism preserves relations.
    pub fn level(&self) -> Level {
        match self.kind {
            AutoKind::OrderReversal | AutoKind::PartSwap => Level::Base,
            AutoKind::Shift => Level::Star,
            AutoKind::SeededBackForth { level, .. } => level,
        }
    }

    /// Certified upper bound on the number of fixed points, when the kind
    /// carries one.
    pub fn fixed_point_bound(&self) -> Option<usize> {
        match self.kind {
            AutoKind::OrderReversal => Some(1),
            AutoKind::Shift | AutoKind::PartSwap => Some(0),
            AutoKind::SeededBackForth { fixed_point_free: true, .. } => Some(0),
            AutoKind::SeededBackForth { fixed_point_free: false, .. } => None,
        }
    }

    fn closed_form(&self) -> bool {
        match self.kind {
            AutoKind::Shift => true,
            AutoKind::OrderReversal => self.limit.spec().family == Family::PureSet,
            _ => false,
        }
    }

    fn closed_image_coord(&self, c: &BigRational, forward: bool) -> BigRational {
        match self.kind {
            AutoKind::OrderReversal => -c.clone(),
            AutoKind::Shift => {
                let one = BigRational::from_integer(1.into());
                if forward {
                    c + one
                } else {
                    c - one
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn image(&self, v: usize) -> Result<usize, AutoError> {
        self.limit.ensure(v + 1)?;
        if self.closed_form() {
            if let Some(&w) = self.state.read().unwrap().fwd.get(&v) {
                return Ok(w);
            }
            let c = self.limit.coord(v)?;
            let w = self.limit.materialize_at_coord(&self.closed_image_coord(&c, true), None)?;
            let mut st = self.state.write().unwrap();
            st.fwd.insert(v, w);
            st.bwd.insert(w, v);
            return Ok(w);
        }
        self.realize_up_to(v)?;
        Ok(self.state.read().unwrap().fwd[&v])
    }

    pub fn preimage(&self, w: usize) -> Result<usize, AutoError> {
        self.limit.ensure(w + 1)?;
        if self.closed_form() {
            if let Some(&v) = self.state.read().unwrap().bwd.get(&w) {
                return Ok(v);
            }
            let c = self.limit.coord(w)?;
            let v = self.limit.materialize_at_coord(&self.closed_image_coord(&c, false), None)?;
            let mut st = self.state.write().unwrap();
            st.fwd.insert(v, w);
            st.bwd.insert(w, v);
            return Ok(v);
        }
        self.realize_up_to(w)?;
        Ok(self.state.read().unwrap().bwd[&w])
    }

    /// Realize images and preimages for every index up to `t`, in index
    /// order.
    fn realize_up_to(&self, t: usize) -> Result<(), AutoError> {
        loop {
            let next = {
                let st = self.state.read().unwrap();
                if st.frontier > t {
                    return Ok(());
                }
                st.frontier
            };
            self.ensure_image(next)?;
            self.ensure_preimage(next)?;
            self.state.write().unwrap().frontier = next + 1;
        }
    }

    fn scan_params(&self) -> (bool, bool, Option<u64>) {
        // (reverse_order, flip_part, seeded scan start)
        match self.kind {
            AutoKind::OrderReversal => (true, false, None),
            AutoKind::PartSwap => (false, true, None),
            AutoKind::SeededBackForth { seed, .. } => (false, false, Some(seed)),
            AutoKind::Shift => unreachable!("closed form"),
        }
    }

    fn request_level(&self) -> Level {
        match self.kind {
            AutoKind::OrderReversal => Level::Base,
            // The part swap preserves the order of the carrier.
            AutoKind::PartSwap => Level::Star,
            AutoKind::SeededBackForth { level, .. } => level,
            AutoKind::Shift => Level::Star,
        }
    }

    fn ensure_image(&self, v: usize) -> Result<(), AutoError> {
        if self.state.read().unwrap().fwd.contains_key(&v) {
            return Ok(());
        }
        self.limit.ensure(v + 1)?;
        let (reverse, flip, seeded) = self.scan_params();
        let fwd = self.state.read().unwrap().fwd.clone();
        let req = image_request(&self.limit, self.request_level(), &fwd, v, reverse, flip)?;
        let exclude_self = reverse
            || matches!(self.kind, AutoKind::SeededBackForth { fixed_point_free: true, .. });
        let w = self.pick_witness(&req, v, seeded, exclude_self, false)?;
        let mut st = self.state.write().unwrap();
        st.fwd.insert(v, w);
        st.bwd.insert(w, v);
        Ok(())
    }

    fn ensure_preimage(&self, w: usize) -> Result<(), AutoError> {
        if self.state.read().unwrap().bwd.contains_key(&w) {
            return Ok(());
        }
        self.limit.ensure(w + 1)?;
        let (reverse, flip, seeded) = self.scan_params();
        let bwd = self.state.read().unwrap().bwd.clone();
        let req = image_request(&self.limit, self.request_level(), &bwd, w, reverse, flip)?;
        let exclude_self = reverse
            || matches!(self.kind, AutoKind::SeededBackForth { fixed_point_free: true, .. });
        let v = self.pick_witness(&req, w, seeded, exclude_self, true)?;
        let mut st = self.state.write().unwrap();
        st.fwd.insert(v, w);
        st.bwd.insert(w, v);
        Ok(())
    }

    /// Scan existing vertices for a valid unused witness, then fall back to a
    /// fresh constrained vertex. Scanning stops paying off once the realized
    /// graph is large, so it is capped.
    fn pick_witness(
        &self,
        req: &ExtensionRequest,
        source: usize,
        seeded: Option<u64>,
        exclude_self: bool,
        preimage_side: bool,
    ) -> Result<usize, AutoError> {
        let constrained = req.adjacent_to.len()
            + req.nonadjacent_to.len()
            + req.arc_from.len()
            + req.arc_to.len();
        if constrained <= 12 {
            let st = self.state.read().unwrap();
            let n = self.limit.stage_size();
            let start = match seeded {
                Some(s) => (crate::rng::mix(s, 0x77, source as u64, preimage_side as u64)
                    % n.max(1) as u64) as usize,
                None => 0,
            };
            for k in 0..n {
                let w = (start + k) % n.max(1);
                let taken = if preimage_side {
                    st.fwd.contains_key(&w)
                } else {
                    st.bwd.contains_key(&w)
                };
                if taken || (exclude_self && w == source) {
                    continue;
                }
                if self.limit.matches_request(w, req)? {
                    return Ok(w);
                }
            }
        }
        Ok(self.limit.extend_with(req)?)
    }

    /// All pairs realized so far, sorted by domain vertex.
    pub fn realized_pairs(&self) -> Vec<(usize, usize)> {
        self.state.read().unwrap().fwd.iter().map(|(&v, &w)| (v, w)).collect()
    }

    /// Fixed points among the realized pairs.
    pub fn realized_fixed_points(&self) -> usize {
        self.state.read().unwrap().fwd.iter().filter(|&(&v, &w)| v == w).count()
    }

    /// Cross-check every realized pair against every other at the handle's
    /// declared level.
    pub fn verify_realized(&self) -> Result<(), AutoError> {
        let pairs = self.realized_pairs();
        let level = self.level();
        for (a, &(v, gv)) in pairs.iter().enumerate() {
            for &(w, gw) in pairs.iter().skip(a + 1) {
                if !pair_matches(&self.limit, level, v, w, gv, gw)? {
                    return Err(AutoError::NotPartialIso(format!(
                        "realized pair ({v}, {w}) violates level {level:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The realized graph as a partial isomorphism value.
    pub fn to_partial(&self) -> Result<PartialAuto, AutoError> {
        let pairs = self.realized_pairs();
        PartialAuto::new(&self.limit, self.level(), &pairs)
    }
}

/// Anything that maps limit vertices to limit vertices.
pub trait VertexMap {
    fn map_vertex(&self, v: usize) -> Result<usize, AutoError>;
}

impl VertexMap for AutoHandle {
    fn map_vertex(&self, v: usize) -> Result<usize, AutoError> {
        self.image(v)
    }
}

impl VertexMap for PartialAuto {
    fn map_vertex(&self, v: usize) -> Result<usize, AutoError> {
        self.image(v).ok_or(AutoError::NotInDomain(v))
    }
}

/// Strict betweenness on exact rationals: is `x` strictly between `y` and `z`?
pub fn betweenness(x: &BigRational, y: &BigRational, z: &BigRational) -> Result<bool, AutoError> {
    if x == y || x == z || y == z {
        return Err(AutoError::NotDistinct);
    }
    Ok((y < x && x < z) || (z < x && x < y))
}

/// Classification of a map's action on the S(2) parts over a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PartClass {
    #[serde(rename = "preserves-each")]
    PreservesEach,
    #[serde(rename = "swaps")]
    Swaps,
    #[serde(rename = "mixed")]
    Mixed,
}

/// Classify how `g` acts on the parts of S(2) over the sampled vertices.
/// `preserves-each` and `swaps` certify E*-preservation on the sample;
/// `mixed` certifies that `g` does not preserve E* there.
pub fn preserves_parts(
    g: &dyn VertexMap,
    h: &LimitHandle,
    sample: &[usize],
) -> Result<PartClass, AutoError> {
    if h.spec().family != Family::S2 {
        return Err(AutoError::WrongFamily("s2".into()));
    }
    let mut any_same = false;
    let mut any_diff = false;
    for &v in sample {
        let p = h.part(v)?;
        let q = h.part(g.map_vertex(v)?)?;
        if p == q {
            any_same = true;
        } else {
            any_diff = true;
        }
    }
    Ok(match (any_same, any_diff) {
        (_, false) => PartClass::PreservesEach,
        (false, true) => PartClass::Swaps,
        (true, true) => PartClass::Mixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::LimitSpec;
    use crate::rng::SplitMix64;
    use num_bigint::BigInt;

    fn handle(family: Family, seed: u64, expansion: Expansion) -> LimitHandle {
        LimitHandle::new(LimitSpec::new(family, seed, expansion).unwrap())
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn empty_extend_on_rationals_preserves_order() {
        let h = handle(Family::Rationals, 7, Expansion::None);
        h.ensure(6).unwrap();
        let p = PartialAuto::empty(&h, Level::Base);
        let q = backforth_extend(&p, &[0, 1], &[]).unwrap();
        let (a, b) = (q.image(0).unwrap(), q.image(1).unwrap());
        let before_dom = h.coord(0).unwrap() < h.coord(1).unwrap();
        let before_img = h.coord(a).unwrap() < h.coord(b).unwrap();
        assert_eq!(before_dom, before_img);
    }

    #[test]
    fn extend_on_random_graph_matches_adjacency() {
        let h = handle(Family::RandomGraph, 7, Expansion::None);
        h.ensure(8).unwrap();
        let p = PartialAuto::new(&h, Level::Base, &[(0, 5)]).unwrap();
        let q = backforth_extend(&p, &[0, 1], &[]).unwrap();
        let w = q.image(1).unwrap();
        assert_eq!(h.relation(0, 1).unwrap().edge, h.relation(5, w).unwrap().edge);
        q.validate().unwrap();
    }

    #[test]
    fn extend_covers_requested_range() {
        let h = handle(Family::RandomGraph, 7, Expansion::None);
        h.ensure(8).unwrap();
        let p = PartialAuto::empty(&h, Level::Base);
        let q = backforth_extend(&p, &[0, 1], &[3, 4]).unwrap();
        let range = q.range();
        assert!(range.contains(&3) && range.contains(&4));
        q.validate().unwrap();
    }

    #[test]
    fn invalid_partial_rejected() {
        let h = handle(Family::Rationals, 7, Expansion::None);
        h.ensure(4).unwrap();
        // Two vertices in increasing order mapped decreasingly.
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by_key(|&v| h.coord(v).unwrap());
        let bad = PartialAuto::new(&h, Level::Base, &[(idx[0], idx[3]), (idx[1], idx[2])]);
        assert!(matches!(bad, Err(AutoError::NotPartialIso(_))));
    }

    #[test]
    fn order_reversal_reverses_samples() {
        let h = handle(Family::PureSet, 7, Expansion::Order);
        h.ensure(12).unwrap();
        let sigma = canonical_auto(&h, AutoKind::OrderReversal).unwrap();
        for v in 0..12 {
            for w in 0..12 {
                if v == w {
                    continue;
                }
                let before = h.coord(v).unwrap() < h.coord(w).unwrap();
                let after = h.coord(sigma.image(v).unwrap()).unwrap()
                    < h.coord(sigma.image(w).unwrap()).unwrap();
                assert_eq!(before, !after);
            }
        }
        // q -> -q fixes at most the vertex at 0.
        assert!(sigma.realized_fixed_points() <= 1);
        assert_eq!(sigma.fixed_point_bound(), Some(1));
    }

    #[test]
    fn order_reversal_inverse_consistency() {
        let h = handle(Family::PureSet, 7, Expansion::Order);
        h.ensure(10).unwrap();
        let sigma = canonical_auto(&h, AutoKind::OrderReversal).unwrap();
        for v in 0..10 {
            assert_eq!(sigma.preimage(sigma.image(v).unwrap()).unwrap(), v);
        }
    }

    #[test]
    fn order_reversal_on_random_graph() {
        let h = handle(Family::RandomGraph, 7, Expansion::Order);
        h.ensure(10).unwrap();
        let sigma = canonical_auto(&h, AutoKind::OrderReversal).unwrap();
        for v in 0..10 {
            for w in 0..10 {
                if v == w {
                    continue;
                }
                let before = h.coord(v).unwrap() < h.coord(w).unwrap();
                let after = h.coord(sigma.image(v).unwrap()).unwrap()
                    < h.coord(sigma.image(w).unwrap()).unwrap();
                assert_eq!(before, !after, "order not reversed on ({v},{w})");
                // Edges preserved.
                assert_eq!(
                    h.relation(v, w).unwrap().edge,
                    h.relation(sigma.image(v).unwrap(), sigma.image(w).unwrap()).unwrap().edge
                );
            }
        }
        assert_eq!(sigma.realized_fixed_points(), 0);
    }

    #[test]
    fn shift_has_no_fixed_points() {
        let h = handle(Family::Rationals, 7, Expansion::None);
        h.ensure(100).unwrap();
        let s = canonical_auto(&h, AutoKind::Shift).unwrap();
        for v in 0..100 {
            assert_ne!(s.image(v).unwrap(), v);
        }
        assert_eq!(s.realized_fixed_points(), 0);
    }

    #[test]
    fn shift_preserves_order() {
        let h = handle(Family::Rationals, 7, Expansion::None);
        h.ensure(20).unwrap();
        let s = canonical_auto(&h, AutoKind::Shift).unwrap();
        for v in 0..20 {
            let c = h.coord(v).unwrap();
            let ci = h.coord(s.image(v).unwrap()).unwrap();
            assert_eq!(ci - c, BigRational::from_integer(1.into()));
        }
    }

    #[test]
    fn part_swap_swaps_parts_and_preserves_order() {
        let h = handle(Family::S2, 7, Expansion::OrderParts);
        h.ensure(30).unwrap();
        let sw = canonical_auto(&h, AutoKind::PartSwap).unwrap();
        for v in 0..30 {
            let w = sw.image(v).unwrap();
            assert_ne!(h.part(v).unwrap(), h.part(w).unwrap());
            assert_ne!(v, w);
        }
        let mut r = SplitMix64::new(3);
        for _ in 0..100 {
            let v = r.below(30);
            let w = r.below(30);
            if v == w {
                continue;
            }
            let before = h.coord(v).unwrap() < h.coord(w).unwrap();
            let after =
                h.coord(sw.image(v).unwrap()).unwrap() < h.coord(sw.image(w).unwrap()).unwrap();
            assert_eq!(before, after);
        }
        // The part swap is an automorphism of the tournament.
        sw.verify_realized().unwrap();
        assert_eq!(sw.realized_fixed_points(), 0);
    }

    #[test]
    fn part_swap_inverse_consistency() {
        let h = handle(Family::S2, 7, Expansion::OrderParts);
        h.ensure(10).unwrap();
        let sw = canonical_auto(&h, AutoKind::PartSwap).unwrap();
        for v in 0..10 {
            assert_eq!(sw.preimage(sw.image(v).unwrap()).unwrap(), v);
        }
    }

    #[test]
    fn seeded_fixed_point_free_on_random_graph() {
        let h = handle(Family::RandomGraph, 7, Expansion::None);
        h.ensure(20).unwrap();
        let g = canonical_auto(
            &h,
            AutoKind::SeededBackForth { seed: 11, level: Level::Base, fixed_point_free: true },
        )
        .unwrap();
        for v in 0..20 {
            assert_ne!(g.image(v).unwrap(), v);
        }
        g.verify_realized().unwrap();
    }

    #[test]
    fn seeded_base_level_on_s2_is_tournament_auto() {
        let h = handle(Family::S2, 7, Expansion::OrderParts);
        h.ensure(16).unwrap();
        let g = canonical_auto(
            &h,
            AutoKind::SeededBackForth { seed: 5, level: Level::Base, fixed_point_free: false },
        )
        .unwrap();
        for v in 0..16 {
            g.image(v).unwrap();
        }
        g.verify_realized().unwrap();
    }

    #[test]
    fn incompatible_kinds_rejected() {
        let h = handle(Family::Rationals, 7, Expansion::None);
        assert!(matches!(
            canonical_auto(&h, AutoKind::OrderReversal),
            Err(AutoError::IncompatibleKind(_))
        ));
        let h2 = handle(Family::RandomGraph, 7, Expansion::None);
        assert!(matches!(
            canonical_auto(&h2, AutoKind::PartSwap),
            Err(AutoError::IncompatibleKind(_))
        ));
    }

    #[test]
    fn betweenness_basic() {
        assert!(betweenness(&rat(1, 1), &rat(0, 1), &rat(2, 1)).unwrap());
        assert!(!betweenness(&rat(0, 1), &rat(1, 1), &rat(2, 1)).unwrap());
        assert!(matches!(
            betweenness(&rat(1, 1), &rat(1, 1), &rat(2, 1)),
            Err(AutoError::NotDistinct)
        ));
    }

    #[test]
    fn betweenness_invariant_under_negation() {
        let mut r = SplitMix64::new(7);
        for _ in 0..100 {
            let x = rat(r.below(2000) as i64 - 1000, 1 + r.below(40) as i64);
            let y = rat(r.below(2000) as i64 - 1000, 1 + r.below(40) as i64);
            let z = rat(r.below(2000) as i64 - 1000, 1 + r.below(40) as i64);
            if x == y || x == z || y == z {
                continue;
            }
            assert_eq!(
                betweenness(&x, &y, &z).unwrap(),
                betweenness(&-x.clone(), &-y.clone(), &-z.clone()).unwrap()
            );
        }
    }

    #[test]
    fn preserves_parts_classification() {
        let h = handle(Family::S2, 7, Expansion::OrderParts);
        h.ensure(12).unwrap();
        let sample: Vec<usize> = (0..12).collect();
        let id = PartialAuto::identity_on(&h, Level::Base, &sample).unwrap();
        assert_eq!(preserves_parts(&id, &h, &sample).unwrap(), PartClass::PreservesEach);
        let sw = canonical_auto(&h, AutoKind::PartSwap).unwrap();
        assert_eq!(preserves_parts(&sw, &h, &sample).unwrap(), PartClass::Swaps);
    }

    #[test]
    fn compose_and_inverse() {
        let h = handle(Family::RandomGraph, 7, Expansion::None);
        h.ensure(10).unwrap();
        let g = canonical_auto(
            &h,
            AutoKind::SeededBackForth { seed: 3, level: Level::Base, fixed_point_free: false },
        )
        .unwrap();
        let mut pairs = Vec::new();
        for v in 0..6 {
            pairs.push((v, g.image(v).unwrap()));
        }
        let p = PartialAuto::new(&h, Level::Base, &pairs).unwrap();
        let q = p.inverse().compose(&p).unwrap();
        for v in 0..6 {
            assert_eq!(q.image(v), Some(v));
        }
    }
}
