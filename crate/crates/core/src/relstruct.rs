//! Finite relational structures over small binary/unary signatures, together
//! with embeddings, isomorphism testing and induced substructures.
//!
//! Vertices are always the dense range `0..n`. External identities (rational
//! coordinates, part labels) are carried by the generators in [`crate::limits`],
//! not here.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// What constraints a relation symbol imposes on its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    /// Symmetric irreflexive binary relation (undirected edges).
    #[serde(rename = "graph-edge")]
    GraphEdge,
    /// Irreflexive antisymmetric binary relation (at most one direction per pair).
    #[serde(rename = "arc")]
    Arc,
    /// Irreflexive binary relation with exactly one direction per unordered pair.
    #[serde(rename = "tournament-arc")]
    TournamentArc,
    /// Strict linear order: irreflexive, transitive, total.
    #[serde(rename = "linear-order")]
    LinearOrder,
    /// Unary predicate. Two or more unary-part symbols in one signature are
    /// read as a partition family: every vertex must carry exactly one.
    #[serde(rename = "unary-part")]
    UnaryPart,
}

impl SymbolKind {
    pub fn arity(self) -> u8 {
        match self {
            SymbolKind::UnaryPart => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SymbolKind::GraphEdge => "graph-edge",
            SymbolKind::Arc => "arc",
            SymbolKind::TournamentArc => "tournament-arc",
            SymbolKind::LinearOrder => "linear-order",
            SymbolKind::UnaryPart => "unary-part",
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named relation symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDecl {
    pub name: String,
    pub kind: SymbolKind,
}

impl SymbolDecl {
    pub fn new(name: &str, kind: SymbolKind) -> Self {
        SymbolDecl { name: name.to_string(), kind }
    }
}

/// An ordered list of relation symbols. Symbol names are unique and at most
/// one linear-order symbol is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    symbols: Vec<SymbolDecl>,
}

impl Signature {
    pub fn new(symbols: Vec<SymbolDecl>) -> Result<Self, RelError> {
        let mut seen = BTreeSet::new();
        let mut orders = 0usize;
        for s in &symbols {
            if !seen.insert(s.name.clone()) {
                return Err(RelError::DuplicateSymbol(s.name.clone()));
            }
            if s.kind == SymbolKind::LinearOrder {
                orders += 1;
            }
        }
        if orders > 1 {
            return Err(RelError::MultipleOrderSymbols);
        }
        Ok(Signature { symbols })
    }

    /// The empty signature (pure sets).
    pub fn empty() -> Self {
        Signature { symbols: Vec::new() }
    }

    /// One symmetric edge symbol named `edge`.
    pub fn graph() -> Self {
        Signature { symbols: vec![SymbolDecl::new("edge", SymbolKind::GraphEdge)] }
    }

    /// One tournament-arc symbol named `arc`.
    pub fn tournament() -> Self {
        Signature { symbols: vec![SymbolDecl::new("arc", SymbolKind::TournamentArc)] }
    }

    /// One linear-order symbol named `lt`.
    pub fn linear_order() -> Self {
        Signature { symbols: vec![SymbolDecl::new("lt", SymbolKind::LinearOrder)] }
    }

    pub fn symbols(&self) -> &[SymbolDecl] {
        &self.symbols
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn order_symbol(&self) -> Option<usize> {
        self.symbols.iter().position(|s| s.kind == SymbolKind::LinearOrder)
    }

    /// Indices of all unary-part symbols, in declaration order.
    pub fn unary_symbols(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SymbolKind::UnaryPart)
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether the unary symbols form a partition family (two or more).
    pub fn has_partition_family(&self) -> bool {
        self.unary_symbols().len() >= 2
    }

    /// This signature extended by a linear-order symbol named `lt`.
    pub fn with_order(&self) -> Result<Signature, RelError> {
        let mut symbols = self.symbols.clone();
        symbols.push(SymbolDecl::new("lt", SymbolKind::LinearOrder));
        Signature::new(symbols)
    }

    /// This signature extended by unary part symbols `P0..P{k-1}`.
    pub fn with_parts(&self, k: usize) -> Result<Signature, RelError> {
        let mut symbols = self.symbols.clone();
        for i in 0..k {
            symbols.push(SymbolDecl::new(&format!("P{i}"), SymbolKind::UnaryPart));
        }
        Signature::new(symbols)
    }
}

/// Relation table for one symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Rel {
    Binary(BTreeSet<(usize, usize)>),
    Unary(BTreeSet<usize>),
}

/// A finite relational structure: a signature, a vertex count, and one
/// relation table per symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinStructure {
    sig: Signature,
    n: usize,
    rels: Vec<Rel>,
}

/// First violated kind constraint found by [`FinStructure::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub symbol: String,
    pub constraint: String,
    pub witness: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (witness {:?})", self.symbol, self.constraint, self.witness)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelError {
    #[error("duplicate symbol name `{0}`")]
    DuplicateSymbol(String),
    #[error("at most one linear-order symbol per signature")]
    MultipleOrderSymbols,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol index {0} out of range")]
    SymbolOutOfRange(usize),
    #[error("vertex {vertex} out of range for structure of size {size}")]
    VertexOutOfRange { vertex: usize, size: usize },
    #[error("reflexive pair ({0}, {0}) not allowed")]
    ReflexivePair(usize),
    #[error("map has {got} entries, domain has {want} vertices")]
    MapLengthMismatch { got: usize, want: usize },
    #[error("structures have different signatures")]
    SignatureMismatch,
    #[error("symbol `{0}` has arity {1}, used with arity {2}")]
    ArityMismatch(String, u8, u8),
    #[error("not an embedding")]
    NotAnEmbedding,
    #[error("malformed structure JSON: {0}")]
    BadJson(String),
}

impl FinStructure {
    /// A structure with `n` vertices and all relation tables empty.
    pub fn new(sig: Signature, n: usize) -> Self {
        let rels = sig
            .symbols()
            .iter()
            .map(|s| match s.kind.arity() {
                1 => Rel::Unary(BTreeSet::new()),
                _ => Rel::Binary(BTreeSet::new()),
            })
            .collect();
        FinStructure { sig, n, rels }
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_vertex(&self, v: usize) -> Result<(), RelError> {
        if v >= self.n {
            return Err(RelError::VertexOutOfRange { vertex: v, size: self.n });
        }
        Ok(())
    }

    /// Insert an ordered pair into a binary symbol's table. Symmetric kinds
    /// store both orientations so membership queries stay uniform.
    pub fn insert_pair(&mut self, sym: usize, i: usize, j: usize) -> Result<(), RelError> {
        let decl = self.sig.symbols().get(sym).ok_or(RelError::SymbolOutOfRange(sym))?.clone();
        if decl.kind.arity() != 2 {
            return Err(RelError::ArityMismatch(decl.name, 1, 2));
        }
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        if i == j {
            return Err(RelError::ReflexivePair(i));
        }
        match &mut self.rels[sym] {
            Rel::Binary(set) => {
                set.insert((i, j));
                if decl.kind == SymbolKind::GraphEdge {
                    set.insert((j, i));
                }
            }
            Rel::Unary(_) => unreachable!(),
        }
        Ok(())
    }

    pub fn insert_unary(&mut self, sym: usize, v: usize) -> Result<(), RelError> {
        let decl = self.sig.symbols().get(sym).ok_or(RelError::SymbolOutOfRange(sym))?.clone();
        if decl.kind.arity() != 1 {
            return Err(RelError::ArityMismatch(decl.name, 2, 1));
        }
        self.check_vertex(v)?;
        match &mut self.rels[sym] {
            Rel::Unary(set) => {
                set.insert(v);
            }
            Rel::Binary(_) => unreachable!(),
        }
        Ok(())
    }

    pub fn has_pair(&self, sym: usize, i: usize, j: usize) -> bool {
        match &self.rels[sym] {
            Rel::Binary(set) => set.contains(&(i, j)),
            Rel::Unary(_) => false,
        }
    }

    pub fn has_unary(&self, sym: usize, v: usize) -> bool {
        match &self.rels[sym] {
            Rel::Unary(set) => set.contains(&v),
            Rel::Binary(_) => false,
        }
    }

    /// Ordered pairs of a binary symbol, sorted.
    pub fn pairs(&self, sym: usize) -> Vec<(usize, usize)> {
        match &self.rels[sym] {
            Rel::Binary(set) => set.iter().copied().collect(),
            Rel::Unary(_) => Vec::new(),
        }
    }

    /// Members of a unary symbol, sorted.
    pub fn unary_members(&self, sym: usize) -> Vec<usize> {
        match &self.rels[sym] {
            Rel::Unary(set) => set.iter().copied().collect(),
            Rel::Binary(_) => Vec::new(),
        }
    }

    /// Number of tuples in a symbol's table.
    pub fn table_len(&self, sym: usize) -> usize {
        match &self.rels[sym] {
            Rel::Binary(set) => set.len(),
            Rel::Unary(set) => set.len(),
        }
    }

    /// Check every kind constraint. Returns the first violation found, in a
    /// fixed scan order, so reports are deterministic.
    pub fn validate(&self) -> Result<(), Violation> {
        for (idx, decl) in self.sig.symbols().iter().enumerate() {
            match &self.rels[idx] {
                Rel::Binary(set) => {
                    for &(i, j) in set.iter() {
                        if i >= self.n || j >= self.n {
                            return Err(Violation {
                                symbol: decl.name.clone(),
                                constraint: "vertex out of range".into(),
                                witness: vec![i, j],
                            });
                        }
                        if i == j {
                            return Err(Violation {
                                symbol: decl.name.clone(),
                                constraint: "irreflexivity".into(),
                                witness: vec![i],
                            });
                        }
                    }
                    match decl.kind {
                        SymbolKind::GraphEdge => {
                            for &(i, j) in set.iter() {
                                if !set.contains(&(j, i)) {
                                    return Err(Violation {
                                        symbol: decl.name.clone(),
                                        constraint: "symmetry".into(),
                                        witness: vec![i, j],
                                    });
                                }
                            }
                        }
                        SymbolKind::Arc => {
                            for &(i, j) in set.iter() {
                                if i < j && set.contains(&(j, i)) {
                                    return Err(Violation {
                                        symbol: decl.name.clone(),
                                        constraint: "antisymmetry".into(),
                                        witness: vec![i, j],
                                    });
                                }
                            }
                        }
                        SymbolKind::TournamentArc => {
                            for i in 0..self.n {
                                for j in (i + 1)..self.n {
                                    let fwd = set.contains(&(i, j));
                                    let bwd = set.contains(&(j, i));
                                    if fwd && bwd {
                                        return Err(Violation {
                                            symbol: decl.name.clone(),
                                            constraint: "antisymmetry".into(),
                                            witness: vec![i, j],
                                        });
                                    }
                                    if !fwd && !bwd {
                                        return Err(Violation {
                                            symbol: decl.name.clone(),
                                            constraint: "tournament completeness".into(),
                                            witness: vec![i, j],
                                        });
                                    }
                                }
                            }
                        }
                        SymbolKind::LinearOrder => {
                            for i in 0..self.n {
                                for j in (i + 1)..self.n {
                                    let fwd = set.contains(&(i, j));
                                    let bwd = set.contains(&(j, i));
                                    if fwd && bwd {
                                        return Err(Violation {
                                            symbol: decl.name.clone(),
                                            constraint: "antisymmetry".into(),
                                            witness: vec![i, j],
                                        });
                                    }
                                    if !fwd && !bwd {
                                        return Err(Violation {
                                            symbol: decl.name.clone(),
                                            constraint: "totality".into(),
                                            witness: vec![i, j],
                                        });
                                    }
                                }
                            }
                            for &(i, j) in set.iter() {
                                for &(j2, k) in set.iter() {
                                    if j == j2 && i != k && !set.contains(&(i, k)) {
                                        return Err(Violation {
                                            symbol: decl.name.clone(),
                                            constraint: "transitivity".into(),
                                            witness: vec![i, j, k],
                                        });
                                    }
                                }
                            }
                        }
                        SymbolKind::UnaryPart => unreachable!(),
                    }
                }
                Rel::Unary(set) => {
                    for &v in set.iter() {
                        if v >= self.n {
                            return Err(Violation {
                                symbol: decl.name.clone(),
                                constraint: "vertex out of range".into(),
                                witness: vec![v],
                            });
                        }
                    }
                }
            }
        }
        // Partition family: each vertex carries exactly one part predicate.
        if self.sig.has_partition_family() {
            let fam = self.sig.unary_symbols();
            for v in 0..self.n {
                let count = fam.iter().filter(|&&s| self.has_unary(s, v)).count();
                if count != 1 {
                    return Err(Violation {
                        symbol: "partition".into(),
                        constraint: if count == 0 {
                            "partition covers every vertex".into()
                        } else {
                            "partition parts are disjoint".into()
                        },
                        witness: vec![v],
                    });
                }
            }
        }
        Ok(())
    }

    /// The substructure induced on `support` (deduplicated, sorted), plus the
    /// inclusion embedding back into `self`.
    pub fn induced(&self, support: &[usize]) -> Result<(FinStructure, Embedding), RelError> {
        let verts: Vec<usize> = {
            let set: BTreeSet<usize> = support.iter().copied().collect();
            for &v in &set {
                self.check_vertex(v)?;
            }
            set.into_iter().collect()
        };
        let mut sub = FinStructure::new(self.sig.clone(), verts.len());
        for (idx, decl) in self.sig.symbols().iter().enumerate() {
            match decl.kind.arity() {
                1 => {
                    for (p, &v) in verts.iter().enumerate() {
                        if self.has_unary(idx, v) {
                            sub.insert_unary(idx, p)?;
                        }
                    }
                }
                _ => {
                    for (p, &v) in verts.iter().enumerate() {
                        for (q, &w) in verts.iter().enumerate() {
                            if p != q && self.has_pair(idx, v, w) {
                                match &mut sub.rels[idx] {
                                    Rel::Binary(set) => {
                                        set.insert((p, q));
                                    }
                                    Rel::Unary(_) => unreachable!(),
                                }
                            }
                        }
                    }
                }
            }
        }
        let emb = Embedding { dom: sub.clone(), cod: self.clone(), map: verts };
        Ok((sub, emb))
    }

    /// Stable JSON form: `{"sig": [...], "n": N, "rels": {name: table}}`.
    /// Binary tables list their stored ordered pairs sorted; unary tables list
    /// members sorted. Keys of `rels` are sorted by symbol name.
    pub fn to_json(&self) -> Value {
        let sig: Vec<Value> = self
            .sig
            .symbols()
            .iter()
            .map(|s| json!({"name": s.name, "arity": s.kind.arity(), "kind": s.kind.as_str()}))
            .collect();
        let mut rels = serde_json::Map::new();
        let mut named: Vec<(String, Value)> = self
            .sig
            .symbols()
            .iter()
            .enumerate()
            .map(|(idx, decl)| {
                let table = match &self.rels[idx] {
                    Rel::Binary(set) => {
                        Value::Array(set.iter().map(|&(i, j)| json!([i, j])).collect())
                    }
                    Rel::Unary(set) => Value::Array(set.iter().map(|&v| json!(v)).collect()),
                };
                (decl.name.clone(), table)
            })
            .collect();
        named.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, table) in named {
            rels.insert(name, table);
        }
        json!({"sig": sig, "n": self.n, "rels": Value::Object(rels)})
    }

    pub fn from_json(v: &Value) -> Result<FinStructure, RelError> {
        let obj = v.as_object().ok_or_else(|| RelError::BadJson("expected object".into()))?;
        let sig_arr = obj
            .get("sig")
            .and_then(Value::as_array)
            .ok_or_else(|| RelError::BadJson("missing sig".into()))?;
        let mut symbols = Vec::new();
        for s in sig_arr {
            let name = s
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| RelError::BadJson("symbol missing name".into()))?;
            let kind: SymbolKind = serde_json::from_value(
                s.get("kind")
                    .cloned()
                    .ok_or_else(|| RelError::BadJson("symbol missing kind".into()))?,
            )
            .map_err(|e| RelError::BadJson(e.to_string()))?;
            symbols.push(SymbolDecl::new(name, kind));
        }
        let sig = Signature::new(symbols)?;
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| RelError::BadJson("missing n".into()))? as usize;
        let mut st = FinStructure::new(sig.clone(), n);
        let rels = obj
            .get("rels")
            .and_then(Value::as_object)
            .ok_or_else(|| RelError::BadJson("missing rels".into()))?;
        for (name, table) in rels {
            let idx = sig.index_of(name).ok_or_else(|| RelError::UnknownSymbol(name.clone()))?;
            let arr = table
                .as_array()
                .ok_or_else(|| RelError::BadJson(format!("table for {name} not an array")))?;
            match sig.symbols()[idx].kind.arity() {
                1 => {
                    for e in arr {
                        let v = e
                            .as_u64()
                            .ok_or_else(|| RelError::BadJson("unary entry not an integer".into()))?;
                        st.insert_unary(idx, v as usize)?;
                    }
                }
                _ => {
                    for e in arr {
                        let pair = e
                            .as_array()
                            .filter(|p| p.len() == 2)
                            .ok_or_else(|| RelError::BadJson("pair entry malformed".into()))?;
                        let i =
                            pair[0].as_u64().ok_or_else(|| RelError::BadJson("bad pair".into()))?;
                        let j =
                            pair[1].as_u64().ok_or_else(|| RelError::BadJson("bad pair".into()))?;
                        st.insert_pair(idx, i as usize, j as usize)?;
                    }
                }
            }
        }
        Ok(st)
    }

    /// DOT export. Graph-edge symbols print undirected edges (each unordered
    /// pair once); arc and tournament-arc symbols print directed edges.
    /// Linear-order and unary symbols are omitted.
    pub fn to_dot(&self) -> String {
        let directed = self
            .sig
            .symbols()
            .iter()
            .any(|s| matches!(s.kind, SymbolKind::Arc | SymbolKind::TournamentArc));
        let mut out = String::new();
        out.push_str(if directed { "digraph g {\n" } else { "graph g {\n" });
        for v in 0..self.n {
            out.push_str(&format!("  {v};\n"));
        }
        for (idx, decl) in self.sig.symbols().iter().enumerate() {
            match decl.kind {
                SymbolKind::GraphEdge => {
                    for (i, j) in self.pairs(idx) {
                        if i < j {
                            if directed {
                                out.push_str(&format!("  {i} -> {j} [dir=none];\n"));
                            } else {
                                out.push_str(&format!("  {i} -- {j};\n"));
                            }
                        }
                    }
                }
                SymbolKind::Arc | SymbolKind::TournamentArc => {
                    for (i, j) in self.pairs(idx) {
                        out.push_str(&format!("  {i} -> {j};\n"));
                    }
                }
                _ => {}
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Convenience builders used all over the test suites.
impl FinStructure {
    /// Graph on `n` vertices from an undirected edge list.
    pub fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<FinStructure, RelError> {
        let mut g = FinStructure::new(Signature::graph(), n);
        for &(i, j) in edges {
            g.insert_pair(0, i, j)?;
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> FinStructure {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FinStructure::graph_from_edges(n, &edges).expect("cycle is valid")
    }

    pub fn complete(n: usize) -> FinStructure {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        FinStructure::graph_from_edges(n, &edges).expect("complete graph is valid")
    }

    pub fn path(n: usize) -> FinStructure {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        FinStructure::graph_from_edges(n, &edges).expect("path is valid")
    }

    pub fn empty_graph(n: usize) -> FinStructure {
        FinStructure::new(Signature::graph(), n)
    }

    /// Tournament on `n` vertices from an arc list.
    pub fn tournament_from_arcs(
        n: usize,
        arcs: &[(usize, usize)],
    ) -> Result<FinStructure, RelError> {
        let mut t = FinStructure::new(Signature::tournament(), n);
        for &(i, j) in arcs {
            t.insert_pair(0, i, j)?;
        }
        Ok(t)
    }

    /// The natural linear order 0 < 1 < ... < n-1.
    pub fn natural_order(n: usize) -> FinStructure {
        let mut o = FinStructure::new(Signature::linear_order(), n);
        for i in 0..n {
            for j in (i + 1)..n {
                o.insert_pair(0, i, j).expect("in range");
            }
        }
        o
    }
}

/// An injective map between finite structures that preserves and reflects
/// every relation (an induced-substructure embedding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub dom: FinStructure,
    pub cod: FinStructure,
    pub map: Vec<usize>,
}

impl Embedding {
    pub fn new(
        dom: FinStructure,
        cod: FinStructure,
        map: Vec<usize>,
    ) -> Result<Embedding, RelError> {
        if !is_embedding(&map, &dom, &cod)? {
            return Err(RelError::NotAnEmbedding);
        }
        Ok(Embedding { dom, cod, map })
    }

    /// Re-check the embedding condition from scratch.
    pub fn verify(&self) -> bool {
        is_embedding(&self.map, &self.dom, &self.cod).unwrap_or(false)
    }

    pub fn image(&self) -> Vec<usize> {
        self.map.clone()
    }
}

/// True iff `map` is injective and, for every symbol and tuple, membership in
/// the domain table is equivalent to membership of the image tuple in the
/// codomain table.
pub fn is_embedding(map: &[usize], a: &FinStructure, b: &FinStructure) -> Result<bool, RelError> {
    if a.sig() != b.sig() {
        return Err(RelError::SignatureMismatch);
    }
    if map.len() != a.n() {
        return Err(RelError::MapLengthMismatch { got: map.len(), want: a.n() });
    }
    for &v in map {
        if v >= b.n() {
            return Err(RelError::VertexOutOfRange { vertex: v, size: b.n() });
        }
    }
    let mut seen = BTreeSet::new();
    for &v in map {
        if !seen.insert(v) {
            return Ok(false);
        }
    }
    for (idx, decl) in a.sig().symbols().iter().enumerate() {
        match decl.kind.arity() {
            1 => {
                for (v, &image) in map.iter().enumerate() {
                    if a.has_unary(idx, v) != b.has_unary(idx, image) {
                        return Ok(false);
                    }
                }
            }
            _ => {
                for i in 0..a.n() {
                    for j in 0..a.n() {
                        if i == j {
                            continue;
                        }
                        if a.has_pair(idx, i, j) != b.has_pair(idx, map[i], map[j]) {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Partial-map consistency used by the backtracking searches: checks only the
/// constraints between the next assignment and the vertices assigned so far.
fn partial_consistent(
    assigned: &[usize],
    next: usize,
    image: usize,
    a: &FinStructure,
    b: &FinStructure,
) -> bool {
    for (idx, decl) in a.sig().symbols().iter().enumerate() {
        match decl.kind.arity() {
            1 => {
                if a.has_unary(idx, next) != b.has_unary(idx, image) {
                    return false;
                }
            }
            _ => {
                for (v, &w) in assigned.iter().enumerate() {
                    if a.has_pair(idx, next, v) != b.has_pair(idx, image, w) {
                        return false;
                    }
                    if a.has_pair(idx, v, next) != b.has_pair(idx, w, image) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Enumerate embeddings of `a` into `b` in lexicographic order of the map
/// sequence. `limit` truncates the output; `None` enumerates everything.
pub fn enumerate_embeddings(
    a: &FinStructure,
    b: &FinStructure,
    limit: Option<usize>,
) -> Result<Vec<Embedding>, RelError> {
    if a.sig() != b.sig() {
        return Err(RelError::SignatureMismatch);
    }
    let mut out = Vec::new();
    if let Some(0) = limit {
        return Ok(out);
    }
    fn rec(
        a: &FinStructure,
        b: &FinStructure,
        assigned: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Embedding>,
        limit: Option<usize>,
    ) -> bool {
        if assigned.len() == a.n() {
            out.push(Embedding { dom: a.clone(), cod: b.clone(), map: assigned.clone() });
            return limit.is_some_and(|l| out.len() >= l);
        }
        let next = assigned.len();
        for cand in 0..b.n() {
            if used[cand] || !partial_consistent(assigned, next, cand, a, b) {
                continue;
            }
            assigned.push(cand);
            used[cand] = true;
            let done = rec(a, b, assigned, used, out, limit);
            assigned.pop();
            used[cand] = false;
            if done {
                return true;
            }
        }
        false
    }
    let mut assigned: Vec<usize> = Vec::with_capacity(a.n());
    let mut used = vec![false; b.n()];
    rec(a, b, &mut assigned, &mut used, &mut out, limit);
    Ok(out)
}

/// Per-vertex degree profile used to prune isomorphism search: for each
/// binary symbol the out- and in-degree, for each unary symbol membership.
fn degree_profile(s: &FinStructure, v: usize) -> Vec<usize> {
    let mut profile = Vec::new();
    for (idx, decl) in s.sig().symbols().iter().enumerate() {
        match decl.kind.arity() {
            1 => profile.push(s.has_unary(idx, v) as usize),
            _ => {
                let mut outd = 0;
                let mut ind = 0;
                for u in 0..s.n() {
                    if u == v {
                        continue;
                    }
                    if s.has_pair(idx, v, u) {
                        outd += 1;
                    }
                    if s.has_pair(idx, u, v) {
                        ind += 1;
                    }
                }
                profile.push(outd);
                profile.push(ind);
            }
        }
    }
    profile
}

/// Brute-force isomorphism with degree-profile pruning. Returns the first
/// bijective embedding in deterministic search order, or `None`.
pub fn are_isomorphic(a: &FinStructure, b: &FinStructure) -> Result<Option<Embedding>, RelError> {
    if a.sig() != b.sig() {
        return Err(RelError::SignatureMismatch);
    }
    if a.n() != b.n() {
        return Ok(None);
    }
    for idx in 0..a.sig().symbols().len() {
        if a.table_len(idx) != b.table_len(idx) {
            return Ok(None);
        }
    }
    let prof_a: Vec<Vec<usize>> = (0..a.n()).map(|v| degree_profile(a, v)).collect();
    let prof_b: Vec<Vec<usize>> = (0..b.n()).map(|v| degree_profile(b, v)).collect();
    {
        let mut sa = prof_a.clone();
        let mut sb = prof_b.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return Ok(None);
        }
    }
    fn rec(
        a: &FinStructure,
        b: &FinStructure,
        prof_a: &[Vec<usize>],
        prof_b: &[Vec<usize>],
        assigned: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if assigned.len() == a.n() {
            return true;
        }
        let next = assigned.len();
        for cand in 0..b.n() {
            if used[cand]
                || prof_a[next] != prof_b[cand]
                || !partial_consistent(assigned, next, cand, a, b)
            {
                continue;
            }
            assigned.push(cand);
            used[cand] = true;
            if rec(a, b, prof_a, prof_b, assigned, used) {
                return true;
            }
            assigned.pop();
            used[cand] = false;
        }
        false
    }
    let mut assigned = Vec::with_capacity(a.n());
    let mut used = vec![false; b.n()];
    if rec(a, b, &prof_a, &prof_b, &mut assigned, &mut used) {
        Ok(Some(Embedding { dom: a.clone(), cod: b.clone(), map: assigned }))
    } else {
        Ok(None)
    }
}
