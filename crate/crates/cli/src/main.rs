//! Command-line front end: stage generation, class checks, automorphism
//! queries, witness procedures, the catalogue, and the verification suite.
//!
//! Exit codes: 0 on success, 1 when a check or witness fails, 2 on usage
//! errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use homog::autos::{canonical_auto, AutoKind};
use homog::catalog;
use homog::fraisse::{check_ap, check_chain_condition, ClassSpec};
use homog::limits::{Expansion, Family, Level, LimitHandle, LimitSpec};
use homog::verify;
use homog::witnesses as wit;

#[derive(Parser)]
#[command(name = "homog", version, about = "Workbench for countable homogeneous structures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct StructureArgs {
    /// Family name: pure-set, rationals, random-graph, henson(k),
    /// random-tournament, s2, in-kinf(n), iinf-kn(n), iinf-kinf.
    #[arg(long)]
    structure: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// none | order | order-parts | default (family-appropriate).
    #[arg(long, default_value = "default")]
    expansion: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a finite stage of a limit structure.
    Gen {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        stage: usize,
        /// json | dot
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Check the (strong) amalgamation property of a built-in class.
    CheckAp {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long)]
        strong: bool,
    },
    /// Check the two-generator chain condition inside an ordered limit.
    CheckChain {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        u: usize,
        #[arg(long)]
        v: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Query a canonical automorphism on chosen vertices.
    Auto {
        #[command(flatten)]
        st: StructureArgs,
        /// order-reversal | shift | part-swap | seeded
        #[arg(long)]
        kind: String,
        /// Comma-separated vertices, e.g. 0,1,2.
        #[arg(long)]
        query: String,
        /// Seed for the seeded back-and-forth kind.
        #[arg(long, default_value_t = 11)]
        auto_seed: u64,
    },
    /// Run a witness procedure and print its certified report.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Inspect the flow catalogue.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Run the verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Run a single criterion (1-9) instead of the whole suite.
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// A copy of the set disjoint from its image under an automorphism.
    DisjointCopy {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        set: String,
        /// shift | seeded
        #[arg(long, default_value = "seeded")]
        auto: String,
        #[arg(long, default_value_t = 11)]
        auto_seed: u64,
    },
    /// A base-level map realizing prescribed block orders, e.g.
    /// --blocks "0,1,2=2,1,0;3,4=3,4".
    OrderTransport {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        blocks: String,
    },
    /// Conjugate the order reversal to an order-preserving map on the set.
    ConjugateOrder {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        set: String,
    },
    /// A star-level copy order-separated from its part-swap image.
    S2Monotone {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        set: String,
    },
    /// Keep parts on one block, swap them on an order-separated block.
    S2Split {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        set0: String,
        #[arg(long)]
        set1: String,
    },
    /// Conjugate the part swap to a part-preserving map on the set.
    S2Conjugate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        set: String,
    },
    /// Factor a partial map into conjugates of star-level maps, e.g.
    /// --map "0>1,1>0".
    Factor {
        #[command(flatten)]
        st: StructureArgs,
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 16)]
        max_word: usize,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List all catalogue entries.
    List,
    /// Print one entry as JSON.
    Show {
        name: String,
    },
    /// Run an entry's evidence procedures.
    Evidence {
        name: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        budget: usize,
    },
}

/// Anything that stops a command: a message and the exit code to use.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn check(message: impl Into<String>) -> Failure {
        Failure { message: message.into(), code: 1 }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure { message: message.into(), code: 2 }
    }
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::check(e.to_string())
    }
}

fn parse_family(name: &str) -> Result<Family, Failure> {
    Family::parse(name).ok_or_else(|| Failure::usage(format!("unknown structure `{name}`")))
}

fn parse_expansion(fam: Family, s: &str, wants_order: bool) -> Result<Expansion, Failure> {
    match s {
        "none" => Ok(Expansion::None),
        "order" => Ok(Expansion::Order),
        "order-parts" => Ok(Expansion::OrderParts),
        "default" => Ok(match fam {
            Family::S2 => Expansion::OrderParts,
            Family::Rationals => Expansion::None,
            Family::InKinf(_) if wants_order => Expansion::OrderParts,
            _ if wants_order => Expansion::Order,
            _ => Expansion::None,
        }),
        other => Err(Failure::usage(format!("unknown expansion `{other}`"))),
    }
}

fn make_handle(st: &StructureArgs, wants_order: bool) -> Result<LimitHandle, Failure> {
    let fam = parse_family(&st.structure)?;
    let exp = parse_expansion(fam, &st.expansion, wants_order)?;
    let spec = LimitSpec::new(fam, st.seed, exp).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(LimitHandle::new(spec))
}

fn parse_set(s: &str) -> Result<Vec<usize>, Failure> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::usage(format!("`{s}` is not a comma-separated vertex list")))
}

type Blocks = Vec<(Vec<usize>, Vec<usize>)>;

fn parse_blocks(s: &str) -> Result<Blocks, Failure> {
    s.split(';')
        .map(|blk| {
            let (set, target) = blk
                .split_once('=')
                .ok_or_else(|| Failure::usage("each block must look like 0,1,2=2,1,0"))?;
            Ok((parse_set(set)?, parse_set(target)?))
        })
        .collect()
}

fn parse_map(s: &str) -> Result<Vec<(usize, usize)>, Failure> {
    s.split(',')
        .map(|t| {
            let (a, b) = t
                .split_once('>')
                .ok_or_else(|| Failure::usage("each pair must look like 0>1"))?;
            let a = a.trim().parse().map_err(|_| Failure::usage("bad vertex in map"))?;
            let b = b.trim().parse().map_err(|_| Failure::usage("bad vertex in map"))?;
            Ok((a, b))
        })
        .collect()
}

fn parse_auto_kind(name: &str, auto_seed: u64) -> Result<AutoKind, Failure> {
    match name {
        "order-reversal" => Ok(AutoKind::OrderReversal),
        "shift" => Ok(AutoKind::Shift),
        "part-swap" => Ok(AutoKind::PartSwap),
        "seeded" => Ok(AutoKind::SeededBackForth {
            seed: auto_seed,
            level: Level::Base,
            fixed_point_free: true,
        }),
        other => Err(Failure::usage(format!("unknown automorphism kind `{other}`"))),
    }
}

fn emit(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Gen { st, stage, format } => {
            let h = make_handle(&st, false)?;
            let s = h.stage(stage)?;
            match format.as_str() {
                "json" => {
                    emit(json!({
                        "structure": s.to_json(),
                        "meta": h.meta_json(stage)?,
                    }));
                }
                "dot" => print!("{}", s.to_dot()),
                other => return Err(Failure::usage(format!("unknown format `{other}`"))),
            }
            Ok(0)
        }
        Cmd::CheckAp { class, max_size, strong } => {
            let spec = ClassSpec::by_name(&class, max_size)
                .map_err(|e| Failure::usage(e.to_string()))?;
            let report = check_ap(&spec, strong)?;
            emit(report.to_json());
            Ok(if report.holds() { 0 } else { 1 })
        }
        Cmd::CheckChain { st, u, v, samples, max_len } => {
            let h = make_handle(&st, true)?;
            h.ensure(16.max(u + 1).max(v + 1))?;
            let n = h.stage_size();
            let mut r = homog::rng::SplitMix64::new(st.seed ^ 0xC4A1);
            let mut pairs = Vec::new();
            let mut guard = 0;
            while pairs.len() < samples && guard < 100_000 {
                guard += 1;
                let i = r.below(n);
                let j = r.below(n);
                if i != j && h.coord(i)? < h.coord(j)? {
                    pairs.push((i, j));
                }
            }
            let report = check_chain_condition(&h, u, v, &pairs, max_len)?;
            emit(report.to_json());
            Ok(if report.holds() { 0 } else { 1 })
        }
        Cmd::Auto { st, kind, query, auto_seed } => {
            let wants_order = matches!(kind.as_str(), "order-reversal" | "shift");
            let h = make_handle(&st, wants_order)?;
            let auto = canonical_auto(&h, parse_auto_kind(&kind, auto_seed)?)?;
            let verts = parse_set(&query)?;
            let mut images = serde_json::Map::new();
            for v in verts {
                images.insert(v.to_string(), json!(auto.image(v)?));
            }
            auto.verify_realized()?;
            emit(json!({
                "kind": auto.kind().name(),
                "images": images,
                "fixed_point_bound": auto.fixed_point_bound(),
                "realized_fixed_points": auto.realized_fixed_points(),
                "level_check": "pass",
            }));
            Ok(0)
        }
        Cmd::Witness(op) => run_witness(op),
        Cmd::Catalog(op) => match op {
            CatalogCmd::List => {
                emit(json!(catalog::entries().iter().map(|e| e.name.clone()).collect::<Vec<_>>()));
                Ok(0)
            }
            CatalogCmd::Show { name } => {
                let entry = catalog::get_entry(&name).map_err(|e| Failure::usage(e.to_string()))?;
                emit(entry.to_json());
                Ok(0)
            }
            CatalogCmd::Evidence { name, seed, budget } => {
                let entry = catalog::get_entry(&name).map_err(|e| Failure::usage(e.to_string()))?;
                let record = catalog::run_evidence(&entry, seed, budget)?;
                emit(record.to_json());
                Ok(if record.pass() { 0 } else { 1 })
            }
        },
        Cmd::Verify { suite, seed, only } => {
            if suite != "all" {
                return Err(Failure::usage(format!("unknown suite `{suite}`")));
            }
            let report = match only {
                Some(id) => {
                    if id == 0 || id > verify::criterion_count() {
                        return Err(Failure::usage(format!(
                            "criterion ids run from 1 to {}",
                            verify::criterion_count()
                        )));
                    }
                    verify::SuiteReport { seed, results: vec![verify::run_criterion(id, seed)] }
                }
                None => verify::run_suite(seed),
            };
            for r in &report.results {
                eprintln!(
                    "{} - criterion {}: {} ({} ms)",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.name,
                    r.millis
                );
            }
            emit(report.to_json());
            Ok(if report.all_passed() { 0 } else { 1 })
        }
    }
}

fn run_witness(op: WitnessCmd) -> Result<u8, Failure> {
    let report = match op {
        WitnessCmd::DisjointCopy { st, set, auto, auto_seed } => {
            let wants_order = auto == "shift" && st.structure != "rationals";
            let h = make_handle(&st, wants_order)?;
            h.ensure(12)?;
            let kind = parse_auto_kind(&auto, auto_seed)?;
            let automorphism = canonical_auto(&h, kind)?;
            let (_, report) = wit::disjoint_copy(&h, &automorphism, &parse_set(&set)?)?;
            report
        }
        WitnessCmd::OrderTransport { st, blocks } => {
            let h = make_handle(&st, true)?;
            let blocks = parse_blocks(&blocks)?;
            for (set, _) in &blocks {
                for &v in set {
                    h.ensure(v + 1)?;
                }
            }
            let (_, report) = wit::order_transport(&h, &blocks)?;
            report
        }
        WitnessCmd::ConjugateOrder { st, set } => {
            let h = make_handle(&st, true)?;
            h.ensure(12)?;
            let sigma = canonical_auto(&h, AutoKind::OrderReversal)?;
            let (_, report) = wit::conjugate_order_preserving(&h, &sigma, &parse_set(&set)?)?;
            report
        }
        WitnessCmd::S2Monotone { seed, set } => {
            let h = LimitHandle::new(
                LimitSpec::new(Family::S2, seed, Expansion::OrderParts)
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
            h.ensure(12)?;
            let sw = canonical_auto(&h, AutoKind::PartSwap)?;
            let (_, report) = wit::s2_monotone_copy(&h, &sw, &parse_set(&set)?)?;
            report
        }
        WitnessCmd::S2Split { seed, set0, set1 } => {
            let h = LimitHandle::new(
                LimitSpec::new(Family::S2, seed, Expansion::OrderParts)
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
            h.ensure(12)?;
            let (_, report) = wit::s2_part_split(&h, &parse_set(&set0)?, &parse_set(&set1)?)?;
            report
        }
        WitnessCmd::S2Conjugate { seed, set } => {
            let h = LimitHandle::new(
                LimitSpec::new(Family::S2, seed, Expansion::OrderParts)
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
            h.ensure(12)?;
            let sw = canonical_auto(&h, AutoKind::PartSwap)?;
            let (_, report) = wit::s2_conjugate_parts(&h, &sw, &parse_set(&set)?)?;
            report
        }
        WitnessCmd::Factor { st, map, max_word } => {
            let h = make_handle(&st, true)?;
            let pairs = parse_map(&map)?;
            for &(a, b) in &pairs {
                h.ensure(a.max(b) + 1)?;
            }
            let target = homog::autos::PartialAuto::new(&h, Level::Base, &pairs)?;
            let (_, report) = wit::factor_via_conjugates(&h, &target, max_word)?;
            report
        }
    };
    let pass = report.all_pass();
    emit(report.to_json());
    Ok(if pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
