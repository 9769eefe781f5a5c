//! Command-line front end: one JSON report per run, exit code 0 (ok),
//! 1 (violation) or 2 (input error).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::decorations::{check_graph, check_profile, genera, genus_target, CategoryProfile, ProfileName};
use crate::free_operad::{element_from_json, element_to_json, FreeOperad, Mode, OperadElement, Signature, TermJson, TreeTerm};
use crate::graph::{automorphism_count, canonical_form, compose, find_isomorphism, FlagId, Graph, GraphMorphism, Isomorphism, RawGraph, RawMorphism, VertexId};
use crate::hopf::morphisms::{class_of, concrete_coproduct, hopf_quotient, quotient_class, symmetric_coinvariants, union, HopfQuotient, MorphismAlgebra, MorphismClass};
use crate::hopf::trees::{admissible_cuts_oracle, ck_coproduct, cooperad_mult_coproduct, tree_to_term, CkAlgebra, Forest, TreeMode};
use crate::hopf::{counit, Antipode, Bialgebra};
use crate::linear::{format_coeff, parse_coeff, FormalSum, Tensor2};
use crate::morphism_calculus::{decompose, enumerate_factorizations, enumerate_orderings, make_generator, relation_instances, GeneratorTag};
use crate::odd_complex::{check_instance, class_to_sum, contract_edge_signed, d_squared_sweep, differential, signed_relation_check, OrientedClass, OrientedJson};
use crate::sweep::{aggregates, insertion_composite, run_item, SweepConfig, ITEMS};

#[derive(Parser, Debug)]
#[command(name = "feyncat", version, about = "Graph morphisms, free operads, odd signs and factorization Hopf algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Category profile, or ck-planar / ck-abstract for rooted forests.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true, default_value_t = 4)]
    pub max_vertices: usize,
    #[arg(long, global = true, default_value_t = 5)]
    pub max_edges: usize,
    #[arg(long, global = true, default_value_t = 4)]
    pub degree_bound: usize,
    #[arg(long, global = true)]
    pub pretty: bool,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Input files, in addition to positional ones.
    #[arg(long = "input", global = true)]
    pub input: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Validate a graph or morphism, optionally against a profile.
    Validate { files: Vec<PathBuf> },
    /// Compose two morphisms, or insert a graph into a vertex.
    Compose { files: Vec<PathBuf> },
    /// Ghost graph of a morphism.
    Ghost { files: Vec<PathBuf> },
    /// Decompose a morphism, or build a generator from a tag.
    Decompose { files: Vec<PathBuf> },
    /// Factorizations of a morphism up to isomorphism of the middle object.
    Factorize { files: Vec<PathBuf> },
    /// Free operad bases and operations.
    FreeBasis {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        arity: Option<usize>,
        /// Vertex bound on trees; defaults to --max-vertices.
        #[arg(long)]
        size: Option<usize>,
        files: Vec<PathBuf>,
    },
    /// d² = 0 sweep, or the differential of one oriented class.
    Dcheck { files: Vec<PathBuf> },
    /// Coproduct of a forest or morphism class.
    Coproduct { files: Vec<PathBuf> },
    /// Antipode in the Hopf quotient.
    Antipode { files: Vec<PathBuf> },
    /// Relation instances with their odd signs.
    Relations {
        #[arg(long)]
        sweep: bool,
        files: Vec<PathBuf>,
    },
    /// Isomorphism between two graphs.
    Iso { files: Vec<PathBuf> },
    /// All acceptance sweeps.
    Sweep {
        #[arg(long)]
        item: Option<usize>,
        #[arg(long, default_value_t = 5)]
        max_flags: usize,
    },
}

/// Every library operation with the verb that reaches it.
pub const OPERATIONS: &[(&str, &str)] = &[
    ("validate_graph", "validate"),
    ("compose", "compose"),
    ("ghost_graph", "ghost"),
    ("insert", "compose"),
    ("find_isomorphism", "iso"),
    ("canonical_form", "iso"),
    ("first_betti", "validate"),
    ("make_generator", "decompose"),
    ("decompose", "decompose"),
    ("degree", "ghost"),
    ("enumerate_orderings", "decompose"),
    ("enumerate_factorizations", "factorize"),
    ("check_decorated", "validate"),
    ("genus_target", "ghost"),
    ("check_profile", "validate"),
    ("free_basis", "free-basis"),
    ("substitute", "free-basis"),
    ("circ_i", "free-basis"),
    ("insertion_product", "free-basis"),
    ("prelie_check", "free-basis"),
    ("master_equation_residual", "free-basis"),
    ("normalize", "dcheck"),
    ("contract_edge_signed", "dcheck"),
    ("differential", "dcheck"),
    ("signed_relation_check", "relations"),
    ("product", "coproduct"),
    ("coproduct", "coproduct"),
    ("hopf_quotient", "coproduct"),
    ("antipode", "antipode"),
    ("symmetric_coinvariants", "coproduct"),
    ("ck_coproduct", "coproduct"),
    ("admissible_cuts_oracle", "coproduct"),
    ("cooperad_mult_coproduct", "coproduct"),
    ("run", "validate"),
    ("sweep", "sweep"),
];

pub fn verb_names() -> Vec<String> {
    Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violation,
    Error,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub inputs: Vec<String>,
    pub version: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub status: Status,
    pub verb: String,
    pub payload: Value,
    pub provenance: Provenance,
}

struct Failure(Value);

fn fail(msg: impl Display) -> Failure {
    Failure(json!({ "message": msg.to_string() }))
}

type Outcome = Result<(Status, Value), Failure>;

struct Ctx {
    opts: GlobalOpts,
    files: Vec<PathBuf>,
    digests: Vec<String>,
}

impl Ctx {
    fn bytes(&mut self, path: &PathBuf) -> Result<Vec<u8>, Failure> {
        let b = std::fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
        self.digests.push(hex::encode(Sha256::digest(&b)));
        Ok(b)
    }

    fn json<T: DeserializeOwned>(&mut self, path: &PathBuf) -> Result<T, Failure> {
        let b = self.bytes(path)?;
        serde_json::from_slice(&b).map_err(|e| {
            Failure(json!({
                "message": format!("{}: {e}", path.display()),
                "line": e.line(),
                "column": e.column(),
            }))
        })
    }

    fn nth<T: DeserializeOwned>(&mut self, i: usize) -> Result<T, Failure> {
        let p = self.files.get(i).cloned().ok_or_else(|| fail(format!("missing input file #{}", i + 1)))?;
        self.json(&p)
    }

    fn graph_profile(&self) -> Result<Option<CategoryProfile>, Failure> {
        self.opts.profile.as_deref().map(|p| p.parse::<ProfileName>().map(|n| n.profile()).map_err(fail)).transpose()
    }
}

/// Runs the tool on `argv` and returns the exit code with the text for
/// standard output.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (0, e.to_string());
            }
            let report = Report {
                status: Status::Error,
                verb: String::new(),
                payload: json!({ "message": e.to_string().trim_end() }),
                provenance: provenance(&[], 0),
            };
            return (2, render(&report, false));
        }
    };
    let verb = verb_name(&cli.verb);
    let files = match &cli.verb {
        Verb::Validate { files }
        | Verb::Compose { files }
        | Verb::Ghost { files }
        | Verb::Decompose { files }
        | Verb::Factorize { files }
        | Verb::FreeBasis { files, .. }
        | Verb::Dcheck { files }
        | Verb::Coproduct { files }
        | Verb::Antipode { files }
        | Verb::Relations { files, .. }
        | Verb::Iso { files } => files.clone(),
        Verb::Sweep { .. } => Vec::new(),
    };
    let mut ctx = Ctx {
        files: files.into_iter().chain(cli.opts.input.iter().cloned()).collect(),
        opts: cli.opts.clone(),
        digests: Vec::new(),
    };
    let out = match &cli.verb {
        Verb::Validate { .. } => validate(&mut ctx),
        Verb::Compose { .. } => compose_verb(&mut ctx),
        Verb::Ghost { .. } => ghost(&mut ctx),
        Verb::Decompose { .. } => decompose_verb(&mut ctx),
        Verb::Factorize { .. } => factorize(&mut ctx),
        Verb::FreeBasis { sig, arity, size, .. } => free_basis(&mut ctx, sig, *arity, *size),
        Verb::Dcheck { .. } => dcheck(&mut ctx),
        Verb::Coproduct { .. } => coproduct(&mut ctx),
        Verb::Antipode { .. } => antipode(&mut ctx),
        Verb::Relations { sweep, .. } => relations(&mut ctx, *sweep),
        Verb::Iso { .. } => iso(&mut ctx),
        Verb::Sweep { item, max_flags } => return sweep(&ctx, *item, *max_flags),
    };
    let (status, payload) = out.unwrap_or_else(|Failure(v)| (Status::Error, v));
    let report = Report { status, verb, payload, provenance: provenance(&ctx.digests, ctx.opts.seed) };
    (status.code(), render(&report, ctx.opts.pretty))
}

fn verb_name(v: &Verb) -> String {
    let name = format!("{v:?}");
    let head = name.split([' ', '{']).next().unwrap_or_default();
    let mut out = String::new();
    for (i, c) in head.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push('-');
        }
        out.push(c.to_ascii_lowercase());
    }
    out
}

fn provenance(digests: &[String], seed: u64) -> Provenance {
    Provenance { inputs: digests.to_vec(), version: env!("CARGO_PKG_VERSION").to_string(), seed }
}

fn render(r: &Report, pretty: bool) -> String {
    let s = if pretty { serde_json::to_string_pretty(r) } else { serde_json::to_string(r) };
    s.expect("report serializes") + "\n"
}

// ---------------------------------------------------------------------------
// Wire helpers

/// SHA-256 of the canonical form; equal exactly when the graphs are isomorphic.
fn hexform(g: &Graph) -> String {
    hex::encode(Sha256::digest(canonical_form(g)))
}

fn raw_morphism(m: &GraphMorphism) -> Value {
    serde_json::to_value(m.to_raw()).expect("serializable")
}

fn raw_graph(g: &Graph) -> Value {
    serde_json::to_value(g.to_raw()).expect("serializable")
}

fn iso_json(i: &Isomorphism) -> Value {
    json!({ "vertices": i.vertices, "flags": i.flags })
}

fn class_json(k: &MorphismClass) -> Value {
    json!({ "canonicalForm": hex::encode(Sha256::digest(&k.key)), "degree": k.rep.degree(), "representative": raw_morphism(&k.rep) })
}

fn tensor_json<K: Ord + Clone>(t: &Tensor2<K>, key: impl Fn(&K) -> Value) -> Value {
    Value::Array(
        t.iter()
            .map(|((a, b), c)| json!({ "left": key(a), "right": key(b), "coeff": format_coeff(c) }))
            .collect(),
    )
}

fn sum_json<K: Ord + Clone>(x: &FormalSum<K>, key: impl Fn(&K) -> Value, field: &str) -> Value {
    Value::Array(x.iter().map(|(k, c)| json!({ field: key(k), "coeff": format_coeff(c) })).collect())
}

fn morphism(raw: &RawMorphism) -> Result<GraphMorphism, Failure> {
    GraphMorphism::from_raw(raw).map_err(fail)
}

fn genus_labeled(g: &Graph) -> bool {
    g.vertex_count() > 0 && g.vertices().iter().all(|v| g.labels.vertices.get(v).is_some_and(|l| l.parse::<u64>().is_ok()))
}

fn ok(v: Value) -> Outcome {
    Ok((Status::Ok, v))
}

fn verdict(pass: bool, v: Value) -> Outcome {
    Ok((if pass { Status::Ok } else { Status::Violation }, v))
}

// ---------------------------------------------------------------------------
// Verbs

fn validate(ctx: &mut Ctx) -> Outcome {
    let doc: Value = ctx.nth(0)?;
    let profile = ctx.graph_profile()?;
    if doc.get("vertexMap").is_some() {
        let raw: RawMorphism = serde_json::from_value(doc).map_err(fail)?;
        let m = match GraphMorphism::from_raw(&raw) {
            Ok(m) => m,
            Err(e) => return verdict(false, json!({ "kind": "morphism", "valid": false, "error": e.to_string() })),
        };
        let mut payload = json!({
            "kind": "morphism",
            "valid": true,
            "degree": m.degree(),
            "isIsomorphism": m.is_isomorphism(),
            "ghostEdges": m.ghost_edges(),
        });
        let mut pass = true;
        if let Some(p) = profile {
            let v = check_profile(&m, &p).map_err(fail)?;
            pass = v.ok;
            payload["profile"] = json!({ "name": p.name, "verdict": v });
        }
        return verdict(pass, payload);
    }
    let raw: RawGraph = serde_json::from_value(doc).map_err(fail)?;
    let g = match Graph::validate(&raw) {
        Ok(g) => g,
        Err(e) => return verdict(false, json!({ "kind": "graph", "valid": false, "error": e.to_string() })),
    };
    let kind = if g.is_corolla() {
        "corolla"
    } else if g.is_aggregate() {
        "aggregate"
    } else {
        "graph"
    };
    let mut payload = json!({
        "kind": kind,
        "valid": true,
        "vertices": g.vertex_count(),
        "flags": g.flag_count(),
        "edges": g.edge_count(),
        "tails": g.tails().len(),
        "components": g.components().len(),
        "firstBetti": g.first_betti(),
        "canonicalForm": hexform(&g),
    });
    let mut pass = true;
    if let Some(spec) = profile.and_then(|p| p.decoration) {
        let v = check_graph(&g, &spec).map_err(fail)?;
        pass = v.ok;
        payload["decoration"] = json!({ "spec": spec, "verdict": v });
    }
    verdict(pass, payload)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InsertDoc {
    outer: RawGraph,
    vertex: VertexId,
    inner: RawGraph,
    /// Inner tail ↦ flag at the vertex.
    matching: BTreeMap<FlagId, FlagId>,
}

fn compose_verb(ctx: &mut Ctx) -> Outcome {
    let doc: Value = ctx.nth(0)?;
    if doc.get("outer").is_some() {
        let d: InsertDoc = serde_json::from_value(doc).map_err(fail)?;
        let outer = Graph::validate(&d.outer).map_err(fail)?;
        let inner = Graph::validate(&d.inner).map_err(fail)?;
        let g = outer.insert(&d.vertex, &inner, &d.matching).map_err(fail)?;
        return ok(json!({ "graph": raw_graph(&g), "canonicalForm": hexform(&g) }));
    }
    let first = morphism(&serde_json::from_value(doc).map_err(fail)?)?;
    let second = morphism(&ctx.nth(1)?)?;
    let c = compose(&first, &second).map_err(fail)?;
    let agrees = (first.source().is_aggregate() && second.source().is_aggregate())
        .then(|| insertion_composite(&first, &second).map(|g| canonical_form(&g) == canonical_form(&c.ghost_graph())).unwrap_or(false));
    verdict(
        agrees != Some(false),
        json!({ "composite": raw_morphism(&c), "degree": c.degree(), "ghostMatchesInsertion": agrees }),
    )
}

fn ghost(ctx: &mut Ctx) -> Outcome {
    let m = morphism(&ctx.nth(0)?)?;
    let g = m.ghost_graph();
    let genus = if genus_labeled(m.source()) {
        let g0 = genera(m.source()).map_err(fail)?;
        Some(genus_target(&m, &g0).map_err(fail)?)
    } else {
        None
    };
    ok(json!({
        "ghost": raw_graph(&g),
        "degree": m.degree(),
        "firstBetti": g.first_betti(),
        "genusTarget": genus,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDoc {
    source: RawGraph,
    tag: GeneratorTag,
}

fn decompose_verb(ctx: &mut Ctx) -> Outcome {
    let doc: Value = ctx.nth(0)?;
    if doc.get("tag").is_some() {
        let d: GeneratorDoc = serde_json::from_value(doc).map_err(fail)?;
        let x = Graph::validate(&d.source).map_err(fail)?;
        let m = make_generator(&x, &d.tag).map_err(fail)?;
        return ok(json!({ "generator": raw_morphism(&m), "degree": m.degree() }));
    }
    let m = morphism(&serde_json::from_value(doc).map_err(fail)?)?;
    let d = decompose(&m).map_err(fail)?;
    let recomposes = d.recompose().is_ok_and(|r| r == m);
    let orderings = enumerate_orderings(&d.contraction, ctx.opts.degree_bound, &|_| true).ok();
    verdict(
        recomposes,
        json!({
            "iso": raw_morphism(&d.iso),
            "merger": raw_morphism(&d.merger),
            "contraction": raw_morphism(&d.contraction),
            "contractionFactors": d.contraction_factors,
            "mergerFactors": d.merger_factors,
            "degree": m.degree(),
            "orderings": orderings.as_ref().map(|o| o.len()),
            "recomposes": recomposes,
        }),
    )
}

fn admissible_for(profile: &Option<CategoryProfile>) -> impl Fn(&GraphMorphism) -> bool + '_ {
    move |m| profile.as_ref().is_none_or(|p| crate::decorations::passes(m, p))
}

fn factorize(ctx: &mut Ctx) -> Outcome {
    let m = morphism(&ctx.nth(0)?)?;
    let profile = ctx.graph_profile()?;
    let fs = enumerate_factorizations(&m, ctx.opts.degree_bound, &admissible_for(&profile)).map_err(fail)?;
    let pairs: Vec<Value> = fs.iter().map(|(a, b)| json!({ "first": raw_morphism(a), "second": raw_morphism(b) })).collect();
    ok(json!({ "count": pairs.len(), "factorizations": pairs }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ElementDoc {
    Tree(TreeTerm),
    Terms(Vec<TermJson>),
}

impl ElementDoc {
    fn element(&self, op: &FreeOperad) -> Result<OperadElement, Failure> {
        let e = match self {
            ElementDoc::Tree(t) => op.element(t).map_err(fail)?,
            ElementDoc::Terms(ts) => element_from_json(ts).map_err(fail)?,
        };
        for t in e.keys() {
            op.check(t).map_err(fail)?;
        }
        Ok(op.normalize(&e))
    }
}

#[derive(Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
enum OperadOp {
    Normalize { element: ElementDoc },
    Substitute { outer: TreeTerm, inner: Vec<TreeTerm> },
    Circ { a: ElementDoc, i: usize, b: ElementDoc },
    Insertion { a: ElementDoc, b: ElementDoc },
    Bracket { a: ElementDoc, b: ElementDoc },
    Prelie { a: ElementDoc, b: ElementDoc, c: ElementDoc },
    MasterEquation { alpha: ElementDoc, differential: BTreeMap<String, ElementDoc> },
}

fn free_basis(ctx: &mut Ctx, sig: &PathBuf, arity: Option<usize>, size: Option<usize>) -> Outcome {
    let sig: Signature = ctx.json(sig)?;
    let mode: Mode = ctx.opts.mode.as_deref().unwrap_or("planar").parse().map_err(fail)?;
    let op = FreeOperad::new(sig, mode).map_err(fail)?;
    let elem = |e: &OperadElement| serde_json::to_value(element_to_json(e)).expect("serializable");
    if ctx.files.is_empty() {
        let n = arity.ok_or_else(|| fail("free-basis needs --arity or an operation input"))?;
        let basis = op.free_basis(n, size.unwrap_or(ctx.opts.max_vertices)).map_err(fail)?;
        return ok(json!({ "arity": n, "mode": mode, "dimension": basis.len(), "basis": basis }));
    }
    let doc: OperadOp = ctx.nth(0)?;
    let payload = match doc {
        OperadOp::Normalize { element } => json!({ "result": elem(&element.element(&op)?) }),
        OperadOp::Substitute { outer, inner } => {
            op.check(&outer).map_err(fail)?;
            json!({ "result": elem(&op.substitute(&outer, &inner).map_err(fail)?) })
        }
        OperadOp::Circ { a, i, b } => json!({ "result": elem(&op.circ_i(&a.element(&op)?, i, &b.element(&op)?).map_err(fail)?) }),
        OperadOp::Insertion { a, b } => json!({ "result": elem(&op.insertion_product(&a.element(&op)?, &b.element(&op)?)) }),
        OperadOp::Bracket { a, b } => json!({ "result": elem(&op.bracket(&a.element(&op)?, &b.element(&op)?)) }),
        OperadOp::Prelie { a, b, c } => {
            let (a, b, c) = (a.element(&op)?, b.element(&op)?, c.element(&op)?);
            let r = op.prelie_residual(&a, &b, &c);
            let g = op.graded_prelie_residual(&a, &b, &c);
            json!({ "residual": elem(&r), "vanishes": r.is_zero(), "gradedResidual": elem(&g), "gradedVanishes": g.is_zero() })
        }
        OperadOp::MasterEquation { alpha, differential } => {
            let images = differential.iter().map(|(k, v)| Ok((k.clone(), v.element(&op)?))).collect::<Result<_, Failure>>()?;
            let d = op.differential(images).map_err(fail)?;
            let r = op.master_equation_residual(&alpha.element(&op)?, &d).map_err(fail)?;
            json!({ "residual": elem(&r), "vanishes": r.is_zero() })
        }
    };
    ok(payload)
}

fn oriented_json(x: &OrientedClass) -> Value {
    json!({ "class": x.to_json(), "sign": x.sign })
}

fn dcheck(ctx: &mut Ctx) -> Outcome {
    if ctx.files.is_empty() {
        let v = ctx.opts.max_vertices.max(ctx.opts.max_edges);
        let r = d_squared_sweep(v, ctx.opts.max_edges);
        return verdict(
            r.failures == 0,
            json!({
                "maxVertices": v,
                "maxEdges": ctx.opts.max_edges,
                "graphs": r.graphs,
                "classesChecked": r.nonzero_classes,
                "failures": r.failures,
            }),
        );
    }
    let j: OrientedJson = ctx.nth(0)?;
    let x = OrientedClass::from_json(&j).map_err(fail)?;
    let contractions = x
        .edge_order
        .iter()
        .map(|e| contract_edge_signed(&x, e).map(|c| oriented_json(&c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let sum = class_to_sum(&x);
    let d = differential(&sum);
    let dd = differential(&d);
    let graphs = |g: &Graph| json!({ "ghost": raw_graph(g), "edgeOrder": g.edges() });
    verdict(
        dd.is_zero(),
        json!({
            "normalized": oriented_json(&x),
            "contractions": contractions,
            "differential": sum_json(&d, graphs, "class"),
            "dSquaredVanishes": dd.is_zero(),
        }),
    )
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Factors<T> {
    Product { factors: Vec<T> },
    One(T),
}

impl<T> Factors<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Factors::Product { factors } => factors,
            Factors::One(x) => vec![x],
        }
    }
}

fn ck_mode(profile: &str) -> Option<TreeMode> {
    match profile {
        "ck-planar" => Some(TreeMode::Planar),
        "ck-abstract" => Some(TreeMode::Abstract),
        _ => None,
    }
}

fn forest_json(f: &Forest) -> Value {
    serde_json::to_value(f).expect("serializable")
}

fn coproduct(ctx: &mut Ctx) -> Outcome {
    let profile = ctx.opts.profile.clone().unwrap_or_else(|| "graphs".into());
    let bound = ctx.opts.degree_bound;
    if let Some(tm) = ck_mode(&profile) {
        let factors: Factors<Forest> = ctx.nth(0)?;
        let f: Forest = factors.into_vec().concat();
        let alg = CkAlgebra { mode: tm, bound };
        let d = match ctx.opts.mode.as_deref().unwrap_or("ck") {
            "ck" => ck_coproduct(&f, tm, bound).map_err(fail)?,
            "oracle" => match f.as_slice() {
                [t] => admissible_cuts_oracle(t, tm, bound).map_err(fail)?,
                _ => return Err(fail("the oracle takes a single tree")),
            },
            "cooperad" => match f.as_slice() {
                // Flipped into the forest ⊗ trunk order of the other modes.
                [t] => cooperad_mult_coproduct(&OperadElement::basis(tree_to_term(t)), bound)
                    .map_err(fail)?
                    .map_keys(|(a, b)| (b.clone(), a.clone())),
                _ => return Err(fail("the cooperad coproduct takes a single tree")),
            },
            m => return Err(fail(format!("unknown coproduct mode {m}"))),
        };
        let product = alg.mul(&vec![], &f);
        return ok(json!({
            "profile": profile,
            "product": sum_json(&product, forest_json, "forest"),
            "counit": format_coeff(&counit(&alg, &product)),
            "coproduct": tensor_json(&d, forest_json),
        }));
    }
    let p: ProfileName = profile.parse().map_err(fail)?;
    let factors: Factors<RawMorphism> = ctx.nth(0)?;
    let ms = factors.into_vec().iter().map(morphism).collect::<Result<Vec<_>, _>>()?;
    let phi = ms.iter().skip(1).fold(ms.first().cloned().ok_or_else(|| fail("no factors"))?, |acc, m| union(&acc, m));
    let alg = MorphismAlgebra { profile: Some(CategoryProfile { decoration: None, ..p.profile() }), bound };
    let k = class_of(&phi);
    let (d, product) = match ctx.opts.mode.as_deref().unwrap_or("iso") {
        "iso" => (alg.delta(&k).map_err(fail)?, FormalSum::basis(k)),
        "hopf" => {
            let h = HopfQuotient { inner: alg };
            let x = quotient_class(&k);
            let mut d = Tensor2::zero();
            for (c, coeff) in x.iter() {
                d.add_assign(&h.delta(c).map_err(fail)?.scale(*coeff));
            }
            (d, hopf_quotient(&FormalSum::basis(k)))
        }
        "concrete" => {
            let adm = admissible_for(&alg.profile);
            let d = concrete_coproduct(&phi, bound, &adm).map_err(fail)?;
            let pairs = d.map_keys(|(a, b)| (class_of(a), class_of(b)));
            (pairs, symmetric_coinvariants(&FormalSum::basis(phi.clone())))
        }
        m => return Err(fail(format!("unknown coproduct mode {m}"))),
    };
    ok(json!({
        "profile": profile,
        "product": sum_json(&product, class_json, "class"),
        "coproduct": tensor_json(&d, class_json),
    }))
}

#[derive(Deserialize)]
struct ForestTerm {
    forest: Forest,
    coeff: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ForestElement {
    Terms(Vec<ForestTerm>),
    One(Forest),
}

fn antipode(ctx: &mut Ctx) -> Outcome {
    let profile = ctx.opts.profile.clone().unwrap_or_else(|| "ck-planar".into());
    let bound = ctx.opts.degree_bound;
    if let Some(tm) = ck_mode(&profile) {
        let doc: ForestElement = ctx.nth(0)?;
        let alg = CkAlgebra { mode: tm, bound };
        let mut x = FormalSum::zero();
        match doc {
            ForestElement::One(f) => x.add_term(crate::hopf::trees::normalize_forest(&f, tm), crate::linear::q(1)),
            ForestElement::Terms(ts) => {
                for t in ts {
                    let c = parse_coeff(&t.coeff).ok_or_else(|| fail(format!("bad coefficient {}", t.coeff)))?;
                    x.add_term(crate::hopf::trees::normalize_forest(&t.forest, tm), c);
                }
            }
        }
        let s = Antipode::new(&alg, bound);
        let sx = s.apply(&x).map_err(fail)?;
        let mut identity = true;
        for k in x.keys() {
            let (l, r) = s.convolution_defects(k).map_err(fail)?;
            identity &= l.is_zero() && r.is_zero();
        }
        return verdict(identity, json!({ "profile": profile, "antipode": sum_json(&sx, forest_json, "forest"), "convolutionIdentity": identity }));
    }
    let p: ProfileName = profile.parse().map_err(fail)?;
    let m = morphism(&ctx.nth(0)?)?;
    let h = HopfQuotient { inner: MorphismAlgebra { profile: Some(CategoryProfile { decoration: None, ..p.profile() }), bound } };
    let s = Antipode::new(&h, bound);
    let x = quotient_class(&class_of(&m));
    let sx = s.apply(&x).map_err(fail)?;
    let mut identity = true;
    for k in x.keys() {
        let (l, r) = s.convolution_defects(k).map_err(fail)?;
        identity &= l.is_zero() && r.is_zero();
    }
    verdict(identity, json!({ "profile": profile, "antipode": sum_json(&sx, class_json, "class"), "convolutionIdentity": identity }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    source: RawGraph,
    generators: (GeneratorTag, GeneratorTag),
}

fn relations(ctx: &mut Ctx, sweep: bool) -> Outcome {
    let sources: Vec<Graph> = if sweep {
        aggregates(ctx.opts.max_vertices, ctx.opts.max_edges)
    } else {
        let doc: Value = ctx.nth(0)?;
        if doc.get("generators").is_some() {
            let d: PairDoc = serde_json::from_value(doc).map_err(fail)?;
            let x = Graph::validate(&d.source).map_err(fail)?;
            let v = signed_relation_check(&x, (&d.generators.0, &d.generators.1)).map_err(fail)?;
            return verdict(v.holds(), json!({ "verdict": v, "holds": v.holds() }));
        }
        let raw: RawGraph = serde_json::from_value(doc).map_err(fail)?;
        vec![Graph::validate(&raw).map_err(fail)?]
    };
    let mut counts: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
    for x in &sources {
        for r in relation_instances(x).map_err(fail)? {
            let signed = check_instance(&r).is_ok_and(|v| v.holds());
            let e = counts.entry(format!("{:?}", r.kind)).or_default();
            e.0 += 1;
            e.1 += u64::from(r.holds());
            e.2 += u64::from(signed);
        }
    }
    let pass = counts.values().all(|(n, a, b)| n == a && n == b);
    let table: BTreeMap<String, Value> = counts
        .into_iter()
        .map(|(k, (n, a, b))| (k, json!({ "instances": n, "hold": a, "signsHold": b })))
        .collect();
    verdict(pass, json!({ "sources": sources.len(), "relations": table }))
}

/// The same graph with identifiers shuffled by the seed.
fn shuffled(g: &Graph, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fs: Vec<usize> = (0..g.flag_count()).collect();
    let mut vs: Vec<usize> = (0..g.vertex_count()).collect();
    fs.shuffle(&mut rng);
    vs.shuffle(&mut rng);
    let fnames: BTreeMap<FlagId, FlagId> = g.flags().cloned().zip(fs.iter().map(|i| FlagId(format!("f{i}")))).collect();
    let vnames: BTreeMap<VertexId, VertexId> = g.vertices().iter().cloned().zip(vs.iter().map(|i| VertexId(format!("v{i}")))).collect();
    g.renamed(&|f| fnames[f].clone(), &|v| vnames[v].clone())
}

fn iso(ctx: &mut Ctx) -> Outcome {
    let g1 = Graph::validate(&ctx.nth::<RawGraph>(0)?).map_err(fail)?;
    let (g2, spot_check) = if ctx.files.len() > 1 {
        (Graph::validate(&ctx.nth::<RawGraph>(1)?).map_err(fail)?, false)
    } else {
        (shuffled(&g1, ctx.opts.seed), true)
    };
    let w = find_isomorphism(&g1, &g2);
    let valid = w.as_ref().is_none_or(|w| w.is_valid(&g1, &g2));
    let forms_agree = (canonical_form(&g1) == canonical_form(&g2)) == w.is_some();
    let pass = valid && forms_agree && (!spot_check || w.is_some());
    verdict(
        pass,
        json!({
            "isomorphic": w.is_some(),
            "witness": w.as_ref().map(iso_json),
            "canonicalForms": [hexform(&g1), hexform(&g2)],
            "automorphisms": automorphism_count(&g1),
            "seededSpotCheck": spot_check,
        }),
    )
}

fn sweep(ctx: &Ctx, item: Option<usize>, max_flags: usize) -> (i32, String) {
    let cfg = SweepConfig {
        max_vertices: ctx.opts.max_vertices,
        max_edges: ctx.opts.max_edges,
        degree_bound: ctx.opts.degree_bound,
        max_flags,
    };
    let ids: Vec<usize> = match item {
        Some(i) if (1..=ITEMS.len()).contains(&i) => vec![i],
        Some(i) => {
            let report = Report {
                status: Status::Error,
                verb: "sweep".into(),
                payload: json!({ "message": format!("no acceptance item {i}") }),
                provenance: provenance(&[], ctx.opts.seed),
            };
            return (2, render(&report, ctx.opts.pretty));
        }
        None => (1..=ITEMS.len()).collect(),
    };
    let items: Vec<_> = ids.iter().map(|&i| run_item(i, &cfg)).collect();
    let pass = items.iter().all(|r| r.passed());
    let status = if pass { Status::Ok } else { Status::Violation };
    if ctx.opts.pretty {
        let mut s = String::new();
        for r in &items {
            s += &format!(
                "{:<5} {:>2} {:<28} {:>8} checked {:>4} violations {:>7.2}s / {:.0}s\n",
                if r.passed() { "pass" } else { "FAIL" },
                r.id,
                r.name,
                r.checked,
                r.violations,
                r.seconds,
                r.limit_seconds
            );
        }
        return (status.code(), s);
    }
    let report = Report {
        status,
        verb: "sweep".into(),
        payload: json!({ "config": cfg, "items": items }),
        provenance: provenance(&[], ctx.opts.seed),
    };
    (status.code(), render(&report, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn every_operation_has_a_verb() {
        let verbs: BTreeSet<String> = verb_names().into_iter().collect();
        for (op, verb) in OPERATIONS {
            assert!(verbs.contains(*verb), "{op} is mapped to the unknown verb {verb}");
        }
        let used: BTreeSet<String> = OPERATIONS.iter().map(|(_, v)| v.to_string()).collect();
        assert_eq!(used, verbs);
        let ops: BTreeSet<&str> = OPERATIONS.iter().map(|(o, _)| *o).collect();
        assert_eq!(ops.len(), OPERATIONS.len());
    }

    #[test]
    fn verb_names_are_kebab_case() {
        assert_eq!(verb_name(&Verb::FreeBasis { sig: PathBuf::new(), arity: None, size: None, files: vec![] }), "free-basis");
        assert_eq!(verb_name(&Verb::Sweep { item: None, max_flags: 5 }), "sweep");
    }

    #[test]
    fn unknown_verb_is_an_input_error() {
        let (code, out) = run(["feyncat", "frobnicate"]);
        assert_eq!(code, 2);
        assert!(out.contains("\"status\":\"error\""));
        let (code, _) = run(["feyncat", "sweep", "--bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn shuffle_is_seeded() {
        let g = Graph::corolla("v", &["a", "b", "c"]);
        assert_eq!(shuffled(&g, 7), shuffled(&g, 7));
        assert!(find_isomorphism(&g, &shuffled(&g, 3)).is_some());
    }
}
