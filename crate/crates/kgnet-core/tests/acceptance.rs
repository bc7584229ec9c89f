//! Release gate: one self-contained check per platform guarantee, each
//! printed as a PASS/FAIL line with its runtime and checked against a
//! time limit. Every check rebuilds its own fixtures and oracles so a
//! regression anywhere in the workspace surfaces here.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexMap;
use kgnet_core::engine::EmbeddedBackend;
use kgnet_core::gml::{
    default_profiles, estimate_cost, profile_named, select_method, EmbeddingStore, Family,
    GmlService, LinkResponse, MethodProfile, NodeClassResponse, SelectError, TrainedModel,
};
use kgnet_core::kgmeta::{KgMetaGovernor, ModelMetadata};
use kgnet_core::pipeline::{Platform, QueryOutput};
use kgnet_core::planner::{
    choose_plan, select_models, Candidate, CostModelParams, InferenceClient, ModelChoiceProblem,
    Objective, PlanError, PlanShape, Planner,
};
use kgnet_core::rdf::{Store, Term, Triple, TriplePattern, RDF_TYPE};
use kgnet_core::sparqlml::{
    parse, parse_train_json, render, samples, Budget, ConstraintKey, Priority, QueryKind,
    SparqlMlAst, TaskType, TrainGmlSpec, UdpGroup,
};
use kgnet_core::transform::{
    kg_digest, package_write, package_write_dir, transform, DatasetPackage, DatasetStats, Manifest,
    Splits, TransformOptions,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

// ---- allocation tracking for the reduction check ---------------------------

struct PeakTracking;

static LIVE_BYTES: AtomicUsize = AtomicUsize::new(0);
static PEAK_BYTES: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for PeakTracking {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let live = LIVE_BYTES.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK_BYTES.fetch_max(live, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE_BYTES.fetch_sub(layout.size(), Ordering::Relaxed);
        System.dealloc(ptr, layout);
    }
}

#[global_allocator]
static ALLOCATOR: PeakTracking = PeakTracking;

fn reset_peak() {
    PEAK_BYTES.store(LIVE_BYTES.load(Ordering::Relaxed), Ordering::Relaxed);
}

fn peak_bytes() -> usize {
    PEAK_BYTES.load(Ordering::Relaxed)
}

// ---- shared fixture helpers ------------------------------------------------

const DBLP: &str = "https://www.dblp.org/";

fn iri(suffix: &str) -> Term {
    Term::iri(format!("{DBLP}{suffix}"))
}

fn t(s: &Term, p: &Term, o: &Term) -> Triple {
    Triple::new(s.clone(), p.clone(), o.clone()).unwrap()
}

fn node(i: usize) -> Term {
    Term::iri(format!("http://example.org/n{i}"))
}

fn pred(i: usize) -> Term {
    Term::iri(format!("http://example.org/p{i}"))
}

fn backend_over(triples: &BTreeSet<Triple>, graph: &str) -> EmbeddedBackend {
    let store = Arc::new(Store::new());
    store.insert(graph, triples.iter().cloned().collect()).unwrap();
    EmbeddedBackend::new(store, graph)
}

fn nc_task_for(target: &str, label: &str) -> TrainGmlSpec {
    TrainGmlSpec {
        name: "acceptance-nc".into(),
        task_type: TaskType::NodeClassifier,
        target_node_type: target.into(),
        label_predicate: Some(label.into()),
        source_node_type: None,
        destination_node_type: None,
        budget: Budget::default(),
        hyperparams: Default::default(),
        method_override: None,
        sampling_override: None,
    }
}

// ---- 1: dialect parser -----------------------------------------------------

fn rand_token(rng: &mut ChaCha8Rng, first: &[u8], rest: &[u8], max_extra: usize) -> String {
    let mut s = String::new();
    s.push(first[rng.gen_range(0..first.len())] as char);
    for _ in 0..rng.gen_range(0..=max_extra) {
        s.push(rest[rng.gen_range(0..rest.len())] as char);
    }
    s
}

fn rand_local(rng: &mut ChaCha8Rng) -> String {
    const FIRST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
    const REST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";
    rand_token(rng, FIRST, REST, 8)
}

fn rand_var(rng: &mut ChaCha8Rng, prefix: &str) -> String {
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    format!("{prefix}{}", rand_token(rng, REST, REST, 4))
}

fn base_prefixes() -> IndexMap<String, String> {
    IndexMap::from([
        ("dblp".to_string(), DBLP.to_string()),
        ("kgnet".to_string(), "https://www.kgnet.com/".to_string()),
    ])
}

fn rand_select_ast(rng: &mut ChaCha8Rng) -> SparqlMlAst {
    let subj = rand_var(rng, "s");
    let obj = rand_var(rng, "o");
    let pred_var = rand_var(rng, "m");
    let (t1, t2) = (iri(&rand_local(rng)), iri(&rand_local(rng)));
    let task = if rng.gen() {
        TaskType::NodeClassifier
    } else {
        TaskType::LinkPredictor
    };
    let mut constraints = IndexMap::new();
    match task {
        TaskType::NodeClassifier => {
            constraints.insert(ConstraintKey::TargetNode, t1.clone());
            constraints.insert(ConstraintKey::NodeLabel, t2);
        }
        _ => {
            constraints.insert(ConstraintKey::SourceNode, t1.clone());
            constraints.insert(ConstraintKey::DestinationNode, t2);
        }
    }
    if rng.gen() {
        constraints.insert(
            ConstraintKey::TopK,
            Term::typed_literal(
                rng.gen_range(1u64..1000).to_string(),
                "http://www.w3.org/2001/XMLSchema#integer",
            ),
        );
    }
    SparqlMlAst {
        kind: QueryKind::Select,
        prefixes: base_prefixes(),
        projection: vec![subj.clone(), obj.clone()],
        data_patterns: vec![TriplePattern::new(
            Term::var(subj.clone()),
            Term::iri(RDF_TYPE),
            t1,
        )],
        gml_patterns: vec![UdpGroup {
            predicate_var: pred_var,
            task_type: task,
            subject_var: Some(subj),
            object_var: Some(obj),
            constraints,
        }],
        train_payload: None,
    }
}

fn rand_train_ast(rng: &mut ChaCha8Rng) -> SparqlMlAst {
    let is_nc = rng.gen();
    let (a, b) = (rand_local(rng), rand_local(rng));
    let spec = TrainGmlSpec {
        name: rand_local(rng),
        task_type: if is_nc {
            TaskType::NodeClassifier
        } else {
            TaskType::LinkPredictor
        },
        target_node_type: format!("{DBLP}{a}"),
        label_predicate: is_nc.then(|| format!("{DBLP}{b}")),
        source_node_type: (!is_nc).then(|| format!("{DBLP}{a}")),
        destination_node_type: (!is_nc).then(|| format!("{DBLP}{b}")),
        budget: Budget {
            max_memory_bytes: rng.gen_range(1..10_000_000_000),
            max_time_seconds: rng.gen_range(1..1_000_000),
            priority: *[Priority::ModelScore, Priority::TrainingTime, Priority::Memory]
                .choose(rng)
                .unwrap(),
        },
        hyperparams: IndexMap::new(),
        method_override: None,
        sampling_override: None,
    };
    SparqlMlAst {
        kind: QueryKind::InsertTrain,
        prefixes: base_prefixes(),
        projection: Vec::new(),
        data_patterns: Vec::new(),
        gml_patterns: Vec::new(),
        train_payload: Some(spec),
    }
}

fn rand_delete_ast(rng: &mut ChaCha8Rng) -> SparqlMlAst {
    let mut ast = rand_select_ast(rng);
    ast.kind = QueryKind::DeleteModel;
    ast.projection.clear();
    ast.data_patterns.clear();
    for g in &mut ast.gml_patterns {
        g.subject_var = None;
        g.object_var = None;
    }
    ast
}

fn check_parser() {
    // golden: the canonical node-classification SELECT
    let ast = parse(samples::PAPER_VENUE_SELECT).unwrap();
    assert_eq!(ast.kind, QueryKind::Select);
    assert_eq!(ast.projection, vec!["title", "venue"]);
    let g = &ast.gml_patterns[0];
    assert_eq!(g.task_type, TaskType::NodeClassifier);
    assert_eq!(g.subject_var.as_deref(), Some("paper"));
    assert_eq!(g.object_var.as_deref(), Some("venue"));
    assert_eq!(g.constraints.get(&ConstraintKey::TargetNode), Some(&iri("Publication")));
    assert_eq!(g.constraints.get(&ConstraintKey::NodeLabel), Some(&iri("venue")));

    // golden: the link-prediction SELECT with a top-k constraint
    let ast = parse(samples::AUTHOR_AFFILIATION_SELECT).unwrap();
    let g = &ast.gml_patterns[0];
    assert_eq!(g.task_type, TaskType::LinkPredictor);
    assert_eq!(g.top_k(), Some(10));

    // golden: the training INSERT with its budget
    let ast = parse(samples::PAPER_VENUE_TRAIN).unwrap();
    assert_eq!(ast.kind, QueryKind::InsertTrain);
    let spec = ast.train_payload.as_ref().unwrap();
    assert_eq!(spec.task_type, TaskType::NodeClassifier);
    assert_eq!(spec.budget.max_memory_bytes, 50 * (1u64 << 30));
    assert_eq!(spec.budget.max_time_seconds, 3600);
    assert_eq!(spec.budget.priority, Priority::ModelScore);

    // golden: the model-deletion query
    let ast = parse(samples::PAPER_VENUE_DELETE).unwrap();
    assert_eq!(ast.kind, QueryKind::DeleteModel);
    assert_eq!(ast.gml_patterns.len(), 1);

    // render∘parse round-trips for the goldens and 100 random ASTs
    for text in [
        samples::PAPER_VENUE_SELECT,
        samples::AUTHOR_AFFILIATION_SELECT,
        samples::PAPER_VENUE_TRAIN,
        samples::PAPER_VENUE_DELETE,
    ] {
        let ast = parse(text).unwrap();
        assert_eq!(parse(&render(&ast)).unwrap(), ast);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let ast = match i % 3 {
            0 => rand_select_ast(&mut rng),
            1 => rand_train_ast(&mut rng),
            _ => rand_delete_ast(&mut rng),
        };
        let rendered = render(&ast);
        let reparsed = parse(&rendered).unwrap_or_else(|e| panic!("{rendered}\n{e}"));
        assert_eq!(ast, reparsed, "round trip failed for:\n{rendered}");
    }
}

// ---- 2: sampler vs breadth-first oracle ------------------------------------

/// Direction-aware, hop-bounded traversal written independently of the
/// CONSTRUCT-based extraction it checks.
fn bfs_oracle(triples: &BTreeSet<Triple>, target_type: &str, d: u8, h: u8) -> BTreeSet<Triple> {
    let targets: BTreeSet<Term> = triples
        .iter()
        .filter(|t| {
            t.predicate.as_iri() == Some(RDF_TYPE) && t.object.as_iri() == Some(target_type)
        })
        .map(|t| t.subject.clone())
        .collect();
    let mut out = BTreeSet::new();
    let mut frontier = targets.clone();
    for _ in 0..h {
        let mut next = BTreeSet::new();
        for t in triples {
            if frontier.contains(&t.subject) {
                out.insert(t.clone());
                next.insert(t.object.clone());
            }
        }
        frontier = next;
    }
    if d == 2 {
        let mut frontier = targets;
        for _ in 0..h {
            let mut next = BTreeSet::new();
            for t in triples {
                if frontier.contains(&t.object) {
                    out.insert(t.clone());
                    next.insert(t.subject.clone());
                }
            }
            frontier = next;
        }
    }
    out
}

fn rand_graph(rng: &mut ChaCha8Rng) -> BTreeSet<Triple> {
    let mut kg = BTreeSet::new();
    for _ in 0..rng.gen_range(0..30) {
        let (n, ty) = (rng.gen_range(0..30), rng.gen_range(0..5));
        kg.insert(
            Triple::new(
                node(n),
                Term::iri(RDF_TYPE),
                Term::iri(format!("http://example.org/T{ty}")),
            )
            .unwrap(),
        );
    }
    for _ in 0..rng.gen_range(0..170) {
        let (s, p, o) = (rng.gen_range(0..30), rng.gen_range(0..4), rng.gen_range(0..30));
        let object = if rng.gen() {
            Term::literal(format!("v{o}"))
        } else {
            node(o)
        };
        kg.insert(Triple::new(node(s), pred(p), object).unwrap());
    }
    kg
}

fn check_sampler() {
    use kgnet_core::sampler::{extract_subgraph, SamplingSpec};
    let target = "http://example.org/T0";
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let kg = rand_graph(&mut rng);
        let b = backend_over(&kg, "http://example.org/kg");
        let g = |d, h| {
            extract_subgraph(&b, &SamplingSpec::new(target, d, h).unwrap())
                .unwrap()
                .triples
        };
        let (d1h1, d1h2, d2h1, d2h2) = (g(1, 1), g(1, 2), g(2, 1), g(2, 2));
        for (got, d, h) in [(&d1h1, 1, 1), (&d1h2, 1, 2), (&d2h1, 2, 1), (&d2h2, 2, 2)] {
            assert_eq!(got, &bfs_oracle(&kg, target, d, h), "mismatch at d{d}h{h}");
            assert!(got.is_subset(&kg));
        }
        assert!(d1h1.is_subset(&d1h2));
        assert!(d2h1.is_subset(&d2h2));
        assert!(d1h1.is_subset(&d2h1));
        assert!(d1h2.is_subset(&d2h2));
    }
}

// ---- 3: task-oriented reduction --------------------------------------------

/// 10 000 triples: 1 000 target nodes with 6 triples each (type, label,
/// 4 edges to leaves), plus 1 000 stray nodes with 4 triples each that no
/// target reaches at one outgoing hop.
fn reduction_kg() -> BTreeSet<Triple> {
    let rdf_type = Term::iri(RDF_TYPE);
    let target_type = Term::iri("http://t/type/Target");
    let stray_type = Term::iri("http://t/type/Stray");
    let label = Term::iri("http://t/p/label");
    let edge = Term::iri("http://t/p/edge");
    let target = |i: usize| Term::iri(format!("http://t/target/{i}"));
    let leaf = |i: usize| Term::iri(format!("http://t/leaf/{i}"));
    let stray = |i: usize| Term::iri(format!("http://t/stray/{i}"));
    let mut kg = BTreeSet::new();
    for i in 0..1000 {
        kg.insert(t(&target(i), &rdf_type, &target_type));
        kg.insert(t(&target(i), &label, &Term::iri(format!("http://t/l/{}", i % 3))));
        for j in 0..4 {
            kg.insert(t(&target(i), &edge, &leaf((i * 4 + j) % 500)));
        }
    }
    for i in 0..1000 {
        kg.insert(t(&stray(i), &rdf_type, &stray_type));
        for j in 1..4 {
            kg.insert(t(&stray(i), &edge, &stray((i + j * 7) % 1000)));
        }
    }
    assert_eq!(kg.len(), 10_000);
    kg
}

fn timed_transform(
    kg: &BTreeSet<Triple>,
    task: &TrainGmlSpec,
) -> (DatasetPackage, f64, usize) {
    // best-of-three wall time; peak live allocation over all three runs
    let mut best = f64::INFINITY;
    let mut pkg = None;
    reset_peak();
    let before = peak_bytes();
    for _ in 0..3 {
        let start = Instant::now();
        let p = transform(kg, task, &TransformOptions::default()).unwrap();
        best = best.min(start.elapsed().as_secs_f64());
        pkg = Some(p);
    }
    (pkg.unwrap(), best, peak_bytes() - before)
}

fn check_reduction() {
    use kgnet_core::sampler::{extract_subgraph, SamplingSpec};
    let kg = reduction_kg();
    let b = backend_over(&kg, "http://t/kg");
    let spec = SamplingSpec::new("http://t/type/Target", 1, 1).unwrap();
    let reduced = extract_subgraph(&b, &spec).unwrap().triples;
    assert!(
        reduced.len() as f64 <= 0.6 * kg.len() as f64,
        "|KG'| = {} exceeds 0.6 × {}",
        reduced.len(),
        kg.len()
    );

    let task = nc_task_for("http://t/type/Target", "http://t/p/label");
    let (full_pkg, full_time, full_mem) = timed_transform(&kg, &task);
    let (reduced_pkg, reduced_time, reduced_mem) = timed_transform(&reduced, &task);
    // both produce the complete label set; the reduced one does so cheaper
    assert_eq!(full_pkg.labels.len(), 1000);
    assert_eq!(reduced_pkg.labels.len(), 1000);
    assert!(
        reduced_time < full_time,
        "transform(KG') took {reduced_time:.4}s, transform(KG) {full_time:.4}s"
    );
    assert!(
        reduced_mem < full_mem,
        "transform(KG') peaked at {reduced_mem} bytes, transform(KG) at {full_mem}"
    );
}

// ---- 4: transformer integrity ----------------------------------------------

/// Deterministic pseudo-random KG: `n` nodes over two types with chain +
/// hash-derived edges and labels on every even node.
fn big_random_kg(n: u32, salt: u64) -> BTreeSet<Triple> {
    let rdf_type = Term::iri(RDF_TYPE);
    let t0 = Term::iri("http://t/type/T0");
    let t1 = Term::iri("http://t/type/T1");
    let label = Term::iri("http://t/p/label");
    let edge = Term::iri("http://t/p/edge");
    let n_node = |i: u32| Term::iri(format!("http://t/n/{i}"));
    let mut kg = BTreeSet::new();
    for i in 0..n {
        let ty = if i % 2 == 0 { &t0 } else { &t1 };
        kg.insert(t(&n_node(i), &rdf_type, ty));
        kg.insert(t(&n_node(i), &edge, &n_node((i + 1) % n)));
        let j = ((i as u64).wrapping_mul(salt) % n as u64) as u32;
        kg.insert(t(&n_node(i), &edge, &n_node(j)));
        if i % 2 == 0 {
            kg.insert(t(&n_node(i), &label, &Term::iri(format!("http://t/l/{}", i % 3))));
        }
    }
    kg
}

fn check_package_invariants(kg: &BTreeSet<Triple>, task: &TrainGmlSpec, pkg: &DatasetPackage) {
    // label edges never reach the relation tables
    if let Some(pred) = task.label_predicate.as_deref() {
        assert!(!pkg.relations.contains_key(pred));
    }
    // ids are in range for every edge
    for edges in pkg.relations.values() {
        for e in edges {
            assert!((e.src_id as usize) < pkg.node_maps[&e.src_type].len());
            assert!((e.dst_id as usize) < pkg.node_maps[&e.dst_type].len());
        }
    }
    // label rows reference valid targets and dictionary entries
    let n_targets = pkg.node_maps[&task.target_node_type].len();
    for (target, l) in &pkg.labels {
        assert!((*target as usize) < n_targets);
        assert!((*l as usize) < pkg.label_dict.len());
    }
    // splits partition the labeled targets exactly
    let labeled: BTreeSet<u32> = pkg.labels.iter().map(|(t, _)| *t).collect();
    let mut seen = BTreeSet::new();
    for part in [&pkg.splits.train, &pkg.splits.valid, &pkg.splits.test] {
        for id in part {
            assert!(seen.insert(*id), "id {id} appears in two splits");
        }
    }
    assert_eq!(seen, labeled);
    // stats agree with contents and the digest matches the input
    assert_eq!(&pkg.recompute_stats(), &pkg.stats);
    assert_eq!(pkg.manifest.kg_digest, kg_digest(kg));
    // decoding recovers exactly the input minus its label edges
    let expected: BTreeSet<Triple> = kg
        .iter()
        .filter(|t| t.predicate.as_iri() != task.label_predicate.as_deref())
        .cloned()
        .collect();
    assert_eq!(pkg.decode_triples().unwrap(), expected);
}

fn dir_snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let entry = entry.unwrap();
            if entry.file_type().unwrap().is_dir() {
                stack.push(entry.path());
            } else {
                let rel = entry
                    .path()
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, std::fs::read(entry.path()).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn check_transformer() {
    let task = nc_task_for("http://t/type/T0", "http://t/p/label");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.gen_range(4u32..30);
        let salt = rng.gen_range(1u64..1000);
        let seed = rng.gen_range(0u64..100);
        let kg = big_random_kg(n, salt);
        let opts = TransformOptions { seed, ..TransformOptions::default() };
        let pkg = transform(&kg, &task, &opts).unwrap();
        check_package_invariants(&kg, &task, &pkg);
    }

    // identical inputs produce byte-identical, checksummed packages
    let kg = big_random_kg(40, 99);
    let opts = TransformOptions { seed: 7, ..TransformOptions::default() };
    let a = transform(&kg, &task, &opts).unwrap();
    let b = transform(&kg, &task, &opts).unwrap();
    assert_eq!(a, b);
    let tmp = tempfile::tempdir().unwrap();
    let (zip_a, zip_b) = (tmp.path().join("a.zip"), tmp.path().join("b.zip"));
    package_write(&a, &zip_a).unwrap();
    package_write(&b, &zip_b).unwrap();
    assert_eq!(std::fs::read(&zip_a).unwrap(), std::fs::read(&zip_b).unwrap());
    let (dir_a, dir_b) = (tmp.path().join("a"), tmp.path().join("b"));
    package_write_dir(&a, &dir_a).unwrap();
    package_write_dir(&b, &dir_b).unwrap();
    assert_eq!(dir_snapshot(&dir_a), dir_snapshot(&dir_b));

    // a tampered member fails its checksum on read
    let labels = dir_a.join("labels.csv");
    let mut data = std::fs::read(&labels).unwrap();
    data.extend_from_slice(b"9,9\n");
    std::fs::write(&labels, data).unwrap();
    assert!(kgnet_core::transform::package_read_dir(&dir_a).is_err());
}

// ---- 5: optimizer exactness ------------------------------------------------

fn oracle_select(problem: &ModelChoiceProblem) -> Option<Vec<usize>> {
    fn assignments(groups: &[Vec<Candidate>]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for g in groups {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..g.len()).map(move |i| {
                        let mut v = prefix.clone();
                        v.push(i);
                        v
                    })
                })
                .collect();
        }
        out
    }
    let mut best: Option<(Vec<usize>, f64, f64, Vec<String>)> = None;
    for idx in assignments(&problem.groups) {
        let picks: Vec<&Candidate> = idx
            .iter()
            .zip(&problem.groups)
            .map(|(i, g)| &g[*i])
            .collect();
        let acc: f64 = picks.iter().map(|c| c.accuracy).sum();
        let time: f64 = picks.iter().map(|c| c.time_ms).sum();
        let uris: Vec<String> = picks.iter().map(|c| c.model_uri.clone()).collect();
        let feasible = match problem.objective {
            Objective::MaxAccuracy { max_total_time_ms } => time <= max_total_time_ms,
            Objective::MinTime { min_accuracy } => picks.iter().all(|c| c.accuracy >= min_accuracy),
        };
        if !feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b_acc, b_time, b_uris)) => {
                let primary = match problem.objective {
                    Objective::MaxAccuracy { .. } => acc.partial_cmp(b_acc).unwrap(),
                    Objective::MinTime { .. } => b_time.partial_cmp(&time).unwrap(),
                };
                primary
                    .then(acc.partial_cmp(b_acc).unwrap())
                    .then(b_time.partial_cmp(&time).unwrap())
                    .then(b_uris.cmp(&uris))
                    .is_gt()
            }
        };
        if better {
            best = Some((idx, acc, time, uris));
        }
    }
    best.map(|(idx, ..)| idx)
}

fn rand_problem(rng: &mut ChaCha8Rng) -> ModelChoiceProblem {
    let groups = (0..rng.gen_range(1..=3))
        .map(|g| {
            (0..rng.gen_range(1..=6))
                .map(|i| Candidate {
                    model_uri: format!("http://m/{g}/{i}"),
                    artifact_ref: format!("a{g}{i}"),
                    accuracy: rng.gen_range(0..=100) as f64 / 100.0,
                    time_ms: rng.gen_range(1..=1000) as f64,
                    cardinality: 100,
                })
                .collect()
        })
        .collect();
    let objective = if rng.gen() {
        Objective::MaxAccuracy {
            max_total_time_ms: rng.gen_range(0..=300) as f64 * 10.0,
        }
    } else {
        Objective::MinTime {
            min_accuracy: rng.gen_range(0..=100) as f64 / 100.0,
        }
    };
    ModelChoiceProblem { groups, objective }
}

fn check_optimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let problem = rand_problem(&mut rng);
        match (select_models(&problem), oracle_select(&problem)) {
            (Ok(got), Some(expect)) => assert_eq!(got.chosen, expect),
            (Err(PlanError::Infeasible(_)), None) => {}
            (got, expect) => panic!("mismatch: {got:?} vs {expect:?}"),
        }
    }

    let params = CostModelParams::default();
    for _ in 0..1000 {
        let b = rng.gen_range(0u64..1_000_000);
        let c = rng.gen_range(0u64..10_000_000);
        let (shape, cost) = choose_plan(b, c, &params);
        let per_binding = b as f64 * params.c_call_ms;
        let dictionary = params.c_call_ms + c as f64 * params.c_item_ms;
        assert!(cost <= per_binding && cost <= dictionary);
        match shape {
            PlanShape::PerBinding => assert!(cost == per_binding && cost < dictionary),
            PlanShape::Dictionary => assert!(cost == dictionary && cost <= per_binding),
        }
    }

    // worked arithmetic: 100 bindings beat a 1.2M-entry dictionary;
    // 100 000 bindings do not
    assert_eq!(choose_plan(100, 1_200_000, &params), (PlanShape::PerBinding, 5000.0));
    assert_eq!(choose_plan(100_000, 1_200_000, &params), (PlanShape::Dictionary, 12050.0));
}

// ---- 6: call-count guarantee -----------------------------------------------

fn planner_nc_task() -> TrainGmlSpec {
    nc_task_for(&format!("{DBLP}Publication"), &format!("{DBLP}venue"))
}

/// Package whose targets are the given paper IRIs, all labeled with the
/// first venue so the majority model is exact.
fn planner_nc_package(papers: &[String]) -> DatasetPackage {
    let target = format!("{DBLP}Publication");
    let keys: Vec<String> = papers.iter().map(|p| format!("{DBLP}rec/{p}")).collect();
    let node_maps = BTreeMap::from([(target.clone(), keys)]);
    let labels: Vec<(u32, u32)> = (0..papers.len() as u32).map(|i| (i, 0)).collect();
    let stats = DatasetStats {
        n_nodes: [(target.clone(), papers.len())].into(),
        n_edges: BTreeMap::new(),
        n_node_types: 1,
        n_edge_types: 0,
        n_labels: 2,
        total_triples: 0,
    };
    DatasetPackage {
        node_maps,
        relations: BTreeMap::new(),
        labels,
        label_dict: vec![format!("{DBLP}venue/VLDB"), format!("{DBLP}venue/ICLR")],
        splits: Splits {
            train: (0..papers.len() as u32).collect(),
            valid: BTreeSet::new(),
            test: BTreeSet::new(),
        },
        stats,
        manifest: Manifest {
            format_version: 1,
            kg_digest: "fixture".into(),
            task_type: TaskType::NodeClassifier,
            target_node_type: target,
            label_predicate: Some(format!("{DBLP}venue")),
            destination_node_type: None,
            seed: 0,
            strategy: "random".into(),
            ratios: (1.0, 0.0, 0.0),
            multi_typed_nodes: 0,
            warnings: Vec::new(),
        },
    }
}

fn meta_for(model: &TrainedModel) -> ModelMetadata {
    ModelMetadata {
        model_uri: String::new(),
        task_type: model.task_type,
        target_node_type: model.target_node_type.clone(),
        label_predicate: Some(format!("{DBLP}venue")),
        source_node_type: None,
        destination_node_type: None,
        method_name: model.method_name.clone(),
        accuracy: model.metrics.accuracy,
        inference_time_ms: model.metrics.mean_inference_ms,
        model_cardinality: model.metrics.cardinality,
        trained_on: DBLP.into(),
        sampling: (1, 1),
        artifact_ref: model.artifact_ref.clone(),
        created_at: "2026-08-24T00:00:00Z".into(),
    }
}

struct CountingClient<'a> {
    inner: &'a GmlService,
    calls: AtomicUsize,
}

impl InferenceClient for CountingClient<'_> {
    fn node_class(
        &self,
        artifact_ref: &str,
        targets: &[String],
    ) -> Result<NodeClassResponse, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.node_class(artifact_ref, targets)
    }

    fn links(
        &self,
        artifact_ref: &str,
        sources: &[String],
        k: usize,
    ) -> Result<LinkResponse, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.links(artifact_ref, sources, k)
    }
}

/// Store with `n` papers, a governor, and a trained majority model.
fn planner_pipeline(n: usize) -> (Arc<Store>, KgMetaGovernor, GmlService) {
    let store = Arc::new(Store::new());
    let mut triples = Vec::new();
    let papers: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    for p in &papers {
        let subject = iri(&format!("rec/{p}"));
        triples.push(t(&subject, &Term::iri(RDF_TYPE), &iri("Publication")));
        triples
            .push(Triple::new(subject, iri("title"), Term::literal(format!("Title {p}"))).unwrap());
    }
    store.insert(DBLP, triples).unwrap();
    let gov = KgMetaGovernor::new(store.clone());
    let svc = GmlService::in_memory();
    let profiles = default_profiles();
    let profile = profile_named(&profiles, "majority-label").unwrap();
    let model = svc
        .train(&planner_nc_task(), &planner_nc_package(&papers), profile)
        .unwrap();
    gov.register_model(&meta_for(&model)).unwrap();
    (store, gov, svc)
}

fn check_call_counts() {
    let ast = parse(samples::PAPER_VENUE_SELECT).unwrap();
    for n in [1usize, 3, 12, 40] {
        let (store, gov, svc) = planner_pipeline(n);
        let backend = EmbeddedBackend::new(store, DBLP);
        let client = CountingClient { inner: &svc, calls: AtomicUsize::new(0) };
        let mut planner = Planner::new(&gov, &backend, &client);

        // zero per-item cost forces the dictionary shape at any binding count
        planner.params = CostModelParams { c_call_ms: 50.0, c_item_ms: 0.0 };
        let plan = planner.plan(&ast).unwrap();
        assert_eq!(plan.calls[0].shape, PlanShape::Dictionary);
        let table = planner.run(&ast, &plan).unwrap();
        assert_eq!(table.rows.len(), n);
        assert_eq!(client.calls.load(Ordering::SeqCst), 1, "dictionary at B={n}");

        // enormous per-item cost forces one call per binding
        client.calls.store(0, Ordering::SeqCst);
        planner.params = CostModelParams { c_call_ms: 50.0, c_item_ms: 1e9 };
        let plan = planner.plan(&ast).unwrap();
        assert_eq!(plan.calls[0].shape, PlanShape::PerBinding);
        planner.run(&ast, &plan).unwrap();
        assert_eq!(client.calls.load(Ordering::SeqCst), n, "per-binding at B={n}");
    }
}

// ---- 7: end-to-end pipeline ------------------------------------------------

/// Toy bibliographic KG: 4 venues × 8 papers (coauthorship cliques per
/// venue), 12 authors in 4 affiliation groups (colleague cliques).
fn load_toy_dblp(platform: &Platform) {
    let rdf_type = Term::iri(RDF_TYPE);
    let publication = iri("Publication");
    let person = iri("person");
    let affiliation_type = iri("affiliation");
    let venue_type = iri("venue_node");
    let venue_pred = iri("venue");
    let title = iri("title");
    let shares_author = iri("sharesAuthor");
    let writes = iri("writes");
    let affiliated = iri("affiliatedWith");
    let colleague = iri("colleagueOf");

    let mut triples = Vec::new();
    let venues: Vec<Term> = (0..4).map(|v| iri(&format!("venue/v{v}"))).collect();
    for v in &venues {
        triples.push(t(v, &rdf_type, &venue_type));
    }
    for (v, venue) in venues.iter().enumerate() {
        let papers: Vec<Term> = (0..8).map(|i| iri(&format!("rec/p{v}_{i}"))).collect();
        for (i, p) in papers.iter().enumerate() {
            triples.push(t(p, &rdf_type, &publication));
            triples.push(t(p, &venue_pred, venue));
            triples.push(
                Triple::new(p.clone(), title.clone(), Term::literal(format!("Paper {v}-{i}")))
                    .unwrap(),
            );
            for q in papers.iter().skip(i + 1) {
                triples.push(t(p, &shares_author, q));
            }
        }
    }
    let affiliations: Vec<Term> = (0..4).map(|f| iri(&format!("org/f{f}"))).collect();
    for f in &affiliations {
        triples.push(t(f, &rdf_type, &affiliation_type));
    }
    for g in 0..4usize {
        let authors: Vec<Term> = (0..3).map(|i| iri(&format!("person/a{g}_{i}"))).collect();
        for (i, a) in authors.iter().enumerate() {
            triples.push(t(a, &rdf_type, &person));
            triples.push(t(a, &affiliated, &affiliations[g]));
            triples.push(t(a, &writes, &iri(&format!("rec/p{g}_{i}"))));
            for b in authors.iter().skip(i + 1) {
                triples.push(t(a, &colleague, b));
            }
        }
    }
    platform.store.insert(DBLP, triples).unwrap();
}

const SELECT_VENUES: &str = "\
prefix dblp: <https://www.dblp.org/>
prefix kgnet: <https://www.kgnet.com/>
select ?paper ?venue
where {
?paper a dblp:Publication.
?paper ?NodeClassifier ?venue.
?NodeClassifier a kgnet:NodeClassifier.
?NodeClassifier kgnet:TargetNode dblp:Publication.
?NodeClassifier kgnet:NodeLabel dblp:venue.}";

const SELECT_AFFILIATIONS: &str = "\
prefix dblp: <https://www.dblp.org/>
prefix kgnet: <https://www.kgnet.com/>
select ?author ?affiliation
where { ?author a dblp:person.
?author ?LinkPredictor ?affiliation.
?LinkPredictor a kgnet:LinkPredictor.
?LinkPredictor kgnet:SourceNode dblp:person.
?LinkPredictor kgnet:DestinationNode dblp:affiliation.
?LinkPredictor kgnet:TopK-Links 10.}";

const DELETE_VENUE_MODEL: &str = "\
prefix dblp: <https://www.dblp.org/>
prefix kgnet: <https://www.kgnet.com/>
delete where {
?NodeClassifier a kgnet:NodeClassifier.
?NodeClassifier kgnet:TargetNode dblp:Publication.
?NodeClassifier kgnet:NodeLabel dblp:venue.}";

fn check_end_to_end() {
    let platform = Platform::in_memory(DBLP);
    load_toy_dblp(&platform);

    // node classification at the default one-hop outgoing scope
    let nc = platform
        .train(&nc_task_for(&format!("{DBLP}Publication"), &format!("{DBLP}venue")))
        .unwrap();
    assert_eq!(nc.method_name, "neighbor-label-frequency");
    assert_eq!(nc.sampling, (1, 1));
    let QueryOutput::Bindings(table) = platform.query(SELECT_VENUES).unwrap() else {
        panic!("expected bindings");
    };
    assert_eq!(table.rows.len(), 32);
    // neighbor-vote oracle: a paper's coauthorship neighbors all share its
    // venue, so each prediction equals the clique's venue
    for row in &table.rows {
        let paper = row["paper"].as_iri().unwrap();
        let clique = paper
            .strip_prefix(&format!("{DBLP}rec/p"))
            .and_then(|s| s.split('_').next())
            .unwrap();
        assert_eq!(row["venue"], iri(&format!("venue/v{clique}")), "wrong venue for {paper}");
    }

    // link prediction at the default bidirectional one-hop scope
    let lp_spec = TrainGmlSpec {
        name: "author-affiliation".into(),
        task_type: TaskType::LinkPredictor,
        target_node_type: format!("{DBLP}person"),
        label_predicate: None,
        source_node_type: Some(format!("{DBLP}person")),
        destination_node_type: Some(format!("{DBLP}affiliation")),
        budget: Budget::default(),
        hyperparams: Default::default(),
        method_override: None,
        sampling_override: None,
    };
    let lp = platform.train(&lp_spec).unwrap();
    assert_eq!(lp.method_name, "common-neighbors");
    assert_eq!(lp.sampling, (2, 1));
    let QueryOutput::Bindings(table) = platform.query(SELECT_AFFILIATIONS).unwrap() else {
        panic!("expected bindings");
    };
    let mut per_author: BTreeMap<&str, usize> = BTreeMap::new();
    for row in &table.rows {
        *per_author.entry(row["author"].as_iri().unwrap()).or_default() += 1;
    }
    assert_eq!(per_author.len(), 12);
    assert!(per_author.values().all(|&n| n <= 10));
    // shared-neighbor oracle: an author's colleagues share their org, so
    // the top-ranked affiliation is the author's own
    for g in 0..4 {
        let author = format!("{DBLP}person/a{g}_0");
        let ranked = platform.gml.infer_links(&lp.artifact_ref, &[author.clone()], 10).unwrap();
        assert_eq!(ranked.predictions[&author][0], format!("{DBLP}org/f{g}"));
    }

    // deleting the classifier makes the venue query fail cleanly
    let QueryOutput::Deleted(uris) = platform.query(DELETE_VENUE_MODEL).unwrap() else {
        panic!("expected deletion");
    };
    assert_eq!(uris.len(), 1);
    let err = platform.query(SELECT_VENUES).unwrap_err();
    assert!(err.to_string().contains("no model matches"), "{err}");
}

// ---- 8: budget feasibility -------------------------------------------------

fn rand_profile(rng: &mut ChaCha8Rng, idx: usize) -> MethodProfile {
    let an = rng.gen_range(0u64..1000) as f64;
    let ae = rng.gen_range(0u64..1000) as f64;
    MethodProfile {
        name: format!("m{idx}"),
        family: if rng.gen() { Family::FullBatch } else { Family::MiniBatchSampling },
        tasks: [TaskType::NodeClassifier].into(),
        alpha_fixed_bytes: 1024.0,
        alpha_node_bytes: an,
        alpha_edge_bytes: ae,
        beta_edge_seconds: an * 1e-6,
        beta_node_seconds: ae * 1e-6,
        default_epochs: rng.gen_range(1..20),
        batch_fraction: rng.gen_range(0.05..1.0),
        quality_prior: rng.gen_range(0..4),
    }
}

fn check_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let profiles: Vec<MethodProfile> = (0..rng.gen_range(1..6))
            .map(|i| rand_profile(&mut rng, i))
            .collect();
        let stats = DatasetStats {
            n_nodes: [("t".to_string(), rng.gen_range(0..100_000))].into(),
            n_edges: [("e".to_string(), rng.gen_range(0..500_000))].into(),
            n_node_types: 1,
            n_edge_types: 1,
            n_labels: 2,
            total_triples: 0,
        };
        let budget = Budget {
            max_memory_bytes: rng.gen_range(1_000..100_000_000),
            max_time_seconds: rng.gen_range(1..100),
            ..Budget::default()
        };
        match select_method(&profiles, TaskType::NodeClassifier, &stats, &budget, 64) {
            Ok((chosen, est)) => {
                assert!(est.memory_bytes <= budget.max_memory_bytes, "{}", chosen.name);
                assert!(est.time_seconds <= budget.max_time_seconds as f64, "{}", chosen.name);
            }
            Err(SelectError::BudgetInfeasible(_)) => {
                // every profile must genuinely exceed the budget
                for p in &profiles {
                    let e = estimate_cost(p, &stats, 64, p.default_epochs);
                    assert!(
                        e.memory_bytes > budget.max_memory_bytes
                            || e.time_seconds > budget.max_time_seconds as f64,
                        "{} was feasible but rejected",
                        p.name
                    );
                }
            }
            Err(other) => panic!("unexpected selection error: {other}"),
        }
    }

    // the canonical training budget parses to exactly 50 GiB / 1 h
    let spec = parse_train_json(
        r#"{"Name": "Paper-Venue", "GML-Task": {"TaskType": "kgnet:NodeClassifier",
            "TargetNode": "dblp:Publication", "NodeLabel": "dblp:venue"},
            "Task Budget": {"MaxMemory": "50GB", "MaxTime": "1h", "Priority": "ModelScore"}}"#,
    )
    .unwrap();
    assert_eq!(spec.budget.max_memory_bytes, 50 * (1u64 << 30));
    assert_eq!(spec.budget.max_time_seconds, 3600);
    assert_eq!(spec.budget.priority, Priority::ModelScore);
}

// ---- 9: knn exactness ------------------------------------------------------

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn check_knn() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let dim = rng.gen_range(1usize..=32);
        let n = rng.gen_range(1usize..=500);
        let mut store = EmbeddingStore::new(dim);
        let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for i in 0..n {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().all(|x| *x == 0.0) {
                v[0] = 1.0;
            }
            let key = format!("k{i}");
            store.insert(key.clone(), v.clone()).unwrap();
            vectors.insert(key, v);
        }
        let k = rng.gen_range(0..=n);
        let query_key = format!("k{}", rng.gen_range(0..n));
        let query = vectors[&query_key].clone();

        // full-scan ground truth, descending similarity, ties to smaller key
        let mut scored: Vec<(String, f64)> = vectors
            .iter()
            .map(|(key, v)| (key.clone(), oracle_cosine(&query, v)))
            .collect();
        scored.sort_by(|(ka, sa), (kb, sb)| sb.partial_cmp(sa).unwrap().then(ka.cmp(kb)));
        let got = store.knn_vector(&query, k, None).unwrap();
        assert_eq!(got, scored[..k].to_vec());

        // the query node itself scores 1.0 within 1e-9
        let full = store.knn_vector(&query, n, None).unwrap();
        let own = full.iter().find(|(key, _)| key == &query_key).unwrap();
        assert!((own.1 - 1.0).abs() < 1e-9, "self-similarity was {}", own.1);

        // by-node lookup agrees with the ground truth minus the query node
        let by_node = store.knn_node(&query_key, k).unwrap();
        let without_self: Vec<(String, f64)> = scored
            .iter()
            .filter(|(key, _)| key != &query_key)
            .take(k)
            .cloned()
            .collect();
        assert_eq!(by_node, without_self);
    }
}

// ---- 10: metadata round-trip -----------------------------------------------

fn check_kgmeta() {
    let nc = ModelMetadata {
        model_uri: String::new(),
        task_type: TaskType::NodeClassifier,
        target_node_type: format!("{DBLP}class/Publication"),
        label_predicate: Some(format!("{DBLP}rdf/publishedIn")),
        source_node_type: None,
        destination_node_type: None,
        method_name: "majority-label".into(),
        accuracy: 0.62,
        inference_time_ms: 80.0,
        model_cardinality: 4,
        trained_on: DBLP.into(),
        sampling: (1, 1),
        artifact_ref: "majority-label-abc123".into(),
        created_at: "2026-08-24T10:00:00Z".into(),
    };
    let lp = ModelMetadata {
        model_uri: String::new(),
        task_type: TaskType::LinkPredictor,
        target_node_type: format!("{DBLP}class/Person"),
        label_predicate: None,
        source_node_type: Some(format!("{DBLP}class/Person")),
        destination_node_type: Some(format!("{DBLP}class/Affiliation")),
        method_name: "common-neighbors".into(),
        accuracy: 0.87,
        inference_time_ms: 12.5,
        model_cardinality: 7,
        trained_on: DBLP.into(),
        sampling: (2, 1),
        artifact_ref: "common-neighbors-def456".into(),
        created_at: "2026-08-24T11:30:00Z".into(),
    };

    let gov = KgMetaGovernor::new(Arc::new(Store::new()));
    let nc_uri = gov.register_model(&nc).unwrap();
    let lp_uri = gov.register_model(&lp).unwrap();
    let exported = gov.export_ntriples();

    let fresh = KgMetaGovernor::new(Arc::new(Store::new()));
    fresh.import_ntriples(&exported).unwrap();
    for uri in [&nc_uri, &lp_uri] {
        assert_eq!(fresh.read_model(uri).unwrap(), gov.read_model(uri).unwrap());
    }
    let constraints = BTreeMap::from([
        (ConstraintKey::TargetNode, Term::iri(format!("{DBLP}class/Publication"))),
        (ConstraintKey::NodeLabel, Term::iri(format!("{DBLP}rdf/publishedIn"))),
    ]);
    let found = fresh.lookup_models(TaskType::NodeClassifier, &constraints).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].model_uri, nc_uri);
    let mut expected = nc;
    expected.model_uri = nc_uri;
    assert_eq!(found[0], expected);
    let found = fresh.lookup_models(TaskType::LinkPredictor, &BTreeMap::new()).unwrap();
    assert_eq!(found.len(), 1);
    let mut expected = lp;
    expected.model_uri = lp_uri;
    assert_eq!(found[0], expected);
    assert_eq!(fresh.export_ntriples(), exported);
}

// ---- harness ---------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: Vec<(&str, f64, Box<dyn FnOnce()>)> = vec![
        ("parser goldens and 100 random AST round-trips", 1.0, Box::new(check_parser)),
        ("sampler equals breadth-first oracle on 200 graphs, monotone in scope", 30.0, Box::new(check_sampler)),
        ("task-scoped subgraph shrinks the KG and its transform time and memory", 60.0, Box::new(check_reduction)),
        ("transformer invariants on 100 random graphs, byte-stable packages", 30.0, Box::new(check_transformer)),
        ("model selection equals brute force; plan costs optimal with worked examples", 10.0, Box::new(check_optimizer)),
        ("dictionary plans make 1 inference call, per-binding plans make B", 30.0, Box::new(check_call_counts)),
        ("end-to-end load, train, query, and delete on the toy bibliographic KG", 60.0, Box::new(check_end_to_end)),
        ("method selection never violates the training budget; budget parsing exact", 10.0, Box::new(check_budget)),
        ("knn equals full-scan ground truth on 100 stores; self-similarity 1.0", 10.0, Box::new(check_knn)),
        ("metadata register, export, import, lookup is field-identical", 10.0, Box::new(check_kgmeta)),
    ];

    let mut failures = Vec::new();
    for (i, (desc, limit, check)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let result = std::panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed().as_secs_f64();
        let ok = result.is_ok() && elapsed < limit;
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict} [{n:2}] {desc} ({elapsed:.2}s, limit {limit:.0}s)");
        if let Err(payload) = result {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic without message".into());
            println!("      {msg}");
        }
        if !ok {
            failures.push(n);
        }
    }
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
