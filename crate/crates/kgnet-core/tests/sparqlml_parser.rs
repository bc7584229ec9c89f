//! Parser golden tests and round-trip properties.

use indexmap::IndexMap;
use kgnet_core::rdf::{Term, TriplePattern, RDF_TYPE};
use kgnet_core::sparqlml::{
    self, parse, render, samples, ConstraintKey, Priority, QueryKind, TaskType,
};

const DBLP: &str = "https://www.dblp.org/";

fn dblp(local: &str) -> Term {
    Term::iri(format!("{DBLP}{local}"))
}

#[test]
fn paper_venue_select_golden() {
    let ast = parse(samples::PAPER_VENUE_SELECT).unwrap();
    assert_eq!(ast.kind, QueryKind::Select);
    assert_eq!(ast.projection, vec!["title", "venue"]);
    assert_eq!(
        ast.data_patterns,
        vec![
            TriplePattern::new(Term::var("paper"), Term::iri(RDF_TYPE), dblp("Publication")),
            TriplePattern::new(Term::var("paper"), dblp("title"), Term::var("title")),
        ]
    );
    assert_eq!(ast.gml_patterns.len(), 1);
    let g = &ast.gml_patterns[0];
    assert_eq!(g.predicate_var, "NodeClassifier");
    assert_eq!(g.task_type, TaskType::NodeClassifier);
    assert_eq!(g.subject_var.as_deref(), Some("paper"));
    assert_eq!(g.object_var.as_deref(), Some("venue"));
    assert_eq!(
        g.constraints.get(&ConstraintKey::TargetNode),
        Some(&dblp("Publication"))
    );
    assert_eq!(
        g.constraints.get(&ConstraintKey::NodeLabel),
        Some(&dblp("venue"))
    );
}

#[test]
fn plain_sparql_passthrough() {
    let text = "prefix dblp: <https://www.dblp.org/>\n\
                select ?p ?t where { ?p a dblp:Publication. ?p dblp:title ?t. }";
    let ast = parse(text).unwrap();
    assert!(ast.gml_patterns.is_empty());
    assert_eq!(ast.data_patterns.len(), 2);
}

#[test]
fn author_affiliation_select_golden() {
    let ast = parse(samples::AUTHOR_AFFILIATION_SELECT).unwrap();
    let g = &ast.gml_patterns[0];
    assert_eq!(g.task_type, TaskType::LinkPredictor);
    assert_eq!(
        g.constraints.get(&ConstraintKey::SourceNode),
        Some(&dblp("person"))
    );
    assert_eq!(
        g.constraints.get(&ConstraintKey::DestinationNode),
        Some(&dblp("affiliation"))
    );
    assert_eq!(g.top_k(), Some(10));
}

#[test]
fn train_insert_golden() {
    let ast = parse(samples::PAPER_VENUE_TRAIN).unwrap();
    assert_eq!(ast.kind, QueryKind::InsertTrain);
    let spec = ast.train_payload.as_ref().unwrap();
    assert_eq!(spec.task_type, TaskType::NodeClassifier);
    assert_eq!(spec.target_node_type, format!("{DBLP}publication"));
    assert_eq!(spec.label_predicate.as_deref(), Some("https://www.dblp.org/venue"));
    assert_eq!(spec.budget.max_memory_bytes, 50 * (1u64 << 30));
    assert_eq!(spec.budget.max_time_seconds, 3600);
    assert_eq!(spec.budget.priority, Priority::ModelScore);
}

#[test]
fn delete_golden() {
    let ast = parse(samples::PAPER_VENUE_DELETE).unwrap();
    assert_eq!(ast.kind, QueryKind::DeleteModel);
    assert_eq!(ast.gml_patterns.len(), 1);
    let g = &ast.gml_patterns[0];
    assert_eq!(g.task_type, TaskType::NodeClassifier);
    assert!(g.subject_var.is_none());
}

#[test]
fn incomplete_group_rejected() {
    let text = "prefix dblp: <https://www.dblp.org/>\n\
                prefix kgnet: <https://www.kgnet.com/>\n\
                select ?p ?v where { ?p a dblp:Publication. ?p ?NC ?v.\n\
                ?NC a kgnet:NodeClassifier. ?NC kgnet:TargetNode dblp:Publication. }";
    let err = parse(text).unwrap_err();
    assert!(err.to_string().contains("NodeLabel"), "{err}");
}

#[test]
fn unknown_task_type_rejected() {
    let text = "prefix kgnet: <https://www.kgnet.com/>\n\
                select ?p ?v where { ?p ?NC ?v. ?NC a kgnet:Oracle. }";
    assert!(parse(text).is_err());
}

#[test]
fn predicted_variable_must_not_join_data() {
    let text = "prefix dblp: <https://www.dblp.org/>\n\
                prefix kgnet: <https://www.kgnet.com/>\n\
                select ?p ?v where { ?p a dblp:Publication. ?v dblp:name ?n. ?p ?NC ?v.\n\
                ?NC a kgnet:NodeClassifier. ?NC kgnet:TargetNode dblp:Publication.\n\
                ?NC kgnet:NodeLabel dblp:venue. }";
    let err = parse(text).unwrap_err();
    assert!(err.to_string().contains("?v"), "{err}");
}

#[test]
fn syntax_error_carries_position() {
    let err = parse("select ?x where { ?x ?y }").unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn all_samples_round_trip() {
    for text in [
        samples::PAPER_VENUE_SELECT,
        samples::AUTHOR_AFFILIATION_SELECT,
        samples::PAPER_VENUE_TRAIN,
        samples::PAPER_VENUE_DELETE,
    ] {
        let ast = parse(text).unwrap();
        let rendered = render(&ast);
        let reparsed = parse(&rendered).unwrap_or_else(|e| panic!("{rendered}\n{e}"));
        assert_eq!(ast, reparsed, "round trip failed for:\n{rendered}");
    }
}

#[test]
fn no_pattern_lost_or_invented() {
    // data patterns plus flattened group patterns equal the original set
    let ast = parse(samples::PAPER_VENUE_SELECT).unwrap();
    let total = ast.data_patterns.len()
        + ast
            .gml_patterns
            .iter()
            .map(|g| {
                1 // typing triple
                + g.constraints.len()
                + usize::from(g.subject_var.is_some())
            })
            .sum::<usize>();
    assert_eq!(total, 6);
}

mod proptests {
    use super::*;
    use kgnet_core::sparqlml::{Budget, SparqlMlAst, TrainGmlSpec, UdpGroup};
    use proptest::prelude::*;

    fn base_prefixes() -> IndexMap<String, String> {
        IndexMap::from([
            ("dblp".to_string(), DBLP.to_string()),
            ("kgnet".to_string(), "https://www.kgnet.com/".to_string()),
        ])
    }

    fn var_name() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9]{0,6}".prop_map(|s| s)
    }

    fn iri_local() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9_]{0,8}"
    }

    fn select_ast() -> impl Strategy<Value = SparqlMlAst> {
        (
            var_name(),
            var_name(),
            var_name(),
            iri_local(),
            iri_local(),
            prop::sample::select(vec![TaskType::NodeClassifier, TaskType::LinkPredictor]),
            prop::option::of(1u64..1000),
        )
            .prop_filter("vars distinct", |(s, o, pv, ..)| {
                s != o && s != pv && o != pv
            })
            .prop_map(|(subj, obj, pred_var, t1, t2, task, top_k)| {
                let mut constraints = IndexMap::new();
                match task {
                    TaskType::NodeClassifier => {
                        constraints.insert(ConstraintKey::TargetNode, dblp(&t1));
                        constraints.insert(ConstraintKey::NodeLabel, dblp(&t2));
                    }
                    _ => {
                        constraints.insert(ConstraintKey::SourceNode, dblp(&t1));
                        constraints.insert(ConstraintKey::DestinationNode, dblp(&t2));
                    }
                }
                if let Some(k) = top_k {
                    constraints.insert(
                        ConstraintKey::TopK,
                        Term::typed_literal(
                            k.to_string(),
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
                        dblp(&t1),
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
            })
    }

    fn train_ast() -> impl Strategy<Value = SparqlMlAst> {
        (
            "[A-Za-z][A-Za-z0-9_-]{0,12}",
            iri_local(),
            iri_local(),
            1u64..10_000_000_000,
            1u64..1_000_000,
            prop::sample::select(vec![
                Priority::ModelScore,
                Priority::TrainingTime,
                Priority::Memory,
            ]),
            any::<bool>(),
        )
            .prop_map(|(name, a, b, mem, secs, priority, is_nc)| {
                let task_type = if is_nc {
                    TaskType::NodeClassifier
                } else {
                    TaskType::LinkPredictor
                };
                let spec = TrainGmlSpec {
                    name,
                    task_type,
                    target_node_type: format!("{DBLP}{a}"),
                    label_predicate: is_nc.then(|| format!("{DBLP}{b}")),
                    source_node_type: (!is_nc).then(|| format!("{DBLP}{a}")),
                    destination_node_type: (!is_nc).then(|| format!("{DBLP}{b}")),
                    budget: Budget {
                        max_memory_bytes: mem,
                        max_time_seconds: secs,
                        priority,
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
            })
    }

    fn delete_ast() -> impl Strategy<Value = SparqlMlAst> {
        select_ast().prop_map(|mut ast| {
            ast.kind = QueryKind::DeleteModel;
            ast.projection.clear();
            ast.data_patterns.clear();
            for g in &mut ast.gml_patterns {
                g.subject_var = None;
                g.object_var = None;
            }
            ast
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn select_round_trip(ast in select_ast()) {
            let reparsed = parse(&render(&ast)).unwrap();
            prop_assert_eq!(ast, reparsed);
        }

        #[test]
        fn train_round_trip(ast in train_ast()) {
            let reparsed = parse(&render(&ast)).unwrap();
            prop_assert_eq!(ast, reparsed);
        }

        #[test]
        fn delete_round_trip(ast in delete_ast()) {
            let reparsed = parse(&render(&ast)).unwrap();
            prop_assert_eq!(ast, reparsed);
        }
    }
}

#[test]
fn train_json_helpers() {
    let spec = sparqlml::parse_train_json(
        r#"{"Name": "n", "GML-Task": {"TaskType": "kgnet:NodeClassifier", "TargetNode": "dblp:publication", "NodeLabel": "dblp:venue"}, "Task Budget": {"MaxMemory": "1024MB", "MaxTime": "90m", "Priority": "Memory"}}"#,
    )
    .unwrap();
    assert_eq!(spec.budget.max_memory_bytes, 1 << 30);
    assert_eq!(spec.budget.max_time_seconds, 5400);
}
