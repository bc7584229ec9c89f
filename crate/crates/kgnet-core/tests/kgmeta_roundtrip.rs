//! Model-metadata governor: register/lookup/delete lifecycle, atomicity
//! under artifact-deletion failures, and N-Triples round-tripping.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use kgnet_core::kgmeta::{ArtifactDeleter, KgMetaError, KgMetaGovernor, ModelMetadata};
use kgnet_core::rdf::{Store, Term};
use kgnet_core::sparqlml::{ConstraintKey, TaskType};

fn nc_meta(method: &str) -> ModelMetadata {
    ModelMetadata {
        model_uri: String::new(),
        task_type: TaskType::NodeClassifier,
        target_node_type: "https://www.dblp.org/class/Publication".into(),
        label_predicate: Some("https://www.dblp.org/rdf/publishedIn".into()),
        source_node_type: None,
        destination_node_type: None,
        method_name: method.into(),
        accuracy: 0.62,
        inference_time_ms: 80.0,
        model_cardinality: 4,
        trained_on: "https://www.dblp.org/".into(),
        sampling: (1, 1),
        artifact_ref: format!("{method}-abc123"),
        created_at: "2026-08-24T10:00:00Z".into(),
    }
}

fn lp_meta() -> ModelMetadata {
    ModelMetadata {
        model_uri: String::new(),
        task_type: TaskType::LinkPredictor,
        target_node_type: "https://www.dblp.org/class/Person".into(),
        label_predicate: None,
        source_node_type: Some("https://www.dblp.org/class/Person".into()),
        destination_node_type: Some("https://www.dblp.org/class/Affiliation".into()),
        method_name: "common-neighbors".into(),
        accuracy: 0.87,
        inference_time_ms: 12.5,
        model_cardinality: 7,
        trained_on: "https://www.dblp.org/".into(),
        sampling: (2, 1),
        artifact_ref: "common-neighbors-def456".into(),
        created_at: "2026-08-24T11:30:00Z".into(),
    }
}

fn governor() -> KgMetaGovernor {
    KgMetaGovernor::new(Arc::new(Store::new()))
}

fn nc_constraints() -> BTreeMap<ConstraintKey, Term> {
    BTreeMap::from([
        (
            ConstraintKey::TargetNode,
            Term::iri("https://www.dblp.org/class/Publication"),
        ),
        (
            ConstraintKey::NodeLabel,
            Term::iri("https://www.dblp.org/rdf/publishedIn"),
        ),
    ])
}

struct CountingDeleter {
    calls: AtomicUsize,
    fail_on: Option<String>,
}

impl CountingDeleter {
    fn ok() -> CountingDeleter {
        CountingDeleter {
            calls: AtomicUsize::new(0),
            fail_on: None,
        }
    }

    fn failing_on(artifact: &str) -> CountingDeleter {
        CountingDeleter {
            calls: AtomicUsize::new(0),
            fail_on: Some(artifact.to_string()),
        }
    }
}

impl ArtifactDeleter for CountingDeleter {
    fn delete(&self, artifact_ref: &str) -> Result<(), String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.fail_on.as_deref() == Some(artifact_ref) {
            Err("injected failure".into())
        } else {
            Ok(())
        }
    }
}

#[test]
fn register_then_lookup_is_field_identical() {
    let gov = governor();
    let mut meta = nc_meta("majority-label");
    let uri = gov.register_model(&meta).unwrap();
    assert!(uri.starts_with("https://www.kgnet.com/model/NodeClassifier/"));

    let found = gov
        .lookup_models(TaskType::NodeClassifier, &nc_constraints())
        .unwrap();
    meta.model_uri = uri;
    assert_eq!(found, vec![meta]);
}

#[test]
fn duplicate_registration_reports_existing_uri() {
    let gov = governor();
    let meta = nc_meta("majority-label");
    let uri = gov.register_model(&meta).unwrap();
    match gov.register_model(&meta).unwrap_err() {
        KgMetaError::Duplicate { existing } => assert_eq!(existing, uri),
        other => panic!("expected duplicate error, got {other}"),
    }
}

#[test]
fn lookup_filters_by_task_and_constraints() {
    let gov = governor();
    gov.register_model(&nc_meta("majority-label")).unwrap();
    gov.register_model(&nc_meta("neighbor-label-frequency")).unwrap();
    gov.register_model(&lp_meta()).unwrap();

    let nc = gov
        .lookup_models(TaskType::NodeClassifier, &nc_constraints())
        .unwrap();
    assert_eq!(nc.len(), 2);

    let lp = gov
        .lookup_models(
            TaskType::LinkPredictor,
            &BTreeMap::from([
                (
                    ConstraintKey::SourceNode,
                    Term::iri("https://www.dblp.org/class/Person"),
                ),
                (
                    ConstraintKey::DestinationNode,
                    Term::iri("https://www.dblp.org/class/Affiliation"),
                ),
            ]),
        )
        .unwrap();
    assert_eq!(lp.len(), 1);
    assert_eq!(lp[0].sampling, (2, 1));

    // empty governor and non-matching constraints both yield []
    assert!(governor()
        .lookup_models(TaskType::NodeClassifier, &nc_constraints())
        .unwrap()
        .is_empty());
    let none = gov
        .lookup_models(
            TaskType::NodeClassifier,
            &BTreeMap::from([(ConstraintKey::TargetNode, Term::iri("http://x/Other"))]),
        )
        .unwrap();
    assert!(none.is_empty());
}

#[test]
fn delete_removes_artifacts_then_metadata() {
    let gov = governor();
    gov.register_model(&nc_meta("majority-label")).unwrap();
    gov.register_model(&nc_meta("neighbor-label-frequency")).unwrap();
    gov.register_model(&lp_meta()).unwrap();

    let deleter = CountingDeleter::ok();
    let deleted = gov
        .delete_models(TaskType::NodeClassifier, &nc_constraints(), &deleter)
        .unwrap();
    assert_eq!(deleted.len(), 2);
    assert_eq!(deleter.calls.load(Ordering::SeqCst), 2);
    assert!(gov
        .lookup_models(TaskType::NodeClassifier, &nc_constraints())
        .unwrap()
        .is_empty());
    // the LP model is untouched
    assert_eq!(gov.lookup_models(TaskType::LinkPredictor, &BTreeMap::new()).unwrap().len(), 1);

    // deleting again matches nothing
    let deleted = gov
        .delete_models(TaskType::NodeClassifier, &nc_constraints(), &deleter)
        .unwrap();
    assert!(deleted.is_empty());
}

#[test]
fn artifact_failure_leaves_metadata_untouched() {
    let gov = governor();
    gov.register_model(&nc_meta("majority-label")).unwrap();
    gov.register_model(&nc_meta("neighbor-label-frequency")).unwrap();

    let before = gov.export_ntriples();
    let deleter = CountingDeleter::failing_on("neighbor-label-frequency-abc123");
    let err = gov
        .delete_models(TaskType::NodeClassifier, &nc_constraints(), &deleter)
        .unwrap_err();
    assert!(matches!(err, KgMetaError::ArtifactDelete { .. }));
    assert_eq!(gov.export_ntriples(), before);
    assert_eq!(
        gov.lookup_models(TaskType::NodeClassifier, &nc_constraints())
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn export_import_round_trip_for_both_tasks() {
    let gov = governor();
    let nc_uri = gov.register_model(&nc_meta("majority-label")).unwrap();
    let lp_uri = gov.register_model(&lp_meta()).unwrap();
    let exported = gov.export_ntriples();

    let fresh = governor();
    fresh.import_ntriples(&exported).unwrap();
    assert_eq!(fresh.read_model(&nc_uri).unwrap(), gov.read_model(&nc_uri).unwrap());
    assert_eq!(fresh.read_model(&lp_uri).unwrap(), gov.read_model(&lp_uri).unwrap());
    // and lookups behave identically on the re-derived state
    assert_eq!(
        fresh
            .lookup_models(TaskType::NodeClassifier, &nc_constraints())
            .unwrap(),
        gov.lookup_models(TaskType::NodeClassifier, &nc_constraints())
            .unwrap()
    );
    assert_eq!(fresh.export_ntriples(), exported);
}

#[test]
fn invalid_metadata_rejected() {
    let gov = governor();
    let mut bad = nc_meta("majority-label");
    bad.accuracy = 1.5;
    assert!(matches!(gov.register_model(&bad), Err(KgMetaError::Invalid(_))));

    let mut bad = nc_meta("majority-label");
    bad.inference_time_ms = 0.0;
    assert!(matches!(gov.register_model(&bad), Err(KgMetaError::Invalid(_))));

    let mut bad = nc_meta("majority-label");
    bad.label_predicate = None;
    assert!(matches!(gov.register_model(&bad), Err(KgMetaError::Invalid(_))));

    let mut bad = lp_meta();
    bad.destination_node_type = None;
    assert!(matches!(gov.register_model(&bad), Err(KgMetaError::Invalid(_))));
}
