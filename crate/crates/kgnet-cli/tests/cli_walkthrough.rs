//! The operator walkthrough through the real binary: load data, train,
//! query, inspect and delete models, plus exit-code and --json contracts.

use std::path::Path;
use std::process::{Command, Output, Stdio};

use kgnet_core::rdf::{ntriples, Term, Triple, RDF_TYPE};

const DBLP: &str = "https://www.dblp.org/";

fn kgnet(state: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgnet"))
        .arg("--state-dir")
        .arg(state)
        .arg("--graph")
        .arg(DBLP)
        .args(args)
        .env_remove("KGNET_CONFIG")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn iri(suffix: &str) -> Term {
    Term::iri(format!("{DBLP}{suffix}"))
}

fn t(s: &Term, p: &Term, o: &Term) -> Triple {
    Triple::new(s.clone(), p.clone(), o.clone()).unwrap()
}

/// Writes the toy KG: 2 venue cliques of 4 papers each, with titles.
fn write_toy_nt(path: &Path) {
    let rdf_type = Term::iri(RDF_TYPE);
    let publication = iri("Publication");
    let mut triples = Vec::new();
    for v in 0..2 {
        let venue = iri(&format!("venue/v{v}"));
        let papers: Vec<Term> = (0..4).map(|i| iri(&format!("rec/p{v}_{i}"))).collect();
        for (i, p) in papers.iter().enumerate() {
            triples.push(t(p, &rdf_type, &publication));
            triples.push(t(p, &iri("venue"), &venue));
            triples.push(
                Triple::new(p.clone(), iri("title"), Term::literal(format!("T{v}{i}"))).unwrap(),
            );
            for q in papers.iter().skip(i + 1) {
                triples.push(t(p, &iri("sharesAuthor"), q));
            }
        }
    }
    std::fs::write(path, ntriples::serialize(&triples)).unwrap();
}

const TRAIN_JSON: &str = "\
{Name: 'Paper-Venue',
 GML-Task:{ TaskType: kgnet:NodeClassifier,
 TargetNode: dblp:Publication,
 NodeLabel: dblp:venue},
 Task Budget:{ MaxMemory:50GB, MaxTime:1h, Priority:ModelScore}}";

const SELECT_QUERY: &str = "\
prefix dblp: <https://www.dblp.org/>
prefix kgnet: <https://www.kgnet.com/>
select ?title ?venue
where {
?paper a dblp:Publication.
?paper dblp:title ?title.
?paper ?NodeClassifier ?venue.
?NodeClassifier a kgnet:NodeClassifier.
?NodeClassifier kgnet:TargetNode dblp:Publication.
?NodeClassifier kgnet:NodeLabel dblp:venue.}";

#[test]
fn full_walkthrough_load_train_query_delete() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let nt = dir.path().join("toy.nt");
    write_toy_nt(&nt);
    let train = dir.path().join("train.json");
    std::fs::write(&train, TRAIN_JSON).unwrap();
    let query = dir.path().join("q.sparqlml");
    std::fs::write(&query, SELECT_QUERY).unwrap();

    let out = kgnet(&state, &["load", nt.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("loaded 36 of 36"));

    let out = kgnet(&state, &["train", train.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("neighbor-label-frequency"));

    // the query prints a title/venue table with one row per paper
    let out = kgnet(&state, &["query", query.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.starts_with("title\tvenue"));
    assert_eq!(text.lines().count(), 9);
    assert!(text.contains(&format!("T03\t{DBLP}venue/v0")));
    assert!(text.contains(&format!("T12\t{DBLP}venue/v1")));

    // one registered model
    let out = kgnet(&state, &["--json", "models", "list"]);
    assert!(out.status.success());
    let models: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(models.as_array().unwrap().len(), 1);
    assert_eq!(models[0]["method_name"], "neighbor-label-frequency");

    // delete, then the same query fails with a clear message, exit 1
    let out = kgnet(
        &state,
        &[
            "models",
            "delete",
            "--task",
            "nc",
            "--target-node",
            &format!("{DBLP}Publication"),
        ],
    );
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("1 model(s) removed"));

    let out = kgnet(&state, &["query", query.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no model matches"));
}

#[test]
fn transform_writes_a_package() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let nt = dir.path().join("toy.nt");
    write_toy_nt(&nt);
    let train = dir.path().join("train.json");
    std::fs::write(&train, TRAIN_JSON).unwrap();
    kgnet(&state, &["load", nt.to_str().unwrap()]);

    let pkg = dir.path().join("pkg.zip");
    let out = kgnet(
        &state,
        &[
            "--json",
            "transform",
            train.to_str().unwrap(),
            "--out",
            pkg.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let info: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(info["labels"], 8);
    assert_eq!(info["sampling"]["d"], 1);
    assert!(pkg.exists());
}

#[test]
fn sample_prints_ntriples() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let nt = dir.path().join("toy.nt");
    write_toy_nt(&nt);
    kgnet(&state, &["load", nt.to_str().unwrap()]);

    let out = kgnet(
        &state,
        &[
            "sample",
            "--target",
            &format!("{DBLP}Publication"),
            "-d",
            "1",
            "--hops",
            "1",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let triples = ntriples::parse(&stdout(&out)).unwrap();
    // everything hangs off the papers at d1h1, so the whole toy KG returns
    assert_eq!(triples.len(), 36);
}

#[test]
fn user_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");

    // missing file
    let out = kgnet(&state, &["load", "no-such-file.nt"]);
    assert_eq!(out.status.code(), Some(1));

    // incomplete model pattern: typed but missing its constraints
    let bad = dir.path().join("bad.sparqlml");
    std::fs::write(
        &bad,
        "prefix kgnet: <https://www.kgnet.com/>\n\
         select ?x where { ?NodeClassifier a kgnet:NodeClassifier. }",
    )
    .unwrap();
    let out = kgnet(&state, &["query", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lacks kgnet:TargetNode"));

    // invalid sampling parameters
    let out = kgnet(
        &state,
        &["sample", "--target", "http://t/T", "-d", "3", "--hops", "1"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn backend_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    // an endpoint that is not listening
    let out = Command::new(env!("CARGO_BIN_EXE_kgnet"))
        .args([
            "--state-dir",
            state.to_str().unwrap(),
            "--endpoint",
            "http://127.0.0.1:9",
            "sample",
            "--target",
            "http://t/T",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn serve_answers_health_checks() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let mut child = Command::new(env!("CARGO_BIN_EXE_kgnet"))
        .args(["--state-dir", state.to_str().unwrap(), "serve", "--addr", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();

    // first stdout line announces the bound address
    use std::io::BufRead;
    let mut line = String::new();
    std::io::BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();

    let resp = reqwest::blocking::get(format!("{url}/health")).unwrap();
    assert_eq!(resp.status().as_u16(), 200);

    child.kill().unwrap();
    child.wait().unwrap();
}
