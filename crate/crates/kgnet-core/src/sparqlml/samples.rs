//! Canonical example queries used in documentation and tests.

/// Node-classification SELECT: predict a venue for each publication.
pub const PAPER_VENUE_SELECT: &str = "\
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

/// Link-prediction SELECT: predict author affiliations, top-10.
pub const AUTHOR_AFFILIATION_SELECT: &str = "\
prefix dblp: <https://www.dblp.org/>
prefix kgnet: <https://www.kgnet.com/>
select ?author ?affiliation
where { ?author a dblp:person.
?author ?LinkPredictor ?affiliation.
?LinkPredictor a kgnet:LinkPredictor.
?LinkPredictor kgnet:SourceNode dblp:person.
?LinkPredictor kgnet:DestinationNode dblp:affiliation.
?LinkPredictor kgnet:TopK-Links 10.}";

/// Training INSERT: train a paper-venue classifier under a budget.
pub const PAPER_VENUE_TRAIN: &str = "\
prefix dblp:<https://www.dblp.org/>
prefix kgnet:<https://www.kgnet.com/>
Insert into <kgnet>  { ?s ?p ?o }
where {select * from TrainGML(
{Name: 'MAG_Paper-Venue_Classifer',
 GML-Task:{ TaskType: kgnet:NodeClassifier,
 TargetNode: dblp:publication,
 NodeLable: dblp:venue},
 Task Budget:{ MaxMemory:50GB, MaxTime:1h,
               Priority:ModelScore} })}";

/// Model DELETE: remove paper-venue classifiers and their artifacts.
pub const PAPER_VENUE_DELETE: &str = "\
prefix dblp:<https://www.dblp.org/>
prefix kgnet:<https://www.kgnet.com/>
delete where {
?NodeClassifier a kgnet:NodeClassifier.
?NodeClassifier kgnet:TargetNode dblp:Publication.
?NodeClassifier kgnet:NodeLabel dblp:venue.}";
