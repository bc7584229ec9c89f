//! SPARQL-ML: lexer, parser, AST, and canonical rendering for GML-enabled
//! queries with user-defined predicates.

pub mod ast;
pub mod lex;
pub mod parse;
pub mod render;
pub mod samples;
pub mod train;

pub use ast::{
    Budget, ConstraintKey, Priority, QueryKind, SparqlMlAst, TaskType, TrainGmlSpec, UdpGroup,
};
pub use parse::{parse, ParseError};
pub use render::render;
pub use train::{parse_train_json, parse_train_json_with_prefixes};
