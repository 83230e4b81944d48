//! Alert descriptions as RDF, served as Triple Pattern Fragments.

mod fragment;
mod store;
mod term;
mod vocab;

use thiserror::Error;

pub use fragment::{
    fragment_url, match_fragment, parse_fragment_json, render_fragment, Controls, Fragment, FragmentFormat,
    DEFAULT_PAGE_SIZE,
};
pub use store::TripleStore;
pub use vocab::{alert_to_triples, LdfConfig};
pub use term::{
    parse_term_param, term_param, Term, TermError, Triple, TriplePattern, XSD, XSD_DATETIME, XSD_INTEGER, XSD_STRING,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdfError {
    #[error("page numbers start at 1")]
    BadPage,
    #[error("unknown fragment format {0:?}")]
    UnknownFormat(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("malformed fragment: {0}")]
    Malformed(String),
}
