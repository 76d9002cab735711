//! Restricted N3 dialect: lexer, parser, and canonical printer.

pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod term;

pub use parser::{extract_rules, parse_document, ParsedDocument};
pub use pretty::{canonicalize_blanks, pretty_print};
pub use term::*;
