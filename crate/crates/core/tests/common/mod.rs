#![allow(dead_code)]

use std::path::PathBuf;

use kgsc_core::compile::{compile, Compilation};
use kgsc_core::logic::LogicOptions;
use regex::Regex;

pub mod props;

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn compile_files(rules: &str, ontology: &str, requests: bool) -> kgsc_core::Result<Compilation> {
    compile(&read(&format!("rules/{rules}")), &read(&format!("rules/{ontology}")), LogicOptions { requests })
}

/// Listing normalization: drops line numbers, `∧`, quote style, trailing `;`,
/// whitespace differences and the two spellings of a for-each header.
pub fn normalize(text: &str) -> String {
    let numbers = Regex::new(r"(?m)^\s*\d+\.\s?").unwrap();
    let text = numbers.replace_all(text, "");
    let text = text.replace('∧', " and ").replace('"', "'");
    let text = Regex::new(r"(?m);\s*$").unwrap().replace_all(&text, "");
    let text = Regex::new(r"\s+").unwrap().replace_all(&text, " ");
    let text = Regex::new(r"\s*([()\[\],=:{}])\s*").unwrap().replace_all(&text, "$1");
    let text = Regex::new(r"for each ([^ ]+) as ([^ ]+) do").unwrap().replace_all(&text, "for each $2 in $1 do");
    text.trim().to_string()
}
