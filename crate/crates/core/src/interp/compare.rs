//! Outcome comparison between a contract transcript and the naive inference set.

use serde::Serialize;

use super::exec::Transcript;
use super::naive::InferenceSet;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Comparison {
    /// Events inferred by the rules but not emitted by the contract.
    pub missing: Vec<String>,
    /// Events emitted by the contract but not inferred.
    pub extra: Vec<String>,
}

impl Comparison {
    pub fn is_match(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }

    pub fn report(&self) -> String {
        if self.is_match() {
            return "MATCH".into();
        }
        let mut s = String::from("MISMATCH");
        for m in &self.missing {
            s.push_str(&format!("\n  missing: {m}"));
        }
        for e in &self.extra {
            s.push_str(&format!("\n  extra: {e}"));
        }
        s
    }
}

/// Multiset comparison of events by name and structural payload.
pub fn compare_outcomes(transcript: &Transcript, inferences: &InferenceSet) -> Comparison {
    let mut emitted: Vec<String> =
        transcript.events().iter().map(|(n, p)| format!("{n} {}", p.canonical())).collect();
    let mut inferred: Vec<String> =
        inferences.events.iter().map(|e| format!("{} {}", e.name, e.payload.canonical())).collect();
    emitted.sort();
    inferred.sort();
    let mut out = Comparison::default();
    let (mut i, mut j) = (0, 0);
    while i < emitted.len() || j < inferred.len() {
        match (emitted.get(i), inferred.get(j)) {
            (Some(a), Some(b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                out.extra.push(a.clone());
                i += 1;
            }
            (Some(_), Some(b)) | (None, Some(b)) => {
                out.missing.push(b.clone());
                j += 1;
            }
            (Some(a), None) => {
                out.extra.push(a.clone());
                i += 1;
            }
            (None, None) => break,
        }
    }
    out
}
