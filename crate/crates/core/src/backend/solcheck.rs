//! Lightweight well-formedness checks for emitted Solidity: a tokenizer, bracket
//! balance, and the structural restrictions the generator promises.

use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolidityIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SolidityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolTok {
    Ident(String),
    Number(String),
    Str(String),
    Punct(String),
}

/// Tokens with their line numbers; comments are skipped.
pub fn tokenize(src: &str) -> Result<Vec<(SolTok, usize)>, SolidityIssue> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = line;
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err(SolidityIssue { line: start, message: "unterminated comment".into() });
                }
                if chars[i] == '\n' {
                    line += 1;
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
        } else if c == '"' || c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(SolidityIssue { line, message: "unterminated string".into() }),
                    Some('\\') => {
                        s.push(chars.get(i + 1).copied().unwrap_or(' '));
                        i += 2;
                    }
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push((SolTok::Str(s), line));
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            out.push((SolTok::Ident(chars[start..i].iter().collect()), line));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                i += 1;
            }
            out.push((SolTok::Number(chars[start..i].iter().collect()), line));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let p = if ["==", "!=", "<=", ">=", "&&", "||", "++", "--", "**", "+=", "-=", "/=", "*=", "=>"].contains(&two.as_str())
            {
                i += 2;
                two
            } else {
                i += 1;
                c.to_string()
            };
            out.push((SolTok::Punct(p), line));
        }
    }
    Ok(out)
}

fn is_punct(t: &SolTok, p: &str) -> bool {
    matches!(t, SolTok::Punct(x) if x == p)
}

fn is_ident(t: &SolTok, s: &str) -> bool {
    matches!(t, SolTok::Ident(x) if x == s)
}

/// Empty iff the source is balanced, has a pragma, contains no while/do loops, every
/// for-loop is bounded by an array length or a constant, and no struct holding a
/// mapping is nested inside another struct.
pub fn check_solidity(src: &str) -> Vec<SolidityIssue> {
    let toks = match tokenize(src) {
        Ok(t) => t,
        Err(e) => return vec![e],
    };
    let mut issues = Vec::new();
    let mut stack: Vec<(&str, usize)> = Vec::new();
    for (t, line) in &toks {
        if let SolTok::Punct(p) = t {
            match p.as_str() {
                "(" | "{" | "[" => stack.push((if p == "(" { ")" } else if p == "{" { "}" } else { "]" }, *line)),
                ")" | "}" | "]" => match stack.pop() {
                    Some((want, _)) if want == p => {}
                    Some((want, open)) => issues.push(SolidityIssue {
                        line: *line,
                        message: format!("found '{p}' but expected '{want}' (opened on line {open})"),
                    }),
                    None => issues.push(SolidityIssue { line: *line, message: format!("unmatched '{p}'") }),
                },
                _ => {}
            }
        }
    }
    for (want, open) in stack {
        issues.push(SolidityIssue { line: open, message: format!("missing '{want}'") });
    }
    if !toks.windows(2).any(|w| is_ident(&w[0].0, "pragma") && is_ident(&w[1].0, "solidity")) {
        issues.push(SolidityIssue { line: 1, message: "missing pragma solidity".into() });
    }
    for (i, (t, line)) in toks.iter().enumerate() {
        if is_ident(t, "while") || is_ident(t, "do") {
            issues.push(SolidityIssue { line: *line, message: "while/do loops are not allowed".into() });
        }
        if is_ident(t, "for") {
            // for ( init ; cond ; step )
            let semis: Vec<usize> =
                toks[i..].iter().enumerate().filter(|(_, (t, _))| is_punct(t, ";")).map(|(j, _)| i + j).take(2).collect();
            let bounded = semis.len() == 2 && {
                let cond = &toks[semis[0] + 1..semis[1]];
                let lt = cond.iter().position(|(t, _)| is_punct(t, "<"));
                match lt {
                    Some(p) => {
                        let rhs = &cond[p + 1..];
                        let constant = rhs.len() == 1 && matches!(rhs[0].0, SolTok::Number(_));
                        let length = rhs.len() >= 3 && is_ident(&rhs[rhs.len() - 1].0, "length") && is_punct(&rhs[rhs.len() - 2].0, ".");
                        constant || length || (rhs.len() >= 3 && constant_and(rhs))
                    }
                    None => false,
                }
            };
            if !bounded {
                issues.push(SolidityIssue { line: *line, message: "loop is not bounded by an array length or constant".into() });
            }
        }
    }
    // struct bodies
    let mut structs: Vec<(String, Vec<String>, bool, usize)> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if is_ident(&toks[i].0, "struct") {
            if let (Some((SolTok::Ident(name), line)), Some(open)) = (toks.get(i + 1), toks.get(i + 2)) {
                if is_punct(&open.0, "{") {
                    let mut j = i + 3;
                    let mut members = Vec::new();
                    let mut has_mapping = false;
                    let mut at_start = true;
                    while j < toks.len() && !is_punct(&toks[j].0, "}") {
                        if at_start {
                            if let SolTok::Ident(ty) = &toks[j].0 {
                                if ty == "mapping" {
                                    has_mapping = true;
                                } else {
                                    members.push(ty.clone());
                                }
                            }
                        }
                        at_start = is_punct(&toks[j].0, ";");
                        if is_ident(&toks[j].0, "mapping") {
                            has_mapping = true;
                            // mapping value types are member types as well
                            let mut k = j;
                            while k < toks.len() && !is_punct(&toks[k].0, ")") {
                                if let SolTok::Ident(v) = &toks[k].0 {
                                    members.push(v.clone());
                                }
                                k += 1;
                            }
                        }
                        j += 1;
                    }
                    structs.push((name.clone(), members, has_mapping, *line));
                    i = j;
                }
            }
        }
        i += 1;
    }
    let mapping_structs: HashSet<&str> = structs.iter().filter(|s| s.2).map(|s| s.0.as_str()).collect();
    for (name, members, _, line) in &structs {
        for m in members {
            if mapping_structs.contains(m.as_str()) {
                issues.push(SolidityIssue {
                    line: *line,
                    message: format!("struct {name} nests {m}, which holds a mapping"),
                });
            }
        }
    }
    issues
}

/// `N && ...`: a constant bound combined with an early-exit test.
fn constant_and(rhs: &[(SolTok, usize)]) -> bool {
    matches!(rhs[0].0, SolTok::Number(_)) && is_punct(&rhs[1].0, "&&")
}
