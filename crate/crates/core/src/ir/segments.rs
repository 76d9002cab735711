use crate::error::{Error, ErrorCode, Result};
use crate::ir::{Function, Iri, Parameter, Statement};

/// A callback boundary and the code that runs after the oracle answers.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSite {
    pub callback: u32,
    pub location: Iri,
    pub resource_type: Iri,
    pub select: Vec<Parameter>,
    pub result: String,
    /// Remainder of the request's block, run once per result.
    pub per_result: Vec<Statement>,
    /// Statements following each enclosing block, innermost first; run once afterwards.
    pub rest: Vec<Statement>,
}

/// Request sites in callback order. Reaching a request suspends the current segment.
pub fn request_sites(f: &Function) -> Result<Vec<RequestSite>> {
    let mut out = Vec::new();
    walk(&f.logic, &mut Vec::new(), false, &mut out)?;
    Ok(out)
}

fn walk<'a>(
    stmts: &'a [Statement],
    suffixes: &mut Vec<&'a [Statement]>,
    in_iteration: bool,
    out: &mut Vec<RequestSite>,
) -> Result<()> {
    for (i, s) in stmts.iter().enumerate() {
        match s {
            Statement::RemoteRequest { location, resource_type, select, result, callback } => {
                if in_iteration {
                    return Err(Error::new(
                        ErrorCode::UnsupportedNesting,
                        format!("remote request {callback} occurs inside an iteration"),
                    ));
                }
                let per_result = &stmts[i + 1..];
                if contains_request(per_result) {
                    return Err(Error::new(
                        ErrorCode::UnsupportedNesting,
                        format!("remote request {callback} is followed by another request in the same scope"),
                    ));
                }
                out.push(RequestSite {
                    callback: *callback,
                    location: location.clone(),
                    resource_type: resource_type.clone(),
                    select: select.clone(),
                    result: result.clone(),
                    per_result: per_result.to_vec(),
                    rest: suffixes.iter().rev().flat_map(|s| s.iter().cloned()).collect(),
                });
                return Ok(());
            }
            Statement::IfThen { then, .. } | Statement::Block(then) => {
                suffixes.push(&stmts[i + 1..]);
                walk(&then.statements, suffixes, in_iteration, out)?;
                suffixes.pop();
            }
            Statement::Iteration { body, .. } => {
                walk(std::slice::from_ref(body.as_ref()), &mut Vec::new(), true, out)?;
            }
            Statement::Assignment { .. } | Statement::EmitEvent { .. } => {}
        }
    }
    Ok(())
}

pub(crate) fn contains_request(stmts: &[Statement]) -> bool {
    stmts.iter().any(|s| match s {
        Statement::RemoteRequest { .. } => true,
        Statement::IfThen { then, .. } | Statement::Block(then) => contains_request(&then.statements),
        Statement::Iteration { body, .. } => contains_request(std::slice::from_ref(body.as_ref())),
        _ => false,
    })
}

/// FHIR-style search URL for a request: `<location>/<Type>/_search?name=value&...`.
pub fn search_url(location: &Iri, resource_type: &Iri, params: &[(String, String)]) -> Result<String> {
    let base = url::Url::parse(location.as_str())
        .map_err(|e| Error::new(ErrorCode::RequestLocation, format!("{location}: {e}")))?;
    let mut u = base
        .join(&format!("{}/_search", resource_type.local_name()))
        .map_err(|e| Error::new(ErrorCode::RequestLocation, format!("{location}: {e}")))?;
    u.query_pairs_mut().extend_pairs(params);
    Ok(u.to_string())
}
