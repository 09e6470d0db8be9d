use std::collections::BTreeSet;

use serde_json::Value as Json;

use crate::error::OracleError;
use crate::model::VerifyJudgment;

/// First balanced top-level `[...]` span, skipping brackets inside JSON strings.
fn first_array_span(raw: &str) -> Option<&str> {
    let start = raw.find('[')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in raw[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses a verifier reply into one judgment per expected id.
///
/// The reply must be a JSON array; prose around it is tolerated by extracting
/// the first top-level array. Ids outside `expected_ids` are dropped with a warning.
pub fn parse_verify_response(raw: &str, expected_ids: &BTreeSet<String>) -> Result<Vec<VerifyJudgment>, OracleError> {
    let malformed = |detail: String| OracleError::MalformedResponse(detail);
    let items = match serde_json::from_str::<Json>(raw.trim()) {
        Ok(Json::Array(items)) => items,
        _ => {
            let span = first_array_span(raw).ok_or_else(|| malformed("no JSON array found".into()))?;
            match serde_json::from_str::<Json>(span) {
                Ok(Json::Array(items)) => items,
                Ok(_) => return Err(malformed("expected a JSON array".into())),
                Err(e) => return Err(malformed(format!("invalid JSON: {e}"))),
            }
        }
    };

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for item in items {
        let judgment: VerifyJudgment =
            serde_json::from_value(item).map_err(|e| malformed(format!("bad judgment entry: {e}")))?;
        if !expected_ids.contains(&judgment.id) {
            log::warn!("verifier returned unexpected id {}", judgment.id);
            continue;
        }
        if !seen.insert(judgment.id.clone()) {
            return Err(malformed(format!("duplicate id {}", judgment.id)));
        }
        out.push(judgment);
    }
    if let Some(missing) = expected_ids.iter().find(|id| !seen.contains(*id)) {
        return Err(malformed(format!("missing id {missing}")));
    }
    Ok(out)
}
