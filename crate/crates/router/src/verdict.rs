use std::fmt;

use cascadekit::cascade::Role;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

const REASONING: &str = "1_Reasoning";
const SATISFIED: &str = "2_IsSatisfied";
const CONFIDENCE: &str = "3_Confidence";

/// A model's structured answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVerdict {
    pub reasoning: String,
    pub is_satisfied: bool,
    /// 0 to 100. Present exactly when the role is small.
    pub confidence: Option<u8>,
    pub warnings: Vec<VerdictWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictWarning {
    /// Text surrounded the JSON object.
    NonCleanResponse,
    ConfidenceClamped { raw: i64 },
    /// The large model sent a confidence; it was dropped.
    UnexpectedConfidence,
}

impl fmt::Display for VerdictWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictWarning::NonCleanResponse => f.write_str("non-clean response: text around the JSON object"),
            VerdictWarning::ConfidenceClamped { raw } => write!(f, "confidence {raw} clamped to [0, 100]"),
            VerdictWarning::UnexpectedConfidence => f.write_str("confidence field ignored for the large model"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictError {
    #[error("no JSON object found in response")]
    NoJsonObject,
    #[error("response is missing required field {0}")]
    MissingField(&'static str),
    #[error("{SATISFIED} is not a boolean: {0}")]
    NonBooleanSatisfied(String),
    #[error("small-model response is missing {CONFIDENCE}")]
    MissingConfidence,
    #[error("{CONFIDENCE} is not an integer: {0}")]
    InvalidConfidence(String),
}

/// Extracts the first JSON object in `raw` and reads the verdict fields.
///
/// ```
/// use cascadekit::cascade::Role;
/// use cascadekit_router::parse_verdict;
/// let v = parse_verdict(r#"{"1_Reasoning":"ok","2_IsSatisfied":"true","3_Confidence":90}"#, Role::Small).unwrap();
/// assert!(v.is_satisfied);
/// assert_eq!(v.confidence, Some(90));
/// ```
pub fn parse_verdict(raw: &str, role: Role) -> Result<ParsedVerdict, VerdictError> {
    let (object, clean) = first_object(raw).ok_or(VerdictError::NoJsonObject)?;
    let mut warnings = Vec::new();
    if !clean {
        warnings.push(VerdictWarning::NonCleanResponse);
    }
    let reasoning = match object.get(REASONING) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => return Err(VerdictError::MissingField(REASONING)),
        Some(other) => other.to_string(),
    };
    let is_satisfied = match object.get(SATISFIED) {
        Some(Value::Bool(b)) => *b,
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("true") => true,
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("false") => false,
        Some(Value::Null) | None => return Err(VerdictError::MissingField(SATISFIED)),
        Some(other) => return Err(VerdictError::NonBooleanSatisfied(other.to_string())),
    };
    let raw_confidence = object.get(CONFIDENCE).filter(|v| !v.is_null());
    let confidence = match role {
        Role::Small => {
            let value = raw_confidence.ok_or(VerdictError::MissingConfidence)?;
            let n = integer(value).ok_or_else(|| VerdictError::InvalidConfidence(value.to_string()))?;
            let clamped = n.clamp(0, 100);
            if clamped != n {
                warnings.push(VerdictWarning::ConfidenceClamped { raw: n });
            }
            Some(clamped as u8)
        }
        Role::Large => {
            if raw_confidence.is_some() {
                warnings.push(VerdictWarning::UnexpectedConfidence);
            }
            None
        }
    };
    Ok(ParsedVerdict { reasoning, is_satisfied, confidence, warnings })
}

/// Integer-valued numbers, or strings holding one.
fn integer(value: &Value) -> Option<i64> {
    match value {
        Value::Number(n) => n.as_i64().or_else(|| {
            let x = n.as_f64()?;
            (x.fract() == 0.0 && x.abs() < 1e15).then_some(x as i64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// The first `{` that starts a complete JSON object, and whether it was the
/// only non-whitespace content.
fn first_object(raw: &str) -> Option<(Map<String, Value>, bool)> {
    let mut from = 0;
    while let Some(offset) = raw[from..].find('{') {
        let start = from + offset;
        let mut stream = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            let end = start + stream.byte_offset();
            let clean = raw[..start].trim().is_empty() && raw[end..].trim().is_empty();
            return Some((map, clean));
        }
        from = start + 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_variant_has_no_confidence() {
        let v = parse_verdict(r#"{"1_Reasoning":"x","2_IsSatisfied":false}"#, Role::Large).unwrap();
        assert_eq!(v, ParsedVerdict { reasoning: "x".into(), is_satisfied: false, confidence: None, warnings: vec![] });
    }

    #[test]
    fn prose_around_the_object_is_tolerated() {
        let raw = "Sure! Here is my answer:\n```json\n{\"1_Reasoning\": \"a {brace} inside\", \"2_IsSatisfied\": true, \"3_Confidence\": \"85\"}\n```\nThanks.";
        let v = parse_verdict(raw, Role::Small).unwrap();
        assert_eq!(v.reasoning, "a {brace} inside");
        assert_eq!(v.confidence, Some(85));
        assert_eq!(v.warnings, vec![VerdictWarning::NonCleanResponse]);
    }

    #[test]
    fn skips_brace_fragments_before_the_object() {
        let raw = "{not json} then {\"1_Reasoning\":\"r\",\"2_IsSatisfied\":\"FALSE\",\"3_Confidence\":70.0}";
        let v = parse_verdict(raw, Role::Small).unwrap();
        assert!(!v.is_satisfied);
        assert_eq!(v.confidence, Some(70));
    }

    #[test]
    fn out_of_range_confidence_is_clamped() {
        let v = parse_verdict(r#"{"1_Reasoning":"r","2_IsSatisfied":true,"3_Confidence":140}"#, Role::Small).unwrap();
        assert_eq!(v.confidence, Some(100));
        assert_eq!(v.warnings, vec![VerdictWarning::ConfidenceClamped { raw: 140 }]);
        let v = parse_verdict(r#"{"1_Reasoning":"r","2_IsSatisfied":true,"3_Confidence":-5}"#, Role::Small).unwrap();
        assert_eq!(v.confidence, Some(0));
    }

    #[test]
    fn each_failure_has_its_own_kind() {
        let small = |s| parse_verdict(s, Role::Small).unwrap_err();
        assert_eq!(small("I think it is satisfied."), VerdictError::NoJsonObject);
        assert_eq!(small(r#"{"2_IsSatisfied":true,"3_Confidence":1}"#), VerdictError::MissingField(REASONING));
        assert_eq!(small(r#"{"1_Reasoning":"r","3_Confidence":1}"#), VerdictError::MissingField(SATISFIED));
        assert_eq!(
            small(r#"{"1_Reasoning":"r","2_IsSatisfied":"yes","3_Confidence":1}"#),
            VerdictError::NonBooleanSatisfied("\"yes\"".into())
        );
        assert_eq!(small(r#"{"1_Reasoning":"r","2_IsSatisfied":true}"#), VerdictError::MissingConfidence);
        assert_eq!(
            small(r#"{"1_Reasoning":"r","2_IsSatisfied":true,"3_Confidence":85.5}"#),
            VerdictError::InvalidConfidence("85.5".into())
        );
    }

    #[test]
    fn large_role_drops_a_stray_confidence() {
        let v = parse_verdict(r#"{"1_Reasoning":"r","2_IsSatisfied":true,"3_Confidence":99}"#, Role::Large).unwrap();
        assert_eq!(v.confidence, None);
        assert_eq!(v.warnings, vec![VerdictWarning::UnexpectedConfidence]);
    }
}
