use serde::{Deserialize, Serialize};

/// One criterion-level scoring request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub request_id: String,
    pub problem: String,
    pub student_answer: String,
    pub criterion: String,
    pub conversation: String,
    /// Carried into the decision log; empty when the caller has none.
    #[serde(default)]
    pub item_id: String,
    #[serde(default)]
    pub criterion_id: String,
}

impl ScoreRequest {
    /// Checks that the id and all four content fields are nonempty.
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("request_id", &self.request_id),
            ("problem", &self.problem),
            ("student_answer", &self.student_answer),
            ("criterion", &self.criterion),
            ("conversation", &self.conversation),
        ] {
            if value.trim().is_empty() {
                return Err(format!("{name} must be nonempty"));
            }
        }
        Ok(())
    }
}

/// The sentence that asks the small model for its confidence.
pub const ELICITATION: &str = "What is the probability that your scoring judgment is correct?";

/// Marker for the lines removed from the large-model variant.
pub const CONFIDENCE_FIELD: &str = "3_Confidence";

const TEMPLATE: &str = r#"<Role>
You are an evaluator reviewing a conversation between an AI assessment proctor and a student. Determine whether the student satisfied the evaluation criterion based on their responses. Do NOT continue the conversation. Do NOT roleplay as the proctor or the student.
</Role>

<Problem>{problem}</Problem>
<StudentAnswer>{student_answer}</StudentAnswer>
<Criterion>{criterion}</Criterion>
<Conversation>
{conversation}
</Conversation>

<Requirements>
 - Do NOT mark the criterion as satisfied unless you are confident that the student has demonstrated understanding of the criterion.
 - Students do not need to use the EXACT concept terms in the criterion, but can use synonymous language.
 - Evaluate based on the full context: the problem, the student's answer, and their conversation.
 - Do not assume the student understands the criterion based on a correct answer to the Problem.
 - Don't mark the criterion as satisfied if the student is describing a step in solving the problem (unless that is necessary to demonstrate understanding of the criterion).
</Requirements>

Respond with a JSON object matching this schema:

{
  "1_Reasoning": "Brief reasoning about whether the criterion is satisfied (25 words max).",
  "2_IsSatisfied": "<true or false>",
  "3_Confidence": "<integer 0 -100>"
}

 - 1_Reasoning (string, required): Brief reasoning about whether the student has satisfied the criterion. Keep to 25 words at most.
 - 2_IsSatisfied (boolean, required): true if the criterion has been satisfied, false otherwise.
 - 3_Confidence (integer, required): What is the probability that your scoring judgment is correct? 0 = no confidence, 100 = certain.

Return ONLY the JSON object, no other text.
"#;

/// Renders the scoring prompt for `request`.
///
/// Placeholders are filled in a single pass over the template, so braces
/// inside request fields are copied through untouched. With
/// `include_confidence = false` every line naming `3_Confidence` is dropped
/// and nothing else changes.
///
/// ```
/// use cascadekit_router::{render_prompt, ScoreRequest, ELICITATION};
/// let req = ScoreRequest {
///     request_id: "r1".into(),
///     problem: "2 + 2".into(),
///     student_answer: "4".into(),
///     criterion: "Explains {carrying}".into(),
///     conversation: "Proctor: why?\nStudent: I added.".into(),
///     item_id: String::new(),
///     criterion_id: String::new(),
/// };
/// let small = render_prompt(&req, true);
/// assert!(small.contains(ELICITATION));
/// assert!(small.contains("<Criterion>Explains {carrying}</Criterion>"));
/// assert!(!render_prompt(&req, false).contains("3_Confidence"));
/// ```
pub fn render_prompt(request: &ScoreRequest, include_confidence: bool) -> String {
    if include_confidence {
        return substitute(TEMPLATE, request);
    }
    let template: String = TEMPLATE
        .split_inclusive('\n')
        .filter(|line| !line.contains(CONFIDENCE_FIELD))
        .collect();
    substitute(&template, request)
}

fn substitute(text: &str, request: &ScoreRequest) -> String {
    let fields: [(&str, &str); 4] = [
        ("{problem}", &request.problem),
        ("{student_answer}", &request.student_answer),
        ("{criterion}", &request.criterion),
        ("{conversation}", &request.conversation),
    ];
    let mut out = String::with_capacity(text.len() + 256);
    let mut rest = text;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        match fields.iter().find(|(key, _)| tail.starts_with(key)) {
            Some((key, value)) => {
                out.push_str(value);
                rest = &tail[key.len()..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
