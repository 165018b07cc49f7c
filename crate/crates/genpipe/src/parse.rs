use crate::GenerationError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedHint {
    pub explanation: String,
    pub hint_text: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Marker {
    Explanation,
    Hint,
}

/// Recognises `EXPLANATION:` / `HINT:` at the start of a line, ignoring case and
/// markdown decoration such as `**HINT:**` or `### Hint:`. Returns the marker and
/// the text after it on the same line.
fn marker(line: &str) -> Option<(Marker, &str)> {
    let stripped = line.trim_start().trim_start_matches(['#', '*', ' ']);
    for (word, m) in [("explanation:", Marker::Explanation), ("hint:", Marker::Hint)] {
        if stripped.get(..word.len()).is_some_and(|head| head.eq_ignore_ascii_case(word)) {
            let rest = stripped[word.len()..].trim_start_matches('*');
            return Some((m, rest));
        }
    }
    None
}

/// Splits a provider reply into explanation and hint. Replies without markers
/// become the hint as a whole.
pub fn parse_response(raw: &str) -> Result<ParsedHint, GenerationError> {
    if raw.trim().is_empty() {
        return Err(GenerationError::EmptyResponse);
    }
    let mut explanation: Option<String> = None;
    let mut hint: Option<String> = None;
    let mut current: Option<Marker> = None;
    for line in raw.lines() {
        if let Some((m, rest)) = marker(line) {
            current = Some(m);
            let slot = match m {
                Marker::Explanation => &mut explanation,
                Marker::Hint => &mut hint,
            };
            // A repeated marker starts over; the last block wins.
            *slot = Some(format!("{rest}\n"));
            continue;
        }
        let slot = match current {
            Some(Marker::Explanation) => &mut explanation,
            Some(Marker::Hint) => &mut hint,
            None => continue,
        };
        if let Some(text) = slot.as_mut() {
            text.push_str(line);
            text.push('\n');
        }
    }
    match (explanation, hint) {
        (None, None) => Ok(ParsedHint {
            explanation: String::new(),
            hint_text: raw.trim().to_string(),
        }),
        (_, None) => Err(GenerationError::EmptyResponse),
        (explanation, Some(hint)) => {
            let hint_text = hint.trim().to_string();
            if hint_text.is_empty() {
                return Err(GenerationError::EmptyResponse);
            }
            Ok(ParsedHint {
                explanation: explanation.map(|e| e.trim().to_string()).unwrap_or_default(),
                hint_text,
            })
        }
    }
}

/// First fenced code block in `text`, without its fences or language tag.
pub fn extract_code_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_fence = &text[open + 3..];
    let body_start = after_fence.find('\n')? + 1;
    let body = &after_fence[body_start..];
    let close = body.find("```")?;
    let code = &body[..close];
    (!code.trim().is_empty()).then_some(code)
}
