use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use metahint_core::{AssignmentId, QuestionId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIME_LIMIT_SECS: f64 = 10.0;
pub const DEFAULT_MEMORY_LIMIT: u64 = 512 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum QuestionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("question `{question}`: {message}")]
    Invalid { question: String, message: String },
    #[error("question `{0}` is defined more than once")]
    Duplicate(QuestionId),
    #[error("no question files found in {0}")]
    Empty(PathBuf),
}

/// How a test's observed value is compared with the expected literal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Comparison {
    #[default]
    Exact,
    /// Numeric leaves compared with `math.isclose`; containers element-wise.
    Approx {
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
        #[serde(default)]
        abs_tol: f64,
    },
}

fn default_rel_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    /// Expression evaluated in the student's namespace, e.g. `count_words("a b")`.
    pub call: String,
    /// Literal of the expected result, e.g. `{'a': 1}`.
    pub expected: String,
    #[serde(default)]
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub question_id: QuestionId,
    pub assignment_id: AssignmentId,
    pub prompt_text: String,
    #[serde(default)]
    pub starter_code: String,
    /// Known-correct program. Used by fixtures and tooling; never served to students.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solution: Option<String>,
    pub test_cases: Vec<TestCase>,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_memory_limit")]
    pub memory_limit: u64,
}

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT_SECS
}

fn default_memory_limit() -> u64 {
    DEFAULT_MEMORY_LIMIT
}

impl QuestionSpec {
    pub fn new(
        question_id: QuestionId,
        assignment_id: AssignmentId,
        prompt_text: impl Into<String>,
        test_cases: Vec<TestCase>,
    ) -> Self {
        Self {
            question_id,
            assignment_id,
            prompt_text: prompt_text.into(),
            starter_code: String::new(),
            reference_solution: None,
            test_cases,
            time_limit: DEFAULT_TIME_LIMIT_SECS,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }

    pub fn with_time_limit(mut self, secs: f64) -> Self {
        self.time_limit = secs;
        self
    }

    pub fn validate(&self) -> Result<(), QuestionError> {
        let invalid = |message: &str| QuestionError::Invalid {
            question: self.question_id.to_string(),
            message: message.to_string(),
        };
        if self.test_cases.is_empty() {
            return Err(invalid("at least one test case is required"));
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(invalid("time_limit must be positive"));
        }
        if self.memory_limit == 0 {
            return Err(invalid("memory_limit must be positive"));
        }
        if self.test_cases.iter().any(|c| c.call.trim().is_empty()) {
            return Err(invalid("test case call must not be empty"));
        }
        Ok(())
    }
}

/// Loads one question document (`.toml` or `.json`).
pub fn load_question_file(path: impl AsRef<Path>) -> Result<QuestionSpec, QuestionError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| QuestionError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |message: String| QuestionError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let spec: QuestionSpec = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Loads every `.toml`/`.json` file in `dir`, keyed by question id.
pub fn load_questions_dir(dir: impl AsRef<Path>) -> Result<BTreeMap<QuestionId, QuestionSpec>, QuestionError> {
    let dir = dir.as_ref();
    let io_err = |source| QuestionError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("toml" | "json")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(QuestionError::Empty(dir.to_path_buf()));
    }
    let mut questions = BTreeMap::new();
    for path in paths {
        let spec = load_question_file(&path)?;
        if questions.contains_key(&spec.question_id) {
            return Err(QuestionError::Duplicate(spec.question_id));
        }
        questions.insert(spec.question_id.clone(), spec);
    }
    Ok(questions)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
question_id = "a1q1"
assignment_id = "A1"
prompt_text = "Return the sum of two numbers."
starter_code = "def add(a, b):\n    pass\n"

[[test_cases]]
call = "add(1, 2)"
expected = "3"

[[test_cases]]
call = "add(0.1, 0.2)"
expected = "0.3"
comparison = { mode = "approx", rel_tol = 1e-6 }
"#;

    #[test]
    fn toml_defaults_apply() {
        let spec: QuestionSpec = toml::from_str(SAMPLE).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.time_limit, 10.0);
        assert_eq!(spec.memory_limit, 512 * 1024 * 1024);
        assert_eq!(spec.test_cases[0].comparison, Comparison::Exact);
        assert_eq!(
            spec.test_cases[1].comparison,
            Comparison::Approx {
                rel_tol: 1e-6,
                abs_tol: 0.0
            }
        );
    }

    #[test]
    fn rejects_empty_tests_and_bad_limits() {
        let mut spec: QuestionSpec = toml::from_str(SAMPLE).unwrap();
        spec.time_limit = 0.0;
        assert!(spec.validate().is_err());
        spec.time_limit = 1.0;
        spec.test_cases.clear();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn loads_directory_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("q1.toml"), SAMPLE).unwrap();
        let loaded = load_questions_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        let json = serde_json::to_string(&loaded.values().next().unwrap()).unwrap();
        fs::write(dir.path().join("q1-copy.json"), json).unwrap();
        assert!(matches!(load_questions_dir(dir.path()), Err(QuestionError::Duplicate(_))));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_questions_dir(empty.path()), Err(QuestionError::Empty(_))));
    }
}
