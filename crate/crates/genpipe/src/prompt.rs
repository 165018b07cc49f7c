use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use metahint_core::{HintRequest, HintType};
use metahint_exec::{QuestionSpec, ValidatedProgram};

use crate::provider::Phase;
use crate::GenerationError;

/// Always part of the hint system prompt.
pub const GUARD_RAIL_CLAUSE: &str = "Never reveal a full or partial solution. Do not write corrected or \
optimized code, do not give a step-by-step algorithm that solves the exercise, and do not point to the \
exact line edit that would fix the program.";

pub const SECTION_QUESTION: &str = "## Question";
pub const SECTION_STUDENT_CODE: &str = "## Student code";
pub const SECTION_REFLECTION: &str = "## Student reflection";
pub const SECTION_BUGGY_OUTPUT: &str = "## Buggy output";
pub const SECTION_REPAIRED: &str = "## Repaired program";
pub const SECTION_OPTIMIZED: &str = "## Optimized program";

pub const TEMPLATE_NAMES: [&str; 6] = ["hint_system", "planning", "debugging", "optimization", "repair", "optimize"];

/// Named prompt templates.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    texts: BTreeMap<String, String>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    pub fn builtin() -> Self {
        let texts = [
            ("hint_system", include_str!("../assets/templates/hint_system.txt")),
            ("planning", include_str!("../assets/templates/planning.txt")),
            ("debugging", include_str!("../assets/templates/debugging.txt")),
            ("optimization", include_str!("../assets/templates/optimization.txt")),
            ("repair", include_str!("../assets/templates/repair.txt")),
            ("optimize", include_str!("../assets/templates/optimize.txt")),
        ];
        Self {
            texts: texts.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { texts: BTreeMap::new() }
    }

    /// Reads `<name>.txt` for every known template name present in `dir`.
    /// Absent files surface as `TemplateMissing` when first needed.
    pub fn from_dir(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let mut texts = BTreeMap::new();
        for name in TEMPLATE_NAMES {
            let path = dir.as_ref().join(format!("{name}.txt"));
            if path.exists() {
                texts.insert(name.to_string(), fs::read_to_string(path)?);
            }
        }
        Ok(Self { texts })
    }

    pub fn insert(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.texts.insert(name.into(), text.into());
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        self.texts.remove(name)
    }

    pub fn get(&self, name: &str) -> Result<&str, GenerationError> {
        self.texts
            .get(name)
            .map(|t| t.trim_end())
            .ok_or_else(|| GenerationError::TemplateMissing(name.to_string()))
    }
}

/// Facts about the student's program gathered before prompting.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicInfo {
    pub buggy_output: String,
    pub repaired_program: Option<ValidatedProgram>,
    pub optimized_program: Option<ValidatedProgram>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub hint_type: HintType,
}

fn section(out: &mut String, header: &str, body: &str) {
    out.push_str(header);
    out.push('\n');
    out.push_str(body);
    if !body.ends_with('\n') {
        out.push('\n');
    }
    out.push('\n');
}

fn code_section(out: &mut String, header: &str, code: &str) {
    let mut body = String::from("```python\n");
    body.push_str(code);
    if !code.ends_with('\n') {
        body.push('\n');
    }
    body.push_str("```");
    section(out, header, &body);
}

fn common_sections(req: &HintRequest, q: &QuestionSpec) -> String {
    let mut user = String::new();
    section(&mut user, SECTION_QUESTION, q.prompt_text.trim_end());
    code_section(&mut user, SECTION_STUDENT_CODE, &req.code_snapshot);
    user
}

/// Builds the prompt for the hint itself.
pub fn assemble_prompt(
    templates: &Templates,
    req: &HintRequest,
    q: &QuestionSpec,
    info: &SymbolicInfo,
) -> Result<PromptBundle, GenerationError> {
    let ty = req.hint_type;
    let mismatch = match ty {
        HintType::Planning => info.repaired_program.is_some() || info.optimized_program.is_some(),
        HintType::Debugging => info.optimized_program.is_some(),
        HintType::Optimization => info.repaired_program.is_some(),
    };
    if mismatch {
        return Err(GenerationError::ContextMismatch(ty));
    }

    let mut system_text = String::new();
    system_text.push_str(templates.get("hint_system")?);
    system_text.push_str("\n\n");
    system_text.push_str(GUARD_RAIL_CLAUSE);
    system_text.push_str("\n\n");
    system_text.push_str(templates.get(ty.as_str())?);
    system_text.push_str("\nThe student was told this hint type means: ");
    system_text.push_str(ty.description());
    system_text.push('\n');

    let mut user_text = common_sections(req, q);
    if !req.reflection.trim().is_empty() {
        section(&mut user_text, SECTION_REFLECTION, &req.reflection);
    }
    section(&mut user_text, SECTION_BUGGY_OUTPUT, &info.buggy_output);
    if let Some(program) = &info.repaired_program {
        code_section(&mut user_text, SECTION_REPAIRED, program.source());
    }
    if let Some(program) = &info.optimized_program {
        code_section(&mut user_text, SECTION_OPTIMIZED, program.source());
    }
    Ok(PromptBundle {
        system_text,
        user_text: user_text.trim_end().to_string() + "\n",
        hint_type: ty,
    })
}

/// Builds the (system, user) pair asking for a repaired or optimized program.
pub fn assemble_candidate_request(
    templates: &Templates,
    phase: Phase,
    req: &HintRequest,
    q: &QuestionSpec,
    buggy_output: &str,
) -> Result<(String, String), GenerationError> {
    let name = match phase {
        Phase::Repair => "repair",
        Phase::Optimize => "optimize",
        Phase::Hint => return Err(GenerationError::TemplateMissing("hint candidate".into())),
    };
    let system = templates.get(name)?.to_string();
    let mut user = common_sections(req, q);
    section(&mut user, SECTION_BUGGY_OUTPUT, buggy_output);
    Ok((system, user.trim_end().to_string() + "\n"))
}
