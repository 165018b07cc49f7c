use std::sync::OnceLock;

use metahint_core::{now_millis, AssignmentId, HintRequest, HintType, QuestionId, StudentId};
use metahint_exec::{QuestionSpec, Sandbox, TestCase, ValidatedProgram};
use metahint_genpipe::{
    assemble_prompt, GenerationError, SymbolicInfo, Templates, GUARD_RAIL_CLAUSE, SECTION_BUGGY_OUTPUT,
    SECTION_OPTIMIZED, SECTION_QUESTION, SECTION_REFLECTION, SECTION_REPAIRED, SECTION_STUDENT_CODE,
};
use proptest::prelude::*;

fn question() -> QuestionSpec {
    QuestionSpec::new(
        QuestionId::new("double").unwrap(),
        AssignmentId::new("A1").unwrap(),
        "Return twice the input.",
        vec![TestCase {
            call: "double(4)".into(),
            expected: "8".into(),
            comparison: Default::default(),
        }],
    )
}

/// A program that really passed the harness; the only way to obtain one.
fn validated() -> &'static ValidatedProgram {
    static PROGRAM: OnceLock<ValidatedProgram> = OnceLock::new();
    PROGRAM.get_or_init(|| {
        Sandbox::default()
            .validate_candidate("def double(x):\n    return x * 2  # validated marker\n", &question())
            .unwrap()
            .program
            .expect("reference program passes")
    })
}

fn hint_type() -> impl Strategy<Value = HintType> {
    prop_oneof![
        Just(HintType::Planning),
        Just(HintType::Debugging),
        Just(HintType::Optimization)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prompt_structure_follows_hint_type(
        ty in hint_type(),
        reflection in "[ -~\n]{0,80}",
        code in "[ -~\n]{0,80}",
        buggy in "[ -~\n]{1,80}",
        with_candidate in any::<bool>(),
    ) {
        let req = HintRequest {
            student_id: StudentId::new("s").unwrap(),
            question_id: QuestionId::new("double").unwrap(),
            hint_type: ty,
            reflection: reflection.clone(),
            code_snapshot: code,
            requested_at: now_millis(),
        };
        let candidate = with_candidate.then(|| validated().clone());
        let info = SymbolicInfo {
            buggy_output: buggy,
            repaired_program: if ty == HintType::Debugging { candidate.clone() } else { None },
            optimized_program: if ty == HintType::Optimization { candidate.clone() } else { None },
        };
        let bundle = assemble_prompt(&Templates::builtin(), &req, &question(), &info).unwrap();
        prop_assert!(bundle.system_text.contains(GUARD_RAIL_CLAUSE));
        prop_assert_eq!(bundle.hint_type, ty);
        for header in [SECTION_QUESTION, SECTION_STUDENT_CODE, SECTION_BUGGY_OUTPUT] {
            prop_assert!(bundle.user_text.contains(header));
        }
        let has_candidate = with_candidate && ty != HintType::Planning;
        prop_assert_eq!(
            bundle.user_text.contains(SECTION_REPAIRED),
            has_candidate && ty == HintType::Debugging
        );
        prop_assert_eq!(
            bundle.user_text.contains(SECTION_OPTIMIZED),
            has_candidate && ty == HintType::Optimization
        );
        prop_assert_eq!(bundle.user_text.contains("validated marker"), has_candidate);
        if !reflection.trim().is_empty() {
            prop_assert!(bundle.user_text.contains(SECTION_REFLECTION));
            prop_assert!(bundle.user_text.contains(&reflection));
        }
        // Same inputs, same prompt.
        let again = assemble_prompt(&Templates::builtin(), &req, &question(), &info).unwrap();
        prop_assert_eq!(bundle, again);
    }

    #[test]
    fn mismatched_symbolic_info_is_rejected(ty in hint_type(), repaired in any::<bool>()) {
        let req = HintRequest {
            student_id: StudentId::new("s").unwrap(),
            question_id: QuestionId::new("double").unwrap(),
            hint_type: ty,
            reflection: String::new(),
            code_snapshot: String::new(),
            requested_at: now_millis(),
        };
        let wrong_slot = match ty {
            HintType::Planning => repaired,
            HintType::Debugging => false,
            HintType::Optimization => true,
        };
        let info = SymbolicInfo {
            buggy_output: "x".into(),
            repaired_program: wrong_slot.then(|| validated().clone()),
            optimized_program: (!wrong_slot).then(|| validated().clone()),
        };
        let result = assemble_prompt(&Templates::builtin(), &req, &question(), &info);
        prop_assert_eq!(result.unwrap_err(), GenerationError::ContextMismatch(ty));
    }
}
