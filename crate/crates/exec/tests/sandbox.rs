use std::time::Instant;

use metahint_core::{AssignmentId, QuestionId};
use metahint_exec::{
    render_buggy_output, Comparison, ExecStatus, MeasureError, QuestionSpec, Sandbox, SandboxConfig, SandboxError,
    TestCase, BUGGY_OUTPUT_LIMIT, PASSED_MARKER, TRUNCATION_MARKER,
};

fn case(call: &str, expected: &str) -> TestCase {
    TestCase {
        call: call.into(),
        expected: expected.into(),
        comparison: Comparison::Exact,
    }
}

fn question(cases: Vec<TestCase>) -> QuestionSpec {
    QuestionSpec::new(
        QuestionId::new("q").unwrap(),
        AssignmentId::new("A1").unwrap(),
        "Implement the function.",
        cases,
    )
}

fn divide_question() -> QuestionSpec {
    question(vec![case("divide(6, 3)", "2.0"), case("divide(1, 0)", "None")])
}

#[test]
fn correct_program_passes() {
    let sb = Sandbox::default();
    let code = "def divide(a, b):\n    return None if b == 0 else a / b\n";
    let out = sb.run_against_harness(code, &divide_question()).unwrap();
    assert_eq!(out.status, ExecStatus::Passed, "{out:?}");
    assert_eq!((out.tests_passed, out.tests_total), (2, 2));
    assert!(out.failure_detail.is_empty());
    assert_eq!(sb.extract_buggy_output(code, &divide_question()).unwrap(), PASSED_MARKER);
}

#[test]
fn division_by_zero_is_reported_with_trace() {
    let sb = Sandbox::default();
    let code = "def divide(a, b):\n    return a / b\n";
    let out = sb.run_against_harness(code, &divide_question()).unwrap();
    assert_eq!(out.status, ExecStatus::RaisedError);
    assert_eq!(out.tests_passed, 1);
    assert!(out.failure_detail.contains("ZeroDivisionError"), "{}", out.failure_detail);
    assert!(out.failure_detail.contains("divide(1, 0)"));
    let rendered = render_buggy_output(&out);
    assert!(rendered.contains("ZeroDivisionError"));
}

#[test]
fn wrong_answer_shows_expected_and_observed() {
    let sb = Sandbox::default();
    let q = question(vec![case("add(2, 2)", "4"), case("add(1, 1)", "2")]);
    let out = sb
        .run_against_harness("def add(a, b):\n    return a * b\n", &q)
        .unwrap();
    assert_eq!(out.status, ExecStatus::FailedAssertion);
    assert!(out.failure_detail.contains("expected: 2"));
    assert!(out.failure_detail.contains("observed: 1"));
    assert_eq!(out.tests_passed, 1);
}

#[test]
fn bool_is_not_an_int_for_exact_comparison() {
    let sb = Sandbox::default();
    let q = question(vec![case("f()", "1")]);
    let out = sb.run_against_harness("def f():\n    return True\n", &q).unwrap();
    assert_eq!(out.status, ExecStatus::FailedAssertion);
}

#[test]
fn approx_comparison_tolerates_rounding() {
    let sb = Sandbox::default();
    let mut q = question(vec![case("total([0.1, 0.2])", "[0.3]")]);
    q.test_cases[0].comparison = Comparison::Approx {
        rel_tol: 1e-9,
        abs_tol: 0.0,
    };
    let code = "def total(xs):\n    return [sum(xs)]\n";
    assert!(sb.run_against_harness(code, &q).unwrap().passed());
    q.test_cases[0].comparison = Comparison::Exact;
    assert_eq!(
        sb.run_against_harness(code, &q).unwrap().status,
        ExecStatus::FailedAssertion
    );
}

#[test]
fn syntax_error_is_a_raised_error() {
    let sb = Sandbox::default();
    let out = sb.run_against_harness("def divide(a, b)\n    return a\n", &divide_question()).unwrap();
    assert_eq!(out.status, ExecStatus::RaisedError);
    assert!(out.failure_detail.contains("SyntaxError"), "{}", out.failure_detail);
    assert_eq!(out.tests_passed, 0);
}

#[test]
fn infinite_loop_times_out_and_is_killed() {
    let sb = Sandbox::default();
    let q = question(vec![case("spin()", "0")]).with_time_limit(10.0);
    let start = Instant::now();
    let out = sb.run_against_harness("def spin():\n    while True:\n        pass\n", &q).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(out.status, ExecStatus::TimedOut);
    assert!(out.wall_time >= 10.0);
    assert!(elapsed < 12.0, "run took {elapsed}s");
    assert!(out.failure_detail.contains("spin()"));
}

#[test]
fn sleeping_program_times_out_on_wall_clock() {
    let sb = Sandbox::default();
    let q = question(vec![case("nap()", "0")]).with_time_limit(0.5);
    let out = sb
        .run_against_harness("import time\ndef nap():\n    time.sleep(30)\n", &q)
        .unwrap();
    assert_eq!(out.status, ExecStatus::TimedOut);
    assert!(out.wall_time >= 0.5);
    assert!(out.wall_time < 3.0);
}

#[test]
fn fork_is_blocked() {
    let sb = Sandbox::default();
    let q = question(vec![case("storm()", "0")]).with_time_limit(5.0);
    let code = "import os\ndef storm():\n    while True:\n        os.fork()\n";
    let out = sb.run_against_harness(code, &q).unwrap();
    assert_eq!(out.status, ExecStatus::Crashed);
    assert!(out.failure_detail.contains("sandbox policy violation"), "{}", out.failure_detail);
}

#[test]
fn subprocess_and_sockets_are_blocked() {
    let sb = Sandbox::default();
    let q = question(vec![case("go()", "0")]);
    for code in [
        "import subprocess\ndef go():\n    return subprocess.call(['true'])\n",
        "import socket\ndef go():\n    socket.create_connection(('127.0.0.1', 9))\n",
        "import os\ndef go():\n    return os.system('true')\n",
    ] {
        let out = sb.run_against_harness(code, &q).unwrap();
        assert_eq!(out.status, ExecStatus::Crashed, "{code}: {out:?}");
    }
}

#[test]
fn huge_stdout_is_capped() {
    let sb = Sandbox::default();
    let q = question(vec![case("spam()", "1")]);
    let code = "def spam():\n    print('x' * (1 << 20))\n    return 0\n";
    let out = sb.run_against_harness(code, &q).unwrap();
    assert_eq!(out.status, ExecStatus::FailedAssertion);
    assert!(out.stdout_bytes > 1 << 20);
    assert!(out.stdout_text.len() <= sb.config().capture_limit);
    let rendered = render_buggy_output(&out);
    assert!(rendered.len() <= BUGGY_OUTPUT_LIMIT + TRUNCATION_MARKER.len());
    assert!(rendered.ends_with(TRUNCATION_MARKER));
}

#[test]
fn memory_hog_does_not_pass() {
    let sb = Sandbox::default();
    let mut q = question(vec![case("hog()", "0")]);
    q.memory_limit = 256 * 1024 * 1024;
    let out = sb
        .run_against_harness("def hog():\n    x = bytearray(2 << 30)\n    return 0\n", &q)
        .unwrap();
    assert_eq!(out.status, ExecStatus::RaisedError);
    assert!(out.failure_detail.contains("MemoryError"), "{}", out.failure_detail);
}

#[test]
fn early_exit_is_a_crash() {
    let sb = Sandbox::default();
    let q = question(vec![case("bye()", "0")]);
    let out = sb
        .run_against_harness("import os\ndef bye():\n    os._exit(0)\n", &q)
        .unwrap();
    assert_eq!(out.status, ExecStatus::Crashed);
}

#[test]
fn invalid_expected_literal_is_a_harness_error() {
    let sb = Sandbox::default();
    let q = question(vec![case("f()", "not a literal(")]);
    assert!(matches!(
        sb.run_against_harness("def f():\n    return 0\n", &q),
        Err(SandboxError::Harness(_))
    ));
}

#[test]
fn missing_interpreter_is_unavailable() {
    let sb = Sandbox::new(SandboxConfig {
        interpreter: "/nonexistent/python".into(),
        ..SandboxConfig::default()
    });
    assert!(matches!(
        sb.run_against_harness("x = 1\n", &divide_question()),
        Err(SandboxError::Unavailable(_))
    ));
    assert!(sb.probe().is_err());
    assert!(Sandbox::default().probe().is_ok());
}

#[test]
fn validate_candidate_only_yields_programs_that_pass() {
    let sb = Sandbox::default();
    let good = sb
        .validate_candidate("def divide(a, b):\n    return a / b if b else None\n", &divide_question())
        .unwrap();
    assert!(good.valid);
    assert!(good.program.is_some());
    let bad = sb
        .validate_candidate("def divide(a, b):\n    return a / b\n", &divide_question())
        .unwrap();
    assert!(!bad.valid);
    assert!(bad.program.is_none());
}

#[test]
fn measure_runtime_orders_fast_and_slow_programs() {
    let sb = Sandbox::default();
    let q = question(vec![case("work(3)", "3")]);
    let fast = sb.measure_runtime("def work(n):\n    return n\n", &q, 3).unwrap();
    let slow = sb
        .measure_runtime("import time\ndef work(n):\n    time.sleep(0.4)\n    return n\n", &q, 3)
        .unwrap();
    assert!(slow > fast + 0.3, "fast {fast}, slow {slow}");
    assert!(matches!(
        sb.measure_runtime("def work(n):\n    return 0\n", &q, 3),
        Err(MeasureError::NotCorrect(ExecStatus::FailedAssertion))
    ));
    assert!(matches!(
        sb.measure_runtime("def work(n):\n    return n\n", &q, 0),
        Err(MeasureError::ZeroRepeats)
    ));
}

#[test]
fn files_written_by_program_stay_in_workdir() {
    let sb = Sandbox::default();
    let q = question(vec![case("where()", "True")]);
    let code = "import os\ndef where():\n    open('scratch.txt', 'w').write('x')\n    return os.path.exists('scratch.txt')\n";
    assert!(sb.run_against_harness(code, &q).unwrap().passed());
}
