# Test driver executed inside the sandbox process.
# argv: <student source> <cases json> <result jsonl>
import ast
import json
import math
import os
import sys
import traceback

VIOLATION_EXIT = 86
ORIGINAL_PID = os.getpid()
BLOCKED_EVENTS = (
    "os.fork",
    "os.forkpty",
    "os.system",
    "os.exec",
    "os.posix_spawn",
    "os.spawn",
    "subprocess.Popen",
    "pty.spawn",
    "socket.connect",
    "socket.bind",
    "socket.sendto",
    "socket.getaddrinfo",
)


def _audit(event, args):
    if event in BLOCKED_EVENTS:
        try:
            sys.stderr.write("sandbox policy violation: %s\n" % event)
            sys.stderr.flush()
        finally:
            os._exit(VIOLATION_EXIT)


def _trace(exc, skip=1):
    tb = exc.__traceback__
    for _ in range(skip):
        if tb is not None:
            tb = tb.tb_next
    lines = traceback.format_exception(type(exc), exc, tb)
    return "".join(lines)[-4000:]


def _safe_repr(value, limit=2000):
    try:
        text = repr(value)
    except BaseException as exc:
        text = "<unrepresentable %s>" % type(exc).__name__
    if len(text) > limit:
        text = text[:limit] + "..."
    return text


def _exact(a, b):
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) == type(b) and a == b
    return bool(a == b)


def _close(a, b, rel, abs_):
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
            return True
        return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return type(a) == type(b) and len(a) == len(b) and all(_close(x, y, rel, abs_) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], rel, abs_) for k in a)
    return a == b


def main():
    student_path, cases_path, result_path = sys.argv[1:4]
    with open(cases_path) as fh:
        cases = json.load(fh)
    out = open(result_path, "w", buffering=1)

    def emit(record):
        if os.getpid() != ORIGINAL_PID:
            os._exit(VIOLATION_EXIT)
        out.write(json.dumps(record) + "\n")
        out.flush()

    expected_values = []
    for index, case in enumerate(cases):
        try:
            expected_values.append(ast.literal_eval(case["expected"]))
        except Exception as exc:
            emit({"event": "harness_error", "index": index, "message": "bad expected literal: %s" % exc})
            return 2

    with open(student_path) as fh:
        source = fh.read()
    namespace = {"__name__": "__student__"}
    sys.addaudithook(_audit)
    try:
        exec(compile(source, "student.py", "exec"), namespace)
    except BaseException as exc:
        emit({"event": "load_error", "trace": _trace(exc)})
        return 0

    for index, case in enumerate(cases):
        emit({"event": "start", "index": index})
        try:
            observed = eval(compile(case["call"], "<test %d>" % (index + 1), "eval"), namespace)
        except BaseException as exc:
            emit({"event": "case", "index": index, "status": "error", "trace": _trace(exc)})
            continue
        expected = expected_values[index]
        try:
            if case.get("comparison", "exact") == "approx":
                ok = _close(observed, expected, case.get("rel_tol", 1e-9), case.get("abs_tol", 0.0))
            else:
                ok = _exact(observed, expected)
        except BaseException as exc:
            emit({"event": "case", "index": index, "status": "error", "trace": _trace(exc, skip=0)})
            continue
        emit({
            "event": "case",
            "index": index,
            "status": "pass" if ok else "fail",
            "observed": _safe_repr(observed),
            "expected": _safe_repr(expected),
        })
    emit({"event": "done"})
    return 0


if __name__ == "__main__":
    code = main()
    sys.stdout.flush()
    sys.stderr.flush()
    os._exit(code)
