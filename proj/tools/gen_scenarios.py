#!/usr/bin/env python3
"""Writes scenarios/binary_search.json.

Each step's Python source is executed under sys.settrace; the line events of
the probed function become a mock program, so the mock backend replays what
Python would have shown. Run from the repository root:

    python3 tools/gen_scenarios.py [--out scenarios/binary_search.json]
"""

import argparse
import json
import sys
from pathlib import Path

ARRAY = "['a','b','c','d','e','f']"
FUNCTION = "binary_search"
MAX_EVENTS = 500

HEAD = "def binary_search(arr, target):\n"
LEFT = "    left = 0\n"
RIGHT = "    right = len(arr) - 1\n"
MID_FLOAT = "    mid = (left + right) / 2\n"
MID_INT = "    mid = (left + right) // 2\n"
VALUE = "    value = arr[mid]\n"
BRANCHES = (
    "    if value < target:\n"
    "        left = mid + 1\n"
    "    elif value > target:\n"
    "        right = mid - 1\n"
    "    else:\n"
    "        return mid\n"
)


def loop(condition):
    body = "\n" + MID_INT + VALUE + "\n" + BRANCHES
    indented = "".join("    " + line if line.strip() else line for line in body.splitlines(True))
    return "\n    while " + condition + ":" + indented


BODIES = {
    "defined": HEAD + "    pass\n",
    "low": HEAD + LEFT,
    "high": HEAD + LEFT + RIGHT,
    "mid": HEAD + LEFT + RIGHT + MID_FLOAT,
    "mid_int": HEAD + LEFT + RIGHT + MID_INT,
    "value": HEAD + LEFT + RIGHT + MID_INT + VALUE,
    "branches": HEAD + LEFT + RIGHT + MID_INT + VALUE + "\n" + BRANCHES,
    "while_true": HEAD + LEFT + RIGHT + loop("True"),
    "while_cond": HEAD + LEFT + RIGHT + loop("left <= right"),
    "return": HEAD + LEFT + RIGHT + loop("left <= right") + "\n    return -1\n",
}

# (kind, body, target, note); indices start at 0.
STEPS = [
    ("code", "defined", "d", "function with an array and a target"),
    ("code", "low", "d", "new variable low"),
    ("code", "high", "d", "new variable high"),
    ("code", "mid", "d", "new variable mid"),
    ("code", "mid_int", "d", "mid becomes an integer"),
    ("code", "value", "d", "new variable value"),
    ("code", "branches", "d", "if/else added"),
    ("input", "branches", "b", "target 'b'"),
    ("input", "branches", "c", "target 'c'"),
    ("code", "while_true", "d", "target 'd', mid onwards moved into while True"),
    ("input", "while_true", "a", "target 'a'"),
    ("input", "while_true", "b", "target 'b'"),
    ("input", "while_true", "c", "target 'c'"),
    ("input", "while_true", "d", "target 'd'"),
    ("input", "while_true", "e", "target 'e'"),
    ("input", "while_true", "f", "target 'f'"),
    ("input", "while_true", "g", "target 'g', never terminates"),
    ("code", "while_cond", "g", "loop condition left <= right"),
    ("code", "return", "g", "return -1 at the end"),
]


def python_source(body, target):
    return f"#@{FUNCTION}({ARRAY}, '{target}')\n" + body


def trace(source, target):
    """Line events of one call as (line, column, locals-before) plus the outcome."""
    code = compile(source, "<probe>", "exec")
    namespace = {}
    exec(code, namespace)
    fn = namespace[FUNCTION]
    events = []
    outcome = {}
    lines = source.splitlines()

    def local_tracer(frame, event, arg):
        if event == "line":
            if len(events) >= MAX_EVENTS:
                raise TimeoutError
            text = lines[frame.f_lineno - 1]
            column = len(text) - len(text.lstrip()) + 1
            events.append((frame.f_lineno, column, dict(frame.f_locals)))
        elif event == "return":
            outcome["locals"] = dict(frame.f_locals)
            outcome["return"] = repr(arg)
        return local_tracer

    def global_tracer(frame, event, arg):
        if frame.f_code is fn.__code__:
            return local_tracer
        return None

    sys.settrace(global_tracer)
    try:
        fn(list("abcdef"), target)
    except TimeoutError:
        outcome = {"looping": True}
    finally:
        sys.settrace(None)
    return events, outcome


def shown(local_vars):
    return {k: repr(v) for k, v in local_vars.items() if k not in ("arr", "target")}


def dump_program(program):
    """JSON with one step per line, like the hand-written fixtures."""
    fn = program["functions"][FUNCTION]
    steps = ",\n".join("        " + json.dumps(step) for step in fn["steps"])
    return (
        "{\n"
        f'  "listing": {json.dumps(program["listing"])},\n'
        '  "functions": {\n'
        f'    "{FUNCTION}": {{\n'
        f'      "params": {json.dumps(fn["params"])},\n'
        '      "steps": [\n'
        f"{steps}\n"
        "      ]\n    }\n  }\n}\n"
    )


def mock_program(python, target):
    events, outcome = trace(python, target)
    steps = []
    seen = {}
    for i, (line, column, before) in enumerate(events):
        key = (line, tuple(sorted(shown(before).items())))
        if key in seen:
            steps[-1]["goto"] = seen[key]
            break
        seen[key] = i
        after = events[i + 1][2] if i + 1 < len(events) else outcome.get("locals", before)
        step = {"line": line, "column": column}
        updates = {k: v for k, v in shown(after).items() if shown(before).get(k) != v}
        if updates:
            step["set"] = updates
        steps.append(step)
    else:
        steps[-1]["return"] = outcome["return"]
    listing = python.replace("#@", "//@", 1)
    program = {
        "listing": listing,
        "functions": {FUNCTION: {"params": ["arr", "target"], "steps": steps}},
    }
    header = f"//@{FUNCTION}({ARRAY}, '{target}')\n// Trace of the Python source in 'listing'.\n"
    looping = "looping" in outcome
    expect = {
        "status": "interrupted" if looping else "completed",
        "return": None if looping else outcome["return"],
        "snapshots": None if looping else len(steps),
    }
    return header + dump_program(program), expect


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="scenarios/binary_search.json")
    args = parser.parse_args()

    steps = []
    for index, (kind, body, target, note) in enumerate(STEPS):
        python = python_source(BODIES[body], target)
        mock, expect = mock_program(python, target)
        if expect["snapshots"] is None:
            del expect["snapshots"]
        if expect["return"] is None:
            del expect["return"]
        steps.append({
            "index": index,
            "kind": kind,
            "note": note,
            "sources": {"python": python, "mock": mock, "mock-direct": mock},
            "expect": expect,
        })
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"name": "binary_search", "steps": steps}, indent=1) + "\n")
    print(f"wrote {len(steps)} steps to {out}")


if __name__ == "__main__":
    main()
