"""Plan language: parsing, printing, evaluation, instantiation."""
import math
from importlib import resources

import numpy as np
import pytest

from mops import dsl
from mops.dsl import parse, format_template, instantiate
from mops.errors import (
    ArityMismatch,
    DivisionByZero,
    MopsError,
    PlanSyntaxError,
    UnboundParameter,
    UndeclaredIdentifier,
    UnknownAction,
    UnknownAttribute,
)
from mops.proposer import (
    DRAW_EXAMPLE_SQUARE,
    DRAW_EXAMPLE_TRIANGLE,
    PUSH_EXAMPLE_PAIR,
    PUSH_EXAMPLE_SINGLE,
)
from mops.scene import Frame, SceneState

EMPTY_SCENE = SceneState(frames=())


def all_fixture_texts():
    root = resources.files("mops") / "fixtures"
    texts = []
    for task_dir in sorted(root.iterdir(), key=lambda e: e.name):
        if not task_dir.is_dir():
            continue
        for flavor_dir in sorted(task_dir.iterdir(), key=lambda e: e.name):
            for entry in sorted(flavor_dir.iterdir(), key=lambda e: e.name):
                if entry.name.endswith(".mplan"):
                    texts.append(entry.read_text())
    return texts


def test_minimal_template():
    t = parse("params { s = 0.2; } plan { draw_line(0.1, 0.1, 0.1 + s, 0.1); }")
    assert t.params == (("s", 0.2),)
    assert len(t.actions) == 1
    assert t.actions[0].name == "draw_line"
    assert len(t.actions[0].args) == 4


def test_param_free_template():
    t = parse("plan { draw_line(0.1, 0.1, 0.3, 0.1); }")
    assert t.params == ()
    acts = instantiate(t, [], EMPTY_SCENE)
    assert acts == instantiate(t, [], EMPTY_SCENE)
    assert acts[0].args == (0.1, 0.1, 0.3, 0.1)


def test_unknown_action():
    with pytest.raises(UnknownAction) as exc:
        parse("plan { fly(1, 2); }")
    assert exc.value.name == "fly"


def test_arithmetic_evaluation():
    t = parse("plan { draw_line(0.2 * 2, 1 - 2 - 3, 2 * 3 + 4, 12 / 4 / 3); }")
    args = instantiate(t, [], EMPTY_SCENE)[0].args
    assert args[0] == 0.4
    assert args[1] == -4.0          # left associative
    assert args[2] == 10.0          # * binds tighter than +
    assert args[3] == 1.0


def test_frame_accessor_evaluation():
    scene = SceneState((Frame("block_red", 0.25, -0.1, 0.06,
                              size=(0.06, 0.06, 0.12)),))
    t = parse('plan { draw_line(cos(0) * frame("block_red").size[2] * 0.5 + 0.1,'
              ' frame("block_red").x_pos, frame("block_red").y_pos, 0); }')
    args = instantiate(t, [], scene)[0].args
    assert abs(args[0] - 0.16) < 1e-12
    assert args[1] == 0.25
    assert args[2] == -0.1


def test_builtin_functions():
    t = parse("plan { draw_line(sqrt(9), min(2, -1), max(2, -1), abs(0 - 5)); }")
    args = instantiate(t, [], EMPTY_SCENE)[0].args
    assert args == (3.0, -1.0, 2.0, 5.0)
    t = parse("plan { draw_line(sqrt(0 - 1), pi, sin(pi / 2), 0); }")
    args = instantiate(t, [], EMPTY_SCENE)[0].args
    assert math.isnan(args[0])      # sqrt of a negative is NaN, not an error
    assert args[1] == math.pi
    assert abs(args[2] - 1.0) < 1e-15


def test_division_by_zero():
    t = parse("params { s = 1.0; } plan { draw_line(1 / (s - s), 0, 0, 0); }")
    with pytest.raises(DivisionByZero):
        instantiate(t, [1.0], EMPTY_SCENE)


def test_pentagon_instantiation_matches_hand_vertices():
    lines = ["params { pos = [0.32, 0.24]; size = 0.15; } plan {"]
    for k in range(5):
        a0 = f"pi / 2 + {k} * 2 * pi / 5"
        a1 = f"pi / 2 + {k + 1} * 2 * pi / 5"
        lines.append(
            f"draw_line(pos[0] + size * cos({a0}), pos[1] + size * sin({a0}),"
            f" pos[0] + size * cos({a1}), pos[1] + size * sin({a1}));")
    lines.append("}")
    t = parse("\n".join(lines))
    assert t.param_dim() == 3
    acts = instantiate(t, t.initial_vector(), EMPTY_SCENE)
    assert len(acts) == 5
    for k, act in enumerate(acts):
        a0 = math.pi / 2 + k * 2 * math.pi / 5
        a1 = math.pi / 2 + (k + 1) * 2 * math.pi / 5
        want = (0.32 + 0.15 * math.cos(a0), 0.24 + 0.15 * math.sin(a0),
                0.32 + 0.15 * math.cos(a1), 0.24 + 0.15 * math.sin(a1))
        assert max(abs(a - w) for a, w in zip(act.args, want)) < 1e-12
    # chained: every end equals the next start
    for k in range(5):
        nxt = acts[(k + 1) % 5]
        assert abs(acts[k].args[2] - nxt.args[0]) < 1e-12
        assert abs(acts[k].args[3] - nxt.args[1]) < 1e-12


def test_vector_parameter_flattening():
    t = parse("params { a = 1.5; b = [2.0, 3.0]; } plan { draw_line(a, b[0], b[1], 0); }")
    assert t.param_dim() == 3
    assert t.initial_vector() == [1.5, 2.0, 3.0]
    env = t.bind([10.0, 20.0, 30.0])
    assert env == {"a": 10.0, "b": (20.0, 30.0)}
    args = instantiate(t, [10.0, 20.0, 30.0], EMPTY_SCENE)[0].args
    assert args == (10.0, 20.0, 30.0, 0.0)


def test_bind_wrong_length():
    t = parse("params { b = [2.0, 3.0]; } plan { draw_line(b[0], b[1], 0, 0); }")
    with pytest.raises(ArityMismatch):
        t.bind([1.0])
    with pytest.raises(ArityMismatch):
        instantiate(t, [1.0, 2.0, 3.0], EMPTY_SCENE)


def test_evaluate_unbound_parameter():
    t = parse("params { s = 1.0; } plan { draw_line(s, 0, 0, 0); }")
    with pytest.raises(UnboundParameter):
        dsl.evaluate_actions(t, {}, EMPTY_SCENE)


def test_undeclared_identifier_and_unknown_attribute():
    with pytest.raises(UndeclaredIdentifier):
        parse("plan { draw_line(bogus, 0, 0, 0); }")
    with pytest.raises(UnknownAttribute):
        parse('plan { draw_line(frame("b").volume, 0, 0, 0); }')


def test_pick_and_place_parse():
    t = parse('plan { pick("block_red"); place_sr(0.1, 0.2, 0.0, 0.0, 1.5); }')
    assert t.actions[0].args == ("block_red",)
    assert len(t.actions[1].args) == 5
    acts = instantiate(t, [], EMPTY_SCENE)
    assert acts[0].args == ("block_red",)


def test_comments_and_whitespace_are_ignored():
    clean = parse("params { s = 0.2; } plan { draw_line(s, 0, 0, 0); }")
    noisy = parse("# leading comment\nparams {\n\n  s = 0.2;  # trailing\n}\n"
                  "plan {\n  draw_line( s ,0,  0, 0 );\n}\n")
    assert clean == noisy


def test_round_trip_corpus():
    corpus = all_fixture_texts() + [
        DRAW_EXAMPLE_SQUARE, DRAW_EXAMPLE_TRIANGLE,
        PUSH_EXAMPLE_SINGLE, PUSH_EXAMPLE_PAIR,
    ]
    assert len(corpus) >= 20
    for text in corpus:
        t1 = parse(text)
        printed = format_template(t1)
        t2 = parse(printed)
        assert t1 == t2
        # canonical form is a fixpoint
        assert format_template(t2) == printed


def test_round_trip_tricky_expressions():
    texts = [
        "plan { draw_line(1 - (2 - 3), 2 * (3 + 4), -(1 + 2), 0 - -1); }",
        "plan { draw_line(-2 * -3, 1 / (2 / 4), (1 + 2) * (3 - 4), min(1, max(2, 3))); }",
        "params { v = [-1.0, 2.0]; } plan { draw_line(v[0] - v[1], -v[0], v[1] / v[0], 0); }",
    ]
    for text in texts:
        t1 = parse(text)
        t2 = parse(format_template(t1))
        assert t1 == t2
        v1 = instantiate(t1, t1.initial_vector(), EMPTY_SCENE)
        v2 = instantiate(t2, t2.initial_vector(), EMPTY_SCENE)
        for a, b in zip(v1, v2):
            assert a.args == b.args


MALFORMED = [
    "plan {",
    "params { x = ; } plan { }",
    "plan { draw_line(1, 2, 3); }",
    "plan { draw_line(1 2, 3, 4); }",
    'plan { draw_line("a", 1, 2, 3); }',
    "params { pi = 1.0; } plan { }",
    "plan { draw_line(1, , 2, 3); }",
    "plan { pick(block); }",
    "params { v = [1, 2]; } plan { draw_line(v, 0, 0, 0); }",
    "params { v = [1, 2]; } plan { draw_line(v[5], 0, 0, 0); }",
    "plan { draw_line(1, 2, 3, 4) }",
    'plan { pick("block); }',
]


@pytest.mark.parametrize("text", MALFORMED)
def test_malformed_inputs_raise_positioned_errors(text):
    with pytest.raises(PlanSyntaxError) as exc:
        parse(text)
    assert exc.value.line >= 1
    assert exc.value.column >= 1
    assert f"line {exc.value.line}" in str(exc.value)


def test_deep_nesting_is_rejected_cleanly():
    text = "plan { draw_line(" + "(" * 260 + "1" + ")" * 260 + ", 0, 0, 0); }"
    with pytest.raises(PlanSyntaxError):
        parse(text)


FUZZ_TOKENS = [
    "params", "plan", "{", "}", "(", ")", "[", "]", ";", ",", "=",
    "+", "-", "*", "/", ".", "draw_line", "push_motion", "pick", "frame",
    "sin", "cos", "sqrt", "min", "max", "pi", "x", "offs", "size",
    "x_pos", "0.5", "2", "1e3", '"a"', '"block_red"', "#c\n", "\n", " ",
]


def test_fuzzing_never_crashes_the_parser():
    rng = np.random.default_rng(20240817)
    for _ in range(10_000):
        n = int(rng.integers(0, 40))
        picks = rng.integers(0, len(FUZZ_TOKENS), size=n)
        text = " ".join(FUZZ_TOKENS[i] for i in picks)
        try:
            parse(text)
        except MopsError:
            pass                    # positioned or typed rejection is fine
