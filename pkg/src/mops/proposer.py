"""Plan proposal: prompt construction, chat backends, feedback reports.

Two backends share one interface. The llm backend talks to an
OpenAI-compatible chat-completions endpoint; the scripted backend
replays fixture templates from disk so the whole pipeline runs with no
network access.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources

from . import dsl
from .errors import (
    ConfigError,
    EmptyRecord,
    FixturesExhausted,
    PlanSyntaxError,
    ServiceUnavailable,
    UnknownAction,
    UnparseableResponse,
)

DEFAULT_API_BASE = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4o-mini"

_DRAW_STATE = """\
The whiteboard is bounded in the x-direction between 0 and 0.64, and in
the y-direction between 0 and 0.48 (meters).
The whiteboard's world position is at (0.0, 0.4, 0.96) and it is tilted
by 40 degrees about its horizontal axis.
A camera positioned at (0.0, 0.45, 1.5) looks straight down; drawings
are judged in its 640x480 image.
Plan coordinates are whiteboard coordinates: x runs horizontally, y runs
up the board, origin at the lower-left corner."""

_PUSH_STATE = """\
The table top spans x in [-0.5, 0.5] and y in [-0.5, 0.5] (meters).
A point pusher moves in this plane; blocks slide when pushed and stick
to the pusher face (quasi-static, no rotation).
Pushing on a block face moves the block along that face's normal, so use
axis-aligned pushes for axis-aligned blocks.
Between two push motions the pusher is lifted off the table, so
consecutive motions need not connect.
Plan coordinates are table coordinates."""

_DRAW_SKILLS = """\
draw_line(x0, y0, x1, y1)   [4 arguments]
  Draw a straight stroke on the whiteboard from (x0, y0) to (x1, y1),
  in whiteboard coordinates (meters)."""

_PUSH_SKILLS = """\
push_motion(x0, y0, x1, y1)   [4 arguments]
  Move the pusher in a straight line from (x0, y0) to (x1, y1) at table
  level, pushing any block it contacts."""

# In-context examples. Both are valid templates in the plan language and
# are parsed by the test suite to keep them honest.

DRAW_EXAMPLE_SQUARE = """\
params {
  pos = [0.32, 0.24];
  size = 0.2;
  offs = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
}
plan {
  # corners counter-clockwise from lower-left, one 2D offset per corner
  draw_line(pos[0] - size / 2 + offs[0], pos[1] - size / 2 + offs[1],
            pos[0] + size / 2 + offs[2], pos[1] - size / 2 + offs[3]);
  draw_line(pos[0] + size / 2 + offs[2], pos[1] - size / 2 + offs[3],
            pos[0] + size / 2 + offs[4], pos[1] + size / 2 + offs[5]);
  draw_line(pos[0] + size / 2 + offs[4], pos[1] + size / 2 + offs[5],
            pos[0] - size / 2 + offs[6], pos[1] + size / 2 + offs[7]);
  draw_line(pos[0] - size / 2 + offs[6], pos[1] + size / 2 + offs[7],
            pos[0] - size / 2 + offs[0], pos[1] - size / 2 + offs[1]);
}"""

DRAW_EXAMPLE_TRIANGLE = """\
params {
  center = [0.32, 0.24];
  radius = 0.15;
  offs = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
}
plan {
  draw_line(center[0] + radius * cos(pi / 2) + offs[0],
            center[1] + radius * sin(pi / 2) + offs[1],
            center[0] + radius * cos(pi / 2 + 2 * pi / 3) + offs[2],
            center[1] + radius * sin(pi / 2 + 2 * pi / 3) + offs[3]);
  draw_line(center[0] + radius * cos(pi / 2 + 2 * pi / 3) + offs[2],
            center[1] + radius * sin(pi / 2 + 2 * pi / 3) + offs[3],
            center[0] + radius * cos(pi / 2 + 4 * pi / 3) + offs[4],
            center[1] + radius * sin(pi / 2 + 4 * pi / 3) + offs[5]);
  draw_line(center[0] + radius * cos(pi / 2 + 4 * pi / 3) + offs[4],
            center[1] + radius * sin(pi / 2 + 4 * pi / 3) + offs[5],
            center[0] + radius * cos(pi / 2) + offs[0],
            center[1] + radius * sin(pi / 2) + offs[1]);
}"""

PUSH_EXAMPLE_SINGLE = """\
params {
  goal = [0.3, 0.2];
  ends = [0.0, 0.0];
}
plan {
  # block half size is 0.03; push x first, then y, approaching from
  # outside the block each time
  push_motion(frame("block_red").x_pos - 0.1,
              frame("block_red").y_pos,
              goal[0] - 0.03 + ends[0],
              frame("block_red").y_pos);
  push_motion(goal[0] + ends[0],
              frame("block_red").y_pos - 0.1,
              goal[0] + ends[0],
              goal[1] - 0.03 + ends[1]);
}"""

PUSH_EXAMPLE_PAIR = """\
params {
  meet_x = 0.1;
  ends = [0.0, 0.0];
}
plan {
  # slide two blocks along x until they sit side by side at meet_x
  push_motion(frame("block_red").x_pos - 0.1,
              frame("block_red").y_pos,
              meet_x - 0.09 + ends[0],
              frame("block_red").y_pos);
  push_motion(frame("block_green").x_pos + 0.1,
              frame("block_green").y_pos,
              meet_x + 0.09 + ends[1],
              frame("block_green").y_pos);
}"""

_OUTPUT_RULES = """\
Answer with exactly one plan template inside a fenced code block.
Declare every tunable quantity in the params block with an initial
value; these parameters are optimized numerically afterwards, so expose
the quantities worth tuning.
Always add per-point 2D offsets initialized to 0.0 so the optimizer can
compensate for surface and projection distortion.
Use only the skills listed above, with exactly the stated number of
arguments, and only the grammar below. Do not write any other code.

Grammar:
"""


def _domain_sections(domain: str) -> tuple[str, str, tuple[str, str]]:
    if domain == "draw":
        return _DRAW_STATE, _DRAW_SKILLS, (DRAW_EXAMPLE_SQUARE, DRAW_EXAMPLE_TRIANGLE)
    if domain == "push":
        return _PUSH_STATE, _PUSH_SKILLS, (PUSH_EXAMPLE_SINGLE, PUSH_EXAMPLE_PAIR)
    raise ConfigError(f"unknown domain {domain!r}")


@dataclass(frozen=True)
class FeedbackReport:
    """What the proposer is told after an optimization round."""

    best_cost: float
    final_state_summary: str
    target_cost: float

    def __post_init__(self):
        if not (self.best_cost == self.best_cost and abs(self.best_cost) != float("inf")):
            raise ConfigError("feedback best_cost must be finite")
        if self.target_cost < 0:
            raise ConfigError("feedback target_cost must be >= 0")

    def render(self) -> str:
        return (
            f"Best cost found: {self.best_cost:.6g}\n"
            f"Final state after running the best trajectory:\n"
            f"{self.final_state_summary}\n"
            f"Target cost to reach: {self.target_cost:.6g}\n"
            "The plan structure itself may be the problem. Revise the plan "
            "template (add, remove or restructure actions and parameters) "
            "and answer with the full template again."
        )


def build_prompt(task, scene, history=()) -> list[dict]:
    """Ordered chat messages for one proposal turn.

    `task` needs `.name`, `.domain` and `.goal`; `history` holds
    (template_text, FeedbackReport | str) pairs from earlier turns.
    """
    state_text, skills_text, examples = _domain_sections(task.domain)
    scene_text = scene.to_json() if scene.frames else "(no movable frames)"
    system = (
        "You are a robot arm operating in an environment with the "
        "following state:\n\n"
        f"{state_text}\n\n"
        "Frames currently in the scene:\n"
        f"{scene_text}\n\n"
        "You have access to the following skills and no others; follow "
        "the stated argument counts exactly.\n\n"
        f"{skills_text}\n\n"
        f"{_OUTPUT_RULES}{dsl.GRAMMAR}\n"
        "Below are two example tasks with successful solutions.\n\n"
        "# example user message\n"
        "Goal: example task one.\n\n"
        "# example assistant message\n"
        f"```\n{examples[0]}\n```\n\n"
        "# example user message\n"
        "Goal: example task two.\n\n"
        "# example assistant message\n"
        f"```\n{examples[1]}\n```\n"
    )
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": f"Goal: {task.goal}"},
    ]
    for template_text, feedback in history:
        messages.append({"role": "assistant",
                         "content": f"```\n{template_text}\n```"})
        text = feedback.render() if isinstance(feedback, FeedbackReport) else str(feedback)
        messages.append({"role": "user", "content": text})
    return messages


# ---------------------------------------------------------------------------
# Backends


@dataclass
class ScriptedBackend:
    """Replays a fixed sequence of template texts, one per turn."""

    turns: tuple[str, ...]
    cursor: int = 0

    def __post_init__(self):
        self.turns = tuple(self.turns)
        if not self.turns:
            raise ConfigError("scripted backend needs at least one turn")

    def complete(self, messages: list[dict]) -> str:
        if self.cursor >= len(self.turns):
            raise FixturesExhausted(
                f"scripted sequence exhausted after {len(self.turns)} turns")
        text = self.turns[self.cursor]
        self.cursor += 1
        return f"```\n{text}\n```"


def _http_transport(backend: "LlmBackend"):
    import requests

    key = os.environ.get("MOPS_API_KEY", "")
    if not key:
        raise ConfigError("MOPS_API_KEY is not set")
    base = backend.endpoint or os.environ.get("MOPS_API_BASE", DEFAULT_API_BASE)
    url = base.rstrip("/") + "/chat/completions"

    def call(messages: list[dict]) -> str:
        payload = {
            "model": backend.model,
            "temperature": backend.temperature,
            "messages": messages,
        }
        try:
            resp = requests.post(
                url,
                headers={"Authorization": f"Bearer {key}",
                         "Content-Type": "application/json"},
                data=json.dumps(payload),
                timeout=120,
            )
        except requests.RequestException as exc:
            raise ServiceUnavailable(f"chat request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ServiceUnavailable(
                f"chat endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise UnparseableResponse(f"malformed completion payload: {exc}") from exc

    return call


@dataclass
class LlmBackend:
    """OpenAI-compatible chat-completions client.

    `transport` maps a message list to the assistant text; it defaults
    to an HTTPS POST using MOPS_API_KEY / MOPS_API_BASE and is
    injectable for tests.
    """

    model: str = DEFAULT_MODEL
    temperature: float = 0.2
    max_retries: int = 2
    endpoint: str | None = None
    transport: object = None

    def __post_init__(self):
        if self.endpoint is not None and "://" not in self.endpoint:
            raise ConfigError(f"endpoint must be an absolute URL: {self.endpoint!r}")

    def complete(self, messages: list[dict]) -> str:
        call = self.transport if self.transport is not None else _http_transport(self)
        return call(messages)


def _extract_fenced(text: str) -> str | None:
    """First fenced code block, language tag stripped."""
    lines = text.splitlines()
    start = None
    for i, ln in enumerate(lines):
        if ln.lstrip().startswith("```"):
            start = i
            break
    if start is None:
        return None
    body = []
    for ln in lines[start + 1:]:
        if ln.lstrip().startswith("```"):
            return "\n".join(body)
        body.append(ln)
    return None


def propose(backend, messages: list[dict]) -> tuple[dsl.PlanTemplate, str]:
    """One proposal turn: complete, extract, parse; retry on bad output.

    Returns the parsed template and the raw template text. Parse errors
    and missing code fences are sent back to the backend up to
    max_retries extra attempts before UnparseableResponse.
    """
    retries = getattr(backend, "max_retries", 0)
    messages = list(messages)
    last_error = "no response"
    for _ in range(retries + 1):
        raw = backend.complete(messages)
        block = _extract_fenced(raw)
        if block is None:
            last_error = "the response did not contain a fenced code block"
        else:
            try:
                return dsl.parse(block), block
            except (PlanSyntaxError, UnknownAction) as exc:
                last_error = f"the template failed to parse: {exc}"
        messages = messages + [
            {"role": "assistant", "content": raw},
            {"role": "user",
             "content": f"That answer was rejected: {last_error}. "
                        "Answer again with one valid plan template in a "
                        "fenced code block."},
        ]
    raise UnparseableResponse(last_error)


def build_feedback(record, target_cost: float) -> FeedbackReport:
    """FeedbackReport from an evaluation record.

    `record` needs `.costs` (all evaluation costs, possibly non-finite)
    and `.state_summary` (rendered final state of the best rollout).
    """
    costs = [c for c in getattr(record, "costs", []) if c == c and abs(c) != float("inf")]
    if not costs:
        raise EmptyRecord("record has no finite completed evaluation")
    summary = getattr(record, "state_summary", "") or "(no rollout recorded)"
    return FeedbackReport(best_cost=min(costs),
                          final_state_summary=summary,
                          target_cost=float(target_cost))


# ---------------------------------------------------------------------------
# Fixture library


def fixture_turns(task: str, flavor: str) -> tuple[str, ...]:
    """Template texts for one scripted flavor, in turn order."""
    root = resources.files("mops") / "fixtures" / task / flavor
    try:
        names = sorted(
            entry.name for entry in root.iterdir()
            if entry.name.endswith(".mplan"))
    except (FileNotFoundError, NotADirectoryError):
        raise ConfigError(f"no fixtures for task {task!r} flavor {flavor!r}")
    if not names:
        raise ConfigError(f"no fixtures for task {task!r} flavor {flavor!r}")
    return tuple((root / name).read_text() for name in names)


def make_backend(spec: str, task: str):
    """Backend from a config string: 'scripted:<flavor>' or 'llm[:model]'."""
    if spec.startswith("scripted"):
        _, _, flavor = spec.partition(":")
        return ScriptedBackend(fixture_turns(task, flavor or "good"))
    if spec.startswith("llm"):
        _, _, model = spec.partition(":")
        return LlmBackend(model=model or DEFAULT_MODEL)
    raise ConfigError(f"unknown proposer spec {spec!r}")
