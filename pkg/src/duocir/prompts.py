"""Four-step reasoning prompt that elicits the two target captions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import UnknownTemplate

N_STEPS = 4

OUTPUT_KEYS = ("modification_focused", "integration_focused")


@dataclass(frozen=True)
class ComposedQuery:
    """Reference image plus the textual edit request."""

    query_id: str
    reference_image: str
    modification_text: str

    def __post_init__(self):
        if not self.query_id:
            raise ValueError("query_id must be non-empty")
        if not self.modification_text or not self.modification_text.strip():
            raise ValueError(f"{self.query_id}: modification_text must be non-empty")


@dataclass(frozen=True)
class PromptTemplate:
    """Named template: preamble, the four reasoning steps, output contract."""

    template_id: str
    system_preamble: str
    step_instructions: tuple[str, str, str, str]
    output_format_instruction: str

    def __post_init__(self):
        steps = tuple(self.step_instructions)
        if len(steps) != N_STEPS or any(not s.strip() for s in steps):
            raise ValueError(
                f"template {self.template_id!r} needs exactly {N_STEPS} non-empty steps"
            )
        object.__setattr__(self, "step_instructions", steps)


@dataclass(frozen=True)
class ReasoningPrompt:
    """A rendered prompt; the hash keys caption caching."""

    system_preamble: str
    step_instructions: tuple[str, str, str, str]
    output_format_instruction: str
    rendered: str
    prompt_hash: str = field(init=False)

    def __post_init__(self):
        digest = hashlib.sha256(self.rendered.encode("utf-8")).hexdigest()
        object.__setattr__(self, "prompt_hash", digest)


_DEFAULT = PromptTemplate(
    template_id="default",
    system_preamble=(
        "You are helping retrieve a target image from a gallery. You are given a"
        " reference image and an edit request describing how the target differs"
        " from it. Reason through the numbered steps in order, writing out your"
        " thinking, then finish with the required answer object."
    ),
    step_instructions=(
        "Describe the reference image: the main objects and their attributes,"
        " the background, the overall composition, and the style.",
        "Read the edit request and identify which visual elements it changes"
        " and what each change is.",
        "Work out how those changes affect the rest of the scene, and which"
        " elements of the reference stay the same.",
        "Describe the anticipated target image in two ways: once covering only"
        " the requested changes, and once combining the changes with the"
        " preserved visual context.",
    ),
    output_format_instruction=(
        "End your reply with a JSON object on its own line containing exactly"
        ' two string keys: "modification_focused" (a caption covering only the'
        ' requested changes) and "integration_focused" (a caption combining the'
        " changes with the preserved background, style, and context)."
    ),
)

_REGISTRY: dict[str, PromptTemplate] = {_DEFAULT.template_id: _DEFAULT}


def register_template(template: PromptTemplate) -> None:
    _REGISTRY[template.template_id] = template


def get_template(template_id: str) -> PromptTemplate:
    if template_id not in _REGISTRY:
        raise UnknownTemplate(template_id)
    return _REGISTRY[template_id]


def build_prompt(query: ComposedQuery, template_id: str = "default") -> ReasoningPrompt:
    """Render the template around the query's edit request.

    The edit request is embedded verbatim exactly once; identical inputs
    render to identical strings (and therefore identical prompt hashes).
    """
    t = get_template(template_id)
    lines = [t.system_preamble, "", f'Edit request: "{query.modification_text}"', ""]
    for n, step in enumerate(t.step_instructions, start=1):
        lines.append(f"Step {n}: {step}")
    lines += ["", t.output_format_instruction]
    return ReasoningPrompt(
        system_preamble=t.system_preamble,
        step_instructions=t.step_instructions,
        output_format_instruction=t.output_format_instruction,
        rendered="\n".join(lines),
    )
