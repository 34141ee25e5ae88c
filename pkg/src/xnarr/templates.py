"""Prompt template loading and style-band rendering.

Templates are plain-text files with ``{name}`` placeholders; the style
rubric is a JSON file mapping each dimension to five graded band texts.
Keeping them on disk (version-pinned by fingerprint) lets prompt edits
happen without code changes while snapshot tests stay meaningful.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .preference import DIMENSIONS, PreferenceVector

BAND_EDGES = (0.2, 0.4, 0.6, 0.8)
BAND_MIDPOINTS = (0.1, 0.3, 0.5, 0.7, 0.9)

_TEXT_FILES = (
    "generation_system.txt",
    "generation_user.txt",
    "judge_system.txt",
    "judge_user.txt",
    "persona_judge_system.txt",
    "translator_system.txt",
    "translator_user.txt",
    "tag_grammar.txt",
)
_RUBRIC_FILE = "style_rubric.json"

PACKAGED_TEMPLATE_DIR = Path(__file__).parent / "templates"


def render_template(template: str, **values: str) -> str:
    """Substitute ``{name}`` placeholders literally; unknown braces
    (e.g. JSON examples) are left untouched."""
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def style_band(value: float) -> int:
    """Map a [0,1] style value to one of five rubric bands."""
    for i, edge in enumerate(BAND_EDGES):
        if value < edge:
            return i
    return len(BAND_EDGES)


class TemplateSet:
    """All prompt templates plus the style rubric, loaded from one directory."""

    def __init__(self, directory: str | Path = PACKAGED_TEMPLATE_DIR):
        self.directory = Path(directory)
        self._texts: dict[str, str] = {}
        for name in _TEXT_FILES:
            path = self.directory / name
            if not path.exists():
                raise FileNotFoundError(f"missing template {name} in {self.directory}")
            self._texts[name] = path.read_text(encoding="utf-8")
        rubric_path = self.directory / _RUBRIC_FILE
        if not rubric_path.exists():
            raise FileNotFoundError(f"missing {_RUBRIC_FILE} in {self.directory}")
        self.rubric: dict[str, list[str]] = json.loads(rubric_path.read_text(encoding="utf-8"))
        for dim in DIMENSIONS:
            bands = self.rubric.get(dim)
            if not bands or len(bands) != 5:
                raise ValueError(f"style rubric needs 5 bands for {dim}")

    def text(self, name: str) -> str:
        return self._texts[name]

    @property
    def tag_grammar(self) -> str:
        return self._texts["tag_grammar.txt"]

    def band_text(self, dimension: str, value: float) -> str:
        return self.rubric[dimension][style_band(value)]

    def style_instructions(self, preference: PreferenceVector) -> str:
        lines = [
            f"- {dim}: {self.band_text(dim, getattr(preference, dim))}"
            for dim in DIMENSIONS
        ]
        return "\n".join(lines)

    def rubric_anchor_block(self) -> str:
        """0 / 0.5 / 1.0 anchor exemplars per dimension for the judge."""
        lines = []
        for dim in DIMENSIONS:
            bands = self.rubric[dim]
            lines.append(f"{dim}:")
            lines.append(f"  0.0 -> {bands[0]}")
            lines.append(f"  0.5 -> {bands[2]}")
            lines.append(f"  1.0 -> {bands[4]}")
        return "\n".join(lines)

    def fingerprint(self) -> str:
        """Stable hash of every template file, for version pinning."""
        digest = hashlib.sha256()
        for name in sorted((*_TEXT_FILES, _RUBRIC_FILE)):
            digest.update(name.encode("utf-8"))
            digest.update(b"\0")
            digest.update((self.directory / name).read_bytes())
        return digest.hexdigest()
