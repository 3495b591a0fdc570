"""Interlinear glossed text (IGT) corpora.

Corpora are read from the shared-task block format: examples are separated
by blank lines and each line starts with a marker::

    \\t nuhu' tih-'eeneti-3i' heneenei3oobei-3i'
    \\m (optional morpheme-segmented transcription)
    \\g this when.PAST-speak-3PL IC.tell.the.truth-3PL
    \\l When they speak, they tell the truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

MARKERS = {
    "\\t": "transcription",
    "\\m": "segmentation",
    "\\g": "glosses",
    "\\l": "translation",
}
REQUIRED = ("\\t", "\\g")
SPLITS = ("train", "dev", "test")

MORPHEME_SEPARATORS = "-"


class EmptyCorpus(ValueError):
    pass


class MalformedBlock(ValueError):
    """Raised when an IGT block cannot be parsed."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass(frozen=True)
class IgtExample:
    transcription: str
    glosses: str
    segmentation: Optional[str] = None
    translation: Optional[str] = None
    id: str = ""

    def __post_init__(self):
        if not self.transcription.strip():
            raise ValueError("transcription must be non-empty")
        if not self.glosses.strip():
            raise ValueError("glosses must be non-empty")

    @property
    def is_well_formed(self) -> bool:
        """True when the gloss line has one gloss word per transcription word."""
        return len(tokenize_words(self.glosses)) == len(tokenize_words(self.transcription))


@dataclass(frozen=True)
class Corpus:
    examples: tuple[IgtExample, ...]
    language: str = ""
    metalang: str = ""
    split: str = "train"

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        ids = [ex.id for ex in self.examples]
        if len(set(ids)) != len(ids):
            raise ValueError("example ids must be unique")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[IgtExample]:
        return iter(self.examples)

    def __getitem__(self, index):
        return self.examples[index]

    @property
    def transcriptions(self) -> list[str]:
        return [ex.transcription for ex in self.examples]

    def by_id(self) -> dict[str, IgtExample]:
        return {ex.id: ex for ex in self.examples}


@dataclass(frozen=True)
class GlossList:
    entries: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        cleaned = tuple(sorted(set(self.entries)))
        for entry in cleaned:
            if not is_functional_gloss(entry):
                raise ValueError(f"{entry!r} is not a functional gloss")
        object.__setattr__(self, "entries", cleaned)
        object.__setattr__(self, "_lookup", frozenset(cleaned))

    def __contains__(self, gloss) -> bool:
        return gloss in self._lookup

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_text(self) -> str:
        return ", ".join(self.entries)


def _blocks(lines: Sequence[str]) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for number, line in enumerate(lines, start=1):
        if line.strip():
            block.append((number, line))
        elif block:
            yield block
            block = []
    if block:
        yield block


def _parse_block(block: list[tuple[int, str]], index: int) -> IgtExample:
    fields: dict[str, str] = {}
    for number, line in block:
        marker = line[:2]
        if marker not in MARKERS or (len(line) > 2 and not line[2].isspace()):
            raise MalformedBlock(number, f"unknown marker in {line[:12]!r}")
        if marker in fields:
            raise MalformedBlock(number, f"duplicate marker {marker}")
        fields[marker] = line[3:].strip() if len(line) > 2 else ""
    first = block[0][0]
    for marker in REQUIRED:
        if not fields.get(marker):
            raise MalformedBlock(first, f"block lacks a non-empty {marker} line")
    return IgtExample(
        transcription=fields["\\t"],
        segmentation=fields.get("\\m") or None,
        glosses=fields["\\g"],
        translation=fields.get("\\l") or None,
        id=str(index),
    )


def parse_corpus(text: str, language: str = "", metalang: str = "", split: str = "train") -> Corpus:
    """Parse block-formatted IGT text into a :class:`Corpus`.

    Raises :class:`MalformedBlock` for blocks without a transcription or
    gloss line, and for lines carrying an unknown marker.
    """
    lines = text.splitlines()
    examples = [_parse_block(block, i) for i, block in enumerate(_blocks(lines))]
    return Corpus(examples, language=language, metalang=metalang, split=split)


def read_corpus(path, language: str = "", metalang: str = "", split: str = "train") -> Corpus:
    text = Path(path).read_text(encoding="utf-8")
    return parse_corpus(text, language=language, metalang=metalang, split=split)


def serialize_corpus(corpus: Iterable[IgtExample]) -> str:
    blocks = []
    for ex in corpus:
        lines = [f"\\t {ex.transcription}"]
        if ex.segmentation is not None:
            lines.append(f"\\m {ex.segmentation}")
        lines.append(f"\\g {ex.glosses}")
        if ex.translation is not None:
            lines.append(f"\\l {ex.translation}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def tokenize_words(line: str) -> list[str]:
    return line.split()


def split_word_glosses(word_gloss: str, separators: str = MORPHEME_SEPARATORS) -> list[str]:
    """Split one word's gloss into morpheme glosses.

    Only ``-`` separates morphemes by default; clitic ``=`` and the ``.`` of
    multi-word glosses stay inside a label. Pass ``separators="-="`` to also
    split clitics.
    """
    parts = [word_gloss]
    for sep in separators:
        parts = [piece for part in parts for piece in part.split(sep)]
    return parts


def line_morpheme_glosses(gloss_line: str, separators: str = MORPHEME_SEPARATORS) -> list[list[str]]:
    return [split_word_glosses(word, separators) for word in tokenize_words(gloss_line)]


def is_functional_gloss(gloss: str) -> bool:
    has_letter = False
    for char in gloss:
        if char.islower():
            return False
        if char.isalpha():
            has_letter = True
    return has_letter


def extract_gloss_list(train: Iterable[IgtExample], separators: str = MORPHEME_SEPARATORS) -> GlossList:
    """Collect every functional morpheme gloss seen in the training gloss lines."""
    found = set()
    for ex in train:
        for word in line_morpheme_glosses(ex.glosses, separators):
            found.update(g for g in word if is_functional_gloss(g))
    return GlossList(tuple(found))
