"""System and user prompts for in-context glossing."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from string import Template
from typing import Optional, Sequence

from .corpus import GlossList, IgtExample

SYSTEM_TEMPLATE = """\
You are an expert documentary linguist, specializing in $language. You are working on a documentation project for $language text, where you are creating annotated text corpora using the interlinear glossed text (IGT) and following the Leipzig glossing conventions.

Specifically, you will be provided with a line of text in $language as well as a translation of the text into $metalang, in the following format.

Transcription: some text in $language
Translation: translation of the transcription line in $metalang

You are to output the gloss line of IGT. You should gloss stem/lexical morphemes with their translation in $metalang, and gloss gram/functional morphemes with a label indicating their function. Please output the gloss line in the following format:

Glosses: the gloss line for the transcribed text

Glosses should use all caps lettering for functional morphemes and standard lettering for stem translations. Glosses for morphemes in a word should be separated by dashes, and words should be separated by spaces."""

SYSTEM_TEMPLATE_NO_TRANSLATION = """\
You are an expert documentary linguist, specializing in $language. You are working on a documentation project for $language text, where you are creating annotated text corpora using the interlinear glossed text (IGT) and following the Leipzig glossing conventions.

Specifically, you will be provided with a line of text in $language, in the following format.

Transcription: some text in $language

You are to output the gloss line of IGT. You should gloss stem/lexical morphemes with their translation in $metalang, and gloss gram/functional morphemes with a label indicating their function. Please output the gloss line in the following format:

Glosses: the gloss line for the transcribed text

Glosses should use all caps lettering for functional morphemes and standard lettering for stem translations. Glosses for morphemes in a word should be separated by dashes, and words should be separated by spaces."""

USER_TEMPLATE = """\
Here are some complete glossed examples:
$fewshot_examples

Please gloss the following example in $metalang.

Transcription: $transcription
Translation: $translation"""

GLOSSLIST_INSTRUCTION = (
    "For functional morphemes, only use glosses from the following list. "
    "Stem morphemes should still be glossed with their translation in $metalang."
)


class MissingGlossList(ValueError):
    pass


@dataclass(frozen=True)
class PromptConfig:
    language: str
    metalang: str
    include_glosslist: bool = False
    include_translation: bool = True
    system_template: Optional[str] = None
    user_template: Optional[str] = None

    def __post_init__(self):
        if not self.language.strip() or not self.metalang.strip():
            raise ValueError("language and metalang must be non-empty")

    @classmethod
    def with_template_files(cls, language: str, metalang: str, system_path=None, user_path=None, **kwargs):
        """Config whose templates are read from plain-text override files."""
        read = lambda p: Path(p).read_text(encoding="utf-8") if p else None  # noqa: E731
        return cls(language, metalang, system_template=read(system_path), user_template=read(user_path), **kwargs)


@dataclass(frozen=True)
class RenderedPrompt:
    system: str
    user: str

    def messages(self) -> list[dict]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user}]


def _drop_lines_with(template: str, placeholder: str) -> str:
    return "\n".join(line for line in template.split("\n") if placeholder not in line)


def _drop_fewshot_section(template: str) -> str:
    # everything up to the few-shot placeholder line, plus the blank lines after it
    lines = template.split("\n")
    for i, line in enumerate(lines):
        if "$fewshot_examples" in line:
            rest = lines[i + 1:]
            while rest and not rest[0].strip():
                rest = rest[1:]
            return "\n".join(rest)
    return template


def render_system(config: PromptConfig, glosslist: Optional[GlossList] = None) -> str:
    if config.system_template is not None:
        template = config.system_template
    elif config.include_translation:
        template = SYSTEM_TEMPLATE
    else:
        template = SYSTEM_TEMPLATE_NO_TRANSLATION
    text = Template(template).substitute(language=config.language, metalang=config.metalang)
    if config.include_glosslist:
        if glosslist is None:
            raise MissingGlossList("include_glosslist is set but no gloss list was given")
        instruction = Template(GLOSSLIST_INSTRUCTION).substitute(metalang=config.metalang)
        text += f"\n\n{instruction}\n\n{glosslist.to_text()}"
    return text


def format_example(example: IgtExample, include_translation: bool = True, with_glosses: bool = True) -> str:
    lines = [f"Transcription: {example.transcription}"]
    if include_translation and example.translation is not None:
        lines.append(f"Translation: {example.translation}")
    if with_glosses:
        lines.append(f"Glosses: {example.glosses}")
    return "\n".join(lines)


def render_user(examples: Sequence[IgtExample], target: IgtExample, config: PromptConfig) -> str:
    """Main prompt: few-shot blocks (best first) followed by the target sentence.

    ``examples`` may be a :class:`RankedSelection` or any sequence of
    examples; with none the few-shot section is left out.
    """
    examples = list(getattr(examples, "examples", examples))
    template = config.user_template if config.user_template is not None else USER_TEMPLATE
    if not examples:
        template = _drop_fewshot_section(template)
    if not config.include_translation or target.translation is None:
        template = _drop_lines_with(template, "$translation")
    fewshot = "\n\n".join(format_example(ex, config.include_translation) for ex in examples)
    return Template(template).substitute(
        language=config.language,
        metalang=config.metalang,
        fewshot_examples=fewshot,
        transcription=target.transcription,
        translation=target.translation or "",
    )


def render_prompt(
    examples: Sequence[IgtExample], target: IgtExample, config: PromptConfig, glosslist: Optional[GlossList] = None
) -> RenderedPrompt:
    return RenderedPrompt(render_system(config, glosslist), render_user(examples, target, config))
