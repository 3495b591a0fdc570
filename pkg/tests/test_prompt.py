import re

import pytest
from hypothesis import given
from hypothesis import strategies as st
from test_corpus import GITKSAN_GLOSSLIST

from glossrag.corpus import GlossList, IgtExample
from glossrag.prompt import (
    MissingGlossList,
    PromptConfig,
    format_example,
    render_prompt,
    render_system,
    render_user,
)
from glossrag.retrieval import RankedSelection

GIT = PromptConfig("Gitksan", "English")
TARGET = IgtExample("Ii hahla'lsdi'y", "CCNJ work-1SG.II", translation="And I worked.", id="t")
SHOTS = [
    IgtExample("Ap sil'in", "VER hunt", translation="He really hunted.", id="0"),
    IgtExample("needii hasak'y", "NEG=FOC want-1SG.II", translation="I don't want it.", id="1"),
    IgtExample("sdins", "stand-3.II", id="2"),
]
PLACEHOLDER = re.compile(r"\$\{?[A-Za-z_]")


def test_system_substitutes_language():
    text = render_system(GIT)
    assert "specializing in Gitksan" in text
    assert "into English" in text
    assert not PLACEHOLDER.search(text)


def test_system_with_glosslist():
    text = render_system(PromptConfig("Gitksan", "English", include_glosslist=True), GlossList(GITKSAN_GLOSSLIST))
    assert "ANTIP, AX, CAUS1" in text
    assert text.rstrip().endswith("[PROSP")


def test_glosslist_required():
    with pytest.raises(MissingGlossList):
        render_system(PromptConfig("Gitksan", "English", include_glosslist=True))


def test_system_without_translation():
    text = render_system(PromptConfig("Gitksan", "English", include_translation=False))
    assert "Translation:" not in text
    assert "specializing in Gitksan" in text


def test_deterministic():
    a = render_prompt(SHOTS, TARGET, GIT)
    assert render_prompt(SHOTS, TARGET, GIT) == a


def test_user_layout():
    user = render_user(SHOTS[:2], TARGET, GIT)
    assert user == (
        "Here are some complete glossed examples:\n"
        "Transcription: Ap sil'in\nTranslation: He really hunted.\nGlosses: VER hunt\n\n"
        "Transcription: needii hasak'y\nTranslation: I don't want it.\nGlosses: NEG=FOC want-1SG.II\n\n"
        "Please gloss the following example in English.\n\n"
        "Transcription: Ii hahla'lsdi'y\nTranslation: And I worked."
    )


def test_zero_shot():
    user = render_user([], TARGET, GIT)
    assert user.startswith("Please gloss the following example")
    assert "Glosses:" not in user


def test_translation_omitted_everywhere():
    config = PromptConfig("Gitksan", "English", include_translation=False)
    prompt = render_prompt(SHOTS, TARGET, config)
    assert "Translation:" not in prompt.system + prompt.user


def test_target_without_translation_has_no_empty_line():
    user = render_user(SHOTS[:1], IgtExample("sdins", "stand-3.II"), GIT)
    assert user.endswith("Transcription: sdins")


def test_one_example_one_gloss_line():
    user = render_user(SHOTS[:1], TARGET, GIT)
    fewshot = user.split("Please gloss")[0]
    assert fewshot.count("Glosses:") == 1
    assert user.count("Glosses:") == 1


def test_accepts_ranked_selection():
    sel = RankedSelection(SHOTS[:2], [1.0, 0.5])
    assert render_user(sel, TARGET, GIT) == render_user(SHOTS[:2], TARGET, GIT)


def test_messages():
    msgs = render_prompt(SHOTS, TARGET, GIT).messages()
    assert [m["role"] for m in msgs] == ["system", "user"]


def test_template_override_files(tmp_path):
    sys_path = tmp_path / "system.txt"
    user_path = tmp_path / "user.txt"
    sys_path.write_text("Gloss $language into $metalang.", encoding="utf-8")
    user_path.write_text("$fewshot_examples\n\nNow: $transcription\n($translation)", encoding="utf-8")
    config = PromptConfig.with_template_files("Uspanteko", "Spanish", sys_path, user_path)
    prompt = render_prompt(SHOTS[:1], TARGET, config)
    assert prompt.system == "Gloss Uspanteko into Spanish."
    assert prompt.user.endswith("Now: Ii hahla'lsdi'y\n(And I worked.)")


def test_empty_language_rejected():
    with pytest.raises(ValueError):
        PromptConfig(" ", "English")


# -- properties ---------------------------------------------------------------

field = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=20
).map(lambda s: " ".join(s.split())).filter(bool)
examples = st.builds(IgtExample, transcription=field, glosses=field, translation=st.none() | field)


@given(st.lists(examples, max_size=5), examples, st.booleans())
def test_no_placeholders_and_round_trip(shots, target, with_translation):
    config = PromptConfig("Lezgi", "English", include_translation=with_translation)
    user = render_user(shots, target, config)
    # user content may contain "$"; only check for template tokens when the inputs have none
    if not any("$" in ex.transcription + ex.glosses + (ex.translation or "") for ex in shots + [target]):
        assert not PLACEHOLDER.search(user)
    for ex in shots:
        assert format_example(ex, with_translation) in user
        assert f"Transcription: {ex.transcription}\n" in user


@given(st.lists(examples, max_size=6), examples)
def test_length_monotone_in_shots(shots, target):
    lengths = [len(render_user(shots[:k], target, GIT)) for k in range(len(shots) + 1)]
    assert lengths == sorted(lengths)
