import copy
import json

import pytest

from studentsim.catalog import default_catalog
from studentsim.errors import ProfileValidationError
from studentsim.profiles import (
    StudentProfile,
    profiles_to_jsonl,
    render_profile,
    sample_profile,
    validate_profile,
)


def test_sampling_is_deterministic():
    a = sample_profile(42)
    b = sample_profile(42)
    assert a == b
    assert a.id.startswith("sp-")


def test_distinct_seeds_give_valid_distinct_profiles():
    profiles = [sample_profile(seed) for seed in range(559)]
    assert len(profiles) == 559
    for p in profiles:
        assert not validate_profile(p)
    assert len({p.id for p in profiles}) == 559


def test_subscale_gap_constraint_holds_across_many_seeds():
    # Constructive sampler must keep every pairwise in-subscale difference <= 1,
    # which for a triple is exactly max - min <= 1.
    for seed in range(1000):
        p = sample_profile(seed)
        for sub in p.learning_traits:
            assert max(sub.values) - min(sub.values) <= 1, (seed, sub)


def test_validate_accepts_gap_of_one():
    p = sample_profile(7)
    p.learning_traits[0].values = [4, 5, 4]
    assert not validate_profile(p)


def test_validate_rejects_gap_of_two():
    p = sample_profile(7)
    p.learning_traits[0].values = [2, 4, 3]
    violations = validate_profile(p)
    assert len(violations.entries) == 1
    assert violations.entries[0].rule == "intra-subscale-gap"
    assert violations.entries[0].path == "learning_traits." + p.learning_traits[0].subscale


def test_validate_rejects_underage():
    p = sample_profile(7)
    p.age = 16
    violations = validate_profile(p)
    assert [v.rule for v in violations.entries] == ["age-range"]


def test_validate_lists_every_violation():
    p = sample_profile(7)
    p.age = 99
    p.mbti = "ABCD"
    p.learning_traits[2].values = [6, 4, 4]
    rules = {v.rule for v in validate_profile(p).entries}
    assert rules == {"age-range", "enum", "intra-subscale-gap", "likert-range"}


def test_render_contains_every_field():
    p = sample_profile(11)
    text = render_profile(p).text
    assert p.mbti in text
    assert f"Age: {p.age}" in text
    assert p.major in text
    assert p.standing in text
    for sub in p.learning_traits:
        for value in sub.values:
            assert f"-> {value}" in text
    for entry in p.big_five:
        assert entry.description in text
    assert p.motivational_notes in text
    assert p.id not in text  # id is derived from the text, so it cannot appear in it


def test_render_is_byte_deterministic():
    p = sample_profile(13)
    assert render_profile(p).text == render_profile(p).text


def test_render_changes_only_the_age_line():
    p = sample_profile(17)
    q = copy.deepcopy(p)
    q.age = p.age + 1 if p.age < 28 else p.age - 1
    a = render_profile(p).text.splitlines()
    b = render_profile(q).text.splitlines()
    diffs = [(x, y) for x, y in zip(a, b) if x != y]
    assert len(a) == len(b)
    assert len(diffs) == 1
    assert diffs[0][0].startswith("- Age:")


def test_render_rejects_invalid_profile():
    p = sample_profile(19)
    p.age = 5
    with pytest.raises(ProfileValidationError):
        render_profile(p)


def test_render_unknown_version_rejected():
    with pytest.raises(ValueError):
        render_profile(sample_profile(3), version="v999")


def test_profile_id_is_content_hash_of_rendering():
    import hashlib

    p = sample_profile(23)
    digest = hashlib.sha256(render_profile(p).text.encode()).hexdigest()
    assert p.id == "sp-" + digest[:16]


def test_big_five_order_is_fixed():
    p = sample_profile(29)
    assert [e.trait for e in p.big_five] == [
        "openness",
        "conscientiousness",
        "extraversion",
        "agreeableness",
        "neuroticism",
    ]


def test_dict_roundtrip():
    p = sample_profile(31)
    assert StudentProfile.from_dict(p.to_dict()) == p


def test_jsonl_lines_parse_and_roundtrip():
    profiles = [sample_profile(s) for s in range(5)]
    lines = profiles_to_jsonl(profiles).splitlines()
    assert len(lines) == 5
    restored = [StudentProfile.from_dict(json.loads(line)) for line in lines]
    assert restored == profiles


def test_custom_catalog_is_respected():
    cat = default_catalog()
    cat.majors = ["Astronomy"]
    cat.age_range = (20, 20)
    for seed in range(10):
        p = sample_profile(seed, cat)
        assert p.major == "Astronomy"
        assert p.age == 20
