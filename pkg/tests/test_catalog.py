import pytest

from studentsim.catalog import (
    AttributeCatalog,
    default_catalog,
    load_catalog,
    save_catalog,
    validate_catalog,
)
from studentsim.errors import ConfigError


def test_default_catalog_counts():
    cat = default_catalog()
    assert cat.age_range == (17, 28)
    assert len(cat.majors) == 62
    assert len(cat.mbti_types) == 16
    assert len(cat.learning_trait_items) == 4
    assert all(len(g["items"]) == 3 for g in cat.learning_trait_items)
    assert len(cat.challenge_items) == 7
    assert len(cat.standings) == 7


def test_default_catalog_is_valid():
    validate_catalog(default_catalog())


def test_mbti_codes_are_wellformed():
    for code in default_catalog().mbti_types:
        assert len(code) == 4
        assert code[0] in "EI" and code[1] in "SN" and code[2] in "TF" and code[3] in "JP"


def test_validate_catalog_reports_all_problems():
    cat = default_catalog()
    cat.mbti_types = cat.mbti_types[:15]
    cat.challenge_items = cat.challenge_items[:6]
    with pytest.raises(ConfigError) as exc:
        validate_catalog(cat)
    # both defects named in one error, not just the first one hit
    assert "mbti" in str(exc.value)
    assert "challenge" in str(exc.value)


def test_catalog_roundtrip(tmp_path):
    path = tmp_path / "catalog.json"
    save_catalog(default_catalog(), path)
    loaded = load_catalog(path)
    assert loaded == default_catalog()
    assert isinstance(loaded, AttributeCatalog)
    assert loaded.age_range == (17, 28)  # tuple restored, not list


def test_load_catalog_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_catalog(tmp_path / "nope.json")


def test_load_catalog_invalid_json_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_catalog(path)
