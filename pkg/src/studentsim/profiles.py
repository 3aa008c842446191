"""Synthetic student profiles: sampling, validation, and text rendering.

Profiles are drawn from the catalog's constrained space. Within each
learning-trait subscale the three 1-5 agreement values may differ pairwise
by at most ``max_item_gap`` (default 1), enforced by construction: the
first item is uniform on [1, 5] and every sibling is drawn uniformly from
the interval that keeps all pairwise gaps within the bound.

Rendering is a pure function of the profile fields (the opaque ``id`` is
excluded so that the id itself can be the content hash of the rendered
text), which makes profile identity stable across runs.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, asdict

from .catalog import BIG_FIVE_TRAITS, AttributeCatalog, default_catalog, validate_catalog
from .errors import ProfileValidationError

MAX_ITEM_GAP = 1
LIKERT_MIN, LIKERT_MAX = 1, 5
RENDERING_VERSION = "v1"

_GOAL_COMMITMENT_NOTES = {
    "high": "Strongly committed to a clear academic goal this semester.",
    "medium": "Somewhat committed to academic goals, though priorities occasionally shift.",
    "low": "Struggles to stay committed to academic goals and often questions their value.",
}
_EMOTIONAL_STATE_NOTES = {
    "high": "Currently feels anxious and under pressure about upcoming coursework.",
    "low": "Currently feels calm and settled about upcoming coursework.",
}


@dataclass
class BigFiveEntry:
    trait: str
    level: str  # "high" | "low"
    description: str


@dataclass
class SubscaleResponse:
    subscale: str
    values: list[int]  # three 1-5 agreement values


@dataclass
class Violation:
    path: str
    rule: str
    message: str


@dataclass
class ViolationList:
    entries: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def add(self, path: str, rule: str, message: str) -> None:
        self.entries.append(Violation(path, rule, message))


@dataclass
class StudentProfile:
    id: str
    gender: str
    age: int
    major: str
    standing: str
    mbti: str
    big_five: list[BigFiveEntry]
    learning_traits: list[SubscaleResponse]
    challenges: list[bool]
    motivational_notes: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = f"student-profile/{RENDERING_VERSION}"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudentProfile":
        return cls(
            id=d["id"],
            gender=d["gender"],
            age=d["age"],
            major=d["major"],
            standing=d["standing"],
            mbti=d["mbti"],
            big_five=[BigFiveEntry(**e) for e in d["big_five"]],
            learning_traits=[SubscaleResponse(**s) for s in d["learning_traits"]],
            challenges=list(d["challenges"]),
            motivational_notes=d["motivational_notes"],
        )


@dataclass
class ProfileText:
    text: str
    rendering_version: str = RENDERING_VERSION


def _motivational_notes(profile_fields: dict) -> str:
    """Template-filled notes derived from the sampled values (no extra randomness)."""
    motivation_values = None
    for sub in profile_fields["learning_traits"]:
        if sub.subscale == "motivation":
            motivation_values = sub.values
            break
    if motivation_values is None:
        motivation_values = profile_fields["learning_traits"][0].values
    mean = sum(motivation_values) / len(motivation_values)
    if mean >= 4:
        goal = _GOAL_COMMITMENT_NOTES["high"]
    elif mean <= 2:
        goal = _GOAL_COMMITMENT_NOTES["low"]
    else:
        goal = _GOAL_COMMITMENT_NOTES["medium"]
    neuroticism = next(e for e in profile_fields["big_five"] if e.trait == "neuroticism")
    emotion = _EMOTIONAL_STATE_NOTES[neuroticism.level]
    return f"{goal} {emotion}"


def _sample_subscale_values(rng: random.Random, max_gap: int) -> list[int]:
    # First value uniform; each next value uniform over the range that keeps
    # every pairwise difference within max_gap (not merely the gap to the
    # first value, which alone would allow siblings to drift 2 apart).
    first = rng.randint(LIKERT_MIN, LIKERT_MAX)
    values = [first]
    for _ in range(2):
        lo = max(LIKERT_MIN, max(values) - max_gap)
        hi = min(LIKERT_MAX, min(values) + max_gap)
        values.append(rng.randint(lo, hi))
    return values


def sample_profile(
    seed: int | str,
    catalog: AttributeCatalog | None = None,
    max_item_gap: int = MAX_ITEM_GAP,
) -> StudentProfile:
    """Draw one valid profile; identical (seed, catalog) yields identical output."""
    catalog = catalog or default_catalog()
    validate_catalog(catalog)
    rng = random.Random(f"student-profile:{seed}")

    fields = {
        "gender": rng.choice(catalog.genders),
        "age": rng.randint(catalog.age_range[0], catalog.age_range[1]),
        "major": rng.choice(catalog.majors),
        "standing": rng.choice(catalog.standings),
        "mbti": rng.choice(catalog.mbti_types),
        "big_five": [
            BigFiveEntry(
                trait=trait,
                level=(level := rng.choice(["high", "low"])),
                description=catalog.big_five_descriptors[trait][level],
            )
            for trait in BIG_FIVE_TRAITS
        ],
        "learning_traits": [
            SubscaleResponse(group["subscale"], _sample_subscale_values(rng, max_item_gap))
            for group in catalog.learning_trait_items
        ],
        "challenges": [rng.random() < 0.5 for _ in catalog.challenge_items],
    }
    fields["motivational_notes"] = _motivational_notes(fields)

    profile = StudentProfile(id="", **fields)
    rendered = render_profile(profile, catalog=catalog, _skip_validation=True)
    profile.id = "sp-" + hashlib.sha256(rendered.text.encode()).hexdigest()[:16]

    violations = validate_profile(profile, catalog, max_item_gap)
    if violations:
        raise ProfileValidationError(violations)
    return profile


def validate_profile(
    profile: StudentProfile,
    catalog: AttributeCatalog | None = None,
    max_item_gap: int = MAX_ITEM_GAP,
) -> ViolationList:
    """List every violated invariant; an empty list means the profile is valid."""
    catalog = catalog or default_catalog()
    out = ViolationList()

    lo, hi = catalog.age_range
    if not (lo <= profile.age <= hi):
        out.add("age", "age-range", f"age {profile.age} outside [{lo}, {hi}]")
    if profile.gender not in catalog.genders:
        out.add("gender", "enum", f"gender {profile.gender!r} not in catalog")
    if profile.major not in catalog.majors:
        out.add("major", "enum", f"major {profile.major!r} not in catalog")
    if profile.standing not in catalog.standings:
        out.add("standing", "enum", f"standing {profile.standing!r} not in catalog")
    if profile.mbti not in catalog.mbti_types:
        out.add("mbti", "enum", f"mbti {profile.mbti!r} not in catalog")

    traits_seen = [e.trait for e in profile.big_five]
    if traits_seen != list(BIG_FIVE_TRAITS):
        out.add("big_five", "trait-order", f"expected traits {list(BIG_FIVE_TRAITS)}, got {traits_seen}")
    for entry in profile.big_five:
        if entry.level not in ("high", "low"):
            out.add(f"big_five.{entry.trait}", "level", f"level {entry.level!r} not high/low")

    expected_subscales = catalog.subscale_names()
    got_subscales = [s.subscale for s in profile.learning_traits]
    if got_subscales != expected_subscales:
        out.add("learning_traits", "subscales", f"expected {expected_subscales}, got {got_subscales}")
    for sub in profile.learning_traits:
        path = f"learning_traits.{sub.subscale}"
        if len(sub.values) != 3:
            out.add(path, "arity", f"expected 3 values, got {len(sub.values)}")
            continue
        for v in sub.values:
            if not (LIKERT_MIN <= v <= LIKERT_MAX):
                out.add(path, "likert-range", f"value {v} outside [{LIKERT_MIN}, {LIKERT_MAX}]")
        if max(sub.values) - min(sub.values) > max_item_gap:
            out.add(
                path,
                "intra-subscale-gap",
                f"values {sub.values} differ by more than {max_item_gap}",
            )

    if len(profile.challenges) != len(catalog.challenge_items):
        out.add(
            "challenges",
            "arity",
            f"expected {len(catalog.challenge_items)} answers, got {len(profile.challenges)}",
        )
    if not profile.motivational_notes:
        out.add("motivational_notes", "non-empty", "motivational notes must be non-empty")
    return out


def render_profile(
    profile: StudentProfile,
    version: str = RENDERING_VERSION,
    catalog: AttributeCatalog | None = None,
    _skip_validation: bool = False,
) -> ProfileText:
    """Render the profile as deterministic sectioned text (id excluded).

    Every substantive field appears verbatim on its own line, so two
    profiles differing in a single field produce texts differing only in
    that field's line.
    """
    if version != RENDERING_VERSION:
        raise ValueError(f"unknown rendering version {version!r}")
    catalog = catalog or default_catalog()
    if not _skip_validation:
        violations = validate_profile(profile, catalog)
        if violations:
            raise ProfileValidationError(violations)

    lines = [
        "# Student Profile",
        "",
        "## Basic Information",
        f"- Gender: {profile.gender}",
        f"- Age: {profile.age}",
        f"- Major: {profile.major}",
        f"- Academic standing: {profile.standing}",
        "",
        "## Personality",
        f"- MBTI type: {profile.mbti}",
    ]
    for entry in profile.big_five:
        lines.append(f"- {entry.trait.capitalize()}: {entry.level} ({entry.description})")
    lines += ["", "## Learning Trait Questionnaire (1=strongly disagree, 5=strongly agree)"]
    for sub, group in zip(profile.learning_traits, catalog.learning_trait_items):
        lines.append(f"### {sub.subscale}")
        for value, item in zip(sub.values, group["items"]):
            lines.append(f"- {item} -> {value}")
    lines += ["", "## Academic Challenges"]
    for answered, item in zip(profile.challenges, catalog.challenge_items):
        lines.append(f"- {item} -> {'Yes' if answered else 'No'}")
    lines += ["", "## Motivation", f"- {profile.motivational_notes}", ""]
    return ProfileText(text="\n".join(lines), rendering_version=version)


def profiles_to_jsonl(profiles: list[StudentProfile]) -> str:
    return "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n" for p in profiles)
