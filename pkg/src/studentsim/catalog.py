"""Attribute catalog: the constrained space student profiles are drawn from.

The default catalog ships in code; a custom catalog can be loaded from a
JSON file with the same field names (see ``load_catalog``). All contents
are plain data so a catalog round-trips through JSON unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError

BIG_FIVE_TRAITS = ("openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism")

DEFAULT_GENDERS = ["female", "male", "non-binary"]

DEFAULT_AGE_RANGE = (17, 28)

# 62 disciplines spanning science, engineering, social science, and arts.
DEFAULT_MAJORS = [
    # science
    "Mathematics", "Applied Mathematics", "Statistics", "Physics", "Astronomy",
    "Chemistry", "Biology", "Biochemistry", "Microbiology", "Ecology",
    "Geology", "Geography", "Oceanography", "Atmospheric Science",
    "Environmental Science", "Neuroscience",
    # engineering
    "Computer Science", "Software Engineering", "Artificial Intelligence",
    "Data Science", "Information Security", "Electrical Engineering",
    "Electronic Engineering", "Mechanical Engineering", "Civil Engineering",
    "Chemical Engineering", "Materials Science and Engineering",
    "Biomedical Engineering", "Aerospace Engineering", "Automation",
    "Energy Engineering", "Industrial Engineering",
    "Telecommunications Engineering", "Architecture", "Urban Planning",
    # social science
    "Economics", "Finance", "Accounting", "Business Administration",
    "Marketing", "International Trade", "Management Science",
    "Public Administration", "Political Science", "International Relations",
    "Law", "Sociology", "Social Work", "Psychology", "Education",
    "Journalism", "Communication Studies", "Anthropology",
    # arts and humanities
    "Chinese Language and Literature", "English Language and Literature",
    "Foreign Languages", "History", "Philosophy", "Linguistics",
    "Fine Arts", "Music", "Design",
]

DEFAULT_STANDINGS = [
    "freshman", "sophomore", "junior", "senior",
    "first-year master", "second-year master", "third-year master",
]

DEFAULT_MBTI_TYPES = [
    "ISTJ", "ISFJ", "INFJ", "INTJ",
    "ISTP", "ISFP", "INFP", "INTP",
    "ESTP", "ESFP", "ENFP", "ENTP",
    "ESTJ", "ESFJ", "ENFJ", "ENTJ",
]

DEFAULT_BIG_FIVE_DESCRIPTORS = {
    "openness": {
        "high": "Curious and imaginative; enjoys exploring new ideas and unfamiliar topics.",
        "low": "Prefers familiar routines and concrete facts over abstract or novel ideas.",
    },
    "conscientiousness": {
        "high": "Organized and self-disciplined; plans coursework carefully and finishes tasks on time.",
        "low": "Often disorganized and easily distracted from learning tasks; tends to procrastinate.",
    },
    "extraversion": {
        "high": "Outgoing and energetic; gains energy from discussions and group activities.",
        "low": "Reserved and quiet; prefers studying alone and finds group settings draining.",
    },
    "agreeableness": {
        "high": "Cooperative and considerate; values harmony and readily helps classmates.",
        "low": "Skeptical and competitive; questions others' views and prioritizes own goals.",
    },
    "neuroticism": {
        "high": "Emotionally sensitive; prone to worry and stress under academic pressure.",
        "low": "Calm and emotionally stable; stays composed when facing setbacks.",
    },
}

# Four subscales of three semantically equivalent 1-5 agreement items each.
DEFAULT_LEARNING_TRAIT_ITEMS = [
    {
        "subscale": "self-regulation",
        "items": [
            "I make a study plan before starting my coursework and stick to it.",
            "I organize my study time in advance and follow the schedule.",
            "I keep track of my learning progress and adjust my methods when needed.",
        ],
    },
    {
        "subscale": "motivation",
        "items": [
            "I feel a strong drive to achieve my academic goals.",
            "Doing well in my courses matters a great deal to me.",
            "I am determined to reach the targets I set for my studies.",
        ],
    },
    {
        "subscale": "engagement",
        "items": [
            "I participate actively in class discussions and activities.",
            "I stay focused and involved during lectures.",
            "I put effort into course activities beyond the minimum required.",
        ],
    },
    {
        "subscale": "information-processing",
        "items": [
            "I connect new material to things I already know when studying.",
            "I summarize ideas in my own words to understand them deeply.",
            "I look for underlying principles rather than memorizing isolated facts.",
        ],
    },
]

# Seven yes/no learning obstacles: cognitive, metacognitive, social, affective.
DEFAULT_CHALLENGE_ITEMS = [
    "Do you have difficulty understanding course materials?",
    "Do you have trouble taking tests or completing assignments?",
    "Do you struggle to choose effective learning strategies on your own?",
    "Do you find it hard to manage your study time?",
    "Do you hesitate to seek help from teachers or classmates?",
    "Do you feel isolated or disconnected from your classmates?",
    "Do you often feel stressed or anxious about your studies?",
]


@dataclass
class AttributeCatalog:
    """Enumerates every attribute a sampled profile may take."""

    genders: list[str] = field(default_factory=lambda: list(DEFAULT_GENDERS))
    age_range: tuple[int, int] = DEFAULT_AGE_RANGE
    majors: list[str] = field(default_factory=lambda: list(DEFAULT_MAJORS))
    standings: list[str] = field(default_factory=lambda: list(DEFAULT_STANDINGS))
    mbti_types: list[str] = field(default_factory=lambda: list(DEFAULT_MBTI_TYPES))
    big_five_descriptors: dict = field(
        default_factory=lambda: json.loads(json.dumps(DEFAULT_BIG_FIVE_DESCRIPTORS))
    )
    learning_trait_items: list[dict] = field(
        default_factory=lambda: json.loads(json.dumps(DEFAULT_LEARNING_TRAIT_ITEMS))
    )
    challenge_items: list[str] = field(default_factory=lambda: list(DEFAULT_CHALLENGE_ITEMS))

    def subscale_names(self) -> list[str]:
        return [group["subscale"] for group in self.learning_trait_items]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["age_range"] = list(self.age_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeCatalog":
        kwargs = dict(d)
        if "age_range" in kwargs:
            kwargs["age_range"] = tuple(kwargs["age_range"])
        return cls(**kwargs)


def validate_catalog(catalog: AttributeCatalog) -> None:
    """Raise ConfigError unless the catalog satisfies its structural invariants."""
    problems: list[str] = []
    lo, hi = catalog.age_range
    if not (isinstance(lo, int) and isinstance(hi, int) and lo <= hi):
        problems.append(f"age_range must be an integer interval, got {catalog.age_range!r}")
    if not catalog.genders:
        problems.append("genders must be non-empty")
    if not catalog.majors:
        problems.append("majors must be non-empty")
    if not catalog.standings:
        problems.append("standings must be non-empty")
    if len(catalog.mbti_types) != 16:
        problems.append(f"mbti_types must have 16 entries, got {len(catalog.mbti_types)}")
    if len(set(catalog.mbti_types)) != len(catalog.mbti_types):
        problems.append("mbti_types must be unique")
    missing = [t for t in BIG_FIVE_TRAITS if t not in catalog.big_five_descriptors]
    if missing:
        problems.append(f"big_five_descriptors missing traits: {missing}")
    else:
        for trait in BIG_FIVE_TRAITS:
            levels = catalog.big_five_descriptors[trait]
            if set(levels) != {"high", "low"} or not all(levels.values()):
                problems.append(f"big_five_descriptors[{trait}] needs non-empty high/low text")
    if len(catalog.learning_trait_items) != 4:
        problems.append(
            f"learning_trait_items must have 4 subscales, got {len(catalog.learning_trait_items)}"
        )
    for group in catalog.learning_trait_items:
        if len(group.get("items", [])) != 3:
            problems.append(f"subscale {group.get('subscale')!r} must have exactly 3 items")
    if len(catalog.challenge_items) != 7:
        problems.append(f"challenge_items must have 7 entries, got {len(catalog.challenge_items)}")
    if problems:
        raise ConfigError("invalid attribute catalog: " + "; ".join(problems))


def default_catalog() -> AttributeCatalog:
    return AttributeCatalog()


def load_catalog(path: str | Path) -> AttributeCatalog:
    """Load a catalog from JSON and validate it."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"catalog file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"catalog file {path} is not valid JSON: {exc}") from exc
    catalog = AttributeCatalog.from_dict(data)
    validate_catalog(catalog)
    return catalog


def save_catalog(catalog: AttributeCatalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(catalog.to_dict(), indent=2) + "\n")
