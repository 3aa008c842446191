"""Post-hoc analyses over profile populations and their scores.

Three capabilities:

- One-hot encoding of profiles into a binary feature matrix with stable,
  human-readable column names (``Age=19``, ``MBTI=ISTJ``, ``BF-O=high``,
  ``Q2=Yes``, ``motivation-item1=4``), columns enumerated from the catalog
  so the layout is identical across populations.

- A small random-forest regressor built directly on that binary matrix:
  bootstrap rows, random feature subset per split, variance-reduction
  (SSE-decrease) split criterion, mean leaves. Feature importance is mean
  impurity decrease, normalized per tree by its sample count; relative
  importance divides by the maximum. Permutation importance is available
  as a cross-check. Binary features make the split search a single
  vectorized pass per node, which is why this is hand-rolled rather than a
  generic tree library.

- Distribution-shift reports comparing category frequencies between the
  initial population and the selected candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import AttributeCatalog, default_catalog
from .errors import AnalysisError
from .profiles import StudentProfile

CATEGORY_BASIC = "Basic Information"
CATEGORY_BF_VALUE = "BF value"
CATEGORY_BF_DESCRIPTION = "BF description"
CATEGORY_CHALLENGES = "Study Questionnaire"
CATEGORY_TRAIT_ITEMS = "Four Trait Questionnaire"

DEFAULT_N_TREES = 100
DEFAULT_TEST_FRAC = 0.2
DEFAULT_MAX_FEATURES = 1 / 3
DEFAULT_MIN_LEAF = 2
_EPS_DECREASE = 1e-12


@dataclass(frozen=True)
class Column:
    name: str  # e.g. "MBTI=ISTJ"
    category: str  # one of the CATEGORY_* tags
    group: str  # e.g. "MBTI"
    value: str  # e.g. "ISTJ"


@dataclass(eq=False)
class FeatureMatrix:
    X: np.ndarray  # n_profiles x n_columns, exact 0/1 floats
    columns: list[Column]
    profile_ids: list[str]

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def group_slices(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, col in enumerate(self.columns):
            out.setdefault(col.group, []).append(i)
        return out


def _trait_initial(trait: str) -> str:
    return trait[0].upper()


def _catalog_columns(catalog: AttributeCatalog) -> list[Column]:
    columns: list[Column] = []
    for gender in catalog.genders:
        columns.append(Column(f"Gender={gender}", CATEGORY_BASIC, "Gender", gender))
    for age in range(catalog.age_range[0], catalog.age_range[1] + 1):
        columns.append(Column(f"Age={age}", CATEGORY_BASIC, "Age", str(age)))
    for major in catalog.majors:
        columns.append(Column(f"Major={major}", CATEGORY_BASIC, "Major", major))
    for standing in catalog.standings:
        columns.append(Column(f"Standing={standing}", CATEGORY_BASIC, "Standing", standing))
    for code in catalog.mbti_types:
        columns.append(Column(f"MBTI={code}", CATEGORY_BASIC, "MBTI", code))
    for trait in catalog.big_five_descriptors:
        initial = _trait_initial(trait)
        for level in ("high", "low"):
            columns.append(Column(f"BF-{initial}={level}", CATEGORY_BF_VALUE, f"BF-{initial}", level))
    for trait, descriptors in catalog.big_five_descriptors.items():
        initial = _trait_initial(trait)
        for level in ("high", "low"):
            text = descriptors[level]
            columns.append(
                Column(
                    f"BFdesc-{initial}={text[:40]}",
                    CATEGORY_BF_DESCRIPTION,
                    f"BFdesc-{initial}",
                    text,
                )
            )
    for i in range(len(catalog.challenge_items)):
        for answer in ("Yes", "No"):
            columns.append(Column(f"Q{i + 1}={answer}", CATEGORY_CHALLENGES, f"Q{i + 1}", answer))
    for group in catalog.learning_trait_items:
        for j in range(len(group["items"])):
            item_group = f"{group['subscale']}-item{j + 1}"
            for level in range(1, 6):
                columns.append(
                    Column(f"{item_group}={level}", CATEGORY_TRAIT_ITEMS, item_group, str(level))
                )
    names = [c.name for c in columns]
    if len(set(names)) != len(names):
        raise AnalysisError("catalog produces duplicate one-hot column names")
    return columns


def _profile_values(profile: StudentProfile) -> dict[str, str]:
    """Per-group categorical value for one profile, keyed like the columns."""
    values = {
        "Gender": profile.gender,
        "Age": str(profile.age),
        "Major": profile.major,
        "Standing": profile.standing,
        "MBTI": profile.mbti,
    }
    for entry in profile.big_five:
        initial = _trait_initial(entry.trait)
        values[f"BF-{initial}"] = entry.level
        values[f"BFdesc-{initial}"] = entry.description
    for i, answered in enumerate(profile.challenges):
        values[f"Q{i + 1}"] = "Yes" if answered else "No"
    for sub in profile.learning_traits:
        for j, level in enumerate(sub.values):
            values[f"{sub.subscale}-item{j + 1}"] = str(level)
    return values


def one_hot_encode(
    profiles: list[StudentProfile], catalog: AttributeCatalog | None = None
) -> FeatureMatrix:
    """Binary matrix with one column per catalog value; each categorical
    group contributes exactly one 1 per row."""
    if not profiles:
        raise ValueError("cannot encode an empty profile list")
    catalog = catalog or default_catalog()
    columns = _catalog_columns(catalog)
    index = {(c.group, c.value): i for i, c in enumerate(columns)}
    X = np.zeros((len(profiles), len(columns)))
    for row, profile in enumerate(profiles):
        for group, value in _profile_values(profile).items():
            try:
                X[row, index[(group, value)]] = 1.0
            except KeyError:
                raise ValueError(
                    f"profile {profile.id}: value {value!r} for {group} is not in the catalog"
                ) from None
    return FeatureMatrix(X=X, columns=columns, profile_ids=[p.id for p in profiles])


def one_hot_decode(matrix: FeatureMatrix) -> list[dict[str, str]]:
    """Recover each row's group -> value mapping (inverse of encoding)."""
    out = []
    for row in range(matrix.n_rows):
        values: dict[str, str] = {}
        for i in np.nonzero(matrix.X[row])[0]:
            col = matrix.columns[int(i)]
            values[col.group] = col.value
        out.append(values)
    return out


# -- random forest -----------------------------------------------------------------


@dataclass(eq=False)
class ForestModel:
    trees: list[dict]
    feature_names: list[str]
    n_trees: int
    seed: int
    test_frac: float
    min_leaf: int
    max_features: float
    bootstrap: bool
    train_indices: np.ndarray
    test_indices: np.ndarray
    train_mse: float
    test_mse: float | None
    raw_importances: np.ndarray
    importance_defined: bool
    target_name: str = "y"

    def summary(self) -> dict:
        return {
            "target": self.target_name,
            "n_trees": self.n_trees,
            "seed": self.seed,
            "test_frac": self.test_frac,
            "min_leaf": self.min_leaf,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "n_train": int(len(self.train_indices)),
            "n_test": int(len(self.test_indices)),
            "train_mse": self.train_mse,
            "test_mse": self.test_mse,
            "importance_defined": self.importance_defined,
        }


def _grow_tree(X, y, indices, rng, n_candidates, min_leaf, importances):
    node_y = y[indices]
    m = len(indices)
    if m < 2 * min_leaf or np.all(node_y == node_y[0]):
        return {"value": float(node_y.mean())}

    p = X.shape[1]
    candidates = np.sort(rng.choice(p, size=n_candidates, replace=False))
    Xc = X[np.ix_(indices, candidates)]
    total = node_y.sum()
    n_ones = Xc.sum(axis=0)
    sum_ones = Xc.T @ node_y
    n_zeros = m - n_ones
    sum_zeros = total - sum_ones
    usable = (n_ones >= min_leaf) & (n_zeros >= min_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        decrease = sum_ones**2 / n_ones + sum_zeros**2 / n_zeros - total**2 / m
    decrease[~usable] = -np.inf

    best = int(np.argmax(decrease))
    feature = None
    if decrease[best] > _EPS_DECREASE:
        feature = int(candidates[best])
        importances[feature] += float(decrease[best])
    else:
        # Impure node where no candidate improves SSE (e.g. XOR-like targets):
        # split on the first candidate that separates the rows at all, so the
        # tree can keep digging instead of freezing a mixed leaf.
        for j in np.nonzero(usable)[0]:
            if 0 < n_ones[j] < m:
                feature = int(candidates[int(j)])
                break
        if feature is None:
            return {"value": float(node_y.mean())}

    goes_right = X[indices, feature] == 1.0
    return {
        "feature": feature,
        "left": _grow_tree(X, y, indices[~goes_right], rng, n_candidates, min_leaf, importances),
        "right": _grow_tree(X, y, indices[goes_right], rng, n_candidates, min_leaf, importances),
    }


def _tree_predict(node, X, row_idx, out):
    if "value" in node:
        out[row_idx] = node["value"]
        return
    goes_right = X[row_idx, node["feature"]] == 1.0
    _tree_predict(node["right"], X, row_idx[goes_right], out)
    _tree_predict(node["left"], X, row_idx[~goes_right], out)


def predict(model: ForestModel, matrix: FeatureMatrix) -> np.ndarray:
    X = matrix.X
    out = np.zeros(X.shape[0])
    for tree in model.trees:
        part = np.empty(X.shape[0])
        _tree_predict(tree, X, np.arange(X.shape[0]), part)
        out += part
    return out / len(model.trees)


def fit_forest(
    matrix: FeatureMatrix,
    y: np.ndarray,
    n_trees: int = DEFAULT_N_TREES,
    test_frac: float = DEFAULT_TEST_FRAC,
    seed: int = 0,
    max_features: float = DEFAULT_MAX_FEATURES,
    min_leaf: int = DEFAULT_MIN_LEAF,
    bootstrap: bool = True,
    target_name: str = "y",
) -> ForestModel:
    """Train a regression forest on binary features.

    A held-out fraction of rows (default 20%) is excluded from training and
    used for the reported test MSE. Deterministic for a given seed.
    """
    y = np.asarray(y, dtype=float)
    n, p = matrix.X.shape
    if len(y) != n:
        raise ValueError(f"{len(y)} targets for {n} rows")
    if n < 5:
        raise ValueError(f"need at least 5 rows to fit, got {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    if n_trees < 1 or min_leaf < 1 or not 0 <= test_frac < 1 or not 0 < max_features <= 1:
        raise ValueError("invalid forest hyperparameters")

    split_rng = np.random.default_rng([seed, 0])
    order = split_rng.permutation(n)
    n_test = int(round(n * test_frac))
    test_indices = np.sort(order[:n_test])
    train_indices = np.sort(order[n_test:])

    X_train = matrix.X[train_indices]
    y_train = y[train_indices]
    n_train = len(train_indices)
    n_candidates = max(1, int(round(p * max_features)))

    trees = []
    importances = np.zeros(p)
    for t in range(n_trees):
        rng = np.random.default_rng([seed, t + 1])
        rows = rng.integers(0, n_train, size=n_train) if bootstrap else np.arange(n_train)
        tree_importances = np.zeros(p)
        trees.append(
            _grow_tree(X_train, y_train, rows, rng, n_candidates, min_leaf, tree_importances)
        )
        importances += tree_importances / n_train
    importances /= n_trees

    model = ForestModel(
        trees=trees,
        feature_names=matrix.column_names,
        n_trees=n_trees,
        seed=seed,
        test_frac=test_frac,
        min_leaf=min_leaf,
        max_features=max_features,
        bootstrap=bootstrap,
        train_indices=train_indices,
        test_indices=test_indices,
        train_mse=0.0,
        test_mse=None,
        raw_importances=importances,
        importance_defined=bool(np.any(importances > 0)),
        target_name=target_name,
    )
    train_pred = predict(model, FeatureMatrix(X_train, matrix.columns, []))
    model.train_mse = float(np.mean((train_pred - y_train) ** 2))
    if n_test:
        test_pred = predict(model, FeatureMatrix(matrix.X[test_indices], matrix.columns, []))
        model.test_mse = float(np.mean((test_pred - y[test_indices]) ** 2))
    return model


@dataclass
class ImportanceRanking:
    entries: list[dict] = field(default_factory=list)  # feature, category, raw, relative

    def top(self, k: int) -> list[dict]:
        return self.entries[:k]

    def as_mapping(self) -> dict[str, float]:
        return {e["feature"]: e["relative"] for e in self.entries}


def relative_importance(model: ForestModel, matrix: FeatureMatrix) -> ImportanceRanking:
    """Importances divided by the largest one, in descending order (ties in
    the ordering broken by feature name)."""
    if not model.importance_defined:
        raise AnalysisError(
            "feature importance is undefined: the forest never made an SSE-reducing split "
            "(constant target?)"
        )
    raw = model.raw_importances
    top_value = raw.max()
    by_name = {c.name: c for c in matrix.columns}
    order = sorted(range(len(raw)), key=lambda i: (-raw[i], model.feature_names[i]))
    entries = []
    for i in order:
        name = model.feature_names[i]
        entries.append(
            {
                "feature": name,
                "category": by_name[name].category,
                "raw": float(raw[i]),
                "relative": float(raw[i] / top_value),
            }
        )
    return ImportanceRanking(entries=entries)


def permutation_importance(
    model: ForestModel, matrix: FeatureMatrix, y: np.ndarray, seed: int = 0, n_repeats: int = 3
) -> dict[str, float]:
    """Robustness cross-check: mean test-MSE increase when one column is
    shuffled. Slower than impurity importance; offered behind this call."""
    y = np.asarray(y, dtype=float)
    idx = model.test_indices if len(model.test_indices) else model.train_indices
    X_eval = matrix.X[idx]
    y_eval = y[idx]
    base_pred = predict(model, FeatureMatrix(X_eval, matrix.columns, []))
    base_mse = float(np.mean((base_pred - y_eval) ** 2))
    rng = np.random.default_rng(seed)
    out: dict[str, float] = {}
    for j, name in enumerate(model.feature_names):
        increases = []
        for _ in range(n_repeats):
            shuffled = X_eval.copy()
            shuffled[:, j] = rng.permutation(shuffled[:, j])
            pred = predict(model, FeatureMatrix(shuffled, matrix.columns, []))
            increases.append(float(np.mean((pred - y_eval) ** 2)) - base_mse)
        out[name] = float(np.mean(increases))
    return out


# -- distribution shift ----------------------------------------------------------------


@dataclass
class DistributionShift:
    groups: dict  # group -> {"category": str, "values": {value: {initial, selected, delta}}}
    n_initial: int
    n_selected: int

    def to_csv_rows(self) -> list[dict]:
        rows = []
        for group, info in self.groups.items():
            for value, freq in info["values"].items():
                rows.append(
                    {
                        "category": info["category"],
                        "feature": group,
                        "value": value,
                        "initial_frequency": freq["initial"],
                        "selected_frequency": freq["selected"],
                        "delta": freq["delta"],
                    }
                )
        return rows


def distribution_report(
    initial: list[StudentProfile],
    selected: list[StudentProfile],
    catalog: AttributeCatalog | None = None,
) -> DistributionShift:
    """Per-feature category frequencies before vs. after selection."""
    if not initial or not selected:
        raise ValueError("both populations must be non-empty")
    initial_ids = {p.id for p in initial}
    missing = [p.id for p in selected if p.id not in initial_ids]
    if missing:
        raise ValueError(f"selected profiles not in the initial population: {missing}")
    catalog = catalog or default_catalog()
    columns = _catalog_columns(catalog)

    def frequencies(population: list[StudentProfile]) -> dict[tuple[str, str], float]:
        counts: dict[tuple[str, str], int] = {}
        for profile in population:
            for group, value in _profile_values(profile).items():
                counts[(group, value)] = counts.get((group, value), 0) + 1
        return {key: count / len(population) for key, count in counts.items()}

    freq_initial = frequencies(initial)
    freq_selected = frequencies(selected)
    groups: dict[str, dict] = {}
    for col in columns:
        info = groups.setdefault(col.group, {"category": col.category, "values": {}})
        fi = freq_initial.get((col.group, col.value), 0.0)
        fs = freq_selected.get((col.group, col.value), 0.0)
        info["values"][col.value] = {"initial": fi, "selected": fs, "delta": fs - fi}
    return DistributionShift(groups=groups, n_initial=len(initial), n_selected=len(selected))
