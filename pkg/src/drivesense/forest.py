"""CART decision trees and tree ensembles with class-weighted Gini impurity.

Three configurations cover the classifiers used by the pipeline: a single tree
(all features per split, exhaustive thresholds), a random forest (bootstrap +
sqrt(F) candidates), and extra trees (no bootstrap, random thresholds).

Internal nodes route value < threshold to the left child. Trees are grown and
traversed with explicit stacks, never recursion, so depth is unbounded. All
randomness flows from per-tree generators seeded as (forest seed, tree index),
which makes fitting deterministic and safely parallelizable per tree.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .balance import ClassWeights
from .errors import ModelError

FOREST_SCHEMA = "forest/v1"


class SplitMode(enum.Enum):
    BEST_THRESHOLD = "best"
    RANDOM_THRESHOLD = "random"


@dataclass(frozen=True)
class TreeParams:
    """Growth limits and split policy for one tree.

    n_candidate_features = None means floor(sqrt(F)), at least 1, resolved at fit
    time; an explicit value is clamped to the feature count.
    """

    max_depth: int | None = None
    min_samples_split: int = 2
    n_candidate_features: int | None = None
    split_mode: SplitMode = SplitMode.BEST_THRESHOLD

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.n_candidate_features is not None and self.n_candidate_features < 1:
            raise ValueError("n_candidate_features must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    bootstrap: bool = True
    tree: TreeParams = field(default_factory=TreeParams)
    class_weights: ClassWeights | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (class probabilities)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    proba: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.proba is not None


@dataclass
class Forest:
    trees: list[TreeNode]
    params: ForestParams
    classes: np.ndarray
    column_names: list[str]

    @property
    def n_features(self) -> int:
        return len(self.column_names)


def gini_impurity(class_counts: dict[int, float]) -> float:
    """Gini impurity 1 - sum_c p_c^2 over weighted class counts."""
    total = float(sum(class_counts.values()))
    if total <= 0:
        raise ValueError("gini_impurity requires a positive total count")
    return 1.0 - sum((c / total) ** 2 for c in class_counts.values())


def _resolve_candidates(params: TreeParams, n_features: int) -> int:
    if params.n_candidate_features is None:
        return max(1, int(math.floor(math.sqrt(n_features))))
    return min(params.n_candidate_features, n_features)


def _weight_vector(labels: np.ndarray, classes: np.ndarray, weights: ClassWeights | None):
    if weights is None:
        return np.ones(len(labels), dtype=np.float64)
    try:
        per_class = np.array([weights[int(c)] for c in classes], dtype=np.float64)
    except KeyError as exc:
        raise ModelError(f"class weights missing entry for class {exc}") from None
    return per_class[labels]


def _as_matrix(m) -> tuple[np.ndarray, list[str]]:
    """Accept a FeatureMatrix or a bare 2-D array; return (values, column names)."""
    if hasattr(m, "values") and hasattr(m, "column_names"):
        return np.asarray(m.values, dtype=np.float64), list(m.column_names)
    x = np.asarray(m, dtype=np.float64)
    n_cols = x.shape[1] if x.ndim == 2 else 0
    return x, [f"x{i}" for i in range(n_cols)]


def _best_split(v, y, w, counts, total, n_classes):
    """Exhaustive scan over midpoints of consecutive distinct sorted values.

    Returns (weighted child impurity, threshold) or (inf, 0.0) if the feature
    admits no valid split.
    """
    order = np.argsort(v, kind="stable")
    vs = v[order]
    valid = vs[:-1] < vs[1:]
    if not valid.any():
        return np.inf, 0.0
    cw = np.zeros((len(vs), n_classes))
    cw[np.arange(len(vs)), y[order]] = w[order]
    left = np.cumsum(cw, axis=0)[:-1][valid]
    ltot = left.sum(axis=1)
    right = counts - left
    rtot = total - ltot
    gini_l = 1.0 - ((left / ltot[:, None]) ** 2).sum(axis=1)
    gini_r = 1.0 - ((right / rtot[:, None]) ** 2).sum(axis=1)
    scores = (ltot * gini_l + rtot * gini_r) / total
    j = int(np.argmin(scores))
    lo = vs[:-1][valid][j]
    hi = vs[1:][valid][j]
    thr = lo / 2.0 + hi / 2.0
    if thr <= lo:  # adjacent floats: keep both sides non-empty
        thr = hi
    return float(scores[j]), float(thr)


def _split_score(mask, y, w, counts, total):
    lw = w[mask]
    left = np.bincount(y[mask], weights=lw, minlength=len(counts))
    ltot = left.sum()
    right = counts - left
    rtot = total - ltot
    gini_l = 1.0 - ((left / ltot) ** 2).sum()
    gini_r = 1.0 - ((right / rtot) ** 2).sum()
    return float((ltot * gini_l + rtot * gini_r) / total)


def _random_split(v, y, w, counts, total, rng):
    """One uniform threshold in (min, max); (inf, 0.0) when degenerate."""
    vmin, vmax = float(v.min()), float(v.max())
    if vmin == vmax:
        return np.inf, 0.0
    thr = float(rng.uniform(vmin, vmax))
    mask = v < thr
    if not mask.any() or mask.all():
        return np.inf, 0.0
    return _split_score(mask, y, w, counts, total), thr


def _grow(x, y, w, root_idx, params: TreeParams, n_cand: int, rng, n_classes: int) -> TreeNode:
    root = TreeNode()
    stack = [(root, root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        counts = np.bincount(y_node, weights=w[idx], minlength=n_classes)
        total = counts.sum()
        pure = bool((y_node == y_node[0]).all())
        depth_hit = params.max_depth is not None and depth >= params.max_depth
        if pure or depth_hit or idx.size < params.min_samples_split:
            node.proba = counts / total
            continue

        parent_gini = 1.0 - ((counts / total) ** 2).sum()
        candidates = rng.choice(x.shape[1], size=n_cand, replace=False)
        best_score, best_feature, best_thr = np.inf, -1, 0.0
        for f in candidates:
            v = x[idx, f]
            if params.split_mode is SplitMode.BEST_THRESHOLD:
                score, thr = _best_split(v, y_node, w[idx], counts, total, n_classes)
            else:
                score, thr = _random_split(v, y_node, w[idx], counts, total, rng)
            if score < best_score:
                best_score, best_feature, best_thr = score, int(f), thr

        if best_feature < 0 or best_score >= parent_gini - 1e-12:
            node.proba = counts / total
            continue
        node.feature = best_feature
        node.threshold = best_thr
        node.left = TreeNode()
        node.right = TreeNode()
        mask = x[idx, best_feature] < best_thr
        stack.append((node.right, idx[~mask], depth + 1))
        stack.append((node.left, idx[mask], depth + 1))
    return root


def fit_tree(m, labels, params: TreeParams, weights: ClassWeights | None = None,
             classes: np.ndarray | None = None, seed: int = 0) -> TreeNode:
    """Grow one tree on the full data; leaf vectors span `classes` (sorted unique by default)."""
    x, _ = _as_matrix(m)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ModelError("fit_tree requires a non-empty 2-D matrix")
    if x.shape[0] != labels.size:
        raise ModelError("rows and labels differ in length")
    if classes is None:
        classes = np.unique(labels)
    lut = {int(c): i for i, c in enumerate(classes)}
    y = np.array([lut[int(v)] for v in labels], dtype=np.int64)
    w = _weight_vector(y, classes, weights)
    # same stream as tree 0 of an unbootstrapped forest with this seed
    rng = np.random.default_rng([seed, 0])
    n_cand = _resolve_candidates(params, x.shape[1])
    return _grow(x, y, w, np.arange(x.shape[0]), params, n_cand, rng, len(classes))


def fit_forest(m, labels, params: ForestParams) -> Forest:
    """Fit the ensemble; tree t trains on a bootstrap (or the full set) with its own
    generator seeded (forest seed, t), so results do not depend on execution order."""
    x, column_names = _as_matrix(m)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ModelError("fit_forest requires a non-empty 2-D matrix")
    if x.shape[0] != labels.size:
        raise ModelError("rows and labels differ in length")

    classes = np.unique(labels)
    lut = {int(c): i for i, c in enumerate(classes)}
    y = np.array([lut[int(v)] for v in labels], dtype=np.int64)
    w = _weight_vector(y, classes, params.class_weights)
    n = x.shape[0]
    n_cand = _resolve_candidates(params.tree, x.shape[1])

    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng([params.seed, t])
        idx = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        trees.append(_grow(x, y, w, idx, params.tree, n_cand, rng, len(classes)))
    return Forest(trees, params, classes, column_names)


def _tree_proba(root: TreeNode, x: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.empty((x.shape[0], n_classes))
    stack = [(root, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.proba
        else:
            mask = x[idx, node.feature] < node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def predict_proba(forest: Forest, x) -> np.ndarray:
    """Average of per-tree leaf probability vectors; rows sum to 1."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[1] != forest.n_features:
        raise ModelError(
            f"feature width {x2.shape[1]} does not match training width {forest.n_features}"
        )
    acc = np.zeros((x2.shape[0], len(forest.classes)))
    for tree in forest.trees:
        acc += _tree_proba(tree, x2, len(forest.classes))
    acc /= len(forest.trees)
    return acc[0] if single else acc


def predict(forest: Forest, x) -> np.ndarray:
    """Class ids by highest average probability; ties go to the lower class index."""
    proba = np.atleast_2d(predict_proba(forest, x))
    picked = forest.classes[np.argmax(proba, axis=1)]
    return picked[0] if np.asarray(x).ndim == 1 else picked


def _flatten_tree(root: TreeNode) -> list[dict]:
    flat: list[dict] = []
    work = [(root, -1, "")]
    while work:
        node, parent, side = work.pop()
        pos = len(flat)
        if node.is_leaf:
            flat.append({"p": [float(v) for v in node.proba]})
        else:
            flat.append({"f": node.feature, "t": node.threshold, "l": -1, "r": -1})
            work.append((node.right, pos, "r"))
            work.append((node.left, pos, "l"))
        if parent >= 0:
            flat[parent][side] = pos
    return flat


def _rebuild_tree(flat: list[dict]) -> TreeNode:
    nodes = []
    for d in flat:
        if "p" in d:
            nodes.append(TreeNode(proba=np.array(d["p"], dtype=np.float64)))
        else:
            nodes.append(TreeNode(feature=int(d["f"]), threshold=float(d["t"])))
    for d, node in zip(flat, nodes):
        if "p" not in d:
            node.left = nodes[d["l"]]
            node.right = nodes[d["r"]]
    return nodes[0]


def forest_to_dict(forest: Forest) -> dict:
    p = forest.params
    weights = None
    if p.class_weights is not None:
        weights = {str(k): v for k, v in sorted(p.class_weights.weights.items())}
    return {
        "schema": FOREST_SCHEMA,
        "classes": [int(c) for c in forest.classes],
        "column_names": list(forest.column_names),
        "params": {
            "n_trees": p.n_trees,
            "bootstrap": p.bootstrap,
            "seed": p.seed,
            "max_depth": p.tree.max_depth,
            "min_samples_split": p.tree.min_samples_split,
            "n_candidate_features": p.tree.n_candidate_features,
            "split_mode": p.tree.split_mode.value,
            "class_weights": weights,
        },
        "trees": [_flatten_tree(t) for t in forest.trees],
    }


def forest_from_dict(doc: dict) -> Forest:
    if doc.get("schema") != FOREST_SCHEMA:
        raise ModelError(f"unsupported forest document schema {doc.get('schema')!r}")
    p = doc["params"]
    weights = None
    if p["class_weights"] is not None:
        weights = ClassWeights({int(k): float(v) for k, v in p["class_weights"].items()})
    params = ForestParams(
        n_trees=p["n_trees"],
        bootstrap=p["bootstrap"],
        tree=TreeParams(
            max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"],
            n_candidate_features=p["n_candidate_features"],
            split_mode=SplitMode(p["split_mode"]),
        ),
        class_weights=weights,
        seed=p["seed"],
    )
    trees = [_rebuild_tree(flat) for flat in doc["trees"]]
    return Forest(trees, params, np.array(doc["classes"], dtype=np.int64), list(doc["column_names"]))


def save_forest(forest: Forest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(forest), fh)
    return path


def load_forest(path: str | Path) -> Forest:
    with open(path, "r", encoding="utf-8") as fh:
        return forest_from_dict(json.load(fh))


def model_params(
    name: str,
    seed: int = 0,
    n_features: int | None = None,
    n_trees: int = 100,
    class_weights: ClassWeights | None = None,
) -> ForestParams:
    """Parameter presets for the three supported classifiers.

    "tree": one tree, all features per split, exhaustive thresholds.
    "forest": bootstrap ensemble, sqrt(F) candidates, exhaustive thresholds.
    "extra": no bootstrap, sqrt(F) candidates, random thresholds.
    """
    if name == "tree":
        if n_features is None:
            raise ValueError("the single-tree preset needs n_features")
        return ForestParams(
            n_trees=1,
            bootstrap=False,
            tree=TreeParams(n_candidate_features=n_features),
            class_weights=class_weights,
            seed=seed,
        )
    if name == "forest":
        return ForestParams(
            n_trees=n_trees, bootstrap=True, tree=TreeParams(), class_weights=class_weights, seed=seed
        )
    if name == "extra":
        return ForestParams(
            n_trees=n_trees,
            bootstrap=False,
            tree=TreeParams(split_mode=SplitMode.RANDOM_THRESHOLD),
            class_weights=class_weights,
            seed=seed,
        )
    raise ValueError(f"unknown model {name!r}; expected tree, forest, or extra")
