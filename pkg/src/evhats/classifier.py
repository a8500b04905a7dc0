"""Linear SVM (seeded stochastic subgradient descent) and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SCHEMA = "evhats-linear-model/1"


class ClassifierError(ValueError):
    pass


class SingleClassInput(ClassifierError):
    pass


class DimensionMismatch(ClassifierError):
    pass


class EmptyInput(ClassifierError):
    pass


class LengthMismatch(ClassifierError):
    pass


@dataclass
class LinearModel:
    """One weight row per class, or a single row for binary problems.

    Binary models score the second class (``classes[1]``) directly.
    """

    weights: np.ndarray                 # (n_rows, dim)
    bias: np.ndarray                    # (n_rows,)
    classes: list
    hyper: dict = field(default_factory=dict)
    fingerprint: str = ""
    mean: np.ndarray | None = None      # set when trained with standardisation
    scale: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.bias = np.atleast_1d(np.asarray(self.bias, dtype=np.float64))
        expected = 1 if len(self.classes) == 2 else len(self.classes)
        if self.weights.shape[0] != expected or len(self.bias) != expected:
            raise DimensionMismatch(
                f"{len(self.classes)} classes need {expected} weight rows, got {self.weights.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def binary(self) -> bool:
        return len(self.classes) == 2


@dataclass
class TrainTrace:
    """Objective of the accepted solution after each epoch, per one-vs-rest problem."""
    objectives: list


def _check_features(features, dim=None) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionMismatch(f"model expects {dim} features, got {X.shape[1]}")
    return X


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """``lam/2 * (|w|^2 + b^2) + mean(hinge)`` with ``y`` in {-1, +1}."""
    margins = y * (X @ w + b)
    return 0.5 * lam * (w @ w + b * b) + np.maximum(0.0, 1.0 - margins).mean()


def _pegasos(X, y, lam, epochs, rng, trace):
    """Binary solver; the bias is an extra, regularised, constant-1 feature."""
    from ._kernel import pegasos_kernel

    perms = np.array([rng.permutation(len(X)) for _ in range(epochs)], dtype=np.int64)
    avgs = pegasos_kernel(np.ascontiguousarray(X), y, float(lam), perms)
    d = X.shape[1]
    # an epoch's average replaces the current solution only if it does not
    # raise the full objective, so the reported objective never goes up
    best, best_obj = avgs[0], svm_objective(avgs[0, :d], avgs[0, d], X, y, lam)
    curve = [best_obj]
    for a in avgs[1:]:
        obj = svm_objective(a[:d], a[d], X, y, lam)
        if obj <= best_obj:
            best, best_obj = a, obj
        curve.append(best_obj)
    if trace is not None:
        trace.extend(curve)
    return best[:d].copy(), float(best[d])


def train_linear_svm(features, labels, lam: float = 1e-4, epochs: int = 50, seed: int = 0,
                     standardize: bool = False, fingerprint: str = "", trace: TrainTrace | None = None
                     ) -> LinearModel:
    """Fit a linear SVM by minimising the L2-regularised hinge loss.

    Each epoch visits the samples in a seeded random order with step size
    ``1 / (lam * step)`` and averages its iterates; that average becomes the
    solution unless it scores a higher objective than the current one. More than two classes are handled one-vs-rest. The
    result is a deterministic function of the inputs and ``seed``.
    """
    X = _check_features(features)
    labels = np.asarray(labels)
    if len(labels) != len(X):
        raise DimensionMismatch(f"{len(X)} samples but {len(labels)} labels")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise SingleClassInput(f"need at least two classes, got {classes}")
    if epochs < 1 or not lam > 0:
        raise ValueError("epochs must be >= 1 and lambda > 0")

    mean = scale = None
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        X = (X - mean) / scale

    targets = [classes[1]] if len(classes) == 2 else classes
    W, B = [], []
    objs = []
    for c in targets:
        y = np.where(labels == c, 1.0, -1.0)
        rng = np.random.default_rng(seed)
        curve = [] if trace is not None else None
        w, b = _pegasos(X, y, lam, epochs, rng, curve)
        W.append(w)
        B.append(b)
        objs.append(curve)
    if trace is not None:
        trace.objectives = objs
    hyper = {"lambda": lam, "epochs": epochs, "seed": seed, "standardize": standardize}
    return LinearModel(np.array(W), np.array(B), classes, hyper, fingerprint, mean, scale)


def decision_scores(model: LinearModel, features) -> np.ndarray:
    """``X @ w + b`` per sample: shape ``(n,)`` for binary models, ``(n, classes)`` otherwise."""
    X = _check_features(features, model.dim)
    if model.mean is not None:
        X = (X - model.mean) / model.scale
    scores = X @ model.weights.T + model.bias
    return scores[:, 0] if model.binary else scores


def predict(model: LinearModel, features) -> np.ndarray:
    scores = decision_scores(model, features)
    classes = np.asarray(model.classes)
    if model.binary:
        # a zero score is a tie, which goes to the lower class
        return classes[(scores > 0).astype(int)]
    return classes[np.argmax(scores, axis=1)]


def accuracy(predicted, actual) -> float:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if len(predicted) != len(actual):
        raise LengthMismatch(f"{len(predicted)} predictions for {len(actual)} labels")
    if len(actual) == 0:
        raise EmptyInput("accuracy of an empty set is undefined")
    return float(np.mean(predicted == actual))


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve by sweeping a threshold down the sorted scores.

    Equal scores form a single step, so a tied positive/negative pair is worth
    half a concordant pair in the area.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if len(scores) != len(labels):
        raise LengthMismatch(f"{len(scores)} scores for {len(labels)} labels")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("ROC analysis needs both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = pos[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(p)[ends]
    fp = (ends + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def save_model(model: LinearModel, path) -> None:
    """Write the model as ``key = value`` lines; floats keep 17 significant digits."""
    fmt = lambda a: " ".join(f"{v:.17g}" for v in np.asarray(a).ravel())
    lines = [
        f"schema = {SCHEMA}",
        f"classes = {','.join(str(c) for c in model.classes)}",
        f"dim = {model.dim}",
        f"rows = {model.weights.shape[0]}",
    ]
    for k in sorted(model.hyper):
        lines.append(f"hyper.{k} = {model.hyper[k]!r}")
    lines.append(f"fingerprint = {model.fingerprint}")
    for r in range(model.weights.shape[0]):
        lines.append(f"bias.{r} = {model.bias[r]:.17g}")
        lines.append(f"weights.{r} = {fmt(model.weights[r])}")
    if model.mean is not None:
        lines.append(f"mean = {fmt(model.mean)}")
        lines.append(f"scale = {fmt(model.scale)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> LinearModel:
    import ast

    kv = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ClassifierError(f"{path}:{lineno}: expected 'key = value'")
            kv[key.strip()] = value.strip()
    if kv.get("schema") != SCHEMA:
        raise ClassifierError(f"{path}: unsupported model schema {kv.get('schema')!r}")
    floats = lambda s: np.array([float(v) for v in s.split()], dtype=np.float64)
    classes = [_parse_class(c) for c in kv["classes"].split(",")]
    rows, dim = int(kv["rows"]), int(kv["dim"])
    W = np.array([floats(kv[f"weights.{r}"]) for r in range(rows)]).reshape(rows, dim)
    B = np.array([float(kv[f"bias.{r}"]) for r in range(rows)])
    hyper = {k[6:]: ast.literal_eval(v) for k, v in kv.items() if k.startswith("hyper.")}
    mean = floats(kv["mean"]) if "mean" in kv else None
    scale = floats(kv["scale"]) if "scale" in kv else None
    return LinearModel(W, B, classes, hyper, kv.get("fingerprint", ""), mean, scale)


def _parse_class(s: str):
    try:
        return int(s)
    except ValueError:
        return s
