"""Patient-based cross-validation: splits, balancing, a softmax head
over concatenated channel blocks, and confusion-matrix metrics.

The softmax head stands in for the paper-scale network so the full
protocol (patient-disjoint folds, undersampling, channel ablations) runs
at desk scale.  Every fitted component sees train-fold patients only;
fold reports carry the audit trail to prove it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autoencoder import TrainConfig, ae_channels, ae_init, ae_train
from .errors import InvalidInputError
from .features import feature_vector, pca_fit
from .tda import Signal, betti_pair

__all__ = [
    "SplitPlan",
    "make_splits",
    "balance_undersample",
    "SoftmaxHead",
    "softmax_head_train",
    "softmax_head_predict",
    "MetricsReport",
    "compute_metrics",
    "ChannelMask",
    "ExperimentConfig",
    "FoldReport",
    "run_experiment",
    "run_ablation_grid",
    "DEFAULT_MASKS",
]

NORMAL_SYMBOL = "N"


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple  # ((train, val, test), ...) tuples of patient ids
    test_size: int
    train_ratio: float
    seed: int

    def __len__(self):
        return len(self.folds)


def make_splits(patients, test_size, train_ratio=0.7, seed=0) -> SplitPlan:
    """Seeded permutation cut into consecutive disjoint test blocks.

    Each fold's non-test patients split train_ratio / (1 - train_ratio)
    into train and validation.
    """
    patients = list(patients)
    if len(set(patients)) != len(patients):
        raise InvalidInputError("patient ids must be unique")
    if test_size < 1 or test_size >= len(patients):
        raise InvalidInputError("need 1 <= test_size < number of patients")
    if not 0.0 < train_ratio < 1.0:
        raise InvalidInputError("train_ratio must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = [patients[i] for i in rng.permutation(len(patients))]
    folds = []
    for start in range(0, len(order) - test_size + 1, test_size):
        test = tuple(order[start : start + test_size])
        rest = [p for p in order if p not in test]
        n_train = int(round(train_ratio * len(rest)))
        folds.append((tuple(rest[:n_train]), tuple(rest[n_train:]), test))
    return SplitPlan(tuple(folds), test_size, train_ratio, seed)


def balance_undersample(windows, seed=0):
    """Downsample every class to the minority count, then shuffle."""
    windows = list(windows)
    by_label = {}
    for w in windows:
        by_label.setdefault(w.label, []).append(w)
    if len(by_label) < 2:
        raise InvalidInputError("balancing needs at least two classes")
    floor = min(len(group) for group in by_label.values())
    rng = np.random.default_rng(seed)
    kept = []
    for label in sorted(by_label):
        group = by_label[label]
        picks = rng.choice(len(group), size=floor, replace=False)
        kept.extend(group[i] for i in sorted(picks))
    return [kept[i] for i in rng.permutation(len(kept))]


@dataclass(frozen=True)
class SoftmaxHead:
    classes: tuple
    weights: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_gradients(weights, bias, x, y_onehot, l2):
    """Mean cross-entropy + L2 loss and its gradients (for checking)."""
    probs = _softmax(x @ weights.T + bias)
    n = x.shape[0]
    loss = -np.mean(np.log(probs[y_onehot.astype(bool)] + 1e-300))
    loss += 0.5 * l2 * np.sum(weights**2)
    delta = (probs - y_onehot) / n
    return loss, delta.T @ x + l2 * weights, delta.sum(axis=0)


def softmax_head_train(
    features, labels, iters=300, lr=2.0, l2=1e-4, seed=0
) -> SoftmaxHead:
    """Multinomial logistic regression by full-batch gradient descent."""
    x = np.asarray(features, dtype=np.float64)
    labels = list(labels)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise InvalidInputError("features and labels must have matching rows")
    classes = tuple(sorted(set(labels)))
    index = {c: i for i, c in enumerate(classes)}
    onehot = np.zeros((len(labels), len(classes)))
    onehot[np.arange(len(labels)), [index[l] for l in labels]] = 1.0
    weights = np.zeros((len(classes), x.shape[1]))
    bias = np.zeros(len(classes))
    for _ in range(iters):
        _, gw, gb = softmax_gradients(weights, bias, x, onehot, l2)
        weights -= lr * gw
        bias -= lr * gb
    return SoftmaxHead(classes, weights, bias)


def softmax_head_predict(head: SoftmaxHead, features):
    """Returns (predicted labels, probability rows summing to 1)."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != head.weights.shape[1]:
        raise InvalidInputError("feature layout does not match the trained head")
    probs = _softmax(x @ head.weights.T + head.bias)
    labels = [head.classes[i] for i in probs.argmax(axis=1)]
    return labels, probs


@dataclass(frozen=True)
class MetricsReport:
    classes: tuple
    confusion: np.ndarray  # rows = truth, columns = prediction
    weighted_accuracy: float
    ppv: dict
    sensitivity: dict
    macro_ppv: float
    macro_sensitivity: float
    support: dict
    zero_denominator_flags: tuple


def compute_metrics(predictions, labels) -> MetricsReport:
    """Balanced accuracy plus per-class PPV and sensitivity.

    Weighted accuracy is the mean per-class recall over classes with
    nonzero support; zero-denominator cells are reported as 0 and
    flagged.
    """
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels):
        raise InvalidInputError("predictions and labels must have equal length")
    if not labels:
        raise InvalidInputError("need at least one sample")
    classes = tuple(sorted(set(labels) | set(predictions)))
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for truth, pred in zip(labels, predictions):
        confusion[index[truth], index[pred]] += 1
    support = {c: int(confusion[i].sum()) for c, i in index.items()}
    flags = []
    ppv, sensitivity = {}, {}
    for c, i in index.items():
        tp = confusion[i, i]
        predicted = confusion[:, i].sum()
        if predicted:
            ppv[c] = float(tp / predicted)
        else:
            ppv[c] = 0.0
            flags.append(f"ppv:{c}")
        if support[c]:
            sensitivity[c] = float(tp / support[c])
        else:
            sensitivity[c] = 0.0
            flags.append(f"sensitivity:{c}")
    supported = [c for c in classes if support[c]]
    recalls = [sensitivity[c] for c in supported]
    return MetricsReport(
        classes,
        confusion,
        float(np.mean(recalls)),
        ppv,
        sensitivity,
        float(np.mean([ppv[c] for c in supported])),
        float(np.mean(recalls)),
        support,
        tuple(flags),
    )


@dataclass(frozen=True)
class ChannelMask:
    betti: bool = True
    features: bool = True
    latent: bool = True
    residual: bool = True

    def __post_init__(self):
        if not (self.betti or self.features or self.latent or self.residual):
            raise InvalidInputError("at least one channel must be enabled")

    def names(self):
        return tuple(
            name
            for name in ("betti", "features", "latent", "residual")
            if getattr(self, name)
        )


DEFAULT_MASKS = (
    ChannelMask(True, True, True, True),
    ChannelMask(True, False, False, False),
    ChannelMask(False, True, False, False),
    ChannelMask(False, False, True, True),
    ChannelMask(False, True, True, True),
    ChannelMask(True, False, True, True),
    ChannelMask(True, True, False, False),
)


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "detection"  # or "classification"
    bins: int = 32
    max_classes: int = 13
    ae_epochs: int = 30
    ae_seed: int = 0
    head_iters: int = 300
    head_lr: float = 2.0
    head_l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.task not in ("detection", "classification"):
            raise InvalidInputError("task must be 'detection' or 'classification'")


@dataclass(frozen=True)
class FoldReport:
    fold_index: int
    validation: MetricsReport
    test: MetricsReport
    fitted_patients: tuple  # patients any component was fitted on
    test_patients: tuple
    channel_dim: int
    channel_layout: dict


def _task_label(symbol, task):
    if task == "detection":
        return "normal" if symbol == NORMAL_SYMBOL else "abnormal"
    return symbol


def _select_windows(dataset, patients, task, class_set=None):
    keep = []
    for w in dataset:
        if w.patient_id not in patients:
            continue
        label = _task_label(w.label, task)
        if task == "classification":
            if w.label == NORMAL_SYMBOL:
                continue
            if class_set is not None and label not in class_set:
                continue
        keep.append((w, label))
    return keep


def _channel_layout(mask: ChannelMask, cfg: ExperimentConfig):
    lengths = {
        "betti": 2 * cfg.bins,
        "features": 87,
        "latent": 20,
        "residual": 1,
    }
    layout = {}
    offset = 0
    for name in mask.names():
        layout[name] = (offset, lengths[name])
        offset += lengths[name]
    return layout, offset


class _ChannelExtractor:
    """Per-fold feature pipeline; fitted strictly on train windows."""

    def __init__(self, mask, cfg, train_windows):
        self.mask = mask
        self.cfg = cfg
        self.layout, self.dim = _channel_layout(mask, cfg)
        data = np.array([w.samples for w in train_windows])
        self.pca = pca_fit(data) if mask.features else None
        self.ae = None
        if mask.latent or mask.residual:
            normal = data[[w.label == NORMAL_SYMBOL for w in train_windows]]
            if normal.shape[0] == 0:
                normal = data
            self.ae = ae_init(cfg.ae_seed)
            ae_train(
                self.ae,
                normal,
                TrainConfig(epochs=cfg.ae_epochs, seed=cfg.ae_seed),
            )

    def __call__(self, window):
        parts = []
        if self.mask.betti:
            sub, sup = betti_pair(Signal(window.samples, 1.0), self.cfg.bins)
            parts.append(sub.counts.astype(np.float64))
            parts.append(sup.counts.astype(np.float64))
        if self.mask.features:
            w = window.samples.size
            center = int(round(window.center_position * (w - 1)))
            rate = w / 2.0  # standardized windows span about 2 s of ECG
            vec, _ = feature_vector(window.samples, center, rate, self.pca)
            parts.append(vec)
        if self.mask.latent or self.mask.residual:
            latent, _, score = ae_channels(self.ae, window.samples)
            if self.mask.latent:
                parts.append(latent)
            if self.mask.residual:
                parts.append(np.array([score]))
        return np.concatenate(parts)


def _standardize_fit(matrix):
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


def run_experiment(dataset, plan: SplitPlan, mask: ChannelMask, cfg: ExperimentConfig):
    """Full protocol: per fold, fit on train patients only, report
    validation and test metrics; returns (fold reports, aggregate dict).
    """
    dataset = list(dataset)
    reports = []
    class_set = None
    if cfg.task == "classification":
        counts = {}
        for w in dataset:
            if w.label != NORMAL_SYMBOL:
                counts[w.label] = counts.get(w.label, 0) + 1
        ranked = sorted(counts, key=lambda c: (-counts[c], c))
        class_set = frozenset(ranked[: cfg.max_classes])
    for fold_index, (train_p, val_p, test_p) in enumerate(plan.folds):
        train = _select_windows(dataset, set(train_p), cfg.task, class_set)
        val = _select_windows(dataset, set(val_p), cfg.task, class_set)
        test = _select_windows(dataset, set(test_p), cfg.task, class_set)
        if cfg.task == "detection":
            balanced = balance_undersample(
                [_Labeled(w, label) for w, label in train], seed=cfg.seed
            )
            train = [(lw.window, lw.label) for lw in balanced]
        if not train or not val or not test:
            raise InvalidInputError(f"fold {fold_index} has an empty split")
        extractor = _ChannelExtractor(mask, cfg, [w for w, _ in train])
        x_train = np.array([extractor(w) for w, _ in train])
        mean, std = _standardize_fit(x_train)
        head = softmax_head_train(
            (x_train - mean) / std,
            [label for _, label in train],
            iters=cfg.head_iters,
            lr=cfg.head_lr,
            l2=cfg.head_l2,
            seed=cfg.seed,
        )

        def evaluate(split):
            x = np.array([extractor(w) for w, _ in split])
            preds, _ = softmax_head_predict(head, (x - mean) / std)
            return compute_metrics(preds, [label for _, label in split])

        reports.append(
            FoldReport(
                fold_index,
                evaluate(val),
                evaluate(test),
                tuple(sorted({w.patient_id for w, _ in train})),
                tuple(sorted(set(test_p))),
                extractor.dim,
                extractor.layout,
            )
        )
    accs = [r.test.weighted_accuracy for r in reports]
    aggregate = {
        "folds": len(reports),
        "mean_weighted_accuracy": float(np.mean(accs)),
        "std_weighted_accuracy": float(np.std(accs)),
        "channel_dim": reports[0].channel_dim if reports else 0,
    }
    return reports, aggregate


@dataclass(frozen=True)
class _Labeled:
    """Window wrapper giving balance_undersample the task-level label."""

    window: object
    label: str


def run_ablation_grid(dataset, plan, cfg, masks=DEFAULT_MASKS):
    """Table-shaped channel comparison: one aggregate row per mask."""
    rows = []
    for mask in masks:
        _, aggregate = run_experiment(dataset, plan, mask, cfg)
        rows.append(
            {
                "channels": "+".join(mask.names()),
                "dim": aggregate["channel_dim"],
                "mean_weighted_accuracy": aggregate["mean_weighted_accuracy"],
                "std_weighted_accuracy": aggregate["std_weighted_accuracy"],
            }
        )
    return rows


def leakage_audit(reports, plan: SplitPlan):
    """Check no fitted component saw a validation or test patient.

    Returns the list of violations (empty when clean).
    """
    violations = []
    for report, (train_p, val_p, test_p) in zip(reports, plan.folds):
        fitted = set(report.fitted_patients)
        if fitted & set(test_p):
            violations.append((report.fold_index, "test", fitted & set(test_p)))
        if fitted & set(val_p):
            violations.append((report.fold_index, "val", fitted & set(val_p)))
        if not fitted <= set(train_p):
            violations.append((report.fold_index, "train", fitted - set(train_p)))
    return violations
