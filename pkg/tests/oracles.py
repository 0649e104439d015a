"""Independent brute-force references used by the test suite.

Kept deliberately naive: threshold sweeps with explicit component
labelling, O(n^2)-ish, no shared code with the library implementations.
"""

import numpy as np


def barcode_oracle(samples):
    """Sublevel 0-dim persistence by explicit threshold sweep.

    Sweeps alpha over the sorted sample values, maintains a component
    label per active vertex (index adjacency), relabels the whole younger
    component on every merge.  Ties between equal-birth components are
    broken by the smaller birth index surviving.  Returns the sorted list
    of (birth, death) pairs including the essential (min, max) interval,
    with zero-persistence pairs dropped.
    """
    x = np.asarray(samples, dtype=float)
    n = len(x)
    labels = np.full(n, -1)
    birth_value = {}
    birth_index = {}
    pairs = []
    next_label = 0
    for alpha in np.unique(x):
        active = x <= alpha
        for i in np.nonzero(x == alpha)[0]:
            left = labels[i - 1] if i > 0 and active[i - 1] and labels[i - 1] >= 0 else -1
            right = (
                labels[i + 1]
                if i < n - 1 and active[i + 1] and labels[i + 1] >= 0
                else -1
            )
            if left < 0 and right < 0:
                labels[i] = next_label
                birth_value[next_label] = alpha
                birth_index[next_label] = i
                next_label += 1
            elif left >= 0 and right >= 0 and left != right:
                key_l = (birth_value[left], birth_index[left])
                key_r = (birth_value[right], birth_index[right])
                young, old = (right, left) if key_l < key_r else (left, right)
                if birth_value[young] != alpha:
                    pairs.append((birth_value[young], alpha))
                labels[labels == young] = old
                labels[i] = old
            else:
                labels[i] = max(left, right)
    pairs.append((float(x.min()), float(x.max())))
    return sorted(pairs)


def component_count(samples, alpha):
    """Number of connected components of {i : samples[i] <= alpha}."""
    active = np.asarray(samples) <= alpha
    return int(np.sum(active[1:] & ~active[:-1]) + active[0])


def confusion_metrics_oracle(labels, predictions, classes):
    """Naive per-class confusion tallies and derived metrics."""
    recalls, ppvs = [], []
    for c in classes:
        tp = sum(1 for t, p in zip(labels, predictions) if t == c and p == c)
        fn = sum(1 for t, p in zip(labels, predictions) if t == c and p != c)
        fp = sum(1 for t, p in zip(labels, predictions) if t != c and p == c)
        support = tp + fn
        if support:
            recalls.append(tp / support)
        ppvs.append(tp / (tp + fp) if tp + fp else 0.0)
    weighted_accuracy = float(np.mean(recalls)) if recalls else 0.0
    return weighted_accuracy, ppvs
