"""LDA classifier, cross-validation harnesses and the group-comparison test.

Three evaluation schemes mirror the study design:

* ``cv_gesture``: within-subject gesture recognition over a six-gesture
  subset, leave-one-repetition-out.
* ``cv_subject_group_signature``: is a subject intact or amputee, judged from
  the whole signature vector, leave-one-subject-out.
* ``cv_subject_group_window``: the same question from a single 200 ms window,
  leave-one-subject-out, scored per held-out subject.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

from .features import FeatureTensor
from .signatures import SubjectSignature, signature_matrix


@dataclass
class LdaModel:
    classes: np.ndarray
    means: np.ndarray        # [k, dim]
    priors: np.ndarray       # [k]
    covariance: np.ndarray   # regularized pooled covariance [dim, dim]
    gamma: float
    weights: np.ndarray = field(repr=False, default=None)  # [dim, k]
    biases: np.ndarray = field(repr=False, default=None)   # [k]


def lda_fit(x: np.ndarray, labels: np.ndarray, gamma: float = 1e-3) -> LdaModel:
    """Fit LDA with a shrunken pooled covariance.

    ``S_gamma = (1 - gamma) * S + gamma * (tr(S) / dim) * I`` keeps the
    pooled covariance invertible when folds are small relative to the
    feature dimension; priors are the empirical class frequencies.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or len(labels) != x.shape[0]:
        raise ValueError("x must be [n, dim] with one label per row")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    n, dim = x.shape
    classes, inverse = np.unique(labels, return_inverse=True)
    k = len(classes)
    if k < 2:
        raise ValueError(
            f"LDA needs >= 2 classes in the training set, got {k}"
        )

    means = np.empty((k, dim))
    scatter = np.zeros((dim, dim))
    counts = np.empty(k)
    for c in range(k):
        rows = x[inverse == c]
        counts[c] = len(rows)
        means[c] = rows.mean(axis=0)
        centered = rows - means[c]
        scatter += centered.T @ centered
    pooled = scatter / (n - k) if n > k else scatter
    covariance = (1.0 - gamma) * pooled
    covariance[np.diag_indices(dim)] += gamma * (np.trace(pooled) / dim)
    priors = counts / n

    try:
        chol = scipy.linalg.cho_factor(covariance, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(
            "pooled covariance is singular; refit with shrinkage gamma > 0 "
            "(e.g. 1e-3)"
        ) from exc
    solved = scipy.linalg.cho_solve(chol, means.T)  # [dim, k] = S^-1 M^T
    biases = -0.5 * np.einsum("ck,kc->c", means, solved) + np.log(priors)
    return LdaModel(classes=classes, means=means, priors=priors,
                    covariance=covariance, gamma=gamma,
                    weights=solved, biases=biases)


def lda_scores(model: LdaModel, x: np.ndarray) -> np.ndarray:
    """Per-class discriminant scores ``x' S^-1 m_c - m_c' S^-1 m_c / 2 + log pi_c``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.means.shape[1]:
        raise ValueError(
            f"dimension mismatch: data has {x.shape[1]}, model expects "
            f"{model.means.shape[1]}"
        )
    return x @ model.weights + model.biases


def lda_predict(model: LdaModel, x: np.ndarray,
                return_scores: bool = False):
    """Most likely class per row; ties resolve to the first class in order."""
    scores = lda_scores(model, x)
    labels = model.classes[np.argmax(scores, axis=1)]
    if return_scores:
        return labels, scores
    return labels


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_ttest(a: np.ndarray, b: np.ndarray) -> WelchResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs >= 2 observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = a.size, b.size
    se2 = va / na + vb / nb
    diff = a.mean() - b.mean()
    if se2 == 0.0:
        if diff == 0.0:
            return WelchResult(t=0.0, df=float(na + nb - 2), p=1.0)
        return WelchResult(t=float(np.sign(diff)) * np.inf,
                           df=float(na + nb - 2), p=0.0)
    t = diff / np.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * float(stats.t.sf(abs(t), df))
    return WelchResult(t=float(t), df=float(df), p=p)


@dataclass
class CvReport:
    """Per-fold and aggregate results for one cross-validation run."""

    scheme: str
    classes: list
    fold_ids: list
    fold_accuracies: np.ndarray
    fold_confusions: np.ndarray  # [n_folds, k, k], rows = true class
    chance: float

    def __post_init__(self) -> None:
        acc = np.asarray(self.fold_accuracies, dtype=np.float64)
        if np.any(acc < 0) or np.any(acc > 1):
            raise ValueError("fold accuracies must lie in [0, 1]")
        self.fold_accuracies = acc

    @property
    def mean_accuracy(self) -> float:
        return float(self.fold_accuracies.mean())

    @property
    def std_accuracy(self) -> float:
        if len(self.fold_accuracies) < 2:
            return 0.0
        return float(self.fold_accuracies.std(ddof=1))

    @property
    def min_accuracy(self) -> float:
        return float(self.fold_accuracies.min())

    @property
    def max_accuracy(self) -> float:
        return float(self.fold_accuracies.max())

    @property
    def confusion(self) -> np.ndarray:
        return self.fold_confusions.sum(axis=0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "scheme": self.scheme,
            "fold": self.fold_ids,
            "accuracy": self.fold_accuracies,
            "n_test": self.fold_confusions.sum(axis=(1, 2)).astype(int),
        })

    def summary(self) -> str:
        return (
            f"{self.scheme}: mean {100 * self.mean_accuracy:.2f}% "
            f"+/- {100 * self.std_accuracy:.2f}% "
            f"(min {100 * self.min_accuracy:.2f}%, "
            f"max {100 * self.max_accuracy:.2f}%, "
            f"chance {100 * self.chance:.2f}%) over {len(self.fold_ids)} folds"
        )


def _confusion(classes: np.ndarray, true: np.ndarray,
               predicted: np.ndarray) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true, predicted):
        out[index[t], index[p]] += 1
    return out


def _majority_fraction(values) -> float:
    values = list(values)
    counts = pd.Series(values).value_counts()
    return float(counts.iloc[0] / len(values))


def cv_gesture(tensor: FeatureTensor, gesture_ids: list[int],
               gamma: float = 1e-3, vote: bool = False) -> dict[str, CvReport]:
    """Within-subject leave-one-repetition-out gesture recognition.

    Returns one report per subject.  With ``vote=True`` each test repetition
    is scored by the majority label over its windows instead of per window.
    """
    gesture_ids = sorted(set(int(g) for g in gesture_ids))
    if len(gesture_ids) < 2:
        raise ValueError("gesture CV needs >= 2 gestures")
    x, meta = tensor.window_table()
    selected = meta["gesture"].isin(gesture_ids).to_numpy()
    x, meta = x[selected], meta[selected].reset_index(drop=True)

    reports: dict[str, CvReport] = {}
    for subject in tensor.subjects():
        mask = (meta["subject"] == subject).to_numpy()
        sub_x = x[mask]
        sub_meta = meta[mask]
        reps = sorted(sub_meta["repetition"].unique())
        if len(reps) < 2:
            raise ValueError(
                f"subject {subject}: needs >= 2 repetitions for "
                f"leave-one-repetition-out"
            )
        for gid in gesture_ids:
            have = set(sub_meta.loc[sub_meta["gesture"] == gid, "repetition"])
            missing = [r for r in reps if r not in have]
            if missing:
                raise ValueError(
                    f"subject {subject}: gesture {gid} missing "
                    f"repetitions {missing}"
                )

        classes = np.array(gesture_ids)
        fold_acc, fold_conf = [], []
        gestures = sub_meta["gesture"].to_numpy()
        repetitions = sub_meta["repetition"].to_numpy()
        for rep in reps:
            test = repetitions == rep
            model = lda_fit(sub_x[~test], gestures[~test], gamma=gamma)
            if vote:
                true_list, pred_list = [], []
                for gid in gesture_ids:
                    seg_mask = test & (gestures == gid)
                    votes = lda_predict(model, sub_x[seg_mask])
                    winner = pd.Series(votes).mode().iloc[0]
                    true_list.append(gid)
                    pred_list.append(winner)
                true, pred = np.array(true_list), np.array(pred_list)
            else:
                true = gestures[test]
                pred = lda_predict(model, sub_x[test])
            fold_acc.append(float(np.mean(pred == true)))
            fold_conf.append(_confusion(classes, true, pred))

        reports[subject] = CvReport(
            scheme="gesture-loro",
            classes=list(classes),
            fold_ids=[int(r) for r in reps],
            fold_accuracies=np.array(fold_acc),
            fold_confusions=np.array(fold_conf),
            chance=_majority_fraction(gestures),
        )
    return reports


def cv_subject_group_signature(signatures: list[SubjectSignature],
                               groups: dict[str, str],
                               gamma: float = 1e-3) -> CvReport:
    """Leave-one-subject-out group recognition from whole signatures."""
    ids, x = signature_matrix(signatures)
    y = np.array([groups[s] for s in ids])
    _check_group_sizes(y)
    classes = np.unique(y)

    fold_acc, fold_conf = [], []
    for i, subject in enumerate(ids):
        train = np.ones(len(ids), dtype=bool)
        train[i] = False
        model = lda_fit(x[train], y[train], gamma=gamma)
        pred = lda_predict(model, x[i])
        fold_acc.append(float(pred[0] == y[i]))
        fold_conf.append(_confusion(classes, [y[i]], [pred[0]]))

    return CvReport(
        scheme="subject-group-signature-loso",
        classes=list(classes),
        fold_ids=list(ids),
        fold_accuracies=np.array(fold_acc),
        fold_confusions=np.array(fold_conf),
        chance=_majority_fraction(y),
    )


def cv_subject_group_window(tensor: FeatureTensor, groups: dict[str, str],
                            gamma: float = 1e-3) -> CvReport:
    """Leave-one-subject-out group recognition from single windows.

    Each fold trains on every window of the other subjects and scores the
    fraction of the held-out subject's windows assigned to the correct
    group.  Chance is the majority-group fraction of subjects.
    """
    x, meta = tensor.window_table()
    subjects = tensor.subjects()
    subject_groups = np.array([groups[s] for s in subjects])
    _check_group_sizes(subject_groups)
    classes = np.unique(subject_groups)
    y = np.array([groups[s] for s in meta["subject"]])
    subject_col = meta["subject"].to_numpy()

    fold_acc, fold_conf = [], []
    for subject, true_group in zip(subjects, subject_groups):
        test = subject_col == subject
        model = lda_fit(x[~test], y[~test], gamma=gamma)
        pred = lda_predict(model, x[test])
        fold_acc.append(float(np.mean(pred == true_group)))
        fold_conf.append(_confusion(classes, y[test], pred))

    return CvReport(
        scheme="subject-group-window-loso",
        classes=list(classes),
        fold_ids=list(subjects),
        fold_accuracies=np.array(fold_acc),
        fold_confusions=np.array(fold_conf),
        chance=_majority_fraction(subject_groups),
    )


def _check_group_sizes(y: np.ndarray) -> None:
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("need >= 2 groups")
    small = [str(c) for c, n in zip(classes, counts) if n < 2]
    if small:
        raise ValueError(
            f"groups {small} have fewer than 2 subjects; "
            f"leave-one-subject-out is undefined"
        )


def group_accuracy_comparison(reports: dict[str, CvReport],
                              groups: dict[str, str]) -> pd.DataFrame:
    """Per-subject mean gesture accuracies with group labels, for Fig-1 style
    box statistics and the Welch test."""
    rows = [(s, groups.get(s, ""), r.mean_accuracy)
            for s, r in reports.items()]
    return pd.DataFrame(rows, columns=["subject", "group", "accuracy"])
