"""Estimator-style facade over the design analysis pipeline.

``TaguchiAnalysis`` follows the familiar fit/get_params shape: construct
with hyperparameters, call ``fit(X, y)``, then read fitted attributes
(``anova_``, ``response_table_``, ``effects_``, ``ranking_``).  It exists
so the analysis core drops into tooling that expects that shape; the
simulator and CLI do not go through it.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .anova import anova
from .design import DesignMatrix, Factor, check_responses
from .exceptions import InvalidInputError
from .snr import SNR_METRICS, snr_vector
from .tables import effects, response_table

_ANOVA_SPACES = ("raw", "snr")


def _default_labels(n: int) -> list[str]:
    out = []
    for i in range(n):
        label = ""
        k = i
        while True:
            label = chr(ord("A") + k % 26) + label
            k = k // 26 - 1
            if k < 0:
                break
        out.append(label)
    return out


def design_from_level_values(X, labels=None, names=None) -> DesignMatrix:
    """Build a design from an ``(n_runs, n_factors)`` array of level values.

    Levels are inferred per column as the sorted distinct values.  This is
    the validation helper behind ``TaguchiAnalysis.fit`` and is usable on
    its own.
    """
    X = check_array(X, dtype=float, ensure_2d=True)
    n_factors = X.shape[1]
    labels = list(labels) if labels is not None else _default_labels(n_factors)
    if len(labels) != n_factors:
        raise InvalidInputError(f"{len(labels)} labels for {n_factors} factor columns")
    names = list(names) if names is not None else list(labels)
    if len(names) != n_factors:
        raise InvalidInputError(f"{len(names)} names for {n_factors} factor columns")
    factors = []
    for j in range(n_factors):
        seen = sorted(set(float(v) for v in X[:, j]))
        canonical = tuple(int(v) if v.is_integer() else v for v in seen)
        factors.append(Factor(label=labels[j], name=names[j], levels=canonical))
    rows = [
        tuple(int(v) if float(v).is_integer() else float(v) for v in row) for row in X
    ]
    return DesignMatrix.from_values(factors, rows)


class TaguchiAnalysis(BaseEstimator):
    """Rank design factors by their effect on a response.

    Parameters
    ----------
    snr_metric : {"smaller", "larger", "nominal"}, default="smaller"
        Quality characteristic for the SNR transform.
    anova_space : {"raw", "snr"}, default="raw"
        Run the variance decomposition on per-point mean responses (raw)
        or on the per-point SNR values.
    alpha : float, default=0.05
        Significance threshold applied to F-test p-values.
    factor_labels, factor_names : sequence of str, optional
        Column labels/names used when ``X`` is a plain array.

    Attributes
    ----------
    design_ : DesignMatrix
    snr_ : SnrVector
    anova_ : AnovaTable
    response_table_ : ResponseTable
    effects_ : EffectsData
    ranking_ : tuple of str, factor labels ordered by response-table rank
    significant_ : tuple of str, labels with p <= alpha (empty when the
        decomposition is degenerate)

    Examples
    --------
    >>> est = TaguchiAnalysis(snr_metric="smaller")
    >>> est.fit(X, y)                        # doctest: +SKIP
    >>> est.ranking_[0]                      # doctest: +SKIP
    'C'
    """

    def __init__(
        self,
        snr_metric="smaller",
        anova_space="raw",
        alpha=0.05,
        factor_labels=None,
        factor_names=None,
    ):
        self.snr_metric = snr_metric
        self.anova_space = anova_space
        self.alpha = alpha
        self.factor_labels = factor_labels
        self.factor_names = factor_names

    def fit(self, X, y):
        """Analyze responses ``y`` observed on design ``X``.

        ``X`` is a DesignMatrix or an ``(n_runs, n_factors)`` array of
        level values; ``y`` is ``(n_runs,)`` or ``(n_runs, r)``.
        """
        if self.snr_metric not in SNR_METRICS:
            raise InvalidInputError(
                f"snr_metric={self.snr_metric!r} not in {sorted(SNR_METRICS)}"
            )
        if self.anova_space not in _ANOVA_SPACES:
            raise InvalidInputError(
                f"anova_space={self.anova_space!r} not in {_ANOVA_SPACES}"
            )
        if not 0.0 < float(self.alpha) < 1.0:
            raise InvalidInputError(f"alpha={self.alpha!r} must lie in (0, 1)")

        if isinstance(X, DesignMatrix):
            design = X
        else:
            design = design_from_level_values(X, self.factor_labels, self.factor_names)
        y = check_responses(design, y)

        self.design_ = design
        self.responses_ = y
        self.mean_responses_ = y.mean(axis=1)
        self.snr_ = snr_vector(y, self.snr_metric)
        anova_input = (
            self.mean_responses_ if self.anova_space == "raw" else self.snr_.as_array()
        )
        self.anova_ = anova(design, anova_input)
        self.response_table_ = response_table(design, self.snr_)
        self.effects_ = effects(design, self.mean_responses_, self.snr_)
        self.ranking_ = tuple(f.label for f in self.response_table_.by_rank)
        self.significant_ = tuple(
            r.label
            for r in self.anova_.rows
            if r.p is not None and r.p <= float(self.alpha)
        )
        self.n_features_in_ = design.n_factors
        return self

    def _check_fitted(self):
        if not hasattr(self, "anova_"):
            raise NotFittedError("this TaguchiAnalysis instance is not fitted yet")

    def best_levels(self) -> dict:
        """Level value with the highest mean SNR per factor (fitted only)."""
        self._check_fitted()
        out = {}
        for fr in self.response_table_.factors:
            best = int(np.argmax(fr.level_means))
            out[fr.label] = fr.level_values[best]
        return out

    def summary(self) -> str:
        """Joint text rendering of the fitted ANOVA and response table."""
        self._check_fitted()
        return self.anova_.to_text() + "\n\n" + self.response_table_.to_text()
