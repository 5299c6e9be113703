"""Ordinary least squares via the normal equations, and the diagnostic that
regresses per-student effect estimates on (covariate, session count)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .dataset import Cohort, bin_value
from .errors import RankDeficient, Underdetermined
from .tlearner import TLearnerModel

# condition-number regimes for the design matrix (with constant column):
# Cholesky on the normal equations while well conditioned, column-pivoted
# least squares when nearing singularity, refusal beyond 1e12
_NEAR_SINGULAR_COND = 1e6
_RANK_DEFICIENT_COND = 1e12


@dataclass(frozen=True)
class OlsFit:
    coefficients: tuple
    intercept: float
    r_squared: float
    n: int

    def to_json_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n": self.n,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )


def ols_fit(design, targets) -> OlsFit:
    """Least-squares fit of targets on the design columns plus a constant.

    r_squared is 1 - SSE/SST, with the convention that a constant target
    (SST = 0) fits perfectly.
    """
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    y = np.asarray(targets, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("targets must be one value per design row")
    if n <= p + 1:
        raise Underdetermined(f"need more than {p + 1} rows to fit {p} features, got {n}")

    A = np.column_stack([np.ones(n), X])
    singular = np.linalg.svd(A, compute_uv=False)
    cond = np.inf if singular[-1] == 0.0 else float(singular[0] / singular[-1])
    if cond > _RANK_DEFICIENT_COND:
        raise RankDeficient(
            f"design matrix condition number {cond:.3g} exceeds {_RANK_DEFICIENT_COND:g}"
        )
    if cond <= _NEAR_SINGULAR_COND:
        try:
            gram = A.T @ A
            beta = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), A.T @ y)
        except np.linalg.LinAlgError:
            beta = scipy.linalg.lstsq(A, y, lapack_driver="gelsy")[0]
    else:
        beta = scipy.linalg.lstsq(A, y, lapack_driver="gelsy")[0]

    resid = y - A @ beta
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0.0 else 1.0 - float(resid @ resid) / sst
    r2 = min(1.0, max(0.0, r2))
    return OlsFit(tuple(float(b) for b in beta[1:]), float(beta[0]), r2, n)


@dataclass(frozen=True)
class ScatterExport:
    """Per-student (x2, effect estimate, covariate bin) rows."""

    rows: tuple

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x2", "tau", "x1_bin"])
            for x2, tau, x1_bin in self.rows:
                writer.writerow([x2, repr(float(tau)), repr(float(x1_bin))])


def tau_dose_regression(cohort: Cohort, model: TLearnerModel):
    """Regress each student's effect estimate on (x1, x2) over all records.

    Returns (OlsFit, ScatterExport).  The effect estimate is the fitted
    one-variable difference at the student's observed covariate; a positive
    x2 coefficient says students with more sessions sit where the estimated
    effect is larger.  Raises RankDeficient when x2 never varies (nobody
    attended, for instance), which makes the diagnostic inapplicable.
    """
    X1 = cohort.x1_values()[:, np.newaxis]
    tau = model.mu1.predict_many(X1) - model.mu0.predict_many(X1)
    design = np.column_stack([X1[:, 0], cohort.x2_values()])
    fit = ols_fit(design, tau)
    rows = tuple(
        (rec.x2, float(tau[k]), float(bin_value(rec.x1, cohort.precision)))
        for k, rec in enumerate(cohort.records)
    )
    return fit, ScatterExport(rows)
