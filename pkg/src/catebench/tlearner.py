"""One-variable T-learner: a response forest per arm over the covariate.

The treated forest mu1 is fit only on treated records, the control forest
mu0 only on controls; their difference at a covariate value is the effect
estimate.  ATE averages fitted differences over every record, while ATT and
ATU mix the observed outcome of one arm with the other arm's prediction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Cohort
from .errors import EmptyArm
from .forest import RegressionForest, TreeParams, fit_forest


def arm_seeds(seed: int) -> tuple[int, int]:
    """Forest seeds (control, treated) derived from one run seed.

    Both arms and both learner flavors use the run seed itself: a control
    fit that sees the same rows reproduces tree for tree regardless of how
    many input columns it was given, and identical arms produce identical
    forests even with bootstrapping on.
    """
    return seed, seed


@dataclass(frozen=True)
class TLearnerModel:
    mu1: RegressionForest
    mu0: RegressionForest
    params: TreeParams
    n_trees: int
    seed: int
    seed_mu1: int
    seed_mu0: int
    n_treated: int
    n_control: int


def fit_t_learner(
    cohort: Cohort,
    params: TreeParams | None = None,
    seed: int = 0,
    n_trees: int = 100,
    *,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> TLearnerModel:
    """Fit mu1 on treated (x1, y) pairs and mu0 on control pairs."""
    params = params or TreeParams()
    if not cohort.r1:
        raise EmptyArm("R1")
    if not cohort.r0:
        raise EmptyArm("R0")
    seed_mu0, seed_mu1 = arm_seeds(seed)
    treated_rows = [((cohort.records[i].x1,), cohort.records[i].y) for i in cohort.r1]
    control_rows = [((cohort.records[j].x1,), cohort.records[j].y) for j in cohort.r0]
    mu1 = fit_forest(treated_rows, params, n_trees, seed_mu1, bootstrap=bootstrap, n_jobs=n_jobs)
    mu0 = fit_forest(control_rows, params, n_trees, seed_mu0, bootstrap=bootstrap, n_jobs=n_jobs)
    return TLearnerModel(
        mu1, mu0, params, n_trees, seed, seed_mu1, seed_mu0, len(cohort.r1), len(cohort.r0)
    )


def cate_tau(model: TLearnerModel, x1) -> float:
    """Effect estimate at covariate value x1: mu1(x1) - mu0(x1).

    The fitted responses depend on x1 only, so this is the same number for
    every student in the bin.
    """
    return model.mu1.predict((float(x1),)) - model.mu0.predict((float(x1),))


def _column(values) -> np.ndarray:
    return np.asarray(values, dtype=float)[:, np.newaxis]


def ate(model: TLearnerModel, cohort: Cohort) -> float:
    """Mean fitted difference mu1(x1_k) - mu0(x1_k) over all records."""
    X = _column(cohort.x1_values())
    return float(np.mean(model.mu1.predict_many(X) - model.mu0.predict_many(X)))


def att(model: TLearnerModel, cohort: Cohort) -> float:
    """Mean over the treated of observed outcome minus the control prediction."""
    if not cohort.r1:
        raise EmptyArm("R1")
    X = _column([cohort.records[i].x1 for i in cohort.r1])
    y = np.asarray([cohort.records[i].y for i in cohort.r1], dtype=float)
    return float(np.mean(y - model.mu0.predict_many(X)))


def atu(model: TLearnerModel, cohort: Cohort) -> float:
    """Mean over controls of the treated prediction minus the observed outcome."""
    if not cohort.r0:
        raise EmptyArm("R0")
    X = _column([cohort.records[j].x1 for j in cohort.r0])
    y = np.asarray([cohort.records[j].y for j in cohort.r0], dtype=float)
    return float(np.mean(model.mu1.predict_many(X) - y))


@dataclass(frozen=True)
class EffectRow:
    x1: float
    mu0: float
    mu1: float
    tau: float


@dataclass(frozen=True)
class EffectReport:
    """Per-bin response and effect estimates plus the scalar effect summaries."""

    ate: float
    att: float
    atu: float
    rows: tuple
    n: int
    n_treated: int
    n_control: int
    seed: int
    params: TreeParams
    n_trees: int

    def summary_dict(self) -> dict:
        return {
            "ate": self.ate,
            "att": self.att,
            "atu": self.atu,
            "n": self.n,
            "n_treated": self.n_treated,
            "n_control": self.n_control,
            "seed": self.seed,
            "params": dict(self.params.to_dict(), n_trees=self.n_trees),
        }

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x1", "mu0", "mu1", "tau"])
            for row in self.rows:
                writer.writerow([repr(row.x1), repr(row.mu0), repr(row.mu1), repr(row.tau)])

    def to_json(self, path) -> None:
        payload = self.summary_dict()
        payload["table"] = [
            {"x1": r.x1, "mu0": r.mu0, "mu1": r.mu1, "tau": r.tau} for r in self.rows
        ]
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def effect_report(model: TLearnerModel, cohort: Cohort) -> EffectReport:
    """One row per covariate bin (ascending) with mu0, mu1, and their difference."""
    bins = sorted(cohort.groups)
    Xb = _column([float(b) for b in bins])
    m0 = model.mu0.predict_many(Xb)
    m1 = model.mu1.predict_many(Xb)
    rows = tuple(
        EffectRow(float(b), float(m0[i]), float(m1[i]), float(m1[i] - m0[i]))
        for i, b in enumerate(bins)
    )
    return EffectReport(
        ate(model, cohort),
        att(model, cohort),
        atu(model, cohort),
        rows,
        cohort.n,
        len(cohort.r1),
        len(cohort.r0),
        model.seed,
        model.params,
        model.n_trees,
    )
