"""ATE estimators, the efficient influence function, and remainder diagnostics.

Four estimators share the :class:`EstimateRecord` result type:

* ``sat`` -- stratum-weighted difference of treated/control means.
* ``imp`` -- imputation: unobserved potential outcomes replaced by their
  cross-fitted regression values, then averaged.
* ``aipw_infeasible`` -- augmented inverse-probability weighting with the true
  conditional means (an oracle benchmark).
* ``aipw_feasible`` -- AIPW with cross-fitted regression values and either the
  known target proportions or sample treatment shares.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import ExperimentFrame
from .crossfit import FitMatrix
from .population import PopulationSpec
from .strata import TargetProportions

__all__ = [
    "SAT",
    "IMP",
    "AIPW_INFEASIBLE",
    "AIPW_FEASIBLE",
    "ESTIMATOR_IDS",
    "TRUE_PI",
    "SAMPLE_PROPORTIONS",
    "PROPENSITY_MODES",
    "EstimateRecord",
    "RemainderDecomposition",
    "DegeneratePropensityError",
    "eif",
    "est_sat",
    "est_imp",
    "est_aipw_infeasible",
    "est_aipw_feasible",
    "remainder_decomposition",
]

SAT = "sat"
IMP = "imp"
AIPW_INFEASIBLE = "aipw_infeasible"
AIPW_FEASIBLE = "aipw_feasible"
ESTIMATOR_IDS = (AIPW_INFEASIBLE, AIPW_FEASIBLE, SAT, IMP)

TRUE_PI = "true_pi"
SAMPLE_PROPORTIONS = "sample_proportions"
PROPENSITY_MODES = (TRUE_PI, SAMPLE_PROPORTIONS)


class DegeneratePropensityError(ValueError):
    """Sample treatment share is 0 or 1 in some stratum, so AIPW is undefined."""


@dataclass(frozen=True)
class EstimateRecord:
    """One estimator value on one frame, with degenerate-cell flags."""

    estimator: str
    value: float
    n: int
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def degenerate(self) -> bool:
        return bool(self.flags)


def eif(y, a, pi, m0, m1, beta):
    """Efficient influence function at outcome ``y``, arm ``a``, propensity ``pi``.

    ``a/pi * (y - m1) - (1-a)/(1-pi) * (y - m0) + (m1 - m0 - beta)``;
    broadcasts over array inputs.  Mean zero with the true conditional means
    and the true ATE, and its variance is then the efficiency bound.
    """
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise ValueError("propensity must lie strictly in (0, 1)")
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    out = a / pi * (y - m1) - (1.0 - a) / (1.0 - pi) * (y - m0) + (m1 - m0 - beta)
    return float(out) if out.ndim == 0 else out


def _cell_stats(frame: ExperimentFrame):
    """Per-stratum sizes and per-(arm, stratum) counts and outcome sums."""
    labels, a, y = frame.labels, frame.assignments, frame.observed_y
    num = int(labels.max())
    n_s = np.bincount(labels, minlength=num + 1)[1:]
    n_as = np.stack([np.bincount(labels[a == arm], minlength=num + 1)[1:] for arm in (0, 1)])
    y_as = np.stack([
        np.bincount(labels[a == arm], weights=y[a == arm], minlength=num + 1)[1:]
        for arm in (0, 1)
    ])
    return n_s, n_as, y_as


def est_sat(frame: ExperimentFrame) -> EstimateRecord:
    """Stratum-size-weighted difference in treated and control means.

    A stratum cell with no units in one arm contributes a zero mean and is
    flagged rather than raising, since the estimator is otherwise well defined.
    """
    n_s, n_as, y_as = _cell_stats(frame)
    means = np.divide(y_as, n_as, out=np.zeros_like(y_as), where=n_as > 0)
    value = float(np.sum(n_s / frame.n * (means[1] - means[0])))
    flags = tuple(
        f"empty_cell:a={arm},s={s + 1}"
        for arm in (0, 1)
        for s in range(n_s.size)
        if n_s[s] > 0 and n_as[arm, s] == 0
    )
    return EstimateRecord(estimator=SAT, value=value, n=frame.n, flags=flags)


def _check_fits(frame: ExperimentFrame, fits: FitMatrix) -> None:
    if fits.n != frame.n:
        raise ValueError("fit matrix length does not match frame")


def est_imp(frame: ExperimentFrame, fits: FitMatrix) -> EstimateRecord:
    """Imputation estimator: fill in each missing potential outcome from ``fits``."""
    _check_fits(frame, fits)
    a, y = frame.assignments, frame.observed_y
    treated_part = np.mean(y * a + (1 - a) * fits.col(1))
    control_part = np.mean((1 - a) * y + a * fits.col(0))
    return EstimateRecord(estimator=IMP, value=float(treated_part - control_part), n=frame.n)


def _aipw_value(y, a, pi_unit, m0, m1) -> float:
    term1 = np.mean(a * (y - m1) / pi_unit)
    term2 = np.mean((1 - a) * (y - m0) / (1.0 - pi_unit))
    term3 = np.mean(m1 - m0)
    return float(term1 - term2 + term3)


def est_aipw_infeasible(frame: ExperimentFrame, spec: PopulationSpec,
                        pi: TargetProportions) -> EstimateRecord:
    """AIPW with the true conditional means and target proportions.

    Not computable in practice; serves as the efficiency benchmark the
    feasible estimator is compared against.
    """
    pi_unit = pi.by_unit(frame.labels)
    m0 = spec.mean(0, frame.z)
    m1 = spec.mean(1, frame.z)
    value = _aipw_value(frame.observed_y, frame.assignments, pi_unit, m0, m1)
    return EstimateRecord(estimator=AIPW_INFEASIBLE, value=value, n=frame.n)


def _propensity_by_unit(frame: ExperimentFrame, pi: TargetProportions, mode: str) -> np.ndarray:
    if mode == TRUE_PI:
        return pi.by_unit(frame.labels)
    if mode == SAMPLE_PROPORTIONS:
        n_s, n_as, _ = _cell_stats(frame)
        present = n_s > 0
        bad = present & ((n_as[1] == 0) | (n_as[1] == n_s))
        if bad.any():
            s = int(np.flatnonzero(bad)[0]) + 1
            raise DegeneratePropensityError(
                f"stratum {s} has sample treatment share in {{0, 1}}; "
                "AIPW with sample proportions is undefined"
            )
        share = np.divide(n_as[1], n_s, out=np.full(n_s.shape, 0.5), where=present)
        return share[frame.labels - 1]
    raise ValueError(f"unknown propensity mode {mode!r}; expected one of {PROPENSITY_MODES}")


def est_aipw_feasible(frame: ExperimentFrame, fits: FitMatrix, pi: TargetProportions,
                      mode: str = TRUE_PI) -> EstimateRecord:
    """AIPW with cross-fitted regression values and propensities per ``mode``."""
    _check_fits(frame, fits)
    pi_unit = _propensity_by_unit(frame, pi, mode)
    value = _aipw_value(frame.observed_y, frame.assignments, pi_unit, fits.col(0), fits.col(1))
    return EstimateRecord(estimator=AIPW_FEASIBLE, value=value, n=frame.n)


@dataclass(frozen=True)
class RemainderDecomposition:
    """Remainder terms separating the feasible and infeasible AIPW values.

    ``r1``/``r0`` weight the arm-wise regression errors by centered treatment
    indicators; ``r1_tilde``/``r0_tilde`` capture the estimated-versus-true
    inverse propensity gap.  The implemented terms satisfy

        sqrt(n) * (feasible - infeasible) = (r0 - r1) + (r1_tilde - r0_tilde)

    exactly, and ``identity_residual`` is the numerical residual of that
    identity (zero up to rounding).
    """

    r1: float
    r0: float
    r1_tilde: float
    r0_tilde: float
    identity_residual: float


def remainder_decomposition(frame: ExperimentFrame, fits: FitMatrix, spec: PopulationSpec,
                            pi: TargetProportions, mode: str = TRUE_PI) -> RemainderDecomposition:
    """Compute the remainder terms and verify their identity on this frame."""
    _check_fits(frame, fits)
    a = frame.assignments
    y = frame.observed_y
    root_n = np.sqrt(frame.n)
    pi_hat = _propensity_by_unit(frame, pi, mode)
    pi_true = pi.by_unit(frame.labels)
    m_star = {arm: spec.mean(arm, frame.z) for arm in (0, 1)}

    r = {}
    r_tilde = {}
    for arm in (0, 1):
        ind = (a == arm).astype(float)
        p_hat_arm = pi_hat if arm == 1 else 1.0 - pi_hat
        p_true_arm = pi_true if arm == 1 else 1.0 - pi_true
        fit_err = fits.col(arm) - m_star[arm]
        r[arm] = float(np.sum((ind - p_hat_arm) / p_hat_arm * fit_err) / root_n)
        r_tilde[arm] = float(np.sum((1.0 / p_hat_arm - 1.0 / p_true_arm) * ind * (y - m_star[arm])) / root_n)

    feasible = est_aipw_feasible(frame, fits, pi, mode).value
    infeasible = est_aipw_infeasible(frame, spec, pi).value
    residual = root_n * (feasible - infeasible) - ((r[0] - r[1]) + (r_tilde[1] - r_tilde[0]))
    return RemainderDecomposition(
        r1=r[1], r0=r[0], r1_tilde=r_tilde[1], r0_tilde=r_tilde[0],
        identity_residual=float(residual),
    )
