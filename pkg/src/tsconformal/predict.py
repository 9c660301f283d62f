"""Prediction interval for the next point of a user-supplied (x, y) history."""

from __future__ import annotations

import csv
import io
import math
from typing import Mapping

import numpy as np

from . import bounds as B
from .conformal import calibrate_pretrained, calibrate_split, interval_from_rule
from .processes import REGRESSION_FUNCTIONS, TimeSeries
from .scoring import LeastSquaresAR, residual_score_pretrained


class MalformedCSVError(ValueError):
    pass


class NonNumericCellError(ValueError):
    pass


class InsufficientHistoryError(ValueError):
    pass


def read_history_csv(text: str) -> tuple[TimeSeries, float]:
    """Parse ``x,y`` rows; the last row supplies the query covariate and its y may be blank."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise MalformedCSVError("malformed CSV: empty input")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["x", "y"]:
        raise MalformedCSVError(f"malformed CSV: header must be 'x,y', got {','.join(rows[0])!r}")
    body = rows[1:]
    if not body:
        raise InsufficientHistoryError("calibration block too short: no data rows")
    xs, ys = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != 2:
            raise MalformedCSVError(f"malformed CSV: line {lineno} has {len(row)} fields, expected 2")
        last = lineno == len(body) + 1
        xs.append(_number(row[0], lineno, "x"))
        ys.append(math.nan if last and not row[1].strip() else _number(row[1], lineno, "y"))
    history = TimeSeries(np.array(xs[:-1]), np.array(ys[:-1]))
    return history, xs[-1]


def _number(cell: str, lineno: int, col: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise NonNumericCellError(f"non-numeric cell at line {lineno}, column {col}: {cell!r}") from None
    if not math.isfinite(value):
        raise NonNumericCellError(f"non-numeric cell at line {lineno}, column {col}: {cell!r}")
    return value


def predict_next(
    history: TimeSeries,
    x_next: float,
    alpha: float = 0.1,
    L: int = 0,
    n0: int | None = None,
    f: str | None = None,
    beta: Mapping[int, float] | None = None,
) -> dict:
    """Calibrate on ``history`` and return the interval for the response at ``x_next``.

    With ``f`` given, the pretrained residual |y - f(x)| is used (L must be 0).
    Otherwise an order-L least-squares autoregression is fit on the first n0
    points and calibrated on the rest.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n = len(history)
    if f is not None:
        if f not in REGRESSION_FUNCTIONS:
            raise ValueError(f"unknown regression function {f!r}")
        if L != 0:
            raise ValueError("a pretrained f uses no lagged responses; set L=0")
        if n < 1:
            raise InsufficientHistoryError("calibration block too short: empty history")
        rule = calibrate_pretrained(residual_score_pretrained(REGRESSION_FUNCTIONS[f]), history, alpha)
        mode, n_fit = "pretrained", 0
    else:
        n0 = n // 2 if n0 is None else n0
        if n0 < L + 2:
            raise InsufficientHistoryError(f"training block too short: n0={n0} < L+2={L + 2}")
        if n < n0 + L + 2:
            raise InsufficientHistoryError(
                f"calibration block too short: {n} rows, need at least n0+L+2={n0 + L + 2}"
            )
        rule = calibrate_split(LeastSquaresAR(L), history, n0, alpha)
        mode, n_fit = "split", n0
    lo, hi = interval_from_rule(rule, x_next)
    out = {
        "lo": lo,
        "hi": hi,
        "unbounded": math.isinf(rule.threshold),
        "threshold": rule.threshold,
        "m_cal": rule.m_cal,
        "level": rule.level,
        "alpha": alpha,
        "mode": mode,
        "L": L,
        "n0": n_fit,
        "x_next": x_next,
    }
    if beta is not None:
        table = {int(k): float(v) for k, v in beta.items()}
        if mode == "split":
            res = B.cor2_split_lower(alpha, n - n_fit, L, table)
        else:
            res = B.cor1_lower(alpha, n, L, table)
        out["coverage_lower_bound"] = res.bound_value
        out["bound_name"] = res.name
    return out


def read_beta_csv(text: str) -> dict[int, float]:
    """Read a ``tau,beta`` table (extra columns ignored)."""
    reader = csv.DictReader(io.StringIO(text))
    if not reader.fieldnames or "tau" not in reader.fieldnames or "beta" not in reader.fieldnames:
        raise MalformedCSVError("malformed CSV: beta table needs 'tau' and 'beta' columns")
    out = {}
    for lineno, row in enumerate(reader, start=2):
        tau = _number(row["tau"], lineno, "tau")
        out[int(tau)] = _number(row["beta"], lineno, "beta")
    return out
