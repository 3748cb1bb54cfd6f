from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .._validation import CfiotError


class SolverError(CfiotError):
    """A feasibility oracle could not produce a decision."""


class IterationLimitError(SolverError):
    pass


class NumericalSolverError(SolverError):
    pass


class BracketError(SolverError):
    pass


@dataclass(frozen=True)
class BisectionSpec:
    """Bracket and stopping rule for the bisection over the common SINR target.

    ``t_lo``/``t_hi`` of None mean auto-bracketing: start from the worst SINR
    at full power (always feasible) and double until infeasible.
    """

    t_lo: float | None = None
    t_hi: float | None = None
    rel_tol: float = 1e-3
    max_iters: int = 60

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.t_lo is not None and self.t_hi is not None and not 0 <= self.t_lo < self.t_hi:
            raise ValueError("need 0 <= t_lo < t_hi")


@dataclass
class Feasibility:
    feasible: bool
    witness: np.ndarray | None = None
    residual: float = 0.0
    n_iter: int = 0
    status: str = ""


@dataclass
class BisectionResult:
    t_lo: float
    t_hi: float
    witness: np.ndarray
    n_iter: int
    n_oracle_calls: int
    history: list = field(default_factory=list)


def bisect(oracle, spec, t_start, start_witness=None):
    """Largest feasible t, to relative precision ``spec.rel_tol``.

    ``oracle(t)`` returns a :class:`Feasibility`.  On return ``t_lo`` is feasible
    (with ``witness``) and ``t_hi <= t_lo (1 + rel_tol)`` is infeasible.
    A ``start_witness`` known to reach ``t_start`` saves the first oracle call,
    which matters when ``t_start`` is itself the optimum and the solver would
    face a feasible set with no interior.
    """
    history = []

    def ask(t):
        res = oracle(t)
        history.append((t, res.feasible, res.residual))
        return res

    t_lo = spec.t_lo if spec.t_lo is not None else t_start
    if t_lo <= 0:
        raise BracketError(f"lower bracket must be positive, got {t_lo}")
    if start_witness is not None and spec.t_lo is None:
        lo = Feasibility(True, start_witness, 0.0, 0, "given")
    else:
        lo = ask(t_lo)
    if not lo.feasible:
        raise BracketError(f"lower bracket t={t_lo:.6g} is infeasible")

    if spec.t_hi is not None:
        t_hi = spec.t_hi
        if ask(t_hi).feasible:
            raise BracketError(f"upper bracket t={t_hi:.6g} is feasible")
    else:
        t_hi = 2.0 * t_lo
        for _ in range(spec.max_iters):
            hi = ask(t_hi)
            if not hi.feasible:
                break
            t_lo, lo = t_hi, hi
            t_hi *= 2.0
        else:
            raise BracketError("no infeasible upper bracket found by doubling")

    n_iter = 0
    while t_hi > t_lo * (1.0 + spec.rel_tol):
        if n_iter >= spec.max_iters:
            raise IterationLimitError(
                f"bisection stopped after {n_iter} iterations with gap {t_hi / t_lo - 1:.3e}")
        mid = math.sqrt(t_lo * t_hi)
        res = ask(mid)
        if res.feasible:
            t_lo, lo = mid, res
        else:
            t_hi = mid
        n_iter += 1
    return BisectionResult(t_lo, t_hi, lo.witness, n_iter, len(history), history)
