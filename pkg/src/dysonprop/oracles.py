"""Independent reference computations the series engine is checked against.

The matrix-exponential route uses Pade scaling-and-squaring; the ODE route
uses an adaptive high-order Runge-Kutta pair.  Both are valid for non-normal
generators, and the two are compared against each other as well as against
the series.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np
import scipy.integrate
import scipy.linalg

from .dyson import free_propagator
from .errors import StiffnessError
from .graded import LinOp


@dataclass(frozen=True)
class Report:
    """One named check with its residual and verdict.

    ``passed`` is derived: it is true exactly when residual <= tolerance.
    """

    check_name: str
    residual: float
    tolerance: float
    context: dict[str, Any] = dc_field(default_factory=dict)

    def __post_init__(self):
        if not (self.residual >= 0 or np.isnan(self.residual)):
            raise ValueError("residual must be non-negative")

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_json(self) -> dict:
        return {
            "check_name": self.check_name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "context": self.context,
        }


def matrix_exp(matrix: np.ndarray) -> np.ndarray:
    """e^M by Pade scaling-and-squaring, valid for non-normal input."""
    m = np.asarray(matrix, dtype=complex)
    out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out.view(float))):
        raise OverflowError("matrix exponential overflowed for this input")
    return out


def oracle_propagator(h_free: LinOp, h_int: LinOp, t: float, t_prime: float) -> np.ndarray:
    """Reference propagator  e^{i t h_free} e^{-i (t - t') h} e^{-i t' h_free}.

    In finite dimension this solves the same initial-value problem as the
    series for any interaction, symmetric or not, by uniqueness.
    """
    h = h_free.matrix + h_int.matrix
    mid = matrix_exp(-1j * (t - t_prime) * h)
    return free_propagator(h_free, -t) @ mid @ free_propagator(h_free, t_prime)


def ode_oracle(
    h_free: LinOp,
    h_int: LinOp,
    xi: np.ndarray,
    t: float,
    t_prime: float,
    tol: float = 1e-11,
) -> np.ndarray:
    """Integrate  d/dtau psi = -i h_int(tau) psi  from t' to t adaptively.

    An embedded Runge-Kutta pair (DOP853) supplies the reference solution in
    the rotated picture; failure to advance raises StiffnessError.
    """
    from .dyson import _prepare  # local import to keep module load light

    prep = _prepare(h_free, h_int)
    y0 = prep.to_working(np.asarray(xi, dtype=complex).reshape(-1, 1))[:, 0]
    energies = prep.energies
    h_rot = prep.h_int_rot

    def rhs(tau, y):
        phase = np.exp(-1j * tau * energies)
        return -1j * (phase.conj() * (h_rot @ (phase * y)))

    sol = scipy.integrate.solve_ivp(
        rhs,
        (t_prime, t),
        y0,
        method="DOP853",
        rtol=tol,
        atol=tol,
        dense_output=False,
    )
    if not sol.success:
        raise StiffnessError(
            "adaptive integrator failed to reach the target time",
            detail=sol.message,
        )
    return prep.from_working(sol.y[:, -1].reshape(-1, 1))[:, 0]
