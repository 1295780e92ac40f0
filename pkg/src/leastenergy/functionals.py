"""Discrete J, V, S, the Pohozaev residuals and the closed-form scaling constants.

The Dirichlet part J averages |D u|^p over the 2^N one-sided difference
stencils (forward or backward along each axis). Unlike central differences
this has no checkerboard null space, so it is safe to minimize, and for p = 2
it reduces to the usual face-difference energy. ``grad_J`` is its exact
gradient (the discrete p-Laplacian), up to the optional regularization delta.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .field import Field, backward_difference, forward_difference, inner
from .nonlinearity import Nonlinearity


@dataclass(frozen=True)
class ProblemSpec:
    N: int
    p: float
    nonlinearity: Nonlinearity

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not 1 < self.p <= self.N:
            raise DomainError(f"exponent must satisfy 1 < p <= N, got p={self.p}, N={self.N}")

    @property
    def m(self) -> int:
        return self.nonlinearity.m

    @property
    def regime(self) -> str:
        return "critical" if self.p == self.N else "subcritical"

    @property
    def scaling_exponent(self) -> float:
        """(N - p)/N, the power of V in the lower bound J >= T V^((N-p)/N)."""
        return (self.N - self.p) / self.N

    def check_field(self, f: Field):
        if f.m != self.m:
            raise DomainError(f"field has {f.m} components, problem expects {self.m}")
        if f.grid.dim != self.N:
            raise DomainError(f"field lives in dimension {f.grid.dim}, problem has N={self.N}")


def _stencils(N: int):
    return list(itertools.product((0, 1), repeat=N))


def _diff(u, axis, h, backward):
    return backward_difference(u, axis, h) if backward else forward_difference(u, axis, h)


def dirichlet_density(f: Field, p: float) -> np.ndarray:
    """Cellwise (1/p) sum_i |grad u_i|^p, averaged over one-sided stencils. Shape (n,...,n)."""
    h = f.grid.spacing
    N = f.grid.dim
    acc = np.zeros(f.grid.shape)
    for u in f.values:
        if p == 2:
            # the stencil average of sum_j D_j^2 splits axis by axis
            for j in range(N):
                acc += 0.5 * (forward_difference(u, j, h) ** 2 + backward_difference(u, j, h) ** 2)
        else:
            for s in _stencils(N):
                acc += sum(_diff(u, j, h, s[j]) ** 2 for j in range(N)) ** (p / 2) / 2**N
    return acc / p


def J(f: Field, spec: ProblemSpec) -> float:
    spec.check_field(f)
    return float(f.grid.cell_volume * np.sum(dirichlet_density(f, spec.p)))


def V(f: Field, spec: ProblemSpec) -> float:
    spec.check_field(f)
    return float(f.grid.cell_volume * np.sum(spec.nonlinearity.G(f.values)))


def action(f: Field, spec: ProblemSpec) -> float:
    return J(f, spec) - V(f, spec)


def grad_J(f: Field, spec: ProblemSpec, delta: float = 0.0) -> np.ndarray:
    """L2 gradient of J: the discrete -div(|grad u_i|^(p-2) grad u_i), shape (m, n,...,n).

    For p != 2 the weight |D u|^(p-2) is regularized to (|D u|^2 + delta^2)^((p-2)/2).
    """
    h = f.grid.spacing
    N = f.grid.dim
    p = spec.p
    out = np.zeros_like(f.values)
    for i, u in enumerate(f.values):
        if p == 2:
            for j in range(N):
                # F^T = -B and B^T = -F under the zero-exterior convention
                out[i] -= 0.5 * (backward_difference(forward_difference(u, j, h), j, h)
                                 + forward_difference(backward_difference(u, j, h), j, h))
            continue
        acc = np.zeros_like(u)
        for s in _stencils(N):
            d = [_diff(u, j, h, s[j]) for j in range(N)]
            w = (sum(dj**2 for dj in d) + delta**2) ** ((p - 2) / 2)
            for j in range(N):
                flux = w * d[j]
                # adjoint of the one-sided difference is minus the opposite one
                acc -= _diff(flux, j, h, not s[j])
        out[i] = acc / 2**N
    return out


def grad_V(f: Field, spec: ProblemSpec) -> np.ndarray:
    return spec.nonlinearity.g(f.values)


# ---------------------------------------------------------------------------
# Pohozaev identities and the scaling lower bound


def pohozaev_residual(f: Field, spec: ProblemSpec, alpha: float) -> float:
    """(N - p) J - alpha N V; vanishes on solutions of -Delta_p u = alpha g(u)."""
    if spec.regime != "subcritical":
        raise DomainError("use critical_pohozaev_residual when p = N")
    return (spec.N - spec.p) * J(f, spec) - alpha * spec.N * V(f, spec)


def relative_pohozaev_residual(f: Field, spec: ProblemSpec, alpha: float | None = None) -> float:
    """|residual| / ((N - p) J) in the subcritical regime, |V| / J in the critical one."""
    j = J(f, spec)
    if j == 0:
        return 0.0
    if spec.regime == "critical":
        return abs(V(f, spec)) / j
    return abs(pohozaev_residual(f, spec, alpha)) / ((spec.N - spec.p) * j)


def critical_pohozaev_residual(f: Field, spec: ProblemSpec) -> float:
    if spec.regime != "critical":
        raise DomainError("critical_pohozaev_residual requires p = N")
    return V(f, spec)


def lower_bound_slack(f: Field, spec: ProblemSpec, T: float) -> float:
    """J(f) - T V(f)^((N-p)/N), nonnegative for every field once T is the true infimum."""
    if spec.regime != "subcritical":
        raise DomainError("the scaling lower bound needs p < N")
    v = V(f, spec)
    if v <= 0:
        raise DomainError(f"lower bound needs V(f) > 0, got {v:.6g}")
    return J(f, spec) - T * v**spec.scaling_exponent


def _require_subcritical(N, p):
    if not 1 < p < N:
        raise DomainError(f"closed forms need 1 < p < N, got p={p}, N={N}")


def least_energy_value(T: float, N: int, p: float) -> float:
    """p (N-p)^(N/p - 1) N^(-N/p) T^(N/p): the action of the least-energy solution."""
    _require_subcritical(N, p)
    if T <= 0:
        raise DomainError("T must be positive")
    return p * (N - p) ** (N / p - 1) * N ** (-N / p) * T ** (N / p)


def multiplier_and_scales(T: float, N: int, p: float) -> tuple[float, float, float]:
    """(alpha, sigma0, lambda) for a minimizer with J = T and V = 1.

    alpha = (N-p) T / N is the Lagrange multiplier, sigma0 = alpha^(1/p) the
    dilation that turns the minimizer into a solution, lambda = alpha^(N/p) the
    constraint level the solution sits on. The inverse dilation is 1/sigma0.
    """
    _require_subcritical(N, p)
    if T <= 0:
        raise DomainError("T must be positive")
    alpha = (N - p) * T / N
    return alpha, alpha ** (1 / p), alpha ** (N / p)


def solution_targets(T: float, N: int, p: float) -> dict:
    """Values J, V, S of the least-energy solution predicted from T."""
    _require_subcritical(N, p)
    a = (N - p) / N
    return {
        "J": a ** ((N - p) / p) * T ** (N / p),
        "V": a ** (N / p) * T ** (N / p),
        "S": least_energy_value(T, N, p),
    }


# ---------------------------------------------------------------------------


@dataclass
class EnergyReport:
    J: float
    V: float
    S: float
    alpha: float | None
    pohozaev_residual: float
    pohozaev_relative: float
    lower_bound_slack: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def energy_report(f: Field, spec: ProblemSpec, alpha: float | None = None,
                  T: float | None = None) -> EnergyReport:
    j, v = J(f, spec), V(f, spec)
    if spec.regime == "critical":
        res = v
        rel = abs(v) / j if j else 0.0
    else:
        a = 0.0 if alpha is None else alpha
        res = (spec.N - spec.p) * j - a * spec.N * v
        rel = abs(res) / ((spec.N - spec.p) * j) if j else 0.0
    slack = None
    if T is not None and spec.regime == "subcritical" and v > 0:
        slack = j - T * v**spec.scaling_exponent
    return EnergyReport(j, v, j - v, alpha, res, rel, slack)


def homogeneity_check(f: Field, spec: ProblemSpec) -> float:
    """<grad J(f), f> / (p J(f)); equals 1 for the exact discrete energy."""
    j = J(f, spec)
    if j == 0:
        return math.nan
    return inner(f.grid, grad_J(f, spec), f.values) / (spec.p * j)
