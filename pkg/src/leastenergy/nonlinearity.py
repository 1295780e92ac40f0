"""Registry of nonlinearities (G, g = grad G).

Arrays passed to ``G``/``g`` carry the component index first: ``u.shape == (m, ...)``.
``G`` returns shape ``(...)`` and ``g`` returns shape ``(m, ...)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConsistencyViolation, DomainError, SubcriticalityWarning

SIGNS = ("negative", "positive", "indefinite")


@dataclass(frozen=True)
class Nonlinearity:
    name: str
    m: int
    G: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    sign_near_zero: str = "indefinite"
    epsilon: float = 0.0
    params: dict = field(default_factory=dict)
    # leading power of G at infinity, used only for the subcriticality warning
    growth: float | None = None

    def __post_init__(self):
        if self.sign_near_zero not in SIGNS:
            raise DomainError(f"sign_near_zero must be one of {SIGNS}")


def _as_components(nl: Nonlinearity, xi) -> np.ndarray:
    a = np.asarray(xi, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.shape[0] != nl.m:
        raise DomainError(f"{nl.name} expects {nl.m} components, got leading dimension {a.shape[0]}")
    return a


def eval_G(nl: Nonlinearity, xi) -> np.ndarray | float:
    a = _as_components(nl, xi)
    out = nl.G(a)
    return float(out) if np.ndim(out) == 0 else out


def eval_g(nl: Nonlinearity, xi) -> np.ndarray:
    return nl.g(_as_components(nl, xi))


# ---------------------------------------------------------------------------
# registry entries


def cubic() -> Nonlinearity:
    def G(u):
        s = u[0]
        return s**4 / 4 - s**2 / 2

    def g(u):
        s = u[0]
        return (s**3 - s)[None]

    return Nonlinearity("cubic", 1, G, g, "negative", 1.0, {}, growth=4.0)


def double_power(q: float = 4.0, r: float = 2.0) -> Nonlinearity:
    q, r = float(q), float(r)
    if not 2 <= r < q:
        raise DomainError(f"double_power needs 2 <= r < q, got q={q}, r={r}")

    def G(u):
        a = np.abs(u[0])
        return a**q / q - a**r / r

    def g(u):
        s = u[0]
        a = np.abs(s)
        return (a ** (q - 2) * s - a ** (r - 2) * s)[None]

    # G < 0 on 0 < |s| < (q/r)^(1/(q-r)), which always contains (0, 1]
    return Nonlinearity("double_power", 1, G, g, "negative", 1.0, {"q": q, "r": r}, growth=q)


def coupled_quartic() -> Nonlinearity:
    def G(u):
        a, b = u[0], u[1]
        return a**2 * b**2 - (a**2 + b**2) / 2

    def g(u):
        a, b = u[0], u[1]
        return np.stack([2 * a * b**2 - a, 2 * a**2 * b - b])

    # G <= (|u|^4/4) - |u|^2/2 < 0 for 0 < |u| < sqrt(2)
    return Nonlinearity("coupled_quartic", 2, G, g, "negative", 1.0, {}, growth=4.0)


def linear() -> Nonlinearity:
    """G(s) = -s^2/2. Has no ground state; used to test the shooting oracle."""

    def G(u):
        return -u[0] ** 2 / 2

    def g(u):
        return -u

    return Nonlinearity("linear", 1, G, g, "negative", np.inf, {}, growth=2.0)


REGISTRY: dict[str, Callable[..., Nonlinearity]] = {
    "cubic": cubic,
    "double_power": double_power,
    "coupled_quartic": coupled_quartic,
    "linear": linear,
}


def make(name: str, **params) -> Nonlinearity:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise DomainError(f"unknown nonlinearity {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# checks


@dataclass
class ConsistencyReport:
    max_residual: float
    worst_point: np.ndarray
    tol: float
    violators: np.ndarray  # points whose residual exceeds tol

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def fd_gradient(nl: Nonlinearity, points: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of G at points of shape (K, m)."""
    pts = np.asarray(points, dtype=float).reshape(-1, nl.m)
    out = np.empty_like(pts)
    for i in range(nl.m):
        e = np.zeros(nl.m)
        e[i] = step
        out[:, i] = (nl.G((pts + e).T) - nl.G((pts - e).T)) / (2 * step)
    return out


def check_gradient_consistency(nl: Nonlinearity, sample_points, tol: float = 1e-6,
                               step: float = 1e-5, raise_on_fail: bool = True) -> ConsistencyReport:
    pts = np.asarray(sample_points, dtype=float).reshape(-1, nl.m)
    if np.any(np.linalg.norm(pts, axis=1) < 1e-6):
        raise DomainError("sample points must avoid the ball of radius 1e-6 around 0")
    resid = np.linalg.norm(nl.g(pts.T).T - fd_gradient(nl, pts, step), axis=1)
    k = int(np.argmax(resid))
    report = ConsistencyReport(float(resid[k]), pts[k], tol, pts[resid > tol])
    if raise_on_fail and not report.passed:
        raise ConsistencyViolation(
            f"{nl.name}: |g - grad G| = {report.max_residual:.3g} at {pts[k]} exceeds {tol:g}",
            worst_point=pts[k], residual=report.max_residual)
    return report


def check_sign_near_zero(nl: Nonlinearity, samples: int = 2000, seed: int = 0) -> bool:
    """Sample 0 < |xi| <= epsilon and confirm the declared sign of G."""
    if nl.sign_near_zero == "indefinite":
        return True
    rng = np.random.default_rng(seed)
    eps = min(nl.epsilon, 10.0)
    dirs = rng.normal(size=(samples, nl.m))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = eps * rng.uniform(1e-3, 1.0, size=(samples, 1))
    vals = nl.G((dirs * radii).T)
    return bool(np.all(vals < 0) if nl.sign_near_zero == "negative" else np.all(vals > 0))


def check_subcriticality(nl: Nonlinearity, N: int, p: float) -> bool:
    """Warn unless p < growth < Np/(N-p). Nothing is enforced."""
    if nl.growth is None or p >= N:
        return True
    crit = N * p / (N - p)
    ok = p < nl.growth < crit
    if not ok:
        warnings.warn(
            f"{nl.name}: growth exponent {nl.growth:g} is outside the subcritical window "
            f"({p:g}, {crit:g}) for N={N}, p={p:g}; a minimizer may not exist",
            SubcriticalityWarning, stacklevel=2)
    return ok
