"""Radial shooting for scalar ground states.

The radial equation (r^(N-1) |u'|^(p-2) u')' = -r^(N-1) g(u) is written as a
first-order system in u and the flux w = |u'|^(p-2) u':

    u' = |w|^(1/(p-1)) sign(w),    w' = -(N-1) w / r - g(u),

and integrated with classical RK4 from a Taylor start at r = dr.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import BracketInvalid, DomainError, NoGroundState, StepFailure
from .field import unit_ball_volume
from .functionals import ProblemSpec
from .transforms import RadialProfile

# classes a trajectory can end in
DECAYS = "decays"
CROSSES_ZERO = "crosses_zero"
BLOWS_UP = "blows_up"
TURNS_BACK = "turns_back"  # u' becomes positive while u > 0: undershoot
RUNS_OUT = "runs_out"  # none of the above before r_max

OVERSHOOT = (CROSSES_ZERO, BLOWS_UP)


@dataclass
class ShootingThresholds:
    cross: float = 1e-10
    decay: float = 1e-8
    blowup: float = 1e8


@dataclass
class ShootingResult:
    profile: RadialProfile
    u0: float
    J_ref: float
    V_ref: float
    T_ref: float
    classification: str
    r: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    r_end: float = 0.0

    @property
    def crosses_zero(self) -> bool:
        return self.classification == CROSSES_ZERO

    def pohozaev_relative(self, N: int, p: float, alpha: float = 1.0) -> float:
        """|(N-p) J - alpha N V| / ((N-p) J), or |V|/J when p = N."""
        if p == N:
            return abs(self.V_ref) / self.J_ref
        return abs((N - p) * self.J_ref - alpha * N * self.V_ref) / ((N - p) * self.J_ref)


def _flux_to_slope(w: float, p: float) -> float:
    if w == 0.0:
        return 0.0
    return math.copysign(abs(w) ** (1.0 / (p - 1.0)), w)


def _scalar_g(spec: ProblemSpec):
    g = spec.nonlinearity.g
    return lambda s: float(g(np.array([s]))[0])


def _integrate(spec: ProblemSpec, u0: float, r_max: float, dr: float, th: ShootingThresholds):
    N, p = spec.N, spec.p
    g = _scalar_g(spec)
    g0 = g(u0)
    # u(r) = u0 - (p-1)/p (g0/N)^(1/(p-1)) r^(p/(p-1)) + ..., w(r) = -g0 r / N + ...
    u = u0 - math.copysign((p - 1) / p * (abs(g0) / N) ** (1 / (p - 1)) * dr ** (p / (p - 1)), g0)
    w = -g0 * dr / N
    rs, us, ws = [0.0, dr], [u0, u], [0.0, w]

    def rhs(r, u, w):
        return _flux_to_slope(w, p), -(N - 1) * w / r - g(u)

    r = dr
    nsteps = int(math.ceil((r_max - dr) / dr))
    cls = RUNS_OUT
    for _ in range(nsteps):
        k1u, k1w = rhs(r, u, w)
        k2u, k2w = rhs(r + dr / 2, u + dr / 2 * k1u, w + dr / 2 * k1w)
        k3u, k3w = rhs(r + dr / 2, u + dr / 2 * k2u, w + dr / 2 * k2w)
        k4u, k4w = rhs(r + dr, u + dr * k3u, w + dr * k3w)
        w_new = w + dr / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        u = u + dr / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        r += dr
        if not (math.isfinite(u) and math.isfinite(w_new)):
            raise StepFailure(f"non-finite state at r={r:.6g} for u0={u0!r}")
        decreasing_flux = abs(w_new) < abs(w)
        w = w_new
        rs.append(r)
        us.append(u)
        ws.append(w)
        if abs(u) > th.blowup:
            cls = BLOWS_UP
            break
        if u < -th.cross:
            cls = CROSSES_ZERO
            break
        if w > 0 and u > 0:
            cls = TURNS_BACK
            break
        if u < th.decay and w < 0 and decreasing_flux:
            cls = DECAYS
            break
    return np.array(rs), np.array(us), np.array(ws), cls


def _quadrature(spec: ProblemSpec, r, u, w):
    N, p = spec.N, spec.p
    surface = N * unit_ball_volume(N) * r ** (N - 1)
    slope = np.abs(w) ** (1 / (p - 1))
    G = spec.nonlinearity.G(u[None])
    J = float(simpson(slope**p / p * surface, x=r))
    V = float(simpson(G * surface, x=r))
    return J, V


def _t_ref(spec: ProblemSpec, J: float, V: float) -> float:
    if spec.regime == "critical":
        return J
    if V <= 0:
        return math.nan
    return J * V ** (-(spec.N - spec.p) / spec.N)


def _result(spec, u0, r, u, w, cls) -> ShootingResult:
    J, V = _quadrature(spec, r, u, w)
    prof = RadialProfile(radii=r, values=u[None], center=np.zeros(spec.N),
                         deviation=np.zeros((1, r.size)), counts=np.ones(r.size, dtype=np.int64),
                         width=float(r[1] - r[0]))
    return ShootingResult(prof, u0, J, V, _t_ref(spec, J, V), cls, r, u, w, float(r[-1]))


def shoot(spec: ProblemSpec, u0: float, r_max: float = 30.0, dr: float = 1e-3,
          thresholds: ShootingThresholds | None = None) -> ShootingResult:
    """Integrate one trajectory from u(0) = u0 and classify it."""
    if spec.m != 1:
        raise DomainError("shooting is only available for scalar problems (m = 1)")
    if not u0 > 0:
        raise DomainError("u0 must be positive")
    if not dr > 0 or not r_max > dr:
        raise DomainError("need 0 < dr < r_max")
    th = thresholds or ShootingThresholds()
    r, u, w, cls = _integrate(spec, float(u0), r_max, dr, th)
    return _result(spec, float(u0), r, u, w, cls)


def _side(cls: str) -> str | None:
    if cls in OVERSHOOT:
        return "over"
    if cls == TURNS_BACK:
        return "under"
    return None


def ground_state(spec: ProblemSpec, bracket=(1.01, 10.0), tol: float = 1e-15,
                 r_max: float = 30.0, dr: float = 1e-3,
                 thresholds: ShootingThresholds | None = None,
                 max_bisections: int = 200) -> ShootingResult:
    """Bisect u0 between an undershoot and an overshoot until the trajectory decays.

    ``tol`` bounds the relative width of the u0 bracket.
    """
    th = thresholds or ShootingThresholds()
    a, b = float(bracket[0]), float(bracket[1])
    if not 0 < a < b:
        raise BracketInvalid(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    ra = shoot(spec, a, r_max, dr, th)
    rb = shoot(spec, b, r_max, dr, th)
    sa, sb = _side(ra.classification), _side(rb.classification)
    for res in (ra, rb):
        if res.classification == DECAYS:
            return res
    if sa is None or sb is None or sa == sb:
        raise BracketInvalid(
            f"bracket ends classify as {ra.classification!r} and {rb.classification!r}; "
            "need one undershoot and one overshoot")
    for _ in range(max_bisections):
        mid = 0.5 * (a + b)
        res = shoot(spec, mid, r_max, dr, th)
        if res.classification == DECAYS:
            return res
        s = _side(res.classification)
        if s is None:
            raise NoGroundState(f"u0={mid!r} classifies as {res.classification!r}")
        if s == sa:
            a = mid
        else:
            b = mid
        if b - a <= tol * b:
            break
    raise NoGroundState(f"bracket shrank to [{a!r}, {b!r}] without a decaying trajectory")


__all__ = ["ShootingResult", "ShootingThresholds", "shoot", "ground_state", "DECAYS",
           "CROSSES_ZERO", "BLOWS_UP", "TURNS_BACK", "RUNS_OUT"]
