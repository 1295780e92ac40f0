"""Numerical verdicts on computed minimizers and solutions.

Each check returns a ``Verdict`` whose ``passed`` flag is exactly
``metric <= threshold``. Thresholds can be overridden by name through
``run_suite(..., thresholds={...})``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NotBracketed
from .field import Field
from .functionals import J, ProblemSpec, V, solution_targets
from .transforms import (RadialProfile, negative_part, positive_part, radial_profile, recenter,
                         reflect, split_search, symmetry_metric)

DEFAULT_THRESHOLDS = {
    "symmetry": 0.03,
    "sign": 1e-6,
    "monotonicity": 1e-2,
    "variational": 0.03,
    "halving": 0.05,
    "sum_rule": 0.02,
    "sum_rule_critical": 1e-3,
    "pohozaev": 1e-2,
    "pohozaev_critical": 1e-3,
    "euler_lagrange": 0.05,
}


@dataclass
class Verdict:
    name: str
    metric: float
    threshold: float
    passed: bool = field(init=False)
    details: str = ""
    grid: dict | None = None

    def __post_init__(self):
        self.metric = float(self.metric)
        self.threshold = float(self.threshold)
        self.passed = bool(self.metric <= self.threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _grid_info(f: Field) -> dict:
    return {"N": f.grid.dim, "L": f.grid.half_extent, "n": f.grid.cells, "h": f.grid.spacing}


def _thr(name, threshold):
    return DEFAULT_THRESHOLDS[name] if threshold is None else threshold


# ---------------------------------------------------------------------------
# individual checks


def check_symmetry(f: Field, spec: ProblemSpec, threshold: float | None = None) -> Verdict:
    """Relative L^p distance between f and its radialization about the energy centroid.

    The field is first shifted by whole cells so that the centroid lies within
    half a cell of the origin; the remaining offset is used as the centre.
    """
    g, c = recenter(f, spec.p)
    metric = symmetry_metric(g, c, spec.p)
    return Verdict("symmetry", metric, _thr("symmetry", threshold),
                   f"centre offset {np.round(c, 6).tolist()} after whole-cell shift", _grid_info(f))


def check_sign(f: Field, threshold: float | None = None) -> Verdict:
    if f.m != 1:
        raise DomainError("sign check applies to scalar fields only")
    u = f.values[0]
    top = float(np.max(np.abs(u)))
    if top == 0:
        return Verdict("sign", 0.0, _thr("sign", threshold), "field is identically zero", _grid_info(f))
    metric = max(0.0, -float(np.min(u)) * float(np.max(u))) / top**2
    return Verdict("sign", metric, _thr("sign", threshold),
                   f"min {float(np.min(u)):.3e}, max {float(np.max(u)):.3e}", _grid_info(f))


def check_monotonicity(profile: RadialProfile, threshold: float | None = None,
                       r_max: float | None = None) -> Verdict:
    """Largest increase between consecutive profile radii, relative to max |u|.

    ``r_max`` limits the radii to complete shells (default: all radii).
    """
    vals = np.asarray(profile.values, float)
    keep = np.ones(profile.radii.size, bool) if r_max is None else profile.radii <= r_max
    worst = 0.0
    for u in vals:
        u = u[keep]
        top = float(np.max(np.abs(u)))
        if top == 0:
            continue
        if np.max(u) < -np.min(u):
            u = -u  # nonpositive solutions must be nondecreasing
        rise = np.maximum(np.diff(u), 0.0)
        worst = max(worst, float(np.max(rise, initial=0.0)) / top)
    return Verdict("monotonicity", worst, _thr("monotonicity", threshold),
                   f"{int(np.count_nonzero(keep))} radii")


def check_variational_characterization(result, spec: ProblemSpec,
                                       threshold: float | None = None) -> Verdict:
    """Compare S, V, J of the solution with the values predicted from T."""
    if spec.regime != "subcritical":
        raise DomainError("the closed-form characterization needs p < N")
    sol = result.solution
    targets = solution_targets(result.T, spec.N, spec.p)
    j, v = J(sol, spec), V(sol, spec)
    errs = {
        "S": abs((j - v) - targets["S"]) / abs(targets["S"]),
        "V": abs(v - targets["V"]) / abs(targets["V"]),
        "J": abs(j - targets["J"]) / abs(targets["J"]),
    }
    worst = max(errs, key=errs.get)
    return Verdict("variational", errs[worst], _thr("variational", threshold),
                   "relative errors " + ", ".join(f"{k}={e:.3e}" for k, e in errs.items())
                   + f"; worst {worst}", _grid_info(sol))


def random_directions(N: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        e = rng.normal(size=N)
        out.append(e / np.linalg.norm(e))
    return out


def check_halving(f: Field, spec: ProblemSpec, directions, threshold: float | None = None,
                  target: str | None = None, order: int = 3) -> Verdict:
    """Reflect across the hyperplane splitting V evenly; both halves must tie J(f)."""
    target = target or ("zero" if spec.regime == "critical" else "half_lambda")
    j0 = J(f, spec)
    worst = 0.0
    notes = []
    for e in directions:
        plane = split_search(f, spec, e, target)
        jp = J(reflect(f, plane, "plus", order), spec)
        jm = J(reflect(f, plane, "minus", order), spec)
        dev = max(abs(jp - j0), abs(jm - j0)) / j0
        worst = max(worst, dev)
        notes.append(f"t={plane.offset:.4f}: J+/J={jp / j0:.4f}, J-/J={jm / j0:.4f}")
    return Verdict("halving", worst, _thr("halving", threshold), "; ".join(notes), _grid_info(f))


def check_sum_rule(f: Field, spec: ProblemSpec, T: float | None = None, lam: float | None = None,
                   threshold: float | None = None) -> Verdict:
    """Constraint split between the positive and negative parts of a scalar minimizer.

    Subcritical, with lam = V(f): both parts carry V >= 0, their normalized
    powers sum to at most one, and one of them is (nearly) empty. Critical:
    both parts have V = 0 relative to J.
    """
    if f.m != 1:
        raise DomainError("the sum rule applies to scalar fields only")
    vp = V(positive_part(f), spec)
    vm = V(negative_part(f), spec)
    if spec.regime == "critical":
        j = J(f, spec)
        metric = max(abs(vp), abs(vm)) / j
        return Verdict("sum_rule", metric, _thr("sum_rule_critical", threshold),
                       f"V(f+)={vp:.3e}, V(f-)={vm:.3e}, J={j:.6g}", _grid_info(f))
    lam = V(f, spec) if lam is None else lam
    if not lam > 0:
        raise DomainError("the subcritical sum rule needs V(f) > 0")
    a = spec.scaling_exponent
    slack = 1.0 - (max(vp, 0.0) / lam) ** a - (max(vm, 0.0) / lam) ** a
    parts = {
        "negative V(f+)": -vp / lam,
        "negative V(f-)": -vm / lam,
        "power sum excess": -slack,
        "smaller part": min(vp, vm) / lam,
    }
    worst = max(parts, key=parts.get)
    metric = max(0.0, parts[worst])
    extra = "" if T is None else f", T={T:.6g}"
    return Verdict("sum_rule", metric, _thr("sum_rule", threshold),
                   f"V(f+)/lam={vp / lam:.4e}, V(f-)/lam={vm / lam:.4e}, slack={slack:.4e}, "
                   f"worst: {worst}{extra}", _grid_info(f))


def check_pohozaev(f: Field, spec: ProblemSpec, alpha: float = 1.0,
                   threshold: float | None = None) -> Verdict:
    j, v = J(f, spec), V(f, spec)
    if spec.regime == "critical":
        return Verdict("pohozaev", abs(v) / j, _thr("pohozaev_critical", threshold),
                       f"|V|/J with J={j:.6g}, V={v:.3e}", _grid_info(f))
    metric = abs((spec.N - spec.p) * j - alpha * spec.N * v) / ((spec.N - spec.p) * j)
    return Verdict("pohozaev", metric, _thr("pohozaev", threshold),
                   f"alpha={alpha:g}, J={j:.6g}, V={v:.6g}", _grid_info(f))


def check_euler_lagrange(f: Field, spec: ProblemSpec, alpha: float = 1.0, delta: float = 0.0,
                         threshold: float | None = None) -> Verdict:
    """Galerkin form of -Delta_p u = alpha g(u): |<-Delta_p u, u> / <alpha g(u), u> - 1|."""
    from .solver import euler_lagrange_residual, galerkin_multiplier
    ratio = galerkin_multiplier(f, spec, delta) / alpha
    res = euler_lagrange_residual(f, spec, alpha, delta)
    return Verdict("euler_lagrange", abs(ratio - 1), _thr("euler_lagrange", threshold),
                   f"Galerkin ratio {ratio:.5f}, relative L2 residual {res:.4e}", _grid_info(f))


# ---------------------------------------------------------------------------
# suite


def run_field_suite(f: Field, spec: ProblemSpec, thresholds: dict | None = None, seed: int = 0,
                    n_directions: int = 3) -> list[Verdict]:
    """Verdicts that need only the field: symmetry, sign, monotonicity, halving, sum rule.

    These are invariant under exact dilation (``rescale_grid``), so a minimizer
    and its least-energy rescaling give the same metrics.
    """
    th = _checked(thresholds)
    out = [check_symmetry(f, spec, th.get("symmetry"))]
    centred, c = recenter(f, spec.p)
    if spec.m == 1:
        out.append(check_sign(f, th.get("sign")))
        out.append(check_monotonicity(radial_profile(centred, c), th.get("monotonicity"),
                                      r_max=f.grid.half_extent))
    try:
        dirs = random_directions(spec.N, n_directions, seed)
        out.append(check_halving(f, spec, dirs, th.get("halving")))
    except (DomainError, NotBracketed) as exc:
        out.append(Verdict("halving", math.inf, _thr("halving", th.get("halving")),
                           f"not applicable: {exc}", _grid_info(f)))
    if spec.m == 1:
        if spec.regime == "critical":
            out.append(check_sum_rule(f, spec, threshold=th.get("sum_rule_critical")))
        elif V(f, spec) > 0:
            out.append(check_sum_rule(f, spec, threshold=th.get("sum_rule")))
    return out


def run_suite(result, spec: ProblemSpec, thresholds: dict | None = None, seed: int = 0,
              n_directions: int = 3) -> list[Verdict]:
    """All applicable verdicts for a solver result, in a fixed order.

    Field verdicts run on the solution, which has the same samples as the
    minimizer on a stretched grid.
    """
    th = _checked(thresholds)
    out = run_field_suite(result.solution, spec, th, seed, n_directions)
    if spec.regime == "subcritical":
        out.append(check_variational_characterization(result, spec, th.get("variational")))
    key = "pohozaev_critical" if spec.regime == "critical" else "pohozaev"
    out.append(check_pohozaev(result.solution, spec, 1.0, th.get(key)))
    out.append(check_euler_lagrange(result.solution, spec, 1.0,
                                    threshold=th.get("euler_lagrange")))
    return out


def _checked(thresholds) -> dict:
    th = dict(thresholds or {})
    unknown = set(th) - set(DEFAULT_THRESHOLDS)
    if unknown:
        raise DomainError(f"unknown verdict thresholds: {sorted(unknown)}")
    return th


def verdicts_to_json(verdicts) -> str:
    return json.dumps([v.to_dict() for v in verdicts], sort_keys=True, indent=2)


def all_passed(verdicts) -> bool:
    return all(v.passed for v in verdicts)


def summary_table(verdicts) -> str:
    rows = [("verdict", "metric", "threshold", "result")]
    for v in verdicts:
        rows.append((v.name, f"{v.metric:.4e}", f"{v.threshold:.1e}", "PASS" if v.passed else "FAIL"))
    widths = [max(len(r[k]) for r in rows) for k in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


__all__ = ["Verdict", "DEFAULT_THRESHOLDS", "check_symmetry", "check_sign", "check_monotonicity",
           "check_variational_characterization", "check_halving", "check_sum_rule",
           "check_pohozaev", "check_euler_lagrange", "random_directions", "run_suite",
           "run_field_suite", "verdicts_to_json", "summary_table", "all_passed"]
