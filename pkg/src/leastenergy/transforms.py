"""Geometric and order-theoretic operators on fields.

Dilation, hyperplane reflection, truncation, Schwarz rearrangement, radial
profiles and the hyperplane search that splits V into two prescribed parts.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline, make_lsq_spline

from .errors import DomainError, NotBracketed, TruncationWarning
from .field import Field, Grid, gradient_norm, interpolate_many, lp_norm, unit_ball_volume
from .functionals import J, ProblemSpec, V, dirichlet_density

# ---------------------------------------------------------------------------
# dilation


def dilate(f: Field, sigma: float, order: int = 1) -> Field:
    """f_sigma(x) = f(x / sigma), resampled on the same grid by interpolation."""
    if not sigma > 0:
        raise DomainError(f"dilation factor must be positive, got {sigma}")
    if sigma == 1:
        return Field(f.grid, f.values.copy())
    if sigma > 1:
        # cells beyond L / sigma land outside the cube after dilation
        lost = np.zeros(f.grid.shape, dtype=bool)
        for xj in f.grid.coords():
            lost = lost | (np.abs(xj) > f.grid.half_extent / sigma)
        peak = np.max(np.abs(f.values))
        if peak > 0 and np.max(np.abs(f.values[:, lost]), initial=0.0) > 1e-6 * peak:
            warnings.warn(f"dilation by {sigma:g} pushes field mass off the grid", TruncationWarning,
                          stacklevel=2)
    x = np.stack(np.meshgrid(*([f.grid.axis()] * f.grid.dim), indexing="ij"))
    return Field(f.grid, interpolate_many(f, x / sigma, order=order))


def rescale_grid(f: Field, sigma: float) -> Field:
    """Exact dilation: keep the samples and stretch the grid by sigma.

    J scales by sigma^(N-p) and V by sigma^N exactly under this map, which is
    what makes it a lossless constraint projection for the solver.
    """
    if not sigma > 0:
        raise DomainError(f"dilation factor must be positive, got {sigma}")
    return Field(f.grid.scaled(sigma), f.values.copy())


# ---------------------------------------------------------------------------
# hyperplanes and reflections


@dataclass(frozen=True)
class Hyperplane:
    """The plane {x : x.e = t}; plus side is x.e >= t."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        e = np.asarray(self.normal, dtype=float)
        nrm = np.linalg.norm(e)
        if nrm == 0:
            raise DomainError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", e / nrm)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        """x has shape (N, ...)."""
        return np.tensordot(self.normal, x, axes=1) - self.offset

    def reflect_points(self, x: np.ndarray) -> np.ndarray:
        d = self.signed_distance(x)
        return x - 2 * d[None] * self.normal.reshape((-1,) + (1,) * d.ndim)

    def project_points(self, x: np.ndarray) -> np.ndarray:
        d = self.signed_distance(x)
        return x - d[None] * self.normal.reshape((-1,) + (1,) * d.ndim)


def _dense_coords(grid: Grid) -> np.ndarray:
    return np.stack(np.meshgrid(*([grid.axis()] * grid.dim), indexing="ij"))


def reflect(f: Field, plane: Hyperplane, side: str = "plus", order: int = 1) -> Field:
    """Keep the data on one closed half-space and mirror it onto the other."""
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    x = _dense_coords(f.grid)
    d = plane.signed_distance(x)
    keep = d >= 0 if side == "plus" else d <= 0
    mirrored = interpolate_many(f, plane.reflect_points(x), order=order)
    return Field(f.grid, np.where(keep[None], f.values, mirrored))


# ---------------------------------------------------------------------------
# truncation


def _require_scalar(f: Field, what: str):
    if f.m != 1:
        raise DomainError(f"{what} is defined for scalar fields only (m = 1), got m = {f.m}")


def truncate(f: Field, t: float, mode: str = "above") -> Field:
    """min(f, t) for t >= 0 ("above") or max(f, t) for t <= 0 ("below")."""
    _require_scalar(f, "truncation")
    if mode == "above":
        if t < 0:
            raise DomainError("truncation from above needs t >= 0")
        return Field(f.grid, np.minimum(f.values, t))
    if mode == "below":
        if t > 0:
            raise DomainError("truncation from below needs t <= 0")
        return Field(f.grid, np.maximum(f.values, t))
    raise ValueError("mode must be 'above' or 'below'")


def positive_part(f: Field) -> Field:
    return Field(f.grid, np.maximum(f.values, 0.0))


def negative_part(f: Field) -> Field:
    return Field(f.grid, np.minimum(f.values, 0.0))


def find_zero_truncation(f: Field, spec: ProblemSpec, rel_tol: float = 1e-8,
                         max_bisections: int = 200) -> float:
    """Level t* with V(min(f, t*)) = 0 for a nonnegative f with V(f) > 0.

    Needs G < 0 on (0, eps]: then V(min(f, eps)) < 0 < V(f), and t -> V(min(f, t))
    is continuous, so a bracket is found by doubling t from eps and refined by
    bisection.
    """
    _require_scalar(f, "find_zero_truncation")
    nl = spec.nonlinearity
    if nl.sign_near_zero != "negative":
        raise DomainError("find_zero_truncation needs G < 0 near zero")
    if np.min(f.values) < 0:
        raise DomainError("find_zero_truncation needs a nonnegative field")
    v_full = V(f, spec)
    if v_full <= 0:
        raise DomainError(f"find_zero_truncation needs V(f) > 0, got {v_full:.6g}")
    tol = rel_tol * max(1.0, J(f, spec))
    vals = f.values

    def v_at(t):
        return float(f.grid.cell_volume * np.sum(nl.G(np.minimum(vals, t))))

    top = float(np.max(vals))
    lo = min(nl.epsilon, top)
    scanned = [(lo, v_at(lo))]
    if scanned[0][1] >= 0:
        raise NotBracketed("V(min(f, eps)) is not negative", scanned)
    hi = lo
    while True:
        hi = min(2 * hi, top)
        scanned.append((hi, v_at(hi)))
        if scanned[-1][1] > 0:
            break
        if hi >= top:
            raise NotBracketed("no level with V(min(f, t)) > 0 up to max f", scanned)
        lo = hi
    v_lo = scanned[-2][1]
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        vm = v_at(mid)
        if abs(vm) <= tol:
            return mid
        if (vm < 0) == (v_lo < 0):
            lo, v_lo = mid, vm
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Schwarz rearrangement


@dataclass
class LevelSetTable:
    thresholds: np.ndarray  # descending
    volumes: np.ndarray  # |{u > t}|
    dim: int

    @property
    def radii(self) -> np.ndarray:
        """Radius of the ball with the same volume as each level set."""
        return (self.volumes / unit_ball_volume(self.dim)) ** (1.0 / self.dim)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "volume", "radius"])
            for row in zip(self.thresholds, self.volumes, self.radii):
                w.writerow([repr(float(x)) for x in row])
        return path


def level_set_table(f: Field, thresholds=None) -> LevelSetTable:
    _require_scalar(f, "level_set_table")
    v = np.sort(f.values.ravel())
    t = np.unique(v)[::-1] if thresholds is None else np.sort(np.asarray(thresholds, float))[::-1]
    counts = v.size - np.searchsorted(v, t, side="right")
    return LevelSetTable(t, counts * f.grid.cell_volume, f.grid.dim)


def _distance_order(grid: Grid) -> np.ndarray:
    # twice the centre coordinate in units of h is an odd integer, so squared
    # distances are compared exactly
    k = 2 * np.arange(grid.cells) - (grid.cells - 1)
    parts = np.meshgrid(*([k.astype(np.int64) ** 2] * grid.dim), indexing="ij", sparse=True)
    d2 = sum(parts)
    return np.argsort(np.broadcast_to(d2, grid.shape).ravel(), kind="stable")


def schwarz_rearrange(f: Field) -> tuple[Field, LevelSetTable]:
    """Radially nonincreasing rearrangement about the origin.

    The k-th largest sample goes to the k-th nearest cell centre (ties by cell
    index), so the sample multiset and every level-set volume are preserved
    exactly.
    """
    _require_scalar(f, "schwarz_rearrange")
    vals = f.values.ravel()
    if np.min(vals) < 0:
        raise DomainError("schwarz_rearrange needs a nonnegative field; use -(-f)* for f <= 0")
    by_value = np.argsort(-vals, kind="stable")
    out = np.empty_like(vals)
    out[_distance_order(f.grid)] = vals[by_value]
    g = Field(f.grid, out.reshape((1,) + f.grid.shape))
    return g, level_set_table(g)


def rearranged_profile(f: Field, dr: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Radial profile (radii, values) of the Schwarz rearrangement of f >= 0.

    The distribution of f is read as a function of ball volume (the k-th
    largest cell value fills the volume between k-1 and k cells) and averaged
    over shells of width dr (default h/2). Each mean is placed at the radius
    that halves its shell's volume. Averaging matters: cells at equal distance
    produce ties, and pointwise differences across them would inflate J.
    """
    _require_scalar(f, "rearranged_profile")
    if np.min(f.values) < 0:
        raise DomainError("rearranged_profile needs a nonnegative field")
    N = f.grid.dim
    dr = 0.5 * f.grid.spacing if dr is None else float(dr)
    vals = np.sort(f.values.ravel())[::-1]
    cellvol = f.grid.cell_volume
    cum_vol = np.arange(vals.size + 1) * cellvol
    cum_val = np.concatenate([[0.0], np.cumsum(vals) * cellvol])
    omega = unit_ball_volume(N)
    r_top = (vals.size * cellvol / omega) ** (1 / N)
    edges = np.append(np.arange(0.0, r_top, dr), r_top)
    vol_edges = np.minimum(omega * edges**N, cum_vol[-1])
    means = np.diff(np.interp(vol_edges, cum_vol, cum_val)) / np.diff(vol_edges)
    nodes = (0.5 * (edges[:-1] ** N + edges[1:] ** N)) ** (1 / N)
    return nodes, means


def induced_radial_field(f: Field, dr: float | None = None) -> Field:
    """The rearranged profile sampled at every cell's distance from the origin."""
    nodes, means = rearranged_profile(f, dr)
    return Field(f.grid, np.interp(f.grid.radius(), nodes, means)[None])


def rearranged_energy(f: Field, p: float, dr: float | None = None) -> float:
    """J(f*) evaluated on the induced radial field with the grid's one-sided differences."""
    g = induced_radial_field(f, dr)
    return float(g.grid.cell_volume * np.sum(dirichlet_density(g, p)))


def rearrange_signed(f: Field) -> Field:
    """u* for u >= 0 and -(-u)* for u <= 0."""
    if np.min(f.values) >= 0:
        return schwarz_rearrange(f)[0]
    if np.max(f.values) <= 0:
        return -schwarz_rearrange(-f)[0]
    raise DomainError("rearrangement needs a field of constant sign")


# ---------------------------------------------------------------------------
# radial profiles


@dataclass
class RadialProfile:
    """u_i(r) sampled at radii ((j + 1/2) w), w = h by default.

    For grid fields the profile is the least-squares cubic spline in
    r = |x - center| over all cells (``spline``), so rebuilding a field from
    it is a projection: a field that is already the spline of its radius is
    reproduced to rounding. Without a spline, values are interpolated
    linearly between the sampled radii.
    """

    radii: np.ndarray  # strictly increasing
    values: np.ndarray  # (m, K)
    center: np.ndarray
    deviation: np.ndarray  # (m, K) max |f - radialized f| over the shell [j w, (j+1) w)
    counts: np.ndarray  # cells per shell
    width: float
    spline: BSpline | None = None  # vector-valued, c.shape == (n_basis, m)

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        """Profile values at radii r. Returns (m,) + r.shape."""
        r = np.asarray(r, float)
        if self.spline is not None:
            t = self.spline.t
            out = self.spline(np.clip(r, t[0], t[-1]))
            return np.moveaxis(out, -1, 0)
        return np.stack([np.interp(r, self.radii, v) for v in self.values])

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r"] + [f"u{i + 1}" for i in range(self.values.shape[0])])
            for k, r in enumerate(self.radii):
                w.writerow([repr(float(r))] + [repr(float(v)) for v in self.values[:, k]])
        return path


def _knots(sites: np.ndarray, w: float, k: int = 3) -> np.ndarray:
    """Clamped knot vector on [0, max site]; every interval is at least w long
    and holds at least two sites, which keeps the fit well posed."""
    inner = []
    last, count = 0.0, 0
    for a, b in zip(sites[:-1], sites[1:]):
        count += 1
        mid = 0.5 * (a + b)
        if count >= 2 and mid - last >= w:
            inner.append(mid)
            last, count = mid, 0
    if inner and count + 1 < 2:
        inner.pop()  # fold a thin last interval into its neighbour
    top = float(sites[-1])
    return np.concatenate([[0.0] * (k + 1), inner, [top] * (k + 1)])


def _spline_fit(r: np.ndarray, u: np.ndarray, w: float) -> BSpline:
    """Least-squares cubic spline of the columns of u (cells, m) against r."""
    # cells at (numerically) the same radius enter once, weighted by their number
    key = np.round(r / w, 9)
    uniq, inv, cnt = np.unique(key, return_inverse=True, return_counts=True)
    sites = np.bincount(inv, weights=r) / cnt
    means = np.stack([np.bincount(inv, weights=u[:, i]) / cnt for i in range(u.shape[1])], -1)
    t = _knots(sites, w)
    return make_lsq_spline(sites, means, t, k=3, w=np.sqrt(cnt))


def radial_profile(f: Field, center=None, bin_width: float | None = None) -> RadialProfile:
    center = np.zeros(f.grid.dim) if center is None else np.asarray(center, float)
    w = f.grid.spacing if bin_width is None else float(bin_width)
    r = f.grid.radius(center).ravel()
    K = int(np.floor(r.max() / w - 0.5)) + 1
    nodes = (np.arange(K) + 0.5) * w
    spline = _spline_fit(r, f.values.reshape(f.m, -1).T, w)
    prof = RadialProfile(nodes, np.zeros((f.m, K)), center, np.zeros((f.m, K)),
                         np.zeros(K, dtype=np.int64), w, spline)
    prof.values = prof.evaluate(nodes)
    shell = np.minimum(np.floor(r / w).astype(np.int64), K - 1)
    prof.counts = np.bincount(shell, minlength=K)
    fitted = prof.evaluate(r)
    for i in range(f.m):
        np.maximum.at(prof.deviation[i], shell, np.abs(f.values[i].ravel() - fitted[i]))
    return prof


def radialize(f: Field, center=None, bin_width: float | None = None) -> Field:
    """Rebuild f from its radial profile about ``center`` (an L2 projection)."""
    prof = radial_profile(f, center, bin_width)
    r = f.grid.radius(prof.center)
    return Field(f.grid, prof.evaluate(r))


def energy_centroid(f: Field, p: float = 2.0) -> np.ndarray:
    """|grad u|^p-weighted barycentre, summed over components."""
    w = np.sum(gradient_norm(f) ** p, axis=0)
    total = np.sum(w)
    if total == 0:
        return np.zeros(f.grid.dim)
    return np.array([np.sum(np.broadcast_to(xj, f.grid.shape) * w) / total for xj in f.grid.coords()])


def shift_cells(f: Field, offsets) -> Field:
    """Translate by whole cells (exact); vacated cells are zero."""
    out = f.values
    for j, k in enumerate(offsets):
        k = int(k)
        if k == 0:
            continue
        moved = np.zeros_like(out)
        src = [slice(None)] * out.ndim
        dst = [slice(None)] * out.ndim
        if k > 0:
            src[j + 1], dst[j + 1] = slice(None, -k), slice(k, None)
        else:
            src[j + 1], dst[j + 1] = slice(-k, None), slice(None, k)
        moved[tuple(dst)] = out[tuple(src)]
        out = moved
    return Field(f.grid, out)


def recenter(f: Field, p: float = 2.0) -> tuple[Field, np.ndarray]:
    """Shift by whole cells so the energy centroid is within h/2 of the origin.

    Returns the shifted field and its remaining (sub-cell) centroid.
    """
    c = energy_centroid(f, p)
    k = -np.round(c / f.grid.spacing).astype(int)
    g = shift_cells(f, k)
    return g, energy_centroid(g, p)


def symmetry_metric(f: Field, center=None, p: float = 2.0, bin_width: float | None = None) -> float:
    """max_i ||u_i - radialize(u_i)||_p / ||u_i||_p."""
    rad = radialize(f, center, bin_width)
    worst = 0.0
    for i in range(f.m):
        denom = lp_norm(f.grid, f.values[i], p)
        if denom == 0:
            continue
        worst = max(worst, lp_norm(f.grid, f.values[i] - rad.values[i], p) / denom)
    return worst


# ---------------------------------------------------------------------------
# constraint-splitting hyperplanes


def _minus_fraction(proj: np.ndarray, t: float, ramp: float) -> np.ndarray:
    # fraction of each cell lying in {x.e < t}; linear across the cell's projected width
    return np.clip((t - proj) / ramp + 0.5, 0.0, 1.0)


def split_functions(f: Field, spec: ProblemSpec, e):
    """Return (phi_minus, V) with phi_minus(t) = integral of G(f) over {x.e < t}."""
    plane = Hyperplane(e, 0.0)
    proj = plane.signed_distance(_dense_coords(f.grid)).ravel()
    ramp = f.grid.spacing * np.sum(np.abs(plane.normal))
    dens = spec.nonlinearity.G(f.values).ravel() * f.grid.cell_volume
    total = float(np.sum(dens))
    # sort once so that each evaluation only touches the cells near the plane
    order = np.argsort(proj, kind="stable")
    proj_s, dens_s = proj[order], dens[order]
    csum = np.concatenate([[0.0], np.cumsum(dens_s)])

    def phi_minus(t: float) -> float:
        lo = np.searchsorted(proj_s, t - ramp / 2, side="left")
        hi = np.searchsorted(proj_s, t + ramp / 2, side="right")
        partial = np.sum(dens_s[lo:hi] * _minus_fraction(proj_s[lo:hi], t, ramp))
        return float(csum[lo] + partial)

    return phi_minus, total, plane.normal, (float(proj_s[0]) - ramp, float(proj_s[-1]) + ramp)


def _bisect(func, a, b, fa, tol, max_iter=100):
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = func(mid)
        if fm == 0 or b - a <= tol:
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def split_search(f: Field, spec: ProblemSpec, e, target: str = "half_lambda",
                 step: float | None = None) -> Hyperplane:
    """Hyperplane orthogonal to e that splits the integral of G(f) as requested.

    ``half_lambda``: both open half-spaces carry V(f)/2 (needs V(f) > 0).
    ``zero``: both half-spaces carry 0, with f nonzero on each side; intended
    for V(f) = 0 and G < 0 near zero.
    """
    if target not in ("half_lambda", "zero"):
        raise ValueError("target must be 'half_lambda' or 'zero'")
    phi_minus, total, e_unit, (tmin, tmax) = split_functions(f, spec, e)
    h = f.grid.spacing
    step = 0.5 * h if step is None else step
    ts = np.arange(tmin, tmax + step, step)
    phis = np.array([phi_minus(t) for t in ts])
    scanned = list(zip(ts.tolist(), phis.tolist()))
    tol = 1e-10 * h

    if target == "half_lambda":
        if total <= 0:
            raise DomainError(f"half_lambda split needs V(f) > 0, got {total:.6g}")
        psi = phis - total / 2
        cross = np.nonzero((psi[:-1] < 0) & (psi[1:] >= 0))[0]
        if cross.size == 0:
            raise NotBracketed("phi_minus - V/2 never changes sign", scanned)
        k = int(cross[0])
        t_e = _bisect(lambda t: phi_minus(t) - total / 2, ts[k], ts[k + 1], psi[k], tol)
        return Hyperplane(e_unit, t_e)

    proj = Hyperplane(e_unit, 0.0).signed_distance(_dense_coords(f.grid))
    nz = np.any(f.values != 0, axis=0)
    has_minus = np.array([np.any(nz & (proj < t)) for t in ts])
    has_plus = np.array([np.any(nz & (proj > t)) for t in ts])
    phis_plus = total - phis
    cand_minus = np.where(has_minus, phis, np.inf)
    cand_plus = np.where(has_plus, phis_plus, np.inf)
    k_minus = int(np.argmin(cand_minus))
    k_plus = int(np.argmin(cand_plus))
    if not (cand_minus[k_minus] < 0 and cand_plus[k_plus] < 0 and k_minus < k_plus):
        raise NotBracketed("no t- < t+ with phi_minus(t-) < 0 and phi_plus(t+) < 0", scanned)
    fa = phis_plus[k_minus]
    if fa <= 0:
        raise NotBracketed("phi_plus(t-) is not positive; V(f) is too negative", scanned)
    t_e = _bisect(lambda t: total - phi_minus(t), ts[k_minus], ts[k_plus], fa, tol)
    return Hyperplane(e_unit, t_e)


def split_parts(f: Field, spec: ProblemSpec, plane: Hyperplane) -> tuple[float, float]:
    """(integral of G(f) over {x.e < t}, over {x.e > t}) with the same partial-cell rule."""
    phi_minus, total, _, _ = split_functions(f, spec, plane.normal)
    pm = phi_minus(plane.offset)
    return pm, total - pm


def level_set_volume(f: Field, t: float) -> float:
    return float(np.count_nonzero(f.values > t) * f.grid.cell_volume)


def support_radius(f: Field, t: float) -> float:
    """Radius of the ball with the volume of {f > t}."""
    return (level_set_volume(f, t) / unit_ball_volume(f.grid.dim)) ** (1 / f.grid.dim)


__all__ = [
    "dilate", "rescale_grid", "Hyperplane", "reflect", "truncate", "positive_part", "negative_part",
    "find_zero_truncation", "LevelSetTable", "level_set_table", "schwarz_rearrange",
    "rearrange_signed", "rearranged_energy", "rearranged_profile", "induced_radial_field", "RadialProfile", "radial_profile", "radialize", "energy_centroid",
    "shift_cells", "recenter", "symmetry_metric", "split_search", "split_parts", "split_functions",
    "level_set_volume", "support_radius",
]

