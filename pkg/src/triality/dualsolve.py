"""Enumeration and triality classification of canonical dual roots.

For the measure Lambda(gamma) = a|gamma|^2 + b, stationarity of the total
complementary functional eliminates the strain pointwise and leaves one scalar
equation per material point,

    D(zeta) = 4a * zeta^2 * (dVstar(zeta) - b) - tau^2 = 0.

The left-hand side vanishes at zeta = 0 and grows monotonically to +inf on
zeta > 0, so exactly one positive root exists for any tau^2 > 0.  For the
built-in models the negative side carries at most one interior maximum (the
fold at zeta_c with level eta^2) giving zero, one (tau = eta) or two
negative roots; other energy/measure combinations go through a sign-scan
fallback that brackets every monotone piece.  Each root is classified from
the sign of zeta and the eigenvalues of the Hessian of the composed stored
energy W(gamma) = V(Lambda(gamma)):

    H = 2a*zeta*I + 4a^2*d2V(xi) * gamma x gamma,   gamma = tau / (2a*zeta),

whose spectrum is {2a*zeta (dim-1 times), 2a*zeta + 4a^2*d2V(xi)*|gamma|^2}.

The residual convention is configurable: "derived" keeps the 4a factor that
makes the primal and dual energies agree at every root; "paper-eq45" drops it
and reproduces the single-factor form of the published log-model curve (woven
through the CLI for figure data; it does not satisfy the duality identity).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .canonical import (
    CanonicalEnergy,
    LogNeoHookeanEnergy,
    QuadraticEnergy,
    QuadraticMeasure,
    d2V,
    d2Vstar,
    dVstar,
    kind_params,
)
from .errors import DomainError, RootSolveError, SingularDualError

RESIDUAL_CONVENTIONS = ("derived", "paper-eq45")

#: scale-aware zero tolerance for Hessian eigenvalues
EIG_ZERO_RTOL = 1e-12


class TrialityLabel(enum.Enum):
    GLOBAL_MIN = "global_min"
    LOCAL_MIN = "local_min"
    LOCAL_MAX = "local_max"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"

    def __str__(self) -> str:  # CSV-friendly
        return self.value


@dataclass(frozen=True)
class SolverOptions:
    """Root-refinement options: residual tolerance (relative to max(1, tau^2)),
    iteration cap, and grid size for the generic critical-point scan."""

    tol: float = 1e-12
    max_iter: int = 200
    scan_points: int = 10_000


@dataclass(frozen=True)
class DualRoot:
    zeta: float
    residual: float
    label: TrialityLabel


@dataclass(frozen=True)
class DualRootSet:
    """All real dual roots at one material point, descending in zeta."""

    tau_sq: float
    roots: tuple[DualRoot, ...]

    def __len__(self) -> int:
        return len(self.roots)

    def zetas(self) -> tuple[float, ...]:
        return tuple(r.zeta for r in self.roots)

    def positive(self) -> Optional[DualRoot]:
        for r in self.roots:
            if r.zeta > 0.0:
                return r
        return None


class FoldThreshold(NamedTuple):
    zeta_c: float
    eta: float


def residual_factor(m: QuadraticMeasure, convention: str = "derived") -> float:
    """Multiplier on zeta^2*(dVstar - b) in the dual residual."""
    if convention == "derived":
        return 4.0 * m.a
    if convention == "paper-eq45":
        return 1.0
    raise ValueError(f"unknown residual convention {convention!r}; expected one of {RESIDUAL_CONVENTIONS}")


def dual_residual(energy: CanonicalEnergy, m: QuadraticMeasure, zeta, tau_sq,
                  convention: str = "derived"):
    """D(zeta) = factor*zeta^2*(dVstar(zeta) - b) - tau^2 (vectorized in zeta)."""
    z = np.asarray(zeta, dtype=float)
    if np.any(z == 0.0):
        raise SingularDualError("dual residual is taken at zeta = 0; the dual density is singular there")
    f = residual_factor(m, convention)
    out = f * z * z * (dVstar(energy, z) - m.b) - tau_sq
    return float(out) if out.ndim == 0 else out


def _closed_form_geometry(energy: CanonicalEnergy, m: QuadraticMeasure,
                          convention: str):
    """(zeta_c, eta^2, z0neg) of the negative branch for the built-in cases.

    Returns None when no closed form exists (the generic scan path is used
    instead); nan entries mean the feature is absent: zc = nan is "no
    negative roots at all", z0neg = nan is "the curve only decays to zero at
    -inf" (log model) rather than crossing it.
    """
    f = residual_factor(m, convention)
    if isinstance(energy, QuadraticEnergy):
        if m.b >= 0.0:
            return math.nan, math.nan, math.nan
        zc = 2.0 * m.b * energy.alpha / 3.0
        z0neg = energy.alpha * m.b
        eta_sq = f * zc * zc * (zc / energy.alpha - m.b)
        return zc, eta_sq, z0neg
    if isinstance(energy, LogNeoHookeanEnergy) and m.b == 0.0:
        zc = -2.0 * energy.c2
        eta_sq = f * zc * zc * dVstar(energy, zc)
        return zc, eta_sq, math.nan
    return None


def _scan_grid(scan_points: int) -> np.ndarray:
    """Symmetric logarithmic zeta grid over [-1e3, 1e3], excluding zero."""
    mags = np.logspace(-8.0, 3.0, max(scan_points // 2, 100))
    return np.concatenate([-mags[::-1], mags])


def _critical_points(energy, m, grid) -> list[float]:
    """Interior critical points of the dual curve by derivative sign scan."""
    def slope(z):
        with np.errstate(over="ignore", invalid="ignore"):
            return 2.0 * (dVstar(energy, z) - m.b) + z * d2Vstar(energy, z)

    g = slope(grid)
    out = []
    for i in np.nonzero(np.diff(np.sign(g)) != 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        if lo < 0.0 < hi:
            continue  # the join across zero is not an interior point
        ref = g[i]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (slope(mid) > 0) == (ref > 0):
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return out


def fold_threshold(energy: CanonicalEnergy, m: QuadraticMeasure,
                   convention: str = "derived") -> FoldThreshold:
    """Negative critical point zeta_c and fold level eta.

    The root count of the dual equation drops from three to one as tau crosses
    eta.  Closed form for the built-in models: zeta_c = -2*c2 for the log
    model, zeta_c = 2*b*alpha/3 for the quadratic one (b < 0 required); other
    combinations fall back to the derivative sign scan.
    """
    geom = _closed_form_geometry(energy, m, convention)
    if geom is None:
        f = residual_factor(m, convention)
        neg = [c for c in _critical_points(energy, m, _scan_grid(10_000)) if c < 0.0]
        if len(neg) > 1:
            raise NotImplementedError(
                "multiple negative critical points of the dual curve; "
                "model outside the supported family"
            )
        geom = ((neg[0], f * neg[0] ** 2 * (dVstar(energy, neg[0]) - m.b), math.nan)
                if neg else (math.nan, math.nan, math.nan))
    zc, eta_sq, _ = geom
    if not math.isfinite(zc):
        raise NotImplementedError(
            "no negative-branch fold for this energy/measure combination "
            "(quadratic energy requires b < 0)"
        )
    return FoldThreshold(zc, math.sqrt(eta_sq))


def _hessian_eigs(energy, m, zeta, tau_sq):
    """(along, perpendicular) Hessian eigenvalues at gamma = tau/(2a*zeta)."""
    a = m.a
    xi = dVstar(energy, zeta)
    gsq = tau_sq / (4.0 * a * a * zeta * zeta)
    along = 2.0 * a * zeta + 4.0 * a * a * d2V(energy, xi) * gsq
    return along, 2.0 * a * zeta


def _label_scalar(energy, m, zeta, tau_sq, dim) -> TrialityLabel:
    if zeta == 0.0:
        raise SingularDualError("cannot classify the trivial branch zeta = 0")
    if zeta > 0.0:
        return TrialityLabel.GLOBAL_MIN
    along, perp = _hessian_eigs(energy, m, zeta, tau_sq)
    eigs = [along] + [perp] * (dim - 1)
    tol = EIG_ZERO_RTOL * (1.0 + abs(2.0 * m.a * zeta))
    if any(abs(e) <= tol for e in eigs):
        return TrialityLabel.DEGENERATE
    if all(e > 0.0 for e in eigs):
        return TrialityLabel.LOCAL_MIN
    if all(e < 0.0 for e in eigs):
        return TrialityLabel.LOCAL_MAX
    return TrialityLabel.SADDLE


def classify_root(energy: CanonicalEnergy, m: QuadraticMeasure, zeta: float,
                  tau_vec) -> TrialityLabel:
    """Triality label of a verified root for the stress vector tau_vec.

    zeta > 0 is a global minimizer outright; for zeta < 0 the label follows
    the definiteness of the composed-energy Hessian at gamma = tau/(2a*zeta),
    with a scale-aware zero tolerance on the eigenvalues.
    """
    t = np.asarray(tau_vec, dtype=float).ravel()
    return _label_scalar(energy, m, float(zeta), float(t @ t), t.size)


def _scalar_newton(energy, m, factor, t2, lo, hi, tol, max_iter):
    """Safeguarded Newton on one bracket (generic fallback path)."""
    def D(z):
        with np.errstate(over="ignore", invalid="ignore"):
            return factor * z * z * (dVstar(energy, z) - m.b) - t2

    def Dp(z):
        with np.errstate(over="ignore", invalid="ignore"):
            return factor * (2.0 * z * (dVstar(energy, z) - m.b) + z * z * d2Vstar(energy, z))

    fhi = D(hi)
    x = 0.5 * (lo + hi)
    fx = D(x)
    for _ in range(max_iter):
        if abs(fx) <= tol:
            return x, fx
        if (fx > 0.0) == (fhi > 0.0):
            hi, fhi = x, fx
        else:
            lo = x
        fp = Dp(x)
        xn = x - fx / fp if fp != 0.0 else math.nan
        if not (math.isfinite(xn) and lo < xn < hi):
            xn = 0.5 * (lo + hi)
        x = xn
        fx = D(x)
    raise RootSolveError(
        f"dual root iteration did not converge: best zeta={x!r}, |D|={abs(fx)!r}",
        best_zeta=x, best_residual=fx,
    )


def _generic_roots_point(energy, m, factor, t2, opts):
    """All roots at one point by the sign-scan fallback.

    Scans the dual curve on a logarithmic grid, refines every sign-change
    bracket, and adds tangent (fold) roots at critical points whose level
    matches tau^2.  Returns (zeta, residual, degenerate) triples.
    """
    grid = _scan_grid(opts.scan_points)
    tol = opts.tol * max(1.0, t2)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = factor * grid * grid * (dVstar(energy, grid) - m.b) - t2
    found: list[tuple[float, float, bool]] = []

    def is_new(z):
        return all(abs(z - p[0]) > 1e-9 * (1.0 + abs(z)) for p in found)

    for i in np.nonzero(np.diff(np.sign(vals)) != 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        if vals[i] == 0.0 or vals[i + 1] == 0.0:
            continue  # exact zeros handled below; skips underflow plateaus
        if lo < 0.0 < hi:
            continue  # zeta = 0 is excluded from the dual feasible set
        r, res = _scalar_newton(energy, m, factor, t2, lo, hi, tol, opts.max_iter)
        if is_new(r):
            found.append((r, res, False))
    # isolated exact zeros are genuine roots that landed on a grid point; a
    # run of zeros is the underflow floor of a strictly positive curve
    for i in np.nonzero(vals == 0.0)[0]:
        left = vals[i - 1] if i > 0 else 0.0
        right = vals[i + 1] if i + 1 < vals.size else 0.0
        if left != 0.0 and right != 0.0 and is_new(grid[i]):
            found.append((float(grid[i]), 0.0, False))
    # critical points: a level match is a tangent (fold) root; otherwise split
    # the enclosing cell there, which resolves root pairs closer than the grid
    for c in _critical_points(energy, m, grid):
        dc = factor * c * c * (dVstar(energy, c) - m.b) - t2
        if abs(dc) <= _kernels._DEGENERATE_RTOL * max(1.0, t2):
            if is_new(c):
                found.append((c, dc, True))
            continue
        j = int(np.searchsorted(grid, c)) - 1
        for lo, hi, flo, fhi in ((grid[j], c, vals[j], dc),
                                 (c, grid[j + 1], dc, vals[j + 1])):
            if flo != 0.0 and fhi != 0.0 and (flo > 0.0) != (fhi > 0.0):
                r, res = _scalar_newton(energy, m, factor, t2, lo, hi, tol, opts.max_iter)
                if is_new(r):
                    found.append((r, res, False))
    return found


def solve_roots_array(energy: CanonicalEnergy, m: QuadraticMeasure, tau_sq,
                      opts: SolverOptions | None = None,
                      convention: str = "derived"):
    """Enumerate dual roots for an array of tau^2 values.

    Returns (roots, residuals, degenerate, counts): roots is (n, 3) nan-padded
    with slot 0 the positive root and slots 1-2 the negative roots descending;
    degenerate marks fold roots reported once at zeta_c.  Built-in models go
    through the batch kernels; other energy/measure combinations use the
    generic scan fallback point by point.
    """
    opts = opts or SolverOptions()
    t2 = np.ascontiguousarray(tau_sq, dtype=float)
    if np.any(~np.isfinite(t2)) or np.any(t2 < 0.0):
        raise DomainError("tau^2 values must be finite and nonnegative")
    factor = residual_factor(m, convention)
    geom = _closed_form_geometry(energy, m, convention)
    if geom is not None:
        kind, p1, p2 = kind_params(energy)
        zc, eta_sq, z0neg = geom
        roots, resid, flags, counts = _kernels.solve_roots_batch(
            kind, p1, p2, m.b, factor, t2, opts.tol, opts.max_iter, zc, eta_sq, z0neg
        )
        if np.any(flags == 2):
            i, k = np.argwhere(flags == 2)[0]
            raise RootSolveError(
                f"dual root iteration did not converge at point {i} (slot {k}): "
                f"best zeta={roots[i, k]!r}, |D|={abs(resid[i, k])!r}",
                best_zeta=float(roots[i, k]),
                best_residual=float(resid[i, k]),
            )
        return roots, resid, flags == 1, counts

    n = t2.size
    roots = np.full((n, 3), np.nan)
    resid = np.zeros((n, 3))
    deg = np.zeros((n, 3), dtype=bool)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        found = _generic_roots_point(energy, m, factor, float(t2[i]), opts)
        pos = [f for f in found if f[0] > 0.0]
        neg = sorted((f for f in found if f[0] < 0.0), key=lambda f: -f[0])
        if len(pos) > 1 or len(neg) > 2:
            raise NotImplementedError(
                f"{len(found)} real dual roots at tau^2={t2[i]}; "
                "more than three is outside the supported model family"
            )
        slotted = [(0, f) for f in pos] + [(j + 1, f) for j, f in enumerate(neg)]
        for k, (z, r, d) in slotted:
            roots[i, k] = z
            resid[i, k] = r
            deg[i, k] = d
        counts[i] = len(found)
    return roots, resid, deg, counts


def solve_all_roots(energy: CanonicalEnergy, m: QuadraticMeasure, tau_sq: float,
                    opts: SolverOptions | None = None, dim: int = 1,
                    convention: str = "derived") -> DualRootSet:
    """All real dual roots at one material point, labeled and ordered.

    Parameters
    ----------
    tau_sq : squared stress magnitude at the point (>= 0).
    dim : dimension of the strain vector, used for the Hessian spectrum in
        the labels (1 for bars, 2 for anti-plane sections, 9 for 3x3 tensors).
    """
    roots, resid, degenerate, _ = solve_roots_array(
        energy, m, np.asarray([tau_sq], dtype=float), opts, convention
    )
    out = []
    for k in range(3):
        z = roots[0, k]
        if np.isnan(z):
            continue
        if degenerate[0, k]:
            label = TrialityLabel.DEGENERATE
        else:
            label = _label_scalar(energy, m, float(z), float(tau_sq), dim)
        out.append(DualRoot(float(z), float(resid[0, k]), label))
    out.sort(key=lambda r: -r.zeta)
    return DualRootSet(float(tau_sq), tuple(out))


def label_array(energy: CanonicalEnergy, m: QuadraticMeasure, roots, tau_sq,
                degenerate, dim: int):
    """Per-point labels for a roots array from solve_roots_array (object array)."""
    roots = np.asarray(roots)
    out = np.empty(roots.shape, dtype=object)
    t2 = np.asarray(tau_sq, dtype=float)
    for i in range(roots.shape[0]):
        for k in range(roots.shape[1]):
            z = roots[i, k]
            if np.isnan(z):
                out[i, k] = None
            elif degenerate[i, k]:
                out[i, k] = TrialityLabel.DEGENERATE
            else:
                out[i, k] = _label_scalar(energy, m, float(z), float(t2[i]), dim)
    return out
