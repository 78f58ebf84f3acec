"""Problem configuration: flat key = value files, validation, and assembly
of grids and loading fields for one instance.

Schema (unknown keys are rejected):

    model          double_well | log_neohookean
    alpha          double_well stiffness (default 1.0)
    c1, c2         log_neohookean constants (default 1.0, must be > 0)
    measure_a/_b   measure override; defaults per model:
                   double_well -> (0.5, -1.0), log_neohookean -> (1.0, 0.0)
    geometry       interval | rectangle
    length, n      interval extent and node count
    lx, ly, nx, ny rectangle extent and node counts (nx, ny >= 3)
    origin_x/_y    rectangle origin (default 0)
    fixed_edges    interval: left | right; rectangle: comma list of edges
    loading        constant_tau | stream_function
    tau_x, tau_y   constant stress components (tau_y rectangle only)
    stream         linear | bilinear | quadratic (stream-function catalog)
    stream_scale   stream function scale (default 1.0)
    tol, max_iter, scan_points   dual-root solver options
    curl_tol       reconstruction curl tolerance (default 1e-6 * max|gamma|)
    oracle_starts, oracle_seed, oracle_span   multistart oracle controls
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .canonical import (
    CanonicalEnergy,
    LogNeoHookeanEnergy,
    QuadraticEnergy,
    QuadraticMeasure,
)
from .dualsolve import SolverOptions
from .errors import ConfigError, DomainError
from .fields import EDGES, Grid2, VectorField2

DEFAULT_MEASURES = {
    "double_well": (0.5, -1.0),
    "log_neohookean": (1.0, 0.0),
}

#: divergence-free stream-function catalog: name -> psi(x, y)
STREAM_CATALOG: dict[str, Callable] = {
    "linear": lambda x, y, s: s * y,                 # tau = (s, 0)
    "bilinear": lambda x, y, s: s * x * y,           # tau = (s*x, -s*y)
    "quadratic": lambda x, y, s: s * (x * x - y * y),  # tau = (-2*s*y, -2*s*x)
}


@dataclass(frozen=True)
class IntervalGeometry:
    length: float
    n: int
    fixed_end: str = "left"  # left | right


@dataclass(frozen=True)
class RectangleGeometry:
    lx: float
    ly: float
    nx: int
    ny: int
    origin: tuple[float, float] = (0.0, 0.0)
    fixed_edges: frozenset[str] = field(default_factory=lambda: frozenset({"left"}))


Geometry = Union[IntervalGeometry, RectangleGeometry]


@dataclass(frozen=True)
class ConstantTau:
    vec: tuple[float, ...]


@dataclass(frozen=True)
class StreamLoading:
    name: str
    scale: float = 1.0


Loading = Union[ConstantTau, StreamLoading]


@dataclass(frozen=True)
class OracleOptions:
    n_starts: int = 50
    seed: int = 1234
    span: float = 2.0


@dataclass(frozen=True)
class ProblemSpec:
    energy: CanonicalEnergy
    measure: QuadraticMeasure
    geometry: Geometry
    loading: Loading
    solver: SolverOptions = SolverOptions()
    oracle: OracleOptions = OracleOptions()
    curl_tol: float | None = None

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.geometry, IntervalGeometry) else 2


_KEYS = {
    "model", "alpha", "c1", "c2", "measure_a", "measure_b",
    "geometry", "length", "n", "lx", "ly", "nx", "ny", "origin_x", "origin_y",
    "fixed_edges", "loading", "tau_x", "tau_y", "stream", "stream_scale",
    "tol", "max_iter", "scan_points", "curl_tol",
    "oracle_starts", "oracle_seed", "oracle_span",
}


def _parse_kv(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate config key '{key}'")
        out[key] = value
    return out


def _get_float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required config key '{key}'")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise ConfigError(f"config key '{key}': not a number: {kv[key]!r}") from None


def _get_int(kv, key, default=None):
    v = _get_float(kv, key, default)
    if v != int(v):
        raise ConfigError(f"config key '{key}': expected an integer, got {kv[key]!r}")
    return int(v)


def parse_config(path) -> ProblemSpec:
    """Parse and validate one problem configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    kv = _parse_kv(path)

    model = kv.get("model")
    if model not in DEFAULT_MEASURES:
        raise ConfigError(f"config key 'model': expected double_well or log_neohookean, got {model!r}")
    try:
        if model == "double_well":
            energy: CanonicalEnergy = QuadraticEnergy(alpha=_get_float(kv, "alpha", 1.0))
        else:
            energy = LogNeoHookeanEnergy(c1=_get_float(kv, "c1", 1.0), c2=_get_float(kv, "c2", 1.0))
        da, db = DEFAULT_MEASURES[model]
        measure = QuadraticMeasure(a=_get_float(kv, "measure_a", da), b=_get_float(kv, "measure_b", db))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc

    geom_kind = kv.get("geometry")
    if geom_kind == "interval":
        length = _get_float(kv, "length", 1.0)
        n = _get_int(kv, "n", 65)
        if length <= 0:
            raise ConfigError("config key 'length': must be positive")
        if n < 2:
            raise ConfigError("config key 'n': need at least 2 nodes")
        fixed = kv.get("fixed_edges", "left")
        if fixed not in ("left", "right"):
            raise ConfigError(
                "config key 'fixed_edges': interval needs exactly one fixed end "
                "(left or right); a mixed problem requires one traction end"
            )
        geometry: Geometry = IntervalGeometry(length=length, n=n, fixed_end=fixed)
    elif geom_kind == "rectangle":
        lx, ly = _get_float(kv, "lx", 1.0), _get_float(kv, "ly", 1.0)
        nx, ny = _get_int(kv, "nx", 33), _get_int(kv, "ny", 33)
        if lx <= 0 or ly <= 0:
            raise ConfigError("config keys 'lx'/'ly': extents must be positive")
        if nx < 3 or ny < 3:
            raise ConfigError("config keys 'nx'/'ny': need at least 3 nodes per direction")
        fixed = frozenset(s.strip() for s in kv.get("fixed_edges", "left").split(",") if s.strip())
        if not fixed:
            raise ConfigError(
                "config key 'fixed_edges': no fixed edge given; a pure-traction problem "
                "is translation-invariant and has no unique solution (mixed boundary "
                "conditions are required)"
            )
        if not fixed <= set(EDGES):
            raise ConfigError(f"config key 'fixed_edges': unknown edge in {sorted(fixed)}; expected subset of {EDGES}")
        if fixed == set(EDGES):
            raise ConfigError(
                "config key 'fixed_edges': all edges fixed; at least one traction edge "
                "is required to load the body"
            )
        geometry = RectangleGeometry(
            lx=lx, ly=ly, nx=nx, ny=ny,
            origin=(_get_float(kv, "origin_x", 0.0), _get_float(kv, "origin_y", 0.0)),
            fixed_edges=fixed,
        )
    else:
        raise ConfigError(f"config key 'geometry': expected interval or rectangle, got {geom_kind!r}")

    load_kind = kv.get("loading")
    if load_kind == "constant_tau":
        tau_x = _get_float(kv, "tau_x")
        if geom_kind == "interval":
            if "tau_y" in kv:
                raise ConfigError("config key 'tau_y': not meaningful for interval geometry")
            loading: Loading = ConstantTau((tau_x,))
        else:
            loading = ConstantTau((tau_x, _get_float(kv, "tau_y", 0.0)))
    elif load_kind == "stream_function":
        if geom_kind != "rectangle":
            raise ConfigError("config key 'loading': stream_function requires rectangle geometry")
        name = kv.get("stream", "linear")
        if name not in STREAM_CATALOG:
            raise ConfigError(f"config key 'stream': unknown stream function {name!r}; "
                              f"catalog: {sorted(STREAM_CATALOG)}")
        loading = StreamLoading(name=name, scale=_get_float(kv, "stream_scale", 1.0))
    else:
        raise ConfigError(f"config key 'loading': expected constant_tau or stream_function, got {load_kind!r}")

    solver = SolverOptions(
        tol=_get_float(kv, "tol", 1e-12),
        max_iter=_get_int(kv, "max_iter", 200),
        scan_points=_get_int(kv, "scan_points", 10_000),
    )
    oracle = OracleOptions(
        n_starts=_get_int(kv, "oracle_starts", 50),
        seed=_get_int(kv, "oracle_seed", 1234),
        span=_get_float(kv, "oracle_span", 2.0),
    )
    curl_tol = _get_float(kv, "curl_tol", -1.0)
    return ProblemSpec(
        energy=energy, measure=measure, geometry=geometry, loading=loading,
        solver=solver, oracle=oracle, curl_tol=None if curl_tol <= 0 else curl_tol,
    )


# ---------------------------------------------------------------------------
# instance assembly
# ---------------------------------------------------------------------------

def build_grid(spec: ProblemSpec) -> Grid2:
    g = spec.geometry
    if not isinstance(g, RectangleGeometry):
        raise TypeError("build_grid applies to rectangle geometry only")
    return Grid2(
        nx=g.nx, ny=g.ny, hx=g.lx / (g.nx - 1), hy=g.ly / (g.ny - 1),
        origin=g.origin, fixed_edges=g.fixed_edges,
    )


def interval_nodes(spec: ProblemSpec) -> np.ndarray:
    g = spec.geometry
    if not isinstance(g, IntervalGeometry):
        raise TypeError("interval_nodes applies to interval geometry only")
    return np.linspace(0.0, g.length, g.n)


def build_tau_grid(spec: ProblemSpec, grid: Grid2) -> VectorField2:
    """Nodal stress field on a rectangle.

    Stream loadings go through the discrete curl construction, which is
    divergence-free by structure and stencil-exact for the polynomial
    catalog; constant loadings are written directly.
    """
    load = spec.loading
    if isinstance(load, ConstantTau):
        vals = np.empty(grid.shape + (2,))
        vals[..., 0] = load.vec[0]
        vals[..., 1] = load.vec[1]
        return VectorField2(grid, vals)
    from .fields import ScalarField, stress_from_stream

    X, Y = grid.coords()
    psi = STREAM_CATALOG[load.name](X, Y, load.scale)
    return stress_from_stream(ScalarField(grid, np.broadcast_to(psi, grid.shape).copy()))


def build_tau_interval(spec: ProblemSpec, x: np.ndarray) -> np.ndarray:
    """Constant 1-D stress from the end traction (statics on an interval)."""
    load = spec.loading
    if not isinstance(load, ConstantTau):
        raise ConfigError("interval geometry supports constant_tau loading only")
    return np.full(x.size, load.vec[0])


def stream_values(spec: ProblemSpec, grid: Grid2) -> np.ndarray | None:
    """Nodal stream function values when the loading is a stream function."""
    load = spec.loading
    if not isinstance(load, StreamLoading):
        return None
    X, Y = grid.coords()
    return STREAM_CATALOG[load.name](X, Y, load.scale)
