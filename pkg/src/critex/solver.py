"""Critical points of the reduced problem: every chart, multi-start Newton.

For a chart with dependent block V the first-order condition J_i = 0 is
cleared of its denominator det G'_V by writing it as the bordered determinant

    C_i = det [[f_i, f_V], [G_{:,i}, G'_V]] = det(G'_V) * J_i,

so each chart contributes the square polynomial system {C_i = 0, G = 0}.
Roots where det G'_V vanishes are discarded; another chart must find them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .charts import Chart, ConstrainedProblem, chart_strength
from .expr import Poly, is_exact
from .linalg import poly_det

SNAP_DENOMINATOR = 1000


@dataclass(frozen=True)
class SearchConfig:
    box: tuple[tuple[float, float], ...] | float = 10.0
    seeds_per_axis: int | None = None
    seed_budget: int = 20000
    max_iter: int = 80
    constraint_tol: float = 1e-9
    gradient_tol: float = 1e-9
    dedup_radius: float = 1e-6
    rank_tol: float = 1e-9
    detect_families: bool = True
    extra_seeds: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.constraint_tol <= 0 or self.gradient_tol <= 0 or self.dedup_radius <= 0:
            raise ValueError("tolerances must be positive")
        if self.seeds_per_axis is not None and self.seeds_per_axis < 1:
            raise ValueError("seeds_per_axis must be positive")

    def bounds(self, d: int) -> np.ndarray:
        if isinstance(self.box, (int, float)):
            if not math.isfinite(self.box) or self.box <= 0:
                raise ValueError("box half-width must be finite and positive")
            return np.array([[-float(self.box), float(self.box)]] * d)
        b = np.array(self.box, dtype=float)
        if b.shape == (2,):
            b = np.tile(b, (d, 1))
        if b.shape != (d, 2) or not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
            raise ValueError(f"box must give finite (lo, hi) pairs for {d} variables")
        return b

    def axis_count(self, d: int) -> int:
        if self.seeds_per_axis is not None:
            return self.seeds_per_axis
        return max(3, int(math.floor(self.seed_budget ** (1.0 / d) + 1e-9)))


@dataclass
class CriticalPoint:
    X: tuple
    chart: Chart
    constraint_residual: float
    gradient_residual: float
    rank: int
    nullity: int
    family_flag: bool = False
    family_id: int | None = None

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for x in self.X)

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.X])


@dataclass
class Family:
    id: int
    dimension: int
    samples: list[tuple]
    tangents: list[np.ndarray]
    member_count: int


@dataclass
class ChartStats:
    chart: Chart
    skipped: bool
    seeds: int = 0
    converged: int = 0
    accepted: int = 0


@dataclass
class SearchResult:
    points: list[CriticalPoint]
    families: list[Family] = field(default_factory=list)
    stats: list[ChartStats] = field(default_factory=list)

    @property
    def isolated(self) -> list[CriticalPoint]:
        return [p for p in self.points if not p.family_flag]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


class RefineError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# compiled polynomial systems


class _Compiled:
    """Several polynomials sharing one monomial table, evaluated in batch."""

    def __init__(self, polys: Sequence[Poly], nvars: int):
        monos = sorted({m for p in polys for m in p.terms})
        self.nvars = nvars
        self.exps = np.array(monos, dtype=np.int64).reshape(len(monos), nvars)
        index = {m: k for k, m in enumerate(monos)}
        self.coef = np.zeros((len(polys), len(monos)))
        for r, p in enumerate(polys):
            for m, c in p.terms.items():
                self.coef[r, index[m]] = float(c)
        self.abscoef = np.abs(self.coef)
        self.maxdeg = int(self.exps.max()) if self.exps.size else 0

    def _monomials(self, X: np.ndarray) -> np.ndarray:
        N = X.shape[0]
        if self.exps.shape[0] == 0:
            return np.zeros((N, 0))
        # power table avoids repeated pow calls
        pw = np.ones((self.maxdeg + 1, N, self.nvars))
        for e in range(1, self.maxdeg + 1):
            pw[e] = pw[e - 1] * X
        out = np.ones((N, self.exps.shape[0]))
        for j in range(self.nvars):
            out *= pw[self.exps[:, j], :, j].T
        return out

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self._monomials(X) @ self.coef.T

    def magnitude(self, X: np.ndarray) -> np.ndarray:
        return self._monomials(np.abs(X)) @ self.abscoef.T


@dataclass
class _ChartSystem:
    chart: Chart
    equations: list[Poly]
    det_poly: Poly
    F: _Compiled
    J: _Compiled
    D: _Compiled
    GJ: _Compiled
    GF: _Compiled

    def residual(self, X):
        return self.F(X)

    def jacobian(self, X):
        p, d = len(self.equations), self.F.nvars
        return self.J(X).reshape(X.shape[0], p, d)


def _chart_system(problem: ConstrainedProblem, dependent: tuple[int, ...]) -> _ChartSystem | None:
    cache = problem.__dict__.setdefault("_chart_systems", {})
    if dependent in cache:
        return cache[dependent]
    d, m = problem.d, problem.m
    chart = Chart.from_dependent(dependent, d)
    V = chart.dependent
    minor = [[problem.jac[a][v] for v in V] for a in range(m)]
    det_poly = poly_det(minor, d)
    if det_poly.is_zero():
        cache[dependent] = None
        return None
    eqs = []
    for i in chart.independent:
        top = [problem.grad_f[i]] + [problem.grad_f[v] for v in V]
        rows = [top] + [[problem.jac[a][i]] + minor[a] for a in range(m)]
        eqs.append(poly_det(rows, d))
    eqs.extend(problem.constraints)
    jac = [e.diff(j) for e in eqs for j in range(d)]
    gj = [p for row in problem.jac for p in row]
    sysm = _ChartSystem(chart, eqs, det_poly, _Compiled(eqs, d), _Compiled(jac, d),
                        _Compiled([det_poly], d), _Compiled(gj, d), _Compiled(problem.grad_f, d))
    cache[dependent] = sysm
    return sysm


def chart_systems(problem: ConstrainedProblem) -> list[tuple[Chart, _ChartSystem | None]]:
    out = []
    for dep in combinations(range(problem.d), problem.m):
        out.append((Chart.from_dependent(dep, problem.d), _chart_system(problem, dep)))
    return out


# ---------------------------------------------------------------------------
# batched Newton


def _solve_steps(Jm: np.ndarray, F: np.ndarray) -> np.ndarray:
    N, p, d = Jm.shape
    steps = np.empty((N, d))
    if p == d:
        dets = np.abs(np.linalg.det(Jm))
        scale = np.max(np.abs(Jm), axis=(1, 2)) ** d + 1e-300
        good = dets > 1e-10 * scale
        if good.any():
            steps[good] = np.linalg.solve(Jm[good], -F[good][..., None])[..., 0]
        bad = ~good
    else:
        bad = np.ones(N, dtype=bool)
    if bad.any():
        steps[bad] = -(np.linalg.pinv(Jm[bad], rcond=1e-12) @ F[bad][..., None])[..., 0]
    return steps


def _newton(system: _ChartSystem, X: np.ndarray, max_iter: int,
            lim: np.ndarray) -> np.ndarray:
    """Damped Newton from every row of X; diverged rows become NaN."""
    X = X.copy()
    active = np.ones(X.shape[0], dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[idx]
        F = system.residual(Xa)
        r0 = np.linalg.norm(F, axis=1)
        step = _solve_steps(system.jacobian(Xa), F)
        t = np.ones(idx.size)
        Xn = Xa + step
        for _ in range(6):
            rn = np.linalg.norm(system.residual(Xn), axis=1)
            worse = ~(rn <= r0) & (r0 > 0)
            if not worse.any():
                break
            t[worse] *= 0.5
            Xn[worse] = Xa[worse] + t[worse, None] * step[worse]
        X[idx] = Xn
        moved = np.linalg.norm(Xn - Xa, axis=1)
        done = (moved <= 1e-14 * (1 + np.linalg.norm(Xn, axis=1))) | (r0 == 0)
        lost = ~np.all(np.isfinite(Xn), axis=1) | np.any(np.abs(Xn) > lim, axis=1)
        X[idx[lost]] = np.nan
        active[idx[done | lost]] = False
    return X


def _scaled_residual(system: _ChartSystem, X: np.ndarray) -> np.ndarray:
    F = np.abs(system.residual(X))
    M = system.F.magnitude(X)
    return np.max(F / np.maximum(1.0, M), axis=1) if F.shape[1] else np.zeros(X.shape[0])


def _seed_grid(bounds: np.ndarray, per_axis: int) -> np.ndarray:
    axes = []
    for lo, hi in bounds:
        if per_axis == 1:
            axes.append(np.array([(lo + hi) / 2]))
        else:
            # offset slightly from the symmetric grid so seeds avoid exact symmetry planes
            g = np.linspace(lo, hi, per_axis)
            axes.append(g + 1e-3 * (hi - lo) / (per_axis + 1) * np.sqrt(2))
    return np.array(list(product(*axes)), dtype=float)


def _snap(X: np.ndarray) -> tuple:
    out = []
    for x in X:
        q = Fraction(float(x)).limit_denominator(SNAP_DENOMINATOR)
        if abs(float(q) - x) > 1e-9 * (1 + abs(x)):
            return tuple(float(v) for v in X)
        out.append(q)
    return tuple(out)


def _exact_root(system: _ChartSystem, Xq: tuple) -> bool:
    return all(e(Xq) == 0 for e in system.equations)


def _point_residuals(problem: ConstrainedProblem, system: _ChartSystem, X: tuple) -> tuple[float, float]:
    """(constraint residual, reduced-gradient residual), both scaled."""
    cres = problem.constraint_residual(X) if problem.m else 0.0
    n = problem.n
    dval = abs(float(system.det_poly(X)))
    if dval == 0:
        return cres, math.inf
    worst = 0.0
    for k in range(n):
        ck = system.equations[k]
        val = abs(float(ck(X))) / dval
        scale = max(1.0, max(abs(float(g(X))) for g in problem.grad_f))
        worst = max(worst, val / scale if ck(X) != 0 else 0.0)
    return cres, worst


def _system_rank(problem: ConstrainedProblem, system: _ChartSystem, Xf: np.ndarray) -> tuple[int, np.ndarray]:
    Jm = system.jacobian(Xf[None, :])[0]
    _, s, vt = np.linalg.svd(Jm)
    tol = 1e-7 * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    null = vt[rank:]
    return rank, null


def _dedup(Xs: np.ndarray, radius: float, priority: np.ndarray | None = None) -> np.ndarray:
    """Indices of a representative per cluster of points closer than radius."""
    n = len(Xs)
    if n == 0:
        return np.zeros(0, dtype=int)
    r = radius * (1 + np.max(np.abs(Xs)))
    # collapse coincident points on a grid first; many seeds share a root
    cell = r / (4 * np.sqrt(Xs.shape[1]))
    _, first, inverse = np.unique(np.floor(Xs / cell).astype(np.int64), axis=0,
                                  return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    reps = Xs[first]
    # members sit within cell diagonal r/4 of their representative
    pairs = cKDTree(reps).query_pairs(1.5 * r, output_type="ndarray")
    if len(pairs):
        A = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(reps),) * 2)
        _, comp = connected_components(A, directed=False)
    else:
        comp = np.arange(len(reps))
    labels = comp[inverse]
    prio = np.zeros(n) if priority is None else np.asarray(priority, dtype=float)
    # best priority per label, ties to the lowest index
    order = np.lexsort((np.arange(n), -prio, labels))
    keep = order[np.r_[True, labels[order][1:] != labels[order][:-1]]]
    return np.sort(keep)


def _full_step(system: _ChartSystem, Xf: np.ndarray) -> float:
    """Length of an untruncated Newton step; large means not yet converged."""
    F = system.residual(Xf[None, :])[0]
    if not np.any(F):
        return 0.0
    Jm = system.jacobian(Xf[None, :])[0]
    step = np.linalg.lstsq(Jm, -F, rcond=None)[0]
    return float(np.linalg.norm(step))


def _snap_loose(system: _ChartSystem, row: np.ndarray) -> tuple | None:
    q = tuple(Fraction(float(x)).limit_denominator(SNAP_DENOMINATOR) for x in row)
    if max(abs(float(a) - b) for a, b in zip(q, row)) > 1e-3 * (1 + np.max(np.abs(row))):
        return None
    return q if _exact_root(system, q) else None


def _snap_sample(system: _ChartSystem, row: np.ndarray) -> tuple:
    """Exact family sample when a nearby small-denominator point is a root."""
    q = _snap(row)
    if all(is_exact(x) for x in q) and _exact_root(system, q):
        return q
    q = tuple(Fraction(float(x)).limit_denominator(SNAP_DENOMINATOR) for x in row)
    if max(abs(float(a) - b) for a, b in zip(q, row)) <= 1e-4 * (1 + np.max(np.abs(row))):
        if _exact_root(system, q):
            return q
    return tuple(float(v) for v in row)


def _metrics(problem: ConstrainedProblem, system: _ChartSystem, X: np.ndarray):
    """Batched (constraint residual, gradient residual, chart strength)."""
    N, n, m = X.shape[0], problem.n, problem.m
    F = system.residual(X)
    M = system.F.magnitude(X)
    cres = (np.max(np.abs(F[:, n:]) / np.maximum(1.0, M[:, n:]), axis=1) if m else np.zeros(N))
    det = np.abs(system.D(X)[:, 0])
    gscale = np.maximum(1.0, np.max(np.abs(system.GF(X)), axis=1)) if problem.d else np.ones(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        gres = (np.max(np.abs(F[:, :n]), axis=1) / det / gscale if n else np.zeros(N))
    gres = np.where(det > 0, gres, np.inf) if n else gres
    if m:
        gj = system.GJ(X).reshape(N, m, problem.d)
        rown = np.max(np.linalg.norm(gj, axis=2), axis=1)
        strength = det / np.maximum(1.0, rown) ** m
    else:
        strength = np.ones(N)
    return cres, gres, strength


def _full_steps(system: _ChartSystem, X: np.ndarray) -> np.ndarray:
    F = system.residual(X)
    Jm = system.jacobian(X)
    steps = (np.linalg.pinv(Jm, rcond=1e-15) @ F[..., None])[..., 0]
    return np.where(np.any(F != 0, axis=1), np.linalg.norm(steps, axis=1), 0.0)


def _candidates(problem, system, chart, seeds, cfg, bounds, lim, st):
    margin = 1e-9 * (1 + np.max(np.abs(bounds)))
    X = _newton(system, seeds, cfg.max_iter, lim)
    X = X[np.all(np.isfinite(X), axis=1)]
    X = X[np.all((X >= bounds[:, 0] - margin) & (X <= bounds[:, 1] + margin), axis=1)]
    if len(X):
        X = X[_scaled_residual(system, X) <= 1e-6]
    if len(X):
        X = X[_dedup(X, 1e-9)]
        X = _newton(system, X, 40, lim)
        X = X[np.all(np.isfinite(X), axis=1)]
    st.converged = len(X)
    if not len(X):
        return []
    moving = _full_steps(system, X) > cfg.dedup_radius * (1 + np.linalg.norm(X, axis=1))
    pts: list[tuple] = []
    for row, mv in zip(X, moving):
        Xq = _snap(row)
        if not (all(is_exact(x) for x in Xq) and _exact_root(system, Xq)):
            Xq = tuple(float(v) for v in row)
            if mv:
                # still moving (degenerate neighbourhood): accept only an exact root nearby
                Xq = _snap_loose(system, row) or Xq
        pts.append(Xq)
    Xf = np.array([[float(v) for v in p] for p in pts])
    cres, gres, strength = _metrics(problem, system, Xf)
    exact = np.array([all(is_exact(v) for v in p) for p in pts])
    ok = (exact | ((cres <= cfg.constraint_tol) & (gres <= cfg.gradient_tol))) & (strength > cfg.rank_tol)
    out = [p for p, good in zip(pts, ok) if good]
    st.accepted = len(out)
    return out


def search(problem: ConstrainedProblem, cfg: SearchConfig | None = None) -> SearchResult:
    cfg = cfg or SearchConfig()
    d = problem.d
    bounds = cfg.bounds(d)
    lim = np.max(np.abs(bounds)) * 10 + 10
    seeds = _seed_grid(bounds, cfg.axis_count(d))
    if cfg.extra_seeds:
        seeds = np.vstack([seeds, np.array(cfg.extra_seeds, dtype=float).reshape(-1, d)])

    found: list[tuple[tuple, Chart]] = []
    stats = []
    for chart, system in chart_systems(problem):
        if system is None:
            stats.append(ChartStats(chart, skipped=True))
            continue
        st = ChartStats(chart, skipped=False, seeds=len(seeds))
        found.extend((Xq, chart) for Xq in _candidates(problem, system, chart, seeds, cfg,
                                                       bounds, lim, st))
        stats.append(st)

    points = _merge(problem, found, cfg)
    result = SearchResult(points, [], stats)
    if points:
        detect_family(result, problem, cfg, enabled=cfg.detect_families)
    result.points.sort(key=lambda p: tuple(float(x) for x in p.X))
    return result


def find_critical_points(problem: ConstrainedProblem, cfg: SearchConfig | None = None) -> list[CriticalPoint]:
    return search(problem, cfg).points


def _merge(problem, found, cfg) -> list[CriticalPoint]:
    if not found:
        return []
    Xs = np.array([[float(x) for x in X] for X, _ in found])
    systems = [(c, s) for c, s in chart_systems(problem) if s is not None]
    metrics = [_metrics(problem, s, Xs) for _, s in systems]
    strengths = np.array([mt[2] for mt in metrics])  # charts x points
    exact = np.array([all(is_exact(x) for x in X) for X, _ in found])
    # exact points first, then stronger charts
    prio = 2.0 * exact + np.minimum(1.0, strengths.max(axis=0))
    keep = _dedup(Xs, cfg.dedup_radius, prio)
    out = []
    for k in keep:
        X, _ = found[k]
        # strongest chart, ties to the lexicographically first column set
        c = int(np.argmax(strengths[:, k] * (1 - 1e-12)))
        best, system = systems[c]
        if exact[k]:
            cres, gres = _point_residuals(problem, system, X)
        else:
            cres, gres = float(metrics[c][0][k]), float(metrics[c][1][k])
        out.append(CriticalPoint(X, best, cres, gres, problem.d, 0))
    _batch_rank(problem, out)
    return out


def _batch_rank(problem, points):
    groups: dict[tuple, list[int]] = {}
    for k, p in enumerate(points):
        groups.setdefault(p.chart.dependent, []).append(k)
    for dep, idx in groups.items():
        system = _chart_system(problem, dep)
        Xf = np.array([points[k].as_float() for k in idx])
        s = np.linalg.svd(system.jacobian(Xf), compute_uv=False)
        tol = 1e-7 * np.maximum(1.0, s[:, 0])
        ranks = np.sum(s > tol[:, None], axis=1)
        for k, r in zip(idx, ranks):
            points[k].rank = int(r)
            points[k].nullity = problem.d - int(r)


# ---------------------------------------------------------------------------
# refinement of a single point


def refine(X: Sequence, problem: ConstrainedProblem, chart: Chart,
           cfg: SearchConfig | None = None) -> CriticalPoint:
    cfg = cfg or SearchConfig()
    system = _chart_system(problem, tuple(chart.dependent))
    if system is None:
        raise RefineError(f"chart {chart.dependent} is singular everywhere")
    X0 = tuple(X)
    if all(is_exact(x) for x in X0) and _exact_root(system, X0):
        Xq = X0
    else:
        x = np.array([float(v) for v in X0], dtype=float)
        lim = 10 * (1 + np.max(np.abs(x))) + 10
        Y = _newton(system, x[None, :], 200, lim)[0]
        if not np.all(np.isfinite(Y)):
            raise RefineError("Newton iteration diverged")
        Xq = _snap(Y)
        if any(is_exact(v) for v in Xq) and not _exact_root(system, Xq):
            Xq = tuple(float(v) for v in Y)
    if chart_strength(problem, chart, Xq) <= cfg.rank_tol:
        raise RefineError("chart became invalid during iteration")
    cres, gres = _point_residuals(problem, system, Xq)
    if cres > cfg.constraint_tol or gres > cfg.gradient_tol:
        raise RefineError(f"residuals {cres:.3g}, {gres:.3g} above tolerance")
    rank, _ = _system_rank(problem, system, np.array([float(v) for v in Xq]))
    return CriticalPoint(Xq, chart, cres, gres, rank, problem.d - rank)


# ---------------------------------------------------------------------------
# families


def _corrector(system: _ChartSystem, Y0: np.ndarray, normals: np.ndarray, anchor: np.ndarray,
               iters: int = 30) -> tuple[np.ndarray, float]:
    """Gauss-Newton on F(Y) = 0 plus normals . (Y - anchor) = 0."""
    Y = Y0.copy()
    for _ in range(iters):
        F = system.residual(Y[None, :])[0]
        H = normals @ (Y - anchor)
        r = np.concatenate([F, H])
        Jm = np.vstack([system.jacobian(Y[None, :])[0], normals])
        step = np.linalg.lstsq(Jm, -r, rcond=None)[0]
        Y = Y + step
        if np.linalg.norm(step) <= 1e-14 * (1 + np.linalg.norm(Y)):
            break
    F = np.abs(system.residual(Y[None, :])[0])
    M = system.F.magnitude(Y[None, :])[0]
    res = float(np.max(F / np.maximum(1.0, M))) if F.size else 0.0
    return Y, res


def _probe(system: _ChartSystem, X: np.ndarray, null: np.ndarray, delta: float) -> list[np.ndarray]:
    """Null directions along which a nearby critical point exists.

    Nullity can exceed the true family dimension (on the z-axis of a cubic
    cylinder the x direction is also null), so directions are tested one by
    one, both ways, and only the ones that continue are returned.
    """
    ok = []
    for t in null:
        for sgn in (1.0, -1.0):
            target = X + sgn * delta * t
            Y, res = _corrector(system, target, t[None, :], target)
            if res <= 1e-10 and np.linalg.norm(Y - target) < delta / 2:
                ok.append(t)
                break
    return ok


def _tangent(problem, system, Z: np.ndarray, prev: np.ndarray) -> np.ndarray | None:
    _, nz = _system_rank(problem, system, Z)
    if len(nz) == 0:
        return None
    t = nz.T @ (nz @ prev)
    norm = np.linalg.norm(t)
    if norm < 0.5:
        return None
    return t / norm


def _trace(problem, system, X: np.ndarray, t0: np.ndarray, delta: float, bounds: np.ndarray,
           max_steps: int) -> list[np.ndarray]:
    """Samples along a one-dimensional solution curve through X, both ways."""
    lo, hi = bounds[:, 0] - delta, bounds[:, 1] + delta
    # the seed itself may have stalled near a high-multiplicity root
    Xc, res = _corrector(system, X, t0[None, :], X, iters=200)
    if res <= 1e-10 and np.linalg.norm(Xc - X) <= delta / 2:
        X = Xc
    out = [X]
    for sign in (1.0, -1.0):
        Y, t = X.copy(), sign * t0
        branch = []
        for step in range(max_steps):
            pred = Y + delta * t
            Z, res = _corrector(system, pred, t[None, :], pred, iters=200)
            if res > 1e-10 or np.linalg.norm(Z - pred) > delta / 2:
                break
            if np.any(Z < lo) or np.any(Z > hi):
                break
            tn = _tangent(problem, system, Z, t)
            if tn is None:
                break
            branch.append(Z)
            Y, t = Z, tn
            if step > 2 and np.linalg.norm(Z - X) < delta / 2:
                # closed curve: came back to the start
                return out + branch
        out = (branch[::-1] + out) if sign < 0 else (out + branch)
    return out


def _distance_to_polyline(P: np.ndarray, poly: np.ndarray) -> np.ndarray:
    if len(poly) == 1:
        return np.linalg.norm(P - poly[0], axis=1)
    A, B = poly[:-1], poly[1:]
    AB = B - A
    L2 = np.maximum(np.sum(AB * AB, axis=1), 1e-300)
    out = np.full(len(P), np.inf)
    for k in range(len(A)):
        t = np.clip(((P - A[k]) @ AB[k]) / L2[k], 0, 1)
        out = np.minimum(out, np.linalg.norm(P - (A[k] + t[:, None] * AB[k]), axis=1))
    return out


def _thin(items: list, count: int) -> list:
    if len(items) <= count:
        return list(items)
    idx = np.unique(np.linspace(0, len(items) - 1, count).round().astype(int))
    return [items[i] for i in idx]


def detect_family(result: SearchResult | list[CriticalPoint], problem: ConstrainedProblem,
                  cfg: SearchConfig | None = None, enabled: bool = True) -> list[CriticalPoint]:
    """Flag points lying on positive-dimensional solution sets and group them.

    Rank-deficient points are probed one at a time: a confirmed family is
    traced (one-dimensional case) or linked by proximity, and every other
    rank-deficient point near it joins without a probe of its own.  Float
    points that fail the probe and are still moving under an untruncated
    Newton step are dropped as unresolved.
    """
    cfg = cfg or SearchConfig()
    if isinstance(result, SearchResult):
        points, families = result.points, result.families
    else:
        points, families = result, []
    _batch_rank(problem, points)
    bounds = cfg.bounds(problem.d)
    half = float(np.min(bounds[:, 1] - bounds[:, 0])) / 2
    delta = 0.05 * half
    spacing = 2 * half / max(1, cfg.axis_count(problem.d) - 1)

    deficient = [k for k, p in enumerate(points) if p.nullity > 0]
    Xs = np.array([points[k].as_float() for k in deficient]).reshape(-1, problem.d)
    todo = list(range(len(deficient)))
    done: set[int] = set()
    dropped: set[int] = set()
    fid = len(families)
    for j in todo:
        if j in done:
            continue
        done.add(j)
        cp = points[deficient[j]]
        system = _chart_system(problem, cp.chart.dependent)
        rank, null = _system_rank(problem, system, Xs[j])
        directions = _probe(system, Xs[j], null, delta) if enabled else []
        if not directions:
            if not cp.exact and _full_step(system, Xs[j]) > cfg.dedup_radius * (1 + np.linalg.norm(Xs[j])):
                dropped.add(deficient[j])
            continue
        dim = len(directions)
        rest = [i for i in todo if i not in done]
        members = {j}
        samples: list[np.ndarray] = []
        if dim == 1:
            step = min(delta, spacing) / 2
            samples = _trace(problem, system, Xs[j], directions[0], step, bounds,
                             max_steps=int(4 * np.sqrt(problem.d) * half / step) + 10)
            if rest:
                dist = _distance_to_polyline(Xs[rest], np.array(samples))
                members |= {i for i, dd in zip(rest, dist) if dd <= max(1e-6, step / 4)}
        else:
            cand = [j] + rest
            tree = cKDTree(Xs[cand])
            pairs = tree.query_pairs(2.5 * spacing, output_type="ndarray")
            if len(pairs):
                A = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                                  shape=(len(cand), len(cand)))
                _, labels = connected_components(A, directed=False)
                members |= {cand[i] for i in range(len(cand)) if labels[i] == labels[0]}
            samples = [Xs[i] for i in sorted(members)]
        samples = _thin(samples, 64)
        tangents, snapped = [], []
        for s in samples:
            s = np.asarray(s)
            _, nz = _system_rank(problem, system, s)
            tangents.append(nz)
            snapped.append(_snap_sample(system, s))
        for i in members:
            p = points[deficient[i]]
            p.family_flag = True
            p.family_id = fid
        done |= members
        families.append(Family(fid, dim, snapped, tangents, len(members)))
        fid += 1
    if dropped:
        points[:] = [p for k, p in enumerate(points) if k not in dropped]
    return points
