"""John and Löwner ellipsoids of symmetric convex bodies.

Both problems reduce to one centered D-optimal design: for points w_1..w_m spanning R^n, maximize log det M(u) with
M(u) = sum u_i w_i w_iᵀ over the simplex. At the optimum {x : xᵀ (n M)^-1 x <= 1} is the minimal ellipsoid
containing ±w_i. With the relative gap ε = max_i w_iᵀ M^-1 w_i / n - 1 of any iterate, the ellipsoid scaled by
(1 + ε) contains every point, so the returned ellipsoids are always feasible and ε bounds their suboptimality.

Löwner ellipsoids of V-polytopes use the vertices as design points; John ellipsoids of H-polytopes use the points
a_i / b_i of the facets and polarity.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import gammaln
from typing_extensions import Self

from adelic_slopes import logger
from adelic_slopes.config import SolverConfig
from adelic_slopes.constants import (
    LOWNER_MAX_ITER,
    RATIONALIZE_DENOMINATOR,
    SLOPE_TOLERANCE,
    SOLVER_MAX_ITER,
    SOLVER_TOLERANCE,
    SYMMETRY_TOLERANCE,
)
from adelic_slopes.convexgeom import (
    ConvexBody,
    Ellipsoid,
    HPoly,
    LpBall,
    PSum,
    Section,
    VPoly,
    ball_log_volume,
    ellipsoid,
    facets,
    log_volume,
    lp_log_volume,
    materialize,
    polar,
    vertices,
)
from adelic_slopes.dtos import CheckReport
from adelic_slopes.errors import SolverError

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray


class EllipsoidResult(BaseModel):
    """Ellipsoid {x : xᵀ Q x <= 1} computed in floating point."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["john", "lowner"]
    gram: tuple[tuple[float, ...], ...]
    log_volume: float
    certificate_gap: float
    iterations: int = 0

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.gram)

    @property
    def matrix(self) -> NDArray[np.float64]:
        """Gram form Q."""
        return np.array(self.gram, dtype=float)

    @model_validator(mode="after")
    def _check_symmetric(self) -> Self:
        Q = self.matrix
        if not np.allclose(Q, Q.T, rtol=SYMMETRY_TOLERANCE, atol=SYMMETRY_TOLERANCE * float(np.abs(Q).max())):
            msg = "Ellipsoid Gram form is not symmetric"
            raise ValueError(msg)
        return self

    @classmethod
    def from_matrix(
        cls, kind: Literal["john", "lowner"], Q: NDArray[np.float64], gap: float, iterations: int = 0
    ) -> Self:
        """Build a result from a Gram form, symmetrizing it."""
        Q = (Q + Q.T) / 2
        _, logdet = np.linalg.slogdet(Q)
        return cls(
            kind=kind,
            gram=tuple(tuple(float(v) for v in row) for row in Q),
            log_volume=ball_log_volume(len(Q)) - 0.5 * float(logdet),
            certificate_gap=max(gap, 0.0),
            iterations=iterations,
        )

    def rational_gram(self) -> list[list[Fraction]]:
        """Gram form rationalized with bounded denominators, kept symmetric."""
        n = self.dim
        rows = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                value = Fraction(self.gram[i][j]).limit_denominator(RATIONALIZE_DENOMINATOR)
                rows[i][j] = rows[j][i] = value
        return rows

    def as_body(self) -> Ellipsoid:
        """Exact ellipsoid body with the rationalized Gram form."""
        return ellipsoid(self.rational_gram())


# ----------------------------------------------------------------------------------------------------------------------
# D-optimal design


def _design_points(points: Sequence[Sequence[Fraction]]) -> NDArray[np.float64]:
    """One point of each ± pair, as floats."""
    chosen: set[tuple[Fraction, ...]] = set()
    for point in points:
        leading = next(x for x in point if x != 0)
        chosen.add(tuple(point) if leading > 0 else tuple(-x for x in point))
    return np.array([[float(x) for x in point] for point in sorted(chosen)], dtype=float)


def _moment(W: NDArray[np.float64], u: NDArray[np.float64]) -> NDArray[np.float64]:
    return W.T @ (u[:, None] * W)


def _leverages(W: NDArray[np.float64], M: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.einsum("ij,ij->i", W @ np.linalg.inv(M), W)


def design_gap(W: NDArray[np.float64], u: NDArray[np.float64]) -> float:
    """Relative gap max_i w_iᵀ M(u)^-1 w_i / n - 1 of a design."""
    return float(_leverages(W, _moment(W, u)).max() / W.shape[1] - 1)


def _barrier(W: NDArray[np.float64], u: NDArray[np.float64], mu: float) -> float:
    sign, logdet = np.linalg.slogdet(_moment(W, u))
    if sign <= 0:
        return -math.inf
    return float(logdet + mu * np.log(u).sum())


def _segment_design(W: NDArray[np.float64]) -> tuple[NDArray[np.float64], int, float]:
    """Design of a one-dimensional problem: all the weight on the longest point, with zero gap."""
    u = np.zeros(len(W))
    u[int(np.argmax(np.abs(W[:, 0])))] = 1.0
    return u, 0, 0.0


def _optimal_step(kappa: float, n: int) -> float:
    """Step s maximizing log det((1 - s)M + s w wᵀ) for a point of leverage κ."""
    return (kappa - n) / (n * (kappa - 1))


def newton_design(
    W: NDArray[np.float64], u0: NDArray[np.float64], tol: float, max_iter: int
) -> tuple[NDArray[np.float64], int, float]:
    """Damped Newton on the log-det barrier of the design problem.

    Maximizes log det M(u) + μ Σ log u_i under Σ u_i = 1 for μ = 1, 1/10, ... down to a floor of order 1e-16,
    then keeps iterating at the floor until the gap is below `tol` or `max_iter` Newton steps are spent.
    Returns the design, the number of Newton steps and the final gap.
    """
    m, n = W.shape
    u = np.asarray(u0, dtype=float).copy()
    ones = np.ones(m)
    mu = 1.0
    mu_floor = 1e-16 * n / m
    iterations = 0
    gap = design_gap(W, u)
    while gap > tol and iterations < max_iter:
        while iterations < max_iter:
            M_inv = np.linalg.inv(_moment(W, u))
            K = W @ M_inv @ W.T
            g = np.diag(K) + mu / u
            H = -(K * K) - np.diag(mu / u**2)
            kkt = np.block([[H, ones[:, None]], [ones[None, :], np.zeros((1, 1))]])
            step = np.linalg.solve(kkt, np.concatenate([-g, [0.0]]))[:m]
            decrement = float(-step @ H @ step)
            iterations += 1
            if not math.isfinite(decrement) or decrement <= 1e-12:
                break
            t = 1.0
            current = _barrier(W, u, mu)
            while t > 1e-14:
                candidate = u + t * step
                if np.all(candidate > 0) and _barrier(W, candidate, mu) >= current + 0.25 * t * float(g @ step):
                    break
                t /= 2
            u = np.maximum(u + t * step, 1e-300)
            u /= u.sum()
            if decrement <= 1e-9:
                break
        gap = design_gap(W, u)
        logger.debug(f"Design: mu={mu:.1e} gap={gap:.3e} after {iterations} Newton steps")
        mu = max(mu / 10, mu_floor)
    return u, iterations, gap


def coordinate_ascent_design(
    W: NDArray[np.float64], tol: float, max_iter: int, u0: NDArray[np.float64] | None = None
) -> tuple[NDArray[np.float64], int, float]:
    """Khachiyan's barycentric coordinate ascent with Todd-Yildirim away steps.

    Each step moves weight towards the point of largest leverage, or away from the supported point of smallest
    leverage when that gains more; M^-1 follows by Sherman-Morrison updates, refreshed every 100 steps.

    Raises:
        SolverError: If an iterate is not finite.
    """
    m, n = W.shape
    if n == 1:
        return _segment_design(W)
    u = np.full(m, 1.0 / m) if u0 is None else np.asarray(u0, dtype=float).copy()
    M_inv = np.linalg.inv(_moment(W, u))
    iterations = 0
    while iterations < max_iter:
        leverages = np.einsum("ij,ij->i", W @ M_inv, W)
        if not np.all(np.isfinite(leverages)):
            raise SolverError("Coordinate ascent", iterations, math.nan, reason="non-finite leverages")
        up = int(np.argmax(leverages))
        if leverages[up] / n - 1 <= tol:
            break
        support = np.flatnonzero(u > 0)
        down = int(support[np.argmin(leverages[support])])
        j, step = up, _optimal_step(float(leverages[up]), n)
        if 1 - leverages[down] / n > leverages[up] / n - 1 and u[down] < 1:
            kappa = float(leverages[down])
            drop = -u[down] / (1 - u[down])
            away = max(drop, _optimal_step(kappa, n)) if kappa > 1 else drop
            # Dropping a point that carries its own direction would make M singular
            if 1 - away + away * kappa > 1e-12:
                j, step = down, away
        kappa = float(leverages[j])
        b = M_inv @ W[j]
        # (1-s)M + s w wᵀ
        M_inv = (M_inv - (step / (1 - step + step * kappa)) * np.outer(b, b)) / (1 - step)
        u *= 1 - step
        u[j] += step
        u = np.maximum(u, 0.0)
        iterations += 1
        if iterations % 100 == 0:
            M_inv = np.linalg.inv(_moment(W, u))
    return u, iterations, design_gap(W, u)


def _solve_design(
    W: NDArray[np.float64], tol: float, max_iter: int, lowner_max_iter: int
) -> tuple[NDArray[np.float64], int, float]:
    """Design for the minimal ellipsoid containing ±rows of W.

    Coordinate ascent runs first. While the gap stays above `tol`, a Newton polish and a second coordinate ascent
    run follow, each started from the best design so far.

    Raises:
        SolverError: If the gap is not finite.
    """
    m, n = W.shape
    if n == 1:
        return _segment_design(W)
    u, iterations, gap = coordinate_ascent_design(W, tol, lowner_max_iter)
    if gap > tol:
        logger.debug(f"Design: coordinate ascent stopped at gap {gap:.3e}, polishing with Newton")
        try:
            polished, steps, polished_gap = newton_design(W, 0.9 * u + 0.1 / m, tol, max_iter)
        except np.linalg.LinAlgError:
            logger.debug("Design: Newton reached a singular moment matrix")
        else:
            iterations += steps
            if polished_gap < gap:
                u, gap = polished, polished_gap
    if gap > tol:
        restarted, more, restarted_gap = coordinate_ascent_design(W, tol, lowner_max_iter, u0=u)
        iterations += more
        if restarted_gap < gap:
            u, gap = restarted, restarted_gap
    if not math.isfinite(gap):
        raise SolverError("Design", iterations, gap, reason="non-finite gap")
    return u, iterations, gap


# ----------------------------------------------------------------------------------------------------------------------
# John and Löwner ellipsoids


def _lp_radii(C: LpBall) -> tuple[float, float]:
    """John and Löwner radii of an l^p ball."""
    exponent = 0.5 - (0.0 if math.isinf(C.p) else 1 / C.p)
    stretch = C.n**exponent
    radius = float(C.radius)
    if C.p <= 2:
        return stretch * radius, radius
    return radius, stretch * radius


def _ball(kind: Literal["john", "lowner"], n: int, radius: float) -> EllipsoidResult:
    return EllipsoidResult.from_matrix(kind, np.eye(n) / radius**2, 0.0)


def _feasible(
    kind: Literal["john", "lowner"],
    W: NDArray[np.float64],
    Q: NDArray[np.float64],
    gap: float,
    iterations: int,
    tol: float,
) -> EllipsoidResult:
    """Result of a solved design, checked against the body.

    For John, W holds the facet points and the ellipsoid must lie in every slab |<w, x>| <= 1; for Löwner, W holds
    the vertices and each must lie in the ellipsoid. An excess up to `tol` is rounding and is removed by rescaling.

    Raises:
        SolverError: If the gap or the excess is above `tol`, or the Gram form is not finite.
    """
    solver = "John" if kind == "john" else "Löwner"
    if not np.all(np.isfinite(Q)):
        raise SolverError(solver, iterations, gap, reason="non-finite Gram form")
    result = EllipsoidResult.from_matrix(kind, Q, gap, iterations)
    if gap > tol:
        raise SolverError(solver, iterations, gap, best=result)
    if kind == "john":
        excess = float(np.sqrt(_leverages(W, Q).max()))
    else:
        excess = float(np.sqrt(np.einsum("ij,jk,ik->i", W, Q, W).max()))
    if excess > 1 + tol:
        raise SolverError(solver, iterations, gap, best=result, reason=f"the ellipsoid is off the body by {excess:.6g}")
    if excess > 1:
        result = EllipsoidResult.from_matrix(kind, Q * excess**2 if kind == "john" else Q / excess**2, gap, iterations)
    logger.debug(f"{solver}: converged in {iterations} iterations (gap {gap:.3e}, excess {excess:.12f})")
    return result


@lru_cache(maxsize=256)
def john_ellipsoid(
    C: ConvexBody,
    tol: float = SOLVER_TOLERANCE,
    max_iter: int = SOLVER_MAX_ITER,
    lowner_max_iter: int = LOWNER_MAX_ITER,
) -> EllipsoidResult:
    """Maximal volume origin-centered ellipsoid inscribed in a body.

    Raises:
        SolverError: If the design gap is above `tol` after every solver, or the ellipsoid leaves the body.
    """
    if isinstance(C, Ellipsoid):
        return EllipsoidResult.from_matrix("john", np.array([[float(v) for v in row] for row in C.gram]), 0.0)
    if isinstance(C, LpBall):
        return _ball("john", C.n, _lp_radii(C)[0])
    if isinstance(C, PSum | Section):
        return john_ellipsoid(materialize(C), tol, max_iter, lowner_max_iter)
    points = C.polar_points() if isinstance(C, HPoly) else facets(C)
    W = _design_points(points)
    n = W.shape[1]
    u, iterations, gap = _solve_design(W, tol, max_iter, lowner_max_iter)
    return _feasible("john", W, n * (1 + max(gap, 0.0)) * _moment(W, u), gap, iterations, tol)


@lru_cache(maxsize=256)
def lowner_ellipsoid(
    C: ConvexBody,
    tol: float = SOLVER_TOLERANCE,
    max_iter: int = SOLVER_MAX_ITER,
    lowner_max_iter: int = LOWNER_MAX_ITER,
) -> EllipsoidResult:
    """Minimal volume origin-centered ellipsoid containing a body.

    Raises:
        SolverError: If the design gap is above `tol` after every solver, or a vertex is left outside.
    """
    if isinstance(C, Ellipsoid):
        return EllipsoidResult.from_matrix("lowner", np.array([[float(v) for v in row] for row in C.gram]), 0.0)
    if isinstance(C, LpBall):
        return _ball("lowner", C.n, _lp_radii(C)[1])
    if isinstance(C, PSum | Section):
        return lowner_ellipsoid(materialize(C), tol, max_iter, lowner_max_iter)
    points = C.vertices if isinstance(C, VPoly) else vertices(C)
    W = _design_points(points)
    n = W.shape[1]
    u, iterations, gap = _solve_design(W, tol, max_iter, lowner_max_iter)
    Q = np.linalg.inv(n * (1 + max(gap, 0.0)) * _moment(W, u))
    return _feasible("lowner", W, Q, gap, iterations, tol)


def solve_john(C: ConvexBody, solver: SolverConfig | None = None) -> EllipsoidResult:
    """John ellipsoid with the tolerance and iteration caps of a solver configuration."""
    solver = solver or SolverConfig()
    return john_ellipsoid(C, solver.tol, solver.max_iter, solver.lowner_max_iter)


def solve_lowner(C: ConvexBody, solver: SolverConfig | None = None) -> EllipsoidResult:
    """Löwner ellipsoid with the tolerance and iteration caps of a solver configuration."""
    solver = solver or SolverConfig()
    return lowner_ellipsoid(C, solver.tol, solver.max_iter, solver.lowner_max_iter)


# ----------------------------------------------------------------------------------------------------------------------
# Volume ratios and Banach-Mazur bounds


def volume_ratio(C: ConvexBody, solver: SolverConfig | None = None) -> float:
    """Volume ratio (vol C / vol J(C))^(1/n)."""
    return math.exp((log_volume(C) - solve_john(C, solver).log_volume) / C.dim)


def vr_tilde(C: ConvexBody, solver: SolverConfig | None = None) -> float:
    """Löwner volume ratio (vol L(C) / vol C)^(1/n)."""
    return math.exp((solve_lowner(C, solver).log_volume - log_volume(C)) / C.dim)


def vr_lp_closed_form(n: int, p: float) -> float:
    """Volume ratio of the unit l^p ball from its closed-form John radius."""
    john_radius = _lp_radii(LpBall(p=p, n=n))[0]
    return math.exp((lp_log_volume(n, p) - ball_log_volume(n) - n * math.log(john_radius)) / n)


def rogalski_bracket(n: int, p: float) -> tuple[float, float]:
    """Bracket [1/3, 2]·n^max(0, 1/2 - 1/p)·√(2/π)Γ(1+1/p)e^(1/p-1/2)p^(1/p) of the l^p volume ratio."""
    inverse = 0.0 if math.isinf(p) else 1 / p
    p_power = 1.0 if math.isinf(p) else p**inverse
    scale = (
        n ** max(0.0, 0.5 - inverse)
        * math.sqrt(2 / math.pi)
        * math.exp(float(gammaln(1 + inverse)) + inverse - 0.5)
        * p_power
    )
    return scale / 3, 2 * scale


def rogalski_check(n: int, p: float) -> CheckReport:
    """Volume ratio of the unit l^p ball inside its asymptotic bracket."""
    value = vr_lp_closed_form(n, p)
    lower, upper = rogalski_bracket(n, p)
    return CheckReport.bracket(
        "rogalski_volume_ratio",
        value,
        lower,
        upper,
        tolerance=SLOPE_TOLERANCE,
        instance={"n": n, "p": "inf" if math.isinf(p) else p},
    )


def _lp_factor(C: LpBall) -> float:
    return float(C.n ** abs(0.5 - (0.0 if math.isinf(C.p) else 1 / C.p)))


def _john_factor(C: ConvexBody, john: EllipsoidResult) -> float:
    """Smallest a with C ⊆ a·J, the largest John norm of a vertex."""
    if isinstance(C, LpBall):
        return _lp_factor(C)
    body = materialize(C)
    if isinstance(body, Ellipsoid):
        return 1.0
    V = np.array([[float(x) for x in v] for v in vertices(body)])
    return float(np.sqrt(np.einsum("ij,jk,ik->i", V, john.matrix, V).max()))


def _lowner_factor(C: ConvexBody, lowner: EllipsoidResult) -> float:
    """Smallest b with L ⊆ b·C, the largest support value of L on a facet."""
    if isinstance(C, LpBall):
        return _lp_factor(C)
    body = materialize(C)
    if isinstance(body, Ellipsoid):
        return 1.0
    W = np.array([[float(x) for x in w] for w in facets(body)])
    return float(np.sqrt(_leverages(W, lowner.matrix).max()))


def john_factor(C: ConvexBody, solver: SolverConfig | None = None) -> float:
    """Factor a with J(C) ⊆ C ⊆ a·J(C)."""
    return _john_factor(C, solve_john(C, solver))


def sandwich_factors(C: ConvexBody, solver: SolverConfig | None = None) -> tuple[float, float]:
    """Factors a, b with J(C) ⊆ C ⊆ a·J(C) and C ⊆ L(C) ⊆ b·C."""
    return john_factor(C, solver), _lowner_factor(C, solve_lowner(C, solver))


def delta_upper(C: ConvexBody, solver: SolverConfig | None = None) -> float:
    """Certified upper bound min(√n, a, b) of the Banach-Mazur distance to the Euclidean ball.

    Both sandwiches J ⊆ C ⊆ a·J and L/b ⊆ C ⊆ L exhibit an ellipsoid within the factor of the body.
    """
    return min(math.sqrt(C.dim), *sandwich_factors(C, solver))


def bm_distance_bound(C: ConvexBody, solver: SolverConfig | None = None) -> tuple[float, float]:
    """Bracket of the Banach-Mazur distance from a body to the Euclidean ball.

    The upper bound is `delta_upper`; the lower bound is the largest of vr(C)·vr(C°) and the four single volume
    ratios, each at most the distance. A lower bound above the upper one is clipped, with a warning when the
    excess is beyond the solver tolerance.
    """
    solver = solver or SolverConfig()
    n = C.dim
    upper = delta_upper(C, solver)
    dual = polar(C)
    ratios = [volume_ratio(C, solver), vr_tilde(C, solver), volume_ratio(dual, solver), vr_tilde(dual, solver)]
    lower = max(ratios[0] * ratios[2], *ratios, 1.0)
    if lower > upper * (1 + n * solver.tol):
        logger.warning(f"Banach-Mazur: lower bound {lower:.12g} crosses the upper bound {upper:.12g}")
    return min(lower, upper), upper


# ----------------------------------------------------------------------------------------------------------------------
# Checks


def polarity_check(C: ConvexBody, solver: SolverConfig | None = None) -> CheckReport:
    """Polarity of John and Löwner ellipsoids: J(C)° = L(C°), compared on log-volumes."""
    solver = solver or SolverConfig()
    john = solve_john(C, solver)
    lowner = solve_lowner(polar(C), solver)
    _, logdet = np.linalg.slogdet(john.matrix)
    polar_log_volume = ball_log_volume(C.dim) + 0.5 * float(logdet)
    return CheckReport.equality(
        "john_lowner_polarity",
        polar_log_volume,
        lowner.log_volume,
        tolerance=C.dim * (john.certificate_gap + lowner.certificate_gap + solver.tol) + SLOPE_TOLERANCE,
        instance={"body": C.model_dump(mode="json")},
    )


def sandwich_check(C: ConvexBody, solver: SolverConfig | None = None) -> CheckReport:
    """C ⊆ √n·J(C) and L(C) ⊆ √n·C."""
    solver = solver or SolverConfig()
    a, b = sandwich_factors(C, solver)
    root = math.sqrt(C.dim)
    tolerance = root * C.dim * solver.tol + SLOPE_TOLERANCE
    instance = {"body": C.model_dump(mode="json")}
    return CheckReport.combine(
        "john_lowner_sandwich",
        [
            CheckReport.inequality("john_sandwich", a, root, tolerance=tolerance, instance=instance),
            CheckReport.inequality("lowner_sandwich", b, root, tolerance=tolerance, instance=instance),
        ],
    )


def volume_ratio_check(C: ConvexBody, solver: SolverConfig | None = None) -> CheckReport:
    """vr(C) and vr_tilde(C) lie in [1, √n]."""
    solver = solver or SolverConfig()
    root = math.sqrt(C.dim)
    tolerance = C.dim * solver.tol + SLOPE_TOLERANCE
    instance = {"body": C.model_dump(mode="json")}
    return CheckReport.combine(
        "volume_ratio_range",
        [
            CheckReport.bracket("vr", volume_ratio(C, solver), 1.0, root, tolerance=tolerance, instance=instance),
            CheckReport.bracket("vr_tilde", vr_tilde(C, solver), 1.0, root, tolerance=tolerance, instance=instance),
        ],
    )
