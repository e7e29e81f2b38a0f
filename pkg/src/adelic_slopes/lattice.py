"""Lattice kernels.

Exact integer linear algebra (Smith normal form, saturation, unimodular completion, integer kernels), exterior and
symmetric power matrices, and the floating-point reduction and enumeration behind the slope and minima searches.

Lattices are handed around as Gram matrices in lattice coordinates. Floating point only steers the search: every
value that is reported is recomputed exactly on integer coefficient vectors.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import TYPE_CHECKING

import numpy as np
from sympy import ImmutableMatrix, Matrix, Poly, Rational, symbols
from sympy.polys.matrices import DomainMatrix

from adelic_slopes import logger
from adelic_slopes.errors import DimensionMismatchError, DomainError, SingularMatrixError
from adelic_slopes.utils import parse_rational

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import NDArray


# ----------------------------------------------------------------------------------------------------------------------
# Conversions


def to_rational(value: object) -> Rational:
    """Convert an exact scalar (int, Fraction, "num/den", sympy Rational) to a sympy Rational."""
    if isinstance(value, Rational):
        return value
    fraction = parse_rational(value)  # type: ignore[arg-type]
    return Rational(fraction.numerator, fraction.denominator)


def to_fraction(value: object) -> Fraction:
    """Convert a sympy Rational (or any exact scalar) to a Fraction."""
    if isinstance(value, Rational):
        return Fraction(int(value.p), int(value.q))
    return parse_rational(value)  # type: ignore[arg-type]


def rational_matrix(rows: Sequence[Sequence[object]] | Matrix | ImmutableMatrix) -> ImmutableMatrix:
    """Build an exact rational matrix from nested rows of exact scalars."""
    if isinstance(rows, Matrix | ImmutableMatrix):
        return ImmutableMatrix(rows.applyfunc(to_rational))
    return ImmutableMatrix([[to_rational(x) for x in row] for row in rows])


def column(values: Iterable[object]) -> ImmutableMatrix:
    """Build an exact rational column vector."""
    return ImmutableMatrix([[to_rational(x)] for x in values])


def to_numpy(matrix: Matrix | ImmutableMatrix) -> NDArray[np.float64]:
    """Floating-point copy of an exact matrix."""
    return np.array(matrix.tolist(), dtype=float)


def clear_denominators(matrix: Matrix | ImmutableMatrix) -> tuple[list[list[int]], int]:
    """Scale a rational matrix by the lcm of its denominators and return the integer rows and the scale."""
    entries = [to_fraction(x) for x in matrix]
    scale = reduce(math.lcm, (x.denominator for x in entries), 1)
    rows = matrix.rows
    cols = matrix.cols
    flat = [int(x * scale) for x in entries]
    return [flat[i * cols : (i + 1) * cols] for i in range(rows)], scale


def integer_columns(matrix: Matrix | ImmutableMatrix) -> ImmutableMatrix:
    """Scale every column of a rational matrix to a primitive integer column."""
    cols = []
    for j in range(matrix.cols):
        entries = [to_fraction(x) for x in matrix.col(j)]
        scale = reduce(math.lcm, (x.denominator for x in entries), 1)
        ints = [int(x * scale) for x in entries]
        g = reduce(math.gcd, ints, 0) or 1
        cols.append([x // g for x in ints])
    if not cols:
        return ImmutableMatrix.zeros(matrix.rows, 0)
    return ImmutableMatrix(cols).T


def primitive(vector: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries and make its last nonzero entry positive."""
    g = reduce(math.gcd, vector, 0)
    if g == 0:
        raise DomainError("primitive", "zero vector")
    out = [x // g for x in vector]
    last = next(x for x in reversed(out) if x != 0)
    if last < 0:
        out = [-x for x in out]
    return tuple(out)


# ----------------------------------------------------------------------------------------------------------------------
# Smith normal form, saturation, kernels


def smith_normal_form(matrix: Matrix | ImmutableMatrix) -> tuple[ImmutableMatrix, ImmutableMatrix, ImmutableMatrix]:
    """Smith normal form of an integer matrix.

    Returns `(U, D, V)` with `U * M * V == D`, `U` and `V` unimodular and `D` diagonal with positive invariant factors
    d_1 | d_2 | ... followed by zeros. `U_inv` is kept alongside `U`; use `smith_normal_form_with_inverse` to get it.
    """
    U, D, V, _ = smith_normal_form_with_inverse(matrix)
    return U, D, V


def smith_normal_form_with_inverse(
    matrix: Matrix | ImmutableMatrix,
) -> tuple[ImmutableMatrix, ImmutableMatrix, ImmutableMatrix, ImmutableMatrix]:
    """Smith normal form `(U, D, V, U_inv)` tracking the inverse of the left transform."""
    m, n = matrix.shape
    if any(to_fraction(x).denominator != 1 for x in matrix):
        raise DomainError("smith_normal_form", "matrix is not integral")
    M = [[int(matrix[i, j]) for j in range(n)] for i in range(m)]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    U_inv = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i: int, k: int) -> None:
        M[i], M[k] = M[k], M[i]
        U[i], U[k] = U[k], U[i]
        for row in U_inv:
            row[i], row[k] = row[k], row[i]

    def swap_cols(j: int, k: int) -> None:
        for row in M:
            row[j], row[k] = row[k], row[j]
        for row in V:
            row[j], row[k] = row[k], row[j]

    def add_row(target: int, source: int, factor: int) -> None:
        # row_target += factor * row_source
        M[target] = [a + factor * b for a, b in zip(M[target], M[source], strict=True)]
        U[target] = [a + factor * b for a, b in zip(U[target], U[source], strict=True)]
        for row in U_inv:
            row[source] -= factor * row[target]

    def add_col(target: int, source: int, factor: int) -> None:
        for row in M:
            row[target] += factor * row[source]
        for row in V:
            row[target] += factor * row[source]

    for t in range(min(m, n)):
        while True:
            pivots = [(abs(M[i][j]), i, j) for i in range(t, m) for j in range(t, n) if M[i][j] != 0]
            if not pivots:
                break
            _, i, j = min(pivots)
            swap_rows(t, i)
            swap_cols(t, j)
            clean = True
            for i in range(t + 1, m):
                q = M[i][t] // M[t][t]
                if q:
                    add_row(i, t, -q)
                clean = clean and M[i][t] == 0
            for j in range(t + 1, n):
                q = M[t][j] // M[t][t]
                if q:
                    add_col(j, t, -q)
                clean = clean and M[t][j] == 0
            if not clean:
                continue
            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if M[i][j] % M[t][t] != 0),
                None,
            )
            if offender is None:
                break
            add_row(t, offender, 1)
        if M[t][t] < 0:
            M[t] = [-x for x in M[t]]
            U[t] = [-x for x in U[t]]
            for row in U_inv:
                row[t] = -row[t]

    return ImmutableMatrix(U), ImmutableMatrix(M), ImmutableMatrix(V), ImmutableMatrix(U_inv)


def saturate(vectors: Matrix | ImmutableMatrix) -> tuple[ImmutableMatrix, ImmutableMatrix]:
    """Saturate the lattice spanned by rational column vectors inside Z^n.

    Returns `(W, U)`: `W` is an n×r basis of `span(vectors) ∩ Z^n` and `U` is an n×n unimodular matrix whose first r
    columns are `W` (a completion of `W` to a basis of Z^n).
    """
    n = vectors.rows
    if vectors.cols == 0:
        identity = ImmutableMatrix.eye(n)
        return ImmutableMatrix.zeros(n, 0), identity
    _, D, _, U_inv = smith_normal_form_with_inverse(integer_columns(vectors))
    rank = sum(1 for i in range(min(D.shape)) if D[i, i] != 0)
    return U_inv[:, :rank], U_inv


def integer_kernel(matrix: Matrix | ImmutableMatrix) -> ImmutableMatrix:
    """Saturated integer basis (as columns) of the kernel of a rational matrix."""
    basis = Matrix(matrix).nullspace()
    if not basis:
        return ImmutableMatrix.zeros(matrix.cols, 0)
    W, _ = saturate(Matrix.hstack(*basis))
    return W


def column_rank(matrix: Matrix | ImmutableMatrix) -> int:
    """Exact rank of a rational matrix."""
    if matrix.cols == 0 or matrix.rows == 0:
        return 0
    return int(DomainMatrix.from_Matrix(Matrix(matrix)).to_field().rank())


def contains(big: Matrix | ImmutableMatrix, small: Matrix | ImmutableMatrix) -> bool:
    """Whether the column space of `small` lies in the column space of `big`."""
    if small.cols == 0:
        return True
    return column_rank(Matrix.hstack(big, small)) == column_rank(big)


def same_subspace(first: Matrix | ImmutableMatrix, second: Matrix | ImmutableMatrix) -> bool:
    """Whether two column spans coincide."""
    return contains(first, second) and contains(second, first)


# ----------------------------------------------------------------------------------------------------------------------
# Exterior and symmetric powers


def subsets(n: int, r: int) -> list[tuple[int, ...]]:
    """The r-subsets of range(n) in lexicographic order, indexing the basis e_I of the r-th exterior power."""
    return list(combinations(range(n), r))


def compound_matrix(matrix: Matrix | ImmutableMatrix, r: int) -> ImmutableMatrix:
    """The r-th compound matrix (all r×r minors, rows and columns indexed by lexicographic r-subsets).

    It is the matrix of the r-th exterior power, and the compound of a Gram matrix is the Gram of the exterior power.
    """
    if r == 0:
        return ImmutableMatrix([[1]])
    rows = subsets(matrix.rows, r)
    cols = subsets(matrix.cols, r)
    return ImmutableMatrix(
        [[matrix.extract(list(row), list(col)).det(method="bareiss") for col in cols] for row in rows]
    )


def kronecker(first: Matrix | ImmutableMatrix, second: Matrix | ImmutableMatrix) -> ImmutableMatrix:
    """Kronecker product, the matrix of the tensor product in the basis e_i ⊗ f_j (i major)."""
    m, n = second.shape
    return ImmutableMatrix(
        first.rows * m,
        first.cols * n,
        lambda i, j: first[i // m, j // n] * second[i % m, j % n],
    )


def block_diagonal(first: Matrix | ImmutableMatrix, second: Matrix | ImmutableMatrix) -> ImmutableMatrix:
    """Block diagonal matrix diag(first, second)."""
    return ImmutableMatrix(Matrix.diag(first, second))


def monomials(n: int, ell: int) -> list[tuple[int, ...]]:
    """Exponent vectors of the degree-ell monomials in n variables, in lexicographic order (x1^ell first)."""
    if n == 1:
        return [(ell,)]
    out: list[tuple[int, ...]] = []
    for head in range(ell, -1, -1):
        out.extend((head, *tail) for tail in monomials(n - 1, ell - head))
    return out


def _indices(exponent: Sequence[int]) -> list[int]:
    return [k for k, e in enumerate(exponent) for _ in range(e)]


def permanent(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Permanent of a small square matrix (Ryser formula)."""
    size = len(matrix)
    if size == 0:
        return Fraction(1)
    total = Fraction(0)
    for mask in range(1, 1 << size):
        cols = [j for j in range(size) if mask >> j & 1]
        product = Fraction(1)
        for row in matrix:
            product *= sum((row[j] for j in cols), Fraction(0))
        total += (-1) ** len(cols) * product
    return (-1) ** size * total


def sympow_matrix(matrix: Matrix | ImmutableMatrix, ell: int) -> ImmutableMatrix:
    """Matrix of the ell-th symmetric power of a square matrix in the monomial basis (lexicographic order).

    Column j holds the coefficients of prod_k (M e_k)^(j_k) expanded in the monomials.
    """
    if matrix.rows != matrix.cols:
        raise DimensionMismatchError("sympow_matrix", "square matrix", matrix.shape)
    n = matrix.rows
    if ell == 0:
        return ImmutableMatrix([[1]])
    xs = symbols(f"x0:{n}")
    basis = monomials(n, ell)
    position = {exponent: i for i, exponent in enumerate(basis)}
    images = [sum(matrix[i, k] * xs[i] for i in range(n)) for k in range(n)]
    out = Matrix.zeros(len(basis), len(basis))
    for j, exponent in enumerate(basis):
        product = Poly(math.prod((images[k] ** e for k, e in enumerate(exponent)), start=1), *xs)
        for monomial, coefficient in product.terms():
            out[position[tuple(monomial)], j] = coefficient
    return ImmutableMatrix(out)


def sympow_gram(gram: Matrix | ImmutableMatrix, ell: int) -> ImmutableMatrix:
    """Gram matrix of the ell-th symmetric power in the monomial basis.

    The monomial x^a is the symmetrized tensor of e_{u_1}, ..., e_{u_ell}, so that
    <x^a, x^b> = perm(G[u_a, u_b]) / ell!. For G = I this is diag(a! / ell!).
    """
    n = gram.rows
    basis = monomials(n, ell)
    g = [[to_fraction(gram[i, j]) for j in range(n)] for i in range(n)]
    denominator = math.factorial(ell)
    indices = [_indices(a) for a in basis]
    size = len(basis)
    out = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            sub = [[g[u][w] for w in indices[j]] for u in indices[i]]
            out[i][j] = out[j][i] = permanent(sub) / denominator
    return rational_matrix(out)


def wedge_map(w: Sequence[int], n: int, r: int) -> ImmutableMatrix:
    """Matrix of x ↦ x ∧ w from Q^n to the (r+1)-th exterior power, for w in the r-th exterior power."""
    source = subsets(n, r)
    target = {subset: i for i, subset in enumerate(subsets(n, r + 1))}
    out = Matrix.zeros(len(target), n)
    for index, coefficient in zip(source, w, strict=True):
        if coefficient == 0:
            continue
        for j in range(n):
            if j in index:
                continue
            sign = (-1) ** sum(1 for i in index if i < j)
            out[target[tuple(sorted((*index, j)))], j] += sign * coefficient
    return ImmutableMatrix(out)


def is_decomposable(w: Sequence[int], n: int, r: int) -> bool:
    """Plücker test: w is a pure wedge iff x ↦ x ∧ w has rank n - r."""
    if r in (0, 1, n - 1, n):
        return any(w)
    return column_rank(wedge_map(w, n, r)) == n - r


def decomposable_subspace(w: Sequence[int], n: int, r: int) -> ImmutableMatrix:
    """Saturated integer basis of the r-dimensional subspace represented by a decomposable w."""
    if r == n:
        return ImmutableMatrix.eye(n)
    if r == 0:
        return ImmutableMatrix.zeros(n, 0)
    return integer_kernel(wedge_map(w, n, r))


def plucker_coordinates(basis: Matrix | ImmutableMatrix) -> tuple[int, ...]:
    """Plücker coordinates (maximal minors in lexicographic order) of an integer n×r basis."""
    r = basis.cols
    return tuple(int(basis.extract(list(rows), list(range(r))).det()) for rows in subsets(basis.rows, r))


# ----------------------------------------------------------------------------------------------------------------------
# Floating-point reduction and enumeration


def integer_gram(gram: Matrix | ImmutableMatrix) -> tuple[list[list[int]], int]:
    """Integer multiple of a rational Gram matrix with its scale, for exact norm comparisons."""
    return clear_denominators(gram)


def exact_norm(gram_int: Sequence[Sequence[int]], vector: Sequence[int]) -> int:
    """Exact quadratic form vᵀ G v on integer data."""
    return sum(
        vi * sum(g * vj for g, vj in zip(row, vector, strict=True)) for vi, row in zip(vector, gram_int, strict=True)
    )


def lll_reduce(gram: NDArray[np.float64], delta: float = 0.99) -> NDArray[np.int64]:
    """LLL reduction of a positive-definite Gram matrix.

    Returns the integer transform T (columns are the reduced basis in the input coordinates); the reduced Gram is
    Tᵀ G T.
    """
    G = np.array(gram, dtype=float)
    n = G.shape[0]
    T = np.eye(n, dtype=np.int64)
    k = 1
    while k < n:
        L = np.linalg.cholesky(G)
        mu = L / np.diag(L)
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                row = G[k] - q * G[j]
                row[k] = G[k, k] - 2 * q * G[k, j] + q * q * G[j, j]
                G[k, :] = row
                G[:, k] = row
                T[:, k] -= q * T[:, j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
        L = np.linalg.cholesky(G)
        b_prev = L[k - 1, k - 1] ** 2
        b_cur = L[k, k] ** 2
        mu_k = L[k, k - 1] / L[k - 1, k - 1]
        if b_cur >= (delta - mu_k**2) * b_prev:
            k += 1
        else:
            G[[k - 1, k], :] = G[[k, k - 1], :]
            G[:, [k - 1, k]] = G[:, [k, k - 1]]
            T[:, [k - 1, k]] = T[:, [k, k - 1]]
            k = max(k - 1, 1)
    return T


def enumerate_short_vectors(
    gram: NDArray[np.float64], radius_sq: float, max_nodes: int
) -> tuple[list[tuple[int, ...]], bool]:
    """Fincke-Pohst enumeration of the lattice vectors with vᵀ G v ≤ radius_sq.

    One vector of each ± pair is returned (the last nonzero coordinate is positive), the zero vector is skipped.
    Returns `(vectors, truncated)`; `truncated` is set when the node budget ran out.
    """
    n = gram.shape[0]
    R = np.linalg.cholesky(gram).T
    diag = np.diag(R).copy()
    q = R / diag[:, None]
    qdiag = diag**2
    found: list[tuple[int, ...]] = []
    x = [0] * n
    nodes = 0
    truncated = False

    def search(k: int, partial: float, *, higher_zero: bool) -> None:
        nonlocal nodes, truncated
        center = -sum(q[k, j] * x[j] for j in range(k + 1, n))
        remaining = radius_sq - partial
        if remaining < 0:
            return
        half = math.sqrt(remaining / qdiag[k])
        low = math.ceil(center - half)
        high = math.floor(center + half)
        if higher_zero:
            low = max(low, 0)
        for value in range(low, high + 1):
            nodes += 1
            if nodes > max_nodes:
                truncated = True
                return
            total = partial + qdiag[k] * (value - center) ** 2
            if total > radius_sq:
                continue
            x[k] = value
            if k == 0:
                if any(x):
                    found.append(tuple(x))
            else:
                search(k - 1, total, higher_zero=higher_zero and value == 0)
            if truncated:
                return
        x[k] = 0

    search(n - 1, 0.0, higher_zero=True)
    if truncated:
        logger.warning(f"Enumeration: truncated after {max_nodes} nodes in dimension {n}")
    return found, truncated


def shortest_vector(gram: NDArray[np.float64], max_nodes: int) -> tuple[int, ...]:
    """A shortest nonzero vector of a small lattice given by its Gram matrix."""
    T = lll_reduce(gram)
    reduced = T.T @ gram @ T
    radius = float(min(np.diag(reduced))) * (1 + 1e-9)
    candidates, _ = enumerate_short_vectors(reduced, radius, max_nodes)
    best = min(candidates, key=lambda c: float(np.asarray(c) @ reduced @ np.asarray(c)))
    return tuple(int(v) for v in T @ np.asarray(best, dtype=np.int64))


def hkz_reduce(gram: Matrix | ImmutableMatrix, max_nodes: int) -> ImmutableMatrix:
    """Hermite-Korkine-Zolotarev reduction of a small lattice given by an exact Gram matrix.

    Returns the unimodular transform whose columns are the HKZ basis: each vector is a shortest vector of the
    projection of the lattice orthogonally to the previous ones.
    """
    n = gram.rows
    T = Matrix.eye(n)
    for i in range(n - 1):
        current = T.T * gram * T
        block = current[i:, i:]
        if i:
            head = current[:i, :i]
            cross = current[:i, i:]
            block = block - cross.T * head.inv() * cross
        c = shortest_vector(to_numpy(block), max_nodes)
        _, completion = saturate(ImmutableMatrix([[v] for v in c]))
        step = Matrix.eye(n)
        step[i:, i:] = completion
        T = T * step
    return ImmutableMatrix(T)


def invertible(matrix: Matrix | ImmutableMatrix, operation: str) -> ImmutableMatrix:
    """Return the exact inverse or raise `SingularMatrixError`."""
    if matrix.rows != matrix.cols:
        raise DimensionMismatchError(operation, "square matrix", matrix.shape)
    if matrix.det() == 0:
        raise SingularMatrixError(operation)
    return ImmutableMatrix(matrix.inv())
