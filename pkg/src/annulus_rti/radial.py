"""One-dimensional discretization of [R1, R2].

Provides collocation nodes, dense differentiation matrices up to 4th order,
quadrature weights, and the constrained trial space

    {W : W(R1) = W(R2) = 0, DW(R2) = 0}

used by the 4th-order eigenvalue problem.  Two schemes are supported:
Chebyshev-Lobatto collocation (spectral accuracy, the default) and a 4th-order
finite-difference scheme on uniform nodes.  Nodes are stored ascending, so
index 0 is the inner radius R1 and index n-1 the outer radius R2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, solve_triangular, toeplitz

from .errors import RankDeficiency, TooFewNodes

CHEBYSHEV = "chebyshev-collocation"
FINITE_DIFFERENCE = "finite-difference-4"


def chebyshev_diff_matrices(n, max_order=4):
    """Nodes on [-1, 1] (ascending) and differentiation matrices of orders 1..max_order.

    Uses the trigonometric node-difference form with the negative-sum trick,
    which keeps roundoff well below naive matrix powers for moderate n.
    """
    if n < 2:
        raise TooFewNodes(f"need at least 2 nodes, got {n}")
    k = np.arange(n)
    th = k * np.pi / (n - 1)
    # y = -cos(th) is ascending; the recursion below differentiates w.r.t. y.
    y = -np.sin(np.pi * (n - 1 - 2 * k) / (2 * (n - 1)))
    T = np.tile(th / 2, (n, 1))
    DX = 2 * np.sin(T.T + T) * np.sin(T.T - T)
    n_half = int(np.ceil(n / 2.0))
    DX[n_half:, :] = -np.flipud(np.fliplr(DX[: n - n_half, :]))
    DX[k, k] = 1.0
    C = toeplitz((-1.0) ** k)
    C[0, :] *= 2.0
    C[-1, :] *= 2.0
    C[:, 0] *= 0.5
    C[:, -1] *= 0.5
    Z = 1.0 / DX
    Z[k, k] = 0.0
    D = np.eye(n)
    out = []
    for order in range(max_order):
        D = (order + 1) * Z * (C * np.tile(np.diag(D), (n, 1)).T - D)
        D[k, k] = -np.sum(D, axis=1)
        out.append(D.copy())
    return y, out


def clenshaw_curtis_weights(n):
    """Clenshaw-Curtis weights on [-1, 1] for n Chebyshev-Lobatto nodes.

    Exact for polynomials of degree <= n-1; symmetric, so node ordering is
    irrelevant.
    """
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    ii = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for m in range(1, N // 2):
            v -= 2.0 * np.cos(2 * m * theta[ii]) / (4 * m**2 - 1)
        v -= np.cos(N * theta[ii]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for m in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * m * theta[ii]) / (4 * m**2 - 1)
    w[ii] = 2.0 * v / N
    return w


def fornberg_weights(z, x, m):
    """Finite-difference weights at point z for derivatives 0..m on stencil x."""
    x = np.asarray(x, dtype=float)
    nn = len(x)
    c = np.zeros((nn, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, nn):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for s in range(mn, 0, -1):
                    c[i, s] = c1 * (s * c[i - 1, s - 1] - c5 * c[i - 1, s]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for s in range(mn, 0, -1):
                c[j, s] = (c4 * c[j, s] - s * c[j, s - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def fd_diff_matrix(nodes, order, accuracy=4):
    """Dense finite-difference matrix of given derivative order and accuracy."""
    n = len(nodes)
    width = order + accuracy  # stencil size for the requested accuracy
    if width % 2 == 0:
        width += 1
    if width > n:
        raise TooFewNodes(f"{n} nodes cannot support order-{order} stencils")
    D = np.zeros((n, n))
    half = width // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        sten = np.arange(lo, lo + width)
        D[i, sten] = fornberg_weights(nodes[i], nodes[sten], order)[:, order]
    return D


def _interpolatory_weights(nodes, a, b):
    """Weights integrating the Lagrange interpolant on `nodes` over [a, b]."""
    n = len(nodes)
    w = np.zeros(n)
    for i in range(n):
        ci = np.zeros(n)
        ci[i] = 1.0
        poly = np.polynomial.polynomial.Polynomial.fit(nodes, ci, n - 1)
        integ = poly.integ()
        w[i] = integ(b) - integ(a)
    return w


def fd_quadrature_weights(nodes):
    """Composite degree-4 interpolatory quadrature on uniform nodes.

    Blocks of four intervals use the five-point Newton-Cotes rule; a shorter
    final block integrates the degree-4 interpolant of the last five nodes over
    the leftover subinterval, so polynomials of degree <= 4 are integrated
    exactly regardless of n mod 4.
    """
    n = len(nodes)
    if n < 5:
        raise TooFewNodes("degree-4 quadrature needs at least 5 nodes")
    w = np.zeros(n)
    i = 0
    while n - 1 - i >= 4:
        sten = slice(i, i + 5)
        w[sten] += _interpolatory_weights(nodes[sten], nodes[i], nodes[i + 4])
        i += 4
    if i < n - 1:
        sten = slice(n - 5, n)
        w[sten] += _interpolatory_weights(nodes[sten], nodes[i], nodes[-1])
    return w


@dataclass
class RadialGrid:
    """Collocation nodes, differentiation matrices and quadrature on [R1, R2]."""

    n: int
    nodes: np.ndarray
    Dk: list  # differentiation matrices, Dk[0] = D^1 .. Dk[3] = D^4
    w: np.ndarray
    scheme: str
    R1: float = field(default=0.0)
    R2: float = field(default=0.0)

    @property
    def D1(self):
        return self.Dk[0]

    @property
    def D2(self):
        return self.Dk[1]

    def integrate(self, values):
        """Quadrature of sampled values over [R1, R2] (last axis)."""
        return np.asarray(values) @ self.w

    def cheb_coeffs(self, values):
        """Chebyshev coefficients of the nodal interpolant (chebyshev scheme)."""
        if self.scheme != CHEBYSHEV:
            raise ValueError("coefficient transform requires the chebyshev scheme")
        v = np.asarray(values)[..., ::-1]  # descending x ordering for the DCT
        ext = np.concatenate([v, v[..., -2:0:-1]], axis=-1)
        F = np.fft.fft(ext, axis=-1)[..., : self.n] / (self.n - 1)
        F = F.real if np.isrealobj(v) else F
        F[..., 0] *= 0.5
        F[..., -1] *= 0.5
        return F

    def smooth_derivative(self, values, order, rel_floor=None):
        """Stable m-th derivative of smooth nodal data.

        On chebyshev grids the data is transformed to coefficient space, the
        roundoff tail beyond the decay valley (or below rel_floor * max|coeff|
        when given) is dropped, and the derivative is taken by coefficient
        recurrence.  This avoids the n^2m noise amplification of repeated
        dense-matrix differentiation; finite-difference grids fall back to
        the matrices.
        """
        if self.scheme != CHEBYSHEV:
            out = np.asarray(values)
            return out @ self.Dk[order - 1].T if out.ndim > 1 else self.Dk[order - 1] @ out
        c = self.cheb_coeffs(values)
        if rel_floor is not None:
            mag = np.abs(c)
            c = np.where(mag > rel_floor * mag.max(axis=-1, keepdims=True), c, 0.0)
        else:
            c = np.atleast_2d(c)
            for row in c:
                row[coeff_valley_cutoff(np.abs(row), order=order) :] = 0.0
            c = c if np.asarray(values).ndim > 1 else c[0]
        scale = 2.0 / (self.R2 - self.R1)
        der = np.polynomial.chebyshev.chebder(np.moveaxis(c, -1, 0), order) * scale**order
        x = np.polynomial.chebyshev.chebpts2(self.n)
        vals = np.polynomial.chebyshev.chebval(x, der, tensor=True)
        return vals


def coeff_valley_cutoff(mag, window=None, order=0):
    """Index where a coefficient-magnitude profile bottoms out.

    Smooth data on an adequate grid decays to a roundoff valley and may rise
    again (solver noise concentrates in the top modes); everything past the
    valley carries no information.  For an order-m derivative the profile is
    weighted by k^{2m} first, since mode k contributes O(k^{2m}) to endpoint
    values of the derivative.  Returns len(mag) when the weighted profile is
    still decaying at the end.
    """
    n = len(mag)
    if order:
        mag = mag * (1.0 + np.arange(n)) ** (2 * order)
    window = window or max(4, n // 16)
    if n <= window + 1:
        return n
    best = np.inf
    arg = n
    for i in range(n - window):
        v = mag[i : i + window].max()
        if v < best:
            best, arg = v, i
    if arg >= n - window - 1:
        return n
    return arg


@dataclass
class TrialSpace:
    """Orthonormal basis of the essential-BC kernel W(R1)=W(R2)=DW(R2)=0.

    The Robin condition at R1 is natural for the variational problem and is
    deliberately not imposed here.  On chebyshev grids the columns also carry
    an exact polynomial representation (coeff_basis) built from degree-graded
    recombinations of Chebyshev polynomials; derivatives of basis functions
    are then available without the roundoff amplification of dense
    differentiation matrices.
    """

    grid: RadialGrid
    basis: np.ndarray  # (n, n-3), orthonormal columns (values at the nodes)
    coeff_basis: np.ndarray | None = field(default=None, repr=False)
    graded_R: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self):
        return self.basis.shape[1]


def build_grid(n, params, scheme=CHEBYSHEV):
    """Build a RadialGrid with n nodes on [params.R1, params.R2]."""
    if n < 8:
        raise TooFewNodes(f"n must be >= 8, got {n}")
    R1, R2 = params.R1, params.R2
    half = (R2 - R1) / 2.0
    if scheme == CHEBYSHEV:
        y, DM = chebyshev_diff_matrices(n, 4)
        nodes = (R2 + R1) / 2.0 + half * y
        nodes[0], nodes[-1] = R1, R2
        Dk = [DM[m] / half ** (m + 1) for m in range(4)]
        w = clenshaw_curtis_weights(n) * half
    elif scheme == FINITE_DIFFERENCE:
        nodes = np.linspace(R1, R2, n)
        Dk = [fd_diff_matrix(nodes, m + 1, accuracy=4) for m in range(4)]
        w = fd_quadrature_weights(nodes)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return RadialGrid(n=n, nodes=nodes, Dk=Dk, w=w, scheme=scheme, R1=R1, R2=R2)


def build_trial_space(grid):
    """Orthonormal basis of {W : W(R1) = W(R2) = 0, DW(R2) = 0}.

    Chebyshev grids use the graded recombination

        phi_j = T_j - (j+1)/(j+2) T_{j+1} - T_{j+2} + (j+1)/(j+2) T_{j+3}

    (x ascending, so x = -1 is R1) which satisfies phi(+-1) = 0, phi'(1) = 0
    exactly, followed by a QR that preserves the degree grading.  Finite
    difference grids fall back to an SVD null-space basis.
    """
    n = grid.n
    if grid.scheme == CHEBYSHEV:
        coeff = np.zeros((n, n - 3))
        j = np.arange(n - 3)
        a = (j + 1.0) / (j + 2.0)
        coeff[j, j] = 1.0
        coeff[j + 1, j] = -a
        coeff[j + 2, j] = -1.0
        coeff[j + 3, j] = a
        x = np.polynomial.chebyshev.chebpts2(n)
        vander = np.polynomial.chebyshev.chebvander(x, n - 1)
        vals = vander @ coeff
        Q, R = np.linalg.qr(vals)
        if np.abs(np.diag(R)).min() < 1e-10 * np.abs(np.diag(R)).max():
            raise RankDeficiency("graded basis lost rank in QR")
        sgn = np.sign(np.diag(R))
        sgn[sgn == 0] = 1.0
        Q = Q * sgn
        Rs = R * sgn[:, None]
        coeff_q = solve_triangular(Rs, coeff.T, trans="T").T
        return TrialSpace(grid=grid, basis=Q, coeff_basis=coeff_q, graded_R=Rs)

    C = np.zeros((3, n))
    C[0, 0] = 1.0
    C[1, -1] = 1.0
    C[2] = grid.D1[-1]
    norms = np.linalg.norm(C, axis=1)
    C = C / norms[:, None]
    sv = np.linalg.svd(C, compute_uv=False)
    if sv[-1] < 1e-10:
        raise RankDeficiency("boundary constraint rows are numerically dependent")
    B = null_space(C)
    # one refinement pass drives the constraint residual to rounding level
    B -= C.T @ np.linalg.solve(C @ C.T, C @ B)
    B, _ = np.linalg.qr(B)
    if B.shape[1] != n - 3:
        raise RankDeficiency(f"expected {n - 3} basis columns, got {B.shape[1]}")
    return TrialSpace(grid=grid, basis=B)
