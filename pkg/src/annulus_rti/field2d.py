"""Fourier-in-theta x radial fields on the annulus, polar operators, Leray
projection, Stokes solves and Stokes eigenpairs.

A PolarField stores complex coefficients c_k(r) for k = -K..K of a real field
u(r, theta) = sum_k c_k(r) e^{i k theta}; reality means c_{-k} = conj(c_k).
All differential operators act mode-by-mode with d/dtheta -> ik and the grid's
dense radial matrices.  The "divergence" throughout is the r-scaled form
d_r(r v_r) + d_theta v_theta used by the incompressibility constraint.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import EigenFailure, GridMismatch, SingularNeumann, SingularSystem

_MAGIC = b"ANNF1"
_SNAPSHOT_TAGS = (b"vr", b"vtheta", b"rho", b"p")


@dataclass
class PolarField:
    """Real scalar field in Fourier-coefficient form."""

    K: int
    grid: "object"
    coeffs: np.ndarray  # complex, shape (2K+1, n); row i holds mode k = i - K

    def co(self, k):
        """Coefficient row of mode k (view)."""
        return self.coeffs[k + self.K]

    def copy(self):
        return PolarField(self.K, self.grid, self.coeffs.copy())

    def reality_error(self):
        flipped = np.conj(self.coeffs[::-1])
        return float(np.abs(self.coeffs - flipped).max())

    def enforce_reality(self):
        self.coeffs = 0.5 * (self.coeffs + np.conj(self.coeffs[::-1]))
        return self


def field_zeros(K, grid):
    return PolarField(K, grid, np.zeros((2 * K + 1, grid.n), dtype=complex))


def _check_compatible(*fields):
    g0, K0 = fields[0].grid, fields[0].K
    for f in fields[1:]:
        if f.grid is not g0 and not np.array_equal(f.grid.nodes, g0.nodes):
            raise GridMismatch("fields live on different radial grids")
        if f.K != K0:
            raise GridMismatch("fields carry different Fourier bands")


@dataclass
class VelocityField:
    """Divergence-free velocity pair with the kinematic wall conditions."""

    vr: PolarField
    vtheta: PolarField

    def __post_init__(self):
        _check_compatible(self.vr, self.vtheta)

    @property
    def K(self):
        return self.vr.K

    @property
    def grid(self):
        return self.vr.grid

    def copy(self):
        return VelocityField(self.vr.copy(), self.vtheta.copy())


def to_physical(fld, ntheta):
    """Sample on the (r_i, theta_j) lattice, theta_j = 2 pi j / ntheta."""
    if ntheta < 2 * fld.K + 1:
        raise ValueError("ntheta too small for the stored band")
    spec = np.zeros((ntheta, fld.grid.n), dtype=complex)
    K = fld.K
    spec[0] = fld.coeffs[K]
    for k in range(1, K + 1):
        spec[k] = fld.coeffs[K + k]
        spec[ntheta - k] = fld.coeffs[K - k]
    # values[j, i] = sum_k spec[k, i] e^{2 pi i k j / ntheta}
    return np.real(np.fft.ifft(spec * ntheta, axis=0))


def from_physical(values, K, grid):
    """Truncate physical samples (ntheta, n) to a K-band PolarField."""
    ntheta = values.shape[0]
    spec = np.fft.fft(values, axis=0) / ntheta
    out = field_zeros(K, grid)
    out.coeffs[K] = spec[0]
    for k in range(1, K + 1):
        out.coeffs[K + k] = spec[k]
        out.coeffs[K - k] = spec[ntheta - k]
    return out


def _mode_wavenumbers(K):
    return np.arange(-K, K + 1)


def apply_operator(name, arg):
    """Exact discrete polar operators, mode by mode.

    "grad":             scalar -> (d_r p, (1/r) d_theta p)
    "div":              velocity -> d_r(r v_r) + d_theta v_theta
    "vector_laplacian": velocity -> (Delta_r v_r - v_r/r^2 - (2/r^2) d_theta v_theta,
                                     Delta_r v_theta - v_theta/r^2 + (2/r^2) d_theta v_r)
    """
    if name == "grad":
        p = arg
        grid, K = p.grid, p.K
        r = grid.nodes
        ks = _mode_wavenumbers(K)
        dr = field_zeros(K, grid)
        dth = field_zeros(K, grid)
        dr.coeffs = p.coeffs @ grid.D1.T
        dth.coeffs = (1j * ks)[:, None] * p.coeffs / r[None, :]
        return dr, dth
    if name == "div":
        V = arg
        grid, K = V.grid, V.K
        r = grid.nodes
        ks = _mode_wavenumbers(K)
        out = field_zeros(K, grid)
        out.coeffs = (r[None, :] * V.vr.coeffs) @ grid.D1.T + (1j * ks)[:, None] * V.vtheta.coeffs
        return out
    if name == "vector_laplacian":
        V = arg
        grid, K = V.grid, V.K
        r = grid.nodes
        out_r = field_zeros(K, grid)
        out_t = field_zeros(K, grid)
        for k in range(-K, K + 1):
            Lk = _scalar_laplacian_matrix(grid, k)
            cr = V.vr.co(k)
            ct = V.vtheta.co(k)
            out_r.co(k)[:] = Lk @ cr - cr / r**2 - (2j * k / r**2) * ct
            out_t.co(k)[:] = Lk @ ct - ct / r**2 + (2j * k / r**2) * cr
        return VelocityField(out_r, out_t)
    raise ValueError(f"unknown operator {name!r}")


def _scalar_laplacian_matrix(grid, k):
    r = grid.nodes
    return grid.D2 + (1.0 / r)[:, None] * grid.D1 - np.diag(float(k) ** 2 / r**2)


# --- Leray projection -------------------------------------------------------


def _neumann_solve(grid, k, rhs, bc_lo, bc_hi, compat_tol=1e-8):
    """Solve r p'' + p' - (k^2/r) p = rhs with Neumann data p'(R1), p'(R2).

    The k = 0 problem is singular up to constants; it is closed with an
    r-weighted zero-mean gauge and a compatibility multiplier whose size is
    returned as the residual measure.
    """
    n = grid.n
    r = grid.nodes
    L = r[:, None] * grid.D2 + grid.D1 - np.diag(float(k) ** 2 / r)
    if k != 0:
        A = L.copy().astype(complex)
        b = np.asarray(rhs, dtype=complex).copy()
        A[0] = grid.D1[0]
        A[-1] = grid.D1[-1]
        b[0] = bc_lo
        b[-1] = bc_hi
        try:
            return np.linalg.solve(A, b), 0.0
        except np.linalg.LinAlgError as exc:
            raise SingularNeumann(str(exc)) from exc
    A = np.zeros((n + 1, n + 1), dtype=complex)
    A[:n, :n] = L
    A[0, :n] = grid.D1[0]
    A[n - 1, :n] = grid.D1[-1]
    A[1 : n - 1, n] = 1.0  # compatibility multiplier on the interior rows
    A[n, :n] = grid.w * r  # zero-mean gauge
    b = np.zeros(n + 1, dtype=complex)
    b[:n] = rhs
    b[0] = bc_lo
    b[n - 1] = bc_hi
    sol = np.linalg.solve(A, b)
    tau = abs(sol[n])
    scale = max(np.abs(rhs).max(), abs(bc_lo), abs(bc_hi))
    if tau > max(compat_tol * scale, 1e-13):
        raise SingularNeumann(f"k=0 compatibility defect {tau:.3e} exceeds tolerance")
    return sol[:n], tau


def leray_project(f1, f2):
    """Decompose (f1, f2) = V + (d_r p, (1/r) d_theta p) with V divergence-free.

    f1, f2 are PolarFields.  Per mode k the pressure solves the radial Neumann
    problem with data d_r p = f1 at both walls, so the projected radial
    velocity vanishes there exactly.  Returns (VelocityField, pressure).
    """
    _check_compatible(f1, f2)
    grid, K = f1.grid, f1.K
    r = grid.nodes
    p = field_zeros(K, grid)
    vr = field_zeros(K, grid)
    vt = field_zeros(K, grid)
    for k in range(-K, K + 1):
        c1 = f1.co(k)
        c2 = f2.co(k)
        rhs = grid.D1 @ (r * c1) + 1j * k * c2
        pk, _ = _neumann_solve(grid, k, rhs, c1[0], c1[-1])
        p.co(k)[:] = pk
        vr.co(k)[:] = c1 - grid.D1 @ pk
        vt.co(k)[:] = c2 - 1j * k * pk / r
    return VelocityField(vr, vt), p


# --- Stokes solve -----------------------------------------------------------


def _stokes_mode_matrix(grid, params, k):
    """Square (3n x 3n) collocation matrix for the k != 0 Stokes mode."""
    n = grid.n
    r = grid.nodes
    mu = params.mu
    Lk = _scalar_laplacian_matrix(grid, k)
    Avv = mu * (Lk - np.diag(1.0 / r**2))
    Avt = mu * np.diag(-2j * float(k) / r**2)
    Atv = mu * np.diag(+2j * float(k) / r**2)
    A = np.zeros((3 * n, 3 * n), dtype=complex)
    # momentum-r rows
    A[0:n, 0:n] = Avv
    A[0:n, n : 2 * n] = Avt
    A[0:n, 2 * n :] = -grid.D1
    # momentum-theta rows
    A[n : 2 * n, 0:n] = Atv
    A[n : 2 * n, n : 2 * n] = Avv
    A[n : 2 * n, 2 * n :] = np.diag(-1j * float(k) / r)
    # divergence rows
    A[2 * n :, 0:n] = grid.D1 * r[None, :]
    A[2 * n :, n : 2 * n] = 1j * float(k) * np.eye(n)
    # boundary rows: vr = 0 at both walls
    A[0] = 0.0
    A[0, 0] = 1.0
    A[n - 1] = 0.0
    A[n - 1, n - 1] = 1.0
    # Robin at R1 and Dirichlet at R2 on vtheta
    A[n] = 0.0
    A[n, n : 2 * n] = grid.D1[0]
    A[n, n] -= 1.0 / params.R1 - params.alpha / params.mu
    A[2 * n - 1] = 0.0
    A[2 * n - 1, 2 * n - 1] = 1.0
    return A


def stokes_solve(f1, f2, params):
    """Solve mu(vector-Laplacian V) - grad p = f with the wall conditions.

    Per-mode direct dense solves; the k = 0 mode decouples (v_r = 0, a Robin/
    Dirichlet BVP for v_theta, and a least-squares radial pressure with the
    r-weighted zero-mean gauge).
    """
    _check_compatible(f1, f2)
    grid, K = f1.grid, f1.K
    n = grid.n
    r = grid.nodes
    vr = field_zeros(K, grid)
    vt = field_zeros(K, grid)
    p = field_zeros(K, grid)
    for k in range(-K, K + 1):
        c1 = f1.co(k)
        c2 = f2.co(k)
        if k == 0:
            mu = params.mu
            L0 = _scalar_laplacian_matrix(grid, 0)
            Att = (mu * (L0 - np.diag(1.0 / r**2))).astype(complex)
            b = c2.astype(complex).copy()
            Att[0] = grid.D1[0]
            Att[0, 0] -= 1.0 / params.R1 - params.alpha / params.mu
            b[0] = 0.0
            Att[-1] = 0.0
            Att[-1, -1] = 1.0
            b[-1] = 0.0
            vt.co(0)[:] = np.linalg.solve(Att, b)
            # radial momentum reduces to D p = -f1; gauge by r-weighted mean
            A = np.vstack([grid.D1, (grid.w * r)[None, :]]).astype(complex)
            rhs = np.concatenate([-c1, [0.0]])
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            p.co(0)[:] = sol
            continue
        A = _stokes_mode_matrix(grid, params, k)
        b = np.zeros(3 * n, dtype=complex)
        b[0:n] = c1
        b[n : 2 * n] = c2
        b[0] = b[n - 1] = b[n] = b[2 * n - 1] = 0.0
        b[2 * n :] = 0.0
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"Stokes mode k={k}: {exc}") from exc
        vr.co(k)[:] = x[0:n]
        vt.co(k)[:] = x[n : 2 * n]
        p.co(k)[:] = x[2 * n :]
    return VelocityField(vr, vt), p


# --- Stokes eigenpairs ------------------------------------------------------


@dataclass
class StokesMode:
    beta: float
    k: int
    e_r: np.ndarray = field(repr=False)
    e_theta: np.ndarray = field(repr=False)


def _stokes_sector_forms(grid, params, space, k):
    """Dissipation and mass forms of the projected Stokes operator, sector k."""
    from .dispersion import basis_derivative_values

    r = grid.nodes
    w = grid.w
    mu = params.mu
    if k == 0:
        E = np.eye(grid.n)[:, :-1]
        amap = np.zeros_like(E)
        bmap = E
        Da = grid.D1 @ amap
        Db = grid.D1 @ bmap
    else:
        vals = basis_derivative_values(space)
        B, DB, A1, A2 = vals["B"], vals["DB"], vals["A1"], vals["A2"]
        rc = r[:, None]
        amap = float(k) * B / rc
        bmap = -DB
        # D(B/r) = DB/r - B/r^2 ; D^2 B = (D^2(rB) - 2 DB)/r
        Da = float(k) * (DB / rc - B / rc**2)
        Db = -(A2 - 2.0 * DB) / rc
    ka_b = float(k) * amap + bmap
    kb_a = float(k) * bmap + amap
    A = mu * (
        (Da.T * (w * r)) @ Da
        + (Db.T * (w * r)) @ Db
        + (ka_b.T * (w / r)) @ ka_b
        + (kb_a.T * (w / r)) @ kb_a
    ) + (mu - params.alpha * params.R1) * np.outer(bmap[0], bmap[0])
    M = (amap.T * (w * r)) @ amap + (bmap.T * (w * r)) @ bmap
    return 0.5 * (A + A.T), 0.5 * (M + M.T), amap, bmap


def stokes_eigenpairs(params, grid, space, m, k_max=None):
    """m smallest eigenvalues/eigenfields of the projected Stokes operator.

    Sector-by-sector symmetric solves on the divergence-free streamfunction
    space; eigenfields are normalized so the r-weighted L2 norm over the
    annulus is 1 and returned as complex radial profiles (e_r, e_theta) of the
    e^{i k theta} mode.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if k_max is None:
        k_max = max(8, m)
    modes = []
    for k in range(0, k_max + 1):
        A, M, amap, bmap = _stokes_sector_forms(grid, params, space, k)
        try:
            vals, vecs = sla.eigh(A, M)
        except sla.LinAlgError as exc:  # pragma: no cover
            raise EigenFailure(f"Stokes sector k={k}: {exc}") from exc
        for j in range(len(vals)):
            a = amap @ vecs[:, j]
            b = bmap @ vecs[:, j]
            norm2 = 2.0 * np.pi * grid.integrate(grid.nodes * (a * a + b * b))
            scale = 1.0 / np.sqrt(norm2)
            i0 = np.argmax(np.abs(a) + np.abs(b))
            if (a + b)[i0] < 0:
                scale = -scale
            modes.append(
                StokesMode(beta=float(vals[j]), k=k, e_r=a * scale + 0j, e_theta=-1j * b * scale)
            )
        sector_min = vals[0]
        kept = sorted(modes, key=lambda s: (s.beta, s.k))[:m]
        if len(kept) == m and sector_min > kept[-1].beta and k >= 1:
            modes = kept
            break
        modes = sorted(modes, key=lambda s: (s.beta, s.k))[: max(m, 4 * m)]
    return sorted(modes, key=lambda s: (s.beta, s.k))[:m]


# --- snapshot container -----------------------------------------------------


def write_snapshot(path, time, vr, vtheta, rho, p):
    """Binary ANNF1 container: magic, header (n, K, time, 4 field tags), then
    per-field complex coefficients row-major by k then r, little-endian."""
    _check_compatible(vr, vtheta, rho, p)
    n = vr.grid.n
    K = vr.K
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IId", n, K, float(time)))
        for tag in _SNAPSHOT_TAGS:
            fh.write(tag.ljust(8, b"\0"))
        for fld in (vr, vtheta, rho, p):
            fh.write(np.ascontiguousarray(fld.coeffs, dtype="<c16").tobytes())


def read_snapshot(path, grid):
    """Read an ANNF1 container written by write_snapshot."""
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        n, K, time = struct.unpack("<IId", fh.read(16))
        if n != grid.n:
            raise GridMismatch(f"snapshot has n={n}, grid has n={grid.n}")
        tags = tuple(fh.read(8).rstrip(b"\0") for _ in range(4))
        if tags != _SNAPSHOT_TAGS:
            raise ValueError(f"unexpected field tags {tags}")
        fields = []
        count = (2 * K + 1) * n
        for _ in range(4):
            raw = np.frombuffer(fh.read(16 * count), dtype="<c16").astype(complex)
            fields.append(PolarField(K, grid, raw.reshape(2 * K + 1, n)))
    return time, fields


def export_physical_csv(path, fields, names, ntheta, fmt="%.17g"):
    """CSV of physical-space samples on the (r, theta) lattice for plotting."""
    grid = fields[0].grid
    phys = [to_physical(f, ntheta) for f in fields]
    thetas = 2.0 * np.pi * np.arange(ntheta) / ntheta
    with open(path, "w") as fh:
        fh.write("r,theta," + ",".join(names) + "\n")
        for j in range(ntheta):
            for i in range(grid.n):
                vals = ",".join(fmt % ph[j, i] for ph in phys)
                fh.write(f"{fmt % grid.nodes[i]},{fmt % thetas[j]},{vals}\n")
