r"""
Diagonal-norm, diagonal-E summation-by-parts operators on periodic 1D meshes.

Reference operators use Legendre-Gauss-Lobatto (LGL) collocation of degree
``p`` on :math:`[-1, 1]`,

.. math::

    D = H^{-1} Q, \qquad Q + Q^T = E = \mathrm{diag}(-1, 0, \dots, 0, 1),

and the global continuous-SBP (C-SBP) operators are assembled by summing
element contributions at shared interface nodes. On a periodic mesh the
boundary parts of :math:`E` cancel pairwise, so the global :math:`Q` is
skew-symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from csbp.errors import (
    InsufficientDataError,
    IterationLimitError,
    MeshTooSmallError,
    UnsupportedDegreeError,
)

MAX_DEGREE = 6


# {{{ reference element


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values of :math:`P_n`, :math:`P_n'` and :math:`P_n''` at *x*."""
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x), np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    pn, pm = p1, p0
    # derivative identities valid on the open interval; endpoints are fixed
    # below and never iterated on
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (pm - x * pn) / (1.0 - x**2)
        ddp = (2.0 * x * dp - n * (n + 1) * pn) / (1.0 - x**2)
    return pn, dp, ddp


def lgl_nodes(p: int, tol: float = 1.0e-14, maxit: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Legendre-Gauss-Lobatto nodes and weights for degree *p* (``p + 1`` points).

    Interior nodes are the roots of :math:`P_p'`, found by Newton iteration
    started from the Chebyshev-Gauss-Lobatto points.
    """
    n = p + 1
    x = -np.cos(np.pi * np.arange(n) / p)
    if p > 1:
        xi = x[1:-1].copy()
        for _ in range(maxit):
            _, dp, ddp = _legendre(p, xi)
            dx = dp / ddp
            xi -= dx
            if np.max(np.abs(dx)) < tol:
                break
        x[1:-1] = xi
    x[0], x[-1] = -1.0, 1.0
    # symmetrize to remove last-bit asymmetry from Newton
    x = 0.5 * (x - x[::-1])

    pn, _, _ = _legendre(p, x)
    w = 2.0 / (p * (p + 1) * pn**2)
    return x, w


def lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    """Differentiation matrix of the Lagrange interpolant through *x* (barycentric form)."""
    n = x.size
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    c = 1.0 / np.prod(diff, axis=1)

    D = (c[None, :] / c[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    # negative-sum trick: exact annihilation of constants
    D[np.diag_indices(n)] = -np.sum(D, axis=1)
    return D


@dataclass(frozen=True)
class ReferenceElement:
    """Degree-*p* LGL collocation SBP operator on :math:`[-1, 1]`.

    .. attribute:: weights

        Diagonal of the reference norm matrix :math:`H`.

    .. attribute:: E

        Diagonal of the boundary matrix; ``-1`` at the first and ``+1`` at
        the last node.
    """

    p: int
    nodes: np.ndarray
    weights: np.ndarray
    Q: np.ndarray
    E: np.ndarray

    @property
    def n_p(self) -> int:
        return self.p + 1

    @property
    def H(self) -> np.ndarray:
        return np.diag(self.weights)

    @property
    def D(self) -> np.ndarray:
        return self.Q / self.weights[:, None]


def build_reference_element(p: int) -> ReferenceElement:
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree must be in [1, {MAX_DEGREE}]: got {p!r}")
    p = int(p)

    x, w = lgl_nodes(p)
    D = lagrange_derivative_matrix(x)
    Q = w[:, None] * D

    E = np.zeros(p + 1)
    E[0], E[-1] = -1.0, 1.0

    # Q = S + E / 2 with S exactly skew
    S = 0.5 * (Q - Q.T)
    Q = S + 0.5 * np.diag(E)

    for a in (x, w, Q, E):
        a.setflags(write=False)

    return ReferenceElement(p=p, nodes=x, weights=w, Q=Q, E=E)


# }}}


# {{{ mesh and global operators


@dataclass(frozen=True)
class PeriodicMesh:
    """Uniform periodic mesh of ``n_e`` elements with shared interface nodes."""

    x_left: float
    x_right: float
    n_e: int
    p: int

    def __post_init__(self) -> None:
        if not self.x_left < self.x_right:
            raise ValueError("x_left must be smaller than x_right")
        if self.n_e < 2:
            raise MeshTooSmallError(f"periodic C-SBP assembly needs n_e >= 2: got {self.n_e}")

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def h(self) -> float:
        return self.length / self.n_e

    @property
    def n_p(self) -> int:
        return self.p + 1

    @property
    def n_nodes(self) -> int:
        return self.n_e * self.p

    @property
    def element_to_global(self) -> np.ndarray:
        """``(n_e, n_p)`` map from element-local to global node indices."""
        k = np.arange(self.n_e)[:, None]
        j = np.arange(self.n_p)[None, :]
        return (k * self.p + j) % self.n_nodes

    def element_nodes(self, ref: ReferenceElement) -> np.ndarray:
        """Physical coordinates ``(n_e, n_p)`` of every element node."""
        left = self.x_left + self.h * np.arange(self.n_e)
        return left[:, None] + 0.5 * self.h * (ref.nodes[None, :] + 1.0)

    def global_nodes(self, ref: ReferenceElement) -> np.ndarray:
        """Physical coordinates of the global nodes in ``[x_left, x_right)``."""
        x = np.empty(self.n_nodes)
        x[self.element_to_global] = self.element_nodes(ref)
        # the periodic seam node is stored at x_left
        x[0] = self.x_left
        return x


@dataclass(frozen=True)
class GlobalOperator:
    """Assembled periodic C-SBP operators.

    .. attribute:: H

        Diagonal of the global norm matrix (accumulated element weights).

    .. attribute:: Q

        Global :class:`scipy.sparse.csr_matrix`, skew-symmetric.

    .. attribute:: w_min
    .. attribute:: w_max

        Extreme *element* quadrature weights (not the accumulated global
        diagonal); these are the quantities the error bounds are built on.
    """

    mesh: PeriodicMesh
    ref: ReferenceElement
    H: np.ndarray
    Q: sp.csr_matrix
    D: sp.csr_matrix
    element_H: np.ndarray = field(repr=False)
    element_Q: np.ndarray = field(repr=False)
    q_star: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_nodes

    @property
    def x(self) -> np.ndarray:
        return self.mesh.global_nodes(self.ref)

    @property
    def element_to_global(self) -> np.ndarray:
        return self.mesh.element_to_global

    @property
    def element_D(self) -> np.ndarray:
        return self.element_Q / self.element_H[:, :, None]

    @property
    def w_min(self) -> float:
        return float(np.min(self.element_H))

    @property
    def w_max(self) -> float:
        return float(np.max(self.element_H))

    @property
    def domain_length(self) -> float:
        return self.mesh.length

    def apply_D(self, v: np.ndarray) -> np.ndarray:
        """Apply the global derivative to a ``(n_nodes,)`` or ``(n_nodes, n_c)`` array."""
        return self.D @ v

    def apply_Q(self, v: np.ndarray) -> np.ndarray:
        return self.Q @ v


def assemble_global(mesh: PeriodicMesh, ref: ReferenceElement) -> GlobalOperator:
    if mesh.n_e < 2:
        raise MeshTooSmallError(f"periodic C-SBP assembly needs n_e >= 2: got {mesh.n_e}")
    if mesh.p != ref.p:
        raise ValueError(f"mesh degree {mesh.p} does not match reference degree {ref.p}")

    n = mesh.n_nodes
    jac = 0.5 * mesh.h
    e2g = mesh.element_to_global

    # affine map: H_k = (h/2) H_ref, Q_k = Q_ref (the Jacobian cancels)
    element_H = np.tile(jac * ref.weights, (mesh.n_e, 1))
    element_Q = np.tile(ref.Q, (mesh.n_e, 1, 1))

    # accumulate element-ascending, index-ascending for reproducibility
    H = np.zeros(n)
    Q = np.zeros((n, n))
    for k in range(mesh.n_e):
        idx = e2g[k]
        for i in range(ref.n_p):
            H[idx[i]] += element_H[k, i]
            for j in range(ref.n_p):
                Q[idx[i], idx[j]] += element_Q[k, i, j]

    Qs = sp.csr_matrix(Q)
    Ds = sp.csr_matrix(Q / H[:, None])

    for a in (H, element_H, element_Q):
        a.setflags(write=False)

    # identical element matrices share one norm evaluation
    q_star = max(two_norm(Qk) for Qk in np.unique(element_Q, axis=0))
    return GlobalOperator(
        mesh=mesh, ref=ref, H=H, Q=Qs, D=Ds,
        element_H=element_H, element_Q=element_Q, q_star=q_star,
    )


def build_operator(p: int, n_e: int, x_left: float = 0.0, x_right: float = 1.0) -> GlobalOperator:
    """Convenience wrapper: reference element, mesh, and assembly in one call."""
    ref = build_reference_element(p)
    return assemble_global(PeriodicMesh(x_left, x_right, n_e, p), ref)


# }}}


# {{{ norms and scaling


def two_norm(
    matrix: np.ndarray, rtol: float = 1.0e-10, maxit: int = 10_000, block: int = 3
) -> float:
    """Spectral norm by block power iteration on :math:`M^T M`.

    A small block with a Rayleigh-Ritz step keeps convergence fast when the
    two leading singular values are close. Iteration stops once the top Ritz
    pair satisfies ``|M^T M v - lambda v| <= rtol * lambda``.
    """
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix: got shape {M.shape}")

    # scale first so that M^T M neither underflows nor overflows
    scale = float(np.max(np.abs(M)))
    if scale == 0.0:
        return 0.0
    Ms = M / scale
    Bs = Ms.T @ Ms

    n = M.shape[1]
    # fixed start block keeps the result reproducible
    V, _ = np.linalg.qr(np.random.default_rng(12345).standard_normal((n, min(block, n))))

    lam = 0.0
    for _ in range(maxit):
        W = Bs @ V
        theta, Y = np.linalg.eigh(V.T @ W)
        lam = float(theta[-1])
        residual = np.linalg.norm(W @ Y[:, -1] - lam * (V @ Y[:, -1]))
        if lam > 0.0 and residual <= rtol * lam:
            return float(np.sqrt(lam) * scale)
        V, _ = np.linalg.qr(W)

    raise IterationLimitError(
        f"power iteration did not converge in {maxit} iterations",
        last_iterate=float(np.sqrt(max(lam, 0.0)) * scale),
    )


@dataclass(frozen=True)
class ScalingStudy:
    h: np.ndarray
    norm_H: np.ndarray
    norm_Q: np.ndarray
    norm_D: np.ndarray
    slope_H: float
    slope_Q: float
    slope_D: float


def loglog_slope(h, values) -> float:
    h = np.asarray(h, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])


def operator_scaling_study(p: int, n_e_list) -> ScalingStudy:
    """Fit the log-log slopes of the element norms of ``H_k``, ``Q_k`` and ``D_k``."""
    n_e_list = list(n_e_list)
    if len(n_e_list) < 3:
        raise InsufficientDataError(f"need at least 3 mesh levels: got {len(n_e_list)}")

    ref = build_reference_element(p)
    hs, nh, nq, nd = [], [], [], []
    for n_e in n_e_list:
        gop = assemble_global(PeriodicMesh(0.0, 1.0, n_e, p), ref)
        hs.append(gop.mesh.h)
        nh.append(max(two_norm(np.diag(Hk)) for Hk in gop.element_H))
        nq.append(gop.q_star)
        nd.append(max(two_norm(Dk) for Dk in gop.element_D))

    hs, nh, nq, nd = map(np.array, (hs, nh, nq, nd))
    return ScalingStudy(
        h=hs, norm_H=nh, norm_Q=nq, norm_D=nd,
        slope_H=loglog_slope(hs, nh),
        slope_Q=loglog_slope(hs, nq),
        slope_D=loglog_slope(hs, nd),
    )


# }}}


def sbp_residual(ref: ReferenceElement) -> float:
    """``max|Q + Q^T - E|`` relative to ``max|Q|``."""
    res = ref.Q + ref.Q.T - np.diag(ref.E)
    return float(np.max(np.abs(res)) / np.max(np.abs(ref.Q)))


def skew_residual(gop: GlobalOperator) -> float:
    """``max|Q + Q^T|`` of the assembled periodic operator."""
    S = gop.Q + gop.Q.T
    return float(abs(S).max()) if S.nnz else 0.0


def reference_to_dict(ref: ReferenceElement) -> dict:
    """Row-major dense JSON-friendly dump of a reference operator."""
    return {
        "p": ref.p,
        "nodes": ref.nodes.tolist(),
        "H": ref.weights.tolist(),
        "Q": ref.Q.tolist(),
        "E": ref.E.tolist(),
        "D": ref.D.tolist(),
    }
