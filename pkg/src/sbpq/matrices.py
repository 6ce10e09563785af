"""Structural matrices behind the heavy-traffic constants.

Everything here works in canonical (low-first) class order.  The chain is

    B -> A = (I - P^T) diag(mu) (I - B) -> blocks -> Q -> R = I - Q^T
      -> w columns -> direction vectors u^(k),

with R required to be a P-matrix (all principal minors positive) and the
high-priority block A_H required to be invertible.  Each derived object is
cross-checked against an independent algebraic identity so a wiring mistake
surfaces as an InternalConsistencyError instead of a silently wrong number.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (DimensionTooLarge, InternalConsistencyError,
                     SingularHighBlock)
from .network import CanonicalView, CanonicalIndexing, PIVOT_TOL

MINOR_GUARD_DEFAULT = 20
W_IDENTITY_TOL = 1e-10
U_CROSSCHECK_RTOL = 1e-8


@dataclass(frozen=True)
class PMatrixVerdict:
    """Outcome of the exhaustive principal-minor check.

    status is "yes", "no", or "indeterminate"; witness names the first
    (lexicographically smallest) offending index set for the latter two.
    Minors inside (-tol, tol] are never silently passed.
    """

    status: str
    witness: tuple[int, ...] | None = None
    witness_minor: float | None = None

    def __bool__(self):
        return self.status == "yes"


@dataclass
class MatrixDiagnostics:
    a_h_condition: float
    p_matrix: PMatrixVerdict
    one_minus_wkk: np.ndarray | None


@dataclass
class MatrixBundle:
    """All structural matrices for one (network, policy) pair."""

    B: np.ndarray
    A: np.ndarray
    A_L: np.ndarray
    A_H: np.ndarray
    A_LH: np.ndarray
    A_HL: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    w: np.ndarray | None
    u: np.ndarray | None          # rows: u^(k) for canonical low class k
    diagnostics: MatrixDiagnostics

    def to_jsonable(self) -> dict:
        """Nested-list dump matching the documented `analyze` output schema."""
        d = self.diagnostics
        return {
            "A": self.A.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "w": self.w.tolist() if self.w is not None else None,
            "u": self.u.tolist() if self.u is not None else None,
            "diagnostics": {
                "a_h_condition": d.a_h_condition,
                "p_matrix": d.p_matrix.status,
                "p_matrix_witness": list(d.p_matrix.witness) if d.p_matrix.witness else None,
                "one_minus_wkk": d.one_minus_wkk.tolist() if d.one_minus_wkk is not None else None,
            },
        }


def build_B(indexing: CanonicalIndexing) -> np.ndarray:
    """Successor indicator: B[k, k+] = 1, zero rows for station-top classes."""
    K = indexing.num_classes
    B = np.zeros((K, K))
    for k in range(K):
        if indexing.succ[k] >= 0:
            B[k, indexing.succ[k]] = 1.0
    return B


def build_A_and_blocks(view: CanonicalView, B: np.ndarray):
    """Assemble A = (I - P^T) diag(mu) (I - B) and split it by low/high.

    Raises SingularHighBlock when the high-priority block is not invertible
    (smallest LU pivot below tolerance); its condition estimate is returned
    for diagnostics either way.
    """
    K = view.num_classes
    J = view.num_low
    A = (np.eye(K) - view.P.T) @ np.diag(view.mu) @ (np.eye(K) - B)
    A_L = A[:J, :J]
    A_H = A[J:, J:]
    A_LH = A[:J, J:]
    A_HL = A[J:, :J]
    if A_H.size:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, _ = scipy.linalg.lu_factor(A_H, check_finite=False)
        cond = float(np.linalg.cond(A_H, 1))
        if np.abs(np.diag(lu)).min() <= PIVOT_TOL:
            raise SingularHighBlock(
                f"high-priority block is singular (condition ~ {cond:.3e})")
    else:
        cond = 1.0
    return A, A_L, A_H, A_LH, A_HL, cond


def build_Q_R(view: CanonicalView, A_H: np.ndarray,
              A_LH: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Q = P_L - P_LH A_H^{-T} A_LH^T and the reflection matrix R = I - Q^T.

    With no high-priority classes this degenerates to Q = P_L, recovering the
    single-class (generalized Jackson) reflection matrix.
    """
    J = view.num_low
    P_L = view.P[:J, :J]
    if A_H.size:
        P_LH = view.P[:J, J:]
        Q = P_L - P_LH @ np.linalg.solve(A_H.T, A_LH.T)
    else:
        Q = P_L.copy()
    return Q, np.eye(J) - Q.T


def _lex_subsets(n: int):
    """All nonempty subsets of range(n) in lexicographic tuple order."""
    stack = [(i,) for i in range(n - 1, -1, -1)]
    while stack:
        s = stack.pop()
        yield s
        for nxt in range(n - 1, s[-1], -1):
            stack.append(s + (nxt,))


def check_P_matrix(R: np.ndarray, guard: int = MINOR_GUARD_DEFAULT) -> PMatrixVerdict:
    """Exhaustively test positivity of every principal minor of R.

    A minor counts as positive only above 1e-12 times the product of the row
    norms of its submatrix (a Hadamard-style scale); minors inside the noise
    band give an "indeterminate" verdict rather than a silent pass.  The
    witness is the lexicographically smallest offending index set.
    """
    n = R.shape[0]
    if n > guard:
        raise DimensionTooLarge(
            f"{n} stations would need 2^{n}-1 principal minors; guard is {guard}")
    first_indet: tuple[tuple[int, ...], float] | None = None
    for s in _lex_subsets(n):
        sub = R[np.ix_(s, s)]
        minor = float(np.linalg.det(sub))
        tol = 1e-12 * float(np.prod(np.linalg.norm(sub, axis=1))) if len(s) > 1 \
            else 1e-12 * max(abs(sub[0, 0]), 1.0)
        if minor <= -tol:
            return PMatrixVerdict("no", s, minor)
        if minor <= tol and first_indet is None:
            first_indet = (s, minor)
    if first_indet is not None:
        return PMatrixVerdict("indeterminate", first_indet[0], first_indet[1])
    return PMatrixVerdict("yes")


def build_w(Q: np.ndarray, check: bool = True) -> np.ndarray:
    """Column-by-column elimination weights over the low classes.

    Column k solves the leading (k-1)-block system and extends it downward;
    the result satisfies w[i,k] = Q[i,k] + sum_{l<k} Q[i,l] w[l,k] for all i,
    which is verified to 1e-10 (an independent fixed-point identity).
    """
    J = Q.shape[0]
    w = np.zeros((J, J))
    for k in range(J):
        if k:
            lead = np.linalg.solve(np.eye(k) - Q[:k, :k], Q[:k, k])
            w[:k, k] = lead
            w[k:, k] = Q[k:, k] + Q[k:, :k] @ lead
        else:
            w[:, 0] = Q[:, 0]
    if check and J:
        # fixed point per column: w[:, k] = Q[:, k] + Q[:, :k] @ w[:k, k]
        resid = max(
            float(np.abs(w[:, k] - Q[:, k] - Q[:, :k] @ w[:k, k]).max())
            for k in range(J))
        scale = max(1.0, float(np.abs(Q).max()))
        if resid > W_IDENTITY_TOL * scale:
            raise InternalConsistencyError(
                f"elimination-weight fixed point residual {resid:.3e}")
    return w


def build_u(view: CanonicalView, A_H: np.ndarray, A_LH: np.ndarray,
            Q: np.ndarray, w: np.ndarray, k: int,
            check: bool = True) -> np.ndarray:
    """Direction vector u^(k): (w[0:k,k], 1, 0...) on low classes, completed
    on high classes by -A_H^{-T} A_LH^T u_L.

    Cross-validated against the routing-side expression
    (I-P)^{-1} M C^T diag(mu_L) (I-Q) u_L; disagreement indicates a bug in
    the matrix assembly, not bad user input.
    """
    J = view.num_low
    K = view.num_classes
    uL = np.zeros(J)
    uL[:k] = w[:k, k]
    uL[k] = 1.0
    if A_H.size:
        uH = -np.linalg.solve(A_H.T, A_LH.T @ uL)
    else:
        uH = np.zeros(0)
    u = np.concatenate([uL, uH])
    if check:
        C = view.constituency
        rhs = np.diag(view.mean) @ C.T @ np.diag(view.mu[:J]) @ (np.eye(J) - Q) @ uL
        alt = np.linalg.solve(np.eye(K) - view.P, rhs)
        scale = max(1.0, float(np.abs(u).max()))
        if np.abs(alt - u).max() > U_CROSSCHECK_RTOL * scale:
            raise InternalConsistencyError(
                f"direction vector mismatch between primary and routing-side "
                f"formulas for k={k}: {np.abs(alt - u).max():.3e}")
    return u


def station_identity_residual(view: CanonicalView, u: np.ndarray) -> float:
    """Residual of the per-station collapse identity of a direction vector.

    (u_l - (P u)_l) mu_l must equal the same expression evaluated at the
    lowest-priority class of s(l), for every class l.
    """
    lhs = (u - view.P @ u) * view.mu
    low_of_station = lhs[view.station_of]   # station j's low class is canonical j
    return float(np.abs(lhs - low_of_station).max())


def reflection_equivalents(view: CanonicalView, bundle: "MatrixBundle"):
    """Alternative reflection matrices and their equivalence residuals.

    R_tilde = A_L - A_LH A_H^{-1} A_HL must equal R diag(mu_L), and
    R_bar = (I + G)^{-1} must equal diag(m_L) R_tilde, where
    G = C M (I-P^T)^{-1} P^T [diag(mu_L); 0].  All three therefore share the
    P-matrix property.  Returns (R_tilde, R_bar, resid_tilde, resid_bar).
    """
    J = view.num_low
    K = view.num_classes
    if bundle.A_H.size:
        R_tilde = bundle.A_L - bundle.A_LH @ np.linalg.solve(bundle.A_H, bundle.A_HL)
    else:
        R_tilde = bundle.A_L.copy()
    top = np.zeros((K, J))
    top[:J, :J] = np.diag(view.mu[:J])
    C = view.constituency
    G = C @ np.diag(view.mean) @ np.linalg.solve(np.eye(K) - view.P.T, view.P.T @ top)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(np.eye(J) + G, check_finite=False)
    if np.abs(np.diag(lu)).min() <= PIVOT_TOL:
        raise SingularHighBlock("I + G is singular; legacy reflection matrix undefined")
    R_bar = scipy.linalg.lu_solve((lu, piv), np.eye(J))
    resid_tilde = float(np.abs(R_tilde - bundle.R @ np.diag(view.mu[:J])).max())
    resid_bar = float(np.abs(R_bar - np.diag(view.mean[:J]) @ R_tilde).max())
    return R_tilde, R_bar, resid_tilde, resid_bar


def build_bundle(view: CanonicalView, guard: int = MINOR_GUARD_DEFAULT,
                 check: bool = True) -> MatrixBundle:
    """Run the full matrix chain for one policy.

    Raises SingularHighBlock if A_H is singular.  A failed P-matrix verdict
    is recorded in the diagnostics (w and u are still built when the leading
    blocks happen to be invertible); consumers that need the heavy-traffic
    constants must refuse a bundle whose verdict is not "yes".
    """
    B = build_B(view.indexing)
    A, A_L, A_H, A_LH, A_HL, cond = build_A_and_blocks(view, B)
    Q, R = build_Q_R(view, A_H, A_LH)
    verdict = check_P_matrix(R, guard=guard)
    w = None
    u = None
    try:
        w = build_w(Q, check=check)
        u = np.stack([build_u(view, A_H, A_LH, Q, w, k, check=check)
                      for k in range(view.num_low)])
    except np.linalg.LinAlgError:
        if verdict.status == "yes":   # pragma: no cover - theory forbids this
            raise InternalConsistencyError(
                "leading block singular although R passed the P-matrix check")
    one_minus = 1.0 - np.diag(w) if w is not None else None
    return MatrixBundle(B=B, A=A, A_L=A_L, A_H=A_H, A_LH=A_LH, A_HL=A_HL,
                        Q=Q, R=R, w=w, u=u,
                        diagnostics=MatrixDiagnostics(cond, verdict, one_minus))
