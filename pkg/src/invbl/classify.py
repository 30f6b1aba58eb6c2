"""Degeneracy case analysis and the constructive kernel decomposition."""
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .problem import Decomposition, Problem, ValidationError, b_plus, validate

LABELS = {
    "Case00": "Case 0.0",
    "Case01": "Case 0.1",
    "Case100": "Case 1.0.0",
    "Case101": "Case 1.0.1",
    "Case11": "Case 1.1",
}

CONSEQUENCES = {
    "Case00": {"min_J": "zero", "inf_G": "plus-infinity", "inf_CG": "plus-infinity"},
    "Case01": {"inf_J": "plus-infinity", "inf_G": "plus-infinity", "inf_CG": "plus-infinity"},
    "Case100": {"min_J": "zero", "inf_CG": "zero"},
    "Case101": {"inf_G": "zero", "inf_CG": "interval"},
    "Case11": {"inf_J": "equals-infCG", "inf_CG": "positive-unknown"},
}

STATEMENTS = {
    "Case00": ["min J = 0", "inf_G J = +inf", "inf_CG J = +inf"],
    "Case01": ["inf J = +inf"],
    "Case100": ["min J = 0", "inf_CG J = 0"],
    "Case101": ["inf_G J = 0", "inf_CG J in [0, +inf)"],
    "Case11": ["inf J = inf_CG J < +inf"],
}


class DecompositionRefused(ValueError):
    def __init__(self, classification):
        self.classification = classification
        super().__init__(
            f"kernel decomposition needs case Case11, got {classification.case} "
            f"(facts: {classification.facts})")


@dataclass
class Classification:
    case: str
    facts: dict
    consequences: dict = field(default_factory=dict)
    s_plus: int = 0

    @property
    def label(self):
        return LABELS[self.case]

    @property
    def statements(self):
        return STATEMENTS[self.case]


def _ker_bplus(p: Problem) -> la.Subspace:
    Bp = b_plus(p)
    if Bp.shape[0] == 0:
        return la.full_space(p.dim, exact=p.exact)
    return la.kernel(Bp)


def classify(p: Problem) -> Classification:
    p = validate(p)
    H0 = _ker_bplus(p)
    pd = la.is_pd_on_subspace(p.kernel, H0)
    onto = la.rank(b_plus(p)) == sum(p.dims[: p.m_plus])
    s_plus = la.signature(p.Q)[0]
    dim_ok = p.dim >= s_plus + sum(p.dims[: p.m_plus])
    if not pd:
        case = "Case01" if onto else "Case00"
    elif dim_ok:
        case = "Case11"
    else:
        case = "Case101" if onto else "Case100"
    facts = {"pd_on_ker_bplus": bool(pd), "dim_condition": bool(dim_ok), "bplus_onto": bool(onto)}
    return Classification(case, facts, dict(CONSEQUENCES[case]), s_plus)


def decompose(p: Problem) -> Decomposition:
    """Split Q through H0 = ker B+ and its Q-orthogonal complement."""
    p = validate(p)
    cl = classify(p)
    if cl.case != "Case11":
        raise DecompositionRefused(cl)
    n = p.dim
    Q = p.Q
    Bp = b_plus(p, exact=False)
    U0 = la.null_space(Bp) if Bp.shape[0] else np.eye(n)
    s = U0.shape[1]
    if s:
        Qp = U0.T @ Q @ U0
        Qp = (Qp + Qp.T) / 2
        B0 = np.linalg.solve(Qp, U0.T @ Q)
        P = U0 @ B0
        K = la.null_space((Q @ U0).T)
    else:
        Qp = np.zeros((0, 0))
        B0 = np.zeros((0, n))
        P = np.zeros((n, n))
        K = np.eye(n)
    rad = la.null_space(Q)
    if rad.shape[1]:
        # complement of rad Q inside H0^{perp Q}
        W = la.null_space(np.vstack([rad.T, la.null_space(K.T).T]))
    else:
        W = K
    Bm1 = W.T @ (np.eye(n) - P)
    Qm = -(W.T @ Q @ W)
    Qm = (Qm + Qm.T) / 2
    return Decomposition(B0, Bm1, Qp, Qm)


def eigen_decomposition(Q) -> Decomposition:
    """Spectral split of Q, usable in every case (no relation to the maps)."""
    Q = la.float_array(Q)
    w, V = np.linalg.eigh((Q + Q.T) / 2)
    pos, neg = w > la.TOL_PD, w < -la.TOL_PD
    return Decomposition(V[:, pos].T, V[:, neg].T, np.diag(w[pos]), np.diag(-w[neg]))


def split_kernels(p: Problem):
    """Kernels of B_0 and B_{m+1} computed intrinsically (exact when the datum is rational).

    ker B_0 = (ker B+)^{perp Q} and ker B_{m+1} = rad Q + ker B+.
    """
    p = validate(p)
    H0 = _ker_bplus(p)
    ker0 = la.q_orthogonal_complement(p.kernel, H0)
    kerm1 = la.subspace_sum(la.radical(p.kernel), H0)
    return H0, ker0, kerm1
