"""Optimal measurements for discriminating pure states.

Minimum-error discrimination works in the span of the weighted states.  The
fast path solves the stationarity condition of a weighted square-root
measurement by Newton's method in the log-weights; when that measurement
satisfies the optimality conditions it is globally optimal.  If it cannot be
certified (a state with vanishing weight, rank deficiency, stagnation) the
problem is handed to a primal-dual interior-point method.

Every returned result carries a certificate.  With ``Gamma = sum_i P_i rho_i``
(priors folded into ``rho_i``), the residual is

    ||Gamma - Gamma^dag||_F + max_i max(0, -lambda_min(Herm(Gamma) - rho_i)),

and ``Herm(Gamma) + v I`` (``v`` the eigenvalue violation) is dual feasible,
so the reported error is within ``dim * v`` of the optimum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._interior_point import solve_measurement_sdp
from .errors import InfeasibleError
from .qstate import Ensemble, SensorUnitary, StateVector, final_state_matrix, final_states

DEFAULT_TOL = 1e-8
MAX_ITER = 10_000
POVM_TOL = 1e-8
UNAMBIGUOUS_CROSS_TOL = 1e-7
# Span directions of K below this fraction of its largest eigenvalue are
# discarded; their total weight is added to the reported duality gap.
RANK_TOL = 1e-10


# ---------------------------------------------------------------- containers


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators summing to the identity."""

    dim: int
    elements: tuple

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for k, e in enumerate(elems):
            if e.shape != (self.dim, self.dim):
                raise ValueError(f"element {k} has shape {e.shape}, expected {(self.dim, self.dim)}")
            if np.max(np.abs(e - e.conj().T)) > POVM_TOL:
                raise ValueError(f"element {k} is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -POVM_TOL:
                raise ValueError(f"element {k} is not positive semidefinite")
            total += e
        if np.max(np.abs(total - np.eye(self.dim))) > POVM_TOL:
            raise ValueError("elements do not sum to the identity")
        object.__setattr__(self, "elements", elems)

    def __len__(self):
        return len(self.elements)

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        """Outcome probabilities for a pure state given as an amplitude array."""
        return np.array([np.vdot(state, e @ state).real for e in self.elements])


@dataclass(eq=False)
class DiscriminationResult:
    """Optimal minimum-error measurement and its certificate.

    The POVM lives on the full state space and is assembled on first access,
    which is cheap to skip when only the error probability is needed.
    """

    p_error: float
    certificate_residual: float
    duality_gap: float
    iterations: int
    converged: bool
    backend: str
    residual_trace: list = field(default_factory=list)
    _reduced: list = field(default=None, repr=False)
    _frame: np.ndarray = field(default=None, repr=False)
    _gram: np.ndarray = field(default=None, repr=False)

    @cached_property
    def povm(self) -> Povm:
        q = self._frame
        dim = q.shape[0]
        elements = [q @ p @ q.conj().T for p in self._reduced]
        elements[0] = elements[0] + (np.eye(dim) - q @ q.conj().T)
        return Povm(dim, tuple(elements))

    @property
    def reduced_povm(self) -> list:
        """Elements restricted to the span of the states."""
        return list(self._reduced)

    def to_debug_json(self, include_povm: bool = True) -> str:
        def cmat(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

        doc = {
            "p_error": self.p_error,
            "certificate_residual": self.certificate_residual,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "backend": self.backend,
            "residual_trace": [float(r) for r in self.residual_trace],
            "gram": cmat(self._gram) if self._gram is not None else None,
        }
        if include_povm:
            doc["povm"] = [cmat(e) for e in self.povm.elements]
        return json.dumps(doc)


@dataclass(eq=False)
class UnambiguousResult:
    """Unambiguous measurement; the last POVM element is the inconclusive outcome."""

    p_failure: float
    success_weights: np.ndarray
    duality_gap: float
    iterations: int
    converged: bool
    _states: np.ndarray = field(default=None, repr=False)
    _gram: np.ndarray = field(default=None, repr=False)

    @cached_property
    def povm(self) -> Povm:
        phi = self._states
        dim = phi.shape[0]
        recip = phi @ np.linalg.inv(self._gram)
        elements = [a * np.outer(recip[:, i], recip[:, i].conj()) for i, a in enumerate(self.success_weights)]
        inconclusive = np.eye(dim) - sum(elements)
        return Povm(dim, tuple(elements) + (0.5 * (inconclusive + inconclusive.conj().T),))

    def max_cross_probability(self) -> float:
        """Largest ``Tr(P_i |phi_j><phi_j|)`` over conclusive ``i != j``."""
        worst = 0.0
        for i, e in enumerate(self.povm.elements[:-1]):
            for j in range(self._states.shape[1]):
                if i != j:
                    worst = max(worst, np.vdot(self._states[:, j], e @ self._states[:, j]).real)
        return worst


# -------------------------------------------------------------- Gram helpers


def gram_matrix(ensemble: Ensemble) -> np.ndarray:
    """``G[i, j] = <phi_i|phi_j>``."""
    m = ensemble.matrix()
    return m.conj().T @ m


def _weighted_gram(gram: np.ndarray, priors: np.ndarray) -> np.ndarray:
    s = np.sqrt(priors)
    return s[:, None] * gram * s[None, :]


def _span_frame(k: np.ndarray):
    """Eigen-decomposition of ``K = A^dag A`` restricted to its range.

    Returns ``(A, V, lam, dropped)`` with ``A = sqrt(lam) V^dag`` of shape
    ``(d, n)`` and ``dropped`` the total discarded eigenvalue mass.
    """
    lam, vec = np.linalg.eigh(k)
    keep = lam > RANK_TOL * max(lam[-1], 1e-300)
    dropped = float(np.sum(np.clip(lam[~keep], 0.0, None)))
    lam, vec = lam[keep], vec[:, keep]
    return np.sqrt(lam)[:, None] * vec.conj().T, vec, lam, dropped


def _certificate(povm_reduced, a: np.ndarray):
    """Residual, duality-gap bound and success probability of a reduced POVM."""
    d, n = a.shape
    gamma = sum(p @ np.outer(a[:, i], a[:, i].conj()) for i, p in enumerate(povm_reduced))
    herm = np.linalg.norm(gamma - gamma.conj().T)
    h = 0.5 * (gamma + gamma.conj().T)
    violation = 0.0
    for i in range(n):
        violation = max(violation, -np.linalg.eigvalsh(h - np.outer(a[:, i], a[:, i].conj()))[0])
    success = float(np.trace(gamma).real)
    return herm + violation, d * violation, success


def _purify(elements):
    """Project onto PSD matrices and renormalize so they sum to the identity exactly."""
    fixed = []
    for p in elements:
        lam, vec = np.linalg.eigh(0.5 * (p + p.conj().T))
        fixed.append((vec * np.clip(lam, 0.0, None)) @ vec.conj().T)
    lam, vec = np.linalg.eigh(sum(fixed))
    root = (vec / np.sqrt(lam)) @ vec.conj().T
    out = [root @ p @ root for p in fixed]
    return [0.5 * (p + p.conj().T) for p in out]


# ------------------------------------------------------ fixed-point fast path


def _srm_eval(k: np.ndarray, logw: np.ndarray):
    w = np.exp(logw)
    sw = np.sqrt(w)
    lam, vec = np.linalg.eigh(sw[:, None] * k * sw[None, :])
    lam = np.clip(lam, 0.0, None)
    root = np.sqrt(lam)
    s = (vec * root) @ vec.conj().T
    diag = s.diagonal().real
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.log(diag) - logw
    g = h - h.mean()
    return w, lam, vec, root, s, diag, g


def _srm_jacobian(lam, vec, root, diag):
    """Derivative of the centred stationarity residual with respect to the log-weights.

    Uses the divided difference of the matrix square root,
    ``d sqrt(M) = V [ (V^dag dM V) * Omega ] V^dag``, with
    ``Omega_ab = (lam_a + lam_b) / (2 (sqrt(lam_a) + sqrt(lam_b)))`` for a
    perturbation ``dM = (E M + M E) / 2`` in the log-weight direction.
    """
    n = lam.shape[0]
    omega = 0.5 * (lam[:, None] + lam[None, :]) / (root[:, None] + root[None, :])
    z = vec[:, None, :] * vec.conj()[None, :, :]
    ds = np.einsum("kja,ab,kjb->kj", z, omega, z.conj()).real
    jac = ds / diag[:, None] - np.eye(n)
    return jac - jac.mean(axis=0, keepdims=True)


def _srm_certificate(s: np.ndarray, w: np.ndarray):
    """Certificate of the weighted SRM, written in the basis of its measurement vectors."""
    n = w.shape[0]
    diag = s.diagonal().real
    gamma = (diag / w)[:, None] * s
    herm = np.linalg.norm(gamma - gamma.conj().T)
    h = 0.5 * (gamma + gamma.conj().T)
    violation = 0.0
    for i in range(n):
        b = s[:, i] / np.sqrt(w[i])
        violation = max(violation, -np.linalg.eigvalsh(h - np.outer(b, b.conj()))[0])
    return herm + violation, n * violation, float(np.sum(diag**2 / w))


def _newton_srm(k: np.ndarray, tol: float, max_iter: int):
    """Returns ``(logw, iterations, residual_trace, certified)``."""
    n = k.shape[0]
    logw = np.zeros(n)
    state = _srm_eval(k, logw)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        w, lam, vec, root, s, diag, g = state
        if not np.all(np.isfinite(g)) or lam[0] <= 0.0:
            return logw, it, trace, False
        residual, gap, _ = _srm_certificate(s, w)
        trace.append(residual)
        if residual <= 0.01 * tol and gap <= 0.01 * tol:
            return logw, it, trace, True
        if np.max(np.abs(g)) < 1e-14:
            return logw, it, trace, residual <= tol and gap <= tol
        jac = _srm_jacobian(lam, vec, root, diag)
        system = np.vstack([jac, np.ones((1, n))])
        rhs = np.concatenate([-g, [-logw.sum()]])
        step = np.linalg.lstsq(system, rhs, rcond=None)[0]
        biggest = np.max(np.abs(step))
        if biggest > 2.0:
            step *= 2.0 / biggest
        f0 = g @ g
        alpha = 1.0
        while alpha > 1e-6:
            trial = _srm_eval(k, logw + alpha * step)
            if np.all(np.isfinite(trial[-1])) and trial[-1] @ trial[-1] < f0:
                break
            alpha *= 0.5
        else:
            return logw, it, trace, False
        logw = logw + alpha * step
        state = trial
    return logw, it, trace, False


def _srm_povm_reduced(a: np.ndarray, logw: np.ndarray):
    """Rank-one measurement vectors ``B M^{-1/2}`` in the span coordinates."""
    sw = np.sqrt(np.exp(logw))
    b = a * sw[None, :]
    lam, vec = np.linalg.eigh(b.conj().T @ b)
    mu = b @ ((vec / np.sqrt(lam)) @ vec.conj().T)
    return [np.outer(mu[:, i], mu[:, i].conj()) for i in range(a.shape[1])]


# ----------------------------------------------------------------- public API


def _min_error_core(gram: np.ndarray, priors: np.ndarray, tol: float, max_iter: int):
    """Solve on the Gram matrix; returns the result without a full-space frame."""
    k = _weighted_gram(gram, priors)
    a, vec, lam, dropped = _span_frame(k)
    d, n = a.shape

    if d == n and np.all(priors > 0):
        logw, it, trace, ok = _newton_srm(k, tol, max_iter)
        if ok:
            reduced = _purify(_srm_povm_reduced(a, logw))
            residual, gap, success = _certificate(reduced, a)
            gap += dropped
            if residual <= tol and gap <= tol:
                return DiscriminationResult(
                    p_error=min(max(1.0 - success, 0.0), 1.0),
                    certificate_residual=residual,
                    duality_gap=gap,
                    iterations=it,
                    converged=True,
                    backend="newton-srm",
                    residual_trace=trace,
                    _reduced=reduced,
                    _gram=gram,
                ), vec, lam

    trace = []

    def record(elements):
        trace.append(_certificate(_purify(elements), a)[0])

    def score(elements):
        return _certificate(_purify(elements), a)[0]

    elements, it = solve_measurement_sdp(a, max_iter=min(max_iter, 200), score=score,
                                         target=0.01 * tol, callback=record)
    reduced = _purify(elements)
    residual, gap, success = _certificate(reduced, a)
    gap += dropped
    trace.append(residual)
    return DiscriminationResult(
        p_error=min(max(1.0 - success, 0.0), 1.0),
        certificate_residual=residual,
        duality_gap=gap,
        iterations=it,
        converged=bool(residual <= tol and gap <= tol),
        backend="interior-point",
        residual_trace=trace,
        _reduced=reduced,
        _gram=gram,
    ), vec, lam


def min_error_discriminate(ensemble: Ensemble, tol: float = DEFAULT_TOL,
                           max_iter: int = MAX_ITER) -> DiscriminationResult:
    """Minimum-error measurement for an ensemble of pure states.

    Args:
        ensemble: states and priors.
        tol: bound on the certificate residual and on the duality gap.
        max_iter: iteration cap for the fast path (the interior-point
            fallback uses at most 200).

    Returns:
        A result with ``converged=False`` if the certificate misses ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    phi = ensemble.matrix()
    gram = phi.conj().T @ phi
    result, vec, lam = _min_error_core(gram, np.asarray(ensemble.priors), tol, max_iter)
    # Orthonormal frame of the span: Q = Phi sqrt(P) V lam^{-1/2}.
    sp = np.sqrt(np.asarray(ensemble.priors))
    frame = (phi * sp[None, :]) @ vec / np.sqrt(lam)[None, :]
    # Polar factor: the nearest exactly orthonormal frame, which guards against
    # round-off when a prior or an eigenvalue of K is tiny.
    left, _, right = np.linalg.svd(frame, full_matrices=False)
    result._frame = left @ right
    return result


def min_error_from_gram(gram: np.ndarray, priors=None, tol: float = DEFAULT_TOL,
                        max_iter: int = MAX_ITER) -> DiscriminationResult:
    """Same as :func:`min_error_discriminate` but from a Gram matrix alone.

    The optimal error depends on the states only through their Gram matrix.
    The result has no full-space POVM; use :attr:`DiscriminationResult.reduced_povm`.
    """
    gram = np.asarray(gram, dtype=complex)
    n = gram.shape[0]
    priors = np.full(n, 1.0 / n) if priors is None else np.asarray(priors, dtype=float)
    return _min_error_core(gram, priors, tol, max_iter)[0]


def objective_p(psi: StateVector, u: SensorUnitary, tol: float = DEFAULT_TOL) -> float:
    """Optimal error probability of identifying which sensor fired.

    Raises:
        NonConvergenceError: if the solver cannot certify its answer.
    """
    return objective_result(psi, u, tol).p_error


def objective_result(psi: StateVector, u: SensorUnitary, tol: float = DEFAULT_TOL) -> DiscriminationResult:
    """Like :func:`objective_p` but returns the full certified result."""
    from .errors import NonConvergenceError

    phi = final_state_matrix(psi.amps, psi.n_sensors, u.theta)
    result = min_error_from_gram(phi.conj().T @ phi, tol=tol)
    if not result.converged:
        raise NonConvergenceError(
            f"solver did not certify (residual {result.certificate_residual:.2e})", result
        )
    return result


def objective_from_amplitudes(amps: np.ndarray, n: int, theta: float, tol: float = DEFAULT_TOL):
    """Unvalidated fast objective for search loops; returns the result object."""
    phi = final_state_matrix(amps, n, theta)
    return min_error_from_gram(phi.conj().T @ phi, tol=tol)


# -------------------------------------------------------------- unambiguous


def _max_weights_barrier(gram: np.ndarray, priors: np.ndarray, tol: float, max_iter: int):
    """Maximize ``p . alpha`` subject to ``G - diag(alpha) >= 0``, ``alpha >= 0``.

    Log-barrier method; the gap bound is ``2n / t``.
    """
    n = gram.shape[0]
    lam_min = np.linalg.eigvalsh(gram)[0]
    alpha = np.full(n, 0.5 * lam_min)
    t = 1.0
    total = 0
    gap = 2 * n / t

    def barrier(al):
        try:
            chol = np.linalg.cholesky(gram - np.diag(al))
        except np.linalg.LinAlgError:
            return -np.inf
        if np.any(al <= 0):
            return -np.inf
        return t * priors @ al + 2 * np.sum(np.log(chol.diagonal().real)) + np.sum(np.log(al))

    while True:
        for _ in range(100):
            total += 1
            inv = np.linalg.inv(gram - np.diag(alpha))
            grad = t * priors - inv.diagonal().real + 1.0 / alpha
            hess = -np.abs(inv) ** 2 - np.diag(1.0 / alpha**2)
            step = np.linalg.solve(hess, -grad)
            decrement = grad @ step
            if decrement < 1e-14:
                break
            f0 = barrier(alpha)
            s = 1.0
            while s > 1e-14 and barrier(alpha + s * step) < f0 + 0.25 * s * (grad @ step):
                s *= 0.5
            alpha = alpha + s * step
            if decrement < 1e-10 and s == 1.0:
                break
        gap = 2 * n / t
        if gap <= 0.1 * tol or total >= max_iter:
            break
        t *= 10.0
    return alpha, total, gap


def unambiguous_discriminate(ensemble: Ensemble, tol: float = DEFAULT_TOL,
                             max_iter: int = MAX_ITER) -> UnambiguousResult:
    """Optimal unambiguous measurement for linearly independent pure states.

    Conclusive elements are multiples of projectors onto the reciprocal states,
    so cross-detection vanishes by construction.

    Raises:
        InfeasibleError: if the states are linearly dependent.
    """
    phi = ensemble.matrix()
    gram = phi.conj().T @ phi
    lam = np.linalg.eigvalsh(gram)
    if lam[0] <= 1e-10 * max(lam[-1], 1.0):
        raise InfeasibleError(
            f"states are linearly dependent (smallest Gram eigenvalue {lam[0]:.2e}); "
            "unambiguous discrimination is impossible"
        )
    priors = np.asarray(ensemble.priors, dtype=float)
    alpha, it, gap = _max_weights_barrier(gram, priors, tol, max_iter)
    success = float(priors @ alpha)
    return UnambiguousResult(
        p_failure=min(max(1.0 - success, 0.0), 1.0),
        success_weights=alpha,
        duality_gap=gap,
        iterations=it,
        converged=bool(gap <= tol),
        _states=phi,
        _gram=gram,
    )


def unambiguous_objective(psi: StateVector, u: SensorUnitary, tol: float = DEFAULT_TOL) -> UnambiguousResult:
    return unambiguous_discriminate(final_states(psi, u), tol)
