"""Primal-dual interior-point solver for the minimum-error measurement SDP.

Solves, for weighted pure states ``a_i`` (columns of ``A``, norms carrying the
priors), the problem

    maximize   sum_i <a_i| P_i |a_i>
    subject to P_i >= 0,  sum_i P_i = I,

together with its dual ``minimize Tr Y s.t. Y >= a_i a_i^dag``.  Complex
Hermitian matrices are mapped to real symmetric ones of twice the size, so the
search direction is the standard HKM direction for real SDPs with a Mehrotra
predictor-corrector.  Only used when the fast fixed-point path cannot certify.
"""

from __future__ import annotations

import numpy as np


def embed(h: np.ndarray) -> np.ndarray:
    """Real symmetric representation of a complex Hermitian matrix."""
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def unembed(x: np.ndarray) -> np.ndarray:
    d = x.shape[0] // 2
    return 0.5 * (x[:d, :d] + x[d:, d:]) + 0.5j * (x[d:, :d] - x[:d, d:])


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``a`` in ``(0, 1]`` keeping ``x + a dx`` positive semidefinite."""
    try:
        chol = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    inv = np.linalg.inv(chol)
    smallest = np.linalg.eigvalsh(inv @ dx @ inv.T)[0]
    return 1.0 if smallest >= 0 else min(1.0, -1.0 / smallest)


def _direction(xs, zis, mu, sigma, corr=None):
    dim = xs[0].shape[0]
    schur = 0.5 * sum(np.kron(zi, x) + np.kron(x, zi) for zi, x in zip(zis, xs))
    rhs = sigma * mu * sum(zis) - np.eye(dim)
    if corr is not None:
        rhs = rhs - sum(corr)
    dy = np.linalg.solve(schur, rhs.reshape(-1, order="F")).reshape(dim, dim, order="F")
    dy = _sym(dy)
    dxs = []
    for k, (x, zi) in enumerate(zip(xs, zis)):
        dx = sigma * mu * zi - x - _sym(x @ dy @ zi)
        if corr is not None:
            dx = dx - corr[k]
        dxs.append(_sym(dx))
    return dy, dxs


def _step_length(xs, dxs, zs, dy) -> float:
    a = min(_max_step(x, dx) for x, dx in zip(xs, dxs))
    return min(a, min(_max_step(z, dy) for z in zs))


def solve_measurement_sdp(a: np.ndarray, max_iter: int = 200, mu_stop: float = 1e-12,
                          max_center: int = 30, score=None, target: float = 0.0, callback=None):
    """Optimal POVM in the span of the columns of ``a`` (shape ``(d, n)``).

    Args:
        a: weighted states as columns.
        max_iter: cap on predictor-corrector iterations.
        mu_stop: complementarity level at which the main phase ends.
        max_center: cap on the pure centering steps that follow.
        score: optional ``score(elements) -> float`` (lower is better); the
            centering phase keeps the best-scoring iterate and stops once it
            reaches ``target``.
        callback: called with the un-embedded iterate after every main step.

    Returns:
        ``(elements, iterations)`` with ``d x d`` complex elements, not yet purified.
    """
    d, n = a.shape
    dim = 2 * d
    costs = [embed(np.outer(a[:, i], a[:, i].conj())) / 2 for i in range(n)]
    eye = np.eye(dim)
    xs = [eye / n for _ in range(n)]
    y = (1.0 + max(np.linalg.eigvalsh(c)[-1] for c in costs)) * eye
    it = 0
    for it in range(1, max_iter + 1):
        zs = [y - c for c in costs]
        mu = sum(np.sum(x * z) for x, z in zip(xs, zs)) / (n * dim)
        if mu < mu_stop:
            break
        try:
            zis = [np.linalg.inv(z) for z in zs]
            # predictor
            dy, dxs = _direction(xs, zis, mu, 0.0)
            a_aff = _step_length(xs, dxs, zs, dy)
            mu_aff = sum(np.sum((x + a_aff * dx) * (z + a_aff * dy))
                         for x, dx, z in zip(xs, dxs, zs)) / (n * dim)
            sigma = (mu_aff / mu) ** 3
            corr = [_sym(dx @ dy @ zi) for dx, zi in zip(dxs, zis)]
            # corrector
            dy, dxs = _direction(xs, zis, mu, sigma, corr)
        except np.linalg.LinAlgError:
            break
        step = min(1.0, 0.98 * _step_length(xs, dxs, zs, dy))
        if step < 1e-12:
            break
        xs = [x + step * dx for x, dx in zip(xs, dxs)]
        y = y + step * dy
        if callback is not None:
            callback([unembed(x) for x in xs])

    # Pure centering steps tighten the complementarity structure, which is
    # what makes the un-embedded iterate satisfy the optimality conditions.
    best = [unembed(x) for x in xs]
    best_score = score(best) if score is not None else np.inf
    for k in range(max_center):
        if best_score <= target or (score is None and k >= 6):
            break
        zs = [y - c for c in costs]
        mu = sum(np.sum(x * z) for x, z in zip(xs, zs)) / (n * dim)
        try:
            zis = [np.linalg.inv(z) for z in zs]
            dy, dxs = _direction(xs, zis, mu, 1.0)
        except np.linalg.LinAlgError:
            break
        step = _step_length(xs, dxs, zs, dy)
        step = 1.0 if step >= 1.0 else 0.98 * step
        xs = [x + step * dx for x, dx in zip(xs, dxs)]
        y = y + step * dy
        current = [unembed(x) for x in xs]
        if score is None:
            best = current
            continue
        value = score(current)
        if value < best_score:
            best, best_score = current, value
    return best, it
