"""Seeded random instances used by check suites and tests.

Jump systems are built in the eigenbasis of a randomly drawn density h:
scaled matrix units U E_ab U* are exact modular eigenvectors with weight
omega = log(lambda_b / lambda_a), off-diagonal units come in adjoint pairs
with opposite weights, and Hermitian traceless diagonal jumps carry
omega = 0.  This produces every valid configuration the four conditions
allow, up to unitary gauge inside degenerate weight blocks.
"""

import numpy as np

from .lindblad import JumpSystem
from .modular import WeightedAlgebra

__all__ = ["random_unitary", "random_density", "random_weighted_algebra",
           "random_jump_system", "random_matrix"]


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(n, rng, spread=1.2):
    """Faithful density with eigenvalue logs spread over about [-s, s]."""
    lam = np.exp(rng.uniform(-spread, spread, size=n))
    lam /= lam.sum()
    u = random_unitary(n, rng)
    return (u * lam) @ u.conj().T


def random_weighted_algebra(n, rng, spread=1.2, tol=None):
    kwargs = {} if tol is None else {"tol": tol}
    return WeightedAlgebra(random_density(n, rng, spread), **kwargs)


def random_matrix(n, rng, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def random_jump_system(w: WeightedAlgebra, rng, m_max=6):
    """Valid jump system with at most m_max jumps over the given algebra."""
    n = w.n
    lam, u = w.eig.eigenvalues, w.eig.eigenvectors
    pairs = [(a, b) for a in range(n) for b in range(n) if a < b]
    rng.shuffle(pairs)

    jumps = []
    pairing = []
    budget = m_max
    n_offdiag = min(len(pairs), budget // 2)
    for a, b in pairs[:n_offdiag]:
        c = rng.uniform(0.3, 1.5) * np.exp(2j * np.pi * rng.uniform())
        e_ab = np.zeros((n, n), dtype=np.complex128)
        e_ab[a, b] = 1.0
        v = c * (u @ e_ab @ u.conj().T)
        omega = float(np.log(lam[b]) - np.log(lam[a]))
        j = len(jumps)
        jumps.append((v, omega))
        jumps.append((v.conj().T, -omega))
        pairing.extend([j + 1, j])
    budget -= 2 * n_offdiag

    n_diag = min(budget, n - 1, int(rng.integers(0, budget + 1)))
    if n_diag > 0:
        # orthonormal traceless real diagonals in the eigenbasis of h
        raw = rng.standard_normal((n, n_diag))
        raw -= raw.mean(axis=0)
        q, _ = np.linalg.qr(raw)
        for k in range(min(n_diag, q.shape[1])):
            col = q[:, k]
            if np.linalg.norm(col) < 0.5:
                continue
            v = rng.uniform(0.3, 1.5) * (u @ np.diag(col.astype(np.complex128)) @ u.conj().T)
            pairing.append(len(jumps))
            jumps.append((v, 0.0))

    return JumpSystem(W=w, jumps=jumps, pairing=pairing)
