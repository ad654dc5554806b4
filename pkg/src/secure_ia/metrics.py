"""
Achievable rates, secrecy rates and post-hoc checks of the IA conditions.

Rates treat every undesired stream as Gaussian noise and use
``log|I + S R^-1| = log|R + S| - log|R|`` so no matrix is ever inverted.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import logdet2, orthonormal_complement, svd

# A desired link counts as full-rank when its d-th singular value is at
# least this fraction of the largest one.
RANK_MARGIN_THRESHOLD = 1e-3


@dataclass
class RateReport:
    """Per-user rates (bits/s/Hz) for one channel draw and one solution."""
    R: np.ndarray
    Re: np.ndarray
    Rs: np.ndarray
    ssr: float


@dataclass
class DiagnosticsReport:
    imli_residual: np.ndarray
    rank_margin: np.ndarray
    wiretap_leakage: np.ndarray

    def rank_ok(self, threshold=RANK_MARGIN_THRESHOLD):
        return bool(np.all(self.rank_margin >= threshold))


def _rate(H_rows, F, sigma2, k):
    """Rate of user `k` at a receiver seeing transmitter `l` via ``H_rows[l]``."""
    n = H_rows[0].shape[0]
    R = sigma2 * np.eye(n, dtype=complex)
    for l, (H, Fl) in enumerate(zip(H_rows, F)):
        if l != k:
            G = H @ Fl
            R += G @ G.conj().T
    G = H_rows[k] @ F[k]
    rate = logdet2(R + G @ G.conj().T) - logdet2(R)
    # Round-off can push a zero rate a hair below 0.
    return max(rate, 0.0)


def legit_rate(channels, F, sigma2, k):
    """Rate of user `k` (1-based) at its own receiver, other users as noise."""
    K = channels.config.K
    if not 1 <= k <= K:
        raise IndexError(f"user index {k} outside 1..{K}")
    return _rate([channels[k, l] for l in range(1, K + 1)], F, sigma2, k - 1)


def eave_rate(channels, F, sigma2, k):
    """Rate at which the eavesdropper can decode user `k` (1-based)."""
    K = channels.config.K
    if not 1 <= k <= K:
        raise IndexError(f"user index {k} outside 1..{K}")
    return _rate([channels.eve(l) for l in range(1, K + 1)], F, sigma2, k - 1)


def secrecy_report(channels, sol, config):
    """Legitimate, wiretap and secrecy rates plus the secrecy sum rate.

    The secrecy rate of each user is clamped at zero before summing.
    """
    K = config.K
    R = np.array([legit_rate(channels, sol.F, config.sigma2, k)
                  for k in range(1, K + 1)])
    Re = np.array([eave_rate(channels, sol.F, config.sigma2, k)
                   for k in range(1, K + 1)])
    Rs = np.maximum(R - Re, 0.0)
    return RateReport(R=R, Re=Re, Rs=Rs, ssr=float(np.sum(Rs)))


def ia_diagnostics(channels, sol, config):
    """
    Check how well a solution meets the IA conditions.

    For each user `k`, with ``W_k`` the orthonormal complement of ``U_k``:

    * ``imli_residual[k]`` -- interference left in the desired subspace,
      ``sqrt(sum_{l != k} ||W_k^H H_kl F_l||_F^2)``,
    * ``rank_margin[k]`` -- d-th over largest singular value of
      ``W_k^H H_kk F_k`` (zero when the desired signal loses rank),
    * ``wiretap_leakage[k]`` -- ``||E^H H_e,k F_k||_F`` for ``wslm`` with
      ``E`` the complement of ``U_e``, ``||H_e,k F_k||_F`` otherwise.
    """
    K, d = config.K, config.d
    imli = np.zeros(K)
    margin = np.zeros(K)
    leak = np.zeros(K)
    if sol.scheme == "wslm":
        if sol.U_e is None:
            raise ValueError("wslm diagnostics need the eavesdropper basis U_e")
        E = (orthonormal_complement(sol.U_e)
             if sol.U_e.shape[1] < sol.U_e.shape[0] else None)
    for k in range(1, K + 1):
        W = orthonormal_complement(sol.U[k - 1])
        tot = 0.0
        for l in range(1, K + 1):
            if l != k:
                tot += np.linalg.norm(W.conj().T @ channels[k, l]
                                      @ sol.F[l - 1]) ** 2
        imli[k - 1] = np.sqrt(tot)
        _, s, _ = svd(W.conj().T @ channels[k, k] @ sol.F[k - 1])
        if s[0] > 0 and len(s) >= d:
            margin[k - 1] = s[d - 1] / s[0]
        G = channels.eve(k) @ sol.F[k - 1]
        if sol.scheme == "wslm":
            leak[k - 1] = 0.0 if E is None else np.linalg.norm(E.conj().T @ G)
        else:
            leak[k - 1] = np.linalg.norm(G)
    return DiagnosticsReport(imli_residual=imli, rank_margin=margin,
                             wiretap_leakage=leak)


def ssr_improvement(proposed_ssr, conventional_ssr):
    """Mean paired SSR gain of a proposed scheme over conventional IA."""
    a = np.asarray(proposed_ssr, dtype=float)
    b = np.asarray(conventional_ssr, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"paired lists differ in length: {a.shape} vs "
                         f"{b.shape}")
    if a.size == 0:
        raise ValueError("need at least one paired realization")
    return float(np.mean(a - b))
