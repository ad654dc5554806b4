"""
Interference alignment by alternating leakage minimization.

Three schemes share the same machinery:

``conventional``
    Precoders ``F_l`` and receive interference subspaces ``U_k`` minimize the
    inter-main-link leakage ``J1``; the eavesdropper is ignored.
``wslm``
    Adds the eavesdropper term ``J2``: all wiretapped signals are pushed into
    a common d-dimensional subspace ``U_e`` of the eavesdropper's space.
``zfws``
    Precoders are ``F_l = Delta_l @ P_l`` with ``Delta_l`` spanning the
    (approximate) null space of the wiretap channel, so the eavesdropper
    sees nothing; ``P_l`` and ``U_k`` then minimize ``J1``.

Each update is a closed-form eigen-selection, so the objective can only go
down from one iteration to the next.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import complex_gaussian, make_rng
from .numerics import (DimensionError, eig_largest, eig_smallest,
                       projection_residual, svd)

logger = logging.getLogger(__name__)

SCHEMES = ("conventional", "wslm", "zfws")

CONVERGED = "converged"
STAGNATED = "stagnated"
MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class IAOptions:
    """Stopping rules and initialization seed for the alternating loops.

    A run stops as soon as the leakage drops to `eps_leakage` (converged),
    when the per-iteration decrease is at most `eps_delta` for
    `stagnation_window` consecutive iterations (stagnated), or after
    `kappa_max` iterations.
    """
    kappa_max: int = 500
    eps_leakage: float = 1e-10
    eps_delta: float = 1e-14
    init_seed: int = 0
    stagnation_window: int = 3

    def __post_init__(self):
        if self.kappa_max < 1:
            raise ValueError(f"kappa_max must be >= 1, got {self.kappa_max}")
        if not self.eps_leakage > 0:
            raise ValueError("eps_leakage must be positive")
        if not self.eps_delta >= 0:
            raise ValueError("eps_delta must be non-negative")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")

    def scaled(self, factor):
        """Thresholds multiplied by `factor` (for power-rescaled runs)."""
        return replace(self, eps_leakage=self.eps_leakage * factor,
                       eps_delta=self.eps_delta * factor)


@dataclass
class IASolution:
    """Precoders and receive subspaces produced by one of the schemes.

    `U_e` is only set by ``wslm``; `Delta` and `P` only by ``zfws``.
    `best_effort` marks a ``zfws`` run where ``M - d < Ne`` so the wiretap
    null space is too small and `Delta` holds the weakest singular
    directions instead.
    """
    F: list
    U: list
    scheme: str
    U_e: np.ndarray = None
    Delta: list = None
    P: list = None
    best_effort: bool = False

    def scaled(self, factor):
        """Copy with every precoder (and ``P``) multiplied by `factor`."""
        return replace(
            self, F=[f * factor for f in self.F],
            P=None if self.P is None else [p * factor for p in self.P])


@dataclass
class IATrace:
    leakage: list = field(default_factory=list)
    termination: str = MAX_ITERATIONS

    @property
    def iterations(self):
        return len(self.leakage) - 1

    @property
    def final(self):
        return self.leakage[-1]


# ---------------------------------------------------------------------------
# Leakage
# ---------------------------------------------------------------------------
def evaluate_leakage(scheme, channels, sol):
    """
    Total leakage ``J`` and its parts ``(J1, J2)`` for a solution.

    ``J1`` is the interference energy outside the receive interference
    subspaces of the legitimate receivers. ``J2`` depends on the scheme:
    for ``wslm`` it is the wiretapped energy outside ``U_e`` and enters
    ``J``; for ``zfws`` it is the raw wiretapped energy, reported only as a
    diagnostic; for ``conventional`` it is 0.

    Returns
    -------
    J, J1, J2 : float
    """
    K = channels.config.K
    J1 = 0.0
    for k in range(1, K + 1):
        for l in range(1, K + 1):
            if l != k:
                J1 += projection_residual(channels[k, l] @ sol.F[l - 1],
                                          sol.U[k - 1])
    if scheme == "wslm":
        if sol.U_e is None:
            raise ValueError("wslm leakage needs the eavesdropper basis U_e")
        J2 = sum(projection_residual(channels.eve(l) @ sol.F[l - 1], sol.U_e)
                 for l in range(1, K + 1))
        return J1 + J2, J1, J2
    if scheme == "zfws":
        J2 = sum(float(np.linalg.norm(channels.eve(l) @ sol.F[l - 1]) ** 2)
                 for l in range(1, K + 1))
        return J1, J1, J2
    if scheme == "conventional":
        return J1, J1, 0.0
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Closed-form updates
# ---------------------------------------------------------------------------
def _residual_gram(H, U):
    """``H^H (I - U U^H) H``, formed as ``B^H B`` with ``B = (I - UU^H) H``."""
    B = H - U @ (U.conj().T @ H)
    return B.conj().T @ B


def _interference_gram(channels, k, F):
    """``sum_{l != k} H_kl F_l F_l^H H_kl^H`` at legitimate receiver `k`."""
    cfg = channels.config
    Q = np.zeros((cfg.N, cfg.N), dtype=complex)
    for l in range(1, cfg.K + 1):
        if l != k:
            G = channels[k, l] @ F[l - 1]
            Q += G @ G.conj().T
    return Q


def _update_U(channels, F):
    cfg = channels.config
    return [eig_largest(_interference_gram(channels, k, F), cfg.N - cfg.d)[0]
            for k in range(1, cfg.K + 1)]


def _update_U_e(channels, F):
    cfg = channels.config
    Q = np.zeros((cfg.Ne, cfg.Ne), dtype=complex)
    for l in range(1, cfg.K + 1):
        G = channels.eve(l) @ F[l - 1]
        Q += G @ G.conj().T
    return eig_largest(Q, cfg.d)[0]


def _precoder_gram(channels, cfg, U, U_e, l):
    """Leakage Gram matrix whose smallest eigenvectors give ``F_l``."""
    A = np.zeros((cfg.M, cfg.M), dtype=complex)
    for k in range(1, cfg.K + 1):
        if k != l:
            A += _residual_gram(channels[k, l], U[k - 1])
    if U_e is not None:
        A += _residual_gram(channels.eve(l), U_e)
    return A


def _update_F(channels, cfg, U, U_e=None):
    """Minimum-leakage precoders for fixed subspaces.

    With `U_e` given, the eavesdropper's residual term joins the sum.
    """
    scale = np.sqrt(cfg.Pt / cfg.d)
    return [scale * eig_smallest(_precoder_gram(channels, cfg, U, U_e, l),
                                 cfg.d)[0]
            for l in range(1, cfg.K + 1)]


def _update_P(channels, cfg, U, Delta):
    scale = np.sqrt(cfg.Pt / cfg.d)
    P = []
    for l in range(1, cfg.K + 1):
        A = np.zeros((cfg.d, cfg.d), dtype=complex)
        for k in range(1, cfg.K + 1):
            if k != l:
                A += _residual_gram(channels[k, l] @ Delta[l - 1], U[k - 1])
        P.append(scale * eig_smallest(A, cfg.d)[0])
    return P


def random_precoders(config, seed):
    """Random ``F_k`` with ``F_k^H F_k = (Pt/d) I``: orthonormalized CN(0,1)."""
    rng = make_rng(seed)
    F = []
    for _ in range(config.K):
        Q, R = np.linalg.qr(complex_gaussian(rng, (config.M, config.d)))
        # Make the QR factor unique: diag(R) real positive.
        ph = np.diag(R) / np.abs(np.diag(R))
        F.append(np.sqrt(config.Pt / config.d) * Q * ph[np.newaxis, :])
    return F


def null_space_precoder_basis(He, d):
    """
    Last `d` right singular vectors of the wiretap channel `He`.

    When ``M - Ne >= d`` these span part of the null space of `He`, so
    ``He @ Delta = 0``; otherwise they are the directions that leak the
    least energy to the eavesdropper.
    """
    He = np.asarray(He)
    M = He.shape[1]
    if not 1 <= d <= M:
        raise DimensionError(f"need 1 <= d <= M, got d={d}, M={M}")
    _, _, Xi = svd(He)
    return Xi[:, M - d:]


# ---------------------------------------------------------------------------
# Alternating loops
# ---------------------------------------------------------------------------
def _check_dims(config, scheme):
    if config.N <= config.d:
        raise DimensionError(
            f"{scheme}: need N > d for a non-empty interference subspace "
            f"(N={config.N}, d={config.d})")
    if config.M < config.d:
        raise DimensionError(f"{scheme}: need M >= d (M={config.M}, "
                             f"d={config.d})")
    if scheme == "wslm" and config.Ne < config.d:
        raise DimensionError(
            f"wslm: the eavesdropper basis U_e is Ne x d, so Ne >= d is "
            f"required (Ne={config.Ne}, d={config.d})")


def _check_channels(channels, config):
    c = channels.config
    if (c.K, c.M, c.N, c.Ne) != (config.K, config.M, config.N, config.Ne):
        raise DimensionError(f"channels were drawn for {c.label}, "
                             f"not {config.label}")


def _run_loop(step, sol, J0, opts, callback):
    """Drive `step` until one of the stopping rules in `opts` fires."""
    trace = IATrace(leakage=[J0])
    if callback is not None:
        callback(0, sol, J0)
    if J0 <= opts.eps_leakage:
        trace.termination = CONVERGED
        return sol, trace
    flat = 0
    for kappa in range(1, opts.kappa_max + 1):
        sol, J = step(sol)
        prev = trace.leakage[-1]
        trace.leakage.append(J)
        if callback is not None:
            callback(kappa, sol, J)
        if J <= opts.eps_leakage:
            trace.termination = CONVERGED
            break
        flat = flat + 1 if prev - J <= opts.eps_delta else 0
        if flat >= opts.stagnation_window:
            trace.termination = STAGNATED
            break
    else:
        trace.termination = MAX_ITERATIONS
    logger.debug("%s: %s after %d iterations, J=%.3e", sol.scheme,
                 trace.termination, trace.iterations, trace.final)
    return sol, trace


def conventional_ia(channels, config, opts=IAOptions(), callback=None):
    """
    Conventional alternating-minimization IA (eavesdropper ignored).

    Starts from random power-normalized precoders drawn from
    ``opts.init_seed``, then alternates the precoder update and the
    receive-subspace update. `callback`, if given, is called as
    ``callback(kappa, solution, J)`` after every evaluation of the leakage.

    Returns
    -------
    sol : IASolution
    trace : IATrace
        Leakage ``J1`` at iterations ``0..kappa_end``.
    """
    _check_dims(config, "conventional")
    _check_channels(channels, config)
    ch = channels
    F = random_precoders(config, opts.init_seed)
    sol = IASolution(F=F, U=_update_U(ch, F), scheme="conventional")

    def step(s):
        F = _update_F(ch, config, s.U)
        s = IASolution(F=F, U=_update_U(ch, F), scheme="conventional")
        return s, evaluate_leakage("conventional", ch, s)[0]

    return _run_loop(step, sol, evaluate_leakage("conventional", ch, sol)[0],
                     opts, callback)


def wslm_ia(channels, config, opts=IAOptions(), callback=None):
    """
    Wiretapped-signal leakage minimization IA.

    Same loop as :func:`conventional_ia`, but the precoder update also
    penalizes wiretapped energy outside the eavesdropper basis ``U_e``, and
    ``U_e`` is re-selected (d dominant directions of the wiretapped
    covariance) together with the legitimate receive subspaces. The trace
    records ``J = J1 + J2``.
    """
    _check_dims(config, "wslm")
    _check_channels(channels, config)
    ch = channels

    def subspaces(F):
        return IASolution(F=F, U=_update_U(ch, F), U_e=_update_U_e(ch, F),
                          scheme="wslm")

    sol = subspaces(random_precoders(config, opts.init_seed))

    def step(s):
        s = subspaces(_update_F(ch, config, s.U, s.U_e))
        return s, evaluate_leakage("wslm", ch, s)[0]

    return _run_loop(step, sol, evaluate_leakage("wslm", ch, sol)[0], opts,
                     callback)


def zfws_ia(channels, config, opts=IAOptions(), callback=None):
    """
    Zero-forcing wiretapped-signal IA with cascade precoders ``F = Delta P``.

    ``Delta_l`` is fixed up front from the SVD of each wiretap channel. The
    receive subspaces start as the first ``N - d`` columns of the identity;
    each iteration updates ``U`` first and then ``P``. If ``M - d < Ne`` the
    run is flagged ``best_effort`` and the eavesdropper still receives
    some (minimal) energy.
    """
    _check_dims(config, "zfws")
    _check_channels(channels, config)
    ch = channels
    K, N, d = config.K, config.N, config.d
    best_effort = config.M - d < config.Ne
    if best_effort:
        logger.info("zfws on %s: M - d < Ne, running best-effort",
                    config.label)
    Delta = [null_space_precoder_basis(ch.eve(l), d) for l in range(1, K + 1)]

    def assemble(U, P):
        return IASolution(F=[D @ p for D, p in zip(Delta, P)], U=U,
                          Delta=Delta, P=P, scheme="zfws",
                          best_effort=best_effort)

    U0 = [np.eye(N, N - d, dtype=complex) for _ in range(K)]
    sol = assemble(U0, _update_P(ch, config, U0, Delta))

    def step(s):
        U = _update_U(ch, s.F)
        s = assemble(U, _update_P(ch, config, U, Delta))
        return s, evaluate_leakage("zfws", ch, s)[0]

    return _run_loop(step, sol, evaluate_leakage("zfws", ch, sol)[0], opts,
                     callback)


_RUNNERS = {"conventional": conventional_ia, "wslm": wslm_ia,
            "zfws": zfws_ia}


def run_scheme(scheme, channels, config, opts=IAOptions(), callback=None):
    """Dispatch to the named scheme."""
    try:
        runner = _RUNNERS[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of "
                         f"{', '.join(SCHEMES)}") from None
    return runner(channels, config, opts, callback)


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------
def wslm_feasible(config):
    """
    Properness check for the wslm scheme.

    Returns ``(feasible, Nv, Neq)`` with ``Neq = K(K-1)d^2 + K(Ne-d)d``
    equations and ``Nv = Kd(M+N-2d) + d(Ne-d)`` variables. Feasible means
    ``K(M+N) - (K^2+1)d >= Ne(K-1)`` and ``Ne >= d``.
    """
    K, M, N, Ne, d = config.K, config.M, config.N, config.Ne, config.d
    Neq = K * (K - 1) * d * d + K * (Ne - d) * d
    Nv = K * d * (M + N - 2 * d) + d * (Ne - d)
    ok = K * (M + N) - (K * K + 1) * d >= Ne * (K - 1) and Ne >= d
    return bool(ok), Nv, Neq


def zfws_feasible(config):
    """Returns ``(feasible, antenna_ok, subspace_ok)``.

    ``antenna_ok``: ``M - d >= Ne`` (a d-dimensional wiretap null space
    exists); ``subspace_ok``: ``N >= K d``.
    """
    antenna_ok = config.M - config.d >= config.Ne
    subspace_ok = config.N >= config.K * config.d
    return antenna_ok and subspace_ok, antenna_ok, subspace_ok
