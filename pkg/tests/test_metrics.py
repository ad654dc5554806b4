import numpy as np
import pytest

from secure_ia.channel import ChannelSet, SystemConfig, draw_channels
from secure_ia.ia import IAOptions, IASolution, random_precoders, run_scheme
from secure_ia.metrics import (RateReport, eave_rate, ia_diagnostics,
                               legit_rate, secrecy_report, ssr_improvement)
from secure_ia.numerics import orthonormal_complement

from conftest import random_orthonormal

SYS_9963 = SystemConfig(K=3, M=9, N=9, Ne=6, d=3, Pt=1000.0)


def rate_by_inverse(H_rows, F, sigma2, k):
    """Rate with the interference-plus-noise covariance inverted directly."""
    n = H_rows[0].shape[0]
    R = sigma2 * np.eye(n) + sum(H @ Fl @ Fl.conj().T @ H.conj().T
                                 for l, (H, Fl) in enumerate(zip(H_rows, F))
                                 if l != k)
    S = H_rows[k] @ F[k] @ F[k].conj().T @ H_rows[k].conj().T
    return float(np.real(np.log2(np.linalg.det(
        np.eye(n) + S @ np.linalg.inv(R)))))


def test_parallel_awgn_rate():
    N, Pt, sigma2 = 3, 6.0, 0.5
    cfg = SystemConfig(K=1, M=N, N=N, Ne=1, d=N, Pt=Pt, sigma2=sigma2)
    ch = ChannelSet(cfg, [[np.eye(N, dtype=complex)],
                          [np.ones((1, N), dtype=complex)]])
    F = [np.sqrt(Pt / N) * np.eye(N)]
    assert legit_rate(ch, F, sigma2, 1) == pytest.approx(
        N * np.log2(1 + Pt / (N * sigma2)), rel=1e-12)


def test_zero_precoder_zero_rate():
    cfg = SystemConfig(K=2, M=4, N=4, Ne=3, d=2)
    ch = draw_channels(cfg, 0)
    F = random_precoders(cfg, 0)
    F[0] = np.zeros_like(F[0])
    assert legit_rate(ch, F, 1.0, 1) == 0.0
    assert eave_rate(ch, F, 1.0, 1) == 0.0


def test_rates_match_explicit_inverse():
    cfg = SystemConfig(K=3, M=4, N=4, Ne=4, d=2, Pt=10.0)
    ch = draw_channels(cfg, 3)
    F = random_precoders(cfg, 4)
    for k in range(1, 4):
        legit = rate_by_inverse([ch[k, l] for l in range(1, 4)], F, 1.0,
                                k - 1)
        eve = rate_by_inverse([ch.eve(l) for l in range(1, 4)], F, 1.0, k - 1)
        assert legit_rate(ch, F, 1.0, k) == pytest.approx(legit, abs=1e-8)
        assert eave_rate(ch, F, 1.0, k) == pytest.approx(eve, abs=1e-8)


def test_rate_index_checked():
    cfg = SystemConfig(K=2, M=2, N=2, Ne=2, d=1)
    with pytest.raises(IndexError):
        legit_rate(draw_channels(cfg, 0), random_precoders(cfg, 0), 1.0, 3)


def test_legit_rate_increases_with_power():
    cfg = SystemConfig(K=1, M=4, N=4, Ne=2, d=2)
    ch = draw_channels(cfg, 1)
    F0 = random_precoders(cfg, 1)[0]
    rates = [legit_rate(ch, [F0 * np.sqrt(p)], 1.0, 1) for p in (1, 10, 100)]
    assert rates[0] < rates[1] < rates[2]


def test_zfws_eavesdropper_rate_vanishes():
    ch = draw_channels(SYS_9963, 4)
    sol, _ = run_scheme("zfws", ch, SYS_9963)
    rep = secrecy_report(ch, sol, SYS_9963)
    assert np.all(rep.Re <= 1e-6)
    assert rep.ssr == pytest.approx(float(np.sum(rep.R)), abs=1e-5)


def test_secrecy_clamp():
    # Eavesdropper sees user 1 through a much stronger channel.
    cfg = SystemConfig(K=1, M=2, N=2, Ne=2, d=1, Pt=10.0)
    ch = ChannelSet(cfg, [[0.1 * np.eye(2, dtype=complex)],
                          [10.0 * np.eye(2, dtype=complex)]])
    sol = IASolution(F=[np.sqrt(10.0) * np.eye(2, 1, dtype=complex)],
                     U=[np.eye(2, 1, dtype=complex)], scheme="conventional")
    rep = secrecy_report(ch, sol, cfg)
    assert rep.Re[0] > rep.R[0]
    assert rep.Rs[0] == 0.0 and rep.ssr == 0.0


def test_ssr_recomputation():
    ch = draw_channels(SYS_9963, 6)
    sol, _ = run_scheme("wslm", ch, SYS_9963, IAOptions(init_seed=6))
    rep = secrecy_report(ch, sol, SYS_9963)
    terms = [max(legit_rate(ch, sol.F, 1.0, k) - eave_rate(ch, sol.F, 1.0, k),
                 0.0) for k in range(1, 4)]
    assert rep.ssr == pytest.approx(sum(terms), rel=1e-12)
    assert isinstance(rep, RateReport)
    assert np.all(rep.R >= 0) and np.all(rep.Re >= 0)
    assert np.all(np.isfinite(rep.Rs))


def test_ssr_invariant_under_relabeling():
    ch = draw_channels(SYS_9963, 9)
    sol, _ = run_scheme("wslm", ch, SYS_9963, IAOptions(init_seed=9))
    perm = [2, 0, 1]
    ch_p = ch.permuted(perm)
    sol_p = IASolution(F=[sol.F[i] for i in perm], U=[sol.U[i] for i in perm],
                       U_e=sol.U_e, scheme="wslm")
    a = secrecy_report(ch, sol, SYS_9963).ssr
    b = secrecy_report(ch_p, sol_p, SYS_9963).ssr
    assert a == pytest.approx(b, rel=1e-12)


# --- diagnostics -----------------------------------------------------------
def test_diagnostics_after_convergence():
    ch = draw_channels(SYS_9963, 12)
    sol, trace = run_scheme("wslm", ch, SYS_9963, IAOptions(init_seed=12))
    assert trace.final <= 1e-10
    diag = ia_diagnostics(ch, sol, SYS_9963)
    assert np.all(diag.imli_residual <= 1e-4 * np.sqrt(SYS_9963.Pt))
    assert diag.rank_ok()
    assert np.all(diag.wiretap_leakage <= 1e-4 * np.sqrt(SYS_9963.Pt))


def test_diagnostics_single_user():
    cfg = SystemConfig(K=1, M=4, N=4, Ne=2, d=2)
    ch = draw_channels(cfg, 0)
    sol, _ = run_scheme("conventional", ch, cfg)
    assert np.array_equal(ia_diagnostics(ch, sol, cfg).imli_residual, [0.0])


def test_diagnostics_brute_force(rng):
    cfg = SystemConfig(K=3, M=5, N=5, Ne=4, d=2, Pt=2.0)
    ch = draw_channels(cfg, 2)
    sol = IASolution(F=random_precoders(cfg, 3),
                     U=[random_orthonormal(rng, 5, 3) for _ in range(3)],
                     U_e=random_orthonormal(rng, 4, 2), scheme="wslm")
    diag = ia_diagnostics(ch, sol, cfg)
    E = orthonormal_complement(sol.U_e)
    for k in range(1, 4):
        W = orthonormal_complement(sol.U[k - 1])
        P_W = W @ W.conj().T
        # ||W^H X||_F = ||P_W X||_F for orthonormal W.
        tot = sum(np.linalg.norm(P_W @ ch[k, l] @ sol.F[l - 1]) ** 2
                  for l in range(1, 4) if l != k)
        assert diag.imli_residual[k - 1] == pytest.approx(np.sqrt(tot),
                                                          rel=1e-10)
        s = np.linalg.svd(W.conj().T @ ch[k, k] @ sol.F[k - 1],
                          compute_uv=False)
        assert diag.rank_margin[k - 1] == pytest.approx(s[1] / s[0],
                                                        rel=1e-10)
        P_E = E @ E.conj().T
        assert diag.wiretap_leakage[k - 1] == pytest.approx(
            np.linalg.norm(P_E @ ch.eve(k) @ sol.F[k - 1]), rel=1e-10)


def test_diagnostics_zfws_uses_raw_leakage():
    ch = draw_channels(SYS_9963, 1)
    sol, _ = run_scheme("zfws", ch, SYS_9963)
    diag = ia_diagnostics(ch, sol, SYS_9963)
    for k in range(1, 4):
        assert diag.wiretap_leakage[k - 1] == pytest.approx(
            np.linalg.norm(ch.eve(k) @ sol.F[k - 1]), abs=1e-12)


def test_diagnostics_wslm_requires_basis():
    cfg = SystemConfig(K=2, M=3, N=3, Ne=2, d=1)
    ch = draw_channels(cfg, 0)
    sol, _ = run_scheme("conventional", ch, cfg)
    sol.scheme = "wslm"
    with pytest.raises(ValueError):
        ia_diagnostics(ch, sol, cfg)


# --- ssr_improvement -------------------------------------------------------
def test_improvement_self():
    x = [1.0, 2.5, 3.0]
    assert ssr_improvement(x, x) == 0.0


def test_improvement_constant_shift():
    b = np.array([1.0, 2.0, 4.0])
    assert ssr_improvement(b + 0.75, b) == pytest.approx(0.75, abs=1e-12)


def test_improvement_mean_of_differences(rng):
    a, b = rng.random(50), rng.random(50)
    expected = sum(x - y for x, y in zip(a, b)) / 50
    assert ssr_improvement(a, b) == pytest.approx(expected, abs=1e-12)


def test_improvement_length_mismatch():
    with pytest.raises(ValueError):
        ssr_improvement([1.0], [1.0, 2.0])
