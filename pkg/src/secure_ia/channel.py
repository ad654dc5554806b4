"""
System configuration and seeded Rayleigh-fading channel generation.

Channels are indexed with 1-based receiver and transmitter labels to match
the usual ``H[k][l]`` notation: ``k = 1..K`` are the legitimate receivers,
``k = K + 1`` is the eavesdropper, ``l = 1..K`` are the transmitters.

Random numbers come from :class:`numpy.random.Philox` (a counter-based
generator) keyed with a 64-bit seed. Generation order is fixed: receivers
``k = 1..K+1`` outer, transmitters ``l = 1..K`` inner, then row-major entries
within a matrix; each entry consumes two standard normals (real part, then
imaginary part), both scaled by ``sqrt(1/2)``.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """The ``(M x N, Ne, d)^K`` system plus transmit power and noise level.

    ``Pt`` is the total power per transmitter and ``sigma2`` the common noise
    variance at every receiver, both on a linear scale.
    """
    K: int
    M: int
    N: int
    Ne: int
    d: int
    Pt: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.Ne < 1:
            raise ValueError(f"Ne must be >= 1, got {self.Ne}")
        if not 1 <= self.d <= min(self.M, self.N):
            raise ValueError(f"need 1 <= d <= min(M, N), got d={self.d}, "
                             f"M={self.M}, N={self.N}")
        if not self.Pt > 0:
            raise ValueError(f"Pt must be positive, got {self.Pt}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    def with_power(self, Pt):
        return replace(self, Pt=float(Pt))

    def with_ne(self, Ne):
        return replace(self, Ne=int(Ne))

    @property
    def label(self):
        return f"({self.M}x{self.N},{self.Ne},{self.d})^{self.K}"


class ChannelSet:
    """One realization of every channel matrix in the network.

    Index as ``chan[k, l]`` with 1-based ``k in 1..K+1`` and ``l in 1..K``.
    ``chan[k, l]`` is ``N x M`` for ``k <= K`` and ``Ne x M`` for ``k = K+1``.
    """

    def __init__(self, config, H, seed=None):
        self.config = config
        self.seed = seed
        K = config.K
        if len(H) != K + 1 or any(len(row) != K for row in H):
            raise ValueError("H must be a (K+1) x K nested list of matrices")
        for k in range(K + 1):
            rows = config.N if k < K else config.Ne
            for l in range(K):
                Hkl = H[k][l]
                if Hkl.shape != (rows, config.M):
                    raise ValueError(
                        f"H[{k + 1}][{l + 1}] has shape {Hkl.shape}, "
                        f"expected {(rows, config.M)}")
                if not np.all(np.isfinite(Hkl)):
                    raise ValueError(f"H[{k + 1}][{l + 1}] is not finite")
        self._H = H

    def __getitem__(self, key):
        k, l = key
        K = self.config.K
        if not (1 <= k <= K + 1 and 1 <= l <= K):
            raise IndexError(f"channel index ({k}, {l}) out of range")
        return self._H[k - 1][l - 1]

    def eve(self, l):
        """Wiretap channel from transmitter `l` to the eavesdropper."""
        return self[self.config.K + 1, l]

    def matrices(self):
        """Iterate ``(k, l, H_kl)`` in generation order."""
        for k in range(1, self.config.K + 2):
            for l in range(1, self.config.K + 1):
                yield k, l, self[k, l]

    def permuted(self, perm):
        """Relabel users: new user ``i`` is old user ``perm[i]`` (0-based)."""
        K = self.config.K
        H = [[self._H[perm[i]][perm[j]] for j in range(K)] for i in range(K)]
        H.append([self._H[K][perm[j]] for j in range(K)])
        return ChannelSet(self.config, H, self.seed)

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        if (self.config.K, self.config.M, self.config.N, self.config.Ne) != \
                (other.config.K, other.config.M, other.config.N,
                 other.config.Ne):
            return False
        return all(np.array_equal(a, b) for (_, _, a), (_, _, b)
                   in zip(self.matrices(), other.matrices()))


def make_rng(seed):
    """Counter-based generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def complex_gaussian(rng, shape):
    """Circularly-symmetric CN(0, 1) samples, real/imag interleaved."""
    x = rng.standard_normal(tuple(shape) + (2,))
    return (x[..., 0] + 1j * x[..., 1]) * np.sqrt(0.5)


def draw_channels(config, seed):
    """Draw one i.i.d. CN(0, 1) channel realization for `config`.

    The result is fully determined by ``(config, seed)``; see the module
    docstring for the generation order.
    """
    rng = make_rng(seed)
    K = config.K
    H = []
    for k in range(K + 1):
        rows = config.N if k < K else config.Ne
        H.append([complex_gaussian(rng, (rows, config.M)) for _ in range(K)])
    return ChannelSet(config, H, seed=int(seed))


def trial_seed(master_seed, trial):
    """64-bit per-trial seed derived from ``(master_seed, trial)``.

    Uses :class:`numpy.random.SeedSequence` hashing with entropy
    `master_seed` and spawn key ``(trial,)``.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=(int(trial),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def snr_to_power(snr_db, sigma2=1.0):
    """Transmit power for a given SNR in dB, where ``SNR = Pt / sigma2``."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    return sigma2 * 10.0 ** (snr_db / 10.0)


def dump_channels(channels, path):
    """Write a channel realization as text (debugging aid).

    Format: a header ``# K=.. M=.. N=.. Ne=.. d=.. seed=..``, then for each
    matrix in generation order a line ``H k l rows cols`` followed by one
    line per row of space-separated ``re,im`` pairs.
    """
    c = channels.config
    lines = [f"# K={c.K} M={c.M} N={c.N} Ne={c.Ne} d={c.d} "
             f"seed={channels.seed}"]
    for k, l, Hkl in channels.matrices():
        lines.append(f"H {k} {l} {Hkl.shape[0]} {Hkl.shape[1]}")
        for row in Hkl:
            lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}"
                                  for z in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channels(path, Pt=1.0, sigma2=1.0):
    """Inverse of :func:`dump_channels`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = dict(item.split("=") for item in lines[0].lstrip("# ").split())
    config = SystemConfig(K=int(header["K"]), M=int(header["M"]),
                          N=int(header["N"]), Ne=int(header["Ne"]),
                          d=int(header["d"]), Pt=Pt, sigma2=sigma2)
    seed = None if header["seed"] == "None" else int(header["seed"])
    H = [[None] * config.K for _ in range(config.K + 1)]
    i = 1
    while i < len(lines):
        _, k, l, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        mat = np.empty((rows, cols), dtype=complex)
        for r in range(rows):
            pairs = lines[i + 1 + r].split()
            for c_, p in enumerate(pairs):
                re, im = p.split(",")
                mat[r, c_] = complex(float(re), float(im))
        H[int(k) - 1][int(l) - 1] = mat
        i += rows + 1
    return ChannelSet(config, H, seed=seed)
