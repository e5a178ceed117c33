"""Exact finite-n disorder-averaged moments of the depth-1 QAOA energy per spin.

The Gaussian average turns the double sum over string pairs (z, z') into a
sum over "sketches" (npp, npm, nmp, nmm) -- the counts of positions where
(z_k, z'_k) equals (+,+), (+,-), (-,+), (-,-).  Per sketch the summand is a
product of

  * a multinomial weight n!/(npp! npm! nmp! nmm!),
  * a Gaussian damping exp(-sum_q gamma^2 g_q sigma_q^2 / (2 n^(q-1))),
  * mixer factors Q_ss' = {cos^2 b, sin^2 b, +/- i sin b cos b},

where f_q and g_q are the subset sums sum_{|S|=q}(z_S - z'_S) and
sum_{|S|=q}(z_S - z'_S)^2 written in closed binomial form.

For the moments the sum collapses exactly: grouping sketches by the
disagreement count t = npm + nmp, the inner alternating sums are t-th finite
differences of polynomials of degree <= d (first moment) or <= 2d (second),
so every block with larger t vanishes identically.  ``sketch_moments``
evaluates the surviving blocks in closed form through binomial moments and
exact alternating kernels; naive term-by-term float summation of all
binom(n+3,3) sketches would instead lose the cancellation catastrophically
for n beyond a few dozen.  ``generating_function`` keeps the direct
enumeration (log-magnitude/phase blocks, compensated accumulation) since its
integrand is not polynomial in the sketch; its accuracy degrades with n and
it is contracted against the oracle at small n only.

``oracle_moments`` computes the same moments by direct summation over all
4^n string pairs with explicit subset sums, and is the independent
ground truth for the sketch path at small n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .closed_form import Angles
from .errors import (
    BudgetExceededError,
    ImaginaryResidueError,
    NegativeVarianceError,
    QOutOfRangeError,
    TooLargeError,
    ValidationError,
)
from .model import MixtureSpec

__all__ = [
    "Sketch",
    "QFactors",
    "MomentReport",
    "f_q",
    "g_q",
    "f_q_abc",
    "sketch_moments",
    "generating_function",
    "oracle_moments",
    "oracle_mgf",
    "a_factor",
    "b_factor",
    "t_sum",
    "DEFAULT_BUDGET",
    "ORACLE_MAX_N",
]

DEFAULT_BUDGET = 512  # sketch sums have binom(n+3,3) terms; ~2.3e7 at n=512
ORACLE_MAX_N = 14  # 4^n pair enumeration
_REL_IMAG_TOL = 1e-9
_VARIANCE_ALLOWANCE = 1e-10
_LOG_SKIP = 60.0  # blocks more than e^-60 ~ 1e-26 below the peak cannot move 1e-10


@dataclass(frozen=True)
class Sketch:
    """Counts of (z_k, z'_k) position types for a string pair of length n."""

    npp: int
    npm: int
    nmp: int
    nmm: int

    def __post_init__(self) -> None:
        if min(self.npp, self.npm, self.nmp, self.nmm) < 0:
            raise ValidationError(f"sketch counts must be non-negative: {self}")

    @property
    def n(self) -> int:
        return self.npp + self.npm + self.nmp + self.nmm

    @property
    def t(self) -> int:
        """Number of disagreement positions npm + nmp."""
        return self.npm + self.nmp

    @staticmethod
    def of_pair(z: Sequence[int], zp: Sequence[int]) -> "Sketch":
        if len(z) != len(zp):
            raise ValidationError("strings must have equal length")
        counts = {(1, 1): 0, (1, -1): 0, (-1, 1): 0, (-1, -1): 0}
        for a, b in zip(z, zp):
            counts[(a, b)] += 1
        return Sketch(counts[(1, 1)], counts[(1, -1)], counts[(-1, 1)], counts[(-1, -1)])


@dataclass(frozen=True)
class QFactors:
    """Per-position mixer weights of a string pair, Q_ss' for ss' in {+,-}^2."""

    qpp: float
    qmm: float
    qpm: complex
    qmp: complex

    @classmethod
    def from_beta(cls, beta: float) -> "QFactors":
        sb, cb = math.sin(beta), math.cos(beta)
        return cls(qpp=cb * cb, qmm=sb * sb, qpm=-1j * sb * cb, qmp=1j * sb * cb)


def _subset_sum_by_plus_count(q: int, u: int, n: int) -> int:
    """sum_{|S|=q} z_S for any z with u entries equal to +1 (exact integer)."""
    return sum(
        (-1) ** (q - k) * math.comb(u, k) * math.comb(n - u, q - k)
        for k in range(q + 1)
    )


def f_q(q: int, sketch: Sketch) -> int:
    """sum_{|S|=q}(z_S - z'_S) for any pair with the given sketch."""
    n = sketch.n
    if not 0 <= q <= n:
        raise QOutOfRangeError(f"need 0 <= q <= n={n}, got q={q}")
    u = sketch.npp + sketch.npm  # +1 count of z
    up = sketch.npp + sketch.nmp  # +1 count of z'
    return _subset_sum_by_plus_count(q, u, n) - _subset_sum_by_plus_count(q, up, n)


def g_q(q: int, t: int, n: int) -> int:
    """sum_{|S|=q}(z_S - z'_S)^2 for any pair with t = npm + nmp disagreements."""
    if not 1 <= q <= n:
        raise QOutOfRangeError(f"need 1 <= q <= n={n}, got q={q}")
    if not 0 <= t <= n:
        raise ValidationError(f"need 0 <= t <= n={n}, got t={t}")
    return 4 * sum(
        math.comb(t, k) * math.comb(n - t, q - k) for k in range(1, min(t, q) + 1, 2)
    )


# -- polynomial expansion of f_q --------------------------------------------
#
# f_q is a polynomial of total degree q in x = npm - nmp, y = npp - nmm and n.
# The coefficients are recovered by exact rational interpolation on integer
# sketch grids (no symbolic algebra), then spot-verified on extra sketches.


def _f_value_at(q: int, npm: int, nmp: int, npp: int, nmm: int) -> int:
    n = npm + nmp + npp + nmm
    u = npp + npm
    up = npp + nmp
    return _subset_sum_by_plus_count(q, u, n) - _subset_sum_by_plus_count(q, up, n)


@lru_cache(maxsize=None)
def f_q_abc(q: int) -> dict[tuple[int, int, int], Fraction]:
    """Exact coefficients of f_q = sum f^{abc} x^a y^b n^c (zero entries omitted).

    x = npm - nmp, y = npp - nmm.  The leading (a+b+c = q) coefficients equal
    2/(a! b!) exactly when a is odd, b = q - a, c = 0, and vanish otherwise.
    """
    if q < 1:
        raise QOutOfRangeError(f"need q >= 1, got q={q}")
    monos = [
        (a, b, c)
        for total in range(q + 1)
        for a in range(total + 1)
        for b in range(total - a + 1)
        for c in [total - a - b]
    ]
    m = len(monos)
    # incremental exact Gaussian elimination over candidate sketch rows
    pivots: list[tuple[int, list[Fraction]]] = []
    extra_points: list[tuple[int, int, int, int]] = []
    for npm, nmp, npp, nmm in product(range(q + 2), repeat=4):
        if len(pivots) == m:
            extra_points.append((npm, nmp, npp, nmm))
            if len(extra_points) >= 25:
                break
            continue
        x, y, n = npm - nmp, npp - nmm, npm + nmp + npp + nmm
        row = [Fraction(x**a * y**b * n**c) for (a, b, c) in monos]
        row.append(Fraction(_f_value_at(q, npm, nmp, npp, nmm)))
        for col, prow in pivots:
            if row[col]:
                factor = row[col]
                for k in range(col, m + 1):
                    row[k] -= factor * prow[k]
        lead = next((k for k in range(m) if row[k]), None)
        if lead is None:
            continue
        inv = row[lead]
        row = [v / inv for v in row]
        pivots.append((lead, row))
    if len(pivots) < m:
        raise RuntimeError(f"interpolation grid for q={q} did not reach full rank")
    # back-substitution (Gauss-Jordan over the pivot rows)
    pivots.sort()
    for idx in range(m - 1, -1, -1):
        col, row = pivots[idx]
        for jdx in range(idx):
            _, other = pivots[jdx]
            if other[col]:
                factor = other[col]
                other[col] = Fraction(0)
                other[m] -= factor * row[m]
    coeffs = {monos[col]: row[m] for col, row in pivots}
    for npm, nmp, npp, nmm in extra_points:
        x, y, n = npm - nmp, npp - nmm, npm + nmp + npp + nmm
        reco = sum(cf * x**a * y**b * n**c for (a, b, c), cf in coeffs.items())
        if reco != _f_value_at(q, npm, nmp, npp, nmm):
            raise RuntimeError(f"interpolated polynomial for q={q} failed verification")
    return {mono: cf for mono, cf in coeffs.items() if cf}


# -- sketch-sum engine -------------------------------------------------------


class _Kahan:
    """Compensated complex accumulator (Kahan)."""

    __slots__ = ("total", "carry")

    def __init__(self) -> None:
        self.total = 0j
        self.carry = 0j

    def add(self, x: complex) -> None:
        y = x - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t


def _log_comb_row(m: int) -> np.ndarray:
    i = np.arange(m + 1)
    return gammaln(m + 1) - gammaln(i + 1) - gammaln(m - i + 1)


def _phi_table(spec: MixtureSpec, n: int) -> np.ndarray:
    """phi(u) = sum_q sigma_q^2 F_q(u)/n^q with F_q the subset sum at +1-count u."""
    phi = np.zeros(n + 1)
    for q in range(1, spec.d + 1):
        s2 = spec.sigmas[q - 1] ** 2
        if s2 == 0 or q > n:
            continue
        col = np.array(
            [_subset_sum_by_plus_count(q, u, n) for u in range(n + 1)], dtype=float
        )
        phi += (s2 / n**q) * col
    return phi


def _k_table(spec: MixtureSpec, gamma: float, n: int) -> np.ndarray:
    """K(t) = -sum_q gamma^2 g_q(t) sigma_q^2 / (2 n^(q-1))."""
    K = np.zeros(n + 1)
    g2 = gamma * gamma
    for q in range(1, min(spec.d, n) + 1):
        s2 = spec.sigmas[q - 1] ** 2
        if s2 == 0:
            continue
        col = np.array([g_q(q, t, n) for t in range(n + 1)], dtype=float)
        K -= (g2 * s2 / (2 * n ** (q - 1))) * col
    return K


def _lambda_quadratic(spec: MixtureSpec, n: int) -> float:
    """R = sum_q binom(n,q) sigma_q^2 / (2 n^(q+1)), the lam^2 exponent weight."""
    return sum(
        math.comb(n, q) * spec.sigmas[q - 1] ** 2 / (2 * n ** (q + 1))
        for q in range(1, min(spec.d, n) + 1)
    )


def _b_weights(s: int, c2: float, s2: float) -> np.ndarray:
    """Column weights binom(s,j) c2^j s2^(s-j); a binomial pmf, sums to 1."""
    if s == 0:
        return np.ones(1)
    w = np.zeros(s + 1)
    if c2 == 0.0:
        w[0] = s2**s
    elif s2 == 0.0:
        w[s] = c2**s
    else:
        j = np.arange(s + 1)
        w = np.exp(_log_comb_row(s) + j * math.log(c2) + (s - j) * math.log(s2))
    return w


def _sketch_blocks(spec: MixtureSpec, angles: Angles, n: int):
    """Yield (scale_phase, W, P) for each disagreement count t.

    W[i, j] is the real signed weight of the sketch with npm = i, npp = j
    divided by binom(n,t) e^K (those live in the complex scalar scale_phase);
    P[i, j] = sum_q sigma_q^2 f_q / n^q for that sketch.
    """
    beta = angles.beta
    sb, cb = math.sin(beta), math.cos(beta)
    sc = sb * cb
    c2, s2 = cb * cb, sb * sb
    phi = _phi_table(spec, n)
    K = _k_table(spec, angles.gamma, n)
    logCn = _log_comb_row(n)

    log2sc = math.log(2 * abs(sc)) if sc != 0 else -math.inf
    bounds = [logCn[t] + K[t] + (0.0 if t == 0 else t * log2sc) for t in range(n + 1)]
    cutoff = max(bounds) - _LOG_SKIP
    sgn = 1.0 if sc >= 0 else -1.0

    for t in range(n + 1):
        if bounds[t] < cutoff:
            continue
        s = n - t
        if t == 0:
            aw = np.ones(1)
        else:
            aw = np.exp(_log_comb_row(t) + t * math.log(abs(sc)))
            aw[1::2] *= -1.0
        bw = _b_weights(s, c2, s2)
        ia = np.arange(t + 1)
        jj = np.arange(s + 1)
        plus_z = ia[:, None] + jj[None, :]  # +1 count of z
        plus_zp = (t - ia)[:, None] + jj[None, :]  # +1 count of z'
        P = phi[plus_z] - phi[plus_zp]
        W = aw[:, None] * bw[None, :]
        scale_phase = math.exp(logCn[t] + K[t]) * (1j * sgn) ** t
        yield scale_phase, W, P


def _check_budget(n: int, budget: int) -> None:
    if n < 1:
        raise ValidationError(f"need n >= 1, got n={n}")
    if n > budget:
        raise BudgetExceededError(
            f"n={n} exceeds the sketch-sum budget {budget} "
            f"({math.comb(n + 3, 3)} terms); raise the budget explicitly to proceed"
        )


def _require_real(z: complex, what: str) -> float:
    scale = max(abs(z.real), 1e-300)
    if abs(z.imag) > _REL_IMAG_TOL * scale:
        raise ImaginaryResidueError(
            f"{what} has imaginary residue {z.imag:.3e} vs real part {z.real:.3e}"
        )
    return z.real


@dataclass(frozen=True)
class MomentReport:
    """First and second disorder-averaged moments of H/n at finite n."""

    n: int
    first: float
    second: float
    variance: float
    method: str
    spec: MixtureSpec
    angles: Angles
    clamped: bool = False

    def to_line(self) -> str:
        """Single-line record: n first second variance method beta gamma sigmas..."""
        sig = " ".join(repr(s) for s in self.spec.sigmas)
        return (
            f"{self.n} {self.first!r} {self.second!r} {self.variance!r} "
            f"{self.method} {self.angles.beta!r} {self.angles.gamma!r} {sig}"
        )


def _finalize_report(
    n: int, first: float, second: float, method: str, spec: MixtureSpec, angles: Angles
) -> MomentReport:
    variance = second - first * first
    clamped = False
    if variance < 0:
        if variance < -_VARIANCE_ALLOWANCE:
            raise NegativeVarianceError(
                f"variance {variance:.3e} below the -{_VARIANCE_ALLOWANCE} allowance"
            )
        variance = 0.0
        clamped = True
    return MomentReport(
        n=n,
        first=first,
        second=second,
        variance=variance,
        method=method,
        spec=spec,
        angles=angles,
        clamped=clamped,
    )


# -- exact block evaluation of the sketch-sum moments -------------------------
#
# With aw_i = (-1)^i binom(t,i)(i sc)^t and bw_j the Binomial(s, cos^2 b) pmf,
# a moment block at disagreement count t is
#     binom(n,t) e^{K(t)} (i sc)^t sum_{i,j} (-1)^i binom(t,i) bw_j X(i,j)
# where X is P = phi(i+j) - phi(t-i+j) for the first moment and P^2 for the
# second, and phi(u) = sum_q sigma_q^2 F_q(u)/n^q is a polynomial in u of
# degree <= d.  Substituting i -> t-i shows the P-block equals
# (1-(-1)^t) times its phi(i+j) half (odd t only, and identically zero for
# t > d by the finite-difference identity
#     sum_i (-1)^i binom(t,i) i^k = 0 for k < t);
# the P^2 block similarly survives only for even t <= 2d.  The code below
# evaluates the surviving blocks with scaled binomial raw moments
# mu~_m = E[(j/n)^m] and exact integer kernels
#     G_t(e,f) = sum_i (-1)^i binom(t,i) i^e (t-i)^f,
# keeping every intermediate O(1) so no deep float cancellation occurs.


@lru_cache(maxsize=None)
def _binomial_poly(k: int) -> tuple[Fraction, ...]:
    """Coefficients of binom(x, k) = x(x-1)...(x-k+1)/k! in x, exact."""
    coeffs = [Fraction(1)]
    for r in range(k):
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for p, cf in enumerate(coeffs):
            nxt[p + 1] += cf
            nxt[p] -= cf * r
        coeffs = nxt
    fact = Fraction(math.factorial(k))
    return tuple(cf / fact for cf in coeffs)


@lru_cache(maxsize=None)
def _subset_sum_poly(q: int, n: int) -> tuple[Fraction, ...]:
    """Coefficients in u of F_q(u) = sum_k (-1)^(q-k) binom(u,k) binom(n-u,q-k).

    Valid pointwise for integer u in [0, n] whenever q <= n.
    """
    out = [Fraction(0)] * (q + 1)
    for k in range(q + 1):
        left = _binomial_poly(k)
        # binom(n-u, q-k) as a polynomial in u: substitute x = n - u
        right_x = _binomial_poly(q - k)
        right = [Fraction(0)] * (q - k + 1)
        for p, cf in enumerate(right_x):
            # (n - u)^p expanded
            for m in range(p + 1):
                right[m] += cf * math.comb(p, m) * n ** (p - m) * (-1) ** m
        sign = (-1) ** (q - k)
        for a, ca in enumerate(left):
            for b, cb in enumerate(right):
                out[a + b] += sign * ca * cb
    return tuple(out)


def _phi_scaled_coeffs(spec: MixtureSpec, n: int) -> list[float]:
    """phi~_k = n^k [u^k] phi(u); all O(1) regardless of n."""
    d = spec.d
    out = [0.0] * (d + 1)
    for q in range(1, min(d, n) + 1):
        s2 = spec.sigmas[q - 1] ** 2
        if s2 == 0:
            continue
        poly = _subset_sum_poly(q, n)
        for k, cf in enumerate(poly):
            out[k] += s2 * float(cf * Fraction(n) ** k / Fraction(n) ** q)
    return out


@lru_cache(maxsize=None)
def _alt_kernel(t: int, e: int, f: int) -> int:
    """G_t(e,f) = sum_i (-1)^i binom(t,i) i^e (t-i)^f, exact; 0 when e+f < t."""
    return sum(
        (-1) ** i * math.comb(t, i) * i**e * (t - i) ** f for i in range(t + 1)
    )


def _scaled_binomial_moments(s: int, p: float, n: int, mmax: int) -> list[float]:
    """mu~_m = E[(j/n)^m] for j ~ Binomial(s, p), via Stirling partition sums.

    Every term is non-negative, so there is no cancellation.
    """
    # Stirling numbers of the second kind S(m, l), m, l <= mmax
    stir = [[0] * (mmax + 1) for _ in range(mmax + 1)]
    stir[0][0] = 1
    for m in range(1, mmax + 1):
        for l in range(1, m + 1):
            stir[m][l] = stir[m - 1][l - 1] + l * stir[m - 1][l]
    # scaled falling factorials (s)_l / n^l
    fall = [1.0] * (mmax + 1)
    for l in range(1, mmax + 1):
        fall[l] = fall[l - 1] * max(s - (l - 1), 0) / n
    out = []
    for m in range(mmax + 1):
        acc = 0.0
        for l in range(min(m, s), -1, -1):
            acc += stir[m][l] * fall[l] * p**l * float(n) ** (l - m)
        out.append(acc)
    return out


def _weighted_poly_coeffs(
    coeffs: Sequence[float], mu: Sequence[float]
) -> list[float]:
    """rho~_k of rho(i) = E_j[poly(i+j)] from scaled coefficients and moments."""
    deg = len(coeffs) - 1
    out = []
    for k in range(deg + 1):
        acc = 0.0
        for kp in range(k, deg + 1):
            if coeffs[kp]:
                acc += coeffs[kp] * math.comb(kp, k) * mu[kp - k]
        out.append(acc)
    return out


def sketch_moments(
    spec: MixtureSpec, angles: Angles, n: int, *, budget: int = DEFAULT_BUDGET
) -> MomentReport:
    """Exact finite-n first and second moments of H/n via the sketch sum.

    The lambda-derivatives of the generating function are taken analytically
    (first = i gamma sum_sketch w p, second = 2R - gamma^2 sum_sketch w p^2
    with p = sum_q sigma_q^2 f_q / n^q), and the sketch sums are evaluated by
    the exact block collapse described in the module docstring.  Both results
    are real by construction.
    """
    _check_budget(n, budget)
    gamma = angles.gamma
    sb, cb = math.sin(angles.beta), math.cos(angles.beta)
    sc = sb * cb
    c2 = cb * cb
    d = spec.d
    K = _k_table(spec, gamma, n)

    phi = _phi_scaled_coeffs(spec, n)
    tau = [0.0] * (2 * d + 1)
    for a, pa in enumerate(phi):
        if pa:
            for b, pb in enumerate(phi):
                if pb:
                    tau[a + b] += pa * pb

    def block_prefactor(t: int) -> float:
        # binom(n,t)/n^t, computed without large intermediates
        pref = 1.0
        for r in range(t):
            pref *= (n - r) / n
        return pref / math.factorial(t)

    first = 0.0
    for t in range(1, min(d, n) + 1, 2):
        mu = _scaled_binomial_moments(n - t, c2, n, d)
        rho = _weighted_poly_coeffs(phi, mu)
        inner = sum(
            rho[k] * float(_alt_kernel(t, k, 0)) * float(n) ** (t - k)
            for k in range(t, d + 1)
        )
        sign = -1.0 if ((t + 1) // 2) % 2 else 1.0
        first += 2 * gamma * sign * block_prefactor(t) * math.exp(K[t]) * sc**t * inner

    m2 = 0.0
    for t in range(0, min(2 * d, n) + 1, 2):
        mu = _scaled_binomial_moments(n - t, c2, n, 2 * d)
        rho2 = _weighted_poly_coeffs(tau, mu)
        s1 = sum(
            rho2[k] * float(_alt_kernel(t, k, 0)) * float(n) ** (t - k)
            for k in range(t, 2 * d + 1)
        )
        smid = 0.0
        for a in range(d + 1):
            if not phi[a]:
                continue
            for b in range(d + 1):
                if not phi[b]:
                    continue
                for m in range(a + 1):
                    for mp in range(b + 1):
                        e, f = a - m, b - mp
                        if e + f < t:
                            continue
                        smid += (
                            phi[a]
                            * phi[b]
                            * math.comb(a, m)
                            * math.comb(b, mp)
                            * mu[m + mp]
                            * float(_alt_kernel(t, e, f))
                            * float(n) ** (t - e - f)
                        )
        inner2 = 2 * s1 - 2 * smid
        sign = -1.0 if (t // 2) % 2 else 1.0
        m2 += sign * block_prefactor(t) * math.exp(K[t]) * sc**t * inner2

    second = 2 * _lambda_quadratic(spec, n) - gamma * gamma * m2
    return _finalize_report(n, first, second, "sketch", spec, angles)


def generating_function(
    spec: MixtureSpec,
    angles: Angles,
    n: int,
    lam: float,
    *,
    budget: int = DEFAULT_BUDGET,
) -> complex:
    """Disorder-averaged E_J<exp(i lam H/n)> at finite n via the sketch sum.

    Returned values are exact only up to the sign cancellation across sketch
    blocks; accuracy degrades with n (see module docstring).  At lam = 0 the
    value is the squared state norm, 1.
    """
    _check_budget(n, budget)
    if lam == 0.0 and angles.gamma == 0.0:
        # the exponent vanishes for every sketch and the sum telescopes to 1
        return 1.0 + 0.0j
    acc = _Kahan()
    glam = angles.gamma * lam
    for scale_phase, W, P in _sketch_blocks(spec, angles, n):
        acc.add(scale_phase * (W * np.exp(-glam * P)).sum())
    damp = math.exp(-(lam**2) * _lambda_quadratic(spec, n))
    return damp * acc.total


# -- brute-force double-string oracle ----------------------------------------


def _popcounts(values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(values)
    for b in range(n):
        out += (values >> b) & 1
    return out


def _string_subset_tables(n: int, d: int) -> np.ndarray:
    """tables[q][m] = sum_{|S|=q} prod_{i in S} z_i for the string with bitmask m.

    Bit b of m set means z_{b+1} = -1.  Products are accumulated subset by
    subset; nothing here shares code with the binomial formulas.
    """
    size = 1 << n
    idx = np.arange(size)
    bit_signs = [1.0 - 2.0 * ((idx >> b) & 1) for b in range(n)]
    tables = np.zeros((d + 1, size))
    for q in range(1, min(d, n) + 1):
        acc = np.zeros(size)
        for subset in combinations(range(n), q):
            prod = bit_signs[subset[0]].copy()
            for b in subset[1:]:
                prod *= bit_signs[b]
            acc += prod
        tables[q] = acc
    return tables


def _oracle_sums(
    spec: MixtureSpec, angles: Angles, n: int, lam: Optional[float]
) -> tuple[complex, complex, complex, complex, float, float]:
    if n < 1:
        raise ValidationError(f"need n >= 1, got n={n}")
    if n > ORACLE_MAX_N:
        raise TooLargeError(
            f"oracle enumerates 4^n pairs; n={n} exceeds the cap {ORACLE_MAX_N}"
        )
    d = spec.d
    sb, cb = math.sin(angles.beta), math.cos(angles.beta)
    g2 = angles.gamma**2
    tables = _string_subset_tables(n, d)
    sigma2 = spec.sigma_sq()

    size = 1 << n
    phi = np.zeros(size)
    psi = np.zeros(size)
    k_const = 0.0
    for q in range(1, min(d, n) + 1):
        s2 = sigma2[q - 1]
        if s2 == 0:
            continue
        phi += (s2 / n**q) * tables[q]
        psi += (g2 * s2 / n ** (q - 1)) * tables[q]
        k_const -= g2 * s2 * math.comb(n, q) / n ** (q - 1)

    pc = _popcounts(np.arange(size), n)
    wa = cb ** (n - pc) * (1j * sb) ** pc  # <z|e^{i beta B}|(+1)^n>
    wb = wa.conj()  # <(+1)^n|e^{-i beta B}|z'>
    damp = np.exp(psi)

    s0 = _Kahan()
    s1 = _Kahan()
    s2acc = _Kahan()
    sl = _Kahan()
    masks = np.arange(size)
    chunk = max(1, (1 << 22) // size)
    for lo in range(0, size, chunk):
        hi = min(size, lo + chunk)
        rows = masks[lo:hi]
        E = damp[rows[:, None] ^ masks[None, :]]
        W = wa[rows][:, None] * wb[None, :]
        WE = W * E
        D = phi[rows][:, None] - phi[None, :]
        s0.add(WE.sum())
        WED = WE * D
        s1.add(WED.sum())
        s2acc.add((WED * D).sum())
        if lam is not None:
            sl.add((WE * np.exp(-angles.gamma * lam * D)).sum())

    r = _lambda_quadratic(spec, n)
    return s0.total, s1.total, s2acc.total, sl.total, k_const, r


def oracle_moments(spec: MixtureSpec, angles: Angles, n: int) -> MomentReport:
    """First and second moments by direct summation over all string pairs.

    Independent ground truth for ``sketch_moments``: subset sums are taken
    explicitly per string, with no sketch collapse and no binomial formulas.
    """
    s0, s1, s2sum, _, k_const, r = _oracle_sums(spec, angles, n, None)
    ek = math.exp(k_const)
    first = _require_real(1j * angles.gamma * ek * s1, "oracle first moment")
    second = _require_real(
        2 * r * ek * s0 - angles.gamma**2 * ek * s2sum, "oracle second moment"
    )
    return _finalize_report(n, first, second, "oracle", spec, angles)


def oracle_mgf(spec: MixtureSpec, angles: Angles, n: int, lam: float) -> complex:
    """E_J<exp(i lam H/n)> by direct summation over all string pairs."""
    _, _, _, sl, k_const, r = _oracle_sums(spec, angles, n, lam)
    return math.exp(k_const - lam * lam * r) * sl


# -- T-sum building blocks ----------------------------------------------------


def _a_kernel(a: int, t: int) -> int:
    """sum_i (-1)^i binom(t,i) (2i-t)^a, exact; vanishes for t > a."""
    return sum((-1) ** i * math.comb(t, i) * (2 * i - t) ** a for i in range(t + 1))


def a_factor(a: int, t: int, beta: float) -> complex:
    """A^a_t = sum over npm+nmp=t of binom(t,npm)(npm-nmp)^a Q+-^npm Q-+^nmp.

    Exactly zero for t > a; equals a! (-i)^a sin^a(2 beta) at t = a.
    """
    if a < 0 or t < 0:
        raise ValidationError(f"need a, t >= 0, got a={a}, t={t}")
    kern = _a_kernel(a, t)
    if kern == 0:
        return 0j
    sc = math.sin(beta) * math.cos(beta)
    if t == 0:
        return complex(kern)
    if sc == 0.0:
        return 0j
    mag = math.exp(math.log(abs(kern)) + t * math.log(abs(sc)))
    sgn = 1.0 if sc > 0 else -1.0
    return math.copysign(1.0, kern) * mag * (1j * sgn) ** t


def b_factor(b: int, t: int, n: int, beta: float) -> float:
    """B^b_t = sum over npp+nmm=n-t of binom(n-t,npp)(npp-nmm)^b Q++^npp Q--^nmm."""
    if b < 0:
        raise ValidationError(f"need b >= 0, got b={b}")
    if not 0 <= t <= n:
        raise ValidationError(f"need 0 <= t <= n={n}, got t={t}")
    s = n - t
    sb, cb = math.sin(beta), math.cos(beta)
    w = _b_weights(s, cb * cb, sb * sb)
    jj = np.arange(s + 1)
    return float(np.sum(w * (2.0 * jj - s) ** b))


def t_sum(
    spec: MixtureSpec, angles: Angles, n: int, a: int, b: int, n_power: int
) -> complex:
    """Finite-n T^{ab} with prefactor 1/n^n_power, via the A/B factorization.

    Converges for a + b = n_power to
    (-i)^a exp(-2 a gamma^2 sum_q sigma_q^2/(q-1)!) sin^a(2b) cos^b(2b)
    and to zero (like 1/n) for a + b < n_power.
    """
    if a < 0 or b < 0:
        raise ValidationError(f"need a, b >= 0, got a={a}, b={b}")
    if a + b > n_power:
        raise ValidationError(f"need a+b <= n_power, got {a}+{b} > {n_power}")
    if n < 1:
        raise ValidationError(f"need n >= 1, got n={n}")
    K = _k_table(spec, angles.gamma, n)
    sc = math.sin(angles.beta) * math.cos(angles.beta)
    sgn = 1.0 if sc >= 0 else -1.0
    log_n_pow = n_power * math.log(n)
    acc = _Kahan()
    for t in range(n + 1):
        kern = _a_kernel(a, t)
        if kern == 0:
            continue
        if t > 0 and sc == 0.0:
            continue
        bval = b_factor(b, t, n, angles.beta)
        if bval == 0.0:
            continue
        log_mag = (
            math.lgamma(n + 1)
            - math.lgamma(t + 1)
            - math.lgamma(n - t + 1)
            + K[t]
            + math.log(abs(kern))
            + (t * math.log(abs(sc)) if t else 0.0)
            + math.log(abs(bval))
            - log_n_pow
        )
        sign = math.copysign(1.0, kern) * math.copysign(1.0, bval)
        acc.add(sign * math.exp(log_mag) * (1j * sgn) ** t)
    return acc.total
