"""Mixed-spin SK disorder specification, instance sampling, and cost evaluation.

A model is specified by a degree bound ``d`` and per-degree standard
deviations ``sigma_q`` (q = 1..d) of the Gaussian couplings J_S attached to
every size-q subset S of spins.  The classical cost of a spin string
z in {+1,-1}^n is

    H(z) = sum_q n^((1-q)/2) * sum_{|S|=q} J_S * prod_{i in S} z_i.

The equivalent "mixture function" notation uses coefficients
c_q = sigma_q / sqrt(q!) and xi(x) = sum_q c_q^2 x^q.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllZeroError,
    DegreeZeroError,
    LengthMismatchError,
    NegativeSigmaError,
    NonBinaryEntryError,
    ParseError,
    TooFewSpinsError,
)

__all__ = [
    "MixtureSpec",
    "MixtureFunction",
    "ProblemInstance",
    "make_mixture_spec",
    "from_mixture_function",
    "sample_instance",
    "cost",
    "write_instance",
    "read_instance",
    "instance_to_text",
    "instance_from_text",
    "estimate_spec",
    "FitResult",
    "mask_from_indices",
    "indices_from_mask",
]

RNG_ALGORITHM = "PCG64"  # recorded in run manifests; seeding is documented below


@dataclass(frozen=True)
class MixtureSpec:
    """Disorder law: degree bound d and standard deviations sigma_1..sigma_d.

    ``sigmas[q-1]`` is the standard deviation of the couplings on subsets of
    size q, in dimensionless energy units.
    """

    d: int
    sigmas: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.d < 1:
            raise DegreeZeroError(f"degree bound must be >= 1, got d={self.d}")
        if len(self.sigmas) != self.d:
            raise LengthMismatchError(
                f"expected {self.d} sigmas, got {len(self.sigmas)}"
            )
        if any(s < 0 or not math.isfinite(s) for s in self.sigmas):
            raise NegativeSigmaError(f"sigmas must be finite and >= 0: {self.sigmas}")
        if all(s == 0 for s in self.sigmas):
            raise AllZeroError("all sigmas are zero; the disorder is degenerate")

    def mixture_function(self) -> "MixtureFunction":
        """Equivalent mixture-function view, c_q = sigma_q / sqrt(q!)."""
        cs = tuple(s / math.sqrt(math.factorial(q + 1)) for q, s in enumerate(self.sigmas))
        return MixtureFunction(cs)

    def sigma_sq(self) -> tuple[float, ...]:
        return tuple(s * s for s in self.sigmas)


@dataclass(frozen=True)
class MixtureFunction:
    """Coefficients c_q of xi(x) = sum_q c_q^2 x^q, q = 1..d."""

    cs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.cs:
            raise DegreeZeroError("mixture function needs at least one coefficient")
        if any(c < 0 or not math.isfinite(c) for c in self.cs):
            raise NegativeSigmaError(f"coefficients must be finite and >= 0: {self.cs}")
        if all(c == 0 for c in self.cs):
            raise AllZeroError("all mixture coefficients are zero")

    @property
    def d(self) -> int:
        return len(self.cs)

    def xi(self, x: complex) -> complex:
        """Evaluate xi at a real or complex argument (Horner's scheme)."""
        acc = 0.0 + 0.0j
        for c in reversed(self.cs):
            acc = (acc + c * c) * x
        return acc

    def xi_prime_at_one(self) -> float:
        """xi'(1) = sum_q q c_q^2."""
        return sum((q + 1) * c * c for q, c in enumerate(self.cs))

    def to_spec(self) -> MixtureSpec:
        """Equivalent sigma view, sigma_q = c_q * sqrt(q!)."""
        sigmas = tuple(c * math.sqrt(math.factorial(q + 1)) for q, c in enumerate(self.cs))
        return MixtureSpec(len(self.cs), sigmas)


def make_mixture_spec(d: int, sigmas: Sequence[float]) -> MixtureSpec:
    """Validate and build a MixtureSpec from per-degree standard deviations."""
    if d < 1:
        raise DegreeZeroError(f"degree bound must be >= 1, got d={d}")
    return MixtureSpec(d, tuple(float(s) for s in sigmas))


def from_mixture_function(d: int, cs: Sequence[float]) -> MixtureSpec:
    """Build a MixtureSpec from mixture coefficients, sigma_q = c_q sqrt(q!)."""
    if d < 1:
        raise DegreeZeroError(f"degree bound must be >= 1, got d={d}")
    if len(cs) != d:
        raise LengthMismatchError(f"expected {d} coefficients, got {len(cs)}")
    return MixtureFunction(tuple(float(c) for c in cs)).to_spec()


def mask_from_indices(indices: Iterable[int]) -> int:
    """Bitmask for a subset of 1-based spin indices."""
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    """Sorted 1-based spin indices of a subset bitmask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class ProblemInstance:
    """One sampled realization of the disorder for n spins.

    ``terms`` maps subset bitmasks (bit i-1 set <=> spin i in S) to the raw
    coupling J_S.  All binom(n, q) couplings for q = 1..d are materialized,
    including exact zeros for degrees with sigma_q = 0.
    """

    n: int
    spec: MixtureSpec
    seed: int
    terms: dict[int, float] = field(repr=False)

    def __post_init__(self) -> None:
        if self.n < self.spec.d:
            raise TooFewSpinsError(f"n={self.n} < d={self.spec.d}")
        if self.n > 63:
            raise TooFewSpinsError(
                f"bitmask subset storage supports n <= 63, got n={self.n}"
            )
        counts = [0] * (self.spec.d + 1)
        top = (1 << self.n) - 1
        for mask in self.terms:
            if mask == 0 or mask & ~top:
                raise LengthMismatchError(f"subset mask {mask:#x} outside 1..n={self.n}")
            q = mask.bit_count()
            if q > self.spec.d:
                raise LengthMismatchError(f"subset of size {q} exceeds d={self.spec.d}")
            counts[q] += 1
        for q in range(1, self.spec.d + 1):
            if counts[q] != math.comb(self.n, q):
                raise LengthMismatchError(
                    f"degree {q}: expected {math.comb(self.n, q)} couplings, "
                    f"got {counts[q]}"
                )

    def couplings_of_degree(self, q: int) -> list[tuple[int, float]]:
        """(mask, J_S) pairs with |S| = q, sorted by mask."""
        return sorted((m, j) for m, j in self.terms.items() if m.bit_count() == q)


def _instance_rng(spec: MixtureSpec, n: int, seed: int) -> np.random.Generator:
    # PCG64 seeded from SHA-256 of the canonical (spec, n, seed) encoding, so
    # sampling is a pure function of its arguments across runs and platforms.
    tag = f"d={spec.d};sigmas={','.join(repr(s) for s in spec.sigmas)};n={n};seed={seed}"
    digest = hashlib.sha256(tag.encode()).digest()
    entropy = int.from_bytes(digest, "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def sample_instance(spec: MixtureSpec, n: int, seed: int) -> ProblemInstance:
    """Sample all couplings J_S ~ N(0, sigma_{|S|}^2) i.i.d., deterministically.

    Subsets are enumerated degree by degree in lexicographic index order, so
    the draw order (and hence the instance) is pinned by (spec, n, seed).
    """
    if n < spec.d:
        raise TooFewSpinsError(f"n={n} < d={spec.d}")
    rng = _instance_rng(spec, n, seed)
    terms: dict[int, float] = {}
    for q in range(1, spec.d + 1):
        subsets = list(combinations(range(1, n + 1), q))
        sigma = spec.sigmas[q - 1]
        if sigma > 0:
            draws = rng.normal(0.0, sigma, size=len(subsets))
        else:
            draws = np.zeros(len(subsets))
        for s, j in zip(subsets, draws):
            terms[mask_from_indices(s)] = float(j)
    return ProblemInstance(n=n, spec=spec, seed=seed, terms=terms)


def _check_spins(z: Sequence[int], n: int) -> None:
    if len(z) != n:
        raise LengthMismatchError(f"spin string has {len(z)} entries, expected {n}")
    for v in z:
        if v != 1 and v != -1:
            raise NonBinaryEntryError(f"spin entries must be +1 or -1, got {v!r}")


def cost(instance: ProblemInstance, z: Sequence[int]) -> float:
    """H(z) = sum_q n^((1-q)/2) sum_{|S|=q} J_S z_S for z in {+1,-1}^n."""
    _check_spins(z, instance.n)
    n = instance.n
    scale = [0.0] * (instance.spec.d + 1)
    for q in range(1, instance.spec.d + 1):
        scale[q] = n ** ((1 - q) / 2)
    total = 0.0
    for mask, j in instance.terms.items():
        if j == 0.0:
            continue
        zs = 1
        m = mask
        i = 0
        while m:
            if m & 1 and z[i] == -1:
                zs = -zs
            m >>= 1
            i += 1
        total += scale[mask.bit_count()] * j * zs
    return total


# -- serialization ---------------------------------------------------------
#
# Line-oriented text format:
#   n=<n> d=<d> sigmas=<comma list> seed=<hex>
#   <q> <idx1,...,idxq> <value>
# Values use repr() so read/write round-trips bit-exactly.


def instance_to_text(instance: ProblemInstance) -> str:
    sig = ",".join(repr(s) for s in instance.spec.sigmas)
    lines = [f"n={instance.n} d={instance.spec.d} sigmas={sig} seed={instance.seed:x}"]
    for q in range(1, instance.spec.d + 1):
        for mask, j in instance.couplings_of_degree(q):
            idx = ",".join(str(i) for i in indices_from_mask(mask))
            lines.append(f"{q} {idx} {j!r}")
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> ProblemInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty instance file")
    header = lines[0]
    try:
        fields = dict(part.split("=", 1) for part in header.split())
        n = int(fields["n"])
        d = int(fields["d"])
        sigmas = tuple(float(s) for s in fields["sigmas"].split(","))
        seed = int(fields["seed"], 16)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad instance header: {header!r}") from exc
    try:
        spec = MixtureSpec(d, sigmas)
    except ValueError as exc:
        raise ParseError(f"bad spec in header: {exc}") from exc
    terms: dict[int, float] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError(f"bad coupling line: {ln!r}")
        try:
            q = int(parts[0])
            idx = tuple(int(i) for i in parts[1].split(","))
            value = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad coupling line: {ln!r}") from exc
        if len(idx) != q or any(not 1 <= i <= n for i in idx) or list(idx) != sorted(set(idx)):
            raise ParseError(f"bad subset in line: {ln!r}")
        terms[mask_from_indices(idx)] = value
    try:
        return ProblemInstance(n=n, spec=spec, seed=seed, terms=terms)
    except ValueError as exc:
        raise ParseError(f"inconsistent instance file: {exc}") from exc


def write_instance(instance: ProblemInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance_to_text(instance))


def read_instance(path) -> ProblemInstance:
    with open(path) as fh:
        return instance_from_text(fh.read())


# -- spec fitting ----------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Per-degree standard deviations estimated from a concrete instance.

    The estimate assumes the stored couplings follow this package's
    normalization (raw J_S, with the n^((1-q)/2) scaling applied only inside
    the cost function).  For Hamiltonians written in another scaling
    convention the recovered sigmas differ by powers of n; the caller must
    know which convention the file uses.  See the ``scaling`` warning.
    """

    spec: MixtureSpec
    warnings: tuple[str, ...]


def estimate_spec(instance: ProblemInstance) -> FitResult:
    """Fit a MixtureSpec to an instance via per-degree zero-mean sample stds."""
    warnings = [
        "scaling: sigmas assume couplings are stored unscaled; "
        "the n^((1-q)/2) prefactor is applied at cost-evaluation time"
    ]
    sigmas = []
    for q in range(1, instance.spec.d + 1):
        vals = np.array([j for _, j in instance.couplings_of_degree(q)])
        m = len(vals)
        est = float(np.sqrt(np.mean(vals**2))) if m else 0.0
        sigmas.append(est)
        if m < 2:
            warnings.append(f"InsufficientSamples: degree {q} has only {m} coupling(s)")
            continue
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1)) / math.sqrt(m)
        if se > 0 and abs(mean) > 3 * se:
            warnings.append(
                f"NonZeroMean: degree {q} sample mean {mean:.3g} exceeds 3 standard "
                f"errors ({se:.3g}); the zero-mean assumption looks violated"
            )
    if all(s == 0 for s in sigmas):
        # keep the fit usable even for a degenerate file: report the original
        warnings.append("AllZero: every estimated sigma is zero; returning input spec")
        return FitResult(instance.spec, tuple(warnings))
    return FitResult(MixtureSpec(instance.spec.d, tuple(sigmas)), tuple(warnings))
