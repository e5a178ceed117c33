import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msqaoa.closed_form import Angles, damping_rate, energy_sigma_form
from msqaoa.errors import (
    BudgetExceededError,
    ImaginaryResidueError,
    NegativeVarianceError,
    QOutOfRangeError,
    TooLargeError,
    ValidationError,
)
from msqaoa.finite_n import (
    QFactors,
    Sketch,
    _finalize_report,
    _require_real,
    a_factor,
    b_factor,
    f_q,
    f_q_abc,
    g_q,
    generating_function,
    oracle_mgf,
    oracle_moments,
    sketch_moments,
    t_sum,
)
from msqaoa.model import make_mixture_spec

SK = make_mixture_spec(2, [0, 1])
MIX3 = make_mixture_spec(3, [1 / 3, 1 / 2, 1.0])


def direct_pair_sums(z, zp, q):
    f = g = 0
    for subset in combinations(range(len(z)), q):
        zs = zps = 1
        for i in subset:
            zs *= z[i]
            zps *= zp[i]
        f += zs - zps
        g += (zs - zps) ** 2
    return f, g


def realize(sketch):
    z = [1] * (sketch.npp + sketch.npm) + [-1] * (sketch.nmp + sketch.nmm)
    zp = (
        [1] * sketch.npp
        + [-1] * sketch.npm
        + [1] * sketch.nmp
        + [-1] * sketch.nmm
    )
    return z, zp


def all_sketches(n):
    for npp in range(n + 1):
        for npm in range(n - npp + 1):
            for nmp in range(n - npp - npm + 1):
                yield Sketch(npp, npm, nmp, n - npp - npm - nmp)


class TestSketchAndQ:
    def test_of_pair(self):
        sk = Sketch.of_pair([1, 1, -1, -1, 1], [1, -1, 1, -1, -1])
        assert (sk.npp, sk.npm, sk.nmp, sk.nmm) == (1, 2, 1, 1)
        assert sk.n == 5 and sk.t == 3

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            Sketch(1, -1, 0, 0)

    @given(st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
    def test_qfactor_invariants(self, beta):
        q = QFactors.from_beta(beta)
        assert q.qpp + q.qmm == pytest.approx(1.0, abs=1e-15)
        assert q.qpm + q.qmp == 0
        assert q.qpp == pytest.approx(math.cos(beta) ** 2, abs=1e-15)


class TestFq:
    def test_q1_formula(self):
        for sk in all_sketches(5):
            assert f_q(1, sk) == 2 * (sk.npm - sk.nmp)

    def test_symmetric_sketch_vanishes(self):
        for q in range(0, 5):
            assert f_q(q, Sketch(2, 1, 1, 2)) == 0

    def test_q2_n4_exhaustive(self):
        for sk in all_sketches(4):
            z, zp = realize(sk)
            want, _ = direct_pair_sums(z, zp, 2)
            assert f_q(2, sk) == want

    def test_out_of_range(self):
        with pytest.raises(QOutOfRangeError):
            f_q(5, Sketch(1, 1, 1, 1))
        with pytest.raises(QOutOfRangeError):
            f_q(-1, Sketch(1, 1, 1, 1))

    def test_realization_independence(self):
        # 100 random pairs per (n, q): the sketch determines the pair sums
        rng = np.random.default_rng(42)
        for n in range(2, 11):
            for _ in range(100):
                z = [int(v) for v in rng.choice([-1, 1], n)]
                zp = [int(v) for v in rng.choice([-1, 1], n)]
                sk = Sketch.of_pair(z, zp)
                for q in range(1, min(4, n) + 1):
                    fd, gd = direct_pair_sums(z, zp, q)
                    assert f_q(q, sk) == fd
                    assert g_q(q, sk.t, n) == gd

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
    @settings(max_examples=60)
    def test_swap_antisymmetry(self, npp, npm, nmp, nmm):
        # exchanging z and z' swaps npm with nmp and negates every f_q
        sk = Sketch(npp, npm, nmp, nmm)
        swapped = Sketch(npp, nmp, npm, nmm)
        for q in range(1, sk.n + 1):
            assert f_q(q, sk) == -f_q(q, swapped)


class TestGq:
    def test_q1(self):
        for t in range(7):
            assert g_q(1, t, 6) == 4 * t

    def test_t0_vanishes(self):
        for q in range(1, 7):
            assert g_q(q, 0, 8) == 0

    def test_hand_value(self):
        assert g_q(2, 2, 6) == 32

    def test_range_errors(self):
        with pytest.raises(QOutOfRangeError):
            g_q(0, 1, 4)
        with pytest.raises(ValidationError):
            g_q(2, 9, 4)


class TestFqAbc:
    def test_q1(self):
        assert f_q_abc(1) == {(1, 0, 0): Fraction(2)}

    def test_q2_even_a_vanishes(self):
        coeffs = f_q_abc(2)
        assert coeffs.get((2, 0, 0), Fraction(0)) == 0

    def test_q3_leading(self):
        coeffs = f_q_abc(3)
        assert coeffs[(1, 2, 0)] == Fraction(2, 1 * 2)  # 2/(1! 2!) = 1
        assert coeffs[(3, 0, 0)] == Fraction(2, 6)  # 2/(3! 0!) = 1/3

    @pytest.mark.parametrize("q", [1, 2, 3, 4, 5])
    def test_leading_structure(self, q):
        coeffs = f_q_abc(q)
        for a in range(q + 1):
            for b in range(q + 1 - a):
                c = q - a - b
                want = (
                    Fraction(2, math.factorial(a) * math.factorial(b))
                    if a % 2 == 1 and c == 0
                    else Fraction(0)
                )
                assert coeffs.get((a, b, c), Fraction(0)) == want

    def test_reconstructs_f_q(self):
        rng = np.random.default_rng(1)
        for q in (2, 3, 4):
            coeffs = f_q_abc(q)
            for _ in range(25):
                counts = [int(v) for v in rng.integers(0, 5, 4)]
                sk = Sketch(*counts)
                x, y, n = sk.npm - sk.nmp, sk.npp - sk.nmm, sk.n
                val = sum(cf * x**a * y**b * n**c for (a, b, c), cf in coeffs.items())
                if q <= n:
                    assert val == f_q(q, sk)


class TestGeneratingFunction:
    def test_normalization(self):
        rng = np.random.default_rng(9)
        for n in (2, 4, 8, 16, 32):
            d = int(rng.integers(1, 4))
            spec = make_mixture_spec(d, rng.uniform(0.2, 1.2, d))
            ang = Angles(float(rng.uniform(-1.5, 1.5)), float(rng.uniform(-1.5, 1.5)))
            gf = generating_function(spec, ang, n, 0.0)
            assert abs(gf - 1.0) < 1e-9

    def test_degenerate_exact_one(self):
        assert generating_function(SK, Angles(0.4, 0.0), 12, 0.0) == 1.0 + 0.0j

    def test_matches_oracle(self):
        ang = Angles(0.3, 0.4)
        gf = generating_function(SK, ang, 6, 0.7)
        ogf = oracle_mgf(SK, ang, 6, 0.7)
        assert abs(gf - ogf) <= 1e-10 * max(abs(gf), abs(ogf))

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            generating_function(SK, Angles(0.3, 0.4), 600, 0.0)


class TestMoments:
    def test_oracle_equivalence_small_n(self):
        rng = np.random.default_rng(31)
        for n in range(2, 9):
            d = int(rng.integers(1, 4))
            spec = make_mixture_spec(d, rng.uniform(0.2, 1.2, d))
            ang = Angles(float(rng.uniform(0.1, 0.6)), float(rng.uniform(-0.8, -0.2)))
            sk = sketch_moments(spec, ang, n)
            orc = oracle_moments(spec, ang, n)
            assert abs(sk.first - orc.first) <= 1e-10 * max(abs(orc.first), 1e-6)
            assert abs(sk.second - orc.second) <= 1e-10 * max(abs(orc.second), 1e-6)

    def test_one_spin_closed_form(self):
        # expectation for a single spin, by direct integration over the coupling:
        # E_J<H> = 2 g s^2 exp(-2 g^2 s^2) sin(2b); the second moment is s^2
        spec = make_mixture_spec(1, [0.8])
        b, g = 0.33, -0.52
        want = 2 * g * 0.8**2 * math.exp(-2 * g * g * 0.8**2) * math.sin(2 * b)
        for fn in (oracle_moments, sketch_moments):
            rep = fn(spec, Angles(b, g), 1)
            assert rep.first == pytest.approx(want, rel=1e-12)
            assert rep.second == pytest.approx(0.8**2, rel=1e-12)

    def test_gamma_zero(self):
        rep = sketch_moments(MIX3, Angles(0.42, 0.0), 9)
        assert rep.first == 0.0
        want = sum(
            math.comb(9, q) * MIX3.sigmas[q - 1] ** 2 / 9 ** (q + 1)
            for q in range(1, 4)
        )
        assert rep.second == pytest.approx(want, rel=1e-14)
        orc = oracle_moments(MIX3, Angles(0.42, 0.0), 9)
        assert orc.first == 0.0

    def test_quadrature_cross_check(self):
        # three-way check: statevector + Gauss-Hermite integration over the
        # couplings vs both analytic paths, n = 2
        from numpy.polynomial.hermite_e import hermegauss
        from msqaoa.model import ProblemInstance
        from msqaoa.simulator import expectation

        ang = Angles(math.pi / 8, -0.5)
        nodes, weights = hermegauss(80)
        weights = weights / math.sqrt(2 * math.pi)
        first = second = 0.0
        for j, w in zip(nodes, weights):
            inst = ProblemInstance(
                n=2, spec=SK, seed=0, terms={1: 0.0, 2: 0.0, 3: float(j)}
            )
            h, h2 = expectation(inst, ang)
            first += w * h / 2
            second += w * h2 / 4
        for fn in (oracle_moments, sketch_moments):
            rep = fn(SK, ang, 2)
            assert rep.first == pytest.approx(first, rel=1e-12)
            assert rep.second == pytest.approx(second, rel=1e-12)

    def test_variance_positive_and_shrinking(self):
        ang = Angles(math.pi / 8, -0.5)
        variances = [sketch_moments(SK, ang, n).variance for n in (8, 16, 32, 64)]
        assert all(v > 0 for v in variances)
        assert all(a > b for a, b in zip(variances, variances[1:]))

    def test_budget_checks(self):
        with pytest.raises(BudgetExceededError):
            sketch_moments(SK, Angles(0.3, 0.4), 513)
        # explicit budget override admits larger n
        rep = sketch_moments(SK, Angles(0.3, 0.4), 600, budget=1024)
        assert math.isfinite(rep.first)

    def test_oracle_cap(self):
        with pytest.raises(TooLargeError):
            oracle_moments(SK, Angles(0.3, 0.4), 15)

    def test_report_line_format(self):
        rep = sketch_moments(SK, Angles(0.3, 0.4), 6)
        fields = rep.to_line().split()
        assert fields[0] == "6"
        assert float(fields[1]) == rep.first
        assert float(fields[2]) == rep.second
        assert float(fields[3]) == rep.variance
        assert fields[4] == "sketch"
        assert float(fields[5]) == 0.3 and float(fields[6]) == 0.4
        assert [float(v) for v in fields[7:]] == [0.0, 1.0]


class TestReportGuards:
    def test_variance_clamp(self):
        rep = _finalize_report(4, 1.0, 1.0 - 5e-11, "sketch", SK, Angles(0.1, 0.1))
        assert rep.variance == 0.0 and rep.clamped

    def test_variance_error(self):
        with pytest.raises(NegativeVarianceError):
            _finalize_report(4, 1.0, 1.0 - 1e-8, "sketch", SK, Angles(0.1, 0.1))

    def test_require_real(self):
        assert _require_real(1.5 + 1e-12j, "x") == 1.5
        with pytest.raises(ImaginaryResidueError):
            _require_real(1.5 + 1e-6j, "x")


class TestTSum:
    def test_a_factor_zero_above_diagonal(self):
        for a in range(1, 4):
            for t in range(a + 1, a + 4):
                assert a_factor(a, t, 0.37) == 0

    def test_a_factor_diagonal(self):
        for a in range(1, 5):
            want = math.factorial(a) * (-1j) ** a * math.sin(2 * 0.37) ** a
            assert abs(a_factor(a, a, 0.37) - want) < 1e-12

    def test_b_factor_values(self):
        assert b_factor(0, 3, 20, 0.4) == pytest.approx(1.0, rel=1e-13)
        # first moment of (npp - nmm) under the Q weights is (n-t) cos(2b)
        assert b_factor(1, 3, 100, 0.3) == pytest.approx(
            97 * math.cos(0.6), rel=1e-12
        )

    def test_limit_case(self):
        ang = Angles(0.3, 0.45)
        limit = (
            (-1j)
            * math.exp(-2 * ang.gamma**2 * damping_rate(SK))
            * math.sin(2 * ang.beta)
        )
        e256 = abs(t_sum(SK, ang, 256, 1, 0, 1) - limit)
        e512 = abs(t_sum(SK, ang, 512, 1, 0, 1) - limit)
        assert e512 < e256 < 0.05

    def test_vanishing_case_halves(self):
        ang = Angles(0.3, 0.45)
        for a, b, p in ((0, 0, 1), (1, 0, 2)):
            r = abs(t_sum(SK, ang, 512, a, b, p)) / abs(t_sum(SK, ang, 256, a, b, p))
            assert 0.35 <= r <= 0.65

    def test_preconditions(self):
        with pytest.raises(ValidationError):
            t_sum(SK, Angles(0.3, 0.4), 16, 2, 1, 2)
        with pytest.raises(ValidationError):
            t_sum(SK, Angles(0.3, 0.4), 16, -1, 0, 1)


class TestConvergenceTrend:
    def test_first_moment_approaches_closed_form(self):
        ang = Angles(math.pi / 8, -0.5)
        limit = energy_sigma_form(SK, ang)
        discs = [abs(sketch_moments(SK, ang, n).first - limit) for n in (16, 32, 64, 128)]
        assert all(a > b for a, b in zip(discs, discs[1:]))
        assert discs[-1] < discs[0] / 4
