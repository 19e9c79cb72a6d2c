"""Exact rational certification: PSD decisions, sum-of-squares identities,
Farkas re-checking, and numeric instance evaluation."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from ncagm import (
    CertificateError,
    RationalMatrix,
    assemble_sdp,
    build_m2_certificate,
    distinct_product_sum,
    eval_instance,
    extract_farkas,
    farkas_check,
    psd_check_exact,
    verify_sos,
)
from ncagm.certify import (
    SosCertificate,
    load_instance,
    sos_certificate_from_json,
    sos_certificate_to_json,
)
from ncagm.sdp import FarkasCertificate

N_CASES = 1000


def random_rational_symmetric(rng, dim, lo=-5, hi=5):
    raw = [
        [Fraction(rng.randint(lo * 6, hi * 6), rng.randint(1, 6)) for _ in range(dim)]
        for _ in range(dim)
    ]
    sym = [[raw[i][j] + raw[j][i] for j in range(dim)] for i in range(dim)]
    return RationalMatrix(sym)


class TestRationalMatrix:
    def test_symmetry_enforced(self):
        with pytest.raises(ValueError):
            RationalMatrix([[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            RationalMatrix([[1, 2, 3], [2, 1, 0]])

    def test_identity(self):
        eye = RationalMatrix.identity(3)
        assert eye[0, 0] == 1 and eye[0, 1] == 0
        assert np.allclose(eye.to_float(), np.eye(3))


class TestPsdCheckExact:
    def test_identity_true(self):
        for dim in (1, 2, 5):
            assert psd_check_exact(RationalMatrix.identity(dim))

    def test_displayed_gram_block_true(self):
        y1 = RationalMatrix(
            [
                [Fraction(5, 4), Fraction(-3, 4), Fraction(1, 4)],
                [Fraction(-3, 4), Fraction(1, 2), 0],
                [Fraction(1, 4), 0, Fraction(1, 2)],
            ]
        )
        assert psd_check_exact(y1)
        assert y1 == build_m2_certificate(2).gram_blocks[0]

    def test_indefinite_false(self):
        assert not psd_check_exact(RationalMatrix([[1, 2], [2, 1]]))

    def test_zero_pivot_handling(self):
        # PSD with an exactly zero diagonal entry forces that row to vanish
        assert psd_check_exact(RationalMatrix([[0, 0], [0, 1]]))
        assert not psd_check_exact(RationalMatrix([[0, 1], [1, 1]]))

    def test_agrees_with_float_eigenvalues(self):
        rng = random.Random(31)
        agreements = 0
        for _ in range(N_CASES):
            dim = rng.randint(1, 4)
            mat = random_rational_symmetric(rng, dim)
            exact = psd_check_exact(mat)
            min_eig = float(np.linalg.eigvalsh(mat.to_float()).min())
            if abs(min_eig) < 1e-10:
                continue  # float check inconclusive near zero
            assert exact == (min_eig > 0), f"{mat!r}: exact {exact}, eig {min_eig}"
            agreements += 1
        assert agreements > N_CASES // 2

    def test_gram_psd_matrices_pass(self):
        rng = random.Random(32)
        for _ in range(200):
            dim = rng.randint(1, 4)
            g = [
                [Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(dim)]
                for _ in range(dim)
            ]
            prod = [
                [sum(g[i][k] * g[j][k] for k in range(dim)) for j in range(dim)]
                for i in range(dim)
            ]
            assert psd_check_exact(RationalMatrix(prod))


class TestSosCertificates:
    def test_m2_family_exact(self):
        for n in range(2, 8):
            cert = build_m2_certificate(n)
            assert cert.lam == Fraction(n * (n - 1), 4)
            assert verify_sos(cert)

    def test_n2_matches_displayed_values(self):
        cert = build_m2_certificate(2)
        y1 = cert.gram_blocks[0]
        assert y1[0, 0] == Fraction(5, 4)
        assert y1[0, 1] == Fraction(-3, 4)
        assert y1[0, 2] == Fraction(1, 4)
        assert cert.lam == Fraction(1, 2)

    def test_n4_first_row(self):
        y1 = build_m2_certificate(4).gram_blocks[0]
        expected = [
            Fraction(15, 4),
            Fraction(-9, 8),
            Fraction(-1, 8),
            Fraction(-1, 8),
            Fraction(-1, 8),
        ]
        assert [y1[0, j] for j in range(5)] == expected

    def test_n7_lambda(self):
        cert = build_m2_certificate(7)
        assert cert.lam == Fraction(21, 2)
        assert verify_sos(cert)

    def test_tampered_lambda_fails(self):
        cert = build_m2_certificate(3)
        bad = SosCertificate(
            m=cert.m, n=cert.n, sign=cert.sign,
            lam=Fraction(1, 4), gram_blocks=cert.gram_blocks,
        )
        assert not verify_sos(bad)

    def test_tampered_block_fails(self):
        cert = build_m2_certificate(3)
        entries = [row[:] for row in cert.gram_blocks[0].entries]
        entries[1][2] += 1
        entries[2][1] += 1
        blocks = [RationalMatrix(entries)] + cert.gram_blocks[1:]
        bad = SosCertificate(m=2, n=3, sign=1, lam=cert.lam, gram_blocks=blocks)
        assert not verify_sos(bad)

    def test_wrong_block_count_rejected(self):
        cert = build_m2_certificate(3)
        bad = SosCertificate(
            m=2, n=3, sign=1, lam=cert.lam, gram_blocks=cert.gram_blocks[:-1]
        )
        with pytest.raises(ValueError):
            verify_sos(bad)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            build_m2_certificate(1)

    def test_json_round_trip(self):
        cert = build_m2_certificate(4)
        back = sos_certificate_from_json(sos_certificate_to_json(cert))
        assert back.lam == cert.lam
        assert back.gram_blocks == cert.gram_blocks
        assert verify_sos(back)


class TestFarkasCheck:
    def test_round_trip_2_2(self):
        problem = assemble_sdp(2, 2, 1)
        cert = extract_farkas(problem, 0.4)
        margin = farkas_check(problem, cert)
        assert margin > 0
        assert margin == pytest.approx(cert.margin, abs=1e-9)

    def test_zero_vector_not_a_certificate(self):
        problem = assemble_sdp(2, 2, 1)
        cert = FarkasCertificate(
            lambda_target=0.4,
            y0=0.0,
            y=np.zeros(problem.num_constraints),
            margin=0.0,
            psd_defect=0.0,
        )
        margin = farkas_check(problem, cert)
        assert margin == 0.0

    def test_sign_flip_invalidates(self):
        problem = assemble_sdp(2, 2, 1)
        cert = extract_farkas(problem, 0.4)
        y = cert.y.copy()
        k = int(np.abs(y).argmax())
        y[k] = -y[k]
        flipped = FarkasCertificate(
            lambda_target=cert.lambda_target,
            y0=cert.y0,
            y=y,
            margin=cert.margin,
            psd_defect=cert.psd_defect,
        )
        try:
            margin = farkas_check(problem, flipped)
            assert margin <= 0
        except CertificateError:
            pass  # the PSD-defect assertion tripping is equally acceptable

    def test_wrong_length_rejected(self):
        problem = assemble_sdp(2, 2, 1)
        cert = FarkasCertificate(0.4, -1.0, np.zeros(3), 0.0, 0.0)
        with pytest.raises(ValueError):
            farkas_check(problem, cert)


class TestEvalInstance:
    def test_identity_tuple_tight(self):
        for n in range(2, 5):
            for m in range(1, n + 1):
                report = eval_instance([np.eye(3)] * n, m)
                bound = math.factorial(n) // math.factorial(n - m)
                assert report.feasible
                assert report.max_eig == pytest.approx(bound, abs=1e-12)
                assert not report.violations

    def test_sharp_pair(self):
        a1 = np.diag([1.5, 0.0])
        a2 = np.array([[1 / 6, np.sqrt(2) / 3], [np.sqrt(2) / 3, 4 / 3]])
        report = eval_instance([a1, a2], 2)
        assert report.feasible
        assert report.min_eig == pytest.approx(-0.5, abs=1e-9)
        assert not report.violations
        assert report.improved_bounds["improved m=2 lower bound"] == 0.5

    def test_random_psd_tuples_no_violations(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n = 4
            m = int(rng.integers(2, 4))
            mats = []
            for _ in range(n):
                g = rng.standard_normal((3, 3))
                mats.append(g @ g.T)
            total = sum(mats)
            scale = n / max(float(np.linalg.eigvalsh(total).max()), 1e-12)
            mats = [scale * a for a in mats]
            report = eval_instance(mats, m)
            assert report.feasible
            assert not report.violations

    def test_scalar_reduction(self):
        rng = random.Random(78)
        for _ in range(N_CASES):
            n = rng.randint(2, 5)
            m = rng.randint(1, n)
            raw = [rng.random() for _ in range(n)]
            scale = n * rng.random() / max(sum(raw), 1e-12)
            mats = [np.array([[v * scale]]) for v in raw]
            report = eval_instance(mats, m)
            assert report.feasible
            assert not report.violations

    def test_infeasible_inputs_flagged(self):
        report = eval_instance([np.diag([-1.0, 0.0]), np.eye(2)], 2)
        assert not report.inputs_psd
        assert not report.feasible
        report = eval_instance([3 * np.eye(2), 3 * np.eye(2)], 2)
        assert not report.sum_bounded

    def test_dimension_errors(self):
        with pytest.raises(ValueError):
            eval_instance([np.eye(2), np.eye(3)], 2)
        with pytest.raises(ValueError):
            eval_instance([np.eye(2)], 2)

    def test_load_instance(self, tmp_path):
        import json

        path = tmp_path / "inst.json"
        payload = {"n": 2, "m": 2, "matrices": [[1, 0, 0, 1], [1, 0, 0, 1]]}
        path.write_text(json.dumps(payload))
        matrices, m = load_instance(str(path))
        assert m == 2
        assert np.allclose(matrices[0], np.eye(2))


class TestSpectralNormProperty:
    def test_anticommutator_bounds(self):
        # ||AB + BA|| <= ||A^2 + B^2|| holds for all symmetric pairs;
        # 2||AB + BA|| <= ||(A+B)^2|| needs PSD inputs (scalar pair (1, -1)
        # already breaks it for indefinite matrices)
        rng = np.random.default_rng(79)
        for _ in range(N_CASES):
            dim = int(rng.integers(1, 5))
            a = rng.standard_normal((dim, dim))
            b = rng.standard_normal((dim, dim))
            a = 0.5 * (a + a.T)
            b = 0.5 * (b + b.T)
            lhs = np.linalg.norm(a @ b + b @ a, 2)
            assert lhs <= np.linalg.norm(a @ a + b @ b, 2) + 1e-9
            a_psd = a @ a.T
            b_psd = b @ b.T
            lhs = np.linalg.norm(a_psd @ b_psd + b_psd @ a_psd, 2)
            s = a_psd + b_psd
            assert 2 * lhs <= np.linalg.norm(s @ s, 2) + 1e-9


class TestSosDominatesNumerics:
    def test_certified_bound_holds_on_samples(self):
        # a verified certificate for sign=+1 proves -lam*I <= distinct sum
        # on every feasible tuple
        rng = np.random.default_rng(80)
        for n in (2, 3):
            cert = build_m2_certificate(n)
            assert verify_sos(cert)
            lam = float(cert.lam)
            for _ in range(50):
                mats = []
                for _ in range(n):
                    g = rng.standard_normal((3, 3))
                    mats.append(g @ g.T)
                total = sum(mats)
                scale = n / max(float(np.linalg.eigvalsh(total).max()), 1e-12)
                mats = [scale * a for a in mats]
                value = distinct_product_sum(2, n).evaluate(mats)
                value = 0.5 * (value + value.T)
                assert float(np.linalg.eigvalsh(value).min()) >= -lam - 1e-8 * max(
                    lam, 1.0
                )
