"""Exact rational certificate verification and numeric instance checks.

Sum-of-squares certificates are checked with no tolerances at all: PSD-ness
of the Gram blocks by rational LDL^T, the expansion identity by symbolic
free-algebra arithmetic over the rationals.  Farkas certificates and
explicit matrix instances are rechecked in floating point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .compiler import localizing_entry, monomial_basis
from .ncpoly import NCPolynomial, distinct_product_sum


class CertificateError(ValueError):
    """A certificate that fails its own validity assertions."""


class RationalMatrix:
    """Dense symmetric matrix of arbitrary-precision rationals."""

    __slots__ = ("entries", "dim")

    def __init__(self, rows):
        entries = [[Fraction(v) for v in row] for row in rows]
        dim = len(entries)
        for row in entries:
            if len(row) != dim:
                raise ValueError("matrix must be square")
        for i in range(dim):
            for j in range(i + 1, dim):
                if entries[i][j] != entries[j][i]:
                    raise ValueError(f"matrix not symmetric at ({i},{j})")
        self.entries = entries
        self.dim = dim

    @classmethod
    def identity(cls, dim):
        return cls([[1 if i == j else 0 for j in range(dim)] for i in range(dim)])

    def __getitem__(self, key):
        i, j = key
        return self.entries[i][j]

    def to_float(self):
        return np.array([[float(v) for v in row] for row in self.entries])

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.entries == other.entries

    def __repr__(self):
        return f"RationalMatrix({self.entries!r})"


def psd_check_exact(mat):
    """Exact PSD decision via rational LDL^T with greedy diagonal pivoting.

    A zero maximal pivot forces the entire remaining principal block to
    vanish for the matrix to be PSD.
    """
    dim = mat.dim
    a = [row[:] for row in mat.entries]
    active = list(range(dim))
    while active:
        p = max(active, key=lambda i: a[i][i])
        pivot = a[p][p]
        if pivot < 0:
            return False
        if pivot == 0:
            return all(a[i][j] == 0 for i in active for j in active)
        active.remove(p)
        for i in active:
            if a[i][p] == 0:
                continue
            factor = a[i][p] / pivot
            for j in active:
                a[i][j] -= factor * a[p][j]
    return True


@dataclass
class SosCertificate:
    """A rational lambda plus n+1 PSD Gram blocks proving
    lambda + sign*target = sum_i tr(beta l_i beta^T Y_i) exactly."""

    m: int
    n: int
    sign: int
    lam: Fraction
    gram_blocks: list

    @property
    def degree_bound(self):
        return self.m // 2


def expand_gram(n, d, gram_blocks):
    """Symbolic expansion sum_i sum_{a,b} Y_i[a,b] * rev(beta_a) l_i beta_b."""
    basis = monomial_basis(n, d)
    q = basis.size
    acc = {}
    for i, block in enumerate(gram_blocks, start=1):
        if block.dim != q:
            raise ValueError(
                f"Gram block {i} has dimension {block.dim}, expected {q}"
            )
        for a in range(q):
            for b in range(q):
                coeff = block[a, b]
                if coeff:
                    for w, c in localizing_entry(basis, i, a, b).terms.items():
                        acc[w] = acc.get(w, 0) + coeff * c
    return NCPolynomial(n, acc)


def verify_sos(cert):
    """True iff every Gram block is exactly PSD and the expansion identity
    holds as an equality of rational noncommutative polynomials."""
    n, m = cert.n, cert.m
    if len(cert.gram_blocks) != n + 1:
        raise ValueError(f"expected {n + 1} Gram blocks, got {len(cert.gram_blocks)}")
    d = cert.degree_bound
    q = monomial_basis(n, d).size
    for block in cert.gram_blocks:
        if block.dim != q:
            raise ValueError(f"Gram block dimension {block.dim}, expected {q}")
    if not all(psd_check_exact(block) for block in cert.gram_blocks):
        return False
    expansion = expand_gram(n, d, cert.gram_blocks)
    target = NCPolynomial.one(n, Fraction(cert.lam)) + cert.sign * distinct_product_sum(m, n)
    return expansion == target


def build_m2_certificate(n):
    """Closed-form rational certificate for the improved m=2 lower bound,
    lambda = n(n-1)/4.  The eleven entry values populate the n+1 Gram
    blocks over the basis (1, X_1, ..., X_n); correctness is not assumed
    here but established by verify_sos."""
    if n < 2:
        raise ValueError("need n >= 2")
    fr = Fraction
    a = fr(5 * (n - 1), 4)
    b = fr(-3 * (n - 1), 2 * n)
    c = fr(3 - n, 2 * n)
    d_ = f = z = fr(2 * (n - 1), n * n)
    e = g = w = fr(n - 2, n * n)
    x = fr(n - 1, 4)
    y = fr(-(n - 1), 2 * n)

    q = n + 1
    blocks = []
    for i in range(1, n + 1):
        rows = [[fr(0)] * q for _ in range(q)]
        rows[0][0] = a
        for j in range(1, q):
            rows[0][j] = rows[j][0] = b if j == i else c
            rows[j][j] = d_ if j == i else f
            for k in range(j + 1, q):
                val = e if i in (j, k) else g
                rows[j][k] = rows[k][j] = val
        blocks.append(RationalMatrix(rows))
    rows = [[fr(0)] * q for _ in range(q)]
    rows[0][0] = x
    for j in range(1, q):
        rows[0][j] = rows[j][0] = y
        rows[j][j] = z
        for k in range(j + 1, q):
            rows[j][k] = rows[k][j] = w
    blocks.append(RationalMatrix(rows))

    return SosCertificate(m=2, n=n, sign=1, lam=fr(n * (n - 1), 4), gram_blocks=blocks)


# ---------------------------------------------------------------------------
# Farkas re-checking
# ---------------------------------------------------------------------------


def farkas_check(problem, cert, tolerance=1e-6):
    """Independently recompute a Farkas certificate's PSD defect and margin.

    Raises CertificateError when sum y_i C_i fails the PSD-defect bound;
    a nonpositive margin is reported via the return value, not an error.
    """
    y = np.asarray(cert.y, dtype=float)
    if y.shape != (problem.num_constraints,):
        raise ValueError(
            f"certificate indexes {y.shape[0]} constraints, "
            f"problem has {problem.num_constraints}"
        )
    blocks = [cert.y0 * blk for blk in problem.dense_matrix(problem.objective)]
    max_entry = max(
        (abs(v) for entries in problem.constraints for v in entries.values()),
        default=0.0,
    )
    max_entry = max(max_entry, *(abs(v) for v in problem.objective.values()))
    for k, entries in enumerate(problem.constraints):
        yk = y[k]
        if yk == 0.0:
            continue
        for (blk, i, j), v in entries.items():
            blocks[blk][i, j] += yk * v
            if i != j:
                blocks[blk][j, i] += yk * v
    defect = max(float(np.linalg.eigvalsh(blk).max()) for blk in blocks)
    scale = (abs(cert.y0) + float(np.abs(y).sum())) * max_entry
    if defect > tolerance * scale:
        raise CertificateError(
            f"PSD defect {defect:.3e} exceeds {tolerance:.1e} * scale ({scale:.3e})"
        )
    return float(cert.lambda_target * cert.y0 + np.asarray(problem.rhs) @ y)


# ---------------------------------------------------------------------------
# Numeric instance evaluation
# ---------------------------------------------------------------------------


@dataclass
class InstanceReport:
    n: int
    m: int
    inputs_psd: bool
    sum_bounded: bool
    min_eig: float
    max_eig: float
    bound: float
    improved_bounds: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.inputs_psd and self.sum_bounded

    @property
    def ok(self):
        return self.feasible and not self.violations


def eval_instance(matrices, m, tolerance=1e-9):
    """Evaluate the distinct-product sum on an explicit matrix tuple and
    compare its spectrum against the conjectured and proven bounds."""
    n = len(matrices)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    mats = [np.asarray(a, dtype=float) for a in matrices]
    dim = mats[0].shape[0]
    for a in mats:
        if a.shape != (dim, dim):
            raise ValueError("matrices must be square and of equal dimension")
        if np.abs(a - a.T).max() > tolerance:
            raise ValueError("matrices must be symmetric")

    inputs_psd = all(float(np.linalg.eigvalsh(a).min()) >= -tolerance for a in mats)
    total = sum(mats)
    sum_bounded = float(np.linalg.eigvalsh(total).max()) <= n + tolerance

    value = distinct_product_sum(m, n).evaluate(mats)
    # the evaluated sum is symmetric in exact arithmetic; shed round-off skew
    value = 0.5 * (value + value.T)
    eigs = np.linalg.eigvalsh(value)
    min_eig, max_eig = float(eigs.min()), float(eigs.max())
    bound = float(math.factorial(n) // math.factorial(n - m))

    improved = {}
    violations = []
    if max_eig > bound + tolerance:
        violations.append("upper Loewner bound")
    if min_eig < -bound - tolerance:
        violations.append("lower Loewner bound")
    if m == 2:
        improved["improved m=2 lower bound"] = n * (n - 1) / 4.0
        if min_eig < -improved["improved m=2 lower bound"] - tolerance:
            violations.append("improved m=2 lower bound")
    if m == 3 and n >= 3:
        # expectation-form constant n/(4(n-2)) rescaled to the plain sum
        improved["improved m=3 lower bound (expectation-form constant)"] = (
            n / (4.0 * (n - 2)) * bound
        )
        if min_eig < -improved["improved m=3 lower bound (expectation-form constant)"] - tolerance:
            violations.append("improved m=3 lower bound (expectation-form constant)")

    return InstanceReport(
        n=n,
        m=m,
        inputs_psd=inputs_psd,
        sum_bounded=sum_bounded,
        min_eig=min_eig,
        max_eig=max_eig,
        bound=bound,
        improved_bounds=improved,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# JSON serialization (rationals as "p/q" strings, floats as decimal strings)
# ---------------------------------------------------------------------------


def _frac_str(value):
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def sos_certificate_to_json(cert):
    return {
        "m": cert.m,
        "n": cert.n,
        "sign": cert.sign,
        "lambda": _frac_str(cert.lam),
        "blocks": [
            [[_frac_str(v) for v in row] for row in block.entries]
            for block in cert.gram_blocks
        ],
    }


def sos_certificate_from_json(data):
    return SosCertificate(
        m=int(data["m"]),
        n=int(data["n"]),
        sign=int(data["sign"]),
        lam=Fraction(data["lambda"]),
        gram_blocks=[
            RationalMatrix([[Fraction(v) for v in row] for row in block])
            for block in data["blocks"]
        ],
    )


def farkas_to_json(cert):
    return {
        "m": cert.meta.get("m"),
        "n": cert.meta.get("n"),
        "sign": cert.meta.get("sign"),
        "lambda": repr(float(cert.lambda_target)),
        "y0": repr(float(cert.y0)),
        "dual": [repr(float(v)) for v in cert.y],
        "margin": repr(float(cert.margin)),
        "psd_defect": repr(float(cert.psd_defect)),
    }


def load_instance(source):
    """Instance file: {"n": ..., "m": ..., "matrices": [[row-major], ...]}."""
    if isinstance(source, dict):
        data = source
    else:
        with open(source) as fh:
            data = json.load(fh)
    n = int(data["n"])
    m = int(data["m"])
    matrices = []
    for flat in data["matrices"]:
        flat = [float(v) for v in flat]
        dim = math.isqrt(len(flat))
        if dim * dim != len(flat):
            raise ValueError("matrix entry count is not a perfect square")
        matrices.append(np.array(flat).reshape(dim, dim))
    if len(matrices) != n:
        raise ValueError(f"expected {n} matrices, found {len(matrices)}")
    return matrices, m
