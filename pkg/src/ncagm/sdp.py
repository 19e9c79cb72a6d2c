"""Block-diagonal standard-form SDP model and an embedded interior-point solver.

The primal problem is

    minimize    tr(C0 Y)
    subject to  tr(Ci Y) = b_i,  i = 1..M
                Y = diag(Y_1, ..., Y_K) >= 0  (PSD)

with symmetric data matrices stored sparsely as upper-triangle coordinate
maps {(block, row, col): value}, row <= col, each value standing for both
mirror entries (the SDPA sparse convention).

The solver is a primal-dual path-following method with a Mehrotra-style
predictor-corrector and the HKM search direction; the Schur complement is
assembled block-wise with dense BLAS and factored by Cholesky.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

_STATUSES = ("optimal", "infeasible", "unbounded", "max_iterations", "numerical_failure")


class SdpError(ValueError):
    pass


@dataclass
class SdpProblem:
    block_dims: tuple
    constraints: list  # one {(block, i, j): value} per constraint, i <= j
    rhs: list
    objective: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.block_dims = tuple(int(d) for d in self.block_dims)
        if any(d < 1 for d in self.block_dims):
            raise SdpError("block dimensions must be positive")
        if len(self.constraints) != len(self.rhs):
            raise SdpError("constraint/right-hand-side length mismatch")
        for entries in list(self.constraints) + [self.objective]:
            for (blk, i, j) in entries:
                if not 0 <= blk < len(self.block_dims):
                    raise SdpError(f"block index {blk} out of range")
                dim = self.block_dims[blk]
                if not 0 <= i <= j < dim:
                    raise SdpError(f"entry ({i},{j}) out of range for block of dim {dim}")

    @property
    def num_constraints(self):
        return len(self.constraints)

    @property
    def num_blocks(self):
        return len(self.block_dims)

    @property
    def total_dim(self):
        return sum(self.block_dims)

    @property
    def scalar_variable_count(self):
        """Number of scalar unknowns across all blocks (sum of squared dims)."""
        return sum(d * d for d in self.block_dims)

    def dense_matrix(self, entries):
        """Expand one sparse symmetric data matrix into dense per-block arrays."""
        blocks = [np.zeros((d, d)) for d in self.block_dims]
        for (blk, i, j), v in entries.items():
            blocks[blk][i, j] = v
            blocks[blk][j, i] = v
        return blocks


@dataclass
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 200
    step_scale: float = 0.98
    verbose: bool = False


@dataclass(eq=False)
class Solution:
    primal_blocks: list
    dual: np.ndarray
    objective_primal: float
    objective_dual: float
    gap: float
    status: str
    iterations: int


def _dedup_rows(problem):
    """Collapse byte-identical constraint rows (word-indexed rows repeat for
    a word and its reversal).  Returns (kept indices, contradiction flag)."""
    seen = {}
    keep = []
    contradiction = False
    for k, (entries, r) in enumerate(zip(problem.constraints, problem.rhs)):
        key = tuple(sorted(entries.items()))
        if key in seen:
            if problem.rhs[seen[key]] != r:
                contradiction = True
            continue
        seen[key] = k
        keep.append(k)
    return keep, contradiction


def _stack_constraints(problem, keep):
    """Dense per-block stacks C[k] of shape (M, d_k, d_k)."""
    dims = problem.block_dims
    m = len(keep)
    stacks = [np.zeros((m, d, d)) for d in dims]
    for row, k in enumerate(keep):
        for (blk, i, j), v in problem.constraints[k].items():
            stacks[blk][row, i, j] = v
            stacks[blk][row, j, i] = v
    return stacks


def _sym(mat):
    return 0.5 * (mat + mat.T)


def _max_step(blocks, deltas, chols):
    """Largest alpha with X + alpha*dX staying PSD, per Cholesky scaling."""
    alpha = np.inf
    for x_chol, dx in zip(chols, deltas):
        w = np.linalg.solve(x_chol, np.linalg.solve(x_chol, dx).T).T
        lam = np.linalg.eigvalsh(_sym(w)).min()
        if lam < -1e-14:
            alpha = min(alpha, -1.0 / lam)
    return alpha


class _SchurFactor:
    """Cholesky factorization of the Schur complement.  When plain Cholesky
    fails near the optimum, a small diagonal shift is added (escalating until
    the factorization succeeds); iterative refinement against the unshifted
    matrix then recovers the accuracy lost to the shift."""

    def __init__(self, s):
        self.s = s
        scale = max(float(np.trace(s)) / max(s.shape[0], 1), 1e-300)
        shift = 0.0
        while True:
            try:
                self.chol = np.linalg.cholesky(
                    s + shift * np.eye(s.shape[0]) if shift else s
                )
                break
            except np.linalg.LinAlgError:
                shift = 1e-14 * scale if shift == 0.0 else 100.0 * shift
                if shift > 1e2 * scale:
                    warnings.warn(
                        "Schur complement could not be stabilized",
                        RuntimeWarning,
                        stacklevel=3,
                    )
                    w, v = np.linalg.eigh(s)
                    thresh = 1e-12 * max(w.max(), 1e-300)
                    self.chol = None
                    self.eig = (
                        v, np.where(w > thresh, 1.0 / np.maximum(w, thresh), 0.0)
                    )
                    break

    def _solve_once(self, rhs):
        if self.chol is not None:
            z = np.linalg.solve(self.chol, rhs)
            return np.linalg.solve(self.chol.T, z)
        v, winv = self.eig
        return v @ (winv * (v.T @ rhs))

    def solve(self, rhs):
        # refinement keeps the computed direction accurate once the Schur
        # complement turns ill-conditioned near the optimum, which would
        # otherwise erode primal feasibility; stop if the residual stalls
        x = self._solve_once(rhs)
        best = x
        best_res = float(np.linalg.norm(rhs - self.s @ x))
        for _ in range(4):
            x = x + self._solve_once(rhs - self.s @ x)
            res = float(np.linalg.norm(rhs - self.s @ x))
            if res >= best_res:
                break
            best, best_res = x, res
        return best


def solve(problem, options=None):
    """Solve a standard-form block SDP; never raises on numerical trouble,
    reporting it in Solution.status instead."""
    opts = options or SolverOptions()
    dims = problem.block_dims
    nblocks = len(dims)
    nu = sum(dims)

    keep, contradiction = _dedup_rows(problem)
    if contradiction:
        return Solution([np.zeros((d, d)) for d in dims], np.zeros(problem.num_constraints),
                        np.nan, np.nan, np.nan, "infeasible", 0)

    m = len(keep)
    b = np.array([problem.rhs[k] for k in keep], dtype=float)
    c_stacks = _stack_constraints(problem, keep)
    c_mats = [c_stacks[k].reshape(m, dims[k] * dims[k]) for k in range(nblocks)]
    c0 = problem.dense_matrix(problem.objective)

    def a_of(blocks):
        out = np.zeros(m)
        for k in range(nblocks):
            out += c_mats[k] @ blocks[k].ravel()
        return out

    def at_of(y):
        return [(y @ c_mats[k]).reshape(dims[k], dims[k]) for k in range(nblocks)]

    norm_c = max(
        (float(np.sqrt((c_stacks[k] ** 2).sum(axis=(1, 2))).max()) if m else 0.0)
        for k in range(nblocks)
    )
    alpha0 = 1.0 + (float(np.abs(b).max()) if m else 0.0) + max(
        norm_c, float(np.linalg.norm(np.concatenate([blk.ravel() for blk in c0])))
    )

    ys = [alpha0 * np.eye(d) for d in dims]
    zs = [alpha0 * np.eye(d) for d in dims]
    y = np.zeros(m)

    status = "max_iterations"
    iterations = 0
    pobj = dobj = gap = np.nan
    best = None  # (merit, ys, zs, y, pobj, dobj, gap)
    stall = 0

    for it in range(opts.max_iterations):
        iterations = it
        pobj = sum(float((c0[k] * ys[k]).sum()) for k in range(nblocks))
        dobj = float(b @ y)
        rp = b - a_of(ys)
        aty = at_of(y)
        rd = [c0[k] - aty[k] - zs[k] for k in range(nblocks)]
        gap = sum(float((ys[k] * zs[k]).sum()) for k in range(nblocks))

        rel_gap = gap / (1.0 + abs(pobj) + abs(dobj))
        pres = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(b)))
        dres = float(np.sqrt(sum((blk ** 2).sum() for blk in rd))) / (1.0 + norm_c)
        if opts.verbose:
            print(f"  iter {it:3d}  pobj {pobj:+.8e}  dobj {dobj:+.8e} "
                  f"gap {rel_gap:.2e}  pres {pres:.2e}  dres {dres:.2e}")
        merit = max(abs(rel_gap), pres, dres)
        if np.isfinite(merit) and (best is None or merit < best[0]):
            best = (merit, [x.copy() for x in ys], [z.copy() for z in zs],
                    y.copy(), pobj, dobj, gap)
            stall = 0
        else:
            stall += 1
        if rel_gap <= opts.tolerance and pres <= opts.tolerance and dres <= opts.tolerance:
            status = "optimal"
            break
        if stall >= 6:
            # residuals stopped improving; the best iterate seen is as good
            # as this run will get
            status = "numerical_failure"
            break
        if not np.isfinite(pobj) or not np.isfinite(dobj) or not np.isfinite(gap):
            status = "numerical_failure"
            break
        if dobj > 1e12 and dres <= 1e-6:
            status = "infeasible"  # dual unbounded above
            break
        if pobj < -1e12 and pres <= 1e-6:
            status = "unbounded"
            break

        try:
            z_chols = [np.linalg.cholesky(z) for z in zs]
            y_chols = [np.linalg.cholesky(x) for x in ys]
        except np.linalg.LinAlgError:
            status = "numerical_failure"
            break
        z_invs = []
        for k in range(nblocks):
            eye = np.eye(dims[k])
            z_invs.append(_sym(np.linalg.solve(z_chols[k].T, np.linalg.solve(z_chols[k], eye))))

        # Schur complement S_ij = tr(Ci H(Y Cj Z^-1)) assembled per block
        s = np.zeros((m, m))
        for k in range(nblocks):
            t = ys[k] @ c_stacks[k] @ z_invs[k]
            t = 0.5 * (t + t.transpose(0, 2, 1))
            s += c_mats[k] @ t.reshape(m, -1).T
        s = 0.5 * (s + s.T)
        factor = _SchurFactor(s)

        mu = gap / nu
        hyrz = []
        for k in range(nblocks):
            t = ys[k] @ rd[k] @ z_invs[k]
            hyrz.append(_sym(t))

        # predictor (affine scaling)
        rhs_aff = b + a_of(hyrz)
        dy_a = factor.solve(rhs_aff)
        atdy = at_of(dy_a)
        dz_a = [rd[k] - atdy[k] for k in range(nblocks)]
        dy_blocks_a = [-ys[k] - _sym(ys[k] @ dz_a[k] @ z_invs[k]) for k in range(nblocks)]
        ap = min(1.0, _max_step(ys, dy_blocks_a, y_chols))
        ad = min(1.0, _max_step(zs, dz_a, z_chols))
        gap_aff = sum(
            float(((ys[k] + ap * dy_blocks_a[k]) * (zs[k] + ad * dz_a[k])).sum())
            for k in range(nblocks)
        )
        sigma = (max(gap_aff, 0.0) / gap) ** 3 if gap > 0 else 0.1
        sigma = float(np.clip(sigma, 1e-10, 1.0))

        # corrector
        corr = [_sym(dy_blocks_a[k] @ dz_a[k] @ z_invs[k]) for k in range(nblocks)]
        rhs_c = b - sigma * mu * a_of(z_invs) + a_of(hyrz) + a_of(corr)
        dy = factor.solve(rhs_c)
        atdy = at_of(dy)
        dz = [rd[k] - atdy[k] for k in range(nblocks)]
        dy_blocks = [
            sigma * mu * z_invs[k] - ys[k] - _sym(ys[k] @ dz[k] @ z_invs[k]) - corr[k]
            for k in range(nblocks)
        ]
        ap = min(1.0, opts.step_scale * _max_step(ys, dy_blocks, y_chols))
        ad = min(1.0, opts.step_scale * _max_step(zs, dz, z_chols))

        for k in range(nblocks):
            ys[k] = _sym(ys[k] + ap * dy_blocks[k])
            zs[k] = _sym(zs[k] + ad * dz[k])
        y = y + ad * dy

    if status in ("numerical_failure", "max_iterations") and best is not None:
        # fall back to the most accurate iterate seen; accept it as optimal
        # when it sits within a small factor of the requested tolerance
        merit, ys, zs, y, pobj, dobj, gap = best
        if merit <= 100.0 * opts.tolerance:
            status = "optimal"

    dual_full = np.zeros(problem.num_constraints)
    for pos, k in enumerate(keep):
        dual_full[k] = y[pos]
    rel_gap = gap / (1.0 + abs(pobj) + abs(dobj)) if np.isfinite(gap) else np.nan
    return Solution(ys, dual_full, pobj, dobj, rel_gap, status, iterations + 1)


@dataclass
class FarkasCertificate:
    """Dual improving ray proving a pinned objective value infeasible.

    The vector (y0, y) satisfies y0*C0 + sum_i y_i*C_i <= 0 (up to the
    reported PSD defect) and lambda_target*y0 + b'y = margin > 0.
    """

    lambda_target: float
    y0: float
    y: np.ndarray
    margin: float
    psd_defect: float
    meta: dict = field(default_factory=dict)


def psd_defect_of(problem, y0, y):
    """Largest eigenvalue of y0*C0 + sum y_i*C_i over all blocks."""
    blocks = [y0 * blk for blk in problem.dense_matrix(problem.objective)]
    for k, entries in enumerate(problem.constraints):
        yk = y[k]
        if yk == 0.0:
            continue
        for (blk, i, j), v in entries.items():
            blocks[blk][i, j] += yk * v
            if i != j:
                blocks[blk][j, i] += yk * v
    return max(float(np.linalg.eigvalsh(blk).max()) for blk in blocks)


def extract_farkas(problem, lambda_target, options=None, margin_threshold=1e-6):
    """Farkas certificate that pinning tr(C0 Y) = lambda_target is infeasible.

    Solves the lambda-problem once; the dual optimum y* gives the ray
    (y0, y) = (-1, y*) with margin = lambda* - lambda_target.  Returns None
    when lambda_target is feasible (no valid ray exists).
    """
    sol = solve(problem, options)
    if sol.status != "optimal":
        raise SdpError(f"solver did not reach optimality: status={sol.status}")
    margin = -lambda_target + float(problem.rhs @ sol.dual) \
        if isinstance(problem.rhs, np.ndarray) else \
        -lambda_target + float(np.asarray(problem.rhs) @ sol.dual)
    if margin <= margin_threshold:
        return None
    defect = psd_defect_of(problem, -1.0, sol.dual)
    return FarkasCertificate(
        lambda_target=float(lambda_target),
        y0=-1.0,
        y=sol.dual,
        margin=margin,
        psd_defect=defect,
        meta=dict(problem.meta),
    )
