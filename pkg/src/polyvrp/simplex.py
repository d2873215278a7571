"""Bounded-variable revised simplex over sparse models.

Every row ``a'x (<=,=,>=) rhs`` gets a logical column ``s = a'x`` carrying
the row bounds, turning the problem into ``Ax - s = 0`` with box
constraints on all columns. The workhorse is a dual simplex with an
explicit dense basis inverse: our model costs are nonnegative, so the
all-logical basis is dual feasible from the start, and branch-and-bound
restarts stay dual feasible after bound changes. A primal phase-2 loop
covers starts that cannot be made dual feasible (e.g. imported models with
negative costs), preceded by a zero-cost dual pass that finds a primal
feasible basis.

Geometric row/column equilibration with power-of-two factors is applied
internally and undone on report. Entering/leaving choices fall back to
least-index (Bland) rules after a stall, which guarantees termination on
degenerate models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg
from scipy.linalg.blas import dgemv, dger

from .model import INF, MilpModel, Sense

BASIC, AT_LOWER, AT_UPPER, NB_FREE = 0, 1, 2, 3


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iteration_limit"


@dataclass
class LpOptions:
    tol_feas: float = 1e-7
    tol_dual: float = 1e-7
    tol_pivot: float = 1e-9
    max_iters: int = 500_000
    stall_iters: int = 4000  # switch to least-index (Bland) rules after this
    refactor_every: int = 150  # dense-inverse drift cadence
    eta_limit: int = 90  # product-form chain length before refactoring
    dense_limit: int = 700  # basis size cutoff between the two backends
    scale: bool = True
    bound_flips: bool = False  # multi-breakpoint dual ratio test


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    values: np.ndarray | None  # structural variables only
    duals: np.ndarray | None  # one per constraint
    iterations: int
    basis: tuple[np.ndarray, np.ndarray] | None  # warm-start handle


def _pow2_scale(v: np.ndarray) -> np.ndarray:
    """Nearest power of two to 1/sqrt(v), clipped; exact in floats."""
    out = np.ones_like(v)
    good = v > 0
    out[good] = np.exp2(np.clip(np.round(-0.5 * np.log2(v[good])), -20, 20))
    return out


def _axis_min_abs(csr: sp.csr_matrix) -> np.ndarray:
    out = np.zeros(csr.shape[0])
    data = np.abs(csr.data)
    for i in range(csr.shape[0]):
        seg = data[csr.indptr[i] : csr.indptr[i + 1]]
        if seg.size:
            out[i] = seg.min()
    return out


def _axis_max_abs(csr: sp.csr_matrix) -> np.ndarray:
    out = np.zeros(csr.shape[0])
    data = np.abs(csr.data)
    for i in range(csr.shape[0]):
        seg = data[csr.indptr[i] : csr.indptr[i + 1]]
        if seg.size:
            out[i] = seg.max()
    return out


class LpEngine:
    """Reusable simplex context for one immutable model.

    ``solve`` may be called repeatedly with different bound overrides; the
    basis and factorization persist across calls, which makes node
    re-optimization in branch-and-bound cheap.
    """

    def __init__(self, model: MilpModel, options: LpOptions | None = None):
        self.model = model
        self.opt = options or LpOptions()
        self.n_struct = model.num_vars
        self.m = model.num_cons
        n, m = self.n_struct, self.m
        self.n_total = n + m

        rows, cols, vals = [], [], []
        for cid, con in enumerate(model.constraints):
            for vid, coeff in con.terms:
                rows.append(cid)
                cols.append(vid)
                vals.append(coeff)
        a_struct = sp.coo_matrix(
            (np.array(vals, dtype=float), (rows, cols)), shape=(m, n)
        ).tocsr()

        self.col_scale = np.ones(n)
        self.row_scale = np.ones(m)
        if self.opt.scale and a_struct.nnz:
            work = a_struct
            for _ in range(2):
                r = _pow2_scale(_axis_max_abs(work) * _axis_min_abs(work))
                work = (sp.diags(r) @ work).tocsr()
                self.row_scale *= r
                wt = work.T.tocsr()
                c = _pow2_scale(_axis_max_abs(wt) * _axis_min_abs(wt))
                work = (work @ sp.diags(c)).tocsr()
                self.col_scale *= c
            a_struct = work

        a_struct = a_struct.tocsc()
        if m:
            self.A = sp.hstack([a_struct, -sp.eye(m, format="csc")]).tocsc()
        else:
            self.A = a_struct
        self.AT = self.A.T.tocsr()

        c = np.zeros(self.n_total)
        c[:n] = [v.obj for v in model.variables]
        c[:n] *= self.col_scale
        self.c = c

        self.base_lower = np.empty(self.n_total)
        self.base_upper = np.empty(self.n_total)
        for vid, var in enumerate(model.variables):
            s = self.col_scale[vid]
            self.base_lower[vid] = var.lower / s if var.lower != -INF else -INF
            self.base_upper[vid] = var.upper / s if var.upper != INF else INF
        for cid, con in enumerate(model.constraints):
            rhs = con.rhs * self.row_scale[cid]
            if con.sense is Sense.LE:
                lo, hi = -INF, rhs
            elif con.sense is Sense.GE:
                lo, hi = rhs, INF
            else:
                lo = hi = rhs
            self.base_lower[n + cid] = lo
            self.base_upper[n + cid] = hi

        self.lower = self.base_lower.copy()
        self.upper = self.base_upper.copy()
        self.basis: np.ndarray | None = None
        self.status: np.ndarray | None = None
        self._xb_cache = np.zeros(m)
        # dense explicit inverse for small bases, sparse LU with an eta
        # chain (product form) above the threshold
        self._dense = m <= self.opt.dense_limit
        self.binv: np.ndarray | None = None
        self._lu = None
        self._etas: list[tuple[int, np.ndarray]] = []

    # -- basis management --------------------------------------------------

    def _reset_basis(self) -> None:
        n, m = self.n_struct, self.m
        self.basis = np.arange(n, n + m, dtype=np.int64)
        if self._dense:
            self.binv = np.asfortranarray(-np.eye(m))
        else:
            self._lu = sp.linalg.splu((-sp.identity(m, format="csc")).tocsc())
            self._etas = []
        self.status = np.empty(self.n_total, dtype=np.int8)
        self.status[n:] = BASIC
        for j in range(n):
            self.status[j] = self._preferred_status(j)

    def _preferred_status(self, j: int) -> int:
        lo, hi = self.lower[j], self.upper[j]
        if lo == -INF and hi == INF:
            return NB_FREE
        if self.c[j] >= 0:
            return AT_LOWER if lo != -INF else AT_UPPER
        return AT_UPPER if hi != INF else AT_LOWER

    def _set_basis(self, basis: np.ndarray, status: np.ndarray) -> bool:
        if len(basis) != self.m or len(status) != self.n_total:
            return False
        if (status == BASIC).sum() != self.m or not np.all(status[basis] == BASIC):
            return False
        saved = self.basis
        self.basis = np.asarray(basis, dtype=np.int64).copy()
        if not self._refactor():
            self.basis = saved
            return False
        self.status = np.asarray(status, dtype=np.int8).copy()
        return True

    def _refactor(self) -> bool:
        if self._dense:
            try:
                binv = scipy.linalg.inv(self.A[:, self.basis].toarray())
            except (scipy.linalg.LinAlgError, ValueError):
                return False
            if not np.all(np.isfinite(binv)):
                return False
            self.binv = np.asfortranarray(binv)
            return True
        try:
            self._lu = sp.linalg.splu(self.A[:, self.basis].tocsc())
        except (RuntimeError, ValueError):
            return False
        self._etas = []
        return True

    # -- factorized operations ----------------------------------------------
    #
    # With the product form B = B0 E1 ... Ek, each eta E = I + (h - e_r) e_r'
    # records one pivot; FTRAN applies inverse etas forward, BTRAN transposed
    # etas backward around the base LU solves.

    def _btran_row(self, r: int) -> np.ndarray:
        """Row r of the basis inverse."""
        if self._dense:
            return np.ascontiguousarray(self.binv[r])
        u = np.zeros(self.m)
        u[r] = 1.0
        return self._btran_dense(u)

    def _btran_dense(self, u: np.ndarray) -> np.ndarray:
        """u' B^-1 for a dense row vector u (u is consumed)."""
        if self._dense:
            return dgemv(1.0, self.binv, u, trans=1)
        for r_j, h_j in reversed(self._etas):
            dot = float(u @ h_j) - u[r_j]
            u[r_j] -= dot / h_j[r_j]
        return self._lu.solve(u, trans="T")

    def _ftran_dense(self, v: np.ndarray) -> np.ndarray:
        """B^-1 v for a dense vector v (v is consumed)."""
        if self._dense:
            return dgemv(1.0, self.binv, v)
        v = self._lu.solve(v)
        for r_j, h_j in self._etas:
            t = v[r_j] / h_j[r_j]
            v -= h_j * t
            v[r_j] = t
        return v

    def _ftran_col(self, q: int) -> np.ndarray:
        a = self.A
        start, end = a.indptr[q], a.indptr[q + 1]
        if self._dense:
            return self.binv[:, a.indices[start:end]] @ a.data[start:end]
        v = np.zeros(self.m)
        v[a.indices[start:end]] = a.data[start:end]
        return self._ftran_dense(v)

    def _apply_pivot(self, h: np.ndarray, r: int, row_new: np.ndarray | None = None) -> None:
        if self._dense:
            self._update_binv(h, r, row_new)
        else:
            self._etas.append((r, h.copy()))

    def _update_binv(self, h: np.ndarray, r: int, row: np.ndarray | None = None) -> None:
        binv = self.binv
        if row is None:
            row = np.ascontiguousarray(binv[r]) / h[r]
        hh = h.copy()
        hh[r] = 0.0
        # in-place rank-1 update (no temporary m*m array)
        self.binv = dger(-1.0, hh, row, a=binv, overwrite_a=1)
        self.binv[r] = row

    def _row_norms(self, previous: np.ndarray | None = None) -> np.ndarray:
        """Steepest-edge seed weights; exact for the dense backend."""
        if self._dense:
            return np.einsum("ij,ij->i", self.binv, self.binv)
        if previous is not None:
            return previous  # keep the running approximation across refactors
        return np.ones(self.m)

    # -- value helpers ------------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        x = np.zeros(self.n_total)
        at_lo = self.status == AT_LOWER
        at_up = self.status == AT_UPPER
        x[at_lo] = self.lower[at_lo]
        x[at_up] = self.upper[at_up]
        x[self.basis] = 0.0
        return x

    def _basic_values(self, x_nb: np.ndarray) -> np.ndarray:
        return self._ftran_dense(-(self.A @ x_nb))

    def _reduced_costs(self) -> np.ndarray:
        y = self._btran_dense(self.c[self.basis].copy())
        d = self.c - self.AT @ y
        d[self.basis] = 0.0
        return d

    # -- public solving entry ------------------------------------------------

    def solve(
        self,
        bound_overrides: dict[int, tuple[float, float]] | None = None,
        warm: bool = True,
        basis_hint: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> LpSolution:
        self.lower[: self.n_struct] = self.base_lower[: self.n_struct]
        self.upper[: self.n_struct] = self.base_upper[: self.n_struct]
        if bound_overrides:
            for vid, (lo, hi) in bound_overrides.items():
                s = self.col_scale[vid]
                self.lower[vid] = lo / s if lo != -INF else -INF
                self.upper[vid] = hi / s if hi != INF else INF
                if self.lower[vid] > self.upper[vid] + 1e-12:
                    return LpSolution(LpStatus.INFEASIBLE, math.nan, None, None, 0, None)

        if basis_hint is not None:
            if not self._set_basis(*basis_hint):
                self._reset_basis()
        elif not warm or self.basis is None:
            self._reset_basis()

        # Nonbasic statuses must point at finite bounds after overrides.
        nb = np.flatnonzero(self.status != BASIC)
        for j in nb:
            st = self.status[j]
            if st == AT_LOWER and self.lower[j] == -INF:
                self.status[j] = AT_UPPER if self.upper[j] != INF else NB_FREE
            elif st == AT_UPPER and self.upper[j] == INF:
                self.status[j] = AT_LOWER if self.lower[j] != -INF else NB_FREE

        d = self._reduced_costs()
        if self._repair_dual(d):
            status, iters = self._dual_loop(d)
            return self._package(status, iters)

        # No dual-feasible start: zero-cost dual pass finds a primal
        # feasible basis, then the primal simplex finishes the job.
        saved_c = self.c
        self.c = np.zeros_like(saved_c)
        status, iters = self._dual_loop(np.zeros(self.n_total))
        self.c = saved_c
        if status is not LpStatus.OPTIMAL:
            return self._package(status, iters)
        status, more = self._primal_loop()
        return self._package(status, iters + more)

    def _repair_dual(self, d: np.ndarray) -> bool:
        tol = self.opt.tol_dual
        ok = True
        for j in np.flatnonzero(self.status != BASIC):
            if self.lower[j] == self.upper[j]:
                continue  # fixed columns are dual feasible either way
            st = self.status[j]
            if st == AT_LOWER and d[j] < -tol:
                if self.upper[j] != INF:
                    self.status[j] = AT_UPPER
                else:
                    ok = False
            elif st == AT_UPPER and d[j] > tol:
                if self.lower[j] != -INF:
                    self.status[j] = AT_LOWER
                else:
                    ok = False
            elif st == NB_FREE and abs(d[j]) > tol:
                ok = False
        return ok

    # -- dual simplex ---------------------------------------------------------

    def _dual_loop(self, d: np.ndarray) -> tuple[LpStatus, int]:
        opt = self.opt
        m = self.m
        if m == 0:
            self._xb_cache = np.zeros(0)
            return LpStatus.OPTIMAL, 0
        x = self._nonbasic_values()
        xb = self._basic_values(x)
        bland = False
        stall = 0
        last_inf = math.inf
        iters = 0
        since_refactor = 0
        cadence = opt.refactor_every if self._dense else opt.eta_limit
        # dual steepest-edge weights (exact row norms for the dense backend)
        gamma = self._row_norms()

        while True:
            if iters >= opt.max_iters:
                self._xb_cache = xb
                return LpStatus.ITER_LIMIT, iters
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            below = lb - xb
            above = xb - ub
            viol = np.maximum(below, above)
            worst = viol.max()
            if worst <= opt.tol_feas:
                self._xb_cache = xb
                return LpStatus.OPTIMAL, iters
            r = int(np.argmax(np.where(viol > opt.tol_feas, viol * viol / gamma, -1.0)))

            total_inf = float(viol[viol > opt.tol_feas].sum())
            if total_inf >= last_inf - 1e-12:
                stall += 1
                if stall > opt.stall_iters:
                    bland = True
            else:
                stall = 0
            last_inf = total_inf

            if bland:
                cand = np.flatnonzero(viol > opt.tol_feas)
                r = int(cand[np.argmin(self.basis[cand])])
            s_r = 1.0 if below[r] >= above[r] else -1.0

            rho = self._btran_row(r)
            alpha = self.AT @ rho
            w = -s_r * alpha
            eligible = (
                ((self.status == AT_LOWER) & (w > opt.tol_pivot))
                | ((self.status == AT_UPPER) & (w < -opt.tol_pivot))
                | ((self.status == NB_FREE) & (np.abs(w) > opt.tol_pivot))
            )
            eligible &= self.lower != self.upper

            q = -1
            h = None
            flips: list[int] = []
            while True:
                idx = np.flatnonzero(eligible)
                if idx.size == 0:
                    q = -1
                    break
                if bland:
                    q = int(idx[0])
                    flips = []
                elif opt.bound_flips:
                    # bound-flipping ratio test: breakpoints in ratio order;
                    # columns whose flip volume is absorbed by the violation
                    # flip without a pivot, the first that is not enters
                    ratios = np.maximum(d[idx] / w[idx], 0.0)
                    order = np.lexsort((idx, -np.abs(w[idx]), ratios))
                    remaining = float(viol[r])
                    flips = []
                    q = int(idx[order[-1]])
                    for pos in order:
                        j = int(idx[pos])
                        volume = abs(w[j]) * (self.upper[j] - self.lower[j])
                        if volume >= remaining or not math.isfinite(volume):
                            q = j
                            break
                        flips.append(j)
                        remaining -= volume
                else:
                    ratios = np.maximum(d[idx] / w[idx], 0.0)
                    rmin = ratios.min()
                    near = idx[ratios <= rmin + opt.tol_dual]
                    q = int(near[np.argmax(np.abs(w[near]))])
                    flips = []
                h = self._ftran_col(q)
                if abs(h[r]) >= opt.tol_pivot and abs(h[r] - alpha[q]) <= 1e-6 * max(
                    1.0, abs(h[r])
                ):
                    break
                if since_refactor > 0:
                    q = -2  # numerical doubt: refactor and restart the iteration
                    break
                eligible[q] = False

            if q == -1:
                return LpStatus.INFEASIBLE, iters
            if q == -2:
                if self._refactor():
                    since_refactor = 0
                    xb = self._basic_values(x)
                    d = self._reduced_costs()
                    gamma = self._row_norms(gamma)
                continue

            if flips:
                shift = np.zeros(m)
                a = self.A
                for j in flips:
                    rng_j = self.upper[j] - self.lower[j]
                    if self.status[j] == AT_LOWER:
                        dx, self.status[j], x[j] = rng_j, AT_UPPER, self.upper[j]
                    else:
                        dx, self.status[j], x[j] = -rng_j, AT_LOWER, self.lower[j]
                    start, end = a.indptr[j], a.indptr[j + 1]
                    shift[a.indices[start:end]] += a.data[start:end] * dx
                xb -= self._ftran_dense(shift)

            alpha_q = h[r]
            target = lb[r] if s_r > 0 else ub[r]
            delta_q = -(target - xb[r]) / alpha_q
            theta_d = d[q] / alpha_q

            leaving = int(self.basis[r])
            xb -= h * delta_q
            xb[r] = x[q] + delta_q
            x[leaving] = target
            x[q] = 0.0
            self.status[leaving] = AT_LOWER if s_r > 0 else AT_UPPER
            self.status[q] = BASIC
            self.basis[r] = q

            d -= theta_d * alpha
            d[q] = 0.0
            d[leaving] = -theta_d

            # steepest-edge weights track the rank-1 basis update exactly
            row_new = rho / alpha_q
            cross = self._ftran_dense(row_new)
            gamma += h * (h * float(row_new @ row_new) - 2.0 * cross)
            gamma[r] = max(float(row_new @ row_new), 1e-12)
            np.maximum(gamma, 1e-12, out=gamma)

            self._apply_pivot(h, r, row_new)
            iters += 1
            since_refactor += 1
            if since_refactor >= cadence:
                x[self.basis] = 0.0
                if self._refactor():
                    since_refactor = 0
                    xb = self._basic_values(x)
                    d = self._reduced_costs()
                    gamma = self._row_norms(gamma)

    # -- primal simplex (phase 2 from a feasible basis) -------------------------

    def _primal_loop(self) -> tuple[LpStatus, int]:
        opt = self.opt
        x = self._nonbasic_values()
        xb = self._basic_values(x)
        d = self._reduced_costs()
        iters = 0
        bland = False
        stall = 0
        last_obj = math.inf
        since_refactor = 0

        while True:
            if iters >= opt.max_iters:
                self._xb_cache = xb
                return LpStatus.ITER_LIMIT, iters

            movable = self.lower != self.upper
            down_ok = (self.status == AT_UPPER) & (d > opt.tol_dual) & movable
            up_ok = (self.status == AT_LOWER) & (d < -opt.tol_dual) & movable
            free_ok = (self.status == NB_FREE) & (np.abs(d) > opt.tol_dual)
            cand = np.flatnonzero(down_ok | up_ok | free_ok)
            if cand.size == 0:
                self._xb_cache = xb
                return LpStatus.OPTIMAL, iters

            obj = float(self.c @ x) + float(self.c[self.basis] @ xb)
            if obj >= last_obj - 1e-12:
                stall += 1
                if stall > opt.stall_iters:
                    bland = True
            else:
                stall = 0
            last_obj = obj

            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            sigma = 1.0 if d[q] < 0 else -1.0  # increase when reduced cost is negative

            h = self._ftran_col(q)
            step = sigma * h
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                room_dn = np.where(step > opt.tol_pivot, (xb - lb) / step, INF)
                room_up = np.where(step < -opt.tol_pivot, (xb - ub) / step, INF)
            room = np.minimum(room_dn, room_up)
            room[np.isnan(room)] = INF

            theta = INF
            r = -1
            if room.size:
                rmin = float(room.min())
                if rmin < theta:
                    theta = max(rmin, 0.0)
                    ties = np.flatnonzero(room <= rmin + opt.tol_feas)
                    if bland:
                        r = int(ties[np.argmin(self.basis[ties])])
                    else:
                        r = int(ties[np.argmax(np.abs(step[ties]))])
            own_range = self.upper[q] - self.lower[q]
            if own_range < theta:
                theta = own_range
                r = -1
            if theta == INF:
                return LpStatus.UNBOUNDED, iters

            xb -= step * theta
            if r < 0:
                self.status[q] = AT_UPPER if self.status[q] == AT_LOWER else AT_LOWER
                x[q] = self.upper[q] if self.status[q] == AT_UPPER else self.lower[q]
            else:
                leaving = int(self.basis[r])
                new_val = x[q] + sigma * theta
                lo_dist = abs(xb[r] - lb[r]) if lb[r] != -INF else INF
                hi_dist = abs(xb[r] - ub[r]) if ub[r] != INF else INF
                to_lower = lo_dist <= hi_dist
                self.status[leaving] = AT_LOWER if to_lower else AT_UPPER
                x[leaving] = lb[r] if to_lower else ub[r]
                xb[r] = new_val
                self.status[q] = BASIC
                x[q] = 0.0
                self.basis[r] = q
                self._apply_pivot(h, r)
                since_refactor += 1
                d = self._reduced_costs()
            iters += 1
            if since_refactor >= (opt.refactor_every if self._dense else opt.eta_limit):
                if self._refactor():
                    since_refactor = 0
                    x = self._nonbasic_values()
                    xb = self._basic_values(x)
                    d = self._reduced_costs()

    # -- packaging ---------------------------------------------------------------

    def _package(self, status: LpStatus, iters: int) -> LpSolution:
        if status is not LpStatus.OPTIMAL:
            return LpSolution(status, math.nan, None, None, iters, self._snapshot())
        x = self._nonbasic_values()
        x[self.basis] = self._xb_cache
        values = x[: self.n_struct] * self.col_scale
        y = self._btran_dense(self.c[self.basis].copy())
        duals = y * self.row_scale
        return LpSolution(status, float(self.c @ x), values, duals, iters, self._snapshot())

    def _snapshot(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.basis is None:
            return None
        return self.basis.copy(), self.status.copy()


# ---------------------------------------------------------------------------
# public module functions


def solve_lp(
    model: MilpModel,
    basis_hint: tuple[np.ndarray, np.ndarray] | None = None,
    options: LpOptions | None = None,
) -> LpSolution:
    """Solve the LP relaxation of a model (integrality dropped)."""
    return LpEngine(model, options).solve(basis_hint=basis_hint, warm=False)


def solve_lp_with_fixings(
    model: MilpModel,
    fixings: list[tuple[int, float]],
    options: LpOptions | None = None,
) -> LpSolution:
    """Solve with some variables clamped; the model itself is untouched."""
    overrides: dict[int, tuple[float, float]] = {}
    for vid, val in fixings:
        var = model.variables[vid]
        if not (var.lower - 1e-9 <= val <= var.upper + 1e-9):
            raise ValueError(
                f"fixing {var.name}={val} lies outside its bounds [{var.lower}, {var.upper}]"
            )
        overrides[vid] = (val, val)
    return LpEngine(model, options).solve(bound_overrides=overrides, warm=False)


def dual_objective(model: MilpModel, sol: LpSolution, tol: float = 1e-9) -> float:
    """Objective of the dual solution implied by ``sol`` (strong-duality check)."""
    y = sol.duals
    total = sum(y[cid] * con.rhs for cid, con in enumerate(model.constraints))
    red = np.array([v.obj for v in model.variables], dtype=float)
    for cid, con in enumerate(model.constraints):
        for vid, coeff in con.terms:
            red[vid] -= coeff * y[cid]
    for vid, var in enumerate(model.variables):
        if red[vid] > tol and var.lower != -INF:
            total += red[vid] * var.lower
        elif red[vid] < -tol and var.upper != INF:
            total += red[vid] * var.upper
    return float(total)
