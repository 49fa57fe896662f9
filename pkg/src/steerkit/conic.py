"""Primal-dual interior-point solver for Hermitian PSD block programs.

Programs are stated over a product of Hermitian PSD cones with affine
equality constraints and a linear objective:

    minimize <c, x>   s.t.   A svec(x) = b,   each block of x >= 0.

Hermitian blocks are parametrized by real coordinates (diagonal entries,
then sqrt(2)-scaled real/imaginary off-diagonal parts) so that the cone is
self-dual under the Euclidean inner product.  The solver runs a Mehrotra
predictor-corrector on the homogeneous self-dual embedding with
Nesterov-Todd scaling, which yields Farkas infeasibility certificates
instead of iteration timeouts.  Everything is deterministic: fixed
iteration schedule, no randomized pivoting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import InputError
from .hermitian import min_eigenvalue

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# real parametrization of Hermitian blocks


@lru_cache(maxsize=None)
def _pair_indices(d: int):
    pi, pj = [], []
    for i in range(d):
        for j in range(i + 1, d):
            pi.append(i)
            pj.append(j)
    return np.asarray(pi, dtype=int), np.asarray(pj, dtype=int)


def svec(mat: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix; svec(A).svec(B) = Tr(AB)."""
    m = np.asarray(mat, dtype=complex)
    d = m.shape[0]
    pi, pj = _pair_indices(d)
    out = np.empty(d * d)
    out[:d] = np.real(np.diag(m))
    if len(pi):
        out[d::2] = _SQRT2 * np.real(m[pi, pj])
        out[d + 1 :: 2] = _SQRT2 * np.imag(m[pi, pj])
    return out


def smat(vec: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    pi, pj = _pair_indices(d)
    m = np.zeros((d, d), dtype=complex)
    m[np.arange(d), np.arange(d)] = v[:d]
    if len(pi):
        off = (v[d::2] + 1j * v[d + 1 :: 2]) / _SQRT2
        m[pi, pj] = off
        m[pj, pi] = off.conj()
    return m


class _Group:
    """All blocks of one dimension, batched for vectorized cone operations."""

    def __init__(self, dim: int, block_ids: list[int], offsets: list[int]):
        self.dim = dim
        self.ids = list(block_ids)
        self.g = len(block_ids)
        self.pi, self.pj = _pair_indices(dim)
        cols = []
        for b in block_ids:
            cols.extend(range(offsets[b], offsets[b] + dim * dim))
        self.cols = np.asarray(cols, dtype=int)

    def svec(self, mats: np.ndarray) -> np.ndarray:
        d = self.dim
        lead = mats.shape[:-3]
        out = np.empty(lead + (self.g, d * d))
        out[..., :d] = np.real(np.einsum("...ii->...i", mats))
        if len(self.pi):
            off = mats[..., self.pi, self.pj]
            out[..., d::2] = _SQRT2 * np.real(off)
            out[..., d + 1 :: 2] = _SQRT2 * np.imag(off)
        return out.reshape(lead + (self.g * d * d,))

    def smat(self, vec: np.ndarray) -> np.ndarray:
        d = self.dim
        lead = vec.shape[:-1]
        v = vec.reshape(lead + (self.g, d * d))
        mats = np.zeros(lead + (self.g, d, d), dtype=complex)
        idx = np.arange(d)
        mats[..., idx, idx] = v[..., :d]
        if len(self.pi):
            off = (v[..., d::2] + 1j * v[..., d + 1 :: 2]) / _SQRT2
            mats[..., self.pi, self.pj] = off
            mats[..., self.pj, self.pi] = off.conj()
        return mats


# ---------------------------------------------------------------------------
# program container and builder


@dataclass(frozen=True)
class ConicProgram:
    blocks: tuple[int, ...]
    objective: np.ndarray = field(repr=False)
    eq_lhs: np.ndarray = field(repr=False)
    eq_rhs: np.ndarray = field(repr=False)
    sense: str = "feasibility"  # "min" | "max" | "feasibility"

    def __post_init__(self):
        n = int(sum(d * d for d in self.blocks))
        if self.objective.shape != (n,):
            raise InputError("objective length must equal the total real block dimension")
        if self.eq_lhs.ndim != 2 or self.eq_lhs.shape[1] != n or self.eq_lhs.shape[0] != self.eq_rhs.shape[0]:
            raise InputError("equality system shapes are inconsistent")
        if self.sense not in ("min", "max", "feasibility"):
            raise InputError(f"unknown sense {self.sense!r}")

    @property
    def total_dim(self) -> int:
        return int(sum(d * d for d in self.blocks))

    def block_offsets(self) -> list[int]:
        offsets, acc = [], 0
        for d in self.blocks:
            offsets.append(acc)
            acc += d * d
        return offsets


class ProgramBuilder:
    """Assembles programs from matrix-valued or coordinate-valued terms."""

    def __init__(self):
        self.dims: list[int] = []
        self._rows: list[np.ndarray] = []
        self._rhs: list[float] = []
        self._obj: list = []
        self.sense = "feasibility"

    def add_block(self, dim: int) -> int:
        if dim < 1:
            raise InputError("block dimension must be >= 1")
        self.dims.append(int(dim))
        return len(self.dims) - 1

    def _offsets(self):
        offsets, acc = [], 0
        for d in self.dims:
            offsets.append(acc)
            acc += d * d
        return offsets, acc

    def _row_from_terms(self, mat_terms=(), coord_terms=()):
        offsets, n = self._offsets()
        row = np.zeros(n)
        for blk, m in mat_terms:
            d = self.dims[blk]
            row[offsets[blk] : offsets[blk] + d * d] += svec(np.asarray(m, dtype=complex))
        for blk, coord, coeff in coord_terms:
            row[offsets[blk] + coord] += coeff
        return row

    def add_eq(self, mat_terms=(), rhs: float = 0.0, coord_terms=()):
        self._rows.append((tuple(mat_terms), tuple(coord_terms)))
        self._rhs.append(float(rhs))

    def set_objective(self, sense: str, mat_terms=(), coord_terms=()):
        self.sense = sense
        self._obj = [tuple(mat_terms), tuple(coord_terms)]

    def build(self) -> ConicProgram:
        offsets, n = self._offsets()
        m = len(self._rows)
        lhs = np.zeros((m, n))
        for i, (mat_terms, coord_terms) in enumerate(self._rows):
            lhs[i] = self._row_from_terms(mat_terms, coord_terms)
        obj = np.zeros(n)
        if self._obj:
            obj = self._row_from_terms(self._obj[0], self._obj[1])
        return ConicProgram(
            blocks=tuple(self.dims),
            objective=obj,
            eq_lhs=lhs,
            eq_rhs=np.asarray(self._rhs, dtype=float),
            sense=self.sense,
        )

    def diag_coord(self, blk: int, i: int) -> int:
        return i

    def offdiag_coords(self, blk: int, i: int, j: int) -> tuple[int, int]:
        """(real, imag) coordinate indices of entry (i, j), i < j."""
        d = self.dims[blk]
        pi, pj = _pair_indices(d)
        for k in range(len(pi)):
            if pi[k] == i and pj[k] == j:
                return d + 2 * k, d + 2 * k + 1
        raise InputError("not an upper off-diagonal entry")


def add_norm_bound_block(builder: ProgramBuilder, residual_rows, residual_consts) -> int:
    """Arrowhead PSD block enforcing ||r||_2 <= t for an affine residual r.

    residual_rows[i] is a list of (block, coord, coeff) terms; the residual is
    r_i = sum(coeff * coordinate) + residual_consts[i].  Returns the new block
    index; its (0,0) entry is the norm bound t (usable in objectives).
    """
    k = len(residual_rows)
    blk = builder.add_block(1 + k)
    for i in range(1, k + 1):
        builder.add_eq(coord_terms=[(blk, builder.diag_coord(blk, i), 1.0), (blk, 0, -1.0)], rhs=0.0)
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            re, im = builder.offdiag_coords(blk, i, j)
            builder.add_eq(coord_terms=[(blk, re, 1.0)], rhs=0.0)
            builder.add_eq(coord_terms=[(blk, im, 1.0)], rhs=0.0)
    for i in range(k):
        re, im = builder.offdiag_coords(blk, 0, i + 1)
        terms = [(blk, re, 1.0 / _SQRT2)] + [(b, c, -w) for (b, c, w) in residual_rows[i]]
        builder.add_eq(coord_terms=terms, rhs=float(residual_consts[i]))
        builder.add_eq(coord_terms=[(blk, im, 1.0)], rhs=0.0)
    return blk


# ---------------------------------------------------------------------------
# solution container


@dataclass
class ConicSolution:
    status: str  # "optimal" | "infeasible" | "numerical-failure"
    primal: list[np.ndarray] | None
    dual_eq: np.ndarray | None
    dual_psd: list[np.ndarray] | None
    objective_value: float
    gap: float
    iterations: int
    residuals: dict


# ---------------------------------------------------------------------------
# preprocessing: rank-revealing elimination of dependent equality rows


class _Preprocess:
    def __init__(self, lhs: np.ndarray, rhs: np.ndarray, rank_tol: float, eq_tol: float):
        m, n = lhs.shape
        self.m_orig = m
        u_buf = np.empty((m, n))
        c_buf = np.empty((m, m))
        b_buf = np.empty(m)
        r = 0
        self.infeasible_cert: np.ndarray | None = None
        for i in range(m):
            row = lhs[i]
            norm = float(np.linalg.norm(row))
            if norm < 1e-14:
                if abs(rhs[i]) > eq_tol:
                    y = np.zeros(m)
                    y[i] = 1.0 / rhs[i]
                    self.infeasible_cert = y
                    break
                continue
            a = row / norm
            bi = rhs[i] / norm
            v = a.copy()
            coef_total = np.zeros(r)
            for _ in range(2):  # re-orthogonalize once for stability
                if r:
                    proj = u_buf[:r] @ v
                    v -= proj @ u_buf[:r]
                    coef_total += proj
            res_norm = float(np.linalg.norm(v))
            expansion = np.zeros(m)
            expansion[i] = 1.0 / norm
            if res_norm > rank_tol:
                u_buf[r] = v / res_norm
                c_buf[r] = expansion
                if r:
                    c_buf[r] -= coef_total @ c_buf[:r]
                c_buf[r] /= res_norm
                b_buf[r] = (bi - (float(coef_total @ b_buf[:r]) if r else 0.0)) / res_norm
                r += 1
            else:
                predicted = float(coef_total @ b_buf[:r]) if r else 0.0
                resid = bi - predicted
                if abs(resid) > eq_tol * (1.0 + abs(bi)):
                    y = expansion - (coef_total @ c_buf[:r] if r else 0.0)
                    self.infeasible_cert = y / resid
                    break
        self.lhs = u_buf[:r].copy()
        self.rhs = b_buf[:r].copy()
        self.coeffs = c_buf[:r].copy()

    def lift_dual(self, y_red: np.ndarray) -> np.ndarray:
        return self.coeffs.T @ y_red if len(y_red) else np.zeros(self.m_orig)


# ---------------------------------------------------------------------------
# the homogeneous self-dual interior-point engine


class _Hsde:
    def __init__(self, program: ConicProgram, pre: _Preprocess, tol: Tolerances, max_iter: int):
        self.tolcfg = tol
        self.max_iter = max_iter
        offsets = program.block_offsets()
        by_dim: dict[int, list[int]] = {}
        for idx, d in enumerate(program.blocks):
            by_dim.setdefault(d, []).append(idx)
        self.groups = [_Group(d, ids, offsets) for d, ids in sorted(by_dim.items())]
        self.nu = float(sum(program.blocks))
        self.n = program.total_dim
        self.A = pre.lhs
        self.b = pre.rhs
        self.m = self.A.shape[0]
        if program.sense == "max":
            self.c = -program.objective.astype(float)
        elif program.sense == "min":
            self.c = program.objective.astype(float)
        else:
            self.c = np.zeros(self.n)
        self.A_mats = [g.smat(self.A[:, g.cols]) if self.m else None for g in self.groups]
        self.A_cols = [self.A[:, g.cols] for g in self.groups]

    # -- helpers ------------------------------------------------------------

    def _gather(self, vec):
        return [g.smat(vec[g.cols]) for g in self.groups]

    def _scatter(self, mats_list):
        out = np.empty(self.n)
        for g, mats in zip(self.groups, mats_list):
            out[g.cols] = g.svec(mats)
        return out

    @staticmethod
    def _sym(m):
        return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))

    def _sandwich_vec(self, w_list, vec):
        """Apply U -> W U W blockwise to a coordinate vector."""
        out = np.empty(self.n)
        for g, w in zip(self.groups, w_list):
            mats = g.smat(vec[g.cols])
            out[g.cols] = g.svec(self._sym(w @ mats @ w))
        return out

    def _min_eig_vec(self, vec) -> float:
        worst = np.inf
        for g in self.groups:
            mats = g.smat(vec[g.cols])
            worst = min(worst, float(np.linalg.eigvalsh(mats).min()))
        return worst

    def _max_step(self, mats_list, dir_list) -> float:
        alpha = np.inf
        for p, dmat in zip(mats_list, dir_list):
            try:
                chol = np.linalg.cholesky(p)
                t1 = np.linalg.solve(chol, dmat)
                bsym = np.linalg.solve(chol, np.conj(np.swapaxes(t1, -1, -2)))
            except np.linalg.LinAlgError:
                w, v = np.linalg.eigh(p)
                floor = max(float(w.max()) * 1e-14, 1e-280)
                w = np.clip(w, floor, None)
                pmh = (v * (w[..., None, :] ** -0.5)) @ np.conj(np.swapaxes(v, -1, -2))
                bsym = pmh @ dmat @ pmh
            evals = np.linalg.eigvalsh(self._sym(bsym))
            lam_min = float(evals.min())
            if not math.isfinite(lam_min):
                return 0.0
            if lam_min < 0:
                alpha = min(alpha, -1.0 / lam_min)
        return alpha

    # -- main loop ----------------------------------------------------------

    def run(self):
        x = [np.broadcast_to(np.eye(g.dim, dtype=complex), (g.g, g.dim, g.dim)).copy() for g in self.groups]
        s = [m.copy() for m in x]
        y = np.zeros(self.m)
        tau, kappa = 1.0, 1.0

        b_scale = 1.0 + (float(np.abs(self.b).max()) if self.m else 0.0)
        c_scale = 1.0 + (float(np.abs(self.c).max()) if self.n else 0.0)
        best = None
        stall = 0

        for it in range(self.max_iter):
            xv = self._scatter(x)
            sv = self._scatter(s)
            rp = (self.A @ xv - self.b * tau) if self.m else np.zeros(0)
            rd = (self.A.T @ y if self.m else 0.0) + sv - self.c * tau
            rg = -float(self.c @ xv) + (float(self.b @ y) if self.m else 0.0) - kappa
            mu = (float(xv @ sv) + tau * kappa) / (self.nu + 1.0)

            xh, yh, sh = xv / tau, y / tau, sv / tau
            pobj = float(self.c @ xh)
            dobj = float(self.b @ yh) if self.m else 0.0
            pres = float(np.abs(self.A @ xh - self.b).max()) / b_scale if self.m else 0.0
            dres = float(np.abs((self.A.T @ yh if self.m else 0.0) + sh - self.c).max()) / c_scale
            gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            metric = max(pres, dres, gap_rel)
            state = dict(
                xv=xv.copy(), sv=sv.copy(), y=y.copy(), tau=tau, kappa=kappa,
                pres=pres, dres=dres, gap_rel=gap_rel, pobj=pobj, dobj=dobj, it=it,
            )
            if best is None or metric < best["metric"]:
                best = dict(state, metric=metric)

            if pres <= 1e-9 and dres <= 1e-9 and gap_rel <= 1e-9:
                return "optimal", state
            cert = self._try_farkas(y, tight=True)
            if cert is not None:
                return "infeasible", dict(state, farkas=cert)
            if tau < 1e-12 * max(1.0, kappa) or mu < 1e-16:
                break

            scal = self._nt_scaling(x, s)
            if scal is None:
                break
            m_reg = None
            if self.m:
                m_mat = self._schur(scal)
                m_reg = m_mat + (1e-14 * float(np.trace(m_mat)) / self.m) * np.eye(self.m)

            # predictor
            aff = self._direction(
                scal, m_reg, x, s, tau, kappa,
                Rp=-rp, Rd=-rd, Rg=-rg,
                Rc=-sv, Rtk=-tau * kappa,
            )
            if aff is None:
                break
            a_aff = self._step_length(x, s, tau, kappa, aff)
            a_aff = min(1.0, a_aff)
            mu_aff = (
                float((xv + a_aff * aff["dx"]) @ (sv + a_aff * aff["ds"]))
                + (tau + a_aff * aff["dtau"]) * (kappa + a_aff * aff["dkappa"])
            ) / (self.nu + 1.0)
            sigma = min(1.0, max((mu_aff / mu) ** 3, 1e-10))

            # corrector
            eta = 1.0 - sigma
            rc_vec = self._corrector_rc(scal, aff, sigma * mu)
            comb = self._direction(
                scal, m_reg, x, s, tau, kappa,
                Rp=-eta * rp, Rd=-eta * rd, Rg=-eta * rg,
                Rc=rc_vec, Rtk=sigma * mu - tau * kappa - aff["dtau"] * aff["dkappa"],
            )
            if comb is None:
                break
            alpha = min(1.0, 0.98 * self._step_length(x, s, tau, kappa, comb))
            if not math.isfinite(alpha):
                alpha = 0.0
            if alpha < 1e-6:
                # recentering rescue: a sigma=1 step keeps the residuals and
                # pulls the iterate off the cone boundary
                cen = self._direction(
                    scal, m_reg, x, s, tau, kappa,
                    Rp=np.zeros_like(rp), Rd=np.zeros_like(rd), Rg=0.0,
                    Rc=self._corrector_rc(scal, None, mu), Rtk=mu - tau * kappa,
                )
                if cen is not None:
                    a_cen = min(1.0, 0.98 * self._step_length(x, s, tau, kappa, cen))
                    if a_cen > alpha:
                        comb, alpha = cen, a_cen
            if alpha < 1e-9:
                stall += 1
                if stall >= 3:
                    break
            else:
                stall = 0
            dx = self._gather(comb["dx"])
            ds = self._gather(comb["ds"])
            for gi in range(len(self.groups)):
                x[gi] = self._sym(x[gi] + alpha * dx[gi])
                s[gi] = self._sym(s[gi] + alpha * ds[gi])
            y = y + alpha * comb["dy"]
            tau += alpha * comb["dtau"]
            kappa += alpha * comb["dkappa"]

        # no certified verdict inside the loop: try relaxed exits on the best iterate
        cert = self._try_farkas(best["y"], tight=False)
        if cert is None and best["tau"] > 0:
            cert = self._try_farkas(best["y"] / best["tau"], tight=False)
        if cert is not None:
            return "infeasible", dict(best, farkas=cert)
        tolc = self.tolcfg
        if best["pres"] <= tolc.equality and best["dres"] <= tolc.equality and best["gap_rel"] <= tolc.gap:
            return "optimal", best
        return "numerical-failure", best

    def _try_farkas(self, y: np.ndarray, tight: bool):
        if not self.m:
            return None
        bty = float(self.b @ y)
        if bty <= 1e-11 * (1.0 + float(np.abs(y).max(initial=0.0))):
            return None
        yn = y / bty
        z = -(self.A.T @ yn)
        scale = 1.0 + float(np.abs(z).max())
        thresh = (1e-10 if tight else 0.5 * self.tolcfg.psd_slack) * scale
        if self._min_eig_vec(z) >= -thresh:
            return yn
        return None

    def _nt_scaling(self, x, s):
        scal = []
        for g, xg, sg in zip(self.groups, x, s):
            wx, vx = np.linalg.eigh(xg)
            if wx.min() <= 0:
                return None
            xh = (vx * np.sqrt(wx)[..., None, :]) @ np.conj(np.swapaxes(vx, -1, -2))
            q = self._sym(xh @ sg @ xh)
            wq, vq = np.linalg.eigh(q)
            if wq.min() <= 0:
                return None
            qmh = (vq * (wq ** -0.5)[..., None, :]) @ np.conj(np.swapaxes(vq, -1, -2))
            w = self._sym(xh @ qmh @ xh)
            ww, vw = np.linalg.eigh(w)
            gmat = (vw * np.sqrt(ww)[..., None, :]) @ np.conj(np.swapaxes(vw, -1, -2))
            ginv = (vw * (ww ** -0.5)[..., None, :]) @ np.conj(np.swapaxes(vw, -1, -2))
            lam = self._sym(ginv @ xg @ ginv)
            wl, vl = np.linalg.eigh(lam)
            scal.append(dict(w=w, g=gmat, gi=ginv, lam=lam, wl=np.clip(wl, 1e-300, None), vl=vl))
        return scal

    def _schur(self, scal):
        if not self.m:
            return np.zeros((0, 0))
        m_mat = np.zeros((self.m, self.m))
        for g, sc, amats, acols in zip(self.groups, scal, self.A_mats, self.A_cols):
            w = sc["w"]
            t = np.matmul(w, np.matmul(amats, w))
            tv = g.svec(t)
            m_mat += tv @ acols.T
        return 0.5 * (m_mat + m_mat.T)

    def _what(self, scal, vec):
        out = np.empty(self.n)
        for g, sc in zip(self.groups, scal):
            mats = g.smat(vec[g.cols])
            out[g.cols] = g.svec(self._sym(sc["w"] @ mats @ sc["w"]))
        return out

    def _corrector_rc(self, scal, aff, target):
        """svec of Gi . L_lam^{-1}(target*I - lam^2 - sym(dxa o dsa)) . Gi.

        aff=None drops the quadratic term (pure centering target).
        """
        dxm = self._gather(aff["dx"]) if aff is not None else None
        dsm = self._gather(aff["ds"]) if aff is not None else None
        out = np.empty(self.n)
        for gi_idx, (g, sc) in enumerate(zip(self.groups, scal)):
            gi, gm, lam = sc["gi"], sc["g"], sc["lam"]
            v = target * np.broadcast_to(np.eye(g.dim), lam.shape) - lam @ lam
            if aff is not None:
                dxa = gi @ dxm[gi_idx] @ gi
                dsa = gm @ dsm[gi_idx] @ gm
                v = v - 0.5 * (dxa @ dsa + dsa @ dxa)
            v = self._sym(v)
            # Jordan solve lam o U = V in lam's eigenbasis
            vl, wl = sc["vl"], sc["wl"]
            vt = np.conj(np.swapaxes(vl, -1, -2)) @ v @ vl
            denom = wl[..., :, None] + wl[..., None, :]
            u = vl @ (2.0 * vt / denom) @ np.conj(np.swapaxes(vl, -1, -2))
            out[g.cols] = g.svec(self._sym(gi @ u @ gi))
        return out

    def _direction(self, scal, m_reg, x, s, tau, kappa, Rp, Rd, Rg, Rc, Rtk):
        """Newton direction with one full-system refinement pass.

        Near convergence the Schur pipeline loses accuracy; re-evaluating the
        true equation residuals of the first solve and solving once more keeps
        the attainable feasibility floor at machine level.
        """
        d1 = self._direction_raw(scal, m_reg, tau, kappa, Rp, Rd, Rg, Rc, Rtk)
        if d1 is None:
            return None
        e_p = (self.A @ d1["dx"] - self.b * d1["dtau"] - Rp) if self.m else np.zeros(0)
        e_d = (self.A.T @ d1["dy"] if self.m else 0.0) + d1["ds"] - self.c * d1["dtau"] - Rd
        e_g = -float(self.c @ d1["dx"]) + (float(self.b @ d1["dy"]) if self.m else 0.0) - d1["dkappa"] - Rg
        e_c = self._hx_apply(scal, d1["dx"]) + d1["ds"] - Rc
        e_tk = kappa * d1["dtau"] + tau * d1["dkappa"] - Rtk
        d2 = self._direction_raw(scal, m_reg, tau, kappa, e_p, e_d, e_g, e_c, e_tk)
        if d2 is None:
            return d1
        return {k: d1[k] - d2[k] for k in d1}

    def _hx_apply(self, scal, vec):
        """Blockwise U -> W^{-1} U W^{-1} on a coordinate vector."""
        out = np.empty(self.n)
        for g, sc in zip(self.groups, scal):
            winv = sc["gi"] @ sc["gi"]
            mats = g.smat(vec[g.cols])
            out[g.cols] = g.svec(self._sym(winv @ mats @ winv))
        return out

    def _direction_raw(self, scal, m_reg, tau, kappa, Rp, Rd, Rg, Rc, Rtk):
        what_rdc = self._what(scal, Rd - Rc)
        wc = self._what(scal, self.c)
        if self.m:
            q = Rp + self.A @ what_rdc
            u = self.A @ wc
            rhs = np.stack([q, u + self.b], axis=1)
            try:
                sols = np.linalg.solve(m_reg, rhs)
            except np.linalg.LinAlgError:
                return None
            sols += np.linalg.solve(m_reg, rhs - m_reg @ sols)  # Schur refinement
            g1, g2 = sols[:, 0], sols[:, 1]
            at_g1 = self.A.T @ g1
            at_g2 = self.A.T @ g2
        else:
            g1 = g2 = np.zeros(0)
            at_g1 = at_g2 = np.zeros(self.n)
        p1 = self._what(scal, at_g1 - (Rd - Rc))
        p2 = self._what(scal, at_g2 - self.c)
        h0 = -Rg - float(self.c @ p1) + (float(self.b @ g1) if self.m else 0.0)
        h1 = -float(self.c @ p2) + (float(self.b @ g2) if self.m else 0.0)
        denom = kappa + tau * h1
        if abs(denom) < 1e-300:
            return None
        dtau = (Rtk - tau * h0) / denom
        dy = g1 + g2 * dtau if self.m else np.zeros(0)
        dx = p1 + p2 * dtau
        dkappa = h0 + h1 * dtau
        ds = Rd - (self.A.T @ dy if self.m else 0.0) + self.c * dtau
        return dict(dx=dx, dy=dy, ds=ds, dtau=dtau, dkappa=dkappa)

    def _step_length(self, x, s, tau, kappa, direction):
        dx = self._gather(direction["dx"])
        ds = self._gather(direction["ds"])
        alpha = min(self._max_step(x, dx), self._max_step(s, ds))
        if direction["dtau"] < 0:
            alpha = min(alpha, -tau / direction["dtau"])
        if direction["dkappa"] < 0:
            alpha = min(alpha, -kappa / direction["dkappa"])
        return alpha


# ---------------------------------------------------------------------------
# public interface


def solve(program: ConicProgram, tolerances: Tolerances = DEFAULT_TOL, max_iter: int = 200) -> ConicSolution:
    """Solve a block-PSD program; verdicts carry verifiable certificates."""
    if program.total_dim > 20000:
        raise InputError("program exceeds the supported size (total real dimension <= ~10^4)")
    pre = _Preprocess(program.eq_lhs, program.eq_rhs, tolerances.rank, tolerances.equality)
    offsets = program.block_offsets()
    if pre.infeasible_cert is not None:
        y = pre.infeasible_cert
        dual_psd = _blocks_from_vec(-(program.eq_lhs.T @ y), program.blocks, offsets)
        return ConicSolution(
            status="infeasible", primal=None, dual_eq=y, dual_psd=dual_psd,
            objective_value=math.nan, gap=math.nan, iterations=0,
            residuals={"preprocessing": "inconsistent dependent equality row"},
        )
    engine = _Hsde(program, pre, tolerances, max_iter)
    status, state = engine.run()
    if status == "optimal":
        tau = state["tau"]
        xv = state["xv"] / tau
        sv = state["sv"] / tau
        y = pre.lift_dual(state["y"] / tau)
        pobj = state["pobj"]
        dobj = state["dobj"]
        value = 0.0 if program.sense == "feasibility" else (-pobj if program.sense == "max" else pobj)
        return ConicSolution(
            status="optimal",
            primal=_blocks_from_vec(xv, program.blocks, offsets),
            dual_eq=y,
            dual_psd=_blocks_from_vec(sv, program.blocks, offsets),
            objective_value=value,
            gap=abs(pobj - dobj),
            iterations=state["it"] + 1,
            residuals={"primal": state["pres"], "dual": state["dres"], "gap_rel": state["gap_rel"]},
        )
    if status == "infeasible":
        y = pre.lift_dual(state["farkas"])
        bty = float(program.eq_rhs @ y)
        if bty > 0:
            y = y / bty
        dual_psd = _blocks_from_vec(-(program.eq_lhs.T @ y), program.blocks, offsets)
        return ConicSolution(
            status="infeasible", primal=None, dual_eq=y, dual_psd=dual_psd,
            objective_value=math.nan, gap=math.nan, iterations=state["it"] + 1,
            residuals={"primal": state["pres"], "dual": state["dres"], "gap_rel": state["gap_rel"]},
        )
    return ConicSolution(
        status="numerical-failure", primal=None, dual_eq=None, dual_psd=None,
        objective_value=math.nan, gap=math.nan, iterations=state["it"] + 1,
        residuals={"primal": state["pres"], "dual": state["dres"], "gap_rel": state["gap_rel"]},
    )


def _blocks_from_vec(vec: np.ndarray, blocks, offsets) -> list[np.ndarray]:
    return [smat(vec[off : off + d * d], d) for d, off in zip(blocks, offsets)]


def _vec_from_blocks(mats, blocks, offsets, n) -> np.ndarray:
    out = np.empty(n)
    for m, d, off in zip(mats, blocks, offsets):
        out[off : off + d * d] = svec(m)
    return out


def _block_min_eig(mat: np.ndarray) -> float:
    if mat.shape[0] <= 8:
        return min_eigenvalue(0.5 * (mat + mat.conj().T))
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)).min())


def verify_certificate(program: ConicProgram, solution: ConicSolution, tolerances: Tolerances = DEFAULT_TOL) -> bool:
    """Recompute residuals, gap, and cone membership from scratch.

    Uses only the program data and the reported solution, never solver state.
    """
    offsets = program.block_offsets()
    n = program.total_dim
    a_mat, b_vec = program.eq_lhs, program.eq_rhs
    if program.sense == "max":
        c_vec = -program.objective
    elif program.sense == "feasibility":
        c_vec = np.zeros(n)
    else:
        c_vec = program.objective
    b_scale = 1.0 + (float(np.abs(b_vec).max()) if len(b_vec) else 0.0)
    c_scale = 1.0 + float(np.abs(c_vec).max())
    if solution.status == "optimal":
        if solution.primal is None or solution.dual_eq is None or solution.dual_psd is None:
            return False
        xv = _vec_from_blocks(solution.primal, program.blocks, offsets, n)
        sv = _vec_from_blocks(solution.dual_psd, program.blocks, offsets, n)
        y = solution.dual_eq
        if any(_block_min_eig(m) < -tolerances.psd_slack for m in solution.primal):
            return False
        if any(_block_min_eig(m) < -tolerances.psd_slack for m in solution.dual_psd):
            return False
        if len(b_vec) and float(np.abs(a_mat @ xv - b_vec).max()) > tolerances.equality * b_scale:
            return False
        dual_res = (a_mat.T @ y if len(b_vec) else 0.0) + sv - c_vec
        if float(np.abs(dual_res).max()) > tolerances.equality * c_scale:
            return False
        pobj = float(c_vec @ xv)
        dobj = float(b_vec @ y) if len(b_vec) else 0.0
        return abs(pobj - dobj) <= tolerances.gap * (1.0 + abs(pobj) + abs(dobj))
    if solution.status == "infeasible":
        if solution.dual_eq is None:
            return False
        y = solution.dual_eq
        bty = float(b_vec @ y)
        if bty <= 0:
            return False
        z = -(a_mat.T @ (y / bty))
        scale = 1.0 + float(np.abs(z).max())
        blocks = _blocks_from_vec(z, program.blocks, offsets)
        return all(_block_min_eig(m) >= -tolerances.psd_slack * scale for m in blocks)
    return False


def dump_program(program: ConicProgram) -> str:
    """Plain-text dump (dimensions + triplet constraints) for external cross-checks."""
    lines = [
        "conic-program",
        "blocks: " + " ".join(str(d) for d in program.blocks),
        f"sense: {program.sense}",
    ]
    for j in np.nonzero(program.objective)[0]:
        lines.append(f"obj {j} {program.objective[j]!r}")
    for i in range(program.eq_lhs.shape[0]):
        row = program.eq_lhs[i]
        for j in np.nonzero(row)[0]:
            lines.append(f"eq {i} {j} {row[j]!r}")
        lines.append(f"rhs {i} {program.eq_rhs[i]!r}")
    return "\n".join(lines) + "\n"
