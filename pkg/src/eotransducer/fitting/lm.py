"""Damped Gauss-Newton (Levenberg-Marquardt) least squares.

The solver works in scaled coordinates ``u = p / scale`` so that parameters
of very different magnitude (Hz-scale linewidths next to O(1) occupancies)
share one damping parameter. Damping uses Marquardt's diagonal, ``lambda *
diag(J^T J)``, and each step is the minimum-norm least-squares solution of
the augmented system, which doubles as the pseudo-inverse tie-break for
rank-deficient Jacobians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

XTOL = 1e-10
FTOL = 1e-12
GTOL = 1e-6
MAX_ITER = 200
LAMBDA_INIT = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 10.0
LAMBDA_MAX = 1e16
_FD_REL = 6e-6  # ~ eps**(1/3), central differences
_RANK_RTOL = 1e-10


@dataclass
class ModelSpec:
    """A model ``func(params, x) -> y`` plus parameter metadata.

    Parameters
    ----------
    func : callable
        Takes the full parameter vector (ordered like `names`) and the
        independent variable; returns predictions with the shape of y.
    names : sequence of str
    lower, upper : sequence of float, optional
        Box bounds; default unbounded.
    fixed : mapping, optional
        Parameters held at the given value.
    scales : sequence of float, optional
        Typical magnitudes used to non-dimensionalize the problem. Default
        is ``max(|init|, 1e-3 * bound width, 1)`` per parameter.
    jac : callable, optional
        Analytic ``d func / d params`` with shape ``(n_points, n_params)``.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    names: Sequence[str]
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None
    fixed: Mapping[str, float] = field(default_factory=dict)
    scales: Sequence[float] | None = None
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.names = tuple(self.names)
        n = len(self.names)
        lo = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        hi = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("bounds must have one entry per parameter")
        if np.any(lo >= hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        self.lower, self.upper = lo, hi
        unknown = set(self.fixed) - set(self.names)
        if unknown:
            raise ValueError(f"fixed parameters not in model: {sorted(unknown)}")

    @property
    def free_mask(self) -> np.ndarray:
        return np.array([name not in self.fixed for name in self.names])


@dataclass
class FitResult:
    params: dict
    ci95: dict
    residual_norm: float  # sum of squared (weighted) residuals
    iterations: int
    converged: bool
    covariance: np.ndarray
    free_names: tuple
    history: list
    unidentifiable: tuple = ()
    message: str = ""
    n_points: int = 0

    def __getitem__(self, name):
        return self.params[name]

    @property
    def dof(self) -> int:
        return self.n_points - len(self.free_names)

    def stderr(self, name) -> float:
        i = self.free_names.index(name)
        return math.sqrt(self.covariance[i, i])

    def cov(self, a, b) -> float:
        return float(self.covariance[self.free_names.index(a), self.free_names.index(b)])


def _default_scales(init, lo, hi):
    width = hi - lo
    s = np.maximum(np.abs(init), 1.0)
    finite = np.isfinite(width)
    s[finite] = np.maximum(np.abs(init[finite]), 1e-3 * width[finite])
    s[s == 0] = 1.0
    return s


def least_squares_fit(model: ModelSpec, x, y, init, weights=None, *,
                      max_iter: int = MAX_ITER, xtol: float = XTOL, ftol: float = FTOL,
                      gtol: float = GTOL, absolute_sigma: bool = False) -> FitResult:
    """Minimize ``sum w (y - f(p, x))^2`` over the free parameters.

    `init` is a full parameter vector or a name->value mapping. `weights`
    are per-point inverse variances; with ``absolute_sigma`` the covariance
    is taken from them as-is, otherwise it is rescaled by the reduced
    chi-square.

    Convergence needs all three: relative step below `xtol`, relative
    change of the residual norm below `ftol`, and the largest cosine between
    the residual and a Jacobian column below `gtol`. Near an exact fit the
    cosine threshold widens to the level set by rounding noise in the
    residuals. Hitting `max_iter` returns the best point so far with
    ``converged=False``.
    """
    names = model.names
    if isinstance(init, Mapping):
        init = [init[n] if n not in model.fixed else model.fixed[n] for n in names]
    p0 = np.array(init, dtype=float)
    if p0.shape != (len(names),):
        raise ValueError(f"init must have {len(names)} entries")
    for i, n in enumerate(names):
        if n in model.fixed:
            p0[i] = model.fixed[n]
    # x is handed to the model untouched (may be a tuple)
    y = np.asarray(y, dtype=float).ravel()
    free = model.free_mask
    nfree = int(free.sum())
    if y.size < 2 * nfree:
        raise ValueError(f"need at least {2 * nfree} data points for {nfree} free parameters, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("data must be finite")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != y.shape or np.any(w < 0):
        raise ValueError("weights must be non-negative with the shape of y")
    sw = np.sqrt(w)

    lo, hi = model.lower[free], model.upper[free]
    if np.any(p0[free] < lo) or np.any(p0[free] > hi):
        raise ValueError("initial guess lies outside the bounds")
    scale = (np.asarray(model.scales, dtype=float)[free] if model.scales is not None
             else _default_scales(p0[free], lo, hi))
    ulo, uhi = lo / scale, hi / scale

    def full(u):
        p = p0.copy()
        p[free] = u * scale
        return p

    def resid(u):
        f = np.asarray(model.func(full(u), x), dtype=float).ravel()
        return sw * (y - f)

    def jacobian(u):
        p = full(u)
        if model.jac is not None:
            dfdp = np.asarray(model.jac(p, x), dtype=float)[:, free]
            return -(sw[:, None] * dfdp) * scale[None, :]
        J = np.empty((y.size, nfree))
        for j in range(nfree):
            h = _FD_REL * max(abs(u[j]), 1.0)
            up, um = u.copy(), u.copy()
            if u[j] + h > uhi[j]:
                um[j] -= h
                J[:, j] = (resid(u) - resid(um)) / h
            elif u[j] - h < ulo[j]:
                up[j] += h
                J[:, j] = (resid(up) - resid(u)) / h
            else:
                up[j] += h
                um[j] -= h
                J[:, j] = (resid(up) - resid(um)) / (2 * h)
        return J

    # rounding noise in the residual vector; a decrease of S below ~2|r| times
    # this cannot be resolved, which loosens the gradient test near exact fits
    noise_floor = 64 * np.finfo(float).eps * math.sqrt(y.size) * float(np.max(np.abs(sw * y), initial=0.0))

    def gradient_small(J, r, active):
        rn = np.linalg.norm(r)
        if rn <= noise_floor:
            return True, 0.0
        cn = np.linalg.norm(J, axis=0)
        ok = (cn > 0) & ~active
        cosine = float(np.max(np.abs(J.T @ r)[ok] / (cn[ok] * rn))) if ok.any() else 0.0
        return cosine <= max(gtol, math.sqrt(2 * noise_floor / rn)), cosine

    u = p0[free] / scale
    r = resid(u)
    S = float(r @ r)
    history = [S]
    lam = LAMBDA_INIT
    it = 0
    converged = False
    step_ok = False
    message = "maximum iterations reached"
    while True:
        J = jacobian(u)
        g = J.T @ r  # dS/du = 2 g; a parameter on a bound is frozen if -g points outward
        at_lo = u <= ulo
        at_hi = u >= uhi
        active = (at_lo & (g > 0)) | (at_hi & (g < 0))
        grad_ok, cosine = gradient_small(J, r, active)
        if S == 0.0:
            converged, message = True, "zero residual"
            break
        if step_ok and grad_ok:
            converged, message = True, "step, residual and gradient criteria met"
            break
        if it >= max_iter:
            break
        Ja = J[:, ~active]
        d = np.sum(Ja * Ja, axis=0)
        accepted = False
        while lam <= LAMBDA_MAX:
            A = np.vstack([Ja, np.diag(np.sqrt(lam * d))])
            b = np.concatenate([-r, np.zeros(Ja.shape[1])])
            delta_a = np.linalg.lstsq(A, b, rcond=None)[0]
            delta = np.zeros_like(u)
            delta[~active] = delta_a
            u_new = np.clip(u + delta, ulo, uhi)
            r_new = resid(u_new)
            S_new = float(r_new @ r_new)
            if np.isfinite(S_new) and S_new <= S:
                accepted = True
                lam = max(lam / LAMBDA_DOWN, 1e-300)
                break
            lam *= LAMBDA_UP
        if not accepted:
            converged = grad_ok
            message = "no further decrease possible" + ("" if converged else " (gradient not small)")
            break
        it += 1
        step = np.linalg.norm(u_new - u)
        rel_step = step <= xtol * (np.linalg.norm(u_new) + xtol)
        rel_f = (S - S_new) <= ftol * S
        step_ok = rel_step and rel_f
        u, r, S = u_new, r_new, S_new
        history.append(S)

    p = full(u)
    J = jacobian(u)
    n, k = J.shape
    unident: tuple = ()
    cov_u = np.full((k, k), np.nan)
    if k:
        _, s_full, vt = np.linalg.svd(J, full_matrices=False)
        tol = _RANK_RTOL * (s_full[0] if s_full.size and s_full[0] > 0 else 1.0)
        null = vt[s_full <= tol]
        free_names = [nm for nm, f in zip(names, free) if f]
        if null.size:
            mask = np.any(np.abs(null) > 0.1, axis=0)
            unident = tuple(nm for nm, m in zip(free_names, mask) if m)
        JtJ = J.T @ J
        cov_u = np.linalg.pinv(JtJ, rcond=_RANK_RTOL ** 2)
        dof = n - k
        if not absolute_sigma:
            cov_u = cov_u * (S / dof if dof > 0 else np.nan)
        for nm in unident:
            i = free_names.index(nm)
            cov_u[i, :] = np.nan
            cov_u[:, i] = np.nan
            cov_u[i, i] = np.inf
    cov = cov_u * np.outer(scale, scale)
    dof = n - k
    # known errors: normal quantile; errors estimated from the scatter: Student t
    if absolute_sigma:
        tq = stats.norm.ppf(0.975)
    else:
        tq = stats.t.ppf(0.975, dof) if dof > 0 else np.nan
    free_names = tuple(nm for nm, f in zip(names, free) if f)
    params = {nm: float(v) for nm, v in zip(names, p)}
    ci = {nm: 0.0 for nm in names}
    for i, nm in enumerate(free_names):
        var = cov[i, i]
        ci[nm] = float(tq * math.sqrt(var)) if np.isfinite(var) and var >= 0 else float("inf")
    if unident:
        message += f"; unidentifiable: {', '.join(unident)}"
    return FitResult(params=params, ci95=ci, residual_norm=S, iterations=it, converged=converged,
                     covariance=cov, free_names=free_names, history=history,
                     unidentifiable=unident, message=message, n_points=n)
