"""
Operator-splitting (ADMM) solver for diffeomorphic point-set matching.

The discrete problem

    min_{x, a}  dist(x_{n+1}) + kin(a)   s.t.  G^x x + G^a a = q

is split into a kinetic-energy subproblem over the constraint set and a
distance subproblem, tied together by the consensus constraint
``(x, a) = (x~, a~)`` with scaled duals ``(u, w)``:

    (x, a)   <- argmin kin(a) + rho/2 |(x, a) - (x~, a~) - (u, w)|^2   on  G(x, a) = q
    (x~, a~) <- argmin dist(x~) + rho/2 |(x~, a~) - (x, a) + (u, w)|^2
    (u, w)   <- (u, w) + (x~, a~) - (x, a)

Inside the solver all Gram matrices are frozen at the template, which keeps
the constraint linear. The reported trajectory is re-integrated with the
state-dependent kernel.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from ._threads import reproducible, thread_limits
from .geometry import Shape, censored_hausdorff, mean_edge_length
from .kernels import GaussianKernel, sigma_s_policy, sigma_v_policy
from .linsolve import (KronFactor, LinearSolverError, PcgConfig, PcgOutcome, ScaledIdentity,
                       block_diag_apply_inverse, cholesky_spd, pcg)
from .objective import KernelDistance, KineticEnergyOperator, boundary_weights
from .trajectory import (TimeGrid, apply_Ga, apply_GaT, apply_Gx, apply_GxT, observe_terminal,
                         rhs_q, rollout)

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "AdmmState",
    "RegistrationResult",
    "KktSystem",
    "NewtonInfo",
    "build_schur_preconditioner",
    "solve_kinetic_subproblem",
    "newton_prox",
    "solve_distance_subproblem",
    "dual_update",
    "residuals",
    "check_stopping",
    "register",
    "register_multiframe",
    "frame_blocks",
    "CONDITIONS",
    "DISTANCE_SCALES",
    "LOG_COLUMNS",
]

CONDITIONS = ("C1", "C2", "C3", "C4", "C5")
DISTANCE_SCALES = ("counting", "probability")
LOG_COLUMNS = ("iter", "hausdorff_censored", "hausdorff_rel", "primal_norm", "primal_rel",
               "dual_norm", "dual_rel", "t_kinetic_s", "t_distance_s")


@dataclass(frozen=True)
class SolverConfig:
    """Algorithmic parameters. Defaults follow the published parameter table.

    ``sigma_v`` / ``sigma_s`` override the bandwidth policies when set.
    ``kinetic_scale`` is the Hessian scale ``c`` of the kinetic term
    (``None`` means ``2h``). ``stopping`` lists the enabled conditions.

    ``distance_scale`` fixes the mass of the Dirac sums in the distance:
    ``"counting"`` multiplies ``alpha`` by ``m0 * m1`` (unit mass per point for
    equal counts), ``"probability"`` uses unit total mass. With unit total
    mass the distance of a 200-point shape is about three orders of magnitude
    below the kinetic cost of any visible deformation, so ``alpha = 1`` then
    leaves the template in place.

    ``newton_warm_start`` starts each Newton solve from the better (in
    objective value) of the proximal centre and the previous consensus.
    """

    n: int = 5
    alpha: float = 1.0
    rho: float = 1.0
    tau_v: float = 6.0
    tau_s: float = 1.0
    eps_prim: float = 1e-3
    eps_dual: float = 1e-3
    tau_haus: float = 0.5
    n_iter: int = 100
    kkt_tol: float = 1e-4
    kkt_max_iter: int = 100
    newton_max_iter: int = 50
    newton_gtol: float = 1e-8
    newton_pcg_max_iter: int = 100
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50
    tau_pcg: float = 0.25
    percentile: float = 0.95
    kinetic_scale: Optional[float] = None
    sigma_v: Optional[float] = None
    sigma_s: Optional[float] = None
    boundary_factor: float = 1.0
    distance_scale: str = "counting"
    newton_warm_start: bool = True
    stopping: tuple = CONDITIONS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stopping", tuple(self.stopping))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        for name in ("alpha", "rho", "tau_v", "tau_s", "eps_prim", "eps_dual", "tau_haus",
                     "kkt_tol", "tau_pcg", "newton_gtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_iter < 1 or self.kkt_max_iter < 1 or self.newton_max_iter < 0:
            raise ValueError("iteration caps must be positive")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise ValueError("line-search constants must lie in (0, 1)")
        if self.distance_scale not in DISTANCE_SCALES:
            raise ValueError(f"distance_scale must be one of {DISTANCE_SCALES}")
        unknown = set(self.stopping) - set(CONDITIONS)
        if unknown:
            raise ValueError(f"unknown stopping conditions {sorted(unknown)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stopping"] = list(self.stopping)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class AdmmState:
    """Primal pair ``(x, a)``, consensus pair ``(xt, at)``, scaled duals ``(u, w)``."""

    x: np.ndarray
    a: np.ndarray
    xt: np.ndarray
    at: np.ndarray
    u: np.ndarray
    w: np.ndarray
    k: int = 0
    log: list = field(default_factory=list)
    hausdorff_history: list = field(default_factory=list)

    @classmethod
    def initial(cls, x0: np.ndarray, n: int) -> "AdmmState":
        m = x0.shape[0]
        a = np.zeros((n, m, 3))
        x = np.broadcast_to(x0, (n + 1, m, 3)).copy()
        return cls(x=x, a=a, xt=x.copy(), at=a.copy(), u=np.zeros_like(x), w=np.zeros_like(a))


@dataclass
class RegistrationResult:
    a: np.ndarray
    x: np.ndarray
    x_admm: np.ndarray
    kinetic_energy: float
    initial_hausdorff: float
    final_hausdorff: float
    final_hausdorff_rollout: float
    termination: str
    fired: tuple
    iterations: int
    log: list
    diagnostics: list
    config: SolverConfig
    resolved: dict
    runtime_s: float
    template: Shape
    frames: list
    data_blocks: list
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.termination in ("C1", "C2", "C3", "C4")


class KktSystem:
    """Frozen-kernel operators of the kinetic-energy subproblem.

    Holds ``K = K[x_0]``, the factor of ``cK + rho I`` used in ``M^{-1}`` and
    the factor of the Schur preconditioner block. Vectors in the multiplier
    space have shape ``(n+1, m, 3)``.
    """

    def __init__(self, x0, kernel: GaussianKernel, n: int, rho: float, c: float | None = None):
        self.x0 = np.asarray(x0, dtype=float).reshape(-1, 3)
        self.kernel = kernel
        self.grid = TimeGrid(n)
        self.n = n
        self.m = self.x0.shape[0]
        self.h = self.grid.h
        self.rho = float(rho)
        self.c = 2.0 * self.h if c is None else float(c)
        self.K = kernel(self.x0)
        self.kinetic = KineticEnergyOperator(self.K, self.h, self.c)
        self.a_factor = cholesky_spd(self.c * self.K + self.rho * np.eye(self.m))
        self.q = rhs_q(self.x0, n)
        self._precond = None

    @property
    def shape_x(self):
        return (self.n + 1, self.m, 3)

    @property
    def shape_a(self):
        return (self.n, self.m, 3)

    def apply_G(self, a, x) -> np.ndarray:
        return apply_Gx(x) + apply_Ga(self.K, a, self.h)

    def apply_GT(self, nu):
        return apply_GaT(self.K, nu, self.h), apply_GxT(nu)

    def M_blocks(self) -> list:
        blk_a = KronFactor(self.a_factor)
        blk_x = ScaledIdentity(self.rho, 3 * self.m)
        return [blk_a] * self.n + [blk_x] * (self.n + 1)

    def apply_Minv(self, ga, gx):
        v = np.concatenate([np.ravel(ga), np.ravel(gx)])
        out = block_diag_apply_inverse(self.M_blocks(), v)
        na = self.n * self.m * 3
        return out[:na].reshape(self.shape_a), out[na:].reshape(self.shape_x)

    def schur_matvec(self, nu_flat: np.ndarray) -> np.ndarray:
        nu = nu_flat.reshape(self.shape_x)
        ta, tx = self.apply_Minv(*self.apply_GT(nu))
        return self.apply_G(ta, tx).ravel()

    def schur_dense_diagonal_blocks(self):
        """The ``m x m`` factors of the exact diagonal Schur blocks.

        Block 0 is ``I / rho``; blocks ``1..n`` are
        ``h^2 K (cK + rho I)^{-1} K + (2/rho) I`` (each acting per coordinate).
        """
        KinvK = self.a_factor.solve(self.K)
        L = self.h ** 2 * (self.K @ KinvK)
        L = 0.5 * (L + L.T) + (2.0 / self.rho) * np.eye(self.m)
        return np.eye(self.m) / self.rho, L

    @property
    def preconditioner(self):
        if self._precond is None:
            self._precond = build_schur_preconditioner(self)
        return self._precond


def build_schur_preconditioner(ops: KktSystem):
    """Block-Jacobi preconditioner for the reduced KKT system.

    Drops the off-diagonal ``-I/rho`` blocks of ``G M^{-1} G^T`` and inverts
    the diagonal ones with a cached Cholesky factor.
    """
    _, L = ops.schur_dense_diagonal_blocks()
    blocks = [ScaledIdentity(1.0 / ops.rho, 3 * ops.m)] + [KronFactor(cholesky_spd(L))] * ops.n

    def apply(r: np.ndarray) -> np.ndarray:
        return block_diag_apply_inverse(blocks, r)

    apply.blocks = blocks
    return apply


def solve_kinetic_subproblem(state: AdmmState, ops: KktSystem, cfg: SolverConfig,
                             pcg_cfg: PcgConfig | None = None, precondition: bool = True):
    """One Schur-complement step on the kinetic-energy subproblem.

    Returns ``(x_new, a_new, outcome)``; the step solves
    ``G M^{-1} G^T nu = G M^{-1} g - c`` and recovers
    ``(p^a, p^x) = M^{-1} (G^T nu - g)``.
    """
    a, x = state.a, state.x
    rho = ops.rho
    ga = ops.kinetic.gradient(a) + rho * (a - state.at - state.w)
    gx = rho * (x - state.xt - state.u)
    cres = ops.apply_G(a, x) - ops.q
    Mga, Mgx = ops.apply_Minv(ga, gx)
    rhs = ops.apply_G(Mga, Mgx) - cres
    if pcg_cfg is None:
        pcg_cfg = PcgConfig(cfg.kkt_tol, cfg.kkt_max_iter,
                            ops.preconditioner if precondition else None)
    try:
        out = pcg(ops.schur_matvec, rhs.ravel(), pcg_cfg)
    except LinearSolverError as exc:
        raise LinearSolverError(f"kinetic subproblem (ADMM iteration {state.k + 1}): {exc}") from exc
    GTa, GTx = ops.apply_GT(out.solution.reshape(ops.shape_x))
    pa, px = ops.apply_Minv(GTa - ga, GTx - gx)
    return x + px, a + pa, out


@dataclass(frozen=True)
class NewtonInfo:
    iterations: int
    grad_norm0: float
    grad_norm: float
    pcg_iterations: int
    line_search_failed: bool


def newton_prox(kd: KernelDistance, y: np.ndarray, rho: float, cfg: SolverConfig,
                z0: np.ndarray | None = None):
    """Minimize ``kd(z) + rho/2 |z - y|^2`` by inexact Newton-CG with Armijo backtracking.

    The inner PCG tolerance follows the quadratic forcing sequence
    ``min(|g|/|g0|, tau_pcg)``. With ``z0`` given, Newton starts from whichever
    of ``z0`` and ``y`` has the lower objective.
    """
    y = np.asarray(y, dtype=float)
    z = y.copy() if z0 is None else np.asarray(z0, dtype=float).copy()

    def F(zz):
        d = zz - y
        return kd.value(zz) + 0.5 * rho * float(np.sum(d * d))

    def grad(zz):
        return kd.gradient(zz) + rho * (zz - y)

    f = F(z)
    if z0 is not None:
        fy = F(y)
        if fy <= f:
            z, f = y.copy(), fy
    g = grad(z)
    g0 = float(np.linalg.norm(g))
    gnorm = g0
    stop = cfg.newton_gtol * max(1.0, g0)
    pcg_total = 0
    failed = False
    it = 0
    while it < cfg.newton_max_iter and gnorm > stop:
        Hd = kd.hessian_operator(z)

        def hess(v, Hd=Hd):
            vv = v.reshape(z.shape)
            return (Hd(vv) + rho * vv).ravel()

        tol = min(gnorm / g0, cfg.tau_pcg)
        out = pcg(hess, -g.ravel(), PcgConfig(tol, cfg.newton_pcg_max_iter))
        pcg_total += out.iterations
        s = out.solution.reshape(z.shape)
        slope = float(np.sum(g * s))
        if not slope < 0:
            s = -g
            slope = -gnorm ** 2
        # predicted decrease below the resolution of f: round-off floor reached
        if -slope <= 16.0 * np.finfo(float).eps * max(1.0, abs(f)):
            break
        t = 1.0
        for _ in range(cfg.max_backtracks):
            z_try = z + t * s
            f_try = F(z_try)
            if f_try <= f + cfg.armijo * t * slope:
                break
            t *= cfg.backtrack
        else:
            failed = True
            warnings.warn("distance subproblem: line search failed, keeping current iterate",
                          RuntimeWarning, stacklevel=2)
            break
        z, f = z_try, f_try
        g = grad(z)
        gnorm = float(np.linalg.norm(g))
        it += 1
    return z, NewtonInfo(it, g0, gnorm, pcg_total, failed)


def solve_distance_subproblem(state: AdmmState, distances: dict, cfg: SolverConfig,
                              rho: float | None = None, warm: np.ndarray | None = None):
    """Consensus update: explicit minimizers plus a Newton solve per data block.

    ``distances`` maps state-block indices (``n`` is the terminal block) to
    :class:`KernelDistance` objects. ``warm`` is an optional previous
    consensus state trajectory used as Newton starting guess. Returns
    ``(xt, at, infos)``.
    """
    rho = cfg.rho if rho is None else rho
    at = state.a - state.w
    xt = state.x - state.u
    infos = {}
    for j, kd in sorted(distances.items()):
        z0 = None if warm is None else warm[j]
        xt[j], infos[j] = newton_prox(kd, xt[j].copy(), rho, cfg, z0=z0)
    return xt, at, infos


def dual_update(state: AdmmState) -> AdmmState:
    state.u = state.u + state.xt - state.x
    state.w = state.w + state.at - state.a
    return state


def residuals(state: AdmmState, previous_consensus, rho: float):
    """Euclidean norms of the primal and dual residuals.

    ``previous_consensus`` is the ``(xt, at)`` pair of the previous iteration,
    or ``None`` (dual residual then defined as 0).
    """
    r_prim = math.sqrt(float(np.sum((state.a - state.at) ** 2)) +
                       float(np.sum((state.x - state.xt) ** 2)))
    if previous_consensus is None:
        return r_prim, 0.0
    xt_prev, at_prev = previous_consensus
    r_dual = rho * math.sqrt(float(np.sum((state.at - at_prev) ** 2)) +
                             float(np.sum((state.xt - xt_prev) ** 2)))
    return r_prim, r_dual


def check_stopping(hausdorff_history: Sequence[float], r_prim: float, r_dual: float, k: int,
                   cfg: SolverConfig, eps_haus: float):
    """Evaluate conditions C1-C5; returns ``(stop, fired)``.

    ``hausdorff_history`` holds the censored Hausdorff distance of every
    completed iteration (last entry = current). C2 needs six values.
    ``k`` is the number of completed iterations; C5 fires once it reaches
    ``n_iter``.
    """
    enabled = set(cfg.stopping)
    fired = []
    if hausdorff_history and hausdorff_history[-1] < eps_haus:
        fired.append("C1")
    if len(hausdorff_history) >= 6:
        last = np.asarray(hausdorff_history[-6:], dtype=float)
        if float(np.sum(np.abs(np.diff(last)))) < eps_haus / 1e3:
            fired.append("C2")
    if r_prim < cfg.eps_prim:
        fired.append("C3")
    if r_dual < cfg.eps_dual:
        fired.append("C4")
    if k >= cfg.n_iter:
        fired.append("C5")
    fired = tuple(c for c in fired if c in enabled)
    return bool(fired), fired


def frame_blocks(n_frames: int, n: int) -> list:
    """State-block index (0-based) carrying frame ``i`` for ``i = 1..n_frames-1``.

    Uniform nearest-integer spacing; frame 0 sits at block 0, the last frame
    at block ``n``.
    """
    if n_frames < 2:
        raise ValueError("need at least two frames")
    blocks = [int(math.floor(i * n / (n_frames - 1) + 0.5)) for i in range(1, n_frames)]
    if len(set(blocks)) != len(blocks) or blocks[0] < 1:
        raise ValueError(f"n = {n} time cells cannot separate {n_frames} frames")
    return blocks


def _resolve(template: Shape, frames: list, cfg: SolverConfig) -> dict:
    final = frames[-1]
    h0 = mean_edge_length(template)
    h1 = mean_edge_length(final)
    sigma_v = cfg.sigma_v if cfg.sigma_v is not None else sigma_v_policy(template, cfg.tau_v)
    if cfg.sigma_s is not None:
        sigma_s = [cfg.sigma_s] * len(frames)
    else:
        sigma_s = [sigma_s_policy(template, f, cfg.tau_s) for f in frames]
    return {
        "mean_edge_template": h0,
        "mean_edge_target": h1,
        "sigma_v": sigma_v,
        "sigma_s": sigma_s[-1],
        "sigma_s_frames": sigma_s,
        "eps_haus": cfg.tau_haus * h1,
        "h": 1.0 / (cfg.n + 1),
        "kinetic_scale": cfg.kinetic_scale if cfg.kinetic_scale is not None else 2.0 / (cfg.n + 1),
    }


def _run(template: Shape, frames: list, blocks: list, cfg: SolverConfig) -> RegistrationResult:
    t_start = time.perf_counter()
    resolved = _resolve(template, frames, cfg)
    resolved["data_blocks"] = list(blocks)
    x0 = template.points
    final = frames[-1]
    kernel_v = GaussianKernel(resolved["sigma_v"], normalized=True)
    ops = KktSystem(x0, kernel_v, cfg.n, cfg.rho, cfg.kinetic_scale)
    p = boundary_weights(template, cfg.boundary_factor) if cfg.boundary_factor != 1.0 else None
    distances = {}
    alphas = []
    for j, frame, s in zip(blocks, frames, resolved["sigma_s_frames"]):
        alpha = cfg.alpha * (template.m * frame.m if cfg.distance_scale == "counting" else 1.0)
        alphas.append(alpha)
        distances[j] = KernelDistance(frame, s, alpha, template_weights=p)
    resolved["alpha_effective"] = alphas[-1]
    resolved["alpha_effective_frames"] = alphas

    state = AdmmState.initial(x0, cfg.n)
    h_init = censored_hausdorff(x0, final.points, cfg.percentile)
    frame_init = [censored_hausdorff(x0, f.points, cfg.percentile) for f in frames]
    resolved["initial_hausdorff"] = h_init
    eps_haus = resolved["eps_haus"]
    multi = len(frames) > 1
    record_time = not reproducible()

    prev = (state.xt.copy(), state.at.copy())
    norm2 = None
    fired: tuple = ()
    termination = ""
    message = ""
    diagnostics = []
    try:
        while True:
            t0 = time.perf_counter()
            x_new, a_new, kkt = solve_kinetic_subproblem(state, ops, cfg)
            state.x, state.a = x_new, a_new
            t1 = time.perf_counter()
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                warm = state.xt if cfg.newton_warm_start and state.k else None
                xt, at, infos = solve_distance_subproblem(state, distances, cfg, warm=warm)
            for wrn in caught:
                log.warning("iteration %d: %s", state.k + 1, wrn.message)
            state.xt, state.at = xt, at
            t2 = time.perf_counter()
            dual_update(state)
            state.k += 1
            r_prim, r_dual = residuals(state, prev, cfg.rho)
            prev = (state.xt.copy(), state.at.copy())
            haus = censored_hausdorff(observe_terminal(state.x), final.points, cfg.percentile)
            state.hausdorff_history.append(haus)
            if state.k == 2:
                norm2 = (r_prim, r_dual)
            rel = (lambda v, ref: v / ref if ref else float("nan"))
            row = {
                "iter": state.k,
                "hausdorff_censored": haus,
                "hausdorff_rel": haus / h_init if h_init > 0 else float("nan"),
                "primal_norm": r_prim,
                "primal_rel": rel(r_prim, norm2[0]) if norm2 else float("nan"),
                "dual_norm": r_dual,
                "dual_rel": rel(r_dual, norm2[1]) if norm2 else float("nan"),
                "t_kinetic_s": (t1 - t0) if record_time else 0.0,
                "t_distance_s": (t2 - t1) if record_time else 0.0,
            }
            if multi:
                for i, (j, frame) in enumerate(zip(blocks, frames), start=1):
                    row[f"hausdorff_frame_{i}"] = censored_hausdorff(
                        state.x[j], frame.points, cfg.percentile)
            state.log.append(row)
            diagnostics.append({
                "iter": state.k,
                "kkt_pcg_iterations": kkt.iterations,
                "kkt_pcg_reason": kkt.reason,
                "kkt_rel_residual": kkt.rel_residual,
                "newton_iterations": {int(j): i.iterations for j, i in infos.items()},
                "line_search_failed": any(i.line_search_failed for i in infos.values()),
                "t_kinetic_s": t1 - t0,
                "t_distance_s": t2 - t1,
            })
            stop, fired = check_stopping(state.hausdorff_history, r_prim, r_dual, state.k,
                                         cfg, eps_haus)
            if stop:
                termination = fired[0]
                break
    except (LinearSolverError, FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        termination = "error"
        message = f"{type(exc).__name__}: {exc}"
        log.error("registration aborted after %d iterations: %s", state.k, message)

    x_report = rollout(x0, state.a, kernel_v, ops.grid, frozen=False)
    drift = float(np.max(np.abs(x_report - state.x))) if state.k else 0.0
    resolved["frozen_vs_faithful_max_abs"] = drift
    if state.k:
        log.info("frozen-kernel vs faithful rollout max deviation: %.3e", drift)
    final_h = state.hausdorff_history[-1] if state.hausdorff_history else h_init
    return RegistrationResult(
        a=state.a,
        x=x_report,
        x_admm=state.x,
        kinetic_energy=ops.kinetic.energy(state.a),
        initial_hausdorff=h_init,
        final_hausdorff=final_h,
        final_hausdorff_rollout=censored_hausdorff(x_report[-1], final.points, cfg.percentile),
        termination=termination,
        fired=fired,
        iterations=state.k,
        log=state.log,
        diagnostics=diagnostics,
        config=cfg,
        resolved=resolved | {"initial_hausdorff_frames": frame_init},
        runtime_s=time.perf_counter() - t_start,
        template=template,
        frames=list(frames),
        data_blocks=list(blocks),
        message=message,
    )


def register(x0: Shape, x1: Shape, cfg: SolverConfig = SolverConfig()) -> RegistrationResult:
    """Pairwise registration of template ``x0`` onto target ``x1``."""
    with thread_limits():
        return _run(x0, [x1], [cfg.n], cfg)


def register_multiframe(frames: Sequence[Shape], cfg: SolverConfig = SolverConfig(),
                        n: int | None = None) -> RegistrationResult:
    """Registration through a time series of shapes.

    ``frames[0]`` is the template. The number of time cells is the number of
    frames unless ``n`` is given; frame ``i`` is attached to state block
    :func:`frame_blocks` and the distance term sums over all frames.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("multi-frame registration needs at least two frames")
    n = len(frames) if n is None else n
    cfg = replace(cfg, n=n)
    blocks = frame_blocks(len(frames), n)
    with thread_limits():
        return _run(frames[0], frames[1:], blocks, cfg)
