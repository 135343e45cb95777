"""Integration of the bracket, normalized and metric formulations of the Bach flow.

Every integrator wraps scipy's Dormand-Prince 5(4) pair and returns a
:class:`FlowTrajectory` holding samples, monitor channels and a cubic Hermite
interpolant through the accepted steps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import bachforms
from .curvature import MetricSpec, curvature_bundle, tensor_norm_sq
from .nilalg import DIM, Bracket, TriBracket, bracket_norm_sq, pi_full

CSV_COLUMNS = (
    "t", "a", "b", "c", "norm2", "scalar_curv", "log_ac", "b2_over_a2",
    "r", "lambda_scale", "tau", "off_structure_max",
)


class FlowError(RuntimeError):
    pass


class StiffSegment(FlowError):
    pass


class ConstraintViolation(FlowError):
    pass


class MetricDegenerated(FlowError):
    pass


class ExtendBaseTrajectory(FlowError):
    pass


@dataclass(frozen=True)
class FlowOptions:
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = math.inf
    sample_dt: float | None = None  # uniform output grid; None keeps integrator steps
    gauged: bool = True  # full flow only
    conv_tol: float = 1e-8
    conv_window: int = 10
    rescale: bool = False  # normalized flow: rescale p0 onto ||mu|| = 2

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol >= 0):
            raise ValueError("tolerances must be positive")
        if self.sample_dt is not None and self.sample_dt <= 0:
            raise ValueError("sample_dt must be positive")

    def to_json(self) -> dict:
        d = asdict(self)
        if math.isinf(d["max_step"]):
            d["max_step"] = None
        return d

    @classmethod
    def from_json(cls, d: dict) -> "FlowOptions":
        d = dict(d)
        if d.get("max_step") is None:
            d.pop("max_step", None)
        return cls(**d)


@dataclass(frozen=True)
class NormalizationState:
    """lambda(t), tau(t) and r(t); stored as logs because lambda^4 overflows quickly."""

    t: np.ndarray
    log_lambda: np.ndarray
    log1p_tau: np.ndarray
    r: np.ndarray

    @property
    def lambda_scale(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_lambda)

    @property
    def tau(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.expm1(self.log1p_tau)


@dataclass
class FlowTrajectory:
    kind: str
    t: np.ndarray
    states: np.ndarray
    monitors: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)
    dense: CubicHermiteSpline | None = None

    def __len__(self) -> int:
        return len(self.t)

    def state_at(self, t) -> np.ndarray:
        if self.dense is None:
            raise ValueError("trajectory has no dense interpolant")
        return self.dense(t)

    def tri(self, idx: int = -1) -> TriBracket:
        if self.kind in ("reduced", "normalized"):
            return TriBracket(*self.states[idx, :3])
        if self.kind == "full":
            return Bracket(self.states[idx]).to_tri()
        raise ValueError(f"{self.kind} trajectory has no bracket state")

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        return self.monitors[name]

    def check_invariants(self, normalized_tol: float = 1e-6) -> list[str]:
        """Names of violated trajectory invariants (empty when all hold)."""
        bad = []
        if np.any(np.diff(self.t) <= 0):
            bad.append("t strictly increasing")
        n2 = self.monitors.get("norm2")
        if n2 is not None and self.kind in ("reduced", "full"):
            if np.any(np.diff(n2) > 1e-13 * max(1.0, n2[0])):
                bad.append("norm2 non-increasing")
        if n2 is not None and self.kind == "normalized":
            if np.abs(np.sqrt(n2) - np.sqrt(n2[0])).max() >= normalized_tol:
                bad.append("norm conserved")
        return bad

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for k in range(len(self.t)):
                w.writerow([_fmt(self.column(name)[k]) for name in CSV_COLUMNS])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _solve(rhs, y0, t_end, opts: FlowOptions, dense_rhs=None):
    sol = solve_ivp(
        lambda t, y: rhs(y),
        (0.0, float(t_end)),
        np.asarray(y0, dtype=float),
        method="RK45",
        rtol=opts.rtol,
        atol=opts.atol,
        max_step=opts.max_step,
        dense_output=opts.sample_dt is not None,
    )
    if sol.status == -1:
        raise StiffSegment(f"stiff segment: {sol.message}")
    t_steps, y_steps = sol.t, sol.y.T
    dy = np.array([(dense_rhs or rhs)(y) for y in y_steps])
    dense = CubicHermiteSpline(t_steps, y_steps, dy, axis=0) if len(t_steps) > 1 else None
    if opts.sample_dt is None:
        t, y = t_steps, y_steps
    else:
        t = np.arange(0.0, t_end, opts.sample_dt)
        if t_end - t[-1] > 1e-12 * t_end:
            t = np.append(t, t_end)
        else:
            t[-1] = t_end
        y = sol.sol(t).T
        y[0] = y0
    meta = {
        "method": "RK45 (Dormand-Prince 5(4))",
        "nfev": int(sol.nfev),
        "n_steps": int(len(t_steps) - 1),
        "termination": "t_end reached",
        "options": opts.to_json(),
    }
    return t, y, dense, meta


def _tri_monitors(y: np.ndarray) -> dict[str, np.ndarray]:
    a, b, c = y[:, 0], y[:, 1], y[:, 2]
    n2 = a * a + b * b + c * c
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ac = np.log(a / c)
        b2a2 = (b / a) ** 2
    return {
        "a": a, "b": b, "c": c, "norm2": n2, "scalar_curv": -n2 / 2.0,
        "log_ac": log_ac, "b2_over_a2": b2a2, "off_structure_max": np.zeros_like(a),
    }


def _check_orbit(y: np.ndarray, tol: float = 0.0):
    if np.any(y[:, 0] <= tol) or np.any(y[:, 2] <= tol):
        raise ConstraintViolation("constraint violation: trajectory left O (a, c > 0)")


def reduced_rhs(y: np.ndarray) -> np.ndarray:
    return np.array(bachforms.ode_rhs_polynomial(y[0], y[1], y[2]))


def integrate_reduced(p0: TriBracket, t_end: float, opts: FlowOptions | None = None) -> FlowTrajectory:
    """Gauged bracket flow in the (a, b, c) coordinates of O."""
    opts = opts or FlowOptions()
    p0.require_orbit()
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    t, y, dense, meta = _solve(reduced_rhs, p0.as_array(), t_end, opts)
    _check_orbit(y)
    mon = _tri_monitors(y)
    mon.update(r=np.zeros_like(t), lambda_scale=np.ones_like(t), tau=t.copy())
    return FlowTrajectory("reduced", t, y, mon, meta, dense)


def _normalized_rhs(y: np.ndarray) -> np.ndarray:
    a, b, c, log_lam, log1p_tau = y
    p = TriBracket(a, b, c)
    r = bachforms.norm_fixing_r(p)
    da, db, dc = bachforms.ode_rhs_polynomial(a, b, c)
    # generator 1/2 pi(B - rI) mu adds +r/2 * mu
    return np.array([
        da + 0.5 * r * a,
        db + 0.5 * r * b,
        dc + 0.5 * r * c,
        0.5 * r,
        math.exp(4.0 * log_lam - log1p_tau),
    ])


def integrate_normalized(p0: TriBracket, t_end: float, opts: FlowOptions | None = None) -> FlowTrajectory:
    """r-normalized flow with the norm-fixing r, started on ||mu|| = 2.

    Also carries log(lambda) and log(1 + tau) from lambda' = r lambda / 2,
    tau' = lambda^4.
    """
    opts = opts or FlowOptions()
    p0.require_orbit()
    n0 = p0.norm_sq()
    if opts.rescale:
        p0 = p0.scaled(2.0 / math.sqrt(n0))
    elif abs(n0 - 4.0) > 1e-12:
        raise ValueError("normalized flow starts on ||mu|| = 2 (set rescale=True)")
    y0 = np.array([p0.a, p0.b, p0.c, 0.0, 0.0])
    t, y, dense, meta = _solve(_normalized_rhs, y0, t_end, opts)
    _check_orbit(y)
    mon = _tri_monitors(y)
    r = np.array([bachforms.norm_fixing_r(TriBracket(*row[:3])) for row in y])
    state = NormalizationState(t, y[:, 3], y[:, 4], r)
    with np.errstate(over="ignore"):
        mon.update(r=r, lambda_scale=state.lambda_scale, tau=state.tau,
                   log_lambda=y[:, 3], log1p_tau=y[:, 4])
    meta["converged_at"] = _convergence_time(t, y, opts)
    meta["normalization"] = state
    return FlowTrajectory("normalized", t, y, mon, meta, dense)


def _convergence_time(t, y, opts: FlowOptions) -> float | None:
    a, b, c = y[:, 0], y[:, 1], y[:, 2]
    da = np.array([_normalized_rhs(row)[0] for row in y])
    ok = np.maximum.reduce([np.abs(a - c), np.abs(b), np.abs(da)]) < opts.conv_tol
    w = opts.conv_window
    for k in range(len(t) - w + 1):
        if ok[k:k + w].all():
            return float(t[k])
    return None


def bach_endomorphism_std(full: np.ndarray) -> np.ndarray:
    """Bach endomorphism of (mu, standard inner product) from the curvature oracle."""
    return curvature_bundle(full).bach


def full_rhs(y: np.ndarray, gauged: bool) -> np.ndarray:
    mu = Bracket(y.reshape(6, DIM))
    full = mu.full
    B = bach_endomorphism_std(full)
    if gauged:
        upper = np.triu(B, 1)
        B = B - (upper - upper.T)
    return Bracket.from_full(0.5 * pi_full(B, full)).entries.ravel()


def integrate_full(mu0: Bracket, t_end: float, opts: FlowOptions | None = None) -> FlowTrajectory:
    """All 24 structure constants under 1/2 pi(B - R) mu (gauged) or 1/2 pi(B) mu.

    The gauge R is the skew matrix that makes B - R lower triangular; on O it
    coincides with the closed-form gauge.
    """
    opts = opts or FlowOptions()
    if not mu0.is_validated(1e-10):
        raise ValueError("initial bracket is not a nilpotent Lie bracket")
    if t_end <= 0:
        raise ValueError("t_end must be positive")

    def rhs(y):
        return full_rhs(y, opts.gauged)

    t, y, dense, meta = _solve(rhs, mu0.entries.ravel(), t_end, opts)
    brackets = [Bracket(row.reshape(6, DIM)) for row in y]
    full = np.array([m.full for m in brackets])
    a, b, c = full[:, 0, 1, 2], full[:, 0, 1, 3], full[:, 0, 2, 3]
    n2 = np.array([bracket_norm_sq(m) for m in brackets])
    s = np.array([curvature_bundle(m).scalar for m in brackets])
    with np.errstate(divide="ignore", invalid="ignore"):
        mon = {
            "a": a, "b": b, "c": c, "norm2": n2, "scalar_curv": s,
            "log_ac": np.log(a / c), "b2_over_a2": (b / a) ** 2,
            "r": np.zeros_like(t), "lambda_scale": np.ones_like(t), "tau": t.copy(),
            "off_structure_max": np.array([m.off_structure_max() for m in brackets]),
        }
    meta["gauged"] = opts.gauged
    return FlowTrajectory("full", t, y, mon, meta, dense)


def metric_rhs(mu_full: np.ndarray, y: np.ndarray) -> np.ndarray:
    G = y.reshape(DIM, DIM)
    G = 0.5 * (G + G.T)
    if np.linalg.eigvalsh(G).min() <= 0:
        raise MetricDegenerated("metric degenerated")
    return curvature_bundle(mu_full, MetricSpec(G)).bach.ravel()


def integrate_metric(mu0: Bracket, G0: MetricSpec, t_end: float, opts: FlowOptions | None = None) -> FlowTrajectory:
    """Fixed bracket, evolving inner product: dG/dt = B(G)."""
    opts = opts or FlowOptions()
    full = mu0.full
    t, y, dense, meta = _solve(lambda v: metric_rhs(full, v), G0.gram.ravel(), t_end, opts)
    s, bn, mineig = [], [], []
    for row in y:
        G = row.reshape(DIM, DIM)
        G = 0.5 * (G + G.T)
        ev = np.linalg.eigvalsh(G).min()
        if ev <= 0:
            raise MetricDegenerated("metric degenerated")
        cb = curvature_bundle(full, MetricSpec(G))
        s.append(cb.scalar)
        bn.append(math.sqrt(tensor_norm_sq(cb.bach, G)))
        mineig.append(ev)
    nan = np.full_like(t, np.nan)
    mon = {
        "a": nan, "b": nan, "c": nan, "norm2": nan, "scalar_curv": np.array(s),
        "log_ac": nan, "b2_over_a2": nan, "r": np.zeros_like(t),
        "lambda_scale": np.ones_like(t), "tau": t.copy(), "off_structure_max": nan,
        "bach_norm": np.array(bn), "min_eig": np.array(mineig),
    }
    return FlowTrajectory("metric", t, y, mon, meta, dense)


def bach_norm_history(traj: FlowTrajectory) -> np.ndarray:
    """||B|| along a bracket trajectory (standard inner product)."""
    if traj.kind == "metric":
        return traj.monitors["bach_norm"]
    out = []
    for k in range(len(traj)):
        if traj.kind == "full":
            B = bach_endomorphism_std(Bracket(traj.states[k].reshape(6, DIM)).full)
        else:
            B = bachforms.closed_form_bach(traj.tri(k)).matrix()
        out.append(np.linalg.norm(B))
    return np.array(out)


@dataclass(frozen=True)
class Reparametrization:
    state: NormalizationState
    mismatch: float | None  # max_t ||mu^r(t) - lambda(t) mu(tau(t))||


def reparametrize(
    unnormalized: FlowTrajectory,
    r_history: Callable[[float], float] | FlowTrajectory,
    t_end: float | None = None,
    rtol: float = 1e-12,
) -> Reparametrization:
    """Solve lambda' = r lambda / 2, tau' = lambda^4 and compare mu^r(t) with lambda mu(tau).

    ``r_history`` is either a callable r(t) or a normalized trajectory, in which
    case r(t) is evaluated from its interpolated state and the mismatch against
    that trajectory is reported.
    """
    normalized = r_history if isinstance(r_history, FlowTrajectory) else None
    if normalized is not None:
        t_end = normalized.t[-1] if t_end is None else t_end

        def r_of_t(s):
            return bachforms.norm_fixing_r(TriBracket(*normalized.state_at(s)[:3]))
    else:
        if t_end is None:
            raise ValueError("t_end is required when r is given as a function")
        r_of_t = r_history

    def rhs(s, y):
        return [0.5 * r_of_t(s), math.exp(4.0 * y[0] - y[1])]

    grid = normalized.t if normalized is not None else None
    sol = solve_ivp(rhs, (0.0, float(t_end)), [0.0, 0.0], method="RK45",
                    rtol=rtol, atol=1e-14, t_eval=grid, dense_output=True)
    if sol.status == -1:
        raise StiffSegment(f"stiff segment: {sol.message}")
    ts = sol.t
    state = NormalizationState(ts, sol.y[0], sol.y[1], np.array([r_of_t(s) for s in ts]))
    tau = state.tau
    horizon = unnormalized.t[-1]
    if not np.all(np.isfinite(tau)) or tau.max() > horizon * (1 + 1e-12):
        raise ExtendBaseTrajectory(
            f"extend base trajectory: tau reaches {tau.max():.6g} beyond horizon {horizon:.6g}"
        )
    mismatch = None
    if normalized is not None:
        base = unnormalized.state_at(np.minimum(tau, horizon))[:, :3]
        target = normalized.states[:, :3]
        mismatch = float(np.abs(target - state.lambda_scale[:, None] * base).max())
    return Reparametrization(state, mismatch)
