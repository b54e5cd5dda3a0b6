"""Multi-edge-type density evolution for protographs on the BEC.

Each protograph edge carries two erasure probabilities: ``x`` (variable to
check) and ``y`` (check to variable).  One iteration is

    y'(j) = 1 - prod_{i in Ec(j)} (1 - x(i))
    x'(i) = eps * prod_{j in Ev(i)} y'(j)

starting from ``x = eps``.  Empty products are 1, so a degree-1 check sends
``y = 0`` and a degree-1 variable sends ``x = eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .protograph import (
    BaseMatrix,
    MatrixLike,
    Protograph,
    as_protograph,
    check_chain_constraint,
    degree_profile,
)

DEFAULT_T_MAX = 5000
DEFAULT_DELTA = 1e-10
DEFAULT_TOLERANCE = 1e-4


class _GroupExclusive:
    """Exclusive (leave-one-out) reductions within groups of edges.

    Uses prefix/suffix scans over a padded layout so no division or
    subtraction is needed; zeros and infinities pass through exactly.
    """

    def __init__(self, groups: np.ndarray, num_groups: int):
        order = np.argsort(groups, kind="stable")
        counts = np.bincount(groups, minlength=num_groups)
        width = max(int(counts.max()), 1)
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        slot = np.empty(len(groups), dtype=np.int64)
        slot[order] = np.arange(len(groups)) - np.repeat(starts, counts)
        # rows 0..G-1 hold [pad, v_0 .. v_{w-1}, pad]; rows G..2G-1 hold the
        # same values reversed, so one scan yields prefixes and suffixes
        stride = width + 2
        self.shape = (2 * num_groups, stride)
        self.fwd = groups * stride + slot + 1
        self.bwd = (num_groups + groups) * stride + width - slot
        self.read = np.concatenate([self.fwd, self.bwd]) - 1
        self.n = len(groups)
        self._buffers: dict[float, np.ndarray] = {}

    def _scan(self, values, fill, acc):
        buf = self._buffers.get(fill)
        if buf is None:
            buf = self._buffers[fill] = np.full(self.shape, fill)
        flat = buf.reshape(-1)
        flat[self.fwd] = values
        flat[self.bwd] = values
        out = acc(buf, axis=1).reshape(-1).take(self.read)
        return out[: self.n], out[self.n :]

    def product(self, values: np.ndarray) -> np.ndarray:
        pre, suf = self._scan(values, 1.0, np.cumprod)
        return pre * suf

    def sum(self, values: np.ndarray) -> np.ndarray:
        pre, suf = self._scan(values, 0.0, np.cumsum)
        return pre + suf


class _Kernel:
    """Precomputed index structure for repeated DE steps on one protograph."""

    def __init__(self, p: Protograph):
        self.num_edges = p.num_edges
        self.checks = _GroupExclusive(np.asarray(p.edge_check), p.num_checks)
        self.variables = _GroupExclusive(np.asarray(p.edge_variable), p.num_variables)

    def step(self, x: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
        with np.errstate(divide="ignore"):
            log_keep = np.log1p(-x)
        y = -np.expm1(self.checks.sum(log_keep))
        x_new = epsilon * self.variables.product(y)
        return x_new, y


_KERNELS: dict[bytes, _Kernel] = {}


def _kernel(p: Protograph) -> _Kernel:
    key = p.base.key()
    k = _KERNELS.get(key)
    if k is None:
        if len(_KERNELS) > 4096:
            _KERNELS.clear()
        k = _KERNELS[key] = _Kernel(p)
    return k


@dataclass
class ErasureState:
    """Per-edge erasure probabilities after ``t`` iterations."""

    x: np.ndarray
    y: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, num_edges: int, epsilon: float) -> "ErasureState":
        # y is undefined before the first check update; all-erased is the
        # natural placeholder
        return cls(np.full(num_edges, float(epsilon)), np.ones(num_edges), 0)

    @property
    def x_max(self) -> float:
        return float(self.x.max())


def de_step(p: Union[Protograph, MatrixLike], state: ErasureState, epsilon: float) -> ErasureState:
    p = as_protograph(p)
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if len(state.x) != p.num_edges:
        raise ValueError(
            f"state has {len(state.x)} edge entries, protograph has {p.num_edges}"
        )
    x, y = _kernel(p).step(np.asarray(state.x, dtype=float), epsilon)
    return ErasureState(x, y, state.t + 1)


@dataclass
class DEResult:
    converged: bool
    iterations_used: int
    trace: list[float]
    final_state: ErasureState
    # True when the run stopped on an exact fixed point above delta
    stalled: bool = False


def de_run(
    p: Union[Protograph, MatrixLike],
    epsilon: float,
    t_max: int = DEFAULT_T_MAX,
    delta: float = DEFAULT_DELTA,
    stop_at_fixed_point: bool = True,
) -> DEResult:
    """Iterate density evolution from ``x = epsilon``.

    ``trace[t-1]`` holds ``max_i x_t(i)``.  The run stops once that maximum
    drops below ``delta``.  Because ``x_t`` is entrywise non-increasing in
    ``t``, a step that leaves ``x`` bit-for-bit unchanged can never converge
    later, so it ends the run early unless ``stop_at_fixed_point`` is off.
    """
    p = as_protograph(p)
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    kern = _kernel(p)
    x = np.full(p.num_edges, float(epsilon))
    y = np.ones(p.num_edges)
    trace: list[float] = []
    converged = stalled = False
    for _ in range(t_max):
        x_new, y = kern.step(x, epsilon)
        xm = float(x_new.max())
        trace.append(xm)
        if xm < delta:
            converged = True
            x = x_new
            break
        if stop_at_fixed_point and np.array_equal(x_new, x):
            stalled = True
            x = x_new
            break
        x = x_new
    return DEResult(converged, len(trace), trace, ErasureState(x, y, len(trace)), stalled)


def bit_erasure_trace(
    p: Union[Protograph, MatrixLike], epsilon: float, iterations: int
) -> np.ndarray:
    """Predicted bit-erasure probability after each of ``iterations`` steps.

    A copy of variable ``v`` stays erased after step ``t`` with probability
    ``epsilon * prod y_t(e)`` over all edges at ``v``; the result averages
    this over protograph variables, which all have the same number of
    copies in a lifting.
    """
    p = as_protograph(p)
    kern = _kernel(p)
    x = np.full(p.num_edges, float(epsilon))
    groups = np.asarray(p.edge_variable)
    out = np.empty(iterations)
    for t in range(iterations):
        x, y = kern.step(x, epsilon)
        with np.errstate(divide="ignore"):
            logs = np.bincount(groups, np.log(y), minlength=p.num_variables)
        out[t] = float(np.mean(epsilon * np.exp(logs)))
    return out


@dataclass
class ThresholdResult:
    epsilon_threshold: float
    bracket: tuple[float, float]
    tolerance: float
    iterations_config: tuple[int, float]

    def to_dict(self) -> dict:
        return {
            "epsilon_threshold": self.epsilon_threshold,
            "bracket": list(self.bracket),
            "tolerance": self.tolerance,
            "t_max": self.iterations_config[0],
            "delta": self.iterations_config[1],
        }


def threshold(
    p: Union[Protograph, MatrixLike],
    tolerance: float = DEFAULT_TOLERANCE,
    t_max: int = DEFAULT_T_MAX,
    delta: float = DEFAULT_DELTA,
) -> ThresholdResult:
    """Bisection for the largest ``epsilon`` whose DE run converges."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    p = as_protograph(p)
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if de_run(p, mid, t_max, delta).converged:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), tolerance, (t_max, delta))


# -- batched evaluation on the base-matrix level ---------------------------
#
# Parallel edges between the same (check, variable) pair follow identical
# update rules from identical initial values, so their messages stay equal.
# Tracking one value per nonzero entry, raised to the multiplicity, is
# therefore the same recursion and lets many matrices run in lockstep.


def _exclusive_prod(a: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, -1)
    ones = np.ones(a.shape[:-1] + (1,))
    pre = np.cumprod(np.concatenate([ones, a[..., :-1]], axis=-1), axis=-1)
    suf = np.cumprod(np.concatenate([ones, a[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return np.moveaxis(pre * suf, -1, axis)


def _batch_converges(
    B: np.ndarray, eps: np.ndarray, t_max: int, delta: float
) -> np.ndarray:
    """For each matrix ``B[k]`` run DE at ``eps[k]``; return convergence flags."""
    K = B.shape[0]
    done = np.zeros(K, dtype=bool)
    result = np.zeros(K, dtype=bool)
    idx = np.arange(K)
    Bf = B.astype(float)
    Bm1 = np.maximum(Bf - 1.0, 0.0)
    present = B > 0
    x = np.broadcast_to(eps[:, None, None], B.shape).copy()
    e = eps.copy()
    for _ in range(t_max):
        keep = 1.0 - x
        full = np.where(present, keep ** Bf, 1.0)
        own = np.where(present, keep ** Bm1, 1.0)
        y = 1.0 - _exclusive_prod(full, axis=2) * own
        yfull = np.where(present, y ** Bf, 1.0)
        yown = np.where(present, y ** Bm1, 1.0)
        x_new = e[:, None, None] * _exclusive_prod(yfull, axis=1) * yown
        x_new = np.where(present, x_new, 0.0)
        xm = x_new.reshape(len(idx), -1).max(axis=1)
        conv = xm < delta
        stuck = np.all((x_new == x) | ~present, axis=(1, 2)) & ~conv
        fin = conv | stuck
        if fin.any():
            result[idx[conv]] = True
            done[idx[fin]] = True
            live = ~fin
            idx, x_new, e = idx[live], x_new[live], e[live]
            Bf, Bm1, present = Bf[live], Bm1[live], present[live]
            if len(idx) == 0:
                break
        x = x_new
    return result


def thresholds_batch(
    matrices: Sequence[MatrixLike] | np.ndarray,
    tolerance: float = 1e-3,
    t_max: int = DEFAULT_T_MAX,
    delta: float = DEFAULT_DELTA,
) -> np.ndarray:
    """Bisection thresholds for a stack of equally shaped base matrices.

    Matrices containing a variable of degree < 2 or an empty check are not
    evaluated; their entry is 0.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    B = np.asarray(
        [BaseMatrix.coerce(m).entries for m in matrices]
        if not isinstance(matrices, np.ndarray)
        else matrices,
        dtype=np.int64,
    )
    if B.ndim != 3:
        raise ValueError("expected a stack of 2-D matrices")
    out = np.zeros(len(B))
    valid = (B.sum(axis=1) >= 2).all(axis=1) & (B.sum(axis=2) >= 1).all(axis=1)
    vidx = np.flatnonzero(valid)
    if len(vidx) == 0:
        return out
    Bv = B[vidx]
    lo = np.zeros(len(vidx))
    hi = np.ones(len(vidx))
    while hi[0] - lo[0] > tolerance:
        mid = 0.5 * (lo + hi)
        conv = _batch_converges(Bv, mid, t_max, delta)
        lo = np.where(conv, mid, lo)
        hi = np.where(conv, hi, mid)
    out[vidx] = 0.5 * (lo + hi)
    return out


# -- scalar (single-edge-type) recursion -----------------------------------


def _poly(coeffs: Union[Mapping[int, float], Sequence[float]], name: str) -> np.ndarray:
    """Edge-perspective distribution as power-series coefficients.

    A mapping is ``{degree: fraction}``; a sequence lists the fractions for
    degrees 1, 2, 3, ... (i.e. the coefficient of ``x**k`` at index ``k``).
    """
    if isinstance(coeffs, Mapping):
        if any(int(d) < 1 for d in coeffs):
            raise ValueError(f"{name}: degrees must be >= 1")
        c = np.zeros(max(int(d) for d in coeffs))
        for d, v in coeffs.items():
            c[int(d) - 1] += float(v)
    else:
        c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or len(c) == 0:
        raise ValueError(f"{name}: empty distribution")
    if (c < 0).any() or not math.isclose(c.sum(), 1.0, abs_tol=1e-9):
        raise ValueError(f"{name}: coefficients must be non-negative and sum to 1")
    return c


def scalar_de_run(
    lam: np.ndarray, rho: np.ndarray, epsilon: float, t_max: int, delta: float
) -> list[float]:
    """Trace of ``x <- eps * lam(1 - rho(1 - x))`` from ``x = eps``."""
    x = epsilon
    trace = []
    for _ in range(t_max):
        y = 1.0 - np.polynomial.polynomial.polyval(1.0 - x, rho)
        x = epsilon * np.polynomial.polynomial.polyval(y, lam)
        trace.append(float(x))
        if x < delta:
            break
    return trace


def scalar_de_threshold(
    lambda_coeffs: Union[Mapping[int, float], Sequence[float]],
    rho_coeffs: Union[Mapping[int, float], Sequence[float]],
    tolerance: float = DEFAULT_TOLERANCE,
    t_max: int = DEFAULT_T_MAX,
    delta: float = DEFAULT_DELTA,
) -> float:
    """Threshold of a standard (single-type) ensemble by bisection."""
    lam = _poly(lambda_coeffs, "lambda")
    rho = _poly(rho_coeffs, "rho")
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if scalar_de_run(lam, rho, mid, t_max, delta)[-1] < delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- double-exponential decay check -----------------------------------------


_RTOL = 8 * np.finfo(float).eps


class DecayError(ValueError):
    pass


@dataclass
class DecayReport:
    A: float
    R: int
    l_m: int
    l_m_prime: int
    d: int
    epsilon: float
    violations: list[int] = field(default_factory=list)
    y_violations: list[int] = field(default_factory=list)
    # offsets i with xbar_{R+2i} > (A xbar_R)**(2**i)
    envelope_violations: list[int] = field(default_factory=list)
    trace: list[float] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not (self.violations or self.y_violations or self.envelope_violations)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "A": self.A,
            "R": self.R,
            "l_m": self.l_m,
            "l_m_prime": self.l_m_prime,
            "d": self.d,
            "violations": self.violations,
            "y_violations": self.y_violations,
            "envelope_violations": self.envelope_violations,
            "iterations": len(self.trace),
        }


def decay_degrees(p: Union[Protograph, MatrixLike]) -> tuple[int, int]:
    """Variable degrees used in the decay constant.

    The smallest degree >= 2, and the next larger distinct degree (3 when
    the smallest is 2 and nothing larger exists, otherwise the smallest
    again).
    """
    degs = sorted({d for d in degree_profile(p).variable_degrees if d >= 2})
    if not degs:
        raise DecayError("protograph has no variable of degree >= 2")
    l_m = degs[0]
    if len(degs) > 1:
        l_mp = degs[1]
    else:
        l_mp = 3 if l_m == 2 else l_m
    return l_m, l_mp


def verify_decay(
    p: Union[Protograph, MatrixLike],
    epsilon: float,
    t_max: int = DEFAULT_T_MAX,
    floor: float = 1e-150,
) -> DecayReport:
    """Check ``xbar_{t+2} <= A xbar_t**2`` and ``y_{t+1} <= (d-1) xbar_t`` past R.

    ``R`` is the first iteration with ``A xbar_R < 1`` and
    ``(d-1) xbar_R < 1``.  The run continues until ``xbar`` drops below
    ``floor`` (or reaches zero) so the tail of the decay is exercised.
    """
    p = as_protograph(p)
    chain = check_chain_constraint(p)
    if not chain:
        raise DecayError(
            f"constraint not satisfied: checks {list(chain.offending_checks)} "
            "touch more than one degree-two variable"
        )
    d = degree_profile(p).d_max_check
    l_m, l_mp = decay_degrees(p)
    A = epsilon**l_mp * float(d - 1) ** (l_m * (l_mp - 1))

    kern = _kernel(p)
    x = np.full(p.num_edges, float(epsilon))
    xbar = [float(epsilon)]
    ymax = [math.nan]
    for _ in range(t_max):
        x, y = kern.step(x, epsilon)
        xbar.append(float(x.max()))
        ymax.append(float(y.max()))
        if xbar[-1] < floor:
            break

    R = next(
        (t for t, v in enumerate(xbar) if A * v < 1.0 and (d - 1) * v < 1.0 and v > 0),
        None,
    )
    if R is None:
        raise DecayError(f"no R found within t_max={t_max} (is epsilon below threshold?)")
    # both bounds are tight to first order on regular protographs; allow a
    # few ulps of rounding
    slack = 1.0 + _RTOL
    violations = [
        t for t in range(R, len(xbar) - 2) if xbar[t + 2] > slack * A * xbar[t] ** 2
    ]
    y_viol = [
        t for t in range(R, len(xbar) - 1) if ymax[t + 1] > slack * (d - 1) * xbar[t]
    ]
    log_base = math.log(A * xbar[R])
    envelope = []
    for i in range(1, (len(xbar) - 1 - R) // 2 + 1):
        v = xbar[R + 2 * i]
        if v > 0 and math.log(v) > 2.0**i * log_base:
            envelope.append(i)
    return DecayReport(A, R, l_m, l_mp, d, float(epsilon), violations, y_viol, envelope, xbar)
