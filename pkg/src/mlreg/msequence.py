"""Log-domain calculus for the weight sequence M_p = p**(tau*p**sigma).

The sequence overflows float64 around p = 30 already for tau=1, sigma=2,
so every quantity here lives in the natural-log domain: ``log_m`` returns
ln M_p, certificates compare log-linear inequalities, and factorials go
through ``scipy.special.gammaln``.

Certificates report the *minimal* constants that make each inequality hold
on the swept range, so a regression in the formulas shows up as constant
drift rather than a silent boolean flip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .params import ClassParams

__all__ = [
    "log_m",
    "log_m_array",
    "LogMSequence",
    "InequalityCertificate",
    "certify_m1",
    "certify_m2_tilde_prime",
    "certify_m2_tilde",
    "certify_m3_prime",
    "certify_stirling_bounds",
    "certify_all",
    "EnumMap",
    "Profile",
    "enumerate_profile",
    "associated_weight",
    "associated_weight_many",
    "log_factorial",
    "floor_power",
]

# Clamp for "C > 1" style constants reported by certificates.
_UNIT_CLAMP = 1.0 + 1e-12


def log_factorial(n) -> np.ndarray | float:
    """ln(n!) through the log-gamma function (never by multiplication)."""
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def floor_power(p, sigma: float):
    """floor(p**sigma) with a snap to the nearest integer within a few ulps.

    Guards against float64 computing e.g. 4**1.5 as 7.999999999999999 and
    flooring to 7 where the exact value is 8.
    """
    x = np.power(np.asarray(p, dtype=float), sigma)
    r = np.round(x)
    snap = np.abs(x - r) <= 32.0 * np.spacing(np.maximum(x, 1.0))
    out = np.where(snap, r, np.floor(x))
    if np.ndim(p) == 0:
        return int(out)
    return out.astype(np.int64)


def log_m(params: ClassParams, p: int) -> float:
    """ln M_p for the sequence M_p = p**(tau*p**sigma), M_0 = M_1 = 1."""
    if p < 0:
        raise ValueError(f"p must be a nonnegative integer, got {p}")
    if p <= 1:
        return 0.0
    return params.tau * p**params.sigma * math.log(p)


def log_m_array(params: ClassParams, p_max: int) -> np.ndarray:
    """ln M_p for p = 0..p_max as a vector."""
    p = np.arange(p_max + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = params.tau * p**params.sigma * np.log(p)
    vals[:2] = 0.0
    return vals


@dataclass(frozen=True)
class LogMSequence:
    """Tabulated ln M_p for p = 0..p_max with its defining parameters."""

    params: ClassParams
    p_max: int
    log_values: np.ndarray

    @classmethod
    def build(cls, params: ClassParams, p_max: int) -> "LogMSequence":
        if p_max < 1:
            raise ValueError("p_max must be >= 1")
        return cls(params, p_max, log_m_array(params, p_max))

    def __post_init__(self):
        v = self.log_values
        if len(v) != self.p_max + 1:
            raise ValueError("log_values length must be p_max + 1")
        if v[0] != 0.0 or v[1] != 0.0:
            raise ValueError("M_0 and M_1 must both equal 1")


@dataclass
class InequalityCertificate:
    """Outcome of sweeping one sequence inequality over a finite range.

    ``margin`` is the minimal slack of the inequality in the log domain over
    the stated range; ``holds`` is True iff ``margin >= -tol``.  Constants
    are minimal feasible over the range, so the margin sits at zero (up to
    rounding) on the active constraint.
    """

    name: str
    params: ClassParams
    p_range: tuple[int, int]
    constants: dict
    margin: float
    holds: bool
    notes: str = ""
    trace: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "name": self.name,
            "params": {"tau": self.params.tau, "sigma": self.params.sigma},
            "range": list(self.p_range),
            "constants": {
                k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.constants.items()
            },
            "margin": self.margin,
            "holds": bool(self.holds),
        }
        if self.notes:
            d["notes"] = self.notes
        return d


_MARGIN_TOL = 1e-9


def certify_m1(params: ClassParams, p_max: int) -> InequalityCertificate:
    """Log-convexity: 2 ln M_p <= ln M_{p-1} + ln M_{p+1} for 1 <= p < p_max."""
    if p_max < 2:
        raise ValueError("p_max must be >= 2")
    lm = log_m_array(params, p_max)
    p = np.arange(1, p_max)
    slack = lm[p - 1] + lm[p + 1] - 2.0 * lm[p]
    margin = float(slack.min())
    return InequalityCertificate(
        name="M1",
        params=params,
        p_range=(1, p_max - 1),
        constants={},
        margin=margin,
        holds=margin >= -_MARGIN_TOL,
    )


def certify_m2_tilde_prime(
    params: ClassParams, q_max: int, p_max: int
) -> InequalityCertificate:
    """Shift bound M_{p+q} <= C_q**(p**sigma) * M_p with minimal C_q per q.

    Certified for p >= 1 only: at p = 0 the inequality would force
    M_q <= M_0 = 1, which fails for q >= 2.  The q = 0 row is the identity
    and reports C_0 = 1.
    """
    if q_max < 1 or p_max < 1:
        raise ValueError("q_max and p_max must both be >= 1")
    lm = log_m_array(params, p_max + q_max)
    p = np.arange(1, p_max + 1, dtype=float)
    psig = p**params.sigma
    log_cq = np.zeros(q_max + 1)
    for q in range(1, q_max + 1):
        log_cq[q] = np.max((lm[q + 1 : q + p_max + 1] - lm[1 : p_max + 1]) / psig)
    # Slack with the minimal constants across the whole (p, q) table.
    slack = np.array(
        [
            np.min(psig * log_cq[q] + lm[1 : p_max + 1] - lm[q + 1 : q + p_max + 1])
            for q in range(q_max + 1)
        ]
    )
    margin = float(slack.min())
    c_q = np.exp(log_cq)
    return InequalityCertificate(
        name="M2_tilde_prime",
        params=params,
        p_range=(1, p_max),
        constants={"C_q": c_q, "q_max": q_max},
        margin=margin,
        holds=bool(margin >= -_MARGIN_TOL and np.all(c_q >= 1.0 - 1e-12)),
        notes="certified for p >= 1; the p = 0 case fails as written for q >= 2",
    )


def certify_m2_tilde(params: ClassParams, p_max: int) -> InequalityCertificate:
    """Two-slot bound against the tau*2**(sigma-1) sequence with minimal C.

    M_{p+q}(tau) <= C**(p**sigma + q**sigma) * M_p(tau') * M_q(tau') with
    tau' = tau * 2**(sigma-1); the reported C is minimal over the sweep,
    clamped below at 1 + 1e-12 since the inequality is stated with C > 1.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    tau2 = ClassParams(params.tau * 2.0 ** (params.sigma - 1.0), params.sigma)
    lm = log_m_array(params, 2 * p_max)
    lm2 = log_m_array(tau2, p_max)
    p = np.arange(0, p_max + 1, dtype=float)
    psig = p**params.sigma
    # need[i, j] = ln M_{i+j} - ln M'_i - ln M'_j, weight[i, j] = i^sigma + j^sigma
    need = lm[np.add.outer(np.arange(p_max + 1), np.arange(p_max + 1))]
    need = need - lm2[:, None] - lm2[None, :]
    weight = psig[:, None] + psig[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(weight > 0, need / np.maximum(weight, 1e-300), -np.inf)
    log_c = max(float(ratio[1:, 1:].max()), math.log(_UNIT_CLAMP))
    slack = log_c * weight - need
    margin = float(slack.min())
    return InequalityCertificate(
        name="M2_tilde",
        params=params,
        p_range=(0, p_max),
        constants={"C": math.exp(log_c), "tau_doubled": tau2.tau},
        margin=margin,
        holds=margin >= -_MARGIN_TOL,
    )


def certify_m3_prime(params: ClassParams, p_max: int) -> InequalityCertificate:
    """Convergence trace for sum_p M_{p-1}/M_p with a rigorous tail bound.

    Each ratio term with p >= 2 is dominated by (2p)**(-tau*(p-1)**(sigma-1));
    the certificate records partial sums, the domination slack, and an upper
    bound on the full series = partial sum + a monotone-integral tail bound
    on the dominating series (its exponential-integral form; for sigma = 2
    this reduces to the usual geometric-style bound).
    """
    if p_max < 2:
        raise ValueError("p_max must be >= 2")
    lm = log_m_array(params, p_max)
    p = np.arange(1, p_max + 1, dtype=float)
    log_ratio = lm[:-1] - lm[1:]  # ln(M_{p-1}/M_p), p = 1..p_max
    ratios = np.exp(log_ratio)
    partial = np.cumsum(ratios)
    # Dominating terms (2p)^(-tau (p-1)^(sigma-1)) for p >= 2.
    pd = p[1:]
    log_dom = -params.tau * (pd - 1.0) ** (params.sigma - 1.0) * np.log(2.0 * pd)
    dom_slack = log_dom - log_ratio[1:]
    tail = _dominating_tail_bound(params, p_max)
    total_bound = float(partial[-1] + tail)
    margin = float(dom_slack.min())
    return InequalityCertificate(
        name="M3_prime",
        params=params,
        p_range=(1, p_max),
        constants={"sum_upper_bound": total_bound, "tail_bound": tail},
        margin=margin,
        holds=bool(margin >= -_MARGIN_TOL and math.isfinite(total_bound)),
        trace={
            "terms": ratios,
            "partial_sums": partial,
            "log_dominating": log_dom,
            "domination_slack": dom_slack,
        },
    )


def _dominating_tail_bound(params: ClassParams, p_start: int) -> float:
    """Upper bound on sum_{p > p_start} (2p)^(-tau (p-1)^(sigma-1)).

    The terms decrease in p, so the sum is at most
    int_{p_start}^inf exp(-tau (x-1)^(sigma-1) ln(2 p_start)) dx
    after freezing ln(2x) >= ln(2 p_start); substituting
    t = c (x-1)^s turns that into an upper incomplete gamma value.
    """
    s = params.sigma - 1.0
    c = params.tau * math.log(2.0 * p_start)
    a = 1.0 / s
    x0 = c * (p_start - 1.0) ** s
    from scipy.special import gammaincc

    log_gamma_upper = gammaln(a) + math.log(max(gammaincc(a, x0), 1e-300))
    return a * c ** (-a) * math.exp(log_gamma_upper)


def certify_stirling_bounds(
    params: ClassParams, p_max: int, c_upper: float | None = None
) -> tuple[InequalityCertificate, InequalityCertificate]:
    """Floor-factorial comparison in both directions.

    Returns (upper, lower):
      upper: M_p <= A * C**(p**sigma) * floor(p**sigma)!**(tau/sigma) with
             C fixed (default exp(tau/sigma), recorded) and minimal A;
      lower: floor(p**sigma)!**(tau/sigma) <= B * M_p with minimal B.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    lm = log_m_array(params, p_max)
    p = np.arange(1, p_max + 1, dtype=float)
    psig = p**params.sigma
    lfact = (params.tau / params.sigma) * log_factorial(floor_power(p, params.sigma))

    log_b = float(np.max(lfact - lm[1:]))
    lower_slack = log_b + lm[1:] - lfact
    lower = InequalityCertificate(
        name="stirling_lower",
        params=params,
        p_range=(1, p_max),
        constants={"B": math.exp(log_b)},
        margin=float(lower_slack.min()),
        holds=float(lower_slack.min()) >= -_MARGIN_TOL,
    )

    log_c = math.log(c_upper) if c_upper is not None else params.tau / params.sigma
    log_a = float(np.max(lm[1:] - psig * log_c - lfact))
    upper_slack = log_a + psig * log_c + lfact - lm[1:]
    upper = InequalityCertificate(
        name="stirling_upper",
        params=params,
        p_range=(1, p_max),
        constants={"A": math.exp(log_a), "C": math.exp(log_c)},
        margin=float(upper_slack.min()),
        holds=float(upper_slack.min()) >= -_MARGIN_TOL,
    )
    return upper, lower


def certify_all(
    params: ClassParams, p_max: int = 200, pq_max: int = 100
) -> list[InequalityCertificate]:
    """The full six-certificate sweep used by the CLI and the acceptance suite."""
    upper, lower = certify_stirling_bounds(params, p_max)
    return [
        certify_m1(params, p_max),
        certify_m2_tilde_prime(params, pq_max, p_max),
        certify_m2_tilde(params, pq_max),
        certify_m3_prime(params, p_max),
        upper,
        lower,
    ]


# ---------------------------------------------------------------------------
# Enumeration: re-indexing N -> a_N of decay profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumMap:
    """Index re-parameterization N -> a_N = c * N**e (strictly increasing).

    kind 'identity' fixes (c, e) = (1, 1); 'scale' fixes e = 1; 'power' is
    the general form.  Composition of two maps is again of this form, so
    'composed' maps collapse to explicit coefficients.
    """

    kind: str = "identity"
    c: float = 1.0
    e: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "scale", "power", "composed"):
            raise ValueError(f"unknown enumeration kind {self.kind!r}")
        if not (self.c > 0 and self.e > 0):
            raise ValueError("enumeration must be positive and strictly increasing")
        if self.kind == "identity" and (self.c != 1.0 or self.e != 1.0):
            raise ValueError("identity map must have c = e = 1")
        if self.kind == "scale" and self.e != 1.0:
            raise ValueError("scale map must have e = 1")

    @classmethod
    def identity(cls) -> "EnumMap":
        return cls("identity", 1.0, 1.0)

    @classmethod
    def scale(cls, c: float) -> "EnumMap":
        return cls("scale", c, 1.0)

    @classmethod
    def power(cls, c: float, e: float) -> "EnumMap":
        return cls("power", c, e)

    def __call__(self, n):
        return self.c * np.asarray(n, dtype=float) ** self.e

    def compose(self, inner: "EnumMap") -> "EnumMap":
        """Map N -> self(inner(N))."""
        # c_out * (c_in * N^e_in)^e_out = c_out * c_in^e_out * N^(e_in e_out)
        return EnumMap("composed", self.c * inner.c**self.e, self.e * inner.e)


@dataclass
class Profile:
    """A decay profile value(N) sampled on integer indices.

    ``log_formula`` evaluates ln value at *real* arguments (bounds with
    floors keep their floors); when absent, enumeration falls back to
    monotone interpolation of ln value in N and flags the result.
    """

    n_values: np.ndarray
    log_values: np.ndarray
    log_formula: Callable[[np.ndarray], np.ndarray] | None = None
    interpolated: bool = False

    def __post_init__(self):
        self.n_values = np.asarray(self.n_values, dtype=float)
        self.log_values = np.asarray(self.log_values, dtype=float)
        if self.n_values.ndim != 1 or self.n_values.shape != self.log_values.shape:
            raise ValueError("profile needs matching 1-d index and value arrays")
        if np.any(np.diff(self.n_values) <= 0) or self.n_values[0] < 1:
            raise ValueError("profile indices must be increasing and >= 1")

    def log_at(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.log_formula is not None:
            return self.log_formula(n)
        if n.min() < self.n_values[0] or n.max() > self.n_values[-1]:
            raise ValueError(
                "interpolated profile cannot be evaluated outside its index range"
            )
        from scipy.interpolate import PchipInterpolator

        return PchipInterpolator(self.n_values, self.log_values)(n)


def enumerate_profile(profile: Profile, emap: EnumMap) -> Profile:
    """Re-index a profile: value'(N) = value(a_N).

    Exact re-parameterization, not approximation: the transported profile
    carries the composed closed form when one is attached.
    """
    a = emap(profile.n_values)
    if np.any(np.diff(a) <= 0):
        raise ValueError("enumeration map must be strictly increasing")
    new_logs = profile.log_at(a)
    new_formula = None
    interpolated = profile.log_formula is None
    if profile.log_formula is not None:
        inner = profile.log_formula
        new_formula = lambda n, _f=inner, _m=emap: _f(_m(n))  # noqa: E731
    return Profile(
        n_values=profile.n_values.copy(),
        log_values=new_logs,
        log_formula=new_formula,
        interpolated=interpolated or profile.interpolated,
    )


# ---------------------------------------------------------------------------
# Associated weight T(t) = sup_p (p ln t - ln M_p)
# ---------------------------------------------------------------------------


def associated_weight_many(params: ClassParams, t: np.ndarray) -> np.ndarray:
    """Vectorized T(t) = sup_{p>=0} (p ln t - ln M_p).

    The objective is concave in p for fixed t, so the integer supremum sits
    next to the continuous stationary point; we bracket that point by
    bisection in ln p and take the max over the adjacent integer window.
    T(t) = 0 for t <= 1.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    s = np.log(np.maximum(t, 1.0))
    out = np.zeros_like(s)
    active = s > 0
    if not np.any(active):
        return out
    sa = s[active]
    tau, sig = params.tau, params.sigma
    # Stationary point of p*s - tau p^sigma ln p: s = tau p^(sigma-1)(sigma ln p + 1).
    lo = np.zeros_like(sa)
    hi = np.maximum(np.log(sa / tau + 2.0) / max(sig - 1.0, 1e-9), 2.0) + 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        deriv = sa - tau * np.exp((sig - 1.0) * mid) * (sig * mid + 1.0)
        go_right = deriv > 0
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    p_star = np.exp(0.5 * (lo + hi))
    best = np.zeros_like(sa)
    base = np.floor(p_star).astype(np.int64)
    for off in range(-2, 4):
        p = np.maximum(base + off, 0).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lm = np.where(p >= 2, tau * p**sig * np.log(np.maximum(p, 2.0)), 0.0)
        best = np.maximum(best, p * sa - lm)
    out[active] = np.maximum(best, 0.0)
    return out


def associated_weight(params: ClassParams, t: float) -> float:
    """Scalar T(t); see associated_weight_many."""
    return float(associated_weight_many(params, np.array([t]))[0])
