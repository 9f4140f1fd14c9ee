"""Admissible cutoff families and partitions of unity.

Each cutoff is an indicator smoothed by one fixed bump (realized as an
iterated box kernel, so the whole function stays an exact piecewise
polynomial) followed by ``m(N)`` equal boxes whose width shrinks like
``r / (4 m(N))``.  The order budget ``m(N) = floor((N/tau)^(1/sigma))``
grows with N, so higher-index members tolerate more derivatives at the
price of steeper constants, which is exactly the trade the admissibility
bound ``C_beta**(|a|+1) * floor(N**(1/sigma))**|a|`` prices in.

Derivatives of the piecewise-polynomial form are exact; only the final
suprema are read off a dense Chebyshev sampling of each piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .msequence import floor_power
from .params import ClassParams
from .piecewise import PiecewisePoly

__all__ = [
    "Region",
    "CutoffGeometry",
    "Cutoff1D",
    "TensorCutoff",
    "CutoffFamily",
    "build_admissible",
    "AdmissibilityCertificate",
    "verify_admissible",
    "fourier_bound_check",
    "Partition",
    "build_partition",
    "order_budget",
]

#: Hard ceiling on the box count; tiny admissibility tau makes the nominal
#: budget astronomic while anything beyond this is invisible at desk scale.
DEFAULT_M_CAP = 64

#: Box count of the fixed bump kernel; the construction is C^(K + m - 2),
#: so beta_max up to K - 2 stays within classical derivatives.  Six boxes
#: keep the bump's boxes no wider than the widest detail box, which is what
#: keeps the measured C_beta stable across members (a much smoother bump
#: would let low-m members undercut the constant by large factors).
BUMP_BOXES = 6

#: Box count for partition transition bumps (smoothness only, no C_beta
#: stability constraint there).
PARTITION_BUMP_BOXES = 12


@dataclass(frozen=True)
class Region:
    """Ball (interval) with inner radius r; the support lives in radius 2r."""

    dim: int
    center: tuple[float, ...]
    r: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        if len(center) != self.dim:
            raise ValueError("center must match dim")
        object.__setattr__(self, "center", center)
        if not self.r > 0:
            raise ValueError("r must be positive")

    @classmethod
    def interval(cls, center: float, r: float) -> "Region":
        return cls(1, (center,), r)


@dataclass(frozen=True)
class CutoffGeometry:
    """Radii of the construction, as multiples of the region radius r.

    plateau = indicator - bump_halfwidth - boxes_halfwidth must stay >= 1
    and indicator + bump_halfwidth + boxes_halfwidth <= support_budget,
    where the budget is 2 in dim 1 and sqrt(2) per axis for dim-2 tensor
    cutoffs (so the square's corners stay inside the 2r ball).
    """

    indicator: float = 1.5
    bump_halfwidth: float = 0.25
    boxes_halfwidth: float = 0.125
    bump_boxes: int = BUMP_BOXES

    def __post_init__(self):
        if self.plateau_radius < 1.0 - 1e-12:
            raise ValueError("geometry must keep the plateau over the unit ball")
        if self.bump_boxes < 4:
            raise ValueError("bump needs at least 4 boxes")

    @property
    def plateau_radius(self) -> float:
        return self.indicator - self.bump_halfwidth - self.boxes_halfwidth

    @property
    def support_radius(self) -> float:
        return self.indicator + self.bump_halfwidth + self.boxes_halfwidth


DIM1_GEOMETRY = CutoffGeometry()
# Tensor factors need support*sqrt(2) <= 2.
DIM2_GEOMETRY = CutoffGeometry(indicator=1.2, bump_halfwidth=0.1, boxes_halfwidth=0.1)


def order_budget(n: int, params: ClassParams, m_cap: int = DEFAULT_M_CAP) -> int:
    """Box count m(N) = floor((N/tau)^(1/sigma)), clamped to [1, m_cap]."""
    raw = int(math.floor((n / params.tau) ** (1.0 / params.sigma) + 1e-12))
    return max(1, min(raw, m_cap))


@lru_cache(maxsize=512)
def _normalized_profile(m: int, geometry: CutoffGeometry) -> PiecewisePoly:
    """Unit-radius cutoff profile: indicator * bump-boxes * m detail boxes."""
    ind = PiecewisePoly.indicator(-geometry.indicator, geometry.indicator)
    widths = [2.0 * geometry.bump_halfwidth / geometry.bump_boxes] * geometry.bump_boxes
    widths += [2.0 * geometry.boxes_halfwidth / m] * m
    chi = ind.convolve_boxes(widths)
    chi.snap_plateau(-geometry.plateau_radius, geometry.plateau_radius)
    return chi


@lru_cache(maxsize=4096)
def _normalized_log_sup(m: int, geometry: CutoffGeometry, order: int) -> float:
    return _normalized_profile(m, geometry).derivative(order).log_sup_abs()


@dataclass(frozen=True)
class Cutoff1D:
    """One family member: a normalized profile placed at (center, r)."""

    center: float
    r: float
    m: int
    geometry: CutoffGeometry

    @property
    def profile(self) -> PiecewisePoly:
        return _normalized_profile(self.m, self.geometry)

    def as_piecewise(self) -> PiecewisePoly:
        return self.profile.affine_image(self.r, self.center)

    def __call__(self, x) -> np.ndarray:
        return self.profile((np.asarray(x, dtype=float) - self.center) / self.r)

    def log_derivative_sup(self, order: int) -> float:
        """ln sup |D^order chi| (exact differentiation, sampled supremum)."""
        return _normalized_log_sup(self.m, self.geometry, order) - order * math.log(self.r)

    @property
    def support(self) -> tuple[float, float]:
        s = self.geometry.support_radius * self.r
        return (self.center - s, self.center + s)

    @property
    def plateau(self) -> tuple[float, float]:
        p = self.geometry.plateau_radius * self.r
        return (self.center - p, self.center + p)


@dataclass(frozen=True)
class TensorCutoff:
    """dim-2 member: product of two identical 1-d factors."""

    factors: tuple[Cutoff1D, Cutoff1D]

    def __call__(self, x, y) -> np.ndarray:
        fx = self.factors[0](np.asarray(x, dtype=float))
        fy = self.factors[1](np.asarray(y, dtype=float))
        return fx * fy

    def log_derivative_sup(self, orders: tuple[int, int]) -> float:
        return self.factors[0].log_derivative_sup(orders[0]) + self.factors[
            1
        ].log_derivative_sup(orders[1])


@dataclass
class CutoffFamily:
    """N-indexed admissible cutoffs over one region.

    ``params`` is the admissibility pair itself: detector code passes
    (tau_tilde, sigma) here, while direct construction uses whatever pair
    the caller wants certified.
    """

    region: Region
    params: ClassParams
    n_list: list[int]
    geometry: CutoffGeometry
    m_cap: int
    members: dict = field(default_factory=dict)

    def member(self, n: int):
        return self.members[n]

    def k_exponent(self, n: int) -> int:
        """floor(N**(1/sigma)): the decay order priced by member N."""
        return max(int(floor_power(n, 1.0 / self.params.sigma)), 1)

    def order_budget(self, n: int) -> int:
        return order_budget(n, self.params, self.m_cap)

    def effective_budget(self, n: int) -> int:
        """Certified derivative budget: the nominal one, unless the member
        was built with fewer boxes (band-matched detector mollifiers)."""
        mem = self.members[n]
        box_count = mem.factors[0].m if isinstance(mem, TensorCutoff) else mem.m
        return min(self.order_budget(n), box_count)

    def sample(self, x: np.ndarray, n: int) -> np.ndarray:
        return self.members[n](x)

    def to_json_dict(self) -> dict:
        out = {
            "dim": self.region.dim,
            "center": list(self.region.center),
            "r": self.region.r,
            "params": self.params.as_dict(),
            "n_list": list(self.n_list),
            "m_cap": self.m_cap,
            "members": {},
        }
        for n in self.n_list:
            mem = self.members[n]
            if isinstance(mem, Cutoff1D):
                pp = mem.as_piecewise()
                out["members"][str(n)] = {
                    "m": mem.m,
                    "breaks": pp.breaks.tolist(),
                    "coeffs": pp.coeffs.tolist(),
                }
            else:
                out["members"][str(n)] = {
                    "m": mem.factors[0].m,
                    "tensor": True,
                    "axis_breaks": mem.factors[0].as_piecewise().breaks.tolist(),
                    "axis_coeffs": mem.factors[0].as_piecewise().coeffs.tolist(),
                }
        return out


def build_admissible(
    region: Region,
    params: ClassParams,
    n_list,
    geometry: CutoffGeometry | None = None,
    m_cap: int = DEFAULT_M_CAP,
    budget_override: int | None = None,
) -> CutoffFamily:
    """Construct the cutoff family; rejects sigma <= 1 (no finite budget there).

    ``budget_override`` pins every member's box count (detector families use
    a band-matched mollifier whose elements must all resolve the analysis
    band; certificates then cover min(m(N), override) orders).
    """
    params.require_detector_grade()
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1:
        raise ValueError("n_list must be nonempty with indices >= 1")
    geometry = geometry or (DIM1_GEOMETRY if region.dim == 1 else DIM2_GEOMETRY)
    if region.dim == 2 and geometry.support_radius * math.sqrt(2.0) > 2.0 + 1e-12:
        raise ValueError("tensor geometry must keep square corners inside the 2r ball")
    fam = CutoffFamily(region, params, n_list, geometry, m_cap)
    for n in n_list:
        m = budget_override if budget_override is not None else order_budget(n, params, m_cap)
        if region.dim == 1:
            fam.members[n] = Cutoff1D(region.center[0], region.r, m, geometry)
        else:
            fx = Cutoff1D(region.center[0], region.r, m, geometry)
            fy = Cutoff1D(region.center[1], region.r, m, geometry)
            fam.members[n] = TensorCutoff((fx, fy))
    return fam


@dataclass
class AdmissibilityCertificate:
    """Measured C_beta table for the admissibility bound, plus invariants.

    ``log_c_beta[b]`` is the minimal ln C_b over the family; ``per_n[b][N]``
    the same restricted to member N.  ``holds`` requires the invariants and
    the per-N constants to stay within ``stability_factor`` of each other.
    Violations are reported, never raised.
    """

    family: CutoffFamily
    beta_max: int
    log_c_beta: np.ndarray
    per_n: dict
    stability: np.ndarray
    stability_factor: float
    range_ok: bool
    plateau_ok: bool
    support_ok: bool
    holds: bool
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "beta_max": self.beta_max,
            "C_beta": np.exp(self.log_c_beta).tolist(),
            "stability": self.stability.tolist(),
            "stability_factor": self.stability_factor,
            "range_ok": self.range_ok,
            "plateau_ok": self.plateau_ok,
            "support_ok": self.support_ok,
            "holds": bool(self.holds),
            "failures": self.failures,
            "params": self.family.params.as_dict(),
            "n_list": list(self.family.n_list),
        }


def _member_invariants(fam: CutoffFamily, tol: float = 1e-10):
    """Range containment, plateau == 1 and support inside the 2r ball."""
    range_ok = plateau_ok = support_ok = True
    failures = []
    for n in fam.n_list:
        mem = fam.members[n]
        factors = mem.factors if isinstance(mem, TensorCutoff) else (mem,)
        for f in factors:
            lo, hi = f.profile.value_range()
            if lo < -tol or hi > 1.0 + tol:
                range_ok = False
                failures.append(f"N={n}: range [{lo:.2e}, {hi:.2e}]")
            pl = f.geometry.plateau_radius
            probe = np.linspace(-pl, pl, 64)
            if np.max(np.abs(f.profile(probe) - 1.0)) > tol:
                plateau_ok = False
                failures.append(f"N={n}: plateau deviates")
            s_lo, s_hi = f.profile.support
            if s_lo < -2.0 - tol or s_hi > 2.0 + tol:
                support_ok = False
                failures.append(f"N={n}: support [{s_lo:.3f},{s_hi:.3f}] leaves 2r")
    return range_ok, plateau_ok, support_ok, failures


def _multi_orders(total: int, dim: int):
    if dim == 1:
        yield (total,)
    else:
        for a in range(total + 1):
            yield (a, total - a)


def verify_admissible(
    family: CutoffFamily,
    beta_max: int = 4,
    stability_factor: float = 4.0,
) -> AdmissibilityCertificate:
    """Measure minimal C_beta tables against the admissibility bound.

    For every member N, every |alpha| <= m(N) and every |beta| <= beta_max
    the measured sup must fit C_beta**(|alpha|+1) * k_N**|alpha| with
    k_N = floor(N**(1/sigma)); the certificate is the per-beta maximum of
    the implied constants and their spread across N.
    """
    if beta_max < 0:
        raise ValueError("beta_max must be >= 0")
    if beta_max > family.geometry.bump_boxes - 2:
        raise ValueError(
            f"beta_max {beta_max} exceeds the bump smoothness budget "
            f"{family.geometry.bump_boxes - 2}"
        )
    dim = family.region.dim
    per_n: dict[int, dict[int, float]] = {b: {} for b in range(beta_max + 1)}
    for n in family.n_list:
        mem = family.members[n]
        k_n = family.k_exponent(n)
        m_n = family.effective_budget(n)
        for b in range(beta_max + 1):
            best = -np.inf
            for a in range(m_n + 1):
                # max over multi-index decompositions of the total orders
                log_sup = -np.inf
                for aa in _multi_orders(a, dim):
                    for bb in _multi_orders(b, dim):
                        if dim == 1:
                            s = mem.log_derivative_sup(aa[0] + bb[0])
                        else:
                            s = mem.log_derivative_sup((aa[0] + bb[0], aa[1] + bb[1]))
                        log_sup = max(log_sup, s)
                log_c = (log_sup - a * math.log(k_n)) / (a + 1)
                best = max(best, log_c)
            per_n[b][n] = best
    log_c_beta = np.array(
        [max(per_n[b].values()) for b in range(beta_max + 1)]
    )
    stability = np.array(
        [
            math.exp(max(per_n[b].values()) - min(per_n[b].values()))
            for b in range(beta_max + 1)
        ]
    )
    range_ok, plateau_ok, support_ok, failures = _member_invariants(family)
    stable = bool(np.all(stability <= stability_factor))
    if not stable:
        failures.append(
            f"C_beta spread {stability.max():.2f} exceeds factor {stability_factor}"
        )
    holds = stable and range_ok and plateau_ok and support_ok
    return AdmissibilityCertificate(
        family=family,
        beta_max=beta_max,
        log_c_beta=log_c_beta,
        per_n=per_n,
        stability=stability,
        stability_factor=stability_factor,
        range_ok=range_ok,
        plateau_ok=plateau_ok,
        support_ok=support_ok,
        holds=holds,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Fourier-side check
# ---------------------------------------------------------------------------


def fourier_bound_check(
    family: CutoffFamily,
    alpha_order: int,
    beta_order: int,
    freq_band: tuple[float, float],
    n_grid: int = 4096,
    slope_tol: float = 0.25,
) -> dict:
    """Check |chi_N^(xi)| <~ A**(a+1) k_N**a <xi>**(-a-b) on the band.

    Measures the minimal A per member and, as the pass criterion, requires
    the <xi>**(a+b)-compensated spectrum to be non-increasing (log-log
    slope <= slope_tol) across the band: a too-rough cutoff (e.g. the raw
    indicator, whose transform only decays like <xi>**-1) fails for
    a + b >= 2 while the constructed members pass.
    """
    if family.region.dim != 1:
        raise ValueError("fourier_bound_check is defined for dim-1 families")
    lo, hi = freq_band
    if not (0 < lo < hi):
        raise ValueError("band must satisfy 0 < lo < hi")
    c = family.region.center[0]
    half = 2.2 * family.region.r * family.geometry.support_radius / 2.0 + family.region.r
    span = 2.0 * max(half, 1.5 * family.region.r)
    dx = span / n_grid
    nyq = 0.5 / dx
    report = {"alpha": alpha_order, "beta": beta_order, "band": [lo, hi], "per_n": {}}
    if hi > nyq:
        report["aliasing"] = f"band top {hi:g} exceeds grid Nyquist {nyq:g}"
        return report
    x = c - span / 2.0 + dx * np.arange(n_grid)
    xi = np.fft.fftfreq(n_grid, d=dx)
    sel = (np.abs(xi) >= lo) & (np.abs(xi) <= hi) & (xi > 0)
    order = alpha_order + beta_order
    for n in family.n_list:
        vals = family.sample(x, n)
        spec = dx * np.exp(-2j * np.pi * x[0] * xi) * np.fft.fft(vals)
        mag = np.abs(spec[sel])
        w = np.sqrt(1.0 + xi[sel] ** 2)
        k_n = family.k_exponent(n)
        log_a = np.max(
            (np.log(np.maximum(mag, 1e-300)) + order * np.log(w) - alpha_order * math.log(k_n))
            / (alpha_order + 1)
        )
        comp = np.log(np.maximum(mag, 1e-300)) + order * np.log(w)
        slope = np.polyfit(np.log(xi[sel]), comp, 1)[0]
        report["per_n"][n] = {
            "A": float(math.exp(log_a)),
            "compensated_slope": float(slope),
            "passes": bool(slope <= slope_tol),
        }
    report["holds"] = all(v["passes"] for v in report["per_n"].values())
    return report


def _raw_indicator_family(region: Region, n_list) -> CutoffFamily:
    """Test hook: family with smoothing disabled (plain indicators)."""
    fam = build_admissible(region, ClassParams(1.0, 2.0), n_list)

    class _Raw(Cutoff1D):
        @property
        def profile(self) -> PiecewisePoly:  # type: ignore[override]
            g = self.geometry
            return PiecewisePoly.indicator(-g.support_radius, g.support_radius)

    for n in list(fam.members):
        old = fam.members[n]
        fam.members[n] = _Raw(old.center, old.r, old.m, old.geometry)
    return fam


# ---------------------------------------------------------------------------
# Partitions of unity
# ---------------------------------------------------------------------------


@dataclass
class Partition:
    """Mollified partition subordinate to a cover of intervals."""

    regions: list[Region]
    params: ClassParams
    n: int
    members: list[PiecewisePoly]
    compact: tuple[float, float]
    mollifier: PiecewisePoly
    residual: float

    def sum_values(self, x: np.ndarray) -> np.ndarray:
        return sum(m(x) for m in self.members)

    def member_certificates(self, beta_max: int = 2) -> list[dict]:
        """Admissibility-style C_beta table for each mollified member."""
        k_n = max(int(floor_power(self.n, 1.0 / self.params.sigma)), 1)
        m_n = order_budget(self.n, self.params)
        out = []
        for reg, mem in zip(self.regions, self.members):
            table = {}
            for b in range(beta_max + 1):
                best = -np.inf
                for a in range(m_n + 1):
                    log_sup = mem.derivative(a + b).log_sup_abs()
                    best = max(best, (log_sup - a * math.log(k_n)) / (a + 1))
                table[b] = math.exp(best)
            out.append({"center": reg.center[0], "C_beta": table})
        return out


def _transition_bump(
    center: float, halfwidth: float, boxes: int = PARTITION_BUMP_BOXES
) -> PiecewisePoly:
    start = PiecewisePoly.box(2.0 * halfwidth / boxes, center)
    widths = [2.0 * halfwidth / boxes] * (boxes - 1)
    return start.convolve_boxes(widths)


def build_partition(
    cover: list[Region],
    params: ClassParams,
    n: int,
    m_cap: int = DEFAULT_M_CAP,
) -> Partition:
    """Partition of unity chi_{N,k} = phi_N * chi_k over a 1-d interval cover.

    The fixed partition {chi_k} telescopes smooth transitions placed inside
    consecutive overlaps, so sum_k chi_k == 1 holds identically between the
    outer transitions; the N-dependent mollifier phi_N (bump boxes plus
    m(N) detail boxes) then preserves that identity exactly up to float
    roundoff on the compact set.
    """
    params.require_detector_grade()
    if any(r.dim != 1 for r in cover):
        raise ValueError("build_partition supports dim-1 covers")
    regions = sorted(cover, key=lambda r: r.center[0])
    centers = [r.center[0] for r in regions]
    radii = [r.r for r in regions]
    m = order_budget(n, params, m_cap)
    overlaps = []
    for i in range(len(regions) - 1):
        a = centers[i + 1] - radii[i + 1]
        b = centers[i] + radii[i]
        if b - a <= 0:
            raise ValueError(
                f"cover gap between regions {i} and {i + 1}: inner balls "
                f"[{a:g}, {b:g}] do not overlap"
            )
        overlaps.append((a, b))
    min_span = min([r for r in radii] + [b - a for a, b in overlaps])
    delta = min_span / 16.0  # mollifier support halfwidth
    phi_widths = [delta / BUMP_BOXES] * BUMP_BOXES + [delta / m] * m
    # Transition bumps: one per interior overlap plus the two outer edges.
    bumps = [_transition_bump(centers[0] - 1.25 * radii[0], radii[0] / 8.0)]
    for i, (a, b) in enumerate(overlaps):
        tw = 0.5 * (b - a) - 2.0 * delta
        if tw <= 0:
            raise ValueError(
                f"cover gap between regions {i} and {i + 1}: overlap "
                f"[{a:g}, {b:g}] too small for the transition"
            )
        bumps.append(_transition_bump(0.5 * (a + b), tw))
    bumps.append(_transition_bump(centers[-1] + 1.25 * radii[-1], radii[-1] / 8.0))

    members = []
    for k in range(len(regions)):
        chi_k = bumps[k].subtract(bumps[k + 1]).cumulative()
        members.append(chi_k.convolve_boxes(phi_widths))
    phi = PiecewisePoly.box(phi_widths[0]).convolve_boxes(phi_widths[1:])

    compact = (centers[0] - radii[0] / 2.0, centers[-1] + radii[-1] / 2.0)
    grid = np.linspace(compact[0], compact[1], 2048)
    total = sum(mem(grid) for mem in members)
    residual = float(np.max(np.abs(total - 1.0)))
    return Partition(
        regions=regions,
        params=params,
        n=n,
        members=members,
        compact=compact,
        mollifier=phi,
        residual=residual,
    )
