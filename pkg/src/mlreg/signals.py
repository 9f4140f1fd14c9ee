"""Test-signal corpus, spectra, derivative suprema and file I/O.

Signals are uniformly sampled and treated as periodic on their box; every
singular feature is placed away from the wrap-around seam and analysis
regions must keep a guard band from it.  The Fourier convention is the
e^{-2 pi i x xi} transform, approximated by the DFT with the usual
spacing/phase factors, which round-trips to ~1e-15.

Derivative suprema come in two flavours.  ``method="oracle"`` uses closed
forms attached to the catalog kinds (stable log-domain recurrences, exact
for any order).  ``method="spectral"`` differentiates the cutoff-localized
samples in frequency; it masks bins below the float noise floor and caps
the order at ``p_cap`` beyond which round-off amplification would dominate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .cutoffs import Region, build_admissible
from .msequence import associated_weight_many
from .params import ClassParams

__all__ = [
    "Label",
    "SampledSignal",
    "Spectrum",
    "DerivSups",
    "forward_transform",
    "inverse_transform",
    "synth",
    "synth_prescribed_decay",
    "derivative_sups",
    "oracle_log_sups",
    "save_signal",
    "load_signal",
    "spectral_p_cap",
]

SEAM_MARGIN = 0.1  # fraction of the box kept clear of singular features

_NOISE_FLOOR = 1e-15  # relative magnitude below which spectrum bins are noise


@dataclass
class Label:
    """Ground-truth annotation; absent entirely for unknown signals."""

    kind: str
    singular_points: tuple[float, ...] = ()
    expected_params: ClassParams | None = None
    gevrey_order: float | None = None
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "singular_points": list(self.singular_points),
            "expected_params": None
            if self.expected_params is None
            else self.expected_params.as_dict(),
            "gevrey_order": self.gevrey_order,
            "meta": {
                k: v for k, v in self.meta.items() if isinstance(v, (int, float, str))
            },
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "Label | None":
        if d is None:
            return None
        ep = d.get("expected_params")
        return cls(
            kind=d["kind"],
            singular_points=tuple(d.get("singular_points", ())),
            expected_params=None if ep is None else ClassParams(ep["tau"], ep["sigma"]),
            gevrey_order=d.get("gevrey_order"),
            meta=d.get("meta", {}),
        )


@dataclass
class SampledSignal:
    dim: int
    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    samples: np.ndarray
    label: Label | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        self.origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        self.spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        if self.dim not in (1, 2) or self.samples.ndim != self.dim:
            raise ValueError("samples must match dim (1 or 2)")
        if any(s < 16 for s in self.samples.shape):
            raise ValueError("need at least 16 samples per axis")
        if any(d <= 0 for d in self.spacing):
            raise ValueError("spacing must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.spacing[0] * np.arange(self.samples.shape[0])

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.samples.shape[k])

    @property
    def box_length(self) -> float:
        return self.spacing[0] * self.samples.shape[0]

    def seam_safe_interval(self) -> tuple[float, float]:
        """Largest analysis window that respects the seam guard."""
        L = self.box_length
        return (self.origin[0] + SEAM_MARGIN * L, self.origin[0] + (1 - SEAM_MARGIN) * L)


@dataclass
class Spectrum:
    freq_spacing: float
    values: np.ndarray
    origin: tuple[float, ...]
    dim: int = 1

    @property
    def freqs(self) -> np.ndarray:
        n = self.values.shape[0]
        return np.fft.fftfreq(n, d=1.0 / (n * self.freq_spacing))


def forward_transform(signal: SampledSignal) -> Spectrum:
    """DFT approximation of the e^{-2 pi i x xi} transform."""
    if signal.dim == 1:
        n = signal.n
        dx = signal.spacing[0]
        xi = np.fft.fftfreq(n, d=dx)
        vals = dx * np.exp(-2j * np.pi * signal.origin[0] * xi) * np.fft.fft(signal.samples)
        return Spectrum(1.0 / (n * dx), vals, signal.origin, 1)
    ny, nx = signal.samples.shape
    dy, dx = signal.spacing
    vals = dy * dx * np.fft.fft2(signal.samples)
    xi0 = np.fft.fftfreq(ny, d=dy)
    xi1 = np.fft.fftfreq(nx, d=dx)
    phase = np.exp(
        -2j * np.pi * (signal.origin[0] * xi0[:, None] + signal.origin[1] * xi1[None, :])
    )
    return Spectrum(1.0 / (ny * dy), vals * phase, signal.origin, 2)


def inverse_transform(spec: Spectrum, real: bool = True) -> SampledSignal:
    if spec.dim != 1:
        raise ValueError("inverse_transform implemented for dim 1")
    n = spec.values.shape[0]
    dx = 1.0 / (n * spec.freq_spacing)
    xi = np.fft.fftfreq(n, d=dx)
    vals = np.fft.ifft(spec.values * np.exp(2j * np.pi * spec.origin[0] * xi)) / dx
    if real:
        vals = vals.real
    return SampledSignal(1, spec.origin, (dx,), vals)


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _grid(n: int, origin: float, length: float) -> tuple[np.ndarray, float]:
    dx = length / n
    return origin + dx * np.arange(n), dx


def _require_resolved(scale: float, dx: float, what: str):
    if scale < 8.0 * dx:
        raise ValueError(
            f"grid too coarse to resolve {what}: scale {scale:g} < 8 samples ({8 * dx:g})"
        )


def _require_seam_safe(x0: float, origin: float, length: float, what: str):
    lo = origin + SEAM_MARGIN * length
    hi = origin + (1 - SEAM_MARGIN) * length
    if not (lo <= x0 <= hi):
        raise ValueError(
            f"{what} at {x0:g} sits within {SEAM_MARGIN:.0%} of the periodic seam"
        )


def synth(
    kind: str,
    n: int = 4096,
    origin: float = 0.0,
    length: float = 1.0,
    **p,
) -> SampledSignal:
    """Catalog signal with ground-truth label.

    Kinds: gaussian(center,width,amp), cosine(lam,phase,amp),
    heaviside(x0), kink(x0), gevrey_flat(x0,a), chirp(center,rate,amp),
    and sum(parts=[{kind:..., ...}, ...]).
    """
    x, dx = _grid(n, origin, length)
    if kind == "gaussian":
        c = p.get("center", origin + 0.5 * length)
        s = p.get("width", 0.05 * length)
        amp = p.get("amp", 1.0)
        _require_resolved(s, dx, "gaussian width")
        vals = amp * np.exp(-0.5 * ((x - c) / s) ** 2)
        label = Label("gaussian", (), meta={"center": c, "width": s, "amp": amp})
    elif kind == "cosine":
        lam = p.get("lam", 2.0 * np.pi * 8.0 / length)
        amp = p.get("amp", 1.0)
        phase = p.get("phase", 0.0)
        _require_resolved(2.0 * np.pi / lam, dx, "cosine period")
        vals = amp * np.cos(lam * x + phase)
        label = Label("cosine", (), meta={"lam": lam, "amp": amp, "phase": phase})
    elif kind == "heaviside":
        x0 = p.get("x0", origin + 0.5 * length)
        _require_seam_safe(x0, origin, length, "step")
        vals = np.where(x >= x0, 1.0, 0.0)
        label = Label("heaviside", (x0,), meta={"x0": x0})
    elif kind == "kink":
        x0 = p.get("x0", origin + 0.5 * length)
        _require_seam_safe(x0, origin, length, "kink")
        vals = np.abs(x - x0)
        label = Label("kink", (x0,), meta={"x0": x0})
    elif kind == "gevrey_flat":
        x0 = p.get("x0", origin + 0.35 * length)
        a = p.get("a", 1.0)
        _require_seam_safe(x0, origin, length, "flat point")
        y = x - x0
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.where(y > 0, np.exp(-np.power(np.maximum(y, 1e-300), -a)), 0.0)
        label = Label(
            "gevrey_flat", (x0,), gevrey_order=1.0 + 1.0 / a, meta={"x0": x0, "a": a}
        )
    elif kind == "chirp":
        c = p.get("center", origin + 0.5 * length)
        rate = p.get("rate", 200.0 / length**2)
        amp = p.get("amp", 1.0)
        _require_resolved(1.0 / math.sqrt(rate), dx, "chirp scale")
        vals = amp * np.cos(rate * (x - c) ** 2)
        label = Label("chirp", (), meta={"center": c, "rate": rate, "amp": amp})
    elif kind == "sum":
        parts = p["parts"]
        vals = np.zeros_like(x)
        sing: list[float] = []
        metas = []
        for part in parts:
            sub = synth(n=n, origin=origin, length=length, **part)
            vals = vals + sub.samples
            sing.extend(sub.label.singular_points)
            metas.append(sub.label.as_dict())
        label = Label("sum", tuple(sorted(sing)), meta={"n_parts": len(parts)})
        label.meta["parts"] = parts
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    return SampledSignal(1, (origin,), (dx,), vals, label)


def synth_prescribed_decay(
    params: ClassParams,
    n: int = 4096,
    origin: float = 0.0,
    length: float = 1.0,
    amplitude: float = 1.0,
    seed: int = 0,
) -> SampledSignal:
    """Random-phase signal with |u^(xi)| = amplitude * exp(-T(2 pi |xi|)).

    T is the associated weight of the class sequence, evaluated at the
    angular frequency so that the derivative envelope of the ideal signal
    follows the sequence itself with no linear-in-p skew.
    """
    params.require_detector_grade()
    x, dx = _grid(n, origin, length)
    xi = np.fft.fftfreq(n, d=dx)
    mag = amplitude * np.exp(-associated_weight_many(params, np.maximum(2.0 * np.pi * np.abs(xi), 1e-300)))
    rng = np.random.default_rng(seed)
    phase = np.exp(2j * np.pi * rng.uniform(size=n))
    vals = mag.astype(complex) * phase
    # Hermitian symmetry so the synthesized signal is real.
    vals[0] = mag[0]
    half = n // 2
    vals[half] = mag[half]
    vals[n - 1 : half : -1] = np.conj(vals[1:half])
    spec = Spectrum(1.0 / (n * dx), vals, (origin,), 1)
    sig = inverse_transform(spec)
    sig.label = Label(
        "prescribed_decay",
        (),
        expected_params=params,
        meta={
            "amplitude": amplitude,
            "seed": seed,
            "freq_argument": "angular",
            "length": length,
        },
    )
    return sig


# ---------------------------------------------------------------------------
# Derivative suprema
# ---------------------------------------------------------------------------


@dataclass
class DerivSups:
    """log sup_K |d^p u| for p = 0..p_max (natural logs; -inf for zero)."""

    p_max: int
    log_values: np.ndarray
    region: tuple[float, float]
    method: str
    p_cap: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    def restricted(self, p_max: int) -> "DerivSups":
        return DerivSups(
            p_max,
            self.log_values[: p_max + 1],
            self.region,
            self.method,
            self.p_cap,
            self.meta,
        )


def spectral_p_cap(retained_edge: float, typical: float) -> int:
    """Noise-amplification cap: floor(0.5 ln(1/eps) / ln(edge/typical)).

    ``retained_edge`` is the highest frequency surviving the noise-floor
    mask (the dangerous amplification only acts up to there), ``typical``
    the scale carrying the bulk of the spectrum's mass.
    """
    eps = np.finfo(float).eps
    ratio = max(retained_edge / max(typical, 1e-300), math.e)
    # one extra order of safety: the boundary order sits right at the
    # measured edge of cross-method agreement
    return max(2, int(math.floor(0.5 * math.log(1.0 / eps) / math.log(ratio))) - 1)


def _localize(signal: SampledSignal, region: tuple[float, float]) -> np.ndarray:
    a, b = region
    lo, hi = signal.seam_safe_interval()
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    support = 1.875 * r
    if a >= b:
        raise ValueError("region must have positive width")
    if c - support < lo or c + support > hi:
        raise ValueError(
            f"region [{a:g},{b:g}] needs a guard band inside [{lo:g},{hi:g}]"
        )
    fam = build_admissible(Region.interval(c, r), ClassParams(1.0, 2.0), [16])
    return signal.samples * fam.sample(signal.x, 16)


def derivative_sups(
    signal: SampledSignal,
    region: tuple[float, float],
    p_max: int,
    method: str = "spectral",
    band_extension: float | None = 1.0,
) -> DerivSups:
    """sup_K |d^p u| per total order p, by oracle or spectral differentiation."""
    if method == "oracle":
        return oracle_log_sups(signal, region, p_max, band_extension=band_extension)
    if method != "spectral":
        raise ValueError("method must be 'oracle' or 'spectral'")
    if signal.dim != 1:
        raise ValueError("spectral sups implemented for dim 1")
    localized = _localize(signal, region)
    n, dx = signal.n, signal.spacing[0]
    spec = np.fft.fft(localized) * dx
    xi = np.fft.fftfreq(n, d=dx)
    mag = np.abs(spec)
    floor = _NOISE_FLOOR * float(mag.max())
    keep = mag > floor
    keep[0] = True
    retained_edge = float(np.abs(xi[keep]).max())
    absxi = np.abs(xi[keep])
    order = np.argsort(absxi)
    cum = np.cumsum(mag[keep][order] ** 2)
    idx = int(np.searchsorted(cum, 0.999 * cum[-1]))
    typical = max(float(absxi[order][min(idx, len(cum) - 1)]), 4.0 / signal.box_length)
    p_cap = spectral_p_cap(retained_edge, typical)
    if p_max > p_cap:
        raise ValueError(
            f"spectral differentiation refused beyond p_cap={p_cap} (requested {p_max})"
        )
    a, b = region
    sel = (signal.x >= a) & (signal.x <= b)
    spec_masked = np.where(keep, spec, 0.0)
    logs = np.empty(p_max + 1)
    for p in range(p_max + 1):
        deriv = np.fft.ifft((2j * np.pi * xi) ** p * spec_masked) / dx
        m = _refined_sup(deriv.real[sel])
        logs[p] = math.log(m) if m > 0 else -np.inf
    return DerivSups(
        p_max,
        logs,
        region,
        "spectral",
        p_cap=p_cap,
        meta={"retained_edge": retained_edge, "typical_freq": typical},
    )


def _refined_sup(vals: np.ndarray) -> float:
    """max |v| with parabolic refinement of the discrete peak.

    Recovers the continuum supremum of a smooth sampled function to well
    below the cross-method tolerances; falls back to the raw maximum when
    the peak sits on the window edge.
    """
    v2 = vals * vals
    i = int(np.argmax(v2))
    if i == 0 or i == len(v2) - 1:
        return float(math.sqrt(v2[i]))
    y0, y1, y2 = v2[i - 1], v2[i], v2[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return float(math.sqrt(y1))
    peak = y1 - 0.125 * (y2 - y0) ** 2 / denom
    return float(math.sqrt(max(peak, y1)))


def _hermite_log_sup(y: np.ndarray, p_max: int) -> np.ndarray:
    """ln max_y |He_p(y) e^{-y^2/2}| / sqrt(p!) via the stable scaled recurrence."""
    h_prev = np.exp(-0.5 * y**2)
    out = np.empty(p_max + 1)
    out[0] = math.log(max(h_prev.max(), 1e-300))
    if p_max == 0:
        return out
    h = y * h_prev
    out[1] = math.log(max(np.abs(h).max(), 1e-300))
    for p in range(1, p_max):
        h, h_prev = (y * h - math.sqrt(p) * h_prev) / math.sqrt(p + 1.0), h
        out[p + 1] = math.log(max(np.abs(h).max(), 1e-300))
    return out


def oracle_log_sups(
    signal: SampledSignal,
    region: tuple[float, float],
    p_max: int,
    band_extension: float | None = 1.0,
) -> DerivSups:
    """Closed-form derivative envelopes for labeled catalog kinds."""
    if signal.label is None:
        raise ValueError("oracle sups need a labeled signal")
    kind = signal.label.kind
    meta = signal.label.meta
    a, b = region
    logs = np.full(p_max + 1, -np.inf)
    if kind == "gaussian":
        c, s, amp = meta["center"], meta["width"], meta["amp"]
        y = np.linspace((a - c) / s, (b - c) / s, 20001)
        scaled = _hermite_log_sup(y, p_max)
        p = np.arange(p_max + 1)
        logs = math.log(amp) - p * math.log(s) + 0.5 * gammaln(p + 1.0) + scaled
    elif kind == "cosine":
        lam, amp = meta["lam"], meta["amp"]
        phase = meta.get("phase", 0.0)
        p = np.arange(p_max + 1)
        if (b - a) * lam >= np.pi:
            peak = np.zeros(p_max + 1)
        else:
            xg = np.linspace(a, b, 4001)
            peak = np.array(
                [
                    math.log(max(np.abs(np.cos(lam * xg + phase + q * np.pi / 2)).max(), 1e-300))
                    for q in range(p_max + 1)
                ]
            )
        logs = math.log(amp) + p * math.log(lam) + peak
    elif kind in ("heaviside", "kink"):
        x0 = meta["x0"]
        inside = a <= x0 <= b
        if kind == "heaviside":
            logs[0] = 0.0 if (inside or x0 <= b) else -np.inf
            if inside:
                logs[1:] = np.inf
        else:
            logs[0] = math.log(max(abs(a - x0), abs(b - x0)))
            if p_max >= 1:
                logs[1] = 0.0
            if inside and p_max >= 2:
                logs[2:] = np.inf
    elif kind == "prescribed_decay":
        logs = _prescribed_log_sups(signal, p_max, band_extension)
    elif kind == "chirp":
        c, rate, amp = meta["center"], meta["rate"], meta["amp"]
        xg = np.linspace(a, b, 2001)
        q = np.zeros((len(xg),), dtype=complex) + 1.0
        dq = np.zeros_like(q)
        logs[0] = math.log(amp)
        # f = Re(amp e^{i rate (x-c)^2}); f^(p) = Re(Q_p e^{...}),
        # Q_{p+1} = Q' + 2 i rate (x-c) Q evaluated on the grid.
        z = xg - c
        qs = q.copy()
        grid_d = xg[1] - xg[0]
        for p in range(1, p_max + 1):
            dq = np.gradient(qs, grid_d)
            qs = dq + 2j * rate * z * qs
            logs[p] = math.log(max(np.abs(qs).max(), 1e-300))
    elif kind == "sum":
        parts = meta.get("parts")
        if not parts:
            raise ValueError("sum signal lacks parts metadata for the oracle")
        sub_logs = []
        for part in parts:
            sub = synth(
                n=signal.n, origin=signal.origin[0], length=signal.box_length, **part
            )
            sub_logs.append(oracle_log_sups(sub, region, p_max).log_values)
        logs = np.logaddexp.reduce(np.vstack(sub_logs), axis=0)
    else:
        raise ValueError(f"no oracle for kind {kind!r}")
    return DerivSups(p_max, logs, region, "oracle")


def _prescribed_log_sups(
    signal: SampledSignal, p_max: int, band_extension: float | None
) -> np.ndarray:
    """Mode-envelope sups max_bins (2 pi |xi|)^p |u^| for the prescription law.

    The per-mode maximum is the conjugate-duality reading of the prescribed
    decay: with dense bins it reproduces the class weight sequence itself,
    without the bandwidth factors an L1 sum would smuggle in.  ``band_extension``
    appends log-spaced synthetic bins beyond the grid band (the ideal object
    the label describes extends past Nyquist); ``None`` extends to the float
    ceiling, exact in the log domain for any order.
    """
    params = signal.label.expected_params
    amp = signal.label.meta["amplitude"]
    n, dx = signal.n, signal.spacing[0]
    xi = np.abs(np.fft.fftfreq(n, d=dx))
    log_omega = np.log(2.0 * np.pi * np.maximum(xi, 1e-300))
    nyq = math.log(2.0 * np.pi * 0.5 / dx)
    top = 700.0 if band_extension is None else nyq + math.log(band_extension)
    if top > nyq:
        log_omega = np.concatenate([log_omega, np.linspace(nyq, top, 4096)])
    log_mag = math.log(max(amp, 1e-300)) - associated_weight_many(
        params, np.exp(np.minimum(log_omega, 700.0))
    )
    p = np.arange(p_max + 1)
    return (p[:, None] * log_omega[None, :] + log_mag[None, :]).max(axis=1)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def save_signal(signal: SampledSignal, path: str | Path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        if signal.dim != 1:
            raise ValueError("CSV format holds dim-1 signals only")
        complex_vals = np.iscomplexobj(signal.samples)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im"] if complex_vals else ["x", "re"])
            for xv, sv in zip(signal.x, signal.samples):
                row = [f"{xv:.15g}", f"{sv.real:.15g}"]
                if complex_vals:
                    row.append(f"{sv.imag:.15g}")
                w.writerow(row)
    elif fmt == "json":
        complex_vals = np.iscomplexobj(signal.samples)
        doc = {
            "dim": signal.dim,
            "origin": list(signal.origin),
            "spacing": list(signal.spacing),
            "shape": list(signal.samples.shape),
            "samples": signal.samples.real.ravel().tolist(),
            "label": None if signal.label is None else signal.label.as_dict(),
        }
        if complex_vals:
            doc["samples_imag"] = signal.samples.imag.ravel().tolist()
        if signal.label is not None and "parts" in signal.label.meta:
            doc["label"]["meta"]["parts"] = signal.label.meta["parts"]
        with open(path, "w") as fh:
            json.dump(doc, fh)
    else:
        raise ValueError(f"unknown signal format {fmt!r}")


def load_signal(path: str | Path, fmt: str | None = None) -> SampledSignal:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        xs: list[float] = []
        vals: list[complex] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[0].strip() != "x":
                raise ValueError(f"{path}: missing 'x,re[,im]' header")
            has_im = len(header) > 2
            for i, row in enumerate(reader, start=2):
                if len(row) < 2 + has_im:
                    raise ValueError(f"{path}: malformed row {i}")
                try:
                    x = float(row[0])
                    re = float(row[1])
                    im = float(row[2]) if has_im else 0.0
                except ValueError as exc:
                    raise ValueError(f"{path}: malformed row {i}: {exc}") from exc
                if not all(math.isfinite(v) for v in (x, re, im)):
                    raise ValueError(f"{path}: non-finite value at row {i}")
                xs.append(x)
                vals.append(complex(re, im))
        if len(xs) < 16:
            raise ValueError(f"{path}: need at least 16 rows")
        x = np.asarray(xs)
        d = np.diff(x)
        dx = d[0]
        bad = np.nonzero(np.abs(d - dx) > 1e-9 * max(abs(dx), 1e-30))[0]
        if bad.size:
            raise ValueError(f"{path}: non-uniform spacing first at row {bad[0] + 3}")
        arr = np.asarray(vals)
        if np.allclose(arr.imag, 0.0):
            arr = arr.real
        return SampledSignal(1, (x[0],), (dx,), arr)
    if fmt == "json":
        with open(path) as fh:
            doc = json.load(fh)
        shape = tuple(doc["shape"])
        n_total = int(np.prod(shape))
        if len(doc["samples"]) != n_total:
            raise ValueError(f"{path}: shape {shape} does not match sample count")
        arr = np.asarray(doc["samples"], dtype=float).reshape(shape)
        if "samples_imag" in doc:
            arr = arr + 1j * np.asarray(doc["samples_imag"], dtype=float).reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{path}: non-finite samples")
        return SampledSignal(
            doc["dim"],
            tuple(doc["origin"]),
            tuple(doc["spacing"]),
            arr,
            Label.from_dict(doc.get("label")),
        )
    raise ValueError(f"unknown signal format {fmt!r}")
