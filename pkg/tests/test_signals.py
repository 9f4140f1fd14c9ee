"""Signal corpus, transform, derivative-sup and I/O tests."""

import math

import numpy as np
import pytest

from mlreg.msequence import associated_weight_many
from mlreg.params import ClassParams
from mlreg.signals import (
    SampledSignal,
    derivative_sups,
    forward_transform,
    inverse_transform,
    load_signal,
    oracle_log_sups,
    save_signal,
    synth,
    synth_prescribed_decay,
)

K = (0.35, 0.65)


@pytest.mark.parametrize(
    "kind,kwargs",
    [
        ("gaussian", {"width": 0.04}),
        ("cosine", {"lam": 40.0}),
        ("heaviside", {}),
        ("kink", {}),
        ("gevrey_flat", {"a": 1.0}),
        ("chirp", {}),
    ],
)
def test_roundtrip_transform(kind, kwargs):
    sig = synth(kind, **kwargs)
    back = inverse_transform(forward_transform(sig))
    scale = np.max(np.abs(sig.samples))
    assert np.max(np.abs(back.samples - sig.samples)) <= 1e-10 * scale


def test_labels():
    assert synth("gaussian").label.singular_points == ()
    assert synth("heaviside", x0=0.4).label.singular_points == (0.4,)
    gf = synth("gevrey_flat", a=1.0)
    assert gf.label.gevrey_order == pytest.approx(2.0)
    s = synth("sum", parts=[{"kind": "heaviside", "x0": 0.3}, {"kind": "kink", "x0": 0.7}])
    assert s.label.singular_points == (0.3, 0.7)


def test_synth_rejections():
    with pytest.raises(ValueError, match="coarse"):
        synth("gaussian", n=64, width=0.001)
    with pytest.raises(ValueError, match="seam"):
        synth("heaviside", x0=0.01)


def test_prescribed_decay_matches_law():
    params = ClassParams(1.0, 2.0)
    sig = synth_prescribed_decay(params, amplitude=2.0, seed=5)
    spec = forward_transform(sig)
    law = 2.0 * np.exp(
        -associated_weight_many(params, np.maximum(2 * np.pi * np.abs(spec.freqs), 1e-300))
    )
    assert np.max(np.abs(np.abs(spec.values) - law)) <= 1e-10 * law.max()
    assert np.isrealobj(sig.samples)
    assert sig.label.expected_params == params


def test_prescribed_decay_zero_amplitude():
    sig = synth_prescribed_decay(ClassParams(1.0, 2.0), amplitude=0.0)
    assert np.max(np.abs(sig.samples)) == 0.0


def test_oracle_cosine_power_law():
    sig = synth("cosine", lam=50.0)
    sups = oracle_log_sups(sig, K, 8)
    np.testing.assert_allclose(sups.log_values, np.arange(9) * math.log(50.0), atol=1e-12)


def test_oracle_heaviside_and_kink():
    h = oracle_log_sups(synth("heaviside", x0=0.5), (0.4, 0.6), 3)
    assert h.log_values[0] == 0.0 and np.all(np.isinf(h.log_values[1:]))
    away = oracle_log_sups(synth("heaviside", x0=0.5), (0.6, 0.8), 3)
    assert np.all(away.log_values[1:] == -np.inf)
    k = oracle_log_sups(synth("kink", x0=0.5), (0.4, 0.6), 4)
    assert k.log_values[1] == 0.0 and np.all(np.isinf(k.log_values[2:]))


def test_spectral_agrees_with_oracle_gaussian():
    sig = synth("gaussian", width=0.035)
    spc = derivative_sups(sig, K, 6, method="spectral")
    p_hi = min(10, spc.p_cap)
    spc = derivative_sups(sig, K, p_hi, method="spectral")
    orc = oracle_log_sups(sig, K, p_hi)
    rel = np.abs(np.exp(spc.log_values - orc.log_values) - 1.0)
    assert rel.max() <= 1e-5


def test_spectral_agrees_with_oracle_cosine():
    sig = synth("cosine", lam=50.0)
    spc = derivative_sups(sig, K, 2, method="spectral")
    p_hi = min(10, spc.p_cap)
    spc = derivative_sups(sig, K, p_hi, method="spectral")
    orc = oracle_log_sups(sig, K, p_hi)
    rel = np.abs(np.exp(spc.log_values - orc.log_values) - 1.0)
    assert rel.max() <= 1e-5


def test_spectral_refuses_past_cap():
    sig = synth("gaussian", width=0.05)
    with pytest.raises(ValueError, match="p_cap"):
        derivative_sups(sig, K, 40, method="spectral")


def test_spectral_refuses_boundary_region():
    sig = synth("gaussian", width=0.05)
    with pytest.raises(ValueError, match="guard"):
        derivative_sups(sig, (0.0, 0.2), 3, method="spectral")


def test_heaviside_divergence_under_refinement():
    logs = []
    for n in (1024, 2048, 4096):
        sig = synth("heaviside", n=n, x0=0.5)
        sups = derivative_sups(sig, (0.4, 0.6), 2, method="spectral")
        logs.append(sups.log_values[2])
    assert logs[0] < logs[1] < logs[2]  # divergence is the signal


def test_sups_monotone_under_region_inclusion():
    sig = synth("gaussian", width=0.04, center=0.45)
    inner = oracle_log_sups(sig, (0.40, 0.55), 10).log_values
    outer = oracle_log_sups(sig, (0.30, 0.70), 10).log_values
    # sups are read off dense grids; allow their quantization error
    assert np.all(inner <= outer + 1e-6)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def test_json_roundtrip(tmp_path):
    sig = synth("heaviside", x0=0.4)
    path = tmp_path / "sig.json"
    save_signal(sig, path)
    back = load_signal(path)
    np.testing.assert_array_equal(back.samples, sig.samples)
    assert back.origin == sig.origin and back.spacing == sig.spacing
    assert back.label.kind == "heaviside"
    assert back.label.singular_points == (0.4,)


def test_csv_roundtrip(tmp_path):
    sig = synth("gaussian", width=0.05)
    path = tmp_path / "sig.csv"
    save_signal(sig, path)
    back = load_signal(path)
    assert np.max(np.abs(back.samples - sig.samples)) <= 1e-14 * np.abs(sig.samples).max()
    assert back.spacing[0] == pytest.approx(sig.spacing[0], rel=1e-12)


def test_csv_rejects_gap(tmp_path):
    path = tmp_path / "bad.csv"
    x = np.linspace(0, 1, 32)
    rows = ["x,re"] + [f"{xi},1.0" for xi in x]
    rows[10] = f"{x[9] + 0.5},1.0"  # break uniform spacing at row 10
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="row"):
        load_signal(path)


def test_csv_rejects_nan(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["x,re"] + [f"{i * 0.1:.3f},1.0" for i in range(20)]
    rows[5] = "0.4,nan"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="row"):
        load_signal(path)


def test_json_rejects_shape_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(
        '{"dim": 2, "origin": [0, 0], "spacing": [0.1, 0.1], "shape": [16, 32],'
        '"samples": [0.0, 1.0], "label": null}'
    )
    with pytest.raises(ValueError, match="shape"):
        load_signal(path)


def test_signal_validation():
    with pytest.raises(ValueError, match="16 samples"):
        SampledSignal(1, (0.0,), (0.1,), np.zeros(8))
    with pytest.raises(ValueError, match="finite"):
        SampledSignal(1, (0.0,), (0.1,), np.full(32, np.nan))
