import json
import math

import numpy as np
import pytest

from dmdseg import pipeline, synthetic
from dmdseg.errors import ValidationError
from dmdseg.imaging import load_sequence, read_mask
from dmdseg.quantification import apply_template, read_curve_csv
from dmdseg.synthetic import Ellipse, PhantomSpec, Rect


def test_kidney_curve_start():
    spec = PhantomSpec()
    assert synthetic.kidney_curve(0, spec) == pytest.approx(0.0, abs=1e-5)


def test_poisson_peak():
    spec = PhantomSpec()
    p = synthetic.poisson_term(np.arange(100), spec)
    # integer rate: pmf(14) == pmf(15) analytically; 15 attains the maximum
    assert p[15] == pytest.approx(1.0, rel=1e-12)
    assert p[14] == pytest.approx(p[15], rel=1e-12)
    assert p.max() == pytest.approx(1.0)


def test_poisson_term_unimodal():
    p = synthetic.poisson_term(np.arange(100), PhantomSpec())
    d = np.diff(p)
    peak = int(np.argmax(p))
    assert np.all(d[:peak - 1] > 0) and np.all(d[peak + 1:] < 0)


def test_kidney_curve_peak_then_plateau():
    spec = PhantomSpec()
    k = synthetic.kidney_curve(np.arange(100), spec)
    assert 13 <= int(np.argmax(k)) <= 17
    log_part = spec.log_weight * np.log1p(np.arange(100)) / math.log(100)
    assert k[-1] == pytest.approx(log_part[-1], abs=1e-6)


def test_liver_curve():
    spec = PhantomSpec()
    assert synthetic.liver_curve(50, spec) == pytest.approx(0.5)
    v = synthetic.liver_curve(np.arange(100), spec)
    assert np.all(np.diff(v) >= 0)
    for dt in (1, 7, 20, 49):
        assert synthetic.liver_curve(50 + dt, spec) + synthetic.liver_curve(50 - dt, spec) == pytest.approx(1.0)


def test_curve_rejects_out_of_range_t():
    with pytest.raises(ValidationError):
        synthetic.kidney_curve(100, PhantomSpec())


def test_noise_free_composites(clean_phantom):
    out = clean_phantom
    frames = out.sequence.frames
    spec = out.spec
    t = np.arange(spec.frames)
    k = synthetic.kidney_curve(t, spec)
    # every kidney pixel carries the curve value exactly; the mean only adds summation rounding
    assert np.array_equal(frames[:, out.kidney_mask], np.repeat(k[:, None], out.kidney_mask.sum(), axis=1))
    np.testing.assert_allclose(apply_template(out.sequence, out.kidney_mask).values, k, rtol=1e-13, atol=0)
    background = ~(out.kidney_mask | out.liver_mask)
    assert not frames[:, background].any()


def test_default_geometry(clean_phantom):
    assert clean_phantom.sequence.frames.shape == (100, 64, 64)
    assert not np.any(clean_phantom.kidney_mask & clean_phantom.liver_mask)
    from oracles import flood_fill
    assert flood_fill(clean_phantom.kidney_mask, 8)[1] == 2
    simple = PhantomSpec(simple=True)
    assert flood_fill(simple.kidney_mask(), 8)[1] == 1


def test_determinism():
    a = synthetic.generate(PhantomSpec(seed=11))
    b = synthetic.generate(PhantomSpec(seed=11))
    c = synthetic.generate(PhantomSpec(seed=12))
    assert np.array_equal(a.sequence.frames, b.sequence.frames)
    assert not np.array_equal(a.sequence.frames, c.sequence.frames)


@pytest.mark.parametrize("kwargs", [
    {"frames": 9}, {"width": 4}, {"seed": -1}, {"noise_sigma": -0.1}, {"delta_t": 0},
    {"kidney_regions": (Ellipse(5, 5, 10, 10),)},
    {"liver_regions": (Rect(30, 10, 30, 30),)},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValidationError):
        synthetic.generate(PhantomSpec(**kwargs))


def test_custom_regions():
    spec = PhantomSpec(width=32, height=32, frames=20, noise_sigma=0,
                       kidney_regions=(Rect(20, 4, 6, 8),), liver_regions=(Rect(2, 2, 5, 20),))
    out = synthetic.generate(spec)
    assert out.kidney_mask.sum() == 48 and out.liver_mask.sum() == 100


def test_write_phantom(tmp_path):
    out = synthetic.generate(PhantomSpec(frames=12, width=16, height=16, seed=5))
    synthetic.write_phantom(out, tmp_path)
    seq = load_sequence(tmp_path / "frames")
    assert len(seq) == 12
    # 16-bit storage quantizes to 1 / scale
    np.testing.assert_allclose(seq.frames, out.sequence.frames, atol=0.5 / synthetic.FRAME_INTENSITY_SCALE + 1e-12)
    np.testing.assert_array_equal(read_mask(tmp_path / "kidney_mask.pgm"), out.kidney_mask)
    np.testing.assert_array_equal(read_mask(tmp_path / "liver_mask.pgm"), out.liver_mask)
    curve = read_curve_csv(tmp_path / "kidney_curve.csv")
    np.testing.assert_array_equal(curve.values, out.kidney_curve.values)
    meta = json.loads((tmp_path / "phantom.json").read_text())
    assert meta["seed"] == 5 and meta["rng_algorithm"] == synthetic.RNG_ALGORITHM


def test_pipeline_recovers_kidneys_noise_free(clean_phantom):
    res = pipeline.run(clean_phantom.sequence, mode=2, top_k=2)
    np.testing.assert_array_equal(res.template, clean_phantom.kidney_mask)


def test_pipeline_simple_geometry():
    out = synthetic.generate(PhantomSpec(simple=True, noise_sigma=0.0))
    res = pipeline.run(out.sequence, mode=2)
    np.testing.assert_array_equal(res.template, out.kidney_mask)
