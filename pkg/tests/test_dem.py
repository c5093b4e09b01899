"""Detector error models: text format, merging, cubic compression."""
import itertools
import os

import numpy as np
import pytest

from tests._oracles import dem_all_class_probs, syndrome_index
from tndecode.dem import (
    CompressedCubicNetwork,
    CompressionError,
    DemParseError,
    DetectorErrorModel,
    Mechanism,
    brute_force_class_probs,
    compress_dem,
    layout_detectors,
    merge_mechanisms,
    parse_dem,
    serialize_dem,
)

DATA = os.path.join(os.path.dirname(__file__), "data")


def random_dem(rng, nd, nm, with_coords=False, with_log=True):
    mechs = []
    for _ in range(nm):
        k = int(rng.integers(1, min(4, nd) + 1))
        dets = tuple(sorted(rng.choice(nd, size=k, replace=False).tolist()))
        logs = (0,) if (with_log and rng.random() < 0.4) else ()
        mechs.append(Mechanism(float(rng.uniform(0.02, 0.4)), dets, logs))
    coords = {}
    if with_coords:
        pts = rng.permutation(8)[:nd]
        for i in range(nd):
            p = int(pts[i])
            coords[i] = (float(p & 1), float((p >> 1) & 1), float((p >> 2) & 1))
    return DetectorErrorModel(
        mechanisms=mechs, n_detectors=nd,
        n_logicals=1 if with_log else 0, detector_coords=coords,
    )


# -- text format ------------------------------------------------------------


def test_parse_example():
    model = parse_dem(
        "# comment line\n"
        "error(0.125) D0 D1 L0\n"
        "error(0.25) D1\n"
        "detector(1, 0, 0) D1\n"
        "logical_observable L0\n"
    )
    assert model.n_detectors == 2 and model.n_logicals == 1
    assert model.mechanisms[0] == Mechanism(0.125, (0, 1), (0,))
    assert model.mechanisms[1] == Mechanism(0.25, (1,), ())
    assert model.detector_coords[1] == (1.0, 0.0, 0.0)


def test_parse_errors():
    with pytest.raises(DemParseError):
        parse_dem("detector(0) D0\ndetector(1) D0\n")  # duplicate coords
    with pytest.raises(DemParseError):
        parse_dem("mystery(0.1) D0\n")
    with pytest.raises(DemParseError):
        parse_dem("error(1.5) D0\n")
    with pytest.raises(DemParseError):
        parse_dem("error(nope) D0\n")
    with pytest.raises(DemParseError):
        parse_dem("error(0.1) Q0\n")


def test_parse_serialize_round_trip():
    rng = np.random.default_rng(6)
    model = random_dem(rng, 5, 8, with_coords=True)
    text = serialize_dem(model)
    back = parse_dem(text)
    assert serialize_dem(back) == text
    assert back.mechanisms == model.mechanisms
    assert back.detector_coords == model.detector_coords


def test_merge_examples():
    m = merge_mechanisms(parse_dem("error(0.25) D0\nerror(0.25) D0\n"))
    assert m.mechanisms == [Mechanism(0.375, (0,), ())]
    m = merge_mechanisms(parse_dem("error(0.1) D0 D1\nerror(0.2) D0 D1\n"))
    assert m.mechanisms[0].p == pytest.approx(0.26, abs=1e-15)
    # disjoint mechanisms are untouched, order preserved
    m = merge_mechanisms(parse_dem("error(0.1) D1\nerror(0.2) D0\n"))
    assert [mm.detectors for mm in m.mechanisms] == [(1,), (0,)]
    # p = 1 becomes a deterministic baseline flip, p = 0 is dropped
    m = merge_mechanisms(parse_dem(
        "error(1) D0 L0\nerror(0) D1\nlogical_observable L0\n"))
    assert m.mechanisms == []
    assert m.baseline_flips == (0,) and m.baseline_logicals == (0,)


def test_merge_preserves_distribution():
    rng = np.random.default_rng(13)
    for _ in range(10):
        model = random_dem(rng, int(rng.integers(2, 7)), int(rng.integers(2, 12)))
        merged = merge_mechanisms(model)
        assert np.allclose(dem_all_class_probs(model),
                           dem_all_class_probs(merged), rtol=1e-12, atol=0)


def test_scaled():
    model = parse_dem("error(0.4) D0 L0\nlogical_observable L0\n")
    half = model.scaled(0.5)
    assert half.mechanisms[0].p == pytest.approx(0.2)
    with pytest.raises(ValueError):
        model.scaled(3.0)  # would push p past 1


def test_brute_force_class_probs_matches_oracle():
    rng = np.random.default_rng(4)
    model = random_dem(rng, 4, 8)
    ref = dem_all_class_probs(model)
    for bits in itertools.product((0, 1), repeat=4):
        got = brute_force_class_probs(model, np.array(bits, np.uint8))
        assert np.allclose(got, ref[syndrome_index(bits)], rtol=1e-12, atol=0)


# -- layout -----------------------------------------------------------------


def test_layout_single_detector_at_origin():
    model = parse_dem("error(0.1) D0\n")
    dims, sites = layout_detectors(model)
    assert sites[0] == (0, 0, 0)
    assert dims[0] * dims[1] * dims[2] >= 1


def test_layout_collisions_resolve_deterministically():
    model = DetectorErrorModel(
        mechanisms=[Mechanism(0.1, (0, 1), ())], n_detectors=2, n_logicals=0,
        detector_coords={0: (0.0, 0.0, 0.0), 1: (0.0, 0.0, 0.0)},
    )
    dims, a = layout_detectors(model, dims=(2, 2, 1))
    _, b = layout_detectors(model, dims=(2, 2, 1))
    assert a == b
    assert a[0] == (0, 0, 0) and a[1] != a[0]
    # the fallback site is the nearest free one
    assert sum(a[1]) == 1


def test_layout_rejects_too_small_box():
    model = random_dem(np.random.default_rng(0), 5, 3)
    with pytest.raises(CompressionError):
        layout_detectors(model, dims=(2, 2, 1))


# -- compression ------------------------------------------------------------


def test_compress_reproduces_brute_force_probs():
    rng = np.random.default_rng(77)
    for trial in range(12):
        nd = int(rng.integers(2, 8))
        nm = int(rng.integers(1, 15))
        model = random_dem(rng, nd, nm, with_coords=trial % 2 == 0)
        state = compress_dem(model, chi_compress=None)
        ref_all = dem_all_class_probs(model)
        for bits in itertools.product((0, 1), repeat=nd):
            m = np.array(bits, np.uint8)
            vals = np.array(
                [v.value for v in state.decoding_network(m).class_values()])
            ref = ref_all[syndrome_index(bits)]
            assert np.allclose(vals, ref, rtol=1e-8, atol=1e-12), (trial, bits)


def test_snaking_order_independent_at_unlimited_chi():
    rng = np.random.default_rng(21)
    model = random_dem(rng, 6, 10, with_coords=True)
    s1 = compress_dem(model, None)
    merged = merge_mechanisms(model)
    dims, site_of = layout_detectors(merged, None, extra=1)
    s2 = CompressedCubicNetwork(merged, dims, site_of, None, 1e-14)
    for j in rng.permutation(len(merged.mechanisms)):
        s2.snake(merged.mechanisms[j])
    for _ in range(20):
        m = rng.integers(0, 2, 6).astype(np.uint8)
        v1 = [v.value for v in s1.decoding_network(m).class_values()]
        v2 = [v.value for v in s2.decoding_network(m).class_values()]
        assert np.allclose(v1, v2, rtol=1e-9, atol=1e-300)


def test_truncation_and_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(31)
    model = random_dem(rng, 8, 16, with_coords=True)
    state = compress_dem(model, chi_compress=2)
    assert max(state.bond_dims().values(), default=1) <= 2
    path = str(tmp_path / "cache.npz")
    state.save(path)
    back = CompressedCubicNetwork.load(path)
    for _ in range(10):
        m = rng.integers(0, 2, 8).astype(np.uint8)
        v1 = [(v.mantissa, v.log_abs)
              for v in state.decoding_network(m).class_values()]
        v2 = [(v.mantissa, v.log_abs)
              for v in back.decoding_network(m).class_values()]
        assert v1 == v2  # cache round trip is bit-exact


def test_truncate_all_caps_every_bond():
    rng = np.random.default_rng(41)
    model = random_dem(rng, 8, 16, with_coords=True)
    state = compress_dem(model, chi_compress=16)
    state.truncate_all(3)
    assert max(state.bond_dims().values(), default=1) <= 3


def test_empty_dem():
    state = compress_dem(parse_dem(""), None)
    vals = state.decoding_network(np.zeros(0, np.uint8)).class_values()
    assert vals[0].value == pytest.approx(1.0, abs=1e-12)


def test_compressed_network_rejects_non_batch_ports():
    state = compress_dem(parse_dem("error(0.1) D0\n"), None)
    with pytest.raises(ValueError):
        state.decoding_network(np.zeros(1, np.uint8), ports="classes")


def test_rotated_memory_fixture_counts():
    model = parse_dem(open(os.path.join(DATA, "rotated_d3.dem")).read())
    assert model.n_detectors == 24 and model.n_logicals == 1
    assert model.n_mechanisms == 221
    # every mechanism probability is in (0, 1) and touches a detector
    for mech in model.mechanisms:
        assert 0.0 < mech.p < 1.0 and mech.detectors
