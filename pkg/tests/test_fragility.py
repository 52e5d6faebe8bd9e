import numpy as np
import pytest

from gridrestore.fragility import (
    FragilityCurve,
    FragilityError,
    PfAssignment,
    assign_pf,
    load_curves,
    load_exposure,
    pf_from_doc,
    pf_from_pga,
)
from gridrestore.network import load_network

from conftest import fixture_text

CURVE = FragilityCurve("overhead-line", ((0.1, 0.0), (0.3, 0.2), (0.5, 0.5), (0.9, 0.9)))


def test_interpolation_matches_numpy():
    xs = [p for p, _ in CURVE.points]
    ys = [q for _, q in CURVE.points]
    for pga in np.linspace(0.0, 1.2, 61):
        assert pf_from_pga(CURVE, float(pga)) == pytest.approx(
            float(np.interp(pga, xs, ys)), abs=1e-12
        )


def test_interpolation_clamps():
    assert pf_from_pga(CURVE, 0.0) == 0.0
    assert pf_from_pga(CURVE, 5.0) == 0.9


def test_midpoint_value():
    assert pf_from_pga(CURVE, 0.4) == pytest.approx(0.35)


def test_negative_pga_rejected():
    with pytest.raises(FragilityError, match="non-negative"):
        pf_from_pga(CURVE, -0.1)


def test_curve_validation():
    with pytest.raises(FragilityError, match="strictly increasing"):
        FragilityCurve("bad", ((0.3, 0.1), (0.3, 0.2)))
    with pytest.raises(FragilityError, match="non-decreasing"):
        FragilityCurve("bad", ((0.1, 0.5), (0.2, 0.1)))
    with pytest.raises(FragilityError, match="outside"):
        FragilityCurve("bad", ((0.1, 1.5),))
    with pytest.raises(FragilityError, match="empty"):
        FragilityCurve("bad", ())


def test_assignment_validation():
    with pytest.raises(FragilityError, match="outside"):
        PfAssignment({1: 1.2})


def test_uniform(feeder6):
    pf = PfAssignment.uniform(feeder6, 0.4)
    assert all(pf[i] == 0.4 for i in range(1, 6))


def test_assign_pf_mixed(feeder6):
    curves = load_curves(fixture_text("fragility.json"))
    exposure = load_exposure(fixture_text("exposure_feeder6_mixed.json"))
    pf = assign_pf(feeder6, curves, exposure)
    assert pf[1] == pytest.approx(0.2)  # overhead-line at pga 0.3
    assert pf[2] == pytest.approx(0.35)  # midpoint of the 0.3-0.5 segment
    assert pf[3] == pytest.approx(0.1)  # underground-cable at pga 0.6
    assert pf[4] == 0.25  # direct override
    assert pf[5] == 0.0  # below the tabulated range


def test_assign_pf_missing_exposure(feeder6):
    curves = load_curves(fixture_text("fragility.json"))
    with pytest.raises(FragilityError, match="missing exposure"):
        assign_pf(feeder6, curves, {1: {"pf_override": 0.5}})


def test_assign_pf_unknown_class(feeder6):
    curves = load_curves(fixture_text("fragility.json"))
    exposure = {i: {"asset_class": "nope", "pga": 0.5, "pf_override": None} for i in range(1, 6)}
    with pytest.raises(FragilityError, match="unknown asset class"):
        assign_pf(feeder6, curves, exposure)


def test_pf_from_doc_shapes(feeder6):
    uniform = pf_from_doc(feeder6, {"uniform": 0.3})
    assert uniform[4] == 0.3
    overrides = pf_from_doc(feeder6, {"overrides": {str(i): 0.1 * i for i in range(1, 6)}})
    assert overrides[5] == pytest.approx(0.5)
    curves_doc = {
        "curves": [{"asset_class": "x", "points": [[0.1, 0.2], [0.9, 0.8]]}],
        "exposure": [{"branch": i, "asset_class": "x", "pga": 0.5} for i in range(1, 6)],
    }
    assert pf_from_doc(feeder6, curves_doc)[1] == pytest.approx(0.5)
    with pytest.raises(FragilityError, match="overrides missing"):
        pf_from_doc(feeder6, {"overrides": {"1": 0.5}})
    with pytest.raises(FragilityError, match="pf document"):
        pf_from_doc(feeder6, {})


def test_loaders_reject_missing_sections():
    with pytest.raises(FragilityError, match="curves"):
        load_curves("{}")
    with pytest.raises(FragilityError, match="exposure"):
        load_exposure("{}")


def test_voltage_feeder_fixture_loads():
    net = load_network(fixture_text("voltage_feeder.json"))
    assert pf_from_doc(net, {"uniform": 0.0})[1] == 0.0
