"""Seismic fragility curves and per-branch failure probabilities.

A fragility curve tabulates PGA (g) against probability of failure for an
asset class. Recorded PGA at each branch's structure is interpolated to a
failure probability; experiments that specify probabilities directly use
per-branch overrides instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .network import Network


class FragilityError(Exception):
    pass


@dataclass(frozen=True)
class FragilityCurve:
    asset_class: str
    points: tuple[tuple[float, float], ...]  # (pga, pf), pga strictly increasing

    def __post_init__(self):
        if not self.points:
            raise FragilityError(f"curve {self.asset_class!r}: empty curve")
        prev_pga, prev_pf = None, None
        for pga, pf in self.points:
            if not 0.0 <= pf <= 1.0:
                raise FragilityError(f"curve {self.asset_class!r}: pf {pf} outside [0,1]")
            if prev_pga is not None:
                if pga <= prev_pga:
                    raise FragilityError(
                        f"curve {self.asset_class!r}: pga values must be strictly increasing"
                    )
                if pf < prev_pf:
                    raise FragilityError(
                        f"curve {self.asset_class!r}: pf values must be non-decreasing"
                    )
            prev_pga, prev_pf = pga, pf


@dataclass(frozen=True)
class PfAssignment:
    """Failure probability for every branch id 1..L."""

    pf: dict[int, float]

    def __post_init__(self):
        for i, p in self.pf.items():
            if not 0.0 <= p <= 1.0:
                raise FragilityError(f"branch {i}: pf {p} outside [0,1]")

    def __getitem__(self, branch_id: int) -> float:
        return self.pf[branch_id]

    @classmethod
    def uniform(cls, net: Network, p: float) -> "PfAssignment":
        return cls({br.id: p for br in net.branches})


def pf_from_pga(curve: FragilityCurve, pga: float) -> float:
    """Piecewise-linear interpolation, clamped to the tabulated range."""
    if pga < 0:
        raise FragilityError("pga must be non-negative")
    pts = curve.points
    if pga <= pts[0][0]:
        return pts[0][1]
    if pga >= pts[-1][0]:
        return pts[-1][1]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 <= pga <= x1:
            return y0 + (y1 - y0) * (pga - x0) / (x1 - x0)
    raise AssertionError("unreachable")  # pragma: no cover


def assign_pf(
    net: Network,
    curves: dict[str, FragilityCurve],
    exposure: dict[int, dict],
) -> PfAssignment:
    """Map each branch's exposure record to a failure probability.

    An exposure record is either {"pf_override": p} or
    {"asset_class": name, "pga": value}.
    """
    out: dict[int, float] = {}
    for br in net.branches:
        if br.id not in exposure:
            raise FragilityError(f"branch {br.id}: missing exposure")
        rec = exposure[br.id]
        if rec.get("pf_override") is not None:
            out[br.id] = float(rec["pf_override"])
        else:
            cls_name = rec.get("asset_class")
            if cls_name is None or rec.get("pga") is None:
                raise FragilityError(f"branch {br.id}: need asset_class+pga or pf_override")
            if cls_name not in curves:
                raise FragilityError(f"branch {br.id}: unknown asset class {cls_name!r}")
            out[br.id] = pf_from_pga(curves[cls_name], float(rec["pga"]))
    return PfAssignment(out)


def pf_from_doc(net: Network, doc) -> PfAssignment:
    """Build an assignment from a self-contained pf document.

    Accepted shapes: {"uniform": p}, {"overrides": {branch: p}}, or
    {"curves": [...], "exposure": [...]} as in the file formats.
    """
    doc = _read(doc)
    if "uniform" in doc:
        return PfAssignment.uniform(net, float(doc["uniform"]))
    if "overrides" in doc:
        out = {int(k): float(v) for k, v in doc["overrides"].items()}
        missing = {br.id for br in net.branches} - set(out)
        if missing:
            raise FragilityError(f"overrides missing branches {sorted(missing)}")
        return PfAssignment(out)
    if "curves" in doc and "exposure" in doc:
        return assign_pf(net, load_curves(doc), load_exposure(doc))
    raise FragilityError("pf document needs 'uniform', 'overrides', or 'curves'+'exposure'")


def load_curves(source) -> dict[str, FragilityCurve]:
    doc = _read(source)
    if "curves" not in doc:
        raise FragilityError("missing 'curves' key")
    out = {}
    for raw in doc["curves"]:
        curve = FragilityCurve(
            asset_class=raw["asset_class"],
            points=tuple((float(p), float(q)) for p, q in raw["points"]),
        )
        out[curve.asset_class] = curve
    return out


def load_exposure(source) -> dict[int, dict]:
    doc = _read(source)
    if "exposure" not in doc:
        raise FragilityError("missing 'exposure' key")
    out = {}
    for raw in doc["exposure"]:
        out[int(raw["branch"])] = {
            "asset_class": raw.get("asset_class"),
            "pga": raw.get("pga"),
            "pf_override": raw.get("pf_override"),
        }
    return out


def _read(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, bytes):
        return json.loads(source.decode("utf-8"))
    if isinstance(source, str):
        return json.loads(source)
    data = source.read()
    return json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
