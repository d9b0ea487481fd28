"""Availability, cost components, constraint, and objective.

The objective combines two normalized components: an application cost
(carriers inside the enabled area) weighted by ``k``, and a transmission
cost (contact opportunities consumed on enabled links). Each component is
normalized by its value under the all-ON configuration on the same feature
table, so the all-ON objective is exactly ``k + 1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .engine import AzConfig
from .errors import ValidationError
from .features import CommFeatures, LinkFeatures


@dataclass(frozen=True)
class CostWeights:
    k: float = 1.0
    s_des: float = 0.9

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("k must be >= 0")
        if not (0 <= self.s_des <= 1):
            raise ValidationError("s_des must be in [0, 1]")


@dataclass(frozen=True)
class CostReport:
    c_app: float
    c_loss: float
    c_app_norm: float
    c_loss_norm: float
    total: float
    constraint_met: bool
    availability_zoi: dict    # zoi link id -> availability

    def to_dict(self) -> dict:
        return {
            "c_app": self.c_app,
            "c_loss": self.c_loss,
            "c_app_norm": self.c_app_norm,
            "c_loss_norm": self.c_loss_norm,
            "total": self.total,
            "constraint_met": self.constraint_met,
            "availability_zoi": {str(k): v for k, v in sorted(self.availability_zoi.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def availability(v_c: float, v_nc: float) -> float:
    """Fraction of vehicles carrying the content; 0 on an empty link."""
    if v_c < 0 or v_nc < 0:
        raise ValidationError("vehicle counts must be >= 0")
    total = v_c + v_nc
    return v_c / total if total > 0 else 0.0


def _check_dims(az: AzConfig, features: LinkFeatures):
    if len(az) != features.n:
        raise ValidationError("az and features have different link dimension")


def loss_terms(features: LinkFeatures) -> np.ndarray:
    """Per-link transmission cost: lambda * (V_c + V_nc) * Tx / t_lambda.

    A link with no contacts spends no transmission resource, so its term is
    zero rather than a division error.
    """
    lam, t_lam = features.lam, features.t_lam
    if np.any((t_lam == 0) & (lam > 0)):
        raise ValidationError("corrupt features: lambda > 0 with t_lambda == 0")
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(lam > 0, lam * features.total * features.tx / t_lam, 0.0)
    return terms


def cost_loss(az: AzConfig, features: LinkFeatures) -> float:
    _check_dims(az, features)
    # masked full-length sum: identical summation tree for any mask, so
    # subset monotonicity holds exactly in floating point
    return float(np.where(az.as_array(), loss_terms(features), 0.0).sum())


def cost_app(az: AzConfig, features: LinkFeatures) -> float:
    """Carriers in the enabled area: sum of availability * total = sum of V_c."""
    _check_dims(az, features)
    with np.errstate(invalid="ignore", divide="ignore"):
        avail = np.where(features.total > 0, features.v_c / features.total, 0.0)
    return float(np.where(az.as_array(), avail * features.total, 0.0).sum())


def objective(az: AzConfig, features: LinkFeatures, weights: CostWeights) -> float:
    """k * normalized application cost + normalized transmission cost."""
    _check_dims(az, features)
    app = cost_app(az, features)
    loss = cost_loss(az, features)
    app_ref = cost_app(AzConfig.all_on(features.n), features)
    loss_ref = cost_loss(AzConfig.all_on(features.n), features)
    app_norm = app / app_ref if app_ref > 0 else 0.0
    loss_norm = loss / loss_ref if loss_ref > 0 else 0.0
    return weights.k * app_norm + loss_norm


def constraint_met(p_com: CommFeatures, zoi, s_des: float) -> bool:
    """True iff availability reaches ``s_des`` on every zoi link."""
    zoi = sorted(zoi)
    if not zoi:
        raise ValidationError("zoi must not be empty")
    return bool(all(p_com.availability[j] >= s_des for j in zoi))


def cost_congestion(features: LinkFeatures, congested) -> float:
    """Stalled-traffic cost over the congested set: total / (mean speed + 1)."""
    congested = sorted(set(int(c) for c in congested))
    if any(not 0 <= c < features.n for c in congested):
        raise ValidationError("congested ids must be valid links")
    if not congested:
        return 0.0
    idx = np.array(congested)
    return float((features.total[idx] / (features.nu[idx] + 1.0)).sum())


def build_report(
    az: AzConfig, features: LinkFeatures, zoi, weights: CostWeights
) -> CostReport:
    c_app = cost_app(az, features)
    c_loss = cost_loss(az, features)
    all_on = AzConfig.all_on(features.n)
    app_ref = cost_app(all_on, features)
    loss_ref = cost_loss(all_on, features)
    app_norm = c_app / app_ref if app_ref > 0 else 0.0
    loss_norm = c_loss / loss_ref if loss_ref > 0 else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        avail = np.where(features.total > 0, features.v_c / features.total, 0.0)
    p_com = CommFeatures(v_c=features.v_c, availability=avail)
    return CostReport(
        c_app=c_app,
        c_loss=c_loss,
        c_app_norm=app_norm,
        c_loss_norm=loss_norm,
        total=weights.k * app_norm + loss_norm,
        constraint_met=constraint_met(p_com, zoi, weights.s_des) if zoi else False,
        availability_zoi={int(j): float(avail[j]) for j in sorted(zoi)},
    )
