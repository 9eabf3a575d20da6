"""JSON helpers shared by the CLI and the bounds/tabulation dumps."""

from __future__ import annotations

from decimal import Decimal, localcontext
from fractions import Fraction


def decimal_string(x: Fraction, places: int = 6) -> str:
    """Decimal rendering of a rational, rounded half-even to ``places``."""
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(x.numerator) / Decimal(x.denominator)
        q = d.quantize(Decimal(1).scaleb(-places))
    s = format(q, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def fraction_json(x) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator, "decimal": decimal_string(x)}


def tabulation_json(election, result) -> dict:
    from .orders import order_to_json

    rounds = []
    for rec in result.rounds:
        entry = {
            "round": rec.round,
            "action": rec.action,
            "candidate": rec.candidates[0] if len(rec.candidates) == 1 else list(rec.candidates),
            "tallies": {election.name(c): fraction_json(v) for c, v in rec.tallies.items()},
        }
        if rec.transfer_value is not None:
            entry["transfer_value"] = fraction_json(rec.transfer_value)
        if rec.tied:
            entry["tied"] = list(rec.tied)
        rounds.append(entry)
    return {
        "quota": election.quota,
        "tie_policy": result.tie_policy.value,
        "rounds": rounds,
        "winners": sorted(result.winners),
        "winner_names": [election.name(c) for c in sorted(result.winners)],
        "order": order_to_json(result.order),
        "exhausted": fraction_json(result.exhausted_total),
    }
