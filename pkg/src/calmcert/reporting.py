"""Report serialization: deterministic JSON and CSV artifacts."""

import io
import json

from .empirics import KappaEstimate
from .linalg import Tolerances
from .model import instance_hash


def provenance(instance, seed):
    from . import __version__
    return {"instance_hash": instance_hash(instance),
            "seed": int(seed),
            "tolerances": {"rank": instance.tol.rank,
                           "orth": instance.tol.orth,
                           "member": instance.tol.member,
                           "kkt": instance.tol.kkt},
            "version": __version__}


def report_document(kind, payload, instance=None, seed=0):
    doc = {"kind": kind, "payload": payload}
    if instance is not None:
        doc["provenance"] = provenance(instance, seed)
    return doc


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list):
        rows.append([prefix, json.dumps(obj)])
    else:
        rows.append([prefix, obj if obj is not None else ""])
    return rows


def _csv_text(rows):
    buf = io.StringIO()
    for row in rows:
        buf.write(",".join(str(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


def save_report(report, fmt="json", instance=None, seed=0):
    """Serialize a report object to text.

    JSON round-trips losslessly; CSV flattens sweep samples one row per
    perturbation (other reports flatten to key/value rows).
    """
    if isinstance(report, KappaEstimate):
        if fmt == "csv":
            return _csv_text(report.csv_rows())
        doc = report_document("kappa_estimate", report.to_json_dict(),
                              instance, seed)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    payload = report.to_json_dict() if hasattr(report, "to_json_dict") else report
    if fmt == "csv":
        return _csv_text(_flatten("", payload, []))
    kind = type(report).__name__.lower() if hasattr(report, "to_json_dict") else "report"
    doc = report_document(kind, payload, instance, seed)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def tolerances_from_overrides(base, rank=None, member=None, kkt=None):
    return Tolerances(rank=rank if rank is not None else base.rank,
                      orth=base.orth,
                      member=member if member is not None else base.member,
                      kkt=kkt if kkt is not None else base.kkt)
