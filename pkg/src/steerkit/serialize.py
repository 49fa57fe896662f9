"""JSON schemas for every exchanged object; round trips are entrywise exact.

Complex matrices serialize as {"re": [[...]], "im": [[...]]} row-major.
Assemblage and behavior element lists follow the canonical order: inputs
outer, outcomes inner, both as little-endian multi-indices.
"""
from __future__ import annotations

import json
import math

from .correlations import Assemblage, Behavior, Scenario, Wiring, _index_tuples
from .errors import InputError
from .hermitian import matrix_from_json, matrix_to_json
from .membership import (
    BehaviorReport,
    Decomposition,
    GmsReport,
    ModelReport,
    Strategy,
    WitnessCertificate,
)


def scenario_to_json(sc: Scenario) -> dict:
    return {
        "n_untrusted": sc.n_untrusted,
        "inputs_per_party": list(sc.inputs_per_party),
        "outputs_per_party": list(sc.outputs_per_party),
        "trusted_dim": sc.trusted_dim,
    }


def scenario_from_json(obj: dict) -> Scenario:
    try:
        return Scenario(
            n_untrusted=int(obj["n_untrusted"]),
            inputs_per_party=tuple(obj["inputs_per_party"]),
            outputs_per_party=tuple(obj["outputs_per_party"]),
            trusted_dim=int(obj["trusted_dim"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad scenario payload: {exc}") from exc


def assemblage_to_json(asm: Assemblage, provenance: str | None = None) -> dict:
    out = {
        "type": "assemblage",
        "scenario": scenario_to_json(asm.scenario),
        "elements": [
            {"a": list(a), "x": list(x), "op": matrix_to_json(asm.elements[(a, x)])}
            for (a, x) in asm.scenario.element_keys()
        ],
    }
    if provenance:
        out["provenance"] = provenance
    return out


def behavior_to_json(beh: Behavior, provenance: str | None = None) -> dict:
    out = {
        "type": "behavior",
        "scenario": scenario_to_json(beh.scenario),
        "elements": [
            {"a": list(a), "x": list(x), "p": beh.elements[(a, x)]}
            for (a, x) in beh.scenario.element_keys()
        ],
    }
    if provenance:
        out["provenance"] = provenance
    return out


def _elements_from_json(obj: dict, value_key: str):
    try:
        return {
            (tuple(e["a"]), tuple(e["x"])): e[value_key] for e in obj["elements"]
        }
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad element list: {exc}") from exc


def assemblage_from_json(obj: dict) -> Assemblage:
    sc = scenario_from_json(obj.get("scenario", {}))
    raw = _elements_from_json(obj, "op")
    return Assemblage(sc, {k: matrix_from_json(v) for k, v in raw.items()})


def behavior_from_json(obj: dict) -> Behavior:
    sc = scenario_from_json(obj.get("scenario", {}))
    return Behavior(sc, _elements_from_json(obj, "p"))


def witness_to_json(wit: WitnessCertificate) -> dict:
    return {
        "type": "witness",
        "scenario": scenario_to_json(wit.scenario),
        "class": wit.class_tag,
        "convention": wit.convention,
        "bound": wit.bound,
        "lower_bound": wit.lower_bound,
        "value_on_target": wit.value_on_target,
        "blocks": [
            {"a": list(a), "x": list(x), "op": matrix_to_json(op)}
            for (a, x), op in sorted(wit.blocks.items())
        ],
    }


def witness_from_json(obj: dict) -> WitnessCertificate:
    sc = scenario_from_json(obj.get("scenario", {}))
    try:
        blocks = {
            (tuple(e["a"]), tuple(e["x"])): matrix_from_json(e["op"]) for e in obj["blocks"]
        }
        return WitnessCertificate(
            scenario=sc,
            class_tag=obj["class"],
            blocks=blocks,
            bound=float(obj["bound"]),
            lower_bound=None if obj.get("lower_bound") is None else float(obj["lower_bound"]),
            value_on_target=float(obj["value_on_target"]),
            convention=obj["convention"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad witness payload: {exc}") from exc


def strategy_to_json(strat: Strategy) -> dict:
    return {
        "label": strat.label,
        "table": [
            {"a": list(a), "x": list(x), "p": p} for (a, x), p in sorted(strat.table.items())
        ],
    }


def decomposition_to_json(dec: Decomposition) -> dict:
    return {
        "weights": [float(w) for w in dec.weights],
        "strategies": [strategy_to_json(s) for s in dec.strategies],
        "states": [matrix_to_json(s) for s in dec.states],
    }


def model_report_to_json(rep: ModelReport) -> dict:
    out = {
        "type": "model-report",
        "class": rep.class_tag,
        "feasible": rep.feasible,
        "gap": _num(rep.gap),
        "certificate_verified": rep.certificate_verified,
        "recomposition_error": _num(rep.recomposition_error),
        "decomposition": decomposition_to_json(rep.decomposition) if rep.decomposition else None,
        "witness": witness_to_json(rep.witness) if rep.witness else None,
    }
    if rep.sub_reports:
        out["sub_reports"] = {k: model_report_to_json(v) for k, v in rep.sub_reports.items()}
    return out


def gms_report_to_json(rep: GmsReport) -> dict:
    out = {
        "type": "gms-report",
        "member": rep.member,
        "gap": _num(rep.gap),
        "certificate_verified": rep.certificate_verified,
        "recomposition_error": _num(rep.recomposition_error),
    }
    if rep.farkas_blocks is not None:
        out["farkas_blocks"] = [
            {"a": list(a), "x": list(x), "op": matrix_to_json(op)}
            for (a, x), op in sorted(rep.farkas_blocks.items())
        ]
    return out


def behavior_report_to_json(rep: BehaviorReport) -> dict:
    out = {
        "type": "behavior-report",
        "class": rep.class_tag,
        "feasible": rep.feasible,
        "gap": _num(rep.gap),
        "certificate_verified": rep.certificate_verified,
    }
    if rep.functional is not None:
        out["functional"] = [
            {"a": list(a), "x": list(x), "value": v} for (a, x), v in sorted(rep.functional.items())
        ]
    return out


def wiring_to_json(w: Wiring) -> dict:
    input_maps = []
    fired: list[int] = []
    for party in w.ordering:
        cards = tuple(w.source_outputs[p] for p in fired)
        rows = []
        for xf in _index_tuples(w.final_inputs):
            rows.append([w.input_maps[party][(xf, eo)] for eo in _index_tuples(cards)])
        input_maps.append({"party": party, "table": rows})
        fired.append(party)
    return {
        "type": "wiring",
        "n_parties": w.n_parties,
        "ordering": list(w.ordering),
        "source_inputs": list(w.source_inputs),
        "source_outputs": list(w.source_outputs),
        "final_inputs": list(w.final_inputs),
        "final_outputs": list(w.final_outputs),
        "input_maps": input_maps,
        "output_map": [list(w.output_map[a]) for a in _index_tuples(w.source_outputs)],
    }


def wiring_from_json(obj: dict) -> Wiring:
    try:
        n = int(obj["n_parties"])
        ordering = tuple(obj["ordering"])
        src_in = tuple(obj["source_inputs"])
        src_out = tuple(obj["source_outputs"])
        fin_in = tuple(obj["final_inputs"])
        fin_out = tuple(obj["final_outputs"])
        maps: list[dict] = [None] * n
        fired: list[int] = []
        for entry in obj["input_maps"]:
            party = int(entry["party"])
            cards = tuple(src_out[p] for p in fired)
            table = {}
            for i, xf in enumerate(_index_tuples(fin_in)):
                for j, eo in enumerate(_index_tuples(cards)):
                    table[(xf, eo)] = int(entry["table"][i][j])
            maps[party] = table
            fired.append(party)
        output_map = {
            a: tuple(obj["output_map"][i]) for i, a in enumerate(_index_tuples(src_out))
        }
        return Wiring(n, ordering, maps, output_map, fin_in, fin_out, src_in, src_out)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"bad wiring payload: {exc}") from exc


def _num(v: float):
    return None if (v is None or (isinstance(v, float) and math.isnan(v))) else float(v)


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}") from exc


def load_object(path: str):
    obj = load_json(path)
    if not isinstance(obj, dict) or "type" not in obj:
        raise InputError(f"{path}: missing object type tag")
    kind = obj["type"]
    if kind == "assemblage":
        return assemblage_from_json(obj)
    if kind == "behavior":
        return behavior_from_json(obj)
    if kind == "witness":
        return witness_from_json(obj)
    if kind == "wiring":
        return wiring_from_json(obj)
    raise InputError(f"{path}: unsupported object type {kind!r}")


def dump_json(obj: dict, path: str):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
