"""Score files, network JSON and DOT export.

Score file layout (GOBNILP-style with a representation column)::

    <number of variables>
    <name> <entry count>
    <score> <T|N> <k> <parent names...> [| q1 ... qk]

T marks a full CPT and N a noisy-OR, whose fitted parameters follow ``|``.
Numbers use ``%.6f``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .core import (
    Cpt,
    CredibleSet,
    Dataset,
    LocalScore,
    Network,
    NoisyOrParams,
    ParseError,
    Rep,
    Representation,
    ScoreTable,
)
from .cpt_scoring import mle_cpt
from .data import counts

REP_NAMES = {Rep.FULL_CPT: "table", Rep.NOISY_OR: "noisy-or"}
REP_FROM_NAME = {v: k for k, v in REP_NAMES.items()}


def format_score_table(table: ScoreTable) -> str:
    lines = [str(table.n)]
    for v, entries in enumerate(table.entries):
        lines.append(f"{table.names[v]} {len(entries)}")
        # order by the printed score so a parsed file re-serialises byte for byte
        entries = sorted(entries, key=lambda e: (float(f"{e.score:.6f}"), len(e.parents), e.parents, e.rep.value))
        for e in entries:
            parts = [f"{e.score:.6f}", e.rep.value, str(len(e.parents))]
            parts += [table.names[p] for p in e.parents]
            if e.rep is Rep.NOISY_OR:
                parts.append("|")
                parts += [f"{q:.6f}" for q in e.representation.params.q]
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_score_table(table: ScoreTable, path) -> None:
    Path(path).write_text(format_score_table(table), encoding="utf-8")


def parse_score_table(text: str) -> ScoreTable:
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("score file ended early")
        item = lines[pos]
        pos += 1
        return item

    lineno, head = take()
    try:
        n = int(head[0])
    except (ValueError, IndexError):
        raise ParseError(f"line {lineno}: expected the number of variables") from None
    blocks = []
    for _ in range(n):
        lineno, toks = take()
        if len(toks) != 2:
            raise ParseError(f"line {lineno}: expected '<name> <entry count>'")
        try:
            blocks.append((toks[0], int(toks[1]), [take() for _ in range(int(toks[1]))]))
        except ValueError:
            raise ParseError(f"line {lineno}: bad entry count {toks[1]!r}") from None
    if pos != len(lines):
        raise ParseError(f"line {lines[pos][0]}: unexpected trailing content")

    names = tuple(b[0] for b in blocks)
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable name in score file")
    index = {name: i for i, name in enumerate(names)}
    entries = []
    for v, (_, _, rows) in enumerate(blocks):
        node_entries = []
        for lineno, toks in rows:
            try:
                score = float(toks[0])
                rep = Rep(toks[1])
                k = int(toks[2])
                parents = tuple(index[p] for p in toks[3 : 3 + k])
                rest = toks[3 + k :]
                if len(parents) != k:
                    raise ValueError("too few parent names")
                if rep is Rep.NOISY_OR:
                    if not rest or rest[0] != "|" or len(rest) != k + 1:
                        raise ValueError("noisy-OR line needs '| q1 ... qk'")
                    representation = Representation(rep, NoisyOrParams(tuple(float(x) for x in rest[1:])))
                else:
                    if rest:
                        raise ValueError("unexpected tokens after parents")
                    representation = Representation(rep)
                node_entries.append(LocalScore(v, parents, representation, score))
            except (ValueError, KeyError, IndexError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
        entries.append(tuple(node_entries))
    try:
        return ScoreTable(names, tuple(entries))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_score_table(path) -> ScoreTable:
    return parse_score_table(Path(path).read_text(encoding="utf-8"))


def attach_parameters(network: Network, dataset: Dataset) -> Network:
    """Fill missing full-CPT parameters with maximum-likelihood estimates."""
    if tuple(dataset.names) != tuple(network.names):
        raise ValueError("dataset variables do not match the network")
    nodes = []
    for e in network.nodes:
        if e.rep is Rep.FULL_CPT and e.representation.params is None:
            cpt = mle_cpt(counts(dataset, e.child, e.parents))
            e = LocalScore(e.child, e.parents, Representation(Rep.FULL_CPT, cpt), e.score)
        nodes.append(e)
    return Network(network.names, tuple(nodes))


def network_to_dict(network: Network) -> dict:
    nodes = {}
    for e in network.nodes:
        params = e.representation.params
        if isinstance(params, NoisyOrParams):
            pdict = {"q": list(params.q)}
        elif isinstance(params, Cpt):
            pdict = {"cpt": [list(r) for r in params.rows]}
        else:
            pdict = None
        nodes[network.names[e.child]] = {
            "parents": [network.names[p] for p in e.parents],
            "rep": REP_NAMES[e.rep],
            "score": e.score,
            "params": pdict,
        }
    return {"variables": list(network.names), "totalScore": network.score, "nodes": nodes}


def network_from_dict(d: dict) -> Network:
    try:
        names = tuple(d["variables"])
        index = {name: i for i, name in enumerate(names)}
        entries = []
        for name, spec in d["nodes"].items():
            rep = REP_FROM_NAME[spec["rep"]]
            params = spec.get("params")
            if params is None:
                p = None
            elif rep is Rep.NOISY_OR:
                p = NoisyOrParams(tuple(params["q"]))
            else:
                p = Cpt(tuple(tuple(r) for r in params["cpt"]))
            entries.append(
                LocalScore(
                    index[name],
                    tuple(index[x] for x in spec["parents"]),
                    Representation(rep, p),
                    float(spec.get("score", 0.0)),
                )
            )
        return Network(names, tuple(entries))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid network description: {exc}") from None


def read_network(path) -> Network:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if "networks" in d:  # credible-set file: take the best network
        d = d["networks"][0]
    return network_from_dict(d)


def write_network(network: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(network), indent=2) + "\n", encoding="utf-8")


def credible_set_to_dict(cs: CredibleSet) -> dict:
    names = list(cs.networks[0].names) if cs.networks else []
    return {
        "epsilon": cs.epsilon,
        "opt": cs.opt,
        "count": len(cs.networks),
        "truncated": cs.truncated,
        "variables": names,
        "networks": [network_to_dict(net) for net in cs.networks],
    }


def network_to_dot(network: Network, label: Optional[str] = None) -> str:
    """Graphviz digraph; noisy-OR nodes are drawn as filled double circles."""
    lines = ["digraph G {"]
    if label:
        lines.append(f'  label="{label}";')
    for e in network.nodes:
        name = network.names[e.child]
        if e.rep is Rep.NOISY_OR:
            lines.append(f'  "{name}" [shape=doublecircle, style=filled, fillcolor=lightgrey, xlabel="noisy-OR"];')
        else:
            lines.append(f'  "{name}" [shape=circle];')
    for e in network.nodes:
        for p in e.parents:
            lines.append(f'  "{network.names[p]}" -> "{network.names[e.child]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
