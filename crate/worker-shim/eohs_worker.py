#!/usr/bin/env python3
"""Heuristic worker for the eohs host.

Reads one JSON request per line on stdin and writes one JSON response per
line on stdout. Generated code is executed with ``exec`` in a fresh
namespace per load; there is no sandboxing beyond the host's timeout.

Usage: python3 eohs_worker.py [--protocol 1]
"""

import ast
import json
import math
import sys

import numpy as np

CAPACITY_EPS = 1e-9
FUNCTION = {"obp": "priority", "tsp": "select_next_node", "cvrp": "select_next_node"}


class HeuristicError(Exception):
    pass


def load(code):
    tree = ast.parse(code)
    for node in tree.body:
        ok = isinstance(node, (ast.Import, ast.ImportFrom, ast.FunctionDef))
        ok = ok or (isinstance(node, ast.Expr) and isinstance(node.value, ast.Constant))
        ok = ok or isinstance(node, ast.Assign)
        if not ok:
            raise HeuristicError("stray top-level code: " + type(node).__name__)
    names = [n.name for n in tree.body if isinstance(n, ast.FunctionDef)]
    if names.count("priority") + names.count("select_next_node") != 1:
        raise HeuristicError("code must define exactly one heuristic function")
    namespace = {"np": np, "numpy": np, "math": math}
    exec(compile(tree, "<heuristic>", "exec"), namespace)
    return namespace


def distance_matrix(coords):
    pts = np.asarray(coords, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def as_node(value):
    v = float(np.asarray(value).reshape(-1)[0]) if np.size(value) == 1 else None
    if v is None or not math.isfinite(v) or v != int(v):
        raise HeuristicError("returned node {!r} is not an integer".format(value))
    return int(v)


def eval_obp(fn, payload):
    capacity = float(payload["capacity"])
    eps = CAPACITY_EPS * capacity
    remaining = []
    trace = []
    decisions = 0
    for item in payload["items"]:
        item = float(item)
        idx = [b for b, r in enumerate(remaining) if r + eps >= item]
        if not idx:
            remaining.append(capacity)
            bin_ = len(remaining) - 1
        else:
            decisions += 1
            caps = np.array([remaining[b] for b in idx], dtype=float)
            pr = np.asarray(fn(item, caps), dtype=float)
            if pr.ndim == 0:
                pr = np.full(len(idx), float(pr))
            if pr.shape != (len(idx),):
                raise HeuristicError("priority vector has shape {}, expected ({},)".format(pr.shape, len(idx)))
            if not np.all(np.isfinite(pr)):
                raise HeuristicError("non-finite priority")
            best = 0
            for k in range(len(idx)):
                if pr[k] > pr[best]:
                    best = k
            bin_ = idx[best]
        remaining[bin_] -= item
        trace.append(bin_)
    return float(len(remaining)), trace, decisions, 0


def eval_tsp(fn, payload):
    dist = distance_matrix(payload["coords"])
    n = len(dist)
    unvisited = list(range(1, n))
    trace = [0]
    current = 0
    decisions = 0
    while unvisited:
        decisions += 1
        node = as_node(fn(current, 0, np.array(unvisited, dtype=int), dist))
        if node not in unvisited:
            raise HeuristicError("node {} is not unvisited".format(node))
        unvisited.remove(node)
        trace.append(node)
        current = node
    raw = sum(dist[a, b] for a, b in zip(trace, trace[1:])) + dist[trace[-1], trace[0]]
    return float(raw), trace, decisions, 0


def eval_cvrp(fn, payload):
    dist = distance_matrix(payload["coords"])
    demands = np.asarray(payload["demands"], dtype=float)
    capacity = float(payload["capacity"])
    depot = int(payload.get("depot", 0))
    eps = CAPACITY_EPS * capacity
    n = len(dist)
    unvisited = [i for i in range(n) if i != depot]
    trace = [depot]
    current, rest, decisions, detours = depot, capacity, 0, 0
    while unvisited:
        decisions += 1
        node = as_node(fn(current, depot, np.array(unvisited, dtype=int), rest, demands, dist))
        if node < 0 or node == depot:
            if current == depot:
                raise HeuristicError("returned to the depot without serving anyone")
            trace.append(depot)
            current, rest = depot, capacity
            continue
        if node not in unvisited:
            raise HeuristicError("node {} is not unvisited".format(node))
        if demands[node] > rest + eps:
            trace.append(depot)
            rest = capacity
            detours += 1
        unvisited.remove(node)
        rest -= demands[node]
        trace.append(node)
        current = node
    if current != depot:
        trace.append(depot)
    raw = sum(dist[a, b] for a, b in zip(trace, trace[1:]))
    return float(raw), trace, decisions, detours


ROLLOUTS = {"obp": eval_obp, "tsp": eval_tsp, "cvrp": eval_cvrp}


def handle(state, line):
    try:
        req = json.loads(line)
    except ValueError:
        return {"id": None, "ok": False, "error": "bad-frame"}
    if not isinstance(req, dict) or not isinstance(req.get("id"), int):
        return {"id": None, "ok": False, "error": "bad-frame"}
    rid = req["id"]
    op = req.get("op")
    if op == "ping":
        return {"id": rid, "ok": True}
    if op == "load":
        if not isinstance(req.get("code"), str):
            return {"id": rid, "ok": False, "error": "bad-frame"}
        state.clear()
        try:
            state["ns"] = load(req["code"])
        except Exception as e:  # noqa: BLE001 - reported to the host
            return {"id": rid, "ok": False, "error": "{}: {}".format(type(e).__name__, e)}
        return {"id": rid, "ok": True}
    if op == "eval":
        task = req.get("task")
        if task not in ROLLOUTS or not isinstance(req.get("payload"), dict):
            return {"id": rid, "ok": False, "error": "bad-frame"}
        if "ns" not in state:
            return {"id": rid, "ok": False, "error": "no-heuristic"}
        fn = state["ns"].get(FUNCTION[task])
        if not callable(fn):
            return {"id": rid, "ok": False, "error": "no `{}` function".format(FUNCTION[task])}
        try:
            raw, trace, decisions, detours = ROLLOUTS[task](fn, req["payload"])
        except Exception as e:  # noqa: BLE001 - reported to the host
            return {"id": rid, "ok": False, "error": "{}: {}".format(type(e).__name__, e)}
        return {"id": rid, "ok": True, "raw": raw, "trace": trace, "decisions": decisions, "detours": detours}
    return {"id": rid, "ok": False, "error": "unknown op {!r}".format(op)}


def main():
    state = {}
    for line in sys.stdin:
        if not line.strip():
            continue
        resp = handle(state, line)
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    np.seterr(all="ignore")
    main()
