"""Refinement traces: an ordered event log that can rebuild the mesh.

On disk a trace is JSON lines, one event per line, every object carrying the
schema version ``"v": 1`` and an ``"event"`` name. Event kinds:

``RunStarted``        d, problem, labeling, tau, config
``StepStarted``       step (all alive edge ages grow by 2 when replayed)
``EdgeBisected``      step, edge, endpoints, vertex, position, cells
``VertexEvaluated``   id, position, image, lam_x, lam_fx, labels
``VertexRelabeled``   id, image, lam_fx, labels (after a rescale)
``AgeCountChanged``   value
``SpernerSet``        step, cells
``Candidate``         rank, cell, point, residual, diameter, barycenter, tags
``RunFinished``       steps, evaluations, reason
"""
import json

import numpy as np

from .mesh import Mesh, mask_to_set, set_to_mask

SCHEMA_VERSION = 1


class TraceError(ValueError):
    pass


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (set, frozenset)):
        return sorted(int(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


class SolveTrace:
    def __init__(self, events=None):
        self.events = list(events or [])

    def add(self, event, **fields):
        record = {"v": SCHEMA_VERSION, "event": event}
        record.update({k: _plain(v) for k, v in fields.items()})
        self.events.append(record)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, event):
        return [e for e in self.events if e["event"] == event]

    # ------------------------------------------------------------------ io
    def dumps(self):
        return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in self.events)

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        events = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                e = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {n}: not JSON ({exc})") from exc
            if e.get("v") != SCHEMA_VERSION or "event" not in e:
                raise TraceError(f"line {n}: unsupported trace record {e!r}")
            events.append(e)
        return cls(events)

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())

    # -------------------------------------------------------------- replay
    @property
    def dimension(self):
        head = self.of_kind("RunStarted")
        if not head:
            raise TraceError("trace has no RunStarted record")
        return int(head[0]["d"])

    def steps(self):
        """Step numbers present in the trace (0 is the initial state)."""
        return [0] + [e["step"] for e in self.of_kind("StepStarted")]

    def replay(self, upto_step=None):
        """Rebuild the mesh, optionally stopping before step ``upto_step + 1``."""
        mesh = Mesh(self.dimension)
        for e in self.events:
            kind = e["event"]
            if kind == "StepStarted":
                if upto_step is not None and e["step"] > upto_step:
                    break
                mesh.increment_ages()
            elif kind == "EdgeBisected":
                v, _ = mesh.bisect_edge(e["edge"])
                if v != e["vertex"]:
                    raise TraceError(f"replay produced vertex {v}, trace says {e['vertex']}")
            elif kind in ("VertexEvaluated", "VertexRelabeled"):
                v = e["id"]
                if kind == "VertexEvaluated":
                    mesh.lam_x[v] = np.asarray(e["lam_x"])
                mesh.images[v] = np.asarray(e["image"])
                mesh.lam_fx[v] = np.asarray(e["lam_fx"])
                mesh.label_masks[v] = set_to_mask(e["labels"])
                mesh.sperner_cache.clear()
            elif kind == "AgeCountChanged":
                mesh.age_count = e["value"]
        return mesh

    def sperner_sets(self):
        return {e["step"]: e["cells"] for e in self.of_kind("SpernerSet")}


def vertex_labels(mesh, v):
    m = mesh.label_masks[v]
    return sorted(mask_to_set(m)) if m >= 0 else []
