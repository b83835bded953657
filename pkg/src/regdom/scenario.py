"""Scenario files: one JSON document drives every command.

Schema (see README for the prose version):

    {
      "dimension": 3,
      "planes": [{"u": [1.0, 0.0], "a": 0.0}, ...],
      "grid": {"box_half_width": 1.0, "delta": 0.02},
      "seed": 0,
      "output_dir": "out",          optional
      "tasks": [{"command": "curvature-verify", "a": 1.0}, ...]   optional
    }

Plane directions are normalized on load, so the echoed scenario carries
exactly the unit vectors the solver uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .domain import NullPlane, RegularDomain, validate
from .errors import UsageError


@dataclass(frozen=True, eq=False)
class Scenario:
    dimension: int
    planes: tuple
    half_width: float
    delta: float
    seed: int
    output_dir: str | None
    tasks: tuple

    def domain(self) -> RegularDomain:
        return validate(self.planes)

    def task_params(self, command: str) -> dict:
        """Parameters of the first task block naming this command."""
        for block in self.tasks:
            if block.get("command") == command:
                return {k: v for k, v in block.items() if k != "command"}
        return {}

    def echo(self) -> dict:
        """Normalized scenario content for bit-exact report embedding."""
        return {
            "dimension": self.dimension,
            "planes": [
                {"u": [float(c) for c in p.u_hat], "a": float(p.a)}
                for p in self.planes
            ],
            "grid": {"box_half_width": self.half_width, "delta": self.delta},
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("scenario must be a JSON object")

    n = doc.get("dimension")
    _require(isinstance(n, int) and not isinstance(n, bool),
             "dimension must be an integer")
    _require(n >= 3, f"dimension must be at least 3, got {n}")

    raw_planes = doc.get("planes")
    _require(isinstance(raw_planes, list) and raw_planes,
             "planes must be a non-empty list")
    planes = []
    for k, entry in enumerate(raw_planes):
        _require(isinstance(entry, dict) and "u" in entry and "a" in entry,
                 f"plane {k} must be an object with keys 'u' and 'a'")
        u = np.asarray(entry["u"], dtype=float)
        _require(u.ndim == 1 and u.size == n - 1,
                 f"plane {k}: u must have {n - 1} components")
        norm = float(np.linalg.norm(u))
        _require(norm > 0.0, f"plane {k}: u must be nonzero")
        planes.append(NullPlane(u_hat=u / norm, a=float(entry["a"])))

    grid = doc.get("grid")
    _require(isinstance(grid, dict), "grid must be an object")
    L = grid.get("box_half_width")
    delta = grid.get("delta")
    _require(isinstance(L, (int, float)) and L > 0,
             "grid.box_half_width must be positive")
    _require(isinstance(delta, (int, float)) and delta > 0,
             "grid.delta must be positive")
    _require(delta <= L / 8.0,
             f"grid.delta must be at most box_half_width/8 = {L / 8.0:g}")

    seed = doc.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool),
             "seed must be an integer")

    out = doc.get("output_dir")
    _require(out is None or isinstance(out, str),
             "output_dir must be a string when present")

    tasks = doc.get("tasks", [])
    _require(isinstance(tasks, list), "tasks must be a list")
    for k, block in enumerate(tasks):
        _require(isinstance(block, dict) and isinstance(block.get("command"), str),
                 f"task {k} must be an object with a 'command' string")

    return Scenario(dimension=n, planes=tuple(planes), half_width=float(L),
                    delta=float(delta), seed=seed, output_dir=out,
                    tasks=tuple(tasks))
