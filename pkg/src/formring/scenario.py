"""Scenario configuration: rings, ideals and named checks from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .engine import DEFAULT_BUDGET
from .rings import InvolutiveRing, RingConstructionError, build_ring


class ScenarioError(ValueError):
    """Configuration cannot be parsed or bound (CLI exit code 2)."""


@dataclass
class IdealSpec:
    gens: list[Any]
    gamma: str | list[Any]  # "gamma_min" | "gamma_max" | explicit element list


@dataclass
class CheckSpec:
    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    name: str
    ring_spec: dict
    lam_spec: Any
    form_parameter: str | list[Any]  # "min" | "max" | explicit element list
    n: int
    ideals: dict[str, IdealSpec]
    checks: list[CheckSpec]
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    samples: int = 10_000
    ambient_mode: str = "generators"  # how the full unitary group is realised
    ambient_expected_order: int | None = None

    def validate(self) -> None:
        if self.n < 1:
            raise ScenarioError("n must be >= 1")
        if self.ambient_mode not in ("generators", "closure"):
            raise ScenarioError(f"unknown ambient mode {self.ambient_mode!r}")
        theorem_checks = {
            "genelm", "perfectness", "habdank-chain", "level", "standard",
            "absolute", "triple", "multi", "bracketing", "double-reduction",
            "m-conditions",
        }
        if self.n < 3 and any(c.name in theorem_checks for c in self.checks):
            raise ScenarioError("theorem checks need n >= 3")
        for check in self.checks:
            for key in ("ideals", "leaves"):
                for ref in check.params.get(key, []):
                    if ref not in self.ideals:
                        raise ScenarioError(f"check {check.name!r} references unknown ideal {ref!r}")
            for key in ("pairs", "triples", "tuples"):
                for group in check.params.get(key, []):
                    for ref in group:
                        if ref not in self.ideals:
                            raise ScenarioError(
                                f"check {check.name!r} references unknown ideal {ref!r}"
                            )


def parse_element(ring_spec: dict, ring: InvolutiveRing, obj: Any) -> int:
    """Decode a JSON element for the given ring construction."""
    kind = ring_spec.get("kind")
    if kind == "zmod":
        if not isinstance(obj, int):
            raise ScenarioError(f"zmod element must be an int, got {obj!r}")
        return obj % ring_spec["m"]
    if kind == "quadratic":
        m = ring_spec["m"]
        if isinstance(obj, int):
            return obj % m
        if isinstance(obj, list) and len(obj) == 2:
            return (obj[0] % m) + m * (obj[1] % m)
        raise ScenarioError(f"quadratic element must be int or [a0,a1], got {obj!r}")
    if kind == "product":
        factors = ring_spec["factors"]
        if not isinstance(obj, list) or len(obj) != len(factors):
            raise ScenarioError(f"product element needs {len(factors)} coordinates, got {obj!r}")
        sub_rings = [build_ring(f) for f in factors]
        idx = 0
        for coord, f_spec, f_ring in zip(obj, factors, sub_rings):
            idx = idx * f_ring.order + parse_element(f_spec, f_ring, coord)
        return idx
    if kind == "tables":
        if not isinstance(obj, int):
            raise ScenarioError(f"table-ring element must be an index, got {obj!r}")
        return obj
    raise ScenarioError(f"unknown ring kind {kind!r}")


def parse_scenario(data: dict) -> ScenarioConfig:
    try:
        ideals = {
            name: IdealSpec(gens=list(spec.get("gens", [])), gamma=spec.get("gamma", "gamma_max"))
            for name, spec in data.get("ideals", {}).items()
        }
        checks = [
            CheckSpec(name=c["name"], params={k: v for k, v in c.items() if k != "name"})
            for c in data.get("checks", [])
        ]
        cfg = ScenarioConfig(
            name=data.get("name", "scenario"),
            ring_spec=data["ring"],
            lam_spec=data["lambda"],
            form_parameter=data.get("form_parameter", "max"),
            n=int(data["n"]),
            ideals=ideals,
            checks=checks,
            budget=int(data.get("budget", DEFAULT_BUDGET)),
            seed=int(data.get("seed", 0)),
            samples=int(data.get("samples", 10_000)),
            ambient_mode=data.get("ambient", {}).get("mode", "generators")
            if isinstance(data.get("ambient"), dict)
            else data.get("ambient", "generators"),
            ambient_expected_order=(
                data.get("ambient", {}).get("expected_order")
                if isinstance(data.get("ambient"), dict)
                else None
            ),
        )
    except KeyError as e:
        raise ScenarioError(f"missing required scenario field: {e}") from e
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"malformed scenario: {e}") from e
    cfg.validate()
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError as e:
        raise ScenarioError(f"config file not found: {p}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"config is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError("config root must be a JSON object")
    return parse_scenario(data)
