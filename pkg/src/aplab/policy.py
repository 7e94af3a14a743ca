"""Numeric policy: every tolerance and implemented constant in one record.

The record round-trips through a flat ``key=value`` text file so that sweeps
can vary constants without touching code.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class Policy:
    # float paths
    rel_tol: float = 1e-9
    # Bohr-set membership guard band around the radius
    boundary_guard: float = 1e-12
    # regularity constant and probe/scan grids
    C0: float = 16.0
    probe_points: int = 32
    kappa_points: int = 64
    # increment factor and Katz-Koester constants
    c_impl: float = 1.0 / 16.0
    lambda_min: float = 0.5
    sigma_floor_c: float = 8.0
    nu: float = 1.0
    # smoothing step: ell = ceil(ell_c * log(2/alpha_2))
    ell_c: float = 1.0
    # greedy spectrum cover
    word_length: int = 8
    # almost periods of convolutions
    max_halvings: int = 20
    cls_retries: int = 3
    # level-set pipeline: omega = N^(-omega_c * eps / log(2/alpha~)),
    # log(2/v) = v_c * eps^(1/2) alpha_1^(1/4) (log N)^(1/2) (log 2/alpha~)^(-7/2)
    omega_c: float = 10.0
    v_c: float = 1.0
    v_max: float = 0.125

    def replace(self, **changes) -> "Policy":
        return dataclasses.replace(self, **changes)

    def dumps(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)!r}\n" for f in fields(self))

    @classmethod
    def loads(cls, text: str) -> "Policy":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"policy line {lineno}: expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"policy line {lineno}: unknown key {key!r}")
            values[key] = int(value) if types[key] == "int" else float(value)
        return cls(**values)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Policy":
        return cls.loads(Path(path).read_text())


DEFAULT_POLICY = Policy()


def resolve(policy: Policy | None) -> Policy:
    return DEFAULT_POLICY if policy is None else policy
