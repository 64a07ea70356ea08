"""Flat parameter buffers with a canonical, named layout.

Optimizer, gradient accumulation and checkpoint serialization all share
one layout: an ordered list of (name, shape) entries packed back to back.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from config.errors import UsageError


@dataclass(frozen=True)
class ParamSpec:
    name: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


class ParameterLayout:
    """Ordered (name, shape) table mapped onto a contiguous float64 buffer."""

    def __init__(self, entries: Iterable[tuple[str, Sequence[int]]]):
        specs = []
        offset = 0
        for name, shape in entries:
            spec = ParamSpec(name=name, shape=tuple(int(s) for s in shape), offset=offset)
            specs.append(spec)
            offset += spec.size
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise UsageError("duplicate parameter names in layout")
        self.specs: tuple[ParamSpec, ...] = tuple(specs)
        self.size = offset
        self._by_name = {s.name: s for s in specs}

    def __len__(self) -> int:
        return len(self.specs)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParameterLayout) and self.to_table() == other.to_table()

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def spec(self, name: str) -> ParamSpec:
        return self._by_name[name]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size, dtype=np.float64)

    def views(self, buf: np.ndarray) -> dict[str, np.ndarray]:
        """Named reshaped views into ``buf`` (writes go through to the buffer)."""
        if buf.shape != (self.size,):
            raise UsageError(f"buffer has shape {buf.shape}, layout needs ({self.size},)")
        return {s.name: buf[s.offset: s.offset + s.size].reshape(s.shape) for s in self.specs}

    def prefixed(self, prefix: str) -> "ParameterLayout":
        return ParameterLayout((f"{prefix}.{s.name}", s.shape) for s in self.specs)

    @classmethod
    def concat(cls, *layouts: "ParameterLayout") -> "ParameterLayout":
        return cls((s.name, s.shape) for layout in layouts for s in layout.specs)

    def to_table(self) -> list[dict]:
        return [{"name": s.name, "shape": list(s.shape), "offset": s.offset} for s in self.specs]

    @classmethod
    def from_table(cls, table: list[dict]) -> "ParameterLayout":
        layout = cls((row["name"], row["shape"]) for row in table)
        for spec, row in zip(layout.specs, table):
            if spec.offset != row["offset"]:
                raise UsageError(f"offset mismatch for {spec.name}")
        return layout


def uniform_init(layout: ParameterLayout, rng: np.random.Generator) -> np.ndarray:
    """Weights uniform in +-sqrt(1/fan_in), biases (1-D entries) zero."""
    buf = layout.zeros()
    for name, view in layout.views(buf).items():
        if view.ndim == 2:
            bound = np.sqrt(1.0 / view.shape[1])
            view[...] = rng.uniform(-bound, bound, size=view.shape)
    return buf
