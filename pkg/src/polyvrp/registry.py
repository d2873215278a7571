"""Best-known-solution registry and the tour-duration sidecar."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class BksEntry:
    value: float
    proven_optimal: bool
    k_routes: int | None


class BksRegistry:
    """Instance name -> best known (or proven optimal) objective value."""

    def __init__(self, entries: dict[str, BksEntry]):
        self.entries = dict(entries)
        for name, e in self.entries.items():
            if e.value <= 0:
                raise ValueError(f"registry value for {name} must be positive")

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, name: str) -> BksEntry | None:
        return self.entries.get(name)

    def __getitem__(self, name: str) -> BksEntry:
        if name not in self.entries:
            raise KeyError(f"no registry entry for instance {name!r}")
        return self.entries[name]

    @classmethod
    def from_text(cls, text: str) -> "BksRegistry":
        entries: dict[str, BksEntry] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"registry line needs 4 fields: {raw!r}")
            name, value, flag, routes = parts
            entries[name] = BksEntry(
                value=float(value),
                proven_optimal=flag == "*",
                k_routes=None if routes == "-" else int(routes),
            )
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "BksRegistry":
        """Load a registry file; default is the bundled one."""
        if path is None:
            text = resources.files("polyvrp.data").joinpath("bks_registry.txt").read_text()
        else:
            text = Path(path).read_text()
        return cls.from_text(text)


def load_mtd_sidecar(path: str | Path | None = None) -> dict[str, tuple[float, float]]:
    """Read the tour-duration sidecar: instance name -> (d_max, fixed service time)."""
    if path is None:
        text = resources.files("polyvrp.data").joinpath("mtd.txt").read_text()
    else:
        text = Path(path).read_text()
    out: dict[str, tuple[float, float]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, d_max, fst = line.split()
        out[name] = (float(d_max), float(fst))
    return out
