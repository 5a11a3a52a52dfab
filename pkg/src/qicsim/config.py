"""Numerical tolerances and resource limits shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Settings:
    """Tolerances and the dense-simulation size cap.

    ``dim_cap`` bounds the side of any density matrix the library will form.
    Pure global states may be larger than ``dim_cap``; entropies of their
    subsystems are computed on the smaller side of the bipartition.
    """

    tol_norm: float = 1e-9
    tol_herm: float = 1e-9
    tol_psd: float = 1e-9
    tol_iso: float = 1e-9
    dim_cap: int = 4096

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")
        if self.dim_cap < 1:
            raise ValueError("dim_cap must be at least 1")

    def override(self, **changes) -> "Settings":
        """Copy with the non-None entries of ``changes`` applied."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT = Settings()


def resolve(settings: Settings | None) -> Settings:
    return DEFAULT if settings is None else settings
