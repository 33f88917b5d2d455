"""Run configuration: one JSON file plus command-line overrides (flags win)."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from krusco.driver.engine import KcscConfig
from krusco.driver.synthetic import SyntheticSpec
from krusco.exceptions import ConfigError
from krusco.solvers.proximal import SolverBudget

DEFAULT_ALPHA = 0.1


def parse_list(text: Optional[str], cast=float) -> Optional[List]:
    """'1,2,3' -> [1, 2, 3]; None stays None"""
    if text is None:
        return None
    try:
        return [cast(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"invalid comma-separated list {text!r}") from exc


class RunConfig(BaseModel):
    """Parameters of `krusco fit`, mirrored from KcscConfig plus paths"""

    model_config = ConfigDict(extra="forbid")

    input: Optional[Path] = None
    out: Optional[Path] = None
    atoms: Optional[int] = Field(default=None, ge=1)
    rank: Optional[int] = Field(default=None, ge=1)
    atom_shape: Optional[List[int]] = None
    alpha: Optional[List[float]] = None
    beta: Optional[List[float]] = None
    loops: int = Field(default=30, ge=1)
    outer_tol: float = Field(default=1e-6, ge=0)
    z_max_iter: int = Field(default=500, ge=1)
    z_tol: float = Field(default=1e-8, ge=0)
    d_max_iter: int = Field(default=200, ge=1)
    d_tol: float = Field(default=1e-8, ge=0)
    seed: int = 0
    baseline: bool = False
    baseline_alpha: Optional[float] = Field(default=None, ge=0)
    init: Literal["patches", "noise"] = "patches"
    act_init: Literal["spectral", "random"] = "spectral"
    balance: Literal["penalty", "unit"] = "penalty"
    starts: int = Field(default=1, ge=1)
    init_dict: Optional[Path] = None
    freeze_dict: bool = False
    rank_sweep: Optional[str] = None
    alpha_grid: Optional[List[float]] = None

    @field_validator("input", "init_dict")
    @classmethod
    def _path_exists(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.exists():
            raise ValueError(f"path does not exist: {value}")
        return value

    @field_validator("atom_shape")
    @classmethod
    def _positive_extents(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and (not value or any(w < 1 for w in value)):
            raise ValueError(f"atom extents must be >= 1, got {value}")
        return value

    @model_validator(mode="after")
    def _frozen_needs_dictionary(self) -> "RunConfig":
        if self.freeze_dict and self.init_dict is None:
            raise ValueError("freeze_dict requires init_dict")
        return self

    @classmethod
    def from_file(cls, path: Optional[Path]) -> "RunConfig":
        if path is None:
            return cls()
        return cls.model_validate_json(Path(path).read_text())

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """New validated config; overrides that are None are ignored"""
        merged: Dict[str, Any] = self.model_dump()
        merged.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        return RunConfig.model_validate(merged)

    def with_defaults(self, n_atoms: int, rank: int,
                      atom_shape: Sequence[int]) -> "RunConfig":
        """Fill unset model sizes, e.g. from a synthetic manifest"""
        return self.model_copy(update={
            "atoms": self.atoms if self.atoms is not None else n_atoms,
            "rank": self.rank if self.rank is not None else rank,
            "atom_shape": (
                self.atom_shape if self.atom_shape is not None else list(atom_shape)
            ),
        })

    def to_kcsc_config(self) -> KcscConfig:
        if self.atoms is None or self.rank is None or self.atom_shape is None:
            raise ConfigError("--atoms, --rank and --atom-shape are required")
        order = len(self.atom_shape)
        alpha = self.alpha if self.alpha is not None else [DEFAULT_ALPHA] * order
        beta = self.beta if self.beta is not None else [0.0] * order
        return KcscConfig(
            n_atoms=self.atoms,
            rank=self.rank,
            atom_shape=tuple(self.atom_shape),
            alpha=tuple(alpha),
            beta=tuple(beta),
            outer_loops=self.loops,
            outer_tol=self.outer_tol,
            z_budget=SolverBudget(max_iter=self.z_max_iter, tol=self.z_tol),
            d_budget=SolverBudget(max_iter=self.d_max_iter, tol=self.d_tol),
            seed=self.seed,
            baseline=self.baseline,
            baseline_alpha=self.baseline_alpha,
            update_dictionary=not self.freeze_dict,
            init=self.init,
            act_init=self.act_init,
            balance=self.balance,
            n_starts=self.starts,
        )


class SynthConfig(BaseModel):
    """Parameters of `krusco synth`; defaults are the reference setup"""

    model_config = ConfigDict(extra="forbid")

    out: Optional[Path] = None
    atoms: int = Field(default=10, ge=1)
    rank: int = Field(default=4, ge=1)
    atom_shape: List[int] = Field(default_factory=lambda: [2, 4, 8])
    signal_shape: List[int] = Field(default_factory=lambda: [16, 32, 64])
    density: float = Field(default=0.1, gt=0, le=1)
    noise: float = Field(default=0.0, ge=0)
    std_range: List[float] = Field(
        default_factory=lambda: [1.0, 10.0], min_length=2, max_length=2
    )
    seed: int = 0

    @classmethod
    def from_file(cls, path: Optional[Path]) -> "SynthConfig":
        if path is None:
            return cls()
        return cls.model_validate_json(Path(path).read_text())

    def with_overrides(self, **overrides: Any) -> "SynthConfig":
        merged: Dict[str, Any] = self.model_dump()
        merged.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        return SynthConfig.model_validate(merged)

    def to_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            n_atoms=self.atoms,
            atom_shape=tuple(self.atom_shape),
            signal_shape=tuple(self.signal_shape),
            rank=self.rank,
            density=self.density,
            noise_sigma=self.noise,
            std_range=(self.std_range[0], self.std_range[1]),
        )
