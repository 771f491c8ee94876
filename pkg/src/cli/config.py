"""
Run configuration - pydantic schema of one experiment file and its conversion to domain objects
"""
import hashlib
import json
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.bernstein import Anisotropy, BernsteinFunction
from src.common.errors import AnisoheatError, ConfigError, ConfigParseError, ConfigValidationError
from src.estimates.ensembles import ForcingEnsemble, ForcingKind
from src.kernels.heat_kernel import MAX_POWER, NU_MENU
from src.operators.coefficients import CoefficientMode, CoefficientSet, jump_step
from src.operators.grid import BlockAxes, FieldKind, GridFunction, TimeAxis, TorusGrid
from src.operators.multipliers import DerivativeForm
from src.stochastic.monte_carlo import Interpolation

logger = logging.getLogger(__name__)

DEFAULT_POINTS = 32


class TaskKind(str, Enum):
    """Subcommand that consumes the config"""
    kernel = "kernel"
    solve = "solve"
    simulate = "simulate"
    verify = "verify"
    multiplier = "multiplier"


class SuiteKind(str, Enum):
    """Verification suites"""
    l2 = "l2"
    lqlp = "lqlp"
    bmo = "bmo"
    kernel = "kernel"
    levy = "levy"


class SolveMethod(str, Enum):
    parabolic = "parabolic"
    elliptic = "elliptic"


class ProcessKind(str, Enum):
    """Process sampled by the simulate task"""
    iasbm = "iasbm"
    additive = "additive"
    subordinator = "subordinator"


class ForcingChoice(str, Enum):
    constant = "constant"
    band_limited = "band_limited"
    sign = "sign"


# ========== BERNSTEIN RECORDS ==========

class StableRecord(BaseModel):
    kind: Literal["stable"]
    alpha: float = Field(..., gt=0.0, le=1.0, description="Stability index")
    drift: float = Field(0.0, ge=0.0)


class AtomsRecord(BaseModel):
    kind: Literal["atoms"]
    atoms: List[Tuple[float, float]] = Field(..., min_length=1, description="(location, weight) pairs")
    drift: float = Field(0.0, ge=0.0)


class DensityRecord(BaseModel):
    kind: Literal["density"]
    table: List[Tuple[float, float]] = Field(..., min_length=2, description="(t, density) nodes, log-linear between")
    drift: float = Field(0.0, ge=0.0)


class DriftRecord(BaseModel):
    kind: Literal["drift"]
    drift: float = Field(1.0, gt=0.0)


BernsteinRecord = Annotated[Union[StableRecord, AtomsRecord, DensityRecord, DriftRecord],
                            Field(discriminator="kind")]


class JumpStepRecord(BaseModel):
    """a(t, y) = c1 + (1/c1 - c1) 1_{y > 0}, switched on from t_switch"""
    kind: Literal["jump_step"]
    t_switch: Optional[float] = Field(None, description="Switch-on time (None: always on)")


# ========== SECTIONS ==========

class AnisotropySpec(BaseModel):
    """Blocks R^{d_1} x ... x R^{d_l} and one Bernstein function each"""
    ell: Optional[int] = Field(None, ge=1, description="Declared block count")
    dims: List[int] = Field(..., min_length=1, description="Block dimensions, each 1..3")
    phis: List[BernsteinRecord] = Field(..., min_length=1)

    model_config = ConfigDict(json_schema_extra={
            "example": {"ell": 2, "dims": [1, 1],
                        "phis": [{"kind": "stable", "alpha": 0.5, "drift": 0},
                                 {"kind": "drift", "drift": 1.0}]}
        })


class CoefficientSpec(BaseModel):
    """Coefficients a_i, b_i sampled on their own time grid; b0 comes from the anisotropy"""
    c1: float = Field(1.0, gt=0.0, le=1.0, description="Ellipticity constant")
    mode: CoefficientMode = Field(CoefficientMode.TIME_ONLY)
    time_grid: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    a: Optional[List[Union[float, List[float], JumpStepRecord]]] = Field(
        None, description="Per block: constant, samples on time_grid, or a jump_step record (time_jump)")
    b: Optional[List[Union[float, List[float]]]] = Field(None, description="Per block: constant or samples")

    model_config = ConfigDict(json_schema_extra={
            "example": {"c1": 0.5, "mode": "time_only", "time_grid": [0.0, 0.5, 0.5000001, 1.0],
                        "a": [[0.5, 0.5, 2.0, 2.0], 1.0]}
        })


class GridSpec(BaseModel):
    extents: Optional[List[float]] = Field(None, description="Period of each block (default 2 pi)")
    counts: Optional[List[int]] = Field(None, description="Points per axis of each block")
    horizon: float = Field(1.0, gt=0.0, description="T")
    steps: int = Field(32, ge=1, description="Time steps n_t")
    start: float = Field(0.0, description="First time node")


class ForcingSpec(BaseModel):
    """Constant forcing or one member / the whole of a seeded forcing ensemble"""
    kind: ForcingChoice = Field(ForcingChoice.constant)
    value: float = Field(1.0, description="Value of a constant forcing")
    member: int = Field(0, ge=0, description="Member used where a single forcing is needed")
    size: int = Field(20, ge=1, description="Ensemble size")
    max_mode: int = Field(3, ge=0)
    time_modes: int = Field(2, ge=0)
    terms: int = Field(6, ge=1)
    sharpness: float = Field(4.0, gt=0.0)

    @model_validator(mode="after")
    def _member_in_range(self) -> "ForcingSpec":
        if self.kind != ForcingChoice.constant and self.member >= self.size:
            raise ValueError("member must be smaller than size")
        return self


class KernelParams(BaseModel):
    block: int = Field(0, ge=0, description="Block whose phi and d_i are swept")
    k: int = Field(0, ge=0, le=MAX_POWER, description="Operator power")
    m: int = Field(0, ge=0, le=2, description="Radial derivative order")
    nu: float = Field(1.0, description="Operator exponent nu")
    bound_nu: float = Field(0.5, description="Bound exponent nu_b")
    t_range: Tuple[float, float] = Field((1e-2, 10.0))
    r_range: Tuple[float, float] = Field((1e-2, 10.0))
    n_t: int = Field(7, ge=2)
    n_r: int = Field(7, ge=2)
    include_origin: bool = Field(False)
    mass_times: List[float] = Field(default_factory=list, description="Times of the L1 quantity")

    @model_validator(mode="after")
    def _check(self) -> "KernelParams":
        for name in ("nu", "bound_nu"):
            if getattr(self, name) not in NU_MENU:
                raise ValueError(f"{name} must be one of {list(NU_MENU)}")
        for name in ("t_range", "r_range"):
            lo, hi = getattr(self, name)
            if not (0.0 < lo < hi):
                raise ValueError(f"{name} needs 0 < lo < hi")
        return self


class SolveParams(BaseModel):
    method: SolveMethod = Field(SolveMethod.parabolic)
    lam: Optional[float] = Field(None, gt=0.0, description="Resolvent parameter (elliptic)")
    norms: List[float] = Field(default_factory=lambda: [2.0], description="L_p norms reported for u")
    residual: bool = Field(True, description="Report the space-time residual (parabolic)")

    @model_validator(mode="after")
    def _check(self) -> "SolveParams":
        if self.method == SolveMethod.elliptic and self.lam is None:
            raise ValueError("elliptic solves need lam > 0")
        if any(not (p >= 1.0) for p in self.norms):
            raise ValueError("norm exponents must be >= 1")
        return self


class SimulateParams(BaseModel):
    process: ProcessKind = Field(ProcessKind.iasbm)
    n_paths: int = Field(20000, ge=1)
    block: int = Field(0, ge=0, description="Block of the subordinator process")
    xi: Optional[List[List[float]]] = Field(None, description="Test frequencies (default: axis and diagonal)")
    times: Optional[List[float]] = Field(None, description="Test times, nodes of the grid (default: T/2, T)")
    lambdas: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0], description="Laplace arguments")
    monte_carlo: bool = Field(False, description="Also solve at T from the paths and compare")
    interpolation: Interpolation = Field(Interpolation.TRIGONOMETRIC)
    write_paths: bool = Field(True)


class BmoParams(BaseModel):
    b_min: float = Field(1e-3, gt=0.0)
    b_max: float = Field(1.0, gt=0.0)
    n_b: int = Field(12, ge=2)
    n_centers: int = Field(64, ge=1)
    block: int = Field(0, ge=0)
    ensemble: ForcingSpec = Field(default_factory=lambda: ForcingSpec(kind=ForcingChoice.sign, size=10))

    @model_validator(mode="after")
    def _check(self) -> "BmoParams":
        if not self.b_min < self.b_max:
            raise ValueError("need b_min < b_max")
        if self.ensemble.kind == ForcingChoice.constant:
            raise ValueError("bmo needs a random ensemble")
        return self


class LevyParams(BaseModel):
    nus: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    lambda_range: Tuple[float, float] = Field((1e-2, 1e2))
    n_lambda: int = Field(9, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "LevyParams":
        if any(nu not in NU_MENU for nu in self.nus):
            raise ValueError(f"nus must be drawn from {list(NU_MENU)}")
        if not (0.0 < self.lambda_range[0] <= self.lambda_range[1]):
            raise ValueError("lambda_range needs 0 < lo <= hi")
        return self


class VerifyParams(BaseModel):
    suites: List[SuiteKind] = Field(default_factory=lambda: [SuiteKind.l2], min_length=1)
    ensemble: ForcingSpec = Field(default_factory=lambda: ForcingSpec(kind=ForcingChoice.band_limited))
    lqlp_pairs: List[Tuple[float, float]] = Field(default_factory=lambda: [(1.5, 4.0), (4.0, 1.5), (3.0, 3.0)])
    bmo: BmoParams = Field(default_factory=BmoParams)
    kernel: KernelParams = Field(default_factory=KernelParams)
    kernel_cases: List[Tuple[int, int]] = Field(default_factory=lambda: [(0, 0), (0, 1), (1, 0), (1, 1)],
                                                description="(k, m) pairs of the kernel suite")
    levy: LevyParams = Field(default_factory=LevyParams)

    @model_validator(mode="after")
    def _check(self) -> "VerifyParams":
        if self.ensemble.kind == ForcingChoice.constant:
            raise ValueError("verification needs a random forcing ensemble")
        for p, q in self.lqlp_pairs:
            if not (p > 1.0 and q > 1.0):
                raise ValueError("lqlp exponents must exceed 1")
        return self


class MultiplierParams(BaseModel):
    delta1: float = Field(0.4, gt=0.0, lt=1.0)
    delta2: float = Field(0.4, gt=0.0, lt=1.0)
    form: DerivativeForm = Field(DerivativeForm.REDUCED)
    radii: Optional[List[float]] = Field(None, description="Annulus radii")
    levels: Optional[List[int]] = Field(None, description="Dyadic levels")
    coefficient_times: List[float] = Field(default_factory=list,
                                           description="Times at which the coefficient multiplier is bounded")


class RunConfig(BaseModel):
    """One experiment: shared declarations plus the parameters of its task"""
    task: TaskKind = Field(..., description="Task selector")
    seed: int = Field(0, ge=0, description="Master seed")
    anisotropy: AnisotropySpec
    coefficients: CoefficientSpec = Field(default_factory=CoefficientSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    forcing: ForcingSpec = Field(default_factory=ForcingSpec)
    kernel: KernelParams = Field(default_factory=KernelParams)
    solve: SolveParams = Field(default_factory=SolveParams)
    simulate: SimulateParams = Field(default_factory=SimulateParams)
    verify: VerifyParams = Field(default_factory=VerifyParams)
    multiplier: MultiplierParams = Field(default_factory=MultiplierParams)

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "task": "solve",
                "seed": 0,
                "anisotropy": {"ell": 1, "dims": [1], "phis": [{"kind": "drift", "drift": 1.0}]},
                "grid": {"counts": [16], "horizon": 1.0, "steps": 8},
                "forcing": {"kind": "constant", "value": 1.0}
            }
        },
    )

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


# ========== PARSING ==========

def parse_config(text: str) -> RunConfig:
    """
    Parse and validate config text

    Raises:
        ConfigParseError: invalid JSON, with line and column
        ConfigValidationError: the first failing constraint, named by its field path
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(e.msg, e.lineno, e.colno) from e
    if not isinstance(raw, dict):
        raise ConfigValidationError("root", "config must be a JSON object")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "root"
        raise ConfigValidationError(location, first["msg"], {"type": first["type"]}) from e


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e.strerror}", {"path": str(path)}) from e
    config = parse_config(text)
    logger.info("Loaded %s config from %s", config.task.value, path)
    return config


@contextmanager
def _constraint(section: str) -> Iterator[None]:
    """Re-raise domain invariant violations as ConfigValidationError"""
    try:
        yield
    except ConfigError:
        raise
    except AnisoheatError as e:
        constraint = e.details.get("constraint", section)
        raise ConfigValidationError(constraint, e.message, {**e.details, "section": section}) from e


# ========== DOMAIN OBJECTS ==========

def _samples(value: Union[float, List[float]], n: int) -> np.ndarray:
    if isinstance(value, list):
        return np.asarray(value, dtype=float)
    return np.full(n, float(value))


def _jump_coefficient(entry: Union[float, List[float], JumpStepRecord], c1: float,
                      block: int) -> Callable[[float, np.ndarray], np.ndarray]:
    if isinstance(entry, JumpStepRecord):
        return jump_step(c1, -math.inf if entry.t_switch is None else entry.t_switch)
    if isinstance(entry, list):
        raise ConfigValidationError("coefficients.a", "time_jump blocks take a constant or a jump_step record",
                                    {"block": block})
    value = float(entry)
    return lambda t, y: np.full(np.shape(y), value)


@dataclass
class Experiment:
    """Validated config with its domain objects"""
    config: RunConfig
    anisotropy: Anisotropy
    coefficients: CoefficientSet
    grid: TorusGrid

    @classmethod
    def from_config(cls, config: RunConfig) -> "Experiment":
        """
        Build anisotropy, coefficients and grid, enforcing every module invariant

        Raises:
            ConfigValidationError: naming the violated constraint
        """
        with _constraint("anisotropy"):
            spec = config.anisotropy
            phis = [BernsteinFunction.from_record(r.model_dump()) for r in spec.phis]
            anisotropy = Anisotropy(spec.dims, phis, ell=spec.ell)
        coefficients = cls._coefficients(config.coefficients, anisotropy)
        grid = cls._grid(config.grid, anisotropy)
        return cls(config, anisotropy, coefficients, grid)

    @staticmethod
    def _coefficients(spec: CoefficientSpec, anisotropy: Anisotropy) -> CoefficientSet:
        ell = anisotropy.ell
        n = len(spec.time_grid)
        b0 = list(anisotropy.effective_drifts)
        a_entries = spec.a if spec.a is not None else [1.0] * ell
        b_entries = spec.b if spec.b is not None else b0
        if len(a_entries) != ell or len(b_entries) != ell:
            raise ConfigValidationError("block count", "one a_i and one b_i entry per block",
                                        {"ell": ell, "a": len(a_entries), "b": len(b_entries)})
        b = [_samples(v, n) for v in b_entries]
        if spec.mode == CoefficientMode.TIME_ONLY:
            if any(isinstance(v, JumpStepRecord) for v in a_entries):
                raise ConfigValidationError("coefficients.mode", "jump_step records need mode time_jump")
            a = [_samples(v, n) for v in a_entries]
        else:
            a = [_jump_coefficient(v, spec.c1, i) for i, v in enumerate(a_entries)]
        with _constraint("coefficients"):
            coefficients = CoefficientSet(spec.c1, b0, spec.time_grid, b, a, mode=spec.mode)
            coefficients.check_anisotropy(anisotropy)
        return coefficients

    @staticmethod
    def _grid(spec: GridSpec, anisotropy: Anisotropy) -> TorusGrid:
        ell = anisotropy.ell
        extents = spec.extents or [2.0 * math.pi] * ell
        counts = spec.counts or [DEFAULT_POINTS] * ell
        if len(extents) != ell or len(counts) != ell:
            raise ConfigValidationError("grid blocks", "one extent and one count per block",
                                        {"ell": ell, "extents": len(extents), "counts": len(counts)})
        with _constraint("grid"):
            blocks = [BlockAxes(float(L), int(n), d) for L, n, d in zip(extents, counts, anisotropy.dims)]
            return TorusGrid(blocks, TimeAxis(spec.horizon, spec.steps, spec.start))

    def block(self, index: int) -> int:
        if not 0 <= index < self.anisotropy.ell:
            raise ConfigValidationError("block index", "block out of range",
                                        {"block": index, "ell": self.anisotropy.ell})
        return index

    def ensemble(self, spec: ForcingSpec) -> ForcingEnsemble:
        if spec.kind == ForcingChoice.constant:
            raise ConfigValidationError("forcing.kind", "an ensemble needs band_limited or sign forcings")
        return ForcingEnsemble(kind=ForcingKind(spec.kind.value), size=spec.size, seed=self.config.seed,
                               max_mode=spec.max_mode, time_modes=spec.time_modes, terms=spec.terms,
                               sharpness=spec.sharpness)

    def forcing(self, spec: Optional[ForcingSpec] = None) -> GridFunction:
        """Single space-time forcing on the run grid"""
        spec = spec or self.config.forcing
        if spec.kind == ForcingChoice.constant:
            return GridFunction(self.grid, np.full(self.grid.shape, spec.value), FieldKind.space_time,
                                {"forcing": "constant"})
        return self.ensemble(spec).member(spec.member, self.grid)

    def spatial_forcing(self, spec: Optional[ForcingSpec] = None) -> GridFunction:
        """Single space-only forcing: the space-time forcing at the middle time node"""
        f = self.forcing(spec)
        return f.time_slice(self.grid.time.steps // 2)

    def summary(self) -> Dict[str, Any]:
        return {"task": self.config.task.value, "anisotropy": self.anisotropy.to_record(),
                "grid": repr(self.grid), "coefficients": repr(self.coefficients)}
