import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic.v1 import BaseModel, Extra, ValidationError, root_validator, validator

from polarity_lab.core.kinetics import KineticParams
from polarity_lab.core.nondim import (
    DimensionalParams,
    NondimAnchors,
    nondimensionalize,
)
from polarity_lab.core.typedefs import Model
from polarity_lab.simulation.runner import SimConfig

#: Degrees reported by the stability, growth-curve and scan commands by default
DEFAULT_L_MAX = 10


class Scale(str, Enum):
    """The spacing of scan points."""

    LINEAR = "linear"
    LOG = "log"


class ScanSpec(BaseModel):
    """A one-parameter sweep over a kinetic parameter.

    >>> ScanSpec(param="gamma", lower=0, upper=10, count=3).points()
    [0.0, 5.0, 10.0]
    """

    class Config:
        allow_mutation = False
        extra = Extra.forbid

    param: str
    lower: float
    upper: float
    count: int
    scale: Scale = Scale.LINEAR

    @validator("param")
    def known_parameter(cls, v: str) -> str:
        if v not in KineticParams.__fields__:
            raise ValueError(
                f"unknown parameter {v!r}, expected one of "
                + ", ".join(KineticParams.__fields__)
            )
        return v

    @validator("count")
    def at_least_two(cls, v: int) -> int:
        if v < 2:
            raise ValueError("a scan needs at least 2 points")
        return v

    @root_validator(skip_on_failure=True)
    def nonempty_range(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        lower, upper = values["lower"], values["upper"]
        if not (math.isfinite(lower) and math.isfinite(upper) and lower < upper):
            raise ValueError(f"empty scan range [{lower}, {upper}]")
        if values["scale"] is Scale.LOG and lower <= 0:
            raise ValueError("a logarithmic scan needs a positive lower bound")
        return values

    def points(self) -> List[float]:
        """The scan values in scan order."""
        if self.scale is Scale.LOG:
            values = np.geomspace(self.lower, self.upper, self.count)
        else:
            values = np.linspace(self.lower, self.upper, self.count)
        return [float(x) for x in values]


class DispersionSpec(BaseModel):
    """The degree and growth-rate grid on which a dispersion function is sampled."""

    class Config:
        allow_mutation = False
        extra = Extra.forbid

    l: int = 1
    omega_max: float = 20.0
    count: int = 201

    @validator("l")
    def supported_degree(cls, v: int) -> int:
        if not 0 <= v <= 200:
            raise ValueError("must lie in [0, 200]")
        return v

    @validator("omega_max")
    def positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError("must be finite and strictly positive")
        return v

    @validator("count")
    def at_least_two(cls, v: int) -> int:
        if v < 2:
            raise ValueError("must be at least 2")
        return v

    def omegas(self) -> List[float]:
        """The sampled growth rates, from 0 to omega_max."""
        return [float(w) for w in np.linspace(0.0, self.omega_max, self.count)]


def _model_for(params: Any) -> Optional[str]:
    if isinstance(params, KineticParams):
        return Model.REDUCED.value if params.reduced else Model.FULL.value
    try:
        parsed = KineticParams.parse_obj(params)
    except ValidationError:
        return None
    return Model.REDUCED.value if parsed.reduced else Model.FULL.value


class RunConfig(BaseModel):
    """The document read by every command.

    Kinetic parameters are given either nondimensionally under ``params`` or in
    SI units under ``dimensional``; ``anchors`` fix the scales for the inverse
    map. The top-level ``seed`` and ``model`` apply to
    the simulation block too; without an explicit model the coupled system is
    used for finite D and the non-local system for D = Infinity.
    """

    class Config:
        allow_mutation = False
        extra = Extra.forbid

    params: KineticParams = KineticParams()
    dimensional: Optional[DimensionalParams] = None
    anchors: Optional[NondimAnchors] = None
    model: Model = Model.FULL
    sim: Optional[SimConfig] = None
    scan: Optional[ScanSpec] = None
    dispersion: DispersionSpec = DispersionSpec()
    output_dir: Path = Path("polarity-lab-output")
    seed: int = 0
    l_max: int = DEFAULT_L_MAX

    @root_validator(pre=True)
    def share_parameters(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        values = dict(values)
        if values.get("dimensional") is not None:
            if "params" in values:
                raise ValueError("give either params or dimensional, not both")
            values["params"] = nondimensionalize(
                DimensionalParams.parse_obj(values["dimensional"])
            )
        params = values.get("params", {})
        if "model" not in values:
            sim = values.get("sim")
            if isinstance(sim, dict) and "model" in sim:
                values["model"] = sim["model"]
            else:
                model = _model_for(params)
                if model is not None:
                    values["model"] = model
        sim = values.get("sim")
        if isinstance(sim, dict):
            if "params" in sim:
                raise ValueError("sim takes its parameters from the top-level params")
            sim = {**sim, "params": params}
            if "seed" in values:
                sim["seed"] = values["seed"]
            if "model" in values:
                sim["model"] = values["model"]
            values["sim"] = sim
        return values

    @root_validator(skip_on_failure=True)
    def finite_diffusion_for_coupled_model(
        cls, values: Dict[str, Any]
    ) -> Dict[str, Any]:
        scan = values["scan"]
        scans_D = scan is not None and scan.param == "D"
        if values["model"] is Model.FULL and values["params"].reduced and not scans_D:
            raise ValueError("the coupled model needs a finite cytosolic diffusion D")
        return values

    @validator("l_max")
    def supported_degree(cls, v: int) -> int:
        if not 1 <= v <= 200:
            raise ValueError("must lie in [1, 200]")
        return v

    def simulation(self) -> SimConfig:
        """The simulation settings, built from the defaults if none were given."""
        if self.sim is not None:
            return self.sim
        return SimConfig(params=self.params, seed=self.seed, model=self.model)
