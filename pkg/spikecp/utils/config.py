"""
Experiment configuration.

Configs are YAML documents with the sections used throughout configs/::

    experiment:  name, description, random_seed, n_trials, threads
    data:        dataset (file) | synthetic_spec (YAML) + n_items + seed
    model:       path
    policy:      kind, p_targ, i_th, checkpoints (count or list), dcsnn_grid
    calibration: n_cal, n_test
    output:      base_directory
"""

import logging
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import psutil
import yaml

from spikecp.errors import ConfigError, InvalidParameterError
from spikecp.inference.policies import Policy

logger = logging.getLogger(__name__)

THREADS_ENV = "SPIKECP_THREADS"
SWEEP_PARAMETERS = ("p_targ", "i_th", "n_checkpoints", "n_cal")


def default_threads():
    """Worker count from SPIKECP_THREADS, else the number of physical cores."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
    return psutil.cpu_count(logical=False) or 1


@dataclass(frozen=True)
class ExperimentConfig:
    model_path: str
    policy: str = Policy.SPIKECP_GLOBAL.value
    p_targ: float = 0.9
    i_th: int = 3
    checkpoints: object = 4
    n_cal: int = 200
    n_test: int = None
    n_trials: int = 50
    seed: int = 42
    dataset_path: str = None
    synthetic_spec_path: str = None
    n_items: int = 2000
    data_seed: int = 0
    dcsnn_grid: tuple = None
    threads: int = None
    name: str = "spikecp_experiment"
    description: str = ""
    output_dir: str = "results"

    def __post_init__(self):
        Policy.parse(self.policy)
        if not 0.0 < float(self.p_targ) < 1.0:
            raise InvalidParameterError(f"p_targ must lie in (0, 1), got {self.p_targ}")
        if int(self.n_trials) < 1:
            raise InvalidParameterError(f"n_trials must be >= 1, got {self.n_trials}")
        if int(self.n_cal) < 1:
            raise InvalidParameterError(f"n_cal must be >= 1, got {self.n_cal}")
        if int(self.i_th) < 0:
            raise InvalidParameterError(f"i_th must be >= 0, got {self.i_th}")
        if self.n_test is not None and int(self.n_test) < 1:
            raise InvalidParameterError(f"n_test must be >= 1, got {self.n_test}")
        if (self.dataset_path is None) == (self.synthetic_spec_path is None):
            raise InvalidParameterError("Give exactly one of data.dataset or data.synthetic_spec")

    def with_value(self, parameter, value):
        """Copy with one sweep parameter replaced."""
        if parameter not in SWEEP_PARAMETERS:
            raise InvalidParameterError(
                f"Unknown sweep parameter '{parameter}', expected one of {', '.join(SWEEP_PARAMETERS)}"
            )
        if parameter == "n_checkpoints":
            return replace(self, checkpoints=int(value))
        if parameter in ("i_th", "n_cal"):
            value = int(value)
        return replace(self, **{parameter: value})

    def to_dict(self):
        values = asdict(self)
        if isinstance(values["checkpoints"], tuple):
            values["checkpoints"] = list(values["checkpoints"])
        if values["dcsnn_grid"] is not None:
            values["dcsnn_grid"] = list(values["dcsnn_grid"])
        return values


def _section(document, name, path):
    section = document.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Section '{name}' must be a mapping", path)
    return section


def load_experiment_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError("Config file not found", path)
    try:
        with open(path) as f:
            document = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed config ({e})", path) from e
    if not isinstance(document, dict):
        raise ConfigError("Config must be a YAML mapping", path)

    experiment = _section(document, "experiment", path)
    data = _section(document, "data", path)
    model = _section(document, "model", path)
    policy = _section(document, "policy", path)
    calibration = _section(document, "calibration", path)
    output = _section(document, "output", path)

    if "path" not in model:
        raise ConfigError("Missing model.path", path)
    checkpoints = policy.get("checkpoints", 4)
    if isinstance(checkpoints, list):
        checkpoints = tuple(int(t) for t in checkpoints)
    grid = policy.get("dcsnn_grid")

    try:
        return ExperimentConfig(
            model_path=str(model["path"]),
            policy=str(policy.get("kind", Policy.SPIKECP_GLOBAL.value)),
            p_targ=float(policy.get("p_targ", 0.9)),
            i_th=int(policy.get("i_th", 3)),
            checkpoints=checkpoints,
            n_cal=int(calibration.get("n_cal", 200)),
            n_test=calibration.get("n_test"),
            n_trials=int(experiment.get("n_trials", 50)),
            seed=int(experiment.get("random_seed", 42)),
            dataset_path=data.get("dataset"),
            synthetic_spec_path=data.get("synthetic_spec"),
            n_items=int(data.get("n_items", 2000)),
            data_seed=int(data.get("seed", 0)),
            dcsnn_grid=tuple(float(g) for g in grid) if grid is not None else None,
            threads=experiment.get("threads"),
            name=str(experiment.get("name", path.stem)),
            description=str(experiment.get("description", "")),
            output_dir=str(output.get("base_directory", "results")),
        )
    except (InvalidParameterError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid config ({e})", path) from e
