"""JSON run configuration: parsing with strict key checking, defaults, and round-tripping.

Every section is optional; missing keys take the defaults below. Unknown keys
anywhere raise :class:`ConfigError`. ``blowup_threshold: null`` means no
threshold.

    {
      "system":     {"family": "wgan_linear", "c": 1.0},
      "controller": {"kind": "bmc", "rho1": 0.1, "rho2": 0.01, "beta": 2.0},
      "sde":        {"dt": 0.1, "n_steps": 100000, "record_stride": 1,
                     "x0": [1.0, 1.0], "seed": 0, "blowup_threshold": 1e12},
      "criterion":  {"tol": 0.01, "window": 100, "max_steps": 100000},
      "report":     {"tail_fraction": 0.5, "epsilon": null},
      "sweep":      {"rho1_values": [0.1, 0.01, 0.001], "rho2_values": [0.0001, 0.001, 0.01],
                     "beta_values": [1.0, 2.0], "n_seeds": 20, "base_seed": 0},
      "toygan":     {"learning_rate": 0.05, "batch_size": 64, "n_steps": 3000,
                     "rho1": 0.0, "rho2": 0.0, "seed": 0, "snapshot_stride": 25,
                     "latent_dim": 2, "g_hidden": [32, 32], "d_hidden": [32, 32],
                     "activation": "tanh", "n_eval_latents": 512, "fit_every": 0,
                     "fit_samples": 1000, "save_snapshots": true,
                     "data": {"kind": "gauss1d", "mean": 0.0, "std": 1.0,
                              "n_modes": 8, "radius": 2.0}}
    }
"""
import copy
import json
import math
from dataclasses import dataclass

from .controller import NULL, BmcParams
from .dynamics import SystemSpec, get_family
from .integrator import SdeConfig
from .stability import ConvergenceCriterion
from .sweep import SweepGrid
from .toygan import DataSpec, GanTrainConfig

DEFAULTS = {
    "system": {"family": "wgan_linear", "c": 1.0},
    "controller": {"kind": "bmc", "rho1": 0.1, "rho2": 0.01, "beta": 2.0},
    "sde": {"dt": 0.1, "n_steps": 100_000, "record_stride": 1, "x0": [1.0, 1.0], "seed": 0,
            "blowup_threshold": 1e12},
    "criterion": {"tol": 1e-2, "window": 100, "max_steps": 100_000},
    "report": {"tail_fraction": 0.5, "epsilon": None},
    "sweep": {"rho1_values": [0.1, 0.01, 0.001], "rho2_values": [0.0001, 0.001, 0.01],
              "beta_values": [1.0, 2.0], "n_seeds": 20, "base_seed": 0},
    "toygan": {"learning_rate": 0.05, "batch_size": 64, "n_steps": 3000, "rho1": 0.0, "rho2": 0.0,
               "seed": 0, "snapshot_stride": 25, "latent_dim": 2, "g_hidden": [32, 32],
               "d_hidden": [32, 32], "activation": "tanh", "n_eval_latents": 512, "fit_every": 0,
               "fit_samples": 1000, "save_snapshots": True,
               "data": {"kind": "gauss1d", "mean": 0.0, "std": 1.0, "n_modes": 8, "radius": 2.0}},
}


class ConfigError(ValueError):
    pass


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be a JSON object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path or 'config'}: {', '.join(unknown)}")
    out = {}
    for key, dv in defaults.items():
        if key not in given:
            out[key] = copy.deepcopy(dv)
        elif isinstance(dv, dict):
            out[key] = _merge(dv, given[key], f"{path}.{key}" if path else key)
        else:
            out[key] = given[key]
    return out


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, d):
        cfg = cls(_merge(DEFAULTS, d, ""))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        if path is None:
            return cls.from_dict({})
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_json(self):
        return json.dumps(self.raw, indent=2, sort_keys=False, allow_nan=False) + "\n"

    def validate(self):
        """Build every typed object once so that bad values surface as ConfigError."""
        try:
            self.system()
            self.controller()
            self.sde()
            self.criterion()
            self.sweep_grid()
            self.toygan()
            tf = self.raw["report"]["tail_fraction"]
            if not 0 < tf <= 1:
                raise ValueError("report.tail_fraction must lie in (0, 1]")
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None

    def system(self):
        s = self.raw["system"]
        return SystemSpec(get_family(s["family"]), float(s["c"]))

    def controller(self):
        c = self.raw["controller"]
        if c["kind"] == "null":
            return NULL
        if c["kind"] != "bmc":
            raise ConfigError(f"controller.kind must be 'bmc' or 'null', got {c['kind']!r}")
        return BmcParams(float(c["rho1"]), float(c["rho2"]), float(c["beta"]))

    def sde(self):
        s = self.raw["sde"]
        thr = s["blowup_threshold"]
        for key in ("n_steps", "record_stride", "seed"):
            if not isinstance(s[key], int) or isinstance(s[key], bool):
                raise ConfigError(f"sde.{key} must be an integer")
        return SdeConfig(dt=float(s["dt"]), n_steps=s["n_steps"], record_stride=s["record_stride"],
                         x0=tuple(s["x0"]), seed=s["seed"],
                         blowup_threshold=math.inf if thr is None else float(thr))

    def criterion(self):
        c = self.raw["criterion"]
        return ConvergenceCriterion(float(c["tol"]), int(c["window"]), int(c["max_steps"]))

    def sweep_grid(self):
        s = self.raw["sweep"]
        return SweepGrid(tuple(s["rho1_values"]), tuple(s["rho2_values"]), tuple(s["beta_values"]),
                         int(s["n_seeds"]), int(s["base_seed"]), self.sde(), self.criterion())

    def toygan(self):
        t = dict(self.raw["toygan"])
        data = DataSpec(**t.pop("data"))
        rho1, rho2 = t.pop("rho1"), t.pop("rho2")
        t.pop("save_snapshots")
        t["g_hidden"] = tuple(t["g_hidden"])
        t["d_hidden"] = tuple(t["d_hidden"])
        return GanTrainConfig(bmc=BmcParams(float(rho1), float(rho2), 2.0), data=data, **t)

    @property
    def save_snapshots(self):
        return bool(self.raw["toygan"]["save_snapshots"])

    @property
    def tail_fraction(self):
        return float(self.raw["report"]["tail_fraction"])

    @property
    def epsilon(self):
        e = self.raw["report"]["epsilon"]
        return None if e is None else float(e)
