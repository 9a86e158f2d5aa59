"""Declarative run configuration: an INI file with strict key checking.

Sections: [run], [dataset], [encoder], [train], [constraint], [augment].
Every key has a typed parser and a default; unknown sections or keys are
fatal so a typo can never be silently ignored. [dataset] is the only
required section (kind = gaussian needs classes/per_class/dim/separation,
kind = file needs path). See README for the full key list.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .assignment import ConstraintConfig
from .data_io import AugmentConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    """Bad, missing, or unknown configuration input (a user error)."""


@dataclass
class DatasetSpec:
    kind: str                      # "gaussian" | "file"
    classes: int = 10
    per_class: int = 200
    dim: int = 32
    separation: float = 10.0
    path: str | None = None


@dataclass
class RunConfig:
    seed: int
    out_dir: str | None
    dataset: DatasetSpec
    train: TrainConfig


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_list(raw: str) -> tuple:
    return tuple(int(v.strip()) for v in raw.split(",") if v.strip())


def _float_or_auto(raw: str):
    return None if raw.strip().lower() == "auto" else float(raw)


def _float_or_none(raw: str):
    return None if raw.strip() == "" else float(raw)


_SCHEMA = {
    "run": {"seed": int, "out_dir": str},
    "dataset": {
        "kind": str,
        "classes": int,
        "per_class": int,
        "dim": int,
        "separation": float,
        "path": str,
    },
    "encoder": {
        "hidden_dims": _int_list,
        "embed_dim": int,
        "lr": float,
        "momentum": float,
        "warmup_epochs": int,
    },
    "train": {
        "epochs": int,
        "batch_size": int,
        "tau": float,
        "temperature": float,
        "temperature_centers": _float_or_none,
        "heads": _int_list,
        "center_mode": str,
        "lr_centers": float,
        "center_momentum": float,
        "init_farthest": _bool,
    },
    "constraint": {
        "mode": str,
        "gamma": float,
        "gamma_prime": float,
        "alpha": _float_or_auto,
        "eta_rho": float,
        "logit_scores": _bool,
        "reset_duals": _bool,
    },
    "augment": {"noise_sigma": float, "mask_prob": float, "scale_jitter": float},
}


def _parse_sections(path) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigError(f"{path}: {err}") from err
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            try:
                values[section][key] = _SCHEMA[section][key](raw)
            except ValueError as err:
                raise ConfigError(
                    f"{path}: bad value for '{key}' in [{section}]: {err}"
                ) from err
    return values


def load_run_config(path) -> RunConfig:
    values = _parse_sections(path)
    if "dataset" not in values:
        raise ConfigError(f"{path}: missing required section [dataset]")
    ds = values["dataset"]
    if "kind" not in ds:
        raise ConfigError(f"{path}: missing required key 'kind' in [dataset]")
    kind = ds["kind"]
    if kind == "gaussian":
        spec = DatasetSpec(
            kind="gaussian",
            classes=ds.get("classes", 10),
            per_class=ds.get("per_class", 200),
            dim=ds.get("dim", 32),
            separation=ds.get("separation", 10.0),
        )
    elif kind == "file":
        if "path" not in ds:
            raise ConfigError(f"{path}: missing required key 'path' in [dataset]")
        if not os.path.exists(ds["path"]):
            raise ConfigError(f"{path}: dataset path does not exist: {ds['path']}")
        spec = DatasetSpec(kind="file", path=ds["path"])
    else:
        raise ConfigError(f"{path}: dataset kind must be gaussian or file, got {kind!r}")

    run = values.get("run", {})
    enc = values.get("encoder", {})
    tr = values.get("train", {})
    con = values.get("constraint", {})
    aug = values.get("augment", {})
    try:
        constraint = ConstraintConfig(
            mode=con.get("mode", "size_lb"),
            gamma=con.get("gamma", 0.9),
            gamma_prime=con.get("gamma_prime", 1.0),
            alpha=con.get("alpha", None),
            eta_rho=con.get("eta_rho", 0.1),
            use_logit_scores=con.get("logit_scores", True),
            reset_duals_each_epoch=con.get("reset_duals", False),
        )
        augment = AugmentConfig(
            noise_sigma=aug.get("noise_sigma", 0.1),
            mask_prob=aug.get("mask_prob", 0.1),
            scale_jitter=aug.get("scale_jitter", 0.1),
        )
        train = TrainConfig(
            epochs=tr.get("epochs", 50),
            batch_size=tr.get("batch_size", 128),
            seed=run.get("seed", 0),
            tau=tr.get("tau", 0.2),
            temperature=tr.get("temperature", 0.05),
            temperature_centers=tr.get("temperature_centers", None),
            heads=tr.get("heads", (10,)),
            center_mode=tr.get("center_mode", "sgd"),
            lr_centers=tr.get("lr_centers", 1.2),
            center_momentum=tr.get("center_momentum", 0.9),
            lr_encoder=enc.get("lr", 0.2),
            encoder_momentum=enc.get("momentum", 0.9),
            warmup_epochs=enc.get("warmup_epochs", 5),
            hidden_dims=enc.get("hidden_dims", (64, 64)),
            embed_dim=enc.get("embed_dim", 128),
            init_farthest=tr.get("init_farthest", True),
            constraint=constraint,
            augment=augment,
        )
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from err
    return RunConfig(
        seed=run.get("seed", 0),
        out_dir=run.get("out_dir"),
        dataset=spec,
        train=train,
    )
