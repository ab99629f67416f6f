"""Runtime settings: enumeration cap and numeric tolerances.

Settings come from defaults, then an optional INI file (section ``[mlsiconc]``),
then the ``MLSICONC_ENUM_CAP`` environment variable.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

ENV_CAP = "MLSICONC_ENUM_CAP"


@dataclass(frozen=True)
class Settings:
    enumeration_cap: int = math.factorial(10)
    norm_tol: float = 1e-12
    identity_tol: float = 1e-10
    fw_tol: float = 1e-8
    psi2_rtol: float = 1e-10
    power_iter_rtol: float = 1e-10


DEFAULT = Settings()


def load_settings(path: str | os.PathLike | None = None) -> Settings:
    settings = DEFAULT
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(Path(path)):
            raise FileNotFoundError(path)
        if parser.has_section("mlsiconc"):
            section = parser["mlsiconc"]
            updates = {}
            for f in fields(Settings):
                if f.name in section:
                    cast = int if f.type in ("int", int) else float
                    updates[f.name] = cast(section[f.name])
            settings = replace(settings, **updates)
    env = os.environ.get(ENV_CAP)
    if env:
        settings = replace(settings, enumeration_cap=int(env))
    return settings
