"""Line-delimited ``key=value`` configuration with ``DVFS_*`` environment overrides."""
from __future__ import annotations

import os
import secrets
from dataclasses import dataclass, fields
from pathlib import Path

from dvfs.crypto import MasterKey
from dvfs.errors import ConfigError
from dvfs.fuzzy import DEFAULT_K, DEFAULT_WIDTH, LshFamily
from dvfs.index import DEFAULT_HEIGHT
from dvfs.params import Params

ENV_PREFIX = "DVFS_"


@dataclass
class Config:
    master_key: str
    lsh_seed: str
    k: int = DEFAULT_K
    L: int = DEFAULT_HEIGHT
    lsh_width: float = DEFAULT_WIDTH
    index: str = "index.dvfs"
    ledger: str = "ledger.log"
    repo: str = "repo.lr"
    store: str = "store"
    journal: str = "journal.jsonl"
    debug_journal: bool = False
    base_dir: Path = Path(".")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 2 <= self.L <= 32:
            raise ConfigError("L must be between 2 and 32")
        if not self.lsh_width > 0:
            raise ConfigError("lsh_width must be positive")
        for name in ("master_key", "lsh_seed"):
            value = getattr(self, name)
            try:
                raw = bytes.fromhex(value)
            except ValueError:
                raise ConfigError(f"{name} is not valid hex") from None
            if len(raw) != 32:
                raise ConfigError(f"{name} must be 64 hex characters")

    @classmethod
    def generate(cls, base_dir: str | Path = ".", **overrides) -> "Config":
        return cls(secrets.token_hex(32), secrets.token_hex(32), base_dir=Path(base_dir), **overrides)

    def path(self, name: str) -> Path:
        p = Path(getattr(self, name))
        return p if p.is_absolute() else self.base_dir / p

    def params(self) -> Params:
        family = LshFamily(bytes.fromhex(self.lsh_seed), self.k, self.lsh_width)
        return Params(MasterKey.from_hex(self.master_key), family, self.L)

    def dumps(self) -> str:
        lines = ["# dvfs configuration"]
        for f in fields(self):
            if f.name == "base_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.dumps(), encoding="ascii")
        path.chmod(0o600)

    @classmethod
    def load(cls, path: str | Path, environ=None) -> "Config":
        environ = os.environ if environ is None else environ
        path = Path(path)
        values: dict[str, str] = {}
        try:
            text = path.read_text(encoding="ascii")
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found (run 'dvfs setup')") from None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
        known = {f.name: f for f in fields(cls) if f.name != "base_dir"}
        for name in known:
            env = environ.get(ENV_PREFIX + name.upper())
            if env is not None:
                values[name] = env
        unknown = set(values) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, raw in values.items():
            ftype = known[name].type
            try:
                if ftype in (int, "int"):
                    kwargs[name] = int(raw)
                elif ftype in (float, "float"):
                    kwargs[name] = float(raw)
                elif ftype in (bool, "bool"):
                    if raw.lower() not in ("true", "false", "1", "0"):
                        raise ValueError(raw)
                    kwargs[name] = raw.lower() in ("true", "1")
                else:
                    kwargs[name] = raw
            except ValueError:
                raise ConfigError(f"bad value for {name}: {raw!r}") from None
        for required in ("master_key", "lsh_seed"):
            if required not in kwargs:
                raise ConfigError(f"missing {required}")
        return cls(base_dir=path.parent, **kwargs)
