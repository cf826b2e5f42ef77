"""Run configurations and their flat key = value file format."""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ValidationError
from .harness import METHOD_FLAGS, SCENARIOS
from .timestep import IntegratorSpec

COMMANDS = ("run", "converge", "energy", "longtime", "list")
MESH_KINDS = ("interval", "quad", "triangle")


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"Expected a boolean, got {text!r}")


def _parse_sizes(text):
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as e:
        raise ValidationError(f"Expected comma-separated integers, got {text!r}") from e


@dataclass
class RunConfig:
    """Everything a CLI invocation needs; fields mirror the command-line flags."""
    command: str = "run"
    example: str = "4.1"
    flux: str = "A"
    k: Optional[int] = None
    n: List[int] = field(default_factory=list)
    mesh: Optional[str] = None
    mesh_file: Optional[str] = None
    perturb: Optional[float] = None
    mesh_seed: int = 0
    ti: Optional[str] = None
    cfl: Optional[float] = None
    dt: Optional[float] = None
    tfinal: Optional[float] = None
    alpha: Optional[float] = None
    supersonic: bool = False
    out: Optional[str] = None

    PARSERS = {
        "k": int, "n": _parse_sizes, "perturb": float, "mesh_seed": int, "cfl": float, "dt": float,
        "tfinal": float, "alpha": float, "supersonic": _parse_bool,
    }

    @classmethod
    def read(cls, filename) -> "RunConfig":
        """Reads a config file from {filename}."""
        with open(filename, "r") as f:
            return cls.parse(f.read())

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        """Parses key = value lines; '#' starts a comment, unknown keys are errors."""
        names = {f.name for f in dataclasses.fields(cls)}
        values = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"Line {number}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in names:
                raise ValidationError(f"Line {number}: unknown key {key!r}")
            if value == "":
                continue
            parser = cls.PARSERS.get(key, str)
            try:
                values[key] = parser(value)
            except ValueError as e:
                raise ValidationError(f"Line {number}: invalid value for {key}: {value!r}") from e
        return cls(**values)

    @classmethod
    def write(cls, config: "RunConfig", *, filename=None) -> str:
        """Writes {config} as key = value text. Writes to file only if filename is specified.
        Always returns the written text."""
        lines = []
        for f in dataclasses.fields(cls):
            value = getattr(config, f.name)
            if value is None or value == []:
                continue
            if f.name == "n":
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        text = "\n".join(lines) + "\n"
        if filename:
            with open(filename, "w") as f:
                f.write(text)
            logging.info("Wrote config to file %s", filename)
        return text

    def merged(self, **overrides) -> "RunConfig":
        """A copy with every non-None override applied (flags override file values)."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return dataclasses.replace(self, **changes)

    def validate(self) -> "RunConfig":
        """Checks the values against the catalogs; returns self."""
        if self.command not in COMMANDS:
            raise ValidationError(f"Unknown command {self.command!r}")
        if self.command == "list":
            return self
        if self.example not in SCENARIOS:
            raise ValidationError(f"Unknown example {self.example!r}; expected one of {', '.join(SCENARIOS)}")
        if self.flux not in METHOD_FLAGS:
            raise ValidationError(f"Unknown flux {self.flux!r}; expected one of {', '.join(METHOD_FLAGS)}")
        if self.k is not None and not 0 <= self.k <= 6:
            raise ValidationError(f"Degree k must be in 0..6, got {self.k}")
        if any(v < 1 for v in self.n):
            raise ValidationError(f"Mesh sizes must be positive, got {self.n}")
        if self.mesh is not None and self.mesh not in MESH_KINDS:
            raise ValidationError(f"Unknown mesh kind {self.mesh!r}; expected one of {', '.join(MESH_KINDS)}")
        if self.ti is not None:
            IntegratorSpec.parse(self.ti)
        for name in ("cfl", "dt", "tfinal"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"{name} must be positive, got {value}")
        if self.perturb is not None and not 0.0 <= self.perturb < 0.5:
            raise ValidationError(f"Perturbation must be in [0, 0.5), got {self.perturb}")
        return self
