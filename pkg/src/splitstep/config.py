"""``key = value`` experiment configuration."""
import os
from dataclasses import dataclass, fields

from .errors import ConfigError
from .integrators import SCHEMES
from .operators import KINDS, Alpha

THREADS_ENV = "SPLITSTEP_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "heat_neumann"
    m: int = 257
    extent: tuple = (0.0, 1.0)
    T: float = 1.0
    N: int = 64
    N_sweep: tuple = (16, 32, 64, 128)
    scheme: str = "sum_splitting"
    s: int = 2
    overlap_fraction: float = 0.125
    profile: str = "ramp"
    p: float = None  # None: the problem's own exponent (2 for heat_neumann)
    operator: str = "p_laplace"
    alpha: Alpha = None
    tol_abs: float = 1e-10
    tol_rel: float = 1e-10
    max_newton_iters: int = 50
    jacobian_regularization: float = 1e-12
    reference: str = "exact"
    reference_N: int = 1024
    output: str = "splitstep_out"
    threads: int = None
    record_sublevels: bool = False
    samples: int = 100
    seed: int = 0

    @property
    def dimension(self):
        return len(self.extent) // 2

    @property
    def mesh_extent(self):
        e = self.extent
        return tuple((e[2 * i], e[2 * i + 1]) for i in range(self.dimension))


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text}")
    return int(value)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text}")


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text):
    return tuple(_int(x) for x in text.replace(",", " ").split())


_PARSERS = {
    "problem": str, "m": _int, "extent": _floats, "T": float, "N": _int, "N_sweep": _ints,
    "scheme": str, "s": _int, "overlap_fraction": float, "profile": str, "p": float,
    "operator": str, "alpha": Alpha.parse, "tol_abs": float, "tol_rel": float,
    "max_newton_iters": _int, "jacobian_regularization": float, "reference": str,
    "reference_N": _int, "output": str, "threads": _int, "record_sublevels": _bool,
    "samples": _int, "seed": _int,
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}

_CHECKS = {
    "m": (lambda v: v >= 3, "needs at least 3 nodes per axis"),
    "extent": (lambda v: len(v) in (2, 4) and all(b > a for a, b in zip(v[::2], v[1::2])),
               "needs 'a, b' or 'a, b, c, d' with a < b and c < d"),
    "T": (lambda v: v > 0, "final time must be positive"),
    "N": (lambda v: v >= 1, "step count must be positive"),
    "N_sweep": (lambda v: all(n >= 1 for n in v) and len(set(v)) == len(v), "needs distinct positive step counts"),
    "scheme": (lambda v: v in SCHEMES, f"must be one of {', '.join(SCHEMES)}"),
    "s": (lambda v: v >= 1, "subdomain count must be positive"),
    "overlap_fraction": (lambda v: 0 < v < 0.5, "must lie in (0, 0.5)"),
    "profile": (lambda v: v == "ramp", "only 'ramp' is supported"),
    "p": (lambda v: v > 1, "the exponent requires p > 1"),
    "operator": (lambda v: v in KINDS and v != "zero", "must be p_laplace, porous_medium or anisotropic"),
    "tol_abs": (lambda v: v > 0, "must be positive"),
    "tol_rel": (lambda v: v > 0, "must be positive"),
    "max_newton_iters": (lambda v: v >= 1, "must be at least 1"),
    "jacobian_regularization": (lambda v: v > 0, "must be positive"),
    "reference": (lambda v: v in ("exact", "solve"), "must be 'exact' or 'solve'"),
    "reference_N": (lambda v: v >= 1, "must be positive"),
    "threads": (lambda v: v >= 1, "must be a positive integer"),
    "samples": (lambda v: v >= 1, "must be positive"),
}


def parse_config(text):
    """Parse a ``key = value`` document; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _PARSERS:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        try:
            parsed = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"malformed value '{value}': {exc}", line=lineno, key=key) from None
        check = _CHECKS.get(key)
        if check is not None and not check[0](parsed):
            raise ConfigError(f"{check[1]} (got {value})", line=lineno, key=key)
        if key == "p" and parsed < 2:
            raise ConfigError(f"the diffusion operators require p >= 2 (got {value})", line=lineno, key=key)
        values[key] = parsed
    return ExperimentConfig(**values)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def resolve_threads(cfg, environ=None):
    """Thread count: the config key wins over ``SPLITSTEP_THREADS``; default 1."""
    if cfg.threads is not None:
        return cfg.threads
    env = (os.environ if environ is None else environ).get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{env}'") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got '{env}'")
        return n
    return 1
