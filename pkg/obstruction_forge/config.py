import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
from fractions import Fraction

from .utils import parse_rational

_SECTION = 'forge'

_SCHEDULERS = ('synchronous', 'threads', 'processes')


@dataclass(frozen=True)
class ForgeOptions:
    """Tunable numerical and execution settings shared by all operations."""

    tol: float = 1e-9
    enumeration_cap: int = 16
    max_bits: int = 4096
    max_iterations: int = 10000
    scheduler: str = 'synchronous'
    chunk_size: int = 4096
    default_constant: Fraction = Fraction(1)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive, got {}".format(self.tol))
        if self.enumeration_cap < 1:
            raise ValueError("enumeration_cap must be at least 1, got {}"
                             .format(self.enumeration_cap))
        if self.max_bits < 64:
            raise ValueError("max_bits must be at least 64")
        if self.max_iterations < 1 or self.chunk_size < 1:
            raise ValueError("max_iterations and chunk_size must be positive")
        if self.scheduler not in _SCHEDULERS:
            raise ValueError("scheduler must be one of {}, got {!r}"
                             .format(_SCHEDULERS, self.scheduler))
        if self.default_constant < 0:
            raise ValueError("default_constant must be non-negative")

    def updated(self, **kwargs):
        """Copy with the non-None keyword values replaced."""
        return replace(self, **{k: v for k, v in kwargs.items()
                                if v is not None})


_CONVERTERS = {
    'tol': float,
    'enumeration_cap': int,
    'max_bits': int,
    'max_iterations': int,
    'scheduler': str,
    'chunk_size': int,
    'default_constant': parse_rational,
}


def load_options(path=None):
    """
    Read options from an INI file with a ``[forge]`` section.

    Parameters
    ----------
    path : str or pathlib.Path, optional
        Options file. If None, the defaults are returned.

    Returns
    -------
    ForgeOptions
    """

    if path is None:
        return ForgeOptions()

    path = Path(path)
    if not path.is_file():
        raise IOError("Options file {} not found".format(path))

    parser = configparser.ConfigParser()
    parser.read_string(path.read_text())
    if not parser.has_section(_SECTION):
        return ForgeOptions()

    known = {f.name for f in fields(ForgeOptions)}
    values = {}
    for key, raw in parser.items(_SECTION):
        if key not in known:
            raise ValueError("Unknown option {!r} in {}".format(key, path))
        values[key] = _CONVERTERS[key](raw)
    return ForgeOptions(**values)
