import json
import logging
import os
from fractions import Fraction
from warnings import warn

from natsort import natsorted

LOG_ENV_VAR = 'OBSTRUCTION_FORGE_LOG'

logger = logging.getLogger(__name__)


def configure_logging(level=None):
    """
    Attach a single stream handler to the package logger.

    Parameters
    ----------
    level : str or int, optional
        Logging level. If not given, the value of the environment variable
        OBSTRUCTION_FORGE_LOG is used, falling back to WARNING.

    Returns
    -------
    logging.Logger
    """

    if level is None:
        level = os.environ.get(LOG_ENV_VAR, 'WARNING')
    resolved = _resolve_level(level)

    package_logger = logging.getLogger('obstruction_forge')
    package_logger.setLevel(resolved)
    if not any(getattr(h, '_forge_handler', False)
               for h in package_logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(
            '%(asctime)s %(name)s %(levelname)s: %(message)s'))
        handler._forge_handler = True
        package_logger.addHandler(handler)
    return package_logger


def _resolve_level(level):
    if isinstance(level, int):
        return level
    level = str(level).strip()
    if level.isdigit():
        return int(level)
    resolved = logging.getLevelName(level.upper())
    if not isinstance(resolved, int):
        warn("Unrecognised log level {!r}, using WARNING".format(level))
        return logging.WARNING
    return resolved


def sorted_ids(ids):
    """Canonical (natural) ordering of curve and piece identifiers."""
    return natsorted(set(ids))


def parse_rational(value):
    """
    Read an exact rational from a "p/q" string, an integer or a Fraction.

    Floats are rejected, since every quantity in a model file is exact.
    """

    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("Expected a rational, got {!r}".format(value))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError("Malformed rational {!r}, expected 'p/q'"
                             .format(value))
    raise ValueError("Expected a rational as a 'p/q' string, got {!r}"
                     .format(value))


def format_rational(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return '{}/{}'.format(value.numerator, value.denominator)


def _to_structured(obj):
    if hasattr(obj, 'to_dict'):
        return _to_structured(obj.to_dict())
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _to_structured(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_structured(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [_to_structured(v) for v in natsorted(obj)]
    if isinstance(obj, float):
        return float('{:.12g}'.format(obj))
    return obj


def dump_structured(obj):
    """
    Serialise a report to canonical JSON text.

    Exact rationals become "p/q" strings, floats are rounded to 12
    significant digits and keys are sorted, so equal reports give
    byte-identical output.
    """
    return json.dumps(_to_structured(obj), sort_keys=True, indent=2,
                      ensure_ascii=False) + '\n'
