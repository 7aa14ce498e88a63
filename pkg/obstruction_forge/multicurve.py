import logging
from dataclasses import dataclass
from fractions import Fraction

import dask
import numpy as np
import xarray as xr
from natsort import natsorted

from .config import ForgeOptions
from .model import DanglingIdentifierError, ValidationError
from .spectral import NonnegMatrix, power_lambda, is_contracting
from .utils import sorted_ids

logger = logging.getLogger(__name__)


class UnstableMulticurveError(ValueError):
    """Error for an operation that needs a stable multicurve"""


class EnumerationCapError(ValueError):
    """Error for enumerating more curves than the configured cap"""


@dataclass(frozen=True)
class Multicurve:
    """
    A set of interior curve ids, stored in natural order.

    Parameters
    ----------
    curves : iterable of str
    """

    curves: tuple = ()

    def __post_init__(self):
        curves = list(self.curves)
        if len(set(curves)) != len(curves):
            raise ValueError("Multicurve has duplicate curve ids: {}"
                             .format(curves))
        object.__setattr__(self, 'curves', tuple(natsorted(curves)))

    @classmethod
    def from_ids(cls, ids, system):
        """Build a multicurve, checking every id against a model."""
        multicurve = cls(tuple(ids))
        for curve_id in multicurve:
            if not system.has_curve(curve_id):
                raise DanglingIdentifierError("Unknown curve id {!r}"
                                              .format(curve_id))
            if system.is_core(curve_id):
                raise ValueError("Core curve {!r} cannot belong to a "
                                 "multicurve".format(curve_id))
        return multicurve

    @classmethod
    def parse(cls, text, system):
        """Read a comma-separated list such as "g1,g2,u0"."""
        ids = [part.strip() for part in text.split(',') if part.strip()]
        return cls.from_ids(ids, system)

    def __iter__(self):
        return iter(self.curves)

    def __len__(self):
        return len(self.curves)

    def __contains__(self, curve_id):
        return curve_id in self.curves

    def __str__(self):
        if not self.curves:
            return '∅'
        return '{' + ','.join(self.curves) + '}'

    def to_dict(self):
        return list(self.curves)


def _counted_targets(system, curve_id):
    """Non-exempt (target, degree) pairs of a curve's pullback."""
    for a in system.components(curve_id):
        if a.is_curve and not system.is_core(a.target):
            yield a.target, a.degree


def _check_known(system, gamma):
    for curve_id in gamma:
        if not system.has_curve(curve_id):
            raise DanglingIdentifierError("Unknown curve id {!r}"
                                          .format(curve_id))


def transition_array(system, gamma):
    """
    Transition matrix as a labelled DataArray.

    Entry (target=x, source=y) is the sum of 1/degree over the components of
    the pullback of y that are homotopic to x.

    Parameters
    ----------
    system : CoverModel or RenormalizedModel
    gamma : Multicurve or sequence of str
        The order of ``gamma`` fixes the order of rows and columns.

    Returns
    -------
    xarray.DataArray
        Object-dtype array of Fractions with dims ("target", "source").
    """

    ids = list(gamma)
    _check_known(system, ids)
    index = {c: i for i, c in enumerate(ids)}
    W = np.full((len(ids), len(ids)), Fraction(0), dtype=object)
    for j, source in enumerate(ids):
        for target, degree in _counted_targets(system, source):
            if target in index:
                W[index[target], j] += Fraction(1, degree)
    return xr.DataArray(W, dims=('target', 'source'),
                        coords={'target': ids, 'source': ids})


def as_matrix(da):
    """NonnegMatrix holding the values of a labelled transition array."""
    return NonnegMatrix(da.values, shape=da.shape)


def transition_matrix(system, gamma):
    return as_matrix(transition_array(system, gamma))


def is_stable(system, gamma):
    """
    True iff every non-peripheral preimage of a member is a member.

    Null, peripheral and core targets are exempt.
    """

    members = set(gamma)
    _check_known(system, members)
    return all(target in members
               for curve_id in members
               for target, _ in _counted_targets(system, curve_id))


def generate_gamma_levels(m):
    """
    Generations of curves produced by pulling back the annulus cores.

    Returns
    -------
    list of tuple of str
        Level n holds the curves first reached after n + 1 pullbacks; the
        levels are pairwise disjoint.
    """

    collected = set()
    levels = []
    frontier = m.core_ids
    while True:
        new = set()
        for curve_id in frontier:
            for a in m.components(curve_id):
                if not a.is_curve:
                    continue
                if not m.has_curve(a.target):
                    raise DanglingIdentifierError(
                        "Pullback of {} names unknown curve {!r}"
                        .format(curve_id, a.target))
                if not m.is_core(a.target) and a.target not in collected:
                    new.add(a.target)
        if not new:
            return levels
        level = tuple(natsorted(new))
        levels.append(level)
        collected |= new
        frontier = level


def generate_gamma(m):
    """The canonical stable multicurve generated by the annulus cores."""
    levels = generate_gamma_levels(m)
    gamma = Multicurve(tuple(c for level in levels for c in level))
    logger.debug("Generated %s in %d levels", gamma, len(levels))
    return gamma


def gamma_level(m, curve_id, levels=None):
    """Generation index of a curve of Γ (0 for Γ_1), or None."""
    levels = generate_gamma_levels(m) if levels is None else levels
    for n, level in enumerate(levels):
        if curve_id in level:
            return n
    return None


def parents_of(m, curve_id, levels=None):
    """Curves of the previous generation whose pullback contains the curve."""
    levels = generate_gamma_levels(m) if levels is None else levels
    n = gamma_level(m, curve_id, levels)
    if n is None:
        return []
    previous = m.core_ids if n == 0 else levels[n - 1]
    return natsorted(p for p in previous
                     if any(a.target == curve_id for a in m.components(p)))


def forward_image(m, curve_id, levels=None):
    """
    The curve f maps the given curve onto.

    Cores map to the next core of their cycle and curves of Γ to their
    unique generating parent; other curves must be a preimage of exactly one
    curve.
    """

    if m.is_core(curve_id):
        return m.successor_core(curve_id)
    levels = generate_gamma_levels(m) if levels is None else levels
    if gamma_level(m, curve_id, levels) is not None:
        parents = parents_of(m, curve_id, levels)
    else:
        parents = sorted_ids(c for c in m.curve_ids
                             if any(a.target == curve_id
                                    for a in m.components(c)))
    if len(parents) != 1:
        raise ValidationError("Curve {} has forward images {}, expected one"
                              .format(curve_id, parents))
    return parents[0]


def pullback_closure(system, ids):
    """Smallest stable multicurve containing the given curves."""
    closed = set(ids)
    frontier = set(ids)
    while frontier:
        reached = {t for c in frontier for t, _ in _counted_targets(system, c)}
        frontier = reached - closed
        closed |= frontier
    return Multicurve(tuple(closed))


def lift_obstruction(m, witness):
    """
    Obstruction of the whole map built from an obstruction of a renormalized
    model: the pullback closure of the witness together with Γ.
    """
    return pullback_closure(m, list(witness) + list(generate_gamma(m)))


@dataclass(frozen=True)
class RefinementReport:
    original: Multicurve
    refined: Multicurve
    steps: int
    lambda_original: float
    lambda_refined: float
    agree: bool

    def to_dict(self):
        return {'original': self.original, 'refined': self.refined,
                'steps': self.steps, 'lambda_original': self.lambda_original,
                'lambda_refined': self.lambda_refined, 'agree': self.agree}


def essential_refinement(m, C0, tol=1e-9, options=None):
    """
    Shrink a stable multicurve to the curves reached by its own pullbacks.

    Iterates C_(n+1) = targets of the pullbacks of C_n, which decreases and
    stabilises at a multicurve with the same leading eigenvalue.

    Returns
    -------
    (Multicurve, RefinementReport)
    """

    options = ForgeOptions() if options is None else options
    if not is_stable(m, C0):
        raise UnstableMulticurveError("{} is not stable".format(C0))

    current = set(C0)
    steps = 0
    while True:
        reached = {t for c in current for t, _ in _counted_targets(m, c)}
        if reached == current:
            break
        current = reached
        steps += 1
    refined = Multicurve(tuple(current))

    before = power_lambda(transition_matrix(m, C0), tol=tol,
                          max_iterations=options.max_iterations)
    after = power_lambda(transition_matrix(m, refined), tol=tol,
                         max_iterations=options.max_iterations)
    report = RefinementReport(original=Multicurve(tuple(C0)), refined=refined,
                              steps=steps, lambda_original=before,
                              lambda_refined=after,
                              agree=abs(before - after) <= 2 * tol)
    return refined, report


def _stable_in_range(system, ids, needs, start, stop, tol, max_iterations):
    found = []
    for mask in range(start, stop):
        outside = ~mask
        if any(mask >> i & 1 and needs[i] & outside
               for i in range(len(ids))):
            continue
        members = tuple(ids[i] for i in range(len(ids)) if mask >> i & 1)
        estimate = power_lambda(transition_matrix(system, members), tol=tol,
                                max_iterations=max_iterations)
        found.append((members, estimate))
    return found


def enumerate_stable(system, options=None):
    """
    Every stable multicurve in the curve universe, with its leading eigenvalue.

    Subsets are enumerated by bit mask in chunks evaluated as dask tasks.

    Parameters
    ----------
    system : CoverModel or RenormalizedModel
    options : ForgeOptions, optional

    Returns
    -------
    list of (Multicurve, float)
        Ordered by size, then by the natural order of the members.

    Raises
    ------
    EnumerationCapError
    """

    options = ForgeOptions() if options is None else options
    ids = tuple(natsorted(c for c in system.interior_ids))
    if len(ids) > options.enumeration_cap:
        raise EnumerationCapError(
            "{} interior curves exceed the enumeration cap of {}"
            .format(len(ids), options.enumeration_cap))

    index = {c: i for i, c in enumerate(ids)}
    needs = []
    for curve_id in ids:
        bits = 0
        for target, _ in _counted_targets(system, curve_id):
            bits |= 1 << index[target]
        needs.append(bits)

    total = 1 << len(ids)
    tasks = [dask.delayed(_stable_in_range)(
                 system, ids, needs, start,
                 min(start + options.chunk_size, total), options.tol,
                 options.max_iterations)
             for start in range(0, total, options.chunk_size)]
    logger.debug("Enumerating %d subsets in %d tasks", total, len(tasks))
    chunks = dask.compute(*tasks, scheduler=options.scheduler)

    found = [item for chunk in chunks for item in chunk]
    found.sort(key=lambda item: (len(item[0]),
                                 [index[c] for c in item[0]]))
    return [(Multicurve(members), estimate) for members, estimate in found]


def find_obstructions(system, options=None):
    """
    Stable multicurves whose leading eigenvalue is at least 1.

    The decision is exact (not is_contracting); the float estimate is kept
    for reporting.
    """

    options = ForgeOptions() if options is None else options
    return [(multicurve, estimate)
            for multicurve, estimate in enumerate_stable(system, options)
            if not is_contracting(transition_matrix(system, multicurve),
                                  max_bits=options.max_bits)]
