"""
Combinatorial encoding of a branched cover with rotation domains.

Homotopy classes of curves are identifiers, the pullback relation is input
data, and everything statically checkable is checked by ``validate_model``.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from textwrap import dedent

from natsort import natsorted

from .config import ForgeOptions
from .utils import parse_rational, format_rational, sorted_ids

logger = logging.getLogger(__name__)

NULL = 'null'
PERIPHERAL = 'peripheral'
BOUNDARY = 'boundary'

_DATA_DIR = Path(__file__).parent / 'data'


class ModelError(ValueError):
    """Error for a model that cannot be built"""


class ModelSyntaxError(ModelError):
    """Error for a model file that does not follow the grammar"""


class DanglingIdentifierError(ModelError):
    """Error for a reference to an identifier the model does not define"""


class DuplicateIdError(ModelError):
    """Error for an identifier defined twice"""


class ValidationError(ModelError):
    """Error for a model that fails a check an operation depends on"""


class CurveKind(Enum):
    CORE = 'core'
    INTERIOR = 'interior'


@dataclass(frozen=True)
class CurveClass:
    """
    A homotopy class of curves.

    ``home`` is the annulus cycle of a core curve, or the piece containing an
    interior curve (for a piece-boundary curve, any one of its two pieces).
    """

    id: str
    kind: CurveKind
    home: str
    label: str = ''

    @property
    def is_core(self):
        return self.kind is CurveKind.CORE


@dataclass(frozen=True)
class PreimageComponent:
    target: str
    degree: int
    piece: str
    coincides: str = None

    @property
    def is_curve(self):
        return self.target not in (NULL, PERIPHERAL)


@dataclass(frozen=True)
class Piece:
    id: str
    boundary: tuple
    interior_marked_points: int = 0
    rotation_disk_count: int = 0


@dataclass(frozen=True)
class PieceMapRecord:
    source: str
    image: str
    parallel_degree: int = 1


@dataclass(frozen=True)
class RotationAnnulusCycle:
    id: str
    period: int
    rotation_number: Fraction
    modulus: Fraction
    core_curves: tuple
    disk_modulus: Fraction = None

    def __post_init__(self):
        if self.disk_modulus is None:
            object.__setattr__(self, 'disk_modulus', self.modulus / 2)


@dataclass(frozen=True)
class OrbitPortrait:
    """Point map and local degrees of a renormalized map on its marked points."""

    map: dict
    local_degree: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CoverModel:
    degree: int
    curves: tuple
    pieces: tuple
    pullback: dict
    piece_map: tuple
    annuli: tuple
    rotation_disk_cycles: int = 0
    orbit_portraits: dict = field(default_factory=dict)
    claims_rational: bool = False
    grotzsch_constants: dict = field(default_factory=dict)

    __hash__ = None

    @cached_property
    def _curves_by_id(self):
        return {c.id: c for c in self.curves}

    @cached_property
    def _pieces_by_id(self):
        return {p.id: p for p in self.pieces}

    @cached_property
    def _annuli_by_core(self):
        return {core: a for a in self.annuli for core in a.core_curves}

    @cached_property
    def _sides(self):
        sides = {}
        for piece in self.pieces:
            for curve_id in piece.boundary:
                sides.setdefault(curve_id, []).append(piece.id)
        return {k: tuple(natsorted(v)) for k, v in sides.items()}

    @cached_property
    def _image(self):
        image = {}
        for record in self.piece_map:
            image.setdefault(record.source, record)
        return image

    def curve(self, curve_id):
        try:
            return self._curves_by_id[curve_id]
        except KeyError:
            raise DanglingIdentifierError("Unknown curve id {!r}"
                                          .format(curve_id))

    def piece(self, piece_id):
        try:
            return self._pieces_by_id[piece_id]
        except KeyError:
            raise DanglingIdentifierError("Unknown piece id {!r}"
                                          .format(piece_id))

    def has_curve(self, curve_id):
        return curve_id in self._curves_by_id

    @property
    def curve_ids(self):
        return tuple(c.id for c in self.curves)

    @property
    def piece_ids(self):
        return tuple(p.id for p in self.pieces)

    @property
    def core_ids(self):
        return tuple(c.id for c in self.curves if c.is_core)

    @property
    def interior_ids(self):
        return tuple(c.id for c in self.curves if not c.is_core)

    def is_core(self, curve_id):
        return self.curve(curve_id).is_core

    def is_sigma(self, curve_id):
        """True for curves lying on the boundary of some piece."""
        return curve_id in self._sides

    def sides(self, curve_id):
        """Natsorted pieces whose boundary contains the curve."""
        return self._sides.get(curve_id, ())

    def home(self, curve_id):
        return self.curve(curve_id).home

    def annulus_of(self, core_id):
        try:
            return self._annuli_by_core[core_id]
        except KeyError:
            raise DanglingIdentifierError("{!r} is not the core of any annulus "
                                          "cycle".format(core_id))

    def successor_core(self, core_id):
        annulus = self.annulus_of(core_id)
        k = annulus.core_curves.index(core_id)
        return annulus.core_curves[(k + 1) % len(annulus.core_curves)]

    def image(self, piece_id):
        """f* of a piece."""
        try:
            return self._image[piece_id].image
        except KeyError:
            raise ValidationError("Piece {!r} has no piece_map record"
                                  .format(piece_id))

    def parallel_degree(self, piece_id):
        try:
            return self._image[piece_id].parallel_degree
        except KeyError:
            raise ValidationError("Piece {!r} has no piece_map record"
                                  .format(piece_id))

    def components(self, curve_id):
        return self.pullback.get(curve_id, ())

    def d0_curves(self, piece_id):
        return tuple(c for c in self.piece(piece_id).boundary
                     if self.is_core(c))


# ---------------------------------------------------------------------------
# Parsing and serialisation


def _reject_duplicate_keys(pairs):
    result = {}
    for key, value in pairs:
        if key in result:
            raise DuplicateIdError("Duplicate key {!r}".format(key))
        result[key] = value
    return result


def _require(mapping, key, where):
    try:
        return mapping[key]
    except (KeyError, TypeError):
        raise ModelSyntaxError("{}: missing required key {!r}"
                               .format(where, key))


def _natural(value, where, minimum=0):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ModelSyntaxError("{}: expected an integer >= {}, got {!r}"
                               .format(where, minimum, value))
    return value


def _rational(value, where):
    try:
        return parse_rational(value)
    except ValueError as e:
        raise ModelSyntaxError("{}: {}".format(where, e))


def _list(value, where):
    if not isinstance(value, list):
        raise ModelSyntaxError("{}: expected a list".format(where))
    return value


def _check_unique(ids, what):
    seen = set()
    for i in ids:
        if i in seen:
            raise DuplicateIdError("Duplicate {} id {!r}".format(what, i))
        seen.add(i)


def parse_model(text):
    """
    Build a CoverModel from JSON model-file text.

    Parameters
    ----------
    text : str

    Returns
    -------
    CoverModel

    Raises
    ------
    ModelSyntaxError
        Malformed JSON (with line and column) or schema violations.
    DanglingIdentifierError
        A reference to an undefined curve, piece or annulus cycle.
    DuplicateIdError
        An identifier defined twice.
    """

    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as e:
        raise ModelSyntaxError("line {} column {}: {}"
                               .format(e.lineno, e.colno, e.msg))
    if not isinstance(data, dict):
        raise ModelSyntaxError("Top level of a model file must be an object")
    return model_from_dict(data)


def model_from_dict(data):
    """Build a CoverModel from already decoded model-file data."""

    degree = _natural(_require(data, 'degree', 'model'), 'degree', minimum=2)

    raw_annuli = _list(data.get('annuli', []), 'annuli')
    if not raw_annuli:
        raise ModelError("Herman model requires ≥1 rotation annulus cycle")

    raw_pieces = _list(_require(data, 'pieces', 'model'), 'pieces')
    piece_ids = [_require(p, 'id', 'pieces[{}]'.format(i))
                 for i, p in enumerate(raw_pieces)]
    _check_unique(piece_ids, 'piece')
    annulus_ids = [_require(a, 'id', 'annuli[{}]'.format(i))
                   for i, a in enumerate(raw_annuli)]
    _check_unique(annulus_ids, 'annulus cycle')

    curves = []
    for i, raw in enumerate(_list(_require(data, 'curves', 'model'), 'curves')):
        where = 'curves[{}]'.format(i)
        kind_name = _require(raw, 'kind', where)
        try:
            kind = CurveKind(kind_name)
        except ValueError:
            raise ModelSyntaxError("{}.kind: expected 'core' or 'interior', "
                                   "got {!r}".format(where, kind_name))
        if kind is CurveKind.CORE:
            home = _require(raw, 'annulus_cycle', where)
            if home not in annulus_ids:
                raise DanglingIdentifierError(
                    "{}: unknown annulus cycle {!r}".format(where, home))
        else:
            home = _require(raw, 'piece', where)
            if home not in piece_ids:
                raise DanglingIdentifierError(
                    "{}: unknown piece {!r}".format(where, home))
        curves.append(CurveClass(id=_require(raw, 'id', where), kind=kind,
                                 home=home, label=raw.get('label', '')))
    curve_ids = [c.id for c in curves]
    _check_unique(curve_ids, 'curve')
    known_curves = set(curve_ids)

    def curve_ref(value, where):
        if value not in known_curves:
            raise DanglingIdentifierError("{}: unknown curve id {!r}"
                                          .format(where, value))
        return value

    def piece_ref(value, where):
        if value not in piece_ids:
            raise DanglingIdentifierError("{}: unknown piece id {!r}"
                                          .format(where, value))
        return value

    pieces = []
    for i, raw in enumerate(raw_pieces):
        where = 'pieces[{}]'.format(i)
        boundary = [curve_ref(c, where + '.boundary')
                    for c in _list(_require(raw, 'boundary', where),
                                   where + '.boundary')]
        pieces.append(Piece(
            id=raw['id'], boundary=tuple(sorted_ids(boundary)),
            interior_marked_points=_natural(
                raw.get('interior_marked_points', 0),
                where + '.interior_marked_points'),
            rotation_disk_count=_natural(raw.get('rotation_disk_count', 0),
                                         where + '.rotation_disk_count')))

    raw_pullback = _require(data, 'pullback', 'model')
    if not isinstance(raw_pullback, dict):
        raise ModelSyntaxError("pullback: expected an object")
    pullback = {}
    for curve_id, raw_components in raw_pullback.items():
        where = 'pullback[{}]'.format(curve_id)
        curve_ref(curve_id, where)
        components = []
        for j, raw in enumerate(_list(raw_components, where)):
            cwhere = '{}[{}]'.format(where, j)
            target = _require(raw, 'target', cwhere)
            if target not in (NULL, PERIPHERAL):
                curve_ref(target, cwhere + '.target')
            piece = _require(raw, 'piece', cwhere)
            if piece != BOUNDARY:
                piece_ref(piece, cwhere + '.piece')
            coincides = raw.get('coincides')
            if coincides is not None:
                curve_ref(coincides, cwhere + '.coincides')
            components.append(PreimageComponent(
                target=target,
                degree=_natural(_require(raw, 'degree', cwhere),
                                cwhere + '.degree', minimum=1),
                piece=piece, coincides=coincides))
        pullback[curve_id] = tuple(components)
    missing = [c for c in curve_ids if c not in pullback]
    if missing:
        raise DanglingIdentifierError("pullback: no entry for curves {}"
                                      .format(', '.join(missing)))

    piece_map = []
    for i, raw in enumerate(_list(_require(data, 'piece_map', 'model'),
                                  'piece_map')):
        where = 'piece_map[{}]'.format(i)
        piece_map.append(PieceMapRecord(
            source=piece_ref(_require(raw, 'source', where), where),
            image=piece_ref(_require(raw, 'image', where), where),
            parallel_degree=_natural(raw.get('parallel_degree', 1),
                                     where + '.parallel_degree', minimum=1)))

    annuli = []
    for i, raw in enumerate(raw_annuli):
        where = 'annuli[{}]'.format(i)
        cores = tuple(curve_ref(c, where + '.core_curves')
                      for c in _list(_require(raw, 'core_curves', where),
                                     where + '.core_curves'))
        disk_modulus = raw.get('disk_modulus')
        annuli.append(RotationAnnulusCycle(
            id=raw['id'],
            period=_natural(_require(raw, 'period', where), where + '.period',
                            minimum=1),
            rotation_number=_rational(_require(raw, 'rotation_number', where),
                                      where + '.rotation_number'),
            modulus=_rational(_require(raw, 'modulus', where),
                              where + '.modulus'),
            core_curves=cores,
            disk_modulus=(None if disk_modulus is None
                          else _rational(disk_modulus,
                                         where + '.disk_modulus'))))

    portraits = {}
    for piece_id, raw in data.get('orbit_portraits', {}).items():
        where = 'orbit_portraits[{}]'.format(piece_id)
        piece_ref(piece_id, where)
        point_map = _require(raw, 'map', where)
        local_degree = {point: _natural(deg, '{}.local_degree[{}]'
                                        .format(where, point), minimum=1)
                        for point, deg in raw.get('local_degree', {}).items()}
        unknown = (set(point_map.values()) | set(local_degree)) - set(point_map)
        if unknown:
            raise DanglingIdentifierError(
                "{}: points {} have no image".format(
                    where, ', '.join(natsorted(unknown))))
        portraits[piece_id] = OrbitPortrait(map=dict(point_map),
                                            local_degree=local_degree)

    constants = {}
    for key, value in data.get('grotzsch_constants', {}).items():
        value = _rational(value, 'grotzsch_constants[{}]'.format(key))
        if value < 0:
            raise ModelSyntaxError("grotzsch_constants[{}]: must be "
                                   "non-negative".format(key))
        constants[key] = value

    claims_rational = data.get('claims_rational', False)
    if not isinstance(claims_rational, bool):
        raise ModelSyntaxError("claims_rational: expected true or false")

    model = CoverModel(
        degree=degree, curves=tuple(curves), pieces=tuple(pieces),
        pullback=pullback, piece_map=tuple(piece_map), annuli=tuple(annuli),
        rotation_disk_cycles=_natural(data.get('rotation_disk_cycles', 0),
                                      'rotation_disk_cycles'),
        orbit_portraits=portraits, claims_rational=claims_rational,
        grotzsch_constants=constants)
    logger.debug("Parsed model with %d curves and %d pieces",
                 len(model.curves), len(model.pieces))
    return model


def model_to_dict(m):
    """Inverse of ``model_from_dict``."""

    def curve_dict(c):
        key = 'annulus_cycle' if c.is_core else 'piece'
        return {'id': c.id, 'kind': c.kind.value, key: c.home,
                'label': c.label}

    def component_dict(a):
        out = {'target': a.target, 'degree': a.degree, 'piece': a.piece}
        if a.coincides is not None:
            out['coincides'] = a.coincides
        return out

    data = {
        'degree': m.degree,
        'curves': [curve_dict(c) for c in m.curves],
        'pieces': [{'id': p.id, 'boundary': list(p.boundary),
                    'interior_marked_points': p.interior_marked_points,
                    'rotation_disk_count': p.rotation_disk_count}
                   for p in m.pieces],
        'pullback': {c: [component_dict(a) for a in m.pullback[c]]
                     for c in m.curve_ids},
        'piece_map': [{'source': r.source, 'image': r.image,
                       'parallel_degree': r.parallel_degree}
                      for r in m.piece_map],
        'annuli': [{'id': a.id, 'period': a.period,
                    'rotation_number': format_rational(a.rotation_number),
                    'modulus': format_rational(a.modulus),
                    'disk_modulus': format_rational(a.disk_modulus),
                    'core_curves': list(a.core_curves)}
                   for a in m.annuli],
        'rotation_disk_cycles': m.rotation_disk_cycles,
        'claims_rational': m.claims_rational,
    }
    if m.orbit_portraits:
        data['orbit_portraits'] = {
            k: {'map': dict(v.map), 'local_degree': dict(v.local_degree)}
            for k, v in m.orbit_portraits.items()}
    if m.grotzsch_constants:
        data['grotzsch_constants'] = {
            k: format_rational(v) for k, v in m.grotzsch_constants.items()}
    return data


def serialize_model(m):
    return json.dumps(model_to_dict(m), indent=2, ensure_ascii=False) + '\n'


def open_model(path):
    """Read and parse a model file."""
    path = Path(path)
    if not path.is_file():
        raise IOError("Model file {} not found".format(path))
    return parse_model(path.read_text())


def open_example_model(name):
    """
    Load one of the models shipped with the package.

    Parameters
    ----------
    name : {'SHI', 'TWO-RING'}
    """
    path = _DATA_DIR / '{}.model'.format(name)
    if not path.is_file():
        available = natsorted(p.stem for p in _DATA_DIR.glob('*.model'))
        raise IOError(dedent("""No example model named {!r}; available models
                             are {}""".format(name, ', '.join(available))))
    return open_model(path)


# ---------------------------------------------------------------------------
# Validation

REGISTERED_CHECKS = {}


def register_check(name):
    """
    Register a validation check.

    Used as a decorator on a function ``check(m, options)`` returning a list
    of ``CheckResult``.
    """

    def wrapper(check):
        if name in REGISTERED_CHECKS:
            raise ValueError("A check named {} is already registered"
                             .format(name))
        REGISTERED_CHECKS[name] = check
        return check
    return wrapper


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    location: str = ''
    message: str = ''

    def to_dict(self):
        return {'name': self.name, 'passed': self.passed,
                'location': self.location, 'message': self.message}


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self, name=None):
        return [c for c in self.checks
                if not c.passed and (name is None or c.name == name)]

    def names(self):
        return sorted_ids(c.name for c in self.checks)

    def to_dict(self):
        return {'passed': self.passed,
                'checks': [c.to_dict() for c in self.checks]}

    def to_text(self):
        lines = []
        for name in self.names():
            entries = [c for c in self.checks if c.name == name]
            failed = [c for c in entries if not c.passed]
            status = 'FAIL' if failed else 'pass'
            lines.append('{:<20} {} ({} entries)'.format(name, status,
                                                         len(entries)))
            for c in failed:
                lines.append('    {}: {}'.format(c.location, c.message))
        lines.append('valid' if self.passed else 'INVALID')
        return '\n'.join(lines)


def validate_model(m, options=None):
    """
    Run every registered check on a model.

    Failures are report entries, never exceptions.

    Parameters
    ----------
    m : CoverModel
    options : ForgeOptions, optional

    Returns
    -------
    ValidationReport
    """

    options = ForgeOptions() if options is None else options
    results = []
    for name, check in REGISTERED_CHECKS.items():
        try:
            results.extend(check(m, options))
        except (ModelError, ValueError, KeyError) as e:
            results.append(CheckResult(name, False, 'model', str(e)))
    for result in results:
        if not result.passed:
            logger.info("Check %s failed at %s: %s", result.name,
                        result.location, result.message)
    return ValidationReport(checks=tuple(results))


def _result(name, passed, location, message=''):
    return CheckResult(name=name, passed=bool(passed), location=location,
                       message='' if passed else message)


@register_check('degree-sum')
def _check_degree_sum(m, options):
    results = []
    for curve_id in m.curve_ids:
        total = sum(a.degree for a in m.components(curve_id))
        results.append(_result(
            'degree-sum', total == m.degree, 'pullback[{}]'.format(curve_id),
            'component degrees sum to {}, expected {}'.format(total,
                                                              m.degree)))
    return results


@register_check('piece-count')
def _check_piece_count(m, options):
    results = []
    for piece in m.pieces:
        count = (piece.interior_marked_points + len(piece.boundary)
                 + len(m.d0_curves(piece.id)))
        results.append(_result(
            'piece-count', count >= 3, 'pieces[{}]'.format(piece.id),
            'marked points plus boundary count is {}, need at least 3'
            .format(count)))
    return results


@register_check('rotation-budget')
def _check_rotation_budget(m, options):
    used = m.rotation_disk_cycles + 2 * len(m.annuli)
    return [_result('rotation-budget', used <= 2 * m.degree - 2, 'model',
                    'rotation_disk_cycles + 2 #annuli = {} exceeds {}'
                    .format(used, 2 * m.degree - 2))]


@register_check('piece-map-function')
def _check_piece_map_function(m, options):
    results = []
    for piece_id in m.piece_ids:
        count = sum(1 for r in m.piece_map if r.source == piece_id)
        results.append(_result(
            'piece-map-function', count == 1, 'piece_map[{}]'.format(piece_id),
            '{} records for this source, expected exactly one'.format(count)))
    return results


@register_check('parallel-degree')
def _check_parallel_degree(m, options):
    results = []
    for target in m.piece_ids:
        total = sum(m.parallel_degree(s) for s in m.piece_ids
                    if m.image(s) == target)
        results.append(_result(
            'parallel-degree', total <= m.degree,
            'piece_map[->{}]'.format(target),
            'parallel degrees onto this piece sum to {}, above degree {}'
            .format(total, m.degree)))
    return results


@register_check('annulus-coherence')
def _check_annulus_coherence(m, options):
    results = []
    for annulus in m.annuli:
        where = 'annuli[{}]'.format(annulus.id)
        problems = []
        cores = annulus.core_curves
        if len(cores) != annulus.period:
            problems.append('{} core curves for period {}'
                            .format(len(cores), annulus.period))
        for core in cores:
            curve = m.curve(core)
            if not curve.is_core or curve.home != annulus.id:
                problems.append('{} is not a core of this cycle'.format(core))
        if not 0 < annulus.rotation_number < 1:
            problems.append('rotation number {} not in (0, 1)'
                            .format(annulus.rotation_number))
        if annulus.modulus <= 0 or annulus.disk_modulus <= 0:
            problems.append('moduli must be positive')
        elif 2 * annulus.disk_modulus > annulus.modulus:
            problems.append('disk_modulus {} exceeds half the modulus {}'
                            .format(annulus.disk_modulus, annulus.modulus))
        for k, core in enumerate(cores):
            successor = cores[(k + 1) % len(cores)]
            if not any(a.coincides == core and a.target == core
                       and a.degree == 1 and a.piece == BOUNDARY
                       for a in m.components(successor)):
                problems.append('{} is not a coinciding degree-1 component '
                                'of {}'.format(core, successor))
        results.append(_result('annulus-coherence', not problems, where,
                               '; '.join(problems)))
    return results


@register_check('core-membership')
def _check_core_membership(m, options):
    results = []
    for core in m.core_ids:
        count = sum(a.core_curves.count(core) for a in m.annuli)
        results.append(_result(
            'core-membership', count == 1, 'curves[{}]'.format(core),
            'listed in {} annulus cycles, expected one'.format(count)))
    return results


def _is_track_curve(m, curve_id):
    return not m.is_core(curve_id) and not m.is_sigma(curve_id)


@register_check('component')
def _check_components(m, options):
    results = []
    for curve_id in m.curve_ids:
        for j, a in enumerate(m.components(curve_id)):
            where = 'pullback[{}][{}]'.format(curve_id, j)
            problem = None
            if a.coincides is not None:
                if a.target != a.coincides or a.piece != BOUNDARY:
                    problem = ('coinciding component must target {} and lie '
                               'on the boundary'.format(a.coincides))
            elif a.piece == BOUNDARY:
                problem = 'only coinciding components lie on the boundary'
            elif a.is_curve:
                if m.is_core(a.target) or m.is_sigma(a.target):
                    if a.piece not in m.sides(a.target):
                        problem = ('component homotopic to boundary curve {} '
                                   'must lie in one of {}'
                                   .format(a.target, list(m.sides(a.target))))
                elif a.piece != m.home(a.target):
                    problem = ('component homotopic to {} must lie in its '
                               'piece {}'.format(a.target, m.home(a.target)))
            results.append(_result('component', problem is None, where,
                                   problem))
    return results


@register_check('track')
def _check_track(m, options):
    results = []
    for curve_id in m.interior_ids:
        for j, a in enumerate(m.components(curve_id)):
            if not a.is_curve or not _is_track_curve(m, a.target):
                continue
            where = 'pullback[{}][{}]'.format(curve_id, j)
            if not _is_track_curve(m, curve_id):
                results.append(_result(
                    'track', False, where,
                    'boundary curve {} has a preimage inside piece {}'
                    .format(curve_id, m.home(a.target))))
                continue
            image = m.image(m.home(a.target))
            results.append(_result(
                'track', image == m.home(curve_id), where,
                'preimage piece {} maps to {}, not to {}'
                .format(m.home(a.target), image, m.home(curve_id))))
    return results


@register_check('track-degree')
def _check_track_degree(m, options):
    results = []
    for curve_id in m.interior_ids:
        if not _is_track_curve(m, curve_id):
            continue
        totals = {}
        for a in m.components(curve_id):
            if a.is_curve and _is_track_curve(m, a.target):
                totals[a.piece] = totals.get(a.piece, 0) + a.degree
        for piece_id in natsorted(totals):
            allowed = m.parallel_degree(piece_id)
            results.append(_result(
                'track-degree', totals[piece_id] <= allowed,
                'pullback[{}]@{}'.format(curve_id, piece_id),
                'degree {} inside the piece exceeds its parallel degree {}'
                .format(totals[piece_id], allowed)))
    return results


@register_check('boundary-sigma')
def _check_boundary_sigma(m, options):
    from .multicurve import generate_gamma

    gamma = set(generate_gamma(m))
    on_boundary = {c for p in m.pieces for c in p.boundary}
    expected = gamma | set(m.core_ids)
    results = [_result(
        'boundary-sigma', on_boundary == expected, 'pieces',
        'piece boundaries {} differ from cores and generated curves {}'
        .format(natsorted(on_boundary), natsorted(expected)))]
    for curve_id in natsorted(on_boundary):
        count = len(m.sides(curve_id))
        results.append(_result(
            'boundary-sigma', count == 2, 'curves[{}]'.format(curve_id),
            'bounds {} pieces, expected two'.format(count)))
    return results


@register_check('forward-image')
def _check_forward_image(m, options):
    from .multicurve import generate_gamma_levels, parents_of

    results = []
    levels = generate_gamma_levels(m)
    previous = m.core_ids
    for level in levels:
        for curve_id in level:
            parents = [p for p in previous
                       if curve_id in {a.target for a in m.components(p)}]
            results.append(_result(
                'forward-image', len(parents) == 1,
                'curves[{}]'.format(curve_id),
                'preimage of {} curves of the previous generation {}'
                .format(len(parents), parents)))
        previous = level

    # curves of Γ may also be homotopic preimages of other Γ curves, their
    # image is the generating parent checked above
    generated = {c for level in levels for c in level}
    for curve_id in m.interior_ids:
        if curve_id in generated:
            continue
        sources = sorted_ids(c for c in m.curve_ids
                             if any(a.target == curve_id
                                    for a in m.components(c)))
        if sources:
            results.append(_result(
                'forward-image', len(sources) == 1,
                'curves[{}]'.format(curve_id),
                'preimage of {} distinct curves {}'.format(len(sources),
                                                            sources)))

    for curve_id in m.curve_ids:
        for j, a in enumerate(m.components(curve_id)):
            if a.coincides is None:
                continue
            where = 'pullback[{}][{}]'.format(curve_id, j)
            if m.is_core(a.coincides):
                expected = [m.successor_core(a.coincides)]
            elif a.coincides in generated:
                expected = parents_of(m, a.coincides)
            else:
                expected = []
            results.append(_result(
                'forward-image', expected == [curve_id], where,
                'coinciding component {} does not come from its forward image'
                .format(a.coincides)))
    return results


def _orbit_period(m, piece_id):
    """Period of a piece under f*, or None when it is strictly preperiodic."""
    current = piece_id
    for step in range(1, len(m.pieces) + 1):
        current = m.image(current)
        if current == piece_id:
            return step
    return None


@register_check('periodic-d0')
def _check_periodic_d0(m, options):
    results = []
    for piece in m.pieces:
        d0 = m.d0_curves(piece.id)
        if not d0:
            continue
        where = 'pieces[{}]'.format(piece.id)
        problems = []
        period = _orbit_period(m, piece.id)
        image = m.image(piece.id)
        if period is None:
            problems.append('carries annulus cores but is not f*-periodic')
        if len(m.d0_curves(image)) != len(d0):
            problems.append('{} core boundaries map to a piece with {}'
                            .format(len(d0), len(m.d0_curves(image))))
        for core in d0:
            if m.successor_core(core) not in m.piece(image).boundary:
                problems.append('image core {} does not bound {}'
                                .format(m.successor_core(core), image))
            annulus_period = m.annulus_of(core).period
            if period is not None and annulus_period % period:
                problems.append('period {} does not divide annulus period {}'
                                .format(period, annulus_period))
        results.append(_result('periodic-d0', not problems, where,
                               '; '.join(problems)))
    return results


@register_check('mcmullen-hint')
def _check_mcmullen_hint(m, options):
    from .multicurve import enumerate_stable, EnumerationCapError

    if not m.claims_rational:
        return []
    try:
        found = enumerate_stable(m, options=options)
    except EnumerationCapError as e:
        return [CheckResult('mcmullen-hint', True, 'model',
                            'skipped: {}'.format(e))]
    results = []
    for multicurve, estimate in found:
        results.append(_result(
            'mcmullen-hint', estimate <= 1 + options.tol,
            'multicurve{{{}}}'.format(','.join(multicurve)),
            'leading eigenvalue {:.6g} > 1 contradicts the rational claim'
            .format(estimate)))
    return results
