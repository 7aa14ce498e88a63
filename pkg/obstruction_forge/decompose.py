"""
Piece dynamics f*, boundary classes and the renormalized maps of piece cycles.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce

import dask
import networkx as nx
from natsort import natsorted

from .config import ForgeOptions
from .model import (NULL, PERIPHERAL, BOUNDARY, CheckResult, PreimageComponent,
                    ValidationError, DanglingIdentifierError)
from .multicurve import generate_gamma, transition_matrix
from .spectral import is_contracting

logger = logging.getLogger(__name__)


class BoundaryClass(Enum):
    D0 = 'D0'
    D1 = 'D1'
    D2 = 'D2'


class RenormalizationKind(Enum):
    SIEGEL = 'Siegel'
    THURSTON = 'Thurston'
    HOMEOMORPHISM = 'Homeomorphism'


@dataclass(frozen=True)
class Cycle:
    """A cycle of f*, listed along f* from its natsort-first member."""

    representative: str
    members: tuple

    @property
    def id(self):
        return self.representative

    @property
    def period(self):
        return len(self.members)

    def step(self, piece_id):
        return self.members.index(piece_id)

    def to_dict(self):
        return {'representative': self.representative, 'period': self.period,
                'members': list(self.members)}


@dataclass(frozen=True)
class PieceDynamics:
    map: dict
    parallel_degree: dict
    cycles: tuple
    tails: tuple
    boundary_class: dict

    __hash__ = None

    def cycle_of(self, piece_id):
        for cycle in self.cycles:
            if piece_id in cycle.members:
                return cycle
        return None

    def graph(self):
        """The f* digraph, edges labelled with parallel degrees."""
        graph = nx.DiGraph(name='piece_dynamics')
        graph.add_nodes_from(natsorted(self.map))
        for source in natsorted(self.map):
            graph.add_edge(source, self.map[source],
                           parallel_degree=self.parallel_degree[source])
        return graph

    def to_dict(self):
        return {
            'map': dict(self.map),
            'cycles': [c.to_dict() for c in self.cycles],
            'tails': list(self.tails),
            'boundary_class': {'{}/{}'.format(p, c): k.value
                               for (p, c), k in natsorted(
                                   self.boundary_class.items(),
                                   key=lambda item: item[0])},
        }


def _coinciding_curves(m):
    return {a.coincides for c in m.curve_ids for a in m.components(c)
            if a.coincides is not None}


def piece_dynamics(m):
    """
    Decompose the pieces of a model into cycles and strictly preperiodic tails.

    Parameters
    ----------
    m : CoverModel

    Returns
    -------
    PieceDynamics

    Raises
    ------
    ValidationError
        If the piece map is not a function, or a piece carrying annulus
        cores is strictly preperiodic, or the number of core boundaries
        changes along a cycle.
    """

    image = {}
    degrees = {}
    for record in m.piece_map:
        if record.source in image:
            raise ValidationError("piece_map has two records for {}"
                                  .format(record.source))
        image[record.source] = record.image
        degrees[record.source] = record.parallel_degree
    missing = [p for p in m.piece_ids if p not in image]
    if missing:
        raise ValidationError("piece_map has no record for {}"
                              .format(', '.join(missing)))

    graph = nx.DiGraph()
    graph.add_nodes_from(m.piece_ids)
    graph.add_edges_from(image.items())

    cycles = []
    for members in nx.simple_cycles(graph):
        representative = natsorted(members)[0]
        ordered = [representative]
        while image[ordered[-1]] != representative:
            ordered.append(image[ordered[-1]])
        cycles.append(Cycle(representative=representative,
                            members=tuple(ordered)))
    cycles = natsorted(cycles, key=lambda c: c.representative)
    on_cycle = {p for c in cycles for p in c.members}
    tails = tuple(natsorted(p for p in m.piece_ids if p not in on_cycle))

    for piece_id in tails:
        current = piece_id
        for _ in range(len(m.pieces)):
            current = image[current]
        if current not in on_cycle:
            raise ValidationError("Piece {} does not reach a cycle"
                                  .format(piece_id))

    coinciding = _coinciding_curves(m)
    boundary_class = {}
    for piece in m.pieces:
        for curve_id in piece.boundary:
            if m.is_core(curve_id):
                kind = BoundaryClass.D0
            elif curve_id in coinciding:
                kind = BoundaryClass.D2
            else:
                kind = BoundaryClass.D1
            boundary_class[(piece.id, curve_id)] = kind

    for piece_id in tails:
        if m.d0_curves(piece_id):
            raise ValidationError("Piece {} carries annulus cores but is "
                                  "strictly preperiodic".format(piece_id))
    for cycle in cycles:
        counts = {len(m.d0_curves(p)) for p in cycle.members}
        if len(counts) > 1:
            raise ValidationError("Number of core boundaries changes along "
                                  "the cycle of {}".format(cycle.id))

    return PieceDynamics(map=image, parallel_degree=degrees,
                         cycles=tuple(cycles), tails=tails,
                         boundary_class=boundary_class)


@dataclass(frozen=True)
class RotationDisk:
    curve: str
    annulus: str
    period: int
    rotation_number: object

    def to_dict(self):
        return {'curve': self.curve, 'annulus': self.annulus,
                'period': self.period,
                'rotation_number': self.rotation_number}


@dataclass(frozen=True)
class DroppedComponent:
    curve: str
    step: int
    source: str
    component: PreimageComponent


@dataclass(frozen=True)
class RenormalizedModel:
    """
    The marked sphere of a piece cycle, with the pullback of the first
    return map composed along the cycle.
    """

    cycle: Cycle
    kind: RenormalizationKind
    degree: int
    marked_points: int
    rotation_disks: tuple
    inherited_rotation_disks: int
    curve_universe: tuple
    pullback: dict
    tracked_degree: dict
    dropped: tuple = field(default=(), compare=False)

    __hash__ = None

    @property
    def interior_ids(self):
        return self.curve_universe

    def has_curve(self, curve_id):
        return curve_id in self.curve_universe

    def is_core(self, curve_id):
        if curve_id not in self.curve_universe:
            raise DanglingIdentifierError(
                "{!r} is not a curve of the renormalized model of {}"
                .format(curve_id, self.cycle.id))
        return False

    def components(self, curve_id):
        return self.pullback.get(curve_id, ())

    def fully_tracked(self, curve_id):
        return self.tracked_degree[curve_id] == self.degree

    def to_dict(self):
        return {
            'cycle': self.cycle.to_dict(),
            'kind': self.kind.value,
            'degree': self.degree,
            'marked_points': self.marked_points,
            'rotation_disks': [d.to_dict() for d in self.rotation_disks],
            'inherited_rotation_disks': self.inherited_rotation_disks,
            'curve_universe': list(self.curve_universe),
            'pullback': {c: ['{}:{}'.format(a.target, a.degree)
                             for a in self.pullback[c]]
                         for c in self.curve_universe},
        }


def _track_curves(m, piece_id):
    return tuple(natsorted(c for c in m.interior_ids
                           if m.home(c) == piece_id and not m.is_sigma(c)))


def _remaining_degree(m, members, step):
    """Product of parallel degrees over the chase steps after ``step``."""
    p = len(members)
    return reduce(lambda acc, t: acc * m.parallel_degree(members[(-t) % p]),
                  range(step + 1, p + 1), 1)


def renormalize(m, cycle, dynamics=None):
    """
    Build the renormalized model of a piece cycle.

    Each interior curve of the representative piece is chased back through
    the cycle, multiplying degrees along chains. Targets that are boundary
    curves of the piece being crossed become peripheral; components outside
    the cycle's track are dropped.

    Parameters
    ----------
    m : CoverModel
    cycle : Cycle
        A cycle of ``piece_dynamics(m)``.
    dynamics : PieceDynamics, optional

    Returns
    -------
    RenormalizedModel
    """

    dynamics = piece_dynamics(m) if dynamics is None else dynamics
    if cycle not in dynamics.cycles:
        raise ValidationError("Cycle of {} is not a cycle of the piece "
                              "dynamics".format(cycle.id))

    members = cycle.members
    p = cycle.period
    representative = cycle.representative
    degree = reduce(lambda acc, s: acc * m.parallel_degree(s), members, 1)
    universe = _track_curves(m, representative)

    pullback = {}
    tracked = {}
    dropped = []
    for curve_id in universe:
        composed = []
        # (current curve, product of degrees along the chain so far)
        chains = [(curve_id, 1)]
        for step in range(1, p + 1):
            piece_id = members[(-step) % p]
            boundary = m.piece(piece_id).boundary
            continuing = []
            for source, carried in chains:
                for a in m.components(source):
                    product = carried * a.degree
                    on_boundary = (a.piece == BOUNDARY
                                   and a.target in boundary)
                    if a.piece != piece_id and not on_boundary:
                        dropped.append(DroppedComponent(curve_id, step, source,
                                                        a))
                        continue
                    if not a.is_curve or m.is_core(a.target) \
                            or m.is_sigma(a.target):
                        # the chain stops here but still covers the steps
                        # left in the cycle at their full parallel degree
                        target = NULL if a.target == NULL else PERIPHERAL
                        composed.append(PreimageComponent(
                            target=target,
                            degree=product * _remaining_degree(m, members,
                                                               step),
                            piece=representative))
                    elif step < p:
                        continuing.append((a.target, product))
                    else:
                        composed.append(PreimageComponent(
                            target=a.target, degree=product,
                            piece=representative))
            chains = continuing

        for a in composed:
            if a.is_curve and a.target not in universe:
                raise ValidationError(
                    "Composed pullback of {} reaches {}, outside the curve "
                    "universe of {}".format(curve_id, a.target, cycle.id))
        pullback[curve_id] = tuple(composed)
        tracked[curve_id] = sum(a.degree for a in composed)

    for item in dropped:
        logger.debug("Renormalizing %s: dropped component %s of %s at step %d",
                     cycle.id, item.component, item.source, item.step)

    d0 = m.d0_curves(representative)
    disks = []
    for core in d0:
        annulus = m.annulus_of(core)
        if annulus.period % p:
            raise ValidationError(
                "Cycle {} has period {} not dividing the period {} of {}"
                .format(cycle.id, p, annulus.period, annulus.id))
        disks.append(RotationDisk(curve=core, annulus=annulus.id,
                                  period=annulus.period // p,
                                  rotation_number=annulus.rotation_number))

    inherited = sum(m.piece(s).rotation_disk_count for s in members)
    if d0 or inherited:
        kind = RenormalizationKind.SIEGEL
    elif degree == 1:
        kind = RenormalizationKind.HOMEOMORPHISM
    else:
        kind = RenormalizationKind.THURSTON

    piece = m.piece(representative)
    marked = piece.interior_marked_points + len(piece.boundary) - len(d0)

    return RenormalizedModel(
        cycle=cycle, kind=kind, degree=degree, marked_points=marked,
        rotation_disks=tuple(disks), inherited_rotation_disks=inherited,
        curve_universe=universe, pullback=pullback, tracked_degree=tracked,
        dropped=tuple(dropped))


def orbifold_signature(portrait):
    """
    Orbifold signature of a map on a finite set of marked points.

    nu(x) is the lcm, over all backward orbits reaching x, of the product of
    local degrees along the orbit; it is infinite on the forward orbit of a
    periodic critical point.

    Parameters
    ----------
    portrait : OrbitPortrait

    Returns
    -------
    tuple
        Sorted values of nu greater than 1, with ``math.inf`` last.
    """

    graph = nx.DiGraph()
    graph.add_nodes_from(portrait.map)
    graph.add_edges_from(portrait.map.items())

    def local(point):
        return portrait.local_degree.get(point, 1)

    infinite = set()
    for cycle in nx.simple_cycles(graph):
        if any(local(point) > 1 for point in cycle):
            for point in cycle:
                infinite.add(point)
                infinite |= nx.descendants(graph, point)

    nu = {point: 1 for point in graph}
    for _ in range(len(nu) + 1):
        changed = False
        for point in natsorted(graph):
            if point in infinite:
                continue
            value = reduce(_lcm, (local(pre) * nu[pre]
                            for pre in graph.predecessors(point)), 1)
            value = _lcm(value, nu[point])
            if value != nu[point]:
                nu[point] = value
                changed = True
        if not changed:
            break

    values = [math.inf if point in infinite else nu[point] for point in graph]
    return tuple(sorted(v for v in values if v > 1))


def _lcm(a, b):
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class DecompositionReport:
    dynamics: PieceDynamics
    renormalized: tuple
    gamma: object
    gamma_contracting: bool
    signatures: dict
    findings: tuple

    __hash__ = None

    @property
    def passed(self):
        return all(f.passed for f in self.findings)

    def count(self, kind):
        return sum(1 for r in self.renormalized if r.kind is kind)

    def to_dict(self):
        return {
            'dynamics': (None if self.dynamics is None
                         else self.dynamics.to_dict()),
            'renormalized': [r.to_dict() for r in self.renormalized],
            'gamma': self.gamma,
            'gamma_contracting': self.gamma_contracting,
            'signatures': {k: _signature_text(v)
                           for k, v in self.signatures.items()},
            'findings': [f.to_dict() for f in self.findings],
            'passed': self.passed,
        }

    def to_text(self):
        lines = []
        if self.dynamics is not None:
            for cycle in self.dynamics.cycles:
                lines.append('cycle {} period {}: {}'.format(
                    cycle.id, cycle.period, ' -> '.join(cycle.members)))
            lines.append('tails: {}'.format(', '.join(self.dynamics.tails)
                                            or 'none'))
        for r in self.renormalized:
            lines.append('  {} {}: degree {}, {} marked points, {} rotation '
                         'disks'.format(r.cycle.id, r.kind.value, r.degree,
                                        r.marked_points,
                                        len(r.rotation_disks)))
        lines.append('Siegel {}, Thurston {}, Homeomorphism {}'.format(
            self.count(RenormalizationKind.SIEGEL),
            self.count(RenormalizationKind.THURSTON),
            self.count(RenormalizationKind.HOMEOMORPHISM)))
        for f in self.findings:
            lines.append('{:<22} {}{}'.format(
                f.name, 'pass' if f.passed else 'FAIL',
                '' if f.passed else ': ' + f.message))
        return '\n'.join(lines)


def _signature_text(signature):
    if signature == 'unknown':
        return signature
    return '(' + ','.join('inf' if v == math.inf else str(v)
                          for v in signature) + ')'


def classify(m, options=None):
    """
    Renormalize every piece cycle and check the classification constraints.

    Findings are report entries, never exceptions.

    Parameters
    ----------
    m : CoverModel
    options : ForgeOptions, optional

    Returns
    -------
    DecompositionReport
    """

    options = ForgeOptions() if options is None else options
    findings = []
    gamma = generate_gamma(m)
    contracting = is_contracting(transition_matrix(m, gamma),
                                 max_bits=options.max_bits)

    try:
        dynamics = piece_dynamics(m)
    except ValidationError as e:
        findings.append(CheckResult('piece-dynamics', False, 'piece_map',
                                    str(e)))
        return DecompositionReport(dynamics=None, renormalized=(),
                                   gamma=gamma, gamma_contracting=contracting,
                                   signatures={}, findings=tuple(findings))

    tasks = [dask.delayed(renormalize)(m, cycle, dynamics)
             for cycle in dynamics.cycles]
    renormalized = tuple(dask.compute(*tasks, scheduler=options.scheduler))

    siegel = sum(1 for r in renormalized
                 if r.kind is RenormalizationKind.SIEGEL)
    upper = 2 * len(m.annuli) + m.rotation_disk_cycles
    findings.append(CheckResult(
        'siegel-count', 2 <= siegel <= upper, 'cycles',
        '' if 2 <= siegel <= upper else
        '{} Siegel maps, expected between 2 and {}'.format(siegel, upper)))

    homeomorphisms = [r.cycle.id for r in renormalized
                      if r.kind is RenormalizationKind.HOMEOMORPHISM]
    if contracting:
        findings.append(CheckResult(
            'homeomorphism-free', not homeomorphisms, 'cycles',
            '' if not homeomorphisms else
            'Γ is contracting but cycles {} renormalize to homeomorphisms'
            .format(', '.join(homeomorphisms))))

    signatures = {}
    for r in renormalized:
        if r.kind is not RenormalizationKind.THURSTON:
            continue
        portrait = next((m.orbit_portraits[s] for s in r.cycle.members
                         if s in m.orbit_portraits), None)
        if portrait is None:
            signatures[r.cycle.id] = 'unknown'
            continue
        signature = orbifold_signature(portrait)
        signatures[r.cycle.id] = signature
        if contracting:
            euclidean = signature == (2, 2, 2, 2)
            findings.append(CheckResult(
                'orbifold-signature', not euclidean,
                'cycles[{}]'.format(r.cycle.id),
                'signature (2,2,2,2)' if euclidean else ''))

    for f in findings:
        if not f.passed:
            logger.info("Decomposition finding %s: %s", f.name, f.message)
    return DecompositionReport(dynamics=dynamics, renormalized=renormalized,
                               gamma=gamma, gamma_contracting=contracting,
                               signatures=signatures,
                               findings=tuple(findings))


def to_dot(dynamics):
    """
    DOT text of the f* digraph; cycle pieces are filled, edges carry the
    parallel degree.
    """

    graph = dynamics.graph()
    on_cycle = {p for c in dynamics.cycles for p in c.members}
    for node in graph.nodes:
        if node in on_cycle:
            graph.nodes[node]['style'] = 'filled'
            graph.nodes[node]['fillcolor'] = 'lightblue'
    for _, _, data in graph.edges(data=True):
        data['label'] = str(data.pop('parallel_degree'))
    return nx.drawing.nx_pydot.to_pydot(graph).to_string()
