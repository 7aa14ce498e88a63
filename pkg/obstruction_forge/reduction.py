import logging
from dataclasses import dataclass

import dask
import numpy as np

from .config import ForgeOptions
from .decompose import piece_dynamics, renormalize
from .model import ValidationError
from .multicurve import (Multicurve, UnstableMulticurveError, as_matrix,
                         find_obstructions, generate_gamma, is_stable,
                         lift_obstruction, transition_array,
                         transition_matrix)
from .spectral import (block_product, cyclic_sp_invariance, is_contracting,
                       is_nilpotent, power_lambda)

logger = logging.getLogger(__name__)


class ReductionError(AssertionError):
    """Error for a failed assertion of the reduction identity"""


@dataclass(frozen=True)
class SplitMulticurve:
    """
    Partition of a stable multicurve.

    ``sigma`` maps each cycle id to the members inside its representative
    piece; ``steps`` gives the members inside every piece of the cycle, in
    cycle order.
    """

    c_gamma: Multicurve
    c_s: Multicurve
    sigma: dict
    steps: dict

    __hash__ = None

    def cycle_order(self, cycle_id):
        return [c for step in self.steps[cycle_id] for c in step]

    def to_dict(self):
        return {'c_gamma': self.c_gamma, 'c_s': self.c_s,
                'sigma': dict(self.sigma),
                'steps': {k: [list(s) for s in v]
                          for k, v in self.steps.items()}}


def split_multicurve(m, C, dynamics=None):
    """
    Split a stable multicurve into its Γ part, its preperiodic part and the
    parts inside each piece cycle.

    Parameters
    ----------
    m : CoverModel
    C : Multicurve
    dynamics : PieceDynamics, optional

    Returns
    -------
    SplitMulticurve

    Raises
    ------
    UnstableMulticurveError
    ValidationError
        If a member outside Γ lies on a piece boundary.
    """

    if not is_stable(m, C):
        raise UnstableMulticurveError("{} is not stable".format(C))
    dynamics = piece_dynamics(m) if dynamics is None else dynamics
    gamma = set(generate_gamma(m))

    c_gamma, c_s = [], []
    steps = {cycle.id: [[] for _ in cycle.members]
             for cycle in dynamics.cycles}
    for curve_id in C:
        if curve_id in gamma:
            c_gamma.append(curve_id)
            continue
        if m.is_sigma(curve_id):
            raise ValidationError("Member {} lies on a piece boundary but is "
                                  "not in Γ".format(curve_id))
        home = m.home(curve_id)
        cycle = dynamics.cycle_of(home)
        if cycle is None:
            c_s.append(curve_id)
        else:
            steps[cycle.id][cycle.step(home)].append(curve_id)

    steps = {k: tuple(Multicurve(tuple(s)) for s in v)
             for k, v in steps.items()}
    return SplitMulticurve(c_gamma=Multicurve(tuple(c_gamma)),
                           c_s=Multicurve(tuple(c_s)),
                           sigma={k: v[0] for k, v in steps.items()},
                           steps=steps)


def _block(da, position, rows, cols):
    return as_matrix(da.isel(
        target=np.array([position[c] for c in rows], dtype=int),
        source=np.array([position[c] for c in cols], dtype=int)))


@dataclass(frozen=True)
class CycleReduction:
    cycle: str
    period: int
    step_sizes: tuple
    blocks: tuple
    product: object
    lambda_sigma: float
    contribution: float
    cyclic_values: tuple

    __hash__ = None

    def to_dict(self):
        return {'cycle': self.cycle, 'period': self.period,
                'step_sizes': list(self.step_sizes),
                'blocks': [b.to_dict() for b in self.blocks],
                'product': self.product.to_dict(),
                'lambda_sigma': self.lambda_sigma,
                'contribution': self.contribution,
                'cyclic_values': list(self.cyclic_values)}


@dataclass(frozen=True)
class ReductionReport:
    multicurve: Multicurve
    split: SplitMulticurve
    order: tuple
    lambda_c: float
    lambda_gamma: float
    c_s_nilpotent: bool
    cycles: tuple
    formula: float
    holds: bool

    __hash__ = None

    def to_dict(self):
        return {'multicurve': self.multicurve, 'split': self.split,
                'order': list(self.order), 'lambda_c': self.lambda_c,
                'lambda_gamma': self.lambda_gamma,
                'c_s_nilpotent': self.c_s_nilpotent,
                'cycles': [c.to_dict() for c in self.cycles],
                'formula': self.formula, 'holds': self.holds}

    def to_text(self):
        lines = ['C = {}'.format(self.multicurve),
                 '  C_Γ = {}, C_s = {} (nilpotent: {})'.format(
                     self.split.c_gamma, self.split.c_s, self.c_s_nilpotent)]
        for c in self.cycles:
            lines.append('  cycle {} (period {}): λ(Σ,h) = {:.9g}, '
                         'contribution {:.9g}'.format(
                             c.cycle, c.period, c.lambda_sigma,
                             c.contribution))
        lines.append('λ(C) = {:.9g}, λ(C_Γ) = {:.9g}, max formula = {:.9g}'
                     .format(self.lambda_c, self.lambda_gamma, self.formula))
        lines.append('reduction identity holds' if self.holds
                     else 'reduction identity FAILS')
        return '\n'.join(lines)


def _verify_cycle(m, da, position, cycle, steps, dynamics, tol,
                  max_iterations):
    p = cycle.period
    step_ids = [list(s) for s in steps]
    members = [c for s in step_ids for c in s]

    for i in range(p):
        for j in range(p):
            if j == (i + 1) % p:
                continue
            if not _block(da, position, step_ids[i], step_ids[j]).is_zero():
                raise ReductionError(
                    "Cycle {}: block (step {}, step {}) is not zero"
                    .format(cycle.id, i, j))

    blocks = tuple(_block(da, position, step_ids[k], step_ids[(k + 1) % p])
                   for k in range(p))
    power = _block(da, position, members, members) ** p
    for i in range(p):
        for j in range(p):
            actual = _block_of(power, step_ids, i, j)
            if i == j:
                expected = block_product(list(blocks[i:] + blocks[:i]))
                if actual != expected:
                    raise ReductionError(
                        "Cycle {}: diagonal block {} of W^{} is not the cyclic "
                        "product".format(cycle.id, i, p))
            elif not actual.is_zero():
                raise ReductionError(
                    "Cycle {}: off-diagonal block ({}, {}) of W^{} is not zero"
                    .format(cycle.id, i, j, p))

    product = block_product(list(blocks))
    renormalized = renormalize(m, cycle, dynamics)
    composed = transition_matrix(renormalized, step_ids[0])
    if composed != product:
        raise ReductionError(
            "Cycle {}: composed pullback matrix {} differs from the block "
            "product {}".format(cycle.id, composed, product))

    lambda_sigma = power_lambda(product, tol=tol,
                                max_iterations=max_iterations)
    cyclic = cyclic_sp_invariance(list(blocks), tol=tol,
                                  max_iterations=max_iterations)
    if not cyclic.agree:
        raise ReductionError("Cycle {}: cyclic products disagree, spread {}"
                             .format(cycle.id, cyclic.spread))
    return CycleReduction(
        cycle=cycle.id, period=p, step_sizes=tuple(len(s) for s in step_ids),
        blocks=blocks, product=product, lambda_sigma=lambda_sigma,
        contribution=lambda_sigma ** (1 / p), cyclic_values=cyclic.values)


def _block_of(matrix, step_ids, i, j):
    offsets = np.cumsum([0] + [len(s) for s in step_ids])
    rows = np.arange(offsets[i], offsets[i + 1], dtype=int)
    cols = np.arange(offsets[j], offsets[j + 1], dtype=int)
    return type(matrix)(matrix.entries[np.ix_(rows, cols)],
                        shape=(len(rows), len(cols)))


def verify_reduction_identity(m, C, tol=1e-9, options=None):
    """
    Check the reduction identity for a stable multicurve.

    The transition matrix is reordered as C_Γ, C_s, then each cycle's
    members step by step. The checks are: the blocks below the diagonal
    vanish, the C_s block is nilpotent, each cycle block has the cyclic
    structure whose p-th power is block diagonal with the cyclic products,
    the composed pullback of the renormalized model reproduces the product
    of the step blocks exactly, and the leading eigenvalue of W_C is the
    maximum of λ(C_Γ) and the p-th roots λ(Σ,h)^(1/p).

    Parameters
    ----------
    m : CoverModel
    C : Multicurve
    tol : float
    options : ForgeOptions, optional

    Returns
    -------
    ReductionReport

    Raises
    ------
    ReductionError
        Naming the block that violates an assertion.
    """

    options = ForgeOptions() if options is None else options
    dynamics = piece_dynamics(m)
    split = split_multicurve(m, C, dynamics)

    order = list(split.c_gamma) + list(split.c_s)
    groups = [('C_Γ', list(split.c_gamma)), ('C_s', list(split.c_s))]
    for cycle in dynamics.cycles:
        members = split.cycle_order(cycle.id)
        order += members
        groups.append(('cycle {}'.format(cycle.id), members))
    position = {c: i for i, c in enumerate(order)}
    da = transition_array(m, order)

    for i, (row_name, rows) in enumerate(groups):
        for col_name, cols in groups[:i]:
            if not _block(da, position, rows, cols).is_zero():
                raise ReductionError(
                    "Block ({}, {}) below the diagonal is not zero"
                    .format(row_name, col_name))

    c_s_block = _block(da, position, list(split.c_s), list(split.c_s))
    nilpotent = is_nilpotent(c_s_block)
    if not nilpotent:
        raise ReductionError("Block (C_s, C_s) is not nilpotent")

    tasks = [dask.delayed(_verify_cycle)(
                 m, da, position, cycle, split.steps[cycle.id], dynamics,
                 tol, options.max_iterations)
             for cycle in dynamics.cycles
             if split.cycle_order(cycle.id)]
    cycles = tuple(dask.compute(*tasks, scheduler=options.scheduler))

    lambda_c = power_lambda(as_matrix(da), tol=tol,
                            max_iterations=options.max_iterations)
    gamma_block = _block(da, position, list(split.c_gamma),
                         list(split.c_gamma))
    lambda_gamma = power_lambda(gamma_block, tol=tol,
                                max_iterations=options.max_iterations)
    formula = max([lambda_gamma] + [c.contribution for c in cycles])
    holds = abs(lambda_c - formula) <= tol
    if not holds:
        raise ReductionError("λ(C) = {} differs from the max formula {}"
                             .format(lambda_c, formula))

    return ReductionReport(multicurve=C, split=split, order=tuple(order),
                           lambda_c=lambda_c, lambda_gamma=lambda_gamma,
                           c_s_nilpotent=nilpotent, cycles=cycles,
                           formula=formula, holds=holds)


@dataclass(frozen=True)
class CombinationReport:
    lhs_obstructed: bool
    rhs_obstructed: bool
    gamma: Multicurve
    gamma_contracting: bool
    lambda_gamma: float
    lhs_witness: object
    lhs_projection: object
    renormalized_witnesses: dict
    lifted_witnesses: dict

    __hash__ = None

    @property
    def agree(self):
        return self.lhs_obstructed == self.rhs_obstructed

    def to_dict(self):
        return {
            'lhs_obstructed': self.lhs_obstructed,
            'rhs_obstructed': self.rhs_obstructed,
            'agree': self.agree,
            'gamma': self.gamma,
            'gamma_contracting': self.gamma_contracting,
            'lambda_gamma': self.lambda_gamma,
            'lhs_witness': self.lhs_witness,
            'lhs_projection': (None if self.lhs_projection is None
                               else list(self.lhs_projection)),
            'renormalized_witnesses': dict(self.renormalized_witnesses),
            'lifted_witnesses': {k: {'multicurve': c, 'contracting': ok}
                                 for k, (c, ok)
                                 in self.lifted_witnesses.items()},
        }

    def to_text(self):
        def verdict(obstructed):
            return 'obstructed' if obstructed else 'unobstructed'

        lines = ['whole map: {}'.format(verdict(self.lhs_obstructed)),
                 'Γ = {}: λ = {:.9g}, {}'.format(
                     self.gamma, self.lambda_gamma,
                     'contracting' if self.gamma_contracting
                     else 'NOT contracting'),
                 'pieces: {}'.format(verdict(self.rhs_obstructed))]
        if self.lhs_witness is not None:
            lines.append('  witness {} projects to {} {}'.format(
                self.lhs_witness, *self.lhs_projection))
        for cycle_id, witness in self.renormalized_witnesses.items():
            lifted, _ = self.lifted_witnesses[cycle_id]
            lines.append('  cycle {} witness {} lifts to {}'.format(
                cycle_id, witness, lifted))
        lines.append('sides agree' if self.agree else 'sides DISAGREE')
        return '\n'.join(lines)


def _first_obstruction(system, options):
    found = find_obstructions(system, options)
    return found[0][0] if found else None


def _project_witness(m, C, renormalized, dynamics, options):
    split = split_multicurve(m, C, dynamics)
    if not is_contracting(transition_matrix(m, split.c_gamma),
                          max_bits=options.max_bits):
        return ('Γ', split.c_gamma)
    for r in renormalized:
        sigma = split.sigma[r.cycle.id]
        if not is_contracting(transition_matrix(r, sigma),
                              max_bits=options.max_bits):
            return ('cycle {}'.format(r.cycle.id), sigma)
    raise ReductionError("Obstruction {} has no obstructed part".format(C))


def check_combination(m, options=None):
    """
    Compare obstructions of the whole map with those of its pieces.

    The whole map is obstructed iff some stable multicurve is not
    contracting. The pieces are obstructed iff Γ is not contracting or some
    renormalized model has a non-contracting stable multicurve. Witnesses
    are transported in both directions.

    Parameters
    ----------
    m : CoverModel
    options : ForgeOptions, optional

    Returns
    -------
    CombinationReport
    """

    options = ForgeOptions() if options is None else options
    dynamics = piece_dynamics(m)
    gamma = generate_gamma(m)
    gamma_matrix = transition_matrix(m, gamma)
    gamma_contracting = is_contracting(gamma_matrix, max_bits=options.max_bits)
    lambda_gamma = power_lambda(gamma_matrix, tol=options.tol,
                                max_iterations=options.max_iterations)

    lhs_witness = _first_obstruction(m, options)

    renormalized = [renormalize(m, cycle, dynamics)
                    for cycle in dynamics.cycles]
    tasks = [dask.delayed(_first_obstruction)(r, options)
             for r in renormalized]
    witnesses = dask.compute(*tasks, scheduler=options.scheduler)

    renormalized_witnesses = {}
    lifted_witnesses = {}
    for r, witness in zip(renormalized, witnesses):
        if witness is None:
            continue
        renormalized_witnesses[r.cycle.id] = witness
        lifted = lift_obstruction(m, witness)
        lifted_witnesses[r.cycle.id] = (
            lifted, is_contracting(transition_matrix(m, lifted),
                                   max_bits=options.max_bits))

    lhs_projection = None
    if lhs_witness is not None:
        lhs_projection = _project_witness(m, lhs_witness, renormalized,
                                          dynamics, options)

    report = CombinationReport(
        lhs_obstructed=lhs_witness is not None,
        rhs_obstructed=not gamma_contracting or bool(renormalized_witnesses),
        gamma=gamma, gamma_contracting=gamma_contracting,
        lambda_gamma=lambda_gamma, lhs_witness=lhs_witness,
        lhs_projection=lhs_projection,
        renormalized_witnesses=renormalized_witnesses,
        lifted_witnesses=lifted_witnesses)
    if not report.agree:
        logger.warning("Combination sides disagree: whole map %s, pieces %s",
                       report.lhs_obstructed, report.rhs_obstructed)
    return report
