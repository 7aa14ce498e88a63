"""
Weight functions on the curves of Γ and the parameter threshold at which all
strict modulus inequalities hold.

All bookkeeping is affine in the parameter t with exact rational
coefficients, so thresholds are exact.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

from natsort import natsorted

from ..decompose import BoundaryClass, piece_dynamics
from ..model import ValidationError
from ..multicurve import (forward_image, gamma_level, generate_gamma_levels,
                          transition_matrix)
from ..spectral import NotContractingError
from ..utils import format_rational, sorted_ids

logger = logging.getLogger(__name__)


class ThresholdError(ArithmeticError):
    """Error for an inequality whose leading coefficient is not positive"""


class MissingConstantError(KeyError):
    """Error for an annular piece without a Grötzsch constant"""


@dataclass(frozen=True)
class AffineForm:
    """a·t + b with rational coefficients."""

    slope: Fraction = Fraction(0)
    intercept: Fraction = Fraction(0)

    @classmethod
    def constant(cls, value):
        return cls(Fraction(0), Fraction(value))

    @classmethod
    def linear(cls, slope):
        return cls(Fraction(slope), Fraction(0))

    def __add__(self, other):
        return AffineForm(self.slope + other.slope,
                          self.intercept + other.intercept)

    def __sub__(self, other):
        return AffineForm(self.slope - other.slope,
                          self.intercept - other.intercept)

    def __truediv__(self, divisor):
        divisor = Fraction(divisor)
        return AffineForm(self.slope / divisor, self.intercept / divisor)

    def __call__(self, t):
        return self.slope * Fraction(t) + self.intercept

    def __str__(self):
        if self.slope == 0:
            return format_rational(self.intercept)
        text = '{}·t'.format(format_rational(self.slope))
        if self.intercept:
            text += ' + {}'.format(format_rational(self.intercept))
        return text

    def to_dict(self):
        return str(self)


_ZERO_FORM = AffineForm()


@dataclass(frozen=True)
class AffineInequality:
    """lhs(t) < rhs(t) when strict, lhs(t) <= rhs(t) otherwise."""

    name: str
    location: str
    lhs: AffineForm
    rhs: AffineForm
    strict: bool = True

    def margin(self, t):
        return self.rhs(t) - self.lhs(t)

    def holds(self, t):
        margin = self.margin(t)
        return margin > 0 if self.strict else margin >= 0

    def bound(self):
        """
        Smallest t the inequality allows, or None when it holds for every t.

        Writing rhs - lhs = c·t - d, the inequality holds for t > d/c (or
        t >= d/c when not strict).

        Raises
        ------
        ThresholdError
            If c < 0, or c = 0 and the inequality fails.
        """
        difference = self.rhs - self.lhs
        c, d = difference.slope, -difference.intercept
        if c > 0:
            return d / c
        if c == 0 and self.holds(0):
            return None
        raise ThresholdError(
            "{} at {}: coefficient {} of t cannot make {} {} {}".format(
                self.name, self.location, format_rational(c), self.lhs,
                '<' if self.strict else '<=', self.rhs))

    def to_dict(self):
        return {'name': self.name, 'location': self.location,
                'lhs': str(self.lhs), 'rhs': str(self.rhs),
                'strict': self.strict}


def _gamma_weights(m, gamma, v):
    values = dict(zip(gamma, v)) if not isinstance(v, dict) else dict(v)
    missing = [c for c in gamma if c not in values]
    if missing:
        raise ValueError("No weight for curves {}".format(missing))
    return {c: Fraction(values[c]) for c in gamma}


def _self_index(m, curve, parent):
    """
    Position of the curve itself among the components of its image.

    The coinciding component when there is one, else the first component
    homotopic to the curve. Any other component of the image homotopic to
    the curve is an ordinary preimage on one side.
    """
    components = m.components(parent)
    matches = [j for j, a in enumerate(components) if a.target == curve]
    if not matches:
        raise ValidationError("{} is not a preimage of {}".format(curve,
                                                                  parent))
    coinciding = [j for j in matches if components[j].coincides == curve]
    return (coinciding or matches)[0]


def side_correspondence(m, curve, image):
    """
    Match the two sides of a curve with the two sides of its image.

    A side S goes to f*(S) when that is a side of the image; remaining
    sides are matched in natural order.
    """

    sides = m.sides(curve)
    image_sides = m.sides(image)
    mapping, used = {}, set()
    for side in sides:
        target = m.image(side)
        if target in image_sides and target not in used:
            mapping[side] = target
            used.add(target)
    # a side mapped away from the image curve lies across it and takes
    # whichever image side is still free
    remaining = [s for s in image_sides if s not in used]
    for side in sides:
        if side not in mapping and remaining:
            mapping[side] = remaining.pop(0)
    return mapping


@dataclass(frozen=True)
class RhoAssignment:
    """
    Splitting of each weight v(γ) between the two pieces adjacent to γ.

    ``values`` maps (curve, side piece) to ρ; the first side in natural
    order is the "+" side.
    """

    values: dict
    sides: dict
    checks: tuple

    __hash__ = None

    def rho(self, curve, side):
        return self.values[(curve, side)]

    def sign(self, curve, side):
        return '+' if self.sides[curve][0] == side else '-'

    @property
    def curves(self):
        """Curves of Γ in natural order, the order of weight sequences."""
        return tuple(natsorted(self.sides))

    def to_dict(self):
        return {
            'rho': {'{}/{}'.format(c, s): self.values[(c, s)]
                    for c in self.sides for s in self.sides[c]},
            'checks': [i.to_dict() for i in self.checks],
        }


def _side_sums(m, curve, sources, weights, skip=None):
    """Weight reaching each side of a curve, without the component ``skip``."""
    sums = {side: Fraction(0) for side in m.sides(curve)}
    for source in sources:
        for j, a in enumerate(m.components(source)):
            if (source, j) == skip:
                continue
            if a.target == curve and a.piece in sums:
                sums[a.piece] += weights[source] / a.degree
    return sums


def solve_rho(m, gamma, v):
    """
    Split the contraction weights of Γ between the sides of each curve.

    Curves of the first generation use the slack construction
    ρ = (side sum + δ) / (total + 2δ) with δ = (v - total) / 4. Later
    generations use the quotient
    ρ = (self weight · ρ(image side, image) + side sum) / total.
    The self weight comes from the curve itself inside the pullback of its
    image; other copies homotopic to it count in the side sums.

    Parameters
    ----------
    m : CoverModel
    gamma : Multicurve
    v : dict or sequence of Fraction
        Weights with Wv < v, keyed by curve or indexed like ``gamma``.

    Returns
    -------
    RhoAssignment

    Raises
    ------
    NotContractingError
        If Wv < v fails.
    ValidationError
        If a curve of Γ does not bound exactly two pieces.
    """

    gamma = list(gamma)
    weights = _gamma_weights(m, gamma, v)
    W = transition_matrix(m, gamma)
    for i, curve in enumerate(gamma):
        total = sum((W[i, j] * weights[src] for j, src in enumerate(gamma)),
                    Fraction(0))
        if not total < weights[curve]:
            raise NotContractingError("Wv < v fails at {}: {} >= {}".format(
                curve, total, weights[curve]))

    levels = generate_gamma_levels(m)
    values, sides, checks = {}, {}, []
    ordered = [c for level in levels for c in level if c in weights]
    for curve in ordered:
        curve_sides = m.sides(curve)
        if len(curve_sides) != 2:
            raise ValidationError("Curve {} needs two adjacent pieces, has {}"
                                  .format(curve, list(curve_sides)))
        sides[curve] = curve_sides
        level = gamma_level(m, curve, levels)

        if level == 0:
            sums = _side_sums(m, curve, gamma, weights)
            total = sum(sums.values(), Fraction(0))
            delta = (weights[curve] - total) / 4
            for side in curve_sides:
                values[(curve, side)] = (sums[side] + delta) / (total + 2 * delta)
                checks.append(AffineInequality(
                    'rho-split', '{}/{}'.format(curve, side),
                    AffineForm.constant(sums[side]),
                    AffineForm.constant(weights[curve]
                                        * values[(curve, side)])))
        else:
            parent = forward_image(m, curve, levels)
            index = _self_index(m, curve, parent)
            self_weight = (weights[parent]
                           / m.components(parent)[index].degree)
            sums = _side_sums(m, curve, gamma, weights, skip=(parent, index))
            total = self_weight + sum(sums.values(), Fraction(0))
            mapping = side_correspondence(m, curve, parent)
            for side in curve_sides:
                carried = self_weight * values[(parent, mapping[side])]
                values[(curve, side)] = (carried + sums[side]) / total
                checks.append(AffineInequality(
                    'rho-split', '{}/{}'.format(curve, side),
                    AffineForm.constant(carried + sums[side]),
                    AffineForm.constant(weights[curve]
                                        * values[(curve, side)])))

    for curve in sides:
        pair = [values[(curve, s)] for s in sides[curve]]
        if sum(pair) != 1 or min(pair) <= 0:
            raise ValidationError("ρ for {} is {}, not a positive splitting"
                                  .format(curve, pair))
    failed = [c.location for c in checks if not c.holds(0)]
    if failed:
        raise ValidationError("ρ inequalities fail at {}".format(failed))
    return RhoAssignment(values=values, sides=sides, checks=tuple(checks))


@dataclass(frozen=True)
class SigmaFunction:
    """Affine form σ_t on each doubled boundary curve (curve, side piece)."""

    forms: dict

    __hash__ = None

    def form(self, curve, side):
        return self.forms[(curve, side)]

    def pair(self, curve):
        """σ(curve, +) + σ(curve, -)."""
        return sum((f for (c, _), f in self.forms.items() if c == curve),
                   _ZERO_FORM)

    def evaluate(self, t):
        return {key: form(t) for key, form in self.forms.items()}

    def to_dict(self):
        return {'{}/{}'.format(c, s): str(self.forms[(c, s)])
                for c, s in natsorted(self.forms)}


def _self_degree(m, curve, parent):
    return m.components(parent)[_self_index(m, curve, parent)].degree


def sigma(m, rho, v):
    """
    Build σ_t on every doubled boundary curve.

    Core curves carry the constant disk modulus of their annulus cycle.
    Curves of class D1, and D2 curves seen from a cycle-representative
    piece, carry t·ρ·v. Other D2 curves carry σ_t(image)/deg, chased forward.

    Parameters
    ----------
    m : CoverModel
    rho : RhoAssignment
    v : dict or sequence of Fraction

    Returns
    -------
    SigmaFunction
    """

    weights = _gamma_weights(m, rho.curves, v)
    dynamics = piece_dynamics(m)
    representatives = {c.representative for c in dynamics.cycles}
    levels = generate_gamma_levels(m)
    sigma_curves = list(m.core_ids) + list(rho.curves)
    forms = {}

    def build(curve, side, depth):
        key = (curve, side)
        if key in forms:
            return forms[key]
        if depth > len(sigma_curves):
            raise ValidationError("Chase of {}/{} does not reach a curve with "
                                  "a direct weight".format(curve, side))
        kind = dynamics.boundary_class[(side, curve)]
        if kind is BoundaryClass.D0:
            form = AffineForm.constant(m.annulus_of(curve).disk_modulus)
        elif kind is BoundaryClass.D1 or side in representatives:
            form = AffineForm.linear(rho.rho(curve, side) * weights[curve])
        else:
            parent = forward_image(m, curve, levels)
            image_side = side_correspondence(m, curve, parent)[side]
            form = (build(parent, image_side, depth + 1)
                    / _self_degree(m, curve, parent))
        forms[key] = form
        return form

    for curve in sigma_curves:
        for side in m.sides(curve):
            build(curve, side, 0)
    return SigmaFunction(forms=forms)


def _image_term(m, sigma_function, curve, side, levels):
    parent = forward_image(m, curve, levels)
    image_side = side_correspondence(m, curve, parent)[side]
    return (sigma_function.form(parent, image_side)
            / _self_degree(m, curve, parent)), parent


def _d1_sides(m, gamma, dynamics):
    return [(curve, side) for curve in gamma for side in m.sides(curve)
            if dynamics.boundary_class[(side, curve)] is BoundaryClass.D1]


def omega(m, rho, v, curve, side):
    """
    Weight already used on one side of a D1 curve.

    For the first generation this is the side sum; later generations add
    ρ(image side, image)·v(image)/deg.
    """

    weights = _gamma_weights(m, rho.curves, v)
    levels = generate_gamma_levels(m)
    parent = forward_image(m, curve, levels)
    if gamma_level(m, curve, levels) == 0:
        return _side_sums(m, curve, rho.curves, weights)[side]
    index = _self_index(m, curve, parent)
    image_side = side_correspondence(m, curve, parent)[side]
    carried = (rho.rho(parent, image_side) * weights[parent]
               / m.components(parent)[index].degree)
    return carried + _side_sums(m, curve, rho.curves, weights,
                                skip=(parent, index))[side]


def grotzsch_inequalities(m, sigma_function, grotzsch_constants=None,
                          default_constant=None):
    """
    One strict inequality per D1 doubled curve (γ, S):

        Σ_k (σ(β_k,+) + σ(β_k,-)) / deg_k + C_k  <  σ(γ,S) - σ(f(γ,S)) / deg

    where the sum runs over the non-self preimage components homotopic to
    γ lying in S, from boundary curves β_k, and C_k is the constant of the
    annular piece "{S}/{γ}/{k}".
    """

    constants = {} if grotzsch_constants is None else grotzsch_constants
    dynamics = piece_dynamics(m)
    levels = generate_gamma_levels(m)
    gamma = [c for level in levels for c in level]
    sources = sorted_ids(list(m.core_ids) + list(gamma))

    inequalities = []
    for curve, side in _d1_sides(m, gamma, dynamics):
        image_term, parent = _image_term(m, sigma_function, curve, side,
                                         levels)
        skip = (parent, _self_index(m, curve, parent))
        lhs = _ZERO_FORM
        k = 0
        for source in sources:
            for j, a in enumerate(m.components(source)):
                if (source, j) == skip:
                    continue
                if a.target != curve or a.piece != side:
                    continue
                key = '{}/{}/{}'.format(side, curve, k)
                if key in constants:
                    constant = constants[key]
                elif default_constant is not None:
                    constant = default_constant
                else:
                    raise MissingConstantError(
                        "No Grötzsch constant for annular piece {}"
                        .format(key))
                lhs = (lhs + sigma_function.pair(source) / a.degree
                       + AffineForm.constant(constant))
                k += 1
        inequalities.append(AffineInequality(
            'grotzsch', '{}/{}'.format(curve, side), lhs,
            sigma_function.form(curve, side) - image_term, strict=True))
    return inequalities


def assemble_inequalities(m, rho, v, sigma_function, grotzsch_constants=None,
                          default_constant=None):
    """Every inequality the threshold must satisfy, in a fixed order."""

    weights = _gamma_weights(m, rho.curves, v)
    dynamics = piece_dynamics(m)
    levels = generate_gamma_levels(m)
    gamma = list(rho.curves)
    inequalities = []

    for curve in gamma:
        for side in m.sides(curve):
            bound = AffineForm.linear(rho.rho(curve, side) * weights[curve])
            form = sigma_function.form(curve, side)
            if form != bound:
                inequalities.append(AffineInequality(
                    'rho-bound', '{}/{}'.format(curve, side), form, bound,
                    strict=False))

    for curve in gamma:
        inequalities.append(AffineInequality(
            'pair-sum', curve, sigma_function.pair(curve),
            AffineForm.linear(weights[curve]), strict=False))
    for core in m.core_ids:
        inequalities.append(AffineInequality(
            'pair-sum', core, sigma_function.pair(core),
            AffineForm.constant(m.annulus_of(core).modulus), strict=False))

    for curve, side in _d1_sides(m, gamma, dynamics):
        # ρ·v must exceed ω on every D1 side for t to dominate the constants
        margin = (rho.rho(curve, side) * weights[curve]
                  - omega(m, rho, weights, curve, side))
        if margin <= 0:
            raise ThresholdError("ρ·v - ω at {}/{} is {}, not positive"
                                 .format(curve, side, format_rational(margin)))
        parent = forward_image(m, curve, levels)
        skip = (parent, _self_index(m, curve, parent))
        lhs = _ZERO_FORM
        for source in gamma:
            for j, a in enumerate(m.components(source)):
                if (source, j) == skip:
                    continue
                if a.target == curve and a.piece == side:
                    lhs = lhs + sigma_function.pair(source) / a.degree
        if gamma_level(m, curve, levels) > 0:
            lhs = lhs + _image_term(m, sigma_function, curve, side, levels)[0]
        inequalities.append(AffineInequality(
            'pullback', '{}/{}'.format(curve, side), lhs,
            sigma_function.form(curve, side), strict=True))

    inequalities.extend(grotzsch_inequalities(
        m, sigma_function, grotzsch_constants, default_constant))
    return inequalities


@dataclass(frozen=True)
class ThresholdCertificate:
    t_star: Fraction
    certified_at: Fraction
    inequalities: tuple
    bounds: tuple
    argmax: object
    holds: bool

    __hash__ = None

    def failures(self, t):
        return [i for i in self.inequalities if not i.holds(t)]

    def to_dict(self):
        return {
            't_star': self.t_star,
            'certified_at': self.certified_at,
            'holds': self.holds,
            'argmax': None if self.argmax is None else self.argmax.location,
            'inequalities': [dict(i.to_dict(), bound=b,
                                  margin=i.margin(self.certified_at))
                             for i, b in zip(self.inequalities, self.bounds)],
        }


def solve_threshold(inequalities):
    """
    Largest lower bound on t over a list of affine inequalities.

    Returns
    -------
    (Fraction, AffineInequality or None, tuple)
        t* = max(0, bounds), the inequality attaining it, and every bound.
    """

    t_star, argmax = Fraction(0), None
    bounds = []
    for inequality in inequalities:
        bound = inequality.bound()
        bounds.append(bound)
        if bound is not None and bound > t_star:
            t_star, argmax = bound, inequality
        logger.debug("%s at %s: bound %s", inequality.name,
                     inequality.location, bound)
    return t_star, argmax, tuple(bounds)


def find_t_threshold(m, rho, v, grotzsch_constants=None,
                     default_constant=None):
    """
    Smallest parameter beyond which every assembled inequality holds.

    Parameters
    ----------
    m : CoverModel
    rho : RhoAssignment
    v : dict or sequence of Fraction
    grotzsch_constants : dict, optional
        Constants per annular piece; defaults to the model's own.
    default_constant : Fraction, optional
        Used for annular pieces without a constant. If None a missing
        constant raises MissingConstantError.

    Returns
    -------
    (Fraction, ThresholdCertificate)
    """

    if grotzsch_constants is None:
        grotzsch_constants = m.grotzsch_constants
    sigma_function = sigma(m, rho, v)
    inequalities = assemble_inequalities(m, rho, v, sigma_function,
                                         grotzsch_constants, default_constant)
    t_star, argmax, bounds = solve_threshold(inequalities)
    certified_at = t_star + 1
    holds = all(i.holds(certified_at) for i in inequalities)
    certificate = ThresholdCertificate(
        t_star=t_star, certified_at=certified_at,
        inequalities=tuple(inequalities), bounds=bounds, argmax=argmax,
        holds=holds)
    return t_star, certificate


@dataclass(frozen=True)
class GrotzschEntry:
    location: str
    modulus: Fraction
    budget: Fraction
    margin: Fraction
    passed: bool

    def to_dict(self):
        return {'location': self.location, 'modulus': self.modulus,
                'budget': self.budget, 'margin': self.margin,
                'passed': self.passed}


@dataclass(frozen=True)
class GrotzschReport:
    t: Fraction
    entries: tuple

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def to_dict(self):
        return {'t': self.t, 'passed': self.passed,
                'entries': [e.to_dict() for e in self.entries]}


def certify_grotzsch(m, sigma_function, t, grotzsch_constants=None,
                     default_constant=None):
    """
    Evaluate the Grötzsch inequality of every D1 doubled curve at t.

    The modulus of the annulus between the curve and its preimage is
    σ_t(γ, S) - σ_t(f(γ, S))/deg; it must exceed the budget taken by the
    annular pieces in between.

    Returns
    -------
    GrotzschReport
    """

    if grotzsch_constants is None:
        grotzsch_constants = m.grotzsch_constants
    t = Fraction(t)
    entries = []
    for inequality in grotzsch_inequalities(m, sigma_function,
                                            grotzsch_constants,
                                            default_constant):
        modulus, budget = inequality.rhs(t), inequality.lhs(t)
        entries.append(GrotzschEntry(
            location=inequality.location, modulus=modulus, budget=budget,
            margin=modulus - budget, passed=inequality.holds(t)))
    return GrotzschReport(t=t, entries=tuple(entries))
