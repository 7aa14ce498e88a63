import json
from fractions import Fraction
from itertools import product

import pytest

from obstruction_forge.multicurve import forward_image
from obstruction_forge.model import (parse_model, model_from_dict,
                                     serialize_model, open_model,
                                     open_example_model, validate_model,
                                     register_check, REGISTERED_CHECKS,
                                     CheckResult, ModelError, ModelSyntaxError,
                                     DanglingIdentifierError, DuplicateIdError,
                                     ValidationError,
                                     CurveKind, PERIPHERAL,
                                     BOUNDARY)


# Parallel degree data (copies, degree) of the v-curve loop, per step
V_STEPS = {1: [(1, 4)], 2: [(2, 1), (1, 8)], 3: [(2, 1), (1, 4), (1, 2)]}


def create_two_ring_dict(pa=1, pb=2, n_gamma=2, tail_depth=2, loop_degree=2,
                         grotzsch_constants=None):
    """
    Model-file data of a degree-8 cover with two rotation annulus cycles.

    Annulus A has period ``pa`` and annulus B period ``pb``. A hub piece H
    carries every core; the pieces LA* and LB* form the cycles of the two
    annuli. Γ has ``n_gamma`` curves: g1 (from A) and g2 (from B) in the
    first generation, g3 and g4 in the second. The tail pieces MA, MB, NA,
    NB are strictly preperiodic and ``tail_depth`` interior curves e -> w1
    -> w2 run through them. The loop u0 -> ... in the A cycle has
    self-preimage degree ``loop_degree`` per step.
    """

    if not 1 <= n_gamma <= 4:
        raise ValueError("n_gamma must be between 1 and 4")
    if tail_depth > 2 or (tail_depth == 2 and n_gamma < 2):
        raise ValueError("tail depth 2 needs piece MB, so n_gamma >= 2")

    degree = 8
    a = ['a{}'.format(k) for k in range(pa)]
    b = ['b{}'.format(k) for k in range(pb)]
    u = ['u{}'.format(k) for k in range(pa)]
    v = ['v{}'.format(k) for k in range(pb)]
    g = ['g{}'.format(i) for i in range(1, n_gamma + 1)]
    w = ['w{}'.format(i) for i in range(1, tail_depth + 1)]
    g_home = {'g1': 'LA0', 'g2': 'LB0', 'g3': 'NA', 'g4': 'NB'}
    v_steps = V_STEPS[pb]

    curves = ([{'id': c, 'kind': 'core', 'annulus_cycle': 'A'} for c in a]
              + [{'id': c, 'kind': 'core', 'annulus_cycle': 'B'} for c in b]
              + [{'id': c, 'kind': 'interior', 'piece': g_home[c]}
                 for c in g]
              + [{'id': c, 'kind': 'interior', 'piece': 'LA{}'.format(k)}
                 for k, c in enumerate(u)]
              + [{'id': c, 'kind': 'interior', 'piece': 'LB{}'.format(k)}
                 for k, c in enumerate(v)]
              + [{'id': 'h', 'kind': 'interior', 'piece': 'H'},
                 {'id': 'e', 'kind': 'interior', 'piece': 'H'}]
              + [{'id': c, 'kind': 'interior', 'piece': p}
                 for c, p in zip(w, ['MA', 'MB'])])

    def piece(piece_id, boundary, marked):
        return {'id': piece_id, 'boundary': boundary,
                'interior_marked_points': marked}

    pieces = [piece('H', a + b, 0)]
    pieces += [piece('LA{}'.format(k), [a[k]] + (['g1'] if k == 0 else []), 1)
               for k in range(pa)]
    pieces += [piece('LB{}'.format(k),
                     [b[k]] + (['g2'] if k == 0 and n_gamma >= 2 else []), 1)
               for k in range(pb)]
    pieces.append(piece('MA', ['g1'] + (['g3'] if n_gamma >= 3 else []), 2))
    if n_gamma >= 2:
        pieces.append(piece('MB', ['g2'] + (['g4'] if n_gamma >= 4 else []),
                            2))
    if n_gamma >= 3:
        pieces.append(piece('NA', ['g3'], 2))
    if n_gamma >= 4:
        pieces.append(piece('NB', ['g4'], 2))

    def comp(target, deg, where, coincides=None):
        out = {'target': target, 'degree': deg, 'piece': where}
        if coincides is not None:
            out['coincides'] = coincides
        return out

    def coinciding(target, deg=1):
        return comp(target, deg, BOUNDARY, coincides=target)

    pullback = {}
    for j in range(pa):
        pullback[a[j]] = [coinciding(a[j - 1])]
        if j == 1 % pa:
            pullback[a[j]].append(comp('g1', 1, 'MA'))
    for j in range(pb):
        pullback[b[j]] = [coinciding(b[j - 1])]
        if j == 1 % pb and n_gamma >= 2:
            pullback[b[j]].append(coinciding('g2', 2))

    if n_gamma == 1:
        pullback['g1'] = [comp('g1', 3, 'MA')]
    else:
        pullback['g1'] = [comp('g2', 4, 'MB')]
        if n_gamma >= 3:
            pullback['g1'].append(comp('g3', 2, 'NA'))
        pullback['g2'] = [comp('g1', 1, 'LA0')]
        if n_gamma >= 4:
            pullback['g2'].append(coinciding('g4', 2))
    for c in g[2:]:
        pullback[c] = []

    for j in range(pa):
        pullback[u[j]] = [comp(u[j - 1], loop_degree,
                               'LA{}'.format((j - 1) % pa))]
    for j in range(pb):
        copies, deg = v_steps[(j - 1) % pb]
        pullback[v[j]] = [comp(v[j - 1], deg, 'LB{}'.format((j - 1) % pb))
                          for _ in range(copies)]

    pullback['h'] = [comp('g1', 1, 'LA0')]
    if n_gamma >= 2:
        pullback['h'].append(comp('g2', 1, 'LB0'))
    pullback['e'] = [comp('w1', 2, 'MA')] if tail_depth >= 1 else []
    if tail_depth >= 1:
        pullback['w1'] = [comp('w2', 4, 'MB')] if tail_depth >= 2 else []
    if tail_depth >= 2:
        pullback['w2'] = []

    for components in pullback.values():
        remaining = degree - sum(c['degree'] for c in components)
        if remaining:
            components.append(comp(PERIPHERAL, remaining, 'H'))

    piece_map = [{'source': 'H', 'image': 'H', 'parallel_degree': 2}]
    piece_map += [{'source': 'LA{}'.format(k),
                   'image': 'LA{}'.format((k + 1) % pa), 'parallel_degree': 2}
                  for k in range(pa)]
    piece_map += [{'source': 'LB{}'.format(k),
                   'image': 'LB{}'.format((k + 1) % pb),
                   'parallel_degree': v_steps[k][0] * v_steps[k][1]}
                  for k in range(pb)]
    piece_map.append({'source': 'MA', 'image': 'H', 'parallel_degree': 2})
    if n_gamma >= 2:
        piece_map.append({'source': 'MB', 'image': 'MA',
                          'parallel_degree': 4})
    if n_gamma >= 3:
        piece_map.append({'source': 'NA', 'image': 'MA',
                          'parallel_degree': 1})
    if n_gamma >= 4:
        piece_map.append({'source': 'NB', 'image': 'MB',
                          'parallel_degree': 1})

    if grotzsch_constants is None:
        key = 'LA0/g1/0' if n_gamma >= 2 else 'MA/g1/0'
        grotzsch_constants = {key: '1'}

    return {
        'degree': degree,
        'curves': curves,
        'pieces': pieces,
        'pullback': {c['id']: pullback[c['id']] for c in curves},
        'piece_map': piece_map,
        'annuli': [
            {'id': 'A', 'period': pa, 'rotation_number': '2/5',
             'modulus': '1/2', 'core_curves': a},
            {'id': 'B', 'period': pb, 'rotation_number': '1/3',
             'modulus': '1/2', 'core_curves': b},
        ],
        'rotation_disk_cycles': 0,
        'claims_rational': False,
        'grotzsch_constants': grotzsch_constants,
    }


def create_two_ring_model(pa=1, pb=2, n_gamma=2, tail_depth=2, loop_degree=2,
                          grotzsch_constants=None):
    return model_from_dict(create_two_ring_dict(
        pa=pa, pb=pb, n_gamma=n_gamma, tail_depth=tail_depth,
        loop_degree=loop_degree, grotzsch_constants=grotzsch_constants))


# (pa, pb, n_gamma, tail_depth) for every annulus period 1-3 and Γ of size 1-4
TWO_RING_FAMILY = [(pa, pb, n, min(2, n - 1))
                   for pa, pb, n in product((1, 2, 3), (1, 2, 3), (1, 2, 3, 4))]


def family_id(params):
    return 'pa{}-pb{}-n{}-tail{}'.format(*params)


class TestExampleModels:
    def test_shi(self):
        m = open_example_model('SHI')

        assert m.degree == 3
        assert m.curve_ids == ('gH',)
        assert m.core_ids == ('gH',)
        assert m.interior_ids == ()
        assert m.piece_ids == ('S_in', 'S_out')
        assert len(m.annuli) == 1
        assert m.annuli[0].disk_modulus == Fraction(1, 4)
        assert m.sides('gH') == ('S_in', 'S_out')

    def test_two_ring_matches_generator(self):
        assert open_example_model('TWO-RING') == create_two_ring_model()

    def test_unknown_example(self):
        with pytest.raises(IOError, match="No example model named 'KAM'"):
            open_example_model('KAM')

    @pytest.mark.parametrize('name', ['SHI', 'TWO-RING'])
    def test_examples_validate(self, name):
        report = validate_model(open_example_model(name))
        assert report.passed, report.to_text()


class TestCoverModel:
    def test_lookups(self):
        m = create_two_ring_model()

        assert m.is_core('b1')
        assert not m.is_core('g1')
        assert m.is_sigma('g1')
        assert not m.is_sigma('u0')
        assert m.sides('a0') == ('H', 'LA0')
        assert m.sides('u0') == ()
        assert m.home('w2') == 'MB'
        assert m.annulus_of('b0').id == 'B'
        assert m.successor_core('b0') == 'b1'
        assert m.successor_core('b1') == 'b0'
        assert m.image('LB1') == 'LB0'
        assert m.parallel_degree('LB1') == 8
        assert m.d0_curves('H') == ('a0', 'b0', 'b1')
        assert m.d0_curves('MA') == ()
        assert m.curve('g1').kind is CurveKind.INTERIOR

    def test_unknown_ids(self):
        m = create_two_ring_model()

        with pytest.raises(DanglingIdentifierError, match="'x9'"):
            m.curve('x9')
        with pytest.raises(DanglingIdentifierError, match="'P'"):
            m.piece('P')
        with pytest.raises(DanglingIdentifierError):
            m.annulus_of('g1')

    def test_boundary_is_sorted(self):
        data = create_two_ring_dict()
        data['pieces'][0]['boundary'] = ['b1', 'a0', 'b0', 'a0']

        m = model_from_dict(data)

        assert m.piece('H').boundary == ('a0', 'b0', 'b1')


class TestParse:
    def test_round_trip(self):
        m = create_two_ring_model(pa=2, pb=3, n_gamma=4)

        assert parse_model(serialize_model(m)) == m

    def test_serialize_is_stable(self):
        m = open_example_model('TWO-RING')

        assert serialize_model(m) == serialize_model(parse_model(
            serialize_model(m)))

    def test_open_model(self, tmpdir):
        path = tmpdir.join('two.model')
        path.write(json.dumps(create_two_ring_dict()))

        assert open_model(str(path)) == create_two_ring_model()

    def test_missing_file(self, tmpdir):
        with pytest.raises(IOError, match='not found'):
            open_model(str(tmpdir.join('absent.model')))

    def test_malformed_json_position(self):
        with pytest.raises(ModelSyntaxError, match='line 2 column'):
            parse_model('{"degree": 3,\n "curves": [,]}')

    def test_top_level_must_be_object(self):
        with pytest.raises(ModelSyntaxError, match='must be an object'):
            parse_model('[1, 2]')

    def test_duplicate_key(self):
        with pytest.raises(DuplicateIdError, match="'degree'"):
            parse_model('{"degree": 3, "degree": 4}')

    def test_no_annulus(self):
        data = create_two_ring_dict()
        data['annuli'] = []

        with pytest.raises(ModelError,
                           match='requires ≥1 rotation annulus cycle'):
            model_from_dict(data)

    def test_duplicate_curve(self):
        data = create_two_ring_dict()
        data['curves'].append({'id': 'g1', 'kind': 'interior', 'piece': 'MA'})

        with pytest.raises(DuplicateIdError, match="curve id 'g1'"):
            model_from_dict(data)

    def test_dangling_target(self):
        data = create_two_ring_dict()
        data['pullback']['g1'][0]['target'] = 'g7'

        with pytest.raises(DanglingIdentifierError, match="'g7'"):
            model_from_dict(data)

    def test_dangling_piece(self):
        data = create_two_ring_dict()
        data['curves'][3]['piece'] = 'ZZ'

        with pytest.raises(DanglingIdentifierError, match="'ZZ'"):
            model_from_dict(data)

    def test_missing_pullback_entry(self):
        data = create_two_ring_dict()
        del data['pullback']['w2']

        with pytest.raises(DanglingIdentifierError, match='w2'):
            model_from_dict(data)

    def test_float_rational_rejected(self):
        data = create_two_ring_dict()
        data['annuli'][0]['modulus'] = 0.5

        with pytest.raises(ModelSyntaxError, match='modulus'):
            model_from_dict(data)

    def test_bad_kind(self):
        data = create_two_ring_dict()
        data['curves'][0]['kind'] = 'boundary'

        with pytest.raises(ModelSyntaxError, match="'core' or 'interior'"):
            model_from_dict(data)

    def test_degree_zero_component(self):
        data = create_two_ring_dict()
        data['pullback']['e'][0]['degree'] = 0

        with pytest.raises(ModelSyntaxError, match='degree'):
            model_from_dict(data)

    def test_disk_modulus_default_and_override(self):
        data = create_two_ring_dict()
        data['annuli'][1]['disk_modulus'] = '1/5'

        m = model_from_dict(data)

        assert m.annuli[0].disk_modulus == Fraction(1, 4)
        assert m.annuli[1].disk_modulus == Fraction(1, 5)

    def test_negative_constant(self):
        data = create_two_ring_dict(grotzsch_constants={'LA0/g1/0': '-1'})

        with pytest.raises(ModelSyntaxError, match='non-negative'):
            model_from_dict(data)

    def test_orbit_portrait_points_need_images(self):
        data = create_two_ring_dict()
        data['orbit_portraits'] = {'H': {'map': {'p': 'q'}}}

        with pytest.raises(DanglingIdentifierError, match='q'):
            model_from_dict(data)


def _failed_checks(data):
    return {c.name for c in validate_model(model_from_dict(data)).failures()}


class TestValidate:
    @pytest.mark.parametrize('params', TWO_RING_FAMILY, ids=family_id)
    def test_family_is_valid(self, params):
        pa, pb, n, tail = params
        report = validate_model(create_two_ring_model(pa, pb, n, tail))
        assert report.passed, report.to_text()

    def test_report_lists_every_check(self):
        report = validate_model(create_two_ring_model())

        assert set(report.names()) == set(REGISTERED_CHECKS) - {
            'mcmullen-hint'}
        assert report.to_text().endswith('valid')

    def test_degree_sum(self):
        data = create_two_ring_dict()
        data['pullback']['w2'][0]['degree'] = 7

        assert _failed_checks(data) == {'degree-sum'}

    def test_shi_parallel_degree_inconsistent(self):
        m = open_example_model('SHI')
        data = json.loads(serialize_model(m))
        data['piece_map'][0]['parallel_degree'] = 2
        data['piece_map'][1]['parallel_degree'] = 2
        data['piece_map'][1]['image'] = 'S_in'

        assert 'parallel-degree' in _failed_checks(data)

    def test_piece_count(self):
        data = create_two_ring_dict()
        data['pieces'][-1]['interior_marked_points'] = 1

        assert _failed_checks(data) == {'piece-count'}

    def test_rotation_budget(self):
        data = create_two_ring_dict()
        data['rotation_disk_cycles'] = 11

        assert _failed_checks(data) == {'rotation-budget'}

    def test_piece_map_not_a_function(self):
        data = create_two_ring_dict()
        data['piece_map'].append({'source': 'MA', 'image': 'MA'})

        assert 'piece-map-function' in _failed_checks(data)

    def test_annulus_rotation_number(self):
        data = create_two_ring_dict()
        data['annuli'][0]['rotation_number'] = '3/2'

        assert _failed_checks(data) == {'annulus-coherence'}

    def test_annulus_disk_modulus_too_large(self):
        data = create_two_ring_dict()
        data['annuli'][0]['disk_modulus'] = '1/3'

        assert _failed_checks(data) == {'annulus-coherence'}

    def test_component_off_its_piece(self):
        data = create_two_ring_dict()
        data['pullback']['e'][0]['piece'] = 'MB'

        assert 'component' in _failed_checks(data)

    def test_component_on_boundary_must_coincide(self):
        data = create_two_ring_dict()
        del data['pullback']['b1'][1]['coincides']

        assert 'component' in _failed_checks(data)

    def test_track_degree(self):
        data = create_two_ring_dict()
        data['pullback']['u0'] = [
            {'target': 'u0', 'degree': 3, 'piece': 'LA0'},
            {'target': PERIPHERAL, 'degree': 5, 'piece': 'H'}]

        assert _failed_checks(data) == {'track-degree'}

    def test_track(self):
        data = create_two_ring_dict()
        data['pullback']['w1'][0] = {'target': 'e', 'degree': 4, 'piece': 'H'}

        assert 'track' in _failed_checks(data)

    def test_boundary_sigma(self):
        data = create_two_ring_dict()
        data['pieces'][4]['boundary'] = ['g1', 'w1']

        assert 'boundary-sigma' in _failed_checks(data)

    def test_forward_image_coinciding(self):
        data = create_two_ring_dict()
        data['pullback']['b0'].insert(
            1, {'target': 'g2', 'degree': 1, 'piece': BOUNDARY,
                'coincides': 'g2'})
        data['pullback']['b0'][-1]['degree'] -= 1

        assert 'forward-image' in _failed_checks(data)

    def test_forward_image_two_sources(self):
        data = create_two_ring_dict()
        data['pullback']['h'].insert(
            -1, {'target': 'w1', 'degree': 1, 'piece': 'MA'})
        data['pullback']['h'][-1]['degree'] -= 1
        m = model_from_dict(data)

        report = validate_model(m)

        assert [(c.name, c.location) for c in report.failures()] == [
            ('forward-image', 'curves[w1]')]
        with pytest.raises(ValidationError, match='forward images'):
            forward_image(m, 'w1')

    def test_forward_image_gamma_uses_generation(self):
        # g1 is a preimage of a0, g2 and h but is generated by a0 alone
        m = create_two_ring_model()

        found = [c for c in validate_model(m).checks
                 if c.name == 'forward-image' and c.location == 'curves[g1]']

        assert len(found) == 1 and found[0].passed
        assert forward_image(m, 'g1') == 'a0'

    def test_periodic_d0(self):
        data = create_two_ring_dict()
        data['piece_map'][1]['image'] = 'H'

        assert 'periodic-d0' in _failed_checks(data)

    def test_mcmullen_hint(self):
        rational = create_two_ring_dict()
        rational['claims_rational'] = True
        rational['pullback']['u0'] = [
            {'target': 'u0', 'degree': 1, 'piece': 'LA0'},
            {'target': 'u0', 'degree': 1, 'piece': 'LA0'},
            {'target': PERIPHERAL, 'degree': 6, 'piece': 'H'}]

        report = validate_model(model_from_dict(rational))
        locations = [c.location for c in report.failures('mcmullen-hint')]

        # every stable multicurve through the doubled loop has λ = 2
        assert locations[0] == 'multicurve{u0}'
        assert all('u0' in location for location in locations)
        assert {c.name for c in report.failures()} == {'mcmullen-hint'}

    def test_mcmullen_hint_passes_when_contracting(self):
        data = create_two_ring_dict()
        data['claims_rational'] = True

        report = validate_model(model_from_dict(data))

        assert report.passed
        assert len([c for c in report.checks
                    if c.name == 'mcmullen-hint']) > 1

    def test_failures_never_raise(self):
        data = create_two_ring_dict()
        data['piece_map'] = data['piece_map'][1:]

        report = validate_model(model_from_dict(data))

        assert not report.passed
        assert report.to_text().endswith('INVALID')

    def test_register_check(self):
        @register_check('always-fails')
        def _always_fails(m, options):
            return [CheckResult('always-fails', False, 'model', 'no')]

        try:
            report = validate_model(create_two_ring_model())
            assert [c.name for c in report.failures()] == ['always-fails']
        finally:
            del REGISTERED_CHECKS['always-fails']

    def test_register_check_twice(self):
        with pytest.raises(ValueError, match='already registered'):
            register_check('degree-sum')(lambda m, options: [])

    def test_structured_report(self):
        report = validate_model(create_two_ring_model())
        data = report.to_dict()

        assert data['passed']
        assert all(set(c) == {'name', 'passed', 'location', 'message'}
                   for c in data['checks'])

