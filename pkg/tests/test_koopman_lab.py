from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from cfspectra.errors import (
    CharacterTypeError,
    ConsistencyError,
    LabelError,
    LagRangeError,
)
from cfspectra.finite_algebra import (
    Character,
    CyclotomicSum,
    FiniteAbelianGroup,
    GroupAutomorphism,
    ModuleAction,
    cyclo_equal,
    orbit_average,
)
from cfspectra.koopman_lab import (
    PhasedCycleOperator,
    SpectralSet,
    build_component,
    build_eta_component,
    build_chi_component,
    class_equivalence_check,
    correlation_decay,
    disjointness_certificate,
    exact_spectrum,
    factor_classes,
    multiplicity_report,
    permutation_operator,
    sample_lags,
    simplicity_probe,
    weak_limit_probe,
)
from cfspectra.module_factory import assemble_triple, dualize
from cfspectra.session import SessionConfig, synth


@pytest.fixture(scope="module")
def direct_session():
    return synth(SessionConfig(
        mode="direct", targets=(1, 2),
        blocks=((Fraction(1, 2), 4, 3, None),),
    ))


@pytest.fixture(scope="module")
def probe_session():
    return synth(SessionConfig(
        mode="direct", targets=(1, 2),
        blocks=((Fraction(1, 2), 4, None, (8, 8, 64, 64)),),
    ))


@pytest.fixture(scope="module")
def product_session():
    return synth(SessionConfig(
        mode="product", targets=(2, 3),
        blocks=((Fraction(1, 2), 5, None, (6, 6, 6, 6, 64)),),
    ))


class TestExactSpectrum:
    def test_plain_four_cycle(self):
        op = PhasedCycleOperator([1, 2, 3, 0], [0, 0, 0, 0], 4)
        eig = exact_spectrum(op).eigen_counter()
        assert eig == Counter({Fraction(0): 1, Fraction(1, 4): 1,
                               Fraction(1, 2): 1, Fraction(3, 4): 1})

    def test_two_cycle_with_half_phase(self):
        # z^2 = -1: eighth roots 1/4 and 3/4
        op = PhasedCycleOperator([1, 0], [1, 0], 2)
        eig = exact_spectrum(op).eigen_counter()
        assert eig == Counter({Fraction(1, 4): 1, Fraction(3, 4): 1})

    def test_disjoint_identical_cycles_double_multiplicity(self):
        op = PhasedCycleOperator([1, 0, 3, 2], [0, 0, 0, 0], 2)
        eig = exact_spectrum(op).eigen_counter()
        assert eig == Counter({Fraction(0): 2, Fraction(1, 2): 2})

    def test_total_multiplicity_equals_state_count(self):
        rng = np.random.default_rng(3)
        perm = rng.permutation(24)
        op = PhasedCycleOperator(perm, rng.integers(0, 12, 24), 12)
        assert exact_spectrum(op).total_multiplicity == 24

    def test_apply_matches_matrix(self):
        op = PhasedCycleOperator([1, 2, 0], [1, 0, 2], 3)
        v = np.array([1.0, 2.0, 3.0], dtype=complex)
        w = op.apply(v)
        z = np.exp(2j * np.pi / 3)
        assert np.allclose(w, [z * 2.0, 3.0, z**2 * 1.0])
        assert np.allclose(op.apply_inverse(op.apply(v)), v)


class TestComponents:
    def test_trivial_eta_is_pure_cycle(self, direct_session):
        s = direct_session
        op = build_component(s, Character(s.triple.k_group, (0,)), depth=3)
        assert not op.phase_exp.any()
        _, lengths, _ = op.cycles()
        assert list(lengths) == [s.schedule.height(3)]

    def test_eta_component_single_cycle_simple_spectrum(self, direct_session):
        s = direct_session
        for e in range(s.k_order):
            op = build_component(s, Character(s.triple.k_group, (e,)), depth=3)
            spec = exact_spectrum(op)
            assert spec.total_multiplicity == s.schedule.height(3)
            assert spec.is_simple()

    def test_plain_labels_give_phase_free_chi(self):
        s = synth(SessionConfig(mode="direct", targets=(1,), shape="staircase",
                                r_seq=(2, 3, 4)))
        d = s.factor_characters()[1]
        op = build_component(s, s.duality.character_of_dual(d))
        assert not op.phase_exp.any()

    def test_rotate_stage_phases_at_boundaries(self):
        # single rotate stage: phases are eta(-k) exactly at column boundaries
        s = synth(SessionConfig(mode="direct", targets=(1, 2),
                                blocks=((Fraction(1, 2), 2, 3, None),)))
        model = s.model(2)
        op = build_eta_component(model, 1, s.root_order)
        st = s.stage(2)
        assert s.label(2).kind == "rigid_rotate"
        interior = [l for l in range(st.base_height - 1)]
        assert not op.phase_exp[interior].any()

    def test_chi_wrong_rank_rejected(self, direct_session):
        with pytest.raises(CharacterTypeError):
            build_chi_component(direct_session.model(2), (1, 2, 3, 4),
                                direct_session.root_order)

    def test_wrong_dual_rejected(self, direct_session):
        foreign = Character(FiniteAbelianGroup((5,)), (1,))
        with pytest.raises(CharacterTypeError):
            build_component(direct_session, foreign)

    def test_fourier_consistency(self, direct_session):
        # multiset union of the group-character components equals the spectrum
        # of the plain permutation on levels x group
        s = direct_session
        depth = 3
        union = Counter()
        for e in range(s.k_order):
            op = build_component(s, Character(s.triple.k_group, (e,)), depth)
            union += exact_spectrum(op).eigen_counter()
        perm = permutation_operator(s.model(depth), s.root_order)
        assert union == exact_spectrum(perm).eigen_counter()

    def test_chi_cycle_holonomy_telescopes(self, direct_session):
        s = direct_session
        d = s.factor_characters()[1]
        op = build_component(s, s.duality.character_of_dual(d), depth=3)
        _, lengths, totals = op.cycles()
        assert all(t == 0 for t in totals)
        assert all(l == s.schedule.height(3) for l in lengths)


class TestClassEquivalence:
    def test_all_verdicts_true(self, direct_session):
        for d in direct_session.factor_characters():
            if not any(d):
                continue
            verdicts = class_equivalence_check(direct_session, d, depth=4)
            assert verdicts == {k: True for k in range(direct_session.k_order)}

    def test_identity_k_trivially_equal(self, direct_session):
        d = direct_session.factor_characters()[1]
        assert class_equivalence_check(direct_session, d, depth=2)[0] is True


class TestWeakLimitProbes:
    def test_rigidity_on_translate_stage(self, probe_session):
        rep = weak_limit_probe(probe_session, 3, ("eta", 0))
        assert rep.prediction_kind == "partial_rigidity"
        assert rep.tolerance == pytest.approx(3 / 64)
        assert rep.passed

    def test_orbit_average_on_translate_stage(self, probe_session):
        for d in [(1, 0), (0, 1), (1, 2)]:
            rep = weak_limit_probe(probe_session, 3, ("chi", d))
            assert rep.prediction_kind == "orbit_average"
            assert rep.passed, f"{d}: {rep.max_deviation} > {rep.tolerance}"

    def test_rotation_on_rotate_stage(self, probe_session):
        for e in range(probe_session.k_order):
            rep = weak_limit_probe(probe_session, 4, ("eta", e))
            assert rep.passed

    def test_delayed_on_delayed_stage(self, product_session):
        rep = weak_limit_probe(product_session, 5, ("eta", 0))
        assert rep.prediction_kind == "delayed"
        assert rep.passed
        rep = weak_limit_probe(product_session, 5, ("chi", (0, 1, 0)))
        assert rep.prediction_kind == "delayed_orbit_average"
        assert rep.passed

    def test_pair_table_sums_to_cylinder_carpet(self, probe_session):
        # summing the table over all pairs gives <U^h 1_C, 1_C> for the union
        # C of the cylinders; cross-check by direct counting
        s = probe_session
        rep = weak_limit_probe(s, 3, ("eta", 0))
        total = sum(r["value"][0] for r in rep.rows)
        model = s.model(3)
        cyl = model.cylinder_ids(1)
        h_n = s.stage(3).base_height
        covered = cyl >= 0
        direct = (covered & np.roll(covered, -h_n)).sum() / model.height
        assert total == pytest.approx(direct, abs=1e-12)

    def test_trivial_chi_reduces_to_rigidity(self, probe_session):
        rep = weak_limit_probe(probe_session, 3, ("chi", (0, 0)))
        assert rep.prediction_kind == "partial_rigidity"
        assert rep.passed

    def test_plain_stage_rejected(self):
        s = synth(SessionConfig(mode="direct", targets=(1,), shape="staircase",
                                r_seq=(2, 3)))
        with pytest.raises(LabelError):
            weak_limit_probe(s, 1, ("eta", 0))

    def test_rotate_stage_has_no_skew_prediction(self, probe_session):
        with pytest.raises(LabelError):
            weak_limit_probe(probe_session, 4, ("chi", (1, 0)))

    def test_mean_zero_vectors_weak_mixing_shadow(self, probe_session):
        # |<U^h v, v>| <= delta ||v||^2 + 3/r for mean-zero v on translate stages
        s = probe_session
        rep = weak_limit_probe(s, 3, ("eta", 0))
        n_cyl = s.schedule.height(1)
        vals = np.zeros((n_cyl, n_cyl), dtype=complex)
        mu = np.zeros(n_cyl)
        for row in rep.rows:
            vals[row["v"], row["u"]] = row["value"][0] + 1j * row["value"][1]
        model = s.model(3)
        cyl = model.cylinder_ids(1)
        for f in range(n_cyl):
            mu[f] = (cyl == f).sum() / model.height
        # v = 1_B0 - mu(B0) * 1 has <U^h v, v> = vals[0,0] - mu0 * (row sums)
        v00 = vals[0, 0] - mu[0] * vals[0, :].sum() - mu[0] * vals[:, 0].sum() \
            + mu[0] ** 2 * vals.sum()
        norm_sq = mu[0] * (1 - mu[0])
        assert abs(v00) <= 0.5 * norm_sq + 3 / 64


class TestCorrelationDecay:
    def setup_method(self):
        self.session = synth(SessionConfig(
            mode="direct", targets=(1,), shape="staircase", r_seq=(2, 2, 3, 3, 4),
        ))
        self.model = self.session.model()

    def test_lag_zero_self_correlation(self):
        rows = correlation_decay(self.model, [(0, 0)], [0])
        cyl = self.model.cylinder_ids(1)
        mu = Fraction(int((cyl == 0).sum()), self.model.height)
        assert rows[0].value == mu * (1 - mu)

    def test_out_of_range_lag(self):
        with pytest.raises(LagRangeError):
            correlation_decay(self.model, [(0, 0)], [self.model.height])

    def test_pure_rotation_has_no_decay(self):
        s = synth(SessionConfig(mode="direct", targets=(1,), shape="arithmetic",
                                r_seq=(2, 2, 2, 2, 2, 2)))
        model = s.model()
        h1 = s.schedule.height(1)
        rows_early = correlation_decay(model, [(0, 0)], [h1])
        rows_late = correlation_decay(model, [(0, 0)], [s.schedule.height(5)])
        # the odometer is rigid at tower heights: correlation stays maximal
        assert rows_late[0].value >= rows_early[0].value

    def test_staircase_decay_trend(self):
        s = synth(SessionConfig(
            mode="direct", targets=(1,), shape="staircase",
            r_seq=(2, 2, 3, 3, 4, 4, 5, 5, 6, 6),
        ))
        model = s.model()
        n_cyl = s.schedule.height(1)
        pairs = [(f, g) for f in range(n_cyl) for g in range(n_cyl)]
        h = s.schedule.heights()
        early = correlation_decay(model, pairs, sample_lags(h[1], 2 * h[1]))
        late = correlation_decay(model, pairs, sample_lags(h[9], 2 * h[9]))
        e_max = max(float(r.value) for r in early)
        l_max = max(float(r.value) for r in late)
        assert l_max <= 0.5 * e_max

    def test_sample_lags_deterministic_and_bounded(self):
        lags = sample_lags(100, 200, count=10)
        assert lags == sample_lags(100, 200, count=10)
        assert lags[0] == 100 and lags[-1] == 200
        assert sample_lags(5, 7) == [5, 6, 7]


class TestCertificates:
    def setup_method(self):
        self.rec = dualize(assemble_triple({1, 2}))

    def test_same_character_witnessed_by_identity(self):
        chi = self.rec.character_of_dual((1, 1))
        cert = disjointness_certificate(self.rec, chi, chi)
        assert cert.equivalent and cert.witness_k == 0

    def test_conjugate_pair_witnessed(self):
        chi = self.rec.character_of_dual((0, 1))
        chi2 = self.rec.character_of_dual((0, 2))  # the orbit partner
        cert = disjointness_certificate(self.rec, chi, chi2)
        assert cert.equivalent and cert.witness_k == 1

    def test_separating_element_found(self):
        chi = self.rec.character_of_dual((1, 0))
        chi2 = self.rec.character_of_dual((0, 1))
        cert = disjointness_certificate(self.rec, chi, chi2)
        assert not cert.equivalent
        assert not cyclo_equal(cert.l_left, cert.l_right)

    def test_coordinate_action_example(self):
        # module Z/3 + Z/3, group element negates the first coordinate only
        module = FiniteAbelianGroup((3, 3))
        theta = GroupAutomorphism(module, ((2, 0), (0, 1)))
        k2 = FiniteAbelianGroup((2,))
        action = ModuleAction(k2, module, (theta,))

        class FakeTriple:
            k_order = 2

        class FakeDual:
            dual_action = action
            triple = FakeTriple()

        chi1 = Character(module, (1, 0))
        chi2 = Character(module, (0, 1))
        cert = disjointness_certificate(FakeDual(), chi1, chi2)
        assert not cert.equivalent
        assert not cyclo_equal(cert.l_left, cert.l_right)
        # the element with a genuinely averaged orbit separates as 1 vs -1/2
        assert orbit_average(action, chi1, (1, 0)) == CyclotomicSum.from_fraction(
            Fraction(-1, 2)
        )
        assert orbit_average(action, chi2, (1, 0)) == CyclotomicSum.from_fraction(1)


class TestMultiplicityReport:
    def test_trivial_module(self):
        s = synth(SessionConfig(mode="direct", targets=(1,),
                                blocks=((Fraction(1, 2), 4, 3, None),)))
        rep = multiplicity_report(s, spectra_depth=4)
        assert rep.multiplicities == {1}
        assert rep.consistent

    def test_direct_12(self, direct_session):
        rep = multiplicity_report(direct_session, spectra_depth=4)
        assert rep.multiplicities == {1, 2}
        assert sorted(rep.class_sizes) == [1, 2, 2]
        assert rep.consistent
        assert all(all(v.values()) for v in rep.equivalence_verdicts.values())
        assert all(not c.equivalent for c in rep.certificates.values())

    def test_product_23(self, product_session):
        rep = multiplicity_report(product_session, spectra_depth=4)
        assert rep.multiplicities == {2, 3}
        assert set(rep.class_sizes) == {2, 3}
        assert rep.consistent

    def test_single_two_in_product_mode(self):
        s = synth(SessionConfig(mode="product", targets=(2,),
                                blocks=((Fraction(1, 2), 4, 4, None),)))
        rep = multiplicity_report(s, spectra_depth=4)
        assert rep.multiplicities == {2}  # class sizes {2}, square factor adds 2

    def test_classes_partition_nonzero_d(self, product_session):
        classes = factor_classes(product_session)
        union = [d for cls in classes for d in cls]
        d_all = set(product_session.triple.d_elements())
        zero = product_session.triple.module.zero()
        assert sorted(union) == sorted(d_all - {zero})


class TestSimplicityProbe:
    def test_identity_operator_distance_to_line(self):
        ident = PhasedCycleOperator([0, 1, 2], [0, 0, 0], 2)
        v = np.array([1.0, 1.0, 0.0])
        rep = simplicity_probe(ident, None, v, power_window=3)
        assert rep.residuals[0] == pytest.approx(np.sqrt(1 / 2), abs=1e-9)
        assert rep.residuals[2] == pytest.approx(1.0, abs=1e-9)
        assert all(rep.conditioning_flags)  # powers of the identity collapse

    def test_cyclic_vector_spans_quadratic_phases(self):
        n = 15
        succ = (np.arange(n) + 1) % n
        phases = np.array([(2 * t + 1) % n for t in range(n)])
        op = PhasedCycleOperator(succ, phases, n)
        assert exact_spectrum(op).is_simple()
        rep = simplicity_probe(op, None, np.ones(n), power_window=n)
        assert rep.max_residual <= 1e-6

    def test_shared_eigenvalue_blocks_joint_cyclicity(self):
        op1 = PhasedCycleOperator([1, 0], [0, 0], 4)  # eigenvalues {1, -1}
        op2 = PhasedCycleOperator([0], [0], 4)  # eigenvalue {1}: collision
        v = np.array([1.0, 0.0, 1.0])
        rep = simplicity_probe(op1, op2, v, power_window=4)
        assert rep.max_residual >= 0.1

    def test_distinct_components_jointly_cyclic(self):
        op1 = PhasedCycleOperator([1, 0], [0, 0], 4)  # {1, -1}
        op2 = PhasedCycleOperator([0], [1], 4)  # {i}: disjoint
        v = np.array([1.0, 0.0, 1.0])
        rep = simplicity_probe(op1, op2, v, power_window=4)
        assert rep.max_residual <= 1e-9
