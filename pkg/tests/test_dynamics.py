import numpy as np
import pytest

from ccnet.admissible import AdmissibleSystem
from ccnet.dynamics import (CollapseToEquilibrium, NoConvergence, Trajectory,
                            detect_phase, detect_steady_nodes,
                            detect_synchrony, find_periodic_orbit, floquet,
                            integrate, is_hyperbolic, orbit_from_point,
                            upstream_closure)
from ccnet.library import (HOPF, hopf_coupled, rotation_system,
                           three_node_ring, uniform_ring)
from ccnet.network import mk_network


class TestIntegrate:
    def test_zero_field_constant(self, ring):
        sys = AdmissibleSystem(ring, {"P": 1, "Q": 1}, {1: "0", 3: "0"})
        traj = integrate(sys, [1.0, 2.0, 3.0], 5.0)
        assert np.array_equal(traj.states[-1], traj.states[0])

    def test_planar_rotation_returns(self):
        traj = integrate(rotation_system(), [1.0, 0.0], 2 * np.pi, h=1e-3)
        assert np.max(np.abs(traj.states[-1] - traj.states[0])) < 1e-6

    def test_hopf_attracts_to_unit_circle(self, hopf):
        traj = integrate(hopf, [0.1, 0.0], 50.0, h=1e-3, record_every=1000)
        assert abs(np.linalg.norm(traj.states[-1]) - 1.0) < 1e-6

    def test_blowup_guard(self, ring):
        sys = AdmissibleSystem(ring, {"P": 1, "Q": 1}, {1: "x[1]^3", 3: "x[1]^3"})
        from ccnet.admissible import FlowDiverged
        with pytest.raises(FlowDiverged):
            integrate(sys, [2.0, 2.0, 2.0], 50.0)

    def test_error_estimate_reported(self, hopf):
        traj = integrate(hopf, [0.5, 0.0], 1.0, h=1e-2)
        assert 0 < traj.error_estimate < 1e-8


class TestOrbitFinding:
    def test_hopf_period(self, hopf):
        orb = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        assert abs(orb.period - 2 * np.pi) < 1e-6
        assert orb.residual < 1e-10

    def test_equilibrium_guess_collapses(self, hopf):
        with pytest.raises(CollapseToEquilibrium):
            find_periodic_orbit(hopf, np.array([0.0, 0.0]), 6.0)

    def test_perturbed_orbit_found_ne_orbit_displacement(self, hopf):
        # continuation stays O(eps) from the unperturbed cycle
        from ccnet.admissible import Perturbation, PerturbedSystem
        base = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        pert = Perturbation(class_rep=1, z=np.array([0.0, 1.2]), delta=0.6,
                            w=np.array([1.0, 0.0]))
        moved = {}
        for eps in (1e-3, 1e-4):
            psys = PerturbedSystem(hopf, [pert], eps)
            orb = find_periodic_orbit(psys, base.anchor, base.period,
                                      section=(base.section_point, base.section_normal))
            moved[eps] = np.linalg.norm(orb.anchor - base.anchor) + abs(orb.period - base.period)
        assert moved[1e-3] < 0.05
        ratio = moved[1e-3] / moved[1e-4]
        assert 3 < ratio < 30  # roughly linear in eps

    def test_bad_guess_does_not_converge(self, hopf):
        with pytest.raises((NoConvergence, CollapseToEquilibrium)):
            find_periodic_orbit(hopf, np.array([50.0, 50.0]), 0.01, max_iter=3)


class TestFloquet:
    def test_hopf_multipliers(self, hopf):
        orb = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        mus = floquet(hopf, orb)
        assert abs(mus[0] - 1.0) < 1e-6
        assert abs(mus[1] - np.exp(-4 * np.pi)) / np.exp(-4 * np.pi) < 1e-4

    def test_trivial_multiplier_on_every_found_orbit(self, hopf, wave):
        sys, guess, T = wave
        for s, x, t in ((hopf, np.array([0.9, 0.0]), 6.0), (sys, guess, T)):
            orb = find_periodic_orbit(s, x, t)
            assert abs(orb.multipliers[0] - 1.0) < 1e-5

    def test_flowmap_method_agrees_coarsely(self, hopf):
        orb = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        mus_v = floquet(hopf, orb, method="variational")
        mus_f = floquet(hopf, orb, method="flowmap")
        assert abs(mus_v[0] - mus_f[0]) < 1e-6

    def test_fig3_two_unit_multipliers(self, fig3_system):
        x0 = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        settle = integrate(fig3_system, x0, 40.0, h=1e-3, record_every=4000)
        orb = orbit_from_point(fig3_system, settle.states[-1], 2 * np.pi, tol=1e-8)
        near_one = np.sum(np.abs(orb.multipliers - 1.0) < 1e-3)
        assert near_one == 2


class TestHyperbolicity:
    def test_hopf_hyperbolic(self, hopf):
        orb = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        rep = is_hyperbolic(hopf, orb)
        assert rep.verdict == "hyperbolic" and not rep.warnings

    def test_fig3_structural_warning(self, fig3_system, fig3_net):
        x0 = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        settle = integrate(fig3_system, x0, 40.0, h=1e-3, record_every=4000)
        orb = orbit_from_point(fig3_system, settle.states[-1], 2 * np.pi, tol=1e-8)
        rep = is_hyperbolic(fig3_system, orb, net=fig3_net)
        assert rep.verdict == "non-hyperbolic"
        assert rep.structural_obstruction
        assert any("maximal transitive" in w for w in rep.warnings)

    def test_sheared_torus_quasi_hyperbolic(self, hopf):
        from ccnet.quotient import double, doubled_system, shear
        orb = find_periodic_orbit(hopf, np.array([1.2, 0.0]), 6.0)
        dsys = doubled_system(hopf, double(hopf.network))
        sheared = shear(orb, 0.3)
        orb2 = orbit_from_point(dsys, sheared[0], orb.period, tol=1e-8)
        rep = is_hyperbolic(dsys, orb2, net=dsys.network)
        assert rep.verdict == "non-hyperbolic"
        assert rep.quasi_hyperbolic
        assert rep.near_one == 2


class TestSynchronyDetection:
    def test_exact_diagonal(self, scenarios):
        s = scenarios["A"]
        orb = find_periodic_orbit(s.system, s.x_guess, s.T_guess)
        col = detect_synchrony(s.system, orb.samples)
        assert col == s.colouring

    def test_decoupled_generic_phases_trivial(self):
        # isolated same-type nodes share one component, yet generic phases
        # keep them unsynchronised
        net = mk_network(["H", "H"], [])
        sys = AdmissibleSystem(net, {"H": 2}, {1: HOPF})
        x0 = np.array([1.0, 0.0, np.cos(1.1), np.sin(1.1)])
        traj = integrate(sys, x0, 2 * np.pi, h=1e-3, record_every=10)
        col = detect_synchrony(sys, traj)
        assert col.parts == ((1,), (2,))

    def test_threshold_semantics(self):
        net = mk_network(["H", "H"], [])
        sys = AdmissibleSystem(net, {"H": 1}, {1: "0"})
        states = np.array([[0.0, 1e-3], [0.0, 1e-3]])
        col = detect_synchrony(sys, states, tol=1e-8)
        assert col.parts == ((1,), (2,))  # gap 1e-3 >> tol
        states = np.array([[0.0, 1e-10], [0.0, 1e-10]])
        col = detect_synchrony(sys, states, tol=1e-8)
        assert col.parts == ((1, 2),)


class TestPhaseDetection:
    def test_wave_shift_one_third(self, wave, wave_orbit):
        sys, _, _ = wave
        pat = detect_phase(sys, wave_orbit)
        assert pat.shifts(1, 2).contains(1.0 / 3.0)
        thetas = pat.shifts(1, 2).thetas()
        assert min(abs(t - 1 / 3) for t in thetas) < 1e-6

    def test_self_shift_zero(self, wave, wave_orbit):
        sys, _, _ = wave
        pat = detect_phase(sys, wave_orbit)
        for c in (1, 2, 3):
            assert pat.shifts(c, c).contains(0.0)

    def test_reflection_symmetry(self, wave, wave_orbit):
        sys, _, _ = wave
        pat = detect_phase(sys, wave_orbit)
        for (c, d), pair in pat.pairs.items():
            if pair.full_circle:
                assert pat.shifts(d, c).full_circle
                continue
            for theta, _ in pair.shifts:
                assert pat.shifts(d, c).contains((1.0 - theta) % 1.0)

    def test_steady_nodes_full_circle(self, scenarios):
        s = scenarios["D"]  # nodes 2, 3 rest at the origin
        orb = find_periodic_orbit(s.system, s.x_guess, s.T_guess)
        pat = detect_phase(s.system, orb)
        assert pat.shifts(2, 2).full_circle
        assert pat.shifts(2, 3).full_circle
        assert not pat.shifts(1, 1).full_circle
        assert not pat.shifts(1, 2).full_circle and not pat.shifts(1, 2).shifts


class TestSteadyAndUpstream:
    def test_constant_trajectory_all_steady(self, ring):
        sys = AdmissibleSystem(ring, {"P": 1, "Q": 1}, {1: "0", 3: "0"})
        traj = integrate(sys, [1.0, 2.0, 3.0], 1.0)
        assert detect_steady_nodes(sys, traj) == frozenset({1, 2, 3})

    def test_fig3_steady_set_and_closure(self, fig3_steady_system, fig3_net):
        x0 = np.array([0.0, 0.0, 1.0, 0.0, 0.2, 0.1])
        settle = integrate(fig3_steady_system, x0, 40.0, h=1e-3, record_every=4000)
        orb = find_periodic_orbit(fig3_steady_system, settle.states[-1], 2 * np.pi)
        steady = detect_steady_nodes(fig3_steady_system, orb.samples)
        assert steady == frozenset({1})
        assert upstream_closure(fig3_net, [3]) == frozenset({1, 2, 3})
        assert upstream_closure(fig3_net, steady) == steady

    def test_transitive_ring_closure_is_everything(self, uni3):
        for c in (1, 2, 3):
            assert upstream_closure(uni3, [c]) == frozenset({1, 2, 3})
