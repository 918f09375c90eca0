"""Built-in networks and systems used by the case studies and tests.

The planar limit-cycle normal form (unit circle, unit angular speed,
radial contraction rate 2) is the workhorse oscillator; the case-study
systems on the 3-node ring are engineered so that the unperturbed flow
admits the synchrony pattern under test exactly while the full orbit
stays hyperbolic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admissible import AdmissibleSystem
from .colouring import Colouring
from .network import Network, mk_network

HOPF = ("x[1]*(1 - x[1]^2 - x[2]^2) - x[2], "
        "x[2]*(1 - x[1]^2 - x[2]^2) + x[1]")


def hopf_coupled(kappa: float, n_inputs: int = 1) -> str:
    """Limit-cycle normal form with diffusive coupling to the mean input."""
    if n_inputs == 1:
        u1, u2 = "u[1][1]", "u[1][2]"
    else:
        u1 = "(" + " + ".join(f"u[{j}][1]" for j in range(1, n_inputs + 1)) + f")/{n_inputs}"
        u2 = "(" + " + ".join(f"u[{j}][2]" for j in range(1, n_inputs + 1)) + f")/{n_inputs}"
    return (f"x[1]*(1 - x[1]^2 - x[2]^2) - x[2] + {kappa}*({u1} - x[1]), "
            f"x[2]*(1 - x[1]^2 - x[2]^2) + x[1] + {kappa}*({u2} - x[2])")


# -- networks -----------------------------------------------------------------

def three_node_ring() -> Network:
    """Directed 3-ring with two arrow types: solid 3->1->2, dashed 2->3.
    Nodes 1, 2 share an input type; node 3 differs, so the network is not
    semihomogeneous although all three state spaces are forced equal."""
    return mk_network({1: "P", 2: "P", 3: "Q"},
                      [("solid", 1, 3), ("solid", 2, 1), ("dashed", 3, 2)])


def two_max_component_net() -> Network:
    """Two autonomous nodes both feeding a third: two maximal transitive
    components, so orbits oscillating on both cannot be hyperbolic."""
    return mk_network({1: "T1", 2: "T2", 3: "T3"},
                      [("a", 3, 1), ("b", 3, 2)])


def ode_pair() -> tuple[Network, Network]:
    """Two 2-node networks with different diagrams but the same admissible
    maps: a symmetric ring, and the same ring with dashed self-loops."""
    g1 = mk_network(["N", "N"], [("s", 1, 2), ("s", 2, 1)])
    g2 = mk_network(["N", "N"], [("s", 1, 2), ("s", 2, 1), ("d", 1, 1), ("d", 2, 2)])
    return g1, g2


def canonical_two_node(class_id: int, p: int = 1, q: int = 1) -> Network:
    """The eight canonical 2-node networks of the ODE-equivalence
    classification."""
    if class_id == 1:
        return mk_network(["N", "N"], [])
    if class_id == 2:
        return mk_network(["A", "B"], [])
    if class_id == 3:
        return mk_network(["A", "B"], [("a", 1, 2), ("b", 2, 1)])
    if class_id == 4:
        return mk_network(["N", "N"], [("s", 1, 2), ("s", 2, 1)])
    if class_id == 5:
        return mk_network(["A", "B"], [("a", 2, 1)])
    if class_id == 6:
        return mk_network(["N", "N"], [("s", 1, 1), ("s", 2, 1)])
    if class_id == 7:
        return mk_network(["N", "N"], [("s", 1, 2), ("s", 2, 1), ("t", 1, 2), ("t", 2, 2)])
    if class_id == 8:
        arrows = ([("s", 1, 2)] * (p + q) + [("s", 2, 1)] * q + [("s", 2, 2)] * p)
        return mk_network(["N", "N"], arrows)
    raise ValueError(f"class id must be 1..8, got {class_id}")


def uniform_ring(n: int = 3) -> Network:
    """Directed ring with one node type and one arrow type; its
    automorphism group is cyclic of order n."""
    return mk_network(["R"] * n, [("s", (c % n) + 1, c) for c in range(1, n + 1)])


def four_node_control_net() -> Network:
    """Four nodes, one arrow type, two in-valences.  The colouring
    {{1,3},{2,4}} is balanced; the all-one colouring is not, and its
    coarsest balanced refinement is that 2-colouring."""
    return mk_network(["C", "C", "C", "C"],
                      [("s", 1, 2), ("s", 3, 4),
                       ("s", 2, 1), ("s", 2, 3),
                       ("s", 4, 3), ("s", 4, 1)])


def hopf_network() -> Network:
    return mk_network(["H"], [])


# -- systems ------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """A ready-to-probe setup: system, the synchrony pattern its orbit is
    engineered to carry, an exact anchor guess and the period."""

    name: str
    system: AdmissibleSystem
    colouring: Colouring
    x_guess: np.ndarray
    T_guess: float


def hopf_system() -> AdmissibleSystem:
    return AdmissibleSystem(hopf_network(), {"H": 2}, {1: HOPF})


def rotation_system() -> AdmissibleSystem:
    return AdmissibleSystem(hopf_network(), {"H": 2}, {1: "-x[2], x[1]"})


def two_max_component_system(node1_oscillates: bool = True) -> AdmissibleSystem:
    """Both maximal nodes oscillating (structurally non-hyperbolic orbit)
    or node 1 resting at the origin (hyperbolic, rigidly steady node)."""
    net = two_max_component_net()
    comp1 = HOPF if node1_oscillates else "-x[1], -x[2]"
    drive = ("-x[1] + u[1][1] + u[2][1], "
             "-x[2] + u[1][2] + u[2][2]")
    return AdmissibleSystem(net, {"T1": 2, "T2": 2, "T3": 2},
                            {1: comp1, 2: HOPF, 3: drive})


def ring_wave_system(kappa: float = 0.2, n: int = 3) -> tuple[AdmissibleSystem, np.ndarray, float]:
    """Uniform ring with diffusive coupling plus the exact rotating-wave
    initial state (radius from the coupling strength) and its period."""
    net = uniform_ring(n)
    sys = AdmissibleSystem(net, {"R": 2}, {1: hopf_coupled(kappa)})
    r = np.sqrt(1 - kappa * (1 - np.cos(2 * np.pi / n)))
    omega = 1 + kappa * np.sin(2 * np.pi / n)
    guess = []
    for c in range(1, n + 1):
        ph = -2 * np.pi * c / n
        guess += [r * np.cos(ph), r * np.sin(ph)]
    return sys, np.asarray(guess), 2 * np.pi / omega


def mixed_ring_wave_system(kappa: float = 0.2) -> tuple[AdmissibleSystem, np.ndarray, float]:
    """The 3-node two-arrow-type ring with equal component expressions for
    both classes: the system is rotation-symmetric even though the network
    is not, so it carries a rotating wave whose 1/3 phase shifts are not
    protected by the network."""
    net = three_node_ring()
    f = hopf_coupled(kappa)
    sys = AdmissibleSystem(net, {"P": 2, "Q": 2}, {1: f, 3: f})
    r = np.sqrt(1 - 1.5 * kappa)
    omega = 1 + kappa * np.sin(2 * np.pi / 3)
    guess = []
    for c in (1, 2, 3):
        ph = -2 * np.pi * c / 3
        guess += [r * np.cos(ph), r * np.sin(ph)]
    return sys, np.asarray(guess), 2 * np.pi / omega


_BISTABLE = ("-((x[1]^2 + x[2]^2 - 0.25)*(x[1]^2 + x[2]^2 - 1))*x[1] - x[2], "
             "-((x[1]^2 + x[2]^2 - 0.25)*(x[1]^2 + x[2]^2 - 1))*x[2] + x[1]")


def case_study_scenarios() -> tuple[Scenario, ...]:
    """The four engineered synchrony patterns on the 3-node ring.

    Each system has a hyperbolic periodic orbit that carries the stated
    pattern exactly; all four patterns are unbalanced, so a rigidity probe
    should break each of them.

    A: all three synchronous on a coupled limit cycle.
    B: nodes 1, 2 resting at a common point away from node 3's cycle.
    C: nodes 1, 3 resting at the origin inside node 2's cycle (node 1's
       own field is bistable: stable focus at 0 plus a stable cycle).
    D: nodes 2, 3 resting at the origin; node 1 runs the cycle.
    """
    net = three_node_ring()
    dims = {"P": 2, "Q": 2}
    nodes = net.node_ids

    coupled = hopf_coupled(0.5)
    sys_a = AdmissibleSystem(net, dims, {1: coupled, 3: coupled})
    a = Scenario("A", sys_a, Colouring.monochrome(nodes),
                 np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0]), 2 * np.pi)

    rest = "-(x[1] - 3), -(x[2] - 3)"
    sys_b = AdmissibleSystem(net, dims, {1: rest, 3: HOPF})
    b = Scenario("B", sys_b, Colouring.from_parts(nodes, [(1, 2), (3,)]),
                 np.array([3.0, 3.0, 3.0, 3.0, 1.0, 0.0]), 2 * np.pi)

    sys_c = AdmissibleSystem(net, dims, {1: _BISTABLE, 3: "-x[1], -x[2]"})
    c = Scenario("C", sys_c, Colouring.from_parts(nodes, [(1, 3), (2,)]),
                 np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), 2 * np.pi)

    sys_d = AdmissibleSystem(net, dims, {1: HOPF, 3: "-x[1], -x[2]"})
    d = Scenario("D", sys_d, Colouring.from_parts(nodes, [(2, 3), (1,)]),
                 np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 2 * np.pi)

    return (a, b, c, d)


def control_scenario(kappa: float = 0.1) -> Scenario:
    """Balanced 2-colouring control: the 4-node network's anti-phase orbit
    x1 = x3 = p, x2 = x4 = -p on a circle of radius sqrt(1 - 2*kappa).
    The pattern is balanced, so admissible perturbations must preserve it."""
    net = four_node_control_net()
    sys = AdmissibleSystem(net, {"C": 2},
                           {1: hopf_coupled(kappa, 1), 2: hopf_coupled(kappa, 2)})
    rho = np.sqrt(1 - 2 * kappa)
    guess = np.array([rho, 0.0, -rho, 0.0, rho, 0.0, -rho, 0.0])
    return Scenario("control", sys,
                    Colouring.from_parts(net.node_ids, [(1, 3), (2, 4)]),
                    guess, 2 * np.pi)
