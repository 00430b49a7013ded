"""Complex-amplitude algebra for directional-coupler networks.

A :class:`ModeNetwork` is an ordered list of couplers and phase shifters acting
on ``M`` waveguides. Networks compile to an ``M x M`` unitary ``U`` with the
convention ``a_out = U @ a_in`` (column = input waveguide, row = output).

Couplers use the symmetric convention

    [[sqrt(1 - eta),              1j * exp(1j*phi) * sqrt(eta)],
     [1j * exp(-1j*phi) * sqrt(eta), sqrt(1 - eta)            ]]

where ``eta`` is the cross-coupled power fraction (the "reflectivity").
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

UNITARY_TOL = 1e-12


class TopologyError(ValueError):
    """A reverse pass touches stages that leave the requested mode subset."""


@dataclass(frozen=True)
class CouplerElement:
    mode_a: int
    mode_b: int
    eta: float
    phi: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"coupler reflectivity must lie in [0, 1], got {self.eta}")
        if self.mode_a == self.mode_b:
            raise ValueError("coupler needs two distinct modes")
        if min(self.mode_a, self.mode_b) < 0:
            raise ValueError("mode index must be non-negative")

    @property
    def modes(self) -> tuple[int, int]:
        return (self.mode_a, self.mode_b)

    def matrix(self) -> np.ndarray:
        return coupler_unitary(self)


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phase: float
    name: str = ""

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode index must be non-negative")

    @property
    def modes(self) -> tuple[int]:
        return (self.mode,)

    def matrix(self) -> np.ndarray:
        return np.array([[np.exp(1j * self.phase)]])


Stage = Union[CouplerElement, PhaseShifter]


@dataclass(frozen=True)
class ModeNetwork:
    """Ordered stages over ``mode_count`` labelled waveguides.

    ``labels`` name the input ports and ``output_labels`` the output ports.
    They differ when a logical rail leaves on a different waveguide than it
    entered, which is what happens in the post-selected CNOT.
    """

    mode_count: int
    stages: tuple[Stage, ...] = ()
    labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode_count <= 0:
            raise ValueError("mode_count must be positive")
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.mode_count)))
        if not self.output_labels:
            object.__setattr__(self, "output_labels", tuple(f"{s}'" for s in self.labels))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "output_labels", tuple(self.output_labels))
        if len(self.labels) != self.mode_count or len(self.output_labels) != self.mode_count:
            raise ValueError("need exactly one label per mode")
        if len(set(self.labels)) != self.mode_count or len(set(self.output_labels)) != self.mode_count:
            raise ValueError("mode labels must be unique")
        for st in self.stages:
            if max(st.modes) >= self.mode_count:
                raise ValueError(f"stage {st} references a mode outside 0..{self.mode_count - 1}")

    def index(self, mode: int | str) -> int:
        """Input-side index of a mode given by index or input label."""
        if isinstance(mode, (int, np.integer)):
            if not 0 <= mode < self.mode_count:
                raise ValueError(f"mode {mode} out of range")
            return int(mode)
        return self.labels.index(mode)

    def output_index(self, mode: int | str) -> int:
        if isinstance(mode, (int, np.integer)):
            return self.index(mode)
        return self.output_labels.index(mode)

    def then(self, *stages: Stage) -> "ModeNetwork":
        return ModeNetwork(self.mode_count, self.stages + tuple(stages), self.labels, self.output_labels)

    def select(self, name: str) -> "ModeNetwork":
        """Sub-network holding only the stages tagged ``name``."""
        return ModeNetwork(self.mode_count, tuple(s for s in self.stages if s.name == name),
                           self.labels, self.output_labels)

    def without(self, name: str) -> "ModeNetwork":
        return ModeNetwork(self.mode_count, tuple(s for s in self.stages if s.name != name),
                           self.labels, self.output_labels)

    def with_outputs(self, output_labels: Sequence[str]) -> "ModeNetwork":
        return ModeNetwork(self.mode_count, self.stages, self.labels, tuple(output_labels))

    def unitary(self) -> np.ndarray:
        return compile_network(self)


def coupler_unitary(element: CouplerElement) -> np.ndarray:
    eta, phi = element.eta, element.phi
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"coupler reflectivity must lie in [0, 1], got {eta}")
    t = np.sqrt(1.0 - eta)
    r = np.sqrt(eta)
    return np.array([[t, 1j * np.exp(1j * phi) * r],
                     [1j * np.exp(-1j * phi) * r, t]], dtype=complex)


def _apply_stage(U: np.ndarray, stage: Stage, modes: Sequence[int]) -> None:
    # left-multiplies U in place by the stage embedded at `modes`
    m = list(modes)
    U[m, :] = stage.matrix() @ U[m, :]


def compile_network(net: ModeNetwork) -> np.ndarray:
    """Product of stage unitaries, first stage applied first."""
    U = np.eye(net.mode_count, dtype=complex)
    for stage in net.stages:
        _apply_stage(U, stage, stage.modes)
    return U


def is_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and \
        np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) < tol


def embed(block: np.ndarray, modes: Sequence[int], mode_count: int) -> np.ndarray:
    U = np.eye(mode_count, dtype=complex)
    U[np.ix_(list(modes), list(modes))] = block
    return U


def reverse_pass_unitary(net: ModeNetwork, mode_subset: Sequence[int | str]) -> np.ndarray:
    """Unitary seen by light travelling backwards through ``net`` on ``mode_subset``.

    Stages touching the subset are applied in reverse order, each with its own
    forward matrix (couplers are direction-symmetric in this convention). The
    result acts on the subset in the order given.
    """
    subset = [net.index(m) for m in mode_subset]
    if len(set(subset)) != len(subset):
        raise ValueError("mode subset has repeated modes")
    pos = {m: k for k, m in enumerate(subset)}
    U = np.eye(len(subset), dtype=complex)
    for stage in reversed(net.stages):
        touched = [m for m in stage.modes if m in pos]
        if not touched:
            continue
        if len(touched) != len(stage.modes):
            raise TopologyError(f"stage {stage} couples the subset to modes outside it")
        _apply_stage(U, stage, [pos[m] for m in stage.modes])
    return U


# ---------------------------------------------------------------------------
# the post-selected CNOT

#: Waveguides are named by chip port: inputs A..F, outputs A'..F'.
CHIP_INPUTS = ("A", "B", "C", "D", "E", "F")
CHIP_OUTPUTS = ("A'", "B'", "C'", "D'", "E'", "F'")

#: Dual-rail assignment of the CNOT. Each entry is ((in0, in1), (out0, out1)).
#: Logical rails continue through the cross port of each 1/3 coupler, so
#: every rail leaves on a different waveguide than it entered.
CONTROL_RAILS = (("B", "C"), ("A'", "D'"))
TARGET_RAILS = (("D", "E"), ("C'", "F'"))
VACUUM_INPUTS = ("A", "F")

#: Phase shifters that make the post-selected operator exactly CNOT/3.
#: Found by exhaustive search over quarter-wave settings; see tests.
CNOT_PHASES = {
    "target_in": ("E", np.pi / 2),        # on T1 before the first balanced coupler
    "target_arm": ("F", np.pi),           # T1 arm between the 1/3 and final coupler
    "target_out0": ("C", np.pi),          # output waveguide C' (T0)
    "target_out1": ("F", 3 * np.pi / 2),  # output waveguide F' (T1)
}


def cnot_network(eta: float = 1 / 3, balanced: tuple[float, float] = (0.5, 0.5),
                 etas: Sequence[float] | None = None, phis: Sequence[float] | None = None) -> ModeNetwork:
    """Six-mode post-selected CNOT built from three 1/3 couplers and two balanced ones.

    Stage 1: balanced coupler on the target rails; stage 2: three ``eta``
    couplers on (vA, C0), (C1, T0), (T1, vB); stage 3: balanced coupler on
    the target rails. ``etas``/``phis`` override the three central couplers
    and all five couplers' cross phases to model fabrication errors.
    """
    A, B, C, D, E, F = range(6)
    etas = tuple(etas) if etas is not None else (eta, eta, eta)
    phis = tuple(phis) if phis is not None else (0.0,) * 5
    if len(etas) != 3 or len(phis) != 5:
        raise ValueError("need 3 central reflectivities and 5 coupler phases")
    ps = {k: PhaseShifter(CHIP_INPUTS.index(lbl), ph, name="cnot")
          for k, (lbl, ph) in CNOT_PHASES.items()}
    stages = (
        ps["target_in"],
        CouplerElement(D, E, balanced[0], phis[0], name="cnot"),
        CouplerElement(A, B, etas[0], phis[1], name="cnot"),
        CouplerElement(C, D, etas[1], phis[2], name="cnot"),
        CouplerElement(E, F, etas[2], phis[3], name="cnot"),
        ps["target_arm"],
        CouplerElement(C, F, balanced[1], phis[4], name="cnot"),
        ps["target_out0"],
        ps["target_out1"],
    )
    return ModeNetwork(6, stages, CHIP_INPUTS, CHIP_OUTPUTS)


def hadamard_coupler(mode_a: int, mode_b: int, name: str = "") -> tuple[Stage, ...]:
    """Balanced coupler dressed with -pi/2 shifters so it acts as a real Hadamard."""
    return (PhaseShifter(mode_b, -np.pi / 2, name),
            CouplerElement(mode_a, mode_b, 0.5, 0.0, name),
            PhaseShifter(mode_b, -np.pi / 2, name))


def bell_network(cnot: ModeNetwork | None = None, alpha: bool = True) -> ModeNetwork:
    """Control Hadamard (alpha), target flip, CNOT, then beta on the control outputs.

    With the control photon in C0 and the target in T0 the post-selected
    state is |psi+> = (|01> + |10>)/sqrt(2) and beta leaves the control in
    the X basis. The Sagnac loop later sends it back through beta (Z basis)
    or sends the target back through delta (X basis).
    """
    cnot = cnot if cnot is not None else cnot_network()
    B, C, D, E = (CHIP_INPUTS.index(x) for x in "BCDE")
    prep: tuple[Stage, ...] = ()
    if alpha:
        prep += hadamard_coupler(B, C, "alpha")
    prep += (CouplerElement(D, E, 1.0, 0.0, name="flip"),)
    c0, c1 = (CHIP_OUTPUTS.index(x) for x in CONTROL_RAILS[1])
    return ModeNetwork(6, prep + cnot.stages + hadamard_coupler(c0, c1, "beta"),
                       cnot.labels, cnot.output_labels)


def sagnac_elements() -> dict[str, tuple[ModeNetwork, tuple[str, str]]]:
    """Chip elements reachable by the Sagnac loop, with the output rails they act on."""
    c0, c1 = (CHIP_OUTPUTS.index(x) for x in CONTROL_RAILS[1])
    t0, t1 = (CHIP_OUTPUTS.index(x) for x in TARGET_RAILS[1])
    return {
        "beta": (ModeNetwork(6, hadamard_coupler(c0, c1, "beta"), CHIP_INPUTS, CHIP_OUTPUTS),
                 CONTROL_RAILS[1]),
        "delta": (ModeNetwork(6, hadamard_coupler(t0, t1, "delta"), CHIP_INPUTS, CHIP_OUTPUTS),
                  TARGET_RAILS[1]),
    }


def sagnac_unitary(forward: ModeNetwork, element: str) -> np.ndarray:
    """Forward unitary followed by the backward pass through a named element."""
    net, rails = sagnac_elements()[element]
    modes = [forward.output_index(r) for r in rails]
    R = reverse_pass_unitary(net, modes)
    return embed(R, modes, forward.mode_count) @ compile_network(forward)


def hbt_network() -> ModeNetwork:
    """Two couplers splitting input F evenly over outputs D', E', F'."""
    return ModeNetwork(3, (CouplerElement(1, 2, 2 / 3, name="*"),
                           CouplerElement(0, 1, 1 / 2, name="*")),
                       ("D", "E", "F"), ("D'", "E'", "F'"))


def hom_network(eta: float = 0.5) -> ModeNetwork:
    """Coupler '**' fed from ports A and D, monitored at B' and C'."""
    return ModeNetwork(2, (CouplerElement(0, 1, eta, name="**"),), ("A", "D"), ("B'", "C'"))


# ---------------------------------------------------------------------------
# post-selection

CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class LogicalOperator:
    """Post-selected two-qubit map over |00>,|01>,|10>,|11> (control, target)."""

    matrix: np.ndarray
    success_amplitude: complex = field(default=0j)

    @property
    def normalized(self) -> np.ndarray:
        return self.matrix / self.success_amplitude

    def success_probabilities(self) -> np.ndarray:
        """Probability that each basis input is post-selected."""
        return np.sum(np.abs(self.matrix) ** 2, axis=0)

    def truth_table(self) -> np.ndarray:
        """Row-normalised outcome probabilities; rows are inputs."""
        P = np.abs(self.matrix.T) ** 2
        return P / P.sum(axis=1, keepdims=True)


def _rails(net: ModeNetwork, rails) -> tuple[tuple[int, int], tuple[int, int]]:
    rails = tuple(rails)
    if len(rails) == 2 and all(isinstance(r, (tuple, list)) for r in rails):
        ins, outs = rails
    else:
        ins, outs = rails, rails
    ins = tuple(net.index(m) for m in ins)
    outs = tuple(net.output_index(m) for m in outs)
    if len(ins) != 2 or len(outs) != 2:
        raise ValueError("each qubit needs exactly two rails")
    return ins, outs


def post_selected_operator(net: ModeNetwork | np.ndarray, control_rails, target_rails) -> LogicalOperator:
    """Two-photon amplitudes restricted to one photon per qubit.

    Rails are either ``(m0, m1)`` (same waveguides in and out) or
    ``((in0, in1), (out0, out1))``; modes may be indices or labels. Each
    amplitude is the permanent of the 2x2 sub-matrix of ``U``.
    """
    if isinstance(net, np.ndarray):
        U = net
        net = ModeNetwork(U.shape[0])
    else:
        U = compile_network(net)
    (ci, co), (ti, to) = _rails(net, control_rails), _rails(net, target_rails)
    if set(ci) & set(ti) or set(co) & set(to) or len(set(ci)) < 2 or len(set(ti)) < 2:
        raise ValueError("control and target rails must be four distinct modes")
    O = np.zeros((4, 4), dtype=complex)
    for c_in, t_in, c_out, t_out in itertools.product(range(2), repeat=4):
        a, b = ci[c_in], ti[t_in]
        i, j = co[c_out], to[t_out]
        O[2 * c_out + t_out, 2 * c_in + t_in] = U[i, a] * U[j, b] + U[i, b] * U[j, a]
    return LogicalOperator(O, _scale(O))


def _scale(O: np.ndarray) -> complex:
    # |s| from the mean column norm, phase from the largest element
    mag = np.sqrt(np.sum(np.abs(O) ** 2) / O.shape[1])
    if mag == 0:
        return 0j
    k = np.argmax(np.abs(O).ravel() > np.abs(O).max() * (1 - 1e-9))
    return complex(mag * np.exp(1j * np.angle(O.ravel()[k])))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))
