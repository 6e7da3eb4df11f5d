"""Conditional-state protocols and the generic circuit runner.

Both built-in pipelines interfere a single photon with itself across two
50:50 beam splitters. Between the splitters, one arm picks up a cross-Kerr
phase from the data mode(s) and the other a fixed phase shift; detecting
which output port the photon exits then projects the data mode(s) onto a
superposition (one data mode) or an entangled pair (two data modes) of the
original and the Kerr-rotated source states.

The Kerr rotation acts on the source parameters as:

* coherent alpha  ->  alpha * exp(-i * tau)   per photon in the coupled mode,
* squeezed phase  ->  phi - 2 * tau           per photon in the coupled mode,

which is where the source-kind dispatch lives; the circuit elements
themselves are state-agnostic diagonal phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import dsl
from .elements import BalancedBeamSplitter, CrossKerr, Detect, PhaseShift, apply_element
from .errors import ZeroStateError
from .fock import (
    FockVector,
    MultiModeState,
    normalize,
    project_modes,
    single,
    tensor_product,
)
from .states import (
    DEFAULT_LEAKAGE,
    CoherentParam,
    SqueezeParam,
    cat_coherent,
    cat_squeezed,
    coherent,
    fock,
    squeezed_vacuum,
    suggest_cutoff,
    vacuum,
)

# Branches whose joint detection probability falls below this are reported
# with probability zero and no conditional state.
ZERO_BRANCH_THRESHOLD = 1e-12

DB = "Db_fires"
DC = "Dc_fires"


@dataclass(frozen=True)
class SourceSpec:
    """A data-mode source: squeezed vacuum or coherent state.

    The cutoff may be pinned explicitly; otherwise it is the smallest cutoff
    whose truncation leakage stays below ``eps``.
    """

    param: SqueezeParam | CoherentParam
    cutoff: int | None = None
    eps: float = DEFAULT_LEAKAGE

    @classmethod
    def squeezed(cls, r: float, phi: float = 0.0, *, cutoff=None, eps=DEFAULT_LEAKAGE):
        return cls(SqueezeParam(r, phi), cutoff, eps)

    @classmethod
    def coherent(cls, alpha: complex, *, cutoff=None, eps=DEFAULT_LEAKAGE):
        return cls(CoherentParam(alpha), cutoff, eps)

    @property
    def kind(self) -> str:
        return "squeezed" if isinstance(self.param, SqueezeParam) else "coherent"

    def resolved_cutoff(self) -> int:
        if self.cutoff is not None:
            if self.cutoff < 0:
                raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")
            return self.cutoff
        return suggest_cutoff(self.param, self.eps)

    def build(self) -> FockVector:
        c = self.resolved_cutoff()
        if isinstance(self.param, SqueezeParam):
            return squeezed_vacuum(self.param, c, self.eps)
        return coherent(self.param, c, self.eps)

    def kerr_rotated(self, tau: float, photons: int = 1) -> "SourceSpec":
        """Source after a cross-Kerr phase tau against ``photons`` photons."""
        if isinstance(self.param, SqueezeParam):
            param = self.param.phase_shifted(-2.0 * photons * tau)
        else:
            param = self.param.rotated(-photons * tau)
        return SourceSpec(param, self.resolved_cutoff(), self.eps)

    def cat(self, sign: int) -> FockVector:
        """The parity cat of this source (undefined for vanishing inputs)."""
        c = self.resolved_cutoff()
        if isinstance(self.param, SqueezeParam):
            return cat_squeezed(self.param, sign, c, self.eps)
        return cat_coherent(self.param, sign, c, self.eps)


@dataclass(frozen=True)
class SuperpositionParams:
    source_a: SourceSpec
    tau: float
    theta: float = 0.0


@dataclass(frozen=True)
class EntanglementParams:
    source_a: SourceSpec
    source_a2: SourceSpec
    tau: float
    tau2: float
    theta: float = 0.0


@dataclass(frozen=True)
class Branch:
    """One detection outcome: conditional state and its probability."""

    outcome: tuple[tuple[str, int], ...]
    probability: float
    state: MultiModeState | None
    pre_norm: float


@dataclass(frozen=True)
class ProtocolResult:
    """All detection branches, plus an optional trace of pipeline stages."""

    branches: Mapping[str, Branch]
    trace: tuple[tuple[str, MultiModeState], ...] | None = None

    def __getitem__(self, name: str) -> Branch:
        return self.branches[name]

    @property
    def total_probability(self) -> float:
        return sum(b.probability for b in self.branches.values())


def _detection_branch(state: MultiModeState, outcome) -> Branch:
    remaining, prob = project_modes(state, outcome)
    if prob < ZERO_BRANCH_THRESHOLD:
        return Branch(tuple(outcome), 0.0, None, 0.0)
    conditioned, pre_norm = normalize(remaining)
    return Branch(tuple(outcome), prob, conditioned, pre_norm)


def run_superposition(params: SuperpositionParams, trace: bool = False) -> ProtocolResult:
    """Single-photon interferometer with one Kerr-coupled data mode.

    Detector branches over the (b, c) ports:

    * ``Db_fires`` (1, 0): data mode ~ rotated - e^{i theta} original,
    * ``Dc_fires`` (0, 1): data mode ~ rotated + e^{i theta} original.
    """
    stages = []

    bc = tensor_product(single("b", fock(1, 1)), single("c", vacuum(1)))
    stages.append(("single_photon_input", bc))
    bc = apply_element(bc, BalancedBeamSplitter("b", "c"))
    stages.append(("after_first_splitter", bc))

    full = tensor_product(single("a", params.source_a.build()), bc)
    stages.append(("with_data_source", full))
    full = apply_element(full, CrossKerr("a", "b", params.tau))
    full = apply_element(full, PhaseShift("c", params.theta))
    stages.append(("after_kerr_and_phase", full))
    full = apply_element(full, BalancedBeamSplitter("b", "c"))
    stages.append(("after_second_splitter", full))

    branches = {
        DB: _detection_branch(full, (("b", 1), ("c", 0))),
        DC: _detection_branch(full, (("b", 0), ("c", 1))),
    }
    return ProtocolResult(branches, tuple(stages) if trace else None)


def run_entanglement(params: EntanglementParams, trace: bool = False) -> ProtocolResult:
    """Two Kerr media couple the photon's transmitted arm to two data modes.

    A click projects modes (a, a2) onto rotated (x) rotated -+ e^{i theta}
    original (x) original; ``Db_fires`` carries the minus combination.
    """
    stages = []

    bc = tensor_product(single("b", fock(1, 1)), single("c", vacuum(1)))
    stages.append(("single_photon_input", bc))
    bc = apply_element(bc, BalancedBeamSplitter("b", "c"))
    stages.append(("after_first_splitter", bc))

    full = tensor_product(single("a", params.source_a.build()), bc)
    stages.append(("with_data_source", full))
    full = apply_element(full, CrossKerr("a", "b", params.tau))
    full = apply_element(full, PhaseShift("c", params.theta))
    stages.append(("after_kerr_and_phase", full))

    full = tensor_product(full, single("a2", params.source_a2.build()))
    stages.append(("with_second_source", full))
    full = apply_element(full, CrossKerr("a2", "b", params.tau2))
    stages.append(("after_second_kerr", full))
    full = apply_element(full, BalancedBeamSplitter("b", "c"))
    stages.append(("after_second_splitter", full))

    branches = {
        DB: _detection_branch(full, (("b", 1), ("c", 0))),
        DC: _detection_branch(full, (("b", 0), ("c", 1))),
    }
    return ProtocolResult(branches, tuple(stages) if trace else None)


def superposition_targets(params: SuperpositionParams) -> dict[str, FockVector]:
    """Canonical parity cats of the source, for branch fidelity reporting.

    Keys ``even_cat`` / ``odd_cat``; a key is omitted when the cat vanishes
    identically (zero-amplitude source).
    """
    targets = {}
    for name, sign in (("even_cat", +1), ("odd_cat", -1)):
        try:
            targets[name] = params.source_a.cat(sign)
        except ZeroStateError:
            pass
    return targets


def superposition_branch_states(params: SuperpositionParams) -> dict[str, FockVector]:
    """Analytic conditional states, built without running the circuit."""
    base = params.source_a.build()
    rotated = params.source_a.kerr_rotated(params.tau).build()
    phase = np.exp(1j * params.theta)
    out = {}
    for name, sign in ((DB, -1), (DC, +1)):
        try:
            state, _ = normalize(rotated.amplitudes + sign * phase * base.amplitudes)
        except ZeroStateError:
            continue
        out[name] = state
    return out


def entanglement_targets(params: EntanglementParams) -> dict[str, MultiModeState]:
    """Analytic two-mode conditional states over labels (a, a2).

    Keys ``pair_plus`` / ``pair_minus``; a key is omitted when that
    combination vanishes identically (e.g. both taus zero for the minus
    branch).
    """
    base = tensor_product(
        single("a", params.source_a.build()), single("a2", params.source_a2.build())
    )
    rotated = tensor_product(
        single("a", params.source_a.kerr_rotated(params.tau).build()),
        single("a2", params.source_a2.kerr_rotated(params.tau2).build()),
    )
    phase = np.exp(1j * params.theta)
    targets = {}
    for name, sign in (("pair_plus", +1), ("pair_minus", -1)):
        combined = rotated.tensor + sign * phase * base.tensor
        norm = float(np.linalg.norm(combined))
        if norm <= ZERO_BRANCH_THRESHOLD:
            continue
        targets[name] = MultiModeState(("a", "a2"), combined / norm)
    return targets


def superposition_program(params: SuperpositionParams) -> "dsl.CircuitProgram":
    """The one-data-mode pipeline as a circuit program."""
    cutoff = params.source_a.resolved_cutoff()
    return dsl.CircuitProgram(
        modes=(("a", cutoff), ("b", 1), ("c", 1)),
        sources=(
            ("a", _source_decl(params.source_a)),
            ("b", dsl.FockSourceDecl(1)),
        ),
        elements=(
            BalancedBeamSplitter("b", "c"),
            CrossKerr("a", "b", params.tau),
            PhaseShift("c", params.theta),
            BalancedBeamSplitter("b", "c"),
        ),
        detects=(Detect("b", 1), Detect("c", 0)),
    )


def entanglement_program(params: EntanglementParams) -> "dsl.CircuitProgram":
    """The two-data-mode pipeline as a circuit program."""
    return dsl.CircuitProgram(
        modes=(
            ("a", params.source_a.resolved_cutoff()),
            ("b", 1),
            ("c", 1),
            ("a2", params.source_a2.resolved_cutoff()),
        ),
        sources=(
            ("a", _source_decl(params.source_a)),
            ("b", dsl.FockSourceDecl(1)),
            ("a2", _source_decl(params.source_a2)),
        ),
        elements=(
            BalancedBeamSplitter("b", "c"),
            CrossKerr("a", "b", params.tau),
            PhaseShift("c", params.theta),
            CrossKerr("a2", "b", params.tau2),
            BalancedBeamSplitter("b", "c"),
        ),
        detects=(Detect("b", 1), Detect("c", 0)),
    )


def _source_decl(spec: SourceSpec):
    if isinstance(spec.param, SqueezeParam):
        return dsl.SqueezedSourceDecl(spec.param.r, spec.param.phi)
    return dsl.CoherentSourceDecl(spec.param.alpha.real, spec.param.alpha.imag)


UNCONDITIONAL = "unconditional"


def run_circuit(
    program: "dsl.CircuitProgram", eps: float = DEFAULT_LEAKAGE, trace: bool = False
) -> ProtocolResult:
    """Fold the program's elements over its initial product state.

    Detection directives are enumerated as a joint outcome tree over the
    detected modes: every outcome combination with probability at or above
    the zero-branch threshold becomes a branch, keyed like ``"b=1 c=0"``.
    The outcome combination the program asks for is always reported, with
    probability zero and no state if it cannot occur. Without any detection
    the single branch is keyed ``"unconditional"``.
    """
    dsl.validate_program(program)

    state = _initial_state(program, eps)
    stages = [("input", state)]
    for element in program.elements:
        state = apply_element(state, element)
        stages.append((dsl.format_element(element), state))

    detected = [(d.mode, d.n) for d in program.detects]
    branches: dict[str, Branch] = {}
    if not detected:
        if state.norm <= ZERO_BRANCH_THRESHOLD:
            branches[UNCONDITIONAL] = Branch((), 0.0, None, 0.0)
        else:
            unit, pre = normalize(state)
            branches[UNCONDITIONAL] = Branch((), state.squared_norm, unit, pre)
    else:
        requested = tuple(detected)
        for outcome in _outcome_tree(state, [m for m, _ in detected]):
            branch = _detection_branch(state, outcome)
            if branch.probability >= ZERO_BRANCH_THRESHOLD or outcome == requested:
                branches[_outcome_key(outcome)] = branch
        if _outcome_key(requested) not in branches:
            branches[_outcome_key(requested)] = Branch(requested, 0.0, None, 0.0)
    return ProtocolResult(branches, tuple(stages) if trace else None)


def _initial_state(program: "dsl.CircuitProgram", eps: float) -> MultiModeState:
    sources = dict(program.sources)
    state = MultiModeState((), np.array(1.0 + 0.0j))
    for label, cutoff in program.modes:
        decl = sources.get(label)
        state = tensor_product(state, single(label, _build_source(decl, cutoff, eps)))
    return state


def _build_source(decl, cutoff: int, eps: float) -> FockVector:
    match decl:
        case None:
            return vacuum(cutoff)
        case dsl.FockSourceDecl(n=n):
            return fock(n, cutoff)
        case dsl.SqueezedSourceDecl(r=r, phi=phi):
            return squeezed_vacuum(SqueezeParam(r, phi), cutoff, eps)
        case dsl.CoherentSourceDecl(re=re, im=im):
            return coherent(CoherentParam(complex(re, im)), cutoff, eps)
    raise TypeError(f"unknown source declaration {decl!r}")


def _outcome_tree(state: MultiModeState, modes: list[str]):
    """All joint outcomes over the detected modes, ascending per mode."""
    dims = [state.tensor.shape[state.axis(m)] for m in modes]
    def rec(prefix, idx):
        if idx == len(modes):
            yield tuple(prefix)
            return
        for n in range(dims[idx]):
            prefix.append((modes[idx], n))
            yield from rec(prefix, idx + 1)
            prefix.pop()
    yield from rec([], 0)


def _outcome_key(outcome) -> str:
    return " ".join(f"{mode}={n}" for mode, n in outcome)
