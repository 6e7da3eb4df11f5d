"""Protocol pipeline tests: branch states, probabilities, traces, and the
generic circuit runner's equivalence with the built-in pipelines."""

import cmath
import math

import numpy as np
import pytest

from kerrcat import (
    CoherentParam,
    EntanglementParams,
    MultiModeState,
    SourceSpec,
    SqueezeParam,
    SuperpositionParams,
    cat_coherent,
    cat_squeezed,
    coherent,
    entanglement_program,
    entanglement_targets,
    fidelity,
    fock,
    inner_product,
    run_circuit,
    run_entanglement,
    run_superposition,
    schmidt_decompose,
    single,
    squeezed_vacuum,
    superposition_program,
    superposition_targets,
    tensor_product,
    vacuum,
)
from kerrcat.dsl import CircuitProgram, CircuitValidationError, FockSourceDecl, parse
from kerrcat.elements import BalancedBeamSplitter, CrossKerr, Detect, PhaseShift
from kerrcat.protocols import DB, DC

S_R05 = 0.8050181821945921
E_M2 = math.exp(-2.0)


class TestSuperposition:
    def test_squeezed_cat_branches(self):
        params = SuperpositionParams(SourceSpec.squeezed(0.5), tau=math.pi / 2, theta=0.0)
        result = run_superposition(params)
        cutoff = params.source_a.resolved_cutoff()
        assert fidelity(result[DB].state, cat_squeezed(SqueezeParam(0.5), -1, cutoff)) >= 1 - 1e-9
        assert fidelity(result[DC].state, cat_squeezed(SqueezeParam(0.5), +1, cutoff)) >= 1 - 1e-9
        assert abs(result[DB].probability - (1 - S_R05) / 2) < 1e-6
        assert abs(result[DC].probability - (1 + S_R05) / 2) < 1e-6

    def test_zero_squeeze_click_is_deterministic(self):
        result = run_superposition(SuperpositionParams(SourceSpec.squeezed(0.0), tau=1.3))
        assert result[DB].probability == 0.0
        assert result[DB].state is None
        assert result[DC].probability == pytest.approx(1.0, abs=1e-12)
        assert fidelity(result[DC].state, vacuum(0)) == pytest.approx(1.0)

    def test_coherent_cat_branches(self):
        src = SourceSpec.coherent(1.0, eps=1e-12)
        result = run_superposition(SuperpositionParams(src, tau=math.pi, theta=0.0))
        cutoff = src.resolved_cutoff()
        f_odd = fidelity(result[DB].state, cat_coherent(CoherentParam(1.0), -1, cutoff, eps=1e-12))
        f_even = fidelity(result[DC].state, cat_coherent(CoherentParam(1.0), +1, cutoff, eps=1e-12))
        assert f_odd >= 1 - 1e-9
        assert f_even >= 1 - 1e-9
        assert abs(result[DB].probability - (1 - E_M2) / 2) < 1e-9
        assert abs(result[DC].probability - (1 + E_M2) / 2) < 1e-9

    def test_branch_probabilities_complete(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            src = SourceSpec.squeezed(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0, 2 * math.pi)))
            params = SuperpositionParams(
                src, tau=float(rng.uniform(0, 2 * math.pi)), theta=float(rng.uniform(0, 2 * math.pi))
            )
            result = run_superposition(params)
            assert abs(result.total_probability - 1.0) <= max(1e-9, src.eps)

    def test_theta_shift_swaps_branches(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            r = float(rng.uniform(0.1, 0.9))
            tau = float(rng.uniform(0.2, 2 * math.pi))
            theta = float(rng.uniform(0, 2 * math.pi))
            base = run_superposition(SuperpositionParams(SourceSpec.squeezed(r), tau, theta))
            flipped = run_superposition(
                SuperpositionParams(SourceSpec.squeezed(r), tau, theta + math.pi)
            )
            assert abs(base[DB].probability - flipped[DC].probability) < 1e-12
            assert abs(base[DC].probability - flipped[DB].probability) < 1e-12
            assert fidelity(base[DB].state, flipped[DC].state) >= 1 - 1e-10
            assert fidelity(base[DC].state, flipped[DB].state) >= 1 - 1e-10

    def test_trace_matches_analytic_stages(self):
        params = SuperpositionParams(SourceSpec.squeezed(0.5), tau=math.pi / 2, theta=0.0)
        result = run_superposition(params, trace=True)
        stages = dict(result.trace)
        cutoff = params.source_a.resolved_cutoff()
        xi = squeezed_vacuum(SqueezeParam(0.5), cutoff)
        flipped = squeezed_vacuum(SqueezeParam(0.5, math.pi), cutoff)
        isq = 1 / math.sqrt(2)

        split = np.zeros((2, 2), complex)
        split[1, 0] = isq
        split[0, 1] = 1j * isq
        assert fidelity(stages["after_first_splitter"], MultiModeState(("b", "c"), split)) >= 1 - 1e-10

        with_source = np.multiply.outer(xi.amplitudes, split)
        assert (
            fidelity(stages["with_data_source"], MultiModeState(("a", "b", "c"), with_source))
            >= 1 - 1e-10
        )

        kicked = np.zeros((cutoff + 1, 2, 2), complex)
        kicked[:, 1, 0] = flipped.amplitudes * isq
        kicked[:, 0, 1] = 1j * xi.amplitudes * isq
        assert (
            fidelity(stages["after_kerr_and_phase"], MultiModeState(("a", "b", "c"), kicked))
            >= 1 - 1e-10
        )

        out = np.zeros((cutoff + 1, 2, 2), complex)
        out[:, 1, 0] = 0.5 * (flipped.amplitudes - xi.amplitudes)
        out[:, 0, 1] = 0.5j * (flipped.amplitudes + xi.amplitudes)
        assert (
            fidelity(stages["after_second_splitter"], MultiModeState(("a", "b", "c"), out))
            >= 1 - 1e-10
        )

    def test_targets_track_source_kind(self):
        sq = superposition_targets(SuperpositionParams(SourceSpec.squeezed(0.5), tau=1.0))
        assert set(sq) == {"even_cat", "odd_cat"}
        degenerate = superposition_targets(SuperpositionParams(SourceSpec.squeezed(0.0), tau=1.0))
        assert set(degenerate) == {"even_cat"}


class TestEntanglement:
    def test_branches_match_analytic_pairs(self):
        params = EntanglementParams(
            SourceSpec.squeezed(0.5), SourceSpec.squeezed(0.5), tau=math.pi / 2, tau2=math.pi / 2
        )
        result = run_entanglement(params)
        targets = entanglement_targets(params)
        assert fidelity(result[DB].state, targets["pair_minus"]) >= 1 - 1e-9
        assert fidelity(result[DC].state, targets["pair_plus"]) >= 1 - 1e-9
        assert abs(result[DB].probability - (1 - S_R05**2) / 2) < 1e-6
        assert schmidt_decompose(result[DB].state, {"a"}).rank(1e-10) == 2
        assert schmidt_decompose(result[DC].state, {"a"}).rank(1e-10) == 2

    def test_no_kerr_phase_means_no_entanglement(self):
        params = EntanglementParams(
            SourceSpec.squeezed(0.5), SourceSpec.squeezed(0.3), tau=0.0, tau2=0.0
        )
        result = run_entanglement(params)
        assert result[DB].probability == 0.0
        assert result[DB].state is None
        product = tensor_product(
            single("a", params.source_a.build()), single("a2", params.source_a2.build())
        )
        unit = product.with_tensor(product.tensor / product.norm)
        assert fidelity(result[DC].state, unit) >= 1 - 1e-10

    def test_mixed_sources_against_brute_force(self):
        # coherent on one arm, squeezed on the other; compare against the
        # element-free analytic construction of both branch states
        alpha = CoherentParam(1.0)
        eta = SqueezeParam(0.5)
        params = EntanglementParams(
            SourceSpec.coherent(1.0), SourceSpec.squeezed(0.5), tau=math.pi / 2, tau2=math.pi / 2
        )
        result = run_entanglement(params)

        ca = params.source_a.resolved_cutoff()
        c2 = params.source_a2.resolved_cutoff()
        base = np.multiply.outer(
            coherent(alpha, ca).amplitudes, squeezed_vacuum(eta, c2).amplitudes
        )
        rot = np.multiply.outer(
            coherent(CoherentParam(alpha.alpha * cmath.exp(-1j * math.pi / 2)), ca).amplitudes,
            squeezed_vacuum(SqueezeParam(eta.r, eta.phi - math.pi), c2).amplitudes,
        )
        for key, sign in ((DB, -1), (DC, +1)):
            target = rot + sign * base
            target /= np.linalg.norm(target)
            expected_p = float(np.linalg.norm(rot + sign * base) ** 2) / 4
            assert fidelity(result[key].state, MultiModeState(("a", "a2"), target)) >= 1 - 1e-9
            assert abs(result[key].probability - expected_p) < 1e-9

    def test_completeness_over_random_draws(self):
        rng = np.random.default_rng(43)
        for _ in range(5):
            params = EntanglementParams(
                SourceSpec.squeezed(float(rng.uniform(0.05, 0.8))),
                SourceSpec.coherent(float(rng.uniform(0.1, 1.0))),
                tau=float(rng.uniform(0, 2 * math.pi)),
                tau2=float(rng.uniform(0, 2 * math.pi)),
                theta=float(rng.uniform(0, 2 * math.pi)),
            )
            result = run_entanglement(params)
            assert abs(result.total_probability - 1.0) <= max(1e-9, 2e-10)


class TestKerrRotationRule:
    def test_squeezed_rotation(self):
        spec = SourceSpec.squeezed(0.5, 0.3)
        rotated = spec.kerr_rotated(0.7)
        assert isinstance(rotated.param, SqueezeParam)
        assert rotated.param.r == 0.5
        assert rotated.param.phi == pytest.approx((0.3 - 1.4) % (2 * math.pi))
        assert rotated.cutoff == spec.resolved_cutoff()

    def test_coherent_rotation(self):
        spec = SourceSpec.coherent(1.0 + 0.5j)
        rotated = spec.kerr_rotated(math.pi)
        assert rotated.param.alpha == pytest.approx((1.0 + 0.5j) * cmath.exp(-1j * math.pi))


class TestRunCircuit:
    def test_superposition_program_equivalence(self):
        params = SuperpositionParams(SourceSpec.squeezed(0.5), tau=math.pi / 2, theta=0.0)
        direct = run_superposition(params)
        program = superposition_program(params)
        via_circuit = run_circuit(program)
        mapping = {DB: "b=1 c=0", DC: "b=0 c=1"}
        for det, key in mapping.items():
            assert abs(via_circuit[key].probability - direct[det].probability) < 1e-12
            assert np.abs(via_circuit[key].state.tensor - direct[det].state.tensor).max() < 1e-12

    def test_entanglement_program_equivalence(self):
        params = EntanglementParams(
            SourceSpec.squeezed(0.5), SourceSpec.coherent(0.8), tau=math.pi / 2, tau2=1.1
        )
        direct = run_entanglement(params)
        via_circuit = run_circuit(entanglement_program(params))
        mapping = {DB: "b=1 c=0", DC: "b=0 c=1"}
        for det, key in mapping.items():
            assert abs(via_circuit[key].probability - direct[det].probability) < 1e-12
            assert np.abs(via_circuit[key].state.tensor - direct[det].state.tensor).max() < 1e-12

    def test_program_texts_parse_back(self):
        from kerrcat import format_program

        params = SuperpositionParams(SourceSpec.squeezed(0.5), tau=math.pi / 2)
        text = format_program(superposition_program(params))
        assert "kerr a b tau=pi/2" in text
        reparsed = parse(text)
        assert reparsed.ok
        assert reparsed.program == superposition_program(params)

    def test_empty_program_without_detection_is_source_product(self):
        program = parse(
            "mode a cutoff 12\nmode b cutoff 2\nsource a coherent re=0.5 im=0.0\nsource b fock n=2\n"
        ).program
        result = run_circuit(program)
        branch = result["unconditional"]
        assert branch.probability == pytest.approx(1.0, abs=1e-9)
        expected = tensor_product(
            single("a", coherent(CoherentParam(0.5), 12)), single("b", fock(2, 2))
        )
        assert fidelity(branch.state, expected.with_tensor(expected.tensor / expected.norm)) >= 1 - 1e-12

    def test_branch_tree_reports_requested_zero_branch(self):
        # photon never in (1,1); the requested combination is still reported
        program = parse(
            "mode b cutoff 1\nmode c cutoff 1\nsource b fock n=1\nbs b c\n"
            "detect b n=1\ndetect c n=1\n"
        ).program
        result = run_circuit(program)
        assert result["b=1 c=1"].probability == 0.0
        assert result["b=1 c=1"].state is None
        assert abs(result.total_probability - 1.0) < 1e-12

    def test_validation_errors_carry_element_index(self):
        program = CircuitProgram(
            modes=(("a", 2), ("b", 2)),
            sources=(("a", FockSourceDecl(1)),),
            elements=(PhaseShift("a", 0.1), CrossKerr("a", "zz", 0.5)),
            detects=(),
        )
        with pytest.raises(CircuitValidationError, match="element 1"):
            run_circuit(program)

    def test_detect_inside_elements_rejected(self):
        program = CircuitProgram(
            modes=(("a", 1),),
            sources=(),
            elements=(Detect("a", 0),),
            detects=(),
        )
        with pytest.raises(CircuitValidationError, match="element 0"):
            run_circuit(program)

    def test_beam_splitter_cutoff_mismatch_rejected(self):
        program = CircuitProgram(
            modes=(("a", 1), ("b", 2)),
            sources=(),
            elements=(BalancedBeamSplitter("a", "b"),),
            detects=(),
        )
        with pytest.raises(CircuitValidationError, match="cutoff mismatch"):
            run_circuit(program)
