import numpy as np
import pytest

from stiffmod.errors import DomainError, ModelError
from stiffmod.modal import (
    change_basis,
    from_modal,
    global_scaling_predicts,
    modal_basis,
    solve_basis,
    to_modal,
)
from stiffmod.model import INFINITE, Phase, assemble_matrices

# Published reference values: modal stiffness/damping diagonals and mode
# shapes (shapes scaled by sqrt(1000) relative to SI mass normalisation)
TABLE_K = {
    "unchanged": (146.597, 1.126e5),
    "global": (354.912, 2.725e5),
    "local": (353.855, 2.332e5),
}
TABLE_C = {
    "unchanged": (0.247, 112.653),
    "global": (0.455, 272.592),
    "local": (0.454, 233.246),
}
TABLE_PHI = {
    "unchanged": np.array([[-6.893, -316.153], [-25.814, 0.563]]),
    "local": np.array([[-16.66, -315.789], [-25.784, 1.36]]),
}


def _closed_form_eigenvalues(M, K):
    # det(K - lam M) = 0 for diagonal M: m1 m2 lam^2 - (m1 K22 + m2 K11) lam + det K = 0
    m1, m2 = M[0, 0], M[1, 1]
    a = m1 * m2
    b = -(m1 * K[1, 1] + m2 * K[0, 0])
    c = np.linalg.det(K)
    disc = np.sqrt(b * b - 4 * a * c)
    return np.array([(-b - disc) / (2 * a), (-b + disc) / (2 * a)])


def _case_basis(reference_model, case):
    if case == "unchanged":
        return modal_basis(reference_model, Phase.LOW)
    gammas = (2.421, 2.421) if case == "global" else (1.0, 5.0)
    return modal_basis(reference_model.with_gammas(gammas), Phase.HIGH)


class TestSolveBasis:
    def test_matches_closed_form_two_dof(self, reference_model):
        M, K, _ = assemble_matrices(reference_model, Phase.LOW)
        b = solve_basis(M, K)
        np.testing.assert_allclose(b.eigenvalues, _closed_form_eigenvalues(M, K), rtol=1e-12)

    def test_mass_normalised(self, reference_model):
        b = modal_basis(reference_model, Phase.LOW)
        np.testing.assert_allclose(b.modal_mass, np.eye(2), atol=1e-12)
        off = b.modal_stiffness - np.diag(np.diag(b.modal_stiffness))
        assert np.abs(off).max() < 1e-9 * b.modal_stiffness.max()

    def test_rejects_asymmetric(self):
        with pytest.raises(ModelError):
            solve_basis(np.eye(2), np.array([[2.0, 1.0], [0.0, 2.0]]))

    def test_rejects_indefinite_mass(self):
        with pytest.raises(ModelError):
            solve_basis(np.diag([1.0, -1.0]), np.eye(2))

    def test_locked_node_embedded_as_zero(self, reference_model):
        b = modal_basis(reference_model.with_gammas([INFINITE, 1.0]), Phase.HIGH)
        assert b.n_modes == 1
        assert b.shapes[0, 0] == 0.0
        assert b.eigenvalues[0] == pytest.approx(300.0 / 1.5)


class TestTable1:
    @pytest.mark.parametrize("case", ["unchanged", "global", "local"])
    def test_modal_stiffness(self, reference_model, case):
        b = _case_basis(reference_model, case)
        np.testing.assert_allclose(np.diag(b.modal_stiffness), TABLE_K[case], rtol=5e-3)

    @pytest.mark.parametrize("case", ["unchanged", "global", "local"])
    def test_modal_damping(self, reference_model, case):
        b = _case_basis(reference_model, case)
        np.testing.assert_allclose(np.diag(b.modal_damping), TABLE_C[case], rtol=5e-3)

    @pytest.mark.parametrize("case", ["unchanged", "local"])
    def test_shapes_collinear(self, reference_model, case):
        b = _case_basis(reference_model, case)
        for j in range(2):
            ours, theirs = b.shapes[:, j], TABLE_PHI[case][:, j]
            cos = ours @ theirs / np.linalg.norm(ours) / np.linalg.norm(theirs)
            assert abs(cos) > 0.999

    def test_global_scaling_keeps_shapes(self, reference_model):
        low = _case_basis(reference_model, "unchanged")
        high = _case_basis(reference_model, "global")
        np.testing.assert_allclose(high.shapes, low.shapes, atol=1e-12)


class TestProjection:
    def test_round_trip(self, reference_model):
        b = modal_basis(reference_model, Phase.LOW)
        u = np.array([0.3, -1.2])
        np.testing.assert_allclose(from_modal(b, to_modal(b, u)), u, rtol=1e-12)

    def test_change_basis_preserves_displacement(self, reference_model):
        low = modal_basis(reference_model, Phase.LOW)
        high = modal_basis(reference_model.with_gammas([1.0, 5.0]), Phase.HIGH)
        q = np.array([1.0, 0.0])
        q_high = change_basis(q, low, high)
        np.testing.assert_allclose(from_modal(high, q_high), from_modal(low, q), rtol=1e-12)
        # a local change mixes the modes
        assert abs(q_high[1]) > 1e-3

    def test_wrong_length(self, reference_model):
        b = modal_basis(reference_model, Phase.LOW)
        with pytest.raises(DomainError):
            to_modal(b, [1.0, 2.0, 3.0])

    def test_global_prediction(self, reference_model):
        low = modal_basis(reference_model, Phase.LOW)
        pred = global_scaling_predicts(low, 2.421)
        actual = _case_basis(reference_model, "global")
        np.testing.assert_allclose(pred.eigenvalues, actual.eigenvalues, rtol=1e-12)
        np.testing.assert_allclose(pred.modal_damping, actual.modal_damping, rtol=1e-9, atol=1e-12)
        with pytest.raises(DomainError):
            global_scaling_predicts(low, 0.0)
