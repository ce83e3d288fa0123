"""Loss terms against hand computations, the loop oracle, and autograd."""

import math

import numpy as np
import pytest
import torch

from vanp_lab.objective import (
    VanpLossConfig,
    VicregCoefficients,
    covariance_term,
    invariance_term,
    oracle_vicreg,
    vanp_loss,
    variance_term,
    vicreg_loss,
)

# The 2x2 worked pair: s = 0.5, v = 1 - sqrt(1/2) per branch (eps=0),
# c = 0.25 per branch. Both matrices have per-column values {0, 1} so the
# component values were verified by hand with the n-1 variance divisor.
Z1_HAND = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
Z2_HAND = torch.tensor([[1.0, 1.0], [0.0, 0.0]], dtype=torch.float64)
V_HAND = 1.0 - math.sqrt(0.5)            # 0.2928932...
TOTAL_HAND = 25 * 0.5 + 25 * 2 * V_HAND + 1 * 2 * 0.25   # 27.64466...


def _coeffs(**kw):
    base = dict(mu1=25.0, mu2=25.0, mu3=1.0, gamma=1.0, eps=1e-4)
    base.update(kw)
    return VicregCoefficients(**base)


class TestInvariance:
    def test_identical_is_zero(self):
        z = torch.randn(5, 7, dtype=torch.float64)
        assert invariance_term(z, z).item() == 0.0

    def test_hand_value(self):
        z1 = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        z2 = torch.zeros(2, 2, dtype=torch.float64)
        assert invariance_term(z1, z2).item() == pytest.approx(0.5, abs=1e-12)

    def test_symmetry(self):
        g = torch.Generator().manual_seed(3)
        z1 = torch.randn(6, 4, generator=g, dtype=torch.float64)
        z2 = torch.randn(6, 4, generator=g, dtype=torch.float64)
        assert invariance_term(z1, z2).item() == invariance_term(z2, z1).item()

    def test_unnormalized_flag(self):
        z1 = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        z2 = torch.zeros(2, 2, dtype=torch.float64)
        assert invariance_term(z1, z2, per_dim=False).item() == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            invariance_term(torch.zeros(2, 3), torch.zeros(2, 4))


class TestVariance:
    def test_hinge_inactive_for_spread_batch(self):
        z = torch.tensor([[3.0, 0.0], [-3.0, 0.0], [0.0, 3.0], [0.0, -3.0]],
                         dtype=torch.float64)
        assert variance_term(z, gamma=1.0, eps=1e-4).item() == 0.0

    def test_constant_batch(self):
        z = torch.full((4, 3), 2.5, dtype=torch.float64)
        expected = 1.0 - math.sqrt(1e-4)
        assert variance_term(z, gamma=1.0, eps=1e-4).item() == pytest.approx(expected, abs=1e-12)

    def test_hand_value_unbiased(self):
        z = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        assert variance_term(z, gamma=1.0, eps=0.0).item() == pytest.approx(V_HAND, abs=1e-12)

    def test_batch_of_one_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            variance_term(torch.zeros(1, 4))


class TestCovariance:
    def test_single_dim_is_zero(self):
        assert covariance_term(torch.randn(8, 1, dtype=torch.float64)).item() == 0.0

    def test_hand_value(self):
        z = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
        assert covariance_term(z).item() == pytest.approx(0.25, abs=1e-12)

    def test_independent_columns_vanish(self):
        rng = np.random.default_rng(42)
        z = torch.from_numpy(rng.standard_normal((4096, 8)))
        assert covariance_term(z).item() < 0.05


class TestVicregLoss:
    def test_weights_select_invariance(self):
        g = torch.Generator().manual_seed(0)
        z1 = torch.randn(6, 5, generator=g, dtype=torch.float64)
        z2 = torch.randn(6, 5, generator=g, dtype=torch.float64)
        total, _ = vicreg_loss(z1, z2, _coeffs(mu1=1.0, mu2=0.0, mu3=0.0))
        assert total.item() == invariance_term(z1, z2).item()

    def test_hand_composition(self):
        total, terms = vicreg_loss(Z1_HAND, Z2_HAND, _coeffs(eps=0.0))
        assert terms["s"].item() == pytest.approx(0.5, abs=1e-12)
        assert terms["v1"].item() == pytest.approx(V_HAND, abs=1e-12)
        assert terms["v2"].item() == pytest.approx(V_HAND, abs=1e-12)
        assert terms["c1"].item() == pytest.approx(0.25, abs=1e-12)
        assert terms["c2"].item() == pytest.approx(0.25, abs=1e-12)
        assert total.item() == pytest.approx(TOTAL_HAND, abs=1e-4)

    def test_whitened_identical_batches_leave_only_covariance(self):
        rng = np.random.default_rng(7)
        z = torch.from_numpy(2.0 * rng.standard_normal((4096, 8)))
        coeffs = _coeffs()
        total, terms = vicreg_loss(z, z, coeffs)
        assert terms["s"].item() == 0.0
        assert terms["v1"].item() == 0.0
        assert total.item() == pytest.approx(coeffs.mu3 * 2 * terms["c1"].item(), rel=1e-12)

    def test_nonnegative_terms(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n, d = int(rng.integers(2, 16)), int(rng.integers(1, 16))
            z1 = torch.from_numpy(rng.standard_normal((n, d)))
            z2 = torch.from_numpy(rng.standard_normal((n, d)))
            total, terms = vicreg_loss(z1, z2, _coeffs())
            assert all(t.item() >= 0 for t in terms.values())
            assert total.item() >= 0


class TestOracle:
    def test_hand_example(self):
        got = oracle_vicreg(Z1_HAND, Z2_HAND, _coeffs(eps=0.0))
        assert got == pytest.approx(TOTAL_HAND, abs=1e-4)

    def test_single_dim_no_covariance(self):
        z = [[1.0], [2.0], [4.0]]
        coeffs = _coeffs(mu1=0.0, mu2=0.0, mu3=1.0)
        assert oracle_vicreg(z, z, coeffs) == 0.0

    def test_agreement_with_main_path(self):
        rng = np.random.default_rng(123)
        for _ in range(25):
            n, d = int(rng.integers(2, 33)), int(rng.integers(1, 65))
            z1 = rng.standard_normal((n, d))
            z2 = rng.standard_normal((n, d))
            coeffs = _coeffs()
            fast, _ = vicreg_loss(torch.from_numpy(z1), torch.from_numpy(z2), coeffs)
            slow = oracle_vicreg(z1, z2, coeffs)
            assert fast.item() == pytest.approx(slow, rel=1e-9)


class TestVanpLoss:
    def _batches(self, seed=0, n=6, d=8):
        rng = np.random.default_rng(seed)
        return tuple(torch.from_numpy(rng.standard_normal((n, d))) for _ in range(3))

    def test_lambda_zero_is_action_pair_bitwise(self):
        zi, zg, za = self._batches()
        out = vanp_loss(zi, zg, za, VanpLossConfig(lam=0.0))
        assert out.total.item() == out.vicreg_ia.item()

    def test_lambda_one_is_goal_pair_bitwise(self):
        zi, zg, za = self._batches()
        out = vanp_loss(zi, zg, za, VanpLossConfig(lam=1.0))
        assert out.total.item() == out.vicreg_ig.item()

    def test_identical_inputs_symmetric(self):
        rng = np.random.default_rng(5)
        z = torch.from_numpy(2.0 * rng.standard_normal((512, 16)))
        out = vanp_loss(z, z, z, VanpLossConfig(lam=0.5))
        assert out.vicreg_ig.item() == out.vicreg_ia.item()
        assert out.s_ig.item() == 0.0 and out.v_i.item() == 0.0
        assert out.total.item() == pytest.approx(2 * out.c_i.item(), rel=1e-12)

    def test_total_combination_exact(self):
        zi, zg, za = self._batches(seed=9)
        for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
            out = vanp_loss(zi, zg, za, VanpLossConfig(lam=lam))
            expected = lam * out.vicreg_ig.item() + (1.0 - lam) * out.vicreg_ia.item()
            assert out.total.item() == expected

    def test_shape_mismatch_names_branch(self):
        zi, zg, _ = self._batches()
        with pytest.raises(ValueError, match="action branch"):
            vanp_loss(zi, zg, torch.zeros(6, 9, dtype=torch.float64), VanpLossConfig())

    def test_permutation_invariance(self):
        zi, zg, za = self._batches(seed=21)
        perm = torch.randperm(zi.shape[0])
        a = vanp_loss(zi, zg, za, VanpLossConfig())
        b = vanp_loss(zi[perm], zg[perm], za[perm], VanpLossConfig())
        for name in ("total", "vicreg_ig", "vicreg_ia", "s_ig", "v_i", "c_i"):
            va, vb = getattr(a, name).item(), getattr(b, name).item()
            assert abs(va - vb) <= 1e-10 * max(1.0, abs(va))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(77)
        mats = [torch.tensor(0.5 * rng.standard_normal((4, 6)), requires_grad=True)
                for _ in range(3)]
        config = VanpLossConfig(lam=0.5)
        vanp_loss(*mats, config).total.backward()
        h = 1e-4
        for m in mats:
            fd = torch.zeros_like(m)
            with torch.no_grad():
                flat = m.view(-1)
                for i in range(flat.numel()):
                    orig = flat[i].item()
                    flat[i] = orig + h
                    up = vanp_loss(*mats, config).total.item()
                    flat[i] = orig - h
                    down = vanp_loss(*mats, config).total.item()
                    flat[i] = orig
                    fd.view(-1)[i] = (up - down) / (2 * h)
            rel = (m.grad - fd).norm() / fd.norm()
            assert rel.item() < 1e-3

    def test_csv_row_field_order(self):
        zi, zg, za = self._batches(seed=2)
        out = vanp_loss(zi, zg, za, VanpLossConfig())
        row = out.csv_row(step=17)
        assert row.startswith("17,")
        assert len(row.split(",")) == len(out.CSV_FIELDS)


class TestConfigs:
    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            VicregCoefficients(mu1=-1.0)

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            VanpLossConfig(lam=1.5)
