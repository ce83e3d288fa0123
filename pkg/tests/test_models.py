"""Encoder stack, policy head, and initialization contracts."""

import numpy as np
import pytest
import torch

from vanp_lab.errors import ShapeError
from vanp_lab.models.backbone import BackboneConfig, ImageBackbone
from vanp_lab.models.encoder import EncoderConfig, EncoderStack
from vanp_lab.models.policy import DownstreamPolicy
from vanp_lab.models.transformer import ContextTransformer, TransformerConfig

from conftest import small_encoder_config


def _frames(b, t, h=98, w=126, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.rand(b, t, 3, h, w, generator=g)


class TestBackbone:
    def test_output_shape_and_features(self):
        bb = ImageBackbone(BackboneConfig(output_dim=64))
        x = torch.rand(2, 3, 98, 126)
        z, feats = bb(x, return_features=True)
        assert z.shape == (2, 64)
        assert feats.ndim == 4 and feats.shape[0] == 2
        assert feats.shape[1] == bb.feature_channels

    def test_input_shape_rejected_with_both_shapes(self):
        bb = ImageBackbone(BackboneConfig())
        with pytest.raises(ShapeError, match="98"):
            bb(torch.rand(2, 3, 96, 126))

    def test_tiny_parameter_budget(self):
        bb = ImageBackbone(BackboneConfig(variant="tiny"))
        n = sum(p.numel() for p in bb.parameters())
        assert 2e5 < n < 5e5  # "~0.3M params" tier

    @pytest.mark.parametrize("variant", ["resnet18-shaped", "resnet50-shaped"])
    def test_residual_variants_forward(self, variant):
        bb = ImageBackbone(BackboneConfig(variant=variant))
        z = bb(torch.rand(1, 3, 98, 126))
        assert z.shape == (1, 512)

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            BackboneConfig(variant="vgg")

    def test_kaiming_init_zero_mean(self):
        torch.manual_seed(0)
        bb = ImageBackbone(BackboneConfig(output_dim=512))
        for name, module in bb.named_modules():
            if isinstance(module, (torch.nn.Conv2d, torch.nn.Linear)):
                w = module.weight.detach()
                se = w.std() / np.sqrt(w.numel())
                assert abs(w.mean().item()) < 3 * se.item(), name
                if module.bias is not None:
                    assert module.bias.detach().abs().max().item() == 0.0

    def test_kaiming_init_covers_whole_stack(self):
        torch.manual_seed(0)
        enc = EncoderStack(EncoderConfig())
        checked = 0
        for name, module in enc.named_modules():
            if isinstance(module, (torch.nn.Conv2d, torch.nn.Linear)):
                w = module.weight.detach()
                se = w.std() / np.sqrt(w.numel())
                assert abs(w.mean().item()) < 3 * se.item(), name
                if module.bias is not None:
                    assert module.bias.detach().abs().max().item() == 0.0, name
                checked += 1
        assert checked > 30  # backbone, two transformers, embeddings, projectors


class TestContextTransformer:
    def test_summary_shape(self):
        tr = ContextTransformer(TransformerConfig(layers=2, token_dim=64, ffn_dim=64))
        out = tr(torch.randn(3, 5, 64))
        assert out.shape == (3, 64)

    def test_defaults_are_four_by_four(self):
        cfg = TransformerConfig()
        assert cfg.layers == 4 and cfg.heads == 4 and cfg.token_dim == 512

    def test_token_dim_head_divisibility(self):
        with pytest.raises(ValueError, match="divisible"):
            TransformerConfig(token_dim=65, heads=4)

    def test_single_context_token_enforced(self):
        with pytest.raises(ValueError, match="context token"):
            TransformerConfig(context_tokens=2)

    def test_order_sensitivity_with_learned_positional(self):
        torch.manual_seed(1)
        tr = ContextTransformer(TransformerConfig(layers=2, token_dim=64, ffn_dim=64))
        x = torch.randn(2, 6, 64)
        out_fwd = tr(x)
        out_rev = tr(torch.flip(x, dims=(1,)))
        assert not torch.allclose(out_fwd, out_rev, atol=1e-5)

    def test_positional_none_is_order_equivariant_summary(self):
        torch.manual_seed(1)
        tr = ContextTransformer(TransformerConfig(layers=2, token_dim=64, ffn_dim=64,
                                                  positional="none"))
        x = torch.randn(2, 6, 64)
        assert torch.allclose(tr(x), tr(torch.flip(x, dims=(1,))), atol=1e-5)

    def test_sequence_longer_than_table_rejected(self):
        tr = ContextTransformer(TransformerConfig(layers=1, token_dim=64, ffn_dim=64,
                                                  max_tokens=4))
        with pytest.raises(ValueError, match="positional table"):
            tr(torch.randn(1, 5, 64))


class TestEncoderStack:
    @pytest.fixture(scope="class")
    def enc(self):
        torch.manual_seed(0)
        return EncoderStack(small_encoder_config())

    def test_branch_shapes(self, enc):
        b, dim = 4, enc.embed_dim
        zi = enc.encode_observations(_frames(b, 6))
        za = enc.encode_actions(torch.zeros(b, 20, 2))
        zg = enc.encode_goal(torch.rand(b, 3, 98, 126))
        assert zi.shape == za.shape == zg.shape == (b, dim)
        assert enc.project(zi, "img").shape == (b, 2 * dim)

    def test_batch_permutation_equivariance(self, enc):
        x = _frames(5, 6, seed=3)
        perm = torch.tensor([4, 2, 0, 3, 1])
        out = enc.encode_observations(x)
        out_perm = enc.encode_observations(x[perm])
        assert torch.allclose(out[perm], out_perm, atol=1e-5)

    def test_zero_actions_finite(self, enc):
        za = enc.encode_actions(torch.zeros(3, 20, 2))
        assert torch.isfinite(za).all()

    def test_action_range_enforced(self, enc):
        bad = torch.zeros(2, 20, 2)
        bad[0, 0, 0] = 1.5
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            enc.encode_actions(bad)

    def test_distinct_action_sequences_separate(self, enc):
        rng = np.random.default_rng(0)
        sims = []
        for _ in range(100):
            a1 = torch.tensor(rng.uniform(-1, 1, (1, 20, 2)), dtype=torch.float32)
            a2 = torch.tensor(rng.uniform(-1, 1, (1, 20, 2)), dtype=torch.float32)
            z1, z2 = enc.encode_actions(a1), enc.encode_actions(a2)
            sims.append(torch.cosine_similarity(z1, z2).item())
        assert max(sims) < 0.999

    def test_goal_uses_shared_backbone(self, enc):
        frames = _frames(3, 6, seed=9)
        zg = enc.encode_goal(frames[:, -1])
        # same module object, so the same input gives the same output
        assert torch.equal(zg, enc.backbone(frames[:, -1]))
        # and it agrees with the history branch's token for that frame
        # (allclose: kernel reduction order differs across batch shapes)
        tokens = enc.frame_tokens(frames)
        assert torch.allclose(zg, tokens[:, -1], atol=1e-5)

    def test_goal_gradient_reaches_backbone(self):
        torch.manual_seed(0)
        enc = EncoderStack(small_encoder_config())
        out = enc.encode_goal(torch.rand(2, 3, 98, 126))
        enc.project(out, "goal").pow(2).mean().backward()
        grad = enc.backbone.fc.weight.grad
        assert grad is not None and grad.norm().item() > 0

    def test_projectors_have_separate_weights(self, enc):
        z = torch.randn(3, enc.embed_dim)
        assert not torch.allclose(enc.project(z, "img"), enc.project(z, "act"))

    def test_zero_input_projection_deterministic(self, enc):
        z = torch.zeros(2, enc.embed_dim)
        p1, p2 = enc.project(z, "img"), enc.project(z, "img")
        assert torch.equal(p1, p2)
        assert torch.equal(p1[0], p1[1])

    def test_unknown_branch_rejected(self, enc):
        with pytest.raises(ValueError, match="unknown branch"):
            enc.project(torch.zeros(1, enc.embed_dim), "depth")

    def test_order_reversal_changes_history_embedding(self, enc):
        x = _frames(2, 6, seed=5)
        assert not torch.allclose(enc.encode_observations(x),
                                  enc.encode_observations(torch.flip(x, dims=(1,))),
                                  atol=1e-5)

    def test_goal_in_wiring_appends_token(self):
        torch.manual_seed(2)
        cfg = small_encoder_config()
        cfg.goal_wiring = "in"
        enc = EncoderStack(cfg)
        frames, goal = _frames(2, 6), torch.rand(2, 3, 98, 126)
        with pytest.raises(ValueError, match="goal_images"):
            enc.encode_observations(frames)
        out = enc.encode_observations(frames, goal_images=goal)
        assert out.shape == (2, enc.embed_dim)
        other_goal = torch.rand(2, 3, 98, 126)
        assert not torch.allclose(out, enc.encode_observations(frames, goal_images=other_goal))

    def test_forward_determinism(self):
        outs = []
        for _ in range(2):
            torch.manual_seed(7)
            enc = EncoderStack(small_encoder_config())
            enc.eval()
            with torch.no_grad():
                outs.append(enc(_frames(2, 6, seed=1), torch.zeros(2, 20, 2),
                                torch.rand(2, 3, 98, 126, generator=torch.Generator().manual_seed(2))))
        for key in outs[0]:
            assert torch.equal(outs[0][key], outs[1][key]), key


class TestDownstreamPolicy:
    @pytest.fixture()
    def policy(self):
        torch.manual_seed(0)
        enc = EncoderStack(small_encoder_config())
        return DownstreamPolicy(enc, horizon=20, mode="frozen")

    def test_output_range_and_shape(self, policy):
        out = policy(_frames(3, 6), torch.randn(3, 2))
        assert out.shape == (3, 20, 2)
        assert out.abs().max().item() <= 1.0

    def test_frozen_mode_no_encoder_gradient(self, policy):
        out = policy(_frames(2, 6), torch.randn(2, 2))
        out.pow(2).mean().backward()
        for p in policy.encoder.observation_parameters():
            assert p.grad is None or p.grad.abs().max().item() == 0.0
        head_grads = [p.grad for p in policy.controller.parameters()]
        assert all(g is not None for g in head_grads)

    def test_finetune_mode_backbone_gets_gradient(self):
        torch.manual_seed(0)
        enc = EncoderStack(small_encoder_config())
        policy = DownstreamPolicy(enc, horizon=20, mode="finetune")
        policy(_frames(2, 6), torch.randn(2, 2)).pow(2).mean().backward()
        norms = [p.grad.norm().item() for p in enc.backbone.parameters() if p.grad is not None]
        assert norms and max(norms) > 0

    def test_invalid_mode_rejected(self, policy):
        with pytest.raises(ValueError, match="mode"):
            DownstreamPolicy(policy.encoder, mode="thawed")
        with pytest.raises(ValueError, match="mode"):
            policy.set_mode("melted")

    def test_goal_shape_validated(self, policy):
        with pytest.raises(ShapeError):
            policy(_frames(2, 6), torch.randn(2, 3))


class TestFullWidthContract:
    """The production-width stack: 512-wide context outputs, 1024 projections."""

    def test_shapes_at_production_width(self):
        torch.manual_seed(0)
        enc = EncoderStack(EncoderConfig())
        assert enc.config.obs_transformer.layers == 4
        assert enc.config.obs_transformer.heads == 4
        out = enc(_frames(2, 6), torch.zeros(2, 20, 2), torch.rand(2, 3, 98, 126))
        assert out["z_img"].shape == out["z_act"].shape == out["z_goal"].shape == (2, 512)
        assert out["p_img"].shape == out["p_act"].shape == out["p_goal"].shape == (2, 1024)
