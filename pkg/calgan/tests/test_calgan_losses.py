import math

import pytest
import torch

from calgan.losses import PROB_EPS, d_loss, g_loss, gan_value


def const(value, shape=(2, 3, 4, 4)):
    return torch.full(shape, value, dtype=torch.float64)


class TestGanValue:
    def test_coin_flip_discriminator_perfect_pixels(self):
        probs = const(0.5, (2, 1, 4, 4))
        img = const(0.3)
        value = gan_value(probs, probs, img, img.clone(), lam=100.0)
        assert float(value) == pytest.approx(2 * math.log(0.5), abs=1e-5)
        assert float(value) == pytest.approx(-1.38629, abs=1e-5)

    def test_zero_pixel_error_for_any_lambda(self):
        probs = const(0.7, (2, 1, 4, 4))
        img = const(-0.2)
        for lam in (0.0, 1.0, 100.0, 12345.0):
            assert float(gan_value(probs, probs, img, img.clone(), lam)) == pytest.approx(
                math.log(0.7) + math.log(0.3), abs=1e-9)

    def test_lambda_zero_is_plain_adversarial_value(self):
        gen = torch.linspace(-1, 1, 48, dtype=torch.float64).reshape(1, 3, 4, 4)
        target = gen.flip(-1)
        d_real = const(0.9, (1, 1, 2, 2))
        d_fake = const(0.2, (1, 1, 2, 2))
        expected = math.log(0.9) + math.log(0.8)
        assert float(gan_value(d_real, d_fake, gen, target, 0.0)) == pytest.approx(
            expected, abs=1e-12)

    def test_lambda_decomposition_identity(self):
        gen = torch.linspace(-1, 1, 48, dtype=torch.float64).reshape(1, 3, 4, 4)
        target = gen.roll(3, dims=-1)
        d_real = const(0.6, (1, 1, 2, 2))
        d_fake = const(0.4, (1, 1, 2, 2))
        l1 = float((target - gen).abs().mean())
        for lam in (1.0, 100.0, 512.5):
            full = float(gan_value(d_real, d_fake, gen, target, lam))
            base = float(gan_value(d_real, d_fake, gen, target, 0.0))
            assert full == pytest.approx(base + lam * l1, abs=1e-9)

    def test_probability_clamp_keeps_value_finite(self):
        zeros = const(0.0, (1, 1, 2, 2))
        ones = const(1.0, (1, 1, 2, 2))
        img = const(0.1)
        value = float(gan_value(ones, zeros, img, img.clone(), 0.0))
        assert math.isfinite(value)
        assert value == pytest.approx(2 * math.log(1 - PROB_EPS), abs=1e-9)

    def test_shape_mismatch_rejected(self):
        probs = const(0.5, (1, 1, 2, 2))
        with pytest.raises(ValueError, match="shape"):
            gan_value(probs, probs, const(0.0), const(0.0, (2, 3, 5, 5)), 1.0)


class TestGLoss:
    def test_perfect_fooling_and_pixels_drives_loss_to_zero(self):
        gen = const(0.25)
        loss = float(g_loss(const(1.0, (2, 1, 3, 3)), gen, gen.clone(), 100.0))
        assert abs(loss) < 1e-6

    def test_lambda_times_l1_adds_exactly(self):
        gen = const(0.0)
        target = gen + 0.01  # L1 exactly 0.01
        base = float(g_loss(const(0.5, (2, 1, 3, 3)), gen, gen.clone(), 0.0))
        full = float(g_loss(const(0.5, (2, 1, 3, 3)), gen, target, 100.0))
        assert full - base == pytest.approx(1.0, abs=1e-9)

    def test_nonsaturating_form(self):
        # -mean log d, not log(1 - d)
        probs = const(0.25, (1, 1, 2, 2))
        gen = const(0.0)
        assert float(g_loss(probs, gen, gen.clone(), 0.0)) == pytest.approx(
            -math.log(0.25), abs=1e-12)


class TestGradientCheck:
    def test_analytic_matches_central_differences_on_tiny_model(self):
        torch.manual_seed(0)
        # toy generator: 5 -> 12 linear (72 params), reshaped to a 'image'
        model = torch.nn.Linear(5, 12, dtype=torch.float64)
        assert sum(p.numel() for p in model.parameters()) <= 100
        z = torch.randn(3, 5, dtype=torch.float64)
        target = torch.randn(3, 1, 4, 3, dtype=torch.float64)
        probe = torch.randn(1, 4, 3, dtype=torch.float64)

        def loss_value() -> torch.Tensor:
            gen = torch.tanh(model(z)).reshape(3, 1, 4, 3)
            # frozen smooth 'discriminator': a weighted-average probability
            d = torch.sigmoid((gen * probe).mean(dim=(1, 2, 3), keepdim=True))
            return g_loss(d.reshape(3, 1, 1, 1), gen, target, lam=3.0)

        loss = loss_value()
        loss.backward()
        h = 1e-6
        for param in model.parameters():
            analytic = param.grad.clone()
            flat = param.data.view(-1)
            for idx in range(flat.numel()):
                original = float(flat[idx])
                flat[idx] = original + h
                plus = float(loss_value().detach())
                flat[idx] = original - h
                minus = float(loss_value().detach())
                flat[idx] = original
                numeric = (plus - minus) / (2 * h)
                ref = float(analytic.view(-1)[idx])
                scale = max(abs(ref), abs(numeric), 1e-8)
                assert abs(numeric - ref) / scale < 1e-4


class TestDLoss:
    def test_half_scale_halves_the_loss(self):
        d_real = const(0.8, (2, 1, 3, 3))
        d_fake = const(0.3, (2, 1, 3, 3))
        full = float(d_loss(d_real, d_fake, grad_scale=1.0))
        half = float(d_loss(d_real, d_fake, grad_scale=0.5))
        assert half == pytest.approx(0.5 * full, abs=1e-12)

    def test_sign_convention(self):
        # a confident-correct discriminator has a small (near-zero) loss
        good = float(d_loss(const(0.99, (1, 1, 2, 2)), const(0.01, (1, 1, 2, 2))))
        bad = float(d_loss(const(0.01, (1, 1, 2, 2)), const(0.99, (1, 1, 2, 2))))
        assert good < bad
