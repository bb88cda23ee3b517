import numpy as np
import pytest
import torch
from torch import nn

from calgan.data import (
    letterbox,
    tensor_to_image,
    to_input_tensor,
    to_target_tensor,
    unletterbox,
)
from calgan.model import (
    KERNEL,
    STRIDE,
    DiscriminatorConfig,
    GeneratorConfig,
    PatchDiscriminator,
    UNetGenerator,
    conv_layers,
)


class TestArchitectureContract:
    def test_generator_shape_contract(self, toy_configs):
        gen_cfg, _ = toy_configs
        torch.manual_seed(0)
        generator = UNetGenerator(gen_cfg)
        out = generator(torch.randn(2, 4, 256, 256))
        assert tuple(out.shape) == (2, 3, 256, 256)

    def test_generator_handles_padded_multiples(self, toy_configs):
        gen_cfg, _ = toy_configs
        torch.manual_seed(0)
        generator = UNetGenerator(gen_cfg)
        out = generator(torch.randn(1, 4, 512, 256))
        assert tuple(out.shape) == (1, 3, 512, 256)

    def test_encoder_depth_eight_decoder_mirrors(self, toy_configs):
        generator = UNetGenerator(toy_configs[0])
        assert len(generator.encoders) == 8
        assert len(generator.decoders) == 8
        assert len(conv_layers(generator)) == 16

    def test_discriminator_depth_four(self, toy_configs):
        disc = PatchDiscriminator(toy_configs[1])
        assert len(conv_layers(disc)) == 4

    def test_all_convs_are_4x4_stride_2(self, toy_configs):
        for module in (UNetGenerator(toy_configs[0]), PatchDiscriminator(toy_configs[1])):
            layers = conv_layers(module)
            assert layers
            for layer in layers:
                assert layer.kernel_size == (KERNEL, KERNEL) == (4, 4)
                assert layer.stride == (STRIDE, STRIDE) == (2, 2)

    def test_three_channel_input_fails(self, toy_configs):
        with pytest.raises(ValueError, match="4 channels"):
            GeneratorConfig(in_channels=3)
        generator = UNetGenerator(toy_configs[0])
        with pytest.raises(ValueError, match="4-channel"):
            generator(torch.randn(1, 3, 256, 256))

    def test_resolution_must_match_depth(self):
        with pytest.raises(ValueError, match="divisible"):
            GeneratorConfig(resolution=320)
        generator = UNetGenerator(GeneratorConfig(base_width=8))
        with pytest.raises(ValueError, match="divisible"):
            generator(torch.randn(1, 4, 320, 320))

    def test_depths_are_pinned(self):
        with pytest.raises(ValueError):
            GeneratorConfig(depth=7)
        with pytest.raises(ValueError):
            DiscriminatorConfig(depth=5)

    def test_output_saturates_to_unit_range(self, toy_configs):
        torch.manual_seed(1)
        generator = UNetGenerator(toy_configs[0])
        with torch.no_grad():
            out = generator(torch.randn(1, 4, 256, 256) * 10)
        assert float(out.min()) >= -1.0
        assert float(out.max()) <= 1.0

    def test_discriminator_emits_patch_probabilities(self, toy_configs):
        torch.manual_seed(2)
        disc = PatchDiscriminator(toy_configs[1])
        with torch.no_grad():
            probs = disc(torch.randn(2, 3, 256, 256), torch.rand(2, 1, 256, 256),
                         torch.randn(2, 3, 256, 256))
        assert probs.shape[1] == 1
        assert probs.shape[2] > 1 and probs.shape[3] > 1  # spatial map, not a scalar
        assert float(probs.min()) >= 0.0 and float(probs.max()) <= 1.0

    def test_deterministic_mapping_no_noise_input(self, toy_configs):
        torch.manual_seed(3)
        generator = UNetGenerator(toy_configs[0]).eval()
        x = torch.randn(1, 4, 256, 256)
        with torch.no_grad():
            assert torch.equal(generator(x), generator(x))


class TestDataPlumbing:
    def test_letterbox_round_trip_dims(self):
        img = np.random.default_rng(0).integers(0, 256, size=(48, 100, 3), dtype=np.uint8)
        canvas, geom = letterbox(img, 64)
        assert canvas.shape == (64, 64, 3)
        restored = unletterbox(canvas, geom)
        assert restored.shape == img.shape

    def test_letterbox_mask_stays_binary(self):
        mask = np.zeros((30, 50), dtype=np.uint8)
        mask[5:20, 10:40] = 255
        canvas, _ = letterbox(mask, 64, nearest=True)
        assert set(np.unique(canvas)) <= {0, 255}

    def test_input_tensor_is_four_channel_unit_range(self):
        rgb = np.full((8, 8, 3), 255, dtype=np.uint8)
        mask = np.zeros((8, 8), dtype=np.uint8)
        mask[2:4, 2:4] = 255
        x = to_input_tensor(rgb, mask)
        assert tuple(x.shape) == (4, 8, 8)
        assert float(x[:3].max()) == pytest.approx(1.0)
        assert set(x[3].unique().tolist()) == {0.0, 1.0}

    def test_image_tensor_round_trip(self):
        rgb = np.random.default_rng(1).integers(0, 256, size=(9, 7, 3), dtype=np.uint8)
        assert np.array_equal(tensor_to_image(to_target_tensor(rgb)), rgb)
