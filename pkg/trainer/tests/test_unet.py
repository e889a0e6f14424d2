import pytest
import torch

from survtrainer.unet import UNet, parameter_counts, stage_widths

REFERENCE_TOTAL = 31_098_049      # published full-width figure, informational
REGRESSION_TOTAL = 31_057_043     # what this topology builds at width 1.0
REGRESSION_TRAINABLE = 31_045_249


def test_output_shape_and_range():
    model = UNet(in_channels=6, width_mult=0.0625)
    x = torch.rand(2, 6, 64, 64) - 0.5
    with torch.no_grad():
        y = model(x)
    assert y.shape == (2, 1, 64, 64)
    assert float(y.min()) >= 0.0 and float(y.max()) <= 1.0


def test_224_input_shape():
    model = UNet(in_channels=6, width_mult=0.03125)
    with torch.no_grad():
        y = model(torch.rand(1, 6, 224, 224) - 0.5)
    assert y.shape == (1, 1, 224, 224)


def test_input_must_be_divisible_by_16():
    model = UNet(width_mult=0.0625)
    with pytest.raises(ValueError, match="divisible by 16"):
        model(torch.rand(1, 6, 50, 50))


def test_width_multiplier_scales_stages():
    assert stage_widths(1.0) == [64, 128, 256, 512, 1024]
    assert stage_widths(0.125) == [8, 16, 32, 64, 128]
    assert stage_widths(0.001) == [2, 2, 2, 2, 2]  # floor keeps layers viable


def test_parameter_count_regression_and_reference_delta():
    model = UNet(in_channels=6, width_mult=1.0)
    total, trainable = parameter_counts(model)
    assert (total, trainable) == (REGRESSION_TOTAL, REGRESSION_TRAINABLE)
    delta = abs(total - REFERENCE_TOTAL) / REFERENCE_TOTAL
    print(f"full-width params: {total:,} total / {trainable:,} trainable; "
          f"{delta:.3%} from the {REFERENCE_TOTAL:,} reference figure")
    assert delta < 0.005  # same ballpark; exact layer widths are not pinned


def test_he_initialization_applied():
    model = UNet(width_mult=0.125)
    conv = model.inc.block[0]
    assert conv.bias is not None and not conv.bias.abs().any()
    fan_in = conv.weight.shape[1] * conv.weight.shape[2] * conv.weight.shape[3]
    expected_std = (2.0 / fan_in) ** 0.5
    assert float(conv.weight.detach().std()) == pytest.approx(expected_std, rel=0.25)


def test_forward_is_deterministic_in_eval():
    model = UNet(width_mult=0.125).eval()
    x = torch.rand(1, 6, 32, 32)
    with torch.no_grad():
        assert torch.equal(model(x), model(x))
