import numpy as np
import pytest
import torch

from survtrainer.data import DatasetError
from survtrainer.train import (
    Checkpoint,
    TrainConfig,
    fm_score,
    load_checkpoint,
    masked_bce,
    save_checkpoint,
    train,
)
from survtrainer.unet import UNet


class TestMaskedBce:
    def test_matches_manual_computation(self):
        pred = torch.tensor([[[[0.8, 0.2], [0.6, 0.4]]]])
        target = torch.tensor([[[[1.0, 0.0], [0.0, 1.0]]]])
        weight = torch.ones_like(target)
        expected = -(np.log(0.8) + np.log(0.8) + np.log(0.4) + np.log(0.4)) / 4
        assert float(masked_bce(pred, target, weight)) == pytest.approx(expected, rel=1e-6)

    def test_excluded_pixels_do_not_contribute(self):
        pred = torch.tensor([[[[0.9, 0.001]]]])
        target = torch.tensor([[[[1.0, 1.0]]]])
        weight = torch.tensor([[[[1.0, 0.0]]]])
        loss = float(masked_bce(pred, target, weight))
        assert loss == pytest.approx(-np.log(0.9), rel=1e-6)

    def test_extreme_predictions_are_finite(self):
        pred = torch.tensor([[[[0.0, 1.0]]]])
        target = torch.tensor([[[[1.0, 0.0]]]])
        weight = torch.ones_like(target)
        assert np.isfinite(float(masked_bce(pred, target, weight)))


class TestGradientCheck:
    def test_bce_gradient_matches_central_differences(self):
        torch.manual_seed(0)
        model = UNet(in_channels=6, width_mult=0.03125).double().eval()
        x = (torch.rand(1, 6, 16, 16, dtype=torch.float64) - 0.5)
        target = (torch.rand(1, 1, 16, 16, dtype=torch.float64) < 0.3).double()
        weight = torch.ones_like(target)

        def loss_value():
            return masked_bce(model(x), target, weight)

        loss = loss_value()
        loss.backward()

        rng = np.random.default_rng(1)
        params = [p for p in model.parameters() if p.grad is not None and p.numel() > 1]
        h = 1e-6
        checked = 0
        for p in params[:6]:
            flat = p.detach().view(-1)
            idx = int(rng.integers(0, flat.numel()))
            analytic = float(p.grad.view(-1)[idx])
            original = float(flat[idx])
            with torch.no_grad():
                flat[idx] = original + h
                up = float(loss_value())
                flat[idx] = original - h
                down = float(loss_value())
                flat[idx] = original
            numeric = (up - down) / (2 * h)
            scale = max(abs(analytic), abs(numeric), 1e-8)
            assert abs(analytic - numeric) / scale < 1e-4, \
                f"param {checked}: analytic {analytic} vs numeric {numeric}"
            checked += 1
        assert checked == 6


class TestTrainLoop:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(lr=0.0).validate()
        with pytest.raises(ValueError):
            TrainConfig(lr_patience=10, stop_patience=10).validate()
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0).validate()

    def test_empty_split_errors(self, tmp_path):
        with pytest.raises(DatasetError):
            train(tmp_path, TrainConfig(max_epochs=1))

    def test_two_epoch_run_and_checkpoint_roundtrip(self, smoke_dataset, tmp_path):
        cfg = TrainConfig(width_mult=0.0625, batch_size=8, max_epochs=2, seed=3)
        ckpt = train(smoke_dataset, cfg)
        assert len(ckpt.curves) == 2
        assert ckpt.curves[0]["lr"] == pytest.approx(1e-3)
        assert ckpt.channel_order[:2] == ["current", "background"]

        path = tmp_path / "model.pt"
        save_checkpoint(ckpt, path)
        back = load_checkpoint(path)
        assert back.config == cfg
        assert back.curves == ckpt.curves
        assert back.manifest_sha256 == ckpt.manifest_sha256
        for key, tensor in ckpt.state_dict.items():
            assert torch.equal(back.state_dict[key], tensor)

    def test_training_is_deterministic(self, smoke_dataset):
        cfg = TrainConfig(width_mult=0.0625, batch_size=8, max_epochs=2, seed=5)
        a = train(smoke_dataset, cfg)
        b = train(smoke_dataset, cfg)
        assert a.curves == b.curves
        for key in a.state_dict:
            assert torch.equal(a.state_dict[key], b.state_dict[key])


class TestFmScore:
    def test_perfect_and_empty(self):
        target = np.zeros((4, 4), dtype=np.float32)
        assert fm_score(np.zeros((4, 4), dtype=bool), target) == 1.0
        target[1, 1] = 1.0
        pred = target > 0.5
        assert fm_score(pred, target) == 1.0

    def test_half_detected(self):
        target = np.zeros((2, 2), dtype=np.float32)
        target[0, :] = 1.0
        pred = np.zeros((2, 2), dtype=bool)
        pred[0, 0] = True
        assert fm_score(pred, target) == pytest.approx(2 / 3)

    def test_weight_excludes(self):
        target = np.ones((1, 2), dtype=np.float32)
        pred = np.array([[True, False]])
        weight = np.array([[1.0, 0.0]], dtype=np.float32)
        assert fm_score(pred, target, weight) == 1.0
