import pytest

from survtrainer.controller import PlateauController


def drive(controller, losses):
    events = []
    for i, loss in enumerate(losses, 1):
        halve, stop = controller.update(loss)
        if halve:
            events.append(("halve", i))
        if stop:
            events.append(("stop", i))
            break
    return events


def test_flat_five_epochs_halves():
    c = PlateauController()
    events = drive(c, [1.0] + [1.0] * 5)
    assert events == [("halve", 6)]  # epoch 1 sets best, epochs 2..6 stall


def test_flat_ten_epochs_stops():
    c = PlateauController()
    events = drive(c, [1.0] + [1.0] * 10)
    assert events == [("halve", 6), ("stop", 11)]
    assert c.stopped_at == 11


def test_improvement_resets_both_counters():
    c = PlateauController()
    losses = [1.0, 1.0, 1.0, 1.0, 0.5] + [0.5] * 5 + [0.4] + [0.4] * 10
    events = drive(c, losses)
    assert events == [("halve", 10), ("halve", 16), ("stop", 21)]


def test_strictly_decreasing_never_fires():
    c = PlateauController()
    assert drive(c, [1.0 / (i + 1) for i in range(50)]) == []


def test_equal_loss_is_not_improvement():
    c = PlateauController()
    halve, stop = c.update(1.0)
    assert (halve, stop) == (False, False)
    assert c.update(1.0) == (False, False)
    assert c.streak == 1


def test_min_delta():
    c = PlateauController(min_delta=0.1)
    c.update(1.0)
    c.update(0.95)  # not enough improvement
    assert c.streak == 1
    c.update(0.85)  # enough
    assert c.streak == 0


def test_patience_invariant():
    with pytest.raises(ValueError):
        PlateauController(lr_patience=5, stop_patience=5)
    with pytest.raises(ValueError):
        PlateauController(lr_patience=10, stop_patience=5)
