import warnings

import numpy as np
import pytest

from rominvert.errors import ConfigError, DataIOError, ParseError
from rominvert.forward import generate_dataset
from rominvert.rom import (
    ExtrapolationWarning,
    RomModel,
    RomSurrogate,
    TrainConfig,
    reconstruct,
    rom_evaluate,
    train,
)
from rominvert.series import TimeSeries, boundary_jump

from conftest import RATES


def test_training_is_deterministic(dataset, models):
    again = train(dataset, TrainConfig.nonoverlapping())
    assert again == models["nonoverlapping"]


@pytest.mark.parametrize("approach", ["nonoverlapping", "sliding"])
def test_final_loss_below_initial(models, approach):
    hist = models[approach].loss_history
    assert len(hist) == 11
    assert hist[-1] < hist[0]


def test_zero_targets():
    ds = {q: TimeSeries(0.0, 1.0, np.zeros(46)) for q in (1.0, 2.0)}
    model = train(ds, TrainConfig.nonoverlapping(epochs=30))
    assert model.loss_history[-1] < 1e-4
    assert model.loss_history[-1] < model.loss_history[0]
    out = reconstruct(model, 1.5, ds[1.0].times).values
    assert np.max(np.abs(out)) < 1e-12  # degenerate scale maps back to the constant


def test_non_divisible_length_rejected():
    ds = {1.0: TimeSeries(0.0, 1.0, np.arange(30.0))}
    with pytest.raises(ConfigError):
        train(ds, TrainConfig.nonoverlapping())


def test_mismatched_grids_rejected():
    ds = {1.0: TimeSeries(0.0, 1.0, np.zeros(46)), 2.0: TimeSeries(0.0, 1.0, np.zeros(23))}
    with pytest.raises(ConfigError):
        train(ds, TrainConfig.nonoverlapping())


def test_bad_config():
    with pytest.raises(ConfigError):
        TrainConfig(lr=0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"learning_rate": 0.1})


def test_config_round_trip():
    cfg = TrainConfig.nonoverlapping(seed=4, lr=1e-3)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("approach", ["nonoverlapping", "sliding"])
def test_persistence_round_trip(models, approach, tmp_path):
    m = models[approach]
    path = m.save(tmp_path / "m.json")
    back = RomModel.load(path)
    assert back == m
    assert back.to_json() == m.to_json()


def test_load_errors(tmp_path):
    with pytest.raises(DataIOError):
        RomModel.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        RomModel.load(bad)
    bad.write_text('{"format": "something-else", "version": 1}')
    with pytest.raises(ParseError):
        RomModel.load(bad)


@pytest.mark.parametrize("approach", ["nonoverlapping", "sliding"])
def test_reconstruct_training_rate(models, dataset, times, approach):
    m = models[approach]
    series = reconstruct(m, 200.0, times)
    assert isinstance(series, TimeSeries) and len(series) == 115
    truth = dataset[200.0].values
    assert np.mean((series.values - truth) ** 2) < 0.1 * np.var(np.concatenate(
        [s.values for s in dataset.values()]))


def test_extrapolation_warning(models, times):
    with pytest.warns(ExtrapolationWarning):
        out = reconstruct(models["sliding"], 4000.0, times).values
    assert np.all(np.isfinite(out))


def test_no_warning_inside_grid(models, times):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reconstruct(models["sliding"], 250.0, times)


def test_rom_evaluate_contract(models, times):
    m = models["sliding"]
    a = rom_evaluate(m, 321.0, times)
    b = rom_evaluate(m, 321.0, times)
    assert np.array_equal(a, b)
    assert np.array_equal(a, reconstruct(m, 321.0, times).values)
    assert np.array_equal(a, RomSurrogate(m, times)(321.0))


@pytest.mark.parametrize("approach", ["nonoverlapping", "sliding"])
def test_continuity_probe(models, times, approach):
    f = RomSurrogate(models[approach], times)
    for q in np.linspace(110, 390, 8):
        diffs = [np.max(np.abs(f(q * (1 + d)) - f(q))) for d in (1e-3, 1e-4, 1e-5)]
        # a tenfold smaller step shrinks the change roughly tenfold
        assert diffs[1] < 0.2 * diffs[0]
        assert diffs[2] < 0.2 * diffs[1]


def test_time_shift_equivariance(dataset):
    cfg = TrainConfig.nonoverlapping(epochs=2)
    shifted = {q: TimeSeries(s.t0 + 1000.0, s.dt, s.values) for q, s in dataset.items()}
    a = train(dataset, cfg)
    b = train(shifted, cfg)
    ra = reconstruct(a, 250.0, dataset[100.0].times).values
    rb = reconstruct(b, 250.0, shifted[100.0].times).values
    np.testing.assert_allclose(ra, rb, rtol=0, atol=1e-9 * np.max(np.abs(ra)))


def _non_increasing(hist):
    return all(b <= a for a, b in zip(hist, hist[1:]))


@pytest.mark.slow
def test_loss_mostly_non_increasing_full_batch(dataset):
    runs = [train(dataset, TrainConfig.nonoverlapping(seed=s, batch_size=0)).loss_history
            for s in range(10)]
    assert all(h[-1] < h[0] for h in runs)
    assert sum(_non_increasing(h) for h in runs) >= 8


@pytest.mark.slow
def test_loss_mostly_non_increasing_default_nonoverlapping(dataset):
    runs = [train(dataset, TrainConfig.nonoverlapping(seed=s)).loss_history for s in range(10)]
    assert all(h[-1] < h[0] for h in runs)
    assert sum(_non_increasing(h) for h in runs) >= 8


def test_boundary_jump_ordering(models, times):
    for q in RATES:
        j_non = boundary_jump(reconstruct(models["nonoverlapping"], q, times).values, 23)
        j_sld = boundary_jump(reconstruct(models["sliding"], q, times).values, 23)
        assert j_sld < j_non


def test_single_rate_dataset_trains():
    ds = generate_dataset([150.0], n_points=46)
    model = train(ds, TrainConfig.nonoverlapping(epochs=1))
    out = reconstruct(model, 150.0, ds[150.0].times).values
    assert np.all(np.isfinite(out))
