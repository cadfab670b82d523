import math
from dataclasses import replace

import numpy as np
import pytest

from bromimo import montecarlo as mc
from bromimo.channel import SystemConfig
from bromimo.decoder import Decoder
from bromimo.errors import ConfigValidationError
from bromimo.montecarlo import ExperimentConfig, SamplingPath, SweepParameter


def system(**kw):
    base = dict(n=24, beta=1.5, tau=2.5, tau_p=1.0, rho=10.0, alpha=0.5, r=0.2, seed=5)
    base.update(kw)
    return SystemConfig(**base)


def experiment(**kw):
    sys_kw = kw.pop("system", {})
    base = dict(system=system(**sys_kw), trials=6, decoders=(Decoder.BRO, Decoder.LS))
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigValidationError):
        experiment(trials=0)
    with pytest.raises(ConfigValidationError):
        experiment(decoders=())
    with pytest.raises(ValueError):
        experiment(decoders=("ML",))


def test_defaults():
    cfg = ExperimentConfig(system=system())
    assert cfg.trials == 100
    assert cfg.decoders == (Decoder.BRO,)
    assert cfg.sampling_path is SamplingPath.DIRECT_STATISTICAL


@pytest.mark.parametrize("path", list(SamplingPath))
def test_trial_is_deterministic(path):
    cfg = experiment(sampling_path=path)
    assert mc.run_trial(cfg, 3) == mc.run_trial(cfg, 3)


def test_decoders_share_the_realization(monkeypatch):
    seen = []
    from bromimo import decoder

    real_bro, real_ls = decoder.bro_solve, decoder.ls_solve

    def spy(fn):
        def wrapped(problem, *a, **k):
            seen.append((problem.y.copy(), problem.A_hat.copy()))
            return fn(problem, *a, **k)

        return wrapped

    monkeypatch.setattr(decoder, "bro_solve", spy(real_bro))
    monkeypatch.setattr(decoder, "ls_solve", spy(real_ls))
    mc.run_trial(experiment(), 0)
    assert len(seen) == 2
    np.testing.assert_array_equal(seen[0][0], seen[1][0])
    np.testing.assert_array_equal(seen[0][1], seen[1][1])


def test_order_and_thread_independence():
    cfg = experiment(trials=8)
    a = mc.run_experiment(cfg, workers=1)
    b = mc.run_experiment(cfg, workers=3, trial_indices=[5, 2, 7, 0, 1, 6, 3, 4])
    assert a.decoders == b.decoders
    assert a.theory == b.theory


def test_trial_indices_must_be_a_permutation():
    with pytest.raises(ValueError):
        mc.run_experiment(experiment(trials=3), trial_indices=[0, 1, 1])


def test_single_trial_has_no_standard_error():
    res = mc.run_experiment(experiment(trials=1), workers=1)
    for st in res.decoders.values():
        assert math.isnan(st.std_err_mse) and math.isnan(st.std_err_ber)
        assert st.n_trials == 1


def test_standard_error_definition():
    cfg = experiment(trials=5)
    per = [mc.run_trial(cfg, i) for i in range(5)]
    res = mc.aggregate(cfg, per)
    mse = np.array([t[Decoder.BRO].mse for t in per])
    st = res.decoders[Decoder.BRO]
    assert st.mean_mse == pytest.approx(mse.mean())
    assert st.std_err_mse == pytest.approx(mse.std(ddof=1) / math.sqrt(5))
    assert 0 <= st.n_nonconverged <= st.n_trials


def test_theory_is_attached():
    res = mc.run_experiment(experiment(trials=2), workers=1)
    assert res.theory is not None
    assert res.m == 36 and res.n == 24


def test_noiseless_perfect_csi_recovers_every_bit():
    cfg = ExperimentConfig(
        system=system(n=64, beta=2.0, r=0.0, rho=1e12, rho_p_override=1e12),
        trials=5,
        decoders=(Decoder.BRO,),
    )
    for i in range(cfg.trials):
        assert mc.run_trial(cfg, i)[Decoder.BRO].ber == 0.0
    # mu* leaves the admitted search range at this SNR; the simulation still reports
    res = mc.run_experiment(cfg, workers=1)
    assert res.theory is None
    assert res.decoders[Decoder.BRO].mean_ber == 0.0


def test_threads_env(monkeypatch):
    monkeypatch.setenv(mc.THREADS_ENV, "3")
    assert mc.worker_count() == 3
    monkeypatch.setenv(mc.THREADS_ENV, "0")
    assert mc.worker_count() >= 1
    monkeypatch.setenv(mc.THREADS_ENV, "lots")
    assert mc.worker_count() >= 1


def test_two_sampling_paths_agree_in_distribution():
    cfg = experiment(system={"n": 64}, trials=200, decoders=(Decoder.BRO,))
    a = mc.run_experiment(cfg).decoders[Decoder.BRO]
    b = mc.run_experiment(replace(cfg, sampling_path=SamplingPath.PILOT_SIMULATION)).decoders[Decoder.BRO]
    assert abs(a.mean_mse - b.mean_mse) <= 3 * math.hypot(a.std_err_mse, b.std_err_mse)


# ---------------------------------------------------------------------------
# sweeps


def test_with_parameter():
    s = system()
    assert mc.with_parameter(s, SweepParameter.RHO_DB, 20.0).rho == pytest.approx(100.0)
    assert mc.with_parameter(s, "beta", 1.0).m == 24
    assert mc.with_parameter(s, "r", 0.6).r == 0.6
    assert mc.with_parameter(s, "alpha", 0.3).alpha == 0.3


def test_singleton_sweep_equals_run_experiment():
    cfg = experiment(trials=4)
    (pt,) = mc.sweep(cfg, "rho_db", [10.0])
    direct = mc.run_experiment(cfg)
    assert pt.error is None
    assert pt.result.decoders == direct.decoders


def test_sweep_records_errors_and_continues():
    pts = mc.sweep(experiment(trials=2), "beta", [0.3, 1.0])
    assert pts[0].result is None and "beta" in pts[0].error
    assert pts[1].result is not None and pts[1].result.m == 24


def test_sweep_is_reproducible():
    cfg = experiment(trials=3)
    a = mc.sweep(cfg, "r", [0.0, 0.5])
    b = mc.sweep(cfg, "r", [0.0, 0.5])
    assert [p.result.decoders for p in a] == [p.result.decoders for p in b]


def test_theory_ber_decreases_with_snr():
    cfg = ExperimentConfig(system=system(n=100), trials=1)
    bers = [mc.theory_for(mc.with_parameter(cfg.system, "rho_db", v)).ber for v in (-5, 0, 5, 10, 15)]
    assert all(b1 < b0 for b0, b1 in zip(bers, bers[1:]))


def test_sweep_needs_values():
    with pytest.raises(ValueError):
        mc.sweep(experiment(), "r", [])
