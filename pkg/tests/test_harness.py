import json
import math

import numpy as np
import pytest

from dpspectra.harness import (
    ExperimentConfig,
    derive_seed,
    load_config_file,
    preset_config,
    read_rows,
    run_experiment,
    summarize,
    theoretical_rate,
    write_rows,
    write_summaries,
    RESULT_HEADER,
)


def tiny_config(**overrides):
    base = dict(
        setting="tiny",
        param_name="n",
        grid=(200, 400),
        fixed={"p": 10, "r": 1, "lam": 10.0, "sigma2": 1.0, "eps": 1.0, "delta": 0.1},
        reps=2,
        seed=5,
        methods=("ours",),
        metrics=("subspace_fro",),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_row_count_and_finiteness():
    rows = run_experiment(tiny_config())
    assert len(rows) == 1 * 2 * 2 * 1
    assert all(math.isfinite(r.value) for r in rows)


def test_row_count_formula_multi():
    cfg = tiny_config(methods=("ours", "dp_gauss"), metrics=("subspace_fro", "subspace_spec"))
    rows = run_experiment(cfg)
    assert len(rows) == 2 * 2 * 2 * 2


def test_rerun_bit_identical_csv(tmp_path):
    cfg = tiny_config(record_timing=False)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_rows(run_experiment(cfg), p1)
    write_rows(run_experiment(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_round_trip(tmp_path):
    rows = run_experiment(tiny_config())
    path = tmp_path / "r.csv"
    write_rows(rows, path)
    assert path.read_text().splitlines()[0] == RESULT_HEADER
    back = read_rows(path)
    assert len(back) == len(rows)
    assert back[0].setting == "tiny"
    assert back[0].value == pytest.approx(rows[0].value)


def test_workers_do_not_change_results():
    cfg = tiny_config(record_timing=False)
    serial = [(r.seed, r.value) for r in run_experiment(cfg, workers=1)]
    threaded = [(r.seed, r.value) for r in run_experiment(cfg, workers=4)]
    assert serial == threaded


def test_seed_derivation_stable_and_distinct():
    a = derive_seed(7, "S1a", "ours", "n=100", 0)
    b = derive_seed(7, "S1a", "ours", "n=100", 0)
    c = derive_seed(7, "S1a", "ours", "n=100", 1)
    d = derive_seed(8, "S1a", "ours", "n=100", 0)
    assert a == b
    assert len({a, c, d}) == 3


def test_summarize_constant_values():
    rows = run_experiment(tiny_config(record_timing=False))
    doubled = rows + rows  # same values twice: sd over identical values is 0
    summ = summarize([r for r in doubled if r.rep == 0 and r.param_value == 200])
    assert summ[0].sd == 0.0


def test_summarize_hand_values():
    from dpspectra.harness import ResultRow

    rows = [
        ResultRow("s", "ours", "n", 1, i, 0, "subspace_fro", v, 0.0)
        for i, v in enumerate([1.0, 3.0])
    ]
    s = summarize(rows)[0]
    assert s.mean == pytest.approx(2.0)
    assert s.sd == pytest.approx(math.sqrt(2.0))


def test_summarize_quartiles_linear_interpolation():
    from dpspectra.harness import ResultRow

    rows = [
        ResultRow("s", "ours", "n", 1, i, 0, "subspace_fro", v, 0.0)
        for i, v in enumerate([1.0, 2.0, 3.0, 4.0])
    ]
    s = summarize(rows)[0]
    assert (s.q1, s.median, s.q3) == (pytest.approx(1.75), pytest.approx(2.5), pytest.approx(3.25))


def test_summarize_permutation_invariant():
    rows = run_experiment(tiny_config(record_timing=False))
    fwd = summarize(rows)
    rev = summarize(rows[::-1])
    assert fwd == rev


def test_summarize_excludes_nan():
    from dpspectra.harness import ResultRow

    rows = [
        ResultRow("s", "ours", "n", 1, 0, 0, "subspace_fro", 2.0, 0.0),
        ResultRow("s", "ours", "n", 1, 1, 0, "subspace_fro", math.nan, 0.0),
    ]
    s = summarize(rows)[0]
    assert s.count == 1
    assert s.mean == pytest.approx(2.0)


def test_summarize_empty_error():
    with pytest.raises(ValueError):
        summarize([])


def test_failed_reps_recorded_as_nan():
    # p < 2r makes every replication fail validation inside dp_estimate
    cfg = tiny_config(fixed={"p": 3, "r": 2, "lam": 5.0, "sigma2": 1.0, "eps": 1.0, "delta": 0.1})
    rows = run_experiment(cfg)
    assert len(rows) == 4
    assert all(math.isnan(r.value) for r in rows)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(reps=0)
    with pytest.raises(ValueError):
        tiny_config(grid=())
    with pytest.raises(ValueError):
        tiny_config(methods=("nope",))
    with pytest.raises(ValueError):
        tiny_config(metrics=("banana",))
    with pytest.raises(ValueError):
        tiny_config(methods=("dp_oja",), fixed={"p": 10, "r": 2, "lam": 1.0, "sigma2": 1.0, "eps": 1, "delta": 0.1})
    with pytest.raises(ValueError):
        tiny_config(methods=("dp_oja",), metrics=("cov_fro",))


def test_schatten_metric_accepted():
    cfg = tiny_config(metrics=("subspace_schatten(1.5)", "cov_schatten(inf)"))
    rows = run_experiment(cfg)
    assert len(rows) == 8
    assert all(math.isfinite(r.value) for r in rows)


def test_presets_exist():
    for name in ("S1a", "S1b", "S2a", "S2b", "S3", "S4"):
        for scale in ("small", "paper"):
            cfg = preset_config(name, scale=scale, seed=1)
            assert cfg.setting == name
            assert cfg.grid
    with pytest.raises(ValueError):
        preset_config("S9")
    with pytest.raises(ValueError):
        preset_config("S1a", scale="huge")


def test_theoretical_rate_limits():
    stat_only = theoretical_rate(10.0, 1.0, 50, 1, 10_000, eps=math.inf)
    snr = 0.1
    assert stat_only == pytest.approx((snr + math.sqrt(snr)) * math.sqrt(50 / 10_000), rel=1e-12)
    assert theoretical_rate(10.0, 1.0, 100, 1, 10_000, eps=1.0) > theoretical_rate(
        10.0, 1.0, 50, 1, 10_000, eps=1.0
    )


def test_theoretical_rate_regression_pins():
    assert theoretical_rate(10.0, 1.0, 50, 1, 10_000, eps=1.0, delta=0.1) == pytest.approx(
        0.0413626494639168, rel=1e-12
    )
    assert theoretical_rate(
        10.0, 1.0, 50, 3, 10_000, eps=1.0, delta=0.1, kind="cov"
    ) == pytest.approx(0.549633488924594, rel=1e-12)
    with pytest.raises(ValueError):
        theoretical_rate(10.0, 1.0, 50, 1, 100, kind="banana")


def test_config_file_round_trip(tmp_path):
    doc = {
        "setting": "custom",
        "param_name": "n",
        "grid": [100, 200],
        "fixed": {"p": 8, "r": 1, "lam": 5.0, "sigma2": 1.0, "eps": 1.0, "delta": 0.1},
        "reps": 2,
        "seed": 3,
        "methods": ["ours"],
        "metrics": ["subspace_fro"],
    }
    jpath = tmp_path / "cfg.json"
    jpath.write_text(json.dumps(doc))
    assert load_config_file(jpath)["param_name"] == "n"

    tpath = tmp_path / "cfg.toml"
    tpath.write_text(
        'setting = "custom"\nparam_name = "n"\ngrid = [100, 200]\nreps = 2\nseed = 3\n'
        'methods = ["ours"]\nmetrics = ["subspace_fro"]\n'
        "[fixed]\np = 8\nr = 1\nlam = 5.0\nsigma2 = 1.0\neps = 1.0\ndelta = 0.1\n"
    )
    loaded = load_config_file(tpath)
    assert loaded["grid"] == [100, 200]
    assert loaded["fixed"]["p"] == 8


def test_write_summaries(tmp_path):
    rows = run_experiment(tiny_config(record_timing=False))
    out = tmp_path / "s.csv"
    write_summaries(summarize(rows), out)
    header = out.read_text().splitlines()[0]
    assert header == "setting,method,param_name,param_value,metric,count,mean,sd,se,q1,median,q3"
