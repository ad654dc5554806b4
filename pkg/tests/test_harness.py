import math

import numpy as np
import pytest

from secure_ia.channel import SystemConfig, draw_channels, trial_seed
from secure_ia.harness import (AGGREGATE_HEADER, RAW_HEADER, ExperimentSpec,
                               ScalingMismatch, SweepResult, read_csv,
                               run_convergence, run_ne_sweep, run_snr_sweep,
                               scaling_check, write_aggregates, write_csv,
                               write_gnuplot_script, write_improvements)
from secure_ia.ia import IAOptions, run_scheme

SMALL = SystemConfig(K=3, M=4, N=4, Ne=2, d=1)


def spec(**kw):
    base = dict(config=SMALL, schemes=("conventional",), snr_points=(10.0,),
                trials=1, master_seed=3)
    base.update(kw)
    return ExperimentSpec(**base)


def test_single_cell_single_row():
    res = run_snr_sweep(spec())
    assert len(res.rows) == 1
    row = res.rows[0]
    assert row.seed == trial_seed(3, 0)
    assert row.wslm_feasible and row.zfws_feasible


def test_row_count_is_grid_product():
    res = run_snr_sweep(spec(trials=2, snr_points=(0.0, 20.0)))
    assert len(res.rows) == 4
    assert [len(res.ssr("conventional", s)) for s in (0.0, 20.0)] == [2, 2]


def test_schemes_share_the_channel_draw(monkeypatch):
    import secure_ia.harness as harness
    seen = []
    real = harness.run_scheme

    def spy(scheme, channels, config, opts):
        seen.append((scheme, channels))
        return real(scheme, channels, config, opts)

    monkeypatch.setattr(harness, "run_scheme", spy)
    run_snr_sweep(spec(schemes=("conventional", "wslm", "zfws")))
    assert [s for s, _ in seen] == ["conventional", "wslm", "zfws"]
    assert seen[0][1] == seen[1][1] == seen[2][1]


def test_ssr_grows_with_snr():
    res = run_snr_sweep(spec(schemes=("zfws",), trials=3,
                             snr_points=(0.0, 20.0, 40.0)))
    means = [res.ssr("zfws", s).mean() for s in (0.0, 20.0, 40.0)]
    assert means[0] < means[1] < means[2]


def test_rescaling_matches_direct_run():
    cfg = SMALL.with_power(100.0)
    res = run_snr_sweep(spec(schemes=("wslm",), snr_points=(20.0,)))
    seed = trial_seed(3, 0)
    ch = draw_channels(cfg, seed)
    sol, _ = run_scheme("wslm", ch, cfg,
                        IAOptions(init_seed=seed).scaled(100.0))
    from secure_ia.metrics import secrecy_report
    assert res.rows[0].ssr == pytest.approx(
        secrecy_report(ch, sol, cfg).ssr, rel=1e-6)


def test_validate_scaling_records_angle():
    res = run_snr_sweep(spec(schemes=("conventional", "wslm"),
                             snr_points=(0.0, 30.0), trials=2,
                             validate_scaling=True))
    assert 0.0 <= res.max_scaling_angle <= 1e-8


def test_scaling_mismatch_raises(monkeypatch):
    import secure_ia.harness as harness
    monkeypatch.setattr(harness, "precoder_angle", lambda a, b: 0.1)
    with pytest.raises(ScalingMismatch):
        run_snr_sweep(spec(validate_scaling=True))


def test_aggregates_recompute():
    res = run_snr_sweep(spec(schemes=("conventional", "zfws"), trials=4,
                             snr_points=(10.0, 30.0)))
    aggs = res.aggregates()
    assert len(aggs) == 4
    for a in aggs:
        vals = [r.ssr for r in res.rows if r.scheme == a["scheme"]
                and r.snr_db == a["snr_db"]]
        assert a["n"] == 4
        assert a["mean_ssr"] == pytest.approx(sum(vals) / 4, abs=1e-12)
        m = sum(vals) / 4
        sd = math.sqrt(sum((v - m) ** 2 for v in vals) / 3)
        assert a["std_ssr"] == pytest.approx(sd, abs=1e-12)


def test_single_trial_std_is_nan():
    assert math.isnan(run_snr_sweep(spec()).aggregates()[0]["std_ssr"])


def test_dimension_error_cells_are_skipped():
    cfg = SystemConfig(K=2, M=3, N=3, Ne=1, d=2)
    res = run_snr_sweep(spec(config=cfg, schemes=("conventional", "wslm")))
    assert {r.scheme for r in res.rows} == {"conventional"}


def test_ne_sweep_improvements():
    res = run_ne_sweep(spec(config=SystemConfig(K=3, M=5, N=5, Ne=2, d=1),
                            schemes=("wslm", "zfws"), ne_points=(2, 5),
                            trials=3, snr_points=(20.0,)))
    imp = {(i["scheme"], i["ne"]): i for i in res.improvements}
    assert imp[("conventional", 2)]["mean_improvement"] == 0.0
    assert imp[("conventional", 5)]["mean_improvement"] == 0.0
    assert imp[("zfws", 2)]["zfws_feasible"]
    assert not imp[("zfws", 5)]["zfws_feasible"]
    for (scheme, ne), i in imp.items():
        a = res.ssr(scheme, 20.0, ne)
        b = res.ssr("conventional", 20.0, ne)
        assert i["mean_improvement"] == pytest.approx(np.mean(a - b),
                                                      abs=1e-12)
        assert i["n"] == 3


def test_ne_sweep_requires_points():
    with pytest.raises(ValueError):
        run_ne_sweep(spec())


@pytest.mark.parametrize("kw", [dict(trials=0), dict(snr_points=()),
                                dict(schemes=("bogus",)),
                                dict(ne_points=())])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        spec(**kw)


# --- persistence -----------------------------------------------------------
def test_csv_roundtrip(tmp_path):
    res = run_snr_sweep(spec(schemes=("conventional", "wslm"), trials=2,
                             snr_points=(0.0, 25.0)))
    path = tmp_path / "raw.csv"
    write_csv(res, path)
    assert path.read_text().splitlines()[0] == ",".join(RAW_HEADER)
    back = read_csv(path)
    assert back.rows == res.rows
    assert back.aggregates() == res.aggregates()


def test_empty_result_writes_header_only(tmp_path):
    path = tmp_path / "raw.csv"
    write_csv(SweepResult(), path)
    assert path.read_text() == ",".join(RAW_HEADER) + "\n"
    write_aggregates(SweepResult(), tmp_path / "agg.csv")
    assert (tmp_path / "agg.csv").read_text() == \
        ",".join(AGGREGATE_HEADER) + "\n"
    assert len(read_csv(path).rows) == 0


def test_read_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_write_to_missing_directory(tmp_path):
    with pytest.raises(OSError):
        write_csv(SweepResult(), tmp_path / "nope" / "raw.csv")


def test_byte_identical_outputs(tmp_path):
    s = spec(schemes=("conventional", "wslm", "zfws"), trials=3,
             snr_points=(0.0, 30.0))
    for name in ("a", "b"):
        res = run_snr_sweep(s)
        write_csv(res, tmp_path / f"{name}.csv")
        write_aggregates(res, tmp_path / f"{name}_agg.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_agg.csv").read_bytes() == \
        (tmp_path / "b_agg.csv").read_bytes()


def test_parallel_matches_serial(tmp_path):
    s = spec(schemes=("conventional", "wslm"), trials=3)
    write_csv(run_snr_sweep(s, jobs=1), tmp_path / "serial.csv")
    write_csv(run_snr_sweep(s, jobs=2), tmp_path / "parallel.csv")
    assert (tmp_path / "serial.csv").read_bytes() == \
        (tmp_path / "parallel.csv").read_bytes()


def test_gnuplot_script(tmp_path):
    write_gnuplot_script(tmp_path / "plot.gp", tmp_path / "aggregate.csv")
    text = (tmp_path / "plot.gp").read_text()
    assert "'aggregate.csv'" in text and "title 'zfws'" in text
    write_improvements(SweepResult(improvements=[]), tmp_path / "imp.csv")
    write_gnuplot_script(tmp_path / "ne.gp", tmp_path / "aggregate.csv",
                         mode="ne", improvement_csv=tmp_path / "imp.csv")
    text = (tmp_path / "ne.gp").read_text()
    assert "'imp.csv'" in text and "title 'conventional'" not in text


# --- single runs -----------------------------------------------------------
def test_run_convergence_trace():
    trace = run_convergence(SystemConfig(K=3, M=6, N=6, Ne=4, d=2), "zfws",
                            seed=1)
    assert trace.final <= 1e-10
    assert trace.iterations <= 5


def test_scaling_check_small_angle():
    cfg = SystemConfig(K=3, M=5, N=5, Ne=3, d=2)
    assert scaling_check(cfg, "conventional", IAOptions(init_seed=1), 1) \
        <= 1e-8
