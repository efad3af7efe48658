import json
import math

import numpy as np
import pytest

from kickedharper import harness as H
from kickedharper.model import exact_gate_count
from kickedharper.slices import SliceConfig, slice_step_sequence


def small(**kw):
    base = dict(method="slice", K=1.0, L=5.0, n_r=5, n_s=4, t=6, every=2, out_dir="unused")
    base.update(kw)
    return H.ExperimentConfig(**base)


@pytest.mark.parametrize("field,value", [
    ("method", "magic"), ("n_r", 1), ("K", -1.0), ("K", math.inf), ("geometry", "sphere"),
    ("hbar", 1.5), ("hbar", 1e-6), ("n_s", 0), ("samples", 3), ("threshold", -1.0),
    ("eps", (-1e-3,)), ("realizations", 0), ("every", 0), ("observables", ("ipr", "entropy")),
    ("initial", "random"), ("format", "xml"), ("fit_window", 1), ("n0", 99)])
def test_invalid_config_names_the_field(field, value):
    with pytest.raises(H.ConfigError) as exc:
        small(**{field: value})
    assert exc.value.field == field
    assert str(exc.value).startswith(field + ":")


def test_exact_method_rejects_noise_and_torus_needs_room():
    with pytest.raises(H.ConfigError, match="eps"):
        small(method="exact", eps=(1e-4,))
    with pytest.raises(H.ConfigError, match="cells"):
        small(geometry="torus", n_r=6, cells=8)
    assert small(geometry="torus", n_r=7, cells=8).params().N_H == 128


def test_ini_round_trip(tmp_path):
    cfg = small(eps=(0.0, 1e-4), realizations=3, observables=("ipr", "fidelity"), symmetrized=True)
    text = H.dump_config(cfg)
    assert H.load_config(text) == cfg
    path = tmp_path / "run.ini"
    path.write_text(text)
    assert H.load_config(str(path), t=9).t == 9
    with pytest.raises(H.ConfigError, match="bogus"):
        H.load_config("[model]\nbogus = 1\n")
    with pytest.raises(H.ConfigError):
        H.load_config("[nonsense]\nK = 1\n")


def test_stepper_gate_counts():
    cfg = small()
    assert H.Stepper(cfg).n_g == slice_step_sequence(cfg.params(), SliceConfig(4)).n_g
    assert H.Stepper(small(method="exact")).n_g == exact_gate_count(5, 5)
    assert H.Stepper(cfg).n_q == 6
    assert H.Stepper(small(method="chebyshev")).n_q == 5


def test_records_carry_provenance_and_are_deterministic():
    cfg = small(eps=(0.0, 1e-3), realizations=2, observables=("ipr", "moment", "fidelity"))
    a = H.run_experiment(cfg)
    b = H.run_experiment(cfg, threads=2)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    assert [(r.eps, r.realization) for r in a] == [(0.0, 0), (1e-3, 0), (1e-3, 1)]
    assert a[0].times == [0, 2, 4, 6]
    assert a[0].series("ipr")[0] == pytest.approx(1.0)
    assert a[0].values["fidelity"] == [1.0] * 4
    assert a[1].values["fidelity"][-1] < 1.0
    assert a[1].values["ipr"] != a[2].values["ipr"]
    row = next(a[1].rows())
    assert {"seed", "realization", "eps", "t", "n_g"} <= set(row)
    json.loads(a[1].to_json())


def test_saturation_window():
    rec = H.RunRecord({}, 0.0, 0, 0, 1, times=[0, 2, 4, 6, 8, 10],
                      values={"ipr": [1, 2, 3, 4, 5, 7]})
    assert rec.saturation() == pytest.approx(6.0)
    assert rec.saturation(fraction=0.0) == pytest.approx(22 / 6)
    m, err, n = H.saturation_ipr([rec, rec], 0.0)
    assert (m, err, n) == (6.0, 0.0, 2)
    with pytest.raises(ValueError):
        H.saturation_ipr([rec], 1.0)
    assert H.record_times(7, 3) == [0, 3, 6, 7]


def test_first_crossing():
    assert H.first_crossing([0, 1, 2], [0, 1, 4], 2.5) == pytest.approx(1.5)
    assert H.first_crossing([1e-4, 1e-3], [1, 100], 10, log_x=True) == pytest.approx(10 ** -3.5)
    with pytest.raises(H.ScanError, match="already"):
        H.first_crossing([0, 1], [5, 6], 2)
    with pytest.raises(H.ScanError, match="not reached"):
        H.first_crossing([0, 1], [0, 1], 2)
    s, c = H.loglog_slope([1, 10, 100], [2, 20, 200])
    assert (s, c) == (pytest.approx(1.0), pytest.approx(math.log10(2)))


def test_fits():
    n_q = np.array([7, 8, 9, 7, 8, 9])
    eps = np.array([1e-5, 1e-5, 1e-5, 1e-4, 1e-4, 1e-4])
    t_h = 0.01 / (eps ** 1.1 * n_q ** 1.3)
    C, a, b = H.fit_husimi_law(n_q, eps, t_h)
    assert (C, a, b) == (pytest.approx(0.01), pytest.approx(1.1), pytest.approx(1.3))
    with pytest.raises(H.ScanError):
        H.fit_husimi_law([7, 8], [1e-5, 1e-5], [1.0, np.nan])
    t = np.arange(1, 20)
    assert H.fit_diffusion(t, 3 * t) == pytest.approx(3)
    assert H.fit_diffusion(t, 2 * t ** 2, ballistic=True) == pytest.approx(2)


def test_sweep_order_invariance():
    K, L = [0.5, 2.0], [1.0, 3.0]
    a = H.sweep_kl(K, L, 5)
    b = H.sweep_kl(K[::-1], L[::-1], 5, threads=2)
    assert np.allclose(a, b[::-1, ::-1])
    assert a[0, 0] < a[1, 1]
    with pytest.raises(ValueError):
        H.sweep_kl(K, L, 10)


def test_transition_and_scan_report_unbracketed_cases():
    cfg = small(n_r=5, t=5, observables=("ipr",))
    res = H.transition_point(cfg, [0.0, 0.1], 0.0)
    assert math.isnan(res.K_c) and res.note
    pts = H.epsilon_c_scan(small(n_r=5, t=4, observables=("ipr",)), [5], [1e-9, 2e-9], "localized")
    assert math.isnan(pts[0].eps_c) and pts[0].note


def test_spectrum_run_is_small_for_converged_slices():
    res = H.spectrum_run(small(n_r=4, n_s=200, symmetrized=True, K=0.5, L=0.5))
    assert res[0].delta_E < 1e-3


def test_outputs(tmp_path):
    grid = np.arange(12.0).reshape(3, 4)
    path = H.write_ppm(tmp_path / "x.ppm", grid, gamma=1.0)
    img = H.read_ppm(path)
    assert img.shape == (3, 4, 3)
    assert img[2, 3, 0] == 255 and img[0, 0, 0] == 0
    assert np.array_equal(img, H.to_rgb(grid, 1.0))
    p = H.write_csv(tmp_path / "a" / "t.csv", ["x", "y"], [{"x": 0.1, "y": 2}, (0.30000000000000004, 3)])
    assert p.read_text().splitlines() == ["x,y", "0.1,2", "0.30000000000000004,3"]
    man = H.Manifest(tmp_path, "evolve", {"K": 1})
    man.add(p, "csv", "table")
    body = json.loads(man.write().read_text())
    assert body["artifacts"][0]["path"] == "a/t.csv"
    recs = H.run_experiment(small(t=2, every=1))
    out = H.write_records(recs, tmp_path, "ndjson")
    assert len(out.read_text().splitlines()) == 1
    out = H.write_records(recs, tmp_path, "csv")
    assert out.read_text().splitlines()[0] == "seed,realization,eps,t,n_g,ipr,moment"
