import math

import pytest

import neyman


def test_allocation_math():
    assert neyman.clairvoyant_allocation(2.0, 1.0, 90) == pytest.approx((60.0, 30.0))
    assert neyman.exhaustive_best_allocation(2.0, 1.0, 90) == (60, 30)
    assert neyman.competitive_ratio(45, 45, 2.0, 1.0, 90) == pytest.approx(neyman.half_half_ratio(2.0))
    assert neyman.half_half_ratio(1.0) == pytest.approx(1.0)


def test_bounds():
    assert neyman.thm4_bound(480) == pytest.approx(1 + 1 / 230400)
    r = neyman.thm2_bound(10**6, 0.1, 3, 3)
    assert r["ratio_bound"] == pytest.approx(1 + 10**-2.4)
    assert r["vacuous"]
    inst = neyman.lower_bound_instance(9)
    assert inst["eps"] == pytest.approx(1 / 9)
    assert neyman.cor_bound(1, 2, 2 * 10**6)["ratio_bound"] == pytest.approx(1 + 5 * math.sqrt(math.log(2e6) / 2e6))


def test_schedules():
    betas = neyman.thm3_betas(3)
    assert betas[0] == pytest.approx(6 * 15 ** (-1 / 3))
    assert betas[-1] == 1.0
    assert not neyman.check_design({"M": 3, "T": 8})["ok"]


def test_experiment_runs_to_completion():
    exp = neyman.Experiment({"M": 2, "T": 16, "beta": 1})
    assert exp.pending["t1"] == 2 and exp.pending["t0"] == 2
    nxt = exp.submit([1, 3], [0, 2])
    assert (nxt["t1"], nxt["t0"]) == (6, 6)
    assert exp.submit([2, 4, 1, 3, 2, 4], [1, 0, 2, 0, 1, 2]) is None
    assert exp.complete
    res = exp.result()
    assert res["tau_hat"] == pytest.approx(1.5)
    assert res["t1"] + res["t0"] == 16


def test_errors_carry_codes():
    exp = neyman.Experiment({"M": 2, "T": 16, "beta": 1})
    with pytest.raises(neyman.NeymanError) as e:
        exp.submit([1], [2, 3])
    assert neyman.error_code(e.value) == "CountMismatch"
    assert exp.pending["stage"] == 1
    with pytest.raises(neyman.NeymanError) as e:
        neyman.Experiment({"M": 3, "T": 8})
    assert neyman.error_code(e.value) == "InfeasibleConfig"


def test_simulation_is_deterministic():
    design = {"M": 3, "T": 1000, "schedule": "thm3"}
    a = neyman.simulate(design, "gaussian:rho=2", 200, seed=3)
    b = neyman.simulate(design, {"kind": "gaussian", "rho": 2}, 200, seed=3, workers=1)
    assert a["n_trajectories"] == 200
    assert a["mean_ratio"] == b["mean_ratio"]
    assert a["mean_ratio"] >= 1.0
    s = neyman.compare([{"M": 1, "T": 1000}, design], "gaussian:rho=4", 200, seed=3)
    assert len(s) == 2 and s[1]["mean_ratio"] < s[0]["mean_ratio"]


def test_data_and_lemmas(tmp_path):
    d = neyman.synthetic_table1()
    assert len(d["treated"]) == 40
    csv = tmp_path / "ab.csv"
    csv.write_text("arm,impressions,clicks\ntreated,1000,5\ncontrol,2000,4\n")
    assert neyman.ingest_csv(csv) == {"treated": [5000.0], "control": [2000.0]}
    assert len(neyman.lemma_ids()) == 16
    assert neyman.lemma_check("G", points=200)["status"] == "pass"
