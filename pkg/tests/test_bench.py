import numpy as np
import pytest

from gapls.bench import (
    CSV_COLUMNS,
    THREADS_ENV,
    ExperimentSpec,
    RunRecord,
    emit_csv,
    generate_instance,
    has_nonnegative_ray,
    read_csv,
    run_one,
    run_sweep,
)

SMALL = ExperimentSpec(m=10, n=20, seed=2, alpha_grid=(1.5, 1.95, 2.0), max_iter=5000)


def test_same_seed_same_instance():
    a, b = generate_instance(ExperimentSpec(seed=11)), generate_instance(ExperimentSpec(seed=11))
    assert a.Q.tobytes() == b.Q.tobytes() and a.x0.tobytes() == b.x0.tobytes()
    c = generate_instance(ExperimentSpec(seed=12))
    assert not np.array_equal(a.Q, c.Q)


def test_gaussian_moments():
    Q = generate_instance(ExperimentSpec(seed=0, bounded=False)).Q
    assert Q.shape == (50, 100)
    N = Q.size
    # five standard errors for the mean and for the variance of N normals
    assert abs(Q.mean()) <= 5 / np.sqrt(N)
    assert abs(Q.var(ddof=1) - 1) <= 5 * np.sqrt(2 / (N - 1))


def test_p_satisfies_criterion():
    inst = generate_instance(ExperimentSpec(seed=4))
    np.testing.assert_array_equal(inst.p, np.full(100, 1e-7))
    assert inst.criterion()(inst.p)
    assert not inst.criterion()(-inst.p)


def test_ray_detection():
    assert has_nonnegative_ray(np.array([[1.0, -1.0]]))
    assert not has_nonnegative_ray(np.array([[1.0, 1.0]]))


def test_bounded_instances_have_no_ray():
    for seed in range(3):
        inst = generate_instance(ExperimentSpec(m=10, n=20, seed=seed))
        assert not has_nonnegative_ray(inst.Q)


def test_outer_alpha_rule_in_runs():
    recs = run_sweep(SMALL, threads=1)
    assert [r.alpha1 for r in recs] == [1.5, 1.95, 2.0]
    assert recs[0].alpha == pytest.approx(0.85 / (6 / 7))
    assert recs[2].alpha == 0.85


def test_counters_consistent():
    for mode in ("nominal", "basic_ls", "projected_ls"):
        for r in run_sweep(ExperimentSpec(m=10, n=20, seed=2, alpha_grid=(1.0, 2.0), mode=mode, max_iter=3000)):
            assert r.ls_accepted <= r.ls_triggered <= r.iterations <= 3000
            if mode == "nominal":
                assert r.ls_triggered == 0 and r.candidates_total == 0


def test_unconverged_run_is_recorded():
    spec = ExperimentSpec(m=10, n=20, seed=2, alpha_grid=(2.0,), max_iter=10)
    (rec,) = run_sweep(spec)
    assert not rec.converged and rec.iterations == 10


def test_sweep_deterministic_across_threads(monkeypatch):
    one = [r.row()[:-1] for r in run_sweep(SMALL, threads=1)]
    monkeypatch.setenv(THREADS_ENV, "3")
    many = [r.row()[:-1] for r in run_sweep(SMALL)]
    assert one == many


def test_csv_single_record(tmp_path):
    rec = RunRecord(1.0, 1.275, "nominal", 10, True, 0, 0, 0, 1e-11, 0.5)
    path = tmp_path / "r.csv"
    emit_csv([rec], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0] == "alpha1,alpha,mode,iterations,converged,ls_triggered,ls_accepted,candidates_total,final_residual,wall_time_s"


def test_csv_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "r.csv")


def test_csv_round_trip_and_order(tmp_path):
    spec = ExperimentSpec(m=10, n=20, seed=2, alpha_grid=(1.95, 1.0), max_iter=3000)
    recs = run_sweep(spec) + run_sweep(ExperimentSpec(**{**spec.__dict__, "mode": "projected_ls"}))
    path = tmp_path / "r.csv"
    emit_csv(recs[::-1], path)
    back = read_csv(path)
    assert [(r.alpha1, r.mode) for r in back] == [
        (1.0, "nominal"),
        (1.0, "projected_ls"),
        (1.95, "nominal"),
        (1.95, "projected_ls"),
    ]
    key = lambda r: (r.alpha1, r.mode)
    for a, b in zip(sorted(recs, key=key), back):
        assert a.row()[:-1] == b.row()[:-1]
        assert b.wall_time == pytest.approx(a.wall_time, abs=1e-6)


def test_run_one_returns_solution():
    rec, res = run_one(SMALL, 1.95, mode="projected")
    assert rec.mode == "projected_ls" and rec.converged == res.converged
    assert rec.final_residual == res.final_residual


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(mode="newton")
    with pytest.raises(ValueError):
        ExperimentSpec(tol=0.0)


@pytest.mark.parametrize("mode, a", [("basic_ls", 1.0), ("projected_ls", 1.0), ("projected_ls", 1.95), ("projected_ls", 2.0)])
def test_candidate_economy(mode, a):
    spec = ExperimentSpec(seed=0)
    rec, res = run_one(spec, a, mode=mode)
    assert rec.ls_triggered > 0
    assert 3 <= rec.candidates_total / rec.ls_triggered <= 18
    assert res.stats.candidates_max <= 18
