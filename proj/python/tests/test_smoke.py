"""Smoke tests for the python module (run via ctest with PYTHONPATH set)."""

import ctrlforge as cf


def test_templates():
    names = cf.template_names()
    assert "SMC" in names and "AdaptiveSMC" in names
    smc, smc_space = cf.make_template("SMC")
    assert cf.param_dimension(smc) == 3
    assert smc_space.dimension() == 3
    adaptive, adaptive_space = cf.make_template("AdaptiveSMC")
    assert cf.param_dimension(adaptive) == 5
    assert cf.validate(adaptive) == []
    assert cf.deserialize(cf.serialize(adaptive)) == adaptive


def test_simulate_steady_state():
    plant = cf.PlantParams()
    scenario = cf.Scenario.nominal(plant, 1.0)
    structure, _ = cf.make_template("ConstDuty")
    traj = cf.simulate(structure, [0.5], scenario)
    assert len(traj) == 20000
    assert abs(traj.v_c[-1] - 100.0) < 0.5
    metrics = cf.compute_metrics(traj, scenario)
    assert metrics.sse_volts < 0.5
    assert cf.performance_index(metrics) >= 0.0
    csv = cf.trajectory_csv(traj)
    assert csv.startswith("t,v_c,i_l,duty,r_load,v_ref\n")


def test_pso_sphere():
    space = cf.ParamSpace.from_bounds([(-5.0, 5.0), (-5.0, 5.0)])
    cfg = cf.PsoConfig()
    cfg.seed = 42
    cfg.max_iters = 60
    result = cf.pso_optimize(lambda x: x[0] ** 2 + x[1] ** 2, space, cfg)
    assert result.best_fitness < 1e-3
    assert result.history == sorted(result.history, reverse=True)


def test_session_trimmed():
    problem = cf.DesignProblem()
    problem.scenario = cf.Scenario.nominal(problem.plant, 0.1)
    problem.pso.swarm_size = 8
    problem.pso.max_iters = 8
    problem.pso.workers = 1
    problem.session.k_max = 1
    problem.session.seed = 2
    problem.initial_template = "ConstDuty"
    session = cf.run_session(problem)
    assert session.iterations <= 2
    assert session.best_j >= 0.0
    assert '"schema_version": 1' in cf.session_json(session)


if __name__ == "__main__":
    test_templates()
    test_simulate_steady_state()
    test_pso_sphere()
    test_session_trimmed()
    print("python smoke tests passed")
