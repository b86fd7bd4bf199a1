"""Exercise the creep_uq extension end to end on synthetic data."""

import math
import sys
import tempfile
from pathlib import Path

import creep_uq


def main() -> int:
    truth = creep_uq.CreepModel("LM", [22205.0, -12.0], 23.0)
    print(truth)
    assert math.isclose(truth.log10_rupture_time(100.0, 873.0), (22205 - 1200) / 873 - 23)

    conditions = [(s, t) for s in (60.0, 90.0, 120.0, 150.0, 180.0) for t in (773.0, 823.0, 873.0, 923.0)]
    data = creep_uq.Dataset.synthesize(truth, conditions, noise_sd=0.05, seed=11)
    assert len(data) == 20

    assert creep_uq.winsorize([0.0, 1.0, 2.0, 3.0, 100.0], 0.0, 1.0)[-1] == 100.0

    model, objective = creep_uq.fit_model(data, "LM", cv_iterations=20, seed=1)
    print("fitted", model, "cv rmse", objective)
    assert abs(model.constant - 23.0) < 2.0

    gauss = creep_uq.GaussianModel.from_fit(data, model)
    print("parameters", gauss.names, "sigma_e^2", gauss.error_variance)
    assert len(gauss.covariance) == len(gauss.names)

    sobol = creep_uq.sobol_indices(gauss, 100.0, 873.0, n_mc=2000, n_pce=400, degree=4, seed=3)
    print("sobol MC", sobol["mc"]["total"], "PCE", sobol["pce"]["total"])

    dist = creep_uq.propagate(gauss, 100.0, 873.0, n=5000, seed=5)
    lo, hi = dist["ci95"]
    print("mean t_r", dist["mean"], "ci95", lo, hi)
    assert lo < dist["median"] < hi
    assert sum(dist["hist_counts"]) == 5000 - dist["n_overflow"]

    var = gauss.error_variance
    lm = creep_uq.score(data, model, var, len(gauss.names))
    print("score", lm)
    n = lm["n_params"]
    assert math.isclose(lm["bic"] - lm["aic"], n * (math.log(len(data)) - 2.0), rel_tol=1e-9)

    try:
        creep_uq.CreepModel("nope", [1.0], 1.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("unknown kind accepted")

    root = Path(__file__).resolve().parents[3]
    config = root / "configs" / "oracle_lm.toml"
    if config.exists():
        with tempfile.TemporaryDirectory() as out:
            selected = creep_uq.run_pipeline(config, out=out, seed=7)
            print("pipeline selected", selected)
            assert (Path(out) / "summary.txt").exists()

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
