"""Quick end-to-end check of the Python bindings."""

import math

import kinematics as k

QUADRANTS = ["R1", "R2", "B1", "B2"]


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def main():
    prior = k.Distribution.uniform(QUADRANTS)

    cond = k.condition(prior, ["R1", "B1", "B2"])
    assert close(cond.event_prob(["B1", "B2"]), 2 / 3)

    jeff = k.jeffrey_update(prior, [["R1"], ["R2"], ["B1", "B2"]], [0.375, 0.125, 0.5])
    assert all(close(x, t) for x, t in zip(jeff.probs, [0.375, 0.125, 0.25, 0.25]))
    assert k.kl_divergence(jeff, prior) > 0

    sol = k.ce_update(prior, conditional=[(["R1"], ["R1", "R2"], 0.75)])
    blue = sol.posterior.event_prob(["B1", "B2"])
    assert close(blue, k.jb_ce_blue(0.75), 1e-10)
    assert close(sol.posterior.prob("R1") / sol.posterior.prob("R2"), 3.0, 1e-8)

    band = k.MessageBand(0.75, 0.05)
    assert k.expected_blue_given_message(band) == 0.5
    assert k.exact_posterior_quadrants(band).probs == [0.375, 0.125, 0.25, 0.25]
    assert close(k.joint_cdf(0.3, 0.6), k.cdf_cond_red(0.3) * k.cdf_blue(0.6), 1e-15)
    assert close(k.density_blue(0.5), 1.5)

    mc = k.mc_posterior_quadrants(band, samples=200_000, seed=7)
    assert abs(mc["Blue"]["mean"] - 0.5) < 4 * mc["Blue"]["stderr"]
    dmc = k.mc_posterior_quadrants(band, prior="dirichlet", alpha=[2, 1, 1, 1], samples=200_000)
    assert abs(dmc["Blue"]["mean"] - 0.4) < 4 * dmc["Blue"]["stderr"]

    xs = [(i + 0.5) / 1000 for i in range(1000)]
    assert k.ks_statistic(xs, lambda x: x) < 1e-3
    assert k.ks_statistic(xs, "cond_red") < 1e-3
    assert k.independence_check(samples=200_000) < 0.01

    rows = k.sweep("0:0.25:1", 0.01)
    assert [r["hierarchical_blue"] for r in rows] == [0.5] * 5
    assert rows[1]["base_condition_blue"] is None
    table = k.contrast(0.01)
    assert math.isclose(table["rows"][0]["blue"], 2 / 3)

    try:
        k.condition(prior, [])
    except ValueError as e:
        assert "zero" in str(e).lower() or "probability" in str(e).lower(), e
    else:
        raise AssertionError("conditioning on an empty event must fail")

    print("ok:", sol.posterior, band)


if __name__ == "__main__":
    main()
