"""Quick end-to-end check of the ofdmarl Python module.

Build and install the extension first:

    pip install --no-build-isolation -e crates/py
"""

import sys
import tempfile

import ofdmarl


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return bool(cond)


def main():
    results = []
    cell = ofdmarl.CellConfig("smoke")
    results.append(check(cell.num_ues == 8 and cell.num_prbs == 6, "smoke cell shape"))

    env = ofdmarl.Env(cell, 3)
    rrit = ofdmarl.Scheduler("rrit", cell)
    rewards = []
    for _ in range(60 * cell.num_prbs):
        _, reward = env.allocate(rrit.select(env))
        if reward is not None:
            rewards.append(reward)
    results.append(check(env.tti == 60 and len(rewards) == 60, "one reward per TTI"))
    results.append(check(all(r <= 0 for r in rewards), "rewards are non-positive"))
    obs = env.observe()
    results.append(check(len(obs["ues"]) == 8 and obs["prb_cursor"] == 0, "observation layout"))

    a = ofdmarl.evaluate("knapsack", cell, [1, 2, 3], 600)
    b = ofdmarl.evaluate("knapsack", cell, [1, 2, 3], 600, jobs=2)
    results.append(check(a == b, "evaluation is deterministic across thread counts"))

    value, chosen = ofdmarl.solve_knapsack([3, 4, 5], [4.0, 5.0, 6.0], 8)
    results.append(check(value == 10.0 and chosen == [True, False, True], "knapsack solver"))
    results.append(check(ofdmarl.apply_age_cap(250, 100) == 101, "age cap"))
    results.append(check(abs(ofdmarl.micki_mu(1.0, 0.95, 2) - 0.9025) < 1e-15, "MICKI decay"))

    config = ofdmarl.RunConfig("smoke", variant="rps")
    config.episodes = 2
    config.episode_steps = 120
    config.eval_every = 1
    config.eval_seeds = 2
    with tempfile.TemporaryDirectory() as out:
        run = ofdmarl.train(config, 5, out_dir=out)
        results.append(check(run["steps"] == 240 and len(run["evals"]) == 2, "training curve"))
        ckpt = str(run["evals"][-1]["checkpoint"])
        dqn = ofdmarl.evaluate("dqn:" + ckpt, cell, [1, 2], 300)
        again = ofdmarl.evaluate("dqn:" + ckpt, cell, [1, 2], 300)
        results.append(check(dqn == again, "checkpoint evaluation is repeatable"))

    try:
        ofdmarl.Scheduler("nope", cell)
        results.append(check(False, "unknown agent rejected"))
    except ValueError:
        results.append(check(True, "unknown agent rejected"))

    name, passed, detail = ofdmarl.gradient_check(5)
    results.append(check(passed, "gradient check: " + detail))
    name, passed, _ = ofdmarl.gradient_check(5, fault=True)
    results.append(check(not passed, "gradient fault is detected"))

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
