"""End-to-end acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with the
measured quantity, its limit and the wall time. Runtime limits are part of
the criterion.
"""
import time

import numpy as np
import pytest

from ebm import crbm as crbm_mod
from ebm.cli import main
from ebm.dbn import DbnSpec, Mlp, finetune, mse_gradients, mse_loss, pretrain, random_autoencoder, unroll_autoencoder
from ebm.exact import (
    binary_configs, boltzmann_quantities, config_index, exact_cond_hidden, exact_loglik, exact_loglik_grad,
    joint_table,
)
from ebm.gibbs import gibbs_chain, gibbs_sweep_rbm
from ebm.hopfield import HopfieldNet, hopfield_energy, is_fixed_point, recall, update_unit
from ebm.io import write_csv
from ebm.model import CrbmParams, Dataset, RbmParams, TrainConfig, init_params, rng_stream
from ebm.trainer import cd_gradients, negative_stats, positive_stats, train_rbm
from ebm.units import cond_mean_hidden, cond_mean_visible

from conftest import random_rbm, tv_distance, two_cluster


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, seconds, limit):
        ok = bool(ok) and (limit is None or seconds < limit)
        budget = "" if limit is None else f" (limit {limit:g} s)"
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'} {title}: {detail}; {seconds:.2f} s{budget}")
        return ok

    return emit


def test_01_conditional_factorization(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 10))
        p = int(rng.integers(1, 11 - d))
        params = random_rbm(rng, d, p, scale=2.0)
        table = joint_table(params)
        V, H = binary_configs(d), binary_configs(p)
        q = cond_mean_hidden(params, V)
        fact_h = np.prod(np.where(H[None] == 1, q[:, None], 1 - q[:, None]), axis=2)
        worst = max(worst, np.abs(fact_h - table / table.sum(axis=1, keepdims=True)).max())
        r = cond_mean_visible(params, H)
        fact_v = np.prod(np.where(V[None] == 1, r[:, None], 1 - r[:, None]), axis=2)
        worst = max(worst, np.abs(fact_v - (table / table.sum(axis=0, keepdims=True)).T).max())
        v = V[rng.integers(len(V))]
        worst = max(worst, np.abs(exact_cond_hidden(params, v) - fact_h[config_index(v)[0]]).max())
    seconds = time.perf_counter() - t0
    assert report(1, "conditional factorization", worst <= 1e-10,
                  f"max |error| {worst:.2e} (limit 1e-10) over 100 models", seconds, 10)


def _flat(g):
    return np.concatenate([g.dW.ravel(), g.db, g.dc])


def test_02_exact_gradient(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    eps = 1e-5
    worst = 0.0
    for _ in range(20):
        params = random_rbm(rng, 3, 2)
        data = (rng.random((10, 3)) < 0.5).astype(float)
        n = len(data)
        analytic = _flat(exact_loglik_grad(params, data)) / n
        theta = np.concatenate([params.W.ravel(), params.b, params.c])

        def f(t):
            p = RbmParams(t[:6].reshape(3, 2), t[6:9], t[9:])
            return exact_loglik(p, data) / n

        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = eps
            worst = max(worst, abs((f(theta + e) - f(theta - e)) / (2 * eps) - analytic[i]))
    seconds = time.perf_counter() - t0
    assert report(2, "exact gradient vs finite differences", worst <= 1e-6,
                  f"max |error| {worst:.2e} (limit 1e-6) per entry, 20 models", seconds, 5)


def test_03_cd_approaches_mle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    params = random_rbm(rng, 3, 2)
    data = np.tile(np.repeat(binary_configs(3), [6, 1, 1, 1, 1, 1, 1, 6], axis=0), (100, 1))
    exact = _flat(exact_loglik_grad(params, data)) / len(data)
    pos = positive_stats(params, data)
    ks = [1, 10, 100, 500]
    means = []
    for k in ks:
        cosines = []
        for seed in range(10):
            neg, _ = negative_stats(params, data, k, rng_stream(seed, 2))
            g = _flat(cd_gradients(pos, neg))
            cosines.append(g @ exact / (np.linalg.norm(g) * np.linalg.norm(exact)))
        means.append(float(np.mean(cosines)))
    slope = np.polyfit(np.log10(ks), means, 1)[0]
    seconds = time.perf_counter() - t0
    ok = means[-1] > 0.95 and slope >= 0 and means[-1] >= means[0]
    cos_text = ", ".join(f"k={k}: {c:.4f}" for k, c in zip(ks, means))
    assert report(3, "CD gradient approaches exact gradient", ok,
                  f"mean cosine {cos_text} (need > 0.95 at k=500, trend slope {slope:+.4f} >= 0)", seconds, 60)


def test_04_gibbs_stationarity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    n_chains, n_sweeps, burn_in = 200, 1000, 100
    tvs = []
    for _ in range(5):
        d = int(rng.integers(2, 6))
        p = int(rng.integers(1, 9 - d))
        params = random_rbm(rng, d, p)
        chain_rng = rng_stream(len(tvs), 2)
        v = (chain_rng.random((n_chains, d)) < 0.5).astype(float)
        for _ in range(burn_in):
            _, v = gibbs_sweep_rbm(params, v, chain_rng)
        counts = np.zeros((2 ** d, 2 ** p))
        for _ in range(n_sweeps):
            h, v = gibbs_sweep_rbm(params, v, chain_rng)
            np.add.at(counts, (config_index(v), config_index(h)), 1)
        tvs.append(tv_distance(counts / counts.sum(), joint_table(params)))
    seconds = time.perf_counter() - t0
    assert report(4, "Gibbs stationarity", max(tvs) < 0.05,
                  f"TV {', '.join(f'{t:.4f}' for t in tvs)} (limit 0.05) from {n_chains * n_sweeps} sweeps each",
                  seconds, 60)


def test_05_training_improves_loglik(report):
    t0 = time.perf_counter()
    data = Dataset(np.array([[1, 0, 1], [0, 1, 0]] * 10, dtype=float), "binary")
    gains = []
    for seed in range(5):
        cfg = TrainConfig(learning_rate=0.1, batch_size=10, cd_steps=1, max_epochs=500, seed=seed)
        params, _ = train_rbm(cfg, data, 2)
        init = init_params(3, 2, init_scale=cfg.init_scale, rng=rng_stream(seed, 0))
        gains.append(exact_loglik(params, data) - exact_loglik(init, data))
    seconds = time.perf_counter() - t0
    wins = sum(g > 0 for g in gains)
    assert report(5, "training improves log-likelihood", wins == 5,
                  f"{wins}/5 seeds improved, gains {', '.join(f'{g:.2f}' for g in gains)}", seconds, 30)


def test_06_thermodynamic_identity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(100):
        energies = rng.normal(0, 3, 8)
        for beta in (0.1, 1.0, 10.0):
            r = boltzmann_quantities(energies, beta)
            worst = max(worst, abs(r.H - (-beta * r.F + beta * r.U)))
    seconds = time.perf_counter() - t0
    assert report(6, "thermodynamic identity", worst <= 1e-10,
                  f"max |H + beta F - beta U| {worst:.2e} (limit 1e-10)", seconds, 1)


def test_07_hopfield_descent(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    rises = 0
    stuck = 0
    for _ in range(1000):
        d = int(rng.integers(2, 11))
        A = np.triu(rng.normal(size=(d, d)), 1)
        net = HopfieldNet(A + A.T)
        s = rng.choice([-1.0, 1.0], size=d)
        probe = s.copy()
        for _ in range(100):
            changed = False
            for i in range(d):
                new = update_unit(net, s, i)
                if hopfield_energy(net, new) > hopfield_energy(net, s) + 1e-12:
                    rises += 1
                changed |= new[i] != s[i]
                s = new
            if not changed:
                break
        out, _, converged = recall(net, probe, return_sweeps=True)
        stuck += not (converged and is_fixed_point(net, out) and is_fixed_point(net, s))
    seconds = time.perf_counter() - t0
    assert report(7, "Hopfield energy descent", rises == 0 and stuck == 0,
                  f"{rises} energy increases, {stuck} runs without a fixed point, 1000 networks", seconds, 10)


def test_08_crbm_reduction_and_gradient(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    base = random_rbm(rng, 3, 2)
    seq = (rng_stream(1, 9).random((3001, 3)) < 0.5).astype(float)
    hist, targets = crbm_mod.build_windows([seq], 1)

    # zero directed links: every operation equals its RBM counterpart bit for bit
    zero = CrbmParams.from_rbm(base, 1)
    b_hat, c_hat = crbm_mod.effective_biases(zero, hist)
    same = np.array_equal(cond_mean_hidden(base, targets, c_hat), cond_mean_hidden(base, targets))
    ones = np.ones((len(targets), 2))
    same &= np.array_equal(cond_mean_visible(base, ones, b_hat), cond_mean_visible(base, ones))
    a = gibbs_chain(base, targets, 3, rng_stream(0, 2), b_hat, c_hat)
    b = gibbs_chain(base, targets, 3, rng_stream(0, 2))
    same &= np.array_equal(a.v, b.v) and np.array_equal(a.h, b.h)
    g = crbm_mod.crbm_gradients(zero, hist[:50], targets[:50], 2, rng_stream(0, 2))
    neg, _ = negative_stats(base, targets[:50], 2, rng_stream(0, 2))
    ref = cd_gradients(positive_stats(base, targets[:50]), neg)
    same &= all(np.array_equal(x, y) for x, y in ((g.dW, ref.dW), (g.db, ref.db), (g.dc, ref.dc)))
    cfg = TrainConfig(max_epochs=3, batch_size=10, seed=2)
    trained, _ = crbm_mod.train_crbm(cfg, [seq[:61]], 1, 2, learn_directed=False)
    rbm, _ = train_rbm(cfg, crbm_mod.build_windows([seq[:61]], 1)[1], 2)
    same &= trained.base == rbm

    params = CrbmParams(base, (rng.normal(0, 0.5, (3, 3)),), (rng.normal(0, 0.5, (3, 2)),))
    cd = crbm_mod.crbm_gradients(params, hist, targets, 300, rng_stream(0, 2))
    exact = crbm_mod.exact_crbm_gradients(params, hist, targets)
    err = float(np.abs(cd.extra["G"][0] - exact.extra["G"][0]).max())
    seconds = time.perf_counter() - t0
    assert report(8, "CRBM reduction and lag gradient", same and err <= 0.05,
                  f"bitwise reduction {'holds' if same else 'broken'}, max |dG error| {err:.4f} (limit 0.05) at k=300",
                  seconds, 60)


def test_09_dbn_pretraining_benefit(report):
    t0 = time.perf_counter()
    pre, cold = [], []
    for seed in range(5):
        X = two_cluster(seed)
        cfg = TrainConfig(learning_rate=0.1, batch_size=10, cd_steps=1, max_epochs=50, seed=seed)
        stack = pretrain(DbnSpec((8, 4, 2)), X, cfg)
        ft = TrainConfig(learning_rate=1.0, batch_size=10, max_epochs=20, seed=seed)
        tuned, _ = finetune(unroll_autoencoder(stack), X, ft)
        baseline, _ = finetune(random_autoencoder([8, 4, 2], 0.01, rng_stream(seed, 7)), X, ft)
        pre.append(mse_loss(tuned, X))
        cold.append(mse_loss(baseline, X))
    seconds = time.perf_counter() - t0
    a, b = float(np.median(pre)), float(np.median(cold))
    assert report(9, "DBN pre-training benefit", a < b,
                  f"median MSE {a:.4f} pre-trained vs {b:.4f} random, 5 seeds", seconds, 120)


def test_10_backprop(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    eps = 1e-5
    worst = 0.0
    for _ in range(10):
        sizes = [int(s) for s in rng.integers(2, 6, size=3)]
        sizes.append(sizes[0])
        acts = tuple(str(a) for a in rng.choice(["sigmoid", "identity"], size=3))
        mlp = Mlp(tuple(rng.normal(size=(a, b)) for a, b in zip(sizes, sizes[1:])),
                  tuple(rng.normal(size=b) for b in sizes[1:]), acts)
        x = rng.random((5, sizes[0]))
        _, gW, gb = mse_gradients(mlp, x)
        for i in range(3):
            for kind, grads in (("W", gW), ("b", gb)):
                arr = (mlp.weights if kind == "W" else mlp.biases)[i]
                for idx in np.ndindex(arr.shape):
                    vals = []
                    for sign in (1, -1):
                        ws, bs = [w.copy() for w in mlp.weights], [b.copy() for b in mlp.biases]
                        (ws if kind == "W" else bs)[i][idx] += sign * eps
                        vals.append(mse_loss(Mlp(tuple(ws), tuple(bs), acts), x))
                    worst = max(worst, abs((vals[0] - vals[1]) / (2 * eps) - grads[i][idx]))
    seconds = time.perf_counter() - t0
    assert report(10, "back-propagation vs finite differences", worst <= 1e-6,
                  f"max |error| {worst:.2e} (limit 1e-6), 10 four-layer nets", seconds, 5)


def test_11_cli_reproducibility(report, tmp_path):
    t0 = time.perf_counter()
    data = tmp_path / "data.csv"
    write_csv(data, two_cluster(0, n=40))
    seq = tmp_path / "seq.csv"
    seq.write_text("seq,a,b,c\n" + "".join(f"s{t // 15},{t % 2},{(t // 2) % 2},1\n" for t in range(45)))
    runs = {
        "rbm.json": ["train", "rbm", str(data), "--hidden", "3", "--epochs", "5", "--k", "2", "--seed", "7"],
        "bm.json": ["train", "bm", str(data), "--hidden", "2", "--epochs", "3", "--seed", "7"],
        "crbm.json": ["train", "crbm", str(seq), "--history", "2", "--epochs", "5", "--batch", "5"],
        "stack.json": ["pretrain-dbn", str(data), "--layers", "8,4,2", "--epochs", "5", "--sample-upward"],
    }
    for name, argv in runs.items():
        assert main(argv + ["--out", str(tmp_path / name)]) == 0
    assert main(["finetune-dbn", str(data), "--model", str(tmp_path / "stack.json"),
                 "--out", str(tmp_path / "ae.json"), "--epochs", "5"]) == 0
    names = list(runs) + ["ae.json"]
    identical = 0
    for name in names:
        out_dir = tmp_path / f"re_{name}"
        assert main(["rerun", str(tmp_path / f"{name}.manifest.json"), "--out-dir", str(out_dir)]) == 0
        identical += (out_dir / name).read_bytes() == (tmp_path / name).read_bytes()
    seconds = time.perf_counter() - t0
    assert report(11, "CLI reproducibility", identical == len(names),
                  f"{identical}/{len(names)} training commands rerun to identical model files", seconds, None)
