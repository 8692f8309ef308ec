"""Acceptance criteria, one pass/fail line each.

Run under pytest (lines appear in the "acceptance criteria" summary section)
or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import io
import math
import os
import sys
import tempfile
import time
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from flowguard.attacks import AttackBudget, attack_success_rate, pgd_attack
from flowguard.cli.main import main as cli_main
from flowguard.data import gen_indist, gen_ood
from flowguard.detect import PenaltyConfig, score_pre, score_re, score_ttl
from flowguard.eval import (
    auroc,
    aupr,
    gaussian_norms,
    monotone_fraction,
    norm_cancellation_set,
    sweep_lambda,
    sweep_penalty,
    tail_bound,
)
from flowguard.flow import TrainConfig, build_flow, train_flow
from flowguard.models import DenseClassifier
from flowguard.numcore import Graph, backward

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []


def _cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


def _field(text, key):
    return float(text.split(f"{key}=")[1].split()[0])


@functools.lru_cache(maxsize=None)
def ring_setup():
    """Trained d=16 ring flow, ring classifier, and the four evaluation sets."""
    train = gen_indist("ring", 2048, 16, seed=101)
    test = gen_indist("ring", 512, 16, seed=102)
    model = build_flow(16, seed=103, init_data=train.samples)
    model, _ = train_flow(model, train, TrainConfig(iterations=1500, lr_switch=1000, seed=103))
    clf = DenseClassifier(n_iter=400, random_state=104).fit(train.samples, train.labels)
    adv = pgd_attack(clf, test.samples, test.labels, AttackBudget(0.05))
    cancel, _ = norm_cancellation_set(model, test.samples, split=(14, 2), beta=0.25)
    ood = {
        "uniform": gen_ood("uniform", 512, 16, seed=105).samples,
        "shifted_mixture": gen_ood("shifted_mixture", 512, 16, seed=106).samples,
        "pgd": adv.perturbed,
    }
    return model, clf, test.samples, ood, cancel


# -- criteria ---------------------------------------------------------------------------


def criterion_1():
    _, out_a, _ = _cli("tail-bound", "--d", "3072", "--s", "58", "--out", _scratch())
    _, out_b, _ = _cli("tail-bound", "--d", "12288", "--epsilon", "0.108318603", "--out", _scratch())
    eps, r1, r2 = _field(out_a, "epsilon"), _field(out_a, "upper_radius"), _field(out_b, "upper_radius")
    exponent = -math.log2(tail_bound(12288, epsilon=0.108318603).one_sided)
    ok = (abs(eps - 0.32356413) <= 1e-6 and abs(r1 - 63.765108) <= 1e-4
          and abs(r2 - 116.700553) <= 1e-4 and round(exponent) == 26)
    return ok, f"eps={eps:.8f} r={r1:.6f} r'={r2:.6f} exponent={exponent:.5f}"


def criterion_2():
    got = []
    for d in (3072, 12288, 150528):
        _, out, _ = _cli("annulus", "--d", str(d), "--out", _scratch())
        got.append(_field(out, "sqrt_d"))
    ok = all(abs(g - r) <= 0.01 for g, r in zip(got, (55.43, 110.85, 387.98)))
    return ok, "sqrt_d=" + ",".join(f"{g:.2f}" for g in got)


def criterion_3():
    norms = gaussian_norms(3072, 100_000, seed=7)
    tb = tail_bound(3072, epsilon=0.324)
    inside = np.mean((norms > tb.lower_radius) & (norms < tb.upper_radius))
    median = float(np.median(norms))
    return abs(median - 55.43) <= 0.5 and inside >= 0.999, f"median={median:.4f} inside={inside:.5f}"


def _jitter(model, scale, seed):
    rng = np.random.default_rng(seed)
    return model.with_params({k: v + scale * rng.normal(size=v.shape) for k, v in model.params.items()})


def _fd_logdet(model, x, h=1e-6):
    d = x.size
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        cols.append((model.forward(x[None] + e).z[0] - model.forward(x[None] - e).z[0]) / (2 * h))
    return np.linalg.slogdet(np.stack(cols, axis=1))[1]


def _grad_check(seed):
    rng = np.random.default_rng(seed)
    params = {"A": rng.normal(size=(3, 4)), "W": rng.normal(size=(4, 4)) * 0.6, "c": rng.normal(size=4)}
    ops = [str(o) for o in rng.choice(["matmul", "add", "mul", "tanh", "sigmoid"], size=5)]

    def f(P, tensor):
        h = P["A"]
        for op in ops:
            if op == "matmul":
                h = h @ P["W"]
            elif op == "add":
                h = h + P["c"]
            elif op == "mul":
                h = h * P["A"]
            elif op == "tanh":
                h = h.tanh() if tensor else np.tanh(h)
            else:
                h = h.sigmoid() if tensor else 1 / (1 + np.exp(-h))
        return h.sum()

    g = Graph(params)
    grads = backward(g, f(g.leaves, True))
    worst = 0.0
    for name, value in params.items():
        fd = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            up = {k: v.copy() for k, v in params.items()}
            dn = {k: v.copy() for k, v in params.items()}
            up[name][idx] += 1e-5
            dn[name][idx] -= 1e-5
            fd[idx] = (f(up, False) - f(dn, False)) / 2e-5
        err = np.linalg.norm(grads[name] - fd) / max(np.linalg.norm(grads[name]) + np.linalg.norm(fd), 1e-12)
        worst = max(worst, err)
    return worst


def criterion_4():
    model = _jitter(build_flow(8, n_blocks=16, hidden_width=32, seed=1), 0.2, 1)
    x = np.random.default_rng(1).normal(size=(1024, 8))
    inv = float(np.max(np.abs(x - model.inverse(model.forward(x).z))))
    ld = 0.0
    for d in (2, 4, 6):
        m = _jitter(build_flow(d, n_blocks=4, hidden_width=16, seed=d), 0.3, d)
        for row in np.random.default_rng(d).normal(size=(4, d)):
            ref = _fd_logdet(m, row)
            ld = max(ld, abs(m.forward(row[None]).log_det[0] - ref) / max(abs(ref), 1.0))
    grad = max(_grad_check(s) for s in range(100))
    ok = inv <= 1e-9 and ld <= 1e-4 and grad <= 1e-4
    return ok, f"inverse={inv:.2e} logdet_rel={ld:.2e} autodiff_rel={grad:.2e}"


def criterion_5():
    model, _, x_in, ood, _ = ring_setup()
    x = np.concatenate([x_in, ood["uniform"]])[:1024]
    same = all(
        score_pre(model, x, PenaltyConfig(0.0), p).tobytes() == score_re(model, x, p).tobytes()
        for p in ("single", "double")
    )
    row = sweep_lambda(model, x_in, ood["uniform"], (0.0,))[0][1]
    re_auc = auroc(score_re(model, x_in), score_re(model, ood["uniform"]))
    ok = same and row == re_auc
    return ok, f"pre(lam=0)==re bitwise: {same}; sweep row {row!r} vs RE {re_auc!r}"


def criterion_6():
    model, _, x_in, _, _ = ring_setup()
    frac = monotone_fraction(sweep_penalty(model, x_in[:256]))
    median = float(np.median(frac))
    return median >= 0.95, f"median nondecreasing fraction={median:.4f} (min {frac.min():.4f})"


def criterion_7():
    model, _, x_in, ood, cancel = ring_setup()
    s_in = {"pre": score_pre(model, x_in), "re": score_re(model, x_in), "ttl": score_ttl(model, x_in)}
    table = {}
    for name, x in {**ood, "cancellation": cancel}.items():
        table[name] = {
            "pre": auroc(s_in["pre"], score_pre(model, x)),
            "re": auroc(s_in["re"], score_re(model, x)),
            "ttl": auroc(s_in["ttl"], score_ttl(model, x)),
        }
    gate_ab = table["uniform"]["pre"] >= 90 and table["shifted_mixture"]["pre"] >= 90
    wins = sum(table[k]["pre"] >= table[k]["re"] for k in ood)
    ttl_chance = abs(table["cancellation"]["ttl"] - 50) <= 2
    pre_cancel = table["cancellation"]["pre"] >= 90
    detail = "; ".join(f"{k}: PRE {v['pre']:.1f} RE {v['re']:.1f} TTL {v['ttl']:.1f}" for k, v in table.items())
    gates = (f"[PRE>=90 on a,b: {gate_ab}; PRE>=RE on {wins}/3; TTL~50 on cancellation: {ttl_chance}; "
             f"PRE>=90 on cancellation: {pre_cancel}]")
    return gate_ab and wins >= 2 and ttl_chance and pre_cancel, f"{detail} {gates}"


def _auroc_oracle(a, b):
    return 100.0 * sum(1.0 if y > x else 0.5 if y == x else 0.0 for x in a for y in b) / (len(a) * len(b))


def _aupr_oracle(a, b):
    area, prev = 0.0, 0.0
    for t in sorted(set(np.concatenate([a, b]).tolist()), reverse=True):
        tp, fp = int(np.sum(b >= t)), int(np.sum(a >= t))
        area += (tp / len(b) - prev) * tp / (tp + fp)
        prev = tp / len(b)
    return 100.0 * area


def criterion_8():
    rng = np.random.default_rng(8)
    worst_roc = worst_pr = 0.0
    for _ in range(200):
        levels = int(rng.integers(2, 10))
        a = rng.integers(0, levels, int(rng.integers(1, 60))).astype(float)
        b = rng.integers(0, levels, int(rng.integers(1, 60))).astype(float) + int(rng.integers(0, 3))
        worst_roc = max(worst_roc, abs(auroc(a, b) - _auroc_oracle(a, b)))
        worst_pr = max(worst_pr, abs(aupr(a, b) - _aupr_oracle(a, b)))
    return worst_roc <= 1e-12 and worst_pr <= 1e-9, f"max |AUROC err|={worst_roc:.1e} max |AUPR err|={worst_pr:.1e}"


def criterion_9():
    _, clf, x_in, _, _ = ring_setup()
    labels = gen_indist("ring", 512, 16, seed=102).labels
    rates, budget_ok = {}, True
    for eps in (0.05, 0.5):
        adv = pgd_attack(clf, x_in, labels, AttackBudget(eps))
        dev = np.abs(adv.perturbed - adv.original)
        budget_ok &= bool(np.all(dev <= eps + np.spacing(np.abs(adv.original) + eps)))
        rates[eps] = attack_success_rate(adv)
    ok = budget_ok and rates[0.5] >= rates[0.05]
    return ok, f"budget within 1 ulp: {budget_ok}; success eps=0.05 {rates[0.05]:.3f}, eps=0.5 {rates[0.5]:.3f}"


CLI_PIPELINE = [
    ["gen-data", "indist", "--split", "test"],
    ["gen-data", "noise", "--d", "64", "--kappa", "2"],
    ["train-flow", "--iterations", "40"],
    ["train-ensemble", "--set", "train.iterations=10"],
    ["train-classifier"],
    ["train-ae"],
    ["score", "--detectors", "ll,ttl,re,pre,waic,llr,comp,msp,ae", "--name", "in"],
    ["score", "--detectors", "ll,ttl,re,pre,waic,llr,comp,msp,ae", "--role", "ood", "--name", "ood"],
    ["evaluate", "--in", "run/dumps/in.csv", "--ood", "run/dumps/ood.csv"],
    ["attack"],
    ["sweep-lambda"],
    ["sweep-penalty"],
    ["tail-bound", "--d", "3072", "--s", "58"],
    ["annulus", "--d", "3072", "--draws", "2000"],
]
CLI_SMALL = ["--set", "flow.n_blocks=2", "--set", "flow.hidden_width=16", "--set", "data.n_train=256",
             "--set", "data.n_test=64", "--set", "classifier.n_iter=50", "--set", "ae.n_iter=30"]


def criterion_10():
    root = Path(tempfile.mkdtemp(prefix="flowguard-repro-"))
    here = os.getcwd()
    mismatched = []
    try:
        for argv in CLI_PIPELINE:
            snaps = []
            for rep in ("a", "b"):
                (root / rep).mkdir(exist_ok=True)
                os.chdir(root / rep)
                code, _, err = _cli(*argv, "--out", "run", *CLI_SMALL)
                if code != 0:
                    return False, f"{argv[0]} failed: {err.strip()}"
                snaps.append({p.relative_to(root / rep).as_posix(): p.read_bytes()
                              for p in sorted((root / rep / "run").rglob("*")) if p.is_file()})
            if snaps[0] != snaps[1]:
                mismatched.append(argv[0])
    finally:
        os.chdir(here)
    return not mismatched, f"{len(CLI_PIPELINE)} commands rerun; mismatched outputs: {mismatched or 'none'}"


_SCRATCH = []


def _scratch():
    if not _SCRATCH:
        _SCRATCH.append(tempfile.mkdtemp(prefix="flowguard-acc-"))
    return _SCRATCH[0]


CRITERIA = {
    1: ("tail-bound reproduction", criterion_1, 1.0),
    2: ("sqrt(d) constants", criterion_2, 1.0),
    3: ("annulus concentration", criterion_3, 30.0),
    4: ("flow correctness suite", criterion_4, 120.0),
    5: ("PRE reduces to RE at lambda=0", criterion_5, 60.0),
    6: ("penalty monotonicity", criterion_6, 300.0),
    7: ("detection ordering", criterion_7, 600.0),
    8: ("metric oracles", criterion_8, 30.0),
    9: ("PGD contract", criterion_9, 60.0),
    10: ("CLI reproducibility", criterion_10, None),
}


def evaluate(number):
    title, fn, limit = CRITERIA[number]
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    timed_ok = limit is None or elapsed < limit
    status = "PASS" if ok and timed_ok else "FAIL"
    budget = f" (limit {limit:g}s)" if limit is not None else ""
    line = f"[{status}] criterion {number:>2} {title}: {detail} [{elapsed:.1f}s{budget}]"
    ACCEPTANCE_LINES.append(line)
    return ok and timed_ok, line


@pytest.fixture(scope="module", autouse=True)
def _warm_ring_setup():
    # training time is shared by criteria 5-7 and 9 and charged to none of them
    ring_setup()


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance(number):
    ok, line = evaluate(number)
    print(line)
    assert ok, line


if __name__ == "__main__":
    ring_setup()
    results = [evaluate(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
