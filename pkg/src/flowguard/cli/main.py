"""``flowguard`` command-line entry point.

Every command writes into the run directory (``run.out``)::

    config.resolved   fully resolved configuration of the last command
    checkpoints/      flow, ensemble, classifier and autoencoder weights
    data/             generated and adversarial datasets (FGD1)
    dumps/            score dumps
    reports/          evaluation reports, sweeps, analysis tables
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from flowguard.attacks import AttackBudget, attack_success_rate, pgd_attack
from flowguard.cli.config import resolve
from flowguard.data import (
    DatasetHandle,
    NoiseSpec,
    gen_indist,
    gen_noise_kappa,
    gen_ood,
    read_any,
    save_dataset,
)
from flowguard.detect import (
    DetectorEnsemble,
    parse_detectors,
    read_dump,
    score_all,
    train_ensemble,
    write_dump,
)
from flowguard.detect.dispatch import REQUIRES
from flowguard.errors import ConfigError, FlowguardError
from flowguard.eval import (
    annulus_stats,
    emit_report,
    evaluate_scores,
    gaussian_norms,
    monotone_fraction,
    partitioned_norms,
    sweep_lambda,
    sweep_penalty,
    tail_bound,
    write_histogram_csv,
    write_lambda_table,
    write_penalty_curves,
)
from flowguard.eval.annulus import annulus_summary
from flowguard.flow import TrainConfig, build_flow, load_flow, save_flow, train_flow
from flowguard.models import Autoencoder, DenseClassifier

LAYOUT = ("checkpoints", "data", "dumps", "reports")


class Run:
    """Resolved config plus the output directory layout."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["run"]["out"])

    def path(self, kind, name):
        p = self.out / kind / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_config(self):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.resolved").write_text(self.cfg.render(), encoding="utf-8")

    def write_text(self, kind, name, lines):
        path = self.path(kind, name)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    # -- datasets -------------------------------------------------------------
    def dataset(self, role):
        """``train``, ``test`` or ``ood`` set: from the configured path or generated."""
        data = self.cfg["data"]
        key = {"train": "path", "test": "test_path", "ood": "ood_path"}[role]
        if data[key]:
            if not Path(data[key]).is_file():
                raise ConfigError(f"data.{key}: dataset file not found: {data[key]}")
            return read_any(data[key])
        if role == "ood":
            kw = {"kappa": data["kappa"]} if data["ood"] == "noise" else {}
            return gen_ood(data["ood"], data["n_test"], data["d"], self.cfg.seed_for("data-ood"), **kw)
        n = data["n_train"] if role == "train" else data["n_test"]
        return gen_indist(data["indist"], n, data["d"], self.cfg.seed_for(f"data-{role}"))

    def dataset_arg(self, path, role):
        if path is None:
            return self.dataset(role)
        if not Path(path).is_file():
            raise ConfigError(f"dataset file not found: {path}")
        return read_any(path)

    # -- checkpoints ------------------------------------------------------------
    def checkpoint(self, name, given=None):
        path = Path(given) if given else self.out / "checkpoints" / name
        if not path.exists():
            raise ConfigError(f"checkpoint not found: {path} (train it first)")
        return path


def _train_config(cfg, seed):
    t = cfg["train"]
    return TrainConfig(iterations=t["iterations"], batch_size=t["batch_size"], lr=t["lr"],
                       lr_late=t["lr_late"], lr_switch=t["lr_switch"], seed=seed)


def _arch(cfg):
    f = cfg["flow"]
    return {k: f[k] for k in ("n_blocks", "hidden_width", "hidden_layers", "mix_every",
                                "actnorm", "factor_out_after", "activation")}


# -- commands -------------------------------------------------------------------


def cmd_gen_data(run, args):
    cfg = run.cfg["data"]
    if args.kind == "indist":
        role = args.split
        handle = run.dataset(role) if args.n is None else gen_indist(
            cfg["indist"], args.n, cfg["d"], run.cfg.seed_for(f"data-{role}"))
        name = f"indist_{cfg['indist']}_{role}.fgd"
    elif args.kind == "ood":
        handle = run.dataset("ood") if args.n is None else gen_ood(
            cfg["ood"], args.n, cfg["d"], run.cfg.seed_for("data-ood"))
        name = f"ood_{cfg['ood']}.fgd"
    else:
        side = math.isqrt(cfg["d"])
        if side * side != cfg["d"]:
            raise ConfigError(f"data.d={cfg['d']} is not a perfect square; noise needs a square grid")
        n = cfg["n_test"] if args.n is None else args.n
        handle = gen_noise_kappa(NoiseSpec(cfg["kappa"], side, side), n, run.cfg.seed_for("data-ood"))
        name = f"noise_k{cfg['kappa']}.fgd"
    path = run.path("data", args.output or name)
    save_dataset(handle, path)
    print(f"wrote {handle.n} x {handle.d} samples ({handle.tag}) to {path}")


def cmd_train_flow(run, args):
    data = run.dataset("train")
    seed = run.cfg.seed_for("flow")
    model = build_flow(data.d, scaling=run.cfg["flow"]["scaling"], seed=seed,
                       init_data=data.samples, **_arch(run.cfg))
    model, trace = train_flow(model, data, _train_config(run.cfg, seed))
    path = run.path("checkpoints", "flow.fgw")
    save_flow(model, path)
    run.write_text("reports", "flow_loss.csv",
                   ["iteration,nll"] + [f"{i},{v!r}" for i, v in enumerate(trace)])
    final = f"{trace[-1]:.6f}" if trace else "n/a"
    print(f"trained flow: {len(trace)} iterations, final nll {final}; checkpoint {path}")


def cmd_train_ensemble(run, args):
    data = run.dataset("train")
    ens = train_ensemble(data, _train_config(run.cfg, 0), seed=run.cfg.seed_for("ensemble"),
                         **_arch(run.cfg))
    directory = run.out / "checkpoints" / "ensemble"
    ens.save(directory)
    print(f"trained ensemble members {', '.join(ens.variants)} into {directory}")


def cmd_train_classifier(run, args):
    data = run.dataset("train")
    if data.labels is None:
        raise ConfigError("data.path: the training set has no labels")
    c = run.cfg["classifier"]
    clf = DenseClassifier(hidden=c["hidden"], activation=c["activation"], n_iter=c["n_iter"],
                          batch_size=c["batch_size"], learning_rate=c["lr"],
                          random_state=run.cfg.seed_for("classifier"))
    clf.fit(data.samples, data.labels)
    path = run.path("checkpoints", "classifier.fgw")
    clf.save(path)
    run.write_text("reports", "classifier.txt", [f"train_accuracy: {clf.train_accuracy_!r}"])
    print(f"trained classifier: train accuracy {clf.train_accuracy_:.4f}; checkpoint {path}")


def cmd_train_ae(run, args):
    data = run.dataset("train")
    a = run.cfg["ae"]
    ae = Autoencoder(bottleneck=a["bottleneck"], hidden=a["hidden"], n_iter=a["n_iter"],
                     batch_size=a["batch_size"], learning_rate=a["lr"],
                     random_state=run.cfg.seed_for("ae")).fit(data.samples)
    path = run.path("checkpoints", "ae.fgw")
    ae.save(path)
    print(f"trained autoencoder: train mse {ae.reconstruction_mse(data.samples):.6g}; checkpoint {path}")


def _components(run, names, checkpoint):
    needed = {need for name in names for need in REQUIRES[name]}
    comps = {}
    if "flow" in needed:
        comps["flow"] = load_flow(run.checkpoint("flow.fgw", checkpoint))
    if "ensemble" in needed:
        comps["ensemble"] = DetectorEnsemble.load(run.checkpoint("ensemble"))
    if "background" in needed:
        comps["background"] = load_flow(run.checkpoint("ensemble/background.fgw"))
    if "classifier" in needed:
        comps["classifier"] = DenseClassifier.load(run.checkpoint("classifier.fgw"))
    if "autoencoder" in needed:
        comps["autoencoder"] = Autoencoder.load(run.checkpoint("ae.fgw"))
    return comps


def cmd_score(run, args):
    names = parse_detectors(run.cfg["detect"]["detectors"])
    data = run.dataset_arg(args.dataset, args.role)
    comps = _components(run, names, args.checkpoint)
    scores = score_all(names, np.asarray(data.samples, dtype=np.float64),
                       lam=run.cfg["detect"]["lam"], precision=run.cfg["run"]["precision"], **comps)
    name = args.name or (Path(args.dataset).stem if args.dataset else args.role)
    path = run.path("dumps", f"{name}.csv")
    write_dump(scores, data.tag, path)
    print(f"scored {data.n} samples with {', '.join(names)}; dump {path}")


def cmd_evaluate(run, args):
    tag_in, s_in = read_dump(args.in_dump)
    tag_ood, s_ood = read_dump(args.ood_dump)
    meta = {
        "seed": run.cfg["run"]["seed"], "precision": run.cfg["run"]["precision"],
        "lambda": run.cfg["detect"]["lam"], "indist": tag_in, "ood": tag_ood,
    }
    report = evaluate_scores(s_in, s_ood, run.cfg["eval"]["target_tpr"], run.cfg["eval"]["bins"], meta)
    path = emit_report(report, run.path("reports", f"{args.name}.txt"))
    for name, m in report.detectors.items():
        write_histogram_csv(m, run.path("reports", f"{args.name}_hist_{name}.csv"))
        print(f"{name}: AUROC {m.auroc:.2f} AUPR {m.aupr:.2f}")
    print(f"report {path}")


def cmd_attack(run, args):
    a = run.cfg["attack"]
    clf = DenseClassifier.load(run.checkpoint("classifier.fgw", args.checkpoint))
    data = run.dataset_arg(args.dataset, "test")
    if data.labels is None:
        raise ConfigError("the attacked dataset has no labels")
    budget = AttackBudget(a["epsilon"], a["iterations"], a["step_size"])
    adv = pgd_attack(clf, data.samples, data.labels, budget, random_start=a["random_start"],
                     seed=run.cfg.seed_for("attack-start"))
    meta = {
        "source": data.tag, "epsilon": budget.epsilon, "iterations": budget.iterations,
        "step_size": budget.step, "classifier_checksum": adv.meta["classifier_checksum"],
        "success_rate": attack_success_rate(adv), "failed": int(adv.failed.sum()),
    }
    handle = DatasetHandle(adv.perturbed, "ood:pgd", run.cfg["run"]["seed"], adv.labels, meta)
    path = run.path("data", args.output)
    save_dataset(handle, path)
    run.write_text("reports", "attack.txt", [f"{k}: {meta[k]!r}" for k in sorted(meta)])
    print(f"PGD eps={budget.epsilon}: success rate {meta['success_rate']:.4f}; adversarial set {path}")


def cmd_sweep_lambda(run, args):
    model = load_flow(run.checkpoint("flow.fgw", args.checkpoint))
    x_in = run.dataset_arg(args.in_data, "test")
    x_ood = run.dataset_arg(args.ood_data, "ood")
    rows = sweep_lambda(model, x_in, x_ood, run.cfg["eval"]["lambdas"], run.cfg["run"]["precision"])
    path = run.path("reports", "sweep_lambda.csv")
    write_lambda_table(rows, path)
    for lam, value in rows:
        print(f"lambda {lam:g}: AUROC {value:.2f}")
    print(f"table {path}")


def cmd_sweep_penalty(run, args):
    model = load_flow(run.checkpoint("flow.fgw", args.checkpoint))
    data = run.dataset_arg(args.dataset, "test")
    x = np.asarray(data.samples, dtype=np.float64)[: run.cfg["eval"]["penalty_samples"]]
    curves = sweep_penalty(model, x, precision=run.cfg["run"]["precision"])
    write_penalty_curves(curves, run.path("reports", "penalty_curves.csv"))
    frac = monotone_fraction(curves)
    run.write_text("reports", "penalty_summary.txt", [
        f"samples: {len(x)}", f"median_monotone_fraction: {float(np.median(frac))!r}",
        f"min_monotone_fraction: {float(frac.min())!r}",
    ])
    print(f"{len(x)} curves; median fraction of nondecreasing outward pairs {np.median(frac):.4f}")


def cmd_tail_bound(run, args):
    a = run.cfg["analysis"]
    if a["d"] is None:
        raise ConfigError("analysis.d: dimension is required (--d)")
    tb = tail_bound(a["d"], epsilon=a["epsilon"], s=a["s"])
    lines = [
        f"d: {tb.d}", f"epsilon: {tb.epsilon!r}", f"lower_radius: {tb.lower_radius!r}",
        f"upper_radius: {tb.upper_radius!r}", f"one_sided_bound: {tb.one_sided!r}",
        f"two_sided_bound: {tb.bound!r}", f"bits: {tb.bits!r}",
    ]
    run.write_text("reports", "tail_bound.txt", lines)
    print(f"epsilon={tb.epsilon:.8f}")
    print(f"lower_radius={tb.lower_radius:.6f}")
    print(f"upper_radius={tb.upper_radius:.6f}")
    print(f"one_sided_bound={tb.one_sided:.6g} (2^-{tb.bits:.4f})")
    print(f"two_sided_bound={tb.bound:.6g}")


def cmd_annulus(run, args):
    a = run.cfg["analysis"]
    lines = []
    if args.dataset or args.checkpoint:
        model = load_flow(run.checkpoint("flow.fgw", args.checkpoint))
        data = run.dataset_arg(args.dataset, "test")
        stats = annulus_stats(model, data)
        split = run.cfg["eval"]["split"]
        if split:
            za, zb = partitioned_norms(model, data, split)
            run.write_text("reports", "partitioned_norms.csv", ["sample_id,norm_a,norm_b"] + [
                f"{i},{u!r},{v!r}" for i, (u, v) in enumerate(zip(za.tolist(), zb.tolist()))])
    elif a["d"] is not None:
        norms = gaussian_norms(a["d"], a["draws"], run.cfg.seed_for("annulus")) if a["draws"] else []
        stats = annulus_summary(norms, a["d"]) if a["draws"] else {"sqrt_d": math.sqrt(a["d"])}
    else:
        raise ConfigError("analysis.d: give --d or a flow checkpoint and dataset")
    print(f"sqrt_d={stats['sqrt_d']:.2f}")
    lines.append(f"sqrt_d: {stats['sqrt_d']!r}")
    if "median" in stats:
        print(f"median_norm={stats['median']:.4f}")
        print(f"relative_deviation={stats['relative_deviation']:.6f}")
        lines += [f"n: {len(stats['norms'])}", f"median_norm: {stats['median']!r}",
                  f"relative_deviation: {stats['relative_deviation']!r}"]
    run.write_text("reports", "annulus.txt", lines)


# -- parser -------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--out", help="run directory (run.out)")
    common.add_argument("--seed", type=int, help="root seed (run.seed)")

    parser = argparse.ArgumentParser(prog="flowguard", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("gen-data", cmd_gen_data, "generate an in-dist, OOD or Noise-kappa dataset")
    p.add_argument("kind", choices=("indist", "ood", "noise"))
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--kappa", type=int)
    p.add_argument("--name", help="generator name (data.indist or data.ood)")
    p.add_argument("--output", help="file name under data/")

    p = add("train-flow", cmd_train_flow, "train a flow on the in-dist training set")
    p.add_argument("--iterations", type=int)
    p.add_argument("--scaling")
    add("train-ensemble", cmd_train_ensemble, "train the five-member WAIC/LLR ensemble")
    add("train-classifier", cmd_train_classifier, "train the dense classifier")
    add("train-ae", cmd_train_ae, "train the autoencoder baseline")

    p = add("score", cmd_score, "score a dataset with named detectors")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--role", choices=("train", "test", "ood"), default="test")
    p.add_argument("--detectors")
    p.add_argument("--lam", type=float)
    p.add_argument("--precision", choices=("single", "double"))
    p.add_argument("--name", help="dump file stem")

    p = add("evaluate", cmd_evaluate, "AUROC/AUPR report from two score dumps")
    p.add_argument("--in", dest="in_dump", required=True)
    p.add_argument("--ood", dest="ood_dump", required=True)
    p.add_argument("--name", default="eval")

    p = add("attack", cmd_attack, "PGD adversarial set against the classifier")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--output", default="adversarial.fgd")

    p = add("sweep-lambda", cmd_sweep_lambda, "PRE AUROC over penalty coefficients")
    p.add_argument("--checkpoint")
    p.add_argument("--in", dest="in_data")
    p.add_argument("--ood", dest="ood_data")
    p.add_argument("--precision", choices=("single", "double"))

    p = add("sweep-penalty", cmd_sweep_penalty, "R'(xi') curves over a radial shift grid")
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--precision", choices=("single", "double"))

    p = add("tail-bound", cmd_tail_bound, "Gaussian norm tail bound")
    p.add_argument("--d", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--epsilon", type=float)

    p = add("annulus", cmd_annulus, "latent norm statistics and sqrt(d)")
    p.add_argument("--d", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    return parser


# command flag -> config key
FLAG_KEYS = {
    "out": ("run", "out"), "seed": ("run", "seed"), "precision": ("run", "precision"),
    "iterations": ("train", "iterations"), "scaling": ("flow", "scaling"),
    "detectors": ("detect", "detectors"), "lam": ("detect", "lam"), "kappa": ("data", "kappa"),
}
PER_COMMAND = {
    "gen-data": {"d": ("data", "d")},
    "attack": {"epsilon": ("attack", "epsilon"), "iterations": ("attack", "iterations")},
    "tail-bound": {"d": ("analysis", "d"), "s": ("analysis", "s"), "epsilon": ("analysis", "epsilon")},
    "annulus": {"d": ("analysis", "d"), "draws": ("analysis", "draws")},
}


def configure(args):
    cfg = resolve(args.config, args.set)
    keys = {**FLAG_KEYS, **PER_COMMAND.get(args.command, {})}
    for flag, (section, key) in keys.items():
        cfg.override(section, key, getattr(args, flag, None))
    if args.command == "gen-data" and args.name:
        cfg.override("data", "indist" if args.kind == "indist" else "ood", args.name)
    if args.command == "gen-data" and args.kind == "noise":
        cfg.override("data", "ood", "noise")
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = Run(configure(args))
        args.func(run, args)
        run.write_config()
    except (FlowguardError, OSError) as exc:
        print(f"flowguard {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
