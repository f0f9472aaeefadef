"""Command-line entry point: ``robcert <command> [options]``.

Trial ``i`` of a run with master seed ``s`` draws from ``random.Random(f"{s}:{i}")``
and nothing else, so rows do not depend on trial order or ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from robcert import __version__
from robcert.adversary import FiniteExhaustive, ThresholdEndpoints, attack, is_admissible_attack
from robcert.certify import (
    build_witness_set,
    certify_halfspace_l1,
    certify_tolerant_l2,
    certify_witness,
    tolerant_polygon_vertices,
)
from robcert.constructions import BUILDERS, verify_indistinguishability
from robcert.core.loss import true_loss
from robcert.core.sampling import hoeffding_size, sample, sample_unlabeled
from robcert.core.taskio import load_task
from robcert.core.types import Ball, FiniteClass, FiniteMap, format_point, to_rational
from robcert.errors import DomainError, RobcertError
from robcert.games import random_strategy, run_l2_game, run_tolerant_singleton_game, script_strategy
from robcert.learners import (
    FiniteClassCompressor,
    ThresholdCompressor,
    cluster_learner,
    compression_learner,
    erm_robust,
    extended_oracle_learner,
    ssl_margin_prune,
    ssl_sample_sizes,
    ssl_unlabeled_prune,
)
from robcert.oracles import BudgetedLabelOracle, extended_margin_oracle, margin_oracle

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_INTERNAL = 0, 2, 3, 4


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _rational_arg(text: str) -> Fraction:
    try:
        return to_rational(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _prob_arg(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


# ---------------------------------------------------------------------------
# Trial functions. Each takes the plain config dict and a trial index.


@lru_cache(maxsize=8)
def _task(path: str):
    return load_task(path)


def _require_task(cfg):
    if not cfg.get("task"):
        raise DomainError(f"{cfg['command']} needs --task")
    return _task(cfg["task"])


def _hidden(task):
    if task.hidden is None:
        raise DomainError(f"task {task.name} declares no hidden hypothesis")
    return task.hidden


def _trial_seed(cfg, i: int) -> str:
    return f"{cfg['seed']}:{i}"


def trial_certify(cfg, i):
    task = _require_task(cfg)
    h = _hidden(task)
    P = task.distribution(cfg.get("dist"))
    eps, delta = cfg["eps"], cfg["delta"]
    m = cfg["m"] or hoeffding_size(eps, delta)
    S = sample(P, m, seed=_trial_seed(cfg, i))
    o = BudgetedLabelOracle(h)
    mode = cfg["mode"]
    row = {"trial": i}
    if mode == "witness":
        if not isinstance(task.H, FiniteClass) or not isinstance(task.U, FiniteMap):
            raise DomainError("witness mode needs a finite class and a finite perturbation map")
        cache = {}

        def wfn(x):
            if x not in cache:
                cache[x] = build_witness_set(task.H, task.U, x)
            return cache[x]

        rep = certify_witness(o, [x for x, _ in S], wfn, [y for _, y in S], eps, delta)
        lo = hi = true_loss(h, P, task.U)
    elif mode == "l1":
        if not (isinstance(task.U, Ball) and task.U.norm == "l1"):
            raise DomainError("l1 mode needs an l1 ball perturbation")
        rep = certify_halfspace_l1(o, S, task.U.radius, eps, delta)
        lo = hi = true_loss(h, P, task.U)
    else:
        if not (isinstance(task.U, Ball) and task.U.norm == "l2"):
            raise DomainError("tolerant mode needs an l2 ball perturbation")
        gamma = cfg["gamma"]
        if gamma is None:
            if task.V is None:
                raise DomainError("tolerant mode needs --gamma or an outer perturbation in the task")
            gamma = task.V.radius / task.U.radius - 1
        gamma = to_rational(gamma)
        rep = certify_tolerant_l2(o, S, task.U.radius, gamma, eps, delta)
        lo = true_loss(h, P, task.U)
        hi = true_loss(h, P, Ball("l2", task.U.radius * (1 + gamma)))
        row["k"] = tolerant_polygon_vertices(gamma)
        row["exact_sandwich"] = rep.exact_sandwich
    e = rep.estimate
    row.update(
        {
            "m": rep.m_used,
            "q_used": rep.q_used,
            "budget": rep.budget,
            "estimate": _q(e),
            "target_low": _q(lo),
            "target_high": _q(hi),
            "success": bool(float(lo) - eps <= float(e) <= float(hi) + eps)
            if mode == "tolerant"
            else bool(abs(float(e) - float(lo)) < eps),
            "transcript_hash": rep.oracle.transcript_hash,
        }
    )
    return row


def _adversary(name):
    return ThresholdEndpoints() if name == "threshold" else FiniteExhaustive()


def trial_attack(cfg, i):
    task = _require_task(cfg)
    h = _hidden(task)
    P = task.distribution(cfg.get("dist"))
    S_X = sample_unlabeled(P, cfg["sample"], seed=_trial_seed(cfg, i))
    o = BudgetedLabelOracle(h)
    res = attack(_adversary(cfg["adversary"]), o, S_X, task.U, labels=[h(x) for x in S_X])
    return {
        "trial": i,
        "m": len(S_X),
        "queries": res.n_queries,
        "returned": len(res.perturbed),
        "admissible": is_admissible_attack(res, S_X, h, task.U),
        "success": is_admissible_attack(res, S_X, h, task.U),
        "transcript_hash": res.queries.transcript_hash,
        "perturbed": [format_point(p) for p in res.points[:20]],
    }


def trial_learn(cfg, i):
    task = _require_task(cfg)
    P = task.distribution(cfg.get("dist"))
    algo = cfg["algo"]
    H, U = task.H, task.U
    sizes = {}
    if isinstance(H, FiniteClass):
        domain = task.domain or tuple(P.points)
        sizes = ssl_sample_sizes(H, U, domain, cfg["eps"], cfg["delta"])
    m = cfg["m"] or sizes.get("m_labeled", 200)
    seed = _trial_seed(cfg, i)
    S = sample(P, m, seed=seed)
    if algo == "erm":
        h = erm_robust(H, S, U)
    elif algo == "ssl-margin":
        h = ssl_margin_prune(H, S, lambda g: margin_oracle(P, U, g, H))
    elif algo == "ssl-unlabeled":
        mu = cfg["m_unlabeled"] or sizes.get("m_unlabeled", 200)
        T = sample_unlabeled(P, mu, seed=seed + ":unlabeled")
        h = ssl_unlabeled_prune(H, S, T, U)
    elif algo == "ext-oracle":
        h = extended_oracle_learner(H, S, lambda g, g2: extended_margin_oracle(P, U, g, g2, H))
    elif algo == "cluster":
        h = cluster_learner(H, S, [a.x for a in P.atoms if a.weight > 0], U)
    else:
        if isinstance(U, Ball):
            h = compression_learner(S, U, ThresholdEndpoints(), ThresholdCompressor())
        else:
            h = compression_learner(S, U, FiniteExhaustive(), FiniteClassCompressor(H))
    loss = true_loss(h, P, U)
    return {
        "trial": i,
        "m": m,
        "hypothesis": h.label(),
        "robust_loss": _q(loss),
        "robust_loss_float": float(loss),
        "success": float(loss) <= 2 * cfg["eps"],
    }


def _strategy(cfg, i):
    spec = cfg["strategy"]
    if spec == "random":
        if cfg["kind"] == "l2":
            return random_strategy(_trial_seed(cfg, i), cfg["max_queries"])
        R = cfg["r"] * (1 + cfg["gamma_game"])
        return random_strategy(_trial_seed(cfg, i), cfg["max_queries"], center=cfg["x0"], spread=2 * R)
    try:
        data = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read strategy script {spec}: {exc}") from exc
    if not isinstance(data, dict) or "queries" not in data or data.get("verdict") not in ("high", "low"):
        raise DomainError('strategy script must be {"queries": [...], "verdict": "high" | "low"}')
    queries = [tuple(Fraction(c) for c in q) for q in data["queries"]]
    return script_strategy(queries, lossy=data["verdict"] == "high")


def trial_game(cfg, i):
    strat = _strategy(cfg, i)
    if cfg["kind"] == "l2":
        ref = run_l2_game(strat)
    else:
        ref = run_tolerant_singleton_game(strat, cfg["x0"], cfg["r"], cfg["gamma_game"])
    d = ref.as_dict()
    return {
        "trial": i,
        "queries": len(ref.transcript),
        "verdict": "high" if ref.verdict.lossy else "low",
        "hypothesis": d["hypothesis"],
        "losses": d["losses"],
        "verified": d["verified"],
        "success": d["verified"],
    }


TRIALS = {"certify": trial_certify, "attack": trial_attack, "learn": trial_learn, "game": trial_game}


def _run_trial(args):
    cmd, cfg, i = args
    return TRIALS[cmd](cfg, i)


# ---------------------------------------------------------------------------
# Reports


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def _aggregate(rows: list) -> dict:
    n = len(rows)
    agg = {"trials": n}
    if n and "success" in rows[0]:
        agg["success_fraction"] = sum(bool(r["success"]) for r in rows) / n
    for key in ("estimate", "robust_loss"):
        if n and key in rows[0]:
            vals = [Fraction(r[key]) for r in rows]
            agg[f"mean_{key}"] = float(sum(vals) / n)
    for key in ("q_used", "queries"):
        if n and key in rows[0]:
            agg[f"max_{key}"] = max(r[key] for r in rows)
    return agg


def _serializable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, Fraction):
            out[k] = _q(v)
        elif isinstance(v, tuple):
            out[k] = [_q(c) if isinstance(c, Fraction) else c for c in v]
        else:
            out[k] = v
    return out


def build_report(command: str, cfg: dict, rows: list, extra: dict | None = None, started: float | None = None) -> dict:
    scfg = _serializable({k: v for k, v in cfg.items() if k not in ("out", "format", "jobs")})
    rep = {
        "command": command,
        "version": __version__,
        "config": scfg,
        "config_hash": config_hash(scfg),
        "rows": rows,
        "aggregate": _aggregate(rows),
    }
    if extra:
        rep.update(extra)
    rep["timing"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": None if started is None else round(time.perf_counter() - started, 6),
    }
    return rep


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    keys: list = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def emit(report: dict, out: str | None, fmt: str) -> None:
    text = rows_to_csv(report["rows"]) if fmt == "csv" else json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(cfg: dict) -> tuple[dict, int]:
    """Execute one configured command and return ``(report, exit status)``."""
    started = time.perf_counter()
    cmd = cfg["command"]
    if cmd == "verify-constructions":
        names = list(BUILDERS) if cfg["which"] == "all" else [cfg["which"]]
        rows = []
        for name in names:
            r = verify_indistinguishability(BUILDERS[name]())
            d = r.as_dict()
            d["success"] = d["passed"]
            rows.append(d)
        rep = build_report(cmd, cfg, rows, started=started)
        return rep, EXIT_OK if all(r["passed"] for r in rows) else EXIT_CONTRACT
    if cmd == "report":
        rows = []
        for path in cfg["inputs"]:
            try:
                d = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise DomainError(f"cannot read report {path}: {exc}") from exc
            rows.append({"file": path, "command": d.get("command"), "config_hash": d.get("config_hash"), **d.get("aggregate", {})})
        return build_report(cmd, cfg, rows, started=started), EXIT_OK
    if cfg["trials"] < 1:
        raise DomainError("--trials must be at least 1")
    jobs = [(cmd, cfg, i) for i in range(cfg["trials"])]
    if cfg.get("jobs", 1) > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as ex:
            rows = list(ex.map(_run_trial, jobs))
    else:
        rows = [_run_trial(j) for j in jobs]
    return build_report(cmd, cfg, rows, started=started), EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_CONFIG)


def _point_arg(text: str):
    parts = text.split(",")
    try:
        vals = [Fraction(p) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a point: {text!r}") from exc
    return vals[0] if len(vals) == 1 else tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--task", help="task JSON file")
    common.add_argument("--seed", default="0", help="master seed (any string)")
    common.add_argument("--trials", type=int, default=1)
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    common.add_argument("--dist", help="distribution name inside the task (first by name when omitted)")

    p = _Parser(prog="robcert", description="Robust-loss certification, attacks, learners and impossibility games.")
    p.add_argument("--version", action="version", version=f"robcert {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("certify", parents=[common], help="estimate the robust loss of the hidden hypothesis")
    c.add_argument("--mode", choices=("witness", "l1", "tolerant"), required=True)
    c.add_argument("--eps", type=_prob_arg, default=0.1)
    c.add_argument("--delta", type=_prob_arg, default=0.05)
    c.add_argument("--gamma", type=_rational_arg)
    c.add_argument("--m", type=int, help="sample size (Hoeffding size when omitted)")

    a = sub.add_parser("attack", parents=[common], help="run a query-bounded adversary")
    a.add_argument("--adversary", choices=("threshold", "exhaustive"), required=True)
    a.add_argument("--sample", type=int, default=20)

    lr = sub.add_parser("learn", parents=[common], help="train a robust learner and report its exact loss")
    lr.add_argument("--algo", choices=("erm", "ssl-margin", "ssl-unlabeled", "ext-oracle", "cluster", "compress"), required=True)
    lr.add_argument("--m", type=int)
    lr.add_argument("--m-unlabeled", type=int, dest="m_unlabeled")
    lr.add_argument("--eps", type=_prob_arg, default=0.1)
    lr.add_argument("--delta", type=_prob_arg, default=0.1)

    g = sub.add_parser("game", parents=[common], help="play an impossibility game against a certifier strategy")
    g.add_argument("--kind", choices=("l2", "tolerant"), required=True)
    g.add_argument("--strategy", default="random", help="'random' or a JSON script file")
    g.add_argument("--max-queries", type=int, default=50, dest="max_queries")
    g.add_argument("--x0", type=_point_arg, default=(Fraction(0), Fraction(0)))
    g.add_argument("--r", type=_rational_arg, default=Fraction(1))
    g.add_argument("--gamma", type=_rational_arg, default=Fraction(1, 2), dest="gamma_game")

    v = sub.add_parser("verify-constructions", parents=[common], help="check the counterexample instances exactly")
    v.add_argument("--which", choices=("seven_point", "eight_point", "all"), default="all")

    r = sub.add_parser("report", parents=[common], help="summarise existing report files")
    r.add_argument("inputs", nargs="+")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = vars(args)
    try:
        report, status = run(cfg)
        emit(report, cfg.get("out"), cfg.get("format", "json"))
    except RobcertError as exc:
        sys.stderr.write(f"{exc.code}: {exc}\n")
        return exc.exit_status
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL
    return status


if __name__ == "__main__":
    raise SystemExit(main())
