"""``folearn`` command line.

Exit codes: 0 success, 1 usage or validation error, 2 the learner rejected.
Every flag may also come from a JSON ``--config`` file (keys are the flag
names with dashes turned into underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bruteforce import enumerate_concept_bitvectors, exhaustive_consistent, exhaustive_min_error
from .distributions import UniformTuples
from .evaluation import hyp_value
from .hypotheses import Reject, hypothesis_from_doc, hypothesis_to_doc
from .learn import (
    ExplicitFormulas,
    LearnerConfig,
    RealizedTypes,
    learn_consistent,
    learn_min_error,
    load_training_file,
    parameter_candidates,
)
from .logic import parse_formula
from .pac import (
    ExperimentConfig,
    atomic_write,
    run_agnostic_experiment,
    run_pac_experiment,
    vc_dimension_bruteforce,
)
from .structure import LocalAccessOracle, load_structure_file, structure_to_doc
from .synth import GenSpec, gen_structure, noisy_distribution, plant_target

EXIT_OK, EXIT_USAGE, EXIT_REJECT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- argument definitions ----------------------------------------------------


def _learner_flags(p):
    p.add_argument("--k", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--q-star", type=int)
    p.add_argument("--r-star", type=int)
    p.add_argument("--q-t", type=int)
    p.add_argument("--threads", type=int, help="worker cap (the search runs sequentially)")


def _space_flags(p, default="realized-types"):
    p.add_argument("--space", choices=("realized-types", "explicit"), default=None)
    p.add_argument("--template", action="append", help="template text; repeatable")
    p.add_argument("--templates", help="file with one template per line, or a JSON list")
    p.set_defaults(space_default=default)


def _experiment_flags(p):
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--test-mode", choices=("exact", "empirical"))
    p.add_argument("--test-samples", type=int)
    p.add_argument("--sample-size-rule", choices=("finite", "vc", "uniform_convergence", "manual"))
    p.add_argument("--vc-c", type=float)
    p.add_argument("--vc-value", type=int)
    p.add_argument("--manual-t", type=int)
    p.add_argument("--h-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--target", help="target hypothesis document")
    p.add_argument("--target-template", help="template text for a planted target")
    p.add_argument("--target-params", nargs="*", help="forced target parameters")
    p.add_argument("--report", help="report output path")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="folearn", description="Learn first-order definable concepts with local access.")
    parser.add_argument("--version", action="version", version=f"folearn {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file supplying any of the flags")
        return p

    p = add("learn", "learn a hypothesis from a training document")
    p.add_argument("--structure")
    p.add_argument("--train")
    _learner_flags(p)
    _space_flags(p)
    p.add_argument("--mode", choices=("consistent", "min-error"))
    p.add_argument("--out")

    p = add("eval", "evaluate a hypothesis on a tuple")
    p.add_argument("--structure")
    p.add_argument("--hypothesis")
    p.add_argument("--tuple", nargs="+")

    p = add("pac", "run a PAC experiment with a planted target")
    p.add_argument("--structure")
    _learner_flags(p)
    _space_flags(p, default="explicit")
    _experiment_flags(p)

    p = add("agnostic", "run an agnostic experiment with label noise")
    p.add_argument("--structure")
    _learner_flags(p)
    _space_flags(p, default="explicit")
    _experiment_flags(p)
    p.add_argument("--noise", type=str, help="label flip probability, e.g. 1/10")

    p = add("gen", "generate a structure document")
    p.add_argument("--n", type=int)
    p.add_argument("--d-max", type=int)
    p.add_argument("--family", choices=("random", "cycle_with_colors", "grid_strip", "figure1_fixture"))
    p.add_argument("--color-density", type=str)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("vc", "brute-force VC dimension")
    p.add_argument("--structure")
    p.add_argument("--concepts", help="JSON list of 0/1 vectors (instead of a structure)")
    p.add_argument("--k", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--template", action="append")
    p.add_argument("--templates")
    p.add_argument("--domain-limit", type=int)

    p = add("check", "run the brute-force reference search")
    p.add_argument("--structure")
    p.add_argument("--train")
    _learner_flags(p)
    p.add_argument("--template", action="append")
    p.add_argument("--templates")
    p.add_argument("--mode", choices=("consistent", "min-error"))
    p.add_argument("--candidates", choices=("local", "all"))
    p.add_argument("--out")
    return parser


DEFAULTS = {
    "q": 1,
    "mode": "consistent",
    "epsilon": 0.1,
    "delta": 0.1,
    "trials": 1,
    "test_mode": "exact",
    "test_samples": 10_000,
    "sample_size_rule": "finite",
    "vc_c": 8.0,
    "seed": 0,
    "format": "json",
    "family": "random",
    "color_density": "1/2",
    "d_max": 3,
    "noise": "1/10",
    "candidates": "local",
    "domain_limit": 20,
    "threads": 1,
}


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required: " + ", ".join(("learn", "eval", "pac", "agnostic", "gen", "vc", "check")))
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - set(vars(args))
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(cfg)
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
    for key in vars(args):
        merged.setdefault(key, None)
    if merged.get("space") is None and "space_default" in merged:
        merged["space"] = merged["space_default"]
    return argparse.Namespace(**merged)


# -- helpers -----------------------------------------------------------------


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _positive(args, *names):
    for name in names:
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be at least 1")


def _read_templates(args) -> list[str]:
    texts = list(args.template or [])
    if args.templates:
        path = Path(args.templates)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        if path.suffix == ".json":
            texts.extend(json.loads(raw))
        else:
            texts.extend(line.strip() for line in raw.splitlines() if line.strip() and not line.lstrip().startswith("#"))
    return texts


def _learner_config(args) -> LearnerConfig:
    _need(args, "k", "ell")
    _positive(args, "threads")
    return LearnerConfig(k=args.k, ell=args.ell, q=args.q, q_star=args.q_star, r_star=args.r_star, q_t=args.q_t)


def _space(args, cfg: LearnerConfig):
    if args.space == "realized-types":
        return RealizedTypes(cfg.q_t, cfg.r_star)
    texts = _read_templates(args)
    if not texts:
        raise UsageError("an explicit space needs --template or --templates")
    return ExplicitFormulas.build(texts, cfg.r_star, cfg.ell)


def _emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _structure(args):
    _need(args, "structure")
    return load_structure_file(args.structure)


# -- subcommands -------------------------------------------------------------


def cmd_learn(args) -> int:
    s = _structure(args)
    _need(args, "train")
    T = load_training_file(args.train)
    T.validate(s)
    cfg = _learner_config(args)
    if T.k not in (None, cfg.k):
        raise UsageError(f"training tuples have length {T.k}, but --k is {cfg.k}")
    space = _space(args, cfg)
    oracle = LocalAccessOracle(s)
    if args.mode == "min-error":
        h = learn_min_error(oracle, T, space, cfg)
    else:
        h = learn_consistent(oracle, T, space, cfg)
    if isinstance(h, Reject):
        print(f"folearn: rejected: {h.reason}", file=sys.stderr)
        return EXIT_REJECT
    _emit(_dumps(hypothesis_to_doc(h)), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    s = _structure(args)
    _need(args, "hypothesis", "tuple")
    h = hypothesis_from_doc(json.loads(Path(args.hypothesis).read_text(encoding="utf-8")))
    for u in list(args.tuple) + list(h.params):
        s.check_element(u)
    print(hyp_value(LocalAccessOracle(s), h, tuple(args.tuple)))
    return EXIT_OK


def _target(args, s, cfg: LearnerConfig):
    if args.target:
        return hypothesis_from_doc(json.loads(Path(args.target).read_text(encoding="utf-8")))
    _need(args, "target_template")
    params = tuple(args.target_params) if args.target_params else None
    return plant_target(s, parse_formula(args.target_template), args.seed, cfg.r_star, params)


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        trials=args.trials,
        test_mode=args.test_mode,
        test_samples=args.test_samples,
        sample_size_rule=args.sample_size_rule,
        vc_c=args.vc_c,
        vc_value=args.vc_value,
        manual_t=args.manual_t,
        h_size=args.h_size,
        seed=args.seed,
    )


def _experiment(args, kind: str) -> int:
    from .pac import render_report

    s = _structure(args)
    cfg = _learner_config(args)
    ecfg = _experiment_config(args)
    if args.space != "explicit" and kind == "agnostic":
        raise UsageError("agnostic experiments need an explicit space")
    space = _space(args, cfg)
    target = _target(args, s, cfg)
    if kind == "pac":
        report = run_pac_experiment(s, target, UniformTuples(cfg.k), space, cfg, ecfg)
    else:
        dist = noisy_distribution(s, target, Fraction(args.noise), cfg.k)
        report = run_agnostic_experiment(s, dist, space, cfg, ecfg)
    _emit(render_report(report, args.format), args.report)
    wins = sum(t.success for t in report.trials)
    print(f"successes {wins}/{len(report.trials)} ({float(report.success_fraction):.6f})", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    _need(args, "n")
    spec = GenSpec(
        n=args.n,
        d_max=args.d_max,
        family=args.family,
        color_density=Fraction(args.color_density),
        seed=args.seed,
    )
    _emit(_dumps(structure_to_doc(gen_structure(spec))), args.out)
    return EXIT_OK


def cmd_vc(args) -> int:
    if args.concepts:
        concepts = json.loads(Path(args.concepts).read_text(encoding="utf-8"))
    else:
        s = _structure(args)
        _need(args, "k", "ell")
        templates = [parse_formula(t) for t in _read_templates(args)]
        concepts = enumerate_concept_bitvectors(s, templates, args.k, args.ell)
    print(vc_dimension_bruteforce(concepts, args.domain_limit))
    return EXIT_OK


def cmd_check(args) -> int:
    s = _structure(args)
    _need(args, "train")
    T = load_training_file(args.train)
    T.validate(s)
    cfg = _learner_config(args)
    args.space = "explicit"
    space = _space(args, cfg)
    candidates = None
    if args.candidates == "local":
        candidates = parameter_candidates(LocalAccessOracle(s), T, cfg)
    if args.mode == "min-error":
        rep = exhaustive_min_error(s, T, space, cfg.k, cfg.ell, candidates)
    else:
        rep = exhaustive_consistent(s, T, space, cfg.k, cfg.ell, candidates)
    doc = {
        "found": None if rep.found is None else hypothesis_to_doc(rep.found[0]),
        "candidates_checked": rep.candidates_checked,
        "min_error": f"{rep.min_error.numerator}/{rep.min_error.denominator}",
    }
    _emit(_dumps(doc), args.out)
    return EXIT_OK


COMMANDS = {
    "learn": cmd_learn,
    "eval": cmd_eval,
    "pac": lambda a: _experiment(a, "pac"),
    "agnostic": lambda a: _experiment(a, "agnostic"),
    "gen": cmd_gen,
    "vc": cmd_vc,
    "check": cmd_check,
}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"folearn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"folearn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
