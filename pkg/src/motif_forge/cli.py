"""Command-line front end.

Subcommands: simulate (synthetic corpora), discover (full motif discovery),
rescue (single-column recovery), evaluate (PWM-vs-PWM similarity).

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numerical abort.
Progress goes to stderr; files go to the output directory; only `evaluate`
prints its report on stdout. Option precedence for discover/rescue:
built-in defaults < JSON config (--config) < environment (MOTIF_FORGE_*)
< command-line flags. Every run writes a run.json that reproduces it via
--config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .agent import Hyperparams, NumericalAbort, metrics_to_csv, run_discovery, run_rescue
from .datasets import DatasetSpec, generate_dataset
from .motif import Pwm, PwmFormatError, consensus_iupac, pwm_similarity, read_pwm, write_pwm
from .neural import save_checkpoint
from .seqcore import FastaError, parse_fasta, write_fasta

ENV_PREFIX = "MOTIF_FORGE_"

# keys shared by discover and rescue; values are the built-in defaults
RUN_DEFAULTS: dict[str, object] = {
    "episodes": 10000,
    "steps": 10,
    "memory": 1000,
    "epsilon": 0.01,
    "tau": 0.1,
    "order": 1,
    "discount": 0.9,
    "lr_actor": 1e-3,
    "lr_critic": 1e-3,
    "batch": 32,
    "warmup": 100,
    "seed": 0,
    "net_sequences": 2,
    "concentration": 0.3,
    "ou_theta": 0.15,
    "ou_sigma_start": 0.3,
    "ou_sigma_end": 0.01,
    "align_pseudo": 1e-6,
    "bg_pseudocount": 1e-6,
    "threads": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; we want 1
        raise UsageError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def load_pwm_file(path: str | Path, fmt: str = "auto") -> Pwm:
    text = Path(path).read_text()
    if fmt == "auto":
        fmt = "meme_minimal" if text.lstrip().startswith("MEME version") else "jaspar"
    try:
        return read_pwm(text, fmt)
    except PwmFormatError as exc:
        raise PwmFormatError(f"{path}: {exc}") from exc


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def resolve_config(flag_values: dict, config_path: str | None, environ=None) -> dict:
    """Merge defaults < config file < environment < explicit flags."""
    environ = os.environ if environ is None else environ
    resolved = dict(RUN_DEFAULTS)
    extra_keys = ("input", "motif", "motif_length", "position", "budget",
                  "n_sequences", "length", "pwm_format")
    for key in extra_keys:
        resolved.setdefault(key, None)
    if config_path:
        payload = json.loads(Path(config_path).read_text())
        if isinstance(payload, dict) and "config" in payload:
            payload = payload["config"]
        unknown = set(payload) - set(resolved)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(payload)
    for key in resolved:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            like = RUN_DEFAULTS.get(key, "")
            resolved[key] = _coerce(environ[env_key], like if like is not None else "")
    for key, value in flag_values.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _hyper_from_config(cfg: dict, motif_length: int, episodes: int | None = None) -> Hyperparams:
    return Hyperparams(
        motif_length=motif_length,
        episodes=int(cfg["episodes"] if episodes is None else episodes),
        steps=int(cfg["steps"]),
        memory_capacity=int(cfg["memory"]),
        epsilon=float(cfg["epsilon"]),
        tau=float(cfg["tau"]),
        order=int(cfg["order"]),
        discount=float(cfg["discount"]),
        lr_actor=float(cfg["lr_actor"]),
        lr_critic=float(cfg["lr_critic"]),
        batch=int(cfg["batch"]),
        warmup_episodes=int(cfg["warmup"]),
        seed=int(cfg["seed"]),
        net_sequences=int(cfg["net_sequences"]) or None,
        concentration=float(cfg["concentration"]),
        ou_theta=float(cfg["ou_theta"]),
        ou_sigma_start=float(cfg["ou_sigma_start"]),
        ou_sigma_end=float(cfg["ou_sigma_end"]),
        align_pseudo=float(cfg["align_pseudo"]),
        bg_pseudocount=float(cfg["bg_pseudocount"]),
        threads=int(cfg["threads"]),
    )


def _header(command: str, cfg: dict) -> str:
    shown = " ".join(
        f"{k}={cfg[k]}" for k in ("episodes", "steps", "memory", "epsilon", "tau",
                                  "order", "discount", "lr_actor", "lr_critic",
                                  "batch", "warmup", "seed")
    )
    return f"motif-forge {command} v{__version__}: {shown}"


def _write_run_json(outdir: Path, command: str, cfg: dict) -> None:
    payload = {"command": command, "config": cfg}
    (outdir / "run.json").write_text(json.dumps(payload, indent=2) + "\n")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (a previous run.json works)")
    for key in ("episodes", "steps", "memory", "batch", "warmup", "seed",
                "net_sequences", "order", "threads"):
        parser.add_argument(f"--{key.replace('_', '-')}", type=int, default=None, dest=key)
    for key in ("epsilon", "tau", "discount", "lr_actor", "lr_critic", "concentration",
                "ou_theta", "ou_sigma_start", "ou_sigma_end", "align_pseudo",
                "bg_pseudocount"):
        parser.add_argument(f"--{key.replace('_', '-')}", type=float, default=None, dest=key)


def cmd_simulate(args) -> int:
    motif = load_pwm_file(args.motif, args.pwm_format)
    kind = args.kind.replace("-", "_")
    spec = DatasetSpec(
        kind=kind,
        n_pos=args.n_pos,
        n_neg=args.n_neg if kind == "unbalanced" else 0,
        length=args.length,
        motif=motif,
        seed=args.seed,
        placement=args.placement,
        strand=args.strand,
    )
    dataset = generate_dataset(spec)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "data.fasta").write_text(write_fasta(dataset))
    (outdir / "data.json").write_text(spec.to_json())
    _log(f"wrote {len(dataset)} sequences to {outdir / 'data.fasta'}")
    return 0


def cmd_discover(args) -> int:
    flag_values = {k: getattr(args, k) for k in RUN_DEFAULTS if hasattr(args, k)}
    flag_values["input"] = args.input
    flag_values["motif_length"] = args.motif_length
    cfg = resolve_config(flag_values, args.config)
    if not cfg.get("input"):
        raise UsageError("an input FASTA is required (--input or config)")
    if not cfg.get("motif_length"):
        raise UsageError("--motif-length is required")
    if int(cfg["motif_length"]) < 4:
        raise UsageError("--motif-length must be >= 4")
    _log(_header("discover", cfg))

    seq_set = parse_fasta(Path(cfg["input"]).read_text())
    hyper = _hyper_from_config(cfg, int(cfg["motif_length"]))
    result = run_discovery(seq_set, hyper)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "best.meme").write_text(write_pwm(result.best_pwm, "meme_minimal", "discovered"))
    (outdir / "best.jaspar").write_text(write_pwm(result.best_pwm, "jaspar", "discovered"))
    (outdir / "consensus.txt").write_text(consensus_iupac(result.best_pwm) + "\n")
    (outdir / "metrics.csv").write_text(metrics_to_csv(result.metrics))
    save_checkpoint(outdir / "actor.ckpt", result.networks.actor.state_arrays())
    save_checkpoint(outdir / "critic.ckpt", result.networks.critic.state_arrays())
    _write_run_json(outdir, "discover", cfg)
    _log(
        f"best reward {result.best_reward:.6f} "
        f"(best seen {result.best_seen_reward:.6f}, final actor {result.final_reward:.6f})"
    )
    _log(f"consensus {consensus_iupac(result.best_pwm)}; artifacts in {outdir}")
    return 0


def cmd_rescue(args) -> int:
    flag_values = {k: getattr(args, k) for k in RUN_DEFAULTS if hasattr(args, k)}
    flag_values.update(
        motif=args.motif,
        position=args.position,
        budget=args.budget,
        n_sequences=args.n_sequences,
        length=args.length,
        pwm_format=args.pwm_format,
    )
    cfg = resolve_config(flag_values, args.config)
    if not cfg.get("motif"):
        raise UsageError("a known motif PWM file is required (--motif)")
    cfg.setdefault("budget", 10000)
    if cfg.get("budget") is None:
        cfg["budget"] = 10000
    if cfg.get("n_sequences") is None:
        cfg["n_sequences"] = 100
    if cfg.get("length") is None:
        cfg["length"] = 100
    known = load_pwm_file(cfg["motif"], cfg.get("pwm_format") or "auto")
    if args.all:
        positions = list(range(known.width))
    else:
        if cfg.get("position") is None:
            raise UsageError("--position or --all is required")
        pos = int(cfg["position"])
        if not 0 <= pos < known.width:
            raise UsageError(f"position {pos} out of range for motif width {known.width}")
        positions = [pos]

    steps = int(cfg["steps"])
    episodes = max(0, int(cfg["budget"]) // steps - int(cfg["warmup"]))
    _log(_header("rescue", cfg) + f" budget={cfg['budget']} positions={positions}")

    spec = DatasetSpec(
        kind="full_pos",
        n_pos=int(cfg["n_sequences"]),
        n_neg=0,
        length=int(cfg["length"]),
        motif=known,
        seed=int(cfg["seed"]),
    )
    dataset = generate_dataset(spec)
    hyper = _hyper_from_config(cfg, known.width, episodes=episodes)

    rows = ["position,l1,pass,rec_a,rec_c,rec_g,rec_t,true_a,true_c,true_g,true_t"]
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for pos in positions:
        outcome = run_rescue(known, pos, dataset, hyper)
        truth = known.matrix[pos]
        l1 = float(np.abs(outcome.column - truth).sum())
        verdict = "pass" if l1 <= 0.2 else "fail"
        rec = ",".join(f"{v:.6f}" for v in outcome.column)
        tru = ",".join(f"{v:.6f}" for v in truth)
        rows.append(f"{pos},{l1:.6f},{verdict},{rec},{tru}")
        _log(f"position {pos}: L1={l1:.4f} ({verdict})")
    (outdir / "rescue.csv").write_text("\n".join(rows) + "\n")
    _write_run_json(outdir, "rescue", cfg)
    _log(f"report written to {outdir / 'rescue.csv'}")
    return 0


def cmd_evaluate(args) -> int:
    a = load_pwm_file(args.pwm_a, args.pwm_format)
    b = load_pwm_file(args.pwm_b, args.pwm_format)
    report = pwm_similarity(a, b, args.min_overlap)
    print(
        f"score={report.score:.6f} offset={report.best_offset} "
        f"strand={report.best_strand} overlap={report.overlap}"
    )
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "a.meme").write_text(write_pwm(a, "meme_minimal", "pwm_a"))
        (outdir / "b.meme").write_text(write_pwm(b, "meme_minimal", "pwm_b"))
        _log(f"wrote MEME-format copies to {outdir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="motif-forge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"motif-forge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset from a motif")
    p_sim.add_argument("--motif", required=True, help="PWM file (JASPAR or MEME minimal)")
    p_sim.add_argument("--pwm-format", default="auto", choices=("auto", "jaspar", "meme_minimal"))
    p_sim.add_argument("--kind", required=True, choices=("full-pos", "unbalanced"))
    p_sim.add_argument("--n-pos", type=int, default=300)
    p_sim.add_argument("--n-neg", type=int, default=200)
    p_sim.add_argument("--length", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--placement", default="central", choices=("central", "random"))
    p_sim.add_argument("--strand", default="forward", choices=("forward", "random"))
    p_sim.add_argument("-o", "--output", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_disc = sub.add_parser("discover", help="run motif discovery on a FASTA file")
    p_disc.add_argument("--input", help="input FASTA")
    p_disc.add_argument("--motif-length", type=int, default=None, dest="motif_length")
    p_disc.add_argument("-o", "--output", required=True)
    _add_run_options(p_disc)
    p_disc.set_defaults(func=cmd_discover)

    p_res = sub.add_parser("rescue", help="single-column recovery test for a known motif")
    p_res.add_argument("--motif", help="known motif PWM file")
    p_res.add_argument("--pwm-format", default=None, choices=("auto", "jaspar", "meme_minimal"),
                       dest="pwm_format")
    p_res.add_argument("--position", type=int, default=None)
    p_res.add_argument("--all", action="store_true", help="test every motif position")
    p_res.add_argument("--budget", type=int, default=None, help="total environment steps")
    p_res.add_argument("--n-sequences", type=int, default=None, dest="n_sequences")
    p_res.add_argument("--length", type=int, default=None)
    p_res.add_argument("-o", "--output", required=True)
    _add_run_options(p_res)
    p_res.set_defaults(func=cmd_rescue)

    p_eval = sub.add_parser("evaluate", help="similarity between two PWM files")
    p_eval.add_argument("pwm_a")
    p_eval.add_argument("pwm_b")
    p_eval.add_argument("--pwm-format", default="auto", choices=("auto", "jaspar", "meme_minimal"))
    p_eval.add_argument("--min-overlap", type=int, default=4)
    p_eval.add_argument("-o", "--output", default=None)
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return 1
    except (FastaError, PwmFormatError, FileNotFoundError, IsADirectoryError,
            PermissionError, KeyError, json.JSONDecodeError, ValueError) as exc:
        _log(f"input error: {exc}")
        return 2
    except NumericalAbort as exc:
        _log(f"numerical abort: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
