"""Command-line front-end: landscapes, angle optimization, verification, fitting.

Every command writes its outputs plus a ``manifest.json`` recording the full
configuration, library version, RNG algorithm, and SHA-256 digests of every
output file, so runs can be reproduced and validated byte-for-byte (the
manifest itself carries the only timestamp).

Exit codes: 0 success, 2 validation/parse error, 3 size cap exceeded,
4 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, closed_form, finite_n, model, optimizer, simulator, verify
from .errors import CapExceededError, ValidationError

__all__ = ["main"]


def _parse_grid(text: str, what: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ValidationError(f"--{what} expects min:max:count, got {text!r}")
    if count < 1:
        raise ValidationError(f"--{what} needs count >= 1, got {count}")
    return np.linspace(lo, hi, count)


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"--{what} expects a comma list of reals, got {text!r}")


def _parse_d_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(text)]
    except ValueError:
        raise ValidationError(f"--pure-d expects D or LO..HI, got {text!r}")


def _specs_from_args(args) -> list[tuple[str, model.MixtureSpec]]:
    chosen = [
        name
        for name, val in (
            ("--sk", getattr(args, "sk", False)),
            ("--sigmas", getattr(args, "sigmas", None)),
            ("--cs", getattr(args, "cs", None)),
            ("--pure-d", getattr(args, "pure_d", None)),
        )
        if val
    ]
    if len(chosen) != 1:
        raise ValidationError(
            f"exactly one of --sk/--sigmas/--cs/--pure-d is required, got {chosen or 'none'}"
        )
    if getattr(args, "sk", False):
        return [("sk", model.make_mixture_spec(2, [0.0, 1.0]))]
    if getattr(args, "sigmas", None):
        sig = _parse_float_list(args.sigmas, "sigmas")
        return [("mix", model.make_mixture_spec(len(sig), sig))]
    if getattr(args, "cs", None):
        cs = _parse_float_list(args.cs, "cs")
        return [("mix", model.from_mixture_function(len(cs), cs))]
    return [(f"pure{d}", optimizer.pure_d_spec(d)) for d in _parse_d_range(args.pure_d)]


def _thread_count(args) -> int:
    env = os.environ.get("MSQAOA_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"MSQAOA_THREADS must be an integer, got {env!r}")
    return max(1, getattr(args, "threads", 1) or 1)


class _Outputs:
    """Tracks written files; removes partial outputs on failure."""

    def __init__(self, outdir: str) -> None:
        self.dir = Path(outdir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def write_text(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.written.append(path)
        return path

    def cleanup(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except OSError:
                pass

    def manifest(self, command: str, config: dict, seeds=()) -> Path:
        entries = []
        for path in self.written:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            entries.append({"path": path.name, "sha256": digest})
        doc = {
            "command": command,
            "config": config,
            "seeds": list(seeds),
            "version": __version__,
            "rng_algorithm": model.RNG_ALGORITHM,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "outputs": entries,
        }
        path = self.dir / "manifest.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        return path


def _grid_csv(betas: np.ndarray, gammas: np.ndarray, values: np.ndarray) -> str:
    lines = ["beta," + ",".join(repr(float(g)) for g in gammas)]
    for bi, b in enumerate(betas):
        row = ",".join(repr(float(v)) for v in values[bi])
        lines.append(f"{float(b)!r},{row}")
    return "\n".join(lines) + "\n"


def _infinite_grid(spec, betas, gammas) -> np.ndarray:
    out = np.empty((len(betas), len(gammas)))
    for bi, b in enumerate(betas):
        for gi, g in enumerate(gammas):
            out[bi, gi] = closed_form.energy_sigma_form(
                spec, closed_form.Angles(float(b), float(g))
            )
    return out


def _finite_grid(spec, betas, gammas, n, budget, threads) -> np.ndarray:
    def row(b: float) -> list[float]:
        return [
            finite_n.sketch_moments(
                spec, closed_form.Angles(float(b), float(g)), n, budget=budget
            ).first
            for g in gammas
        ]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, betas))
    else:
        rows = [row(b) for b in betas]
    return np.array(rows)


def cmd_landscape(args) -> int:
    specs = _specs_from_args(args)
    betas = _parse_grid(args.beta, "beta")
    gammas = _parse_grid(args.gamma, "gamma")
    threads = _thread_count(args)
    outputs = _Outputs(args.out)
    seeds = []
    try:
        for label, spec in specs:
            for mode in args.mode:
                parts = mode.split(":")
                if parts[0] == "infinite" and len(parts) == 1:
                    values = _infinite_grid(spec, betas, gammas)
                    name = f"landscape_{label}_infinite.csv"
                elif parts[0] == "finite" and len(parts) == 2:
                    n = int(parts[1])
                    values = _finite_grid(spec, betas, gammas, n, args.budget, threads)
                    name = f"landscape_{label}_finite_n{n}.csv"
                elif parts[0] == "instance" and len(parts) == 3:
                    n, seed = int(parts[1]), int(parts[2])
                    inst = model.sample_instance(spec, n, seed)
                    values = simulator.landscape_instance(inst, betas, gammas)
                    name = f"landscape_{label}_instance_n{n}_seed{seed}.csv"
                    seeds.append(seed)
                else:
                    raise ValidationError(
                        f"--mode must be infinite, finite:N or instance:N:SEED, got {mode!r}"
                    )
                outputs.write_text(name, _grid_csv(betas, gammas, values))
        outputs.manifest(
            "landscape",
            {
                "specs": {label: list(s.sigmas) for label, s in specs},
                "beta": args.beta,
                "gamma": args.gamma,
                "modes": args.mode,
                "budget": args.budget,
                "threads": threads,
            },
            seeds=seeds,
        )
    except BaseException:
        outputs.cleanup()
        raise
    print(f"wrote {len(outputs.written)} grid file(s) to {outputs.dir}")
    return 0


def cmd_optimize(args) -> int:
    specs = _specs_from_args(args)  # validates flag exclusivity
    outputs = _Outputs(args.out)
    try:
        if args.pure_d:
            rows = [
                (r.d, r.beta, r.gamma, r.value)
                for r in optimizer.optimal_angle_curve(_parse_d_range(args.pure_d))
            ]
        else:
            [(label, spec)] = specs
            opt = optimizer.optimize_closed_form(spec)
            rows = [(spec.d, opt.angles.beta, opt.angles.gamma, opt.value)]
        lines = ["d,beta,gamma,value"]
        for d, b, g, v in rows:
            lines.append(f"{d},{b!r},{g!r},{v!r}")
        outputs.write_text("optimum.csv", "\n".join(lines) + "\n")
        config = {
            "pure_d": args.pure_d,
            "sigmas": args.sigmas,
            "cs": args.cs,
            "sk": args.sk,
        }
        for line in lines:
            print(line)
        if args.ground_state is not None:
            factor = optimizer.approximation_factor(rows[-1][3], args.ground_state)
            config["ground_state_per_spin"] = args.ground_state
            config["approximation_factor"] = factor
            print(f"approximation_factor,{factor!r}")
        outputs.manifest("optimize", config)
    except BaseException:
        outputs.cleanup()
        raise
    return 0


def cmd_verify(args) -> int:
    report = verify.run(args.level)
    outputs = _Outputs(args.out)
    try:
        for res in report.results:
            status = "PASS" if res.passed else "FAIL"
            print(f"[{status}] {res.name} ({res.seconds:.2f}s)")
        outputs.write_text("verify_report.json", report.to_json() + "\n")
        outputs.manifest("verify", {"level": args.level, "passed": report.passed})
    except BaseException:
        outputs.cleanup()
        raise
    print(f"verify {args.level}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 4


def cmd_fit_spec(args) -> int:
    inst = model.read_instance(args.instance_file)
    fit = model.estimate_spec(inst)
    outputs = _Outputs(args.out)
    try:
        doc = {
            "d": fit.spec.d,
            "sigmas": list(fit.spec.sigmas),
            "warnings": list(fit.warnings),
        }
        outputs.write_text("fitted_spec.json", json.dumps(doc, indent=2) + "\n")
        outputs.manifest("fit-spec", {"instance_file": str(args.instance_file)})
    except BaseException:
        outputs.cleanup()
        raise
    print("sigmas:", ",".join(repr(s) for s in fit.spec.sigmas))
    for warning in fit.warnings:
        print("warning:", warning)
    return 0


def cmd_sample(args) -> int:
    specs = _specs_from_args(args)
    if len(specs) != 1:
        raise ValidationError("sample needs exactly one model, not a --pure-d range")
    [(label, spec)] = specs
    inst = model.sample_instance(spec, args.n, args.seed)
    outputs = _Outputs(args.out)
    try:
        outputs.write_text(f"instance_{label}_n{args.n}_seed{args.seed}.txt",
                           model.instance_to_text(inst))
        outputs.manifest(
            "sample",
            {"spec": list(spec.sigmas), "n": args.n, "seed": args.seed},
            seeds=[args.seed],
        )
    except BaseException:
        outputs.cleanup()
        raise
    print(f"wrote instance to {outputs.written[0]}")
    return 0


def _add_spec_flags(sub, include_sk=True) -> None:
    sub.add_argument("--sigmas", help="comma list of per-degree standard deviations")
    sub.add_argument("--cs", help="comma list of mixture coefficients c_q")
    sub.add_argument("--pure-d", help="pure d-spin model(s): D or LO..HI")
    if include_sk:
        sub.add_argument("--sk", action="store_true",
                         help="standard two-body model (sigma_2 = 1)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msqaoa",
        description="Depth-1 QAOA energy per spin on mixed-spin SK models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("landscape", help="emit (beta, gamma) energy grids as CSV")
    _add_spec_flags(p)
    p.add_argument("--beta", default=f"{-math.pi/4}:{math.pi/4}:65",
                   help="beta grid min:max:count")
    p.add_argument("--gamma", default="-1.5:1.5:65", help="gamma grid min:max:count")
    p.add_argument("--mode", action="append", default=None,
                   help="infinite | finite:N | instance:N:SEED (repeatable)")
    p.add_argument("--budget", type=int, default=finite_n.DEFAULT_BUDGET,
                   help="finite-n sketch-sum size cap")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads (MSQAOA_THREADS overrides)")
    p.add_argument("--out", default="msqaoa_out", help="output directory")
    p.set_defaults(func=cmd_landscape)

    p = subs.add_parser("optimize", help="find optimal angles for a model")
    _add_spec_flags(p)
    p.add_argument("--ground-state", type=float, default=None,
                   help="reference ground-state energy per spin (negative)")
    p.add_argument("--out", default="msqaoa_out", help="output directory")
    p.set_defaults(func=cmd_optimize)

    p = subs.add_parser("verify", help="run the verification suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--out", default="msqaoa_out", help="output directory")
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("fit-spec", help="estimate per-degree sigmas from an instance file")
    p.add_argument("instance_file")
    p.add_argument("--out", default="msqaoa_out", help="output directory")
    p.set_defaults(func=cmd_fit_spec)

    p = subs.add_parser("sample", help="sample a problem instance to a text file")
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of spins")
    p.add_argument("--seed", type=int, default=0, help="reproducibility seed")
    p.add_argument("--out", default="msqaoa_out", help="output directory")
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "mode", None) is not None or args.command == "landscape":
        if getattr(args, "mode", None) is None:
            args.mode = ["infinite"]
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
