"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 physicality error,
4 scale-limit error, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import GBSLabError
from .pipeline import ALL_STAGES, Pipeline, _clean, verify

STAGES = {
    "unroll": ("unroll",),
    "simulate": ("unroll", "state"),
    "sample": ("state", "samplers"),
    "mps": ("state", "mps"),
    "cost": ("cost",),
    "run": ALL_STAGES,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gbslab", description="Gaussian boson sampling simulation and validation")
    p.add_argument("--version", action="version", version=f"gbslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--config", required=True, help="experiment configuration (YAML)")
        if output:
            sp.add_argument("--output", help="output directory (overrides the config)")
        sp.add_argument("--threads", type=int, help="worker threads for sampling")

    for name, help_ in [
        ("unroll", "unroll the circuit into a transfer matrix"),
        ("simulate", "build the ground-truth Gaussian state"),
        ("mps", "decompose, build MPS and sample"),
        ("cost", "runtime and speedup estimate"),
        ("run", "execute the full pipeline"),
    ]:
        common(sub.add_parser(name, help=help_))
    sp = sub.add_parser("sample", help="draw samples from the configured samplers")
    common(sp)
    sp.add_argument("--sampler", action="append", help="restrict to this sampler name or kind (repeatable)")

    sp = sub.add_parser("validate", help="validation battery on sample files")
    common(sp)
    sp.add_argument("--samples", action="append", required=True, help="sample file (repeatable)")

    sp = sub.add_parser("verify", help="check a sample file against its config and recompute metrics")
    common(sp, output=False)
    sp.add_argument("--samples", required=True, help="sample file")

    sp = sub.add_parser("report", help="print a finished run's summary as a table")
    sp.add_argument("--output", required=True, help="run output directory")
    return p


def _print_table(summary: dict) -> None:
    cols = ["K", "delta_k", "wd", "delta_h", "sigma", "epsilon", "N_eff"]
    print("experiment".ljust(24) + "".join(c.rjust(12) for c in cols))
    for name, m in sorted(summary.get("experiments", {}).items()):
        cells = []
        for c in cols:
            v = m.get(c)
            cells.append(("-" if v is None else f"{v:.5g}").rjust(12))
        print(name.ljust(24) + "".join(cells))
    cost = summary.get("cost")
    if cost:
        print(
            f"cost: log10 years {cost['log10_years']:.2f}, log10 speedup {cost['log10_speedup']:.2f} "
            f"(baseline {cost['baseline']})"
        )


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            summary = json.loads((Path(args.output) / "summary.json").read_text())
            _print_table(summary)
            return 0
        cfg = load_config(args.config)
        if args.command == "verify":
            print(json.dumps(verify(args.samples, cfg), sort_keys=True, indent=2))
            return 0
        if args.command == "validate":
            pipe = Pipeline(cfg, args.output, args.threads)
            out = {}
            for path in args.samples:
                out[Path(path).stem] = verify(path, cfg, strict=False)
            pipe.out.mkdir(parents=True, exist_ok=True)
            text = json.dumps(_clean(out), sort_keys=True, indent=2) + "\n"
            (pipe.out / "validation.json").write_text(text)
            print(text, end="")
            return 0
        pipe = Pipeline(cfg, args.output, args.threads)
        summary = pipe.run(STAGES[args.command], getattr(args, "sampler", None))
        if summary:
            _print_table(summary)
        print(f"outputs written to {pipe.out}")
        return 0
    except GBSLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (NotImplementedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
