"""``tbrkern``: batch front end for kernelization, exact distance, verification and tight instances.

Exit codes:
    0  success
    1  input could not be parsed
    2  a kernel invariant was breached
    3  a verification suite failed
    4  usage or configuration error
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .kernel import KernelInvariantError, kernel_distance, kernelize
from .maf import EXCEEDS, exact_tbr_distance
from .phylo import NewickError, format_instance, parse_instance
from .reductions_classic import RULES, ReductionError
from .reductions_new import CATALOG, EligibilityMode
from .suites import SUITES, run_suites, thread_count
from .tight import TightSearchError, tight_instance

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVARIANT = 2
EXIT_SUITE = 3
EXIT_USAGE = 4


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path | None = None
    output: Path | None = None
    k_max: int = 8
    seed: int = 0
    exact_eligibility: bool = False
    json: bool = False
    suites: tuple[str, ...] = SUITES
    skip_rules: tuple[str, ...] = ()
    k: int | None = None

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("--k-max must be non-negative")

    @property
    def mode(self) -> EligibilityMode:
        return EligibilityMode(exact=True) if self.exact_eligibility else CATALOG


def _write(path: Path | None, text: str) -> None:
    if path is None:
        return
    path.write_text(text)


def _read_pair(cfg: RunConfig):
    text = sys.stdin.read() if cfg.input is None or str(cfg.input) == "-" else cfg.input.read_text()
    return parse_instance(text)


def cmd_kernelize(cfg: RunConfig) -> int:
    t1, t2 = _read_pair(cfg)
    res = kernelize(t1, t2, mode=cfg.mode, skip=cfg.skip_rules)
    payload = res.to_json()
    if cfg.output is not None:
        _write(cfg.output, format_instance(res.T_r, res.Tprime_r))
        _write(cfg.output.with_name(cfg.output.name + ".json"), res.dumps() + "\n")
    if cfg.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"kernel_taxa={res.kernel_taxa} offset={res.offset}")
    return EXIT_OK


def cmd_distance(cfg: RunConfig) -> int:
    t1, t2 = _read_pair(cfg)
    res = kernelize(t1, t2, mode=cfg.mode, skip=cfg.skip_rules)
    budget = cfg.k_max - res.offset
    if budget < 0:
        d = None
    else:
        d = kernel_distance(res, budget)
    if d is None:
        payload = {"result": EXCEEDS, "k_max": cfg.k_max}
        text = EXCEEDS
    else:
        total = d + res.offset
        payload = {"distance": total, "kernel_distance": d, "offset": res.offset,
                   "kernel": [line for line in format_instance(res.T_r, res.Tprime_r).split()]}
        if res.kernel_taxa >= 4:
            payload["kernel_certificate"] = exact_tbr_distance(res.T_r, res.Tprime_r, d).to_json()
        payload["events"] = [e.to_json() for e in res.trace]
        text = str(total)
    if cfg.output is not None:
        _write(cfg.output, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(json.dumps(payload, sort_keys=True) if cfg.json else text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = run_suites(cfg.suites, seed=cfg.seed, skip=cfg.skip_rules)
    report = [r.to_json() for r in results]
    if cfg.output is not None:
        _write(cfg.output, json.dumps(report, sort_keys=True, indent=2) + "\n")
    if cfg.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for r in results:
            print(r.line())
    failed = [r for r in results if not r.passed]
    for r in failed:
        worst = r.minimal_failure()
        if worst is not None:
            print(f"counterexample for {r.name}: {worst.reason}", file=sys.stderr)
            sys.stderr.write(format_instance(worst.t1, worst.t2))
    return EXIT_SUITE if failed else EXIT_OK


def cmd_generate_tight(cfg: RunConfig) -> int:
    if cfg.k is None:
        raise ValueError("generate-tight needs --k")
    inst = tight_instance(cfg.k)
    pair = format_instance(inst.T, inst.Tprime)
    cert = json.dumps(inst.to_json(), sort_keys=True)
    if cfg.output is not None:
        _write(cfg.output, pair)
        _write(cfg.output.with_name(cfg.output.name + ".json"), cert + "\n")
    else:
        sys.stdout.write(pair)
    if cfg.json:
        print(cert)
    else:
        print(f"k={inst.k} taxa={len(inst.T)} lf_T={inst.lf_T} lf_Tprime={inst.lf_Tprime}",
              file=sys.stderr if cfg.output is None else sys.stdout)
    return EXIT_OK


COMMANDS = {
    "kernelize": cmd_kernelize,
    "distance": cmd_distance,
    "verify": cmd_verify,
    "generate-tight": cmd_generate_tight,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tbrkern", description="TBR distance kernelization toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--output", type=Path, help="write machine-readable results here")
        sp.add_argument("--json", action="store_true", help="print JSON instead of a summary line")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--exact-eligibility", action="store_true",
                        help="decide eligibility by forest enumeration on small instances")
        sp.add_argument("--skip-rule", action="append", default=[], choices=RULES, dest="skip_rules",
                        help="disable a reduction (fault injection)")

    for name in ("kernelize", "distance"):
        sp = sub.add_parser(name)
        sp.add_argument("--input", type=Path, help="two-line Newick file, '-' or absent for stdin")
        sp.add_argument("--k-max", type=int, default=8)
        common(sp)
    sp = sub.add_parser("verify")
    sp.add_argument("--suites", default=",".join(SUITES),
                    help=f"comma-separated subset of {','.join(SUITES)}")
    common(sp)
    sp = sub.add_parser("generate-tight")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", type=Path, dest="output")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(seed=0, exact_eligibility=False, skip_rules=[])
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    suites: tuple[str, ...] = SUITES
    if getattr(ns, "suites", None):
        suites = tuple(s.strip() for s in ns.suites.split(",") if s.strip())
        unknown = [s for s in suites if s not in SUITES]
        if unknown:
            raise ValueError(f"unknown suites {unknown}; choose from {','.join(SUITES)}")
    return RunConfig(
        command=ns.command,
        input=getattr(ns, "input", None),
        output=getattr(ns, "output", None),
        k_max=getattr(ns, "k_max", 8),
        seed=ns.seed,
        exact_eligibility=ns.exact_eligibility,
        json=ns.json,
        suites=suites,
        skip_rules=tuple(ns.skip_rules),
        k=getattr(ns, "k", None),
    )


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        thread_count()
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except NewickError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (KernelInvariantError, ReductionError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except TightSearchError as exc:
        print(f"tight instance search failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
