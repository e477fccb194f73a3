"""Command line entry point: ``singkam {sigma,normalize,kam,verify-flow,check}``.

Exit codes: 0 success, 2 validation error, 3 computational failure. Errors
are written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, checks
from .arithmetic import DiophantineProfile
from .config import ConfigError, RunConfig, parse_vector
from .flow import BlowUp, drift_report, quadrature_drift, trajectory_csv
from .homological import Resonance
from .kam import (CapOverflow, ClassMembershipError, formal_normalize, kam_iterate, norm_csv, relative_difference,
                  transformed_integrals)
from .parser import CapExceeded, ParseError, parse_poly, print_poly
from .series import NonTerminating, mu

SCHEMA_VERSION = 1
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3


class Divergence(ArithmeticError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SINGKAM_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def _emit(body: dict, out: Path | None, name: str = "report.json"):
    body = {"schema_version": SCHEMA_VERSION, "timestamp": datetime.now(timezone.utc).isoformat(), **body}
    text = json.dumps(body, sort_keys=True, indent=1, default=_json_default)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text + "\n")
    print(text)


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _load(args) -> tuple[RunConfig, object]:
    cfg = RunConfig.from_file(args.config)
    H = parse_poly(cfg.hamiltonian, cfg.n, alpha=cfg.alpha, deg_cap=cfg.deg_cap, t_cap=cfg.t_cap)
    return cfg, H


def cmd_sigma(args):
    alpha = parse_vector(args.alpha)
    lower = None
    if args.lower:
        lower = RunConfig(n=len(alpha), alpha=alpha, lower_seq=args.lower, K=1).lower_values(args.kmax)
    prof = DiophantineProfile.compute(alpha, lower, args.kmax, args.norm)
    body = prof.to_json()
    body["witnesses"] = prof.witnesses
    _emit({"command": "sigma", "norm": args.norm, **body}, None)


def _dump_chain(out: Path, chain, prefix: str):
    out.mkdir(parents=True, exist_ok=True)
    for k, u in enumerate(chain.steps, start=1):
        parts = [f"# step {k}", "[generator]", print_poly(u.generator)]
        for i, a in enumerate(u.shift):
            parts += [f"[shift{i + 1}]", print_poly(a)]
        (out / f"{prefix}_u{k}.txt").write_text("\n".join(parts) + "\n")


def cmd_normalize(args):
    cfg, H = _load(args)
    chain, cert, records = formal_normalize(H, cfg.alpha, cfg.K, cfg.s0)
    out = Path(args.out) if args.out else None
    if out:
        _dump_chain(out, chain, "formal")
        (out / "normal_form.txt").write_text(print_poly(cert.final_normal_form) + "\n")
        (out / "norms.csv").write_text(norm_csv(records))
    _emit({"command": "normalize", "config": cfg.echo(), "steps": [r.to_json() for r in records],
           "certificate": cert.to_json(),
           "chain": [{"k": k + 1, "terms": len(u.generator), "max_imag": u.max_imag()}
                     for k, u in enumerate(chain.steps)]}, out)
    if not cert.passed:
        raise Divergence(f"certificate residual {cert.residual_report:.3g} above tolerance")


def cmd_kam(args):
    cfg, H = _load(args)
    lower = cfg.lower_values(cfg.K + 1)
    chain, state, cert = kam_iterate(H, cfg.alpha, lower, cfg.K, cfg.s0)
    body = {"command": "kam", "config": cfg.echo(), **state.to_json(), "certificate": cert.to_json()}
    if cfg.mode == "both":
        _, cert_f, _ = formal_normalize(H, cfg.alpha, cfg.K, cfg.s0)
        body["agreement"] = relative_difference(cert_f.final_normal_form, cert.final_normal_form)
    out = Path(args.out) if args.out else None
    if out:
        _dump_chain(out, chain, "kam")
        (out / "norms.csv").write_text(norm_csv(state.norm_log))
    _emit(body, out)
    if state.divergent:
        raise Divergence("residual increased between steps")


def cmd_verify_flow(args):
    cfg, H = _load(args)
    if cfg.flow is None:
        raise ConfigError("verify-flow needs a [flow] section")
    chain, cert, _ = formal_normalize(H, cfg.alpha, cfg.K, cfg.s0)
    Ks = transformed_integrals(chain, H)
    rep = drift_report(H, Ks, cfg.flow, keep_trajectory=bool(args.out))
    raw = drift_report(H, [mu(H, m) for m in range(H.n)], cfg.flow)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(trajectory_csv(rep.trajectory, Ks, cfg.flow.t_star, rep.lambda_star[0]))
    _emit({"command": "verify-flow", "config": cfg.echo(), "normalized": rep.to_json(), "raw": raw.to_json(),
           "normalized_quadrature": quadrature_drift(H, Ks, cfg.flow),
           "ratio": raw.max_drift(0) / max(rep.max_drift(0), 1e-300)}, out)


def cmd_check(args):
    seed = args.seed
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda c: c(seed), checks.ALL))
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit({"command": "check", "seed": seed, "threads": _threads(),
           "passed": sum(r.passed for r in results), "total": len(results),
           "results": [r.to_json() for r in results]}, None)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="singkam", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("sigma", help="small-divisor sequence of a frequency vector")
    s.add_argument("--alpha", required=True, help="comma list, e.g. 1,golden")
    s.add_argument("--kmax", type=int, default=4)
    s.add_argument("--norm", choices=["sup", "l1", "l2"], default="sup")
    s.add_argument("--lower", help="lower sequence: 'geometric c rho' or a comma list")
    s.set_defaults(func=cmd_sigma)
    for name, fn, text in [("normalize", cmd_normalize, "formal order-doubling normalisation"),
                           ("kam", cmd_kam, "analytic iteration with norm log"),
                           ("verify-flow", cmd_verify_flow, "drift of first integrals along the flow")]:
        c = sub.add_parser(name, help=text)
        c.add_argument("--config", required=True)
        c.add_argument("--out", help="directory for report, chain and CSV files")
        c.set_defaults(func=fn)
    c = sub.add_parser("check", help="run the property suite")
    c.add_argument("--seed", type=int, default=1234)
    c.set_defaults(func=cmd_check)
    return p


def _fail(code: int, exc: BaseException) -> int:
    body = {"schema_version": SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, Resonance):
        body["vector"] = list(exc.vector)
    print(json.dumps(body, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except (Resonance, NonTerminating, BlowUp, Divergence) as e:
        return _fail(EXIT_COMPUTATION, e)
    except (ConfigError, ParseError, CapExceeded, CapOverflow, ClassMembershipError, FileNotFoundError, ValueError) as e:
        return _fail(EXIT_VALIDATION, e)


if __name__ == "__main__":
    sys.exit(main())
