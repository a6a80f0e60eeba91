"""Command-line front end: ``cfgd check|stratify|encode|compile|eval|provenance|translate|oracle``.

Exit codes: 0 success (``eval``: accepted), 1 ``eval`` rejected or ``check``
found violations, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from . import datalog
from .cycluit import export_cycluit
from .engine import ConformanceWarning, PipelineConfig, evaluate, query_provenance
from .errors import CfgdError
from .oracle import brute_provenance
from .relational import parse_instance
from .satwa import compile as compile_program
from .satwa import export_satwa
from .treewidth import decompose_minfill, encode, read_pace

log = logging.getLogger("cfgd")


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _program(args):
    return datalog.parse_program(_read(args.program))


def _instance(args):
    return parse_instance(_read(args.instance))


def _td(args):
    if not getattr(args, "td", None):
        return None
    mapping = _read(args.mapping) if getattr(args, "mapping", None) else None
    return read_pace(_read(args.td), mapping)


def _config(args) -> PipelineConfig:
    return PipelineConfig(treewidth=args.treewidth, decomposition=_td(args), fallback=args.fallback)


# -- commands ---------------------------------------------------------------


def cmd_check(args) -> int:
    p = _program(args)
    cfg, gn = datalog.check_cfg(p), datalog.check_gn(p)
    strata = datalog.stratify(p)
    print(f"rules: {len(p.rules)}")
    print(f"body_size: {datalog.body_size(p)}")
    print(f"strata: {max(strata.values())}")
    print(f"recursive: {'yes' if datalog.is_recursive(p) else 'no'}")
    print(f"cfg: {'ok' if cfg.ok else 'violated'}")
    if not cfg.ok:
        print("  " + str(cfg).replace("\n", "\n  "))
    print(f"gn: {'ok' if gn.ok else 'violated'}")
    if not gn.ok:
        print("  " + str(gn).replace("\n", "\n  "))
    return 0 if cfg.ok and gn.ok else 1


def cmd_stratify(args) -> int:
    p = _program(args)
    strata = datalog.stratify(p)
    if args.strata:
        _emit(args, datalog.format_strata(strata))
    else:
        by: dict = {}
        for rel, s in strata.items():
            by.setdefault(s, []).append(rel)
        _emit(args, "".join(f"stratum {s}: {' '.join(sorted(by[s]))}\n" for s in sorted(by)))
    return 0


def cmd_encode(args) -> int:
    inst = _instance(args)
    td = _td(args) or decompose_minfill(inst)
    enc = encode(inst, td, args.treewidth)
    _emit(args, enc.to_json())
    return 0


def cmd_compile(args) -> int:
    p = _program(args)
    inst = _instance(args)
    td = _td(args) or decompose_minfill(inst)
    enc = encode(inst, td, args.treewidth)
    a = compile_program(p, enc.k)
    # eager export over the labels that occur in this encoding
    labels = sorted({(enc.d[w], enc.facts[w]) for w in range(len(enc.d))}, key=repr)
    _emit(args, export_satwa(a, labels))
    return 0


def cmd_eval(args) -> int:
    p = _program(args)
    inst = _instance(args)
    cfg = _config(args)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConformanceWarning)
        if args.stats and datalog.check_cfg(p).ok and datalog.check_gn(p).ok:
            res = query_provenance(p, inst, cfg)
            ok = res.evaluate()
            stats = dict(res.stats)
        else:
            ok = evaluate(p, inst, cfg)
            stats = {}
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.stats:
        stats["time_total"] = time.perf_counter() - t0
        for k in sorted(stats):
            v = stats[k]
            print(f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}", file=sys.stderr)
    print("accept" if ok else "reject")
    return 0 if ok else 1


def cmd_provenance(args) -> int:
    p = _program(args)
    inst = _instance(args)
    if args.fallback == "naive" and not (datalog.check_cfg(p).ok and datalog.check_gn(p).ok):
        print("error: provenance needs a guarded-negation CFG program (no naive fallback exists for it)",
              file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    res = query_provenance(p, inst, _config(args))
    c = res.cycluit
    c.labels = {g: str(f) for g, f in res.fact_index.items()}
    _emit(args, export_cycluit(c, args.format))
    if args.stats:
        stats = dict(res.stats, time_total=time.perf_counter() - t0)
        for k in sorted(stats):
            v = stats[k]
            print(f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}", file=sys.stderr)
    return 0


def cmd_translate(args) -> int:
    from .frontends import cq, gnf, rpq

    if args.kind == "cq":
        if not args.query:
            raise SystemExit("translate cq needs --query")
        q = cq.parse_cq(_read(args.query))
        td = _td(args) or cq.gyo_join_tree(q)
        prog, cert = cq.translate_cq(q, td)
        cert_line = cert.line()
    elif args.kind == "rpq":
        if not args.regex:
            raise SystemExit("translate rpq needs --regex")
        sig = {r: 2 for r in args.relations.split(",")} if args.relations else None
        prog = rpq.rpq_to_cfg(args.regex, sig)
        cert_line = f"% body_size={datalog.body_size(prog)}"
    elif args.kind == "sac2rpq":
        if not args.file:
            raise SystemExit("translate sac2rpq needs --file")
        sig = {r: 2 for r in args.relations.split(",")} if args.relations else None
        prog = rpq.sac2rpq_to_cfg(rpq.parse_sac2rpq(_read(args.file)), sig)
        cert_line = f"% body_size={datalog.body_size(prog)}"
    else:
        if not args.file:
            raise SystemExit("translate gnf needs --file")
        prog, cert = gnf.translate_gnf(_read(args.file))
        cert_line = cert.line()
    _emit(args, cert_line + "\n" + datalog.format_program(prog))
    return 0


def cmd_oracle(args) -> int:
    p = _program(args)
    inst = _instance(args)
    tt = brute_provenance(p, inst)
    if args.table:
        Path(args.table).write_text(tt.to_csv(), encoding="utf-8")
    full = int(tt.bits[-1])
    print(f"facts: {len(tt.order)}")
    print(f"valuations: {len(tt.bits)}")
    print(f"accepting: {int(tt.bits.sum())}")
    print(f"full instance: {'accept' if full else 'reject'}")
    return 0


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cfgd", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, program=True, instance=True):
        if program:
            p.add_argument("--program", required=True, help="Datalog program file ('-' for stdin)")
        if instance:
            p.add_argument("--instance", required=True, help="fact file")
        p.add_argument("--td", help="PACE .td tree decomposition")
        p.add_argument("--mapping", help="PACE vertex number -> element mapping file")
        p.add_argument("--treewidth", type=int, help="encoding width k (default: the decomposition's width)")
        p.add_argument("--out", help="write the main output here instead of stdout")
        p.add_argument("--fallback", choices=("naive", "error"), default="naive",
                       help="what to do with programs outside the guarded-negation fragment")
        p.add_argument("--stats", action="store_true", help="print counts and wall time to stderr")

    p = sub.add_parser("check", help="syntactic checks and body size")
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("stratify", help="print a stratification")
    p.add_argument("--program", required=True)
    p.add_argument("--strata", action="store_true", help="relation<TAB>stratum lines")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("encode", help="tree encoding of an instance, as JSON")
    common(p, program=False)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compile", help="export the automaton over the labels of an instance's encoding")
    common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="evaluate a program; exit 0 accept, 1 reject")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("provenance", help="provenance cycluit as JSON or DOT")
    common(p)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(func=cmd_provenance)

    p = sub.add_parser("translate", help="CQ / 2RPQ / SAC2RPQ / GNF to CFG-Datalog")
    p.add_argument("kind", choices=("cq", "rpq", "sac2rpq", "gnf"))
    p.add_argument("--query", help="CQ file")
    p.add_argument("--td", help="PACE .td simplicial decomposition of the CQ (default: GYO join tree)")
    p.add_argument("--mapping", help="PACE vertex number -> variable mapping file")
    p.add_argument("--regex", help="2RPQ regular expression")
    p.add_argument("--file", help="SAC2RPQ or GNF file")
    p.add_argument("--relations", help="comma-separated binary signature for path queries")
    p.add_argument("--out")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("oracle", help="brute-force truth table over all subinstances")
    p.add_argument("--program", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--table", help="write the truth table as CSV")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        sys.stderr.close()
        return 0
    except (CfgdError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
