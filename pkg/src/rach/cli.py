"""Command-line front-end: construction, verification, search and simulation
with reproducible CSV/codebook artifacts.

Exit codes: 0 success / property holds, 1 property fails, 2 indeterminate or
budget exhausted, 3 usage error.  Artifacts are written atomically and carry
a provenance header (version, argument echo, seed) from which they regenerate
byte-identically.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import shlex
import sys
import tempfile
from typing import Optional, Sequence

import numpy as np

from . import __version__, constructions, search, sim, verify
from .patterns import Codebook, read_codebook, format_codebook

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INDETERMINATE = 2
EXIT_USAGE = 3

DEFAULT_LAMBDA_GRID = [float(f"{x:.6g}") for x in np.logspace(math.log10(0.01), 0.0, 12)]


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rach-tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(args_echo: str, seed: Optional[int] = None) -> list[str]:
    lines = [f"rach {__version__}", f"args: {args_echo}"]
    if seed is not None:
        lines.append(f"seed: {seed}")
    return lines


def _mix64(z: int) -> int:
    z &= (1 << 64) - 1
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & (1 << 64) - 1
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & (1 << 64) - 1
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-point sub-seed so grid points have independent, fixed streams."""
    return _mix64(seed ^ _mix64(index + 0x9E3779B97F4A7C15))


def _threads_cap() -> int:
    # honoured as an upper bound on worker fan-out; execution is sequential,
    # so results never depend on it
    try:
        return max(1, int(os.environ.get("RACH_THREADS", "1")))
    except ValueError:
        return 1


def cmd_construct(args, echo: str) -> int:
    if args.family == "cw":
        code = constructions.enumerate_constant_weight(args.n, args.k)
        text = format_codebook(code, _provenance(echo))
        if args.out:
            _atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.family == "sts":
        design = constructions.steiner_triple(args.n)
        if args.as_codebook:
            code = constructions.design_to_codebook(design)
            text = format_codebook(code, _provenance(echo))
        else:
            buf = io.StringIO()
            for line in _provenance(echo):
                buf.write(f"# {line}\n")
            buf.write(f"{design.t} {design.k} {design.n} {design.size}\n")
            for b in design.blocks:
                buf.write(" ".join(map(str, b)) + "\n")
            text = buf.getvalue()
        if args.out:
            _atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.family == "busschbach":
        code = read_codebook(args.infile)
        out = constructions.busschbach_extend(code, args.budget)
        text = format_codebook(out, _provenance(echo))
        if args.out:
            _atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        print(f"extended n={code.n} N={code.size} -> n={out.n} N={out.size}", file=sys.stderr)
        return EXIT_OK
    raise AssertionError(args.family)


def cmd_design(args, echo: str) -> int:
    design = constructions.load_block_design(args.file)
    check = constructions.verify_steiner(design)
    if check.ok:
        print(f"{args.file}: valid S({design.t},{design.k},{design.n}) with {design.size} blocks")
        return EXIT_OK
    print(
        f"{args.file}: NOT a Steiner system: {design.t}-subset {check.violation} "
        f"covered {check.cover_count} times"
    )
    return EXIT_FAIL


def cmd_verify(args, echo: str) -> int:
    code = read_codebook(args.code)
    mode = args.mode
    if mode == "ic":
        rep = verify.is_m_ic(code, args.m, budget=args.budget)
        if rep.is_m_ic is None:
            print(f"indeterminate after {rep.subsets_checked} subsets (budget)")
            return EXIT_INDETERMINATE
        if rep.is_m_ic:
            print(f"{args.code}: {args.m}-IC holds ({rep.subsets_checked} subsets checked)")
            return EXIT_OK
        witness = [code.patterns[i].to_string() for i in rep.witness]
        print(f"{args.code}: {args.m}-IC FAILS, stopping set: {witness}")
        return EXIT_FAIL
    if mode in ("superimposed", "coverfree"):
        fn = verify.is_superimposed if mode == "superimposed" else verify.is_covering_free
        try:
            ok = fn(code, args.m, budget=args.budget)
        except verify.BudgetExceeded as e:
            print(f"indeterminate: {e}")
            return EXIT_INDETERMINATE
        print(f"{args.code}: {args.m}-{mode} {'holds' if ok else 'FAILS'}")
        return EXIT_OK if ok else EXIT_FAIL
    if mode == "rc":
        rep = verify.rc_condition(code)
        print(
            f"{args.code}: RC condition {'holds' if rep.rc else 'FAILS'} "
            f"(v={rep.max_pairwise_intersection}); N={code.size}, "
            f"4-loop-free capacity C({code.n},2)={rep.pair_capacity}, "
            f"N < capacity: {rep.within_bound}"
        )
        return EXIT_OK if rep.rc else EXIT_FAIL
    raise AssertionError(mode)


def _simulate_rows(configs: list[tuple[float, sim.SimConfig, str, str]]) -> str:
    """Run the configs and render the CSV (one row per lambda point)."""
    results = []
    for lam, cfg, mode_label, k_label in configs:
        res = sim.simulate_per(cfg)
        results.append((lam, cfg, mode_label, k_label, res))
    observed = sorted({a for *_, res in results for a in res.per_by_activation})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["lambda", "mode", "n", "k_or_profile", "trials", "packets", "per", "ci_low", "ci_high"]
        + [f"per_given_a={a}" for a in observed]
    )
    for lam, cfg, mode_label, k_label, res in results:
        per = "" if res.per is None else f"{res.per:.10g}"
        lo, hi = ("", "") if res.ci95 is None else (f"{res.ci95[0]:.10g}", f"{res.ci95[1]:.10g}")
        row = [f"{lam:g}", mode_label, cfg.frame_size, k_label, cfg.trials, res.packets, per, lo, hi]
        for a in observed:
            v = res.per_by_activation.get(a)
            row.append("" if v is None else f"{v:.10g}")
        w.writerow(row)
    return buf.getvalue()


def _k_label(code: Codebook) -> str:
    weights = set(code.weights())
    return str(weights.pop()) if len(weights) == 1 else "mixed"


def cmd_simulate(args, echo: str) -> int:
    lams = [float(x) for x in args.lam.split(",")]
    configs = []
    if args.code:
        code = read_codebook(args.code)
        for i, lam in enumerate(lams):
            cfg = sim.SimConfig(
                mode="deterministic", lam=lam, trials=args.trials,
                seed=derive_seed(args.seed, i), code=code,
            )
            configs.append((lam, cfg, "deterministic", _k_label(code)))
    else:
        n, k = (int(x) for x in args.random.split(","))
        for i, lam in enumerate(lams):
            cfg = sim.SimConfig(
                mode="random", lam=lam, trials=args.trials,
                seed=derive_seed(args.seed, i), n=n, k=k,
            )
            configs.append((lam, cfg, "random", str(k)))
    body = _simulate_rows(configs)
    text = "".join(f"# {ln}\n" for ln in _provenance(echo, args.seed)) + body
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_search(args, echo: str) -> int:
    res = search.search_max_3ic(args.n, budget_nodes=args.budget_nodes, symmetry=not args.no_symmetry)
    status = "proven" if res.proven else "lower_bound"
    header = _provenance(echo) + [f"{status}", f"nodes: {res.nodes}"]
    text = format_codebook(res.code, header)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"n={args.n}: N={res.size} ({status}, {res.nodes} nodes)", file=sys.stderr)
    return EXIT_OK if res.proven else EXIT_INDETERMINATE


def figure_pipeline(
    name: str,
    trials: int,
    seed: int,
    outdir: str,
    lambdas: Optional[Sequence[float]] = None,
    echo: str = "",
) -> list[str]:
    """PER-curve CSV bundles for the two reference experiments.

    fig1: D-CRDSA vs CRDSA at n=24 for uniform weights 3..7.
    fig2: the S(3,5,26) 3-IC code vs all-weight-5 D-CRDSA and CRDSA at n=26.
    Returns the written file names (relative to outdir).
    """
    lams = list(lambdas) if lambdas is not None else DEFAULT_LAMBDA_GRID
    os.makedirs(outdir, exist_ok=True)
    curves: list[tuple[str, str, Optional[Codebook], tuple[int, int]]] = []
    if name == "fig1":
        for k in (3, 4, 5, 6, 7):
            cb = constructions.enumerate_constant_weight(24, k)
            curves.append((f"dcrdsa_n24_k{k}", "deterministic", cb, (24, k)))
            curves.append((f"crdsa_n24_k{k}", "random", None, (24, k)))
    elif name == "fig2":
        steiner = constructions.design_to_codebook(constructions.bundled_design("s_3_5_26"))
        curves.append(("steiner_3_5_26", "deterministic", steiner, (26, 5)))
        cw5 = constructions.enumerate_constant_weight(26, 5)
        curves.append(("dcrdsa_n26_k5", "deterministic", cw5, (26, 5)))
        curves.append(("crdsa_n26_k5", "random", None, (26, 5)))
    else:
        raise ValueError(f"unknown figure {name!r}")

    written = []
    manifest = [f"# rach {__version__}", f"# figure: {name}", f"# seed: {seed}", f"# trials: {trials}"]
    if echo:
        manifest.insert(1, f"# args: {echo}")
    for ci, (label, mode, cb, (n, k)) in enumerate(curves):
        configs = []
        for pi, lam in enumerate(lams):
            point_seed = derive_seed(derive_seed(seed, ci), pi)
            if mode == "deterministic":
                cfg = sim.SimConfig(mode=mode, lam=lam, trials=trials, seed=point_seed, code=cb)
                configs.append((lam, cfg, mode, _k_label(cb)))
            else:
                cfg = sim.SimConfig(mode=mode, lam=lam, trials=trials, seed=point_seed, n=n, k=k)
                configs.append((lam, cfg, mode, str(k)))
        body = _simulate_rows(configs)
        head = "".join(
            f"# {ln}\n"
            for ln in [f"rach {__version__}", f"figure: {name}", f"curve: {label}", f"seed: {seed}"]
        )
        fname = f"{label}.csv"
        _atomic_write(os.path.join(outdir, fname), head + body)
        written.append(fname)
        manifest.append(f"{fname} mode={mode} n={n} k={k}")
    _atomic_write(os.path.join(outdir, "manifest.txt"), "\n".join(manifest) + "\n")
    return written


def cmd_figure(args, echo: str) -> int:
    lams = [float(x) for x in args.lambdas.split(",")] if args.lambdas else None
    written = figure_pipeline(args.name, args.trials, args.seed, args.outdir, lams, echo)
    print(f"wrote {len(written)} curves + manifest to {args.outdir}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rach", description=__doc__)
    p.add_argument("--version", action="version", version=f"rach {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("construct", help="generate codebooks and designs")
    pcs = pc.add_subparsers(dest="family", required=True)
    cw = pcs.add_parser("cw", help="all constant-weight patterns")
    cw.add_argument("--n", type=int, required=True)
    cw.add_argument("--k", type=int, required=True)
    cw.add_argument("--out")
    sts = pcs.add_parser("sts", help="Steiner triple system S(2,3,n)")
    sts.add_argument("--n", type=int, required=True)
    sts.add_argument("--as-codebook", action="store_true")
    sts.add_argument("--out")
    bb = pcs.add_parser("busschbach", help="lift a 3-IC code from frame n to n+3")
    bb.add_argument("--in", dest="infile", required=True)
    bb.add_argument("--budget", type=int, default=None, help="cap on 111a candidates examined")
    bb.add_argument("--out")

    pd = sub.add_parser("design", help="block-design utilities")
    pds = pd.add_subparsers(dest="design_cmd", required=True)
    dv = pds.add_parser("verify", help="check the Steiner property of a design file")
    dv.add_argument("file")

    pv = sub.add_parser("verify", help="decodability properties of a codebook")
    pv.add_argument("--code", required=True)
    pv.add_argument("--m", type=int, default=3)
    pv.add_argument("--mode", choices=["ic", "superimposed", "coverfree", "rc"], default="ic")
    pv.add_argument("--budget", type=int, default=verify.DEFAULT_SUBSET_BUDGET)

    ps = sub.add_parser("simulate", help="Monte Carlo PER estimation")
    src = ps.add_mutually_exclusive_group(required=True)
    src.add_argument("--code", help="codebook file (deterministic mode)")
    src.add_argument("--random", help="n,k (random/CRDSA mode)")
    ps.add_argument("--lambda", dest="lam", required=True, help="access intensity or comma list")
    ps.add_argument("--trials", type=int, required=True)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--out")

    pq = sub.add_parser("search", help="maximum 3-IC code search")
    pq.add_argument("--n", type=int, required=True)
    pq.add_argument("--budget-nodes", type=int, default=None)
    pq.add_argument("--no-symmetry", action="store_true")
    pq.add_argument("--out")

    pf = sub.add_parser("figure", help="PER curve bundles for the reference experiments")
    pf.add_argument("name", choices=["fig1", "fig2"])
    pf.add_argument("--trials", type=int, default=10**6)
    pf.add_argument("--seed", type=int, default=1)
    pf.add_argument("--outdir", default=".")
    pf.add_argument("--lambdas", help="comma list overriding the default grid")

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    echo = shlex.join(argv)
    _threads_cap()
    handlers = {
        "construct": cmd_construct,
        "design": cmd_design,
        "verify": cmd_verify,
        "simulate": cmd_simulate,
        "search": cmd_search,
        "figure": cmd_figure,
    }
    try:
        return handlers[args.command](args, echo)
    except (ValueError, OSError) as e:
        print(f"rach: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
