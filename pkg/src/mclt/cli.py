"""Command-line interface.

Subcommands: dist, encode, decode, analyze, session, optimize, sim. Report
paths write delimited files plus rendered figures; see README for examples.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, codec, harness, plotting, smallk
from .distributions import (
    DegreeDistribution,
    SolitonParams,
    closer,
    ideal_soliton,
    robust_soliton,
    starter,
)
from .session import SCHEME_LABELS, run_session, scheme_for

DIST_KINDS = ("ideal", "robust", "starter", "closer")


def _build_dist(kind: str, k: int, c: float | None, delta: float | None) -> DegreeDistribution:
    if kind == "ideal":
        return ideal_soliton(k)
    if c is None or delta is None:
        raise SystemExit(f"--c and --delta are required for kind {kind!r}")
    params = SolitonParams(k, c, delta)
    return {"robust": robust_soliton, "starter": starter, "closer": closer}[kind](params)


def _write_json(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out in (None, "-"):
        print(text)
    else:
        Path(out).write_text(text + "\n")


def _add_soliton_args(p, with_defaults=True):
    p.add_argument("--k", type=int, required=True, help="code length (input symbols)")
    p.add_argument("--c", type=float, default=0.1 if with_defaults else None)
    p.add_argument("--delta", type=float, default=0.1 if with_defaults else None)


def cmd_dist(args) -> int:
    dist = _build_dist(args.kind, args.k, args.c, args.delta)
    out = Path(args.out)
    with open(out, "w") as fh:
        fh.write("degree,pmf,cdf\n")
        for d in range(1, dist.k + 1):
            fh.write(f"{d},{dist.pmf[d - 1]:.12g},{dist.cdf[d - 1]:.12g}\n")
    if args.plot:
        plotting.plot_pmf([dist], args.plot)
    return 0


def cmd_encode(args) -> int:
    raw = Path(args.infile).read_bytes()
    block = codec.SourceBlock.from_bytes(raw, args.k)
    dist = _build_dist(args.dist, args.k, args.c, args.delta)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for j in range(args.packets):
        seed = codec.packet_seed(args.seed, j)
        pkt = codec.encode(block, dist, args.config_id, seed)
        (outdir / f"pkt_{j:06d}.mclt").write_bytes(codec.pack_packet(pkt))
    manifest = {
        "k": args.k,
        "symbol_size": block.symbol_size,
        "length": len(raw),
        "dist": args.dist,
        "c": args.c,
        "delta": args.delta,
        "packets": args.packets,
        "base_seed": args.seed,
    }
    _write_json(manifest, str(outdir / "manifest.json"))
    return 0


def cmd_decode(args) -> int:
    indir = Path(args.infile)
    paths = sorted(indir.glob("*.mclt"))
    if not paths:
        raise SystemExit(f"no .mclt packets in {indir}")
    packets = [codec.unpack_packet(p.read_bytes()) for p in paths]
    k = packets[0].k
    dist = _build_dist(args.dist, k, args.c, args.delta)
    state = codec.DecoderState(k=k)
    for pkt in packets:
        state.ingest(pkt, codec.neighbors_of(pkt, dist))
        if state.is_complete():
            break
    if not state.is_complete():
        print(f"decode failed: {state.unsolved} of {k} input symbols unsolved "
              f"after {state.received_count} packets", file=sys.stderr)
        return 1
    data = state.recovered_data()
    trim = args.trim
    if trim is None:
        manifest = indir / "manifest.json"
        if manifest.exists():
            trim = json.loads(manifest.read_text()).get("length")
    if trim is not None:
        data = data[:trim]
    Path(args.out).write_bytes(data)
    return 0


def cmd_analyze(args) -> int:
    if args.what == "release":
        dist = _build_dist(args.dist, args.k, args.c, args.delta)
        degrees = ([int(x) for x in args.degrees.split(",")] if args.degrees
                   else [d + 1 for d in range(dist.k) if dist.pmf[d] > 0.0])
        table = analysis.release_table(args.k, degrees)
        with open(args.out, "w") as fh:
            fh.write("degree,L,q\n")
            for row, d in enumerate(degrees):
                for L in range(1, args.k + 1):
                    fh.write(f"{d},{L},{table[row, L - 1]:.12g}\n")
        if args.plot:
            plotting.plot_release_curves(args.k, table, degrees, args.plot)
        return 0
    if args.what == "utility":
        pmf = analysis.utility_degree_pmf(args.d, args.u, args.k)
        rows = [(i, pmf.probability(i)) for i in pmf.support]
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("utility_degree,probability\n")
                for i, p in rows:
                    fh.write(f"{i},{p:.12g}\n")
        else:
            print("utility_degree,probability")
            for i, p in rows:
                print(f"{i},{p:.12g}")
        return 0
    if args.what == "domination":
        lines = ["degree,u_threshold"]
        lines += [f"{d},{int(analysis.domination_threshold(d, args.k))}"
                  for d in range(1, args.k)]
        text = "\n".join(lines)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return 0
    if args.what == "identity":
        params = SolitonParams(args.k, args.c, args.delta)
        lo = analysis.switch_threshold(params)
        worst = 0.0
        print("L,lhs,rhs,residual")
        for L in range(lo, args.k):
            lhs, rhs, resid = analysis.phase1_release_identity(params, L)
            worst = max(worst, resid)
            print(f"{L},{lhs:.12g},{rhs:.12g},{resid:.3g}")
        print(f"# max residual {worst:.3g}", file=sys.stderr)
        return 0 if worst < 1e-9 else 1
    raise SystemExit(f"unknown analyze subcommand {args.what!r}")


def cmd_session(args) -> int:
    params = SolitonParams(args.k, args.c, args.delta)
    scheme = scheme_for(args.scheme, params)
    report = run_session(
        scheme,
        seed=args.seed,
        erasure=args.erasure,
        max_received=args.max_received,
    )
    _write_json(report.to_dict(), args.out)
    return 0


def cmd_optimize(args) -> int:
    switch = None
    if args.configs == 2:
        switch = args.switch_after if args.switch_after is not None else smallk.default_switch(args.k)
    result = smallk.optimize(args.k, switch, restarts=args.restarts, seed=args.seed)
    _write_json(result.to_dict(), args.out)
    return 0


def _load_config(path: str) -> dict:
    """Plain-text key=value config; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


_SIM_KEYS = {
    "scheme": str, "k": int, "c": float, "delta": float, "trials": int,
    "seed": int, "grid": str, "erasure": float, "out": str, "workers": int,
}


def _sim_spec(args) -> tuple[harness.ExperimentSpec, str, int | None, bool]:
    merged = {}
    if args.config:
        raw = _load_config(args.config)
        unknown = set(raw) - set(_SIM_KEYS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: _SIM_KEYS[k](v) for k, v in raw.items()})
    for key in _SIM_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    defaults = {"scheme": "starter+closer", "k": 1000, "c": 0.1, "delta": 0.1,
                "trials": 10_000, "seed": 42, "grid": "0:0.5:0.01", "erasure": 0.0,
                "out": "results", "workers": 1}
    for key, val in defaults.items():
        merged.setdefault(key, val)
    spec = harness.ExperimentSpec(
        scheme=merged["scheme"],
        k=merged["k"],
        c=merged["c"],
        delta=merged["delta"],
        trials=merged["trials"],
        base_seed=merged["seed"],
        grid=harness.parse_grid(merged["grid"]),
        erasure=merged["erasure"],
    )
    return spec, merged["out"], merged["workers"], not args.no_figures


def cmd_sim(args) -> int:
    if args.what == "run":
        spec, out, workers, figures = _sim_spec(args)
        result = harness.run_experiment(spec, workers=workers)
        harness.save_experiment(result, out, figures=figures)
        print(json.dumps(result.summary_dict(), indent=2, sort_keys=True))
        return 0
    if args.what == "compare":
        spec, out, workers, figures = _sim_spec(args)
        schemes = [s.strip() for s in args.schemes.split(",")]
        if len(schemes) < 2:
            raise SystemExit("sim compare needs at least two --schemes")
        results = []
        for i, scheme in enumerate(schemes):
            sub = harness.ExperimentSpec(
                scheme=scheme, k=spec.k, c=spec.c, delta=spec.delta,
                trials=spec.trials, base_seed=harness.trial_seed(spec.base_seed, i),
                grid=spec.grid, erasure=spec.erasure,
            )
            results.append(harness.run_experiment(sub, workers=workers))
        report = harness.compare(*results)
        harness.save_comparison(report, results, out, figures=figures)
        print(json.dumps({k: report.to_dict()[k] for k in
                          ("ordering", "mean_overhead", "ci_disjoint")},
                         indent=2, sort_keys=True))
        return 0
    raise SystemExit(f"unknown sim subcommand {args.what!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mclt",
                                description="Rateless multi-configuration LT coding toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dist", help="write a degree distribution as CSV")
    d.add_argument("--kind", choices=DIST_KINDS, required=True)
    _add_soliton_args(d)
    d.add_argument("--out", required=True, help="output CSV (degree,pmf,cdf)")
    d.add_argument("--plot", help="optional PNG of the pmf")
    d.set_defaults(fn=cmd_dist)

    e = sub.add_parser("encode", help="encode a file into packet files")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--dist", choices=DIST_KINDS, default="robust")
    e.add_argument("--c", type=float, default=0.1)
    e.add_argument("--delta", type=float, default=0.1)
    e.add_argument("--packets", type=int, required=True)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--config-id", type=int, default=1)
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(fn=cmd_encode)

    de = sub.add_parser("decode", help="decode a directory of packet files")
    de.add_argument("--in", dest="infile", required=True)
    de.add_argument("--out", required=True)
    de.add_argument("--dist", choices=DIST_KINDS, default="robust")
    de.add_argument("--c", type=float, default=0.1)
    de.add_argument("--delta", type=float, default=0.1)
    de.add_argument("--trim", type=int, help="truncate output to this many bytes")
    de.set_defaults(fn=cmd_decode)

    a = sub.add_parser("analyze", help="closed-form decoding analytics")
    asub = a.add_subparsers(dest="what", required=True)
    ar = asub.add_parser("release", help="release probabilities q(d, L)")
    ar.add_argument("--k", type=int, required=True)
    ar.add_argument("--dist", choices=DIST_KINDS, default="robust")
    ar.add_argument("--c", type=float, default=0.1)
    ar.add_argument("--delta", type=float, default=0.1)
    ar.add_argument("--degrees", help="comma-separated degrees (default: support of --dist)")
    ar.add_argument("--out", required=True, help="output CSV (degree,L,q)")
    ar.add_argument("--plot", help="optional PNG of the curves")
    ar.set_defaults(fn=cmd_analyze)
    au = asub.add_parser("utility", help="utility-degree pmf")
    au.add_argument("--k", type=int, required=True)
    au.add_argument("--d", type=int, required=True)
    au.add_argument("--u", type=int, required=True)
    au.add_argument("--out")
    au.set_defaults(fn=cmd_analyze)
    ad = asub.add_parser("domination", help="per-degree domination thresholds")
    ad.add_argument("--k", type=int, required=True)
    ad.add_argument("--out")
    ad.set_defaults(fn=cmd_analyze)
    ai = asub.add_parser("identity", help="first-phase release identity check")
    _add_soliton_args(ai)
    ai.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("session", help="run one receive session")
    ssub = s.add_subparsers(dest="what", required=True)
    sr = ssub.add_parser("run")
    sr.add_argument("--k", type=int, required=True)
    sr.add_argument("--scheme", choices=SCHEME_LABELS, default="starter+closer")
    sr.add_argument("--c", type=float, default=0.1)
    sr.add_argument("--delta", type=float, default=0.1)
    sr.add_argument("--erasure", type=float, default=0.0)
    sr.add_argument("--seed", type=int, default=1)
    sr.add_argument("--max-received", type=int)
    sr.add_argument("--report", choices=["json"], default="json")
    sr.add_argument("--out", help="report path (default: stdout)")
    sr.set_defaults(fn=cmd_session)

    o = sub.add_parser("optimize", help="optimize small-k degree distributions")
    o.add_argument("--k", type=int, choices=(1, 2, 3, 4, 5), required=True)
    o.add_argument("--configs", type=int, choices=(1, 2), default=1)
    o.add_argument("--switch-after", type=int,
                   help="solved count at which the second pmf takes over")
    o.add_argument("--restarts", type=int, default=50)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", help="JSON path (default: stdout)")
    o.set_defaults(fn=cmd_optimize)

    m = sub.add_parser("sim", help="Monte-Carlo experiments")
    msub = m.add_subparsers(dest="what", required=True)
    for name in ("run", "compare"):
        mp = msub.add_parser(name)
        mp.add_argument("--scheme", choices=SCHEME_LABELS)
        if name == "compare":
            mp.add_argument("--schemes", default="robust,starter,starter+closer")
        mp.add_argument("--k", type=int)
        mp.add_argument("--c", type=float)
        mp.add_argument("--delta", type=float)
        mp.add_argument("--trials", type=int)
        mp.add_argument("--seed", type=int)
        mp.add_argument("--grid", help="overhead grid start:stop:step")
        mp.add_argument("--erasure", type=float)
        mp.add_argument("--out")
        mp.add_argument("--workers", type=int)
        mp.add_argument("--config", help="key=value config file; flags override")
        mp.add_argument("--no-figures", action="store_true")
        mp.set_defaults(fn=cmd_sim)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
