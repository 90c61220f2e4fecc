"""Command-line entry point: ``polydyn <command> [options]``.

Commands: stats, predict, verify, classify, primes, export.  Exit status is
0 on success, 1 when ``verify`` finds a failing cell and 2 on usage, parse
or resource errors.  Formats are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import classify as classify_mod
from . import formulas as fm
from . import graph
from .arith import is_prime
from .maps import MapSpec, Poly, RandomMap, Split, map_from_json
from .maps import Chebyshev, Power
from .primes import FORMS, PrimeSequenceSpec, generate, verify_form_consequences
from .space import AFFINE, PROJECTIVE, Space

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments, unparsable map spec or resource violation."""


@dataclass
class RunConfig:
    command: str
    map: str | None = None
    p: int | None = None
    pmin: int = 3
    pmax: int | None = None
    space: str | None = None
    dim: int | None = None
    d: list[int] | None = None
    fmt: str = "json"
    seed: int = 0
    max_points: int | None = None
    threads: int = 1
    output: str | None = None


# -- map-spec mini-language ------------------------------------------------------


def _split_top(text: str, sep: str) -> list[str]:
    """Split on ``sep`` outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise UsageError(f"unbalanced ')' in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise UsageError(f"unbalanced '(' in {text!r}")
    parts.append("".join(cur))
    return parts


def _load_json_file(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such map file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None


def parse_map(text: str, seed: int = 0) -> MapSpec:
    """Parse ``power:d``, ``cheby:d``, ``poly:c0,c1,...``, ``random:k[:seed[:d]]``,
    ``split:(A)x(B)...``, ``conj:FILE`` or a path to a JSON map file."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    try:
        if kind == "power":
            return Power(int(rest))
        if kind == "cheby":
            return Chebyshev(int(rest))
        if kind == "poly":
            return Poly(tuple(_ints(rest, "poly coefficients")))
        if kind == "random":
            fields = _ints(rest.replace(":", ","), "random fields")
            if not 1 <= len(fields) <= 3:
                raise UsageError("random takes k[:seed[:d]]")
            k = fields[0]
            s = fields[1] if len(fields) > 1 else seed
            d = fields[2] if len(fields) > 2 else 2
            return RandomMap(k, s, d)
        if kind == "split":
            comps = []
            for part in _split_top(rest, "x"):
                part = part.strip()
                if not (part.startswith("(") and part.endswith(")")):
                    raise UsageError(f"split components must be parenthesised, got {part!r}")
                comps.append(parse_map(part[1:-1], seed))
            return Split(tuple(comps))
        if kind == "conj":
            doc = _load_json_file(rest)
            if doc.get("kind") != "conj":
                raise UsageError(f"{rest}: expected a document of kind 'conj'")
            return map_from_json(doc)
        if os.path.exists(text) or text.endswith(".json"):
            return map_from_json(_load_json_file(text))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot parse map spec {text!r}: {exc}") from None
    raise UsageError(f"unknown map spec {text!r}")


def _replicate(spec: MapSpec, dim: int | None) -> MapSpec:
    if dim is None or dim == spec.dim:
        return spec
    if spec.dim != 1:
        raise UsageError(f"--dim {dim} only replicates 1-dimensional maps; this one has N={spec.dim}")
    return Split((spec,) * dim)


def _map_from_config(cfg: RunConfig) -> MapSpec:
    if cfg.map is None:
        raise UsageError("--map is required")
    return _replicate(parse_map(cfg.map, cfg.seed), cfg.dim)


def _prime(p: int | None) -> int:
    if p is None:
        raise UsageError("--p is required")
    if not is_prime(p):
        raise UsageError(f"{p} is not prime")
    return p


# -- output helpers --------------------------------------------------------------


def _rows_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


# -- commands --------------------------------------------------------------------


def cmd_stats(cfg: RunConfig) -> tuple[str, int]:
    spec = _map_from_config(cfg)
    space = Space(cfg.space or AFFINE, spec.dim, _prime(cfg.p))
    stats = graph.census(spec, space, cfg.max_points, cfg.threads).stats
    if cfg.fmt == "csv":
        return stats.to_csv(), EXIT_OK
    if cfg.fmt == "json":
        return _dump(stats.to_json()), EXIT_OK
    raise UsageError("stats writes csv or json")


def _parse_signature(text: str, N: int | None, d: int) -> fm.SplitSignature:
    fields = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"signature items look like a=1, got {item!r}")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"a", "b", "R"}
    if unknown:
        raise UsageError(f"unknown signature keys {sorted(unknown)}")
    try:
        a, b = int(fields.get("a", 0)), int(fields.get("b", 0))
        parts = tuple(int(x) for x in fields["R"].split("+")) if fields.get("R") else ()
        sig = fm.SplitSignature(a, b, tuple(sorted(parts, reverse=True)), d)
    except ValueError as exc:
        raise UsageError(f"bad signature {text!r}: {exc}") from None
    if N is not None and sig.N != N:
        raise UsageError(f"signature has N={sig.N} but --dim is {N}")
    return sig


def cmd_predict(cfg: RunConfig, family: str, sig_text: str | None) -> tuple[str, int]:
    p = _prime(cfg.p)
    if not cfg.d or len(cfg.d) != 1:
        raise UsageError("predict needs exactly one --d")
    d = cfg.d[0]
    spaces = [cfg.space] if cfg.space else [AFFINE, PROJECTIVE]
    N = cfg.dim or 1
    sig = None
    if family == "split":
        if sig_text is None:
            raise UsageError("--family split needs --sig")
        sig = _parse_signature(sig_text, cfg.dim, d)
        N = sig.N
    rows: list[tuple[str, str, dict]] = []
    for space in spaces:
        if family == "power" and N == 1:
            pred = fm.predict_power_dim1(p, d, space)
            rows += [(space, "periodic", pred.periodic.to_json()),
                     (space, "max_tail", pred.max_tail.to_json()),
                     (space, "leaves", pred.leaf_bound.to_json())]
        elif family == "power":
            rows.append((space, "periodic", fm.predict_power_dimN_total(p, d, N, space).to_json()))
            for k, c in fm.power_period_profile(p, d, N, space).items():
                rows.append((space, f"period={k}", fm.Prediction(c, "power-dimN-period").to_json()))
            pre = fm.predict_power_dimN_preperiodic(p, d, N, space)
            rows.append((space, "preperiodic", pre.total.to_json()))
            for k, c in (pre.per_tail or {}).items():
                rows.append((space, f"tail={k}", fm.Prediction(c, "power-dimN-tail").to_json()))
            rows.append((space, "leaves", fm.predict_power_dimN_leaves(p, d, N, space).to_json()))
        elif family == "cheby":
            if N != 1:
                raise UsageError("the Chebyshev family is one-dimensional; use --family split")
            pred = fm.predict_cheby_dim1(p, d, space)
            rows += [(space, "periodic", pred.periodic.to_json()),
                     (space, "max_tail", pred.max_tail.to_json())]
            if is_prime(d) and space == AFFINE:
                rows.append((space, "leaves", fm.predict_cheby_leaves(p, d).to_json()))
        elif family == "split":
            rows.append((space, "periodic", fm.predict_split(sig, p, space).to_json()))
            if space == AFFINE:
                rows.append((space, "max_tail", fm.predict_split_tail(sig, p).to_json()))
        elif family == "random":
            size = Space(space, N, p).size
            ref = fm.random_asymptotics(size)
            rows += [(space, "periodic", {"relation": fm.ENVELOPE, "value": ref.periodic}),
                     (space, "max_tail", {"relation": fm.ENVELOPE, "value": ref.max_tail})]
        else:
            raise UsageError(f"unknown family {family!r}")
    if cfg.fmt == "json":
        return _dump([{"space": s, "quantity": q, **v} for s, q, v in rows]), EXIT_OK
    if cfg.fmt == "csv":
        table = [(p, d, N, s, q, v.get("relation"), v.get("value", ""),
                  v.get("exponent", ""), v.get("coefficient", ""), ";".join(v.get("flags", [])))
                 for s, q, v in rows]
        header = ["p", "d", "N", "space", "quantity", "relation", "value", "exponent",
                  "coefficient", "flags"]
        return _rows_csv(header, table), EXIT_OK
    raise UsageError("predict writes csv or json")


def verify_cells(pmin: int, pmax: int, degrees: list[int], dims: list[int],
                 cap: int | None = None, spaces=(AFFINE, PROJECTIVE)) -> list[dict]:
    """Formula-versus-census matrix over primes pmin..pmax, degrees and dimensions.

    Dimension 1 checks power and Chebyshev counts and max tails.  Higher
    dimensions check the powering map (totals, per-period, per-tail for
    prime d, preperiodic total, leaf bound) and every group-only split
    signature.  Primes dividing d, and spaces over the point budget, are
    skipped.
    """
    cap = graph.max_points() if cap is None else cap
    cells: list[dict] = []

    def cell(p, d, N, space, check, expected, observed, ok):
        cells.append({"p": p, "d": d, "N": N, "space": space, "check": check,
                      "expected": expected, "observed": observed, "pass": bool(ok)})

    primes = [p for p in range(max(pmin, 3), pmax + 1) if is_prime(p)]
    for N in dims:
        for d in degrees:
            for p in primes:
                if d % p == 0:
                    continue
                for space in spaces:
                    if Space(space, N, p).size > cap:
                        continue
                    if N == 1:
                        for name, spec, pred in (
                            ("power", Power(d), fm.predict_power_dim1(p, d, space)),
                            ("cheby", Chebyshev(d), fm.predict_cheby_dim1(p, d, space)),
                        ):
                            st = graph.census(spec, Space(space, 1, p), cap).stats
                            cell(p, d, N, space, f"{name}:periodic", pred.periodic.value,
                                 st.total_periodic, pred.periodic.holds_for(st.total_periodic))
                            cell(p, d, N, space, f"{name}:max_tail", pred.max_tail.value,
                                 st.max_tail, pred.max_tail.holds_for(st.max_tail))
                        continue
                    _verify_power_dimN(cell, p, d, N, space, cap)
                    for a in range(N + 1):
                        sig = fm.SplitSignature(a, N - a, (), d)
                        spec = Split((Power(d),) * a + (Chebyshev(d),) * (N - a))
                        st = graph.census(spec, Space(space, N, p), cap).stats
                        pred = fm.predict_split(sig, p, space)
                        cell(p, d, N, space, f"split[{sig}]:periodic", pred.value,
                             st.total_periodic, pred.holds_for(st.total_periodic))
    return cells


def _verify_power_dimN(cell, p, d, N, space, cap) -> None:
    st = graph.census(Split((Power(d),) * N), Space(space, N, p), cap).stats
    total = fm.predict_power_dimN_total(p, d, N, space)
    cell(p, d, N, space, "power:periodic", total.value, st.total_periodic,
         total.holds_for(st.total_periodic))
    profile = fm.power_period_profile(p, d, N, space)
    cell(p, d, N, space, "power:per_k", _dump(profile).strip(), _dump(st.per_count).strip(),
         profile == st.per_count)
    pre = fm.predict_power_dimN_preperiodic(p, d, N, space)
    observed_pre = st.size - st.total_periodic
    cell(p, d, N, space, "power:preperiodic", pre.total.value, observed_pre,
         pre.total.holds_for(observed_pre))
    if pre.per_tail is not None:
        tails = {k: v for k, v in st.pre_count.items() if k >= 1}
        cell(p, d, N, space, "power:pre_k", _dump(pre.per_tail).strip(), _dump(tails).strip(),
             {k: v for k, v in pre.per_tail.items() if v} == tails)
    leaves = fm.predict_power_dimN_leaves(p, d, N, space)
    cell(p, d, N, space, "power:leaf_bound", str(leaves.value), st.leaf_count,
         leaves.holds_for(st.leaf_count))


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    if cfg.pmax is None:
        raise UsageError("--pmax is required")
    degrees = cfg.d or [2]
    dims = [cfg.dim or 1]
    spaces = [cfg.space] if cfg.space else [AFFINE, PROJECTIVE]
    cells = verify_cells(cfg.pmin, cfg.pmax, degrees, dims, cfg.max_points, spaces)
    status = EXIT_OK if all(c["pass"] for c in cells) else EXIT_FAIL
    if cfg.fmt == "json":
        failed = [c for c in cells if not c["pass"]]
        return _dump({"cells": len(cells), "failed": len(failed), "failures": failed}), status
    if cfg.fmt == "csv":
        header = ["p", "d", "N", "space", "check", "expected", "observed", "pass"]
        return _rows_csv(header, [[c[h] for h in header] for c in cells]), status
    raise UsageError("verify writes csv or json")


def cmd_classify(cfg: RunConfig, primes: list[int] | None) -> tuple[str, int]:
    spec = _map_from_config(cfg)
    d = cfg.d[0] if cfg.d else spec.degree
    verdict = classify_mod.classify(spec, d, primes, cap=cfg.max_points, threads=cfg.threads)
    if cfg.fmt == "json":
        return _dump(verdict.to_json()), EXIT_OK
    if cfg.fmt == "csv":
        return verdict.plot_csv(), EXIT_OK
    raise UsageError("classify writes csv (plot data) or json")


def cmd_primes(cfg: RunConfig, form: str, target: int | None, count: int | None,
               check: bool) -> tuple[str, int]:
    d = cfg.d[0] if cfg.d else None
    if cfg.pmax is None:
        raise UsageError("--pmax is required")
    try:
        seq = PrimeSequenceSpec(form, d, target, cfg.pmin, cfg.pmax, count)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    primes = generate(seq)
    checked = []
    if check:
        if d is None:
            raise UsageError("--check needs --d")
        checked = [verify_form_consequences(p, d, form) for p in primes]
    if cfg.fmt == "json":
        return _dump({"form": form, "d": d, "primes": primes, "checked": len(checked)}), EXIT_OK
    if cfg.fmt == "csv":
        return _rows_csv(["p"], [[p] for p in primes]), EXIT_OK
    raise UsageError("primes writes csv or json")


def cmd_export(cfg: RunConfig) -> tuple[str, int]:
    spec = _map_from_config(cfg)
    space = Space(cfg.space or AFFINE, spec.dim, _prime(cfg.p))
    if space.size > graph.DOT_MAX_POINTS:
        raise UsageError(f"{space} has {space.size} points; DOT export is capped at "
                         f"{graph.DOT_MAX_POINTS}")
    c = graph.census(spec, space, cfg.max_points)
    return graph.export_dot(c.table, c), EXIT_OK


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polydyn", description="Functional-graph statistics of polynomial maps over F_p.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, fmt_choices=("json", "csv"), default_fmt="json"):
        sp.add_argument("--space", choices=[AFFINE, PROJECTIVE])
        sp.add_argument("--dim", type=int, help="dimension N (replicates a 1-D map)")
        sp.add_argument("--format", dest="fmt", choices=fmt_choices, default=default_fmt)
        sp.add_argument("--seed", type=int, default=0, help="default seed for random: specs")
        sp.add_argument("--max-points", type=int, help="point budget (overrides POLYDYN_MAX_POINTS)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-o", "--output", help="write here instead of stdout")

    sp = sub.add_parser("stats", help="census of one map at one prime")
    sp.add_argument("--map", required=True)
    sp.add_argument("--p", type=int, required=True)
    common(sp, default_fmt="csv")

    sp = sub.add_parser("predict", help="closed-form predictions")
    sp.add_argument("--family", choices=["power", "cheby", "split", "random"], required=True)
    sp.add_argument("--sig", help="split signature, e.g. a=1,b=2 or a=1,R=2+1")
    sp.add_argument("--d", required=True)
    sp.add_argument("--p", type=int, required=True)
    common(sp)

    sp = sub.add_parser("verify", help="formula-versus-census matrix")
    sp.add_argument("--pmin", type=int, default=3)
    sp.add_argument("--pmax", type=int, required=True)
    sp.add_argument("--d", default="2")
    common(sp, default_fmt="csv")

    sp = sub.add_parser("classify", help="identify a map from its cycle statistics")
    sp.add_argument("--map", required=True)
    sp.add_argument("--d")
    sp.add_argument("--primes", help="comma-separated primes (default: chosen by form)")
    common(sp)

    sp = sub.add_parser("primes", help="prime sequences of a given form")
    sp.add_argument("--form", choices=FORMS, required=True)
    sp.add_argument("--d")
    sp.add_argument("--target", type=int, help="m- value for constant-m-minus")
    sp.add_argument("--pmin", type=int, default=2)
    sp.add_argument("--pmax", type=int, required=True)
    sp.add_argument("--count", type=int)
    sp.add_argument("--check", action="store_true", help="verify the m-/m+ values of each prime")
    common(sp)

    sp = sub.add_parser("export", help="Graphviz DOT of the functional graph")
    sp.add_argument("--map", required=True)
    sp.add_argument("--p", type=int, required=True)
    common(sp, fmt_choices=("dot",), default_fmt="dot")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    d = args.d if hasattr(args, "d") else None
    return RunConfig(
        command=args.command,
        map=getattr(args, "map", None),
        p=getattr(args, "p", None),
        pmin=getattr(args, "pmin", 3),
        pmax=getattr(args, "pmax", None),
        space=args.space,
        dim=args.dim,
        d=_ints(d, "--d") if d else None,
        fmt=args.fmt,
        seed=args.seed,
        max_points=args.max_points,
        threads=args.threads,
        output=args.output,
    )


def run(cfg: RunConfig, args: argparse.Namespace) -> tuple[str, int]:
    if cfg.dim is not None and cfg.dim < 1:
        raise UsageError("--dim must be >= 1")
    if cfg.command == "stats":
        return cmd_stats(cfg)
    if cfg.command == "predict":
        return cmd_predict(cfg, args.family, args.sig)
    if cfg.command == "verify":
        return cmd_verify(cfg)
    if cfg.command == "classify":
        primes = _ints(args.primes, "--primes") if args.primes else None
        return cmd_classify(cfg, primes)
    if cfg.command == "primes":
        return cmd_primes(cfg, args.form, args.target, args.count, args.check)
    if cfg.command == "export":
        return cmd_export(cfg)
    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        text, status = run(cfg, args)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            sys.stdout.write(text)
    except (UsageError, graph.ResourceError, ValueError, OSError) as exc:
        print(f"polydyn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
