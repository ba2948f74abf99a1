"""``bmepoly`` command line: solve, stats, certify, phi, facets.

Exit codes: 0 success, 2 usage, 3 input could not be parsed, 4 refused by
a size guard (rerun with ``--force``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .coords import _exact, dot, x_vector
from .distances import DistanceMatrix, MatrixError, read_csv, read_phylip
from .facets import (
    FAMILIES,
    cyclic_ordering_facets,
    splitohedron_catalog,
    table1_stats,
)
from .kp import BracketingError, fiber_sizes, parse_bracketing, phi
from .solver import EXHAUSTIVE_MAX_N, BnbCertificate, certify_splitohedron_vertex, solve_bnb, solve_exhaustive, solve_nj
from .trees import NewickError, enumerate_binary_trees, parse_newick, to_newick

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_GUARD = 0, 2, 3, 4

JOBS_ENV = "BMEPOLY_JOBS"

# enumeration-backed commands refuse larger n unless --force is given
VERIFY_MAX_N = 7
CERTIFY_ALL_MAX_N = 8
FIBERS_MAX_N = 8
FACETS_MAX_N = 12

FACET_FAMILIES = ("caterpillar", "intersecting-cherry", "split", "cyclic-ordering")

log = logging.getLogger("bmepoly")


class GuardError(Exception):
    pass


class InputError(Exception):
    pass


def _guard(n: int, limit: int, what: str, force: bool):
    if n > limit and not force:
        raise GuardError(f"{what} with n = {n} exceeds the guard n <= {limit}; pass --force to run anyway")


def _jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None


def _emit(obj: dict):
    print(json.dumps(obj, indent=2))


# -- solve ---------------------------------------------------------------------------

def _load_matrix(path: str) -> DistanceMatrix:
    if path == "-":
        text = sys.stdin.read()
        first = text.strip().splitlines()[0] if text.strip() else ""
        return read_csv(text) if "," in first else read_phylip(text)
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".csv":
        return read_csv(text)
    first = text.strip().splitlines()[0] if text.strip() else ""
    return read_csv(text) if "," in first else read_phylip(text)


def cmd_solve(args) -> int:
    d = _load_matrix(args.matrix)
    names = {i + 1: name for i, name in enumerate(d.names)}
    scale = 1 << (d.n - 2)
    if args.method == "exhaustive":
        _guard(d.n, EXHAUSTIVE_MAX_N, "exhaustive search", args.force)
        best = solve_exhaustive(d, max_n=None)
        cert = BnbCertificate(best.tree, best.value, _exact(Fraction(best.value) / scale), best.ties, 0, [], "exhaustive")
    elif args.method == "nj":
        t = solve_nj(d)
        value = dot(d.vector, x_vector(t))
        cert = BnbCertificate(t, value, _exact(Fraction(value) / scale), [t], 0, [], "nj")
    else:
        if d.n == 3:
            cert = solve_bnb(d)
        else:
            cert = solve_bnb(d, exhaustive_below=args.exhaustive_below)
    report = cert.to_json(names)
    if args.format in ("newick", "both"):
        print(to_newick(cert.tree, names))
    if args.format in ("json", "both"):
        _emit(report)
    if args.format == "text":
        print(f"tree      {report['tree']}")
        print(f"method    {report['method']}")
        print(f"value d.x {report['value_x']}")
        print(f"value d.c {report['value_c']}")
        print(f"ties      {len(report['ties'])}")
        print(f"nodes     {report['nodes']}")
    return EXIT_OK


# -- stats ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    if args.n < 3:
        raise InputError("need n >= 3")
    if args.verify:
        _guard(args.n, VERIFY_MAX_N, "tight-set verification", args.force)
    stats = table1_stats(args.n, verify=args.verify)
    if args.format == "json":
        _emit(stats)
        return EXIT_OK
    total = stats["facets_total"]
    print(f"n = {stats['n']}")
    print(f"dimension        {stats['dimension']}")
    print(f"vertices         {stats['vertices']}")
    print(f"facets (known)   {total if total is not None else 'unknown'}")
    print(f"split facets     {stats['split_facets']}")
    print(f"{'family':<22}{'sizes':<8}{'count':>8}{'tight':>10}  {'formula':<18}{'verified'}")
    for row in stats["families"]:
        sizes = "{}|{}".format(*row["sizes"]) if "sizes" in row else ""
        check = ""
        if row["verified"] is not None:
            v = row["verified"]
            status = "ok" if row["ok"] else "MISMATCH"
            check = f"{status} ({v['count']} members, tight {','.join(map(str, v['tight']))})"
        print(f"{row['family']:<22}{sizes:<8}{row['count']:>8}{row['tight']:>10}  {row['tight_formula']:<18}{check}")
        print(f"    {row['inequality']}")
    bad = [r for r in stats["families"] if r["verified"] is not None and not r["ok"]]
    return EXIT_OK if not bad else 1


# -- certify -------------------------------------------------------------------------

def _read_tree_arg(text: str):
    p = Path(text)
    if not text.strip().endswith(";") and p.is_file():
        text = p.read_text()
    return parse_newick(text.strip())


def _certify_one(t):
    return certify_splitohedron_vertex(t).to_json()


def cmd_certify(args) -> int:
    if args.all:
        if args.n is None:
            raise InputError("--all needs -n")
        if args.n < 4:
            raise InputError("need n >= 4")
        _guard(args.n, CERTIFY_ALL_MAX_N, "certifying every tree", args.force)
        trees = list(enumerate_binary_trees(args.n))
        jobs = _jobs()
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                reports = list(pool.map(_certify_one, trees, chunksize=32))
        else:
            reports = [_certify_one(t) for t in trees]
        for t, r in zip(trees, reports):
            r["tree"] = to_newick(t)
        certified = sum(r["certified"] for r in reports)
        matches = sum(r["formula_count"] == r["direct_count"] for r in reports)
        summary = {
            "schema": "bmepoly.certify-all/1",
            "n": args.n,
            "trees": len(reports),
            "certified": certified,
            "count_matches": matches,
            "ranks": sorted({r["rank"] for r in reports}),
            "ambient": reports[0]["ambient"],
        }
        if args.format == "json":
            summary["reports"] = reports
            _emit(summary)
        else:
            print(f"n = {args.n}: {len(reports)} trees")
            print(f"rank certificate (rank = {summary['ambient']}): {certified}/{len(reports)} certified")
            print(f"incidence formula = direct count: {matches}/{len(reports)}")
            print(f"ranks observed: {summary['ranks']}")
        return EXIT_OK
    if args.tree is None:
        raise InputError("give a Newick tree or --all -n N")
    t = _read_tree_arg(args.tree)
    if not t.is_binary():
        raise InputError(f"certify needs a binary tree; {to_newick(t)} has a node of degree > 3")
    if t.n < 4:
        raise InputError("certify needs n >= 4")
    rep = certify_splitohedron_vertex(t)
    out = rep.to_json()
    out["tree"] = to_newick(t)
    if args.format == "json":
        _emit(out)
        return EXIT_OK
    print(f"tree              {out['tree']}")
    print(f"cherries          {rep.cherries}{' (caterpillar)' if rep.caterpillar else ''}")
    print(f"incidence count   {rep.formula_count} (formula), {rep.direct_count} (direct)")
    print(f"dimension         {rep.dimension}")
    print(f"count >= dim      {rep.count_condition}")
    print(f"rank              {rep.rank} of {out['ambient']}")
    print(f"certified vertex  {rep.certified}")
    if rep.witness is not None:
        print(f"witness direction {list(rep.witness)}")
    return EXIT_OK


# -- phi -----------------------------------------------------------------------------

def cmd_phi(args) -> int:
    if args.fibers:
        if args.n is None:
            raise InputError("--fibers needs -n")
        if args.n < 3:
            raise InputError("need n >= 3")
        _guard(args.n, FIBERS_MAX_N, "fiber enumeration", args.force)
        root = args.root if args.root is not None else args.n
        sizes = fiber_sizes(range(1, args.n + 1), root, max_m=None)
        if args.format == "json":
            _emit({"schema": "bmepoly.fibers/1", "n": args.n, "root": root,
                   "fibers": dict(sorted(sizes.items()))})
        else:
            for nwk, k in sorted(sizes.items()):
                print(f"{nwk}\t{k}")
            print(f"{len(sizes)} fibers, sizes {sorted(set(sizes.values()))}")
        return EXIT_OK
    if args.bracketing is None:
        raise InputError("give a bracketing or --fibers -n N")
    f = parse_bracketing(args.bracketing, args.root)
    t = phi(f)
    if args.format == "json":
        _emit({"schema": "bmepoly.phi/1", "face": f.to_json(), "dim": f.dim, "tree": to_newick(t)})
    else:
        print(to_newick(t))
    return EXIT_OK


# -- facets --------------------------------------------------------------------------

def _resolve_family(name: str) -> str:
    if name in FAMILIES:
        return name
    hits = [f for f in FAMILIES if f.startswith(name)]
    if len(hits) != 1:
        raise InputError(f"unknown or ambiguous family {name!r}; choose from {', '.join(FAMILIES)}")
    return hits[0]


def _catalog_for(n: int, families) -> list:
    out = []
    for fam in families:
        if fam == "cyclic-ordering":
            out += cyclic_ordering_facets() if n == 5 else []
        elif fam in ("caterpillar", "intersecting-cherry", "split", "cherry-clade"):
            out += splitohedron_catalog(n).by_family(fam)
        elif fam == "kraft":
            out += list(splitohedron_catalog(n).equalities)
        else:
            raise InputError(f"family {fam!r} is not part of the listed catalog")
    return out


def cmd_facets(args) -> int:
    if args.n < 4:
        raise InputError("need n >= 4")
    _guard(args.n, FACETS_MAX_N, "catalog listing", args.force)
    families = [_resolve_family(args.family)] if args.family else list(FACET_FAMILIES)
    ineqs = _catalog_for(args.n, families)
    if args.tight is not None:
        t = _read_tree_arg(args.tight)
        if t.n != args.n or not t.is_binary():
            raise InputError(f"--tight needs a binary tree on leaves 1..{args.n}")
        x = x_vector(t)
        ineqs = [q for q in ineqs if q.is_tight(x)]
    if args.format == "json":
        _emit({"schema": "bmepoly.facets/1", "n": args.n, "families": families,
               "count": len(ineqs), "inequalities": [q.to_json() for q in ineqs]})
    else:
        for q in ineqs:
            print(f"{q.family:<20} {q.render()}")
        print(f"# {len(ineqs)} inequalities")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bmepoly", description="BME polytope tools")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find the BME tree of a distance matrix")
    p.add_argument("matrix", help="PHYLIP or CSV file ('-' for stdin)")
    p.add_argument("--method", choices=("exhaustive", "nj", "bnb"), default="bnb")
    p.add_argument("--format", choices=("both", "newick", "json", "text"), default="both")
    p.add_argument("--exhaustive-below", type=int, default=7, metavar="K",
                   help="close branch-and-bound nodes with at most K taxa by enumeration")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("stats", help="facet-family statistics of P_n")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--verify", action="store_true", help="recount tight vertices by enumeration")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("certify", help="splitohedron vertex certificate for a tree")
    p.add_argument("tree", nargs="?", help="Newick string or file")
    p.add_argument("--all", action="store_true", help="certify every binary tree on n leaves")
    p.add_argument("-n", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("phi", help="image of a permutoassociahedron face")
    p.add_argument("bracketing", nargs="?")
    p.add_argument("--root", type=int)
    p.add_argument("--fibers", action="store_true", help="fiber sizes of phi on vertices")
    p.add_argument("-n", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("facets", help="list catalog inequalities")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--family", help="one of " + ", ".join(FAMILIES) + " (unique prefixes accepted)")
    p.add_argument("--tight", metavar="NEWICK", help="only inequalities tight at this tree")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_facets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except GuardError as exc:
        print(f"bmepoly: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (InputError, MatrixError, NewickError, BracketingError, OSError) as exc:
        print(f"bmepoly: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
