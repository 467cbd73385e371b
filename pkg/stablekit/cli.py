#!/usr/bin/env python3
"""Command line interface for stablekit."""

import argparse
import sys
import traceback
from typing import Any, Callable, Dict, List, Optional, Tuple

from .config import (DEFAULT_DEPTH, DEFAULT_POWER_DEPTH, DEFAULT_SCALE, DEFAULT_TOLERANCE,
                     DEMO_TOLERANCE, DEMO_TRACE_THRESHOLD, DEMO_WORD_LENGTH, EXTENSION_RANK, TOOL_NAME,
                     TOOL_VERSION)
from .errors import PreconditionRefused, StableKitError, UsageError
from .formats import (experiment_argv, load_experiment, load_family, load_quasimorphism,
                      read_subgroup_file, subgroup_from_words)
from .heightwidth import family_height_width, height, intersection_classes, near_conjugate_packing, width
from .qmorph import (check_compatibility, defect, homogenize, invisible_class_demo, psi_extend,
                     restriction_error, simultaneous_extend)
from .reporting import build_report, write_report
from .stallings import StallingsGraph, conjugacy_class_reps, double_coset_scan, intersect, is_malnormal
from .treegeo import (CosetRef, coarse_barycenter, coarse_intersection, coset_distance,
                      double_coset_finiteness, entrance_projection, family_packing, hausdorff_gap,
                      hull_projection, nearest_points, packing_experiment, projection_gap)
from .utils import Colors, log_debug, log_error, log_info
from .verify import verify_suite
from .words import FreeWord, parse_word

Handler = Callable[[argparse.Namespace, List[StallingsGraph]], Tuple[Any, Optional[int], Any]]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so bad usage maps to exit code 1."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- input helpers -----------------------------------------------------------------

def _load_subgroups(args: argparse.Namespace, min_rank: int = 1) -> List[StallingsGraph]:
    """Subgroups from --subgroup files and --gens lists, in a common rank.

    Without --rank the rank is the largest one the inputs imply, and at least ``min_rank``.
    """
    def load(rank: Optional[int]) -> List[StallingsGraph]:
        found = [read_subgroup_file(path, rank) for path in args.subgroup]
        found += [subgroup_from_words(_split(text), rank) for text in args.gens]
        return found

    rank = args.rank
    if rank is None:
        found = load(None)
        if found:
            rank = max(min_rank, max(H.rank for H in found))
    return load(rank)


def _split(text: Optional[str]) -> List[str]:
    if text is None:
        return []
    return [part.strip() for part in text.split(',')] if text else [""]


def _rank(args: argparse.Namespace, Hs: List[StallingsGraph]) -> int:
    if Hs:
        return Hs[0].rank
    return args.rank or 2


def _words(args: argparse.Namespace, attr: str, rank: int) -> List[FreeWord]:
    return [parse_word(t, rank) for t in _split(getattr(args, attr))]


def _need(args: argparse.Namespace, attr: str) -> Any:
    value = getattr(args, attr)
    if value is None:
        raise UsageError(f"{args.command} needs --{attr.replace('_', '-')}")
    return value


def _need_subgroups(Hs: List[StallingsGraph], count: int, command: str) -> None:
    if len(Hs) < count:
        raise UsageError(f"{command} needs {count} subgroup(s) via --subgroup or --gens, got {len(Hs)}")


def _cosets(args: argparse.Namespace, Hs: List[StallingsGraph]) -> List[CosetRef]:
    reps = _words(args, "reps", _rank(args, Hs)) if args.reps is not None else []
    reps += [FreeWord.identity(_rank(args, Hs))] * (len(Hs) - len(reps))
    if len(reps) != len(Hs):
        raise UsageError(f"--reps lists {len(reps)} word(s) for {len(Hs)} subgroup(s)")
    return [CosetRef(H, g) for H, g in zip(Hs, reps)]


def _tol(args: argparse.Namespace, default: float = DEFAULT_TOLERANCE) -> float:
    return args.tol if args.tol is not None else default


def _gens(H: StallingsGraph) -> List[str]:
    return [str(g) for g in H.generators()]


def _echo(args: argparse.Namespace, Hs: List[StallingsGraph]) -> Dict[str, Any]:
    params = {}
    for key in ("depth", "D", "L", "N", "R", "C", "seed", "tol", "word", "x", "reps", "qm", "family",
                "search_len", "word_length", "sample", "exact", "level"):
        value = getattr(args, key, None)
        if value is not None and value is not False:
            params[key] = value
    return {"subgroups": [_gens(H) for H in Hs], "rank": _rank(args, Hs), "params": params}


# -- subgroup commands -----------------------------------------------------------

def cmd_fold(args, Hs):
    _need_subgroups(Hs, 1, "fold")
    result = []
    for H in Hs:
        index = H.index()
        result.append({
            "generators": _gens(H),
            "graph": H.to_dict(),
            "subgroupRank": H.subgroup_rank(),
            "index": index,
            "quasiconvexity": H.quasiconvexity_constant(),
        })
    return result, None, []


def cmd_member(args, Hs):
    _need_subgroups(Hs, 1, "member")
    H = Hs[0]
    w = parse_word(_need(args, "word"), H.rank)
    member = H.contains(w)
    spelling = [[i, s] for i, s in H.spell(w)] if member else None
    return {"word": str(w), "member": member, "spelling": spelling}, None, []


def cmd_intersect(args, Hs):
    _need_subgroups(Hs, 2, "intersect")
    K = Hs[0]
    for H in Hs[1:]:
        K = intersect(K, H)
    return {"generators": _gens(K), "graph": K.to_dict(), "subgroupRank": K.subgroup_rank()}, None, []


def cmd_malnormal(args, Hs):
    _need_subgroups(Hs, 1, "malnormal")
    result, witnesses = [], []
    for H in Hs:
        ok, witness = is_malnormal(H)
        result.append({"generators": _gens(H), "malnormal": ok})
        if witness is not None:
            witnesses.append(str(witness))
    return result, None, witnesses


def cmd_dcscan(args, Hs):
    _need_subgroups(Hs, 2, "dcscan")
    reps = double_coset_scan(Hs[0], Hs[1], debug=args.debug)
    return [r.to_dict() for r in reps], None, [str(r.conjugator) for r in reps if r.infinite]


def cmd_reps(args, Hs):
    _need_subgroups(Hs, 2, "reps")
    pairs, warnings = conjugacy_class_reps(Hs[0], Hs[1])
    result = {
        "classes": [{"intersection": _gens(K), "conjugator": str(t)} for K, t in pairs],
        "warnings": warnings,
    }
    return result, None, [str(t) for _, t in pairs]


def cmd_height(args, Hs):
    _need_subgroups(Hs, 1, "height")
    cert = height(Hs[0], args.depth, debug=args.debug) if len(Hs) == 1 else \
        family_height_width(Hs, args.depth, debug=args.debug)[0]
    return cert.to_dict(), None, [] if cert.witness is None else [str(cert.witness)]


def cmd_width(args, Hs):
    _need_subgroups(Hs, 1, "width")
    cert = width(Hs[0], args.depth, debug=args.debug) if len(Hs) == 1 else \
        family_height_width(Hs, args.depth, debug=args.debug)[1]
    return cert.to_dict(), None, sorted(cert.to_dict()["pairWitnesses"].values())


def cmd_family(args, Hs):
    _need_subgroups(Hs, 1, "family")
    h, w = family_height_width(Hs, args.depth, debug=args.debug)
    return {"height": h.to_dict(), "width": w.to_dict()}, None, []


def cmd_classes(args, Hs):
    _need_subgroups(Hs, 1, "classes")
    return [_gens(K) for K in intersection_classes(Hs, args.depth)], None, []


def cmd_nearest(args, Hs):
    _need_subgroups(Hs, 1, "nearest")
    coset = _cosets(args, Hs[:1])[0]
    x = parse_word(_need(args, "x"), coset.subgroup.rank)
    points, dist = nearest_points(x, coset)
    hull_point, _, off = hull_projection(x, coset)
    result = {
        "points": [str(p) for p in points],
        "distance": dist,
        "hullPoint": str(hull_point),
        "hullDistance": off,
        "entrance": [str(p) for p in entrance_projection(x, coset)],
    }
    return result, None, [str(points[0])]


def cmd_cosetdist(args, Hs):
    _need_subgroups(Hs, 2, "cosetdist")
    first, second = _cosets(args, Hs[:2])
    dist, pair = coset_distance(first, second)
    return {"distance": dist}, None, [str(p) for p in pair]


def cmd_coarseint(args, Hs):
    _need_subgroups(Hs, 2, "coarseint")
    R, L = _need(args, "R"), _need(args, "L")
    elements = coarse_intersection(Hs[0], Hs[1], R, L)
    return {"count": len(elements), "elements": [str(h) for h in elements]}, L, []


def cmd_hausgap(args, Hs):
    _need_subgroups(Hs, 2, "hausgap")
    R, L = _need(args, "R"), _need(args, "L")
    return {"gap": hausdorff_gap(Hs[0], Hs[1], R, L)}, L, []


def cmd_dcfinite(args, Hs):
    _need_subgroups(Hs, 2, "dcfinite")
    R, C, L = _need(args, "R"), _need(args, "C"), _need(args, "L")
    found = double_coset_finiteness(Hs[0], Hs[1], R, C, L)
    return {"count": len(found), "words": [str(s) for s in found]}, L, []


def cmd_barycenter(args, Hs):
    _need_subgroups(Hs, 1, "barycenter")
    cosets = _cosets(args, Hs)
    x, radius, L = coarse_barycenter(cosets, _need(args, "D"), args.L, debug=args.debug)
    return {"center": str(x), "radius": radius}, L, [str(x)]


def cmd_packing(args, Hs):
    _need_subgroups(Hs, 1, "packing")
    D, search_len = _need(args, "D"), _need(args, "search_len")
    if len(Hs) == 1:
        family, size = packing_experiment(Hs[0], D, search_len)
    else:
        family, size = family_packing(Hs, D, search_len)
    return {"size": size, "cosets": [c.to_dict() for c in family]}, None, []


def cmd_nearpack(args, Hs):
    _need_subgroups(Hs, 1, "nearpack")
    x = parse_word(_need(args, "x"), Hs[0].rank)
    L = _need(args, "L")
    return near_conjugate_packing(Hs[0], x, L), L, []


def cmd_projgap(args, Hs):
    _need_subgroups(Hs, 1, "projgap")
    coset = _cosets(args, Hs[:1])[0]
    L = _need(args, "L")
    return {"gap": projection_gap(coset, L)}, L, []


# -- quasimorphism commands ------------------------------------------------------

def _values(q, args, rank) -> Dict[str, float]:
    return {str(x): q.evaluate(x) for x in _words(args, "x", rank)}


def cmd_qm_eval(args, Hs):
    q = load_quasimorphism(_need(args, "qm"), args.rank)
    return {"values": _values(q, args, q.rank)}, None, []


def cmd_qm_defect(args, Hs):
    q = load_quasimorphism(_need(args, "qm"), args.rank)
    L = _need(args, "L")
    report = defect(q, L, args.sample, args.seed, debug=args.debug)
    return report.to_dict(), L, list(report.worst)


def cmd_qm_homogenize(args, Hs):
    q = load_quasimorphism(_need(args, "qm"), args.rank)
    values = {str(x): homogenize(q, x, args.N, args.exact) for x in _words(args, "x", q.rank)}
    return {"values": values, "N": args.N, "exact": args.exact}, None, []


def cmd_qm_extend(args, Hs):
    _need_subgroups(Hs, 1, "qm extend")
    H = Hs[0]
    q = load_quasimorphism(_need(args, "qm"), H.rank)
    extended = psi_extend(H, q, args.D, args.N, check_oracle=args.check_oracle)
    result = {"descriptor": extended.to_dict(), "values": _values(extended, args, H.rank)}
    L = args.L
    if L is not None:
        result["restrictionError"] = restriction_error(extended, H, q, L)
    return result, L, []


def cmd_qm_extend_multi(args, Hs):
    pairs = load_family(_need(args, "family"))
    L = args.L if args.L is not None else DEFAULT_SCALE
    q = simultaneous_extend(pairs, args.D, args.N, L, _tol(args), debug=args.debug)
    result = {
        "values": _values(q, args, q.rank),
        "restrictionErrors": [restriction_error(q, H, qH, L) for H, qH in pairs],
    }
    return result, L, []


def cmd_qm_compat(args, Hs):
    pairs = load_family(_need(args, "family"))
    L = args.L if args.L is not None else DEFAULT_SCALE
    report = check_compatibility(pairs, L, _tol(args))
    return report.to_dict(), L, [[str(v.x), str(v.y)] for v in report.violations]


def cmd_qm_demo(args, Hs):
    D = args.D if args.D is not None else DEMO_TRACE_THRESHOLD
    L = args.L if args.L is not None else DEFAULT_SCALE
    _, _, report = invisible_class_demo(Hs, args.seed, args.word_length, D, args.N, L,
                                       _tol(args, DEMO_TOLERANCE),
                                       debug=args.debug)
    return report, L, [report["witness"]]


COMMANDS: Dict[str, Tuple[Handler, str]] = {
    "fold": (cmd_fold, "Fold generators into a Stallings graph"),
    "member": (cmd_member, "Test membership of --word"),
    "intersect": (cmd_intersect, "Intersect subgroups"),
    "malnormal": (cmd_malnormal, "Test malnormality"),
    "dcscan": (cmd_dcscan, "Scan double cosets H1 t H2"),
    "reps": (cmd_reps, "Conjugacy class representatives of infinite intersections"),
    "height": (cmd_height, "Height certificate"),
    "width": (cmd_width, "Width certificate"),
    "family": (cmd_family, "Height and width of a family"),
    "classes": (cmd_classes, "Conjugacy classes of infinite intersections"),
    "nearest": (cmd_nearest, "Closest points of a coset to --x"),
    "cosetdist": (cmd_cosetdist, "Distance between two cosets"),
    "coarseint": (cmd_coarseint, "Coarse intersection at scale --L"),
    "hausgap": (cmd_hausgap, "Hausdorff gap between coarse and algebraic intersection"),
    "dcfinite": (cmd_dcfinite, "Double cosets with long coarse intersections"),
    "barycenter": (cmd_barycenter, "Coarse barycenter of pairwise close cosets"),
    "packing": (cmd_packing, "Packing experiment"),
    "nearpack": (cmd_nearpack, "Coset bijection for H and xHx^-1"),
    "projgap": (cmd_projgap, "Gap between entrance and closest-point projections"),
}

QM_COMMANDS: Dict[str, Tuple[Handler, str]] = {
    "eval": (cmd_qm_eval, "Evaluate a quasimorphism at --x"),
    "defect": (cmd_qm_defect, "Measure the defect on ball(--L)"),
    "homogenize": (cmd_qm_homogenize, "Homogenized values at --x"),
    "extend": (cmd_qm_extend, "Extend a quasimorphism on a subgroup"),
    "extend-multi": (cmd_qm_extend_multi, "Extend a compatible family simultaneously"),
    "compat": (cmd_qm_compat, "Check intersection compatibility"),
    "demo": (cmd_qm_demo, "Quasimorphism vanishing on the given subgroups"),
}


def _common_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--rank', type=int, help='Rank of the ambient free group (inferred when omitted).')
    common.add_argument('--subgroup', action='append', default=[], metavar='FILE',
                        help='Subgroup file, one generator per line. Repeatable.')
    common.add_argument('--gens', action='append', default=[], metavar='WORDS',
                        help='Comma-separated generators of a subgroup. Repeatable.')
    common.add_argument('--depth', type=int, default=DEFAULT_DEPTH, help='Search depth for height and width.')
    common.add_argument('--D', type=int, dest='D', help='Closeness bound or trace threshold.')
    common.add_argument('--L', type=int, dest='L', help='Ball radius (scale).')
    common.add_argument('--N', type=int, dest='N', default=DEFAULT_POWER_DEPTH, help='Homogenization depth.')
    common.add_argument('--R', type=int, dest='R', help='Neighbourhood radius.')
    common.add_argument('--C', type=int, dest='C', help='Diameter threshold.')
    common.add_argument('--seed', type=int, default=0, help='Random seed.')
    common.add_argument('--tol', type=float, help='Numerical tolerance.')
    common.add_argument('--word', help='Word for membership.')
    common.add_argument('--x', help='Comma-separated evaluation words.')
    common.add_argument('--reps', help='Comma-separated coset representatives, one per subgroup.')
    common.add_argument('--qm', metavar='FILE', help='Quasimorphism JSON descriptor.')
    common.add_argument('--family', metavar='FILE', help='JSON list of (subgroup, quasimorphism) pairs.')
    common.add_argument('--search-len', type=int, dest='search_len', help='Coset representative length.')
    common.add_argument('--word-length', type=int, dest='word_length', default=DEMO_WORD_LENGTH,
                        help='Generator length for sampled subgroups.')
    common.add_argument('--sample', type=int, default=2000, help='Sample size for sampled defects.')
    common.add_argument('--exact', action='store_true', help='Exact cyclic homogenization.')
    common.add_argument('--check-oracle', action='store_true', dest='check_oracle',
                        help='Compare coset enumeration with brute force while evaluating.')
    common.add_argument('--json-out', metavar='FILE', help='Write the report here instead of stdout.')
    common.add_argument('--debug', action='store_true', help='Enable verbose debug output.')
    return common


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments.

    Raises:
        UsageError: on any argument problem
    """
    parser = _Parser(
        prog=TOOL_NAME,
        description='Stable subgroups of free groups: Stallings graphs, coset geometry, '
                    'height and width, and quasimorphism extension.',
        epilog="Example: python3 -m stablekit height --subgroup samples/a.sub --depth 4",
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--version', action='version', version=f"{TOOL_NAME} {TOOL_VERSION}")
    common = _common_parser()
    sub = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    qm = sub.add_parser('qm', help='Quasimorphism operations')
    qm_sub = qm.add_subparsers(dest='qm_command', required=True)
    for name, (_, help_text) in QM_COMMANDS.items():
        qm_sub.add_parser(name, parents=[common], help=help_text)
    verify = sub.add_parser('verify', help='Run the self-check suite')
    verify.add_argument('--level', choices=('quick', 'full'), default='quick')
    verify.add_argument('--record', action='store_true', help='Pin missing regression values.')
    verify.add_argument('--json-out', metavar='FILE')
    verify.add_argument('--debug', action='store_true')
    run = sub.add_parser('run', help='Run an experiment spec file')
    run.add_argument('spec', metavar='SPEC')
    return parser.parse_args(argv)


def _operation(args: argparse.Namespace) -> str:
    if args.command == 'qm':
        return f"qm {args.qm_command}"
    return args.command


def execute(args: argparse.Namespace) -> int:
    """Run one parsed command and write its report.

    Returns:
        Process exit code: 0 success, 1 bad input, 2 refused precondition
    """
    operation = _operation(args)
    if args.command == 'verify':
        passed, summary = verify_suite(args.level, args.record, args.debug)
        write_report(build_report(operation, {"level": args.level}, summary), args.json_out)
        return 0 if passed else 1

    handler = QM_COMMANDS[args.qm_command][0] if args.command == 'qm' else COMMANDS[args.command][0]
    Hs: List[StallingsGraph] = []
    inputs: Dict[str, Any] = {}
    try:
        Hs = _load_subgroups(args, EXTENSION_RANK if args.command == 'qm' else 1)
        inputs = _echo(args, Hs)
        log_debug(f"{operation} on {len(Hs)} subgroup(s)", args.debug)
        result, scale, witnesses = handler(args, Hs)
    except PreconditionRefused as e:
        log_error(str(e))
        write_report(build_report(operation, inputs or _echo(args, Hs), None, args.L, [], e.payload()),
                     args.json_out)
        return e.exit_code
    except StableKitError as e:
        log_error(str(e))
        return e.exit_code
    except ValueError as e:
        log_error(str(e))
        if args.debug:
            log_debug(f"Traceback:\n{traceback.format_exc()}", True)
        return 1
    write_report(build_report(operation, inputs, result, scale, witnesses), args.json_out)
    return 0


def run(spec_path: str) -> int:
    """Validate an experiment spec and run the command it names."""
    try:
        spec = load_experiment(spec_path)
        args = parse_args(experiment_argv(spec))
        if args.command == 'run':
            raise UsageError("an experiment spec cannot run another spec")
    except StableKitError as e:
        log_error(str(e))
        return e.exit_code
    log_info(f"Running experiment {spec_path}: {spec['operation']}")
    return execute(args)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    try:
        args = parse_args(argv)
    except UsageError as e:
        log_error(str(e))
        return e.exit_code

    if getattr(args, "debug", False):
        print(f"{Colors.BOLD}{f'{TOOL_NAME} {TOOL_VERSION}':^80}{Colors.ENDC}", file=sys.stderr)
        log_debug("Debug mode enabled", True)

    if args.command == 'run':
        return run(args.spec)
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
