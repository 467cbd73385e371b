"""Self-checks against brute-force oracles and pinned regression values.

Every ``check_*`` function returns (passed, details) where details carries a
human-readable ``message`` and the constants it measured.
"""

import os
import random
from functools import reduce
from itertools import product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .errors import IncompatibleFamilyError
from .heightwidth import brute_force_oracle, height, width
from .qmorph import (Homomorphism, Intrinsic, check_compatibility, defect, invisible_class_demo,
                     psi_extend, restriction_error, simultaneous_extend, theta_extend, zero_on)
from .regression import RegressionStore
from .reporting import display_constant_table, display_verify_summary, render_report, round_floats
from .stallings import StallingsGraph, intersect
from .treegeo import (CosetRef, brute_force_center, canonicalize, coarse_barycenter,
                      coset_distance, hausdorff_gap)
from .utils import clear_cache, log_debug, log_error, log_info, log_success
from .words import FreeWord, are_conjugate, ball, multiply, parse_word, random_word

CheckResult = Tuple[bool, Dict[str, Any]]

# (quick, full) parameters per check
LEVELS = {
    "quick": {
        "stallings_count": 40, "stallings_radius": 5,
        "hw_conj_len": 3, "hw_subgroups": ("a", "aa"),
        "helly_count": 20, "helly_radius": 7,
        "plateau_count": 4, "plateau_scales": (8, 10),
        "theta_ball": 4, "theta_defect_scales": (3, 4),
        "extend_radius": 4, "extend_defect_scale": 2,
        "demo_radius": 4,
    },
    "full": {
        "stallings_count": 200, "stallings_radius": 6,
        "hw_conj_len": 4, "hw_subgroups": ("a", "aa", "index2"),
        "helly_count": 100, "helly_radius": 8,
        "plateau_count": 20, "plateau_scales": (8, 10, 12),
        "theta_ball": 6, "theta_defect_scales": (3, 4, 5),
        "extend_radius": 6, "extend_defect_scale": 4,
        "demo_radius": 6,
    },
}

KNOWN_SUBGROUPS = {
    "a": (2, ["a"]),
    "aa": (2, ["aa"]),
    "index2": (2, ["aa", "b", "abA"]),
}


def _subgroup(name: str) -> StallingsGraph:
    rank, gens = KNOWN_SUBGROUPS[name]
    return StallingsGraph.from_generators(rank, [parse_word(g, rank) for g in gens])


def _random_generators(rng: random.Random) -> Tuple[int, List[FreeWord]]:
    rank = rng.choice((2, 3))
    count = rng.randint(1, 3)
    gens = [random_word(rank, rng.randint(1, 4), rng) for _ in range(count)]
    return rank, gens


def _naive_products(rank: int, gens: List[FreeWord], factors: int, radius: int) -> set:
    """Products of at most ``factors`` generators or inverses that land in ball(radius)."""
    letters = gens + [~g for g in gens]
    found = {FreeWord.identity(rank)}
    for count in range(1, factors + 1):
        for choice in product(letters, repeat=count):
            w = reduce(multiply, choice, FreeWord.identity(rank))
            if len(w) <= radius:
                found.add(w)
    return found


def check_stallings(count: int, radius: int, seed: int = 0) -> CheckResult:
    """Membership and intersection against naive enumeration on random subgroups."""
    rng = random.Random(seed)
    for trial in range(count):
        rank, gens = _random_generators(rng)
        H = StallingsGraph.from_generators(rank, gens)
        for w in _naive_products(rank, gens, 3, radius):
            if not H.contains(w):
                return False, {"message": f"trial {trial}: product {w} of {gens} not recognized"}
        for h in H.elements(radius):
            spelled = H.spell(h)
            basis = H.generators()
            rebuilt = FreeWord.identity(rank)
            for index, sign in spelled:
                rebuilt = rebuilt * (basis[index] if sign > 0 else ~basis[index])
            if rebuilt != h:
                return False, {"message": f"trial {trial}: {h} spelled as {spelled} rebuilds {rebuilt}"}
        other = [random_word(rank, rng.randint(1, 4), rng) for _ in range(rng.randint(1, 3))]
        H2 = StallingsGraph.from_generators(rank, other)
        K = intersect(H, H2)
        for w in ball(rank, min(radius, 4)):
            if K.contains(w) != (H.contains(w) and H2.contains(w)):
                return False, {"message": f"trial {trial}: intersection disagrees at {w}"}
    return True, {"message": f"{count} random subgroups agree up to radius {radius}"}


def check_height_width(names: Tuple[str, ...], conj_len: int) -> CheckResult:
    """Height and width certificates against the exhaustive oracle."""
    measured = {}
    for name in names:
        H = _subgroup(name)
        h, w = height(H, 4), width(H, 4)
        oracle_h, oracle_w = brute_force_oracle(H, conj_len=conj_len, tuple_size=4)
        if not (h.verify() and w.verify()):
            return False, {"message": f"{name}: certificate does not verify"}
        if (h.n, w.m) != (oracle_h.n, oracle_w.m) or not (h.exact and w.exact):
            return False, {"message": f"{name}: height/width {h.n}/{w.m}, oracle {oracle_h.n}/{oracle_w.m}"}
        measured[f"height_{name}"] = h.n
        measured[f"width_{name}"] = w.m
    return True, {"message": f"{len(names)} subgroup(s) match the oracle at conjugator length {conj_len}",
                  "constants": measured}


def _close_triple(rng: random.Random, D: int) -> List[CosetRef]:
    while True:
        rank = 2
        cosets = []
        for _ in range(3):
            gens = [random_word(rank, rng.randint(1, 2), rng) for _ in range(rng.randint(1, 2))]
            H = StallingsGraph.from_generators(rank, gens)
            cosets.append(canonicalize(random_word(rank, rng.randint(0, 2), rng), H))
        if all(coset_distance(a, b)[0] <= D for a, b in
               ((cosets[0], cosets[1]), (cosets[0], cosets[2]), (cosets[1], cosets[2]))):
            return cosets


def check_coarse_helly(count: int, radius: int, seed: int = 0) -> CheckResult:
    """Barycenter radius equals the exhaustive 1-center optimum and stays within D plus the margin."""
    rng = random.Random(seed)
    radii = []
    for trial in range(count):
        D = rng.randint(1, 3)
        cosets = _close_triple(rng, D)
        center, r, _ = coarse_barycenter(cosets, D, L=radius)
        _, best = brute_force_center(cosets, radius)
        margin = max(c.subgroup.quasiconvexity_constant() for c in cosets)
        if r != best:
            return False, {"message": f"trial {trial}: barycenter radius {r} at {center}, optimum {best}"}
        if r > D + margin:
            return False, {"message": f"trial {trial}: radius {r} exceeds D + margin = {D + margin}"}
        radii.append(r)
    return True, {"message": f"{count} triples at optimum radius",
                  "constants": {f"barycenter_radius_max_{count}x{radius}": max(radii, default=0)}}


def check_hausdorff_plateau(count: int, scales: Tuple[int, ...], seed: int = 0) -> CheckResult:
    """hausdorff_gap(R=2) is constant across scales for pairs sharing a generator."""
    rng = random.Random(seed)
    constants = {}
    for trial in range(count):
        u, v, w = (random_word(2, rng.randint(1, 3), rng) for _ in range(3))
        H1 = StallingsGraph.from_generators(2, [u, v])
        H2 = StallingsGraph.from_generators(2, [u, w])
        gaps = [hausdorff_gap(H1, H2, 2, L) for L in scales]
        if len(set(gaps)) != 1:
            return False, {"message": f"trial {trial}: gaps {gaps} at scales {list(scales)}"}
        constants[f"hausgap_{trial}"] = gaps[0]
    return True, {"message": f"{count} pair(s) plateau over scales {list(scales)}", "constants": constants}


def _counting_on_a() -> Tuple[StallingsGraph, Intrinsic]:
    H = _subgroup("a")
    return H, Intrinsic(H, Homomorphism(1, (1.0,)))


def check_theta_psi(ball_radius: int, defect_scales: Tuple[int, ...]) -> CheckResult:
    """Extension of a^k -> k at the default threshold.

    Psi is exact on powers and Theta alternating. Theta counts maximal
    a-runs longer than D = 4, so its defect grows with the scale until
    runs of length 2D fit in a product and stays flat afterwards.
    """
    H, q = _counting_on_a()
    a = parse_word("a", 2)
    psi = psi_extend(H, q, N=8)
    for k in range(-6, 7):
        if psi.evaluate(a ** k) != float(k):
            return False, {"message": f"Psi(a^{k}) = {psi.evaluate(a ** k)}"}
    theta = theta_extend(H, q)
    for x in ball(2, ball_radius):
        if theta.evaluate(~x) != -theta.evaluate(x):
            return False, {"message": f"Theta not alternating at {x}"}
    defects = [defect(theta, L).value for L in defect_scales]
    constants = {f"theta_a_defect_L{L}": value for L, value in zip(defect_scales, defects)}
    constants["theta_a_restriction"] = restriction_error(theta, H, q, ball_radius)
    if len(defects) >= 3 and defects[-1] != defects[-2]:
        return False, {"message": f"Theta defect {defects} has no plateau over scales {list(defect_scales)}"}
    return True, {"message": f"Psi exact for |k| <= 6, Theta alternating on ball({ball_radius})",
                  "constants": constants}


def check_simultaneous_extension(radius: int, defect_scale: int) -> CheckResult:
    """Both directions of the extension theorem on the standard pairs."""
    A = _subgroup("a")
    B = StallingsGraph.from_generators(2, [parse_word("b", 2)])
    pairs = [(A, Intrinsic(A, Homomorphism(1, (1.0,)))), (B, Intrinsic(B, Homomorphism(1, (1.0,))))]
    q = simultaneous_extend(pairs, N=8)
    errors = [restriction_error(q, H, qH, radius) for H, qH in pairs]
    if max(errors) > 1e-9:
        return False, {"message": f"restriction errors {errors}"}
    measured = defect(q, defect_scale).value

    C = StallingsGraph.from_generators(2, [parse_word("baB", 2)])
    bad = [(A, Intrinsic(A, Homomorphism(1, (1.0,)))), (C, zero_on(C))]
    try:
        simultaneous_extend(bad, N=8)
    except IncompatibleFamilyError as e:
        violation = e.report.violations[0]
        ok, _ = are_conjugate(violation.x, violation.y)
        if not ok or (str(violation.x), str(violation.y)) != ("a", "baB"):
            return False, {"message": f"unexpected violation {violation.to_dict()}"}
    else:
        return False, {"message": "incompatible pair was not refused"}
    if check_compatibility(pairs, radius).compatible is not True:
        return False, {"message": "compatible pair reported incompatible"}
    return True, {"message": f"restriction error {max(errors):g}, incompatible pair refused",
                  "constants": {f"extend_ab_defect_L{defect_scale}": measured}}


def check_invisible_class(radius: int, seed: int = 0) -> CheckResult:
    """Quasimorphism vanishing on <a> but not on a sampled subgroup."""
    A = _subgroup("a")
    H, q, report = invisible_class_demo([A], seed, check_radius=radius)
    if not report["vanishes"]:
        return False, {"message": f"restriction errors {report['restriction_errors']}"}
    if not report["nontrivial"]:
        return False, {"message": f"witness value {report['witness_value']} below 1/2"}
    return True, {"message": f"q({report['witness']}) = {report['witness_value']:.6g}, vanishes on <a>"}


def _checks(level: str) -> List[Tuple[str, Callable[[], CheckResult]]]:
    p = LEVELS[level]
    return [
        ("Stallings membership and intersection",
         lambda: check_stallings(p["stallings_count"], p["stallings_radius"])),
        ("Height and width", lambda: check_height_width(p["hw_subgroups"], p["hw_conj_len"])),
        ("Coarse Helly barycenter", lambda: check_coarse_helly(p["helly_count"], p["helly_radius"])),
        ("Coarse intersection plateau",
         lambda: check_hausdorff_plateau(p["plateau_count"], p["plateau_scales"])),
        ("Theta/Psi extension", lambda: check_theta_psi(p["theta_ball"], p["theta_defect_scales"])),
        ("Simultaneous extension",
         lambda: check_simultaneous_extension(p["extend_radius"], p["extend_defect_scale"])),
        ("Invisible class", lambda: check_invisible_class(p["demo_radius"])),
        ("Determinism", lambda: check_determinism("quick")),
    ]


def _run_checks(level: str, names: Optional[Sequence[str]] = None,
                debug: bool = False) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    checks = _checks(level)
    if names is not None:
        unknown = set(names) - {name for name, _ in checks}
        if unknown:
            raise ValueError(f"unknown check(s): {sorted(unknown)}")
        checks = [(name, check) for name, check in checks if name in names]
    results = []
    constants: Dict[str, Any] = {}
    for name, check in checks:
        log_debug(f"check: {name}", debug)
        try:
            passed, details = check()
        except Exception as e:
            passed, details = False, {"message": f"{type(e).__name__}: {e}"}
        results.append({"name": name, "passed": passed, "message": details["message"]})
        constants.update(details.get("constants", {}))
    return results, constants


def suite_report(level: str = "quick", names: Optional[Sequence[str]] = None) -> str:
    """Rendered results and constants of a level, without the determinism check."""
    pool = names if names is not None else [n for n, _ in _checks(level)]
    selected = [n for n in pool if n != "Determinism"]
    results, constants = _run_checks(level, selected)
    return render_report(round_floats({"level": level, "checks": results, "constants": constants}))


def check_determinism(level: str = "quick", names: Optional[Sequence[str]] = None) -> CheckResult:
    """Identical suite reports across repeated runs and worker counts."""
    saved = os.environ.get("STABLEKIT_THREADS")
    outputs = []
    try:
        for threads in ("1", "4", "1"):
            os.environ["STABLEKIT_THREADS"] = threads
            clear_cache()
            outputs.append(suite_report(level, names))
    finally:
        if saved is None:
            os.environ.pop("STABLEKIT_THREADS", None)
        else:
            os.environ["STABLEKIT_THREADS"] = saved
    if len(set(outputs)) != 1:
        return False, {"message": f"{level} report differs across runs or worker counts"}
    return True, {"message": f"{level} report byte-identical across 3 runs with 1 and 4 workers"}


def verify_suite(level: str = "quick", record: bool = False, debug: bool = False) -> Tuple[bool, Dict[str, Any]]:
    """Run every check at the given level and compare measured constants.

    Missing regression values are written on full runs or when ``record`` is set.

    Returns:
        (all passed, summary dict with results, constants, diffs, recorded names)
    """
    if level not in LEVELS:
        raise ValueError(f"unknown verification level {level!r}")
    log_info(f"Running {level} verification suite...")
    results, constants = _run_checks(level, debug=debug)

    store = RegressionStore(debug=debug)
    store.load()
    diffs = store.compare(constants)
    recorded: List[str] = []
    if record or level == "full":
        recorded = [n for n in store.missing(constants) if store.record(n, constants[n])]
        store.save()

    display_verify_summary(level, results, diffs)
    display_constant_table(constants)
    passed = all(r["passed"] for r in results) and not diffs
    if passed:
        log_success(f"{level} verification passed")
    else:
        log_error(f"{level} verification failed")
    summary = {
        "level": level,
        "checks": results,
        "constants": constants,
        "diffs": diffs,
        "recorded": recorded,
    }
    return passed, summary
