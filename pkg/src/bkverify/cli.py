"""Command-line front end.

Exit codes: 0 all checks passed, 1 at least one inequality violated,
2 malformed input or configuration.  Reports are JSON lines on stdout (or
``--out``); every record carries the parameters needed to re-run it alone
via ``suite --instance <id>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .boxops import (
    ChangingPathRule,
    FullRule,
    PotentialClusterRule,
    SpinClusterRule,
    UpperOnesRule,
    box,
    minimal_witnesses,
    reimer_gap,
)
from .errors import InputError
from .folding import cw_fold_parameter, fold
from .harness import DEFAULT_SEED, run_suite
from .measures import (
    DEFAULT_TOL,
    IsingFamily,
    PottsFamily,
    GibbsFamily,
    build_measure,
    check_bk_pair,
    check_lattice_condition,
)
from .connectivity import corollary19_check, four_arm_check
from .permsolver import akj, count_matchings, matching_base, solve_xi
from .potentials import canonical_potential, potential_from_config
from .rcr import check_condition_i, check_condition_ii, gibbs_base, trivial_base, validate_rcr
from .space import Event, enumerate_increasing


def build_rule(desc, measure):
    """Selection rule from a descriptor like {"kind": "cluster_disjoint"}."""
    kind = desc if isinstance(desc, str) else desc.get("kind", "full")
    if kind == "full":
        return FullRule()
    if kind == "upper_ones":
        return UpperOnesRule()
    fam = measure.family
    if kind == "cluster_disjoint":
        if isinstance(desc, dict) and "potential" in desc:
            return PotentialClusterRule(potential_from_config(desc["potential"]))
        if isinstance(fam, GibbsFamily):
            return PotentialClusterRule(fam.potential)
        if isinstance(fam, (IsingFamily, PottsFamily)):
            return PotentialClusterRule(canonical_potential(fam))
        raise InputError("cluster_disjoint rule needs a potential")
    if kind == "ising_spin":
        if not isinstance(fam, IsingFamily):
            raise InputError("ising_spin rule needs an ising measure")
        return SpinClusterRule(measure.space, [(i, j) for i, j, v in fam.couplings if v > 0])
    if kind == "potts_changing":
        if not isinstance(fam, PottsFamily):
            raise InputError("potts_changing rule needs a potts measure")
        return ChangingPathRule(measure.space, [(i, j) for i, j, v in fam.couplings if v != 0])
    raise InputError(f"unknown rule kind {kind!r}")


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc


def _emit(payload, out):
    text = json.dumps(payload, sort_keys=True) + "\n"
    if out:
        with open(out, "a", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(sp):
    sp.add_argument("--tolerance", type=float, default=None, help="relative tolerance for inequality checks")
    sp.add_argument("--out", default=None, help="write the report to this path instead of stdout")


def _parser():
    p = argparse.ArgumentParser(prog="bkverify", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("suite", help="run a named verification suite")
    sp.add_argument("--config", help="JSON config with a 'suite' key and overrides")
    sp.add_argument("--suite", help="suite name (alternative to --config)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--instance", default=None, help="re-run a single record by id")
    sp.add_argument("--seed", type=int, default=None)
    _add_common(sp)

    sp = sub.add_parser("reimer", help="exhaustive disjoint-occurrence count bound")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)

    sp = sub.add_parser("bk", help="product bound for one pair or an increasing sweep")
    sp.add_argument("--config", required=True, help="measure descriptor JSON")
    sp.add_argument("--rule", default="full")
    sp.add_argument("--event-a", default=None, help="hex bitset; omit for an increasing sweep")
    sp.add_argument("--event-b", default=None)
    _add_common(sp)

    sp = sub.add_parser("nlc", help="lattice condition check")
    sp.add_argument("--config", required=True)
    sp.add_argument("--sign", choices=["negative", "positive"], default="negative")
    _add_common(sp)

    sp = sub.add_parser("fold", help="fold a measure over a locked site set")
    sp.add_argument("--config", required=True)
    sp.add_argument("--locked", default="", help="comma-separated sites")
    sp.add_argument("--alpha", default="", help="comma-separated locked values")
    sp.add_argument("--fit", action="store_true", help="also fit the level power law")
    _add_common(sp)

    sp = sub.add_parser("rcr-validate", help="validate a base against a measure")
    sp.add_argument("--config", required=True, help='{"measure":..., "base":...}')
    _add_common(sp)

    sp = sub.add_parser("gibbs-base", help="dump the monotone base of a potential")
    sp.add_argument("--config", required=True, help="potential descriptor JSON")
    _add_common(sp)

    sp = sub.add_parser("conditions", help="symmetry/separation checks over foldings")
    sp.add_argument("--config", required=True)
    _add_common(sp)

    sp = sub.add_parser("xi", help="solve the triangular level-weight system")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--x", default=None, help="ratio, e.g. 2 or 11/10")
    sp.add_argument("--p", default=None, help="comma-separated level weights")
    sp.add_argument("--exact", action="store_true")
    _add_common(sp)

    sp = sub.add_parser("matchings", help="compatible matching counts vs the formula")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--omega", default=None, help="binary string, e.g. 1100")
    sp.add_argument("--j", type=int, default=None)
    _add_common(sp)

    sp = sub.add_parser("four-arm", help="four-arm vs one-arm product on the punctured box")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--coupling", type=float, required=True)
    sp.add_argument("--fields", default=None, help="comma-separated per-site fields")
    _add_common(sp)

    sp = sub.add_parser("corollary19", help="separated plus-connections product bound")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--graphs", type=int, default=1)
    _add_common(sp)
    return p


def _tol_of(args):
    return args.tolerance if args.tolerance is not None else DEFAULT_TOL


def _cmd_suite(args):
    cfg = _load_config(args.config) if args.config else {}
    if args.suite:
        cfg["suite"] = args.suite
    if args.tolerance is not None:
        cfg["tolerance"] = args.tolerance
    if args.seed is not None:
        cfg["seed"] = args.seed
    code, _summary = run_suite(cfg, jobs=args.jobs, out=args.out, instance=args.instance)
    return code

def _cmd_reimer(args):
    cfg = {"suite": "reimer", "n": args.n}
    if args.tolerance is not None:
        cfg["tolerance"] = args.tolerance
    code, _ = run_suite(cfg, jobs=args.jobs, out=args.out)
    return code


def _cmd_bk(args):
    measure = build_measure(_load_config(args.config))
    rule = build_rule(args.rule, measure)
    tol = _tol_of(args)
    if (args.event_a is None) != (args.event_b is None):
        raise InputError("pass both --event-a and --event-b, or neither")
    failed = 0
    if args.event_a is not None:
        a = Event.from_hex(measure.space, args.event_a)
        b = Event.from_hex(measure.space, args.event_b)
        rep = check_bk_pair(measure, a, b, rule, tol)
        _emit({"check": "bk", "lhs": rep.lhs, "rhs": rep.rhs, "margin": rep.margin,
               "passed": rep.passed, "a": a.to_hex(), "b": b.to_hex(), "header": a.header()}, args.out)
        failed += 0 if rep.passed else 1
    else:
        events = enumerate_increasing(measure.space)
        worst = None
        for i, a in enumerate(events):
            for b in events[i:]:
                rep = check_bk_pair(measure, a, b, rule, tol)
                if not rep.passed:
                    failed += 1
                if worst is None or rep.margin < worst[0]:
                    worst = (rep.margin, a.to_hex(), b.to_hex())
        _emit({"check": "bk-sweep", "pairs_unordered": len(events) * (len(events) + 1) // 2,
               "failed": failed, "min_margin": worst[0], "worst_pair": worst[1:]}, args.out)
    return 1 if failed else 0


def _cmd_nlc(args):
    measure = build_measure(_load_config(args.config))
    rep = check_lattice_condition(measure, args.sign, _tol_of(args))
    _emit({"check": "nlc", "sign": rep.sign, "passed": rep.ok,
           "worst_margin": rep.worst_margin, "witness": rep.witness}, args.out)
    return 0 if rep.ok else 1


def _parse_sites(text):
    return tuple(int(t) for t in text.split(",") if t.strip() != "")


def _cmd_fold(args):
    measure = build_measure(_load_config(args.config))
    locked = _parse_sites(args.locked)
    alpha_vals = []
    for tok in args.alpha.split(","):
        tok = tok.strip()
        if tok == "":
            continue
        try:
            alpha_vals.append(int(tok))
        except ValueError:
            alpha_vals.append(tok)
    folding = fold(measure, locked, tuple(alpha_vals))
    payload = {
        "check": "fold",
        "locked": list(folding.locked),
        "alpha": list(folding.alpha),
        "sites": folding.space.n,
        "weights": [float(w) for w in folding.result.weights_float()],
    }
    if args.fit:
        x, n_unlocked = cw_fold_parameter(measure, locked, tuple(alpha_vals))
        payload["fit_x"] = x
        payload["unlocked"] = n_unlocked
    _emit(payload, args.out)
    return 0


def _build_base(desc, measure):
    kind = desc.get("type")
    if kind == "trivial":
        return trivial_base(measure)
    if kind == "matching":
        n = measure.space.n
        if "xi" in desc:
            xi = [Fraction(v) if isinstance(v, str) else v for v in desc["xi"]]
        else:
            x = desc.get("x", "1")
            xi = solve_xi(n, x=Fraction(x) if isinstance(x, str) else x).xi
        return matching_base(n, xi)
    if kind == "gibbs":
        return gibbs_base(potential_from_config(desc["potential"]))
    raise InputError(f"unknown base type {desc.get('type')!r}")


def _cmd_rcr_validate(args):
    cfg = _load_config(args.config)
    measure = build_measure(cfg["measure"])
    base = _build_base(cfg.get("base", {"type": "trivial"}), measure)
    val = validate_rcr(base, measure, tol=_tol_of(args))
    _emit({"check": "rcr-validate", "passed": val.ok, "max_rel_dev": val.max_rel_dev,
           "scale": val.scale, "support": len(base)}, args.out)
    return 0 if val.ok else 1


def _cmd_gibbs_base(args):
    pot = potential_from_config(_load_config(args.config))
    base = gibbs_base(pot)
    _emit({"check": "gibbs-base", "support": len(base), "entries": base.to_records()}, args.out)
    return 0


def _cmd_conditions(args):
    cfg = _load_config(args.config)
    measure = build_measure(cfg["measure"])
    rule = build_rule(cfg.get("rule", "full"), measure)
    from .folding import all_foldings, folded_potential
    from .potentials import ising_potential

    events_cfg = cfg.get("events", {})
    space = measure.space
    if "a" in events_cfg:
        pairs = [(Event.from_hex(space, events_cfg["a"]), Event.from_hex(space, events_cfg["b"]))]
    else:
        incr = enumerate_increasing(space)
        pairs = [(a, b) for a in incr for b in incr]
    fam = measure.family
    ok = True
    count = 0
    for folding in all_foldings(measure, include_trivial=False, skip_degenerate=True):
        base = _build_base(cfg.get("base", {"type": "trivial"}), measure) if "base" in cfg else None
        if base is None:
            if isinstance(fam, (IsingFamily, PottsFamily, GibbsFamily)):
                pot = fam.potential if isinstance(fam, GibbsFamily) else canonical_potential(fam)
                base = gibbs_base(folded_potential(pot, folding.locked, folding.alpha))
            else:
                x, n_unlocked = cw_fold_parameter(measure, folding.locked, folding.alpha)
                base = matching_base(n_unlocked, [max(0.0, v) for v in solve_xi(n_unlocked, x=x).xi])
        sym = check_condition_i(base)
        ok = ok and sym.ok
        for a, b in pairs:
            rep = check_condition_ii(base, rule, a, b, folding.locked, folding.alpha)
            count += rep.checked
            ok = ok and rep.ok
    _emit({"check": "conditions", "passed": ok, "separations_checked": count,
           "foldings": "all"}, args.out)
    return 0 if ok else 1


def _cmd_xi(args):
    if (args.x is None) == (args.p is None):
        raise InputError("pass exactly one of --x or --p")
    if args.x is not None:
        x = Fraction(args.x) if args.exact else float(Fraction(args.x))
        sol = solve_xi(args.n, x=x, exact=args.exact)
    else:
        p = [Fraction(t) if args.exact else float(t) for t in args.p.split(",")]
        sol = solve_xi(args.n, p=p, exact=args.exact)
    rows = []
    for j, v in enumerate(sol.xi):
        if args.exact:
            rows.append({"j": j, "xi": f"{v.numerator}/{v.denominator}"})
        else:
            rows.append({"j": j, "xi": float(v)})
    _emit({"check": "xi", "n": sol.n, "exact": sol.exact, "table": rows,
           "min_xi": str(sol.min_xi) if args.exact else float(sol.min_xi)}, args.out)
    return 0


def _cmd_matchings(args):
    n = args.n
    omegas = []
    if args.omega is not None:
        omegas = [tuple(int(c) for c in args.omega)]
    else:
        omegas = [tuple((idx >> (n - 1 - i)) & 1 for i in range(n)) for idx in range(1 << n)]
    mismatches = 0
    rows = []
    for omega in omegas:
        k = min(sum(omega), n - sum(omega))
        js = [args.j] if args.j is not None else range(n // 2 + 1)
        for j in js:
            got = count_matchings(n, omega, j)
            want = akj(n, k, j)
            if got != want:
                mismatches += 1
            rows.append({"omega": "".join(map(str, omega)), "j": j, "count": got, "formula": want})
    _emit({"check": "matchings", "n": n, "mismatches": mismatches,
           "rows": rows if len(rows) <= 64 else rows[:64]}, args.out)
    return 0 if mismatches == 0 else 1


def _cmd_four_arm(args):
    fields = 0.0
    if args.fields:
        fields = [float(t) for t in args.fields.split(",")]
    res = four_arm_check(args.k, args.coupling, fields, _tol_of(args))
    _emit({"check": "four-arm", "k": args.k, "lhs": res.lhs, "rhs": res.rhs,
           "margin": res.margin, "passed": res.passed, "arm_probs": list(res.arm_probs)}, args.out)
    return 0 if res.passed else 1


def _cmd_corollary19(args):
    cfg = {"suite": "arm-events", "graphs": args.graphs, "field_seeds": 0, "couplings": [],
           "seed": args.seed}
    if args.tolerance is not None:
        cfg["tolerance"] = args.tolerance
    code, _ = run_suite(cfg, out=args.out)
    return code


_COMMANDS = {
    "suite": _cmd_suite,
    "reimer": _cmd_reimer,
    "bk": _cmd_bk,
    "nlc": _cmd_nlc,
    "fold": _cmd_fold,
    "rcr-validate": _cmd_rcr_validate,
    "gibbs-base": _cmd_gibbs_base,
    "conditions": _cmd_conditions,
    "xi": _cmd_xi,
    "matchings": _cmd_matchings,
    "four-arm": _cmd_four_arm,
    "corollary19": _cmd_corollary19,
}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
