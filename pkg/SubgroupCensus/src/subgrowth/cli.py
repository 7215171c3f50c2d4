"""
cli.py - command-line entry point

Run:
    python -m subgrowth extremal gamma --R 1
    python -m subgrowth congruence gamma-n --n 6 --cap 5000
    python -m subgrowth --format csv extremal trend --n 100 1000 10000
    python -m subgrowth serve --port 8050

Global flags (--format, --threads, --cap, --cache-dir, --config, --seed, -v)
are accepted before the subcommand or after it. The result envelope goes to
stdout; logs go to stderr.

Exit codes: 0 success, 1 invalid arguments, 2 resource limits or a failed
Bombieri scan. Failures still print an error envelope.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable, Dict, Optional, Sequence, TextIO, Tuple

from . import abelian, bombieri, congruence, extremal, numtheory
from .config import OUTPUT_FORMATS, RunConfig, load_config
from .envelope import ResultEnvelope, Timer, error_envelope
from .errors import InvalidArgument, NoBombieriPrime, ResourceLimitExceeded, SubgrowthError

LOG = logging.getLogger("subgrowth.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RESOURCE = 2

Outcome = Tuple[dict, Dict[str, str]]
Handler = Callable[[argparse.Namespace, RunConfig], Outcome]


# ----------------------------
# Logging setup
# ----------------------------
def setup_logging(verbosity: int) -> None:
    root = logging.getLogger("subgrowth")
    if not getattr(root, "_cli_handler", None):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s | %(levelname)s | %(message)s"))
        root.addHandler(handler)
        root._cli_handler = handler
    if verbosity == 1:
        root.setLevel(logging.INFO)
    elif verbosity >= 2:
        root.setLevel(logging.DEBUG)
    else:
        root.setLevel(os.getenv("SUBGROWTH_LOGLEVEL", "WARNING").upper())


# ----------------------------
# Handlers
# ----------------------------
def _numtheory_sieve(args, cfg) -> Outcome:
    table = numtheory.sieve_primes(args.limit, cache_dir=cfg.cache_dir, limit_cap=cfg.sieve_limit_cap)
    out = {
        "limit": table.limit,
        "count": len(table),
        "largest": int(table.primes[-1]) if len(table) else None,
        "head": table.primes[: args.show].tolist(),
    }
    return out, {"count": "segmented sieve of Eratosthenes", "limit": "input", "largest": "segmented sieve of Eratosthenes"}


def _numtheory_theta(args, cfg) -> Outcome:
    ps = numtheory.progression_array(args.x, args.q, args.a, cache_dir=cfg.cache_dir)
    out = {
        "count": int(ps.size),
        "theta": numtheory.theta(args.x, args.q, args.a, cache_dir=cfg.cache_dir),
        "error_term": numtheory.error_term(args.x, args.q, args.a, cache_dir=cfg.cache_dir),
        "phi": numtheory.euler_phi(args.q),
    }
    return out, {
        "count": "primes p <= x with p = a (mod q)",
        "theta": "sum of log p over p <= x, p = a (mod q), ascending",
        "error_term": "theta(x; q, a) - x/phi(q)",
        "phi": "Euler phi from the factorization of q",
    }


def _numtheory_factor(args, cfg) -> Outcome:
    f = numtheory.factor(args.n)
    out = {"factorization": f.to_dict(), "radical": f.radical, "phi": numtheory.euler_phi(args.n)}
    prov = {"radical": "product of distinct prime divisors", "phi": "prod (p-1) p^(e-1)"}
    if args.n >= 3:
        out["scales"] = numtheory.scales(args.n).to_dict()
    return out, prov


def _cache_info(args, cfg) -> Outcome:
    entries = numtheory.cache_info(cfg.cache_dir)
    return {"cache_dir": str(cfg.cache_dir), "files": entries, "file_count": len(entries)}, {"file_count": "directory listing"}


def _cache_clear(args, cfg) -> Outcome:
    removed = numtheory.clear_cache(cfg.cache_dir)
    return {"cache_dir": str(cfg.cache_dir), "removed": removed}, {"removed": "files deleted"}


def _bombieri_find(args, cfg) -> Outcome:
    scan = bombieri.find_bombieri_prime(args.x, args.rho, threads=cfg.threads, cache_dir=cfg.cache_dir)
    if scan.certificate is None:
        raise NoBombieriPrime(f"no Bombieri prime for x={args.x}, rho={args.rho}", diagnostics=scan.to_dict())
    out = scan.to_dict()
    out["cardinality"] = bombieri.check_cardinality_bound(scan.certificate).to_dict()
    out["q"] = scan.certificate.q
    return out, {
        "q": "first prime in [ceil(x^rho/log x), floor(x^rho)] with max|E(y;q,1)| <= x/(phi(q) log^2 x)",
        "rho": "input",
        "x": "input",
    }


def _bombieri_certify(args, cfg) -> Outcome:
    cert = bombieri.certify(args.x, args.q, cache_dir=cfg.cache_dir)
    out = cert.to_dict()
    if cert.is_bombieri:
        out["cardinality"] = bombieri.check_cardinality_bound(cert).to_dict()
    prov = {
        "x": "input",
        "q": "input",
        "max_abs_error": "max over y <= x of |theta(y;q,1) - y/phi(q)|, checked at piece endpoints",
        "argmax_y": "argmax of the same",
        "bound": "x / (phi(q) (log x)^2)",
        "set_size": "number of primes p <= x, p = 1 (mod q)",
        "log_P": "sum of log p over the same primes",
    }
    return out, prov


def _abelian_count(args, cfg) -> Outcome:
    spec = abelian.AbelianGroupSpec.from_orders(args.orders)
    out = {
        "group": spec.to_dict(),
        "order": spec.order,
        "total": abelian.count_all_subgroups(spec),
        "layer_types": [g.to_dict() for g in abelian.layer_types(spec)],
        "endomorphisms": abelian.endomorphism_count(spec),
        "bounds": abelian.subgroup_bounds(spec),
    }
    prov = {
        "order": "product of cyclic orders",
        "total": "Butler's formula summed over sub-layer types, multiplied over primes",
        "endomorphisms": "prod_p prod_i p^(lambda_i^2) over layer types",
    }
    if args.max_order is not None:
        out["order_at_most"] = abelian.count_subgroups_order_at_most(spec, args.max_order)
        prov["order_at_most"] = "Butler's formula over subgroup order profiles"
    if args.max_index is not None:
        out["index_at_most"] = abelian.count_subgroups_index_at_most(spec, args.max_index)
        prov["index_at_most"] = "total minus subgroups of order < |G|/n"
    if args.brute_force:
        lattice = abelian.brute_force_lattice(spec, cap=cfg.lattice_cap)
        out["brute_force_total"] = lattice.total
        prov["brute_force_total"] = "element-level join closure of cyclic subgroups"
    return out, prov


def _extremal_gamma(args, cfg) -> Outcome:
    opt = extremal.maximize_ratio(args.R)
    out = {"R": args.R, "gamma": extremal.gamma(args.R), "optimizer": opt.to_dict()}
    return out, {"R": "input", "gamma": "closed form (sqrt(R(R+1))-R)^2/(4R^2)"}


def _extremal_alpha(args, cfg) -> Outcome:
    out = extremal.conjectured_alpha(args.family, args.rank)
    out["R"] = str(extremal.chevalley_R(args.family, args.rank).R)
    return out, {"gamma": "gamma(R) at R = (dim - rank)/(2 rank)", "large_R_asymptote": "1/(16 R^2)"}


def _extremal_mn(args, cfg) -> Outcome:
    search = extremal.max_gcd_product_primes if args.problem == "m2" else extremal.max_gcd_product_integers
    w = search(args.n, budget=cfg.search_budget, threads=cfg.threads)
    out = w.to_dict()
    return out, {
        "n": "input",
        "objective": "max prod over ordered pairs of gcd, branch and bound",
        "product_of_members": "product of witness members",
        "nodes": "search nodes visited",
    }


def _extremal_prop71(args, cfg) -> Outcome:
    pair = extremal.optimize_sequence_pair(args.R, args.C, args.t)
    out = {"pair": pair.to_dict(), "objective": pair.objective, "in_normal_form": pair.in_normal_form()}
    prov = {"objective": "sum lambda_i nu_i - nu_i^2 over the normal-form enumeration"}
    if args.exhaustive:
        out["exhaustive_objective"] = extremal.exhaustive_sequence_pair(args.R, args.C, args.t)
        prov["exhaustive_objective"] = "memoized search over all feasible sequence pairs"
    return out, prov


def _extremal_trend(args, cfg) -> Outcome:
    problem = "primes" if args.problem == "m2" else "integers"
    rows = extremal.gcd_product_trend(args.n, problem=problem, budget=cfg.search_budget, threads=cfg.threads)
    return {"problem": args.problem, "rows": rows}, {"rows": "log M(n) / lambda(n), lambda(n) = (log n)^2 / log log n"}


def _extremal_reduction(args, cfg) -> Outcome:
    res = extremal.reduction_target_search(args.n, beam_width=args.beam, budget=cfg.search_budget)
    out = res.to_dict()
    return out, {
        "n": "input",
        "lambda": "(log n)^2 / log log n",
        "ratio_by_order": "log s_r(X) / lambda(n), subgroups of order <= r",
        "ratio_by_index": "log s_r(X) / lambda(n), subgroups of index <= r",
        "evaluations": "configurations evaluated",
    }


def _extremal_progression(args, cfg) -> Outcome:
    w = extremal.progression_gcd_witness(args.n, args.rho)
    return w.to_dict(), {
        "n": "input",
        "rho": "input",
        "q": "least prime >= (log n)^(rho/(1-rho))",
        "floor_objective": "q^(|P|^2)",
        "ratio": "log objective / lambda(n)",
        "asymptote": "rho (1 - rho)",
    }


def _extremal_exponent(args, cfg) -> Outcome:
    if args.d is None and args.h is None:
        raise InvalidArgument("give --d (SL_d) or --h (uniform rank)")
    out: dict = {}
    prov: Dict[str, str] = {}
    if args.d is not None:
        out["d"] = args.d
        out["sl_d_exponent"] = extremal.sl_d_growth_exponent(args.d)
        out["uniform_argmax"] = extremal.uniform_argmax(args.d)
        prov.update(d="input", sl_d_exponent="(3 - 2 sqrt 2) d^2 - 2 (2 - sqrt 2)")
    if args.h is not None:
        out["uniform"] = extremal.uniform_growth_exponent(args.h)
    return out, prov


def _congruence_gamma_n(args, cfg) -> Outcome:
    runner = congruence.level_truncated_census if args.level_truncated else congruence.modulus_census
    census = runner(args.n, cap=cfg.group_order_cap, threads=cfg.threads)
    out = census.to_dict()
    label = "level-truncated exact-level count" if args.level_truncated else "sum over m <= n of s_n(SL2(Z/m))"
    return out, {"n": "input", "total": label}


def _congruence_classify(args, cfg) -> Outcome:
    report = congruence.classify_maximal_subgroups(args.q, cap=cfg.group_order_cap)
    return report.to_dict(), {
        "q": "input",
        "group_order": "q (q^2 - 1)",
        "classes": "maximal subgroup classes from the full lattice, by order",
    }


def _congruence_lowerbound(args, cfg) -> Outcome:
    params = extremal.chevalley_R(args.family, args.rank)
    rep = congruence.lower_bound_construction(
        args.x, args.rho, args.sigma, params, threads=cfg.threads, cache_dir=cfg.cache_dir
    )
    prov = {k: "input" for k in ("x", "rho0", "sigma", "rk", "dim")}
    prov.update(
        q="Bombieri prime from the scan interval",
        L="number of primes p <= x, p = 1 (mod q)",
        log_P="sum of log p over the Bombieri set",
        nu="ceil(sigma rk L)",
        log_subgroup_count="log of the Gaussian binomial [rk L choose nu]_q",
        log_borel_index="sum over the Bombieri set of log prod (p^d_i - 1)/(p - 1)",
        log_index="nu log q + log borel index",
        ratio="log count / (log index^2 / log log index)",
        rho_scanned="largest rho0 - k rho_step whose scan interval holds a Bombieri prime",
        rho_effective="log q / log x",
        predicted_ratio="sigma(1-sigma) rho(1-rho)/(sigma rho + R)^2",
        gamma_R="closed form (sqrt(R(R+1))-R)^2/(4R^2)",
    )
    return rep.to_dict(), prov


def _congruence_order(args, cfg) -> Outcome:
    order = congruence.sl2_order(args.m)
    out = {"m": args.m, "order": order}
    if order <= cfg.group_order_cap:
        out["element_orders"] = congruence.order_profile(congruence.build_sl2(args.m, cap=cfg.group_order_cap))
    return out, {"m": "input", "order": "m^3 prod_{p | m} (1 - p^-2)"}


HANDLERS: Dict[str, Handler] = {
    "numtheory sieve": _numtheory_sieve,
    "numtheory theta": _numtheory_theta,
    "numtheory factor": _numtheory_factor,
    "cache info": _cache_info,
    "cache clear": _cache_clear,
    "bombieri find": _bombieri_find,
    "bombieri certify": _bombieri_certify,
    "abelian count": _abelian_count,
    "extremal gamma": _extremal_gamma,
    "extremal alpha": _extremal_alpha,
    "extremal mn": _extremal_mn,
    "extremal prop71": _extremal_prop71,
    "extremal trend": _extremal_trend,
    "extremal reduction": _extremal_reduction,
    "extremal progression": _extremal_progression,
    "extremal exponent": _extremal_exponent,
    "congruence gamma-n": _congruence_gamma_n,
    "congruence classify": _congruence_classify,
    "congruence lowerbound": _congruence_lowerbound,
    "congruence order": _congruence_order,
}


# ----------------------------
# Parser
# ----------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise InvalidArgument(f"{self.prog}: {message}")


def _common(suppress: bool) -> argparse.ArgumentParser:
    """Global flags; the subcommand copy suppresses defaults so either position works."""
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = _Parser(add_help=False)
    p.add_argument("--format", choices=OUTPUT_FORMATS, default=d(None), help="Output format (default from config)")
    p.add_argument("--threads", type=int, default=d(None), help="Worker threads")
    p.add_argument("--cap", type=int, default=d(None), help="Group order cap")
    p.add_argument("--budget", type=int, default=d(None), help="Search node budget")
    p.add_argument("--cache-dir", default=d(None), help="Sieve cache / settings directory")
    p.add_argument("--config", default=d(None), help="Settings JSON file")
    p.add_argument("--seed", type=int, default=d(None), help="Accepted and ignored; every algorithm is deterministic")
    p.add_argument("-v", "--verbose", action="count", default=d(0), help="Increase verbosity (-v, -vv)")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subgrowth", description="Congruence subgroup growth toolkit", parents=[_common(False)])
    common = _common(True)
    modules = ap.add_subparsers(dest="module", metavar="module")
    modules.required = True

    def leaf(group, name: str, help: str) -> argparse.ArgumentParser:
        p = group.add_parser(name, help=help, parents=[common])
        command = f"{group._subgrowth_name} {name}"
        p.set_defaults(handler=HANDLERS[command], command=command)
        return p

    def module(name: str, help: str):
        p = modules.add_parser(name, help=help)
        sub = p.add_subparsers(dest="action", metavar="action")
        sub.required = True
        sub._subgrowth_name = name
        return sub

    nt = module("numtheory", "Primes, progressions, factorization")
    p = leaf(nt, "sieve", "Sieve primes up to a limit")
    p.add_argument("--limit", type=int, required=True)
    p.add_argument("--show", type=int, default=10, help="How many leading primes to print")
    p = leaf(nt, "theta", "theta(x; q, a) and its error term")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--a", type=int, default=1)
    p = leaf(nt, "factor", "Factor n and report its scales")
    p.add_argument("--n", type=int, required=True)

    cache = module("cache", "Sieve cache management")
    leaf(cache, "info", "List cached prime tables")
    leaf(cache, "clear", "Delete cached prime tables")

    bb = module("bombieri", "Bombieri prime certificates")
    p = leaf(bb, "find", "First Bombieri prime in the x^rho scan interval")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p = leaf(bb, "certify", "Certify one modulus")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--q", type=int, required=True)

    ab = module("abelian", "Abelian subgroup counts")
    p = leaf(ab, "count", "Count subgroups of a product of cyclic groups")
    p.add_argument("--orders", required=True, help="Comma-separated cyclic orders, e.g. 4,2")
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--max-index", type=int, default=None)
    p.add_argument("--brute-force", action="store_true", help="Cross-check against the element-level oracle")

    ex = module("extremal", "Extremal constants and searches")
    p = leaf(ex, "gamma", "gamma(R) and the numerical maximizer")
    p.add_argument("--R", type=float, required=True)
    p = leaf(ex, "alpha", "gamma(R) for a Chevalley family")
    p.add_argument("--family", required=True)
    p.add_argument("--rank", type=int, default=None)
    p = leaf(ex, "mn", "M1(n) / M2(n) with witness")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--problem", choices=("m1", "m2"), default="m2")
    p = leaf(ex, "prop71", "Best sequence pair under a cost budget")
    p.add_argument("--R", required=True, help="Rational, e.g. 1, 3/2")
    p.add_argument("--C", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--exhaustive", action="store_true")
    p = leaf(ex, "trend", "log M(n) / lambda(n) table")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--problem", choices=("m1", "m2"), default="m2")
    p = leaf(ex, "reduction", "Reduction target search")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beam", type=int, default=64)
    p = leaf(ex, "progression", "Progression witness for M2(n)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.25)
    p = leaf(ex, "exponent", "SL_d and uniform-group exponents")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--h", type=int, default=None)

    cg = module("congruence", "Congruence subgroup censuses")
    p = leaf(cg, "gamma-n", "gamma_n with per-modulus breakdown")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--level-truncated", action="store_true", help="Count exact-level subgroups instead")
    p = leaf(cg, "classify", "Maximal subgroups of SL2(F_q)")
    p.add_argument("--q", type=int, required=True)
    p = leaf(cg, "lowerbound", "Lower-bound construction report")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--family", default="A")
    p.add_argument("--rank", type=int, default=1)
    p = leaf(cg, "order", "|SL2(Z/m)| and element orders")
    p.add_argument("--m", type=int, required=True)

    srv = modules.add_parser("serve", help="Run the JSON API", parents=[common])
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8050)
    srv.set_defaults(handler=None, command="serve")
    return ap


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(cache_dir=args.cache_dir, path=args.config)
    return cfg.with_overrides(
        group_order_cap=args.cap,
        search_budget=args.budget,
        threads=args.threads,
        output_format=args.format,
    )


def envelope_inputs(args: argparse.Namespace) -> dict:
    skip = {"handler", "command", "module", "action", "verbose", "config", "cache_dir", "format", "seed"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def dispatch(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    out = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    command = " ".join(a for a in argv[:2] if not a.startswith("-")) or "subgrowth"
    fmt = "json"
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose)
        cfg = _resolve_config(args)
        fmt = cfg.output_format
        command = args.command
        if args.handler is None:
            from .webapp import create_app

            create_app(cfg).run(host=args.host, port=args.port)
            return EXIT_OK
        inputs = envelope_inputs(args)
        with Timer() as timer:
            outputs, provenance = args.handler(args, cfg)
        env = ResultEnvelope(command=command, inputs=inputs, outputs=outputs, provenance=provenance, timing_ms=timer.ms)
        text = env.render(fmt)
        code = EXIT_OK
    except InvalidArgument as e:
        LOG.error("%s", e)
        env, code = error_envelope(command, {"argv": argv}, e), EXIT_INVALID
    except (ResourceLimitExceeded, NoBombieriPrime) as e:
        LOG.error("%s", e)
        env, code = error_envelope(command, {"argv": argv}, e), EXIT_RESOURCE
    except SubgrowthError as e:
        LOG.error("%s", e)
        env, code = error_envelope(command, {"argv": argv}, e), EXIT_INVALID
    except (ValueError, TypeError) as e:
        LOG.error("%s", e)
        env, code = error_envelope(command, {"argv": argv}, e), EXIT_INVALID
    if code != EXIT_OK:
        text = env.render(fmt)
    print(text, file=out, end="" if fmt == "csv" else "\n")
    return code


def main() -> None:
    sys.exit(dispatch())
