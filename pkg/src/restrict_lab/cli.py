"""Command-line front end: ``restrict-lab <subcommand> [options]``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (last wins).  Exit codes:
0 success, 1 a requested check was violated, 2 invalid input or resource
limit, 3 numerical non-convergence.
"""

import argparse
import math
import os
import sys

from .errors import (ConvergenceError, InvalidInputError, RecordIOError, RecordParseError,
                     ResourceError, RestrictLabError)
from .scaling import (ExperimentRecord, Settings, export_json, fit_exponent, now_stamp,
                      persist)

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2, 3
THREADS_ENV = "RESTRICT_LAB_THREADS"

OPNORM_METHODS = ("lobpcg", "power_iteration", "assembled", "dense")
LOWER_QUANTITIES = ("interference", "constant", "lipschitz")
CHECKS = ("near_band", "far_band", "rowsum", "schur", "stationary", "nonstationary", "profile")
SUITE_CHOICES = ("derivative", "schur", "ttstar", "summation", "all")


def _int_list(text):
    try:
        return [int(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise InvalidInputError(f"N list must be comma-separated integers, got {text!r}") from None


def _opt_int(text):
    return None if text in (None, "", "none") else int(text)


def _opt_float(text):
    return None if text in (None, "", "none") else float(text)


# key: (parser, default, help)
CONFIG_KEYS = {
    "k": (int, 3, "monomial degree k >= 2"),
    "n": (_int_list, "64", "comma-separated, strictly increasing N values"),
    "p": (_opt_float, None, "Lebesgue exponent (subcommand default when unset)"),
    "c_small": (float, 0.1, "constant used for every 'much smaller than'"),
    "C_k": (float, 0.5, "block start C_k N for kernel checks"),
    "rho": (float, 8.0, "quadrature oversampling (nodes per oscillation)"),
    "tol": (float, 1e-9, "relative eigen-residual tolerance"),
    "max_iter": (int, 10_000, "iteration cap for matrix-free methods"),
    "seed": (int, 0, "random seed"),
    "output": (str, "", "record file (.csv appends, .json overwrites); empty: none"),
    "method": (str, "lobpcg", "opnorm method: " + ", ".join(OPNORM_METHODS)),
    "quantity": (str, "interference", "lowerbound quantity: " + ", ".join(LOWER_QUANTITIES)),
    "check": (str, "near_band", "kernels check: " + ", ".join(CHECKS)),
    "suite": (str, "all", "tests suite: " + ", ".join(SUITE_CHOICES)),
    "band": (float, 2.0, "max ratio of a normalized quantity between consecutive N"),
    "c_fit": (float, 1.0, "bound on residual*|n-m| for the stationary check"),
    "samples": (int, 200, "stationary pairs per N"),
    "trials": (int, 1000, "randomized trials per suite"),
    "threads": (_opt_int, None, f"worker threads (fallback: ${THREADS_ENV})"),
}

SUBCOMMAND_P = {"opnorm": 2.0, "lowerbound": 2.0, "cylinder": 2.0, "moment": 6.0}


def read_config(path):
    """Parse a ``key = value`` file; '#' starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise RecordIOError(f"cannot read config {path}: {exc}", path) from exc
    for i, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{i}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        key = _canonical(key)
        if key not in CONFIG_KEYS:
            raise InvalidInputError(f"{path}:{i}: unknown config key {key!r}")
        out[key] = value
    return out


def _canonical(key):
    key = key.replace("-", "_")
    return "C_k" if key.lower() == "c_k" else key


def _parse_value(key, value):
    parser = CONFIG_KEYS[key][0]
    try:
        return parser(value)
    except (TypeError, ValueError):
        raise InvalidInputError(f"bad value for {key}: {value!r}") from None


def _epilog():
    lines = ["config keys (file 'key = value'; flags override):"]
    for key, (_, default, text) in CONFIG_KEYS.items():
        lines.append(f"  {key:<10} default {default!r:<14} {text}")
    return "\n".join(lines)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("settings")
    g.add_argument("--config", help="key = value settings file")
    for key, (_, default, text) in CONFIG_KEYS.items():
        flag = "--" + key.replace("_", "-") if key != "C_k" else "--C-k"
        g.add_argument(flag, dest=key, default=argparse.SUPPRESS,
                       help=f"{text} (default: {default!r})")
    g.add_argument("--fit", action="store_true", help="fit the growth exponent over N")
    g.add_argument("--no-timestamp", action="store_true",
                   help="leave the timestamp column empty (byte-reproducible files)")

    parser = argparse.ArgumentParser(
        prog="restrict-lab", description="Restriction constants for weighted Gauss sums.",
        epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "opnorm": "sharp L2 restriction constant B_{N,k} per N",
        "lowerbound": "constructive-interference lower bounds (1D)",
        "cylinder": "two-variable construction on the cubic cylinder",
        "moment": "construction for the moment curve (t, t^2, t^3)",
        "kernels": "correlation-kernel and stationary-phase checks",
        "tests": "randomized inequality suites",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=_epilog(),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def resolve_config(args):
    """Defaults, then config file, then flags; returns a plain dict."""
    cfg = {key: default for key, (_, default, _) in CONFIG_KEYS.items()}
    if args.command in SUBCOMMAND_P:
        cfg["p"] = SUBCOMMAND_P[args.command]
    if getattr(args, "config", None):
        for key, value in read_config(args.config).items():
            cfg[key] = value
    for key in CONFIG_KEYS:
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    for key, value in list(cfg.items()):
        if isinstance(value, str):
            cfg[key] = _parse_value(key, value)
    if cfg["threads"] is None and os.environ.get(THREADS_ENV):
        cfg["threads"] = _parse_value("threads", os.environ[THREADS_ENV])
    cfg["fit"] = bool(getattr(args, "fit", False))
    cfg["timestamps"] = not getattr(args, "no_timestamp", False)
    validate(args.command, cfg)
    return cfg


def _require(cond, message):
    if not cond:
        raise InvalidInputError(message)


def validate(command, cfg):
    """Check every precondition before any computation starts."""
    k, Ns = cfg["k"], cfg["n"]
    _require(k >= 2, f"k must satisfy k >= 2, got {k}")
    _require(all(N >= 0 for N in Ns), "N values must be nonnegative")
    _require(all(b > a for a, b in zip(Ns, Ns[1:])), "N list must be strictly increasing")
    _require(cfg["p"] is None or (math.isfinite(cfg["p"]) and cfg["p"] >= 1), "p must be >= 1")
    _require(0 < cfg["c_small"] < 1, "c_small must lie in (0, 1)")
    _require(0 < cfg["C_k"] < 1, "C_k must lie in (0, 1)")
    _require(cfg["rho"] >= 4, "rho must be >= 4")
    _require(cfg["tol"] > 0, "tol must be positive")
    _require(cfg["max_iter"] >= 1, "max_iter must be >= 1")
    _require(cfg["threads"] is None or cfg["threads"] >= 1, "threads must be >= 1")
    _require(cfg["band"] >= 1, "band must be >= 1")
    _require(cfg["samples"] >= 2, "samples must be >= 2")
    _require(cfg["trials"] >= 1, "trials must be >= 1")
    if command == "opnorm":
        _require(cfg["method"] in OPNORM_METHODS, f"method must be one of {OPNORM_METHODS}")
        if cfg["method"] == "dense":
            _require(all(2 * N + 1 <= 513 for N in Ns), "dense method needs N <= 256")
    if command == "lowerbound":
        _require(cfg["quantity"] in LOWER_QUANTITIES,
                 f"quantity must be one of {LOWER_QUANTITIES}")
        _require(cfg["p"] >= 2, "lower bounds need p >= 2")
        _require(all(N >= 2 for N in Ns), "lower bounds need N >= 2")
        if cfg["quantity"] == "interference":
            _require(cfg["c_small"] <= 0.5, "c_small must be <= 0.5 for the window")
    if command in ("cylinder", "moment"):
        _require(all(N >= 64 for N in Ns), f"{command} needs N >= 64")
        _require(cfg["p"] >= 2, f"{command} needs p >= 2")
    if command == "kernels":
        _require(cfg["check"] in CHECKS, f"check must be one of {CHECKS}")
        _require(k >= 3, "kernel checks need k >= 3")
        _require(all(N >= 16 for N in Ns), "kernel checks need N >= 16")
    if command == "tests":
        _require(cfg["suite"] in SUITE_CHOICES, f"suite must be one of {SUITE_CHOICES}")


def apply_threads(n):
    if n is None:
        return None
    import numba
    n = min(int(n), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n


class Run:
    """Collects records and the worst exit status of one invocation."""

    def __init__(self, cfg, out=sys.stdout):
        self.cfg = cfg
        self.out = out
        self.records = []
        self.status = EXIT_OK
        self.settings = Settings(cfg["c_small"], cfg["C_k"], cfg["rho"], cfg["tol"], cfg["seed"])

    def say(self, text):
        print(text, file=self.out)

    def flag(self, status):
        self.status = max(self.status, status)

    def record(self, quantity, N, value, p=None, error=""):
        stamp = now_stamp() if self.cfg["timestamps"] else ""
        rec = ExperimentRecord(quantity, int(N), int(self.cfg["k"]), p, float(value),
                               self.settings, stamp, error)
        self.records.append(rec)
        return rec

    def guarded(self, quantity, N, fn, p=None):
        """Run fn(); failures become error records and set the exit status."""
        try:
            return fn()
        except ConvergenceError as exc:
            self.flag(EXIT_CONVERGENCE)
            msg = f"ConvergenceError: {exc}"
        except (InvalidInputError, ResourceError) as exc:
            self.flag(EXIT_INVALID)
            msg = f"{type(exc).__name__}: {exc}"
        self.say(f"{quantity} N={N}: FAILED ({msg})")
        self.record(quantity, N, float("nan"), p, msg)
        return None

    def fit(self, quantity, target, label):
        pts = [(r.N, r.value) for r in self.records
               if r.quantity == quantity and not r.error and r.N > 1]
        if len(pts) < 3:
            self.say(f"fit {quantity}: needs at least 3 successful N values")
            return None
        res = fit_exponent(pts, "pure_power")
        self.say(f"fit {quantity}: alpha = {res.alpha:.4f} (pure power, residual "
                 f"{res.residual:.2e}); target {label} = {target:.4f}")
        if len(pts) >= 4:
            lg = fit_exponent(pts, "power_log", 1.0)
            self.say(f"fit {quantity}: alpha = {lg.alpha:.4f} (with log N factor, residual "
                     f"{lg.residual:.2e})")
        return res

    def save(self):
        path = self.cfg["output"]
        if not path or not self.records:
            return
        if path.endswith(".json"):
            export_json(self.records, path)
        else:
            persist(self.records, path)
        self.say(f"wrote {len(self.records)} record(s) to {path}")


# ---- subcommands ---------------------------------------------------------------

def cmd_opnorm(run):
    from .exp_core import PhaseSpec
    from .spectral import dense_gram, opnorm_assembled, opnorm_dense, opnorm_iterative
    cfg = run.cfg
    k, method = cfg["k"], cfg["method"]
    phase = PhaseSpec.monomial(k, -1.0)
    for N in cfg["n"]:
        def compute():
            if method == "assembled":
                return opnorm_assembled(N, phase, rho=cfg["rho"])
            if method == "dense":
                return opnorm_dense(dense_gram(N, phase, rho=cfg["rho"]))
            return opnorm_iterative(N, phase, tol=cfg["tol"], max_iter=cfg["max_iter"],
                                    seed=cfg["seed"], rho=cfg["rho"], method=method)
        r = run.guarded("opnorm", N, compute)
        if r is not None:
            run.record("opnorm", N, r.value)
            run.say(f"opnorm k={k} N={N}: B = {r.value:.10f} ({r.method}, "
                    f"{r.iterations} iterations, residual {r.residual:.2e})")
    if cfg["fit"]:
        run.fit("opnorm", (k - 2) / (6 * (k - 1)), "(k-2)/(6(k-1))")


def cmd_lowerbound(run):
    from .lower_bounds import (constant_coeff_ratio, interference_experiment,
                               lipschitz_l2_check)
    cfg = run.cfg
    k, p, q = cfg["k"], cfg["p"], cfg["quantity"]
    for N in cfg["n"]:
        if q == "interference":
            r = run.guarded("lower_bound_ratio", N,
                            lambda: interference_experiment(N, k, p, cfg["c_small"]), p)
            if r is None:
                continue
            c = r.certificate
            run.record("lower_bound_ratio", N, r.ratio, p)
            run.record("interference_min", N, c.relative, p)
            run.say(f"lower_bound_ratio k={k} N={N} p={p:g}: ratio = {r.ratio:.8f} "
                    f"(M = {r.params.M}, Delta = {r.params.Delta:.4e})")
            run.say(f"certificate N={N}: min|S| = {c.min_abs:.3f} vs {c.threshold:g}*{c.active}"
                    f" = {c.threshold * c.active:.3f}: {'PASS' if c.passed else 'FAIL'}")
        elif q == "constant":
            r = run.guarded("constant_coeff_ratio", N,
                            lambda: constant_coeff_ratio(N, k, p, cfg["rho"]), p)
            if r is None:
                continue
            run.record("constant_coeff_ratio", N, r.full_ratio, p)
            run.record("constant_coeff_near", N, r.near_zero_ratio, p)
            run.say(f"constant_coeff k={k} N={N} p={p:g}: full = {r.full_ratio:.8f}, "
                    f"|x| <= 1/N = {r.near_zero_ratio:.8f}")
        else:
            r = run.guarded("lipschitz_ratio", N,
                            lambda: lipschitz_l2_check(lambda x: x, N, seed=cfg["seed"],
                                                       rho=cfg["rho"]))
            if r is None:
                continue
            run.record("lipschitz_ratio", N, r.max_ratio)
            run.say(f"lipschitz phi(x)=x N={N}: max ratio = {r.max_ratio:.6f}, sup = "
                    f"{r.sup_ratio:.6f}, ceiling = {r.ceiling:.3f}")
    if cfg["fit"]:
        if q == "interference":
            target = (2 * k - 1) / (6 * (k - 1)) - (k + 1) / (3 * p * (k - 1))
            run.fit("lower_bound_ratio", target, "(2k-1)/(6(k-1)) - (k+1)/(3p(k-1))")
        elif q == "constant":
            run.fit("constant_coeff_ratio", 0.5 - 1.0 / p, "1/2 - 1/p")
        else:
            run.fit("lipschitz_ratio", 0.0, "bounded")


def _two_variable(run, name, build, target, label):
    cfg = run.cfg
    for N in cfg["n"]:
        r = run.guarded(name, N, lambda: build(N))
        if r is None:
            continue
        c = r.certificate
        run.record(name, N, r.ratio, r.p)
        run.say(f"{name} N={N} p={r.p:g}: ratio = {r.ratio:.8f}")
        run.say(f"certificate N={N}: min|S| = {c.min_abs:.3f} vs {c.threshold:g}*{c.active}"
                f" = {c.threshold * c.active:.3f}: {'PASS' if c.passed else 'FAIL'}")
    if cfg["fit"]:
        run.fit(name, target, label)


def cmd_cylinder(run):
    from .lower_bounds import cylinder_construction
    _two_variable(run, "cylinder_ratio",
                  lambda N: cylinder_construction(N, run.cfg["c_small"]), 1 / 12, "1/12")


def cmd_moment(run):
    from .lower_bounds import moment_curve_construction, moment_curve_vN, theta_partials
    for N in run.cfg["n"]:
        vN = moment_curve_vN(N)
        run.say(f"moment N={N}: v_N = {vN:.10f}, theta_vn(v_N, N/2) = "
                f"{theta_partials(vN, N / 2, vN)['vn']:.2e}")
    _two_variable(run, "moment_ratio",
                  lambda N: moment_curve_construction(N, run.cfg["c_small"], run.cfg["p"]),
                  1 / 36, "1/36")


def _band_check(run, name, values):
    """Consecutive-N ratios of a normalized quantity must stay within the band."""
    limit = run.cfg["band"]
    ok = True
    for (N0, v0), (N1, v1) in zip(values, values[1:]):
        ratio = max(v0, v1) / min(v0, v1)
        good = ratio <= limit
        ok &= good
        run.say(f"{name} N={N0}->{N1}: ratio {ratio:.3f} (limit {limit:g}) "
                f"{'ok' if good else 'OUT OF BAND'}")
    if not ok:
        run.flag(EXIT_CHECK)


def cmd_kernels(run):
    from . import asymptotics as asy
    cfg = run.cfg
    k, check = cfg["k"], cfg["check"]
    if check in ("near_band", "far_band", "rowsum"):
        attr = {"near_band": "near_max", "far_band": "far_max", "rowsum": "row_sum"}[check]
        qname = {"near_band": "near_band", "far_band": "far_band", "rowsum": "row_sum"}[check]
        vals = []
        for N in cfg["n"]:
            rep = run.guarded(qname, N, lambda: asy.correlation_report(N, k, C_k=cfg["C_k"]))
            if rep is None:
                continue
            v = getattr(rep, attr)
            vals.append((N, v))
            run.record(qname, N, v)
            run.say(f"{qname} k={k} N={N}: {v:.6f} (TT* bound {rep.ttstar:.4f})")
        if check == "rowsum":
            target = asy.row_sum_target(k)
            res = run.fit("row_sum", target, "2(k-2)/(3(k-1))")
            if res is None or abs(res.alpha - target) > 0.06:
                run.flag(EXIT_CHECK)
        else:
            _band_check(run, qname, vals)
    elif check == "schur":
        vals = []
        for N in cfg["n"]:
            v = asy.schur_witness(N, k, C_k=cfg["C_k"])
            vals.append((N, v))
            run.record("schur_witness", N, v)
            run.say(f"schur_witness k={k} N={N}: {v:.6f}")
        _band_check(run, "schur_witness", vals)
    elif check in ("stationary", "nonstationary"):
        fits = []
        for N in cfg["n"]:
            pairs = asy.sample_stationary_pairs(N, k, cfg["samples"], cfg["seed"])
            if check == "nonstationary":
                v = asy.nonstationary_scaled(N, k, pairs, rho=cfg["rho"])
                run.record("nonstationary_scaled", N, v)
                run.say(f"nonstationary k={k} N={N}: max |I|*|n-m| = {v:.4f}")
                continue
            f = asy.fit_C_sta(N, k, pairs, rho=cfg["rho"])
            fits.append((N, f.C_sta))
            run.record("stationary_residual", N, f.max_scaled_residual)
            good = f.max_scaled_residual <= cfg["c_fit"]
            run.say(f"stationary k={k} N={N}: C_sta = {f.C_sta.real:.6f}{f.C_sta.imag:+.6f}i, "
                    f"max residual*|n-m| = {f.max_scaled_residual:.4f} (limit {cfg['c_fit']:g}) "
                    f"{'ok' if good else 'EXCEEDED'}")
            if not good:
                run.flag(EXIT_CHECK)
        for (N0, c0), (N1, c1) in zip(fits, fits[1:]):
            drift = abs(c1 - c0) / abs(c0)
            run.say(f"C_sta drift N={N0}->{N1}: {100 * drift:.2f}% (limit 2%)")
            if drift > 0.02:
                run.flag(EXIT_CHECK)
    else:
        lo = {"r1": [], "r2": []}
        for N in cfg["n"]:
            r1 = [math.inf, 0.0]
            r2 = [math.inf, 0.0]
            gap = 0.0
            for n, m in asy.profile_pairs(N, k):
                rep = asy.phase_profile_checks(n, m, k, N)
                r1 = [min(r1[0], rep.r1_min), max(r1[1], rep.r1_max)]
                r2 = [min(r2[0], rep.r2_min), max(r2[1], rep.r2_max)]
                gap = max(gap, rep.endpoint_gap)
            lo["r1"].append(r1)
            lo["r2"].append(r2)
            run.record("profile_r1_min", N, r1[0])
            run.record("profile_r2_min", N, r2[0])
            run.say(f"profile k={k} N={N}: r1 in [{r1[0]:.4f}, {r1[1]:.4f}], "
                    f"r2 in [{r2[0]:.4f}, {r2[1]:.4f}], max |f(n)-f(m)| = {gap:.1e}")
            if gap > 1e-12:
                run.flag(EXIT_CHECK)
        for name, bands in lo.items():
            if not bands:
                continue
            spread = max(b[1] for b in bands) / min(b[0] for b in bands)
            good = spread <= 8.0
            run.say(f"{name} overall max/min = {spread:.3f} (limit 8) "
                    f"{'ok' if good else 'OUT OF BAND'}")
            if not good:
                run.flag(EXIT_CHECK)


def cmd_tests(run):
    from .asymptotics import SUITES, property_suite
    cfg = run.cfg
    names = SUITES if cfg["suite"] == "all" else (cfg["suite"],)
    for name in names:
        r = property_suite(name, cfg["trials"], cfg["seed"])
        run.say(f"suite {name}: {r.trials} trials, {r.violations} violations, "
                f"worst lhs/rhs {r.worst:.6f}: {'PASS' if r.passed else 'FAIL'}")
        if not r.passed:
            run.flag(EXIT_CHECK)


COMMANDS = {
    "opnorm": cmd_opnorm,
    "lowerbound": cmd_lowerbound,
    "cylinder": cmd_cylinder,
    "moment": cmd_moment,
    "kernels": cmd_kernels,
    "tests": cmd_tests,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        apply_threads(cfg["threads"])
        run = Run(cfg, out)
        COMMANDS[args.command](run)
        run.save()
        return run.status
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InvalidInputError, ResourceError, RecordIOError, RecordParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RestrictLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
