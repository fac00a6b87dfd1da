"""N-scans of measured quantities, growth-exponent fits and record files.

Record files are UTF-8 CSV with columns

    quantity,N,k,p,value,c_small,C_k,rho,tol,seed,timestamp[,error]

Floats are written in shortest round-trip form, so a write/read cycle is
lossless.  The trailing ``error`` column is present only in files holding
failed scan points; those rows carry value ``nan``.
"""

import csv
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
import json
import math

import numpy as np

from .errors import InvalidInputError, RecordIOError, RecordParseError, RestrictLabError

COLUMNS = ("quantity", "N", "k", "p", "value", "c_small", "C_k", "rho", "tol", "seed",
           "timestamp")
ERROR_COLUMN = "error"
DEFAULT_SCAN = (64, 128, 256, 512, 1024)
FIT_MODELS = ("pure_power", "power_log")


@dataclass(frozen=True)
class Settings:
    """Numerical settings shared by every record of a scan."""

    c_small: float = 0.1
    C_k: float = 0.5
    rho: float = 8.0
    tol: float = 1e-9
    seed: int = 0

    def fingerprint(self):
        return (f"c_small={self.c_small!r};C_k={self.C_k!r};rho={self.rho!r};"
                f"tol={self.tol!r};seed={self.seed!r}")


@dataclass(frozen=True)
class ExperimentRecord:
    quantity: str
    N: int
    k: int
    p: float
    value: float
    settings: Settings = field(default_factory=Settings)
    timestamp: str = ""
    error: str = ""

    @property
    def ok(self):
        return not self.error and math.isfinite(self.value)

    def row(self):
        s = self.settings
        cells = [self.quantity, str(self.N), str(self.k), _fmt(self.p), _fmt(self.value),
                 _fmt(s.c_small), _fmt(s.C_k), _fmt(s.rho), _fmt(s.tol), str(s.seed),
                 self.timestamp]
        return cells

    def to_dict(self):
        d = asdict(self)
        d.update(d.pop("settings"))
        return d


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def now_stamp():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class FitResult:
    alpha: float
    amplitude: float
    log_power: float
    residual: float
    model: str
    points: int = 0


def _pairs(records):
    N, y = [], []
    for r in records:
        if isinstance(r, ExperimentRecord):
            if r.error:
                raise InvalidInputError(f"record at N={r.N} is an error record")
            N.append(float(r.N))
            y.append(float(r.value))
        else:
            N.append(float(r[0]))
            y.append(float(r[1]))
    return np.array(N), np.array(y)


def fit_exponent(records, model="pure_power", log_power=1.0):
    """Least-squares fit of log(value) against log N.

    ``pure_power``: value = A N^alpha.  ``power_log``: value = A N^alpha
    (log N)^gamma with gamma fixed to ``log_power``, or fitted when
    ``log_power`` is None.  The residual is the max relative deviation
    |fit/value - 1| over the points.

    Parameters
    ----------
    records : sequence of ExperimentRecord or (N, value) pairs
    """
    if model not in FIT_MODELS:
        raise InvalidInputError(f"unknown fit model {model!r}")
    N, y = _pairs(records)
    need = 3 if model == "pure_power" else 4
    if N.size < need:
        raise InvalidInputError(f"{model} needs at least {need} records, got {N.size}")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise InvalidInputError("all values must be finite and positive")
    if np.any(N <= 1) and model == "power_log":
        raise InvalidInputError("power_log needs N > 1")
    if np.unique(N).size < 2:
        raise InvalidInputError("need at least two distinct N")
    order = np.argsort(N, kind="stable")
    N, y = N[order], y[order]
    lx, ly = np.log(N), np.log(y)
    cols = [np.ones_like(lx), lx]
    target = ly
    gamma = None
    if model == "power_log":
        llx = np.log(lx)
        if log_power is None:
            cols.append(llx)
        else:
            gamma = float(log_power)
            target = ly - gamma * llx
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    if model == "power_log" and log_power is None:
        gamma = float(coef[2])
    pred = X @ coef + (ly - target)
    resid = float(np.max(np.abs(np.exp(pred - ly) - 1.0)))
    return FitResult(float(coef[1]), float(math.exp(coef[0])), gamma, resid, model, int(N.size))


# ---- quantities ------------------------------------------------------------

def _q_opnorm(N, k, p, s):
    from .exp_core import PhaseSpec
    from .spectral import opnorm_iterative
    return opnorm_iterative(N, PhaseSpec.monomial(k), tol=s.tol, seed=s.seed, rho=s.rho).value


def _q_opnorm_assembled(N, k, p, s):
    from .exp_core import PhaseSpec
    from .spectral import opnorm_assembled
    return opnorm_assembled(N, PhaseSpec.monomial(k), rho=s.rho).value


def _q_opnorm_dense(N, k, p, s):
    from .exp_core import PhaseSpec
    from .spectral import dense_gram, opnorm_dense
    return opnorm_dense(dense_gram(N, PhaseSpec.monomial(k), rho=s.rho)).value


def _q_lower(N, k, p, s):
    from .lower_bounds import interference_experiment
    return interference_experiment(N, k, 2.0 if p is None else p, s.c_small).ratio


def _q_certificate(N, k, p, s):
    from .lower_bounds import interference_experiment
    return interference_experiment(N, k, 2.0 if p is None else p, s.c_small).certificate.relative


def _q_cylinder(N, k, p, s):
    from .lower_bounds import cylinder_construction
    return cylinder_construction(N, s.c_small).ratio


def _q_moment(N, k, p, s):
    from .lower_bounds import moment_curve_construction
    return moment_curve_construction(N, s.c_small, 6.0 if p is None else p).ratio


def _q_constant(N, k, p, s):
    from .lower_bounds import constant_coeff_ratio
    return constant_coeff_ratio(N, k, 4.0 if p is None else p, s.rho).full_ratio


def _q_constant_near(N, k, p, s):
    from .lower_bounds import constant_coeff_ratio
    return constant_coeff_ratio(N, k, 4.0 if p is None else p, s.rho).near_zero_ratio


def _q_corr(attr):
    def run(N, k, p, s):
        from .asymptotics import correlation_report
        return getattr(correlation_report(N, k, C_k=s.C_k), attr)
    return run


def _q_schur(N, k, p, s):
    from .asymptotics import schur_witness
    return schur_witness(N, k, C_k=s.C_k)


def _q_lipschitz(N, k, p, s):
    from .lower_bounds import lipschitz_l2_check
    return lipschitz_l2_check(lambda x: x, N, seed=s.seed, rho=s.rho).max_ratio


QUANTITIES = {
    "opnorm": _q_opnorm,
    "opnorm_assembled": _q_opnorm_assembled,
    "opnorm_dense": _q_opnorm_dense,
    "lower_bound_ratio": _q_lower,
    "interference_min": _q_certificate,
    "cylinder_ratio": _q_cylinder,
    "moment_ratio": _q_moment,
    "constant_coeff_ratio": _q_constant,
    "constant_coeff_near": _q_constant_near,
    "row_sum": _q_corr("row_sum"),
    "near_band": _q_corr("near_max"),
    "far_band": _q_corr("far_max"),
    "ttstar": _q_corr("ttstar"),
    "schur_witness": _q_schur,
    "lipschitz_ratio": _q_lipschitz,
}


def run_scan(quantity, N_list, settings=None, k=3, p=None, timestamps=True, compute=None):
    """One record per N, sorted by N.

    A failure at one N (any library error) becomes an error record with
    value nan and the message in ``error``; the scan continues.

    Parameters
    ----------
    quantity : str
        Key of ``QUANTITIES``, or any tag when ``compute`` is given.
    compute : callable, optional
        ``compute(N, k, p, settings) -> float`` overriding the registry.
    """
    settings = settings or Settings()
    N_list = [int(n) for n in N_list]
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise InvalidInputError("N list must be strictly increasing")
    fn = compute or QUANTITIES.get(quantity)
    if fn is None:
        raise InvalidInputError(f"unknown quantity {quantity!r}; known: {sorted(QUANTITIES)}")
    out = []
    for N in N_list:
        stamp = now_stamp() if timestamps else ""
        try:
            value = float(fn(N, k, p, settings))
            err = "" if math.isfinite(value) else "non-finite value"
        except (RestrictLabError, ArithmeticError, ValueError) as exc:
            value, err = float("nan"), f"{type(exc).__name__}: {exc}"
        out.append(ExperimentRecord(quantity, N, int(k), None if p is None else float(p),
                                    value, settings, stamp, err))
    return sorted(out, key=lambda r: r.N)


# ---- persistence -------------------------------------------------------------

def _parse_float(text, name, line):
    if text == "" and name == "p":
        return None
    try:
        return float(text)
    except ValueError:
        raise RecordParseError(f"line {line}: bad {name} value {text!r}", line) from None


def _parse_int(text, name, line):
    try:
        return int(text)
    except ValueError:
        raise RecordParseError(f"line {line}: bad {name} value {text!r}", line) from None


def _parse_row(cells, line, has_error):
    width = len(COLUMNS) + (1 if has_error else 0)
    if len(cells) not in (len(COLUMNS), width):
        raise RecordParseError(f"line {line}: expected {width} fields, got {len(cells)}", line)
    q, N, k, p, v, cs, ck, rho, tol, seed, ts = cells[:11]
    err = cells[11] if len(cells) > 11 else ""
    if not q:
        raise RecordParseError(f"line {line}: empty quantity", line)
    value = _parse_float(v, "value", line)
    if not err and not math.isfinite(value):
        raise RecordParseError(f"line {line}: non-finite value without error text", line)
    settings = Settings(_parse_float(cs, "c_small", line), _parse_float(ck, "C_k", line),
                        _parse_float(rho, "rho", line), _parse_float(tol, "tol", line),
                        _parse_int(seed, "seed", line))
    return ExperimentRecord(q, _parse_int(N, "N", line), _parse_int(k, "k", line),
                            _parse_float(p, "p", line), value, settings, ts, err)


def _read_header(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            first = fh.readline()
    except FileNotFoundError:
        return None
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}", path) from exc
    return next(csv.reader([first])) if first.strip() else None


def persist(records, path):
    """Append records to a CSV file, writing the header if the file is new or empty.

    Records are sorted by (quantity, k, N) before writing.  Appending error
    records to a file whose header lacks the error column is refused.
    """
    records = sorted(records, key=lambda r: (r.quantity, r.k, r.N))
    any_err = any(r.error for r in records)
    header = _read_header(path)
    if header is not None:
        has_err = header == list(COLUMNS) + [ERROR_COLUMN]
        if header != list(COLUMNS) and not has_err:
            raise RecordParseError(f"{path}: unexpected header {header}", 1)
        if any_err and not has_err:
            raise RecordIOError(f"{path}: file has no error column for failed records", path)
    else:
        has_err = any_err
    try:
        with open(path, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if header is None:
                w.writerow(list(COLUMNS) + ([ERROR_COLUMN] if has_err else []))
            for r in records:
                w.writerow(r.row() + ([r.error] if has_err else []))
    except OSError as exc:
        raise RecordIOError(f"cannot write {path}: {exc}", path) from exc


def load(path):
    """Read every record from a CSV record file; an empty file gives []."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}", path) from exc
    if not rows:
        return []
    header = rows[0]
    has_err = header == list(COLUMNS) + [ERROR_COLUMN]
    if header != list(COLUMNS) and not has_err:
        raise RecordParseError(f"line 1: unexpected header {header}", 1)
    out = []
    for i, cells in enumerate(rows[1:], start=2):
        if not cells:
            continue
        out.append(_parse_row(cells, i, has_err))
    return out


def export_json(records, path):
    """Write records as a JSON array of flat objects (same fields as the CSV)."""
    data = []
    for r in records:
        d = r.to_dict()
        d["value"] = _fmt(d["value"]) if not math.isfinite(d["value"]) else d["value"]
        data.append(d)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise RecordIOError(f"cannot write {path}: {exc}", path) from exc


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}", path) from exc
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"line {exc.lineno}: {exc.msg}", exc.lineno) from exc
    out = []
    for i, d in enumerate(data):
        try:
            s = Settings(d["c_small"], d["C_k"], d["rho"], d["tol"], d["seed"])
            out.append(ExperimentRecord(d["quantity"], d["N"], d["k"], d["p"], float(d["value"]),
                                        s, d.get("timestamp", ""), d.get("error", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordParseError(f"entry {i}: {exc}", i) from exc
    return out


def strip_timestamps(records):
    return [replace(r, timestamp="") for r in records]
