"""Command-line front end: each verification as a subcommand with a JSON or CSV report.

Exit codes: 0 all certified, 1 usage or validation error, 2 certified
violation, 3 undecidable at the configured precision.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from .acr import (
    CollectionError,
    acs_threshold,
    adversarial_search,
    chain_verify,
    epsilon_to_eta,
)
from .blowup import BlowupVerdict, divergence_report
from .scalar import (
    ScalarError,
    Undecidable,
    as_enclosure,
    certainly_less,
    format_bound,
    format_rational,
    is_exact,
    lower,
    parse_rational,
    serialize,
    upper,
)
from .scheme import DepthError, SchemeParams, remaining_measure, scheme_for
from .series import SeriesSpec, lr_norm_series, polygeom_sum
from .stepfn import CounterexampleF, MonotoneStep, integrate_abs_power

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_UNDECIDABLE = 0, 1, 2, 3
MAX_PRECISION = 4096


@dataclass(frozen=True)
class RunConfig:
    r: Fraction = Fraction(1)
    mode: str = "exact"
    precision_bits: int = 256
    depth_cap: int = 64
    seed: int = 0
    budget: int = 10000
    tolerance: Fraction = Fraction(1, 10**30)
    fmt: str = "json"

    def __post_init__(self):
        if self.mode not in ("exact", "enclosure"):
            raise click.UsageError("--mode must be exact or enclosure")
        if self.mode == "exact" and self.r.denominator != 1:
            raise click.UsageError("exact mode requires an integer --r")
        if self.precision_bits < 64:
            raise click.UsageError("--precision-bits must be at least 64")
        if self.tolerance <= 0:
            raise click.UsageError("--tolerance must be positive")

    @property
    def params(self) -> SchemeParams:
        return SchemeParams(self.r, self.precision_bits, self.depth_cap)

    def to_json(self) -> dict:
        d = asdict(self)
        d["r"] = format_rational(self.r)
        d["tolerance"] = format_rational(self.tolerance)
        d["format"] = d.pop("fmt")
        return d


class Outcome:
    """Report body plus the exit status it implies."""

    def __init__(self, body: dict, status: int, table: list[list] | None = None, header: list[str] | None = None):
        self.body = body
        self.status = status
        self.table = table or []
        self.header = header or []


def _escalate(fn, cfg: RunConfig):
    """Run ``fn(params)``, doubling the working precision on Undecidable."""
    bits = cfg.precision_bits
    while True:
        try:
            return fn(SchemeParams(cfg.r, bits, cfg.depth_cap))
        except Undecidable:
            if bits * 2 > MAX_PRECISION:
                raise
            bits *= 2


def _agree(a, b, tol) -> bool:
    """Enclosures overlap and each is narrower than ``tol``, or exact equality."""
    if is_exact(a) and is_exact(b):
        return lower(a) == lower(b)
    ea, eb = as_enclosure(a), as_enclosure(b)
    overlap = ea.lo <= eb.hi and eb.lo <= ea.hi
    return overlap and ea.hi - ea.lo <= tol and eb.hi - eb.lo <= tol


def _cell(v) -> str:
    if is_exact(v):
        return format_rational(lower(v))
    return f"[{format_bound(lower(v), 'down')}, {format_bound(upper(v), 'up')}]"


# ---------------------------------------------------------------------------
# commands


def cmd_verify_nullset(cfg: RunConfig, depth: int | None = None) -> Outcome:
    def run(params):
        sch = scheme_for(params)
        top = min(depth if depth is not None else params.depth_cap, params.depth_cap)
        ratio = 2 / sch.four_r
        rows, table = [], []
        ok = True
        for N in range(top + 1):
            got = remaining_measure(params, N)
            want = ratio**N
            eq = _agree(got, want, cfg.tolerance)
            resid = True
            if N >= 1:
                rn, rp, un = sch.residual_length(N), sch.residual_length(N - 1), sch.u_length(N)
                resid = (
                    _agree(rn, (rp - un) / 2, cfg.tolerance)
                    and _agree(rn, un / (sch.four_r - 2), cfg.tolerance)
                    and certainly_less(rn, un)
                )
            ok &= eq and resid
            rows.append({"N": N, "remaining_measure": serialize(got), "expected": serialize(want),
                         "equal": eq, "residual_identity": resid})
            table.append([N, _cell(got), _cell(want), str(eq).lower(), str(resid).lower()])
        # sum_n 2^(n-1) 4^(-rn) = (1/2) sum_n (2/4^r)^n
        series = polygeom_sum(SeriesSpec(Fraction(0), ratio, Fraction(1, 2)), 1, cfg.tolerance / 4)
        target = 1 / (sch.four_r - 2)
        closed = _agree(series, target, cfg.tolerance)
        body = {"rows": rows, "identity": {"series": serialize(series), "closed_form": serialize(target),
                                           "certified": closed}}
        return Outcome(body, EXIT_OK if ok and closed else EXIT_VIOLATION, table,
                       ["N", "remaining_measure", "expected", "equal", "residual_identity"])

    return _escalate(run, cfg)


def cmd_verify_norm(cfg: RunConfig) -> Outcome:
    def run(params):
        direct = integrate_abs_power(params, (Fraction(0), Fraction(1)), params.r, cfg.tolerance / 4)
        series = lr_norm_series(params.r, cfg.tolerance / 4)
        ok = _agree(direct, series, cfg.tolerance)
        body = {"direct": serialize(direct), "series": serialize(series), "certified_equal": ok}
        return Outcome(body, EXIT_OK if ok else EXIT_VIOLATION, [[_cell(direct), _cell(series), str(ok).lower()]],
                       ["direct", "series", "certified_equal"])

    return _escalate(run, cfg)


def cmd_verify_acr(cfg: RunConfig, epsilon, s=None) -> Outcome:
    if cfg.budget < 1:
        raise click.UsageError("--budget must be at least 1")
    eps = parse_rational(epsilon)
    if eps <= 0:
        raise click.UsageError("--epsilon must be positive")

    def run(params):
        n, eta = epsilon_to_eta(params, eps)
        expo = parse_rational(s) if s is not None else params.r
        res = adversarial_search(params, eta=eta, s=expo, budget=cfg.budget, seed=cfg.seed, n=n, epsilon=eps)
        report = res.best_report or chain_verify(CounterexampleF(params), res.best, n, expo, check=False)
        body = {
            "epsilon": format_rational(eps),
            "n": n,
            "eta": serialize(eta),
            "s": format_rational(expo),
            "evaluated": res.evaluated,
            "chain_certified": res.chain_certified,
            "exceeding_epsilon": res.exceeding,
            "undecided": res.undecided,
            "max_sum_upper": format_bound(res.max_upper, "up"),
            "best_sum": serialize(res.best_sum),
            "best_collection": [it.to_json(params) for it in res.best.items],
            "best_chain": report.to_json(),
        }
        if res.exceeding:
            status = EXIT_VIOLATION
        elif res.undecided:
            status = EXIT_UNDECIDABLE
        elif res.chain_certified != res.evaluated or not report.certified:
            status = EXIT_UNDECIDABLE
        else:
            status = EXIT_OK
        table = [[r.interval, r.rank, r.kind, _cell(r.local_mean),
                  "" if r.local_bound is None else _cell(r.local_bound), str(r.ok).lower()] for r in report.rows]
        return Outcome(body, status, table, ["interval", "rank", "kind", "local_mean", "local_bound", "ok"])

    return _escalate(run, cfg)


def cmd_verify_blowup(cfg: RunConfig, alphas, R: MonotoneStep | None, n_max: int = 25) -> Outcome:
    def run(params):
        reports = []
        status = EXIT_OK
        table = []
        for a in alphas:
            rep = divergence_report(params, alpha=a, R=R, n_range=range(1, min(n_max, params.depth_cap) + 1),
                                    tolerance=cfg.tolerance)
            reports.append(rep.to_json())
            for line in list(csv.reader(io.StringIO(rep.to_csv())))[1:]:
                table.append([format_rational(rep.alpha), *line])
            if not rep.all_certified or rep.verdict is not BlowupVerdict.DIVERGES:
                status = max(status, _blowup_failure(rep))
        body = {"R": R.to_json() if R is not None else None, "reports": reports}
        return Outcome(body, status, table, ["alpha", "n", "h_n", "quantity_lower", "quantity_upper",
                                             "v_n_over_hn2", "closed_bound", "certified"])

    return _escalate(run, cfg)


def _blowup_failure(rep) -> int:
    for row in rep.rows:
        if upper(row.quantity) <= lower(row.v_over_h2):
            return EXIT_VIOLATION
    return EXIT_UNDECIDABLE


def cmd_threshold(cfg: RunConfig, s_list) -> Outcome:
    def run(params):
        reports = [acs_threshold(params, s) for s in s_list]
        body = {
            "s_star": serialize(reports[0].s_star) if reports else None,
            "results": [r.to_json() for r in reports],
            "note": "a divergent series shows the bound chain fails; AC_s failure is only consistent with it",
        }
        table = [[format_rational(r.s), _cell(r.ratio_limit), r.verdict.value] for r in reports]
        return Outcome(body, EXIT_OK, table, ["s", "ratio_limit", "verdict"])

    return _escalate(run, cfg)


# ---------------------------------------------------------------------------
# click wiring


def _rational(ctx, param, value):
    if value is None:
        return None
    try:
        if isinstance(value, tuple):
            return tuple(parse_rational(v) for v in value)
        return parse_rational(value)
    except (ScalarError, ValueError) as exc:
        raise click.BadParameter(str(exc)) from exc


def _common(f):
    opts = [
        click.option("--r", "r", default="1", callback=_rational, show_default=True, help="Exponent r >= 1."),
        click.option("--mode", type=click.Choice(["exact", "enclosure"]), default=None,
                     help="Default: exact for integer r, else enclosure."),
        click.option("--precision-bits", type=int, default=256, show_default=True),
        click.option("--depth-cap", type=int, default=64, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--budget", type=int, default=10000, show_default=True),
        click.option("--tolerance", default="1e-30", callback=_rational, show_default=True),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _config(kw) -> RunConfig:
    r = kw.pop("r")
    mode = kw.pop("mode") or ("exact" if r.denominator == 1 else "enclosure")
    return RunConfig(r, mode, kw.pop("precision_bits"), kw.pop("depth_cap"), kw.pop("seed"),
                     kw.pop("budget"), kw.pop("tolerance"), kw.pop("fmt"))


def _emit(command: str, cfg: RunConfig, outcome: Outcome, out: Path | None) -> int:
    if cfg.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(outcome.header)
        w.writerows(outcome.table)
        text = buf.getvalue()
    else:
        doc = {
            "schema": SCHEMA,
            "command": command,
            "config": cfg.to_json(),
            "status": _status_name(outcome.status),
            "result": outcome.body,
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)
    return outcome.status


def _status_name(code: int) -> str:
    return {EXIT_OK: "certified", EXIT_VIOLATION: "violation", EXIT_UNDECIDABLE: "undecidable"}[code]


def _run(command: str, kw: dict, body) -> int:
    out = kw.pop("out")
    cfg = _config(kw)
    try:
        outcome = body(cfg, **kw)
    except Undecidable as exc:
        outcome = Outcome({"error": str(exc)}, EXIT_UNDECIDABLE)
    except (ScalarError, DepthError, CollectionError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc
    return _emit(command, cfg, outcome, out)


@click.group()
@click.version_option(__version__)
def cli():
    """Certified checks on the Cantor-set counterexample F."""


@cli.command("verify-nullset")
@_common
@click.option("--depth", type=int, default=None, help="Largest rank N tabulated (default: depth cap).")
def verify_nullset(**kw):
    """Remaining measure (2/4^r)^N and the identity sum 2^(n-1)/4^(rn) = 1/(4^r - 2)."""
    return _run("verify-nullset", kw, lambda cfg, depth: cmd_verify_nullset(cfg, depth))


@cli.command("verify-norm")
@_common
def verify_norm(**kw):
    """Direct integral of |F|^r against its series value."""
    return _run("verify-norm", kw, lambda cfg: cmd_verify_norm(cfg))


@cli.command("verify-acr")
@_common
@click.option("--epsilon", default="1/10", callback=_rational, show_default=True)
@click.option("--s", "s", default=None, callback=_rational, help="Exponent of the sums (default r).")
def verify_acr(**kw):
    """Adversarial search for tagged collections with a large AC sum."""
    return _run("verify-acr", kw, lambda cfg, epsilon, s: cmd_verify_acr(cfg, epsilon, s))


@cli.command("verify-blowup")
@_common
@click.option("--alpha", multiple=True, default=("0",), callback=_rational, show_default=True)
@click.option("--R-file", "r_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--n-max", type=int, default=25, show_default=True)
def verify_blowup(**kw):
    """Blow-up of the derivate probe of m = F - R at x = 0."""

    def body(cfg, alpha, r_file, n_max):
        R = None
        if r_file is not None:
            try:
                R = MonotoneStep.from_json(r_file.read_text())
            except json.JSONDecodeError as exc:
                raise ScalarError(f"malformed R file: {exc}") from exc
        return cmd_verify_blowup(cfg, alpha, R, n_max)

    return _run("verify-blowup", kw, body)


@cli.command("threshold")
@_common
@click.option("--s", "s", multiple=True, default=("1", "2"), callback=_rational, show_default=True)
def threshold(**kw):
    """Convergence of the bound-chain series for exponents s."""

    def body(cfg, s):
        if any(v < 1 for v in s):
            raise ScalarError("each --s must be at least 1")
        return cmd_threshold(cfg, s)

    return _run("threshold", kw, body)


def main(argv: list[str] | None = None) -> int:
    try:
        code = cli.main(args=argv, prog_name="hkr-lab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
