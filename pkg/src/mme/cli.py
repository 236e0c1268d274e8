"""Command-line front end: potential DSL, pipeline orchestration, JSON/CSV output.

Subcommands: expand (symbolic series), oracle (finite-N pairing series), maps
(colored map counts), sample (Monte Carlo), entropy (microstates free entropy)
and verify (wired cross-checks; exit code 2 on mismatch, 1 on input errors).

Potential syntax: terms joined by + or -, each an optional coefficient times
factors X<color> with optional ^power, e.g. "X1^4 + 0.5*X1*X2*X1*X2".
Decimal coefficients become exact rationals (p/10^k); the symbolic modules
never see floats.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import gausswick, master, sampler
from .master import LambdaSeries, Potential, SelfAdjointError, base_observable

SCHEMA = "mme/1"


class ParseError(ValueError):
    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"parse error at byte {offset}: {message}")


class CLIInputError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Parsed DSL: signed rational coefficients on expanded color words."""

    terms: tuple[tuple[Fraction, tuple[int, ...]], ...]
    d: int

    def canonical(self) -> "PotentialSpec":
        acc: dict[tuple[int, ...], Fraction] = {}
        for c, w in self.terms:
            acc[w] = acc.get(w, Fraction(0)) + c
        terms = tuple((c, w) for w, c in sorted(acc.items()) if c)
        return PotentialSpec(terms, self.d)

    def to_potential(self) -> Potential:
        return Potential({w: c for c, w in self.canonical().terms}, self.d)

    def to_observable(self):
        acc: dict[tuple[int, ...], Fraction] = {}
        for c, w in self.canonical().terms:
            acc[w] = c
        return base_observable(acc)


def format_spec(spec: PotentialSpec) -> str:
    spec = spec.canonical()
    if not spec.terms:
        return "0"
    bits = []
    for c, w in spec.terms:
        if not w:
            bits.append(f"{c}")
            continue
        word = "*".join(f"X{col}" for col in w)
        bits.append(word if c == 1 else f"{c}*{word}")
    return " + ".join(bits).replace("+ -", "- ")


# -- tokenizer / recursive descent ------------------------------------------

_DIGITS = set("0123456789")


def _tokenize(src: str):
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^/()":
            yield (ch, ch, i)
            i += 1
            continue
        if ch in _DIGITS or (ch == "." and i + 1 < n and src[i + 1] in _DIGITS):
            j = i
            while j < n and (src[j] in _DIGITS or src[j] == "."):
                j += 1
            yield ("num", src[i:j], i)
            i = j
            continue
        if ch == "X":
            j = i + 1
            while j < n and src[j] in _DIGITS:
                j += 1
            if j == i + 1:
                raise ParseError(i, "X must be followed by a color number")
            yield ("var", src[i:j], i)
            i = j
            continue
        raise ParseError(i, f"unexpected character {ch!r}")
    yield ("end", "", n)


def _number_to_fraction(text: str, offset: int) -> Fraction:
    if text.count(".") > 1:
        raise ParseError(offset, f"malformed number {text!r}")
    if "." in text:
        whole, frac = text.split(".")
        digits = (whole or "0") + frac
        return Fraction(int(digits), 10 ** len(frac))
    return Fraction(int(text))


def parse_potential(src: str, d: int) -> PotentialSpec:
    """Parse the DSL into expanded (coefficient, word) terms of declared arity."""
    toks = list(_tokenize(src))
    pos = 0

    def peek():
        return toks[pos]

    def take():
        nonlocal pos
        t = toks[pos]
        pos += 1
        return t

    terms: list[tuple[Fraction, tuple[int, ...]]] = []

    def parse_factor() -> tuple[int, ...]:
        kind, text, off = take()
        if kind != "var":
            raise ParseError(off, f"expected a variable, got {text!r}")
        color = int(text[1:])
        if not 1 <= color <= d:
            raise ParseError(off, f"color {color} outside declared arity d={d}")
        power = 1
        if peek()[0] == "^":
            take()
            kind, text, off = take()
            if kind != "num" or "." in text:
                raise ParseError(off, "exponent must be a positive integer")
            power = int(text)
            if power < 1:
                raise ParseError(off, "exponent must be >= 1")
        return (color,) * power

    def parse_term(sign: Fraction):
        coeff = sign
        word: tuple[int, ...] = ()
        kind, text, off = peek()
        if kind == "num":
            take()
            coeff *= _number_to_fraction(text, off)
            if peek()[0] == "/":
                take()
                kind, text, off = take()
                if kind != "num" or "." in text:
                    raise ParseError(off, "denominator must be an integer")
                if int(text) == 0:
                    raise ParseError(off, "zero denominator")
                coeff /= int(text)
            if peek()[0] == "*":
                take()
            elif peek()[0] not in ("var",):
                terms.append((coeff, ()))
                return
        while True:
            word += parse_factor()
            if peek()[0] == "*":
                take()
                continue
            break
        terms.append((coeff, word))

    sign = Fraction(1)
    kind, text, off = peek()
    if kind in "+-":
        take()
        sign = Fraction(1) if kind == "+" else Fraction(-1)
    parse_term(sign)
    while True:
        kind, text, off = take()
        if kind == "end":
            break
        if kind not in "+-":
            raise ParseError(off, f"expected '+' or '-', got {text!r}")
        parse_term(Fraction(1) if kind == "+" else Fraction(-1))
    return PotentialSpec(tuple(terms), d).canonical()


def parse_monomial(src: str, d: int) -> tuple[int, ...]:
    spec = parse_potential(src, d)
    if len(spec.terms) != 1 or spec.terms[0][0] != 1:
        raise CLIInputError(f"{src!r} is not a plain monomial")
    return spec.terms[0][1]


# -- job configuration ---------------------------------------------------------


def load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CLIInputError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIInputError(message)


def _resolve(args, cfg: dict[str, str], key: str, cast, default):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg:
        return cast(cfg[key])
    return default


def _emit(payload: dict, args, rows: list[dict] | None = None):
    """JSON to stdout or --out; CSV when requested and the payload is tabular."""
    if getattr(args, "format", "json") == "csv" and rows is not None:
        buf = io.StringIO()
        cols = list(rows[0].keys()) if rows else []
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(",".join(str(r[c]) for c in cols) + "\n")
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _series_rows(series_list: list[LambdaSeries]) -> list[dict]:
    rows = []
    for n, s in enumerate(series_list):
        for k, c in enumerate(s.coeffs):
            rows.append({"n": n, "k": k, "coeff": c})
    return rows


# -- subcommands ----------------------------------------------------------------


def cmd_expand(args, cfg) -> int:
    d = _resolve(args, cfg, "d", int, 1)
    pot = parse_potential(_resolve(args, cfg, "potential", str, None), d).to_potential()
    obs = parse_potential(_resolve(args, cfg, "observable", str, "X1^2"), d).to_observable()
    n_max = _resolve(args, cfg, "genus", int, 0)
    K = _resolve(args, cfg, "lambda_order", int, 2)
    series = [master.alpha_series(n, pot, obs, K) for n in range(n_max + 1)]
    payload = {"schema": SCHEMA, "command": "expand",
               "series": [s.to_json(n) for n, s in enumerate(series)]}
    lam = getattr(args, "lam", None)
    if lam is not None:
        lam = Fraction(lam)
        payload["at_lambda"] = {
            "lambda": str(lam),
            "values": [str(s.eval(lam)) for s in series],
            "last_term": [str(s.last_term(lam)) for s in series],
        }
    _emit(payload, args, rows=_series_rows(series))
    return 0


def cmd_oracle(args, cfg) -> int:
    d = _resolve(args, cfg, "d", int, 1)
    pot = parse_potential(_resolve(args, cfg, "potential", str, None), d).to_potential()
    spec = parse_potential(_resolve(args, cfg, "observable", str, "X1^2"), d).canonical()
    n_max = _resolve(args, cfg, "genus", int, 0)
    K = _resolve(args, cfg, "lambda_order", int, 2)
    total = [LambdaSeries([0] * (K + 1)) for _ in range(n_max + 1)]
    for c, w in spec.terms:
        rs = gausswick.ratio_series(gausswick.Star(w), pot, K, d)
        for n in range(n_max + 1):
            total[n] = total[n] + gausswick.genus_coefficient(rs, n).scale(c)
    payload = {"schema": SCHEMA, "command": "oracle",
               "series": [s.to_json(n) for n, s in enumerate(total)]}
    _emit(payload, args, rows=_series_rows(total))
    return 0


def cmd_maps(args, cfg) -> int:
    d = _resolve(args, cfg, "d", int, 1)
    root = gausswick.Star(parse_monomial(_resolve(args, cfg, "root", str, None), d))
    if args.table:
        pot_src = _resolve(args, cfg, "potential", str, None)
        if pot_src is None:
            raise CLIInputError("--table needs --potential for the vertex types")
        pot = parse_potential(pot_src, d).to_potential()
        g_max = _resolve(args, cfg, "genus", int, 1)
        K = _resolve(args, cfg, "lambda_order", int, 2)
        rows = gausswick.map_count_table([root], pot, g_max, K)
        payload = {"schema": SCHEMA, "command": "maps", "table": rows}
        _emit(payload, args, rows=rows)
        return 0
    g = _resolve(args, cfg, "genus", int, 0)
    vertices_src = _resolve(args, cfg, "vertices", str, "")
    vertices = [gausswick.Star(parse_monomial(v, d))
                for v in vertices_src.split(",") if v.strip()]
    count = gausswick.map_count(g, vertices, root)
    payload = {"schema": SCHEMA, "command": "maps", "genus": g,
               "root": format_spec(PotentialSpec(((Fraction(1), root.colors),), d)),
               "vertices": vertices_src, "count": count}
    _emit(payload, args, rows=[{"genus": g, "vertices": vertices_src or "-", "count": count}])
    return 0


def cmd_sample(args, cfg) -> int:
    d = _resolve(args, cfg, "d", int, 1)
    pot = parse_potential(_resolve(args, cfg, "potential", str, None), d).to_potential()
    config = sampler.ModelConfig(
        V=pot,
        lam=_resolve(args, cfg, "lam", float, 0.0),
        N=_resolve(args, cfg, "n", int, 16),
        K_cut=_resolve(args, cfg, "k_cut", float, None),
        seed=_resolve(args, cfg, "seed", int, 0),
        step_size=_resolve(args, cfg, "step_size", float, None),
        n_steps=_resolve(args, cfg, "steps", int, 10000),
        n_burnin=_resolve(args, cfg, "burnin", int, 1000),
        thinning=_resolve(args, cfg, "thinning", int, 10),
        n_chains=_resolve(args, cfg, "chains", int, 2),
    )
    obs_src = args.observable or ["X1^2"]
    observables: dict[str, sampler.ObsSpec] = {}
    for src in obs_src:
        spec = parse_potential(src, d).canonical()
        observables[src] = ("ts", {w: c for c, w in spec.terms})
    if args.sd_observable:
        mono = parse_monomial(args.sd_observable, d)
        color = args.sd_color or 1
        observables[f"sd:{args.sd_observable}:{color}"] = ("sd", mono, color)
    threads = args.threads or int(os.environ.get("MME_THREADS", "1"))
    store = bool(args.dump)
    runs = sampler.run_chains(config, observables, threads=threads, store_samples=store)
    payload = {"schema": SCHEMA, "command": "sample"}
    payload.update(sampler.summary(config, runs, list(observables)))
    if args.dump:
        sampler.dump_samples(args.dump, runs, config.N, pot.d)
        payload["dump"] = args.dump
    rows = [{"observable": k, "mean": v["mean"], "stderr": v["stderr"]}
            for k, v in payload["observables"].items()]
    _emit(payload, args, rows=rows)
    return 0


def cmd_entropy(args, cfg) -> int:
    d = _resolve(args, cfg, "d", int, 1)
    pot = parse_potential(_resolve(args, cfg, "potential", str, None), d).to_potential()
    K = _resolve(args, cfg, "lambda_order", int, 4)
    lam = Fraction(_resolve(args, cfg, "lam", str, "0"))
    a0 = master.alpha_series(0, pot, pot.as_ncpoly(), K)
    s1 = master.entropy_series(a0)
    s2 = master.entropy_series_by_parts(a0)
    payload = {
        "schema": SCHEMA, "command": "entropy",
        "lambda": str(lam), "chi": str(s1.eval(lam)),
        "series": s1.to_json(0),
        "identity_check": s1.coeffs == s2.coeffs,
    }
    _emit(payload, args)
    return 0


# -- verify suites -----------------------------------------------------------------


def _suite_quadratic(report):
    ok = True
    for d, vterms, pterms in [(1, {(1, 1): 1}, {(1, 1): 1}),
                              (2, {(1, 1): 1, (2, 2): 1}, {(2, 2): 1})]:
        V = Potential(vterms, d)
        P = base_observable(pterms)
        a0 = master.alpha_series(0, V, P, 6)
        want = LambdaSeries([(-2) ** k for k in range(7)])
        good = a0 == want
        good &= all(master.alpha_series(n, V, P, 3).is_zero() for n in (1, 2))
        rs = gausswick.ratio_series(gausswick.Star(next(iter(pterms))), V, 4, d)
        good &= gausswick.genus_coefficient(rs, 0) == LambdaSeries(want.coeffs[:5])
        good &= gausswick.genus_coefficient(rs, 1).is_zero()
        report.append(("alpha_n==0 for n>=1 and geometric alpha_0 (d=%d)" % d, good))
        ok &= good
    return ok


def _suite_linear(report):
    V = Potential({(1,): 1}, 1)
    a_x = master.alpha_series(0, V, base_observable({(1,): 1}), 5)
    a_xx = master.alpha_series(0, V, base_observable({(1, 1): 1}), 5)
    good = a_x == LambdaSeries([0, -1, 0, 0, 0, 0])
    good &= a_xx == LambdaSeries([1, 0, 1, 0, 0, 0])
    rs = gausswick.ratio_series(gausswick.Star((1,)), V, 5)
    good &= gausswick.genus_coefficient(rs, 0) == a_x
    report.append(("shifted Gaussian first moments", good))
    return good


def _suite_quartic(report, K=2):
    V = Potential({(1, 1, 1, 1): 1}, 1)
    ok = True
    for pterms in ({(1, 1): 1}, {(1, 1, 1, 1): 1}):
        P = base_observable(pterms)
        rs = gausswick.ratio_series(gausswick.Star(next(iter(pterms))), V, K)
        for n in (0, 1):
            a = master.alpha_series(n, V, P, K)
            good = a == gausswick.genus_coefficient(rs, n)
            report.append((f"master==oracle genus {n}, P deg {len(next(iter(pterms)))}", good))
            ok &= good
    return ok


def _suite_maps(report):
    V = Potential({(1, 1, 1, 1): 1}, 1)
    ok = gausswick.map_count(0, [], gausswick.Star((1, 1, 1, 1))) == 2
    ok &= gausswick.map_count(1, [], gausswick.Star((1, 1, 1, 1))) == 1
    report.append(("seed map counts", ok))
    for g in (0, 1):
        r = gausswick.corollary13_check(V, gausswick.Star((1, 1)), g, 2)
        report.append((f"map corollary genus {g}", r["ok"]))
        ok &= r["ok"]
    return ok


def _suite_sampler(report):
    V = Potential({(1, 1, 1, 1): 1}, 1)
    cfg = sampler.ModelConfig(V=V, lam=0.0, N=16, seed=2, n_steps=4000,
                              n_burnin=800, thinning=5, n_chains=2)
    runs = sampler.run_chains(cfg, {"x2": ("ts", {(1, 1): 1})})
    mean, err = sampler.estimate(runs, "x2")
    good = abs(mean - 1.0) < 3 * err + 1e-3
    report.append((f"stationary ts X^2 = {mean:.4f} +- {err:.4f}", good))
    return good


def cmd_verify(args, cfg) -> int:
    suites = {
        "quadratic": _suite_quadratic,
        "linear": _suite_linear,
        "quartic": _suite_quartic,
        "maps": _suite_maps,
        "sampler": _suite_sampler,
    }
    name = _resolve(args, cfg, "suite", str, "quadratic")
    chosen = list(suites) if name == "all" else [name]
    if any(s not in suites for s in chosen):
        raise CLIInputError(f"unknown suite {name!r} (have {', '.join(suites)} or all)")
    report: list[tuple[str, bool]] = []
    ok = True
    for s in chosen:
        ok &= suites[s](report)
    payload = {"schema": SCHEMA, "command": "verify", "suite": name,
               "ok": ok,
               "checks": [{"name": n, "pass": bool(p)} for n, p in report]}
    for n, p in report:
        sys.stderr.write(f"{n}: {'PASS' if p else 'FAIL'}\n")
    _emit(payload, args)
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mme", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value file; flags override")
        sp.add_argument("--out", help="write output to a file instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker parallelism (default MME_THREADS or 1)")

    sp = sub.add_parser("expand", help="symbolic alpha_n series from the operators")
    sp.add_argument("--potential"); sp.add_argument("--d", type=int)
    sp.add_argument("--observable"); sp.add_argument("--genus", type=int)
    sp.add_argument("--lambda-order", dest="lambda_order", type=int)
    sp.add_argument("--lambda", dest="lam", help="evaluate the series at this rational")
    common(sp); sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("oracle", help="finite-N pairing series, genus extracted")
    sp.add_argument("--potential"); sp.add_argument("--d", type=int)
    sp.add_argument("--observable"); sp.add_argument("--genus", type=int)
    sp.add_argument("--lambda-order", dest="lambda_order", type=int)
    common(sp); sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("maps", help="colored map counts")
    sp.add_argument("--root"); sp.add_argument("--d", type=int)
    sp.add_argument("--genus", type=int)
    sp.add_argument("--vertices", help="comma-separated monomials, may be empty")
    sp.add_argument("--table", action="store_true",
                    help="full count table over a potential's vertex multisets")
    sp.add_argument("--potential")
    sp.add_argument("--lambda-order", dest="lambda_order", type=int)
    common(sp); sp.set_defaults(func=cmd_maps)

    sp = sub.add_parser("sample", help="MALA sampling of the cut-off model")
    sp.add_argument("--potential"); sp.add_argument("--d", type=int)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--n", type=int); sp.add_argument("--k-cut", dest="k_cut", type=float)
    sp.add_argument("--seed", type=int); sp.add_argument("--step-size", dest="step_size", type=float)
    sp.add_argument("--steps", type=int); sp.add_argument("--burnin", type=int)
    sp.add_argument("--thinning", type=int); sp.add_argument("--chains", type=int)
    sp.add_argument("--observable", action="append")
    sp.add_argument("--sd-observable", dest="sd_observable")
    sp.add_argument("--sd-color", dest="sd_color", type=int)
    sp.add_argument("--dump", help="raw-sample binary dump path (MMCH layout)")
    common(sp); sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("entropy", help="microstates free entropy of the leading order")
    sp.add_argument("--potential"); sp.add_argument("--d", type=int)
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--lambda-order", dest="lambda_order", type=int)
    common(sp); sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("verify", help="wired cross-checks; exit 2 on mismatch")
    sp.add_argument("--suite")
    common(sp); sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    from .expalg import DivergentIntegral
    from .master import BudgetExceeded
    from .sampler import InsufficientSamples

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config_file(args.config) if args.config else {}
        required_missing = (getattr(args, "potential", "x") is None
                            and "potential" not in cfg
                            and args.command in ("expand", "oracle", "sample", "entropy"))
        if required_missing:
            raise CLIInputError("--potential is required (flag or config file)")
        if args.command == "maps" and getattr(args, "root", None) is None and "root" not in cfg:
            raise CLIInputError("--root is required (flag or config file)")
        return args.func(args, cfg)
    except (CLIInputError, ParseError, SelfAdjointError, ValueError,
            BudgetExceeded, InsufficientSamples, DivergentIntegral) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
