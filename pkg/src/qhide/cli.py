"""Command-line runner: identity suites, scheme builders, security
estimators, sweeps, bound chains, secret sharing demos, and pad audits.

Reports follow the versioned ``qhide-report/1`` schema; everything except
the single ``timestamp`` field is deterministic for a fixed config and
seed, so reports diff cleanly in CI.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import bit_hiding, dual_hiding, multiparty, resources, security
from .errors import QhideError, SolverError, UsageError
from .operators import (
    DensityOperator,
    HilbertLayout,
    max_entangled,
    ricochet,
    trace_norm,
)
from .pauli import all_strings, phi_pauli_expansion, pm_decomposition, twirl

SCHEMA = "qhide-report/1"
MIN_TOL = 1e-12

DEFAULTS = {
    "seed": 42,
    "tol": 1e-10,
    "format": "json",
    "out": None,
    "dims": "2,3,4",
    "scheme": "werner:d=2,copies=2",
    "n": 1,
    "code": "five-qubit",
    "authorized": "0,1,2",
    "demo": None,
    "audit": False,
}


def _parse_scheme(spec: str) -> bit_hiding.BitHidingScheme:
    """Selector strings: werner:d=2 (one pair), werner:d=2,copies=2,
    oracle:k=2."""
    try:
        name, _, rest = spec.partition(":")
        params = {}
        if rest:
            for item in rest.split(","):
                key, _, val = item.partition("=")
                params[key.strip()] = int(val)
        if name == "werner":
            d = params.get("d", 2)
            copies = params.get("copies", 1)
            return bit_hiding.werner_tensor(d, copies)
        if name == "oracle":
            return bit_hiding.perfect_oracle(params.get("k", 2))
    except (ValueError, QhideError) as exc:
        raise UsageError(f"bad scheme selector {spec!r}: {exc}") from exc
    raise UsageError(f"unknown scheme provider {spec!r}")


def _load_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _coerce(key: str, val):
    if key in ("seed", "n"):
        return int(val)
    if key == "tol":
        tol = float(val)
        if tol < MIN_TOL:
            raise UsageError(f"tolerance {tol} below the floor {MIN_TOL}")
        return tol
    if key == "audit":
        return val if isinstance(val, bool) else val.lower() in ("1", "true", "yes")
    return val


def resolve_config(args: argparse.Namespace) -> dict:
    """Precedence: CLI flags > config file > defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        for key, val in _load_config_file(args.config).items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            cfg[key] = _coerce(key, val)
    for key in DEFAULTS:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = _coerce(key, val)
    return cfg


def _report(command: str, cfg: dict, checks: dict, values: dict,
            tables: dict | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg) if cfg[k] is not None},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "checks": checks,
        "values": values,
        "tables": tables or {},
        "passed": all(checks.values()),
    }


# ---------------------------------------------------------------------------
# commands


def run_identities(cfg: dict) -> dict:
    """The operator-identity suite at n in {1, 2}."""
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tol"]
    checks = {}
    values = {}
    for n in (1, 2):
        d = 2 ** n
        worst = {"ricochet": 0.0, "twirl": 0.0, "expansion": 0.0,
                 "bell_sign": 0.0, "pm_split": 0.0}
        phi_pair = max_entangled(d)
        for _ in range(5):
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            m = g @ g.conj().T
            rho = DensityOperator.from_matrix(HilbertLayout((("s", d),)),
                                              m / np.trace(m))
            back = ricochet(rho, phi_pair)
            worst["ricochet"] = max(worst["ricochet"],
                                    float(np.max(np.abs(back.mat - rho.mat))))
            tw = twirl(rho)
            worst["twirl"] = max(worst["twirl"],
                                 float(np.max(np.abs(tw.mat - np.eye(d) / d))))
        worst["expansion"] = float(np.max(np.abs(
            phi_pauli_expansion(n) - phi_pair.projector().mat)))
        for p in all_strings(n):
            sm = p.matrix()
            lhs = np.kron(np.eye(d), sm) @ phi_pair.vec
            rhs = np.kron(sm, np.eye(d)) @ phi_pair.vec
            sign = (-1) ** p.y_count()
            worst["bell_sign"] = max(worst["bell_sign"],
                                     float(np.max(np.abs(lhs - sign * rhs))))
            if not p.is_identity():
                plus, minus = pm_decomposition(p)
                rebuilt = 2 ** (n - 1) * (plus.mat - minus.mat)
                worst["pm_split"] = max(worst["pm_split"],
                                        float(np.max(np.abs(rebuilt - sm))))
        for name, err in worst.items():
            checks[f"{name}_n{n}"] = err <= tol
            values[f"{name}_n{n}_err"] = err
    return _report("verify-identities", cfg, checks, values)


def run_build_qscheme(cfg: dict) -> dict:
    cs = _parse_scheme(cfg["scheme"])
    if cs.k % 2 != 0:
        raise UsageError(f"scheme arity {cs.k} is odd; cannot hide qubits")
    qs = dual_hiding.qubits_from_bits(cs)
    fid = dual_hiding.process_fidelity_to_identity(qs.decoder.compose(qs.encoder))
    checks = {
        "round_trip_identity": fid >= 1 - 1e-9,
        "decoder_success": cs.decode_success() >= 1 - 1e-9,
    }
    values = {
        "n": qs.n,
        "carrier_dim": qs.carrier_layout.dim,
        "process_fidelity": fid,
        "delta_certificate": qs.delta_certificate.value,
        "delta_kind": qs.delta_certificate.kind,
    }
    return _report("build-qscheme", cfg, checks, values)


def run_security(cfg: dict) -> dict:
    """Estimator sandwich on the selected scheme's first codeword pair."""
    cs = _parse_scheme(cfg["scheme"])
    values = {}
    if not cs.open_labels:
        checks = {"oracle_trivially_secure": True}
        values["eps"] = 0.0
        values["kind"] = "oracle-perfect"
        return _report("security", cfg, checks, values)
    cut = set(cs.party_labels("A"))
    r, s = cs.attack_view(0), cs.attack_view(1)
    lo = security.dist_locc_seesaw(r, s, cut, seed=cfg["seed"])
    mid = security.dist_ppt(r, s, cut)
    hi = security.dist_global(r, s)
    values.update({
        "seesaw": lo.value,
        "ppt": mid.value,
        "global": hi,
        "sdp_gap": mid.diagnostics["gap"],
    })
    checks = {
        "seesaw_le_ppt": lo.value <= mid.value + 1e-6,
        "ppt_le_global": mid.value <= hi + 1e-6,
        "sdp_gap_small": mid.diagnostics["gap"] <= security.SDP_GAP_TOL,
    }
    return _report("security", cfg, checks, values)


def run_sweep(cfg: dict) -> dict:
    dims = [int(x) for x in str(cfg["dims"]).split(",") if x.strip()]
    if not dims:
        raise UsageError("empty dims list")
    rows = []
    for d in dims:
        row = {"d": d, "status": "ok", "eps_ppt": None, "eps_seesaw": None}
        try:
            cs = bit_hiding.werner_pair(d)
            rep = security.dist_ppt(cs.state(0), cs.state(1), {f"A0"})
            see = security.dist_locc_seesaw(cs.state(0), cs.state(1), {f"A0"},
                                            seed=cfg["seed"])
            row["eps_ppt"] = rep.value
            row["eps_seesaw"] = see.value
        except SolverError as exc:
            row["status"] = f"failed: {exc}"
        rows.append(row)
    ok_rows = [r for r in rows if r["status"] == "ok"]
    monotone = all(a["eps_ppt"] >= b["eps_ppt"] - 1e-8
                   for a, b in zip(ok_rows, ok_rows[1:]))
    checks = {
        "all_rows_solved": len(ok_rows) == len(rows),
        "ppt_non_increasing": monotone,
        "seesaw_below_ppt": all(r["eps_seesaw"] <= r["eps_ppt"] + 1e-6
                                for r in ok_rows),
    }
    return _report("sweep", cfg, checks, {"dims": dims}, tables={"sweep": rows})


def run_chains(cfg: dict) -> dict:
    cs = _parse_scheme(cfg["scheme"])
    if cs.k % 2 != 0:
        raise UsageError(f"scheme arity {cs.k} is odd; chains need qubit hiding")
    seed = cfg["seed"]
    c2q = security.verify_c2q_chain(cs, seed=seed)
    qs = dual_hiding.qubits_from_bits(cs)
    q2c = security.verify_q2c_chain(qs, seed=seed)
    multi = multiparty.verify_multiparty_chain(cs, seed=seed)
    checks = {}
    values = {}
    for rep in (c2q, q2c, multi):
        for name, ok in rep.checks.items():
            checks[f"{rep.name}.{name}"] = ok
        for name, val in rep.values.items():
            values[f"{rep.name}.{name}"] = val
    return _report("chains", cfg, checks, values)


def run_multiparty(cfg: dict) -> dict:
    if cfg["code"] != "five-qubit":
        raise UsageError(f"unknown code {cfg['code']!r}")
    subset = tuple(int(x) for x in str(cfg["authorized"]).split(",") if x.strip())
    access = multiparty.five_qubit_access()
    checks = {"subset_authorized": access.is_authorized(subset)}
    values = {"authorized": sorted(subset),
              "minimal_sets": [sorted(s) for s in access.minimal_sets()]}
    if cfg["demo"] == "reconstruct":
        if not access.is_authorized(subset):
            raise UsageError(f"subset {sorted(subset)} is unauthorized")
        worst = multiparty.multihide_reconstruct_demo(subset, seed=cfg["seed"])
        values["worst_fidelity"] = worst
        checks["reconstruction_exact"] = worst >= 1 - 1e-9
    return _report("multiparty", cfg, checks, values)


def run_pqc(cfg: dict) -> dict:
    pad = resources.pauli_pad(cfg["n"])
    verdict = resources.key_lower_bound_check(pad, seed=cfg["seed"])
    values = {
        "n": cfg["n"],
        "k": pad.k,
        "entropies": verdict.report.entropies,
    }
    checks = {"key_bound": verdict.passed}
    if cfg["audit"]:
        checks.update({f"audit.{k}": v for k, v in verdict.report.checks.items()})
    return _report("pqc", cfg, checks, values)


COMMANDS = {
    "verify-identities": run_identities,
    "build-qscheme": run_build_qscheme,
    "security": run_security,
    "sweep": run_sweep,
    "chains": run_chains,
    "multiparty": run_multiparty,
    "pqc": run_pqc,
}


def _emit(report: dict, cfg: dict) -> str:
    if cfg["format"] == "json":
        return json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"
    if cfg["format"] == "csv":
        tables = report.get("tables") or {}
        if not tables:
            raise UsageError("csv output is only defined for table-producing "
                             "commands (sweep)")
        buf = io.StringIO()
        rows = next(iter(tables.values()))
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    raise UsageError(f"unknown format {cfg['format']!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhide",
        description="Data-hiding constructions, security estimators, and "
                    "resource audits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--out")
        p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--config")
        if name in ("build-qscheme", "security", "chains"):
            p.add_argument("--scheme", help="werner:d=2[,copies=N] | oracle:k=K")
        if name == "sweep":
            p.add_argument("--dims", help="comma-separated local dimensions")
        if name == "multiparty":
            p.add_argument("--code")
            p.add_argument("--authorized", help="comma-separated party ids")
            p.add_argument("--demo", choices=["reconstruct"])
        if name == "pqc":
            p.add_argument("--n", type=int)
            p.add_argument("--audit", action="store_const", const=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        report = COMMANDS[args.command](cfg)
        text = _emit(report, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QhideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
