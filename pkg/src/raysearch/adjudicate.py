"""Fixed battery of numerical checks against the closed-form claims.

Every entry carries a status in {matches, matches-asymptotically,
orientation-corrected, deviates} plus the numbers behind it.  Nothing here
reads the clock or an unseeded generator, so two runs produce identical
reports.
"""

from __future__ import annotations

import math

import numpy as np

from .corevec import Dense, StateVector, apply
from .geometry import (
    fs_distance,
    grover_steps_eq2,
    one_step_displacement,
    v_steps_eq5,
    v_steps_eq7,
)
from .grover import SearchSpec, build_q, detect_slippage, run_grover
from .qsl import (
    constant_rabi,
    envelope_report,
    evolve,
    farhi_gutmann,
    random_pair,
    random_smooth,
    PRINTED_ORIENTATION_NOTE,
)
from .vrotor import build_v, run_vsearch

STATUSES = ("matches", "matches-asymptotically", "orientation-corrected", "deviates")


def _peak_step(trace) -> int:
    """First local maximum of the success probability: where the target ray is passed."""
    sp = trace.success_prob
    falls = np.nonzero(np.diff(sp) < 0)[0]
    return int(falls[0]) if falls.size else len(sp) - 1


def claim_one_step_displacement(n_range=range(2, 13)) -> dict:
    rows = []
    for n in n_range:
        spec = SearchSpec.exhaustive(n, 0)
        moved = fs_distance(spec.initial, apply(build_q(spec), spec.initial))
        claimed, exact = one_step_displacement(spec.u_abs)
        rows.append({
            "N": 2 ** n,
            "u": spec.u_abs,
            "simulated_d2": moved ** 2,
            "claimed_d2": claimed ** 2,
            "exact_d2": exact ** 2,
            "sim_vs_exact_abs": abs(moved ** 2 - exact ** 2),
            "claimed_relative_gap": (claimed ** 2 - moved ** 2) / claimed ** 2,
        })
    exact_ok = all(r["sim_vs_exact_abs"] <= 1e-10 for r in rows)
    gap_is_u2 = all(abs(r["claimed_relative_gap"] - r["u"] ** 2) <= 1e-10 for r in rows)
    status = "matches-asymptotically" if exact_ok and gap_is_u2 else "deviates"
    return {
        "id": "one_step_displacement",
        "claim": "d^2(psi_i, Q psi_i) = 16 |U_if|^2",
        "status": status,
        "summary": "simulation equals 16u^2(1-u^2); claimed value is off by the factor (1-u^2), relative gap 1/N",
        "rows": rows,
    }


def claim_step_counts(n_range=range(2, 13), p_values=(0.5, 1.0)) -> list[dict]:
    """Closed-form counts against the simulated number of steps to reach the target ray."""
    grover_rows, v_rows = [], []
    for n in n_range:
        spec = SearchSpec.exhaustive(n, 0)
        u = spec.u_abs
        tr = run_grover(spec, max_steps=int(2 * math.pi * 2 ** (n / 2)) + 4, stop_threshold=2.0)
        peak = _peak_step(tr)
        half = run_grover(spec, max_steps=10_000).first_passage
        eq2 = grover_steps_eq2(u).steps
        grover_rows.append({"N": 2 ** n, "peak_step": peak, "first_passage_half": half,
                            "eq2": eq2, "peak_over_eq2": peak / eq2 if eq2 else None})
        for p in p_values:
            vspec = SearchSpec.exhaustive(n, 0, p)
            alpha = build_v(vspec).alpha
            budget = int(math.ceil(2 * math.pi / alpha)) + 2
            vt = run_vsearch(vspec, max_steps=budget, stop_threshold=2.0)
            vpeak = _peak_step(vt)
            eq7 = v_steps_eq7(u, p).steps
            eq5 = v_steps_eq5(u, p).steps
            v_rows.append({"N": 2 ** n, "p": p, "peak_step": vpeak,
                           "first_passage_half": run_vsearch(vspec).first_passage,
                           "eq5": eq5, "eq7": eq7, "eq7_ceil": math.ceil(eq7 - 1e-9),
                           "peak_minus_eq7_ceil": vpeak - math.ceil(eq7 - 1e-9),
                           "peak_over_eq5": vpeak / eq5})

    def order_status(ratios):
        ratios = [r for r in ratios if r is not None]
        within = all(0.5 <= r <= 2.0 for r in ratios)
        return "matches-asymptotically" if within else "deviates"

    big = [r for r in grover_rows if r["N"] >= 16]
    eq2_claim = {
        "id": "grover_step_estimate",
        "claim": "s = (1/2) sqrt(1/|U_if|^2 - 1)",
        "status": order_status([r["peak_over_eq2"] for r in big]),
        "summary": "same O(sqrt N) order; steps to the target ray exceed the estimate by a factor tending to pi/2",
        "rows": grover_rows,
    }
    eq7_ok = all(abs(r["peak_minus_eq7_ceil"]) <= 1 for r in v_rows)
    eq7_claim = {
        "id": "v_angle_ratio_steps",
        "claim": "s = arccos|U_if| / arcsin(|U_if|^p)",
        "status": "matches" if eq7_ok else "deviates",
        "summary": "ceil of the angle ratio against the step of maximal success, within one step",
        "rows": v_rows,
    }
    eq5_claim = {
        "id": "v_distance_ratio_steps",
        "claim": "s = sqrt(1 - |U_if|^2) / |U_if|^p",
        "status": order_status([r["peak_over_eq5"] for r in v_rows if r["N"] >= 16]),
        "summary": "same O(N^{p/2}) order; the distance ratio undercounts by a factor tending to pi/2",
        "rows": [{k: r[k] for k in ("N", "p", "peak_step", "eq5", "peak_over_eq5")} for r in v_rows],
    }
    return [eq2_claim, eq5_claim, eq7_claim]


def claim_rotation_expansion(n_range=range(2, 13), p: float = 0.5) -> dict:
    """Decompose V psi_i on (psi_i, psi_f') and compare with cos(alpha/2), |U_if|^p."""
    rows = []

    def decompose(spec, overlap=None):
        v = build_v(spec, overlap)
        f = v.frame
        out = v.block[:, 0]
        # out = a*(1, 0) + b*(c, s) in frame coordinates
        b = out[1] / f.sine
        a = out[0] - b * f.overlap_c
        return {"overlap_c": abs(f.overlap_c), "alpha": v.alpha,
                "dev_initial": abs(abs(a) - math.cos(v.alpha / 2)),
                "dev_target": abs(abs(b) - math.sin(v.alpha / 2)),
                "relative_phase": float(np.angle(b * np.conj(a)))}

    for n in n_range:
        rows.append({"N": 2 ** n, **decompose(SearchSpec.exhaustive(n, 0, p))})
    orth = decompose(SearchSpec(1, 1, Dense(np.eye(2)), None, p), 0.25)
    worst = max(max(r["dev_initial"], r["dev_target"]) for r in rows + [orth])
    phase_ok = all(abs(r["relative_phase"] + math.pi / 2) <= 1e-9 for r in rows + [orth])
    return {
        "id": "v_rotation_expansion",
        "claim": "V psi_i = cos(arcsin |U_if|^p) psi_i + |U_if|^p psi_f'",
        "status": "matches" if worst <= 1e-12 and phase_ok else "deviates",
        "summary": ("component magnitudes agree for every overlap, not only orthogonal states; "
                    "the psi_f' coefficient carries a relative phase of -i"),
        "max_magnitude_deviation": worst,
        "rows": rows,
    }


def _orientation_cases():
    z, o = StateVector.basis(1, 0), StateVector.basis(1, 1)
    yield "constant_rabi", constant_rabi(math.pi), z, o, 1.0
    n = 6
    ini, tgt = StateVector.uniform(n), StateVector.basis(n, 5)
    yield "farhi_gutmann", farhi_gutmann(1.0, ini, tgt), ini, tgt, 1.1 * math.pi / 2 * 2 ** (n / 2)
    for seed in (1, 2, 3):
        a, b = random_pair(seed, 2)
        yield f"random_smooth[{seed}]", random_smooth(seed, 2), a, b, 5.0


def claim_orientation(n_steps: int = 2048) -> dict:
    rows = []
    for name, h, psi0, tgt, t_end in _orientation_cases():
        tr = evolve(h, psi0, t_end, n_steps, tgt)
        good = envelope_report(tr, h)
        printed = envelope_report(tr, None, orientation="printed")
        rows.append({"preset": name,
                     "consistent_violations": len(good.violations),
                     "rate_violations": len(good.rate.violations),
                     "printed_violations": len(printed.violations)})
    consistent_ok = all(r["consistent_violations"] == 0 and r["rate_violations"] == 0 for r in rows)
    printed_fails = any(r["printed_violations"] > 0 for r in rows)
    if consistent_ok and printed_fails:
        status = "orientation-corrected"
    elif consistent_ok:
        status = "matches"
    else:
        status = "deviates"
    return {
        "id": "envelope_orientation",
        "claim": "|U_if(t)| <= cos(theta0/2 + A), |U_if(t)| >= cos(theta0/2 - A)",
        "status": status,
        "summary": PRINTED_ORIENTATION_NOTE,
        "rows": rows,
    }


def claim_slippage() -> dict:
    spec = SearchSpec.exhaustive(2, 0)
    tr = run_grover(spec, max_steps=6, stop_threshold=2.0)
    s = detect_slippage(tr)
    ov = float(tr.overlap_with_initial[3])
    return {
        "id": "slippage_n4",
        "claim": "Q^s psi_i returns to the initial ray",
        "status": "matches" if s == 3 and ov >= 1 - 1e-10 else "deviates",
        "summary": "N = 4 exhaustive search rotates by pi/3 per step and is back on the initial ray at step 3",
        "slippage_step": s,
        "overlap_at_3": ov,
    }


def run_suite() -> dict:
    claims = [claim_one_step_displacement()]
    claims.extend(claim_step_counts())
    claims.append(claim_rotation_expansion())
    claims.append(claim_orientation())
    claims.append(claim_slippage())
    return {
        "schema": "raysearch.adjudication/1",
        "claims": claims,
        "commentary": (
            "building V needs psi_f' itself, not only an oracle that marks the target, "
            "so its step counts are not query counts and do not compete with the "
            "sqrt(N) query lower bound"
        ),
    }


def to_markdown(report: dict) -> str:
    lines = ["# Adjudication report", ""]
    lines.append("| claim | status | summary |")
    lines.append("|---|---|---|")
    for c in report["claims"]:
        lines.append(f"| `{c['claim']}` | {c['status']} | {c['summary']} |")
    lines.append("")
    for c in report["claims"]:
        rows = c.get("rows")
        if not rows:
            continue
        lines.append(f"## {c['id']}")
        lines.append("")
        keys = list(rows[0])
        lines.append("| " + " | ".join(keys) + " |")
        lines.append("|" + "---|" * len(keys))
        for r in rows:
            lines.append("| " + " | ".join(_fmt(r[k]) for k in keys) + " |")
        lines.append("")
    lines.append(report["commentary"])
    lines.append("")
    return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)
