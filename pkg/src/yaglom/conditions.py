"""Executable checkers for the hypotheses behind the limit theorem.

Each condition gets a verdict (holds / fails / evidence-only) with at
least one numeric evidence item.  "holds" for the structural conditions
means a finite certificate; for the asymptotic ones it means the numeric
criterion passed within the configured budget, which the report states
explicitly rather than claiming a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .chain import NNKernel
from .evolve import evolve_trace
from .measures import MirrorHarmonic
from .spectral import e0_r_zeta, estimate_rho, green_partial
from .transforms import closed_form_hhat, estimate_hhat

__all__ = ["ConditionVerdict", "ConditionReport", "check_conditions", "DEFAULT_BUDGETS"]

DEFAULT_BUDGETS = {
    "n_max": 2500,
    "green_N": 2000,
    "probe_sites": (-20, 0, 20),
    "hhat_sites": (-3, -2, -1, 1, 2, 3),
    "hhat_tol": 1e-2,
}


@dataclass
class ConditionVerdict:
    status: str  # "holds" | "fails" | "evidence-only"
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in ("holds", "fails", "evidence-only"):
            raise ValueError(f"bad status {self.status}")
        if not self.evidence:
            raise ValueError("every verdict needs evidence")


@dataclass
class ConditionReport:
    verdicts: dict[str, ConditionVerdict]

    def status(self, key: str) -> str:
        return self.verdicts[key].status

    def holds(self, key: str) -> bool:
        return self.verdicts[key].status == "holds"

    def as_dict(self) -> dict:
        return {
            key: {"status": v.status, "evidence": v.evidence}
            for key, v in sorted(self.verdicts.items())
        }


def _min_stay(kernel: NNKernel) -> float:
    vals = [reg.r for reg in kernel.regions]
    vals += [r for _, _, r, _ in kernel.overrides]
    return min(vals)


def check_conditions(
    kernel: NNKernel, hints: dict | None = None, budgets: dict | None = None
) -> ConditionReport:
    """Run all checkers and assemble the structured report.

    ``hints`` may carry closed-form scenario data ("two_sided" or
    "mirror" parameter objects, "kill_site"); without them the
    comparison-based checks degrade to evidence-only rather than fail.
    """
    hints = hints or {}
    b = {**DEFAULT_BUDGETS, **(budgets or {})}
    out: dict[str, ConditionVerdict] = {}

    # --- structure: killing support, stay rates -------------------------
    kills = kernel.kill_sites()
    if kills is None:
        out["6"] = ConditionVerdict(
            "fails", {"kill_support": "unbounded", "n_kill_sites": math.inf}
        )
    elif len(kills) == 1:
        out["6"] = ConditionVerdict(
            "holds",
            {"kill_site": kills[0], "kappa": kernel.kill(kills[0]), "n_kill_sites": 1},
        )
    else:
        out["6"] = ConditionVerdict(
            "fails", {"n_kill_sites": len(kills), "kill_sites": kills[:16]}
        )

    min_stay = _min_stay(kernel)
    if min_stay > 0.0:
        out["1"] = ConditionVerdict("holds", {"k0": 1, "delta": min_stay})
    elif min_stay == 0.0 and all(reg.r == 0.0 for reg in kernel.regions):
        out["1"] = ConditionVerdict(
            "fails", {"delta": 0.0, "note": "period 2: odd-step returns vanish"}
        )
    else:
        out["1"] = ConditionVerdict(
            "evidence-only",
            {"delta": 0.0, "note": "zero stay at some sites; gcd criterion not checked"},
        )
    uniformly_aperiodic = out["1"].status == "holds"

    out["4"] = ConditionVerdict(
        "holds",
        {"structural": 1.0, "note": "nearest neighbour: boundary is {-inf, +inf}"},
    )

    if kills is None:
        out["3"] = ConditionVerdict(
            "fails", {"note": "killing off every site bounds P_z(zeta > m) below 1"}
        )
    else:
        dist_bound = max(abs(s) for s in kills) if kills else 0
        out["3"] = ConditionVerdict(
            "holds",
            {
                "structural": 1.0,
                "max_kill_distance": dist_bound,
                "note": "P_z(zeta <= m) = 0 once dist(z, kill set) > m",
            },
        )

    # --- spectral: rho, R, E_z R^zeta ------------------------------------
    n_max = int(b["n_max"])
    trace = evolve_trace(kernel, 0, n_max)
    est = estimate_rho(trace)
    ev2: dict = {"rho_hat": est.rho_hat, "rho_error_bound": est.error_bound}
    if "two_sided" in hints:
        # closed forms for the base (unlazified) walk, as side evidence
        ev2["base_R_closed_form"] = hints["two_sided"].R
        ev2["base_E0_R_zeta_closed_form"] = e0_r_zeta(hints["two_sided"])
    elif "mirror" in hints:
        ev2["base_R_closed_form"] = hints["mirror"].R
    R = 1.0 / est.rho_hat if est.converged else math.nan
    ev2["R"] = R
    if not est.converged:
        out["2"] = ConditionVerdict("evidence-only", ev2)
    elif not R > 1.0:
        out["2"] = ConditionVerdict("fails", ev2)
    else:
        # Finiteness of E_z R^zeta at probe starts via the potential
        # identity E_z R^zeta = 1 + (R - 1) G_{z,S}(R).  The potential is
        # summed just inside the estimated radius so the fit stays safe
        # against the rho_hat error.
        w = R * (1.0 - 2.0 * est.error_bound - 1e-6)
        status2 = "holds"
        for z in b["probe_sites"]:
            try:
                g = green_partial(kernel, int(z), "S", w, int(b["green_N"]))
            except ValueError:
                # the potential diverges at the survival radius: the
                # survival and pointwise decay rates disagree, so
                # E_z R^zeta is infinite
                ev2[f"E_R_zeta_at_{z}"] = math.inf
                status2 = "fails"
                continue
            val = 1.0 + (R - 1.0) * g.total
            ev2[f"E_R_zeta_at_{z}"] = val
            ev2[f"green_tail_at_{z}"] = g.tail_estimate
            if not math.isfinite(val) or g.tail_estimate > g.value:
                status2 = "evidence-only" if status2 == "holds" else status2
        out["2"] = ConditionVerdict(status2, ev2)

    # --- Jacka-Roberts via the one-point ratio ---------------------------
    est8 = None
    if out["6"].status == "holds" and uniformly_aperiodic:
        x0 = int(out["6"].evidence["kill_site"])
        sites = tuple(x0 + s for s in b["hhat_sites"])
        probe = tuple(dict.fromkeys(sites + (x0 - 1, x0 + 1)))
        est8 = estimate_hhat(kernel, x0, probe, n_max)
        ev5 = {f"ratio_at_{x}": est8.table[x] for x in (x0 - 1, x0 + 1)}
        ev5.update({f"spread_at_{x}": est8.spreads[x] for x in (x0 - 1, x0 + 1)})
        # Converging on either side suffices for the full condition.
        if est8.converged[x0 - 1] or est8.converged[x0 + 1]:
            out["5"] = ConditionVerdict("holds", ev5)
        else:
            out["5"] = ConditionVerdict("fails", ev5)
    else:
        out["5"] = ConditionVerdict(
            "evidence-only",
            {"note": "needs a single killing site and uniform aperiodicity"},
        )

    stay_floor = _min_stay(kernel)
    out["7"] = ConditionVerdict(
        "holds" if stay_floor >= 0.5 else "fails", {"min_stay": stay_floor}
    )

    # --- dominant boundary point: hhat against the +inf extremal ---------
    if out["5"].status == "holds" and ("two_sided" in hints or "mirror" in hints):
        x0 = int(out["6"].evidence["kill_site"])
        sites = tuple(x0 + s for s in b["hhat_sites"])
        if "two_sided" in hints:
            target = {x: float(closed_form_hhat(hints["two_sided"], x)) for x in sites}
        else:
            # the +inf extremal of the mirror chain, which hhat only
            # matches when one boundary point dominates
            h_plus = MirrorHarmonic(hints["mirror"], +1)
            target = {x: float(h_plus.value(x)) for x in sites}
        rel = {
            x: abs(est8.table[x] - target[x]) / target[x] for x in sites
        }
        worst = max(rel.values())
        ev8 = {"max_rel_mismatch": worst}
        ev8.update({f"hhat_at_{x}": est8.table[x] for x in sites})
        out["8"] = ConditionVerdict(
            "holds" if worst <= float(b["hhat_tol"]) else "fails", ev8
        )
    elif out["5"].status == "holds":
        out["8"] = ConditionVerdict(
            "evidence-only", {"note": "no closed-form extremal to compare against"}
        )
    else:
        out["8"] = ConditionVerdict("fails", {"note": "Condition [5] did not hold"})

    return ConditionReport(out)
