"""Three-valued GFBST decisions and the logical-property verification harness.

Decisions are encoded as {0 reject, 1/2 agnostic, 1 accept}.  The harness
runs on an exact finite grid model where e-values are computed by sorting
cells, so every logical condition can be checked without Monte-Carlo error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

REJECT, AGNOSTIC, ACCEPT = 0.0, 0.5, 1.0

CONDITIONS = ("I.i", "I.ii", "I.iii", "M.i", "M.ii", "C.i", "C.ii", "compatibility")


class InconsistentEvidenceError(ValueError):
    """Both ev(H) and ev(complement) fell below the threshold."""


@dataclass(frozen=True)
class Decision:
    value: float  # 0, 0.5, or 1
    threshold: float
    ev_h: float
    ev_hbar: float

    @property
    def accepted(self) -> bool:
        return self.value == ACCEPT

    @property
    def rejected(self) -> bool:
        return self.value == REJECT

    @property
    def agnostic(self) -> bool:
        return self.value == AGNOSTIC


def gfbst_decide(ev_h: float, ev_hbar: float, c: float) -> Decision:
    """Reject if ev(H) < c; accept if ev(complement) < c; else agnostic.

    A boundary value ev(H) == c counts as agnostic (strict inequality).
    """
    if not 0.0 < c < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    below_h = ev_h < c
    below_hbar = ev_hbar < c
    if below_h and below_hbar:
        raise InconsistentEvidenceError("both e-values below the threshold")
    if below_h:
        value = REJECT
    elif below_hbar:
        value = ACCEPT
    else:
        value = AGNOSTIC
    return Decision(value, c, ev_h, ev_hbar)


def region_estimator_decide(S, H) -> Decision:
    """Accept if S inside H, reject if S inside the complement, else agnostic."""
    S = np.asarray(S, dtype=bool)
    H = np.asarray(H, dtype=bool)
    if not S.any():
        raise ValueError("region estimator must be non-empty")
    if np.all(H[S]):
        value = ACCEPT
    elif not np.any(H[S]):
        value = REJECT
    else:
        value = AGNOSTIC
    return Decision(value, float("nan"), float("nan"), float("nan"))


def modal_table(decision: Decision) -> dict:
    """The six modal operators for a decision, with Table-1 equivalences."""
    box = decision.accepted
    not_diamond = decision.rejected
    nabla = decision.agnostic
    record = {
        "necessity": box,
        "impossibility": not_diamond,
        "contingency": nabla,
        "possibility": box or nabla,
        "non_necessity": not_diamond or nabla,
        "non_contingency": box or not_diamond,
    }
    # internal consistency of the modal encodings
    assert record["possibility"] == (not record["impossibility"])
    assert record["non_necessity"] == (not record["necessity"])
    assert record["non_contingency"] == (not record["contingency"])
    assert record["necessity"] == (record["non_contingency"] and record["possibility"])
    assert record["impossibility"] == (record["non_contingency"] and record["non_necessity"])
    assert record["contingency"] == (record["possibility"] and record["non_necessity"])
    return record


@dataclass(frozen=True)
class GridModel:
    """Exact finite testbed: 2-D grid of posterior masses and surprise values."""

    masses: np.ndarray
    surprise: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float)
        surprise = np.asarray(self.surprise, dtype=float)
        object.__setattr__(self, "masses", masses / masses.sum())
        object.__setattr__(self, "surprise", surprise)
        if masses.shape != surprise.shape or masses.ndim != 2:
            raise ValueError("masses and surprise must be matching 2-D arrays")
        if np.any(masses < 0):
            raise ValueError("cell masses must be non-negative")

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "GridModel":
        masses = rng.random((n, n)) + 1e-6
        # flat reference: surprise equals the posterior cell mass
        g = cls(masses, masses / masses.sum())
        return g

    @property
    def cells(self) -> int:
        return self.masses.size

    def evalue(self, mask: np.ndarray) -> float:
        """Exact e-value of a cell-subset hypothesis (closed lower cut)."""
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return 0.0
        s_star = self.surprise[mask].max()
        return float(self.masses[self.surprise <= s_star].sum())

    def decide(self, mask: np.ndarray, c: float, rule: str = "gfbst") -> Decision:
        ev_h = self.evalue(mask)
        ev_hbar = self.evalue(~mask)
        if rule == "gfbst":
            return gfbst_decide(ev_h, ev_hbar, c)
        if rule == "broken-negative-control":
            # deliberately ignores ev(complement): not a region-estimator test
            if ev_h < c:
                value = REJECT
            elif ev_h > 1.0 - c:
                value = ACCEPT
            else:
                value = AGNOSTIC
            return Decision(value, c, ev_h, ev_hbar)
        raise ValueError(f"unknown decision rule {rule!r}")

    def upper_cut(self, level: float) -> np.ndarray:
        """Tangential-set style region estimator: cells with surprise > level."""
        return self.surprise > level


def _random_mask(grid: GridModel, rng: np.random.Generator) -> np.ndarray:
    """Proper non-empty subset with size log-uniform in [1, cells - 1]."""
    n = grid.cells
    size = int(np.exp(rng.uniform(0.0, np.log(n - 1))))
    size = min(max(size, 1), n - 1)
    kind = rng.integers(0, 3)
    flat_order = np.argsort(grid.surprise, axis=None)
    if kind == 0:
        idx = rng.choice(n, size=size, replace=False)
    elif kind == 1:  # low-surprise cells: rejectable hypotheses
        idx = flat_order[:size]
    else:  # high-surprise cells: complements become rejectable
        idx = flat_order[-size:]
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask.reshape(grid.masses.shape)


def check_logical_properties(
    grid: GridModel,
    trials: int,
    c: float = 0.05,
    seed: int = 0,
    rule: str = "gfbst",
) -> dict:
    """Count violations of the invertibility, monotonicity, consonance,
    and significance-compatibility conditions over random hypothesis families.

    Compatibility is checked in its strict form, ev(H1) > ev(H2) implies
    decision(H1) >= decision(H2); ties at ev = 1 are uninformative for
    region-estimator tests.
    """
    rng = np.random.default_rng(seed)
    counts = {name: 0 for name in CONDITIONS}
    witnesses: dict = {}

    def note(name, payload):
        counts[name] += 1
        witnesses.setdefault(name, payload)

    for trial in range(trials):
        a = _random_mask(grid, rng)
        b = _random_mask(grid, rng)
        extra = _random_mask(grid, rng)
        h_prime = a | extra
        union = a | b
        inter = a & b
        family = {"A": a, "B": b, "A'": h_prime, "A|B": union, "A&B": inter}

        decisions = {}
        evs = {}
        for name, mask in family.items():
            evs[name] = grid.evalue(mask)
            decisions[name] = grid.decide(mask, c, rule).value
            comp_name = f"~{name}"
            evs[comp_name] = grid.evalue(~mask)
            decisions[comp_name] = grid.decide(~mask, c, rule).value

        for name in family:
            dh, dc = decisions[name], decisions[f"~{name}"]
            if (dh == ACCEPT) != (dc == REJECT):
                note("I.i", {"trial": trial, "hypothesis": name})
            if (dh != REJECT) != (dc != ACCEPT):
                note("I.ii", {"trial": trial, "hypothesis": name})
            if (dh == AGNOSTIC) != (dc == AGNOSTIC):
                note("I.iii", {"trial": trial, "hypothesis": name})

        if decisions["A"] == ACCEPT and decisions["A'"] != ACCEPT:
            note("M.i", {"trial": trial})
        if decisions["A"] != REJECT and decisions["A'"] == REJECT:
            note("M.ii", {"trial": trial})

        if decisions["A|B"] != REJECT and (
            decisions["A"] == REJECT and decisions["B"] == REJECT
        ):
            note("C.i", {"trial": trial})
        if decisions["A"] == ACCEPT and decisions["B"] == ACCEPT and (
            decisions["A&B"] != ACCEPT
        ):
            note("C.ii", {"trial": trial})

        names = list(decisions)
        for i, n1 in enumerate(names):
            for n2 in names:
                if n1 == n2:
                    continue
                if evs[n1] > evs[n2] and decisions[n1] < decisions[n2]:
                    note("compatibility", {"trial": trial, "pair": (n1, n2)})

    total = sum(counts.values())
    return {
        "rule": rule,
        "threshold": c,
        "trials": trials,
        "seed": seed,
        "counts": counts,
        "total_violations": total,
        "witnesses": witnesses,
    }
