"""
Verification batteries: seeded fixture families and the numerical identity
checks run against them.  Shared by the command line and the test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .charfn import coeff, degree, eval_at, gleason_regular, taylor
from .decomp import canonical, phi
from .examples import (
    gen_block_composite,
    gen_nilpotent_poly,
    gen_random_commuting,
    gen_section7,
    gen_spherical_coiso,
    jordan_1d,
)
from .factor import factorize3, julia_halmos
from .fock import abelianized_coeffs, nc_charfn
from .opcore import adjoint, opnorm, random_contraction, random_unitary
from .tuples import OperatorTuple, classify, multi_indices, shift


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{flag}  {self.name}: {self.value:.3e} (tol {self.tol:.1e}){extra}"


def check_le(name, value, tol, detail="") -> Check:
    return Check(name, float(value), tol, bool(value < tol), detail)


def check_true(name, ok, detail="") -> Check:
    return Check(name, 0.0 if ok else 1.0, 0.5, bool(ok), detail)


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def worst(self) -> dict:
        """Largest value and tolerance per check name prefix."""
        out = {}
        for c in self.checks:
            key = c.name.split("[")[0]
            prev = out.get(key)
            # lower-bound checks are worst at their smallest value
            lower = "must exceed" in c.detail
            if prev is None or (c.value < prev["value"] if lower else c.value > prev["value"]):
                out[key] = {"value": c.value, "tol": c.tol}
        for key in out:
            out[key]["failures"] = sum(
                1 for c in self.checks if c.name.split("[")[0] == key and not c.passed
            )
        return out


# ---------------------------------------------------------------- fixture families

def _rotated(t: OperatorTuple, rng) -> OperatorTuple:
    return t.conjugate(random_unitary(t.dim, rng))


def lemma_fixtures(seed: int = 0, count: int = 100) -> list:
    """Seeded commuting fixtures with determinate degree, n in {2, 3}, d <= 8.

    Cycles through polynomial nilpotents, spherical coisometries and two-block
    composites, each conjugated by a random unitary.
    """
    rng = np.random.default_rng(seed)
    out = []
    k = 0
    while len(out) < count:
        n = 2 + (k % 2)
        kind = k % 5
        s = int(rng.integers(2**31))
        if kind == 0:
            m = int(rng.integers(1, 4 if n == 2 else 3))
            t, name = gen_nilpotent_poly(n, m), f"nilpotent_poly(n={n},m={m})"
        elif kind == 1:
            d = int(rng.integers(1, 9))
            t, name = gen_spherical_coiso(n, d, s), f"spherical_coiso(n={n},d={d})"
        elif kind == 2:
            d = int(rng.integers(2, 6))
            t = gen_random_commuting(n, d, s, nilpotent=True)
            name = f"random_nilpotent(n={n},d={d})"
        elif kind == 3:
            top = ("nilpotent_poly", {"m": 2}) if n == 2 else ("nilpotent_poly", {"m": 1})
            bot = ("spherical_coiso", {"d": int(rng.integers(1, 4))})
            t, _ = gen_block_composite(n, [top, bot], seed=s, commuting=True)
            name = f"composite(nilpotent over coiso, n={n})"
        else:
            top = ("zero", {"d": 1})
            bot = ("random_commuting", {"d": int(rng.integers(2, 5)), "nilpotent": True})
            t, _ = gen_block_composite(n, [top, bot], seed=s, commuting=True)
            name = f"composite(zero over nilpotent, n={n})"
        k += 1
        if t.dim > 8:
            continue
        out.append((f"{name}#{len(out)}", _rotated(t, rng)))
    return out


def bridge_fixtures(seed: int = 0, count: int = 20) -> list:
    """Commuting fixtures with d <= 5 for the Fock/Drury-Arveson bridge."""
    rng = np.random.default_rng(seed + 1)
    out = []
    for k in range(count):
        n = 2 + (k % 2)
        d = int(rng.integers(2, 6))
        s = int(rng.integers(2**31))
        nil = k % 3 == 2
        t = gen_random_commuting(n, d, s, nilpotent=nil)
        out.append((f"random_commuting(n={n},d={d},nilpotent={nil})#{k}", t))
    return out


def three_block_fixtures(seed: int = 0, count: int = 20) -> list:
    """Three-block upper-triangular row contractions with nonzero corners.

    Even entries are noncommuting (S random, N polynomial nilpotent, C a
    spherical coisometry); odd entries are commuting with corners solved
    from the commutation equations.
    """
    rng = np.random.default_rng(seed + 2)
    out = []
    k = 0
    while len(out) < count:
        s = int(rng.integers(2**31))
        if k % 2 == 0:
            blocks = [("random_noncommuting", {"d": int(rng.integers(1, 3))}),
                      ("nilpotent_poly", {"m": 2}),
                      ("spherical_coiso", {"d": int(rng.integers(1, 3))})]
            t, info = gen_block_composite(2, blocks, seed=s, commuting=False)
        else:
            blocks = [("zero", {"d": 1}),
                      ("random_commuting", {"d": 2, "nilpotent": True}),
                      ("random_commuting", {"d": int(rng.integers(1, 3))})]
            t, info = gen_block_composite(2, blocks, seed=s, commuting=True)
        k += 1
        sizes = info["sizes"]
        split = (sizes[0], sizes[0] + sizes[1])
        out.append((f"three_block({'/'.join(info['kinds'])})#{len(out)}", t, split))
    return out


def invariance_fixtures() -> list:
    return [
        ("nilpotent_poly(2,2)", gen_nilpotent_poly(2, 2)),
        ("spherical_coiso(2,3)", gen_spherical_coiso(2, 3, 7)),
        ("section7(D=4)", gen_section7(4)),
        ("jordan(3)", jordan_1d(3)),
        ("composite(nilpotent over coiso)",
         gen_block_composite(2, [("nilpotent_poly", {"m": 2}), ("spherical_coiso", {"d": 2})],
                             seed=3, commuting=True)[0]),
    ]


# ---------------------------------------------------------------- checks

def lemma_residuals(t: OperatorTuple, m: int, extra: int = 3):
    """Worst adjoint-recursion and orthogonality residuals for m+1 <= |a| <= m+extra.

    recursion:     T_i* T^a D_{T*} = (a_i / |a|) T^{a - e_i} D_{T*}.
    orthogonality: T^a D_{T*} and T^b D_{T*} have orthogonal ranges, a != b,
    |a|, |b| >= m.
    """
    n = t.n
    dts = t.defects.D_Tstar
    blocks = {}
    for k in range(m, m + extra + 1):
        for a in multi_indices(n, k):
            blocks[a] = t.power(a) @ dts
    rec = 0.0
    for a, ta in blocks.items():
        k = sum(a)
        if k < m + 1:
            continue
        for i in range(n):
            rhs = (a[i] / k) * blocks[shift(a, i, -1)] if a[i] else 0.0
            rec = max(rec, opnorm(adjoint(t[i]) @ ta - rhs))
    orth = 0.0
    keys = list(blocks)
    for x in range(len(keys)):
        for y in range(x + 1, len(keys)):
            orth = max(orth, opnorm(adjoint(blocks[keys[x]]) @ blocks[keys[y]]))
    return rec, orth


def suite_lemmas(seed: int = 0, count: int = 100, fixtures=None) -> SuiteReport:
    rep = SuiteReport("lemmas")
    t0 = time.perf_counter()
    fixtures = fixtures if fixtures is not None else lemma_fixtures(seed, count)
    for name, t in fixtures:
        dr = degree(t)
        if dr.exceeds_horizon:
            rep.checks.append(check_true(f"degree_determinate[{name}]", False))
            continue
        m = dr.degree
        rec, orth = lemma_residuals(t, m)
        rep.checks.append(check_le(f"adjoint_recursion[{name}]", rec, 1e-9))
        rep.checks.append(check_le(f"range_orthogonality[{name}]", orth, 1e-9))
        dec = canonical(t, m=m)
        r = dec.residuals
        rep.checks.append(check_le(f"orthogonal_sum[{name}]", r["orthogonal_sum"], 1e-10))
        rep.checks.append(check_le(f"partial_isometry[{name}]", r["partial_isometry"], 1e-10))
        rep.checks.append(check_le(f"nil_order[{name}]", r["nil_order"], 1e-9,
                                   f"m={m}, dim H_nil={dec.H_nil.dim}"))
        rep.checks.append(check_le(f"coisometry[{name}]", r["coisometry"], 1e-10))
        rep.checks.append(check_le(f"upper_triangular[{name}]", r["upper_triangular"], 1e-9))
    rep.seconds = time.perf_counter() - t0
    return rep


def suite_factorizations(seed: int = 0, count: int = 20, K: int = 4,
                         jh_draws: int = 1000, fixtures=None) -> SuiteReport:
    rep = SuiteReport("factorizations")
    t0 = time.perf_counter()
    fixtures = fixtures if fixtures is not None else three_block_fixtures(seed, count)
    for name, t, split in fixtures:
        cert = factorize3(t, split, K)
        rep.checks.append(check_le(f"coincidence[{name}]", cert.residual, 1e-8))
        rep.checks.append(check_le(f"connector_unitarity[{name}]",
                                   cert.max_connector_residual(), 1e-10))
        if "symmetric_residual" in cert.extra:
            rep.checks.append(check_le(f"symmetric_coincidence[{name}]",
                                       cert.extra["symmetric_residual"], 1e-8))
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for _ in range(jh_draws):
        rows, cols = (int(x) for x in rng.integers(1, 7, size=2))
        lam = random_contraction(rows, cols, float(rng.uniform(0, 1)), rng)
        j = julia_halmos(lam)
        worst = max(worst, opnorm(adjoint(j) @ j - np.eye(j.shape[1])),
                    opnorm(j @ adjoint(j) - np.eye(j.shape[0])))
    rep.checks.append(check_le(f"julia_halmos_unitarity[{jh_draws} draws]", worst, 1e-12))
    rep.seconds = time.perf_counter() - t0
    return rep


def suite_bridge(seed: int = 0, count: int = 20, K: int = 4, fixtures=None) -> SuiteReport:
    rep = SuiteReport("bridge")
    t0 = time.perf_counter()
    fixtures = fixtures if fixtures is not None else bridge_fixtures(seed, count)
    for name, t in fixtures:
        t.require_commuting()
        ab = abelianized_coeffs(nc_charfn(t, K))
        worst = max(opnorm(c - coeff(t, a)) for a, c in ab.items() if sum(a) <= K - 1)
        rep.checks.append(check_le(f"abelianization[{name}]", worst, 1e-9))
    rep.seconds = time.perf_counter() - t0
    return rep


def suite_eval(seed: int = 0, count: int = 20, points: int = 20, K: int = 30,
               radius: float = 0.5, fixtures=None) -> SuiteReport:
    rep = SuiteReport("eval")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 4)
    fixtures = fixtures if fixtures is not None else bridge_fixtures(seed, count)
    for name, t in fixtures:
        table = taylor(t, K)
        worst = 0.0
        for _ in range(points):
            v = rng.standard_normal(t.n) + 1j * rng.standard_normal(t.n)
            v *= radius * rng.uniform(0, 1) ** (1 / (2 * t.n)) / np.linalg.norm(v)
            worst = max(worst, opnorm(eval_at(t, v) - table.partial_sum(v)))
        rep.checks.append(check_le(f"eval_vs_taylor[{name}]", worst, 1e-8))
    rep.seconds = time.perf_counter() - t0
    return rep


def suite_section7(D: int = 8, horizon: int = 6) -> SuiteReport:
    rep = SuiteReport("section7")
    t0 = time.perf_counter()
    t = gen_section7(D)
    dts = t.defects.D_Tstar
    p = np.zeros((t.dim, t.dim))
    p[:3, :3] = np.eye(3)
    rep.checks.append(check_le("defect_equals_P_H2", opnorm(dts @ dts - p), 1e-12))
    c = classify(t)
    rep.checks.append(check_true("pure", c.pure, f"spectral radius {c.spectral_radius:.2e}"))
    rep.checks.append(check_true("row_partial_isometry", c.row_partial_isometry,
                                 f"residual {c.partial_isometry_residual:.2e}"))
    for k in range(1, 6):
        nrm = opnorm(coeff(t, (k, 0)))
        rep.checks.append(Check(f"coefficient_nonzero[({k},0)]", nrm, 1e-6, nrm > 1e-6,
                                "value must exceed tol"))
    dr = degree(t, horizon)
    rep.checks.append(check_true(f"degree_exceeds_horizon[{horizon}]", dr.exceeds_horizon,
                                 dr.describe()))
    g = gleason_regular(t)
    rep.checks.append(check_true("not_regular", not g.sampled_regular,
                                 f"ranks {[r['rank'] for r in g.rank_profile]}, r0={g.r0}"))
    rep.seconds = time.perf_counter() - t0
    return rep


def suite_jordan() -> SuiteReport:
    rep = SuiteReport("jordan")
    for m in (1, 2, 3):
        dr = degree(jordan_1d(m))
        rep.checks.append(check_true(f"degree[J_{m}]", dr.degree == m and not dr.exceeds_horizon,
                                     f"got {dr.describe()}"))
    t = OperatorTuple((np.zeros((1, 1)),))
    worst = 0.0
    for z in np.linspace(-0.9, 0.9, 7) + 0.1j:
        worst = max(worst, abs(eval_at(t, [z])[0, 0] - z))
    worst = max(worst, abs(coeff(t, (1,))[0, 0] - 1), abs(coeff(t, (0,))[0, 0]),
                max(abs(coeff(t, (k,))[0, 0]) for k in range(2, 6)))
    rep.checks.append(check_le("theta_is_z[T=0]", worst, 1e-14))
    return rep


def invariants(t: OperatorTuple) -> tuple:
    dr = degree(t)
    ph = phi(t, strict=False, report=dr)
    fl = classify(t).flags()
    return (ph.as_tuple(), dr.describe(), tuple(sorted(fl.items())))


def suite_invariance(seed: int = 0, draws: int = 50, fixtures=None) -> SuiteReport:
    rep = SuiteReport("invariance")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed + 5)
    fixtures = fixtures if fixtures is not None else invariance_fixtures()
    for name, t in fixtures:
        ref = invariants(t)
        bad = 0
        first = ""
        for _ in range(draws):
            got = invariants(t.conjugate(random_unitary(t.dim, rng)))
            if got != ref:
                bad += 1
                first = first or f"expected {ref}, got {got}"
        rep.checks.append(Check(f"unitary_invariance[{name}]", float(bad), 0.5, bad == 0,
                                first or f"{draws} conjugations, invariants {ref[0]}"))
    rep.seconds = time.perf_counter() - t0
    return rep


SUITES = {
    "lemmas": suite_lemmas,
    "factorizations": suite_factorizations,
    "bridge": suite_bridge,
}


def run_suite(name: str, seed: int = 0, count: int | None = None) -> list:
    """Run one named suite (or ``all``) and return a list of SuiteReports."""
    kw = {} if count is None else {"count": count}
    if name == "all":
        return [
            suite_lemmas(seed, **kw),
            suite_factorizations(seed, **({"count": min(count, 20)} if count else {})),
            suite_bridge(seed, **kw),
            suite_eval(seed, **kw),
            suite_section7(),
            suite_jordan(),
            suite_invariance(seed),
        ]
    return [SUITES[name](seed, **kw)]


def run_on_tuple(t: OperatorTuple, name: str = "fixture") -> list:
    """All suites that apply to a single supplied tuple."""
    reports = []
    comm = t.diagnostics.commuting
    rep = SuiteReport("fixture")
    rep.checks.append(check_true(f"row_contraction[{name}]", t.diagnostics.row_contraction,
                                 f"residual {t.diagnostics.row_contraction_residual:.2e}"))
    rep.checks.append(check_true(f"commuting[{name}]", comm,
                                 f"residual {t.diagnostics.commutation_residual:.2e}"))
    reports.append(rep)
    if not (comm and t.diagnostics.row_contraction):
        return reports
    dr = degree(t)
    if not dr.exceeds_horizon:
        reports.append(suite_lemmas(fixtures=[(name, t)]))
    if t.dim <= 6:
        reports.append(suite_bridge(fixtures=[(name, t)]))
    reports.append(suite_eval(fixtures=[(name, t)]))
    return reports
