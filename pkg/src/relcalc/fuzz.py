"""Randomized identity checking.

Each suite draws inputs from a per-trial generator seeded by
``(seed, suite, dims, trial)``, so any single trial can be replayed on its
own and the report does not depend on evaluation order.  The first failing
trial is shrunk and emitted as a ready-to-run scenario.
"""

from dataclasses import dataclass, field
import json
import multiprocessing
import re

import numpy as np

from . import properties as P
from .domination import dominates, theorem_bridge_check
from .limits import (
    LimitReport,
    monotone_psd_limit,
    nondecreasing_operator_limit,
    nonincreasing_relation_check,
    relation_sequence_pipeline,
)
from .linalg import DEFAULT_TOL, Subspace, Tol, complement, orthonormalize
from .relation import (
    LinearRelation,
    OperatorRelation,
    PsdRelation,
    _graph_from_parts,
    compose_matrix,
    relation_from_graph,
)
from .scenario import relation_object
from .sequences import Scaled

SUITES = ("relation", "domination", "limits", "appendix")
MAX_LISTED_FAILURES = 20


def parse_dims(text: str) -> tuple:
    """``"2..5"`` -> ``(2, 5)``."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not m:
        raise ValueError(f"dimension range must look like A..B, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if a < 1 or b < a:
        raise ValueError(f"bad dimension range {a}..{b}")
    return a, b


def trial_rng(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng([int(seed)] + [int(k) for k in key])


# --- generators ------------------------------------------------------------------

def random_relation(rng, h: int, k: int, tol: Tol = DEFAULT_TOL) -> LinearRelation:
    """Graph dimension uniform on ``0..h+k``, standard normal generators."""
    r = int(rng.integers(0, h + k + 1))
    return relation_from_graph(h, k, rng.standard_normal((h + k, r)), tol)


def random_contraction(rng, rows: int, cols: int) -> np.ndarray:
    c = rng.standard_normal((rows, cols))
    norm = np.linalg.norm(c, 2) if c.size else 0.0
    if norm == 0.0:
        return c
    return c * (rng.uniform(0.1, 1.0) / norm)


def dominated_pair(rng, n: int, m: int, tol: Tol = DEFAULT_TOL):
    """``(A, B, C)`` with ``C B ⊂ A`` by construction; ``A`` may carry extra graph vectors."""
    b = random_relation(rng, n, m, tol)
    c = random_contraction(rng, m, m)
    core = compose_matrix(c, b, tol)
    extra = int(rng.integers(0, 3))
    if extra:
        gens = np.hstack([core.graph.basis, rng.standard_normal((n + m, extra))])
        a = relation_from_graph(n, m, gens, tol)
    else:
        a = core
    return a, b, c


def random_psd_matrix(rng, n: int, rank: int, lo: float = 0.2, hi: float = 5.0) -> np.ndarray:
    """PSD ``n x n`` of the given rank with nonzero eigenvalues in ``[lo, hi]``."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.zeros(n)
    w[:rank] = rng.uniform(lo, hi, rank)
    return (q * w) @ q.T


def random_psd_relation(rng, n: int, mul_dim: int, tol: Tol = DEFAULT_TOL) -> PsdRelation:
    """Nonnegative selfadjoint relation with a ``mul_dim``-dimensional multivalued part."""
    mul = orthonormalize(rng.standard_normal((n, mul_dim)), tol) if mul_dim else Subspace.zero(n)
    dom = complement(mul, tol)
    rank = int(rng.integers(0, dom.dim + 1))
    b = dom.basis
    inner = random_psd_matrix(rng, dom.dim, rank) if dom.dim else np.zeros((0, 0))
    return PsdRelation(dom, b @ inner @ b.T, tol)


def random_operator(rng, n: int, m: int, rank: int, tol: Tol = DEFAULT_TOL) -> OperatorRelation:
    """Everywhere-defined operator of the given rank, singular values in ``[0.5, 3]``."""
    u, _ = np.linalg.qr(rng.standard_normal((m, m)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = rng.uniform(0.5, 3.0, rank)
    return OperatorRelation(Subspace.full(n), (u[:, :rank] * s) @ v[:, :rank].T, tol)


def conditioned_relation(rng, n: int, m: int, tol: Tol = DEFAULT_TOL) -> LinearRelation:
    """Relation with random ``dom``, ``mul`` and a moderately conditioned regular part."""
    d = int(rng.integers(1, n + 1))
    dom = orthonormalize(rng.standard_normal((n, d)), tol)
    mul_dim = int(rng.integers(0, m))
    mul = orthonormalize(rng.standard_normal((m, mul_dim)), tol) if mul_dim else Subspace.zero(m)
    act = random_operator(rng, n, m, int(rng.integers(0, min(n, m) + 1)), tol).action
    act = act - mul.basis @ (mul.basis.T @ act)
    return LinearRelation(n, m, _graph_from_parts(dom, act @ dom.projector, mul, tol), tol)


# --- the report -------------------------------------------------------------------

@dataclass
class FuzzReport:
    suite: str
    dims: tuple
    trials: int
    seed: int
    cases: int = 0
    checks: int = 0
    max_residual: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    failure_count: int = 0
    counterexample: dict = None

    @property
    def verdict(self) -> str:
        return "pass" if self.failure_count == 0 else "fail"

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == "pass" else 1

    def record(self, name: str, residual: float, threshold: float, where: dict, bundle=None):
        self.checks += 1
        residual = float(residual)
        prev = self.max_residual.get(name, 0.0)
        self.max_residual[name] = max(prev, residual) if np.isfinite(residual) else float("inf")
        if residual < threshold:
            return True
        self.failure_count += 1
        if len(self.failures) < MAX_LISTED_FAILURES:
            self.failures.append(dict(where, check=name, residual=residual, threshold=threshold))
        if self.counterexample is None and bundle is not None:
            self.counterexample = bundle()
        return False

    def to_json(self) -> dict:
        return {
            "suite": self.suite, "dims": list(self.dims), "trials": self.trials, "seed": self.seed,
            "cases": self.cases, "checks": self.checks,
            "max_residual": {k: _finite(v) for k, v in sorted(self.max_residual.items())},
            "failure_count": self.failure_count, "failures": self.failures,
            "counterexample": self.counterexample, "verdict": self.verdict,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    def lines(self):
        yield (f"fuzz suite={self.suite} dims={self.dims[0]}..{self.dims[1]} "
               f"trials={self.trials} seed={self.seed}: {self.cases} cases, {self.checks} checks")
        for name, r in sorted(self.max_residual.items()):
            yield f"  {name:28s} max residual {r:.3e}"
        for f in self.failures:
            yield f"  FAIL {f}"
        yield f"verdict: {self.verdict.upper()}"


def _finite(x):
    return x if np.isfinite(x) else "inf"


# --- shrinking ------------------------------------------------------------------------

def _fails(check, threshold, *objs) -> bool:
    try:
        return not check(*objs) < threshold
    except Exception:
        return True


def shrink_relation(t: LinearRelation, check, threshold) -> LinearRelation:
    """Greedily drop graph generators, then round entries, while ``check`` keeps failing."""
    gens = t.graph.basis
    i = 0
    while i < gens.shape[1]:
        trial = np.delete(gens, i, axis=1)
        cand = relation_from_graph(t.dim_h, t.dim_k, trial, t.tol)
        if _fails(check, threshold, cand):
            gens = trial
        else:
            i += 1
    for digits in (1, 2, 4, 8):
        cand = relation_from_graph(t.dim_h, t.dim_k, np.round(gens, digits), t.tol)
        if _fails(check, threshold, cand):
            return cand
    return relation_from_graph(t.dim_h, t.dim_k, gens, t.tol)


def _bundle(name, objects: dict, tasks: list, tol: Tol) -> dict:
    return {"name": name, "tolerance": {}, "spaces": {},
            "objects": {k: relation_object(v) for k, v in objects.items()},
            "sequences": {}, "tasks": tasks}


def _invariant_task(name, args, threshold):
    return {"op": "invariant", "args": list(args), "params": {"name": name, "tol": threshold},
            "label": f"counterexample: {name}", "expect": {"holds": True}}


# --- suites ---------------------------------------------------------------------------
#
# A suite is split into units (one per dimension or dimension pair).  Units are
# independent, so they may run in worker processes; their partial reports are
# merged in unit order, which keeps the result identical for any job count.

def _relation_unit(report, seed, suite_id, h, k, trials, checks, tol, with_resolvent):
    for trial in range(trials):
        rng = trial_rng(seed, suite_id, h, k, trial)
        t = random_relation(rng, h, k, tol)
        facts = P.Facts(t)
        report.cases += 1
        where = {"h": h, "k": k, "trial": trial}
        for name, fn in checks.items():
            at = where
            try:
                r = fn(facts)
            except Exception as exc:  # a crash is a failure of the identity
                r = float("inf")
                at = dict(where, error=f"{type(exc).__name__}: {exc}")

            def bundle(name=name, fn=fn, t=t):
                small = shrink_relation(t, lambda x: fn(P.Facts(x)), P.THRESHOLDS[name])
                return _bundle(f"counterexample-{name}", {"T": small},
                               [_invariant_task(name, ["T"], P.THRESHOLDS[name])], tol)

            report.record(name, r, P.THRESHOLDS[name], at, bundle)
        if with_resolvent and h == k:
            a = random_psd_relation(rng, h, int(rng.integers(0, h + 1)), tol)
            thr = P.INVARIANT_THRESHOLDS["resolvent_roundtrip"]
            r = _safe(lambda: P.resolvent_roundtrip(a), float("inf"))
            report.record("resolvent_roundtrip", r, thr, where,
                          lambda a=a: _bundle("counterexample-resolvent", {"A": a},
                                              [_invariant_task("resolvent_roundtrip", ["A"], thr)], tol))


def appendix_unit(report, seed, key, trials, tol):
    _relation_unit(report, seed, 1, *key, trials, P.APPENDIX, tol, with_resolvent=False)


def relation_unit(report, seed, key, trials, tol):
    _relation_unit(report, seed, 0, *key, trials, P.RELATION, tol, with_resolvent=True)


def domination_unit(report, seed, key, trials, tol):
    (n,) = key
    thr_w = P.INVARIANT_THRESHOLDS["domination_witness"]
    for trial in range(trials):
        rng = trial_rng(seed, 2, n, trial)
        a, b, _ = dominated_pair(rng, n, n, tol)
        x, y = random_relation(rng, n, n, tol), random_relation(rng, n, n, tol)
        report.cases += 2
        where = {"n": n, "trial": trial}
        for label, (p, q) in (("dominated", (a, b)), ("random", (x, y))):
            agree = _safe(lambda: theorem_bridge_check(p, q, tol))
            report.record("bridge", 0.0 if agree else 1.0, 0.5, dict(where, pair=label),
                          lambda p=p, q=q: _bundle("counterexample-bridge", {"A": p, "B": q},
                                                   [_invariant_task("bridge", ["A", "B"], 0.5)], tol))
        r = _safe(lambda: P.domination_witness(a, b), float("inf"))
        report.record("domination_witness", r, thr_w, dict(where, pair="dominated"),
                      lambda: _bundle("counterexample-domination", {"A": a, "B": b},
                                      [_invariant_task("domination_witness", ["A", "B"], thr_w)], tol))
        if _safe(lambda: dominates(x, y, tol), None) is not None:
            r = _safe(lambda: P.domination_witness(x, y), float("inf"))
            report.record("domination_witness", r, thr_w, dict(where, pair="random"),
                          lambda: _bundle("counterexample-domination", {"A": x, "B": y},
                                          [_invariant_task("domination_witness", ["A", "B"], thr_w)], tol))


def _safe(fn, default=False):
    try:
        return fn()
    except Exception:
        return default


def _limit_bundle(name, base, schedule, op, tol):
    return {"name": f"counterexample-{name}", "tolerance": {}, "spaces": {},
            "objects": {"base": relation_object(base)},
            "sequences": {"seq": {"kind": "scaled", "base": "base", "schedule": schedule}},
            "tasks": [{"op": op, "args": ["seq"], "expect": {"holds": True},
                       "label": f"counterexample: {name}"}]}


def limit_cases(rng, n: int, tol: Tol = DEFAULT_TOL) -> list:
    """One draw of each limit scenario: ``(name, base, schedule, op, engine)``."""
    cases = []
    a = PsdRelation.from_matrix(random_psd_matrix(rng, n, int(rng.integers(0, n))), tol)
    cases.append(("psd_scaling_up", a, "n", "monotone_psd_limit",
                  lambda s: monotone_psd_limit(s, "nondecreasing", tol)))
    down = random_psd_relation(rng, n, int(rng.integers(0, n + 1)), tol)
    cases.append(("psd_scaling_down", down, "inv_n", "monotone_psd_limit",
                  lambda s: monotone_psd_limit(s, "nonincreasing", tol)))
    r = random_operator(rng, n, n, int(rng.integers(0, n + 1)), tol)
    cases.append(("operator_sqrt_scaling", r, "sqrt_n", "nondecreasing_operator_limit",
                  lambda s: nondecreasing_operator_limit(s, tol)))
    cases.append(("nonincreasing_check", r, "inv_sqrt_n", "nonincreasing_relation_check",
                  lambda s: nonincreasing_relation_check(s, tol)))
    t = conditioned_relation(rng, n, n, tol)
    cases.append(("pipeline", t, "sqrt_n", "relation_sequence_pipeline",
                  lambda s: relation_sequence_pipeline(s, tol)))
    return cases


def limits_unit(report, seed, key, trials, tol):
    (n,) = key
    for trial in range(trials):
        rng = trial_rng(seed, 3, n, trial)
        where = {"n": n, "trial": trial}
        for name, base, schedule, op, engine in limit_cases(rng, n, tol):
            report.cases += 1
            try:
                rep = engine(Scaled(base, schedule))
                ok = rep.ok and _limit_shape_ok(name, base, rep, tol)
            except Exception:
                ok = False
            report.record(name, 0.0 if ok else 1.0, 0.5, where,
                          lambda base=base, schedule=schedule, op=op, name=name:
                          _limit_bundle(name, base, schedule, op, tol))


def _limit_shape_ok(name, base, rep: LimitReport, tol) -> bool:
    """Closed forms of the scaled limits."""
    if name == "operator_sqrt_scaling":
        return rep.dom_limit.same_as(base.ker, tol) and np.allclose(rep.limit.action, 0, atol=1e-6)
    if name == "nonincreasing_check":
        full = Subspace.full(base.dim_h)
        return rep.limit.dom.same_as(full, tol) and np.allclose(rep.limit.action, 0, atol=1e-6)
    return True


UNITS = {"relation": relation_unit, "domination": domination_unit,
         "limits": limits_unit, "appendix": appendix_unit}


def _keys(suite, dims):
    lo, hi = dims
    if suite in ("relation", "appendix"):
        return [(h, k) for h in range(lo, hi + 1) for k in range(lo, hi + 1)]
    return [(n,) for n in range(lo, hi + 1)]


def _run_unit(args):
    suite, key, seed, dims, trials, tol = args
    part = FuzzReport(suite, dims, trials, seed)
    UNITS[suite](part, seed, key, trials, tol)
    return part


def _merge(report: FuzzReport, part: FuzzReport):
    report.cases += part.cases
    report.checks += part.checks
    for name, r in part.max_residual.items():
        report.max_residual[name] = max(report.max_residual.get(name, 0.0), r)
    room = MAX_LISTED_FAILURES - len(report.failures)
    report.failures.extend(part.failures[:max(room, 0)])
    report.failure_count += part.failure_count
    if report.counterexample is None:
        report.counterexample = part.counterexample


def fuzz(suite: str, dims: tuple, trials: int, seed: int, tol: Tol = DEFAULT_TOL,
         jobs: int = 1) -> FuzzReport:
    """Run one suite (or ``"all"``) and return its report.

    Parameters
    ----------
    jobs : int
        Worker processes.  The report does not depend on this value.

    Raises
    ------
    KeyError
        For an unknown suite name.
    """
    if suite != "all" and suite not in UNITS:
        raise KeyError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    dims = tuple(int(d) for d in dims)
    report = FuzzReport(suite, dims, int(trials), int(seed))
    if trials <= 0:
        return report
    names = SUITES if suite == "all" else (suite,)
    work = [(name, key, int(seed), dims, int(trials), tol) for name in names for key in _keys(name, dims)]
    if jobs > 1 and len(work) > 1:
        ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
        with ctx.Pool(min(jobs, len(work))) as pool:
            parts = pool.map(_run_unit, work, chunksize=1)
    else:
        parts = map(_run_unit, work)
    for part in parts:
        _merge(report, part)
    return report
