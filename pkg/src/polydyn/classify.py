"""Identify a black-box map from its cycle statistics over a prime sequence.

Dimension 1 separates random-looking maps from power maps and Chebyshev
polynomials: the periodic count of a random map grows like sqrt(p), the
group-derived ones like p, and the exact counts then tell power from
Chebyshev.  In higher dimension the map is matched against every split
signature P_d^a x T_d^b x prod R_k consistent with N.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .arith import m_pair
from .formulas import (
    SplitSignature,
    group_factor,
    predict_cheby_dim1,
    predict_power_dim1,
    predict_split,
)
from .graph import census
from .maps import BadReduction, MapSpec
from .primes import (
    MERSENNE,
    MINUS_ONE_MOD,
    SOPHIE_GERMAIN,
    PrimeSequenceSpec,
    constant_m_minus_sequence,
    generate,
)
from .space import AFFINE, PROJECTIVE, Space

RANDOM_EXPONENT_THRESHOLD = 0.75
EXACT_MATCH_THRESHOLD = 0.8
# an envelope candidate "matches" a prime when observed/fitted is within this factor
ENVELOPE_FACTOR = 3.0
# log-scale RMS residual above which no envelope candidate is accepted
ENVELOPE_RMS_LIMIT = 1.0

POWER, CHEBYSHEV, RANDOM, UNKNOWN = "Power", "Chebyshev", "Random", "Unknown"


@dataclass(frozen=True)
class EvidenceRow:
    p: int
    periodic: int
    max_tail: int
    m_minus: int
    m_plus: int


@dataclass
class CycleEvidence:
    rows: list[EvidenceRow]
    dim: int
    d: int
    space: str
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def primes(self) -> np.ndarray:
        return np.array([r.p for r in self.rows], dtype=float)

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.periodic for r in self.rows], dtype=float)

    @property
    def tails(self) -> np.ndarray:
        return np.array([r.max_tail for r in self.rows], dtype=float)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "d": self.d,
            "space": self.space,
            "rows": [r.__dict__ for r in self.rows],
            "skipped": [{"p": p, "reason": why} for p, why in self.skipped],
        }


def gather_evidence(
    oracle: MapSpec,
    primes,
    d: int | None = None,
    space: str | None = None,
    cap: int | None = None,
    threads: int = 1,
) -> CycleEvidence:
    """Census of the oracle at each prime.

    Primes at which the oracle does not reduce (singular conjugation,
    vanishing leading coefficient, division by zero) are skipped and listed.
    """
    d = oracle.degree if d is None else d
    if space is None:
        space = AFFINE if oracle.supports_affine() else PROJECTIVE
    primes = sorted(set(int(p) for p in primes))

    def one(p: int):
        try:
            stats = census(oracle, Space(space, oracle.dim, p), cap).stats
        except (BadReduction, ZeroDivisionError) as exc:
            return p, None, str(exc)
        mp = m_pair(p, d)
        return p, EvidenceRow(p, stats.total_periodic, stats.max_tail, mp.m_minus, mp.m_plus), None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, primes))
    else:
        results = [one(p) for p in primes]
    rows = [row for _, row, _ in results if row is not None]
    skipped = [(p, why) for p, row, why in results if row is None]
    return CycleEvidence(rows, oracle.dim, d, space, skipped)


def fit_exponent(x, y) -> float:
    """Least-squares slope of log y against log x (y clipped below at 1)."""
    x = np.asarray(x, dtype=float)
    y = np.maximum(np.asarray(y, dtype=float), 1.0)
    if x.size < 2:
        raise ValueError("need at least two points to fit an exponent")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


@dataclass
class Verdict:
    dim: int
    label: str | None = None
    signature: SplitSignature | None = None
    confidence: float = 0.0
    count_exponent: float | None = None
    tail_exponent: float | None = None
    max_random_block: int | None = None
    table: list[dict] = field(default_factory=list)
    candidates: dict[str, list[float]] = field(default_factory=dict)

    @property
    def unknown(self) -> bool:
        return self.label == UNKNOWN

    def to_json(self) -> dict:
        out: dict = {"dim": self.dim, "confidence": self.confidence, "table": self.table}
        if self.label is not None:
            out["label"] = self.label
        if self.signature is not None:
            out["signature"] = self.signature.to_json()
        for key in ("count_exponent", "tail_exponent", "max_random_block"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    def plot_csv(self) -> str:
        """p, observed, then one predicted column per candidate curve."""
        names = list(self.candidates)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "observed"] + names)
        for i, row in enumerate(self.table):
            writer.writerow([row["p"], row["observed"]] + [self.candidates[n][i] for n in names])
        return buf.getvalue()


# -- dimension 1 ---------------------------------------------------------------


def _spread(primes: list[int], count: int) -> list[int]:
    """Pick ``count`` primes roughly evenly spaced on a log scale."""
    if len(primes) <= count:
        return primes
    logs = np.log(primes)
    grid = np.linspace(logs[0], logs[-1], count)
    chosen: list[int] = []
    for g in grid:
        for i in np.argsort(np.abs(logs - g)):
            if primes[i] not in chosen:
                chosen.append(primes[i])
                break
    return sorted(chosen)


def dim1_primes(d: int, max_p: int = 600_000, count: int = 8, min_p: int = 5) -> list[int]:
    """Prime sequence of the form suited to degree d.

    Mersenne primes for d a power of 2, Sophie Germain primes (q not dividing
    d) for other even d, primes = -1 mod d for odd d.
    """
    if d & (d - 1) == 0:
        form = PrimeSequenceSpec(MERSENNE, d=d, min_p=min_p, max_p=max_p)
    elif d % 2 == 0:
        form = PrimeSequenceSpec(SOPHIE_GERMAIN, d=d, min_p=min_p, max_p=max_p)
    else:
        form = PrimeSequenceSpec(MINUS_ONE_MOD, d=d, min_p=min_p, max_p=max_p)
    primes = [p for p in generate(form) if d % p]
    return _spread(primes, count)


def classify_dim1(evidence: CycleEvidence, d: int) -> Verdict:
    rows = evidence.rows
    if len(rows) < 4:
        raise ValueError(f"need at least 4 usable primes, got {len(rows)}")
    space = evidence.space
    power = [predict_power_dim1(r.p, d, space).periodic.value for r in rows]
    cheby = [predict_cheby_dim1(r.p, d, space).periodic.value for r in rows]
    observed = [r.periodic for r in rows]
    exponent = fit_exponent(evidence.primes, evidence.counts)
    table = [
        {"p": r.p, "observed": o, "power": pw, "chebyshev": ch, "max_tail": r.max_tail}
        for r, o, pw, ch in zip(rows, observed, power, cheby)
    ]
    verdict = Verdict(1, count_exponent=exponent, table=table,
                      candidates={"power": power, "chebyshev": cheby})
    power_hits = np.mean([o == v for o, v in zip(observed, power)])
    cheby_hits = np.mean([o == v for o, v in zip(observed, cheby)])
    if exponent < RANDOM_EXPONENT_THRESHOLD:
        verdict.label = RANDOM
        verdict.confidence = float(np.mean(
            [o != pw and o != ch for o, pw, ch in zip(observed, power, cheby)]))
    elif max(power_hits, cheby_hits) == 0:
        verdict.label = UNKNOWN
    elif power_hits >= cheby_hits:
        verdict.label, verdict.confidence = POWER, float(power_hits)
    else:
        verdict.label, verdict.confidence = CHEBYSHEV, float(cheby_hits)
    return verdict


def classify_map_dim1(oracle: MapSpec, d: int | None = None, primes=None, **kw) -> Verdict:
    d = oracle.degree if d is None else d
    primes = dim1_primes(d) if primes is None else primes
    return classify_dim1(gather_evidence(oracle, primes, d, **kw), d)


# -- dimension N -----------------------------------------------------------------


def partitions(n: int, largest: int | None = None):
    """Partitions of n into parts <= largest, parts in decreasing order."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for part in range(min(n, largest), 0, -1):
        for rest in partitions(n - part, part):
            yield (part,) + rest


def signatures(N: int, d: int, max_block: int | None = None):
    """All split signatures on A^N; with max_block, random parts must peak exactly there."""
    for K in range(N + 1):
        for parts in partitions(K):
            if K and max_block is not None and parts[0] != max_block:
                continue
            for a in range(N - K + 1):
                yield SplitSignature(a, N - K - a, parts, d)


def _infinity_offset(evidence: CycleEvidence, row: EvidenceRow) -> int:
    if evidence.space != PROJECTIVE:
        return 0
    return sum((row.m_minus + 1) ** i for i in range(evidence.dim))


def _envelope_fit(evidence: CycleEvidence, sig: SplitSignature) -> tuple[float, np.ndarray]:
    """Fit the free constant of an envelope candidate on log scale.

    Returns (rms residual, fitted curve).  Projective counts carry the exact
    contribution of the hyperplane at infinity as an additive offset.
    """
    rows = evidence.rows
    obs = np.log(np.maximum(evidence.counts, 1.0))
    base = np.array([predict_split(sig, r.p, AFFINE).curve(r.p) for r in rows])
    offset = np.array([_infinity_offset(evidence, r) for r in rows], dtype=float)

    def curve(logc):
        return np.exp(logc) * base + offset

    def loss(logc):
        return float(np.mean((obs - np.log(curve(logc))) ** 2))

    start = float(np.mean(obs - np.log(base)))
    best = minimize_scalar(loss, bounds=(start - 10, start + 10), method="bounded")
    return math.sqrt(best.fun), curve(best.x)


def classify_dimN(evidence, d: int, N: int | None = None, primes=None, **kw) -> Verdict:
    """Recover the split signature behind the evidence.

    ``evidence`` is either a :class:`CycleEvidence` or an oracle; an oracle
    is censused over ``primes`` (default: a constant-m- sequence).

    Exact group-derived counts are tried first.  Otherwise every signature
    with a random part whose exact group count divides the observed counts
    is a candidate.  Candidates explaining more of the counts through group
    structure win (a chance factorisation becomes very unlikely over several
    primes), then those whose largest random block matches the growth of
    the largest tail, then the smaller log-scale residual of the fitted
    envelope, then the lexicographically smaller random partition.
    """
    if not isinstance(evidence, CycleEvidence):
        oracle = evidence
        primes = dimN_primes(d, oracle.dim) if primes is None else primes
        evidence = gather_evidence(oracle, primes, d, **kw)
    N = evidence.dim if N is None else N
    if N < 2:
        raise ValueError("classify_dimN needs N >= 2; use classify_dim1")
    ms = {r.m_minus for r in evidence.rows}
    if len(ms) > 1:
        raise ValueError(f"primes do not share one m- value: {sorted(ms)}")
    rows = evidence.rows
    if len(rows) < 3:
        raise ValueError(f"need at least 3 usable primes, got {len(rows)}")
    observed = [r.periodic for r in rows]
    verdict = Verdict(
        N,
        count_exponent=fit_exponent(evidence.primes, evidence.counts),
        tail_exponent=fit_exponent(evidence.primes, evidence.tails),
    )
    exact_best: tuple[float, SplitSignature] | None = None
    for sig in signatures(N, d):
        if sig.K:
            continue
        preds = [predict_split(sig, r.p, evidence.space).value for r in rows]
        verdict.candidates[str(sig)] = [float(v) for v in preds]
        hits = float(np.mean([o == v for o, v in zip(observed, preds)]))
        if exact_best is None or hits > exact_best[0]:
            exact_best = (hits, sig)
    if exact_best is not None and exact_best[0] >= EXACT_MATCH_THRESHOLD:
        verdict.signature, verdict.confidence = exact_best[1], exact_best[0]
        verdict.max_random_block = 0
        verdict.label = str(exact_best[1])
        _fill_table(verdict, rows, verdict.candidates[str(exact_best[1])])
        return verdict

    block = int(np.clip(round(2 * verdict.tail_exponent), 1, N))
    verdict.max_random_block = block
    scored = []
    for sig in signatures(N, d):
        if not sig.K or not _divides(evidence, sig):
            continue
        rms, fitted = _envelope_fit(evidence, sig)
        verdict.candidates[str(sig)] = [float(v) for v in fitted]
        structure = sum(math.log(group_factor(sig, r.p)) for r in rows)
        key = (-round(structure, 9), abs(max(sig.random_dims) - block), round(rms, 9),
               sig.random_dims[::-1])
        scored.append((key, rms, sig, fitted))
    if not scored:
        verdict.label = UNKNOWN
        return verdict
    scored.sort(key=lambda t: t[0])
    _, rms, sig, fitted = scored[0]
    if rms > ENVELOPE_RMS_LIMIT:
        verdict.label = UNKNOWN
        _fill_table(verdict, rows, fitted)
        return verdict
    ratio = np.abs(np.log(np.maximum(evidence.counts, 1.0)) - np.log(fitted))
    verdict.signature = sig
    verdict.label = str(sig)
    verdict.confidence = float(np.mean(ratio <= math.log(ENVELOPE_FACTOR)))
    _fill_table(verdict, rows, fitted)
    return verdict


def _divides(evidence: CycleEvidence, sig: SplitSignature) -> bool:
    """Can the counts factor as (group part) x (random part) at every prime?

    The periodic points of a product are the products of periodic points, so
    after removing the hyperplane at infinity the count is the exact group
    count times a positive integer.
    """
    for r in evidence.rows:
        rest = r.periodic - _infinity_offset(evidence, r)
        g = group_factor(sig, r.p)
        if rest < g or rest % g:
            return False
    return True


def _fill_table(verdict: Verdict, rows, predicted) -> None:
    verdict.table = [
        {"p": r.p, "observed": r.periodic, "predicted": float(v), "max_tail": r.max_tail,
         "m_minus": r.m_minus, "m_plus": r.m_plus}
        for r, v in zip(rows, predicted)
    ]


def dimN_primes(d: int, N: int, cap: int = 10**7, min_count: int = 5) -> list[int]:
    """Constant-m- primes whose space P^N(F_p) fits the point budget."""
    max_p = int(round(cap ** (1 / N)))
    while (max_p + 1) ** N <= cap:
        max_p += 1
    while max_p**N > cap or sum(max_p**D for D in range(N + 1)) > cap:
        max_p -= 1
    _, primes = constant_m_minus_sequence(d, max_p, min_count)
    return primes


def classify(oracle: MapSpec, d: int | None = None, primes=None, **kw) -> Verdict:
    """Pick the algorithm by dimension and run it end to end."""
    d = oracle.degree if d is None else d
    if oracle.dim == 1:
        return classify_map_dim1(oracle, d, primes, **kw)
    return classify_dimN(oracle, d, oracle.dim, primes, **kw)
