"""Measures on stochastic matrices and the characteristic pair (Sigma, c).

Supported families: finite atomic, countable atomic (with declared summable
regularity mass and a truncation tolerance), the k-fold product of symmetric
Dirichlet rows, and zero-one matrices. A characteristic pair combines an
admissible measure with nonnegative off-diagonal flip rates; admissibility
means the measure never charges the identity matrix and has a finite
(1 - S_*)-weighted integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .cosets import CosetMap, StochasticMatrix, as_stochastic

__all__ = [
    "InadmissibleMeasureError",
    "RegularityResult",
    "RCEReport",
    "MatrixMeasure",
    "FiniteAtomicMeasure",
    "ZeroOneMeasure",
    "CountableAtomicMeasure",
    "DirichletProductMeasure",
    "FlipRates",
    "CharacteristicPair",
    "LevelChannel",
    "LevelChannelSet",
    "sample_coset_map",
    "sample_coset_map_not_identity",
    "measure_from_config",
    "flips_from_config",
]


class InadmissibleMeasureError(ValueError):
    """The measure violates the admissibility requirements for jump rates."""


@dataclass(frozen=True)
class RegularityResult:
    """Value (or bound) of the (1 - S_*)-weighted integral."""

    value: float
    exact: bool
    admissible: bool
    std_error: float | None = None
    tail_bound: float | None = None
    atoms_used: int | None = None
    note: str = ""


@dataclass(frozen=True)
class RCEReport:
    """Outcome of a row-column exchangeability check."""

    ok: bool
    witness: tuple | None = None
    detail: str = ""


@dataclass(frozen=True)
class LevelChannel:
    """One source of matrix events at a fixed level n.

    Atom channels carry the matrix and fire maps conditioned on being
    non-identity at level n; candidate channels carry a measure whose raw
    atom rate is thinned by discarding identity restrictions.
    """

    rate: float
    kind: str  # "atom" | "candidate"
    matrix: StochasticMatrix | None = None
    measure: "MatrixMeasure | None" = None


@dataclass(frozen=True)
class LevelChannelSet:
    channels: tuple[LevelChannel, ...]
    discarded_rate_bound: float = 0.0

    @property
    def total(self) -> float:
        return float(sum(ch.rate for ch in self.channels))


def _level_rate(S: StochasticMatrix, weight: float, n: int) -> float:
    """weight * P(a map sampled from S is non-identity on [n])."""
    return float(weight * (1.0 - np.prod(S.a.diagonal() ** n)))


class MatrixMeasure:
    """Base for measures on k x k stochastic matrices."""

    k: int

    def total_mass(self) -> float:
        raise NotImplementedError

    def sample_matrix(self, rng: np.random.Generator) -> StochasticMatrix:
        raise NotImplementedError

    def sample_matrix_batch(self, size: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def regularity_integral(self, rng=None, n_samples: int = 100_000) -> RegularityResult:
        raise NotImplementedError

    def is_row_column_exchangeable(self, tol: float = 1e-9, rng=None,
                                   n_samples: int = 20_000) -> RCEReport:
        raise NotImplementedError

    def level_channels(self, n: int) -> LevelChannelSet:
        raise NotImplementedError

    def has_identity_atom(self) -> bool:
        return False

    def describe(self) -> dict:
        raise NotImplementedError


class FiniteAtomicMeasure(MatrixMeasure):
    """Finitely many weighted matrix atoms.

    Identity atoms are rejected unless allow_identity=True, an explicit
    bypass for lazy discrete-time chains and test harnesses; continuous-time
    pairs reject identity atoms regardless.
    """

    variant = "finite_atomic"

    def __init__(self, atoms, allow_identity: bool = False):
        parsed = []
        for S, w in atoms:
            S = as_stochastic(S)
            w = float(w)
            if w <= 0:
                raise ValueError("atom weights must be positive")
            if S.is_identity() and not allow_identity:
                raise InadmissibleMeasureError(
                    "the measure must not charge the identity matrix"
                )
            parsed.append((S, w))
        if not parsed:
            raise ValueError("an atomic measure needs at least one atom")
        ks = {S.k for S, _ in parsed}
        if len(ks) != 1:
            raise ValueError("all atoms must share k")
        self.k = ks.pop()
        self.atoms = tuple(parsed)
        self._weights = np.array([w for _, w in parsed])
        self._mats = np.stack([S.a for S, _ in parsed])

    def total_mass(self) -> float:
        return float(self._weights.sum())

    def has_identity_atom(self) -> bool:
        return any(S.is_identity() for S, _ in self.atoms)

    def sample_matrix(self, rng: np.random.Generator) -> StochasticMatrix:
        p = self._weights / self._weights.sum()
        return self.atoms[rng.choice(len(self.atoms), p=p)][0]

    def sample_matrix_batch(self, size: int, rng: np.random.Generator) -> np.ndarray:
        p = self._weights / self._weights.sum()
        idx = rng.choice(len(self.atoms), size=size, p=p)
        return self._mats[idx]

    def regularity_integral(self, rng=None, n_samples: int = 100_000) -> RegularityResult:
        value = float(sum(w * (1.0 - S.s_star) for S, w in self.atoms))
        return RegularityResult(value=value, exact=True, admissible=True,
                                atoms_used=len(self.atoms))

    def _atom_multiset(self, mats: np.ndarray) -> dict[bytes, float]:
        out: dict[bytes, float] = {}
        for M, w in zip(mats, self._weights):
            key = np.round(M, 9).tobytes()
            out[key] = out.get(key, 0.0) + float(w)
        return out

    def is_row_column_exchangeable(self, tol: float = 1e-9, rng=None,
                                   n_samples: int = 20_000) -> RCEReport:
        base = self._atom_multiset(self._mats)
        for gamma in permutations(range(self.k)):
            for gamma2 in permutations(range(self.k)):
                transformed = self._mats[:, gamma, :][:, :, gamma2]
                other = self._atom_multiset(transformed)
                if set(other) != set(base) or any(
                    abs(other[key] - base[key]) > tol for key in base
                ):
                    g1 = tuple(g + 1 for g in gamma)
                    g2 = tuple(g + 1 for g in gamma2)
                    return RCEReport(
                        ok=False,
                        witness=(g1, g2),
                        detail=(
                            f"atom weights change under row permutation {g1} "
                            f"and column permutation {g2}"
                        ),
                    )
        return RCEReport(ok=True, detail="atom multiset invariant under all pairs")

    def level_channels(self, n: int) -> LevelChannelSet:
        channels = tuple(
            LevelChannel(rate=_level_rate(S, w, n), kind="atom", matrix=S)
            for S, w in self.atoms
        )
        return LevelChannelSet(channels=channels)

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "k": self.k,
            "atoms": [
                {"matrix": S.a.tolist(), "weight": w} for S, w in self.atoms
            ],
        }


class ZeroOneMeasure(FiniteAtomicMeasure):
    """Atoms restricted to {0,1}-valued stochastic matrices (coalescent-like)."""

    variant = "zero_one"

    def __init__(self, atoms, allow_identity: bool = False):
        super().__init__(atoms, allow_identity=allow_identity)
        for S, _ in self.atoms:
            if not S.is_zero_one():
                raise ValueError("zero-one measure atoms must be {0,1}-valued")


class CountableAtomicMeasure(MatrixMeasure):
    """Countably many atoms streamed from a factory, with declared bounds.

    atom_factory returns a fresh iterator of (matrix, weight) pairs.
    regularity_bound is the declared bound on sum_r w_r (1 - S_{r,*});
    trunc_tol controls truncation: at level n, atom r is kept while its event
    rate w_r (1 - prod_i S_ii^n) stays >= trunc_tol / 2^r, and the discarded
    total rate is reported via the n*k*(bound - consumed) envelope.
    """

    variant = "countable_atomic"

    CAUCHY_WINDOW = 32

    def __init__(self, atom_factory, k: int, regularity_bound: float,
                 trunc_tol: float = 1e-9, total_mass: float | None = None,
                 max_atoms: int = 100_000):
        if regularity_bound <= 0 or trunc_tol <= 0:
            raise ValueError("regularity_bound and trunc_tol must be positive")
        self.k = int(k)
        self.atom_factory = atom_factory
        self.regularity_bound = float(regularity_bound)
        self.trunc_tol = float(trunc_tol)
        self._total_mass = None if total_mass is None else float(total_mass)
        self.max_atoms = int(max_atoms)

    def _atoms(self):
        for r, (S, w) in enumerate(self.atom_factory(), start=1):
            S = as_stochastic(S)
            if S.k != self.k:
                raise ValueError("atom k mismatch")
            if S.is_identity():
                raise InadmissibleMeasureError(
                    "the measure must not charge the identity matrix"
                )
            if w <= 0:
                raise ValueError("atom weights must be positive")
            yield r, S, float(w)
            if r >= self.max_atoms:
                return

    def total_mass(self) -> float:
        if self._total_mass is None:
            raise InadmissibleMeasureError(
                "infinite-mass countable measure cannot be sampled without a "
                "declared total mass and truncation"
            )
        return self._total_mass

    def _truncate_for_mass(self) -> FiniteAtomicMeasure:
        target = self.total_mass() - self.trunc_tol
        kept = []
        consumed = 0.0
        for _, S, w in self._atoms():
            kept.append((S, w))
            consumed += w
            if consumed >= target:
                break
        else:
            if consumed < target:
                raise InadmissibleMeasureError(
                    f"atom stream exhausted {consumed:.6g} of declared mass "
                    f"{self._total_mass:.6g} within {self.max_atoms} atoms"
                )
        return FiniteAtomicMeasure(kept)

    def sample_matrix(self, rng: np.random.Generator) -> StochasticMatrix:
        return self._truncate_for_mass().sample_matrix(rng)

    def sample_matrix_batch(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self._truncate_for_mass().sample_matrix_batch(size, rng)

    def regularity_integral(self, rng=None, n_samples: int = 100_000) -> RegularityResult:
        partial = 0.0
        window: list[float] = []
        used = 0
        for r, S, w in self._atoms():
            term = w * (1.0 - S.s_star)
            partial += term
            window.append(term)
            if len(window) > self.CAUCHY_WINDOW:
                window.pop(0)
            used = r
            if len(window) == self.CAUCHY_WINDOW and sum(window) < self.trunc_tol:
                return RegularityResult(
                    value=partial, exact=False, admissible=True,
                    tail_bound=max(self.regularity_bound - partial, 0.0),
                    atoms_used=used,
                    note="partial sums Cauchy within truncation tolerance",
                )
        if used < self.max_atoms:  # stream genuinely finite: the sum is exact
            return RegularityResult(value=partial, exact=True, admissible=True,
                                    atoms_used=used)
        return RegularityResult(
            value=partial, exact=False, admissible=False, atoms_used=used,
            note=(
                f"partial sums not Cauchy within tolerance {self.trunc_tol} "
                f"after {used} atoms; tail reported as inadmissible"
            ),
        )

    def is_row_column_exchangeable(self, tol: float = 1e-9, rng=None,
                                   n_samples: int = 20_000) -> RCEReport:
        kept = [(S, w) for _, S, w in self._atoms()]
        return FiniteAtomicMeasure(kept).is_row_column_exchangeable(tol=tol)

    def level_channels(self, n: int) -> LevelChannelSet:
        channels = []
        consumed_reg = 0.0
        dropped = False
        for r, S, w in self._atoms():
            # remaining level rate is bounded by n*k*(declared bound - consumed);
            # stop once that envelope (or the per-rank threshold) is negligible
            envelope = n * self.k * max(self.regularity_bound - consumed_reg, 0.0)
            if envelope < self.trunc_tol:
                dropped = True
                break
            rate = _level_rate(S, w, n)
            if rate < self.trunc_tol * 0.5**r:
                dropped = True
                break
            channels.append(LevelChannel(rate=rate, kind="atom", matrix=S))
            consumed_reg += w * (1.0 - S.s_star)
        else:
            if len(channels) >= self.max_atoms:
                raise InadmissibleMeasureError(
                    f"level-{n} rates did not fall below the truncation "
                    f"threshold within {self.max_atoms} atoms"
                )
            dropped = False  # stream exhausted: nothing discarded
        bound = 0.0
        if dropped:
            bound = n * self.k * max(self.regularity_bound - consumed_reg, 0.0)
        return LevelChannelSet(channels=tuple(channels), discarded_rate_bound=bound)

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "k": self.k,
            "regularity_bound": self.regularity_bound,
            "trunc_tol": self.trunc_tol,
            "total_mass": self._total_mass,
        }


class DirichletProductMeasure(MatrixMeasure):
    """Rows i.i.d. symmetric Dirichlet(alpha/k, ..., alpha/k), total mass as given.

    This is the self-similar family: the k-fold product of one symmetric row
    law. It assigns zero mass to the identity matrix and is row-column
    exchangeable by construction.
    """

    variant = "dirichlet_product"

    def __init__(self, alpha: float, k: int, mass: float = 1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if mass <= 0:
            raise ValueError("mass must be positive")
        self.alpha = float(alpha)
        self.k = int(k)
        self.mass = float(mass)

    def total_mass(self) -> float:
        return self.mass

    def sample_matrix(self, rng: np.random.Generator) -> StochasticMatrix:
        rows = rng.dirichlet(np.full(self.k, self.alpha / self.k), size=self.k)
        return StochasticMatrix(rows)

    def sample_matrix_batch(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.dirichlet(np.full(self.k, self.alpha / self.k), size=(size, self.k))

    def regularity_integral(self, rng=None, n_samples: int = 100_000) -> RegularityResult:
        if rng is None:
            # (1 - S_*) <= 1, so the mass itself is an analytic bound
            return RegularityResult(value=self.mass, exact=False, admissible=True,
                                    note="analytic bound: total mass")
        mats = self.sample_matrix_batch(n_samples, rng)
        vals = 1.0 - mats.diagonal(axis1=1, axis2=2).min(axis=1)
        est = self.mass * float(vals.mean())
        se = self.mass * float(vals.std(ddof=1) / np.sqrt(n_samples))
        return RegularityResult(value=est, exact=False, admissible=True,
                                std_error=se, note="Monte Carlo estimate")

    def is_row_column_exchangeable(self, tol: float = 1e-9, rng=None,
                                   n_samples: int = 20_000) -> RCEReport:
        if rng is None:
            return RCEReport(ok=True, detail="symmetric Dirichlet rows, i.i.d. rows")
        mats = self.sample_matrix_batch(n_samples, rng)
        means = mats.mean(axis=0)
        spread = float(np.abs(means - 1.0 / self.k).max())
        ok = spread <= tol
        return RCEReport(
            ok=ok,
            witness=None if ok else ("entry-mean spread", spread),
            detail=f"max |mean entry - 1/k| = {spread:.3e} over {n_samples} samples",
        )

    def level_channels(self, n: int) -> LevelChannelSet:
        channel = LevelChannel(rate=self.mass, kind="candidate", measure=self)
        return LevelChannelSet(channels=(channel,))

    def describe(self) -> dict:
        return {"variant": self.variant, "k": self.k, "alpha": self.alpha,
                "mass": self.mass}


class FlipRates:
    """Nonnegative per-coordinate flip rates c[i, i2]; the diagonal is zero."""

    def __init__(self, c):
        arr = np.asarray(c, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("flip rates must form a square table")
        if arr.min() < 0:
            raise ValueError("flip rates must be nonnegative")
        np.fill_diagonal(arr, 0.0)
        arr.flags.writeable = False
        self.c = arr

    @property
    def k(self) -> int:
        return self.c.shape[0]

    @classmethod
    def zero(cls, k: int) -> "FlipRates":
        return cls(np.zeros((k, k)))

    @classmethod
    def constant(cls, k: int, value: float) -> "FlipRates":
        c = np.full((k, k), float(value))
        return cls(c)

    def is_zero(self) -> bool:
        return bool((self.c == 0).all())

    def constant_value(self) -> float | None:
        """The shared off-diagonal value, or None if the table is not constant."""
        if self.k < 2:
            return 0.0
        off = self.c[~np.eye(self.k, dtype=bool)]
        return float(off[0]) if np.all(off == off[0]) else None

    def describe(self) -> dict:
        return {"table": self.c.tolist()}


@dataclass(frozen=True)
class CharacteristicPair:
    """(Sigma, c): matrix measure plus flip rates, validated for admissibility."""

    sigma: MatrixMeasure | None
    flips: FlipRates
    regularity: RegularityResult | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.sigma is not None:
            if self.sigma.k != self.flips.k:
                raise ValueError("measure and flip rates must share k")
            if self.sigma.has_identity_atom():
                raise InadmissibleMeasureError(
                    "continuous-time pairs must not charge the identity matrix"
                )
            reg = self.sigma.regularity_integral()
            if not reg.admissible or not np.isfinite(reg.value):
                raise InadmissibleMeasureError(
                    f"regularity integral not finite/admissible: {reg.note or reg.value}"
                )
            object.__setattr__(self, "regularity", reg)

    @property
    def k(self) -> int:
        return self.flips.k

    def level_channels(self, n: int) -> LevelChannelSet:
        if self.sigma is None:
            return LevelChannelSet(channels=())
        return self.sigma.level_channels(n)

    def describe(self) -> dict:
        return {
            "sigma": None if self.sigma is None else self.sigma.describe(),
            "flips": self.flips.describe(),
        }


def sample_coset_map(S, n: int, rng: np.random.Generator) -> CosetMap:
    """All nk cells independent; coset i cells follow row i of S."""
    S = as_stochastic(S)
    if n < 1:
        raise ValueError("map length must be >= 1")
    u = rng.random((S.k, n))
    nxt = (u[:, :, None] >= S.cum[:, None, :]).sum(axis=2)
    return CosetMap(S.k, np.minimum(nxt, S.k - 1) + 1)


def sample_coset_map_not_identity(S, n: int, rng: np.random.Generator,
                                  cap: int = 1000) -> CosetMap:
    """Sample a map from S conditioned on being non-identity at level n.

    Rejection from the unconditional law with a retry cap; pathological
    near-identity matrices fall back to sampling the deviating cells from the
    exact conditional law (sequential suffix-product scheme).
    """
    S = as_stochastic(S)
    k = S.k
    q = 1.0 - S.a.diagonal()
    if (q <= 0).all():
        raise ValueError("cannot condition the identity matrix on non-identity maps")
    for _ in range(cap):
        M = sample_coset_map(S, n, rng)
        if not M.is_identity():
            return M
    # exact conditional: cells in coset-major order, deviate with prob q[i]
    cells = np.repeat(q, n)
    keep = np.concatenate([[1.0], np.cumprod((1.0 - cells)[::-1])])[::-1]
    cosets = np.repeat(np.arange(1, k + 1, dtype=np.int64)[:, None], n, axis=1)
    offdiag_cum = []
    for i in range(k):
        row = S.a[i].copy()
        row[i] = 0.0
        total = row.sum()
        offdiag_cum.append(np.cumsum(row) / total if total > 0 else None)
    deviated = False
    for t in range(k * n):
        i = t // n
        if cells[t] <= 0.0:
            continue
        p = cells[t] if deviated else cells[t] / (1.0 - keep[t])
        if rng.random() < p:
            cum = offdiag_cum[i]
            val = int(np.searchsorted(cum, rng.random(), side="right"))
            cosets[i, t % n] = min(val, k - 1) + 1
            deviated = True
    return CosetMap(k, cosets)


def measure_from_config(cfg: dict, k: int) -> MatrixMeasure:
    """Build a measure from a config table (variant tag plus parameters)."""
    if "variant" not in cfg:
        raise ValueError("measure config needs a 'variant' field")
    variant = cfg["variant"]
    if variant in ("finite_atomic", "zero_one"):
        if "atoms" not in cfg:
            raise ValueError(f"measure.{variant} config needs an 'atoms' list")
        atoms = [(np.asarray(a["matrix"], dtype=float), a["weight"]) for a in cfg["atoms"]]
        cls = FiniteAtomicMeasure if variant == "finite_atomic" else ZeroOneMeasure
        measure = cls(atoms, allow_identity=bool(cfg.get("allow_identity", False)))
    elif variant == "dirichlet_product":
        if "alpha" not in cfg:
            raise ValueError("measure.dirichlet_product config needs 'alpha'")
        measure = DirichletProductMeasure(cfg["alpha"], k, mass=cfg.get("mass", 1.0))
    else:
        raise ValueError(f"unknown measure variant {variant!r}")
    if measure.k != k:
        raise ValueError(f"measure has k={measure.k}, config declares k={k}")
    return measure


def flips_from_config(cfg: dict | None, k: int) -> FlipRates:
    if not cfg:
        return FlipRates.zero(k)
    if "constant" in cfg:
        return FlipRates.constant(k, cfg["constant"])
    if "table" in cfg:
        table = np.asarray(cfg["table"], dtype=float)
        if table.shape != (k, k):
            raise ValueError(f"flips.table must be {k}x{k}")
        return FlipRates(table)
    raise ValueError("flips config needs 'constant' or 'table'")
