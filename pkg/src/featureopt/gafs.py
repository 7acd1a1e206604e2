"""Genetic-algorithm wrapper feature selection.

Individuals are binary masks over the feature columns.  A mask's fitness
is the mean stratified k-fold accuracy of an MLP trained on the selected
columns.  The search uses tournament selection, uniform crossover, bit-flip
mutation and elitism, and caches fitness by mask.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, stratified_kfold
from .errors import BadConfig, BadShape
from .mlp import MlpConfig, cv_accuracy
from .numerics import RandomStream, derive_seed

CONVERGENCE_HEADER = ("generation", "best_fitness", "mean_fitness", "best_popcount", "evaluations")


@dataclass(frozen=True, eq=False)
class FeatureMask:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool).ravel()
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @classmethod
    def full(cls, d: int) -> "FeatureMask":
        return cls(np.ones(d, dtype=bool))

    @property
    def d(self) -> int:
        return self.bits.size

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @property
    def key(self) -> bytes:
        return self.d.to_bytes(4, "little") + np.packbits(self.bits).tobytes()

    def digest(self) -> int:
        """Stable 64-bit hash of the bits, independent of platform and process."""
        return int.from_bytes(hashlib.blake2b(self.key, digest_size=8).digest(), "little")

    def sort_key(self):
        """Ordering used to break fitness ties: fewer features, then lower bit string."""
        return (self.popcount, tuple(int(b) for b in self.bits))

    def repaired(self, rng: RandomStream) -> "FeatureMask":
        if self.bits.any():
            return self
        bits = self.bits.copy()
        bits[rng.integers(self.d)] = True
        return FeatureMask(bits)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __eq__(self, other):
        return isinstance(other, FeatureMask) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"FeatureMask({self.to_string()})"


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 30
    generations: int = 30
    tournament_size: int = 3
    crossover_rate: float = 0.9
    per_gene_crossover_p: float = 0.5
    mutation_rate: float | None = None  # None -> 1/d
    elite_count: int = 2
    fitness_cv_folds: int = 3
    seed: int = 0
    mlp_cfg: MlpConfig = field(default_factory=MlpConfig)

    def __post_init__(self):
        if self.population_size < 2:
            raise BadConfig("population_size must be >= 2")
        if not (0 <= self.elite_count < self.population_size):
            raise BadConfig("elite_count must lie in [0, population_size)")
        if self.generations < 0 or self.tournament_size < 1:
            raise BadConfig("generations must be >= 0 and tournament_size >= 1")
        for name in ("crossover_rate", "per_gene_crossover_p", "mutation_rate"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= 1.0):
                raise BadConfig(f"{name} must lie in [0, 1]")
        if self.fitness_cv_folds < 2:
            raise BadConfig("fitness_cv_folds must be >= 2")

    def replace(self, **changes) -> "GaConfig":
        return dataclasses.replace(self, **changes)

    def rate_for(self, d: int) -> float:
        return 1.0 / d if self.mutation_rate is None else self.mutation_rate


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_mask_popcount: int
    evaluations_used: int


class FitnessCache:
    """Mask -> fitness memo that is safe for concurrent insert-or-get."""

    def __init__(self):
        self._values = {}
        self._masks = {}
        self._lock = threading.Lock()
        self.evaluations = 0

    def get_or_compute(self, mask: FeatureMask, compute):
        key = mask.key
        with self._lock:
            if key in self._values:
                return self._values[key]
        value = compute()
        with self._lock:
            if key not in self._values:
                self._values[key] = value
                self._masks[key] = mask
                self.evaluations += 1
            return self._values[key]

    def __contains__(self, mask):
        return mask.key in self._values

    def __len__(self):
        return len(self._values)

    def items(self):
        with self._lock:
            return [(self._masks[k], v) for k, v in self._values.items()]


def init_population(d: int, cfg: GaConfig) -> list:
    """Random masks with p=0.5 per bit; individual 0 is the full mask."""
    if d < 1:
        raise BadConfig("need at least one feature")
    rng = RandomStream(cfg.seed, 0)
    pop = [FeatureMask.full(d)]
    for _ in range(cfg.population_size - 1):
        pop.append(FeatureMask(rng.bernoulli(0.5, d)).repaired(rng))
    return pop


def mask_seed(mask: FeatureMask, cfg: GaConfig) -> int:
    return derive_seed(cfg.seed, mask.digest())


def fitness(mask: FeatureMask, ds: Dataset, cfg: GaConfig, cache: FitnessCache | None = None) -> float:
    """Mean stratified CV accuracy of an MLP on the columns selected by ``mask``.

    Fold assignment depends only on ``cfg.seed`` so every mask is scored on
    the same splits; the MLP seed is derived from ``cfg.seed`` and the mask.
    """
    if mask.d != ds.n_features:
        raise BadShape(f"mask has {mask.d} bits, dataset has {ds.n_features} features")
    if mask.popcount == 0:
        raise BadShape("empty feature mask")

    def compute():
        folds = stratified_kfold(ds, cfg.fitness_cv_folds, cfg.seed)
        mlp_cfg = cfg.mlp_cfg.replace(seed=mask_seed(mask, cfg))
        return cv_accuracy(ds.select_features(mask.indices), folds, mlp_cfg)[0]

    if cache is None:
        return compute()
    return cache.get_or_compute(mask, compute)


def tournament_select(population, fitnesses, cfg: GaConfig, rng: RandomStream) -> FeatureMask:
    """Best of ``tournament_size`` draws with replacement; ties go to the lower index."""
    picks = rng.integers(len(population), cfg.tournament_size)
    best = min(picks, key=lambda i: (-fitnesses[i], i))
    return population[best]


def uniform_crossover(a: FeatureMask, b: FeatureMask, cfg: GaConfig, rng: RandomStream):
    """Uniform crossover.  Children may be empty; :func:`mutate` repairs them."""
    if a.d != b.d:
        raise BadShape("parents differ in length")
    if rng.uniform() >= cfg.crossover_rate:
        return a, b
    swap = rng.uniform(a.d) < cfg.per_gene_crossover_p
    return (FeatureMask(np.where(swap, b.bits, a.bits)),
            FeatureMask(np.where(swap, a.bits, b.bits)))


def mutate(mask: FeatureMask, cfg: GaConfig, rng: RandomStream) -> FeatureMask:
    flips = rng.uniform(mask.d) < cfg.rate_for(mask.d)
    return FeatureMask(mask.bits ^ flips).repaired(rng)


def _rank(population, fitnesses):
    return sorted(range(len(population)),
                  key=lambda i: (-fitnesses[i], population[i].sort_key()))


def evolve(ds: Dataset, cfg: GaConfig = GaConfig(), cache: FitnessCache | None = None,
           executor=None):
    """Run the GA and return ``(best_mask, best_fitness, log)``.

    ``log`` holds one :class:`GenerationLog` per bred generation, so
    ``generations=0`` only scores the initial population.  ``executor``
    (anything with a ``map`` method) may score new masks concurrently.
    """
    d = ds.n_features
    cache = FitnessCache() if cache is None else cache
    rng = RandomStream(cfg.seed, 1)

    def score(population):
        fresh = list({m.key: m for m in population if m not in cache}.values())
        if executor is not None and len(fresh) > 1:
            list(executor.map(lambda m: fitness(m, ds, cfg, cache), fresh))
        return [fitness(m, ds, cfg, cache) for m in population]

    def better(a, b):
        return (-a[1], a[0].sort_key()) < (-b[1], b[0].sort_key())

    population = init_population(d, cfg)
    fits = score(population)
    top = _rank(population, fits)[0]
    incumbent = (population[top], fits[top])
    log = []
    for gen in range(1, cfg.generations + 1):
        order = _rank(population, fits)
        children = [population[i] for i in order[:cfg.elite_count]]
        while len(children) < cfg.population_size:
            a = tournament_select(population, fits, cfg, rng)
            b = tournament_select(population, fits, cfg, rng)
            c1, c2 = uniform_crossover(a, b, cfg, rng)
            children.append(mutate(c1, cfg, rng))
            if len(children) < cfg.population_size:
                children.append(mutate(c2, cfg, rng))
        population = children
        fits = score(population)
        top = _rank(population, fits)[0]
        if better((population[top], fits[top]), incumbent):
            incumbent = (population[top], fits[top])
        log.append(GenerationLog(gen, float(fits[top]), float(np.mean(fits)),
                                 population[top].popcount, cache.evaluations))
    return incumbent[0], float(incumbent[1]), log


def write_convergence(log, path) -> None:
    """Per-generation CSV: generation,best_fitness,mean_fitness,best_popcount,evaluations."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_HEADER)
        for e in log:
            w.writerow([e.generation, repr(e.best_fitness), repr(e.mean_fitness),
                        e.best_mask_popcount, e.evaluations_used])


def read_convergence(path) -> list:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CONVERGENCE_HEADER:
            raise BadShape(f"unexpected convergence header {header}")
        return [GenerationLog(int(r[0]), float(r[1]), float(r[2]), int(r[3]), int(r[4]))
                for r in reader if r]
