"""Behavioral simulator of the bi-crossbar / WTA-tree evaluation pipeline.

The two payoff matrices live in a pair of binary crossbars (M and N
transposed) with unary-coded elements: a value v occupies v ON cells out
of the t cells reserved per element, replicated across the I column
sub-groups of that element. Driving row/column groups with a lattice
profile's counts makes the summed cell current an integer multiple of the
objective components, so with every noise knob at zero the simulator
reproduces the exact objective; device spread, WTA offsets, ADC resolution
and read noise then perturb it in controlled ways.

Device physics is deliberately collapsed into a single multiplicative
per-cell deviation frozen at programming time: with the series resistor
dominating the ON current, that spread is the only observable the rest of
the pipeline cares about. Transistor-level behavior is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, DimensionError, InputError, LatticeError
from .game import BimatrixGame
from .lattice import QuantizedProfile

Rng = np.random.Generator

WTA_CELL_LATENCY_NS = 0.08


@dataclass(frozen=True)
class CrossbarConfig:
    """Knobs of the behavioral hardware model.

    ``cells_per_element`` must cover the largest stored payoff (unary
    coding); ``cell_sigma`` is the relative per-cell current spread frozen at
    programming time, ``read_noise_sigma`` an optional cycle-to-cycle spread,
    ``wta_offset`` the relative output error bound of one WTA cell, and
    ``adc_levels`` the resolution of the current measurement (0 = ideal).
    Timing constants are reporting-only.
    """

    intervals: int
    cells_per_element: int
    cell_sigma: float = 0.08
    wta_offset: float = 0.0025
    adc_levels: int = 0
    read_noise_sigma: float = 0.0
    t_read_ns: float = 10.0
    t_logic_ns: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.intervals < 1:
            raise InputError("intervals must be >= 1")
        if self.cells_per_element < 1:
            raise InputError("cells_per_element must be >= 1")
        if self.cell_sigma < 0 or self.wta_offset < 0 or self.read_noise_sigma < 0:
            raise InputError("noise parameters must be nonnegative")
        if self.adc_levels < 0:
            raise InputError("adc_levels must be >= 0 (0 disables quantization)")


class ProgrammedCrossbar:
    """One crossbar holding a matrix with frozen per-cell noise factors.

    For a stored R x C matrix the cell grid is (I*R) x (I*t*C): row group g_r
    holds I replica rows, column group g_c holds I sub-groups of t cells, and
    cell (g_r, r, g_c, s, u) is ON iff u < value[g_r, g_c]. Noise multipliers
    are drawn once at programming time and never change afterwards, so the
    object is immutable and safe to share between concurrent runs.
    """

    def __init__(self, values: np.ndarray, cfg: CrossbarConfig, rng: Rng, label: str):
        values = np.asarray(values, dtype=np.int64)
        if values.max(initial=0) > cfg.cells_per_element:
            raise CapacityError(
                f"{label}: entry {values.max()} exceeds {cfg.cells_per_element} cells per element"
            )
        if values.min(initial=0) < 0:
            raise InputError(f"{label}: stored entries must be nonnegative")
        rows, cols = values.shape
        intervals, t = cfg.intervals, cfg.cells_per_element
        on_pattern = np.arange(t)[None, None, :] < values[:, :, None]  # (R, C, t)
        grid = np.tile(on_pattern[:, :, None, :], (1, 1, intervals, 1)).reshape(
            rows, cols * intervals * t
        )
        grid = np.repeat(grid, intervals, axis=0)

        self.values = values
        self.values.setflags(write=False)
        self.intervals = intervals
        self.cells_per_element = t
        self.label = label
        self.grid = grid
        self.grid.setflags(write=False)
        gains = rng.normal(1.0, cfg.cell_sigma, size=grid.shape) if cfg.cell_sigma > 0 else np.ones(grid.shape)
        np.clip(gains, 0.0, None, out=gains)
        self.gains = gains
        self.gains.setflags(write=False)
        self._conductance = grid * gains
        self._conductance.setflags(write=False)
        self._conductance_sq = self._conductance**2
        self._conductance_sq.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    def _column_mask(self, col_counts: Sequence[int]) -> np.ndarray:
        counts = np.asarray(col_counts, dtype=np.int64)
        if counts.shape != (self.values.shape[1],):
            raise DimensionError(
                f"{self.label}: expected {self.values.shape[1]} column-group counts"
            )
        intervals, t = self.intervals, self.cells_per_element
        sub_on = np.arange(intervals)[None, :] < counts[:, None]  # (C, I)
        return np.repeat(sub_on, t, axis=1).reshape(-1).astype(float)

    def _row_mask(self, row_counts: Sequence[int]) -> np.ndarray:
        counts = np.asarray(row_counts, dtype=np.int64)
        if counts.shape != (self.values.shape[0],):
            raise DimensionError(
                f"{self.label}: expected {self.values.shape[0]} row-group counts"
            )
        replica_on = np.arange(self.intervals)[None, :] < counts[:, None]
        return replica_on.reshape(-1).astype(float)

    def row_group_currents(
        self, col_counts: Sequence[int], read_sigma: float = 0.0, rng: Rng | None = None
    ) -> np.ndarray:
        """Replica-averaged row-group currents with every row activated.

        Noiseless this is exactly ``values @ col_counts`` per group: the
        integer current that, divided by I, gives the matrix-vector product
        against the column player's probabilities.
        """
        mask = self._column_mask(col_counts)
        per_row = self._conductance @ mask
        groups = per_row.reshape(-1, self.intervals).sum(axis=1) / self.intervals
        if read_sigma > 0:
            if rng is None:
                raise InputError("read noise requires an rng")
            variance = (self._conductance_sq @ mask).reshape(-1, self.intervals).sum(axis=1)
            groups = groups + rng.normal(0.0, 1.0, size=groups.shape) * (
                read_sigma * np.sqrt(variance) / self.intervals
            )
        return np.clip(groups, 0.0, None)

    def total_current(
        self,
        row_counts: Sequence[int],
        col_counts: Sequence[int],
        read_sigma: float = 0.0,
        rng: Rng | None = None,
    ) -> float:
        """Summed current with partial row/column activation.

        Noiseless this is exactly ``row_counts @ values @ col_counts``: the
        integer that, divided by I^2, gives the vector-matrix-vector product.
        """
        row_mask = self._row_mask(row_counts)
        col_mask = self._column_mask(col_counts)
        current = float(row_mask @ self._conductance @ col_mask)
        if read_sigma > 0:
            if rng is None:
                raise InputError("read noise requires an rng")
            variance = float(row_mask @ self._conductance_sq @ col_mask)
            current += float(rng.normal(0.0, 1.0)) * read_sigma * math.sqrt(variance)
        return max(current, 0.0)


@dataclass(frozen=True)
class WtaTree:
    """A binary reduction tree of 2-input winner-takes-all cells.

    Each cell forwards max(I1, I2) = min(I1, I2) + |I1 - I2| times a frozen
    relative offset (1 + delta); unused leaf inputs are padded with zero
    current. D inputs need 2^ceil(log2 D) - 1 cells over ceil(log2 D) levels.
    """

    input_count: int
    offsets: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.input_count < 1:
            raise InputError("a WTA tree needs at least one input")
        if len(self.offsets) != self.cell_count:
            raise InputError(
                f"tree over {self.input_count} inputs needs {self.cell_count} cells"
            )

    @property
    def depth(self) -> int:
        return math.ceil(math.log2(self.input_count)) if self.input_count > 1 else 0

    @property
    def cell_count(self) -> int:
        return 2**self.depth - 1

    @classmethod
    def build(cls, input_count: int, wta_offset: float, rng: Rng | None = None) -> "WtaTree":
        if input_count < 1:
            raise InputError("a WTA tree needs at least one input")
        depth = math.ceil(math.log2(input_count)) if input_count > 1 else 0
        cells = 2**depth - 1
        if wta_offset > 0:
            if rng is None:
                raise InputError("nonzero wta_offset requires an rng for the cell draws")
            offsets = tuple(float(x) for x in rng.uniform(-wta_offset, wta_offset, size=cells))
        else:
            offsets = (0.0,) * cells
        return cls(input_count, offsets)


def wta_max(currents: Sequence[float], tree: WtaTree, cfg: CrossbarConfig | None = None) -> float:
    """Reduce a current vector to its maximum through the WTA tree.

    With all cell offsets zero this is the exact maximum; otherwise every
    level scales its winner by its cell's frozen (1 + delta). ``cfg`` is
    accepted for interface symmetry with the phase operations; the offsets
    themselves are device state and live in the tree.
    """
    values = list(float(c) for c in currents)
    if not values:
        raise InputError("wta_max needs at least one input current")
    if len(values) != tree.input_count:
        raise DimensionError(
            f"tree expects {tree.input_count} inputs, got {len(values)}"
        )
    values.extend([0.0] * (2**tree.depth - len(values)))
    cell = 0
    while len(values) > 1:
        reduced = []
        for a, b in zip(values[0::2], values[1::2]):
            reduced.append(max(a, b) * (1.0 + tree.offsets[cell]))
            cell += 1
        values = reduced
    return values[0]


def _adc(value: float, levels: int, full_scale: float) -> float:
    """Uniform quantizer over [0, full_scale]; levels == 0 means ideal."""
    if levels <= 0 or full_scale <= 0:
        return value
    step = full_scale / levels
    return min(max(round(value / step), 0), levels) * step


def program(
    game: BimatrixGame, cfg: CrossbarConfig
) -> tuple[ProgrammedCrossbar, ProgrammedCrossbar]:
    """Program the bi-crossbar pair: M as stored, N transposed.

    Per-cell noise is frozen here from ``cfg.seed``; re-programming with the
    same config reproduces the same device, which is what makes batched runs
    against one simulated chip meaningful.
    """
    if game.max_payoff > cfg.cells_per_element:
        raise CapacityError(
            f"max payoff {game.max_payoff} exceeds {cfg.cells_per_element} cells per element"
        )
    children = np.random.SeedSequence(cfg.seed).spawn(2)
    xbar_m = ProgrammedCrossbar(
        game.m_array, cfg, np.random.Generator(np.random.PCG64(children[0])), "M"
    )
    xbar_nt = ProgrammedCrossbar(
        game.n_array.T, cfg, np.random.Generator(np.random.PCG64(children[1])), "Nt"
    )
    return xbar_m, xbar_nt


def _check_profile(prof: QuantizedProfile, cfg: CrossbarConfig) -> None:
    if prof.intervals != cfg.intervals:
        raise LatticeError(
            f"profile uses I={prof.intervals} but the crossbar is configured for I={cfg.intervals}"
        )


def phase1(
    xbar_m: ProgrammedCrossbar,
    xbar_nt: ProgrammedCrossbar,
    prof: QuantizedProfile,
    cfg: CrossbarConfig,
    wta_m: WtaTree,
    wta_n: WtaTree,
    rng: Rng | None = None,
) -> tuple[float, float]:
    """Estimate the two max components.

    Rows are fully activated (the all-ones drive vector); columns carry the
    opposing strategy's counts, so each row group sums to I times its
    matrix-vector entry. The WTA tree picks the largest group current and the
    measured winner, divided by I, estimates the max term. The two crossbars
    are evaluated independently; no state is shared between them.
    """
    _check_profile(prof, cfg)
    currents_m = xbar_m.row_group_currents(prof.q.counts, cfg.read_noise_sigma, rng)
    currents_n = xbar_nt.row_group_currents(prof.p.counts, cfg.read_noise_sigma, rng)
    full_scale_m = cfg.intervals * cfg.cells_per_element * xbar_m.values.shape[1]
    full_scale_n = cfg.intervals * cfg.cells_per_element * xbar_nt.values.shape[1]
    alpha_hat = _adc(wta_max(currents_m, wta_m, cfg), cfg.adc_levels, full_scale_m)
    beta_hat = _adc(wta_max(currents_n, wta_n, cfg), cfg.adc_levels, full_scale_n)
    return alpha_hat / cfg.intervals, beta_hat / cfg.intervals


def phase2(
    xbar_m: ProgrammedCrossbar,
    xbar_nt: ProgrammedCrossbar,
    prof: QuantizedProfile,
    cfg: CrossbarConfig,
    rng: Rng | None = None,
) -> tuple[float, float]:
    """Estimate the two bilinear components p'Mq and p'Nq.

    Both strategies drive their crossbar at once (counts select replica rows
    and column sub-groups), the summed current is measured, and dividing by
    I^2 recovers the product. The N term reads the transposed crossbar with
    the roles of p and q swapped.
    """
    _check_profile(prof, cfg)
    total_m = xbar_m.total_current(prof.p.counts, prof.q.counts, cfg.read_noise_sigma, rng)
    total_n = xbar_nt.total_current(prof.q.counts, prof.p.counts, cfg.read_noise_sigma, rng)
    scale_sq = cfg.intervals**2
    full_m = float(np.prod(xbar_m.shape))
    full_n = float(np.prod(xbar_nt.shape))
    vmv_m = _adc(total_m, cfg.adc_levels, full_m) / scale_sq
    vmv_n = _adc(total_n, cfg.adc_levels, full_n) / scale_sq
    return vmv_m, vmv_n


def wta_depth_for(game: BimatrixGame) -> int:
    depth_m = math.ceil(math.log2(game.n)) if game.n > 1 else 0
    depth_n = math.ceil(math.log2(game.m)) if game.m > 1 else 0
    return max(depth_m, depth_n)


def iteration_latency_ns(wta_depth: int, cfg: CrossbarConfig) -> float:
    """Modeled latency of one objective evaluation (two reads, WTA, logic)."""
    return 2.0 * cfg.t_read_ns + wta_depth * WTA_CELL_LATENCY_NS + cfg.t_logic_ns


def modeled_time(schedule, wta_depth: int, cfg: CrossbarConfig) -> float:
    """Modeled wall time in seconds for a whole annealing run.

    Purely a reporting model: iterations times the per-iteration latency.
    Only relative comparisons are meaningful; the absolute constants are
    configuration defaults, not measurements.
    """
    return schedule.iterations * iteration_latency_ns(wta_depth, cfg) * 1e-9


class CimBackend:
    """Objective backend that evaluates profiles through the simulator.

    Crossbars and WTA trees are programmed once (noise frozen from
    ``cfg.seed``) and shared; read noise, when enabled, draws from a per-run
    rng so independent runs stay independent. ``spawn`` hands out a sibling
    backend on the same simulated chip with a fresh read-noise stream.
    """

    def __init__(
        self,
        game: BimatrixGame,
        cfg: CrossbarConfig,
        rng: Rng | None = None,
        _shared=None,
    ):
        self.game = game
        self.cfg = cfg
        if _shared is not None:
            self.xbar_m, self.xbar_nt, self.wta_m, self.wta_n = _shared
        else:
            self.xbar_m, self.xbar_nt = program(game, cfg)
            wta_children = np.random.SeedSequence(cfg.seed).spawn(4)[2:]
            self.wta_m = WtaTree.build(
                game.n, cfg.wta_offset, np.random.Generator(np.random.PCG64(wta_children[0]))
            )
            self.wta_n = WtaTree.build(
                game.m, cfg.wta_offset, np.random.Generator(np.random.PCG64(wta_children[1]))
            )
        self.read_rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    def phase1(self, prof: QuantizedProfile) -> tuple[float, float]:
        return phase1(
            self.xbar_m, self.xbar_nt, prof, self.cfg, self.wta_m, self.wta_n, self.read_rng
        )

    def phase2(self, prof: QuantizedProfile) -> tuple[float, float]:
        return phase2(self.xbar_m, self.xbar_nt, prof, self.cfg, self.read_rng)

    def evaluate(self, prof: QuantizedProfile) -> float:
        a, b = self.phase1(prof)
        vm, vn = self.phase2(prof)
        return a + b - vm - vn

    def spawn(self, seed_seq: np.random.SeedSequence) -> "CimBackend":
        return CimBackend(
            self.game,
            self.cfg,
            rng=np.random.Generator(np.random.PCG64(seed_seq)),
            _shared=(self.xbar_m, self.xbar_nt, self.wta_m, self.wta_n),
        )

    @property
    def timing_config(self) -> CrossbarConfig:
        return self.cfg

    @property
    def is_noisy(self) -> bool:
        return self.cfg.cell_sigma > 0 or self.cfg.wta_offset > 0 or self.cfg.adc_levels > 0 or self.cfg.read_noise_sigma > 0
