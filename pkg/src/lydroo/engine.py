"""Per-frame decision schemes and the simulation loop."""

from __future__ import annotations

import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .actor import PolicyNetwork, QuantizerState, features, nop_candidates, update_Mt
from .allocator import DEFAULT_OPTIONS, AllocatorOptions, _solve, evaluate_actions, lyapunov_problem, myopic_problem
from .config import FrameInput, FrameRecord, OffloadAction, ResourceAllocation, SystemConfig, check_allocation
from .environment import STREAM_DNN_INIT, STREAM_QUANTIZER, STREAM_REPLAY, Environment, mean_gain, substreams
from .learner import Trainer, TrainerConfig, maybe_train
from .queueing import QueueState, frame_rate_energy, update_queues
from .search import coordinate_descent_best, exhaustive_best

SCHEMES = ("lydroo", "lycd", "myopic", "exhaustive")
MYOPIC_EXHAUSTIVE_MAX_WD = 12


class FeasibilityError(RuntimeError):
    """An executed allocation broke a per-frame constraint."""


@dataclass
class Decision:
    action: OffloadAction
    allocation: ResourceAllocation
    objective: float
    candidate_count: int | None = None
    best_index: int | None = None
    best_order: int | None = None


class Scheme:
    name = ""

    def __init__(self, cfg: SystemConfig, opts: AllocatorOptions = DEFAULT_OPTIONS):
        self.cfg = cfg
        self.opts = opts

    def decide(self, xi: FrameInput, t: int) -> Decision:
        raise NotImplementedError

    def learn(self, t: int) -> float | None:
        """Post-decision update; returns a training loss when one was computed."""
        return None

    def observe(self, power: np.ndarray) -> None:
        """Told the power actually spent in the frame just executed."""

    def close(self) -> None:
        pass


class ExhaustiveScheme(Scheme):
    name = "exhaustive"

    def decide(self, xi, t):
        x, y, G = exhaustive_best(xi, self.cfg, self.opts)
        return Decision(x, y, G)


class LyCDScheme(Scheme):
    name = "lycd"

    def decide(self, xi, t):
        x, y, G = coordinate_descent_best(xi, self.cfg, self.opts)
        return Decision(x, y, G)


class MyopicScheme(Scheme):
    """Per-frame weighted-rate maximization under a running energy budget.

    Frame t may spend at most t*gamma_i minus everything spent before;
    backlogs only enter as the data-causality cap.
    """

    name = "myopic"

    def __init__(self, cfg, opts=DEFAULT_OPTIONS):
        super().__init__(cfg, opts)
        self.spent = np.zeros(cfg.n_wd)

    def budgets(self, t: int) -> np.ndarray:
        return np.maximum(t * self.cfg.power_thresholds * self.cfg.frame_duration - self.spent, 0.0)

    def decide(self, xi, t):
        problem = myopic_problem(xi, self.budgets(t), self.cfg)
        if self.cfg.n_wd <= MYOPIC_EXHAUSTIVE_MAX_WD:
            x, y, G = exhaustive_best(xi, self.cfg, self.opts, problem=problem)
        else:
            x, y, G = coordinate_descent_best(xi, self.cfg, self.opts, problem=problem)
        return Decision(x, y, G)

    def observe(self, power):
        self.spent = self.spent + np.asarray(power) * self.cfg.frame_duration


class LyDROOScheme(Scheme):
    """DNN actor + allocation critic + replay-memory policy update.

    With ``concurrent=True`` training runs on a worker thread against a
    shadow copy of the network; the actor picks up the newest finished
    parameters at the start of each frame. Sequential mode (the default)
    trains inline and is fully reproducible.
    """

    name = "lydroo"

    def __init__(self, cfg, opts=DEFAULT_OPTIONS, seed: int = 0, tcfg: TrainerConfig | None = None,
                 mt_interval: int = 32, scaled_init: bool = True, train: bool = True,
                 concurrent: bool = False):
        super().__init__(cfg, opts)
        streams = substreams(seed)
        self.net = PolicyNetwork(cfg.n_wd, streams[STREAM_DNN_INIT], scaled_init=scaled_init)
        self.noise_rng = streams[STREAM_QUANTIZER]
        self.tcfg = tcfg or TrainerConfig()
        self.trainer = Trainer(self.net, self.tcfg, streams[STREAM_REPLAY])
        self.quantizer = QuantizerState(cfg.n_wd, mt_interval)
        self.ref_gain = mean_gain(cfg.distances)
        self._bit_weights = 1 << np.arange(cfg.n_wd - 1, -1, -1, dtype=np.int64)
        self.train = train
        self._pending = None
        self.last_candidates = None
        if concurrent:
            self._learner_net = self.net.copy()
            self._pool = ThreadPoolExecutor(max_workers=1)
            self._future: Future | None = None
            self._fresh_loss = None
        else:
            self._pool = None

    def decide(self, xi, t):
        if self._pool is not None:
            self._collect(block=False)
        if t % self.quantizer.interval == 0:
            update_Mt(self.quantizer)
        feats = features(xi, self.ref_gain)
        xhat = self.net.forward(feats)
        count = self.quantizer.count
        candidates = nop_candidates(xhat, count, self.noise_rng)
        # Deduplicate on the integer code of each row; m_t still indexes the full list.
        codes = candidates.astype(np.int64) @ self._bit_weights
        _, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        problem = lyapunov_problem(xi, self.cfg)
        values = evaluate_actions(candidates[first], problem, self.opts)[inverse]
        best = int(np.argmax(values))
        best_order = best % (count // 2)
        x = candidates[best]
        y, G = _solve(x, problem, self.opts, None)
        self.quantizer.record(best_order)
        self._pending = (feats, x)
        self.last_candidates = candidates
        return Decision(OffloadAction(x), y, G, count, best, best_order)

    def learn(self, t):
        feats, x = self._pending
        self.trainer.memory.store(feats, x)
        if not self.train:
            return None
        if self._pool is None:
            _, loss = maybe_train(self.trainer, self.net, t)
            return loss
        if self.trainer.should_train(t):
            self._collect(block=True)
            X, labels = self.trainer.memory.sample(self.tcfg.batch_size, self.trainer.rng)
            self._future = self._pool.submit(self.trainer.train_step, self._learner_net, X, labels)
        loss, self._fresh_loss = self._fresh_loss, None
        return loss

    def _collect(self, block: bool) -> None:
        """Publish the learner's parameters once its last step has finished."""
        fut = self._future
        if fut is None or (not block and not fut.done()):
            return
        self._fresh_loss = fut.result()
        self._future = None
        self.net = self._learner_net.copy()

    def close(self):
        if self._pool is not None:
            self._collect(block=True)
            self._pool.shutdown(wait=True)


def make_scheme(name: str, cfg: SystemConfig, seed: int = 0, opts: AllocatorOptions = DEFAULT_OPTIONS,
                **lydroo_kwargs) -> Scheme:
    if name == "lydroo":
        return LyDROOScheme(cfg, opts, seed=seed, **lydroo_kwargs)
    if name == "lycd":
        return LyCDScheme(cfg, opts)
    if name == "myopic":
        return MyopicScheme(cfg, opts)
    if name == "exhaustive":
        return ExhaustiveScheme(cfg, opts)
    raise ValueError(f"unknown scheme {name!r}; expected one of {SCHEMES}")


def step(scheme: Scheme, env: Environment, queues: QueueState, t: int, cfg: SystemConfig):
    """Run frame ``t``: observe, decide, execute, update queues."""
    if t < 1:
        raise ValueError("frames are numbered from 1")
    h = env.sample_channels()
    xi = FrameInput(h, queues.data_queue, queues.energy_queue)
    start = time.perf_counter()
    decision = scheme.decide(xi, t)
    elapsed = time.perf_counter() - start
    loss = scheme.learn(t)
    x = decision.action.bits
    problems = check_allocation(x, decision.allocation, cfg, queues.data_queue)
    if problems:
        raise FeasibilityError(f"frame {t}, scheme {scheme.name}: {'; '.join(problems)}")
    rate, power = frame_rate_energy(x, decision.allocation, h, cfg)
    processed = rate * cfg.frame_duration
    arrivals = env.sample_arrivals()
    new_queues = update_queues(queues, processed, power, arrivals, cfg)
    scheme.observe(power)
    record = FrameRecord(
        frame_index=t,
        channel=h,
        data_queue=queues.data_queue,
        energy_queue=queues.energy_queue,
        action=decision.action,
        allocation=decision.allocation,
        processed=processed,
        energy=power * cfg.frame_duration,
        arrivals=arrivals,
        objective=decision.objective,
        candidate_count=decision.candidate_count,
        best_index=decision.best_index,
        best_order=decision.best_order,
        loss=loss,
        decide_seconds=elapsed,
    )
    return record, new_queues


def simulate(scheme: Scheme, cfg: SystemConfig, frames: int, seed: int = 0, progress=None) -> list[FrameRecord]:
    """Run ``frames`` frames from empty queues; channel/arrival draws depend only on ``seed``."""
    env = Environment(cfg, seed)
    queues = QueueState.initial(cfg.n_wd)
    records = []
    try:
        for t in range(1, frames + 1):
            record, queues = step(scheme, env, queues, t, cfg)
            records.append(record)
            if progress is not None:
                progress(t, record)
    finally:
        scheme.close()
    return records
