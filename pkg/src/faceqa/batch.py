"""Bounded-concurrency request runner with retries and input-ordered output."""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, TypeVar

from .endpoint import EndpointError, EndpointResponse

log = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class BatchLimits:
    max_concurrency: int = 4
    max_retries: int = 3  # retries after the first attempt
    qps_cap: float | None = None
    backoff_base: float = 0.5  # seconds; doubled per retry
    backoff_cap: float = 30.0
    max_consecutive_failures: int = 20

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class BatchAborted(RuntimeError):
    """Raised after the outcomes produced so far have been yielded."""

    def __init__(self, message: str, completed: int):
        super().__init__(message)
        self.completed = completed


@dataclass
class CallOutcome:
    index: int
    item: object
    response: EndpointResponse | None
    error: EndpointError | None
    attempts: int
    latency_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.response is not None


class RateLimiter:
    def __init__(self, qps: float | None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / qps if qps else 0.0
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.interval
        if start > now:
            self._sleep(start - now)


def _call_with_retry(item, index: int, call: Callable[[object], EndpointResponse],
                     limits: BatchLimits, limiter: RateLimiter, sleep) -> CallOutcome:
    attempt = 0
    while True:
        attempt += 1
        limiter.acquire()
        t0 = time.perf_counter()
        try:
            resp = call(item)
        except EndpointError as e:
            if not e.retryable or attempt > limits.max_retries:
                return CallOutcome(index, item, None, e, attempt)
            delay = min(limits.backoff_cap, limits.backoff_base * 2 ** (attempt - 1))
            log.debug("item %d attempt %d failed (%s); retrying in %.2fs", index, attempt, e, delay)
            if delay > 0:
                sleep(delay)
            continue
        latency = resp.latency_ms
        if latency is None:
            latency = (time.perf_counter() - t0) * 1000.0
        return CallOutcome(index, item, resp, None, attempt, latency)


def run_ordered(items: Iterable[T], call: Callable[[T], EndpointResponse],
                limits: BatchLimits = BatchLimits(), sleep=time.sleep) -> Iterator[CallOutcome]:
    """Call ``call`` on every item with at most ``max_concurrency`` in flight.

    Outcomes are yielded in input order. A fatal (non-retryable) error, or
    ``max_consecutive_failures`` failed items in a row, raises BatchAborted
    once everything before it has been yielded.
    """
    limiter = RateLimiter(limits.qps_cap, sleep=sleep)
    window: deque = deque()
    consecutive = 0
    done = 0
    with ThreadPoolExecutor(max_workers=limits.max_concurrency) as pool:
        it = iter(enumerate(items))
        exhausted = False
        try:
            while True:
                while not exhausted and len(window) < limits.max_concurrency:
                    try:
                        i, item = next(it)
                    except StopIteration:
                        exhausted = True
                        break
                    window.append(pool.submit(_call_with_retry, item, i, call, limits, limiter, sleep))
                if not window:
                    return
                outcome: CallOutcome = window.popleft().result()
                yield outcome
                done += 1
                if outcome.ok:
                    consecutive = 0
                    continue
                if not outcome.error.retryable:
                    raise BatchAborted(f"fatal endpoint error on item {outcome.index}: "
                                       f"{outcome.error}", done)
                consecutive += 1
                if consecutive >= limits.max_consecutive_failures:
                    raise BatchAborted(f"{consecutive} consecutive endpoint failures", done)
        finally:
            for fut in window:
                fut.cancel()
