"""Scalar-multiplication accounting for the contraction kernels.

The fast contraction path and the dense reference path both report how many
scalar multiplications they perform, so tests can compare their asymptotic
cost without timing anything.  Counting is off by default and is not
thread-safe; enable it only in single-threaded measurement code.
"""

from __future__ import annotations


class MultiplyCounter:
    """Accumulates scalar-multiplication counts while enabled."""

    def __init__(self):
        self.enabled = False
        self.total = 0

    def add(self, n: int) -> None:
        if self.enabled:
            self.total += n

    def reset(self) -> None:
        self.total = 0


counter = MultiplyCounter()


class count_multiplies:
    """Context manager that enables counting and exposes the tally.

    >>> with count_multiplies() as c:
    ...     pass  # run instrumented code
    >>> c.total
    0
    """

    def __enter__(self):
        self._was_enabled = counter.enabled
        self._start = counter.total
        counter.enabled = True
        return self

    def __exit__(self, *exc):
        counter.enabled = self._was_enabled
        self.total = counter.total - self._start
        return False

    @property
    def so_far(self) -> int:
        return counter.total - self._start
