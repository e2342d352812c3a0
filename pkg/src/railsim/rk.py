"""Adaptive Dormand-Prince 5(4) integrator with dense output.

Seven-stage explicit embedded pair: the 5th-order solution propagates, the
difference to the 4th-order one drives the step-size control, and the last
stage is the first of the next step (FSAL).  A quartic interpolant built
from the same stages provides continuous output inside each step, which the
simulator uses for trace sampling and threshold-crossing bisection.

States are plain tuples of floats; the systems integrated here are small
(a handful of controller states), so scalar arithmetic beats array overhead.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

# Butcher tableau (Dormand & Prince 1980).
_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
# y_new uses the last A row; E is the 5th-minus-4th-order difference.
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# Dense-output polynomial b_i(theta) = theta*(B0 + theta*(B1 + theta*(B2 + theta*B3)));
# quartic continuous extension with minimized error constants.
_BI = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERROR_EXPONENT = -0.2  # -1/(4+1)

State = tuple  # tuple of floats
Rhs = Callable[[float, State], Sequence[float]]


class StepSizeUnderflow(ArithmeticError):
    """The controller drove the step below floating-point resolution."""

    def __init__(self, t: float, y: State):
        super().__init__(f"step size underflow at t={t!r}")
        self.t = t
        self.y = y


def _rms(values: Sequence[float]) -> float:
    return math.sqrt(math.fsum(v * v for v in values) / len(values))


class DormandPrince45:
    """Single-trajectory stepper over [t0, t_bound].

    Call :meth:`step` until ``status == "finished"``; after each accepted
    step ``(t_old, t]`` the interpolant :meth:`dense` is valid on it.
    """

    def __init__(
        self,
        fun: Rhs,
        t0: float,
        y0: Sequence[float],
        t_bound: float,
        rtol: float = 1e-6,
        atol: float = 1e-8,
        max_step: float = math.inf,
        first_step: float | None = None,
    ):
        if t_bound < t0:
            raise ValueError("t_bound must not precede t0")
        if rtol <= 0 or atol <= 0 or max_step <= 0:
            raise ValueError("tolerances and max_step must be positive")
        self.fun = fun
        self.t = t0
        self.y: State = tuple(y0)
        self.t_bound = t_bound
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.t_old = t0
        self.status = "finished" if t_bound == t0 else "running"
        self.nfev = 0
        self._f = self._eval(t0, self.y)
        self._k: tuple[State, ...] = ()
        self._y_old: State = self.y
        self._h_used = 0.0
        if first_step is not None:
            self._h = min(first_step, max_step)
        else:
            self._h = self._initial_step()

    def _eval(self, t: float, y: State) -> State:
        self.nfev += 1
        return tuple(self.fun(t, y))

    def _scale(self, y0: State, y1: State) -> tuple:
        return tuple(
            self.atol + self.rtol * max(abs(a), abs(b)) for a, b in zip(y0, y1)
        )

    def _initial_step(self) -> float:
        # Hairer/Norsett/Wanner starting-step heuristic.
        y0, f0 = self.y, self._f
        span = self.t_bound - self.t
        scale = tuple(self.atol + self.rtol * abs(v) for v in y0)
        d0 = _rms(tuple(v / s for v, s in zip(y0, scale)))
        d1 = _rms(tuple(v / s for v, s in zip(f0, scale)))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span, self.max_step)
        y1 = tuple(y + h0 * f for y, f in zip(y0, f0))
        f1 = self._eval(self.t + h0, y1)
        d2 = _rms(tuple((a - b) / s for a, b, s in zip(f1, f0, scale))) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100.0 * h0, h1, span, self.max_step)

    def step(self) -> None:
        """Advance one accepted step, updating t, y and the interpolant."""
        if self.status != "running":
            raise RuntimeError("stepper is not running")
        t, y0, f0 = self.t, self.y, self._f
        min_h = 10.0 * abs(math.nextafter(t, math.inf) - t)
        if self.t_bound - t <= min_h:
            # Remaining span is below time resolution; close out the segment.
            self.t_old, self.t = t, self.t_bound
            self.status = "finished"
            return
        h = min(self._h, self.max_step, self.t_bound - t)
        rejected = False

        while True:
            if h < min_h or t + h == t:
                raise StepSizeUnderflow(t, y0)
            k = [f0]
            for ci, ai in zip(_C, _A):
                yi = tuple(
                    y + h * math.fsum(a * ks[j] for a, ks in zip(ai, k))
                    for j, y in enumerate(y0)
                )
                k.append(self._eval(t + ci * h, yi))
            y1 = tuple(
                y + h * math.fsum(a * ks[j] for a, ks in zip(_A[-1], k))
                for j, y in enumerate(y0)
            )
            # FSAL stage doubles as the error stage and the next step's k1.
            f1 = self._eval(t + h, y1)
            k.append(f1)
            scale = self._scale(y0, y1)
            err = _rms(
                tuple(
                    h * math.fsum(e * ks[j] for e, ks in zip(_E, k)) / s
                    for j, s in enumerate(scale)
                )
            )
            if err <= 1.0:
                break
            rejected = True
            h *= max(_MIN_FACTOR, _SAFETY * err**_ERROR_EXPONENT)

        factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err**_ERROR_EXPONENT)
        if rejected:
            factor = min(1.0, factor)
        self._h = h * factor

        self.t_old, self.t = t, t + h
        self._y_old = y0
        self.y = y1
        self._f = f1
        self._k = tuple(k)
        self._h_used = h
        if self.t >= self.t_bound:
            self.status = "finished"

    def dense(self, t: float) -> State:
        """Interpolated state at t within the last accepted step."""
        if not self._k:
            raise RuntimeError("no step taken yet")
        h = self._h_used
        theta = (t - self.t_old) / h
        b = [
            theta * (c0 + theta * (c1 + theta * (c2 + theta * c3)))
            for c0, c1, c2, c3 in _BI
        ]
        return tuple(
            y + h * math.fsum(bi * ks[j] for bi, ks in zip(b, self._k))
            for j, y in enumerate(self._y_old)
        )
