"""Support-reaction influence lines for continuous beams and moving-load sweeps.

Bridges are prismatic continuous beams with 1 to 4 equal spans on pinned
supports. Support reactions of such a beam do not depend on the flexural
stiffness, so no material or section data is ever needed.

Influence lines are assembled in closed form from the three-moment equation:
for a unit load at local coordinate ``xi`` (0..1) of one span the right-hand
side of the tridiagonal system is a cubic in ``xi``, so solving the system
against the polynomial coefficients gives every interior moment, and hence
every reaction, as an exact cubic per span.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numba import njit, prange

MAX_SPANS = 4

# Letter designation of the supports of each bridge family, keyed by letter.
SUPPORT_ALIASES: dict[str, tuple[int, int]] = {
    "A": (1, 0),
    "B": (2, 0),
    "C": (2, 1),
    "D": (3, 0),
    "E": (3, 1),
    "F": (3, 2),
    "G": (4, 0),
    "H": (4, 1),
    "I": (4, 2),
}


@dataclass(frozen=True)
class BridgeGeometry:
    span_count: int
    span_length: float

    def __post_init__(self):
        if self.span_count not in range(1, MAX_SPANS + 1):
            raise ValueError(f"span_count must be 1..{MAX_SPANS}, got {self.span_count}")
        if not self.span_length > 0 or not math.isfinite(self.span_length):
            raise ValueError(f"span_length must be positive, got {self.span_length}")

    @property
    def support_count(self) -> int:
        return self.span_count + 1

    @property
    def total_length(self) -> float:
        return self.span_count * self.span_length

    def support_positions(self) -> np.ndarray:
        return np.arange(self.support_count) * self.span_length


@dataclass(frozen=True)
class SupportId:
    geometry: BridgeGeometry
    index: int

    def __post_init__(self):
        if not 0 <= self.index <= self.geometry.span_count:
            raise ValueError(
                f"support index {self.index} out of range for a "
                f"{self.geometry.span_count}-span bridge"
            )

    @property
    def letter(self) -> str | None:
        return support_letter(self.geometry.span_count, self.index)

    @property
    def mirror_index(self) -> int:
        return self.geometry.span_count - self.index


def support_letter(span_count: int, index: int) -> str | None:
    """Letter alias of a support, or None for supports without one (e.g. the 4-span end)."""
    for letter, key in SUPPORT_ALIASES.items():
        if key == (span_count, index):
            return letter
    return None


def support_from_letter(letter: str, span_length: float) -> SupportId:
    try:
        n, k = SUPPORT_ALIASES[letter.upper()]
    except KeyError:
        raise ValueError(f"unknown support letter {letter!r}") from None
    return SupportId(BridgeGeometry(n, span_length), k)


@dataclass(frozen=True)
class AxleTrain:
    """Ordered axle loads (kN) and the spacings (m) between consecutive axles.

    Position along the bridge always refers to the first axle in the direction
    of travel; axle ``i`` trails the head by ``offsets[i]``.
    """

    axle_loads: tuple[float, ...]
    axle_spacings: tuple[float, ...] = ()

    def __post_init__(self):
        loads = tuple(float(w) for w in self.axle_loads)
        spacings = tuple(float(s) for s in self.axle_spacings)
        object.__setattr__(self, "axle_loads", loads)
        object.__setattr__(self, "axle_spacings", spacings)
        if not loads:
            raise ValueError("axle train has no axles")
        if len(spacings) != len(loads) - 1:
            raise ValueError(
                f"{len(loads)} axles need {len(loads) - 1} spacings, got {len(spacings)}"
            )
        if any(not w > 0 for w in loads):
            raise ValueError("axle loads must be positive")
        if any(not s > 0 for s in spacings):
            raise ValueError("axle spacings must be positive")

    @property
    def axle_count(self) -> int:
        return len(self.axle_loads)

    @property
    def gvw(self) -> float:
        return math.fsum(self.axle_loads)

    @property
    def length(self) -> float:
        return math.fsum(self.axle_spacings)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.axle_spacings)))

    def reversed(self) -> "AxleTrain":
        return AxleTrain(self.axle_loads[::-1], self.axle_spacings[::-1])

    def scaled(self, factor: float) -> "AxleTrain":
        return AxleTrain(tuple(w * factor for w in self.axle_loads), self.axle_spacings)


@dataclass(frozen=True)
class SweepConfig:
    step: float = 0.01
    directions: Literal["both", "forward"] = "both"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"sweep step must be positive, got {self.step}")
        if self.directions not in ("both", "forward"):
            raise ValueError(f"directions must be 'both' or 'forward', got {self.directions!r}")


@dataclass(frozen=True)
class ReactionEnvelope:
    max_reaction: float
    min_reaction: float
    pos_at_max: float = 0.0
    pos_at_min: float = 0.0
    # "forward" or "reverse": which travel direction produced each extreme
    dir_at_max: str = field(default="forward", compare=False)
    dir_at_min: str = field(default="forward", compare=False)

    def __post_init__(self):
        if self.max_reaction < self.min_reaction:
            raise ValueError("envelope max below min")

    def shifted(self, offset: float) -> "ReactionEnvelope":
        return ReactionEnvelope(
            self.max_reaction + offset,
            self.min_reaction + offset,
            self.pos_at_max,
            self.pos_at_min,
            self.dir_at_max,
            self.dir_at_min,
        )


# --------------------------------------------------------------------------
# influence lines

def _reflect(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the mirrored line: span order reversed and xi -> 1 - xi."""
    c0, c1, c2, c3 = coeffs[::-1].T
    return np.column_stack(
        (
            c0 + c1 + c2 + c3,
            -c1 - 2.0 * c2 - 3.0 * c3,
            c2 + 3.0 * c3,
            -c3,
        )
    )


# unit load at xi in a span; rotation terms of the three-moment equation,
# divided by L^2, at the span's right end and at its left end
_ROT_RIGHT_END = np.array([0.0, 1.0, 0.0, -1.0])  # xi (1 - xi) (1 + xi)
_ROT_LEFT_END = np.array([0.0, 2.0, -3.0, 1.0])  # xi (1 - xi) (2 - xi)
_XI = np.array([0.0, 1.0, 0.0, 0.0])
_ONE_MINUS_XI = np.array([1.0, -1.0, 0.0, 0.0])


def _three_moment_coefficients(span_count: int, support_index: int) -> np.ndarray:
    """Per-span cubic coefficients (power basis in xi) of one reaction influence line."""
    n = span_count
    coeffs = np.zeros((n, 4))
    # normalised interior moments m_i = M_i / L, sagging positive, one row per
    # interior support and one column per polynomial coefficient
    a = 4.0 * np.eye(n - 1) + np.eye(n - 1, k=1) + np.eye(n - 1, k=-1) if n > 1 else None
    for s in range(n):
        m = np.zeros((n + 1, 4))
        if n > 1:
            rhs = np.zeros((n - 1, 4))
            if s >= 1:  # support s is the left end of span s
                rhs[s - 1] -= _ROT_LEFT_END
            if s + 1 <= n - 1:  # support s+1 is the right end of span s
                rhs[s] -= _ROT_RIGHT_END
            m[1:n] = np.linalg.solve(a, rhs)
        k = support_index
        r = np.zeros(4)
        if k >= 1:  # right end of span k-1
            r += m[k - 1] - m[k]
            if s == k - 1:
                r += _XI
        if k <= n - 1:  # left end of span k
            r += m[k + 1] - m[k]
            if s == k:
                r += _ONE_MINUS_XI
        coeffs[s] = r
    return coeffs


@dataclass(frozen=True, eq=False)
class InfluenceLine:
    """Reaction at one support per unit load, as one cubic per span.

    ``coeffs[s]`` holds power-basis coefficients in the local coordinate
    ``xi = x / L - s``. ``mirror_coeffs`` is the line of the mirrored support
    (index ``span_count - k``); both-direction sweeps use it for reverse travel.
    """

    support: SupportId
    coeffs: np.ndarray
    mirror_coeffs: np.ndarray

    @property
    def geometry(self) -> BridgeGeometry:
        return self.support.geometry

    def __call__(self, x):
        return il_value(self, x)

    def mirrored(self) -> "InfluenceLine":
        g = self.geometry
        return InfluenceLine(SupportId(g, g.span_count - self.support.index),
                             self.mirror_coeffs, self.coeffs)

    def derivative_bound(self) -> float:
        """Upper bound of |dIL/dx| over the bridge (per metre)."""
        c = self.coeffs
        bound = np.abs(c[:, 1]) + 2 * np.abs(c[:, 2]) + 3 * np.abs(c[:, 3])
        return float(bound.max()) / self.geometry.span_length

    def samples(self, step: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
        """IL values on the grid 0, step, ..., total_length (end inclusive)."""
        total = self.geometry.total_length
        n = int(math.floor(total / step + 1e-9))
        x = np.arange(n + 1) * step
        if total - x[-1] > 1e-9 * step:
            x = np.append(x, total)
        return x, il_value(self, x)


def build_influence_line(geometry: BridgeGeometry, support_index: int) -> InfluenceLine:
    support = SupportId(geometry, support_index)
    n = geometry.span_count
    # supports right of centre are built as reflections so that mirrored
    # supports share bit-identical coefficient sets
    if support_index <= n - support_index:
        coeffs = _three_moment_coefficients(n, support_index)
        mirror = _reflect(coeffs)
        if support_index == n - support_index:
            mirror = coeffs.copy()
    else:
        mirror = _three_moment_coefficients(n, n - support_index)
        coeffs = _reflect(mirror)
    coeffs.setflags(write=False)
    mirror.setflags(write=False)
    return InfluenceLine(support, coeffs, mirror)


def influence_lines(geometry: BridgeGeometry) -> list[InfluenceLine]:
    return [build_influence_line(geometry, k) for k in range(geometry.support_count)]


@njit(cache=True, inline="always")
def _eval(coeffs, span_length, total, x):
    if x < 0.0 or x > total:
        return 0.0
    u = x / span_length
    s = int(u)
    n = coeffs.shape[0]
    if s >= n:
        s = n - 1
    xi = u - s
    return coeffs[s, 0] + xi * (coeffs[s, 1] + xi * (coeffs[s, 2] + xi * coeffs[s, 3]))


@njit(cache=True)
def _eval_many(coeffs, span_length, total, xs):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _eval(coeffs, span_length, total, xs[i])
    return out


def il_value(il: InfluenceLine, x):
    """IL at load position(s) ``x``; exactly zero off the bridge."""
    g = il.geometry
    arr = np.asarray(x, dtype=float)
    out = _eval_many(il.coeffs, g.span_length, g.total_length, arr.ravel())
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def il_integral(il: InfluenceLine, start: float, stop: float) -> float:
    """Exact integral of the IL over [start, stop] clipped to the bridge (m)."""
    g = il.geometry
    L = g.span_length
    a = max(start, 0.0)
    b = min(stop, g.total_length)
    if b <= a:
        return 0.0
    anti = il.coeffs / np.array([1.0, 2.0, 3.0, 4.0])  # antiderivative, shifted one power
    total = 0.0
    for s in range(g.span_count):
        lo = max(a, s * L)
        hi = min(b, (s + 1) * L)
        if hi <= lo:
            continue
        xl = lo / L - s
        xh = hi / L - s
        total += L * (np.polyval(anti[s, ::-1], xh) * xh - np.polyval(anti[s, ::-1], xl) * xl)
    return float(total)


# --------------------------------------------------------------------------
# loads

def train_reaction(il: InfluenceLine, train: AxleTrain, head_position: float) -> float:
    """Reaction (kN) with the train's first axle at ``head_position``."""
    xs = head_position - train.offsets
    return float(np.dot(np.asarray(train.axle_loads), il_value(il, xs)))


def uniform_reaction(il: InfluenceLine, w: float, start: float, stop: float) -> float:
    """Reaction (kN) from a uniform load ``w`` (kN/m) over [start, stop]."""
    if start > stop:
        raise ValueError(f"uniform load interval reversed: {start} > {stop}")
    if w == 0:
        return 0.0
    return w * il_integral(il, start, stop)


def sweep_grid(total_length: float, train_length: float, step: float) -> np.ndarray:
    """Head positions -D, -D + h, ..., T + D of a full passage (end inclusive)."""
    start = -train_length
    span = total_length + 2.0 * train_length
    n = int(math.floor(span / step + 1e-9))
    x = start + np.arange(n + 1) * step
    if span - n * step > 1e-9 * step:
        x = np.append(x, total_length + train_length)
    return x


@njit(cache=True)
def _train_at(coeffs, span_length, total, loads, offsets, p):
    r = 0.0
    for i in range(loads.shape[0]):
        r += loads[i] * _eval(coeffs, span_length, total, p - offsets[i])
    return r


@njit(cache=True)
def _position(j, n_grid, start, step, end):
    if j >= n_grid:
        return end
    return start + j * step


@njit(cache=True)
def _dense_extrema(coeffs, span_length, total, loads, offsets, step):
    """Evaluate every grid position; reference implementation."""
    d = offsets[offsets.shape[0] - 1]
    start = -d
    width = total + 2.0 * d
    n = int(math.floor(width / step + 1e-9))
    n_grid = n + 1
    has_end = width - n * step > 1e-9 * step
    end = total + d
    last = n_grid + 1 if has_end else n_grid
    vmax = -np.inf
    vmin = np.inf
    jmax = 0
    jmin = 0
    for j in range(last):
        p = _position(j, n_grid, start, step, end)
        r = _train_at(coeffs, span_length, total, loads, offsets, p)
        if r > vmax:
            vmax = r
            jmax = j
        if r < vmin:
            vmin = r
            jmin = j
    return vmax, _position(jmax, n_grid, start, step, end), vmin, _position(jmin, n_grid, start, step, end)


@njit(cache=True)
def _grid_extrema(coeffs, span_length, total, loads, offsets, step):
    """Grid-exact extremes without visiting every grid position.

    Between consecutive breakpoints (an axle crossing a support) the reaction is
    one cubic in the head position, so its extremes over the grid points of that
    piece sit next to the piece ends or next to a root of the derivative. Only
    those candidates are evaluated, with the same arithmetic as the dense sweep.
    """
    m = loads.shape[0]
    n_spans = coeffs.shape[0]
    d = offsets[m - 1]
    start = -d
    width = total + 2.0 * d
    n = int(math.floor(width / step + 1e-9))
    n_grid = n + 1
    has_end = width - n * step > 1e-9 * step
    end = total + d
    last_j = n_grid if has_end else n_grid - 1

    bps = np.empty(m * (n_spans + 1) + 2)
    c = 0
    bps[c] = start
    c += 1
    bps[c] = end
    c += 1
    for i in range(m):
        for k in range(n_spans + 1):
            bps[c] = offsets[i] + k * span_length
            c += 1
    bps = np.sort(bps)

    vmax = -np.inf
    vmin = np.inf
    jmax = 0
    jmin = 0
    cand = np.empty(16, dtype=np.int64)
    for q in range(bps.shape[0] - 1):
        a = bps[q]
        b = bps[q + 1]
        if b < start or a > end or b - a <= 0.0:
            continue
        k_lo = int(math.ceil((a - start) / step)) - 1
        k_hi = int(math.floor((b - start) / step)) + 1
        if k_lo < 0:
            k_lo = 0
        if k_hi > last_j:
            k_hi = last_j
        if k_hi < k_lo:
            continue
        nc = 0
        cand[nc] = k_lo
        nc += 1
        cand[nc] = k_hi
        nc += 1
        if k_lo + 1 <= k_hi:
            cand[nc] = k_lo + 1
            nc += 1
            cand[nc] = k_hi - 1
            nc += 1
        # derivative of the piece cubic in t = p - a
        mid = 0.5 * (a + b)
        qa = 0.0
        qb = 0.0
        qc = 0.0
        for i in range(m):
            y = mid - offsets[i]
            if y < 0.0 or y > total:
                continue
            s = int(y / span_length)
            if s >= n_spans:
                s = n_spans - 1
            xi0 = (a - offsets[i]) / span_length - s
            c1 = coeffs[s, 1]
            c2 = coeffs[s, 2]
            c3 = coeffs[s, 3]
            w = loads[i]
            qa += w * 3.0 * c3 / span_length ** 3
            qb += w * (2.0 * c2 + 6.0 * c3 * xi0) / span_length ** 2
            qc += w * (c1 + 2.0 * c2 * xi0 + 3.0 * c3 * xi0 * xi0) / span_length
        roots = np.empty(2)
        nr = 0
        if qa != 0.0:
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0.0:
                sq = math.sqrt(disc)
                qq = -0.5 * (qb + sq) if qb >= 0.0 else -0.5 * (qb - sq)
                if qq != 0.0:
                    roots[nr] = qq / qa
                    nr += 1
                    roots[nr] = qc / qq
                    nr += 1
                else:
                    roots[nr] = 0.0
                    nr += 1
        elif qb != 0.0:
            roots[nr] = -qc / qb
            nr += 1
        for r in range(nr):
            t = roots[r]
            if not (t >= 0.0 and t <= b - a):
                continue
            kr = int(math.floor((a + t - start) / step))
            for dk in range(-1, 3):
                kk = kr + dk
                if kk >= k_lo and kk <= k_hi and nc < 16:
                    cand[nc] = kk
                    nc += 1
        for ci in range(nc):
            j = cand[ci]
            p = _position(j, n_grid, start, step, end)
            v = _train_at(coeffs, span_length, total, loads, offsets, p)
            if v > vmax or (v == vmax and j < jmax):
                vmax = v
                jmax = j
            if v < vmin or (v == vmin and j < jmin):
                vmin = v
                jmin = j
    return vmax, _position(jmax, n_grid, start, step, end), vmin, _position(jmin, n_grid, start, step, end)


@njit(cache=True)
def _merge(fwd, rev):
    """Combine forward/reverse extremes; ties go to the smaller position, then forward."""
    fmax, fpmax, fmin, fpmin = fwd
    rmax, rpmax, rmin, rpmin = rev
    if rmax > fmax or (rmax == fmax and rpmax < fpmax):
        vmax, pmax, dmax = rmax, rpmax, 1
    else:
        vmax, pmax, dmax = fmax, fpmax, 0
    if rmin < fmin or (rmin == fmin and rpmin < fpmin):
        vmin, pmin, dmin = rmin, rpmin, 1
    else:
        vmin, pmin, dmin = fmin, fpmin, 0
    return vmax, pmax, vmin, pmin, dmax, dmin


@njit(cache=True)
def _sweep_one(coeffs, mirror, span_length, total, loads, offsets, step, both, dense):
    if dense:
        fwd = _dense_extrema(coeffs, span_length, total, loads, offsets, step)
    else:
        fwd = _grid_extrema(coeffs, span_length, total, loads, offsets, step)
    if not both:
        return fwd[0], fwd[1], fwd[2], fwd[3], 0, 0
    # reverse travel on support k is forward travel on the mirrored support,
    # with positions measured from the entry end of that travel direction
    if dense:
        rev = _dense_extrema(mirror, span_length, total, loads, offsets, step)
    else:
        rev = _grid_extrema(mirror, span_length, total, loads, offsets, step)
    return _merge(fwd, rev)


_DIRS = ("forward", "reverse")


def sweep_envelope(
    il: InfluenceLine,
    train: AxleTrain,
    cfg: SweepConfig = SweepConfig(),
    method: Literal["exact", "dense"] = "exact",
) -> ReactionEnvelope:
    """Extreme reactions of a full passage of ``train`` on the step grid.

    ``method="dense"`` evaluates every grid position and serves as the
    reference; ``"exact"`` returns the same grid extremes from piecewise-cubic
    candidates and is independent of the number of grid points.
    """
    if not isinstance(train, AxleTrain):
        raise TypeError("train must be an AxleTrain")
    g = il.geometry
    loads = np.asarray(train.axle_loads, dtype=float)
    offsets = train.offsets
    vmax, pmax, vmin, pmin, dmax, dmin = _sweep_one(
        il.coeffs, il.mirror_coeffs, g.span_length, g.total_length, loads, offsets,
        float(cfg.step), cfg.directions == "both", method == "dense",
    )
    return ReactionEnvelope(vmax, vmin, pmax, pmin, _DIRS[dmax], _DIRS[dmin])


def refinement_bound(il: InfluenceLine, train: AxleTrain, step: float) -> float:
    """Largest change of a grid extreme when the step is refined (kN)."""
    return max(train.axle_loads) * train.axle_count * il.derivative_bound() * step


def pack_trains(trains: Sequence[AxleTrain]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten trains into (loads, offsets, index pointer) arrays for batch kernels."""
    counts = np.fromiter((t.axle_count for t in trains), dtype=np.int64, count=len(trains))
    ptr = np.zeros(len(trains) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    loads = np.empty(ptr[-1])
    offsets = np.empty(ptr[-1])
    for t, lo, hi in zip(trains, ptr[:-1], ptr[1:]):
        loads[lo:hi] = t.axle_loads
        offsets[lo:hi] = t.offsets
    return loads, offsets, ptr


@njit(cache=True, parallel=True)
def _sweep_batch(coeffs, mirror, span_length, total, loads, offsets, ptr, step, both, dense):
    n = ptr.shape[0] - 1
    out = np.empty((n, 4))
    dirs = np.empty((n, 2), dtype=np.int64)
    for v in prange(n):
        lo = ptr[v]
        hi = ptr[v + 1]
        # offsets are stored per vehicle starting at 0
        r = _sweep_one(coeffs, mirror, span_length, total, loads[lo:hi], offsets[lo:hi],
                       step, both, dense)
        out[v, 0] = r[0]
        out[v, 1] = r[2]
        out[v, 2] = r[1]
        out[v, 3] = r[3]
        dirs[v, 0] = r[4]
        dirs[v, 1] = r[5]
    return out, dirs


def sweep_many(il: InfluenceLine, trains: Sequence[AxleTrain], cfg: SweepConfig = SweepConfig(),
               jobs: int | None = None, method: Literal["exact", "dense"] = "exact") -> np.ndarray:
    """Envelopes of many trains as an (n, 4) array: max, min, pos_at_max, pos_at_min.

    Each row is computed independently, so the result does not depend on ``jobs``.
    ``method`` is as for :func:`sweep_envelope`.
    """
    if method not in ("exact", "dense"):
        raise ValueError(f"method must be 'exact' or 'dense', got {method!r}")
    import numba

    if not trains:
        return np.empty((0, 4))
    loads, offsets, ptr = pack_trains(trains)
    g = il.geometry
    prev = numba.get_num_threads()
    if jobs is not None:
        numba.set_num_threads(max(1, min(int(jobs), numba.config.NUMBA_NUM_THREADS)))
    try:
        out, _ = _sweep_batch(il.coeffs, il.mirror_coeffs, g.span_length, g.total_length,
                              loads, offsets, ptr, float(cfg.step), cfg.directions == "both",
                              method == "dense")
    finally:
        numba.set_num_threads(prev)
    return out
