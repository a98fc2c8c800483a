"""A deterministic, event-time complex-event-processing kernel.

Streams are plain string ids. Patterns subscribe to one input stream, key
incoming events by grid cell, aggregate them over time windows whose ends
lie on the pattern's emit grid, and publish complex events on an output
stream, which may feed further patterns (an acyclic chain).

Emission is watermark-driven: the engine watermark is the maximum event
time seen minus the lateness allowance, and a window [end - window, end)
fires exactly when the watermark reaches its end. There is no other
emission mechanism; "immediate" stages are modelled as short tumbling
windows. Events are never buffered individually: each window keeps a
compensated (Kahan) running sum plus min/max/count, so state is bounded by
the number of open windows.

Determinism contract: identical input sequences produce identical complex
event sequences. Fired events are ordered by firing pass, then pattern
registration order, then key, then window end.
"""

from __future__ import annotations

import heapq
import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Any, Iterable

from .errors import ConfigurationError
from .model import GridCell, is_empty_value

AVG = "AVG"
MIN = "MIN"
MAX = "MAX"
COUNT = "COUNT"
ARGMAX_LEVEL = "ARGMAX_LEVEL"
AGGREGATES = (AVG, MIN, MAX, COUNT, ARGMAX_LEVEL)

_NUMERIC_AGGREGATES = frozenset({AVG, MIN, MAX, COUNT})


@dataclass(frozen=True, slots=True)
class FilterSpec:
    """Admission predicate for a pattern: tag equality, a half-open value
    band [lower, upper), and optional empty-sentinel exclusion."""

    tag: str | None = None
    lower: float | None = None
    upper: float | None = None
    drop_sentinel: bool = False

    def __post_init__(self) -> None:
        if self.lower is not None and self.upper is not None and not self.lower < self.upper:
            raise ConfigurationError(f"filter band must satisfy lower < upper, got [{self.lower}, {self.upper})")

    def accepts(self, value: float, tag: str | None) -> bool:
        if self.tag is not None and tag != self.tag:
            return False
        if self.drop_sentinel and is_empty_value(value):
            return False
        if self.lower is not None and value < self.lower:
            return False
        if self.upper is not None and value >= self.upper:
            return False
        return True


@dataclass(frozen=True)
class PatternSpec:
    """Declarative description of one pattern.

    value_field/tag_field name the attributes read from incoming events;
    extra_payload is copied verbatim into every emitted complex event
    (e.g. the pollutant id or level metadata); tag_priority resolves
    ARGMAX_LEVEL ties (earlier wins).
    """

    name: str
    input_stream: str
    output_stream: str
    window_seconds: float
    emit_seconds: float
    aggregate: str
    value_field: str = "value"
    tag_field: str | None = None
    filter: FilterSpec | None = None
    extra_payload: tuple[tuple[str, Any], ...] = ()
    tag_priority: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigurationError("pattern name must be non-empty")
        if self.aggregate not in AGGREGATES:
            raise ConfigurationError(f"{self.name}: unknown aggregate {self.aggregate!r}")
        if not self.window_seconds > 0:
            raise ConfigurationError(f"{self.name}: window_seconds must be positive")
        if not self.emit_seconds > 0:
            raise ConfigurationError(f"{self.name}: emit_seconds must be positive")
        if self.output_stream == self.input_stream:
            raise ConfigurationError(f"{self.name}: output stream equals input stream {self.input_stream!r}")

    @property
    def sliding(self) -> bool:
        return self.emit_seconds != self.window_seconds


@dataclass(frozen=True, slots=True)
class EngineEvent:
    """The uniform envelope for anything entering the engine: a simple
    event or a chained complex event. `attrs` carries the named values a
    pattern may read (e.g. value/pollutant, or avg/level_number)."""

    stream: str
    epoch_time: float
    cell: GridCell
    attrs: dict[str, Any]


@dataclass(frozen=True, slots=True)
class ComplexEvent:
    pattern: str
    epoch_time: float
    cell: GridCell
    payload: dict[str, Any]


class EngineClock:
    """Monotone event-time frontier: max event time seen minus lateness."""

    __slots__ = ("lateness_seconds", "_max_seen")

    def __init__(self, lateness_seconds: float = 0.0):
        if lateness_seconds < 0:
            raise ConfigurationError("lateness allowance must be non-negative")
        self.lateness_seconds = lateness_seconds
        self._max_seen = -math.inf

    @property
    def watermark(self) -> float:
        if self._max_seen == -math.inf:
            return -math.inf
        return self._max_seen - self.lateness_seconds

    def observe(self, epoch_time: float) -> None:
        if epoch_time > self._max_seen:
            self._max_seen = epoch_time

    def advance_watermark_to(self, target: float) -> None:
        self._max_seen = max(self._max_seen, target + self.lateness_seconds)


class _WindowState:
    """Streaming summary of one window: Kahan sum, min, max, count, and the
    running argmax tag for ARGMAX_LEVEL patterns."""

    __slots__ = ("total", "comp", "count", "vmin", "vmax", "best_rank", "best_tag")

    def __init__(self) -> None:
        self.total = 0.0
        self.comp = 0.0
        self.count = 0
        self.vmin = math.inf
        self.vmax = -math.inf
        self.best_rank: tuple | None = None
        self.best_tag: str | None = None

    def add(self, value: float, rank: tuple | None = None, tag: str | None = None) -> None:
        y = value - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t
        self.count += 1
        if value < self.vmin:
            self.vmin = value
        if value > self.vmax:
            self.vmax = value
        if rank is not None and (self.best_rank is None or rank < self.best_rank):
            self.best_rank = rank
            self.best_tag = tag


class _RuntimePattern:
    __slots__ = ("spec", "index", "buckets", "cells", "heap", "priority_index", "emitted")

    def __init__(self, spec: PatternSpec, index: int):
        self.spec = spec
        self.index = index
        # Hot-path state is keyed by (row, col) int pairs, which hash and
        # compare at C speed; `cells` recovers the GridCell for emission.
        # A pattern's events are assumed to share one grid resolution.
        self.buckets: dict[tuple[int, int], dict[float, _WindowState]] = {}
        self.cells: dict[tuple[int, int], GridCell] = {}
        self.heap: list[tuple[float, int, int]] = []
        self.priority_index = {tag: i for i, tag in enumerate(spec.tag_priority)}
        self.emitted = 0


class Engine:
    """Single-threaded pattern host; see module docstring for semantics.

    One producer feeds on_event; fired complex events are returned to the
    caller synchronously and simultaneously routed to chained patterns.
    Multiple independent Engine instances may run in parallel.
    """

    def __init__(self, lateness_seconds: float = 0.0):
        self.clock = EngineClock(lateness_seconds)
        self.late_events = 0
        self._patterns: list[_RuntimePattern] = []
        self._names: set[str] = set()
        self._next_due = math.inf
        # Per-stream routing tiers, rebuilt on register:
        #   banded: (tag_field, value_field, tag -> (lowers, rps)) groups of
        #     patterns whose filters are disjoint half-open bands over one
        #     tag, dispatched by bisect so a single pattern runs;
        #   tagged: (tag_field, tag -> [rps]) exact-tag dispatch;
        #   linear: everything else, evaluated one by one.
        self._routes: dict[str, tuple[tuple, tuple, tuple]] = {}

    # -- registration -----------------------------------------------------

    def register(self, spec: PatternSpec) -> PatternSpec:
        if spec.name in self._names:
            raise ConfigurationError(f"duplicate pattern name {spec.name!r}")
        edges = [(p.spec.input_stream, p.spec.output_stream) for p in self._patterns]
        edges.append((spec.input_stream, spec.output_stream))
        _check_acyclic(edges)
        rp = _RuntimePattern(spec, len(self._patterns))
        self._patterns.append(rp)
        self._names.add(spec.name)
        self._rebuild_routes()
        return spec

    def _rebuild_routes(self) -> None:
        linear: dict[str, list[_RuntimePattern]] = {}
        groups: dict[tuple[str, str, str, str], list[_RuntimePattern]] = {}
        for rp in self._patterns:
            s = rp.spec
            f = s.filter
            if (f is not None and f.tag is not None and s.tag_field
                    and f.lower is not None and not f.drop_sentinel
                    and s.aggregate != ARGMAX_LEVEL):
                groups.setdefault((s.input_stream, s.tag_field, s.value_field, f.tag), []).append(rp)
            else:
                linear.setdefault(s.input_stream, []).append(rp)
        banded: dict[str, dict] = {}
        for (stream, tag_field, value_field, tag), rps in groups.items():
            rps.sort(key=lambda rp: rp.spec.filter.lower)
            disjoint = len(rps) > 1 and all(
                a.spec.filter.upper is not None and a.spec.filter.upper <= b.spec.filter.lower
                for a, b in zip(rps, rps[1:])
            )
            if disjoint:
                lowers = [rp.spec.filter.lower for rp in rps]
                banded.setdefault(stream, {}).setdefault((tag_field, value_field), {})[tag] = (lowers, rps)
            else:
                linear.setdefault(stream, []).extend(rps)
        self._linear_routes = linear
        self._banded_routes = banded

    def register_all(self, specs: Iterable[PatternSpec]) -> None:
        for spec in specs:
            self.register(spec)

    @property
    def patterns(self) -> list[PatternSpec]:
        return [p.spec for p in self._patterns]

    def emitted_counts(self) -> dict[str, int]:
        return {p.spec.name: p.emitted for p in self._patterns}

    # -- event intake ------------------------------------------------------

    def on_event(self, event: EngineEvent) -> list[ComplexEvent]:
        """Feed one event; returns the complex events whose windows the
        advancing watermark closed. Events older than the lateness
        allowance are counted and dropped."""
        if event.epoch_time < self.clock.watermark:
            self.late_events += 1
            return []
        self.clock.observe(event.epoch_time)
        fired = self._advance(self.clock.watermark)
        self._route(event)
        return fired

    def flush(self, end_time: float = math.inf) -> list[ComplexEvent]:
        """Advance the watermark to end_time and fire everything due; after
        flush(inf) the engine holds no window state."""
        if end_time < self.clock.watermark:
            raise ValueError(f"flush target {end_time} is behind the watermark {self.clock.watermark}")
        self.clock.advance_watermark_to(end_time)
        return self._advance(self.clock.watermark)

    # -- internals ---------------------------------------------------------

    def _route(self, event: EngineEvent) -> None:
        attrs = event.attrs
        by_fields = self._banded_routes.get(event.stream)
        if by_fields is not None:
            for (tag_field, value_field), by_tag in by_fields.items():
                tag = attrs.get(tag_field)
                if tag is None:
                    continue
                group = by_tag.get(tag)
                if group is None:
                    continue
                value = attrs.get(value_field)
                if value is None:
                    continue
                lowers, rps = group
                i = bisect_right(lowers, value) - 1
                if i >= 0:
                    rp = rps[i]
                    upper = rp.spec.filter.upper
                    if upper is None or value < upper:
                        self._insert(rp, event.epoch_time, event.cell, value, None, tag)
        for rp in self._linear_routes.get(event.stream, ()):
            self._apply(rp, event)

    def _apply(self, rp: _RuntimePattern, event: EngineEvent) -> None:
        spec = rp.spec
        try:
            value = event.attrs[spec.value_field]
        except KeyError:
            raise ConfigurationError(
                f"pattern {spec.name!r} reads field {spec.value_field!r} absent from stream {event.stream!r}"
            ) from None
        tag = event.attrs.get(spec.tag_field) if spec.tag_field else None
        if spec.filter is not None and not spec.filter.accepts(value, tag):
            return
        rank = None
        if spec.aggregate == ARGMAX_LEVEL:
            # Max value wins; ties go to the tag earliest in tag_priority.
            idx = rp.priority_index.get(tag, len(rp.priority_index))
            rank = (-value, idx, tag if tag is not None else "")
        self._insert(rp, event.epoch_time, event.cell, value, rank, tag)

    def _insert(self, rp: _RuntimePattern, t: float, cell: GridCell,
                value: float, rank: tuple | None, tag: str | None) -> None:
        spec = rp.spec
        emit = spec.emit_seconds
        first_end = math.floor(t / emit) * emit + emit
        last_end = t + spec.window_seconds
        key = (cell.row, cell.col)
        states = rp.buckets.get(key)
        if states is None:
            states = rp.buckets[key] = {}
            rp.cells[key] = cell
        end = first_end
        while end <= last_end:
            state = states.get(end)
            if state is None:
                state = states[end] = _WindowState()
                heapq.heappush(rp.heap, (end, key[0], key[1]))
                if end < self._next_due:
                    self._next_due = end
            state.add(value, rank, tag)
            end += emit

    def _advance(self, watermark: float) -> list[ComplexEvent]:
        if watermark < self._next_due:
            return []
        fired: list[ComplexEvent] = []
        while True:
            progressed = False
            for rp in self._patterns:
                heap = rp.heap
                if not heap or heap[0][0] > watermark:
                    continue
                due: list[tuple[int, int, float]] = []
                while heap and heap[0][0] <= watermark:
                    end, row, col = heapq.heappop(heap)
                    due.append((row, col, end))
                due.sort()
                progressed = True
                for row, col, end in due:
                    key = (row, col)
                    states = rp.buckets[key]
                    state = states.pop(end)
                    cell = rp.cells[key]
                    if not states:
                        del rp.buckets[key]
                        del rp.cells[key]
                    ce = self._emit(rp, cell, end, state)
                    fired.append(ce)
                    self._route(EngineEvent(rp.spec.output_stream, end, cell, ce.payload))
            if not progressed:
                break
        self._next_due = min((rp.heap[0][0] for rp in self._patterns if rp.heap), default=math.inf)
        return fired

    def _emit(self, rp: _RuntimePattern, cell: GridCell, end: float, state: _WindowState) -> ComplexEvent:
        spec = rp.spec
        if spec.aggregate in _NUMERIC_AGGREGATES:
            # The true mean lies in [min, max]; clamp away the odd 1-ulp
            # excursion of the compensated sum so the invariant holds exactly.
            avg = state.total / state.count
            if avg < state.vmin:
                avg = state.vmin
            elif avg > state.vmax:
                avg = state.vmax
            payload: dict[str, Any] = {
                "avg": avg,
                "min": state.vmin,
                "max": state.vmax,
                "count": state.count,
            }
        else:
            payload = {
                "level": -state.best_rank[0],
                "dominant": state.best_tag,
                "count": state.count,
            }
        payload.update(spec.extra_payload)
        rp.emitted += 1
        return ComplexEvent(spec.name, end, cell, payload)


def _check_acyclic(edges: list[tuple[str, str]]) -> None:
    graph: dict[str, set[str]] = {}
    for src, dst in edges:
        graph.setdefault(src, set()).add(dst)
    visiting: set[str] = set()
    done: set[str] = set()

    def visit(node: str) -> None:
        if node in done:
            return
        if node in visiting:
            raise ConfigurationError(f"pattern streams form a cycle through {node!r}")
        visiting.add(node)
        for nxt in graph.get(node, ()):
            visit(nxt)
        visiting.discard(node)
        done.add(node)

    for src in list(graph):
        visit(src)


def aggregate_window(values: Iterable[float]) -> dict[str, float]:
    """Batch summary of a window's contents: avg (exactly rounded via
    fsum), min, max and count. Raises on empty or non-finite input."""
    vals = list(values)
    if not vals:
        raise ValueError("cannot aggregate an empty window")
    for v in vals:
        if not math.isfinite(v):
            raise ValueError(f"window contains a non-finite value: {v!r}")
    return {
        "avg": math.fsum(vals) / len(vals),
        "min": min(vals),
        "max": max(vals),
        "count": len(vals),
    }


# -- declarative pattern files ---------------------------------------------

def pattern_to_jsonable(spec: PatternSpec) -> dict[str, Any]:
    d: dict[str, Any] = {
        "name": spec.name,
        "input_stream": spec.input_stream,
        "output_stream": spec.output_stream,
        "window_seconds": spec.window_seconds,
        "emit_seconds": spec.emit_seconds,
        "aggregate": spec.aggregate,
        "value_field": spec.value_field,
    }
    if spec.tag_field:
        d["tag_field"] = spec.tag_field
    if spec.filter is not None:
        f = spec.filter
        d["filter"] = {k: v for k, v in
                       (("tag", f.tag), ("lower", f.lower), ("upper", f.upper),
                        ("drop_sentinel", f.drop_sentinel or None)) if v is not None}
    if spec.extra_payload:
        d["payload"] = dict(spec.extra_payload)
    if spec.tag_priority:
        d["tag_priority"] = list(spec.tag_priority)
    return d


def pattern_from_jsonable(d: dict[str, Any]) -> PatternSpec:
    try:
        filt = None
        if "filter" in d:
            f = d["filter"]
            filt = FilterSpec(
                tag=f.get("tag"),
                lower=f.get("lower"),
                upper=f.get("upper"),
                drop_sentinel=bool(f.get("drop_sentinel", False)),
            )
        return PatternSpec(
            name=d["name"],
            input_stream=d["input_stream"],
            output_stream=d["output_stream"],
            window_seconds=float(d["window_seconds"]),
            emit_seconds=float(d["emit_seconds"]),
            aggregate=d["aggregate"],
            value_field=d.get("value_field", "value"),
            tag_field=d.get("tag_field"),
            filter=filt,
            extra_payload=tuple(sorted(d.get("payload", {}).items())),
            tag_priority=tuple(d.get("tag_priority", ())),
        )
    except KeyError as exc:
        raise ConfigurationError(f"pattern definition misses required field {exc}") from None


def save_pattern_specs(path, specs: Iterable[PatternSpec]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([pattern_to_jsonable(s) for s in specs], fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_pattern_specs(path) -> list[PatternSpec]:
    """Load pattern definitions from a declarative JSON file."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ConfigurationError("pattern file must contain a JSON array")
    return [pattern_from_jsonable(d) for d in raw]
