"""Run traces shared by the online algorithms, with CSV and JSON export."""
import io
import json
import time
from dataclasses import dataclass, field

from ..certify import _plain

CSV_MAGIC = "# supernorm-csv v1"
COLUMNS = ("step", "decision", "objective_value", "feasible", "cumulative_time")


def fmt(v):
    """17 significant digits for floats so CSV values round-trip exactly."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return " ".join(fmt(u) for u in v)
    return str(v)


@dataclass
class TraceStep:
    step: int
    decision: object
    objective_value: float
    feasible: bool
    cumulative_time: float


@dataclass
class RunTrace:
    """Per-step record of one online run.

    ``cumulative_time`` is the algorithm's own clock: continuous time for
    covering, the step count elsewhere.  ``wall_clock`` is kept for callers
    who want it but is never exported, so equal inputs give equal bytes.
    """

    algorithm: str
    seed: int = 0
    steps: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    _t0: float = field(default_factory=time.perf_counter, repr=False, compare=False)

    def record(self, decision, objective_value, feasible=True, cumulative_time=None):
        k = len(self.steps)
        ct = float(k + 1) if cumulative_time is None else float(cumulative_time)
        self.steps.append(TraceStep(k, decision, float(objective_value), bool(feasible), ct))

    def finish(self, **summary):
        self.summary.update(summary)
        self.wall_clock = time.perf_counter() - self._t0
        return self

    @property
    def objective(self):
        return self.steps[-1].objective_value if self.steps else 0.0

    @property
    def feasible(self):
        return all(s.feasible for s in self.steps)

    def rows(self):
        return [(s.step, s.decision, s.objective_value, s.feasible, s.cumulative_time) for s in self.steps]

    def to_dict(self):
        return _plain({
            "algorithm": self.algorithm, "seed": self.seed,
            "steps": [dict(zip(COLUMNS, r)) for r in self.rows()],
            "summary": self.summary,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, config=None):
        return write_csv([(self.seed,) + r for r in self.rows()], config, ("seed",) + COLUMNS)


def write_csv(rows, config=None, columns=COLUMNS):
    """CSV text with the versioned header and an optional config stamp."""
    buf = io.StringIO()
    buf.write(CSV_MAGIC + "\n")
    if config is not None:
        buf.write("# config: " + json.dumps(_plain(config), sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()
