"""Reproduction of the published error tables from the bundled corpus.

Each table solves one bundled problem at orders 5, 10 and 15, evaluates
the truncated series at the published points against the closed-form
solution (or, for the damped-oscillation problem, against an adaptive
reference trajectory of the literal model), and compares every cell with
the published value.

Comparison rules: cells printed as 0 must come out exactly 0; cells at or
below 1e-13 sit in the machine-epsilon regime where the published digits
are summation noise, so only the bound |computed| <= 5e-13 is checked;
every other cell must agree to three significant figures.  The reference
table is diagnostic: its reference model is ambiguous, so its per-cell
pass/fail is recorded without gating.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from . import expr as ex
from . import solver
from .reference import RefConfig, rk45_solve

ORDERS = (5, 10, 15)
EPS_REGIME = 1e-13
EPS_BOUND = 5e-13
THREE_SIG_FIGS = 5e-3

CSV_HEADER = "t,unknown,N,abs_error,expected,status"


def format_sci(x: float) -> str:
    """Scientific notation with 10 significant digits."""
    return f"{x:.9e}"


@dataclass(frozen=True)
class Cell:
    t: float
    unknown: str
    order: int
    computed: float
    expected: float
    status: str  # ok | bound | fail


@dataclass
class TableRun:
    name: str
    problem: str
    diagnostic: bool
    cells: list[Cell]

    @property
    def failed(self) -> list[Cell]:
        return [c for c in self.cells if c.status == "fail"]

    @property
    def gates(self) -> bool:
        return not self.diagnostic


# Published absolute errors, keyed (unknown, t, N).  Zero rows are exact.
def _col(unknown, values_by_order):
    out = {}
    points = (0.2, 0.4, 0.6, 0.8, 1.0)
    for order, values in values_by_order.items():
        for t, v in zip(points, values):
            out[(unknown, round(t, 1), order)] = v
    return out


_TABLE2 = {("y", 1.0, n): 0.0 for n in ORDERS}
_TABLE2.update(
    {
        (u, round(1.0 + t, 1), n): v
        for (u, t, n), v in _col(
            "y",
            {
                5: (9.1494e-08, 6.0310e-06, 7.0800e-05, 4.1026e-04, 1.6152e-03),
                10: (6.0021e-16, 1.0869e-12, 9.5652e-11, 2.3048e-09, 2.7313e-08),
                15: (7.9797e-17, 4.1633e-17, 5.5511e-17, 1.4988e-15, 5.1181e-14),
            },
        ).items()
    }
)

_TABLE3 = {("y", 0.0, n): 0.0 for n in ORDERS}
_TABLE3.update(
    _col(
        "y",
        {
            5: (7.3689e-06, 4.5510e-04, 4.8955e-03, 2.5675e-02, 9.0957e-02),
            10: (8.2100e-10, 1.3793e-06, 1.1150e-04, 2.4110e-03, 2.5516e-02),
            15: (9.6316e-11, 2.3291e-08, 3.0230e-06, 2.6524e-04, 8.3823e-03),
        },
    )
)

_TABLE4 = {("y", 0.0, n): 0.0 for n in ORDERS}
_TABLE4.update(
    _col(
        "y",
        {
            5: (2.5383e-09, 3.2436e-07, 5.5266e-06, 4.1242e-05, 1.9568e-04),
            10: (5.5511e-16, 1.0497e-12, 9.0679e-11, 2.1432e-09, 2.4892e-08),
            15: (1.0011e-17, 5.5511e-17, 1.0002e-17, 1.1102e-16, 2.7756e-15),
        },
    )
)

_TABLE5 = {("y", 0.0, n): 0.0 for n in ORDERS}
_TABLE5.update(
    _col(
        "y",
        {
            5: (7.0218e-07, 9.4552e-05, 1.7688e-03, 1.5281e-02, 9.0741e-02),
            10: (1.8451e-10, 3.9753e-07, 3.7649e-05, 1.0280e-03, 1.4903e-02),
            15: (8.0491e-16, 1.0839e-10, 1.1693e-07, 1.7939e-05, 9.9212e-04),
        },
    )
)

_TABLE6 = {(u, 0.0, n): 0.0 for u in ("y1", "y2") for n in ORDERS}
_TABLE6.update(
    _col(
        "y1",
        {
            5: (1.7282e-07, 1.0759e-05, 1.1927e-04, 6.5259e-04, 2.4255e-03),
            10: (1.1102e-15, 2.0333e-12, 1.7309e-10, 4.0337e-09, 4.6229e-08),
            15: (1.0521e-16, 4.4409e-16, 2.2204e-16, 2.5535e-15, 9.0039e-14),
        },
    )
)
_TABLE6.update(
    _col(
        "y2",
        {
            5: (9.1494e-08, 6.0310e-06, 7.0800e-05, 4.1026e-04, 1.6152e-03),
            10: (6.6613e-16, 1.0871e-12, 9.5652e-11, 2.3048e-09, 2.7313e-08),
            15: (2.2204e-16, 2.2204e-16, 2.2204e-16, 1.9984e-15, 5.0848e-14),
        },
    )
)

EXPECTED = {
    "table2": ("ex1", _TABLE2),
    "table3": ("ex2_paper", _TABLE3),
    "table4": ("ex4", _TABLE4),
    "table5": ("ex5", _TABLE5),
    "table6": ("ex7", _TABLE6),
}

# reference model for the diagnostic table: the literal reading of the
# damped-oscillation right-hand side, integrated at the published
# tolerances (abs 1e-12, rel 1e-8)
_DIAGNOSTIC_RHS = "0.1*sin(0.1*y) - 0.1*y^2"


def _judge(computed: float, expected: float) -> str:
    if expected == 0.0:
        return "ok" if computed == 0.0 else "fail"
    if expected <= EPS_REGIME:
        return "bound" if abs(computed) <= EPS_BOUND else "fail"
    if abs(computed - expected) <= THREE_SIG_FIGS * expected:
        return "ok"
    return "fail"


def _judge_factor_two(computed: float, expected: float) -> str:
    if expected == 0.0:
        return "ok" if computed == 0.0 else "fail"
    return "ok" if expected / 2 <= computed <= expected * 2 else "fail"


def run_table(name: str) -> TableRun:
    """Solve the table's problem at every order and judge each cell."""
    problem, expected = EXPECTED[name]
    spec = solver.load_bundled(problem)
    diagnostic = name == "table3"
    if diagnostic:
        rhs = {"y": ex.parse(_DIAGNOSTIC_RHS, ["y"])}
        ref = rk45_solve(
            rhs,
            [spec.init["y"][0]],
            spec.t0,
            max(spec.points),
            spec.points,
            RefConfig(atol=1e-12, rtol=1e-8),
        )
        reference = ref
        judge = _judge_factor_two
    else:
        reference = spec.exact
        judge = _judge

    cells: list[Cell] = []
    for order in ORDERS:
        sol = solver.solve(spec, order=order)
        table = solver.error_table(spec.with_order(order), sol, reference)
        for unknown in spec.unknowns:
            for t, _, _, err in table[unknown]:
                want = expected[(unknown, round(t, 1), order)]
                cells.append(Cell(t, unknown, order, err, want, judge(err, want)))
    cells.sort(key=lambda c: (c.t, c.unknown, c.order))
    return TableRun(name, problem, diagnostic, cells)


def run_all() -> list[TableRun]:
    return [run_table(name) for name in sorted(EXPECTED)]


def write_csv(path: str, run: TableRun) -> None:
    """Deterministic CSV, written atomically."""
    lines = [CSV_HEADER]
    for c in run.cells:
        lines.append(
            f"{c.t!r},{c.unknown},{c.order},"
            f"{format_sci(c.computed)},{format_sci(c.expected)},{c.status}"
        )
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def summary_lines(runs: list[TableRun]) -> tuple[list[str], bool]:
    """Human-readable per-table summary and the overall gate verdict."""
    lines = []
    passed = True
    for run in runs:
        bad = len(run.failed)
        total = len(run.cells)
        tag = " (diagnostic, non-gating)" if run.diagnostic else ""
        verdict = "ok" if bad == 0 else f"{bad} cell(s) outside tolerance"
        lines.append(f"{run.name}: {total - bad}/{total} cells match; {verdict}{tag}")
        if run.gates and bad:
            passed = False
    lines.append(f"overall: {'PASS' if passed else 'FAIL'}")
    return lines, passed
