"""Text formats for grid functions, curves, regions, measures, and rays.

GridFunction record (bit-exact round trip for finite doubles; values use
Python float repr, -inf is the literal token ``-inf``)::

    gridfunction 1
    dim <n>
    lower <a1> [a2]
    upper <b1> [b2]
    nodes <m1> [m2]
    values
    <one value per line, row-major>

TestCurve file: a ``testcurve 1`` header with the lambda grid, head and
critical values, followed by one GridFunction record per lambda.

Weight-data file::

    weightdata 1
    dim <n>
    point <coords...> <integer weight>     (one line per degree-1 point)
"""

from __future__ import annotations

import numpy as np

from .curves import TestCurve
from .errors import ParseError
from .filtration import WeightedLatticeData
from .grids import Box, ConvexGridFunction, Grid, GridFunction, NEG_INF
from .legendre import SlopeRegion
from .monge_ampere import DiscreteMeasure


def _fmt(x: float) -> str:
    return "-inf" if x == NEG_INF else repr(float(x))


def _parse_float(tok: str, line: int) -> float:
    if tok == "-inf":
        return NEG_INF
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad float {tok!r}", line=line) from None


def dump_grid_function(f: GridFunction) -> str:
    g = f.grid
    lines = [
        "gridfunction 1",
        f"dim {g.dim}",
        "lower " + " ".join(repr(v) for v in g.box.lower),
        "upper " + " ".join(repr(v) for v in g.box.upper),
        "nodes " + " ".join(str(m) for m in g.nodes_per_axis),
        "values",
    ]
    lines.extend(_fmt(v) for v in f.values.ravel())
    return "\n".join(lines) + "\n"


class _Cursor:
    def __init__(self, lines: list[str], pos: int = 0):
        self.lines = lines
        self.pos = pos

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise ParseError("unexpected end of input", line=self.pos)

    def expect(self, keyword: str) -> list[str]:
        line = self.next()
        parts = line.split()
        if parts[0] != keyword:
            raise ParseError(f"expected {keyword!r}, got {parts[0]!r}", line=self.pos)
        return parts[1:]


def _parse_grid_function(cur: _Cursor) -> GridFunction:
    cur.expect("gridfunction")
    dim = int(cur.expect("dim")[0])
    lower = tuple(_parse_float(t, cur.pos) for t in cur.expect("lower"))
    upper = tuple(_parse_float(t, cur.pos) for t in cur.expect("upper"))
    nodes = tuple(int(t) for t in cur.expect("nodes"))
    if len(lower) != dim or len(upper) != dim or len(nodes) != dim:
        raise ParseError("header lengths disagree with dim", line=cur.pos)
    cur.expect("values")
    grid = Grid(Box(lower, upper), nodes)
    vals = np.empty(grid.num_nodes)
    for i in range(grid.num_nodes):
        vals[i] = _parse_float(cur.next(), cur.pos)
    return GridFunction(grid, vals.reshape(grid.shape))


def load_grid_function(text: str) -> GridFunction:
    return _parse_grid_function(_Cursor(text.splitlines()))


def dump_test_curve(tc: TestCurve) -> str:
    lines = [
        "testcurve 1",
        "lambdas " + " ".join(repr(float(v)) for v in tc.lambdas),
        f"lambda_head {repr(float(tc.lambda_head))}",
        f"lambda_c {repr(float(tc.lambda_c))}",
    ]
    body = "".join(dump_grid_function(s) for s in tc.samples)
    return "\n".join(lines) + "\n" + body


def load_test_curve(text: str) -> TestCurve:
    cur = _Cursor(text.splitlines())
    cur.expect("testcurve")
    lambdas = np.array([_parse_float(t, cur.pos) for t in cur.expect("lambdas")])
    head = _parse_float(cur.expect("lambda_head")[0], cur.pos)
    lc = _parse_float(cur.expect("lambda_c")[0], cur.pos)
    samples = tuple(
        ConvexGridFunction.trusted(_parse_grid_function(cur)) for _ in lambdas
    )
    return TestCurve(lambdas, samples, lambda_head=head, lambda_c=lc)


def dump_slope_region(region: SlopeRegion) -> str:
    g = region.grid
    lines = [
        "sloperegion 1",
        f"dim {g.dim}",
        "lower " + " ".join(repr(v) for v in g.box.lower),
        "upper " + " ".join(repr(v) for v in g.box.upper),
        "nodes " + " ".join(str(m) for m in g.nodes_per_axis),
        "mask " + "".join("1" if b else "0" for b in region.mask.ravel()),
    ]
    return "\n".join(lines) + "\n"


def load_slope_region(text: str) -> SlopeRegion:
    cur = _Cursor(text.splitlines())
    cur.expect("sloperegion")
    dim = int(cur.expect("dim")[0])
    lower = tuple(_parse_float(t, cur.pos) for t in cur.expect("lower"))
    upper = tuple(_parse_float(t, cur.pos) for t in cur.expect("upper"))
    nodes = tuple(int(t) for t in cur.expect("nodes"))
    bits = cur.expect("mask")[0]
    grid = Grid(Box(lower, upper), nodes)
    if len(bits) != grid.num_nodes:
        raise ParseError("mask length disagrees with grid", line=cur.pos)
    mask = np.array([c == "1" for c in bits]).reshape(grid.shape)
    return SlopeRegion(grid, mask)


def dump_measure_csv(mu: DiscreteMeasure) -> str:
    coords = mu.grid.coords()
    header = "index," + ",".join(f"x{i}" for i in range(mu.grid.dim)) + ",mass"
    rows = [header]
    for i, (c, m) in enumerate(zip(coords, mu.masses.ravel())):
        rows.append(f"{i}," + ",".join(repr(v) for v in c) + f",{repr(float(m))}")
    return "\n".join(rows) + "\n"


def dump_ray_csv(ray) -> str:
    coords = ray.grid.coords()
    header = "t," + ",".join(f"x{i}" for i in range(ray.grid.dim)) + ",value"
    rows = [header]
    for t, fr in zip(ray.t_grid, ray.frames):
        for c, v in zip(coords, fr.values.ravel()):
            rows.append(f"{repr(float(t))}," + ",".join(repr(x) for x in c) + f",{_fmt(v)}")
    return "\n".join(rows) + "\n"


def dump_weight_data(data: WeightedLatticeData) -> str:
    lines = ["weightdata 1", f"dim {data.dim}"]
    for p, w in zip(data.points, data.weights):
        lines.append("point " + " ".join(str(int(c)) for c in p) + f" {int(w)}")
    return "\n".join(lines) + "\n"


def load_weight_data(text: str) -> WeightedLatticeData:
    cur = _Cursor(text.splitlines())
    cur.expect("weightdata")
    dim = int(cur.expect("dim")[0])
    pts, ws = [], []
    while True:
        try:
            line = cur.next()
        except ParseError:
            break
        parts = line.split()
        if parts[0] != "point" or len(parts) != dim + 2:
            raise ParseError(f"bad point line {line!r}", line=cur.pos)
        pts.append([int(v) for v in parts[1 : 1 + dim]])
        ws.append(int(parts[-1]))
    if not pts:
        raise ParseError("no points in weight data", line=cur.pos)
    return WeightedLatticeData(np.array(pts), np.array(ws))


def dump_histogram_csv(vals, counts, cum) -> str:
    rows = ["lambda,dim_V,dim_F"]
    for v, c, f in zip(vals, counts, cum):
        rows.append(f"{int(v)},{int(c)},{int(f)}")
    return "\n".join(rows) + "\n"
