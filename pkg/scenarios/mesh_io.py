"""Plain-text mesh files.

Layout, one record per line::

    degrees <p> <q>
    knots_xi <n> <k0> ...
    knots_eta <n> <k0> ...
    controls <n>
    <x> <y> <z> <w>            (n lines)
    elements <n>
    <index> <cp0> <cp1> ...    (n lines)
    edge <name> <n> <cp0> ...  (one line per edge)

Floats are written with ``repr`` so that reading returns the identical values.
"""

import logging
from dataclasses import dataclass

import numpy as np

from mechanics.errors import ConfigError
from mechanics.spline_basis import KnotVector, PatchMesh

logger = logging.getLogger(__name__)


def _floats(values):
    return " ".join(repr(float(v)) for v in values)


def _ints(values):
    return " ".join(str(int(v)) for v in values)


@dataclass
class MeshFile:
    degrees: tuple
    knots_xi: np.ndarray
    knots_eta: np.ndarray
    control_points: np.ndarray
    weights: np.ndarray
    connectivity: list
    edges: dict

    @classmethod
    def from_mesh(cls, mesh):
        return cls(
            degrees=mesh.degrees,
            knots_xi=mesh.kv_xi.knots.copy(),
            knots_eta=mesh.kv_eta.knots.copy(),
            control_points=mesh.control_points.copy(),
            weights=mesh.weights.copy(),
            connectivity=[e.connectivity.copy() for e in mesh.elements],
            edges={edge: mesh.boundary_nodes(edge) for edge in mesh.EDGES},
        )

    def to_mesh(self):
        p, q = self.degrees
        mesh = PatchMesh(
            KnotVector(self.knots_xi, p), KnotVector(self.knots_eta, q), self.control_points, self.weights
        )
        rebuilt = [e.connectivity for e in mesh.elements]
        if len(rebuilt) != len(self.connectivity) or any(
            not np.array_equal(a, b) for a, b in zip(rebuilt, self.connectivity)
        ):
            raise ConfigError("mesh file connectivity does not match its knot vectors")
        return mesh

    def dumps(self):
        lines = [
            f"degrees {self.degrees[0]} {self.degrees[1]}",
            f"knots_xi {len(self.knots_xi)} {_floats(self.knots_xi)}",
            f"knots_eta {len(self.knots_eta)} {_floats(self.knots_eta)}",
            f"controls {len(self.weights)}",
        ]
        for point, w in zip(self.control_points, self.weights):
            lines.append(f"{_floats(point)} {repr(float(w))}")
        lines.append(f"elements {len(self.connectivity)}")
        for i, conn in enumerate(self.connectivity):
            lines.append(f"{i} {_ints(conn)}")
        for name, nodes in self.edges.items():
            lines.append(f"edge {name} {len(nodes)} {_ints(nodes)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = iter(text.splitlines())
        try:
            _, p, q = next(lines).split()
            knots = {}
            for key in ("knots_xi", "knots_eta"):
                head, n, *values = next(lines).split()
                if head != key or len(values) != int(n):
                    raise ConfigError(f"malformed {key} record")
                knots[key] = np.array([float(v) for v in values])
            head, n_cp = next(lines).split()
            if head != "controls":
                raise ConfigError("malformed controls record")
            rows = [[float(v) for v in next(lines).split()] for _ in range(int(n_cp))]
            data = np.array(rows).reshape(-1, 4)
            head, n_el = next(lines).split()
            if head != "elements":
                raise ConfigError("malformed elements record")
            connectivity = [np.array([int(v) for v in next(lines).split()[1:]]) for _ in range(int(n_el))]
            edges = {}
            for line in lines:
                if not line.strip():
                    continue
                head, name, n, *nodes = line.split()
                if head != "edge" or len(nodes) != int(n):
                    raise ConfigError(f"malformed edge record: {line!r}")
                edges[name] = np.array([int(v) for v in nodes])
        except (StopIteration, ValueError) as exc:
            raise ConfigError(f"truncated or malformed mesh file: {exc}") from exc
        return cls(
            degrees=(int(p), int(q)),
            knots_xi=knots["knots_xi"],
            knots_eta=knots["knots_eta"],
            control_points=data[:, :3],
            weights=data[:, 3],
            connectivity=connectivity,
            edges=edges,
        )


def write_mesh(path, mesh):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MeshFile.from_mesh(mesh).dumps())
    logger.debug("mesh written to %s", path)


def read_mesh(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read mesh {path}: {exc}") from exc
    return MeshFile.loads(text).to_mesh()
