"""OBJ and OFF reading and writing for a triangulation plus a position field.

Boundary data travels in comment lines that other readers ignore::

    # bparam <vid> <component> <t>
    # param <vid> <u> <v> ...

Vertex ids in these comment lines are 0-based. Floats are written with 17
significant digits so files round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DomainError
from .mesh import Triangulation

_FMT = "%.17g"


def _comment_lines(mesh: Triangulation) -> list[str]:
    lines = [f"# minsurf mesh k={mesh.k}"]
    for vid, p in enumerate(mesh.points):
        lines.append("# param %d " % vid + " ".join(_FMT % x for x in p))
    for vid, c, t in zip(mesh.boundary_vertices, mesh.boundary_component, mesh.boundary_t):
        lines.append(f"# bparam {vid} {c} " + _FMT % t)
    return lines


def write_obj(path, mesh: Triangulation, positions) -> None:
    pos = np.asarray(positions, float)
    lines = _comment_lines(mesh)
    lines += ["v " + " ".join(_FMT % x for x in p) for p in pos]
    lines += ["f " + " ".join(str(i + 1) for i in s) for s in mesh.simplices]
    Path(path).write_text("\n".join(lines) + "\n")


def write_off(path, mesh: Triangulation, positions) -> None:
    pos = np.asarray(positions, float)
    lines = ["OFF", f"{pos.shape[0]} {mesh.ns} 0"]
    lines += [" ".join(_FMT % x for x in p) for p in pos]
    lines += [f"{mesh.k + 1} " + " ".join(str(i) for i in s) for s in mesh.simplices]
    lines += _comment_lines(mesh)
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_comments(comments: list[str], nv: int):
    params: dict[int, list[float]] = {}
    bverts, bcomp, bt = [], [], []
    for c in comments:
        tok = c.split()
        if len(tok) < 2:
            continue
        if tok[1] == "param":
            params[int(tok[2])] = [float(x) for x in tok[3:]]
        elif tok[1] == "bparam":
            if len(tok) != 5:
                raise DomainError(f"malformed bparam line: {c!r}")
            bverts.append(int(tok[2]))
            bcomp.append(int(tok[3]))
            bt.append(float(tok[4]))
    pts = None
    if params:
        if sorted(params) != list(range(nv)):
            raise DomainError("param lines do not cover every vertex")
        pts = np.array([params[i] for i in range(nv)])
    return pts, np.array(bverts, int), np.array(bcomp, int), np.array(bt, float)


def _assemble(pos, faces, comments):
    if not faces or not pos:
        raise DomainError("mesh file has no vertices or no faces")
    if len({len(p) for p in pos}) != 1 or len({len(f) for f in faces}) != 1:
        raise DomainError("ragged vertex or face records")
    pos = np.array(pos, float)
    faces = np.array(faces, int)
    if faces.min() < 0 or faces.max() >= pos.shape[0]:
        raise DomainError("face references a missing vertex")
    pts, bv, bc, bt = _parse_comments(comments, pos.shape[0])
    if pts is None:
        pts = pos[:, : faces.shape[1] - 1]
    if bv.size == 0:
        raise DomainError("file carries no '# bparam' lines")
    return Triangulation(pts, faces, bv, bc, bt), pos


def read_obj(path):
    """Read an OBJ written by :func:`write_obj`; returns ``(mesh, positions)``."""
    pos, faces, comments = [], [], []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line)
        else:
            try:
                if line.startswith("v "):
                    pos.append([float(x) for x in line.split()[1:]])
                elif line.startswith("f "):
                    faces.append([int(tok.split("/")[0]) - 1 for tok in line.split()[1:]])
            except ValueError:
                raise DomainError(f"{path}: malformed line {line!r}") from None
    if not faces:
        raise DomainError(f"{path}: no faces")
    return _assemble(pos, faces, comments)


def read_off(path):
    """Read an OFF written by :func:`write_off`; returns ``(mesh, positions)``."""
    lines = Path(path).read_text().splitlines()
    comments = [ln.strip() for ln in lines if ln.strip().startswith("#")]
    body = [ln.split("#")[0].strip() for ln in lines]
    body = [ln for ln in body if ln]
    if not body or body[0] != "OFF":
        raise DomainError(f"{path}: missing OFF header")
    try:
        nv, nf = (int(x) for x in body[1].split()[:2])
        pos = [[float(x) for x in ln.split()] for ln in body[2:2 + nv]]
        faces = [[int(x) for x in ln.split()[1:]] for ln in body[2 + nv:2 + nv + nf]]
    except (ValueError, IndexError) as exc:
        raise DomainError(f"{path}: malformed OFF ({exc})") from None
    return _assemble(pos, faces, comments)


def read_mesh(path):
    p = str(path).lower()
    if p.endswith(".obj"):
        return read_obj(path)
    if p.endswith(".off"):
        return read_off(path)
    raise DomainError(f"unknown mesh format: {path}")


def write_mesh(path, mesh, positions) -> None:
    p = str(path).lower()
    if p.endswith(".off"):
        write_off(path, mesh, positions)
    else:
        write_obj(path, mesh, positions)
