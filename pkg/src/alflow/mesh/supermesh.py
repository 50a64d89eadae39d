"""Triangle intersection and supermeshes of two non-nested triangulations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .triangulation import Triangulation

SLIVER = 1e-14


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def triangle_intersection(a, b) -> np.ndarray:
    """Intersection of two positively oriented triangles as a CCW polygon.

    Successive half-plane clipping of ``a`` by the edges of ``b``. Returns an
    array of shape ``(m, 2)``; ``m == 0`` when the overlap has measure below
    ``1e-14 * max(|a|, |b|)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ref = max(abs(polygon_area(a)), abs(polygon_area(b)))
    scale = np.sqrt(ref)
    poly = [tuple(p) for p in a]
    for i in range(3):
        p, q = b[i], b[(i + 1) % 3]
        ex, ey = q[0] - p[0], q[1] - p[1]
        out = []
        n = len(poly)
        for j in range(n):
            s, e = poly[j], poly[(j + 1) % n]
            ds = (ex * (s[1] - p[1]) - ey * (s[0] - p[0])) / scale
            de = (ex * (e[1] - p[1]) - ey * (e[0] - p[0])) / scale
            s_in, e_in = ds >= -1e-13 * scale, de >= -1e-13 * scale
            if s_in:
                out.append(s)
            if s_in != e_in:
                t = ds / (ds - de)
                out.append((s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])))
        poly = out
        if len(poly) < 3:
            return np.zeros((0, 2))
    poly = np.array(poly)
    if polygon_area(poly) < SLIVER * ref:
        return np.zeros((0, 2))
    return poly


def clip_batch(A: np.ndarray, B: np.ndarray):
    """Vectorised :func:`triangle_intersection` for pairs ``A[i], B[i]``.

    Returns ``(poly, count)`` with ``poly`` of shape ``(n, 9, 2)`` holding
    ``count[i]`` valid vertices per pair.
    """
    n = len(A)
    maxv = 9
    poly = np.zeros((n, maxv, 2))
    poly[:, :3] = A
    cnt = np.full(n, 3, dtype=np.int64)
    area_a = np.abs(_tri_area(A))
    area_b = np.abs(_tri_area(B))
    ref = np.maximum(area_a, area_b)
    scale = np.sqrt(ref)[:, None]
    for i in range(3):
        p = B[:, i]
        e = B[:, (i + 1) % 3] - p
        valid = np.arange(maxv)[None, :] < cnt[:, None]
        d = (e[:, None, 0] * (poly[:, :, 1] - p[:, None, 1])
             - e[:, None, 1] * (poly[:, :, 0] - p[:, None, 0])) / scale
        inside = d >= -1e-13 * scale
        nxt = np.where(np.arange(maxv)[None, :] + 1 < cnt[:, None],
                       np.arange(maxv)[None, :] + 1, 0)
        d_n = np.take_along_axis(d, nxt, axis=1)
        in_n = np.take_along_axis(inside, nxt, axis=1)
        p_n = np.take_along_axis(poly, nxt[:, :, None], axis=1)
        cross = (inside != in_n) & valid
        keep = inside & valid
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(cross, d / (d - d_n), 0.0)
        xpt = poly + t[:, :, None] * (p_n - poly)
        # output slots: vertex j emits (keep_j, cross_j) in this order
        emit = keep.astype(np.int64) + cross.astype(np.int64)
        start = np.cumsum(emit, axis=1) - emit
        new = np.zeros_like(poly)
        r_k, c_k = np.nonzero(keep)
        new[r_k, start[r_k, c_k]] = poly[r_k, c_k]
        r_x, c_x = np.nonzero(cross)
        new[r_x, start[r_x, c_x] + keep[r_x, c_x]] = xpt[r_x, c_x]
        cnt = emit.sum(axis=1)
        if cnt.max(initial=0) > maxv:
            raise RuntimeError("clipped polygon exceeds vertex capacity")
        poly = new
    cnt[cnt < 3] = 0
    areas = _poly_areas(poly, cnt)
    cnt[areas < SLIVER * ref] = 0
    return poly, cnt


def _tri_area(T):
    return 0.5 * ((T[:, 1, 0] - T[:, 0, 0]) * (T[:, 2, 1] - T[:, 0, 1])
                  - (T[:, 1, 1] - T[:, 0, 1]) * (T[:, 2, 0] - T[:, 0, 0]))


def _poly_areas(poly, cnt):
    maxv = poly.shape[1]
    idx = np.arange(maxv)[None, :]
    nxt = np.where(idx + 1 < cnt[:, None], idx + 1, 0)
    x, y = poly[:, :, 0], poly[:, :, 1]
    xn = np.take_along_axis(x, nxt, axis=1)
    yn = np.take_along_axis(y, nxt, axis=1)
    term = np.where(idx < cnt[:, None], x * yn - y * xn, 0.0)
    return 0.5 * term.sum(axis=1)


@dataclass
class Supermesh:
    tris: np.ndarray  # (n, 3, 2)
    parent_coarse: np.ndarray
    parent_fine: np.ndarray

    @property
    def areas(self) -> np.ndarray:
        return _tri_area(self.tris)

    def __len__(self):
        return len(self.tris)


def candidate_pairs(coarse: Triangulation, fine: Triangulation):
    """Cell pairs with overlapping bounding boxes, found by grid binning."""
    lo_f = fine.vertices[fine.cells].min(axis=1)
    hi_f = fine.vertices[fine.cells].max(axis=1)
    lo_c = coarse.vertices[coarse.cells].min(axis=1)
    hi_c = coarse.vertices[coarse.cells].max(axis=1)
    glo = np.minimum(lo_f.min(axis=0), lo_c.min(axis=0))
    ghi = np.maximum(hi_f.max(axis=0), hi_c.max(axis=0))
    h = np.sqrt(np.median(np.abs(fine.areas))) * 2.0
    nb = np.maximum(1, np.ceil((ghi - glo) / h).astype(int))
    h = (ghi - glo) / nb

    def bins(lo, hi):
        i0 = np.clip(((lo - glo) / h).astype(int), 0, nb - 1)
        i1 = np.clip(((hi - glo) / h).astype(int), 0, nb - 1)
        return i0, i1

    # register every fine cell in every bin its box touches
    f0, f1 = bins(lo_f, hi_f)
    reg_cell, reg_bin = [], []
    span = f1 - f0 + 1
    for dx in range(span[:, 0].max()):
        for dy in range(span[:, 1].max()):
            ok = (dx < span[:, 0]) & (dy < span[:, 1])
            ids = np.flatnonzero(ok)
            reg_cell.append(ids)
            reg_bin.append((f0[ids, 0] + dx) * nb[1] + f0[ids, 1] + dy)
    reg_cell = np.concatenate(reg_cell)
    reg_bin = np.concatenate(reg_bin)
    order = np.argsort(reg_bin, kind="stable")
    reg_cell, reg_bin = reg_cell[order], reg_bin[order]
    bstart = np.searchsorted(reg_bin, np.arange(nb[0] * nb[1] + 1))

    c0, c1 = bins(lo_c, hi_c)
    pc, pf = [], []
    cspan = c1 - c0 + 1
    for dx in range(cspan[:, 0].max()):
        for dy in range(cspan[:, 1].max()):
            ok = (dx < cspan[:, 0]) & (dy < cspan[:, 1])
            ids = np.flatnonzero(ok)
            b = (c0[ids, 0] + dx) * nb[1] + c0[ids, 1] + dy
            lens = bstart[b + 1] - bstart[b]
            cc = np.repeat(ids, lens)
            offs = np.repeat(bstart[b], lens) + (np.arange(lens.sum()) - np.repeat(np.cumsum(lens) - lens, lens))
            pc.append(cc)
            pf.append(reg_cell[offs])
    pc = np.concatenate(pc)
    pf = np.concatenate(pf)
    key = np.unique(pc * fine.n_cells + pf)
    pc, pf = key // fine.n_cells, key % fine.n_cells
    tol = 1e-12 * np.ptp(np.vstack([lo_f, hi_f]), axis=0).max()
    overlap = np.all((lo_c[pc] <= hi_f[pf] + tol) & (lo_f[pf] <= hi_c[pc] + tol), axis=1)
    return pc[overlap], pf[overlap]


def build_supermesh(coarse: Triangulation, fine: Triangulation, check: float = 1e-10) -> Supermesh:
    """Common refinement of ``coarse`` and ``fine``.

    Output triangles are sorted by coarse cell, then fine cell. Raises
    ``ValueError`` if the triangles do not reproduce every coarse cell area
    to relative accuracy ``check``.
    """
    pc, pf = candidate_pairs(coarse, fine)
    A = fine.vertices[fine.cells[pf]]
    B = coarse.vertices[coarse.cells[pc]]
    # clip the fine triangle against the coarse one
    poly, cnt = clip_batch(A, B)
    keep = cnt >= 3
    pc, pf, poly, cnt = pc[keep], pf[keep], poly[keep], cnt[keep]
    ntri = cnt - 2
    owner = np.repeat(np.arange(len(cnt)), ntri)
    local = np.arange(ntri.sum()) - np.repeat(np.cumsum(ntri) - ntri, ntri)
    tris = np.stack([poly[owner, 0], poly[owner, local + 1], poly[owner, local + 2]], axis=1)
    sm = Supermesh(tris, pc[owner], pf[owner])
    ref = np.maximum(np.abs(coarse.areas[sm.parent_coarse]), np.abs(fine.areas[sm.parent_fine]))
    good = sm.areas > SLIVER * ref
    sm = Supermesh(tris[good], sm.parent_coarse[good], sm.parent_fine[good])
    per_coarse = np.bincount(sm.parent_coarse, weights=sm.areas, minlength=coarse.n_cells)
    err = np.abs(per_coarse - coarse.areas) / coarse.areas
    if err.max(initial=0.0) > check:
        bad = int(np.argmax(err))
        raise ValueError(f"supermesh area conservation violated on coarse cell {bad}: "
                         f"relative error {err[bad]:.3e}")
    return sm
