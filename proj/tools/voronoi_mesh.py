#!/usr/bin/env python3
"""Centroidal Voronoi meshes of the unit square in the vemflow JSON mesh format.

Seeds are mirrored across the four sides so that the Voronoi cells of the original
seeds are already clipped to the square. Lloyd iterations move every seed to the
centroid of its cell.
"""

import argparse
import json

import numpy as np
from scipy.spatial import Voronoi


def mirrored(points):
    x, y = points[:, 0:1], points[:, 1:2]
    return np.vstack([
        points,
        np.hstack([-x, y]),
        np.hstack([2 - x, y]),
        np.hstack([x, -y]),
        np.hstack([x, 2 - y]),
    ])


def polygon_centroid(poly):
    x, y = poly[:, 0], poly[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    area = cross.sum() / 2
    return np.array([((x + xs) * cross).sum(), ((y + ys) * cross).sum()]) / (6 * area), area


def voronoi_cells(seeds):
    vor = Voronoi(mirrored(seeds))
    cells = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise RuntimeError(f"unbounded Voronoi region for seed {i}")
        poly = vor.vertices[region]
        c = poly.mean(axis=0)
        order = np.argsort(np.arctan2(poly[:, 1] - c[1], poly[:, 0] - c[0]))
        cells.append(np.clip(poly[order], 0.0, 1.0))
    return cells


def lloyd(seeds, iterations):
    for _ in range(iterations):
        seeds = np.array([polygon_centroid(p)[0] for p in voronoi_cells(seeds)])
    return seeds


def to_mesh(cells, tol):
    vertices, index, out = [], {}, []
    for poly in cells:
        ids = []
        for x, y in poly:
            key = (round(x / tol), round(y / tol))
            if key not in index:
                index[key] = len(vertices)
                vertices.append([float(x), float(y)])
            v = index[key]
            if not ids or ids[-1] != v:
                ids.append(v)
        if len(ids) > 1 and ids[0] == ids[-1]:
            ids.pop()
        out.append(ids)
    edges = {}
    for ids in out:
        for a, b in zip(ids, ids[1:] + ids[:1]):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    boundary = sorted([list(k) for k, n in edges.items() if n == 1])
    return {"vertices": vertices, "cells": out, "boundary": {"dirichlet": boundary, "neumann": []}}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--lloyd", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-10, help="vertex merge tolerance")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    seeds = lloyd(rng.uniform(0.0, 1.0, size=(args.cells, 2)), args.lloyd)
    mesh = to_mesh(voronoi_cells(seeds), args.tol)
    with open(args.output, "w") as f:
        json.dump(mesh, f)
        f.write("\n")


if __name__ == "__main__":
    main()
