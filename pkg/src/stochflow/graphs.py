"""Directed cycle search and undirected components on small implicit graphs."""

from __future__ import annotations

from typing import Callable, Hashable, Iterable

WHITE, GRAY, BLACK = 0, 1, 2


def find_cycle(nodes: Iterable[Hashable],
               successors: Callable[[Hashable], Iterable[Hashable]]) -> list | None:
    """Return one directed cycle ``[v0, v1, ..., v_{r-1}]`` or ``None``.

    The cycle closes with an edge ``v_{r-1} -> v0``; a loop is returned as
    ``[v]``.  Iterative three-colour depth-first search, so deep graphs do not
    hit the recursion limit.  ``successors`` is called at most once per node.
    """
    color: dict = {}
    for root in nodes:
        if color.get(root, WHITE) != WHITE:
            continue
        color[root] = GRAY
        path = [root]
        stack = [iter(successors(root))]
        while stack:
            advanced = False
            for nxt in stack[-1]:
                c = color.get(nxt, WHITE)
                if c == GRAY:
                    return path[path.index(nxt):]
                if c == WHITE:
                    color[nxt] = GRAY
                    path.append(nxt)
                    stack.append(iter(successors(nxt)))
                    advanced = True
                    break
            if not advanced:
                color[path.pop()] = BLACK
                stack.pop()
    return None


def connected_components(n: int, edges: Iterable[tuple[int, int]]) -> list[tuple[int, ...]]:
    """Components of the undirected graph on ``0..n-1``, sorted by smallest member."""
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in edges:
        ri, rj = root(i), root(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    return sorted(tuple(g) for g in groups.values())
