"""Steiner tree approximation via the classic Kou-Markowsky-Berman heuristic.

All tie-breaks are deterministic: shortest paths prefer the lexicographically
smallest node sequence among equal-cost candidates, and spanning trees are
built by Kruskal over edges sorted by (weight, endpoints). The returned tree
spans the terminals at cost within 2*(1-1/l) of optimal, l being the leaf
count of a minimal tree.
"""

import heapq

from .errors import NoPathError


def lex_shortest_paths(adj, src):
    """Single-source shortest paths returning, per destination, the lexico-
    graphically smallest node sequence among all minimum-cost paths.

    adj: {node: {neighbor: weight}} with positive weights.
    """
    best = {}
    heap = [(0, (src,))]
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in best:
            continue
        best[node] = (cost, path)
        for nbr in sorted(adj[node]):
            if nbr in best:
                continue
            heapq.heappush(heap, (cost + adj[node][nbr], path + (nbr,)))
    return best


def lex_shortest_path(adj, src, dst):
    paths = lex_shortest_paths(adj, src)
    if dst not in paths:
        raise NoPathError(f"no path between {src!r} and {dst!r}", subject=dst)
    return paths[dst]


class _DisjointSet:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _kruskal(vertices, edges):
    """MST edges by Kruskal; edges as (weight, u, v) with u < v, sorted."""
    ds = _DisjointSet(vertices)
    tree = []
    for w, u, v in sorted(edges):
        if ds.union(u, v):
            tree.append((w, u, v))
    return tree


def kmb_steiner(adj, terminals, weights=None):
    """Approximate minimum Steiner tree over the given adjacency.

    adj: {node: iterable-of-neighbors} or {node: {neighbor: weight}};
    weights: optional {(u, v): w} override applied symmetrically.
    Returns a sorted list of (u, v) tree edges with u < v.
    """
    terminals = sorted(set(terminals))
    if not terminals:
        return []
    wadj = {}
    for u, nbrs in adj.items():
        wadj[u] = {}
        for v in nbrs:
            if weights is not None:
                w = weights.get((u, v), weights.get((v, u), 1))
            elif isinstance(nbrs, dict):
                w = nbrs[v]
            else:
                w = 1
            wadj[u][v] = w
    for t in terminals:
        if t not in wadj:
            raise NoPathError(f"terminal {t!r} not in graph", subject=t)
    if len(terminals) == 1:
        return []

    # 1) metric closure over the terminals, remembering expansion paths
    sp = {t: lex_shortest_paths(wadj, t) for t in terminals}
    closure_edges = []
    for i, u in enumerate(terminals):
        for v in terminals[i + 1:]:
            if v not in sp[u]:
                raise NoPathError(f"terminals {u!r} and {v!r} are disconnected", subject=v)
            closure_edges.append((sp[u][v][0], u, v))

    # 2) MST of the closure
    closure_mst = _kruskal(terminals, closure_edges)

    # 3) expand MST edges into their shortest paths
    expanded_vertices = set()
    expanded_edges = {}
    for _, u, v in closure_mst:
        _, path = sp[u][v]
        expanded_vertices.update(path)
        for a, b in zip(path, path[1:]):
            e = (a, b) if a < b else (b, a)
            expanded_edges[e] = wadj[a][b]

    # 4) MST of the expansion
    mst2 = _kruskal(sorted(expanded_vertices),
                    [(w, u, v) for (u, v), w in expanded_edges.items()])

    # 5) prune non-terminal leaves repeatedly
    adj_t = {}
    for _, u, v in mst2:
        adj_t.setdefault(u, set()).add(v)
        adj_t.setdefault(v, set()).add(u)
    terminal_set = set(terminals)
    changed = True
    while changed:
        changed = False
        for node in sorted(adj_t):
            if node not in terminal_set and len(adj_t[node]) == 1:
                peer = next(iter(adj_t[node]))
                adj_t[peer].discard(node)
                del adj_t[node]
                changed = True

    edges = set()
    for u, nbrs in adj_t.items():
        for v in nbrs:
            edges.add((u, v) if u < v else (v, u))
    return sorted(edges)


def tree_cost(edges, wadj_or_weights):
    total = 0
    for u, v in edges:
        if isinstance(wadj_or_weights, dict) and u in wadj_or_weights \
                and isinstance(wadj_or_weights[u], dict):
            total += wadj_or_weights[u][v]
        else:
            total += wadj_or_weights.get((u, v), wadj_or_weights.get((v, u), 1))
    return total


def is_tree_spanning(edges, terminals):
    """True when the edge set forms a single acyclic component covering every
    terminal."""
    if not edges:
        return len(set(terminals)) <= 1
    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    vertices = sorted(adj)
    if len(edges) != len(vertices) - 1:
        return False
    seen = set()
    stack = [vertices[0]]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(adj[cur] - seen)
    if len(seen) != len(vertices):
        return False
    return set(terminals) <= seen
