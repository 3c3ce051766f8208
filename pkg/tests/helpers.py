"""Shared builders and small brute-force oracles for the test suite."""
import functools
import itertools
from collections import Counter

from qcsheaves.etale import EtaleGroupModel, abelian_groups_of_order, enumerate_models
from qcsheaves.fgab import FgAbGroup


def model(factors, frob=None) -> EtaleGroupModel:
    return EtaleGroupModel.make(factors, frob)


SWAP = [[0, 1], [1, 0]]


@functools.lru_cache(maxsize=None)
def models_up_to(n: int) -> tuple:
    return tuple(enumerate_models(n))


def groups_up_to(n: int) -> list:
    return [FgAbGroup(f) for k in range(1, n + 1) for f in abelian_groups_of_order(k)]


def all_subgroups(G: FgAbGroup) -> list:
    """Every subgroup of a finite group, as a list of generating sets (brute force)."""
    elems = G.elements()
    seen = {}

    def close(gens):
        S = {G.zero()}
        frontier = list(S)
        while frontier:
            nxt = []
            for s in frontier:
                for g in gens:
                    t = G.add(s, g)
                    if t not in S:
                        S.add(t)
                        nxt.append(t)
            frontier = nxt
        return frozenset(S)

    todo = [()]
    while todo:
        gens = todo.pop()
        S = close(gens)
        if S in seen:
            continue
        seen[S] = gens
        for x in elems:
            if x not in S:
                todo.append(gens + (x,))
    return list(seen.values())


def brute_force_h2_count(G: FgAbGroup, level: int) -> int:
    """Count 2-cocycles G x G -> (1/level)Z/Z modulo coboundaries by listing all tables."""
    import numpy as np

    E = EtaleGroupModel.make(list(G.factors))
    n = E.order
    add = E.add_table
    x, y, z = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    cocycles = []
    for vals in itertools.product(range(level), repeat=n * n):
        a = np.array(vals).reshape(n, n)
        if np.all((a[add[x, y], z] + a[x, y] - a[x, add[y, z]] - a[y, z]) % level == 0):
            cocycles.append(a)
    # coboundaries of delta with values in (1/level^2)Z/Z that land in level-valued tables
    L2 = level * level
    cob = set()
    for d in itertools.product(range(L2), repeat=n):
        d = np.array(d)
        c = (d[:, None] + d[None, :] - d[add]) % L2
        if np.all(c % level == 0):
            cob.add(tuple((c // level).ravel()))
    classes = set()
    for a in cocycles:
        key = min(tuple((a.ravel() - np.array(c)) % level) for c in cob)
        classes.add(key)
    return len(classes)


# F_4 = {0, 1, w, w + 1} with w^2 = w + 1, encoded as 0, 1, 2, 3 (bit i = coefficient of w^i)
GF4_MUL = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]]


def _field(q):
    if q == 4:
        return (lambda a, b: a ^ b), (lambda a, b: GF4_MUL[a][b])
    return (lambda a, b: (a + b) % q), (lambda a, b: a * b % q)


def unit_orders(kind, q, level):
    """Element-order histogram of R_n^x by naive repeated multiplication."""
    n1 = level + 1
    if kind == "p-adic":
        mod = q ** n1
        units = [x for x in range(1, mod) if x % q]
        mul, one = (lambda x, y: x * y % mod), 1
    else:
        add, fm = _field(q)

        def mul(x, y):
            out = [0] * n1
            for i in range(n1):
                for j in range(n1 - i):
                    out[i + j] = add(out[i + j], fm(x[i], y[j]))
            return tuple(out)

        one = (1,) + (0,) * level
        units = []

        def rec(prefix):
            if len(prefix) == n1:
                units.append(tuple(prefix))
                return
            for c in range(q):
                if prefix or c:
                    rec(prefix + [c])
        rec([])
    hist = Counter()
    for x in units:
        k, y = 1, x
        while y != one:
            y = mul(y, x)
            k += 1
        hist[k] += 1
    return hist


def group_orders(G: FgAbGroup):
    return Counter(G.element_order(x) for x in G.elements())


def structure_from_histogram(hist):
    N = sum(hist.values())
    matches = [f for f in abelian_groups_of_order(N) if group_orders(FgAbGroup(f)) == hist]
    assert len(matches) == 1
    return matches[0]
