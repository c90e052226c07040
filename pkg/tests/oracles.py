"""Independent reference implementations used only by the tests.

These deliberately avoid the package's engines: plain Python sets,
plain loops, no symmetry tricks.
"""

from itertools import product


def bfs_orbit(root, T, slack=1, norm="max"):
    """Every vector reachable from ``root`` through vectors of norm < T*slack,
    filtered to norm < T."""
    A = len(root)
    c = 1 if A == 5 else 2

    def size(v):
        return max(abs(x) for x in v) if norm == "max" else sum(x * x for x in v)

    explore = T * slack if norm == "max" else (T * slack) ** 2
    keep = T if norm == "max" else T * T
    root = tuple(root)
    seen = {root} if size(root) < explore else set()
    todo = list(seen)
    while todo:
        u = todo.pop()
        s = sum(u)
        for i in range(A):
            v = list(u)
            v[i] = c * (s - u[i]) - u[i]
            v = tuple(v)
            if v not in seen and size(v) < explore:
                seen.add(v)
                todo.append(v)
    return {v for v in seen if size(v) < keep}


def is_prime(n):
    n = abs(n)
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def cone_points(d, A=5):
    n = A - 2
    return [v for v in product(range(d), repeat=A) if (n * sum(x * x for x in v) - sum(v) ** 2) % d == 0]


def orbit_mod_reference(root, d):
    A = len(root)
    c = 1 if A == 5 else 2
    start = tuple(x % d for x in root)
    seen = {start}
    todo = [start]
    while todo:
        u = todo.pop()
        s = sum(u)
        for i in range(A):
            v = list(u)
            v[i] = (c * (s - u[i]) - u[i]) % d
            v = tuple(v)
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen
