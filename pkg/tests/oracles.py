"""Independent slow references used by the tests."""
import math


def naive_osla(inst, prefix, candidate):
    """Look-ahead block by explicit loops over plain Python floats."""
    coords = [tuple(map(float, c)) for c in inst.coords]
    d = lambda a, b: math.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
    start = [float(v) for v in inst.tw_start]
    deadline = [math.inf if u else float(e) for e, u in zip(inst.tw_end, inst.end_unconstrained)]
    t = 0.0
    for a, b in zip(prefix, prefix[1:]):
        t = max(t + d(a, b), start[b])
    t1 = max(t + d(prefix[-1], candidate), start[candidate])
    rest = [j for j in range(inst.n + 1) if j not in prefix and j != candidate]
    f1 = f2 = f3 = f4 = f5 = 0.0
    best = None
    for j in rest:
        arrive = t1 + d(candidate, j)
        if arrive > deadline[j]:
            f1 = 1.0
            f2 = max(f2, arrive - deadline[j])
            f3 += arrive - deadline[j]
        cost = max(arrive, start[j])
        if best is None or cost < best[0]:
            best = (cost, j)
    if best is not None:
        f4 = d(candidate, best[1])
        f5 = best[0] - t1
    return [f1, f2, f3, f4, f5, 1.0]
