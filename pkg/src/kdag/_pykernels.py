"""Pure-Python hot loops.

Every function here has a compiled twin in ``_speedups.pyx`` with the same
signature and results. DAGs are passed as parent CSR arrays: the parents of
node ``v`` are ``idx[ptr[v]:ptr[v + 1]]`` in ascending order, node 0 is the
base station.
"""

POLICY_EVEN = 0
POLICY_MPE = 1
POLICY_PE = 2


def topological_order(ptr, idx):
    """Kahn order from the base station, or ``None`` when the DAG has a cycle
    or a node unreachable from the base."""
    n = len(ptr) - 1
    indeg = [ptr[v + 1] - ptr[v] for v in range(n)]
    kids = [[] for _ in range(n)]
    for v in range(n):
        for j in range(ptr[v], ptr[v + 1]):
            kids[idx[j]].append(v)
    if indeg[0] != 0:
        return None
    order = [0]
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for v in kids[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                order.append(v)
    if len(order) != n:
        return None
    return order


def path_ranges(order, ptr, idx):
    n = len(ptr) - 1
    shortest = [0] * n
    longest = [0] * n
    for v in order:
        lo = ptr[v]
        hi = ptr[v + 1]
        if lo == hi:
            continue
        s = 1 << 30
        m = -1
        for j in range(lo, hi):
            p = idx[j]
            if shortest[p] < s:
                s = shortest[p]
            if longest[p] > m:
                m = longest[p]
        shortest[v] = s + 1
        longest[v] = m + 1
    return shortest, longest


def dag_loads(order, ptr, idx):
    """Even-split load of every node; entry 0 is the total reaching the base."""
    n = len(ptr) - 1
    load = [0.0] * n
    for v in range(1, n):
        load[v] = 1.0
    for t in range(n - 1, 0, -1):
        v = order[t]
        lo = ptr[v]
        hi = ptr[v + 1]
        share = load[v] / (hi - lo)
        for j in range(lo, hi):
            load[idx[j]] += share
    return load


def simulate(order, ptr, idx, policy, e_rx, e_tx, rate, e_init, period,
             max_rounds, tol):
    """Round-by-round energy drain until the first node cannot afford a round.

    Returns ``(rounds, residual, bottleneck)``; ``bottleneck`` is the node that
    would have gone negative (-1 if ``max_rounds`` was hit first).
    """
    n = len(ptr) - 1
    residual = [e_init] * n
    residual[0] = float("inf")
    metric = [0.0] * n
    choice = [-1] * n
    inflow = [0.0] * n
    cost = [0.0] * n
    rounds = 0
    while rounds < max_rounds:
        if policy == POLICY_MPE and rounds % period == 0:
            metric[0] = float("inf")
            for t in range(1, n):
                v = order[t]
                best = -1.0
                arg = -1
                for j in range(ptr[v], ptr[v + 1]):
                    p = idx[j]
                    if metric[p] > best:
                        best = metric[p]
                        arg = p
                choice[v] = arg
                r = residual[v]
                metric[v] = r if r < best else best
        for v in range(n):
            inflow[v] = 0.0
        for t in range(n - 1, 0, -1):
            v = order[t]
            out = rate + inflow[v]
            cost[v] = e_rx * inflow[v] + e_tx * out
            lo = ptr[v]
            hi = ptr[v + 1]
            if policy == POLICY_MPE:
                inflow[choice[v]] += out
            elif policy == POLICY_PE:
                total = 0.0
                for j in range(lo, hi):
                    p = idx[j]
                    total += e_init if p == 0 else residual[p]
                if total <= 0.0:
                    share = out / (hi - lo)
                    for j in range(lo, hi):
                        inflow[idx[j]] += share
                else:
                    for j in range(lo, hi):
                        p = idx[j]
                        w = e_init if p == 0 else residual[p]
                        inflow[p] += out * w / total
            else:
                share = out / (hi - lo)
                for j in range(lo, hi):
                    inflow[idx[j]] += share
        worst = -1
        worst_left = 0.0
        for v in range(1, n):
            left = residual[v] - cost[v]
            if left < -tol and (worst < 0 or left < worst_left):
                worst = v
                worst_left = left
        if worst >= 0:
            return rounds, residual, worst
        for v in range(1, n):
            left = residual[v] - cost[v]
            residual[v] = left if left > 0.0 else 0.0
        rounds += 1
    return rounds, residual, -1
