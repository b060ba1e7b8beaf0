"""Independent reference implementations used by the tests."""

import math

import numpy as np

COUPLER = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)


def enumerate_routes(mesh, src, dst, blocked, cost_of):
    """All TBU-simple paths from external port ``src`` to ``dst``.

    Works directly on port indices: port = 4*tbu + 2*end + side; light that
    enters a TBU at one end leaves at the other end on the same side (bar) or
    the opposite side (cross). Returns a list of (cost, tbu tuple, mode tuple).
    """
    out = []

    def walk(entry, used, tbus, modes, cost):
        t = entry // 4
        end, side = (entry // 2) % 2, entry % 2
        for mode, s2 in (("bar", side), ("cross", 1 - side)):
            exit_ = 4 * t + 2 * (1 - end) + s2
            c = cost + cost_of(mode)
            if exit_ == dst:
                out.append((c, tbus + (t,), modes + (mode,)))
            nxt = mesh.partner(exit_)
            if nxt is None or nxt // 4 in used or nxt // 4 in blocked:
                continue
            walk(nxt, used | {nxt // 4}, tbus + (t,), modes + (mode,), c)

    if src // 4 not in blocked:
        walk(src, frozenset({src // 4}), (), (), 0.0)
    return out


def best_route(mesh, src, dst, blocked, cost_of, tol=1e-9):
    """(min cost, lexicographically smallest TBU sequence at that cost) or None."""
    routes = enumerate_routes(mesh, src, dst, blocked, cost_of)
    if not routes:
        return None
    best = min(r[0] for r in routes)
    return best, min(r[1] for r in routes if r[0] <= best + tol)


def tbu_matrix(settings, loss_db):
    """Coupler * arms * coupler with amplitude loss."""
    arms = np.diag([np.exp(1j * settings.theta_upper), np.exp(1j * settings.theta_lower)])
    return 10 ** (-loss_db / 20) * (COUPLER @ arms @ COUPLER)


def cascade(program, hops, params, f_hz, mode_settings):
    """Field transfer along a hop list by multiplying per-TBU matrix elements."""
    g = 1.0 + 0j
    prop = complex(params.propagation(f_hz))
    for h in hops:
        s = mode_settings(program.mode(h.tbu))
        loss = params.tbu_loss_db if s.insertion_loss_db is None else s.insertion_loss_db
        g *= tbu_matrix(s, loss)[h.exit % 2, h.entry % 2] * prop
    return g
