"""Published coefficient pairs (c1, c2) and orbit lengths (j, k, l) of the four chain members."""
from __future__ import annotations

import math

FIG5 = (
    (8.7534421003338, 5.9172433109798, (0, 2, 1)),
    (8.6656058283165 + 0.059672002492800j, 5.8731379216063 + 0.020430827270432j, (2, 2, 3)),
    (8.6620018002588 + 0.049185458993292j, 5.871351730126 + 0.017466126249776j, (4, 5, 5)),
    (8.6620495410606 + 0.049156312358058j, 5.871375113635 + 0.017446586001088j, (9, 8, 10)),
)
FIG5_SCHEDULE = (1, 2, 3)

OMEGA = -0.9862072184965908
OMEGA_PRIME = 3 * OMEGA
BETA = -3.958621655489772
GAMMA = -1.958621655

SEED_LANDINGS = {"0": 0.0, "1/2": BETA, "1/4": GAMMA, "3/4": GAMMA, "1/3": OMEGA_PRIME, "2/3": OMEGA_PRIME}


def omega_exact() -> float:
    return -0.25 * math.sqrt(6 + 2 * math.sqrt(9 + 8 * math.sqrt(3)))


def relative_error(value: complex, target: complex) -> float:
    return abs(complex(value) - complex(target)) / abs(complex(target))


def published_member(n: int, tol: float = 1e-10):
    """Chain member n rebuilt from its published coefficients and polished onto its configuration."""
    from .config import Configuration, solve_config
    from .cubic import from_coefficients, seed_polynomial

    c1, c2, (j, k, l) = FIG5[n]
    cfg = Configuration(j, k, l)
    if n == 0:
        return seed_polynomial(), cfg.verified()
    rough = from_coefficients(c1, c2, k)
    f = solve_config((rough.a, rough.b), k, l, tol)
    return f, cfg.verified()


def published_branching(n: int, settings=None):
    """Branching data of members 0..n, each located from the previous one."""
    from .dendrite import find_branching_point
    out = []
    hint = None
    for i in range(n + 1):
        f, cfg = published_member(i)
        bd = find_branching_point(f, cfg, hint=hint) if settings is None else find_branching_point(f, cfg, hint=hint, settings=settings)
        out.append((f, cfg, bd))
        if i < n:
            hint = (bd, cfg, FIG5_SCHEDULE[i])
    return out
