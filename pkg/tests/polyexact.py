"""Exact rational expansion of random polynomial expressions, shared by the jet tests."""

from fractions import Fraction

from finslerkit.jets import Jet, arithmetic


def poly_mul(a, b, nv):
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(i + j for i, j in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def poly_add(a, b, sign=1):
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + sign * c
    return out


def random_expr(rng, nv, depth):
    """Random +,-,* tree; leaves are dyadic constants or variables."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return ("const", Fraction(rng.randint(-16, 16), 2 ** rng.randint(0, 3)))
        return ("var", rng.randrange(nv))
    op = rng.choice(["add", "sub", "mul", "mul"])
    return (op, random_expr(rng, nv, depth - 1), random_expr(rng, nv, depth - 1))


def degree(expr):
    kind = expr[0]
    if kind == "const":
        return 0
    if kind == "var":
        return 1
    if kind == "mul":
        return degree(expr[1]) + degree(expr[2])
    return max(degree(expr[1]), degree(expr[2]))


def eval_exact(expr, center, nv):
    kind = expr[0]
    zero = (0,) * nv
    if kind == "const":
        return {zero: expr[1]}
    if kind == "var":
        e = [0] * nv
        e[expr[1]] = 1
        return {zero: center[expr[1]], tuple(e): Fraction(1)}
    a = eval_exact(expr[1], center, nv)
    b = eval_exact(expr[2], center, nv)
    if kind == "add":
        return poly_add(a, b)
    if kind == "sub":
        return poly_add(a, b, -1)
    return poly_mul(a, b, nv)


def eval_jet(expr, seeds, degree, nv):
    kind = expr[0]
    if kind == "const":
        return Jet.constant(float(expr[1]), nv, degree)
    if kind == "var":
        return seeds[expr[1]]
    a = eval_jet(expr[1], seeds, degree, nv)
    b = eval_jet(expr[2], seeds, degree, nv)
    return arithmetic(a, b, expr[0])
