"""Single-threaded sweep engine; the oracle every parallel variant must
match bitwise."""

from ..kernels import JACOBI, jacobi_window, window_fn
from .plan import SERIAL


def run_serial(plan, g, stats=None):
    """Apply plan.iter_end full sweeps and return the result grid.

    Jacobi ping-pongs between `g` and one scratch grid; Gauss-Seidel runs
    in place in ascending (k, j, i) order.  The input grid's storage is
    reused; the returned grid holds the final field.
    """
    nk = g.nk
    njp = g.nj + 2
    a, b = plan.coeffs.a, plan.coeffs.b

    if plan.iter_end == 0:
        if stats is not None:
            stats["line_updates"] = 0
        return g

    if plan.kernel == JACOBI:
        src, dst = g, g.copy()
        for _ in range(plan.iter_end):
            sd, dd = src.data, dst.data
            for k in range(nk):
                jacobi_window(dd[k + 1], sd[k], sd[k + 1], sd[k + 2], a, b, 1, njp - 1)
            src, dst = dst, src
        result = src
    else:
        win = window_fn(plan.kernel)
        d = g.data
        for _ in range(plan.iter_end):
            for k in range(nk):
                win(d[k], d[k + 1], d[k + 2], b, 1, njp - 1)
        result = g

    if stats is not None:
        stats["line_updates"] = plan.iter_end * nk * g.nj
    return result
