"""Finite-difference oracles shared by the tests."""


def richardson(f, x, order=1, levels=4, step=None):
    """Central difference of order 1 or 2, refined by Richardson extrapolation.

    The base step is 5% of min(|x|, 1) unless given.
    """
    h = step if step is not None else 0.05 * min(abs(x), 1.0) if x != 0 else 0.05

    def diff(h):
        if order == 1:
            return (f(x + h) - f(x - h)) / (2 * h)
        return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)

    d = [diff(h / 2 ** j) for j in range(levels)]
    for s in range(1, levels):
        d = [(4 ** s * d[j + 1] - d[j]) / (4 ** s - 1) for j in range(len(d) - 1)]
    return d[0]
