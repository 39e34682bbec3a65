"""Independent reference computations shared by the test modules."""
import sympy as sp


def brute_force_coefficients(mu, N):
    """Power matching of y = sum b_n x^(mu/2 - (mu+2) n) in y'' = 2y^3 + x^mu y.

    The power 3mu/2 - (mu+2) m collects y'' (from b_{m-1}), 2y^3 and x^mu y;
    each order is solved for the new unknown with sympy.  Exact arithmetic.
    """
    b = [sp.I / sp.sqrt(2)]
    mu_r = sp.Rational(mu)
    bm = sp.Symbol("bm")
    for m in range(1, N + 1):
        cur = b + [bm]
        e = mu_r / 2 - (mu_r + 2) * (m - 1)
        cubic = 0
        for i in range(m + 1):
            for j in range(m + 1 - i):
                cubic += cur[i] * cur[j] * cur[m - i - j]
        eq = sp.expand(cur[m - 1] * e * (e - 1) - 2 * cubic - cur[m])
        sol = sp.solve(eq, bm)
        assert len(sol) == 1
        b.append(sp.simplify(sol[0]))
    return b


def exact_series_coefficient(coeffs, n):
    """b_n = i alpha^(2n) q_n / sqrt(2) from an exact coefficient table."""
    alpha2 = sp.Rational(coeffs.mu + 2, 2) ** 2
    q = sp.Rational(coeffs.q[n].numerator, coeffs.q[n].denominator)
    return sp.I * alpha2 ** n * q / sp.sqrt(2)
