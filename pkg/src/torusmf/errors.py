"""Exception types raised by the toolkit."""


class TorusMFError(Exception):
    """Base class for all errors raised by torusmf."""


class NonZeroMeanRHS(TorusMFError):
    """Poisson right-hand side does not integrate to zero."""

    def __init__(self, mean):
        super().__init__(f"right-hand side has mean {mean:.3e}; expected 0 "
                         "(unnormalized measure upstream?)")
        self.mean = mean


class NotPsh(TorusMFError):
    """Potential violates rho_omega + Laplacian(u)/4pi >= -eps_psh."""

    def __init__(self, slack, eps):
        super().__init__(f"potential is not omega-psh: slack {slack:.3e} < "
                         f"-{eps:.3e}")
        self.slack = slack
        self.eps = eps


class DivergentIntegral(TorusMFError):
    """Pole-refined quadrature did not settle (non-integrable singularity)."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class KltViolation(TorusMFError):
    """A pole exponent c >= 1 was requested."""


class LcpNonConvergence(TorusMFError):
    """Projected SOR hit max_iter before the complementarity residual target."""

    def __init__(self, residual, iterations):
        super().__init__(f"LCP not converged after {iterations} sweeps "
                         f"(residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations
