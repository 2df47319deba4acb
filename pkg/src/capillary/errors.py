"""Exception types raised by the capillary geometry routines."""


class RegimeError(ValueError):
    """The contact angle lies in a regime the formula does not cover."""


class BranchError(ValueError):
    """A point query landed on the critical cone |y_n| = |y| cos(theta)."""


class NonFiniteIntegrandError(ValueError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, index, node, value):
        self.index = int(index)
        self.node = node
        self.value = value
        super().__init__(f"integrand is {value!r} at node {self.index}: {node!r}")


class NonPositiveSupportError(ValueError):
    """A support function that must stay positive was <= 0 at some node."""

    def __init__(self, index, node, value):
        self.index = int(index)
        self.node = node
        self.value = value
        super().__init__(f"support value {value!r} <= 0 at node {self.index}: {node!r}")


class ConvexityError(ValueError):
    """A perturbed support function stopped describing a convex curve."""
