"""Exceptions shared by the kernel backends and the public API."""


class HorizonExceededError(RuntimeError):
    """A constructor ran past its proven slot horizon; this is an internal bug."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"schedule synthesis exceeded the horizon cap of {cap} slots")


class SolverBudgetExceeded(RuntimeError):
    """The exact solver expanded more nodes than allowed.

    ``upper`` is the best objective found so far and ``lower`` a proven lower
    bound, both in the solver's integer weight units.
    """

    def __init__(self, nodes: int, upper: int, lower: int):
        self.nodes = nodes
        self.upper = upper
        self.lower = lower
        super().__init__(f"node budget exhausted after {nodes} nodes (bracket [{lower}, {upper}])")
