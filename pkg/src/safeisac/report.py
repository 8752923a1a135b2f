from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SolveReport:
    """Convergence record shared by both phase solvers.

    ``status`` names the termination reason (``"converged"``, ``"max_iter"``,
    ``"infeasible"``, ...); ``feasible`` says whether the returned point meets
    the solver's QoS constraint.
    """

    status: str
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    feasible: bool = True
    message: str = ""
    extra: dict = field(default_factory=dict)
