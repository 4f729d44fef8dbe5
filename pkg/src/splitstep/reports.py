from dataclasses import dataclass, field


@dataclass
class AssumptionReport:
    """Outcome of one sampled property check.

    ``worst_margin`` is the smallest normalised slack seen over the samples;
    the check passes when it is at least ``-tolerance``.
    """

    name: str
    samples: int
    worst_margin: float
    tolerance: float
    constants: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self):
        return bool(self.worst_margin >= -self.tolerance)

    def row(self):
        consts = ";".join(f"{k}={v:.17g}" for k, v in sorted(self.constants.items()))
        return [self.name, str(self.samples), f"{self.worst_margin:.17g}", f"{self.tolerance:.17g}",
                "pass" if self.passed else "FAIL", consts]
