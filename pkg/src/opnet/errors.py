"""Error types shared across the package."""


class FamilyTooLargeError(RuntimeError):
    """Enumeration would exceed the configured cap; use sampling mode."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(
            f"family has {count} members, exceeding the enumeration cap {cap}; "
            "use sampling mode"
        )


class CoverageUnverifiableError(RuntimeError):
    """The candidate pool is too coarse to certify the requested covering radius."""

    def __init__(self, sigma, required_pool, cap):
        self.sigma = sigma
        self.required_pool = required_pool
        self.cap = cap
        super().__init__(
            f"cannot certify a {sigma}-covering: requires a candidate pool of about "
            f"{required_pool} points (cap {cap}); increase pool_cap or sigma"
        )


class RefineOmegaError(RuntimeError):
    """The modulus-of-continuity table is too coarse for the requested target."""

    def __init__(self, target, finest_delta, finest_omega):
        self.target = target
        self.finest_delta = finest_delta
        self.finest_omega = finest_omega
        super().__init__(
            f"omega table cannot reach target {target}: finest entry "
            f"omega({finest_delta}) = {finest_omega}; re-estimate with smaller deltas"
        )


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""
