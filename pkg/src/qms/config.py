"""Tolerance configuration.

All numerical gates in the package are relative to the largest magnitude in
the input unless stated otherwise.  Two base scales exist: CHECK (identity
verification) and DECOMP (rank decisions in decompositions).  Named entries
can be overridden per call site or from the CLI via ``--tol name=value``.
"""

from dataclasses import dataclass, field, replace


_DEFAULTS = {
    "check": 1e-10,          # generic identity checks
    "decomp": 1e-12,         # rank / null-space thresholds
    "hermitian": 1e-10,      # Hermiticity preconditions
    "psd_gate": 1e-8,        # how negative an eigenvalue may be before NotPSD
    "choi": 1e-9,            # Markovianity: min Choi eigenvalue gate
    "axiom": 1e-9,           # Tomita bimodule axioms (a)-(f)
    "roundtrip": 1e-8,       # extract/build round trips, uniqueness isometry
    "span": 1e-8,            # generator-form least-squares decomposition
    "cond_max": 1e12,        # condition-number cutoff for the density h
    "im_z_max": 4.0,         # documented accuracy range for h^{iz}
}


@dataclass(frozen=True)
class Tolerances:
    """Immutable tolerance table; ``override`` returns a modified copy."""

    values: dict = field(default_factory=lambda: dict(_DEFAULTS))

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def override(self, **kwargs):
        unknown = set(kwargs) - set(self.values)
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {sorted(unknown)}")
        merged = dict(self.values)
        merged.update(kwargs)
        return replace(self, values=merged)

    def as_dict(self):
        return dict(self.values)


DEFAULT_TOL = Tolerances()
