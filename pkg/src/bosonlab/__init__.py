"""bosonlab: a desk-scale laboratory for interacting lattice bosons.

The package covers the mean-field (Hartree) condensate flow, the excitation
projection calculus, the exact split of the many-body generator into its
quadratic effective part plus cubic/quartic remainders, full and auxiliary
propagators sharing one fixed-step kernel, the Duhamel correction hierarchy,
and a reproduction harness measuring convergence rates against the predicted
exponent.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    duhamel,
    errors,
    experiments,
    fockstate,
    hamiltonians,
    meanfield,
    model,
    projections,
    propagation,
    snapshots,
    tensorstate,
)
