"""Finite-time quantum Otto engine with a coupled spin-pair working medium.

The library is layered bottom-up: ``algebra`` (operator basis and energy
frame), ``oracle`` (dense Lindblad reference), ``bloch`` (reduced
five-component dynamics on the isochores), ``adiabat`` (driven unitary
branches), ``thermo`` (observables and bookkeeping) and ``cycle`` (limit
cycle, sweeps, time allocation).
"""

from .algebra import FieldPoint, build_basis, energy_eigensystem, hamiltonian
from .bloch import AffineMap, BVector, eom_system, equilibrium_bvector, isochore_affine, isochore_propagator
from .cycle import CycleResult, CycleSpec, find_limit_cycle, optimize_time_allocation, run_cycle, sweep
from .oracle import BathParams, integrate_master_equation

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BVector",
    "BathParams",
    "CycleResult",
    "CycleSpec",
    "FieldPoint",
    "build_basis",
    "energy_eigensystem",
    "eom_system",
    "equilibrium_bvector",
    "find_limit_cycle",
    "hamiltonian",
    "integrate_master_equation",
    "isochore_affine",
    "isochore_propagator",
    "optimize_time_allocation",
    "run_cycle",
    "sweep",
]
