"""Block preconditioning for fractured poromechanics with frictional contact."""

__version__ = "0.1.0"
