"""Local optimization of nonconvex semidefinite programs with bilinear
matrix inequality constraints, via inner convex approximation.

Subpackages:
  symmat        dense symmetric-matrix utilities (eigenvalues, Lyapunov, svec)
  lmi           decision variables, affine matrix expressions, SDP problems
  sdp           self-contained primal-dual interior-point SDP solver
  overestimate  psd-convex majorants of bilinear matrix forms and liftings
  icp           the sequential inner-convex-approximation outer loop
  synthesis     static output feedback problem builders and starting points
  analysis      independent closed-loop verification oracles
  plants        plant data files and random plant generation
  cli           command-line front end
"""

from .symmat import SymMat, eig_sym, min_eig, max_eig, spectral_abscissa, lyapunov_solve, svec, smat

__all__ = [
    "SymMat",
    "eig_sym",
    "min_eig",
    "max_eig",
    "spectral_abscissa",
    "lyapunov_solve",
    "svec",
    "smat",
]

__version__ = "0.1.0"
