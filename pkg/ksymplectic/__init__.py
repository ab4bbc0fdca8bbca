# KSymplectic project.
#
# Canonical connections of k-symplectic manifolds on Darboux charts: computation
# and numerical verification.
#
__version__ = "1.0.0"
