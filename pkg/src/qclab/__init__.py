"""Desk-scale laboratory for a quantum-cryptographic reduction pipeline.

The package walks the whole chain at brute-force-checkable sizes: pure-state
one-way generators, shadow-tomography puzzles, hash slicing into weak
pseudoentropy pairs, product amplification, statistically-far-or-close
distribution pairs, and unitary bit commitments. Every quantitative claim the
modules make is computed exactly or carries an explicit confidence radius.
"""

__version__ = "0.1.0"
