"""Slepian-Wolf compression of binary sources with hidden-Markov correlation.

The error sequence between the source and its side information comes from a
finite-state hidden Markov model. Each column of a source block is coded with
an LDPC syndrome, and decoded with predictive LLRs that come from feeding
earlier decisions back through the forward recursion.
"""
__version__ = "0.1.0"
FORMAT_VERSIONS = {"bitmatrix": 1, "stream": 1, "config": 1}
