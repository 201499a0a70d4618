"""l2opt: learning-to-optimize toolkit for wireless resource allocation.

Classical solvers produce labeled optima; a from-scratch neural network engine
learns the parameter-to-allocation maps; a deep Q-network handles the
sequential energy-harvesting problem.
"""

__version__ = "0.1.0"
