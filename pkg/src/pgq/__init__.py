"""Property-graph querying through relational logic.

A property-graph data model with its relational encoding, a GQL-fragment
frontend with a direct reference interpreter, compilers into transitive-
closure and second-order logic over the encoding, PG-Schema validation,
embedded numeric theories, and register-automaton path queries — built to
be differentially tested against each other.
"""

__version__ = "0.1.0"
