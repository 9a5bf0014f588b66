"""Back-translation synthetic-data toolkit.

Implements two-factor (quality x importance) candidate scoring, the Gamma
score selection/sampling strategies, beam/sampling corpus manipulation, and
a desk-scale toy translation task with exact enumeration oracles on which
every claim is testable end to end.
"""

__version__ = "0.1.0"
