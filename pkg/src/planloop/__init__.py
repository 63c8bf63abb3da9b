"""planloop: a closed-loop planning benchmark engine.

Symbolic planning over a typed PDDL fragment, two interactive environments
(block stacking and a partially observable household), two evaluation
protocols (question-answer grounding and direct plan proposal), pluggable
agents, and a statistics layer with leaderboards and compounding-error
curves.
"""

__version__ = "0.1.0"
