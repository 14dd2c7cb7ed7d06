"""Abbreviated text entry toolkit.

Turns phrases into compact abbreviations (word initials plus optional
keywords), expands abbreviations back into ranked phrase candidates with a
constrained n-gram decoder or a remote LLM, suggests same-initial word
replacements for near-miss phrases, and measures the motor-action savings
of the whole loop with an ideal-user simulator.
"""

__version__ = "0.1.0"
