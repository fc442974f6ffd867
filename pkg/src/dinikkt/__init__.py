"""Dini-derivative multiplier rules for nonsmooth constrained optimization."""

from .certify import MultiplierCertificate, NoCertificate, analyze
from .dini import PerturbationSet, StepSchedule
from .equality import EqualityCertificate, equality_certificate
from .exprcore import evaluate, parse
from .problem import ProblemSpec, problem_from_dict

__version__ = "0.1.0"

__all__ = [
    "MultiplierCertificate", "NoCertificate", "analyze",
    "PerturbationSet", "StepSchedule",
    "EqualityCertificate", "equality_certificate",
    "evaluate", "parse",
    "ProblemSpec", "problem_from_dict",
]
