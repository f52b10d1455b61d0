"""Assertion-guided composition of protocols."""

from protoweave.assertions import very_well_asserted, well_asserted
from protoweave.compose import CompositionResult, Mode, SearchBudgetExceeded, compose, compose_all_modes
from protoweave.corpus import load_corpus
from protoweave.protocol import (
    Action,
    Assert,
    Choice,
    ChoiceOp,
    Consume,
    End,
    Polarity,
    Prefix,
    Protocol,
    Rec,
    Require,
    Var,
    alpha_canonicalize,
    alpha_eq,
    dual,
    validate,
)
from protoweave.semantics import Config, EnsembleConfig, explore, has_progress
from protoweave.syntax import parse, parse_file_text, print_protocol
from protoweave.verify import behaviour_preserved, check_fair, check_strong_fair, simulates

__version__ = "0.1.0"
