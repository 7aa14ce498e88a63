from .model import (open_model, open_example_model, parse_model,
                    serialize_model, validate_model, CoverModel)

from . import model
from .model import register_check, REGISTERED_CHECKS

from .multicurve import (Multicurve, generate_gamma, transition_matrix,
                         enumerate_stable, find_obstructions)
from .spectral import (NonnegMatrix, power_lambda, is_contracting,
                       contraction_vector)
from .decompose import piece_dynamics, renormalize, classify, to_dot
from .reduction import verify_reduction_identity, check_combination

from .config import ForgeOptions, load_options
from .utils import configure_logging

from ._version import __version__
