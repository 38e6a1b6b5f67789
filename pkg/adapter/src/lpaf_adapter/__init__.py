"""Neural sidecar for the lpaf pipeline: tagging, generation, adversarial hooks."""

from .adversarial import FGM, PGD, train_step
from .config import AdapterConfig, AdapterConfigError, load_adapter_config, resolve_checkpoint
from .generation import generate_declarations, load_generator
from .interchange import MARKER_TOKENS, interchange_tokens, repair_bio
from .tagging import load_token_classifier, predict_tags

__version__ = "0.1.0"
