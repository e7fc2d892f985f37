"""Cross-encoder relevance scorer service.

Wraps a transformer sequence-classification model behind the toolkit's
/score wire protocol (HTTP or stdio) and provides a fine-tuning entry
point. The first-stage score token, when present, is composed into the
model input between separator tokens.
"""

from .inputs import compose_pair
from .model import CrossEncoderScorer, ServiceConfig

__version__ = "0.1.0"
