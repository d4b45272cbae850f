from .config import EncoderConfig, DecoderConfig, ModelConfig
from .encoder import ConformerEncoder, ConformerLayer, time_stack
from .decoder import DecoderBank, LasDecoder, TransformerDecoder, route
from .beam import Hypothesis, beam_search
from .asr import AsrModel, build_model

__all__ = [
    "EncoderConfig",
    "DecoderConfig",
    "ModelConfig",
    "ConformerEncoder",
    "ConformerLayer",
    "time_stack",
    "DecoderBank",
    "LasDecoder",
    "TransformerDecoder",
    "route",
    "Hypothesis",
    "beam_search",
    "AsrModel",
    "build_model",
]
