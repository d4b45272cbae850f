"""Architecture descriptions; the single source for builder and planner."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

CONDITIONING_MODES = ("bias_concat", "per_language_adapter", "shared_adapter", "none")
DECODER_KINDS = ("las_lstm", "transformer")
ROUTING_MODES = ("single", "per_family")


@dataclass
class EncoderConfig:
    num_layers: int = 17
    model_dim: int = 512
    attention_heads: int = 8
    conv_kernel: int = 15
    ffn_expansion: int = 4
    conditioning: str = "bias_concat"
    adapter_bottleneck: int = 0  # 0 -> model_dim // 4
    num_languages: int = 15
    language_vector_dim: int = 0  # 0 -> num_languages
    num_groups: int = 1

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("encoder needs >= 2 layers (one before and one after time stacking)")
        if self.model_dim % self.attention_heads:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by {self.attention_heads} heads"
            )
        if self.conv_kernel % 2 != 1:
            raise ValueError("conv_kernel must be odd for same-length output")
        if self.conditioning not in CONDITIONING_MODES:
            raise ValueError(f"conditioning must be one of {CONDITIONING_MODES}")
        if self.num_languages < 1:
            raise ValueError("num_languages must be >= 1")
        if self.adapter_bottleneck == 0:
            self.adapter_bottleneck = max(self.model_dim // 4, 1)
        if self.language_vector_dim == 0:
            self.language_vector_dim = self.num_languages
        if self.language_vector_dim < self.num_languages:
            raise ValueError("language_vector_dim cannot be smaller than num_languages")


@dataclass
class DecoderConfig:
    kind: str = "las_lstm"
    num_layers: int = 2
    model_dim: int = 640
    hidden_dim: int = 2048
    attention_heads: int = 4
    routing: str = "single"
    families: dict = field(default_factory=dict)  # language id -> instance id

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValueError(f"decoder kind must be one of {DECODER_KINDS}")
        if self.routing not in ROUTING_MODES:
            raise ValueError(f"routing must be one of {ROUTING_MODES}")
        if self.kind == "transformer" and self.model_dim % self.attention_heads:
            raise ValueError(
                f"transformer model_dim {self.model_dim} not divisible by {self.attention_heads} heads"
            )
        self.families = {int(k): int(v) for k, v in self.families.items()}

    def num_instances(self):
        if self.routing == "single":
            return 1
        return max(self.families.values()) + 1

    def validate_routing(self, num_languages):
        if self.routing == "per_family":
            missing = [l for l in range(num_languages) if l not in self.families]
            if missing:
                raise ValueError(f"per_family routing lacks a family for languages {missing}")


@dataclass
class ModelConfig:
    encoder: EncoderConfig
    decoder: DecoderConfig
    vocab_size: int
    input_dim: int = 240
    dtype: str = "float32"

    def __post_init__(self):
        if self.vocab_size < 5:
            raise ValueError("vocab_size must cover the 4 specials plus at least one token")
        self.decoder.validate_routing(self.encoder.num_languages)

    @property
    def num_languages(self):
        return self.encoder.num_languages

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["encoder"] = EncoderConfig(**d["encoder"])
        d["decoder"] = DecoderConfig(**d["decoder"])
        return cls(**d)
