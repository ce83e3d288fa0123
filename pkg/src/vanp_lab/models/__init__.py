from ..kinematics import integrate_unicycle
from .backbone import BackboneConfig, ImageBackbone, init_weights_kaiming
from .encoder import EncoderConfig, EncoderStack
from .policy import DownstreamPolicy
from .transformer import ContextTransformer, TransformerConfig

__all__ = [
    "BackboneConfig",
    "ContextTransformer",
    "DownstreamPolicy",
    "EncoderConfig",
    "EncoderStack",
    "ImageBackbone",
    "TransformerConfig",
    "init_weights_kaiming",
    "integrate_unicycle",
]
