from .fsha import (
    AttackState,
    attacker_setup_step,
    gradient_penalty,
    recover,
    reconstruction_mse,
)
from .gan_client import (
    GeneratorState,
    adaptive_poison_split,
    composite_confidence,
    malicious_client_iteration,
)
from .property_inference import (
    AttrAttackState,
    attacker_setup_step_attr,
    attribute_accuracy,
    infer_attribute,
)
from .style import VisionProbe, attacker_setup_step_style, gram_matrix, style_loss

__all__ = [
    "AttackState",
    "attacker_setup_step",
    "gradient_penalty",
    "recover",
    "reconstruction_mse",
    "VisionProbe",
    "gram_matrix",
    "style_loss",
    "attacker_setup_step_style",
    "AttrAttackState",
    "attacker_setup_step_attr",
    "infer_attribute",
    "attribute_accuracy",
    "GeneratorState",
    "adaptive_poison_split",
    "malicious_client_iteration",
    "composite_confidence",
]
