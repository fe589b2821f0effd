"""Layer vocabulary of the JSON model config and the model builder."""
from typing import Any, Dict, List, Optional, Tuple, Type
import inspect

import numpy as np
from pydantic import ValidationError

from src.autodiff.variable import no_grad
from src.errors import ConfigError, CVNNError
from src.models.specs import ActivationParams, ActivationSpec
from src.models.train_config import LayerConfig, TrainConfig
from src.nn import attention, layers, manifold, masks, normalization
from src.nn.activations import ACTIVATIONS, build_activation
from src.nn.module import Module, Sequential

# Constructor arguments supplied by the builder, never by the config
_INJECTED = {"self", "rng", "dtype"}
KEY_ALIASES = {"k": "kernel_size", "r": "reduction"}

LAYERS: Dict[str, Type[Module]] = {
    "CVLinear": layers.CVLinear,
    "CVConv1d": layers.CVConv1d,
    "CVConv2d": layers.CVConv2d,
    "CVConv3d": layers.CVConv3d,
    "CVConvTranspose1d": layers.CVConvTranspose1d,
    "CVConvTranspose2d": layers.CVConvTranspose2d,
    "CVConvTranspose3d": layers.CVConvTranspose3d,
    "CVAdaptiveAvgPool1d": layers.CVAdaptiveAvgPool1d,
    "CVAdaptiveAvgPool2d": layers.CVAdaptiveAvgPool2d,
    "CVAdaptiveAvgPool3d": layers.CVAdaptiveAvgPool3d,
    "CVDropout": layers.CVDropout,
    "Flatten": layers.Flatten,
    "CVSoftMax": masks.CVSoftMax,
    "PhaseSoftMax": masks.PhaseSoftMax,
    "MagSoftMax": masks.MagSoftMax,
    "ComplexRatioMask": masks.ComplexRatioMask,
    "MagMinMaxNorm": masks.MagMinMaxNorm,
    "Identity": masks.Identity,
    "CVBatchNorm": normalization.CVBatchNorm,
    "CVLayerNorm": normalization.CVLayerNorm,
    "CVSDPA": attention.CVSDPA,
    "CVMultiHead": attention.CVMultiHead,
    "CVECA": attention.CVECA,
    "CVMCA": attention.CVMCA,
    "wFMConv1d": manifold.wFMConv1d,
    "wFMConv2d": manifold.wFMConv2d,
}

ACTIVATION_KEYS = set(ActivationParams.model_fields)


def layer_keys(name: str) -> List[str]:
    """Config keys accepted by a vocabulary entry."""
    if name in ACTIVATIONS:
        return sorted(ACTIVATION_KEYS)
    params = inspect.signature(LAYERS[name].__init__).parameters
    return [p for p in params if p not in _INJECTED]


def _accepts(cls: Type[Module], arg: str) -> bool:
    return arg in inspect.signature(cls.__init__).parameters


def build_layer(
    layer: LayerConfig,
    index: int,
    cfg: Optional[TrainConfig] = None,
    rng: Optional[np.random.Generator] = None,
    dtype: Optional[str] = None,
) -> Module:
    def where(*path: Any) -> str:
        full = ("model", index) + path
        return cfg.where(full) if cfg is not None else ".".join(str(p) for p in full)

    name = layer.name
    options = {KEY_ALIASES.get(k, k): v for k, v in layer.options.items()}
    if name not in LAYERS and name not in ACTIVATIONS:
        raise ConfigError(
            f"{where('name')}: unknown layer name {name!r}; known: {known_names()}"
        )

    allowed = set(layer_keys(name))
    raw_keys = {KEY_ALIASES.get(k, k): k for k in layer.options}
    for key in options:
        if key not in allowed:
            raise ConfigError(
                f"{where(raw_keys[key])}: {name} has no key {raw_keys[key]!r}; "
                f"expected one of {sorted(allowed)}"
            )

    try:
        if name in ACTIVATIONS:
            return build_activation(ActivationSpec(name=name, params=options), dtype)
        cls = LAYERS[name]
        if _accepts(cls, "rng"):
            options["rng"] = rng
        if _accepts(cls, "dtype"):
            options["dtype"] = dtype
        return cls(**options)
    except (TypeError, ValidationError, CVNNError) as e:
        raise ConfigError(f"{where()}: cannot build {name}: {e}") from e


def build_model(
    cfg: TrainConfig, rng: np.random.Generator, dtype: Optional[str] = None
) -> Sequential:
    dtype = dtype or cfg.dtype
    built = [build_layer(layer, i, cfg, rng, dtype) for i, layer in enumerate(cfg.model)]
    model = Sequential(*built)
    if cfg.kernel_path is not None:
        for _, module in model.named_modules():
            if hasattr(module, "path") and module.path is None:
                module.path = cfg.kernel_path
    return model


def chain_check(model: Sequential, cfg: TrainConfig, sample) -> Tuple[int, ...]:
    """Dry forward in eval mode, layer by layer; returns the output shape.

    The first layer that rejects its input is reported with its config line.
    """
    was_training = model.training
    model.eval()
    try:
        return _dry_forward(model, cfg, sample)
    finally:
        model.train(was_training)


def _dry_forward(model: Sequential, cfg: TrainConfig, z) -> Tuple[int, ...]:
    with no_grad():
        for i, layer in enumerate(model):
            try:
                z = layer(z)
            except CVNNError as e:
                raise ConfigError(
                    f"{cfg.where(('model', i, 'name'))}: {cfg.model[i].name} cannot take "
                    f"input of shape {tuple(z.shape)}: {e}"
                ) from e
    return tuple(z.shape)


def known_names() -> List[str]:
    return sorted(set(LAYERS) | set(ACTIVATIONS))
