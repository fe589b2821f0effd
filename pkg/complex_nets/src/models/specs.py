from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator

ActivationFamily = Literal["typeA", "typeB", "fullyComplex", "reluFamily"]
MaskName = Literal[
    "CVSoftMax", "PhaseSoftMax", "MagSoftMax", "ComplexRatioMask", "MagMinMaxNorm", "Identity"
]


class ActivationParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    b: Optional[float] = None           # modReLU bias (learnable)
    c: Optional[float] = Field(default=None, gt=0)      # CVSigLog
    r: Optional[float] = Field(default=None, gt=0)      # CVSigLog
    slope: Optional[float] = None       # CPReLU negative slope (learnable)
    convention: Optional[Literal["literal", "standard"]] = None  # CVSigmoid sign


class ActivationSpec(BaseModel):
    """Activation choice: family tag, name from the activation vocabulary, scalars."""

    model_config = ConfigDict(extra="forbid")

    name: str
    family: Optional[ActivationFamily] = None
    params: ActivationParams = Field(default_factory=ActivationParams)

    @model_validator(mode="after")
    def check_family(self) -> "ActivationSpec":
        # imported here so the activation vocabulary stays the single source
        from src.nn.activations import ACTIVATION_FAMILIES, ACTIVATION_PARAMS

        if self.name not in ACTIVATION_FAMILIES:
            raise ValueError(
                f"Unknown activation {self.name!r}; known: {sorted(ACTIVATION_FAMILIES)}"
            )
        family = ACTIVATION_FAMILIES[self.name]
        if self.family is not None and self.family != family:
            raise ValueError(f"{self.name} belongs to family {family}, not {self.family}")
        self.family = family
        allowed = ACTIVATION_PARAMS.get(self.name, set())
        given = {k for k, v in self.params.model_dump().items() if v is not None}
        extra = given - allowed
        if extra:
            raise ValueError(f"{self.name} takes no parameter(s) {sorted(extra)}")
        return self


class AttentionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d_model: int = Field(gt=0)
    heads: int = Field(default=1, gt=0)
    t: Optional[float] = Field(default=None, gt=0)  # temperature; sqrt(d) when unset
    mask_fn: MaskName = "MagSoftMax"
    transpose_mode: Literal["plain", "hermitian"] = "plain"

    @model_validator(mode="after")
    def check_heads(self) -> "AttentionConfig":
        if self.d_model % self.heads:
            raise ValueError(f"d_model {self.d_model} is not divisible by heads {self.heads}")
        return self


class ECAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kernel_size: int = Field(default=3, gt=0)
    mask_fn: MaskName = "ComplexRatioMask"

    @model_validator(mode="after")
    def check_odd(self) -> "ECAConfig":
        if self.kernel_size % 2 == 0:
            raise ValueError(f"ECA kernel size must be odd, got {self.kernel_size}")
        return self


class MCAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    reduction: int = Field(default=2, gt=0)
    activation: Optional[ActivationSpec] = Field(default_factory=lambda: ActivationSpec(name="CReLU"))
    mask_fn: MaskName = "ComplexRatioMask"


class PolarLossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    w_mag: float = Field(default=1.0, ge=0)
    w_phase: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def check_not_both_zero(self) -> "PolarLossWeights":
        if self.w_mag == 0 and self.w_phase == 0:
            raise ValueError("w_mag and w_phase cannot both be zero")
        return self
