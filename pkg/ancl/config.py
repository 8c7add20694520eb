"""Configuration management for ANCL.

Run configs are flat TOML files of ``key = value`` lines, plus trailing
``[[label_rules]]`` tables for synthetic phenotypes. Every key maps to
a field of one of the typed models below; unknown keys are rejected.
"""

import os
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional

import toml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from ancl.errors import (
    ConfigTypeError,
    InvalidConfigError,
    MissingFileError,
    MissingRequiredError,
    UnknownKeyError,
)
from ancl.utils.fileio import atomic_write_text

# Load environment variables
load_dotenv()

AtlasKey = Literal['desikan', 'destrieux']
MeasureKey = Literal[
    'CT_mean',
    'CT_std',
    'GMV',
    'surface_area',
    'integrated_mean_curv',
    'gaussian_curv_index',
    'intrinsic_curv_index',
]
LogLevel = Literal['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
RESERVED_LABEL_NAMES = ('id', 'age', 'sex')


class LossVariant(str, Enum):
    """Pretraining objectives."""

    SIMCLR = 'simclr'
    YAWARE = 'yaware'
    EXPW = 'expw'
    ANATCL_LOCAL = 'anatcl_local'
    ANATCL_GLOBAL = 'anatcl_global'
    ANATSSL_LOCAL = 'anatssl_local'
    ANATSSL_GLOBAL = 'anatssl_global'
    L1_AGE = 'l1_age'
    L1_ANAT = 'l1_anat'

    @property
    def is_anatomical(self) -> bool:
        """True for variants whose weights come from the ROI table."""
        return self in (
            LossVariant.ANATCL_LOCAL,
            LossVariant.ANATCL_GLOBAL,
            LossVariant.ANATSSL_LOCAL,
            LossVariant.ANATSSL_GLOBAL,
        )

    @property
    def needs_roi(self) -> bool:
        return self.is_anatomical or self is LossVariant.L1_ANAT

    @property
    def degree_mode(self) -> Optional[str]:
        """'local' or 'global' for anatomical variants, else None."""
        if not self.is_anatomical:
            return None
        return 'local' if self.value.endswith('_local') else 'global'

    @property
    def is_supervised(self) -> bool:
        return self in (LossVariant.L1_AGE, LossVariant.L1_ANAT)


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class LossConfig(_Strict):
    """Loss family selection and weights."""

    variant: LossVariant = Field(
        default=LossVariant.ANATCL_GLOBAL,
        description="Pretraining objective",
    )
    lambda1: float = Field(default=1.0, ge=0.0, description="Weight of the anatomical term")
    lambda2: float = Field(default=1.0, ge=0.0, description="Weight of the age-kernel term")
    temperature: float = Field(default=0.1, gt=0.0, description="Divides cosine similarities")
    sigma: float = Field(default=5.0, gt=0.0, description="Age-kernel bandwidth in years")

    @model_validator(mode='after')
    def _anatssl_has_no_age_term(self) -> 'LossConfig':
        if self.variant in (LossVariant.ANATSSL_LOCAL, LossVariant.ANATSSL_GLOBAL):
            self.lambda2 = 0.0
        return self


class EncoderConfig(_Strict):
    """MLP encoder with a two-layer projection head."""

    input_dim: int = Field(default=128, ge=1)
    hidden_widths: list[int] = Field(default_factory=lambda: [256, 128], min_length=1)
    representation_dim: int = Field(default=64, ge=1, description="d_enc, width of h")
    projection_dim: int = Field(default=32, ge=1, description="d, width of z")
    seed: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def _positive_widths(self) -> 'EncoderConfig':
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must be >= 1")
        return self


class TrainConfig(_Strict):
    """Optimizer schedule and batching."""

    learning_rate: float = Field(default=1e-4, gt=0.0)
    decay_rate: float = Field(default=0.9, gt=0.0, le=1.0)
    decay_every: int = Field(default=10, ge=1, description="Epochs between lr decays")
    batch_size: int = Field(default=32, ge=2)
    epochs: int = Field(default=300, ge=1)
    loss: LossConfig = Field(default_factory=LossConfig)
    augment_strength: float = Field(default=0.5, ge=0.0, description="SimCLR view noise scale")
    augment_dropout: float = Field(default=0.1, ge=0.0, lt=1.0, description="SimCLR coordinate dropout")
    seed: int = Field(default=0, ge=0)

    def learning_rate_at(self, completed_epochs: int) -> float:
        """Step decay: lr0 * decay_rate ** (completed_epochs // decay_every)."""
        return self.learning_rate * self.decay_rate ** (completed_epochs // self.decay_every)


class LabelRule(_Strict):
    """Binary phenotype: 1 when latent factor + noise exceeds threshold.

    factor 'none' draws a label independent of every latent factor.
    """

    name: str = Field(min_length=1, pattern=r'^[A-Za-z][A-Za-z0-9_]*$')
    factor: Literal['age', 'size', 'thickness', 'none']
    threshold: float = 0.0
    noise: float = Field(default=0.0, ge=0.0)

    @model_validator(mode='after')
    def _name_not_reserved(self) -> 'LabelRule':
        if self.name in RESERVED_LABEL_NAMES:
            raise ValueError(f"label name {self.name!r} is reserved")
        return self


def _default_label_rules() -> list[LabelRule]:
    return [
        LabelRule(name='atrophy', factor='thickness', threshold=-0.5, noise=0.3),
        LabelRule(name='large_brain', factor='size', threshold=0.0, noise=0.5),
    ]


class SyntheticConfig(_Strict):
    """Latent factor cohort generator."""

    n_subjects: int = Field(default=2000, ge=10)
    input_dim: int = Field(default=128, ge=4)
    atlas: AtlasKey = 'desikan'
    measures: list[MeasureKey] = Field(
        default_factory=lambda: ['CT_mean', 'GMV', 'surface_area'], min_length=1
    )
    noise_scale: float = Field(default=0.5, ge=0.0)
    label_rules: list[LabelRule] = Field(default_factory=_default_label_rules)
    seed: int = Field(default=0, ge=0)


class ProbeConfig(_Strict):
    """Frozen-representation probes."""

    folds: int = Field(default=5, ge=2)
    ridge_penalty: float = Field(default=1.0, ge=0.0)
    probe_iterations: int = Field(default=2000, ge=1)
    probe_lr: float = Field(default=0.1, gt=0.0)
    seed: int = Field(default=0, ge=0)


class RunConfig(_Strict):
    """Flat key set read from a run config file."""

    # encoder
    input_dim: int = Field(default=128, ge=4)
    hidden_widths: list[int] = Field(default_factory=lambda: [256, 128], min_length=1)
    representation_dim: int = Field(default=64, ge=1)
    projection_dim: int = Field(default=32, ge=1)
    # training
    learning_rate: float = Field(default=1e-4, gt=0.0)
    decay_rate: float = Field(default=0.9, gt=0.0, le=1.0)
    decay_every: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=2)
    epochs: int = Field(default=300, ge=1)
    # loss
    variant: LossVariant = LossVariant.ANATCL_GLOBAL
    lambda1: float = Field(default=1.0, ge=0.0)
    lambda2: float = Field(default=1.0, ge=0.0)
    temperature: float = Field(default=0.1, gt=0.0)
    sigma: float = Field(default=5.0, gt=0.0)
    augment_strength: float = Field(default=0.5, ge=0.0)
    augment_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    # synthetic cohort
    n_subjects: int = Field(default=2000, ge=10)
    atlas: AtlasKey = 'desikan'
    measures: list[MeasureKey] = Field(
        default_factory=lambda: ['CT_mean', 'GMV', 'surface_area'], min_length=1
    )
    noise_scale: float = Field(default=0.5, ge=0.0)
    label_rules: list[LabelRule] = Field(default_factory=_default_label_rules)
    # probes
    folds: int = Field(default=5, ge=2)
    ridge_penalty: float = Field(default=1.0, ge=0.0)
    probe_iterations: int = Field(default=2000, ge=1)
    probe_lr: float = Field(default=0.1, gt=0.0)
    # general
    seed: int = Field(default=0, ge=0)
    log_level: LogLevel = 'INFO'

    @model_validator(mode='after')
    def _check_lists(self) -> 'RunConfig':
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must be >= 1")
        if len(set(self.measures)) != len(self.measures):
            raise ValueError("measures contain duplicates")
        names = [rule.name for rule in self.label_rules]
        if len(set(names)) != len(names):
            raise ValueError("label_rules contain duplicate names")
        return self

    @property
    def loss(self) -> LossConfig:
        return LossConfig(
            variant=self.variant,
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            temperature=self.temperature,
            sigma=self.sigma,
        )

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(
            input_dim=self.input_dim,
            hidden_widths=list(self.hidden_widths),
            representation_dim=self.representation_dim,
            projection_dim=self.projection_dim,
            seed=self.seed,
        )

    @property
    def train(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            decay_rate=self.decay_rate,
            decay_every=self.decay_every,
            batch_size=self.batch_size,
            epochs=self.epochs,
            loss=self.loss,
            augment_strength=self.augment_strength,
            augment_dropout=self.augment_dropout,
            seed=self.seed,
        )

    @property
    def synthetic(self) -> SyntheticConfig:
        return SyntheticConfig(
            n_subjects=self.n_subjects,
            input_dim=self.input_dim,
            atlas=self.atlas,
            measures=list(self.measures),
            noise_scale=self.noise_scale,
            label_rules=[rule.model_copy() for rule in self.label_rules],
            seed=self.seed,
        )

    @property
    def probe(self) -> ProbeConfig:
        return ProbeConfig(
            folds=self.folds,
            ridge_penalty=self.ridge_penalty,
            probe_iterations=self.probe_iterations,
            probe_lr=self.probe_lr,
            seed=self.seed,
        )

    def with_overrides(self, **overrides: Any) -> 'RunConfig':
        """Returns a re-validated copy with non-None overrides applied."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return validate_config(data)

    def dumps(self) -> str:
        """Serializes the resolved config as flat TOML."""
        data = self.model_dump(mode='json')
        header = "# Resolved ANCL run configuration\n"
        return header + toml.dumps(data)

    def dump(self, path: Path):
        """Writes the resolved config to ``path``."""
        atomic_write_text(Path(path), self.dumps())


def _raise_first(error: PydanticValidationError):
    first = error.errors()[0]
    key = '.'.join(str(part) for part in first['loc']) or '<root>'
    if first['type'] == 'extra_forbidden':
        raise UnknownKeyError(key, "unknown configuration key") from None
    if first['type'] == 'missing':
        raise MissingRequiredError(key, "required key is missing") from None
    raise ConfigTypeError(key, first['msg']) from None


def validate_config(data: dict[str, Any]) -> RunConfig:
    """Validates a flat key mapping into a RunConfig.

    Raises:
        UnknownKeyError: a key is not documented
        ConfigTypeError: a value has the wrong type or is out of range
    """
    for key, value in data.items():
        if isinstance(value, dict):
            raise UnknownKeyError(key, "config is flat; tables are not allowed")
    try:
        return RunConfig(**data)
    except PydanticValidationError as e:
        _raise_first(e)


def resolve_config_path(config_path: Optional[str | Path] = None) -> Optional[Path]:
    """Get config file path with priority order:
    1. Explicit path (must exist)
    2. Environment variable ANCL_CONFIG
    3. None, meaning all defaults
    """
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise MissingFileError(f"config file not found: {path}")
        return path

    env_config = os.getenv('ANCL_CONFIG')
    if env_config:
        path = Path(env_config)
        if not path.exists():
            raise MissingFileError(f"ANCL_CONFIG points to a missing file: {path}")
        return path

    return None


def parse_config(path: Optional[str | Path] = None) -> RunConfig:
    """Loads and validates a run config.

    Args:
        path: Config file; resolved through ANCL_CONFIG when None

    Returns:
        Typed config with defaults filled
    """
    resolved = resolve_config_path(path)
    if resolved is None:
        return RunConfig()
    try:
        data = toml.loads(resolved.read_text(encoding='utf-8'))
    except toml.TomlDecodeError as e:
        raise InvalidConfigError(str(resolved), f"not a valid key = value file: {e}") from None
    except UnicodeDecodeError:
        raise InvalidConfigError(str(resolved), "config must be UTF-8") from None
    return validate_config(data)
