"""
Model files: TOML with optional [meta] [algebra] [constraints] [toy]
[formal] [lattice] sections, validated before anything is computed.
"""

import hashlib
import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Optional

import aiofiles
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.algebra.bfv_finite import ConstraintSystem
from src.algebra.graded_core import Derivation, GradedAlgebra, RelationSet
from src.algebra.polyparse import parse_poly
from src.algebra.toy_algebroids import Section
from src.config import config
from src.lattice.suite import LatticeSettings
from src.utils.reliability import SchemaError, VerificationError

logger = logging.getLogger(__name__)


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MetaSection(Strict):
    name: str = ""
    description: str = ""
    checks: List[str] = Field(default_factory=list)
    seed: Optional[int] = None


class DerivationSpec(Strict):
    degree: int
    images: Dict[str, str]
    zero_default: bool = False
    expect_nilpotent: bool = True


class AlgebraSection(Strict):
    generators: Dict[str, int]
    annihilators: List[str] = Field(default_factory=list)
    substitutions: Dict[str, str] = Field(default_factory=dict)
    derivations: Dict[str, DerivationSpec] = Field(default_factory=dict)

    @field_validator("generators")
    @classmethod
    def _not_empty(cls, value):
        if not value:
            raise ValueError("at least one generator is required")
        return value


class ConstraintsSection(Strict):
    n: int = Field(ge=1)
    H: List[str] = Field(min_length=1)
    f: Dict[str, str] = Field(default_factory=dict)
    max_order: Optional[int] = Field(default=None, ge=0)
    degree_bound: Optional[int] = Field(default=None, ge=0)
    with_s1: bool = True


class ToySection(Strict):
    s1: Optional[List[str]] = None
    s2: Optional[List[str]] = None
    g: Optional[str] = None
    witness_section: Optional[List[str]] = None
    witness_function: Optional[str] = None
    trials: Optional[int] = Field(default=None, ge=1)


class FormalSection(Strict):
    checks: List[str] = Field(default_factory=list)
    budget: Optional[int] = Field(default=None, ge=1)


class LatticeSection(Strict):
    d: Optional[int] = None
    sizes: Optional[List[int]] = None
    seed: Optional[int] = None
    fd_step: Optional[float] = Field(default=None, gt=0)
    k: Optional[int] = None
    oracle_states: Optional[int] = Field(default=None, ge=1)
    checks: List[str] = Field(default_factory=list)


class ModelSchema(Strict):
    meta: MetaSection = Field(default_factory=MetaSection)
    algebra: Optional[AlgebraSection] = None
    constraints: Optional[ConstraintsSection] = None
    toy: Optional[ToySection] = None
    formal: Optional[FormalSection] = None
    lattice: Optional[LatticeSection] = None


class ModelFile:
    """A validated model file plus the objects its sections describe."""

    def __init__(self, schema: ModelSchema, path: str, digest: str):
        self.schema = schema
        self.path = path
        self.hash = digest
        self._system: Optional[ConstraintSystem] = None

    @property
    def name(self) -> str:
        return self.schema.meta.name or Path(self.path).stem

    @property
    def seed(self) -> int:
        lattice = self.schema.lattice
        if lattice is not None and lattice.seed is not None:
            return lattice.seed
        if self.schema.meta.seed is not None:
            return self.schema.meta.seed
        return config.SEED

    # objects built from sections

    def graded_algebra(self) -> GradedAlgebra:
        section = self._require("algebra")
        return GradedAlgebra(section.generators.items())

    def relations(self, algebra: GradedAlgebra) -> RelationSet:
        section = self._require("algebra")
        ann = [self._poly(algebra, t, "algebra.annihilators") for t in section.annihilators]
        subs = [(self._poly(algebra, lhs, "algebra.substitutions"), self._poly(algebra, rhs, "algebra.substitutions"))
                for lhs, rhs in section.substitutions.items()]
        return RelationSet.from_polys(algebra, ann, subs)

    def derivations(self, algebra: GradedAlgebra) -> Dict[str, Derivation]:
        section = self._require("algebra")
        out = {}
        for name, spec in section.derivations.items():
            images = {g: self._poly(algebra, text, f"algebra.derivations.{name}") for g, text in spec.images.items()}
            out[name] = Derivation(algebra, spec.degree, images, spec.zero_default)
        return out

    def constraint_system(self) -> ConstraintSystem:
        if self._system is None:
            section = self._require("constraints")
            self._system = ConstraintSystem.from_strings(section.n, section.H, section.f, self.name)
        return self._system

    def section_list(self, key: str, cs: ConstraintSystem) -> Optional[Section]:
        toy = self.schema.toy
        texts = getattr(toy, key) if toy is not None else None
        if texts is None:
            return None
        return Section.of(cs, [self._poly(cs.algebra, t, f"toy.{key}") for t in texts])

    def toy_function(self, key: str, cs: ConstraintSystem):
        toy = self.schema.toy
        text = getattr(toy, key) if toy is not None else None
        return None if text is None else self._poly(cs.algebra, text, f"toy.{key}")

    def lattice_settings(self, **overrides) -> LatticeSettings:
        """Settings < model file < explicit overrides (None means not given)."""
        section = self.schema.lattice or LatticeSection()
        values = {
            "d": section.d,
            "sizes": tuple(section.sizes) if section.sizes else None,
            "seed": self.seed,
            "fd_step": section.fd_step,
            "k": section.k,
            "oracle_states": section.oracle_states,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return LatticeSettings(**{k: v for k, v in values.items() if v is not None})

    def _require(self, section: str):
        value = getattr(self.schema, section)
        if value is None:
            raise SchemaError(self.path, f"section [{section}] is required for this check")
        return value

    def _poly(self, algebra: GradedAlgebra, text: str, where: str):
        try:
            return parse_poly(algebra, text)
        except VerificationError as e:
            raise SchemaError(self.path, f"{where}: {e.message}")


def _format_errors(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"])
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_model(raw: bytes, path: str = "<memory>") -> ModelFile:
    digest = hashlib.sha256(raw).hexdigest()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as e:
        raise SchemaError(path, f"not valid TOML ({e})")
    try:
        schema = ModelSchema.model_validate(data)
    except ValidationError as e:
        raise SchemaError(path, _format_errors(e))
    logger.debug(f"Model {path} validated (sha256 {digest[:12]})")
    return ModelFile(schema, path, digest)


async def load_model(path: str) -> ModelFile:
    try:
        async with aiofiles.open(path, "rb") as f:
            raw = await f.read()
    except OSError as e:
        raise SchemaError(path, f"cannot read file ({e.strerror or e})")
    return parse_model(raw, path)
