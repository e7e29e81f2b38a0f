"""Bundle Documents.

The text format of a bundle: `rank`, the lattice matrix `finite.matrix` with rationals written as "num/den" strings,
and the archimedean norm `arch` tagged by `kind` ("gram", "lp", "hpoly" or "vpoly").
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Discriminator, Field, Tag, ValidationError, model_validator
from typing_extensions import Self

from adelic_slopes.bundle import AdelicBundle, BodyMetric, HermitianMetric, body_bundle, hermitian_bundle
from adelic_slopes.convexgeom import ConvexBody, Ellipsoid, HPoly, LpBall, VPoly, materialize
from adelic_slopes.errors import AdelicSlopesError, DimensionMismatchError, ParseError
from adelic_slopes.utils import ExactRational, ExtendedReal

if TYPE_CHECKING:
    from pathlib import Path

ExactMatrix = tuple[tuple[ExactRational, ...], ...]


class ArchKind(str, Enum):
    """Archimedean norm kind of a document."""

    GRAM = "gram"
    LP = "lp"
    HPOLY = "hpoly"
    VPOLY = "vpoly"


def model_arch_discriminator(v: Any) -> str | None:  # noqa: ANN401
    """Arch Discriminator."""
    kind = v.get("kind", None) if isinstance(v, dict) else getattr(v, "kind", None)
    return kind.value if isinstance(kind, ArchKind) else kind


class _BaseDocument(BaseModel):
    """Base class for documents."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class FiniteDocument(_BaseDocument):
    """Lattice matrix, row-major; its columns are a basis of the lattice."""

    matrix: ExactMatrix


class GramArch(_BaseDocument):
    """Hermitian norm xᵀ G x."""

    kind: Literal[ArchKind.GRAM] = ArchKind.GRAM
    gram: ExactMatrix


class LpArch(_BaseDocument):
    """l^p norm, scaled so that the unit ball has the given radius."""

    kind: Literal[ArchKind.LP] = ArchKind.LP
    p: ExtendedReal
    radius: ExactRational = Fraction(1)


class HPolyArch(_BaseDocument):
    """Norm of an H-polytope unit ball."""

    kind: Literal[ArchKind.HPOLY] = ArchKind.HPOLY
    normals: ExactMatrix
    offsets: tuple[ExactRational, ...]


class VPolyArch(_BaseDocument):
    """Norm of a V-polytope unit ball."""

    kind: Literal[ArchKind.VPOLY] = ArchKind.VPOLY
    vertices: ExactMatrix


ArchDocument = Annotated[
    Annotated[GramArch, Tag(ArchKind.GRAM)]
    | Annotated[LpArch, Tag(ArchKind.LP)]
    | Annotated[HPolyArch, Tag(ArchKind.HPOLY)]
    | Annotated[VPolyArch, Tag(ArchKind.VPOLY)],
    Discriminator(model_arch_discriminator),
]


class BundleDocument(_BaseDocument):
    """Bundle Document."""

    rank: Annotated[int, Field(ge=1)]
    finite: FiniteDocument
    arch: ArchDocument

    @model_validator(mode="after")
    def _check_rank(self) -> Self:
        rows = self.finite.matrix
        if len(rows) != self.rank or any(len(row) != self.rank for row in rows):
            raise DimensionMismatchError("finite.matrix", self.rank, f"{len(rows)} rows")
        return self

    def to_bundle(self) -> AdelicBundle:
        """Build the bundle described by the document."""
        lattice = self.finite.matrix
        arch = self.arch
        if isinstance(arch, GramArch):
            return hermitian_bundle(lattice, arch.gram)
        body: ConvexBody
        if isinstance(arch, LpArch):
            body = LpBall(p=arch.p, n=self.rank, radius=arch.radius)
        elif isinstance(arch, HPolyArch):
            body = HPoly(normals=arch.normals, offsets=arch.offsets)
        else:
            body = VPoly(vertices=arch.vertices)
        return body_bundle(lattice, body)

    @classmethod
    def from_bundle(cls, bundle: AdelicBundle) -> Self:
        """Describe a bundle.

        Ellipsoids are written as Gram forms, p-sums and sections through their exact polytope or ellipsoid form.

        Raises:
            UnsupportedMetricError: For p-sums and sections without an exact form.
        """
        finite = FiniteDocument(matrix=bundle.finite.matrix)
        if isinstance(bundle.arch, HermitianMetric):
            return cls(rank=bundle.rank, finite=finite, arch=GramArch(gram=bundle.arch.gram))
        return cls(rank=bundle.rank, finite=finite, arch=_body_document(bundle.arch))


def _body_document(metric: BodyMetric) -> ArchDocument:
    body = metric.body
    if isinstance(body, LpBall):
        return LpArch(p=body.p, radius=body.radius)
    if not isinstance(body, HPoly | VPoly | Ellipsoid):
        body = materialize(body)
    if isinstance(body, HPoly):
        return HPolyArch(normals=body.normals, offsets=body.offsets)
    if isinstance(body, VPoly):
        return VPolyArch(vertices=body.vertices)
    return GramArch(gram=body.gram)


def parse_bundle(text: str | bytes, source: str = "bundle document") -> AdelicBundle:
    """Parse a JSON bundle document.

    Raises:
        ParseError: If the document is malformed or describes an invalid bundle.
    """
    try:
        return BundleDocument.model_validate_json(text).to_bundle()
    except ValidationError as error:
        raise ParseError(source, _first_error(error)) from error
    except ParseError:
        raise
    except AdelicSlopesError as error:
        raise ParseError(source, str(error)) from error


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "document"
    return f"{location}: {first['msg']}"


def load_bundle(path: Path) -> AdelicBundle:
    """Read a bundle document from a UTF-8 file.

    Raises:
        ParseError: If the file cannot be read or parsed.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ParseError(str(path), error.strerror or "unreadable file") from error
    return parse_bundle(text, source=str(path))


def dump_bundle(bundle: AdelicBundle, *, indent: int | None = 2) -> str:
    """Serialize a bundle to its JSON document."""
    return BundleDocument.from_bundle(bundle).model_dump_json(indent=indent)
