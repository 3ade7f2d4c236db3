"""Exception hierarchy shared by every module."""


class RdcError(ValueError):
    """Base class; carries an optional offending element or object."""

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where

    def to_dict(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.where is not None:
            out["where"] = repr(self.where)
        return out


# ogposet
class FaceDimMismatch(RdcError):
    pass


class OverlappingOrientation(RdcError):
    pass


class NotGraded(RdcError):
    pass


class DanglingRef(RdcError):
    pass


class OwnerMismatch(RdcError):
    pass


# molecule
class NoBoundaryIso(RdcError):
    pass


class NotSubmolecule(RdcError):
    pass


class NotRound(RdcError):
    pass


class DimMismatch(RdcError):
    pass


class NotRewritable(RdcError):
    pass


class BoundaryMismatch(RdcError):
    pass


class NotAMolecule(RdcError):
    pass


# morphism
class NotOrderPreserving(RdcError):
    pass


class NotACollapse(RdcError):
    pass


class NotLocalCollapse(RdcError):
    pass


class ClassificationFailure(RdcError):
    pass


class DomainMismatch(RdcError):
    pass


# construct
class GrayOfCollapse(RdcError):
    pass


class KNotClosed(RdcError):
    pass


class KNotInBoundary(RdcError):
    pass


class NotEmbedding(RdcError):
    pass


class NotAtomSource(RdcError):
    pass


# complex
class AttachmentIncompatible(RdcError):
    pass


class GlueMismatch(RdcError):
    pass


class ShapeMismatch(RdcError):
    pass


class PasteUndefined(RdcError):
    pass


class NotParallel(RdcError):
    pass


class InvalidMarking(RdcError):
    pass
