"""Exception hierarchy shared across the package."""


class KGSeqError(Exception):
    """Base class for every error raised by kgseq."""


class DataError(KGSeqError):
    """Problems with input data or persisted artifacts."""


class MissingFile(DataError):
    def __init__(self, path):
        super().__init__(f"missing required file: {path}")
        self.path = path


class MalformedLine(DataError):
    def __init__(self, path, line_number, reason):
        super().__init__(f"{path}:{line_number}: {reason}")
        self.path = path
        self.line_number = line_number
        self.reason = reason


class DanglingReference(DataError):
    def __init__(self, identifier, where=""):
        msg = f"unknown id {identifier!r}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)
        self.identifier = identifier


class DuplicateId(DataError):
    def __init__(self, identifier, where=""):
        msg = f"duplicate id {identifier!r}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)
        self.identifier = identifier


class OverlappingSplits(DataError):
    pass


class UnknownEntity(KGSeqError, KeyError):
    pass


class UnknownId(KGSeqError, KeyError):
    pass


class InvalidPrefix(KGSeqError, ValueError):
    pass


class EmptyTrie(KGSeqError, ValueError):
    pass


class DuplicateTarget(KGSeqError):
    pass


class EmptyTrainSet(KGSeqError, ValueError):
    pass


class EmptyTestSet(KGSeqError, ValueError):
    pass


class MissingArtifact(DataError):
    pass


class ArtifactVersionError(DataError):
    pass
