"""Exception hierarchy shared by every stage of the pipeline."""


class EmodepError(Exception):
    """Base class; ``code`` is the machine-readable name reported by the CLI."""

    code = "EmodepError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class ShapeError(EmodepError, ValueError):
    pass


class EmptySignal(EmodepError, ValueError):
    pass


class WavFormatError(EmodepError, ValueError):
    pass


class NonFiniteLoss(EmodepError, FloatingPointError):
    pass


class NonFiniteGradient(EmodepError, FloatingPointError):
    pass


class SequenceTooShort(EmodepError, ValueError):
    pass


class ModalityMismatch(EmodepError, ValueError):
    pass


class LabelMissing(EmodepError, ValueError):
    pass


class EmptyDataset(EmodepError, ValueError):
    pass


class EmptySession(EmodepError, ValueError):
    pass


class EmptyGroup(EmodepError, ValueError):
    pass


class DegenerateSplit(EmodepError, ValueError):
    pass


class ChecksumError(EmodepError, ValueError):
    pass


class CheckpointMismatch(EmodepError, ValueError):
    pass


class InvalidInput(EmodepError, ValueError):
    pass


class InvalidSpec(EmodepError, ValueError):
    pass


class IoError(EmodepError, OSError):
    pass


class MissingFile(EmodepError, FileNotFoundError):
    pass


class DuplicateId(EmodepError, ValueError):
    pass


class LabelInconsistent(EmodepError, ValueError):
    pass


class SeedFailure(EmodepError, RuntimeError):
    """Training failure for one seed of a multi-seed run."""

    def __init__(self, seed, cause):
        super().__init__(f"seed {seed}: {type(cause).__name__}: {cause}")
        self.seed = seed
        self.cause = cause


class StageError(EmodepError, RuntimeError):
    """Pipeline stage failure; ``stage`` names the stage that aborted."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

    def to_dict(self):
        d = super().to_dict()
        d["stage"] = self.stage
        d["cause"] = getattr(self.cause, "code", type(self.cause).__name__)
        return d
