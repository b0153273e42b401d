"""Exception hierarchy shared across the toolkit.

Every error carries a ``kind`` used by the service layer to pick HTTP status
codes and by the CLI to pick exit codes: ``validation`` -> exit 1,
``provider`` -> exit 2.
"""


class AnswersimError(Exception):
    kind = "validation"


class ProviderError(AnswersimError):
    kind = "provider"


# --- dataset loading / statistics ---

class ParseError(AnswersimError):
    """Malformed input row; message includes the 1-based row number."""


class SchemaError(AnswersimError):
    """Row parsed but violates the record schema (missing field, bad label)."""


class UnlabeledRecord(AnswersimError):
    pass


class EmptyDataset(AnswersimError):
    pass


# --- lexical metrics ---

class EmptyText(AnswersimError):
    """Text normalizes to zero tokens where the metric needs at least one."""


class UnsupportedLanguage(AnswersimError):
    pass


# --- embedding metrics ---

class DimensionMismatch(AnswersimError):
    pass


class ZeroVector(AnswersimError):
    pass


class ModelMismatch(AnswersimError):
    pass


class LayerMismatch(AnswersimError):
    pass


class EmptyCorpus(AnswersimError):
    pass


class MissingLayer(AnswersimError):
    pass


# --- correlation statistics ---

class LengthMismatch(AnswersimError):
    pass


class ConstantInput(AnswersimError):
    pass


class AllTied(AnswersimError):
    pass


# --- providers ---

class MissingManifest(ProviderError):
    pass


class HashMismatch(ProviderError):
    pass


class DimensionInconsistent(ProviderError):
    pass


class MissingEmbedding(ProviderError):
    pass


class MissingScore(ProviderError):
    pass


class Timeout(ProviderError):
    pass


class RemoteError(ProviderError):
    """Non-2xx response; message carries status code and a body excerpt."""


# --- evaluation runs ---

class EvaluationError(AnswersimError):
    """Wraps a module error with the metric and record id it occurred on."""

    def __init__(self, metric: str, record_id: str, cause: Exception):
        super().__init__(f"metric {metric!r} failed on record {record_id!r}: {cause}")
        self.metric = metric
        self.record_id = record_id
        self.cause = cause
        if isinstance(cause, AnswersimError):
            self.kind = cause.kind
