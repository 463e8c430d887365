"""Exception hierarchy shared across the pipeline stages."""


class SlidecastError(Exception):
    """Base class for all pipeline errors."""

    stage = "pipeline"


# ingest

class IngestError(SlidecastError):
    stage = "ingest"


class EmptySource(IngestError):
    pass


class ParseFailure(IngestError):
    pass


class ExtractorUnavailable(IngestError):
    pass


# outliner

class OutlineError(SlidecastError):
    stage = "outline"


class OutlineMismatch(OutlineError):
    pass


# slidecomp

class SlideError(SlidecastError):
    stage = "slides"


class NoLayoutForType(SlideError):
    pass


class RasterizerFailure(SlideError):
    pass


class ProviderUnavailable(SlideError):
    pass


# narrator

class NarrationError(SlidecastError):
    stage = "narration"


class EmptySegment(NarrationError):
    pass


class InvalidPlan(NarrationError):
    pass


# speech

class SpeechError(SlidecastError):
    stage = "speech"


class BackendFailure(SpeechError):
    pass


class FormatMismatch(SpeechError):
    pass


class EmptyScript(SpeechError):
    pass


class SinkFailure(SpeechError):
    pass


# assembler

class AssemblyError(SlidecastError):
    stage = "assemble"


class CountMismatch(AssemblyError):
    pass


class ZeroDurationTrack(AssemblyError):
    pass


class MuxerFailure(AssemblyError):
    pass


class DurationMismatch(AssemblyError):
    pass


# model gateway

class GatewayError(SlidecastError):
    stage = "gateway"


class MissingSlot(GatewayError):
    pass


class NoEligibleBackend(GatewayError):
    pass


class TransportError(GatewayError):
    pass


class Timeout(TransportError):
    pass


class ExhaustedRetries(GatewayError):
    pass


# evaluation

class EvalError(SlidecastError):
    stage = "eval"


class JudgeUnavailable(EvalError):
    pass


class UnparseableScore(EvalError):
    pass


class LengthMismatch(EvalError):
    pass


class EmptyList(EvalError):
    pass
