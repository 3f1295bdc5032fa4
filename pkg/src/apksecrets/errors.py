"""Exception types shared across the scanner."""


class ScanError(Exception):
    """Base class for every error raised by this package."""


# --- APK container ---

class ApkError(ScanError):
    pass


class NotAnArchive(ApkError):
    """File is not a readable ZIP archive."""


class IoError(ApkError):
    """Underlying file could not be read."""


# --- ARSC resource table ---

class ArscError(ScanError):
    pass


class MalformedChunk(ArscError):
    """Chunk size or offset points outside the table."""


class UnsupportedPoolEncoding(ArscError):
    pass


# --- DEX ---

class DexError(ScanError):
    pass


class BadMagic(DexError):
    pass


class TruncatedFile(DexError):
    pass


class OffsetOutOfBounds(DexError):
    pass


class MutfDecodeError(DexError):
    """Invalid MUTF-8 byte sequence; carries the failing string index."""

    def __init__(self, message: str, index: int = -1):
        super().__init__(message)
        self.index = index


class InstructionWalkError(DexError):
    """Bytecode stream of one method could not be decoded."""


class ClassNotFound(DexError):
    pass


# --- prefilter ---

class EmptyString(ScanError):
    pass


# --- LLM pipeline ---

class ProviderError(ScanError):
    """Provider call failed after all retries."""


class MalformedResponse(ScanError):
    """Provider response stayed unparseable after the repair re-prompt."""


# --- validators ---

class RuleParseError(ScanError):
    pass


# --- report ---

class GroundTruthParseError(ScanError):
    pass


class NoFindings(ScanError):
    pass


class InvalidParams(ScanError):
    pass


# --- cli / corpus ---

class HashMismatch(ScanError):
    """Fetched file digest does not match the manifest entry."""


class ConfigError(ScanError):
    pass
