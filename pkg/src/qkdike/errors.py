"""Exception hierarchy shared by every layer of the simulator."""


class QkdIkeError(Exception):
    """Base class for all simulator errors."""


# algorithm registry / KEM engine
class UnknownAlgorithm(QkdIkeError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class LengthMismatch(QkdIkeError, ValueError):
    pass


# KME
class KmeError(QkdIkeError):
    pass


class PoolExhausted(KmeError):
    pass


class UnknownKsid(KmeError):
    pass


class SessionExpired(KmeError):
    pass


class KeyNotFound(KmeError):
    pass


class AlreadyConsumed(KmeError):
    pass


class BackendUnreachable(KmeError):
    pass


# adapter / key-exchange methods
class InvalidState(QkdIkeError):
    pass


class BadLength(QkdIkeError, ValueError):
    pass


# engine, netsim, harness
class HandshakeFailure(QkdIkeError):
    """Raised when a handshake cannot complete.

    ``transcript`` holds whatever was recorded up to the failure point.
    """

    def __init__(self, reason: str, transcript=None):
        super().__init__(reason)
        self.reason = reason
        self.transcript = transcript


class EmptyQueue(QkdIkeError):
    pass


class MalformedTranscript(QkdIkeError, ValueError):
    pass


class InsufficientSamples(QkdIkeError, ValueError):
    pass


class ConfigError(QkdIkeError, ValueError):
    pass
