class TheoremViolation(AssertionError):
    """A computed structure contradicts a statement that should hold at these parameters."""


class CertificateError(AssertionError):
    """A certificate failed independent re-checking."""
