"""Exception and warning types shared across the package."""


class FockSpaceError(ValueError):
    """Base class for state / operator errors in the truncated Fock space."""


class ModeLabelError(FockSpaceError):
    """Unknown, duplicate, or otherwise invalid mode labels (including bad
    bipartitions)."""


class StateMismatchError(FockSpaceError):
    """Two states are incompatible (different labels, mode order, or cutoffs),
    or a single state violates its own invariants (non-finite amplitudes,
    norm above one)."""


class ZeroStateError(FockSpaceError):
    """An operation would have to normalize a (numerically) zero state."""


class CutoffError(FockSpaceError):
    """Photon number beyond a mode's cutoff, or truncation leakage above the
    requested budget."""


class TruncationWarning(UserWarning):
    """A beam splitter acted on pair-photon-number blocks that the mode
    cutoffs truncate; norm may have been lost."""
