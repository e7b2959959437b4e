##
## Name:     rwarn.py
## Purpose:  Warning classes for the RIS link simulator
##
## Warnings are posted through the standard warnings machinery when a
## computation succeeds but something about its inputs or its result
## deserves the caller's attention: jitter outside the small-angle
## regime, or a quadrature value nudged back into its physical range.
##


class RISWarning(UserWarning):
    """Base class for all the warning types posted by this package.
    Warnings have a .message field with the descriptive text; the
    subclasses add fields as necessary.
    """
    def __init__(self, msg):
        super(RISWarning, self).__init__(msg)
        self.message = msg

    def __repr__(self):
        return '<%s: "%s">' % (type(self).__name__, self.message)

    def __str__(self):
        return self.message


class SmallAngleWarning(RISWarning):
    """Posted when the RMS pointing jitter exceeds the small-angle
    limit (5 mrad).  The .rms field gives the offending value in rad.
    """
    def __init__(self, msg, rms):
        super(SmallAngleWarning, self).__init__(msg)
        self.rms = rms


class QuadratureClampWarning(RISWarning):
    """Posted when a long-exposure quadrature value falls outside
    [0, S*rho] by no more than its tolerance and is clamped.  The .raw
    field keeps the unclamped value.
    """
    def __init__(self, msg, raw):
        super(QuadratureClampWarning, self).__init__(msg)
        self.raw = raw


__all__ = [
    "RISWarning", "SmallAngleWarning", "QuadratureClampWarning"
]

# Here there be dragons
