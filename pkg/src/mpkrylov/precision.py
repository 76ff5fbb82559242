"""Floating-point storage precisions and their basic properties."""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import PrecisionMismatchError

__all__ = ["Precision"]


class Precision(Enum):
    """IEEE 754 binary formats supported for matrix and vector storage."""

    binary32 = "binary32"
    binary64 = "binary64"

    @property
    def dtype(self) -> np.dtype:
        """The numpy dtype used for values stored in this precision."""
        if self is Precision.binary32:
            return np.dtype(np.float32)
        return np.dtype(np.float64)

    @property
    def unit_roundoff(self) -> float:
        """Half the spacing between 1.0 and the next representable number."""
        if self is Precision.binary32:
            return 2.0 ** -24
        return 2.0 ** -53

    @property
    def bits(self) -> int:
        return 32 if self is Precision.binary32 else 64

    @classmethod
    def from_dtype(cls, dtype) -> "Precision":
        """Map a numpy dtype to the matching precision.

        Raises PrecisionMismatchError for dtypes outside {float32, float64}.
        """
        dt = np.dtype(dtype)
        if dt == np.float32:
            return cls.binary32
        if dt == np.float64:
            return cls.binary64
        raise PrecisionMismatchError("unsupported storage dtype %r" % (dt,))

    @classmethod
    def parse(cls, name: str) -> "Precision":
        """Parse a precision from common spellings such as 'single' or 'double'."""
        key = str(name).strip().lower()
        aliases = {
            "binary32": cls.binary32,
            "single": cls.binary32,
            "float32": cls.binary32,
            "fp32": cls.binary32,
            "binary64": cls.binary64,
            "double": cls.binary64,
            "float64": cls.binary64,
            "fp64": cls.binary64,
        }
        if key not in aliases:
            raise ValueError("unknown precision %r" % (name,))
        return aliases[key]

    def short_name(self) -> str:
        """'single' or 'double', the spelling used in reports and on the command line."""
        return "single" if self is Precision.binary32 else "double"
