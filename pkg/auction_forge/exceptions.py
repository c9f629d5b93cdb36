"""
Copyright (c) 2026 Piotr Gawron (dev@gawron.biz)
This file is licensed under the MIT License.
For details, see the LICENSE file in the project root.

Exceptions raised by AuctionForge.
"""

from typing import Dict, Optional


class AuctionForgeError(Exception):
    """Base class for all AuctionForge errors."""


class InvalidArgumentError(AuctionForgeError, ValueError):
    """Argument outside of the documented range or of the wrong type."""


class MalformedInstanceError(InvalidArgumentError):
    """
    Instance document that cannot be parsed.

    :param field: Dotted path of the offending field (e.g. ``items[2].probs``)
    :type field: str
    :param message: Human readable reason
    :type message: str
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f'Malformed instance field "{field}": {message}')


class DegenerateInstanceError(AuctionForgeError, ValueError):
    """Instance whose values are all zero, so no scale can be anchored."""


class InstanceTooLargeError(AuctionForgeError):
    """
    Enumeration or LP size above the configured cap.

    :param message: Human readable reason
    :type message: str
    :param counts: Computed sizes that exceeded the cap
    :type counts: dict or None
    """

    def __init__(self, message: str, counts: Optional[Dict[str, int]] = None):
        self.counts = dict(counts or {})
        details = ', '.join(f'{key}={value}' for key, value in self.counts.items())
        super().__init__(f'{message} ({details})' if details else message)


class SolverError(AuctionForgeError, RuntimeError):
    """The LP/IP solver failed on a model that should be feasible and bounded."""
