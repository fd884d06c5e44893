"""Thread-count resolution shared by the CLI and the sampler."""

from __future__ import annotations

import os

from .errors import ValidationError

ENV_VAR = "PEARCEY_THREADS"


def resolve_threads(requested=None) -> int:
    """Explicit request, else $PEARCEY_THREADS, else the CPU count."""
    if requested is None:
        env = os.environ.get(ENV_VAR)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValidationError(f"{ENV_VAR} must be an integer, got {env!r}") from None
    if requested is None:
        return os.cpu_count() or 1
    if int(requested) < 1:
        raise ValidationError("thread count must be at least 1")
    return int(requested)
