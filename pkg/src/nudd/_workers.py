import os


def worker_count(requested: int | None = None) -> int:
    """Worker cap: explicit request, else ``NUDD_THREADS``, else the CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get('NUDD_THREADS')
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f'NUDD_THREADS must be an integer, got {env!r}') from None
    return os.cpu_count() or 1
