from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, workers=1):
    """Ordered map; fans out to processes when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
