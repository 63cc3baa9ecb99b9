import concurrent.futures
import os

from .debug import debug

THREADS_VARIABLE = 'MLAB_THREADS'


def thread_count():
    value = os.environ.get(THREADS_VARIABLE)
    if value:
        count = int(value)
        assert count >= 1, THREADS_VARIABLE + " must be at least 1"
        return count
    return os.cpu_count() or 1


def parallel_map(function, items):
    '''Map over items with a thread pool capped by MLAB_THREADS. Results come
    back in input order.'''
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [function(item) for item in items]
    debug('parallel map:', len(items), 'items on', workers, 'threads')
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(function, items))
