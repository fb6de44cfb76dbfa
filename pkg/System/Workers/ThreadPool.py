import threading
from queue import Queue
import logging

# Attempts per task before it is reported as failed
MAX_RETRIES = 3

# Errors that are retried; any other error fails the task on its first attempt
TRANSIENT_ERRORS = (OSError,)

# Queue item telling a worker to exit
STOP = None


class PoolWorker(threading.Thread):
    """ Daemon thread running tasks from a shared queue until it receives STOP """
    def __init__(self, task_queue, failures=None, max_retries=MAX_RETRIES, **kwargs):
        super(PoolWorker, self).__init__()
        self.task_queue     = task_queue
        self.failures       = failures
        self.max_retries    = max_retries
        self.daemon         = True
        self.start()

    def run(self):
        while True:
            item = self.task_queue.get()
            if item is STOP:
                self.task_queue.task_done()
                return

            args, kargs = item
            error = self.attempt(args, kargs)

            # Failed tasks still release the queue so wait_completion returns
            if error is not None and self.failures is not None:
                self.failures.put((args, error))
            self.task_queue.task_done()

    def attempt(self, args, kargs):
        # Returns None on success, the error otherwise
        error = None
        for attempt in range(1, self.max_retries + 1):
            try:
                self.task(*args, **kargs)
                return None
            except TRANSIENT_ERRORS as e:
                logging.warning("%s: attempt %d/%d of task %s failed: %s"
                                % (self.name, attempt, self.max_retries, args[:1], e))
                error = e
            except Exception as e:
                logging.error("%s: task %s failed: %s" % (self.name, args[:1], e))
                return e
        return error

    def task(self, *args, **kargs):
        pass


class ChunkWorker(PoolWorker):
    """ Worker storing the result of each chunk in the slot of its position """
    def __init__(self, task_queue, function=None, results=None, **kwargs):
        self.function   = function
        self.results    = results
        super(ChunkWorker, self).__init__(task_queue, **kwargs)

    def task(self, position, chunk):
        self.results[position] = self.function(chunk)
        logging.debug("Chunk %d done on %s" % (position, self.name))


class ThreadPool:
    """ Fixed set of workers consuming tasks from a bounded queue """
    def __init__(self, num_threads, worker_class=None, **worker_kwargs):
        self.tasks          = Queue(num_threads)
        self.failures       = Queue()
        self.worker_class   = PoolWorker if worker_class is None else worker_class
        self.workers        = [self.worker_class(self.tasks, failures=self.failures, **worker_kwargs)
                               for _ in range(num_threads)]

    def add_task(self, *args, **kargs):
        self.tasks.put((args, kargs))

    def wait_completion(self):
        self.tasks.join()

    def shutdown(self):
        # One STOP per worker, then wait for every thread to exit
        for _ in self.workers:
            self.tasks.put(STOP)
        for worker in self.workers:
            worker.join()

    def get_failures(self):
        failures = []
        while not self.failures.empty():
            failures.append(self.failures.get())
        return failures


def map_chunks(function, chunks, workers=1, max_retries=MAX_RETRIES):
    """
    Apply function to every chunk and return the results in chunk order.

    Chunks are independent, so the outcome does not depend on the number of workers.
    With a single worker the chunks run inline in the calling thread.
    """
    if workers is None or workers <= 1 or len(chunks) <= 1:
        return [function(chunk) for chunk in chunks]

    results = [None] * len(chunks)
    pool = ThreadPool(min(int(workers), len(chunks)), worker_class=ChunkWorker,
                      function=function, results=results, max_retries=max_retries)
    try:
        for position, chunk in enumerate(chunks):
            pool.add_task(position, chunk)
        pool.wait_completion()
    finally:
        pool.shutdown()

    failures = pool.get_failures()
    if failures:
        (position, _), error = failures[0]
        logging.error("%d of %d chunks failed" % (len(failures), len(chunks)))
        raise RuntimeError("Chunk %d failed: %s" % (position, error))
    return results
