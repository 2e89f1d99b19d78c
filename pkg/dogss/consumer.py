import logging
from queue import Empty
from threading import Thread

import monotonic


class Consumer(Thread):
    """Consumes regression tasks from a shared queue."""

    log = logging.getLogger("dogss")

    def __init__(self, queue, handle, on_error=None, poll_interval=0.5):
        """Create a consumer thread calling `handle(item)` for every queued item."""
        Thread.__init__(self)
        # Make consumer a daemon thread so that it doesn't block program exit
        self.daemon = True
        self.queue = queue
        self.handle = handle
        self.on_error = on_error
        self.poll_interval = poll_interval
        # set here: a pause() right after construction must not be overridden by run()
        self.running = True
        self.processed = 0
        self.failed = 0

    def run(self):
        """Runs the consumer."""
        self.log.debug("consumer is running...")
        while self.running:
            self.work()

        self.log.debug("consumer exited.")

    def pause(self):
        """Pause the consumer."""
        self.running = False

    def drain(self):
        """Process queued items on the calling thread until the queue is empty."""
        while self.work(block=False):
            pass

    def work(self, block=True):
        """Handle the next item, return whether there was one."""
        try:
            item = self.queue.get(block=block, timeout=self.poll_interval if block else None)
        except Empty:
            return False

        start_time = monotonic.monotonic()
        try:
            self.handle(item)
            self.processed += 1
        except Exception as e:
            self.failed += 1
            self.log.error("error handling %s: %s", item, e)
            if self.on_error:
                self.on_error(e, item)
        finally:
            self.log.debug("handled %s in %.3fs", item, monotonic.monotonic() - start_time)
            # mark item as acknowledged from queue
            self.queue.task_done()
        return True
