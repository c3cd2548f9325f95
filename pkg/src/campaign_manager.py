from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, TypeVar

from errors import InvalidArgumentError

DEFAULT_CHUNK_SIZE = 256

ChunkResult = TypeVar("ChunkResult")


class CampaignOrchestrator:
    """
    Runs a Monte-Carlo campaign as a list of fixed index chunks on a thread pool.

    The chunk boundaries depend only on (n_items, chunk_size) and the results are
    returned in chunk order, so any reduction over them gives the same numbers for
    every worker count.
    """

    def __init__(self, workers: int = 4, chunk_size: int = DEFAULT_CHUNK_SIZE) -> None:
        if chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size must be positive, got {chunk_size}")
        self.workers = max(1, int(workers))
        self.chunk_size = int(chunk_size)

    def chunks(self, n_items: int) -> List[range]:
        return [range(start, min(start + self.chunk_size, n_items)) for start in range(0, n_items, self.chunk_size)]

    def run(
        self,
        n_items: int,
        chunk_fn: Callable[[range], ChunkResult],
        label: str = "campaign"
    ) -> List[ChunkResult]:
        """
        Applies chunk_fn to every chunk of range(n_items).

        Args:
            n_items (int): number of samples, realizations or probes.
            chunk_fn: callable receiving one range of stream indices.
            label (str): tag for the log lines.

        Returns:
            The chunk results, in chunk order.
        """
        if n_items < 0:
            raise InvalidArgumentError(f"Number of items must be non-negative, got {n_items}")
        chunks = self.chunks(n_items)
        if not chunks:
            return []
        results: Dict[int, ChunkResult] = {}
        worker_count = max(1, min(self.workers, len(chunks)))
        report_every = max(1, len(chunks) // 10)
        logging.info(f"[{label}] {n_items} items in {len(chunks)} chunks on {worker_count} workers")

        with ThreadPoolExecutor(max_workers=worker_count) as executor:
            futures = {executor.submit(chunk_fn, chunk): position for position, chunk in enumerate(chunks)}
            for future in as_completed(futures):
                position = futures[future]
                try:
                    results[position] = future.result()
                except Exception as exc:
                    chunk = chunks[position]
                    logging.error(f"[{label}] Chunk {chunk.start}..{chunk.stop - 1} failed: {exc}")
                    for pending in futures:
                        pending.cancel()
                    raise
                if len(results) % report_every == 0:
                    logging.debug(f"[{label}] {len(results)}/{len(chunks)} chunks done")
        return [results[position] for position in range(len(chunks))]
