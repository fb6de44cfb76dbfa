from .ThreadPool import PoolWorker, ChunkWorker, ThreadPool, map_chunks
