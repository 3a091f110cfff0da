"""Test-process setup: keep BLAS single-threaded.

The matrices in this package are small enough that BLAS thread fan-out
costs more than it saves; one thread keeps the long training criteria
fast and their timings stable.  The environment variables only help if
numpy is not loaded yet (pytest plugins may import it first), so the
already-initialized pools are capped through threadpoolctl as well.
"""

import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

try:
    import threadpoolctl

    threadpoolctl.threadpool_limits(1)
except ImportError:  # fall back to whatever the env produced
    pass
