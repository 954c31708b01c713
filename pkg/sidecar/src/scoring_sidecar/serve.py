"""Entry point: `scoring-sidecar` or `python3 -m scoring_sidecar.serve`.

Configuration is environment-driven: SIDECAR_PORT, SIDECAR_BACKEND
(hash | hf), SIDECAR_{SYMMETRIC,ASYMMETRIC,SENTIMENT,MASK}_MODEL,
SIDECAR_MAX_BATCH, SIDECAR_HASH_DIM, SIDECAR_CACHE_DIR.
"""

import uvicorn

from .app import create_app
from .models import SidecarConfig


def main() -> int:
    config = SidecarConfig.from_env()
    uvicorn.run(create_app(config), host="0.0.0.0", port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
