import logging
import os
from pathlib import Path

from dotenv import load_dotenv

BASE_DIR = Path(__file__).parent
load_dotenv(BASE_DIR / ".env")


class Config:
    BASE_DIR = BASE_DIR
    DATA_DIR = Path(os.getenv("SSGRL_DATA_DIR", str(BASE_DIR / "data")))
    RUNS_DIR = Path(os.getenv("SSGRL_RUNS_DIR", str(BASE_DIR / "runs")))
    LOG_FILE = Path(os.getenv("SSGRL_LOG_FILE", str(BASE_DIR / "ssgrl.log")))
    LOG_LEVEL = os.getenv("SSGRL_LOG_LEVEL", "INFO").upper()

    DEFAULT_PROFILE = os.getenv("SSGRL_PROFILE", "toy").strip().lower()
    LOADER_WORKERS = int(os.getenv("SSGRL_LOADER_WORKERS", "4"))
    SHOW_PROGRESS = os.getenv("SSGRL_SHOW_PROGRESS", "false").lower() == "true"

    GRADCHECK_STEP = float(os.getenv("SSGRL_GRADCHECK_STEP", "1e-5"))
    GRADCHECK_TOLERANCE = float(os.getenv("SSGRL_GRADCHECK_TOLERANCE", "1e-4"))

    _LOGGING_INITIALIZED = False

    @classmethod
    def setup_logging(cls):
        if cls._LOGGING_INITIALIZED:
            return

        cls.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)

        logging.basicConfig(
            level=getattr(logging, cls.LOG_LEVEL, logging.INFO),
            format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            force=True,
            handlers=[
                logging.FileHandler(cls.LOG_FILE, mode="a", encoding="utf-8"),
                logging.StreamHandler(),
            ],
        )

        cls._LOGGING_INITIALIZED = True
        logging.info("✅ [SYSTEM] 统一日志系统已启动，写入 %s", cls.LOG_FILE)

    @classmethod
    def ensure_dirs(cls):
        for attr in ["DATA_DIR", "RUNS_DIR"]:
            path = getattr(cls, attr)
            path.mkdir(parents=True, exist_ok=True)
