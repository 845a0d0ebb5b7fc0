import os
from pathlib import Path

try:
    import dj_database_url
except ImportError:
    dj_database_url = None

BASE_DIR = Path(__file__).resolve().parent.parent


def env_bool(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def env_list(name: str, default: str = "") -> list[str]:
    raw = os.getenv(name, default)
    return [item.strip() for item in raw.split(",") if item.strip()]


def env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    return int(raw) if raw else default


def env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "").strip()
    return float(raw) if raw else default


SECRET_KEY = os.getenv("SECRET_KEY", "django-insecure-change-this-in-production")
DEBUG = env_bool("DEBUG", True)
ALLOWED_HOSTS = env_list("ALLOWED_HOSTS", "127.0.0.1,localhost")

INSTALLED_APPS = [
    "efficiency",
]

DATABASE_URL = os.getenv("DATABASE_URL", "")

if DATABASE_URL:
    if dj_database_url is None:
        raise RuntimeError("DATABASE_URL is set but dj-database-url is not installed.")
    DATABASES = {
        "default": dj_database_url.parse(
            DATABASE_URL,
            conn_max_age=600,
            ssl_require=not DEBUG,
        )
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": BASE_DIR / "db.sqlite3",
        }
    }

LANGUAGE_CODE = "es-co"
TIME_ZONE = "America/Bogota"
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "efficiency": {
            "handlers": ["console"],
            "level": os.getenv("EFFICIENCY_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}

# Configuracion de experimentos
EFFICIENCY_OUTPUT_DIR = Path(os.getenv("EFFICIENCY_OUTPUT_DIR", str(BASE_DIR / "results")))
EFFICIENCY_THREADS = env_int("EFFICIENCY_THREADS", 1)
EFFICIENCY_TRUNCATION_TOL = env_float("EFFICIENCY_TRUNCATION_TOL", 1e-12)
EFFICIENCY_ENUMERATION_BUDGET = env_int("EFFICIENCY_ENUMERATION_BUDGET", 5_000_000)
# Tamano de bloque de replicas: forma parte del contrato de reproducibilidad,
# cambiarlo cambia los conteos muestreados.
EFFICIENCY_REPLICATE_BLOCK = env_int("EFFICIENCY_REPLICATE_BLOCK", 1024)
EFFICIENCY_MASTER_SEED = env_int("EFFICIENCY_MASTER_SEED", 20240611)
