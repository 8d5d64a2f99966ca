"""Alembic upgrades for file-backed cache databases."""
import logging
from pathlib import Path
from typing import Optional

from alembic import command
from alembic.config import Config
from alembic.script import ScriptDirectory

logger = logging.getLogger(__name__)

ALEMBIC_INI = Path(__file__).resolve().parent.parent / "alembic.ini"


def alembic_config(url: str) -> Config:
    """Alembic config pointed at `url`; leaves the application's logging alone."""
    config = Config(str(ALEMBIC_INI))
    # ConfigParser interpolates '%'
    config.set_main_option("sqlalchemy.url", url.replace("%", "%%"))
    config.attributes["configure_logger"] = False
    return config


def head_revision() -> Optional[str]:
    return ScriptDirectory.from_config(Config(str(ALEMBIC_INI))).get_current_head()


def upgrade(url: str, revision: str = "head") -> None:
    """Blocking; runs env.py, which starts its own event loop."""
    logger.info(f"Upgrading cache schema to {revision}")
    command.upgrade(alembic_config(url), revision)


def downgrade(url: str, revision: str = "base") -> None:
    command.downgrade(alembic_config(url), revision)
