"""create cache entries

Revision ID: 5c1f0e2a9b7d
Revises:
Create Date: 2026-10-19 12:00:00.000000

"""
from typing import Sequence, Union

import sqlalchemy as sa
from alembic import op

# revision identifiers, used by Alembic.
revision: str = '5c1f0e2a9b7d'
down_revision: Union[str, None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    op.create_table(
        'cache_entries',
        sa.Column('key', sa.String(length=64), nullable=False),
        sa.Column('model_id', sa.String(length=255), nullable=False),
        sa.Column('operation', sa.String(length=64), nullable=False),
        sa.Column('value', sa.Text(), nullable=False),
        sa.Column('created_at', sa.DateTime(timezone=True), server_default=sa.text('CURRENT_TIMESTAMP'), nullable=False),
        sa.PrimaryKeyConstraint('key'),
    )
    op.create_index('ix_cache_entries_operation', 'cache_entries', ['operation'], unique=False)


def downgrade() -> None:
    op.drop_index('ix_cache_entries_operation', table_name='cache_entries')
    op.drop_table('cache_entries')
