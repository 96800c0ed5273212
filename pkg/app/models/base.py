from sqlalchemy.orm import declarative_base

# Base compartilhada para todos os modelos
Base = declarative_base()
