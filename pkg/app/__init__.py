from app.config import *  # noqa
from app.models import *  # noqa
from app.schemas import *  # noqa
