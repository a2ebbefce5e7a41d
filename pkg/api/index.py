import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from weakpath.api import app

app = app
