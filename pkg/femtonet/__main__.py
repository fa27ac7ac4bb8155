import sys

from femtonet.cli import main
from femtonet.utils import configure_logging

configure_logging()
sys.exit(main())
