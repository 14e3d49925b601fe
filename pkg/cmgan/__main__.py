"""Allow ``python -m cmgan ...``"""
import sys

from cmgan.main import main

sys.exit(main())
