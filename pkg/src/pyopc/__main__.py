# src/pyopc/__main__.py
import sys

from pyopc.cli.main import main

sys.exit(main())
