import sys

from dependency_translator.cli import main

sys.exit(main())
