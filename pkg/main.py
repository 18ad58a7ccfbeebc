"""
hsctrl command-line entry point, equivalent to the installed ``hsctrl`` script
"""

import sys

from hsctrl.cli import main

if __name__ == "__main__":
    sys.exit(main())
