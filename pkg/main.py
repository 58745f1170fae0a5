import os
import sys

# Ensure the src directory is on sys.path so imports work when running from the project root
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from cli.muntz import main

if __name__ == '__main__':
    sys.exit(main())
