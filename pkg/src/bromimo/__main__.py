import sys

from bromimo.cli import main

sys.exit(main())
