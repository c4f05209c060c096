import sys
from pyscf.qgraph.cli import main

sys.exit(main())
