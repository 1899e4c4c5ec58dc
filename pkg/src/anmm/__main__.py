from anmm.cli import main
import sys

sys.exit(main())
