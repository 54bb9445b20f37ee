from circlelab.cli import main
import sys
sys.exit(main())
