from decaylab.cli import main

raise SystemExit(main())
