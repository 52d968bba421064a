from smpfpt.cli import main

raise SystemExit(main())
