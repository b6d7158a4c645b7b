#!/usr/bin/env python3
# -*- coding: Utf-8 -*

import sys
from ehcrn_bench import main

if __name__ == "__main__":
    sys.exit(main())
