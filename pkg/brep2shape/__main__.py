"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 19, 2026
"""

import sys

from .cli import main

sys.exit(main())
