"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 2, 2026
"""

__version__ = "0.1.0"
