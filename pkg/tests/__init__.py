"""
Test suite for the front-speed toolkit.
"""

import os

# acceptance-scale checks take minutes; opt in with JUMPSYNC_SLOW_TESTS=1
SLOW = os.environ.get("JUMPSYNC_SLOW_TESTS") == "1"
