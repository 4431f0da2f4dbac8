# Tests for py-aps
