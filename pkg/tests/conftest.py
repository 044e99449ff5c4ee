import pytest

from wsnmark.bitcodec import BitString

REFERENCE_SIGNAL = "0001111000001101110011000111"


@pytest.fixture
def reference_signal():
    return BitString.from_str(REFERENCE_SIGNAL)
