import pytest

from coopkitchen.grid import parse_layout

# Open kitchen: pot on an interior island, everything else wall-mounted.
OPEN_KITCHEN = "\n".join(
    [
        "XXXXXXX",
        "XO    X",
        "X1   TX",
        "X2 P  X",
        "XD   SX",
        "XXXXXXX",
    ]
)

# Single corridor with an alcove branch below it; agents start at opposite
# ends with their duties behind each other.
CORRIDOR_ALCOVE = "\n".join(
    [
        "XXXXSXX",
        "O1   2X",
        "XX XXPX",
        "XD XXXX",
        "X  XXXX",
        "XXXXXXX",
    ]
)


@pytest.fixture
def open_kitchen():
    return parse_layout(OPEN_KITCHEN, name="open_kitchen")


@pytest.fixture
def corridor_alcove():
    return parse_layout(CORRIDOR_ALCOVE, name="corridor_alcove")
