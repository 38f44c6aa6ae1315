import pytest

from coopkitchen.grid import (
    DuplicateStart,
    Facing,
    MissingFacility,
    MissingStart,
    NonRectangular,
    OpenBoundary,
    Tile,
    UnknownCharacter,
    parse_layout,
)


def test_parse_minimal_valid_layout():
    text = "\n".join(
        [
            "XXXXX",
            "XO1 X",
            "X2 PX",
            "XDSXX",
        ]
    )
    layout = parse_layout(text, name="mini")
    assert (layout.width, layout.height) == (5, 4)
    assert layout.starts[0].cell == (2, 1)
    assert layout.starts[1].cell == (1, 2)
    assert layout.starts[0].facing is Facing.DOWN
    assert len(layout.floor_cells()) == 4
    assert layout.cells_of(Tile.POT) == ((3, 2),)
    assert layout.cells_of(Tile.ONION_DISPENSER) == ((1, 1),)
    # start markers are floor underneath
    assert layout.is_floor((2, 1)) and layout.is_floor((1, 2))


def test_missing_dish_and_serving_rejected():
    text = "\n".join(
        [
            "XXXXX",
            "XO1 X",
            "X2 PX",
            "XXXXX",
        ]
    )
    with pytest.raises(MissingFacility) as exc:
        parse_layout(text)
    assert exc.value.kind == "Dish"


def test_duplicate_start_rejected():
    text = "\n".join(
        [
            "XXXXX",
            "XO11X",
            "X2 PX",
            "XDSXX",
        ]
    )
    with pytest.raises(DuplicateStart):
        parse_layout(text)


def test_missing_start_rejected():
    text = "\n".join(
        [
            "XXXXX",
            "XO1 X",
            "X  PX",
            "XDSXX",
        ]
    )
    with pytest.raises(MissingStart) as exc:
        parse_layout(text)
    assert exc.value.which == "2"


def test_non_rectangular_rejected():
    with pytest.raises(NonRectangular):
        parse_layout("XXXXX\nXO1X\nXDSPX\nX2XXX")


def test_unknown_character_rejected():
    text = "\n".join(
        [
            "XXXXX",
            "XO1?X",
            "X2 PX",
            "XDSXX",
        ]
    )
    with pytest.raises(UnknownCharacter) as exc:
        parse_layout(text)
    assert exc.value.pos == (3, 1)


def test_open_boundary_rejected():
    text = "\n".join(
        [
            "XXXXX",
            "XO1 X",
            "X2 P ",
            "XDSXX",
        ]
    )
    with pytest.raises(OpenBoundary) as exc:
        parse_layout(text)
    assert exc.value.pos == (4, 2)


def test_render_round_trips(open_kitchen):
    again = parse_layout(open_kitchen.render(), name=open_kitchen.name)
    assert again == open_kitchen


def test_adjacent_floor_of_walled_facility(open_kitchen):
    # onion dispenser at (1,1) touches floor below and to the right
    assert set(open_kitchen.adjacent_floor((1, 1))) == {(1, 2), (2, 1)}
    # interior pot at (3,3) touches floor on all four sides
    assert set(open_kitchen.adjacent_floor((3, 3))) == {(3, 2), (2, 3), (4, 3), (3, 4)}


def test_parser_total_on_arbitrary_text():
    from hypothesis import given, settings
    from hypothesis import strategies as st

    from coopkitchen.grid import LayoutError

    @settings(max_examples=200, deadline=None)
    @given(st.text(alphabet="XOTDPS 12?\nab", max_size=120))
    def run(text):
        try:
            parse_layout(text)
        except LayoutError:
            pass

    run()
