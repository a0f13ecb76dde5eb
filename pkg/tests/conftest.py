import hypothesis
from hypothesis import strategies as st

from covsteer.actionspace import ActionSpace, KnobSpec

hypothesis.settings.register_profile("suite", deadline=None, max_examples=100)
hypothesis.settings.load_profile("suite")


@st.composite
def knob_specs(draw, index: int):
    kind = draw(st.sampled_from(["continuous", "discrete"]))
    name = f"knob{index}"
    if kind == "continuous":
        lo = draw(st.floats(-100, 99, allow_nan=False, allow_infinity=False))
        width = draw(st.floats(0.5, 50, allow_nan=False, allow_infinity=False))
        return KnobSpec.continuous(name, lo, lo + width)
    values = draw(
        st.lists(
            st.integers(-1000, 1000).map(float), min_size=1, max_size=12, unique=True
        )
    )
    return KnobSpec.discrete(name, values)


@st.composite
def action_spaces(draw, max_knobs: int = 5):
    n = draw(st.integers(1, max_knobs))
    return ActionSpace(knobs=tuple(draw(knob_specs(i)) for i in range(n)))
