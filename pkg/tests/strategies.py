"""Hypothesis strategies for terms, shared by the property tests."""

from __future__ import annotations

from hypothesis import strategies as st

from protocheck.terms import (
    NIL,
    Abort,
    CollectSlot,
    Dependency,
    ErrorT,
    ExecuteS,
    FailureMode,
    Fallback,
    Initialize,
    Intent,
    JsonSchema,
    Par,
    Pending,
    Prompt,
    PropertySpec,
    Repl,
    Resource,
    Restrict,
    ResultT,
    Retry,
    SlotDef,
    Token,
    Tool,
    ToolCall,
    ToolDetail,
    ToolMetadata,
    ToolsList,
    UserPrompt,
    Validate,
    Var,
)

names = st.sampled_from(["a", "b", "c", "order", "user_id", "x-1", "tool.b"])
channels = st.sampled_from(["k", "key", "c"])
texts = st.text(alphabet="abc XYZ.,:\"'", max_size=12)
literals = st.one_of(
    st.text(alphabet="abcZ \"", max_size=6),
    st.integers(-50, 50),
    st.booleans(),
    st.sampled_from([1.5, -0.25]),
    channels.map(Var),
)
ground = st.one_of(st.text(alphabet="abcZ", max_size=4), st.integers(0, 9), st.booleans())
params = st.dictionaries(names, literals, max_size=3)


@st.composite
def slot_defs(draw, n_max=3):
    ns = draw(st.lists(names, unique=True, max_size=n_max))
    out = []
    for n in ns:
        values = draw(st.lists(st.sampled_from(["ZRH", "JFK", "LHR", 1, True]), unique=True, max_size=2))
        out.append(SlotDef(n, draw(st.sampled_from(["string", "integer", "date"])), draw(texts), tuple(values)))
    return out


recoveries = st.one_of(
    st.integers(1, 4).map(Retry), names.map(Fallback), texts.map(UserPrompt), st.just(Abort())
)
failure_modes = st.lists(st.tuples(st.sampled_from(["NotFound", "AuthError", "ServiceDown"]), recoveries), max_size=2).map(
    lambda xs: tuple(FailureMode(e, r) for e, r in xs)
)
dependencies = st.lists(
    st.tuples(names, st.sampled_from(["Requires", "ProducesInputFor", "ExclusiveWith"])), max_size=2
).map(lambda xs: tuple(Dependency(t, r) for t, r in xs))


@st.composite
def intents(draw):
    slots = draw(slot_defs(5))
    k = draw(st.integers(0, len(slots)))
    return Intent(
        draw(names), draw(texts), slots[:k], slots[k:],
        draw(st.sampled_from([True, False])), draw(failure_modes), draw(dependencies),
    )


@st.composite
def schemas(draw):
    slots = draw(slot_defs())
    props = {s.name: PropertySpec(s.type_name, s.description, s.possible_values or None) for s in slots}
    required = [s.name for s in slots if draw(st.booleans())]
    return JsonSchema(tuple(required), props)


metadata = st.builds(
    ToolMetadata,
    side_effects=st.sampled_from(["read", "write", "delete", "none", None]),
    requires_approval=st.sampled_from([True, False, None]),
    failure_modes=st.one_of(st.none(), failure_modes),
    summary=st.one_of(st.none(), texts),
    dependencies=st.one_of(st.none(), dependencies),
)


@st.composite
def tools(draw, plus=None):
    meta = None
    if plus is True or (plus is None and draw(st.booleans())):
        meta = draw(metadata)
    return Tool(draw(names), draw(texts), draw(schemas()), meta)


sgd_leaves = st.one_of(
    intents(),
    st.builds(ExecuteS, names, params, st.booleans()),
    st.builds(ResultT, literals),
    st.builds(ErrorT, st.sampled_from(["MissingSlots", "Boom"]), texts),
    st.just(NIL),
)

mcp_leaves = st.one_of(
    tools(plus=False),
    st.builds(ToolCall, names, params, st.booleans()),
    st.builds(Resource, st.sampled_from(["file:///a", "mem://b"]), ground),
    st.builds(Prompt, names, params),
    st.builds(Initialize, st.lists(st.sampled_from(["tools", "sampling"]), unique=True).map(tuple)),
    st.builds(ResultT, literals),
    st.builds(ErrorT, st.sampled_from(["ValidationError"]), texts),
    st.just(NIL),
)

plus_leaves = st.one_of(
    tools(plus=True),
    st.builds(Pending, names, params, st.booleans(), st.lists(names, max_size=2).map(tuple)),
    st.builds(Token, names),
    st.builds(Validate, names, params, schemas(), st.one_of(st.none(), metadata)),
    tools(plus=True).map(ToolDetail),
    st.lists(tools(), max_size=2, unique_by=lambda t: t.name).map(lambda ts: ToolsList(tuple(ts))),
)


def _grow(children):
    return st.one_of(
        st.builds(Par, children, children),
        st.builds(Restrict, channels, children),
        st.builds(Repl, children),
    )


def _grow_sgd(children):
    return st.one_of(_grow(children), st.builds(CollectSlot, names, ground, children))


sgd_terms = st.recursive(sgd_leaves, _grow_sgd, max_leaves=5)
mcp_terms = st.recursive(mcp_leaves, _grow, max_leaves=5)
any_terms = st.one_of(sgd_terms, mcp_terms, st.recursive(st.one_of(mcp_leaves, plus_leaves), _grow, max_leaves=5))

# finite, replication-free terms with small state spaces, for semantic tests
small_mcp = st.recursive(
    st.one_of(
        st.builds(Resource, st.sampled_from(["file:///a", "mem://b"]), ground),
        st.builds(ToolCall, st.sampled_from(["a", "b"]), st.just({})),
        st.builds(ResultT, ground),
        st.just(NIL),
    ),
    lambda ch: st.one_of(st.builds(Par, ch, ch), st.builds(Restrict, channels, ch)),
    max_leaves=3,
)
