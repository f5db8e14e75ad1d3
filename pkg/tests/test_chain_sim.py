import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomic_loans.chain_sim import (
    MAX_DEPTH,
    After,
    All,
    Any,
    Before,
    Clock,
    ContractError,
    MultiSig2of2,
    PreimageOf,
    SignedBy,
    Transaction,
    TxIn,
    TxOut,
    TxRejected,
    UtxoChain,
    Witness,
    advance_clock,
    condition_from_json,
    eval_condition,
    pay_to,
    scan_revealed,
    sighash,
    submit_tx,
)
from atomic_loans.primitives import commit

from .conftest import T0


def _spend(chain, out, dest_key, *, preimages=(), signers=(), value=None):
    outputs = [TxOut(value if value is not None else out.value, pay_to(dest_key.public))]
    msg = sighash(chain.chain_id, [out.id], outputs)
    w = Witness(frozenset(preimages), [(k.public, k.sign(msg)) for k in signers])
    return Transaction([TxIn(out.id, w)], outputs)


def _htlc(secrets, keys, t):
    return Any(All(PreimageOf(commit(secrets["A1"])), SignedBy(keys["bob"].public)),
               All(SignedBy(keys["alice"].public), After(t)))


# ---- eval_condition ----

def test_conjunction_of_preimage_and_signature(secrets, keys):
    cond = All(PreimageOf(commit(secrets["A1"])), SignedBy(keys["bob"].public))
    msg = b"spend"
    w = Witness({secrets["A1"]}, [(keys["bob"].public, keys["bob"].sign(msg))])
    for now in (0, T0, 2**40):
        assert eval_condition(cond, w, now, msg)
    assert not eval_condition(cond, Witness({secrets["A1"]}), T0, msg)
    assert not eval_condition(cond, Witness({secrets["A2"]}, w.signatures), T0, msg)


def test_after_is_inclusive_before_is_exclusive():
    w = Witness()
    assert not eval_condition(After(1000), w, 999)
    assert eval_condition(After(1000), w, 1000)
    assert eval_condition(Before(1000), w, 999)
    assert not eval_condition(Before(1000), w, 1000)


def test_complementary_time_bounds_cover_every_instant():
    cond = Any(All(After(100)), All(Before(100)))
    assert all(eval_condition(cond, Witness(), now) for now in range(0, 201))


def test_complementary_time_bounds_never_overlap():
    for now in range(0, 201):
        assert eval_condition(After(100), Witness(), now) != eval_condition(Before(100), Witness(), now)


def test_multisig_needs_both(keys):
    cond = MultiSig2of2(keys["alice"].public, keys["bob"].public)
    msg = b"m"
    one = [(keys["alice"].public, keys["alice"].sign(msg))]
    both = one + [(keys["bob"].public, keys["bob"].sign(msg))]
    assert not eval_condition(cond, Witness(signatures=one), 0, msg)
    assert eval_condition(cond, Witness(signatures=both), 0, msg)
    assert not eval_condition(cond, Witness(signatures=both), 0, b"other message")


def test_signature_over_other_message_rejected(keys):
    w = Witness(signatures=[(keys["bob"].public, keys["bob"].sign(b"a"))])
    assert not eval_condition(SignedBy(keys["bob"].public), w, 0, b"b")


def test_compound_validation():
    with pytest.raises(ValueError):
        All()
    with pytest.raises(ValueError):
        Any([])
    with pytest.raises(TypeError):
        All("not a condition")
    c = After(1)
    for _ in range(MAX_DEPTH - 1):
        c = All(c)
    assert c.depth() == MAX_DEPTH
    with pytest.raises(ValueError):
        All(c)


def test_condition_json_round_trip(params):
    from atomic_loans.collateral import build_seizable_script
    cond = build_seizable_script(params)
    assert condition_from_json(cond.to_json()) == cond


@settings(max_examples=50)
@given(st.integers(0, 300), st.integers(0, 300))
def test_time_atoms_match_integer_comparison(t, now):
    assert eval_condition(After(t), Witness(), now) == (now >= t)
    assert eval_condition(Before(t), Witness(), now) == (now < t)


# ---- submit_tx ----

def test_htlc_redeem_reveals_preimage(acoin, keys, secrets):
    out = acoin.mint(_htlc(secrets, keys, T0 + 100), 500)
    assert scan_revealed(acoin) == set()
    tx = _spend(acoin, out, keys["bob"], preimages=[secrets["A1"]], signers=[keys["bob"]])
    submit_tx(acoin, tx, "bob")
    assert scan_revealed(acoin) == {secrets["A1"]}
    assert acoin.holdings(keys["bob"].public) == 500


def test_double_spend_rejected(acoin, keys, secrets):
    out = acoin.mint(_htlc(secrets, keys, T0 + 100), 500)
    tx = _spend(acoin, out, keys["bob"], preimages=[secrets["A1"]], signers=[keys["bob"]])
    acoin.submit_tx(tx)
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(tx)
    assert exc.value.reason == "double-spend"


def test_refund_before_timelock_rejected(acoin, keys, secrets, clock):
    out = acoin.mint(_htlc(secrets, keys, T0 + 100), 500)
    tx = _spend(acoin, out, keys["alice"], signers=[keys["alice"]])
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(tx)
    assert exc.value.reason == "condition-unsatisfied"
    clock.advance(T0 + 100)
    acoin.submit_tx(tx)


def test_rejection_leaves_chain_unchanged(acoin, keys, secrets):
    out = acoin.mint(_htlc(secrets, keys, T0 + 100), 500)
    before = (dict(acoin.utxos), set(acoin.revealed), len(acoin.log))
    tx = _spend(acoin, out, keys["bob"], preimages=[secrets["A1"]], signers=[keys["charlie"]])
    with pytest.raises(TxRejected):
        acoin.submit_tx(tx)
    assert (dict(acoin.utxos), set(acoin.revealed), len(acoin.log)) == before


def test_unknown_output_rejected(acoin, keys):
    from atomic_loans.chain_sim import OutPoint
    tx = Transaction([TxIn(OutPoint("00" * 32, 0))], [TxOut(1, pay_to(keys["bob"].public))])
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(tx)
    assert exc.value.reason == "unknown-output"


def test_value_mismatch_rejected(acoin, keys):
    (out,) = acoin.outputs_of(keys["alice"].public)
    tx = _spend(acoin, out, keys["bob"], signers=[keys["alice"]], value=out.value + 1)
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(tx)
    assert exc.value.reason == "value-mismatch"


def test_stray_preimage_rejected(acoin, keys, secrets):
    (out,) = acoin.outputs_of(keys["alice"].public)
    tx = _spend(acoin, out, keys["bob"], signers=[keys["alice"]], preimages=[secrets["C"]])
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(tx)
    assert exc.value.reason == "condition-unsatisfied"
    assert secrets["C"] not in acoin.revealed


def test_repeated_input_in_one_tx_rejected(acoin, keys):
    (out,) = acoin.outputs_of(keys["alice"].public)
    outputs = [TxOut(2 * out.value, pay_to(keys["bob"].public))]
    msg = sighash("ACoin", [out.id, out.id], outputs)
    w = Witness(signatures=[(keys["alice"].public, keys["alice"].sign(msg))])
    with pytest.raises(TxRejected) as exc:
        acoin.submit_tx(Transaction([TxIn(out.id, w), TxIn(out.id, w)], outputs))
    assert exc.value.reason == "double-spend"


def test_log_revalidates_and_conserves(acoin, keys, secrets, clock):
    out = acoin.mint(_htlc(secrets, keys, T0 + 100), 500)
    total = acoin.total_value()
    acoin.submit_tx(_spend(acoin, out, keys["bob"], preimages=[secrets["A1"]], signers=[keys["bob"]]))
    clock.advance(T0 + 1000)
    assert acoin.total_value() == total == acoin.minted
    assert acoin.revalidate() == []


# ---- clock ----

def test_clock_advances_monotonically():
    c = Clock(0)
    advance_clock(c, 10)
    assert c.now == 10
    advance_clock(c, 10)
    assert c.now == 10
    with pytest.raises(ValueError):
        advance_clock(c, 5)
    assert c.now == 10


def test_chains_share_one_clock(clock, acoin, bcoin):
    clock.advance(T0 + 5)
    assert acoin.clock.now == bcoin.now == T0 + 5


# ---- contract chain ----

def test_transfer_never_goes_negative(bcoin):
    with pytest.raises(ContractError) as exc:
        bcoin.transfer("alice", "bob", 1001, "alice")
    assert exc.value.reason == "insufficient-balance"
    bcoin.transfer("alice", "bob", 1000, "alice")
    assert bcoin.balance("alice") == 0
    assert bcoin.total_value() == bcoin.minted


def test_bcoin_reveal_is_monotone(bcoin, secrets):
    bcoin.reveal(secrets["B2"], "bob", "test")
    bcoin.reveal(secrets["B2"], "bob", "test")
    assert bcoin.scan_revealed() == {secrets["B2"]}
    assert bcoin.find_preimage(commit(secrets["B2"])) == secrets["B2"]


def test_fresh_chain_reveals_nothing(clock):
    assert UtxoChain(clock).scan_revealed() == set()
