"""Chain settlement against a brute-force signed-flow ledger oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketsched.env import AUCTIONEER, ChainEntry, ChainLineageError, settle_chain


def ledger_oracle(entries, terminal_priority, final_owner):
    """Recompute payouts by walking the raw trade list as cash flows."""
    balance = {}
    for buyer, seller, price in entries:
        balance[buyer] = balance.get(buyer, 0) - price
        balance[seller] = balance.get(seller, 0) + price
    balance[final_owner] = balance.get(final_owner, 0) + terminal_priority
    return balance


def test_empty_chain_pays_owner_in_full():
    assert settle_chain([], 5, final_owner=0) == {0: 5}


def test_two_trade_chain_matches_ledger():
    chain = [ChainEntry(buyer=0, seller=AUCTIONEER, price=2),
             ChainEntry(buyer=1, seller=0, price=4)]
    payouts = settle_chain(chain, 8, final_owner=1)
    assert payouts == {1: 4, 0: 2, AUCTIONEER: 2}
    assert payouts == ledger_oracle(chain, 8, 1)
    assert sum(payouts.values()) == 8


def test_bid_equal_to_priority_nets_zero():
    chain = [ChainEntry(buyer=0, seller=AUCTIONEER, price=5)]
    payouts = settle_chain(chain, 5, final_owner=0)
    assert payouts == {0: 0, AUCTIONEER: 5}
    assert payouts == ledger_oracle(chain, 5, 0)


def test_self_trade_nets_zero():
    chain = [ChainEntry(buyer=0, seller=AUCTIONEER, price=1),
             ChainEntry(buyer=0, seller=0, price=3)]
    assert settle_chain(chain, 4, final_owner=0) == {0: 3, AUCTIONEER: 1}


def test_broken_lineage_aborts():
    with pytest.raises(ChainLineageError):
        settle_chain([ChainEntry(buyer=0, seller=1, price=2)], 5, final_owner=0)
    with pytest.raises(ChainLineageError):
        settle_chain([ChainEntry(buyer=0, seller=AUCTIONEER, price=2),
                      ChainEntry(buyer=1, seller=2, price=3)], 5, final_owner=1)
    with pytest.raises(ChainLineageError):
        settle_chain([ChainEntry(buyer=0, seller=AUCTIONEER, price=2)], 5,
                     final_owner=3)


@st.composite
def contiguous_chains(draw):
    length = draw(st.integers(min_value=0, max_value=8))
    agents = draw(st.integers(min_value=1, max_value=4))
    entries = []
    seller = AUCTIONEER
    for _ in range(length):
        buyer = draw(st.integers(min_value=0, max_value=agents - 1))
        price = draw(st.integers(min_value=0, max_value=9))
        entries.append(ChainEntry(buyer=buyer, seller=seller, price=price))
        seller = buyer
    priority = draw(st.integers(min_value=1, max_value=9))
    final_owner = entries[-1].buyer if entries else draw(
        st.integers(min_value=0, max_value=agents - 1))
    return entries, priority, final_owner


@settings(max_examples=500)
@given(contiguous_chains())
def test_settlement_matches_ledger_oracle(case):
    entries, priority, final_owner = case
    payouts = settle_chain(entries, priority, final_owner)
    assert payouts == ledger_oracle(entries, priority, final_owner)
    assert sum(payouts.values()) == priority
