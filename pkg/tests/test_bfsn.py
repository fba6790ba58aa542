import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from instances import (
    AB, DA, A, B, C, D, X, Y, Z, VA, VB, VC, WA, WF, WG, WH, WI,
    chain_vn, ring_substrate, substrates, triangle_vn, two_pocket_substrate, virtual_networks,
    walkthrough_substrate, walkthrough_vn,
)
from vnembed.bfsn import (
    EmbedAttempt,
    alternative_candidates,
    bfsn_embed,
    build_embed_order,
    candidate_hosts,
    embed_recursive,
    plain_bundles,
)
from vnembed.graph_core import Path, SubstrateNetwork, VirtualNetwork, cost, validate_mapping
from vnembed.reference import oracle_embed
from vnembed.subgraph_detect import SubSubstrate, candidate_subnetworks, hosting_nodes


def whole(sn):
    return SubSubstrate(frozenset(range(sn.num_nodes)), 0.0)


class TestOrder:
    def test_heaviest_node_is_root(self):
        vn = VirtualNetwork.from_edges([5, 8, 3], [(0, 1, 4), (1, 2, 2)])
        order = build_embed_order(vn)
        assert order.sequence == [1, 0, 2]
        assert order.tree_parent == {0: 1, 2: 1}

    def test_single_node(self):
        assert build_embed_order(VirtualNetwork([3], [], [])).sequence == [0]

    def test_root_is_chosen_by_resources_not_degree(self):
        # star centre h(1) with leaves p(9), q(9)
        h, p, q = 0, 1, 2
        vn = VirtualNetwork.from_edges([1, 9, 9], [(h, p, 1), (h, q, 1)])
        assert build_embed_order(vn).sequence == [p, h, q]

    def test_levels_sorted_descending(self):
        vn = walkthrough_vn()
        assert build_embed_order(vn).sequence == [VB, VA, VC]

    def test_rejects_disconnected_and_empty(self):
        with pytest.raises(ValueError):
            build_embed_order(VirtualNetwork([1, 1], [], []))
        with pytest.raises(ValueError):
            build_embed_order(VirtualNetwork([], [], []))

    @given(virtual_networks(max_nodes=7))
    def test_parents_precede_children(self, vn):
        order = build_embed_order(vn)
        assert sorted(order.sequence) == list(range(vn.num_nodes))
        pos = {v: i for i, v in enumerate(order.sequence)}
        for child, parent in order.tree_parent.items():
            assert pos[parent] < pos[child]


class TestCandidates:
    def test_root_candidates_by_resources(self):
        sn, vn = ring_substrate(), chain_vn()
        order = build_embed_order(vn)
        assert order.sequence == [X, Y, Z]
        got = candidate_hosts(vn, order, 0, whole(sn), EmbedAttempt(sn.copy()), 2)
        assert [h for h, _ in got] == [A, B, D, C]

    def test_second_node_candidates_by_link_cost(self):
        sn, vn = ring_substrate(), chain_vn()
        order = build_embed_order(vn)
        attempt = EmbedAttempt(sn.copy())
        attempt.working_sn.reserve_cpu(A, 4)
        attempt.node_map[X] = A
        got = candidate_hosts(vn, order, 1, whole(sn), attempt, 2)
        assert [h for h, _ in got] == [A, B, D, C]
        assert got[0][1] == {0: Path.empty(A)}
        assert got[1][1] == {0: Path((A, B), (AB,))}
        assert got[2][1] == {0: Path((A, D), (DA,))}
        assert got[3][1][0].length == 2

    def test_hosts_outside_the_sub_substrate_are_skipped(self):
        sn, vn = ring_substrate(), chain_vn()
        order = build_embed_order(vn)
        sub = SubSubstrate(frozenset({B, C}), 0.0)
        got = candidate_hosts(vn, order, 0, sub, EmbedAttempt(sn.copy()), 2)
        assert [h for h, _ in got] == [B, C]


class TestRecursion:
    def test_colocates_everything_on_the_richest_node(self):
        sn, vn = ring_substrate(), chain_vn()
        attempt = EmbedAttempt(sn.copy())
        assert embed_recursive(vn, build_embed_order(vn), 0, whole(sn), attempt, 2, 9)
        assert attempt.node_map == {X: A, Y: A, Z: A}
        m = attempt.partial_mapping
        assert validate_mapping(sn, vn, m, 2) == []
        assert cost(vn, m) == 9 == cost(vn, oracle_embed(vn, sn, 2, "min_cost"))

    def test_failure_leaves_attempt_untouched(self):
        sn = SubstrateNetwork.from_edges([1, 1], [(0, 1, 1)])
        vn = VirtualNetwork([5], [], [])
        attempt = EmbedAttempt(sn.copy())
        assert not embed_recursive(vn, build_embed_order(vn), 0, whole(sn), attempt, 2, 3)
        assert attempt.working_sn == sn and attempt.node_map == {} and attempt.link_map == {}

    @staticmethod
    def dead_first_root():
        # node 0 ranks first (its link to relay 3 is huge) but can neither
        # co-locate the second virtual node nor reach node 1 with bandwidth 8
        sn = SubstrateNetwork.from_edges([12, 10, 10, 0], [(0, 1, 2), (1, 2, 10), (0, 3, 100)])
        vn = VirtualNetwork.from_edges([10, 9, 1], [(0, 1, 8), (1, 2, 1)])
        return sn, vn

    def test_zero_budget_gives_up_at_first_dead_end(self):
        sn, vn = self.dead_first_root()
        res = bfsn_embed(vn, sn, 1, max_backtrack=math.inf)
        assert res.mapping.node_map == {0: 1, 1: 2, 2: 2} and res.backtracks_used == 1
        res = bfsn_embed(vn, sn, 1, max_backtrack=0)
        assert not res.accepted and res.backtracks_used == 1

    def test_counting_every_delete(self):
        sn, vn = self.dead_first_root()
        assert not bfsn_embed(vn, sn, 1, max_backtrack=0, count_every_delete=True).accepted
        res = bfsn_embed(vn, sn, 1, max_backtrack=1, count_every_delete=True)
        assert res.accepted and res.backtracks_used == 1

    def test_path_alternatives_recover_blocked_links(self):
        # x fits only node 0 and y only node 1; y's cheapest route 0-2-1 uses
        # the single link z needs, the route through relay 3 does not
        sn = SubstrateNetwork.from_edges([10, 6, 3, 0], [(0, 2, 5), (1, 2, 5), (0, 3, 5), (1, 3, 5)])
        vn = VirtualNetwork.from_edges([10, 6, 3], [(0, 1, 5), (0, 2, 5)])
        assert oracle_embed(vn, sn, 2) is not None
        assert not bfsn_embed(vn, sn, 2, math.inf, path_alternatives=False).accepted
        res = bfsn_embed(vn, sn, 2)
        assert res.accepted
        assert res.mapping.link_map[0] == Path((0, 3, 1), (2, 3))

    def test_alternatives_exclude_primary_plans(self):
        sn, vn = ring_substrate(), chain_vn()
        order = build_embed_order(vn)
        attempt = EmbedAttempt(sn.copy())
        attempt.working_sn.reserve_cpu(A, 4)
        attempt.node_map[X] = A
        primary = candidate_hosts(vn, order, 1, whole(sn), attempt, 3)
        alts = list(alternative_candidates(vn, order, 1, whole(sn), attempt, 3, plain_bundles(vn), primary))
        assert all(plan != dict(primary)[h] for h, plan in alts)
        # every 1-hop neighbour has exactly one 3-hop detour, C a second 2-hop route
        assert sorted((h, plan[0].nodes) for h, plan in alts) == [
            (B, (A, D, C, B)), (C, (A, D, C)), (D, (A, B, C, D))
        ]


class TestEmbed:
    def test_worked_example(self):
        sn, vn = walkthrough_substrate(), walkthrough_vn()
        subs = candidate_subnetworks(sn, vn, 2)
        assert [s.host_nodes for s in subs] == [frozenset({WA, WF, WG}), frozenset({WH, WI})]
        order = build_embed_order(vn)
        attempt = EmbedAttempt(sn.copy())
        root = candidate_hosts(vn, order, 0, subs[0], attempt, 2)
        assert [h for h, _ in root] == [WG, WF, WA]
        attempt.working_sn.reserve_cpu(WG, vn.cpu[VB])
        attempt.node_map[VB] = WG
        second = candidate_hosts(vn, order, 1, subs[0], attempt, 2)
        assert [h for h, _ in second] == [WG, WF, WA]
        assert second[0][1] == {0: Path.empty(WG)}
        attempt.working_sn.reserve_cpu(WG, vn.cpu[VA])
        attempt.node_map[VA] = WG
        third = candidate_hosts(vn, order, 2, subs[0], attempt, 2)
        assert [h for h, _ in third] == [WF]
        res = bfsn_embed(vn, sn, 2)
        assert res.mapping.node_map == {VA: WG, VB: WG, VC: WF}
        assert res.subnets_tried == 1 and cost(vn, res.mapping) == 140

    def test_smallest_sufficient_pocket_wins(self):
        sn, vn = two_pocket_substrate(), triangle_vn()
        subs = candidate_subnetworks(sn, vn, 2)
        assert [sorted(s.host_nodes) for s in subs] == [[2, 3, 4, 5], [6, 7, 8, 9]]
        for s in subs:
            assert oracle_embed(vn, sn, 2, hosts=s.host_nodes) is not None
        res = bfsn_embed(vn, sn, 2)
        assert set(res.mapping.node_map.values()) <= {2, 3, 4, 5}
        assert validate_mapping(sn, vn, res.mapping, 2) == []

    def test_too_large_for_any_component(self):
        res = bfsn_embed(triangle_vn(cpu=60), two_pocket_substrate(), 2)
        assert not res.accepted and res.subnets_tried == 0

    def test_single_node(self):
        res = bfsn_embed(VirtualNetwork([3], [], []), ring_substrate(), 2)
        assert res.mapping.node_map == {0: A} and res.mapping.link_map == {}

    def test_paths_start_at_the_first_endpoint(self):
        sn = SubstrateNetwork.from_edges([5, 5], [(0, 1, 10)])
        vn = VirtualNetwork.from_edges([4, 4], [(1, 0, 3)])
        m = bfsn_embed(vn, sn, 1).mapping
        assert m.link_map[0].nodes[0] == m.node_map[1]


@given(substrates(max_nodes=8), virtual_networks(max_nodes=5), st.integers(0, 3), st.sampled_from([0, 3, math.inf]))
def test_sound_and_pure(sn, vn, hops, budget):
    snap = sn.copy()
    res = bfsn_embed(vn, sn, hops, budget)
    assert sn == snap
    if res.accepted:
        assert validate_mapping(sn, vn, res.mapping, hops) == []
        assert oracle_embed(vn, sn, hops) is not None
    assert bfsn_embed(vn, sn, hops, budget) == res


@given(substrates(max_nodes=8), virtual_networks(max_nodes=4), st.integers(1, 3))
def test_first_workable_sub_substrate_is_used(sn, vn, hops):
    res = bfsn_embed(vn, sn, hops, math.inf)
    subs = candidate_subnetworks(sn, vn, hops)
    workable = [i for i, s in enumerate(subs) if oracle_embed(vn, sn, hops, hosts=s.host_nodes) is not None]
    if not workable:
        assert not res.accepted
        return
    assert res.accepted and res.subnets_tried == workable[0] + 1
    assert set(res.mapping.node_map.values()) <= subs[workable[0]].host_nodes


@given(substrates(max_nodes=7), virtual_networks(max_nodes=4), st.integers(1, 3))
def test_complete_on_one_component(sn, vn, hops):
    subs = candidate_subnetworks(sn, vn, hops)
    if len(subs) != 1:
        return
    want = oracle_embed(vn, sn, hops, hosts=hosting_nodes(sn, vn.min_cpu))
    assert bfsn_embed(vn, sn, hops, math.inf).accepted == (want is not None)
