#include <gtest/gtest.h>

#include "qmedia/embed.hpp"
#include "support.hpp"

using namespace qmedia;
using qtest::presentation;

namespace {

QMGraph k3() { return graph_from_edges(3, {{0, 1}, {0, 2}, {1, 2}}); }
QMGraph c4() { return graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}); }
QMGraph path3() { return graph_from_edges(3, {{0, 1}, {1, 2}}); }
QMGraph k4() { return graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }

int vid(const GPPresentation& p, const QMGraph& g, const std::string& w) {
    int v = g.find(word_key(reduce(p, parse_word(p, w))));
    if (v < 0) throw std::runtime_error("vertex not in ball: " + w);
    return v;
}

int hyperplane_of(const QMGraph& g, const HyperplaneSet& hs, int a, int b) {
    return hs.of_edge[static_cast<size_t>(g.edge_id(a, b))];
}

std::vector<std::vector<int>> partition_of(const std::vector<int>& label) {
    std::map<int, std::vector<int>> by;
    for (size_t i = 0; i < label.size(); ++i) by[label[i]].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> out;
    for (auto& [k, v] : by) out.push_back(v);
    std::sort(out.begin(), out.end());
    return out;
}

// Ball sizes (vertices, edges) for r = 0..4, from the brute-force closure oracle.
const std::map<std::string, std::vector<std::pair<int, int>>> kBallSizes{
    {"c4_mixed", {{1, 0}, {7, 8}, {25, 42}, {67, 128}, {157, 318}}},
    {"empty3_z2", {{1, 0}, {4, 3}, {10, 9}, {22, 21}, {46, 45}}},
    {"free_z2_z3", {{1, 0}, {4, 4}, {8, 9}, {14, 17}, {22, 27}}},
    {"p3_z3", {{1, 0}, {7, 9}, {23, 45}, {55, 117}, {119, 261}}},
    {"p4_z2", {{1, 0}, {5, 4}, {14, 16}, {32, 40}, {68, 88}}},
    {"paw", {{1, 0}, {6, 6}, {17, 27}, {35, 63}, {64, 120}}},
    {"triangle_z3", {{1, 0}, {7, 9}, {19, 45}, {27, 81}, {27, 81}}},
    {"z3_single", {{1, 0}, {3, 3}, {3, 3}, {3, 3}, {3, 3}}},
};

} // namespace

// ---------------------------------------------------------------------------
// Balls and axioms

TEST(Ball, SizesMatchClosureOracle) {
    for (const auto& [name, sizes] : kBallSizes) {
        auto p = presentation(name);
        for (int r = 0; r <= 4; ++r) {
            auto g = cayley_ball(p, r);
            EXPECT_EQ(g.n(), sizes[static_cast<size_t>(r)].first) << name << " r=" << r;
            EXPECT_EQ(g.m(), sizes[static_cast<size_t>(r)].second) << name << " r=" << r;
        }
    }
}

TEST(Ball, DistanceIsWordLength) {
    for (const auto& name : qtest::presentation_names()) {
        auto p = presentation(name);
        auto g = cayley_ball(p, 4);
        EXPECT_EQ(qtest::bfs_dist(g, g.basepoint), g.dist);
        for (int v = 0; v < g.n(); ++v) {
            auto w = word_from_key(g.keys[static_cast<size_t>(v)]);
            EXPECT_EQ(static_cast<int>(w.size()), g.dist[static_cast<size_t>(v)]);
            EXPECT_EQ(reduce(p, w), w);
        }
    }
}

TEST(Ball, SmallCases) {
    auto k = cayley_ball(presentation("z3_single"), 1);
    EXPECT_EQ(k.n(), 3);
    EXPECT_EQ(k.m(), 3);
    EXPECT_EQ(cayley_ball(presentation("paw"), 0).n(), 1);
    EXPECT_THROW(cayley_ball(presentation("p3_z3"), 6, 50), Error);
}

TEST(Axioms, Examples) {
    EXPECT_TRUE(check_quasi_median(k3()).passed());
    auto k32 = graph_from_json(qtest::load("graphs/k32.json"));
    auto r = check_quasi_median(k32);
    EXPECT_FALSE(r.no_k32);
    EXPECT_EQ(r.witnesses.at("k32").size(), 5u);
    auto c6 = check_quasi_median(graph_from_json(qtest::load("graphs/c6.json")));
    EXPECT_FALSE(c6.quadrangle);
    EXPECT_TRUE(c6.triangle);
}

TEST(Axioms, EveryFixtureBallIsQuasiMedian) {
    for (const auto& name : qtest::presentation_names())
        for (int r = 0; r <= 4; ++r) EXPECT_TRUE(check_quasi_median(cayley_ball(presentation(name), r)).passed()) << name << r;
}

// ---------------------------------------------------------------------------
// Hyperplanes

TEST(Hyperplanes, SmallGraphs) {
    auto hs = hyperplanes(k3());
    ASSERT_EQ(hs.list.size(), 1u);
    EXPECT_EQ(hs.list[0].edges.size(), 3u);
    EXPECT_EQ(hs.list[0].sectors.size(), 3u);
    auto h4 = hyperplanes(c4());
    ASSERT_EQ(h4.list.size(), 2u);
    for (const auto& J : h4.list) EXPECT_EQ(J.sectors.size(), 2u);
    EXPECT_TRUE(transverse(c4(), h4, 0, 1).value);
    auto hp = hyperplanes(path3());
    EXPECT_TRUE(tangent(path3(), hp, 0, 1).value);
}

TEST(Hyperplanes, P4Carrier) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 2);
    auto hs = hyperplanes(g);
    const auto& J = hs.list[static_cast<size_t>(hyperplane_of(g, hs, vid(p, g, "e"), vid(p, g, "a:1")))];
    for (const auto* w : {"e", "a:1", "b:1", "a:1 b:1"})
        EXPECT_TRUE(std::binary_search(J.carrier.begin(), J.carrier.end(), vid(p, g, w))) << w;
    int ja = hyperplane_of(g, hs, vid(p, g, "e"), vid(p, g, "a:1"));
    int jc = hyperplane_of(g, hs, vid(p, g, "e"), vid(p, g, "c:1"));
    EXPECT_TRUE(tangent(g, hs, ja, jc).value);
    EXPECT_FALSE(transverse(g, hs, ja, jc).value);
}

TEST(Hyperplanes, AgreeWithPairwiseOracle) {
    for (const auto& name : {"p4_z2", "paw", "triangle_z3", "c4_mixed"}) {
        auto g = cayley_ball(presentation(name), 3);
        auto hs = hyperplanes(g);
        EXPECT_EQ(partition_of(hs.of_edge), partition_of(qtest::hyperplane_classes(g))) << name;
    }
}

TEST(Hyperplanes, AlgebraicOracleAgreesOnTheWindow) {
    for (const auto& name : qtest::presentation_names()) {
        auto p = presentation(name);
        auto g = cayley_ball(p, 4);
        auto hs = hyperplanes(g, SectorMode::all);
        for (int u = 0; u < p.size(); ++u) {
            auto A = algebraic_hyperplane(p, {}, u);
            Syllable s{u, p.group(u).identity == 0 ? 1 : 0};
            int j = hyperplane_of(g, hs, g.basepoint, vid(p, g, format_word(p, {s})));
            const auto& J = hs.list[static_cast<size_t>(j)];
            std::vector<int> sec(static_cast<size_t>(g.n()), -1);
            for (size_t i = 0; i < J.sectors.size(); ++i)
                for (int v : J.sectors[i]) sec[static_cast<size_t>(v)] = static_cast<int>(i);
            std::map<int, int> sector_to_elem;
            for (int v : g.certified_vertices()) {
                auto w = word_from_key(g.keys[static_cast<size_t>(v)]);
                bool in = std::binary_search(J.carrier.begin(), J.carrier.end(), v);
                EXPECT_EQ(A.in_carrier(w), in) << name << " u=" << u << " v=" << g.labels[static_cast<size_t>(v)];
                auto [it, fresh] = sector_to_elem.emplace(sec[static_cast<size_t>(v)], A.sector_of(w));
                EXPECT_EQ(it->second, A.sector_of(w)) << name << " u=" << u;
            }
            EXPECT_EQ(A.sector_of({}), p.group(u).identity);
        }
    }
}

TEST(Hyperplanes, P4AlgebraicDescriptor) {
    auto p = presentation("p4_z2");
    auto A = algebraic_hyperplane(p, {}, 1);
    EXPECT_EQ(A.carrier_vertices(), (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(A.fibre_vertices(), (std::vector<int>{0, 2}));
    EXPECT_EQ(A.fibre_representatives(), (std::vector<Word>{{}, {{1, 1}}}));
    auto z = presentation("z3_single");
    auto g = cayley_ball(z, 2);
    auto hs = hyperplanes(g);
    ASSERT_EQ(hs.list.size(), 1u);
    EXPECT_EQ(hs.list[0].sectors.size(), 3u);
}

TEST(Hyperplanes, CarriersAndSectorsAreGated) {
    for (const auto& name : qtest::presentation_names()) {
        auto g = cayley_ball(presentation(name), 4);
        auto hs = hyperplanes(g);
        for (const auto& J : hs.list) {
            if (!J.window_exact) continue;
            EXPECT_TRUE(is_gated(g, J.carrier).gated) << name << " J" << J.id;
            for (const auto& S : J.sectors) EXPECT_TRUE(is_gated(g, S).gated) << name << " J" << J.id;
        }
    }
}

TEST(Hyperplanes, DualCliquesAreDisjoint) {
    for (const auto& name : qtest::presentation_names()) {
        auto g = cayley_ball(presentation(name), 4);
        auto hs = hyperplanes(g);
        std::map<int, std::vector<std::vector<int>>> by_hyperplane;
        for (const auto& C : cliques(g)) {
            if (C.vertices.size() < 2) continue;
            by_hyperplane[hs.of_edge[static_cast<size_t>(g.edge_id(C.vertices[0], C.vertices[1]))]].push_back(C.vertices);
        }
        for (const auto& [j, list] : by_hyperplane)
            for (size_t a = 0; a < list.size(); ++a)
                for (size_t b = a + 1; b < list.size(); ++b) {
                    std::vector<int> common;
                    std::set_intersection(list[a].begin(), list[a].end(), list[b].begin(), list[b].end(),
                                          std::back_inserter(common));
                    EXPECT_TRUE(common.empty()) << name << " J" << j;
                }
    }
}

TEST(Hyperplanes, TransverseEdgesAtAVertexSpanASquare) {
    for (const auto& name : {"p4_z2", "c4_mixed", "paw", "p3_z3"}) {
        auto g = cayley_ball(presentation(name), 4);
        auto hs = hyperplanes(g);
        for (int v : g.certified_vertices()) {
            if (g.dist[static_cast<size_t>(v)] > g.certified_radius() - 1) continue;
            const auto& nb = g.adj[static_cast<size_t>(v)];
            for (size_t i = 0; i < nb.size(); ++i)
                for (size_t k = i + 1; k < nb.size(); ++k) {
                    int j1 = hyperplane_of(g, hs, v, nb[i]), j2 = hyperplane_of(g, hs, v, nb[k]);
                    if (j1 == j2 || !transverse(g, hs, j1, j2).value) continue;
                    EXPECT_TRUE(span_square(g, v, nb[i], nb[k])) << name;
                }
        }
    }
}

// ---------------------------------------------------------------------------
// Gates, paths, cliques

TEST(Gates, Examples) {
    auto g = c4();
    EXPECT_EQ(gate(g, 1, {1, 2}), 1);
    EXPECT_EQ(gate(g, 0, {1, 2}), 1);
    EXPECT_EQ(gate(k3(), 2, {0}), 0);
    EXPECT_TRUE(is_gated(k3(), {0}).gated);
    auto e = is_gated(k3(), {0, 1});
    EXPECT_FALSE(e.gated);
    EXPECT_FALSE(e.triangles);
    auto two = is_gated(c4(), {0, 1, 2});
    EXPECT_FALSE(two.gated);
    EXPECT_FALSE(two.locally_convex);
}

TEST(Gates, CriterionMatchesDefinitionOnSmallGraphs) {
    auto prism = graph_from_edges(6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {0, 3}, {1, 4}, {2, 5}});
    for (const auto& g : {k3(), c4(), k4(), prism}) {
        std::vector<int> all(static_cast<size_t>(g.n()));
        std::iota(all.begin(), all.end(), 0);
        for (int mask = 1; mask < (1 << g.n()); ++mask) {
            std::vector<int> Y;
            for (int v = 0; v < g.n(); ++v)
                if (mask >> v & 1) Y.push_back(v);
            EXPECT_EQ(is_gated(g, Y).gated, qtest::gated_by_definition(g, Y, all)) << "mask " << mask;
        }
    }
}

TEST(Paths, Reduction) {
    auto g = c4();
    EXPECT_EQ(path_reduce(g, {0, 1, 0}).path, (std::vector<int>{0}));
    EXPECT_EQ(path_reduce(k3(), {0, 1, 2}).path, (std::vector<int>{0, 2}));
    // 2x3 grid: 0-1-2 / 3-4-5 with rungs; a detour around both squares.
    auto grid = graph_from_edges(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}});
    auto r = path_reduce(grid, {0, 3, 4, 5, 2});
    EXPECT_TRUE(r.geodesic);
    EXPECT_EQ(r.path.front(), 0);
    EXPECT_EQ(r.path.back(), 2);
    EXPECT_EQ(r.path.size(), 3u);
    long flips = std::count_if(r.log.begin(), r.log.end(), [](const PathMove& m) { return m.kind == "flip"; });
    EXPECT_EQ(flips, 2);
}

TEST(Paths, GeodesicSwap) {
    EXPECT_EQ(geodesic_swap(c4(), {0, 1, 2}, 0), (std::vector<int>{0, 3, 2}));
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 3);
    int e = vid(p, g, "e"), a = vid(p, g, "a:1");
    EXPECT_THROW(geodesic_swap(g, {e, a, vid(p, g, "a:1 c:1")}, 0), Error);
    EXPECT_EQ(geodesic_swap(g, {e, a, vid(p, g, "a:1 b:1")}, 0), (std::vector<int>{e, vid(p, g, "b:1"), vid(p, g, "a:1 b:1")}));
}

TEST(Cliques, Census) {
    auto c = cliques(k3());
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].vertices.size(), 3u);
    EXPECT_FALSE(is_median(k3()));
    EXPECT_EQ(cliques(c4()).size(), 4u);
    EXPECT_TRUE(is_median(c4()));
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 2);
    for (const auto& C : cliques(g)) {
        ASSERT_EQ(C.vertices.size(), 2u);
        auto x = word_from_key(g.keys[static_cast<size_t>(C.vertices[0])]);
        auto y = word_from_key(g.keys[static_cast<size_t>(C.vertices[1])]);
        EXPECT_EQ(multiply(p, inverse(p, x), y).size(), 1u);
    }
}

TEST(Export, GraphJsonRoundTrip) {
    auto g = cayley_ball(presentation("paw"), 3);
    auto j = to_json(g);
    auto back = graph_from_json(j);
    EXPECT_EQ(to_json(back), j);
    auto dot = to_dot(g);
    EXPECT_NE(dot.find("graph qm"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Actions

TEST(Action, OrbitsAndSubgroups) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 3);
    CayleyAction full(p, g, CayleyAction::all_syllables(p));
    EXPECT_EQ(orbits(full, OrbitObjects::vertices).classes.size(), 1u);
    auto hs = hyperplanes(g);
    EXPECT_EQ(orbits(full, OrbitObjects::hyperplanes, &hs).classes.size(), 4u);
    auto K = k3();
    AutomorphismAction trivial(K, {});
    EXPECT_EQ(orbits(trivial, OrbitObjects::vertices).classes.size(), 3u);

    auto none = action_from_subgroup(p, {}, g);
    EXPECT_TRUE(none.generators().empty());
    auto ab = action_from_subgroup(p, {parse_word(p, "a:1 b:1")}, g);
    EXPECT_EQ(enumerate_elements(ab, ab.generators(), 6, 100).size(), 2u);
}

TEST(Action, AutomorphismsMustPreserveAdjacency) {
    auto P = path3();
    EXPECT_THROW(AutomorphismAction(P, {{1, 0, 2}}), Error);
    EXPECT_NO_THROW(AutomorphismAction(P, {{2, 1, 0}}));
}

TEST(Action, StabilisersOfP4Hyperplanes) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 3);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto hs = hyperplanes(g);
    auto gens_of = [&](const char* w) {
        auto r = stabiliser(act, hs, hyperplane_of(g, hs, g.basepoint, vid(p, g, w)));
        EXPECT_TRUE(r.algebraic);
        std::set<std::string> out;
        for (const auto& x : r.generators) out.insert(act.format(x));
        return out;
    };
    EXPECT_EQ(gens_of("a:1"), (std::set<std::string>{"a:1", "b:1"}));
    EXPECT_EQ(gens_of("b:1"), (std::set<std::string>{"a:1", "b:1", "c:1"}));

    // Windowed search agrees with the formula on the group generated.
    auto j = hyperplane_of(g, hs, g.basepoint, vid(p, g, "a:1"));
    for (const auto& x : enumerate_elements(act, act.generators(), 3, 2000)) {
        bool in_formula = parabolic_membership(word_from_key(x), {0, 1});
        if (in_formula) EXPECT_TRUE(maps_hyperplane_to_itself(act, hs, j, x)) << act.format(x);
    }
}

TEST(Action, SectorActions) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 3);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto hs = hyperplanes(g);
    auto sa = sector_action(act, hs, hyperplane_of(g, hs, g.basepoint, vid(p, g, "a:1")));
    EXPECT_EQ(sa.group.group.order, 2);
    EXPECT_TRUE(sa.action.free);
    EXPECT_EQ(sa.orbit_count, 1);

    auto K = k3();
    AutomorphismAction z3(K, {{1, 2, 0}});
    auto hk = hyperplanes(K);
    auto s3 = sector_action(z3, hk, 0);
    EXPECT_EQ(s3.group.group.order, 3);
    EXPECT_TRUE(s3.action.free);
    EXPECT_EQ(s3.orbit_count, 1);

    AutomorphismAction trivial(K, {});
    auto st = sector_action(trivial, hk, 0);
    EXPECT_EQ(st.group.group.order, 1);
    EXPECT_EQ(st.orbit_count, 3);
}

// For graph products every factor hyperplane has a free transitive sector action.
TEST(Action, CayleySectorActionsAreFreeAndTransitive) {
    for (const auto& name : qtest::presentation_names()) {
        auto p = presentation(name);
        auto g = cayley_ball(p, 4);
        CayleyAction act(p, g, CayleyAction::all_syllables(p));
        auto hs = hyperplanes(g);
        for (const auto& J : hs.list) {
            if (!J.window_exact) continue;
            auto sa = sector_action(act, hs, J.id);
            EXPECT_TRUE(sa.action.free) << name;
            EXPECT_EQ(sa.orbit_count, 1) << name;
        }
    }
}

TEST(Action, Specialness) {
    for (const auto& name : qtest::presentation_names()) {
        auto p = presentation(name);
        auto g = cayley_ball(p, 4);
        CayleyAction act(p, g, CayleyAction::all_syllables(p));
        auto r = check_special(act);
        EXPECT_TRUE(r.special()) << name << r.to_json().dump();
        EXPECT_TRUE(vertex_stabilisers_trivial(act, 4)) << name;
    }
    auto T = k3();
    EXPECT_TRUE(check_special(AutomorphismAction(T, {})).special());

    auto P = path3();
    AutomorphismAction flip(P, {{2, 1, 0}});
    auto hsr = check_hyperplane_special(flip);
    EXPECT_FALSE(hsr.hyperplane_special);
    ASSERT_FALSE(hsr.witnesses.empty());
    EXPECT_EQ(hsr.witnesses[0].at("kind"), "self-tangent");

    // A reflection of K3 fixes one sector of its hyperplane.
    auto K = k3();
    AutomorphismAction refl(K, {{1, 0, 2}});
    auto rr = check_special(refl);
    EXPECT_FALSE(rr.special());
    EXPECT_FALSE(rr.free_sector_actions);
}

TEST(Action, RotativeAndPeripheral) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 4);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto hs = hyperplanes(g);
    int e = g.basepoint;
    int ja = hyperplane_of(g, hs, e, vid(p, g, "a:1"));
    int jc = hyperplane_of(g, hs, e, vid(p, g, "c:1"));
    auto rot = rotative_stabiliser(act, hs, ja);
    ASSERT_EQ(rot.generators.size(), 1u);
    EXPECT_EQ(act.format(rot.generators[0]), "a:1");
    std::vector<int> exact;
    for (const auto& J : hs.list)
        if (J.window_exact) exact.push_back(J.id);
    EXPECT_TRUE(check_rotative(act, hs, exact));

    EXPECT_TRUE(is_peripheral(g, hs, e, {ja, jc}));
    int nested = hyperplane_of(g, hs, vid(p, g, "a:1"), vid(p, g, "a:1 c:1"));
    EXPECT_FALSE(is_peripheral(g, hs, e, {ja, nested}));
}

TEST(Action, FundamentalDomains) {
    auto z = presentation("z3_single");
    auto g = cayley_ball(z, 3);
    CayleyAction act(z, g, CayleyAction::all_syllables(z));
    auto hs = hyperplanes(g);
    auto r = fundamental_domain_check(act, hs, g.basepoint, {0});
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.Y, (std::vector<int>{g.basepoint}));
    EXPECT_LE(r.max_steps, 1);

    auto none = fundamental_domain_check(act, hs, g.basepoint, {});
    EXPECT_EQ(static_cast<int>(none.Y.size()), g.n());
    EXPECT_TRUE(none.passed());
}

// ---------------------------------------------------------------------------
// Embedding

TEST(Embed, IdentityRecovery) {
    const std::map<std::string, int> radius{{"p4_z2", 6}, {"free_z2_z3", 8}, {"c4_mixed", 5}, {"p3_z3", 5},
                                            {"paw", 6},   {"empty3_z2", 7},  {"triangle_z3", 4}, {"z3_single", 3}};
    for (const auto& [name, r] : radius) {
        auto p = presentation(name);
        auto g = cayley_ball(p, r);
        CayleyAction act(p, g, CayleyAction::all_syllables(p));
        auto E = build_embedding(act);
        auto R = verify_embedding(E);
        EXPECT_TRUE(R.all_passed()) << name << R.to_json().dump();
        json w;
        EXPECT_TRUE(recovers_presentation(E, p, &w)) << name << w.dump();
        auto og = orbit_hyperplane_graph(E);
        EXPECT_EQ(og.n(), p.size());
        EXPECT_EQ(og.m(), static_cast<int>(p.edges().size()));
        // Φ is the identity up to the renaming of vertex groups.
        for (int v : g.certified_vertices()) {
            auto phi = phi_map(E, v);
            ASSERT_TRUE(phi.has_value());
            EXPECT_EQ(format_word(E.target, *phi), g.labels[static_cast<size_t>(v)]) << name;
        }
    }
}

TEST(Embed, IsometryPairCounts) {
    // certified region at radius r is the ball of radius r-2 (sizes from the oracle table)
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 6);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto R = verify_embedding(build_embedding(act));
    EXPECT_EQ(R.isometry_pairs, 68 * 67 / 2);
    EXPECT_EQ(R.homomorphism_pairs, 1000);
}

TEST(Embed, VertexGroupsFromSectorOrbits) {
    auto K = k3();
    AutomorphismAction trivial(K, {});
    auto E = build_embedding(trivial);
    auto og = orbit_hyperplane_graph(E);
    EXPECT_EQ(og.n(), 1);
    EXPECT_EQ(og.m(), 0);
    auto vg = build_vertex_groups(trivial);
    ASSERT_EQ(vg.size(), 1u);
    EXPECT_EQ(vg[0].group.order, 3);
    EXPECT_EQ(vg[0].k_order, 3);

    AutomorphismAction z3(K, {{1, 2, 0}});
    auto v3 = build_vertex_groups(z3);
    ASSERT_EQ(v3.size(), 1u);
    EXPECT_EQ(v3[0].group.order, 3);
    EXPECT_EQ(v3[0].k_order, 1);

    auto Q = k4();
    AutomorphismAction half(Q, {{1, 0, 3, 2}});
    auto v4 = build_vertex_groups(half);
    ASSERT_EQ(v4.size(), 1u);
    EXPECT_EQ(v4[0].sigma.group.order, 2);
    EXPECT_EQ(v4[0].k_order, 2);
    EXPECT_EQ(v4[0].group.order, 4);
}

TEST(Embed, SectorLabels) {
    auto K = k3();
    AutomorphismAction z3(K, {{1, 2, 0}});
    auto E = build_embedding(z3);
    auto L = label_sectors(E);
    ASSERT_EQ(L.size(), 1u);
    std::set<int> labels(L[0].label.begin(), L[0].label.end());
    EXPECT_EQ(labels, (std::set<int>{0, 1, 2}));
    EXPECT_EQ(L[0].label[static_cast<size_t>(0)], E.vg[0].group.identity);

    // On a Cayley ball every edge label is the quotient of its two sector labels.
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 5);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto EP = build_embedding(act);
    auto hs = hyperplanes(g);
    for (const auto& SL : label_sectors(EP)) {
        const auto& J = hs.list[static_cast<size_t>(SL.hyperplane)];
        const auto& G = EP.vg[static_cast<size_t>(SL.orbit)].group;
        std::vector<int> sec(static_cast<size_t>(g.n()), -1);
        for (size_t i = 0; i < J.sectors.size(); ++i)
            for (int v : J.sectors[i]) sec[static_cast<size_t>(v)] = static_cast<int>(i);
        for (int e : J.edges) {
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            if (sec[static_cast<size_t>(a)] < 0 || sec[static_cast<size_t>(b)] < 0) continue;
            int la = SL.label[static_cast<size_t>(sec[static_cast<size_t>(a)])];
            int lb = SL.label[static_cast<size_t>(sec[static_cast<size_t>(b)])];
            EXPECT_EQ(G.mul(G.inv(la), lb), EP.label(a, b)->element);
        }
    }
}

TEST(Embed, PathLabels) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 4);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto E = build_embedding(act);
    EXPECT_TRUE(label_path(E, {g.basepoint})->empty());
    int a = vid(p, g, "a:1"), ab = vid(p, g, "a:1 b:1"), b = vid(p, g, "b:1");
    auto w1 = *label_path(E, {g.basepoint, a, ab});
    auto w2 = *label_path(E, {g.basepoint, b, ab});
    EXPECT_EQ(reduce(E.target, w1), reduce(E.target, w2));
}

TEST(Embed, CorruptedLabelsBreakIsometry) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 5);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    auto E = build_embedding(act);
    int e = g.edge_id(g.basepoint, vid(p, g, "a:1"));
    for (int key : {E.os.oriented_orbit[static_cast<size_t>(2 * e)], E.os.oriented_orbit[static_cast<size_t>(2 * e + 1)]})
        E.label_of[key] = E.vg[static_cast<size_t>(E.os.hyp_orbit[static_cast<size_t>(e)])].group.identity;
    E.phi = label_paths(E, E.x1);
    auto R = verify_embedding(E);
    auto iso = R.get("isometry");
    EXPECT_FALSE(iso.passed);
    EXPECT_FALSE(iso.witness.is_null());
}

TEST(Embed, OtherStartVertex) {
    auto p = presentation("paw");
    auto g = cayley_ball(p, 5);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    EmbedOptions o;
    o.x1 = g.adj[static_cast<size_t>(g.basepoint)].front();
    auto R = verify_embedding(build_embedding(act, o), o);
    EXPECT_TRUE(R.all_passed()) << R.to_json().dump();
}

TEST(Embed, RetractCertificates) {
    auto p = presentation("p4_z2");
    auto g = cayley_ball(p, 5);
    CayleyAction act(p, g, CayleyAction::all_syllables(p));
    std::vector<int> Y;
    for (const auto* w : {"e", "a:1", "b:1", "a:1 b:1"}) Y.push_back(vid(p, g, w));
    auto rc = virtual_retract_certificate(act, {word_key({{0, 1}}), word_key({{1, 1}})}, Y);
    EXPECT_TRUE(rc.passed()) << rc.to_json().dump();
    // every hyperplane in the family is dual to a c- or d-edge
    auto hs = hyperplanes(g);
    for (int j : rc.family) {
        int e = least_edge(hs.list[static_cast<size_t>(j)]);
        EXPECT_GE(g.edge_tag[static_cast<size_t>(e)], 2);
    }

    auto z = presentation("z3_single");
    auto gz = cayley_ball(z, 3);
    CayleyAction az(z, gz, CayleyAction::all_syllables(z));
    auto rz = virtual_retract_certificate(az, {}, {gz.basepoint});
    EXPECT_TRUE(rz.passed()) << rz.to_json().dump();
    EXPECT_EQ(rz.family.size(), 1u);

    auto all = gz.certified_vertices();
    auto rall = virtual_retract_certificate(az, az.generators(), all);
    EXPECT_TRUE(rall.family.empty());
}
