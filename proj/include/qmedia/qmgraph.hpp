#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "qmedia/words.hpp"

namespace qmedia {

struct KeyHash {
    std::size_t operator()(const std::vector<int>& k) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (int x : k) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

using KeyIndex = std::unordered_map<std::vector<int>, int, KeyHash>;

inline constexpr std::size_t kDefaultBallBudget = 100000;

//! Finite simple graph with a basepoint and a certified region.
//! Structural claims are exact for vertices with dist <= radius - certified_interior.
struct QMGraph {
    std::vector<std::vector<int>> adj;  //!< sorted neighbour lists
    std::vector<std::string> labels;
    std::vector<std::vector<int>> keys;  //!< canonical keys when the graph is a ball of a group(oid)
    KeyIndex key_index;
    std::vector<std::pair<int, int>> edges;  //!< u < v, sorted
    std::vector<int> edge_tag;               //!< generator type of each edge, -1 if unknown
    std::vector<std::string> tag_names;
    int basepoint = 0;
    std::vector<int> dist;
    int radius = 0;
    int certified_interior = 0;

    int n() const { return static_cast<int>(adj.size()); }
    int m() const { return static_cast<int>(edges.size()); }
    int certified_radius() const { return radius - certified_interior; }
    bool certified(int v) const { return dist[static_cast<size_t>(v)] <= certified_radius(); }

    bool adjacent(int u, int v) const {
        const auto& a = adj[static_cast<size_t>(u)];
        return std::binary_search(a.begin(), a.end(), v);
    }

    int edge_id(int u, int v) const {
        if (u > v) std::swap(u, v);
        auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
        if (it == edges.end() || *it != std::make_pair(u, v)) return -1;
        return static_cast<int>(it - edges.begin());
    }

    int find(const std::vector<int>& key) const {
        auto it = key_index.find(key);
        return it == key_index.end() ? -1 : it->second;
    }

    std::vector<int> certified_vertices() const {
        std::vector<int> out;
        for (int v = 0; v < n(); ++v)
            if (certified(v)) out.push_back(v);
        return out;
    }

    std::vector<int> common_neighbours(int u, int v) const {
        std::vector<int> out;
        const auto& a = adj[static_cast<size_t>(u)];
        const auto& b = adj[static_cast<size_t>(v)];
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    }
};

inline std::vector<int> bfs(const QMGraph& g, int src) {
    std::vector<int> d(static_cast<size_t>(g.n()), -1);
    std::vector<int> q{src};
    d[static_cast<size_t>(src)] = 0;
    for (size_t i = 0; i < q.size(); ++i)
        for (int y : g.adj[static_cast<size_t>(q[i])])
            if (d[static_cast<size_t>(y)] < 0) {
                d[static_cast<size_t>(y)] = d[static_cast<size_t>(q[i])] + 1;
                q.push_back(y);
            }
    return d;
}

//! Sorts adjacency, indexes edges and recomputes basepoint distances.
inline void finalize(QMGraph& g) {
    for (auto& a : g.adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < g.n(); ++u) {
        for (int v : g.adj[static_cast<size_t>(u)]) {
            if (u == v) fail("InvalidInput", "loop at vertex " + std::to_string(u));
            if (u < v) edges.emplace_back(u, v);
        }
    }
    std::vector<int> tags(edges.size(), -1);
    if (!g.edges.empty() && g.edge_tag.size() == g.edges.size()) {
        std::map<std::pair<int, int>, int> old;
        for (size_t i = 0; i < g.edges.size(); ++i) old[g.edges[i]] = g.edge_tag[i];
        for (size_t i = 0; i < edges.size(); ++i) {
            auto it = old.find(edges[i]);
            if (it != old.end()) tags[i] = it->second;
        }
    }
    g.edges = std::move(edges);
    g.edge_tag = std::move(tags);
    if (g.labels.size() != static_cast<size_t>(g.n())) {
        g.labels.resize(static_cast<size_t>(g.n()));
        for (int v = 0; v < g.n(); ++v)
            if (g.labels[static_cast<size_t>(v)].empty()) g.labels[static_cast<size_t>(v)] = std::to_string(v);
    }
    g.dist = bfs(g, g.basepoint);
    for (int v = 0; v < g.n(); ++v)
        if (g.dist[static_cast<size_t>(v)] < 0) fail("InvalidInput", "graph is not connected", {{"unreached", v}});
}

//! A finite graph from an edge list; the whole graph is certified.
inline QMGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges, int basepoint = 0,
                                std::vector<std::string> labels = {}) {
    QMGraph g;
    g.adj.assign(static_cast<size_t>(n), {});
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) fail("InvalidInput", "edge endpoint out of range");
        if (u == v) fail("InvalidInput", "loops are not allowed");
        g.adj[static_cast<size_t>(u)].push_back(v);
        g.adj[static_cast<size_t>(v)].push_back(u);
    }
    g.basepoint = basepoint;
    g.labels = std::move(labels);
    finalize(g);
    g.radius = *std::max_element(g.dist.begin(), g.dist.end());
    g.certified_interior = 0;
    return g;
}

//! Ball of radius r around the identity in the Cayley graph of a graph product
//! with respect to the union of its vertex groups.
inline QMGraph cayley_ball(const GPPresentation& p, int r, std::size_t budget = kDefaultBallBudget) {
    if (r < 0) fail("InvalidInput", "radius must be non-negative");
    QMGraph g;
    g.radius = r;
    g.certified_interior = 2;
    g.tag_names = p.names;
    std::vector<Word> words{Word{}};
    g.key_index[{}] = 0;
    std::vector<int> d{0};
    for (size_t i = 0; i < words.size(); ++i) {
        if (d[i] >= r) continue;
        for (int u = 0; u < p.size(); ++u)
            for (int x = 0; x < p.group(u).order; ++x) {
                if (p.group(u).is_identity(x)) continue;
                Word w = words[i];
                w.push_back({u, x});
                w = reduce(p, w);
                auto key = word_key(w);
                if (g.key_index.count(key)) continue;
                if (words.size() >= budget)
                    fail("BudgetExceeded", "ball exceeds vertex budget", {{"budget", budget}, {"radius", r}, {"reached", words.size()}});
                g.key_index.emplace(key, static_cast<int>(words.size()));
                words.push_back(std::move(w));
                d.push_back(d[i] + 1);
            }
    }
    // nothing at distance r: the ball is the whole (finite) group
    if (*std::max_element(d.begin(), d.end()) < r) g.certified_interior = 0;
    g.adj.assign(words.size(), {});
    std::map<std::pair<int, int>, int> tag;
    for (size_t i = 0; i < words.size(); ++i)
        for (int u = 0; u < p.size(); ++u)
            for (int x = 0; x < p.group(u).order; ++x) {
                if (p.group(u).is_identity(x)) continue;
                Word w = words[i];
                w.push_back({u, x});
                int j = g.find(word_key(reduce(p, w)));
                if (j < 0) continue;
                g.adj[i].push_back(j);
                tag[{std::min<int>(static_cast<int>(i), j), std::max<int>(static_cast<int>(i), j)}] = u;
            }
    g.labels.reserve(words.size());
    g.keys.reserve(words.size());
    for (const auto& w : words) {
        g.labels.push_back(format_word(p, w));
        g.keys.push_back(word_key(w));
    }
    g.basepoint = 0;
    finalize(g);
    g.edge_tag.assign(g.edges.size(), -1);
    for (size_t e = 0; e < g.edges.size(); ++e) g.edge_tag[e] = tag.at(g.edges[e]);
    return g;
}

// ---------------------------------------------------------------------------
// Axioms

struct AxiomReport {
    bool connected = true;
    bool no_k4_minus = true;
    bool no_k32 = true;
    bool triangle = true;
    bool quadrangle = true;
    bool exact = true;  //!< false when the graph is a truncated ball
    json witnesses = json::object();

    bool passed() const { return connected && no_k4_minus && no_k32 && triangle && quadrangle; }

    json to_json() const {
        return {{"connected", connected}, {"no_k4_minus", no_k4_minus}, {"no_k32", no_k32}, {"triangle", triangle},
                {"quadrangle", quadrangle}, {"passed", passed()}, {"exact", exact}, {"witnesses", witnesses}};
    }
};

//! Checks the quasi-median axioms on every configuration inside the certified region.
inline AxiomReport check_quasi_median(const QMGraph& g) {
    AxiomReport rep;
    rep.exact = g.certified_interior == 0;
    auto cert = g.certified_vertices();
    std::vector<char> in(static_cast<size_t>(g.n()), 0);
    for (int v : cert) in[static_cast<size_t>(v)] = 1;

    // Two triangles glued along an edge: common neighbours of an edge must be pairwise adjacent.
    for (auto [x, y] : g.edges) {
        if (!rep.no_k4_minus) break;
        if (!in[static_cast<size_t>(x)] || !in[static_cast<size_t>(y)]) continue;
        auto c = g.common_neighbours(x, y);
        for (size_t i = 0; i < c.size() && rep.no_k4_minus; ++i)
            for (size_t j = i + 1; j < c.size(); ++j)
                if (in[static_cast<size_t>(c[i])] && in[static_cast<size_t>(c[j])] && !g.adjacent(c[i], c[j])) {
                    rep.no_k4_minus = false;
                    rep.witnesses["k4_minus"] = {x, y, c[i], c[j]};
                    break;
                }
    }

    // K3,2: two non-adjacent vertices with three pairwise non-adjacent common neighbours.
    for (int p : cert) {
        if (!rep.no_k32) break;
        std::set<int> seconds;
        for (int a : g.adj[static_cast<size_t>(p)])
            for (int q : g.adj[static_cast<size_t>(a)])
                if (q > p && in[static_cast<size_t>(q)] && !g.adjacent(p, q)) seconds.insert(q);
        for (int q : seconds) {
            auto c = g.common_neighbours(p, q);
            std::vector<int> cc;
            for (int v : c)
                if (in[static_cast<size_t>(v)]) cc.push_back(v);
            for (size_t i = 0; i < cc.size() && rep.no_k32; ++i)
                for (size_t j = i + 1; j < cc.size() && rep.no_k32; ++j)
                    for (size_t k = j + 1; k < cc.size(); ++k)
                        if (!g.adjacent(cc[i], cc[j]) && !g.adjacent(cc[i], cc[k]) && !g.adjacent(cc[j], cc[k])) {
                            rep.no_k32 = false;
                            rep.witnesses["k32"] = {p, q, cc[i], cc[j], cc[k]};
                            break;
                        }
            if (!rep.no_k32) break;
        }
    }

    for (int a : cert) {
        if (!rep.triangle && !rep.quadrangle) break;
        auto d = bfs(g, a);
        auto D = [&](int v) { return d[static_cast<size_t>(v)]; };
        if (rep.triangle)
            for (auto [x, y] : g.edges) {
                if (!in[static_cast<size_t>(x)] || !in[static_cast<size_t>(y)] || D(x) != D(y)) continue;
                bool ok = false;
                for (int z : g.common_neighbours(x, y))
                    if (D(z) == D(x) - 1) ok = true;
                if (!ok) {
                    rep.triangle = false;
                    rep.witnesses["triangle"] = {a, x, y};
                    break;
                }
            }
        if (rep.quadrangle)
            for (int z : cert) {
                if (!rep.quadrangle) break;
                const auto& nz = g.adj[static_cast<size_t>(z)];
                for (size_t i = 0; i < nz.size() && rep.quadrangle; ++i)
                    for (size_t j = i + 1; j < nz.size(); ++j) {
                        int x = nz[i], y = nz[j];
                        if (!in[static_cast<size_t>(x)] || !in[static_cast<size_t>(y)]) continue;
                        if (D(x) != D(z) - 1 || D(y) != D(z) - 1) continue;
                        bool ok = false;
                        for (int w : g.common_neighbours(x, y))
                            if (D(w) == D(z) - 2) ok = true;
                        if (!ok) {
                            rep.quadrangle = false;
                            rep.witnesses["quadrangle"] = {a, x, y, z};
                            break;
                        }
                    }
            }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Hyperplanes

struct Hyperplane {
    int id = 0;
    std::vector<int> edges;    //!< edge ids, sorted
    std::vector<int> carrier;  //!< vertices incident to the edges, sorted
    std::vector<std::vector<int>> sectors;
    bool sectors_computed = false;
    bool window_exact = false;
};

struct HyperplaneSet {
    std::vector<Hyperplane> list;
    std::vector<int> of_edge;  //!< edge id -> hyperplane id
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a < b) std::swap(a, b);
        parent[static_cast<size_t>(a)] = b;
        return true;
    }
};

//! Calls f(v, x, w, y) for every induced square v-x-w-y with x < y and v != w.
template <class F>
void for_each_square_at(const QMGraph& g, int v, F&& f) {
    const auto& nv = g.adj[static_cast<size_t>(v)];
    for (size_t i = 0; i < nv.size(); ++i)
        for (size_t j = i + 1; j < nv.size(); ++j) {
            int x = nv[i], y = nv[j];
            if (g.adjacent(x, y)) continue;
            for (int w : g.common_neighbours(x, y))
                if (w != v && !g.adjacent(v, w)) f(v, x, w, y);
        }
}

//! Components of the graph minus the edges of J, restricted to the certified region.
inline std::vector<std::vector<int>> compute_sectors(const QMGraph& g, const Hyperplane& J) {
    std::vector<char> cut(static_cast<size_t>(g.m()), 0);
    for (int e : J.edges) cut[static_cast<size_t>(e)] = 1;
    std::vector<int> comp(static_cast<size_t>(g.n()), -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < g.n(); ++s) {
        if (comp[static_cast<size_t>(s)] >= 0) continue;
        int c = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<int> q{s};
        comp[static_cast<size_t>(s)] = c;
        for (size_t i = 0; i < q.size(); ++i) {
            int x = q[i];
            if (g.certified(x)) out.back().push_back(x);
            for (int y : g.adj[static_cast<size_t>(x)]) {
                if (comp[static_cast<size_t>(y)] >= 0 || cut[static_cast<size_t>(g.edge_id(x, y))]) continue;
                comp[static_cast<size_t>(y)] = c;
                q.push_back(y);
            }
        }
    }
    std::vector<std::vector<int>> kept;
    for (auto& s : out)
        if (!s.empty()) {
            std::sort(s.begin(), s.end());
            kept.push_back(std::move(s));
        }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return kept;
}

enum class SectorMode { none, exact_only, all };

//! Edge classes under "same triangle" and "opposite sides of a square".
inline HyperplaneSet hyperplanes(const QMGraph& g, SectorMode mode = SectorMode::exact_only) {
    UnionFind uf(g.m());
    for (int v = 0; v < g.n(); ++v) {
        const auto& nv = g.adj[static_cast<size_t>(v)];
        for (size_t i = 0; i < nv.size(); ++i)
            for (size_t j = i + 1; j < nv.size(); ++j)
                if (g.adjacent(nv[i], nv[j])) uf.unite(g.edge_id(v, nv[i]), g.edge_id(v, nv[j]));
        for_each_square_at(g, v, [&](int a, int x, int w, int y) {
            uf.unite(g.edge_id(a, x), g.edge_id(y, w));
            uf.unite(g.edge_id(a, y), g.edge_id(x, w));
        });
    }
    HyperplaneSet hs;
    hs.of_edge.assign(static_cast<size_t>(g.m()), -1);
    std::map<int, int> root_to_id;
    for (int e = 0; e < g.m(); ++e) {
        int r = uf.find(e);
        auto [it, fresh] = root_to_id.emplace(r, static_cast<int>(hs.list.size()));
        if (fresh) {
            hs.list.emplace_back();
            hs.list.back().id = it->second;
        }
        hs.of_edge[static_cast<size_t>(e)] = it->second;
        hs.list[static_cast<size_t>(it->second)].edges.push_back(e);
    }
    for (auto& J : hs.list) {
        std::set<int> c;
        for (int e : J.edges) {
            c.insert(g.edges[static_cast<size_t>(e)].first);
            c.insert(g.edges[static_cast<size_t>(e)].second);
        }
        J.carrier.assign(c.begin(), c.end());
        J.window_exact = std::all_of(J.carrier.begin(), J.carrier.end(), [&](int v) { return g.certified(v); });
        if (mode == SectorMode::all || (mode == SectorMode::exact_only && J.window_exact)) {
            J.sectors = compute_sectors(g, J);
            J.sectors_computed = true;
        }
    }
    return hs;
}

struct WindowedBool {
    bool value = false;
    bool exact = true;
};

inline std::vector<int> carrier_intersection(const Hyperplane& a, const Hyperplane& b) {
    std::vector<int> out;
    std::set_intersection(a.carrier.begin(), a.carrier.end(), b.carrier.begin(), b.carrier.end(), std::back_inserter(out));
    return out;
}

//! Two edges sharing the vertex v span an induced square.
inline bool span_square(const QMGraph& g, int v, int x, int y) {
    if (x == y || g.adjacent(x, y)) return false;
    for (int w : g.common_neighbours(x, y))
        if (w != v && !g.adjacent(v, w)) return true;
    return false;
}

inline WindowedBool transverse(const QMGraph& g, const HyperplaneSet& hs, int j1, int j2, bool strict = false) {
    const auto& A = hs.list[static_cast<size_t>(j1)];
    const auto& B = hs.list[static_cast<size_t>(j2)];
    WindowedBool r;
    r.exact = A.window_exact && B.window_exact;
    if (strict && !r.exact) fail("WindowInexact", "hyperplane carrier leaves the certified region", {{"hyperplanes", {j1, j2}}});
    if (j1 == j2) return r;
    for (int v : carrier_intersection(A, B)) {
        for (int x : g.adj[static_cast<size_t>(v)]) {
            if (hs.of_edge[static_cast<size_t>(g.edge_id(v, x))] != j1) continue;
            for (int y : g.adj[static_cast<size_t>(v)])
                if (hs.of_edge[static_cast<size_t>(g.edge_id(v, y))] == j2 && span_square(g, v, x, y)) {
                    r.value = true;
                    return r;
                }
        }
    }
    return r;
}

inline WindowedBool tangent(const QMGraph& g, const HyperplaneSet& hs, int j1, int j2, bool strict = false) {
    auto t = transverse(g, hs, j1, j2, strict);
    WindowedBool r;
    r.exact = t.exact;
    r.value = j1 != j2 && !t.value &&
              !carrier_intersection(hs.list[static_cast<size_t>(j1)], hs.list[static_cast<size_t>(j2)]).empty();
    return r;
}

// ---------------------------------------------------------------------------
// Gates and gated subgraphs

struct GatedReport {
    bool gated = true;
    bool exact = true;
    bool connected = true;
    bool triangles = true;
    bool locally_convex = true;
    std::string failure;  //!< first failure: "disconnected", "triangle" or "local convexity"
    json witness = nullptr;
};

//! Criterion: connected, contains its triangles and locally convex. Only
//! configurations whose Y-vertices lie in `region` are inspected
//! (default: the certified region, with certified witnesses).
inline GatedReport is_gated(const QMGraph& g, const std::vector<int>& Y, const std::vector<char>* region = nullptr) {
    GatedReport r;
    std::vector<char> in(static_cast<size_t>(g.n()), 0);
    for (int y : Y) in[static_cast<size_t>(y)] = 1;
    auto inside = [&](int v) { return region ? (*region)[static_cast<size_t>(v)] != 0 : g.certified(v); };
    // With the default region Y is a certified truncation, so an uncertified
    // outside vertex may still belong to the untruncated set.
    auto decidable = [&](int v) { return region != nullptr || g.certified(v); };
    for (int y : Y)
        if (!g.certified(y)) r.exact = false;
    if (Y.empty()) return r;

    std::vector<char> seen(static_cast<size_t>(g.n()), 0);
    std::vector<int> q{Y.front()};
    seen[static_cast<size_t>(Y.front())] = 1;
    for (size_t i = 0; i < q.size(); ++i)
        for (int z : g.adj[static_cast<size_t>(q[i])])
            if (in[static_cast<size_t>(z)] && !seen[static_cast<size_t>(z)]) {
                seen[static_cast<size_t>(z)] = 1;
                q.push_back(z);
            }
    if (q.size() != Y.size()) {
        r.gated = r.connected = false;
        r.failure = "disconnected";
        for (int y : Y)
            if (!seen[static_cast<size_t>(y)]) {
                r.witness = {Y.front(), y};
                break;
            }
        return r;
    }

    for (int y : Y) {
        if (!inside(y)) continue;
        for (int x : g.adj[static_cast<size_t>(y)]) {
            if (!in[static_cast<size_t>(x)] || !inside(x) || x < y) continue;
            for (int z : g.common_neighbours(x, y))
                if (!in[static_cast<size_t>(z)] && decidable(z) && r.triangles) {
                    r.gated = r.triangles = false;
                    r.failure = "triangle";
                    r.witness = {y, x, z};
                }
        }
    }
    for (int y : Y) {
        if (!inside(y)) continue;
        const auto& ny = g.adj[static_cast<size_t>(y)];
        for (size_t i = 0; i < ny.size(); ++i) {
            int x = ny[i];
            if (!in[static_cast<size_t>(x)] || !inside(x)) continue;
            for (size_t j = i + 1; j < ny.size(); ++j) {
                int z = ny[j];
                if (!in[static_cast<size_t>(z)] || !inside(z) || g.adjacent(x, z)) continue;
                for (int w : g.common_neighbours(x, z))
                    if (w != y && !g.adjacent(w, y) && !in[static_cast<size_t>(w)] && decidable(w)) {
                        r.locally_convex = false;
                        if (r.gated) {
                            r.gated = false;
                            r.failure = "local convexity";
                            r.witness = {x, y, z, w};
                        }
                        return r;
                    }
            }
        }
    }
    return r;
}

//! The vertex of Y through which geodesics from x to every vertex of Y pass.
inline int gate(const QMGraph& g, int x, const std::vector<int>& Y) {
    if (Y.empty()) fail("InvalidInput", "empty target set");
    auto gr = is_gated(g, Y);
    if (!gr.gated) fail("NotGated", "subgraph is not gated (" + gr.failure + ")", gr.witness);
    auto dx = bfs(g, x);
    int best = Y.front();
    for (int y : Y)
        if (dx[static_cast<size_t>(y)] < dx[static_cast<size_t>(best)]) best = y;
    for (int y : Y)
        if (y != best && dx[static_cast<size_t>(y)] == dx[static_cast<size_t>(best)])
            fail("NotGated", "projection is not unique", {{"vertex", x}, {"candidates", {best, y}}});
    auto db = bfs(g, best);
    for (int y : Y)
        if (dx[static_cast<size_t>(y)] != dx[static_cast<size_t>(best)] + db[static_cast<size_t>(y)])
            fail("NotGated", "a geodesic avoids the projection", {{"vertex", x}, {"gate", best}, {"target", y}});
    return best;
}

// ---------------------------------------------------------------------------
// Paths

struct PathMove {
    std::string kind;  //!< "backtrack", "triangle" or "flip"
    int index = 0;
};

struct PathReduction {
    std::vector<int> path;
    std::vector<PathMove> log;
    bool geodesic = false;
};

inline void validate_path(const QMGraph& g, const std::vector<int>& path) {
    for (size_t i = 0; i + 1 < path.size(); ++i)
        if (!g.adjacent(path[i], path[i + 1])) fail("InvalidInput", "path uses a non-edge", {{"position", i}});
}

//! Shortens a path to a geodesic using backtrack removal, triangle shortening
//! and square flips. Flips are found by breadth-first search over paths of the
//! current length.
inline PathReduction path_reduce(const QMGraph& g, std::vector<int> path, std::size_t search_budget = 200000) {
    validate_path(g, path);
    PathReduction out;
    if (path.empty()) {
        out.geodesic = true;
        return out;
    }
    auto local = [&](std::vector<int>& p, std::vector<PathMove>& log) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t i = 0; i + 2 < p.size(); ++i) {
                if (p[i] == p[i + 2]) {
                    p.erase(p.begin() + static_cast<long>(i) + 1, p.begin() + static_cast<long>(i) + 3);
                    log.push_back({"backtrack", static_cast<int>(i)});
                    changed = true;
                    break;
                }
                if (g.adjacent(p[i], p[i + 2])) {
                    p.erase(p.begin() + static_cast<long>(i) + 1);
                    log.push_back({"triangle", static_cast<int>(i)});
                    changed = true;
                    break;
                }
            }
        }
    };
    local(path, out.log);
    int target = bfs(g, path.front())[static_cast<size_t>(path.back())];
    while (static_cast<int>(path.size()) - 1 > target) {
        // Search square flips until a backtrack or triangle appears.
        std::map<std::vector<int>, std::pair<std::vector<int>, int>> parent;
        std::vector<std::vector<int>> q{path};
        parent[path] = {{}, -1};
        std::vector<int> found;
        for (size_t h = 0; h < q.size() && found.empty(); ++h) {
            const auto cur = q[h];
            for (size_t i = 0; i + 2 < cur.size() && found.empty(); ++i) {
                for (int w : g.common_neighbours(cur[i], cur[i + 2])) {
                    if (w == cur[i + 1] || g.adjacent(w, cur[i + 1])) continue;
                    auto nxt = cur;
                    nxt[i + 1] = w;
                    if (parent.count(nxt)) continue;
                    parent[nxt] = {cur, static_cast<int>(i)};
                    bool reducible = false;
                    for (size_t k = 0; k + 2 < nxt.size(); ++k)
                        if (nxt[k] == nxt[k + 2] || g.adjacent(nxt[k], nxt[k + 2])) reducible = true;
                    if (reducible) {
                        found = nxt;
                        break;
                    }
                    if (parent.size() > search_budget) fail("BudgetExceeded", "path search exceeded budget");
                    q.push_back(std::move(nxt));
                }
            }
        }
        if (found.empty()) break;
        std::vector<int> flips;
        for (auto cur = found; parent.at(cur).second >= 0; cur = parent.at(cur).first) flips.push_back(parent.at(cur).second);
        for (auto it = flips.rbegin(); it != flips.rend(); ++it) out.log.push_back({"flip", *it});
        path = found;
        local(path, out.log);
    }
    out.geodesic = static_cast<int>(path.size()) - 1 == target;
    out.path = std::move(path);
    return out;
}

//! Swaps the crossings of edges i and i+1 of a geodesic through one square flip.
inline std::vector<int> geodesic_swap(const QMGraph& g, std::vector<int> geo, int i) {
    validate_path(g, geo);
    if (i < 0 || static_cast<size_t>(i) + 2 >= geo.size()) fail("InvalidInput", "swap index out of range");
    auto a = static_cast<size_t>(i);
    for (int w : g.common_neighbours(geo[a], geo[a + 2]))
        if (w != geo[a + 1] && !g.adjacent(w, geo[a + 1]) && !g.adjacent(geo[a], geo[a + 2])) {
            geo[a + 1] = w;
            return geo;
        }
    fail("NotTransverse", "consecutive edges do not span a square", {{"index", i}, {"vertices", {geo[a], geo[a + 1], geo[a + 2]}}});
}

// ---------------------------------------------------------------------------
// Cliques and medians

struct CliqueDesc {
    std::vector<int> vertices;
    int label = -1;  //!< common edge tag, -1 when edges disagree or are untagged
};

inline std::vector<CliqueDesc> cliques(const QMGraph& g) {
    std::vector<CliqueDesc> out;
    std::function<void(std::vector<int>&, std::vector<int>, std::vector<int>)> bk =
        [&](std::vector<int>& R, std::vector<int> P, std::vector<int> X) {
            if (P.empty() && X.empty()) {
                if (R.size() >= 2) {
                    CliqueDesc c;
                    c.vertices = R;
                    std::sort(c.vertices.begin(), c.vertices.end());
                    std::set<int> tags;
                    for (size_t i = 0; i < c.vertices.size(); ++i)
                        for (size_t j = i + 1; j < c.vertices.size(); ++j)
                            tags.insert(g.edge_tag[static_cast<size_t>(g.edge_id(c.vertices[i], c.vertices[j]))]);
                    c.label = tags.size() == 1 ? *tags.begin() : -1;
                    out.push_back(std::move(c));
                }
                return;
            }
            int pivot = P.empty() ? X.front() : P.front();
            size_t best = 0;
            for (int u : P) {
                size_t cnt = 0;
                for (int v : P) cnt += g.adjacent(u, v);
                if (cnt > best) best = cnt, pivot = u;
            }
            std::vector<int> cand;
            for (int v : P)
                if (!g.adjacent(pivot, v)) cand.push_back(v);
            for (int v : cand) {
                std::vector<int> P2, X2;
                for (int w : P)
                    if (g.adjacent(v, w)) P2.push_back(w);
                for (int w : X)
                    if (g.adjacent(v, w)) X2.push_back(w);
                R.push_back(v);
                bk(R, P2, X2);
                R.pop_back();
                P.erase(std::find(P.begin(), P.end(), v));
                X.push_back(v);
            }
        };
    std::vector<int> R, P(static_cast<size_t>(g.n())), X;
    std::iota(P.begin(), P.end(), 0);
    bk(R, P, X);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.vertices < b.vertices; });
    return out;
}

//! The maximal clique containing an edge of a graph without induced K4-minus.
inline std::vector<int> clique_of_edge(const QMGraph& g, int u, int v) {
    auto c = g.common_neighbours(u, v);
    c.push_back(u);
    c.push_back(v);
    std::sort(c.begin(), c.end());
    return c;
}

//! Every triple of certified vertices has exactly one median in the graph.
inline bool is_median(const QMGraph& g) {
    auto cert = g.certified_vertices();
    std::vector<std::vector<int>> d;
    d.reserve(static_cast<size_t>(g.n()));
    for (int v = 0; v < g.n(); ++v) d.push_back(bfs(g, v));
    auto D = [&](int a, int b) { return d[static_cast<size_t>(a)][static_cast<size_t>(b)]; };
    for (size_t i = 0; i < cert.size(); ++i)
        for (size_t j = i + 1; j < cert.size(); ++j)
            for (size_t k = j + 1; k < cert.size(); ++k) {
                int x = cert[i], y = cert[j], z = cert[k];
                int count = 0;
                for (int m = 0; m < g.n() && count < 2; ++m)
                    if (D(x, m) + D(m, y) == D(x, y) && D(y, m) + D(m, z) == D(y, z) && D(x, m) + D(m, z) == D(x, z)) ++count;
                if (count != 1) return false;
            }
    return true;
}

// ---------------------------------------------------------------------------
// Exact hyperplanes of graph-product Cayley graphs

//! The hyperplane dual to the clique g·G_u: carrier g<star(u)>, fibres
//! g·h<link(u)> for h in G_u.
struct AlgebraicHyperplane {
    const GPPresentation* p = nullptr;
    Word g;
    int u = 0;

    std::vector<int> carrier_vertices() const { return p->star(u); }
    std::vector<int> fibre_vertices() const { return p->link(u); }

    bool in_carrier(const Word& w) const { return parabolic_membership(multiply(*p, inverse(*p, g), w), p->star(u)); }

    //! Element h of G_u such that w lies in the sector containing g·h.
    int sector_of(const Word& w) const {
        for (const auto& s : head(*p, multiply(*p, inverse(*p, g), w)))
            if (s.vertex == u) return s.element;
        return p->group(u).identity;
    }

    bool contains_edge(const Word& x, const Word& y) const {
        auto s = multiply(*p, inverse(*p, x), y);
        return s.size() == 1 && s.front().vertex == u && in_carrier(x);
    }

    //! Fibre through g·h, as (coset representative, generating vertices).
    std::vector<Word> fibre_representatives() const {
        std::vector<Word> out;
        for (int h = 0; h < p->group(u).order; ++h) {
            Word w = g;
            if (!p->group(u).is_identity(h)) w.push_back({u, h});
            out.push_back(reduce(*p, w));
        }
        return out;
    }
};

inline AlgebraicHyperplane algebraic_hyperplane(const GPPresentation& p, const Word& g, int u) {
    AlgebraicHyperplane a;
    a.p = &p;
    a.g = reduce(p, g);
    a.u = u;
    return a;
}

// ---------------------------------------------------------------------------
// Export

inline std::string to_dot(const QMGraph& g, const HyperplaneSet* hs = nullptr) {
    std::ostringstream out;
    out << "graph qm {\n";
    for (int v = 0; v < g.n(); ++v) {
        out << "  n" << v << " [label=\"" << g.labels[static_cast<size_t>(v)] << "\"";
        if (v == g.basepoint) out << ", shape=box";
        out << "];\n";
    }
    for (int e = 0; e < g.m(); ++e) {
        auto [u, v] = g.edges[static_cast<size_t>(e)];
        out << "  n" << u << " -- n" << v;
        if (hs) out << " [label=\"J" << hs->of_edge[static_cast<size_t>(e)] << "\"]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

inline json to_json(const QMGraph& g, const HyperplaneSet* hs = nullptr) {
    json j;
    j["vertices"] = g.labels;
    j["edges"] = g.edges;
    j["basepoint"] = g.basepoint;
    j["radius"] = g.radius;
    j["certified_interior"] = g.certified_interior;
    j["dist"] = g.dist;
    if (hs) {
        json hl = json::array();
        for (const auto& J : hs->list) {
            json h{{"id", J.id}, {"edges", J.edges}, {"carrier", J.carrier}, {"window_exact", J.window_exact}};
            if (J.sectors_computed) h["sectors"] = J.sectors;
            hl.push_back(h);
        }
        j["hyperplanes"] = hl;
    }
    return j;
}

//! Reads {"vertices": n | [labels], "edges": [[u,v],...], "basepoint": b}; "radius" and
//! "certified_interior" are optional and restore the window of an exported ball.
inline QMGraph graph_from_json(const json& j) {
    if (!j.contains("vertices") || !j.contains("edges")) fail("InvalidInput", "graph needs 'vertices' and 'edges'");
    int n = 0;
    std::vector<std::string> labels;
    if (j.at("vertices").is_number_integer()) {
        n = j.at("vertices").get<int>();
    } else {
        for (const auto& v : j.at("vertices")) labels.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        n = static_cast<int>(labels.size());
    }
    auto edges = j.at("edges").get<std::vector<std::pair<int, int>>>();
    auto g = graph_from_edges(n, edges, j.value("basepoint", 0), labels);
    g.radius = j.value("radius", g.radius);
    g.certified_interior = j.value("certified_interior", g.certified_interior);
    if (g.certified_interior < 0 || g.certified_interior > g.radius) fail("InvalidInput", "certified_interior out of range");
    return g;
}

} // namespace qmedia
