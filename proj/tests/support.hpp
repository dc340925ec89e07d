#pragma once

// Test-side oracles. They are deliberately naive and share no code with the
// library beyond its data types.

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qmedia/ragg.hpp"

namespace qtest {

using namespace qmedia;

inline json load(const std::string& rel) {
    std::ifstream in(std::string(QMEDIA_FIXTURES) + "/" + rel);
    if (!in) throw std::runtime_error("missing fixture " + rel);
    return json::parse(in);
}

inline GPPresentation presentation(const std::string& name) {
    return presentation_from_json(load("presentations/" + name + ".json"));
}

inline RaggSpec spec(const std::string& rel) { return load_valid_ragg(load(rel)); }

inline const std::vector<std::string>& presentation_names() {
    static const std::vector<std::string> names{"p4_z2", "free_z2_z3", "c4_mixed", "p3_z3",
                                                "paw",   "empty3_z2",  "triangle_z3", "z3_single"};
    return names;
}

// ---------------------------------------------------------------------------
// Words: closure under cancellation, amalgamation and shuffling.

struct Closure {
    std::set<Word> words;
    Word canonical;  //!< lexicographically least among the shortest
};

inline Closure word_closure(const GPPresentation& p, const Word& w, std::size_t cap = 10000) {
    Closure c;
    std::vector<Word> stack{w};
    c.words.insert(w);
    while (!stack.empty()) {
        Word x = stack.back();
        stack.pop_back();
        std::vector<Word> next;
        for (size_t i = 0; i < x.size(); ++i)
            if (p.group(x[i].vertex).is_identity(x[i].element)) {
                Word y = x;
                y.erase(y.begin() + static_cast<long>(i));
                next.push_back(y);
            }
        for (size_t i = 0; i + 1 < x.size(); ++i) {
            auto [u, a] = x[i];
            auto [v, b] = x[i + 1];
            if (u == v) {
                Word y = x;
                int c2 = p.group(u).mul(a, b);
                y.erase(y.begin() + static_cast<long>(i), y.begin() + static_cast<long>(i) + 2);
                if (!p.group(u).is_identity(c2)) y.insert(y.begin() + static_cast<long>(i), Syllable{u, c2});
                next.push_back(y);
            } else if (p.adjacent(u, v)) {
                Word y = x;
                std::swap(y[i], y[i + 1]);
                next.push_back(y);
            }
        }
        for (auto& y : next)
            if (c.words.insert(y).second) {
                if (c.words.size() > cap) throw std::runtime_error("closure cap exceeded");
                stack.push_back(std::move(y));
            }
    }
    std::size_t shortest = SIZE_MAX;
    for (const auto& x : c.words) shortest = std::min(shortest, x.size());
    bool first = true;
    for (const auto& x : c.words)
        if (x.size() == shortest && (first || x < c.canonical)) {
            c.canonical = x;
            first = false;
        }
    return c;
}

inline std::vector<Syllable> all_syllables(const GPPresentation& p) {
    std::vector<Syllable> out;
    for (int u = 0; u < p.size(); ++u)
        for (int a = 0; a < p.group(u).order; ++a)
            if (!p.group(u).is_identity(a)) out.push_back({u, a});
    return out;
}

//! Every word of length exactly n over the non-trivial syllables.
inline std::vector<Word> words_of_length(const GPPresentation& p, int n) {
    std::vector<Word> out{{}};
    auto syl = all_syllables(p);
    for (int k = 0; k < n; ++k) {
        std::vector<Word> next;
        for (const auto& w : out)
            for (const auto& s : syl) {
                Word y = w;
                y.push_back(s);
                next.push_back(std::move(y));
            }
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graphs

inline std::vector<int> bfs_dist(const QMGraph& g, int src) {
    std::vector<int> d(static_cast<size_t>(g.n()), -1);
    std::vector<int> q{src};
    d[static_cast<size_t>(src)] = 0;
    for (size_t i = 0; i < q.size(); ++i)
        for (int w : g.adj[static_cast<size_t>(q[i])])
            if (d[static_cast<size_t>(w)] < 0) {
                d[static_cast<size_t>(w)] = d[static_cast<size_t>(q[i])] + 1;
                q.push_back(w);
            }
    return d;
}

//! Gatedness straight from the definition: every vertex has a unique Y-vertex
//! lying on geodesics to all of Y. Only vertices in `probe` are tested.
inline bool gated_by_definition(const QMGraph& g, const std::vector<int>& Y, const std::vector<int>& probe) {
    std::map<int, std::vector<int>> dist;
    for (int y : Y) dist[y] = bfs_dist(g, y);
    for (int x : probe) {
        bool found = false;
        for (int z : Y) {
            bool ok = true;
            for (int y : Y)
                if (dist[y][static_cast<size_t>(x)] != dist[z][static_cast<size_t>(x)] + dist[y][static_cast<size_t>(z)]) {
                    ok = false;
                    break;
                }
            if (ok) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

//! Hyperplane classes by explicit union over triangles and squares, indexed by edge id.
inline std::vector<int> hyperplane_classes(const QMGraph& g) {
    std::vector<int> parent(static_cast<size_t>(g.m()));
    for (int i = 0; i < g.m(); ++i) parent[static_cast<size_t>(i)] = i;
    std::function<int(int)> find = [&](int x) {
        return parent[static_cast<size_t>(x)] == x ? x : parent[static_cast<size_t>(x)] = find(parent[static_cast<size_t>(x)]);
    };
    auto unite = [&](int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); };
    for (int e = 0; e < g.m(); ++e)
        for (int f = e + 1; f < g.m(); ++f) {
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            auto [c, d] = g.edges[static_cast<size_t>(f)];
            std::set<int> s{a, b, c, d};
            if (s.size() == 3) {
                std::vector<int> v(s.begin(), s.end());
                if (g.adjacent(v[0], v[1]) && g.adjacent(v[1], v[2]) && g.adjacent(v[0], v[2])) unite(e, f);
            } else if (s.size() == 4) {
                // opposite sides of an induced 4-cycle a-b-d-c or a-b-c-d
                bool sq1 = g.adjacent(a, c) && g.adjacent(b, d) && !g.adjacent(a, d) && !g.adjacent(b, c);
                bool sq2 = g.adjacent(a, d) && g.adjacent(b, c) && !g.adjacent(a, c) && !g.adjacent(b, d);
                if (sq1 || sq2) unite(e, f);
            }
        }
    std::vector<int> out(static_cast<size_t>(g.m()));
    for (int e = 0; e < g.m(); ++e) out[static_cast<size_t>(e)] = find(e);
    return out;
}

} // namespace qtest
