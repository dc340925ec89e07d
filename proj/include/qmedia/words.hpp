#pragma once

#include <algorithm>
#include <compare>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qmedia/groups.hpp"

namespace qmedia {

//! Simplicial graph with a finite group on every vertex.
struct GPPresentation {
    std::vector<std::string> names;
    std::vector<FiniteGroup> groups;
    std::vector<std::vector<char>> adj;

    int size() const { return static_cast<int>(names.size()); }
    bool adjacent(int u, int v) const { return adj[static_cast<size_t>(u)][static_cast<size_t>(v)] != 0; }
    const FiniteGroup& group(int v) const { return groups[static_cast<size_t>(v)]; }

    int add_vertex(const std::string& name, FiniteGroup g) {
        names.push_back(name);
        groups.push_back(std::move(g));
        for (auto& row : adj) row.push_back(0);
        adj.emplace_back(names.size(), 0);
        return size() - 1;
    }

    void add_edge(int u, int v) {
        if (u == v) fail("InvalidInput", "loops are not allowed in a presentation graph", {{"vertex", names[static_cast<size_t>(u)]}});
        adj[static_cast<size_t>(u)][static_cast<size_t>(v)] = adj[static_cast<size_t>(v)][static_cast<size_t>(u)] = 1;
    }

    int vertex_id(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names[static_cast<size_t>(i)] == name) return i;
        fail("InvalidInput", "unknown vertex '" + name + "'");
    }

    std::vector<int> link(int u) const {
        std::vector<int> out;
        for (int v = 0; v < size(); ++v)
            if (adjacent(u, v)) out.push_back(v);
        return out;
    }

    std::vector<int> star(int u) const {
        auto out = link(u);
        out.push_back(u);
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        for (int u = 0; u < size(); ++u)
            for (int v = u + 1; v < size(); ++v)
                if (adjacent(u, v)) out.emplace_back(u, v);
        return out;
    }
};

inline void validate_presentation(const GPPresentation& p) {
    for (int u = 0; u < p.size(); ++u) {
        if (p.group(u).order < 2)
            fail("InvalidInput", "vertex groups must be non-trivial", {{"vertex", p.names[static_cast<size_t>(u)]}});
        if (p.adjacent(u, u)) fail("InvalidInput", "loop in presentation graph", {{"vertex", p.names[static_cast<size_t>(u)]}});
        for (int v = 0; v < p.size(); ++v)
            if (p.adjacent(u, v) != p.adjacent(v, u)) fail("InvalidInput", "adjacency is not symmetric");
    }
    std::set<std::string> seen(p.names.begin(), p.names.end());
    if (seen.size() != p.names.size()) fail("InvalidInput", "duplicate vertex names");
}

struct Syllable {
    int vertex = 0;
    int element = 0;
    auto operator<=>(const Syllable&) const = default;
};

using Word = std::vector<Syllable>;

inline Word inverse(const GPPresentation& p, const Word& w) {
    Word out(w.rbegin(), w.rend());
    for (auto& s : out) s.element = p.group(s.vertex).inv(s.element);
    return out;
}

//! Left-to-right graphical reduction; the output is reduced but not canonical.
inline Word reduce_unordered(const GPPresentation& p, const Word& w) {
    Word out;
    out.reserve(w.size());
    for (const auto& s : w) {
        const auto& G = p.group(s.vertex);
        if (G.is_identity(s.element)) continue;
        int j = static_cast<int>(out.size()) - 1;
        while (j >= 0 && out[static_cast<size_t>(j)].vertex != s.vertex && p.adjacent(out[static_cast<size_t>(j)].vertex, s.vertex)) --j;
        if (j >= 0 && out[static_cast<size_t>(j)].vertex == s.vertex) {
            int m = G.mul(out[static_cast<size_t>(j)].element, s.element);
            if (G.is_identity(m)) out.erase(out.begin() + j);
            else out[static_cast<size_t>(j)].element = m;
        } else {
            out.push_back(s);
        }
    }
    return out;
}

//! Heap normal form of a reduced word: repeatedly emit the least
//! (vertex, element) among the syllables that can be shuffled to the front.
inline Word heap_order(const GPPresentation& p, const Word& w) {
    std::vector<Syllable> rest(w);
    Word out;
    out.reserve(w.size());
    while (!rest.empty()) {
        int best = -1;
        for (size_t i = 0; i < rest.size(); ++i) {
            bool front = true;
            for (size_t k = 0; k < i && front; ++k)
                front = rest[k].vertex != rest[i].vertex && p.adjacent(rest[k].vertex, rest[i].vertex);
            if (front && (best < 0 || rest[i] < rest[static_cast<size_t>(best)])) best = static_cast<int>(i);
        }
        out.push_back(rest[static_cast<size_t>(best)]);
        rest.erase(rest.begin() + best);
    }
    return out;
}

inline Word reduce(const GPPresentation& p, const Word& w) { return heap_order(p, reduce_unordered(p, w)); }

inline Word multiply(const GPPresentation& p, const Word& u, const Word& v) {
    Word w(u);
    w.insert(w.end(), v.begin(), v.end());
    return reduce(p, w);
}

struct Move {
    std::string kind;  //!< "shuffle", "amalgamate" or "cancel"
    int i = 0;
    int j = 0;
    bool operator==(const Move&) const = default;
};

struct ReducedCheck {
    bool reduced = true;
    std::vector<Move> witness;
};

//! A word fails to be reduced exactly when two syllables of one vertex are
//! separated only by syllables commuting with that vertex.
inline ReducedCheck is_graphically_reduced(const GPPresentation& p, const Word& w) {
    ReducedCheck r;
    for (size_t i = 0; i < w.size(); ++i)
        if (p.group(w[i].vertex).is_identity(w[i].element)) {
            r.reduced = false;
            r.witness.push_back({"cancel", static_cast<int>(i), static_cast<int>(i)});
            return r;
        }
    for (size_t j = 1; j < w.size(); ++j) {
        for (size_t i = j; i-- > 0;) {
            if (w[i].vertex == w[j].vertex) {
                r.reduced = false;
                for (size_t k = i; k + 1 < j; ++k) r.witness.push_back({"shuffle", static_cast<int>(k), static_cast<int>(k + 1)});
                const auto& G = p.group(w[i].vertex);
                bool dies = G.is_identity(G.mul(w[i].element, w[j].element));
                r.witness.push_back({dies ? "cancel" : "amalgamate", static_cast<int>(j - 1), static_cast<int>(j)});
                return r;
            }
            if (!p.adjacent(w[i].vertex, w[j].vertex)) break;
        }
    }
    return r;
}

//! Syllables that can be shuffled to the last position.
inline std::vector<Syllable> tail(const GPPresentation& p, const Word& w) {
    std::vector<Syllable> out;
    for (size_t i = 0; i < w.size(); ++i) {
        bool last = true;
        for (size_t k = i + 1; k < w.size() && last; ++k) last = p.adjacent(w[i].vertex, w[k].vertex);
        if (last) out.push_back(w[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

//! Syllables that can be shuffled to the first position.
inline std::vector<Syllable> head(const GPPresentation& p, const Word& w) {
    std::vector<Syllable> out;
    for (size_t i = 0; i < w.size(); ++i) {
        bool first = true;
        for (size_t k = 0; k < i && first; ++k) first = p.adjacent(w[i].vertex, w[k].vertex);
        if (first) out.push_back(w[i]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

//! Removes a syllable of the tail (from_end) or of the head of a reduced word.
inline Word drop_syllable(const GPPresentation& p, const Word& w, const Syllable& s, bool from_end = true) {
    Word out(w);
    if (from_end) {
        auto it = std::find(out.rbegin(), out.rend(), s);
        if (it != out.rend()) out.erase(std::next(it).base());
    } else {
        auto it = std::find(out.begin(), out.end(), s);
        if (it != out.end()) out.erase(it);
    }
    return heap_order(p, out);
}

inline bool parabolic_membership(const Word& w, const std::vector<int>& S) {
    return std::all_of(w.begin(), w.end(), [&](const Syllable& s) { return std::find(S.begin(), S.end(), s.vertex) != S.end(); });
}

inline std::string format_word(const GPPresentation& p, const Word& w) {
    if (w.empty()) return "e";
    std::string out;
    for (const auto& s : w) {
        if (!out.empty()) out += ' ';
        out += p.names[static_cast<size_t>(s.vertex)] + ":" + std::to_string(s.element);
    }
    return out;
}

//! Parses `a:1 b:1 a:1`; brackets, commas and a lone `e` (empty word) are tolerated.
inline Word parse_word(const GPPresentation& p, std::string text) {
    for (char& c : text)
        if (c == '[' || c == ']' || c == ',') c = ' ';
    std::istringstream in(text);
    Word w;
    std::string tok;
    while (in >> tok) {
        if (tok == "e" || tok == "1") continue;
        auto colon = tok.rfind(':');
        if (colon == std::string::npos) fail("InvalidInput", "syllable '" + tok + "' must look like vertex:element");
        int v = p.vertex_id(tok.substr(0, colon));
        int x = 0;
        try {
            x = std::stoi(tok.substr(colon + 1));
        } catch (const std::exception&) {
            fail("InvalidInput", "bad element index in '" + tok + "'");
        }
        if (x < 0 || x >= p.group(v).order) fail("InvalidInput", "element index out of range in '" + tok + "'");
        if (p.group(v).is_identity(x)) fail("InvalidInput", "syllable '" + tok + "' is the identity");
        w.push_back({v, x});
    }
    return w;
}

//! Flat integer key used for hashing vertex labels.
inline std::vector<int> word_key(const Word& w) {
    std::vector<int> k;
    k.reserve(2 * w.size());
    for (const auto& s : w) {
        k.push_back(s.vertex);
        k.push_back(s.element);
    }
    return k;
}

inline Word word_from_key(const std::vector<int>& k) {
    Word w;
    for (size_t i = 0; i + 1 < k.size(); i += 2) w.push_back({k[i], k[i + 1]});
    return w;
}

inline json to_json(const GPPresentation& p) {
    json groups = json::object();
    for (int v = 0; v < p.size(); ++v) groups[p.names[static_cast<size_t>(v)]] = to_json(p.group(v));
    json edges = json::array();
    for (auto [u, v] : p.edges()) edges.push_back({p.names[static_cast<size_t>(u)], p.names[static_cast<size_t>(v)]});
    return {{"vertices", p.names}, {"edges", edges}, {"groups", groups}};
}

//! {"vertices": [...], "edges": [[u,v],...], "groups": {name: group}}.
inline GPPresentation presentation_from_json(const json& j) {
    if (!j.is_object() || !j.contains("vertices") || !j.contains("groups"))
        fail("InvalidInput", "presentation needs 'vertices' and 'groups'");
    GPPresentation p;
    for (const auto& name : j.at("vertices")) {
        auto n = name.get<std::string>();
        if (!j.at("groups").contains(n)) fail("InvalidInput", "missing group for vertex '" + n + "'");
        p.add_vertex(n, group_from_json(j.at("groups").at(n)));
    }
    if (j.contains("edges"))
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) fail("InvalidInput", "edges must be pairs");
            p.add_edge(p.vertex_id(e[0].get<std::string>()), p.vertex_id(e[1].get<std::string>()));
        }
    validate_presentation(p);
    return p;
}

} // namespace qmedia
