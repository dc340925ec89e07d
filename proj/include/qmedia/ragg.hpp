#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qmedia/action.hpp"

namespace qmedia {

// ---------------------------------------------------------------------------
// Specification

struct Arrow {
    std::string id;
    int bar = 0;
    int source = 0;
    int target = 0;
};

//! Embedding of an edge product into the product at the source of its arrow:
//! edge factor f goes to vertex factor vertex_map[f] through factor_isos[f].
struct GraphicalEmbedding {
    std::vector<int> vertex_map;
    std::vector<Perm> factor_isos;
};

struct RaggSpec {
    std::vector<std::string> vertices;
    std::vector<Arrow> arrows;
    std::vector<GPPresentation> vertex_products;
    std::vector<GPPresentation> edge_products;     //!< per arrow; an arrow and its bar share one
    std::vector<GraphicalEmbedding> embeddings;    //!< per arrow

    int vertex_id(const std::string& name) const {
        for (size_t i = 0; i < vertices.size(); ++i)
            if (vertices[i] == name) return static_cast<int>(i);
        fail("InvalidInput", "unknown vertex '" + name + "'");
    }
    int arrow_id(const std::string& name) const {
        for (size_t i = 0; i < arrows.size(); ++i)
            if (arrows[i].id == name) return static_cast<int>(i);
        fail("InvalidInput", "unknown arrow '" + name + "'");
    }
    const Arrow& arrow(int e) const { return arrows[static_cast<size_t>(e)]; }
    const GPPresentation& product(int v) const { return vertex_products[static_cast<size_t>(v)]; }
    const GPPresentation& edge_product(int e) const { return edge_products[static_cast<size_t>(e)]; }
    const GraphicalEmbedding& embedding(int e) const { return embeddings[static_cast<size_t>(e)]; }

    //! Vertex factor at s(e) hit by edge factor f.
    int image_factor(int e, int f) const { return embedding(e).vertex_map[static_cast<size_t>(f)]; }
    //! Edge factor mapped onto vertex factor F at s(e), or -1.
    int preimage_factor(int e, int F) const {
        const auto& vm = embedding(e).vertex_map;
        for (size_t f = 0; f < vm.size(); ++f)
            if (vm[f] == F) return static_cast<int>(f);
        return -1;
    }
};

inline json to_json(const RaggSpec& s) {
    json arrows = json::array(), products = json::object(), edges = json::object(), embs = json::object();
    for (size_t v = 0; v < s.vertices.size(); ++v) products[s.vertices[v]] = to_json(s.vertex_products[v]);
    for (size_t e = 0; e < s.arrows.size(); ++e) {
        const auto& a = s.arrows[e];
        arrows.push_back({{"id", a.id}, {"bar", s.arrows[static_cast<size_t>(a.bar)].id},
                          {"source", s.vertices[static_cast<size_t>(a.source)]}, {"target", s.vertices[static_cast<size_t>(a.target)]}});
        edges[a.id] = to_json(s.edge_products[e]);
        json vm = json::object(), isos = json::object();
        const auto& P = s.edge_products[e];
        const auto& Q = s.vertex_products[static_cast<size_t>(a.source)];
        for (int f = 0; f < P.size(); ++f) {
            vm[P.names[static_cast<size_t>(f)]] = Q.names[static_cast<size_t>(s.embeddings[e].vertex_map[static_cast<size_t>(f)])];
            isos[P.names[static_cast<size_t>(f)]] = s.embeddings[e].factor_isos[static_cast<size_t>(f)];
        }
        embs[a.id] = {{"vertex_map", vm}, {"factor_isos", isos}};
    }
    return {{"graph", {{"vertices", s.vertices}, {"arrows", arrows}}}, {"vertex_products", products}, {"edge_products", edges}, {"embeddings", embs}};
}

//! Structural parse; semantic checks are left to validate_ragg.
inline RaggSpec ragg_from_json(const json& j) {
    if (!j.is_object()) fail("InvalidInput", "spec must be a JSON object");
    const json& graph = j.contains("graph") ? j.at("graph") : j;
    for (const char* k : {"vertices", "arrows"})
        if (!graph.contains(k)) fail("InvalidInput", std::string("spec graph is missing '") + k + "'");
    for (const char* k : {"vertex_products", "embeddings"})
        if (!j.contains(k)) fail("InvalidInput", std::string("spec is missing '") + k + "'");
    RaggSpec s;
    for (const auto& v : graph.at("vertices")) s.vertices.push_back(v.get<std::string>());
    for (const auto& v : s.vertices) {
        if (!j.at("vertex_products").contains(v)) fail("InvalidInput", "missing product for vertex '" + v + "'");
        s.vertex_products.push_back(presentation_from_json(j.at("vertex_products").at(v)));
    }
    std::vector<std::string> bar_names;
    std::vector<std::optional<int>> declared_target;
    for (const auto& a : graph.at("arrows")) {
        Arrow ar;
        ar.id = a.at("id").get<std::string>();
        ar.source = s.vertex_id(a.at("source").get<std::string>());
        declared_target.push_back(a.contains("target") ? std::optional<int>(s.vertex_id(a.at("target").get<std::string>())) : std::nullopt);
        bar_names.push_back(a.at("bar").get<std::string>());
        s.arrows.push_back(ar);
    }
    for (size_t e = 0; e < s.arrows.size(); ++e) {
        s.arrows[e].bar = s.arrow_id(bar_names[e]);
        s.arrows[e].target = declared_target[e].value_or(s.arrows[static_cast<size_t>(s.arrows[e].bar)].source);
    }
    const json edges = j.value("edge_products", json::object());
    for (const auto& a : s.arrows) {
        const auto& b = s.arrows[static_cast<size_t>(a.bar)];
        bool has_a = edges.contains(a.id), has_b = edges.contains(b.id);
        if (!has_a && !has_b) fail("InvalidInput", "no edge product for arrow '" + a.id + "'");
        if (has_a && has_b && edges.at(a.id) != edges.at(b.id))
            fail("InvalidInput", "arrow '" + a.id + "' and its bar carry different edge products");
        s.edge_products.push_back(presentation_from_json(has_a ? edges.at(a.id) : edges.at(b.id)));
    }
    for (size_t e = 0; e < s.arrows.size(); ++e) {
        const auto& a = s.arrows[e];
        if (!j.at("embeddings").contains(a.id)) fail("InvalidInput", "no embedding for arrow '" + a.id + "'");
        const auto& ej = j.at("embeddings").at(a.id);
        const auto& P = s.edge_products[e];
        const auto& Q = s.vertex_products[static_cast<size_t>(a.source)];
        GraphicalEmbedding ge;
        for (int f = 0; f < P.size(); ++f) {
            const auto& name = P.names[static_cast<size_t>(f)];
            if (!ej.contains("vertex_map") || !ej.at("vertex_map").contains(name))
                fail("InvalidInput", "embedding of '" + a.id + "' does not map factor '" + name + "'");
            int F = Q.vertex_id(ej.at("vertex_map").at(name).get<std::string>());
            ge.vertex_map.push_back(F);
            if (ej.contains("factor_isos") && ej.at("factor_isos").contains(name)) {
                ge.factor_isos.push_back(ej.at("factor_isos").at(name).get<Perm>());
            } else {
                if (P.group(f).order != Q.group(F).order)
                    fail("InvalidInput", "implicit identity isomorphism between groups of different orders", {{"arrow", a.id}, {"factor", name}});
                ge.factor_isos.push_back(identity_perm(P.group(f).order));
            }
        }
        s.embeddings.push_back(std::move(ge));
    }
    return s;
}

struct ValidationReport {
    bool valid = true;
    json errors = json::array();
    json to_json() const { return {{"valid", valid}, {"errors", errors}}; }
};

inline ValidationReport validate_ragg(const RaggSpec& s) {
    ValidationReport r;
    auto err = [&](const std::string& check, json w) {
        r.valid = false;
        r.errors.push_back({{"check", check}, {"witness", std::move(w)}});
    };
    if (s.vertices.empty()) err("non-empty", nullptr);
    for (size_t e = 0; e < s.arrows.size(); ++e) {
        const auto& a = s.arrows[e];
        const auto& b = s.arrow(a.bar);
        if (a.bar == static_cast<int>(e)) err("bar has no fixed points", a.id);
        if (s.arrow(b.bar).id != a.id) err("bar is an involution", a.id);
        if (a.target != b.source || b.target != a.source) err("bar reverses endpoints", a.id);
        const auto& P = s.edge_product(static_cast<int>(e));
        const auto& Q = s.product(a.source);
        const auto& emb = s.embedding(static_cast<int>(e));
        std::set<int> img(emb.vertex_map.begin(), emb.vertex_map.end());
        if (img.size() != emb.vertex_map.size()) err("vertex map is injective", a.id);
        for (int f = 0; f < P.size(); ++f)
            for (int h = f + 1; h < P.size(); ++h)
                if (P.adjacent(f, h) != Q.adjacent(emb.vertex_map[static_cast<size_t>(f)], emb.vertex_map[static_cast<size_t>(h)]))
                    err("image is an induced subgraph", {{"arrow", a.id}, {"factors", {P.names[static_cast<size_t>(f)], P.names[static_cast<size_t>(h)]}}});
        for (int f = 0; f < P.size(); ++f) {
            const auto& A = P.group(f);
            const auto& B = Q.group(emb.vertex_map[static_cast<size_t>(f)]);
            const auto& iso = emb.factor_isos[static_cast<size_t>(f)];
            bool ok = static_cast<int>(iso.size()) == A.order && A.order == B.order && is_bijection(iso);
            for (int x = 0; ok && x < A.order; ++x)
                for (int y = 0; ok && y < A.order; ++y)
                    ok = iso[static_cast<size_t>(A.mul(x, y))] == B.mul(iso[static_cast<size_t>(x)], iso[static_cast<size_t>(y)]);
            if (!ok) err("factor map is an isomorphism", {{"arrow", a.id}, {"factor", P.names[static_cast<size_t>(f)]}});
        }
    }
    return r;
}

inline RaggSpec load_valid_ragg(const json& j) {
    auto s = ragg_from_json(j);
    auto v = validate_ragg(s);
    if (!v.valid) fail("InvalidInput", "spec fails validation", v.errors);
    return s;
}

// ---------------------------------------------------------------------------
// Groupoid elements

//! g_0 e_1 g_1 ... e_n g_n with every g_k < n a right transversal word relative to
//! the image of the next arrow's edge product.
struct GElem {
    int start = 0;
    std::vector<Word> g{Word{}};
    std::vector<int> e;

    bool operator==(const GElem&) const = default;
    auto operator<=>(const GElem&) const = default;
};

inline int terminus(const RaggSpec& s, const GElem& x) { return x.e.empty() ? x.start : s.arrow(x.e.back()).target; }

inline int vertex_at(const RaggSpec& s, const GElem& x, size_t k) { return k == 0 ? x.start : s.arrow(x.e[k - 1]).target; }

//! A letter of the groupoid: an arrow or a factor syllable at some vertex.
struct Letter {
    bool arrow = false;
    int id = 0;          //!< arrow id, or vertex id for a syllable
    Syllable syl{};
};

inline void push_syllable(const RaggSpec& s, GElem& x, const Syllable& syl) {
    auto& last = x.g.back();
    last = multiply(s.product(terminus(s, x)), last, {syl});
}

inline void push_arrow(const RaggSpec& s, GElem& x, int e) {
    const auto& a = s.arrow(e);
    const auto& Q = s.product(a.source);
    const auto& emb = s.embedding(e);
    Word t = x.g.back(), p;
    for (bool moved = true; moved;) {
        moved = false;
        for (const auto& syl : tail(Q, t))
            if (s.preimage_factor(e, syl.vertex) >= 0) {
                t = drop_syllable(Q, t, syl);
                p.insert(p.begin(), syl);
                moved = true;
                break;
            }
    }
    // h = ι_e^{-1}(p), then carried to the target by ι_{ē}.
    Word carried;
    const auto& bemb = s.embedding(a.bar);
    for (const auto& syl : p) {
        int f = s.preimage_factor(e, syl.vertex);
        int x_in_edge = invert(emb.factor_isos[static_cast<size_t>(f)])[static_cast<size_t>(syl.element)];
        carried.push_back({bemb.vertex_map[static_cast<size_t>(f)], bemb.factor_isos[static_cast<size_t>(f)][static_cast<size_t>(x_in_edge)]});
    }
    const auto& R = s.product(a.target);
    carried = reduce(R, carried);
    if (t.empty() && !x.e.empty() && x.e.back() == a.bar) {
        x.e.pop_back();
        x.g.pop_back();
        x.g.back() = multiply(R, x.g.back(), carried);
        return;
    }
    x.g.back() = t;
    x.e.push_back(e);
    x.g.push_back(carried);
}

inline GElem groupoid_identity(int v) {
    GElem x;
    x.start = v;
    return x;
}

inline GElem groupoid_normalize(const RaggSpec& s, int start, const std::vector<Letter>& letters) {
    GElem x = groupoid_identity(start);
    for (size_t i = 0; i < letters.size(); ++i) {
        const auto& L = letters[i];
        int here = terminus(s, x);
        if (L.arrow) {
            if (s.arrow(L.id).source != here) fail("NotComposable", "arrow does not start at the current vertex", {{"position", i}});
            push_arrow(s, x, L.id);
        } else {
            if (L.id != here) fail("NotComposable", "syllable lives at another vertex", {{"position", i}});
            const auto& Q = s.product(here);
            if (L.syl.vertex < 0 || L.syl.vertex >= Q.size() || L.syl.element < 0 || L.syl.element >= Q.group(L.syl.vertex).order)
                fail("InvalidInput", "syllable out of range", {{"position", i}});
            push_syllable(s, x, L.syl);
        }
    }
    return x;
}

//! Replays the letters of y after x.
inline GElem groupoid_multiply(const RaggSpec& s, const GElem& x, const GElem& y) {
    if (terminus(s, x) != y.start) fail("NotComposable", "terminus of the left factor differs from the start of the right one");
    GElem z = x;
    for (size_t k = 0; k < y.g.size(); ++k) {
        for (const auto& syl : y.g[k]) push_syllable(s, z, syl);
        if (k < y.e.size()) push_arrow(s, z, y.e[k]);
    }
    return z;
}

inline GElem groupoid_inverse(const RaggSpec& s, const GElem& x) {
    GElem z = groupoid_identity(terminus(s, x));
    for (size_t k = x.g.size(); k-- > 0;) {
        int v = vertex_at(s, x, k);
        for (const auto& syl : inverse(s.product(v), x.g[k])) push_syllable(s, z, syl);
        if (k > 0) push_arrow(s, z, s.arrow(x.e[k - 1]).bar);
    }
    return z;
}

inline std::vector<int> gelem_key(const GElem& x) {
    std::vector<int> k{x.start, static_cast<int>(x.e.size())};
    for (size_t i = 0; i < x.g.size(); ++i) {
        k.push_back(static_cast<int>(x.g[i].size()));
        for (const auto& syl : x.g[i]) {
            k.push_back(syl.vertex);
            k.push_back(syl.element);
        }
        if (i < x.e.size()) k.push_back(x.e[i]);
    }
    return k;
}

inline GElem gelem_from_key(const std::vector<int>& k) {
    GElem x;
    x.start = k.at(0);
    int n = k.at(1);
    x.g.clear();
    size_t p = 2;
    for (int i = 0; i <= n; ++i) {
        int len = k.at(p++);
        Word w;
        for (int j = 0; j < len; ++j, p += 2) w.push_back({k.at(p), k.at(p + 1)});
        x.g.push_back(std::move(w));
        if (i < n) x.e.push_back(k.at(p++));
    }
    return x;
}

inline std::string format_gelem(const RaggSpec& s, const GElem& x) {
    std::string out;
    for (size_t k = 0; k < x.g.size(); ++k) {
        const auto& P = s.product(vertex_at(s, x, k));
        for (const auto& syl : x.g[k]) {
            if (!out.empty()) out += ' ';
            out += P.names[static_cast<size_t>(syl.vertex)] + ":" + std::to_string(syl.element);
        }
        if (k < x.e.size()) {
            if (!out.empty()) out += ' ';
            out += ">" + s.arrow(x.e[k]).id;
        }
    }
    return out.empty() ? "e@" + s.vertices[static_cast<size_t>(x.start)] : out;
}

//! Parses `A:1 >e B:1` starting at `start`; `>id` is an arrow.
inline GElem parse_gelem(const RaggSpec& s, int start, const std::string& text) {
    std::istringstream in(text);
    std::vector<Letter> letters;
    std::string tok;
    int here = start;
    while (in >> tok) {
        if (tok == "e" || tok.rfind("e@", 0) == 0) continue;
        if (tok.front() == '>') {
            int e = s.arrow_id(tok.substr(1));
            letters.push_back({true, e, {}});
            here = s.arrow(e).target;
            continue;
        }
        auto w = parse_word(s.product(here), tok);
        for (const auto& syl : w) letters.push_back({false, here, syl});
    }
    return groupoid_normalize(s, start, letters);
}

// ---------------------------------------------------------------------------
// Transition graph and the conditions

//! Result of carrying a factor (or an element of it) along a path of arrows.
struct PathImage {
    bool empty = false;
    int vertex = 0;
    int factor = 0;
    Perm iso;  //!< element indices of the original factor -> elements of `factor`
};

inline PathImage path_morphism(const RaggSpec& s, const std::vector<int>& path, int vertex, int factor) {
    PathImage r;
    r.vertex = vertex;
    r.factor = factor;
    r.iso = identity_perm(s.product(vertex).group(factor).order);
    for (size_t i = 0; i < path.size(); ++i) {
        const auto& a = s.arrow(path[i]);
        if (a.source != r.vertex) fail("NotComposable", "path is not a walk", {{"position", i}});
        int f = s.preimage_factor(path[i], r.factor);
        if (f < 0) {
            r.empty = true;
            return r;
        }
        auto into_edge = invert(s.embedding(path[i]).factor_isos[static_cast<size_t>(f)]);
        const auto& out = s.embedding(a.bar).factor_isos[static_cast<size_t>(f)];
        r.iso = compose(out, compose(into_edge, r.iso));
        r.vertex = a.target;
        r.factor = s.embedding(a.bar).vertex_map[static_cast<size_t>(f)];
    }
    return r;
}

struct TransitionEdge {
    int from = 0;
    int to = 0;
    int arrow = 0;
    Perm iso;
};

struct TransitionGraph {
    std::vector<std::pair<int, int>> nodes;  //!< (vertex, factor)
    std::vector<int> offset;                 //!< first node of each vertex
    std::vector<std::vector<TransitionEdge>> out;

    int node(int v, int f) const { return offset[static_cast<size_t>(v)] + f; }
    int size() const { return static_cast<int>(nodes.size()); }
};

inline TransitionGraph transition_graph(const RaggSpec& s) {
    TransitionGraph T;
    for (size_t v = 0; v < s.vertices.size(); ++v) {
        T.offset.push_back(T.size());
        for (int f = 0; f < s.vertex_products[v].size(); ++f) T.nodes.emplace_back(static_cast<int>(v), f);
    }
    T.out.assign(T.nodes.size(), {});
    for (size_t e = 0; e < s.arrows.size(); ++e) {
        const auto& a = s.arrows[e];
        const auto& P = s.edge_products[e];
        for (int f = 0; f < P.size(); ++f) {
            auto pm = path_morphism(s, {static_cast<int>(e)}, a.source, s.image_factor(static_cast<int>(e), f));
            T.out[static_cast<size_t>(T.node(a.source, s.image_factor(static_cast<int>(e), f)))].push_back(
                {T.node(a.source, s.image_factor(static_cast<int>(e), f)), T.node(pm.vertex, pm.factor), static_cast<int>(e), pm.iso});
        }
    }
    return T;
}

inline std::string node_name(const RaggSpec& s, const TransitionGraph& T, int n) {
    auto [v, f] = T.nodes[static_cast<size_t>(n)];
    return s.vertices[static_cast<size_t>(v)] + "/" + s.product(v).names[static_cast<size_t>(f)];
}

//! BFS tree of walks from a node: predecessor edge per reached node.
struct Reach {
    std::vector<const TransitionEdge*> via;
    std::vector<char> seen;
    std::vector<int> walk(int n) const {
        std::vector<int> w;
        for (const auto* e = via[static_cast<size_t>(n)]; e; e = via[static_cast<size_t>(e->from)]) w.push_back(e->arrow);
        std::reverse(w.begin(), w.end());
        return w;
    }
};

inline Reach reach_from(const TransitionGraph& T, int src) {
    Reach r;
    r.via.assign(T.nodes.size(), nullptr);
    r.seen.assign(T.nodes.size(), 0);
    r.seen[static_cast<size_t>(src)] = 1;
    std::vector<int> q{src};
    for (size_t i = 0; i < q.size(); ++i)
        for (const auto& e : T.out[static_cast<size_t>(q[i])])
            if (!r.seen[static_cast<size_t>(e.to)]) {
                r.seen[static_cast<size_t>(e.to)] = 1;
                r.via[static_cast<size_t>(e.to)] = &e;
                q.push_back(e.to);
            }
    return r;
}

//! Automorphisms of a factor induced by closed walks through it.
inline PermutationImage phi_group(const RaggSpec& s, int vertex, int factor) {
    auto T = transition_graph(s);
    int base = T.node(vertex, factor);
    auto fwd = reach_from(T, base);
    std::vector<std::optional<Perm>> tree(T.nodes.size());
    int order = s.product(vertex).group(factor).order;
    tree[static_cast<size_t>(base)] = identity_perm(order);
    std::vector<int> q{base};
    for (size_t i = 0; i < q.size(); ++i)
        for (const auto& e : T.out[static_cast<size_t>(q[i])])
            if (!tree[static_cast<size_t>(e.to)]) {
                tree[static_cast<size_t>(e.to)] = compose(e.iso, *tree[static_cast<size_t>(q[i])]);
                q.push_back(e.to);
            }
    std::vector<Perm> gens;
    for (int n = 0; n < T.size(); ++n) {
        if (!fwd.seen[static_cast<size_t>(n)] || !reach_from(T, n).seen[static_cast<size_t>(base)]) continue;
        for (const auto& e : T.out[static_cast<size_t>(n)]) {
            if (!tree[static_cast<size_t>(e.to)] || !reach_from(T, e.to).seen[static_cast<size_t>(base)]) continue;
            gens.push_back(compose(invert(*tree[static_cast<size_t>(e.to)]), compose(e.iso, *tree[static_cast<size_t>(n)])));
        }
    }
    return permutation_image(gens, order);
}

struct ConditionsReport {
    bool distinct_factors = true;   //!< (i)
    bool commuting_images = true;   //!< (ii)
    bool no_loops = true;           //!< (iii)
    bool trivial_holonomy = true;   //!< (iv)
    json witnesses = json::object();

    bool passed() const { return distinct_factors && commuting_images && no_loops && trivial_holonomy; }
    json to_json() const {
        return {{"i", distinct_factors}, {"ii", commuting_images}, {"iii", no_loops}, {"iv", trivial_holonomy}, {"passed", passed()}, {"witnesses", witnesses}};
    }
};

inline ConditionsReport check_conditions(const RaggSpec& s) {
    ConditionsReport r;
    auto T = transition_graph(s);
    std::vector<Reach> R;
    for (int n = 0; n < T.size(); ++n) R.push_back(reach_from(T, n));

    for (int n = 0; n < T.size() && r.distinct_factors; ++n)
        for (int m = 0; m < T.size(); ++m)
            if (m != n && R[static_cast<size_t>(n)].seen[static_cast<size_t>(m)] && T.nodes[static_cast<size_t>(m)].first == T.nodes[static_cast<size_t>(n)].first) {
                r.distinct_factors = false;
                r.witnesses["i"] = {{"from", node_name(s, T, n)}, {"to", node_name(s, T, m)}, {"walk", R[static_cast<size_t>(n)].walk(m)},
                                    {"vertex", s.vertices[static_cast<size_t>(T.nodes[static_cast<size_t>(n)].first)]},
                                    {"factor", s.product(T.nodes[static_cast<size_t>(n)].first).names[static_cast<size_t>(T.nodes[static_cast<size_t>(n)].second)]}};
                break;
            }
    auto walk_names = [&](const std::vector<int>& w) {
        json out = json::array();
        for (int e : w) out.push_back(s.arrow(e).id);
        return out;
    };
    if (r.witnesses.contains("i")) r.witnesses["i"]["walk"] = walk_names(r.witnesses["i"]["walk"].get<std::vector<int>>());

    for (int u = 0; u < static_cast<int>(s.vertices.size()) && r.commuting_images; ++u) {
        const auto& P = s.product(u);
        for (auto [a1, a2] : P.edges()) {
            int n1 = T.node(u, a1), n2 = T.node(u, a2);
            for (int m1 = 0; m1 < T.size() && r.commuting_images; ++m1) {
                if (!R[static_cast<size_t>(n1)].seen[static_cast<size_t>(m1)]) continue;
                for (int m2 = 0; m2 < T.size(); ++m2) {
                    if (m2 == m1 || !R[static_cast<size_t>(n2)].seen[static_cast<size_t>(m2)]) continue;
                    auto [v1, b1] = T.nodes[static_cast<size_t>(m1)];
                    auto [v2, b2] = T.nodes[static_cast<size_t>(m2)];
                    if (v1 != v2 || s.product(v1).adjacent(b1, b2)) continue;
                    r.commuting_images = false;
                    r.witnesses["ii"] = {{"commuting", {node_name(s, T, n1), node_name(s, T, n2)}},
                                         {"images", {node_name(s, T, m1), node_name(s, T, m2)}},
                                         {"walks", {walk_names(R[static_cast<size_t>(n1)].walk(m1)), walk_names(R[static_cast<size_t>(n2)].walk(m2))}}};
                    break;
                }
            }
        }
    }

    for (const auto& a : s.arrows)
        if (a.source == a.target) {
            r.no_loops = false;
            r.witnesses["iii"] = {{"arrow", a.id}};
            break;
        }

    for (int n = 0; n < T.size(); ++n) {
        auto [v, f] = T.nodes[static_cast<size_t>(n)];
        auto img = phi_group(s, v, f);
        if (img.group.order > 1) {
            r.trivial_holonomy = false;
            r.witnesses["iv"] = {{"factor", node_name(s, T, n)}, {"order", img.group.order}};
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Names shared by the ball tags and the target graph product

//! Arrow pairs are named "e|ē" with the lexicographically smaller id first.
inline std::string arrow_pair_name(const RaggSpec& s, int e) {
    auto a = s.arrow(e).id, b = s.arrow(s.arrow(e).bar).id;
    if (b < a) std::swap(a, b);
    return a + "|" + b;
}

//! One representative arrow per pair, in arrow order.
inline std::vector<int> arrow_pairs(const RaggSpec& s) {
    std::vector<int> out;
    for (size_t e = 0; e < s.arrows.size(); ++e)
        if (static_cast<int>(e) < s.arrows[e].bar) out.push_back(static_cast<int>(e));
    return out;
}

//! Equivalence classes of factors generated by the transition edges; each class
//! is named after its least (vertex, factor) node.
struct FactorClasses {
    TransitionGraph T;
    std::vector<int> class_of;      //!< node -> class
    std::vector<int> least_node;    //!< class -> node
};

inline FactorClasses factor_classes(const RaggSpec& s) {
    FactorClasses fc;
    fc.T = transition_graph(s);
    UnionFind uf(fc.T.size());
    for (const auto& outs : fc.T.out)
        for (const auto& e : outs) uf.unite(e.from, e.to);
    std::map<int, int> root;
    fc.class_of.resize(static_cast<size_t>(fc.T.size()));
    for (int n = 0; n < fc.T.size(); ++n) {
        auto [it, fresh] = root.emplace(uf.find(n), static_cast<int>(fc.least_node.size()));
        if (fresh) fc.least_node.push_back(n);
        fc.class_of[static_cast<size_t>(n)] = it->second;
    }
    return fc;
}

// ---------------------------------------------------------------------------
// The target graph product

struct PsiOptions {
    bool per_arrow = false;   //!< one vertex per arrow instead of per arrow pair
    int arrow_order = 2;
    bool require_conditions = true;
};

inline GPPresentation build_psi(const RaggSpec& s, const PsiOptions& opt = {}) {
    if (opt.require_conditions) {
        auto c = check_conditions(s);
        if (!c.passed()) fail("ConditionsFailed", "the conditions for a graph-product target fail", c.to_json());
    }
    if (opt.arrow_order < 2) fail("InvalidInput", "arrow groups must be non-trivial");
    auto fc = factor_classes(s);
    GPPresentation psi;
    for (int n : fc.least_node) {
        auto [v, f] = fc.T.nodes[static_cast<size_t>(n)];
        psi.add_vertex(node_name(s, fc.T, n), s.product(v).group(f));
    }
    for (size_t v = 0; v < s.vertices.size(); ++v)
        for (auto [a, b] : s.vertex_products[v].edges()) {
            int ca = fc.class_of[static_cast<size_t>(fc.T.node(static_cast<int>(v), a))];
            int cb = fc.class_of[static_cast<size_t>(fc.T.node(static_cast<int>(v), b))];
            if (ca != cb) psi.add_edge(ca, cb);
        }
    std::vector<int> arrows;
    if (opt.per_arrow) {
        for (size_t e = 0; e < s.arrows.size(); ++e) arrows.push_back(static_cast<int>(e));
    } else {
        arrows = arrow_pairs(s);
    }
    for (int e : arrows) {
        std::string name = opt.per_arrow ? s.arrow(e).id : arrow_pair_name(s, e);
        int x = psi.add_vertex(name, cyclic_group(opt.arrow_order));
        for (int f = 0; f < s.edge_product(e).size(); ++f)
            psi.add_edge(x, fc.class_of[static_cast<size_t>(fc.T.node(s.arrow(e).source, s.image_factor(e, f)))]);
    }
    return psi;
}

// ---------------------------------------------------------------------------
// Covers

//! Pulls a spec back along a graph covering given as
//! {"vertices": [...], "vertex_map": {v': v}, "arrows": [{"id","bar","source","target","maps_to"}]}.
inline RaggSpec pullback_cover(const RaggSpec& s, const json& cover, int* sheets = nullptr) {
    RaggSpec out;
    std::vector<int> pi_v;
    for (const auto& v : cover.at("vertices")) {
        out.vertices.push_back(v.get<std::string>());
        if (!cover.at("vertex_map").contains(out.vertices.back())) fail("NotACovering", "vertex '" + out.vertices.back() + "' is not mapped");
        pi_v.push_back(s.vertex_id(cover.at("vertex_map").at(out.vertices.back()).get<std::string>()));
        out.vertex_products.push_back(s.product(pi_v.back()));
    }
    std::vector<int> pi_e;
    std::vector<std::string> bars;
    for (const auto& a : cover.at("arrows")) {
        Arrow ar;
        ar.id = a.at("id").get<std::string>();
        ar.source = out.vertex_id(a.at("source").get<std::string>());
        ar.target = out.vertex_id(a.at("target").get<std::string>());
        bars.push_back(a.at("bar").get<std::string>());
        pi_e.push_back(s.arrow_id(a.at("maps_to").get<std::string>()));
        out.arrows.push_back(ar);
    }
    for (size_t e = 0; e < out.arrows.size(); ++e) out.arrows[e].bar = out.arrow_id(bars[e]);
    for (size_t e = 0; e < out.arrows.size(); ++e) {
        const auto& a = out.arrows[e];
        const auto& b = s.arrow(pi_e[e]);
        if (pi_v[static_cast<size_t>(a.source)] != b.source || pi_v[static_cast<size_t>(a.target)] != b.target)
            fail("NotACovering", "arrow endpoints do not map to the image arrow's endpoints", {{"arrow", a.id}});
        if (pi_e[static_cast<size_t>(a.bar)] != b.bar) fail("NotACovering", "bar is not preserved", {{"arrow", a.id}});
        if (out.arrows[static_cast<size_t>(a.bar)].bar != static_cast<int>(e) || a.bar == static_cast<int>(e))
            fail("NotACovering", "bar is not a fixed-point-free involution", {{"arrow", a.id}});
        out.edge_products.push_back(s.edge_product(pi_e[e]));
        out.embeddings.push_back(s.embedding(pi_e[e]));
    }
    for (size_t v = 0; v < out.vertices.size(); ++v) {
        std::vector<int> images;
        for (size_t e = 0; e < out.arrows.size(); ++e)
            if (out.arrows[e].source == static_cast<int>(v)) images.push_back(pi_e[e]);
        std::vector<int> expected;
        for (size_t e = 0; e < s.arrows.size(); ++e)
            if (s.arrows[e].source == pi_v[v]) expected.push_back(static_cast<int>(e));
        std::sort(images.begin(), images.end());
        if (images != expected) fail("NotACovering", "arrows at a vertex do not map bijectively", {{"vertex", out.vertices[v]}});
    }
    std::vector<int> fibre(s.vertices.size(), 0);
    for (int v : pi_v) ++fibre[static_cast<size_t>(v)];
    if (std::any_of(fibre.begin(), fibre.end(), [&](int c) { return c != fibre.front(); }))
        fail("NotACovering", "fibres over the vertices have different sizes", {{"fibres", fibre}});
    if (sheets) *sheets = fibre.front();
    return out;
}

// ---------------------------------------------------------------------------
// The quasi-median graph of the groupoid

//! Factor tags come first (one per (vertex, factor) node), then arrow pairs.
inline std::vector<std::string> ragg_tag_names(const RaggSpec& s) {
    auto fc = factor_classes(s);
    std::vector<std::string> names;
    for (int n = 0; n < fc.T.size(); ++n) names.push_back(node_name(s, fc.T, fc.least_node[static_cast<size_t>(fc.class_of[static_cast<size_t>(n)])]));
    for (size_t e = 0; e < s.arrows.size(); ++e) names.push_back(arrow_pair_name(s, static_cast<int>(e)));
    return names;
}

//! Ball of radius r about the identity at `omega`: vertices are groupoid elements
//! leaving omega, edges join x to x·e and to x·a for factor elements a.
inline QMGraph frak_x_ball(const RaggSpec& s, int omega, int r, std::size_t budget = kDefaultBallBudget) {
    if (r < 0) fail("InvalidInput", "radius must be non-negative");
    auto fc = factor_classes(s);
    QMGraph g;
    g.radius = r;
    g.certified_interior = 2;
    g.tag_names = ragg_tag_names(s);
    const int nodes = fc.T.size();
    std::vector<GElem> elems{groupoid_identity(omega)};
    std::vector<int> d{0};
    g.key_index[gelem_key(elems[0])] = 0;
    std::map<std::pair<int, int>, int> tag;
    auto neighbours = [&](const GElem& x, auto&& visit) {
        int v = terminus(s, x);
        const auto& P = s.product(v);
        for (int f = 0; f < P.size(); ++f)
            for (int a = 0; a < P.group(f).order; ++a) {
                if (P.group(f).is_identity(a)) continue;
                GElem y = x;
                push_syllable(s, y, {f, a});
                visit(y, fc.T.node(v, f));
            }
        for (size_t e = 0; e < s.arrows.size(); ++e) {
            if (s.arrows[e].source != v) continue;
            GElem y = x;
            push_arrow(s, y, static_cast<int>(e));
            visit(y, nodes + static_cast<int>(e));
        }
    };
    for (size_t i = 0; i < elems.size(); ++i) {
        if (d[i] >= r) continue;
        const GElem x = elems[i];
        neighbours(x, [&](GElem& y, int) {
            auto key = gelem_key(y);
            if (g.key_index.count(key)) return;
            if (elems.size() >= budget) fail("BudgetExceeded", "ball exceeds vertex budget", {{"budget", budget}, {"radius", r}});
            g.key_index.emplace(key, static_cast<int>(elems.size()));
            elems.push_back(std::move(y));
            d.push_back(d[i] + 1);
        });
    }
    g.adj.assign(elems.size(), {});
    for (size_t i = 0; i < elems.size(); ++i)
        neighbours(elems[i], [&](GElem& y, int t) {
            int j = g.find(gelem_key(y));
            if (j < 0) return;
            g.adj[i].push_back(j);
            auto k = std::make_pair(std::min<int>(static_cast<int>(i), j), std::max<int>(static_cast<int>(i), j));
            auto [it, fresh] = tag.emplace(k, t);
            if (!fresh) it->second = std::min(it->second, t);
        });
    for (const auto& x : elems) {
        g.labels.push_back(format_gelem(s, x));
        g.keys.push_back(gelem_key(x));
    }
    g.basepoint = 0;
    finalize(g);
    g.edge_tag.assign(g.edges.size(), -1);
    for (size_t e = 0; e < g.edges.size(); ++e) g.edge_tag[e] = tag.at(g.edges[e]);
    return g;
}

//! Does h (starting at the vertex of F) lie in link(F)? Along its normal word the
//! image of F must survive each arrow, and every vertex-group piece must commute with
//! the current image of F.
inline bool link_membership(const RaggSpec& s, int vertex, int factor, const GElem& h) {
    if (h.start != vertex) return false;
    int v = vertex, F = factor;
    for (size_t i = 0; i < h.g.size(); ++i) {
        const auto& P = s.product(v);
        for (const auto& syl : h.g[i])
            if (!P.adjacent(syl.vertex, F)) return false;
        if (i == h.e.size()) break;
        auto img = path_morphism(s, {h.e[i]}, v, F);
        if (img.empty) return false;
        v = img.vertex;
        F = img.factor;
    }
    return true;
}

//! Algebraic description of the hyperplane dual to an edge of the ball. For a
//! factor clique gF the carrier is gF·link(F) and the fibres are the gh·link(F),
//! h in F. An arrow-type hyperplane only records that it has two fibres.
struct RaggHyperplane {
    const RaggSpec* spec = nullptr;
    bool arrow_type = false;
    GElem g;          //!< clique base (factor type) or tail of the edge (arrow type)
    int vertex = 0;   //!< terminus of g
    int factor = -1;  //!< factor at `vertex`, factor type only
    int arrow = -1;   //!< arrow type only

    //! Fibre index of x (element of F for factor type, 0/1 for arrow type), or -1 off the carrier.
    int fibre_of(const GElem& x) const {
        if (arrow_type) fail("InvalidInput", "fibre membership is only described for factor-type hyperplanes");
        const auto& G = spec->product(vertex).group(factor);
        for (int a = 0; a < G.order; ++a) {
            GElem ga = g;
            if (!G.is_identity(a)) push_syllable(*spec, ga, {factor, a});
            if (ga.start != x.start) return -1;
            auto y = groupoid_multiply(*spec, groupoid_inverse(*spec, ga), x);
            if (link_membership(*spec, vertex, factor, y)) return a;
        }
        return -1;
    }
    bool in_carrier(const GElem& x) const { return fibre_of(x) >= 0; }
    int fibre_count() const { return arrow_type ? 2 : spec->product(vertex).group(factor).order; }
};

inline RaggHyperplane ragg_hyperplane_oracle(const RaggSpec& s, const GElem& g, int factor) {
    RaggHyperplane h;
    h.spec = &s;
    h.g = g;
    h.vertex = terminus(s, g);
    h.factor = factor;
    if (factor < 0 || factor >= s.product(h.vertex).size()) fail("InvalidInput", "factor out of range");
    return h;
}

inline RaggHyperplane ragg_arrow_hyperplane(const RaggSpec& s, const GElem& g, int arrow) {
    RaggHyperplane h;
    h.spec = &s;
    h.arrow_type = true;
    h.g = g;
    h.vertex = terminus(s, g);
    h.arrow = arrow;
    if (s.arrow(arrow).source != h.vertex) fail("NotComposable", "arrow does not leave the terminus");
    return h;
}

//! The loops at omega acting on the ball by left multiplication.
class RaggAction : public GroupAction {
public:
    RaggAction(const RaggSpec& s, const QMGraph& ball, int omega) : s_(&s), ball_(&ball), omega_(omega) {
        // Spanning tree of the underlying graph from omega.
        const int nv = static_cast<int>(s.vertices.size());
        std::vector<std::optional<GElem>> path(static_cast<size_t>(nv));
        std::vector<char> tree_arrow(s.arrows.size(), 0);
        path[static_cast<size_t>(omega)] = groupoid_identity(omega);
        std::vector<int> q{omega};
        for (size_t i = 0; i < q.size(); ++i)
            for (size_t e = 0; e < s.arrows.size(); ++e) {
                const auto& a = s.arrows[e];
                if (a.source != q[i] || path[static_cast<size_t>(a.target)]) continue;
                GElem p = *path[static_cast<size_t>(q[i])];
                push_arrow(s, p, static_cast<int>(e));
                path[static_cast<size_t>(a.target)] = p;
                tree_arrow[e] = tree_arrow[static_cast<size_t>(a.bar)] = 1;
                q.push_back(a.target);
            }
        std::set<Elem> gens;
        auto add = [&](const GElem& x) {
            if (!x.e.empty() || !x.g.front().empty()) gens.insert(gelem_key(x));
        };
        for (int v = 0; v < nv; ++v) {
            if (!path[static_cast<size_t>(v)]) continue;
            const auto& p = *path[static_cast<size_t>(v)];
            auto pinv = groupoid_inverse(s, p);
            const auto& P = s.product(v);
            for (int f = 0; f < P.size(); ++f)
                for (int a = 0; a < P.group(f).order; ++a) {
                    if (P.group(f).is_identity(a)) continue;
                    GElem x = p;
                    push_syllable(s, x, {f, a});
                    add(groupoid_multiply(s, x, pinv));
                }
            for (size_t e = 0; e < s.arrows.size(); ++e) {
                if (s.arrows[e].source != v || tree_arrow[e] || !path[static_cast<size_t>(s.arrows[e].target)]) continue;
                GElem x = p;
                push_arrow(s, x, static_cast<int>(e));
                add(groupoid_multiply(s, x, groupoid_inverse(s, *path[static_cast<size_t>(s.arrows[e].target)])));
            }
        }
        gens_.assign(gens.begin(), gens.end());
    }

    const QMGraph& graph() const override { return *ball_; }
    const std::vector<Elem>& generators() const override { return gens_; }
    Elem identity() const override { return gelem_key(groupoid_identity(omega_)); }
    Elem compose(const Elem& a, const Elem& b) const override {
        return gelem_key(groupoid_multiply(*s_, gelem_from_key(a), gelem_from_key(b)));
    }
    Elem inverse(const Elem& a) const override { return gelem_key(groupoid_inverse(*s_, gelem_from_key(a))); }
    int apply(const Elem& g, int v) const override { return ball_->find(compose(g, ball_->keys[static_cast<size_t>(v)])); }
    std::string format(const Elem& g) const override { return format_gelem(*s_, gelem_from_key(g)); }
    std::optional<Elem> translate_label(const Elem& g, int v) const override {
        return compose(g, ball_->keys[static_cast<size_t>(v)]);
    }

    int vertex_orbit(int v) const override { return terminus(*s_, gelem_from_key(ball_->keys[static_cast<size_t>(v)])); }
    std::optional<Elem> exact_transporter(int from, int to) const override {
        if (vertex_orbit(from) != vertex_orbit(to)) return std::nullopt;
        return compose(ball_->keys[static_cast<size_t>(to)], inverse(ball_->keys[static_cast<size_t>(from)]));
    }

    const RaggSpec& spec() const { return *s_; }
    int omega() const { return omega_; }

private:
    const RaggSpec* s_;
    const QMGraph* ball_;
    int omega_;
    std::vector<Elem> gens_;
};

//! Vertices of the ball grouped by terminus.
inline std::vector<std::vector<int>> orbits_by_terminus(const RaggSpec& s, const QMGraph& ball) {
    std::vector<std::vector<int>> out(s.vertices.size());
    for (int v = 0; v < ball.n(); ++v) out[static_cast<size_t>(terminus(s, gelem_from_key(ball.keys[static_cast<size_t>(v)])))].push_back(v);
    return out;
}

} // namespace qmedia
