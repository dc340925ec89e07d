#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qmedia/qmgraph.hpp"

namespace qmedia {

//! Group element encoded as an integer key (a word, a permutation, a groupoid loop...).
using Elem = std::vector<int>;

//! A group acting on a finite ball. Elements act as partial maps: `apply`
//! returns -1 when the image leaves the ball.
class GroupAction {
public:
    virtual ~GroupAction() = default;

    virtual const QMGraph& graph() const = 0;
    virtual const std::vector<Elem>& generators() const = 0;
    virtual Elem identity() const = 0;
    virtual Elem compose(const Elem& a, const Elem& b) const = 0;
    virtual Elem inverse(const Elem& a) const = 0;
    virtual int apply(const Elem& g, int v) const = 0;
    virtual std::string format(const Elem& g) const = 0;

    virtual bool is_identity(const Elem& g) const { return g == identity(); }

    //! Exact vertex-orbit id when the action is free with a known orbit structure, else -1.
    virtual int vertex_orbit(int) const { return -1; }
    virtual std::optional<Elem> exact_transporter(int, int) const { return std::nullopt; }
    //! Label of g·v even when it falls outside the ball.
    virtual std::optional<Elem> translate_label(const Elem&, int) const { return std::nullopt; }
    virtual std::optional<std::vector<Elem>> algebraic_stabiliser(int) const { return std::nullopt; }
    virtual std::optional<std::vector<Elem>> algebraic_rotative_stabiliser(int) const { return std::nullopt; }

    bool regular() const { return graph().n() > 0 && vertex_orbit(graph().basepoint) >= 0; }
};

//! Some g with g·from = to, searched over generator words inside the ball
//! unless the action provides an exact answer.
inline std::optional<Elem> transporter(const GroupAction& act, int from, int to) {
    if (auto t = act.exact_transporter(from, to)) return t;
    if (act.regular()) return std::nullopt;
    const auto& g = act.graph();
    std::vector<Elem> gens = act.generators();
    for (const auto& s : act.generators()) gens.push_back(act.inverse(s));
    std::vector<std::optional<Elem>> elem(static_cast<size_t>(g.n()));
    elem[static_cast<size_t>(from)] = act.identity();
    std::vector<int> q{from};
    for (size_t i = 0; i < q.size(); ++i) {
        int v = q[i];
        if (v == to) return elem[static_cast<size_t>(v)];
        for (const auto& s : gens) {
            int w = act.apply(s, v);
            if (w < 0 || elem[static_cast<size_t>(w)]) continue;
            elem[static_cast<size_t>(w)] = act.compose(s, *elem[static_cast<size_t>(v)]);
            q.push_back(w);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Concrete actions

//! Left multiplication of a subgroup of a graph product on its Cayley ball.
class CayleyAction : public GroupAction {
public:
    CayleyAction(const GPPresentation& p, const QMGraph& ball, std::vector<Word> gens) : p_(&p), ball_(&ball) {
        std::vector<std::vector<int>> per_vertex(static_cast<size_t>(p.size()));
        for (auto& w : gens) {
            w = reduce(p, w);
            if (w.empty()) continue;
            if (w.size() == 1) per_vertex[static_cast<size_t>(w.front().vertex)].push_back(w.front().element);
            gens_.push_back(word_key(w));
        }
        std::sort(gens_.begin(), gens_.end());
        gens_.erase(std::unique(gens_.begin(), gens_.end()), gens_.end());
        full_ = p.size() > 0;
        for (int u = 0; u < p.size(); ++u)
            if (subgroup_closure(p.group(u), per_vertex[static_cast<size_t>(u)]).index != 1) full_ = false;
    }

    static std::vector<Word> all_syllables(const GPPresentation& p) {
        std::vector<Word> out;
        for (int u = 0; u < p.size(); ++u)
            for (int x = 0; x < p.group(u).order; ++x)
                if (!p.group(u).is_identity(x)) out.push_back({{u, x}});
        return out;
    }

    const QMGraph& graph() const override { return *ball_; }
    const std::vector<Elem>& generators() const override { return gens_; }
    Elem identity() const override { return {}; }
    Elem compose(const Elem& a, const Elem& b) const override {
        return word_key(multiply(*p_, word_from_key(a), word_from_key(b)));
    }
    Elem inverse(const Elem& a) const override { return word_key(reduce(*p_, qmedia::inverse(*p_, word_from_key(a)))); }
    int apply(const Elem& g, int v) const override {
        return ball_->find(compose(g, ball_->keys[static_cast<size_t>(v)]));
    }
    std::string format(const Elem& g) const override { return format_word(*p_, word_from_key(g)); }
    std::optional<Elem> translate_label(const Elem& g, int v) const override {
        return compose(g, ball_->keys[static_cast<size_t>(v)]);
    }

    bool full() const { return full_; }
    const GPPresentation& presentation() const { return *p_; }

    int vertex_orbit(int) const override { return full_ ? 0 : -1; }
    std::optional<Elem> exact_transporter(int from, int to) const override {
        if (!full_) return std::nullopt;
        return compose(ball_->keys[static_cast<size_t>(to)], inverse(ball_->keys[static_cast<size_t>(from)]));
    }

    //! stab(J) = x(G_u × <link(u)>)x^{-1} for J dual to the clique x·G_u.
    std::optional<std::vector<Elem>> algebraic_stabiliser(int edge) const override {
        if (!full_) return std::nullopt;
        auto [x, u] = clique_of(edge);
        std::vector<Elem> out;
        for (int v : p_->star(u)) conjugates(x, v, out);
        return out;
    }

    //! stab_rot(J) = x G_u x^{-1}.
    std::optional<std::vector<Elem>> algebraic_rotative_stabiliser(int edge) const override {
        if (!full_) return std::nullopt;
        auto [x, u] = clique_of(edge);
        std::vector<Elem> out;
        conjugates(x, u, out);
        return out;
    }

private:
    std::pair<Elem, int> clique_of(int edge) const {
        auto [a, b] = ball_->edges[static_cast<size_t>(edge)];
        return {ball_->keys[static_cast<size_t>(a)], ball_->edge_tag[static_cast<size_t>(edge)]};
    }

    void conjugates(const Elem& x, int v, std::vector<Elem>& out) const {
        for (int s = 0; s < p_->group(v).order; ++s) {
            if (p_->group(v).is_identity(s)) continue;
            out.push_back(compose(compose(x, word_key({{v, s}})), inverse(x)));
        }
    }

    const GPPresentation* p_;
    const QMGraph* ball_;
    std::vector<Elem> gens_;
    bool full_ = false;
};

//! The subgroup generated by `gens` acting on a Cayley ball of `p` by left multiplication.
inline CayleyAction action_from_subgroup(const GPPresentation& p, const std::vector<Word>& gens, const QMGraph& ball) {
    return CayleyAction(p, ball, gens);
}

//! A group of graph automorphisms given by generating permutations.
class AutomorphismAction : public GroupAction {
public:
    AutomorphismAction(const QMGraph& g, std::vector<Perm> gens) : g_(&g) {
        for (auto& p : gens) {
            if (static_cast<int>(p.size()) != g.n() || !is_bijection(p))
                fail("InvalidInput", "generator is not a permutation of the vertices");
            for (auto [u, v] : g.edges)
                if (!g.adjacent(p[static_cast<size_t>(u)], p[static_cast<size_t>(v)]))
                    fail("InvalidInput", "generator does not preserve adjacency", {{"edge", {u, v}}});
            gens_.push_back(p);
        }
    }

    AutomorphismAction(QMGraph&&, std::vector<Perm>) = delete;

    const QMGraph& graph() const override { return *g_; }
    const std::vector<Elem>& generators() const override { return gens_; }
    Elem identity() const override { return identity_perm(g_->n()); }
    Elem compose(const Elem& a, const Elem& b) const override { return qmedia::compose(a, b); }
    Elem inverse(const Elem& a) const override { return invert(a); }
    int apply(const Elem& g, int v) const override { return g[static_cast<size_t>(v)]; }
    std::string format(const Elem& g) const override { return json(g).dump(); }

private:
    const QMGraph* g_;
    std::vector<Elem> gens_;
};

// ---------------------------------------------------------------------------
// Orbits

enum class OrbitObjects { vertices, edges, hyperplanes };

struct OrbitPartition {
    std::vector<std::vector<int>> classes;  //!< ordered by least member
    bool window_sound = true;
};

inline std::vector<std::vector<int>> classes_of(UnionFind& uf, int n) {
    std::map<int, std::vector<int>> by_root;
    for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [r, c] : by_root) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

//! Orbits under the closure of generator images that stay inside the ball.
inline OrbitPartition orbits(const GroupAction& act, OrbitObjects what, const HyperplaneSet* hs = nullptr) {
    const auto& g = act.graph();
    OrbitPartition out;
    out.window_sound = g.certified_interior == 0 || act.regular();
    if (what == OrbitObjects::vertices) {
        UnionFind uf(g.n());
        for (const auto& s : act.generators())
            for (int v = 0; v < g.n(); ++v)
                if (int w = act.apply(s, v); w >= 0) uf.unite(v, w);
        out.classes = classes_of(uf, g.n());
        return out;
    }
    HyperplaneSet local;
    if (what == OrbitObjects::hyperplanes && !hs) {
        local = hyperplanes(g, SectorMode::none);
        hs = &local;
    }
    int n = what == OrbitObjects::edges ? g.m() : static_cast<int>(hs->list.size());
    UnionFind uf(n);
    for (const auto& s : act.generators())
        for (int e = 0; e < g.m(); ++e) {
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            int sa = act.apply(s, a), sb = act.apply(s, b);
            if (sa < 0 || sb < 0) continue;
            int f = g.edge_id(sa, sb);
            if (f < 0) continue;
            if (what == OrbitObjects::edges) uf.unite(e, f);
            else uf.unite(hs->of_edge[static_cast<size_t>(e)], hs->of_edge[static_cast<size_t>(f)]);
        }
    out.classes = classes_of(uf, n);
    return out;
}

//! Distances from the vertices of a clique; the sector of v is the nearest clique vertex.
struct SectorIndex {
    std::vector<int> clique;
    std::vector<std::vector<int>> d;

    SectorIndex() = default;
    SectorIndex(const QMGraph& g, std::vector<int> c) : clique(std::move(c)) {
        for (int v : clique) d.push_back(bfs(g, v));
    }

    int size() const { return static_cast<int>(clique.size()); }

    int sector(int v) const {
        if (v < 0) return -1;
        int best = -1, bd = 1 << 30;
        bool tie = false;
        for (size_t i = 0; i < clique.size(); ++i) {
            int x = d[i][static_cast<size_t>(v)];
            if (x < 0) continue;
            if (x < bd) bd = x, best = static_cast<int>(i), tie = false;
            else if (x == bd) tie = true;
        }
        return tie ? -1 : best;
    }
};

//! Permutation of the sectors of the clique induced by g, if g maps the clique's
//! hyperplane to itself within the ball.
inline std::optional<Perm> sector_permutation(const GroupAction& act, const SectorIndex& S, const Elem& g) {
    Perm p(S.clique.size());
    for (size_t i = 0; i < S.clique.size(); ++i) {
        int j = S.sector(act.apply(g, S.clique[i]));
        if (j < 0) return std::nullopt;
        p[i] = j;
    }
    if (!is_bijection(p)) return std::nullopt;
    return p;
}

//! Orbit bookkeeping shared by the specialness checks and the embedding.
struct OrbitStructure {
    std::vector<int> oriented_orbit;  //!< 2e for (u->v), 2e+1 for (v->u), u < v
    std::vector<int> hyp_orbit;       //!< edge -> hyperplane orbit
    int num_orbits = 0;
    std::vector<int> rep_edge;        //!< orbit -> least edge
    std::vector<std::set<int>> adjacency;  //!< orbits with transverse translates
    bool window_sound = true;
};

inline OrbitStructure orbit_structure(const GroupAction& act) {
    const auto& g = act.graph();
    OrbitStructure os;
    const int m = g.m();
    os.window_sound = g.certified_interior == 0 || act.regular();
    UnionFind ou(2 * m);
    if (act.regular()) {
        std::map<int, int> rep;
        for (int v = 0; v < g.n(); ++v) {
            int o = act.vertex_orbit(v);
            auto it = rep.find(o);
            if (it == rep.end() || g.dist[static_cast<size_t>(v)] < g.dist[static_cast<size_t>(it->second)]) rep[o] = v;
        }
        std::map<std::pair<int, Elem>, int> key_to_oriented;
        for (int e = 0; e < m; ++e)
            for (int dir = 0; dir < 2; ++dir) {
                auto [a, b] = g.edges[static_cast<size_t>(e)];
                if (dir) std::swap(a, b);
                int r = rep.at(act.vertex_orbit(a));
                auto t = act.exact_transporter(r, a);
                auto y = t ? act.translate_label(act.inverse(*t), b) : std::nullopt;
                if (!y) continue;
                auto [it, fresh] = key_to_oriented.emplace(std::make_pair(r, *y), 2 * e + dir);
                if (!fresh) ou.unite(it->second, 2 * e + dir);
            }
    } else {
        for (const auto& s : act.generators())
            for (int e = 0; e < m; ++e) {
                auto [a, b] = g.edges[static_cast<size_t>(e)];
                int sa = act.apply(s, a), sb = act.apply(s, b);
                if (sa < 0 || sb < 0) continue;
                int f = g.edge_id(sa, sb);
                if (f < 0) continue;
                bool flip = sa > sb;
                ou.unite(2 * e, 2 * f + (flip ? 1 : 0));
                ou.unite(2 * e + 1, 2 * f + (flip ? 0 : 1));
            }
    }
    os.oriented_orbit.resize(static_cast<size_t>(2 * m));
    for (int i = 0; i < 2 * m; ++i) os.oriented_orbit[static_cast<size_t>(i)] = ou.find(i);

    UnionFind hu(2 * m);
    for (int e = 0; e < m; ++e) hu.unite(os.oriented_orbit[static_cast<size_t>(2 * e)], os.oriented_orbit[static_cast<size_t>(2 * e + 1)]);
    auto orb = [&](int a, int b) { return os.oriented_orbit[static_cast<size_t>(2 * g.edge_id(a, b))]; };
    for (int v = 0; v < g.n(); ++v) {
        const auto& nv = g.adj[static_cast<size_t>(v)];
        for (size_t i = 0; i < nv.size(); ++i)
            for (size_t j = i + 1; j < nv.size(); ++j)
                if (g.adjacent(nv[i], nv[j])) hu.unite(orb(v, nv[i]), orb(v, nv[j]));
        for_each_square_at(g, v, [&](int a, int x, int w, int y) {
            hu.unite(orb(a, x), orb(y, w));
            hu.unite(orb(a, y), orb(x, w));
        });
    }
    std::map<int, int> root_to_orbit;
    os.hyp_orbit.resize(static_cast<size_t>(m));
    for (int e = 0; e < m; ++e) {
        int r = hu.find(orb(g.edges[static_cast<size_t>(e)].first, g.edges[static_cast<size_t>(e)].second));
        auto [it, fresh] = root_to_orbit.emplace(r, os.num_orbits);
        if (fresh) {
            ++os.num_orbits;
            os.rep_edge.push_back(e);
        }
        os.hyp_orbit[static_cast<size_t>(e)] = it->second;
    }
    os.adjacency.assign(static_cast<size_t>(os.num_orbits), {});
    for (int v = 0; v < g.n(); ++v)
        for_each_square_at(g, v, [&](int a, int x, int, int y) {
            int i = os.hyp_orbit[static_cast<size_t>(g.edge_id(a, x))];
            int j = os.hyp_orbit[static_cast<size_t>(g.edge_id(a, y))];
            if (i != j) {
                os.adjacency[static_cast<size_t>(i)].insert(j);
                os.adjacency[static_cast<size_t>(j)].insert(i);
            }
        });
    return os;
}

// ---------------------------------------------------------------------------
// Stabilisers and sector actions

inline int least_edge(const Hyperplane& J) { return J.edges.front(); }

//! Does g map the hyperplane to itself, judged on an edge of J?
inline bool maps_hyperplane_to_itself(const GroupAction& act, const HyperplaneSet& hs, int j, const Elem& g) {
    const auto& gr = act.graph();
    for (int e : hs.list[static_cast<size_t>(j)].edges) {
        auto [a, b] = gr.edges[static_cast<size_t>(e)];
        int ga = act.apply(g, a), gb = act.apply(g, b);
        if (ga < 0 || gb < 0) continue;
        int f = gr.edge_id(ga, gb);
        return f >= 0 && hs.of_edge[static_cast<size_t>(f)] == j;
    }
    return false;
}

//! Generator words of length <= bound, deduplicated as elements, in BFS order.
inline std::vector<Elem> enumerate_elements(const GroupAction& act, const std::vector<Elem>& gens, int bound,
                                            std::size_t cap = 20000) {
    std::vector<Elem> all{act.identity()};
    std::set<Elem> seen{act.identity()};
    std::vector<Elem> frontier{act.identity()};
    std::vector<Elem> letters = gens;
    for (const auto& s : gens) letters.push_back(act.inverse(s));
    for (int len = 1; len <= bound && all.size() < cap; ++len) {
        std::vector<Elem> next;
        for (const auto& x : frontier)
            for (const auto& s : letters) {
                auto y = act.compose(x, s);
                if (seen.insert(y).second) {
                    all.push_back(y);
                    next.push_back(y);
                }
            }
        frontier = std::move(next);
    }
    return all;
}

struct StabiliserResult {
    std::vector<Elem> generators;
    bool algebraic = false;
};

inline StabiliserResult stabiliser(const GroupAction& act, const HyperplaneSet& hs, int j, int length_bound = 4) {
    StabiliserResult r;
    int e = least_edge(hs.list[static_cast<size_t>(j)]);
    if (auto alg = act.algebraic_stabiliser(e)) {
        r.generators = *alg;
        r.algebraic = true;
        return r;
    }
    for (const auto& g : enumerate_elements(act, act.generators(), length_bound))
        if (!act.is_identity(g) && maps_hyperplane_to_itself(act, hs, j, g)) r.generators.push_back(g);
    return r;
}

struct SectorAction {
    int hyperplane = 0;
    std::vector<int> clique;  //!< sector i is the sector containing clique[i]
    PermutationImage group;
    FreeActionReport action;
    int orbit_count = 0;
    bool exact = true;
};

inline SectorAction sector_action(const GroupAction& act, const HyperplaneSet& hs, int j, int length_bound = 4,
                                  bool strict = false) {
    const auto& g = act.graph();
    const auto& J = hs.list[static_cast<size_t>(j)];
    auto st = stabiliser(act, hs, j, length_bound);
    SectorAction sa;
    sa.hyperplane = j;
    sa.exact = J.window_exact || st.algebraic;
    if (strict && !sa.exact) fail("WindowInexact", "hyperplane is neither window-exact nor algebraic", {{"hyperplane", j}});
    auto [a, b] = g.edges[static_cast<size_t>(least_edge(J))];
    SectorIndex S(g, clique_of_edge(g, a, b));
    sa.clique = S.clique;
    std::vector<Perm> perms;
    for (const auto& s : st.generators)
        if (auto p = sector_permutation(act, S, s)) perms.push_back(*p);
    sa.group = permutation_image(perms, S.size());
    sa.action = is_free_action(sa.group.group, sa.group.elements, S.size());
    sa.orbit_count = sa.action.orbits;
    return sa;
}

// ---------------------------------------------------------------------------
// Specialness

struct SpecialReport {
    bool hyperplane_special = true;
    bool free_sector_actions = true;
    bool exact = false;  //!< true only when the caller has an algebraic certificate
    json witnesses = json::array();

    bool special() const { return hyperplane_special && free_sector_actions; }
    json to_json() const {
        return {{"hyperplane_special", hyperplane_special}, {"free_sector_actions", free_sector_actions}, {"special", special()},
                {"regime", exact ? "exact" : "window"}, {"witnesses", witnesses}};
    }
};

//! Scans certified vertices for two edges of distinct hyperplanes that lie in one
//! orbit (transverse or tangent translates), or in transverse-linked orbits
//! without spanning a square (a tangent translate of a transverse pair).
inline SpecialReport check_hyperplane_special(const GroupAction& act, const OrbitStructure& os) {
    const auto& g = act.graph();
    SpecialReport rep;
    for (int v = 0; v < g.n(); ++v) {
        if (!g.certified(v)) continue;
        const auto& nv = g.adj[static_cast<size_t>(v)];
        for (size_t i = 0; i < nv.size(); ++i)
            for (size_t j = i + 1; j < nv.size(); ++j) {
                int x = nv[i], y = nv[j];
                if (g.adjacent(x, y)) continue;
                int oi = os.hyp_orbit[static_cast<size_t>(g.edge_id(v, x))];
                int oj = os.hyp_orbit[static_cast<size_t>(g.edge_id(v, y))];
                bool square = span_square(g, v, x, y);
                std::string kind;
                if (oi == oj) kind = square ? "self-transverse" : "self-tangent";
                else if (!square && os.adjacency[static_cast<size_t>(oi)].count(oj)) kind = "tangent translate of a transverse pair";
                if (kind.empty()) continue;
                rep.hyperplane_special = false;
                if (rep.witnesses.size() < 8)
                    rep.witnesses.push_back({{"kind", kind}, {"vertex", v}, {"edges", {{v, x}, {v, y}}},
                                             {"labels", {g.labels[static_cast<size_t>(x)], g.labels[static_cast<size_t>(y)]}},
                                             {"orbits", {oi, oj}}});
            }
    }
    return rep;
}

inline SpecialReport check_hyperplane_special(const GroupAction& act) { return check_hyperplane_special(act, orbit_structure(act)); }

//! Data attached to an orbit representative J_i: its sectors (via the clique of
//! the least edge) and the image of its stabiliser in Sym(sectors).
struct RepresentativeData {
    int orbit = 0;
    int edge = 0;
    int hyperplane = 0;
    SectorIndex sectors;
    PermutationImage sigma;
    FreeActionReport action;
};

//! Stabiliser elements are read off pairs of edges of J_i in one oriented edge orbit.
inline RepresentativeData representative_data(const GroupAction& act, const OrbitStructure& os, const HyperplaneSet& hs, int orbit) {
    const auto& g = act.graph();
    RepresentativeData rd;
    rd.orbit = orbit;
    rd.edge = os.rep_edge[static_cast<size_t>(orbit)];
    rd.hyperplane = hs.of_edge[static_cast<size_t>(rd.edge)];
    auto [a0, b0] = g.edges[static_cast<size_t>(rd.edge)];
    rd.sectors = SectorIndex(g, clique_of_edge(g, a0, b0));

    // Oriented edges of J_i sharing an oriented orbit; an edge may meet its own reverse.
    std::map<int, std::pair<int, int>> first_of_orbit;
    std::set<Perm> perms;
    for (int e : hs.list[static_cast<size_t>(rd.hyperplane)].edges)
        for (int dir = 0; dir < 2; ++dir) {
            auto [ta, tb] = g.edges[static_cast<size_t>(e)];
            if (dir) std::swap(ta, tb);
            int key = os.oriented_orbit[static_cast<size_t>(2 * e + dir)];
            auto [it, fresh] = first_of_orbit.emplace(key, std::make_pair(ta, tb));
            if (fresh) continue;
            auto [fa, fb] = it->second;
            auto h = transporter(act, fa, ta);
            if (!h || act.apply(*h, fb) != tb) continue;
            SectorIndex D(g, clique_of_edge(g, fa, fb));
            Perm p(static_cast<size_t>(rd.sectors.size()), -1);
            bool ok = D.size() == rd.sectors.size();
            for (size_t k = 0; ok && k < D.clique.size(); ++k) {
                int src = rd.sectors.sector(D.clique[k]);
                int dst = rd.sectors.sector(act.apply(*h, D.clique[k]));
                if (src < 0 || dst < 0) ok = false;
                else p[static_cast<size_t>(src)] = dst;
            }
            if (ok && is_bijection(p)) perms.insert(p);
        }
    rd.sigma = permutation_image(std::vector<Perm>(perms.begin(), perms.end()), rd.sectors.size());
    rd.action = is_free_action(rd.sigma.group, rd.sigma.elements, rd.sectors.size());
    return rd;
}

inline SpecialReport check_special(const GroupAction& act) {
    auto os = orbit_structure(act);
    auto rep = check_hyperplane_special(act, os);
    auto hs = hyperplanes(act.graph(), SectorMode::none);
    for (int i = 0; i < os.num_orbits; ++i) {
        auto rd = representative_data(act, os, hs, i);
        if (!rd.action.free) {
            rep.free_sector_actions = false;
            rep.witnesses.push_back({{"kind", "sector action not free"}, {"orbit", i}, {"edge", rd.edge},
                                     {"element", rd.action.witness["element"]}, {"fixed_sector", rd.action.witness["point"]},
                                     {"sigma_order", rd.sigma.group.order}});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Rotative stabilisers and fundamental domains

//! Elements fixing every clique of J that is visible in the certified region.
inline StabiliserResult rotative_stabiliser(const GroupAction& act, const HyperplaneSet& hs, int j, int length_bound = 4) {
    StabiliserResult r;
    const auto& g = act.graph();
    const auto& J = hs.list[static_cast<size_t>(j)];
    if (auto alg = act.algebraic_rotative_stabiliser(least_edge(J))) {
        r.generators = *alg;
        r.algebraic = true;
        return r;
    }
    std::set<std::vector<int>> cl;
    for (int e : J.edges) {
        auto [a, b] = g.edges[static_cast<size_t>(e)];
        if (g.certified(a) && g.certified(b)) cl.insert(clique_of_edge(g, a, b));
    }
    for (const auto& x : stabiliser(act, hs, j, length_bound).generators) {
        bool fixes = true;
        for (const auto& C : cl) {
            for (int v : C) {
                int w = act.apply(x, v);
                if (w >= 0 && !std::binary_search(C.begin(), C.end(), w)) fixes = false;
            }
            if (!fixes) break;
        }
        if (fixes) r.generators.push_back(x);
    }
    return r;
}

//! The finite group generated by rotative-stabiliser generators, as elements.
inline std::vector<Elem> rotative_elements(const GroupAction& act, const std::vector<Elem>& gens, int cap = 64) {
    std::vector<Elem> all{act.identity()};
    std::set<Elem> seen{act.identity()};
    for (size_t i = 0; i < all.size() && static_cast<int>(all.size()) < cap; ++i)
        for (const auto& s : gens) {
            auto y = act.compose(all[i], s);
            if (seen.insert(y).second) all.push_back(y);
        }
    return all;
}

inline SectorIndex sectors_of(const QMGraph& g, const HyperplaneSet& hs, int j) {
    auto [a, b] = g.edges[static_cast<size_t>(least_edge(hs.list[static_cast<size_t>(j)]))];
    return SectorIndex(g, clique_of_edge(g, a, b));
}

inline bool check_rotative(const GroupAction& act, const HyperplaneSet& hs, const std::vector<int>& family, json* witness = nullptr) {
    for (int j : family) {
        auto S = sectors_of(act.graph(), hs, j);
        std::vector<Perm> perms;
        for (const auto& s : rotative_stabiliser(act, hs, j).generators)
            if (auto p = sector_permutation(act, S, s)) perms.push_back(*p);
        auto img = permutation_image(perms, S.size());
        auto fa = is_free_action(img.group, img.elements, S.size());
        if (!fa.free || fa.orbits != 1) {
            if (witness) *witness = {{"hyperplane", j}, {"free", fa.free}, {"orbits", fa.orbits}};
            return false;
        }
    }
    return true;
}

//! No J1 in the family separates x0 from another member J2.
inline bool is_peripheral(const QMGraph& g, const HyperplaneSet& hs, int x0, const std::vector<int>& family, json* witness = nullptr) {
    for (int j1 : family) {
        auto S = sectors_of(g, hs, j1);
        int home = S.sector(x0);
        for (int j2 : family) {
            if (j1 == j2 || transverse(g, hs, j1, j2).value) continue;
            bool reaches_home = false;
            for (int v : hs.list[static_cast<size_t>(j2)].carrier)
                if (S.sector(v) == home) {
                    reaches_home = true;
                    break;
                }
            if (!reaches_home) {
                if (witness) *witness = {{"separating", j1}, {"separated", j2}};
                return false;
            }
        }
    }
    return true;
}

struct FundamentalDomainReport {
    std::vector<int> Y;
    int peeled = 0;
    int peel_failures = 0;
    int max_steps = 0;
    long words_checked = 0;
    int returns_to_Y = 0;
    json log = json::array();
    json failures = json::array();

    bool passed() const { return peel_failures == 0 && returns_to_Y == 0; }
    json to_json() const {
        return {{"Y_size", Y.size()}, {"peeled", peeled}, {"peel_failures", peel_failures}, {"max_steps", max_steps},
                {"words_checked", words_checked}, {"returns_to_Y", returns_to_Y}, {"passed", passed()}, {"failures", failures}};
    }
};

//! Vertex stabilisers are trivial: no non-identity word of length <= bound fixes a certified vertex.
inline bool vertex_stabilisers_trivial(const GroupAction& act, int bound, json* witness = nullptr) {
    const auto& g = act.graph();
    for (const auto& x : enumerate_elements(act, act.generators(), bound, 5000)) {
        if (act.is_identity(x)) continue;
        for (int v = 0; v < g.n(); ++v)
            if (g.certified(v) && act.apply(x, v) == v) {
                if (witness) *witness = {{"element", act.format(x)}, {"vertex", v}};
                return false;
            }
    }
    return true;
}

//! Y is the intersection of the x0-sides of the family; every certified vertex is
//! peeled into Y by rotative-stabiliser elements, and no non-trivial product of at
//! most `word_bound` generators sends a Y-vertex into Y.
inline FundamentalDomainReport fundamental_domain_check(const GroupAction& act, const HyperplaneSet& hs, int x0,
                                                        const std::vector<int>& family, int word_bound = 4) {
    const auto& g = act.graph();
    json why;
    if (!check_rotative(act, hs, family, &why)) fail("PreconditionFailed", "action is not rotative on the family", why);
    if (!is_peripheral(g, hs, x0, family, &why)) fail("PreconditionFailed", "family is not peripheral at the basepoint", why);
    if (!vertex_stabilisers_trivial(act, 4, &why)) fail("PreconditionFailed", "a vertex stabiliser is non-trivial", why);

    FundamentalDomainReport rep;
    std::vector<SectorIndex> sec;
    std::vector<int> home;
    std::vector<std::vector<Elem>> rot;
    std::map<int, size_t> slot;
    std::vector<Elem> rgens;
    for (int j : family) {
        slot[j] = sec.size();
        sec.push_back(sectors_of(g, hs, j));
        home.push_back(sec.back().sector(x0));
        auto gens = rotative_stabiliser(act, hs, j).generators;
        rgens.insert(rgens.end(), gens.begin(), gens.end());
        rot.push_back(rotative_elements(act, gens));
    }
    std::vector<char> inY(static_cast<size_t>(g.n()), 1);
    for (int v = 0; v < g.n(); ++v) {
        for (size_t k = 0; k < sec.size() && inY[static_cast<size_t>(v)]; ++k)
            if (sec[k].sector(v) != home[k]) inY[static_cast<size_t>(v)] = 0;
        if (inY[static_cast<size_t>(v)]) rep.Y.push_back(v);
    }

    for (int v = 0; v < g.n(); ++v) {
        if (!g.certified(v)) continue;
        int x = v, steps = 0;
        json trail = json::array();
        bool ok = true;
        while (!inY[static_cast<size_t>(x)]) {
            auto d = bfs(g, x);
            int y = -1;
            for (int w : rep.Y)
                if (d[static_cast<size_t>(w)] >= 0 && (y < 0 || d[static_cast<size_t>(w)] < d[static_cast<size_t>(y)])) y = w;
            int z = -1;
            for (int w : g.adj[static_cast<size_t>(y)])
                if (d[static_cast<size_t>(w)] == d[static_cast<size_t>(y)] - 1) {
                    z = w;
                    break;
                }
            int j = z < 0 ? -1 : hs.of_edge[static_cast<size_t>(g.edge_id(z, y))];
            auto it = slot.find(j);
            if (it == slot.end()) {
                ok = false;
                rep.failures.push_back({{"vertex", v}, {"reason", "last edge not dual to the family"}, {"at", x}});
                break;
            }
            size_t k = it->second;
            int target = sec[k].sector(y);
            int moved = -1;
            for (const auto& r : rot[k]) {
                int gx = act.apply(r, x);
                if (gx >= 0 && sec[k].sector(gx) == target) {
                    moved = gx;
                    trail.push_back({{"hyperplane", j}, {"element", act.format(r)}});
                    break;
                }
            }
            if (moved < 0) {
                ok = false;
                rep.failures.push_back({{"vertex", v}, {"reason", "no rotation lands inside the window"}, {"at", x}});
                break;
            }
            x = moved;
            ++steps;
        }
        if (ok) {
            ++rep.peeled;
            rep.max_steps = std::max(rep.max_steps, steps);
            if (!trail.empty() && rep.log.size() < 32) rep.log.push_back({{"vertex", v}, {"moves", trail}});
        } else {
            ++rep.peel_failures;
        }
    }

    for (const auto& r : enumerate_elements(act, rgens, word_bound)) {
        ++rep.words_checked;
        if (act.is_identity(r)) continue;
        for (int y : rep.Y) {
            if (!g.certified(y)) continue;
            int w = act.apply(r, y);
            if (w >= 0 && inY[static_cast<size_t>(w)]) {
                ++rep.returns_to_Y;
                if (rep.failures.size() < 16) rep.failures.push_back({{"element", act.format(r)}, {"from", y}, {"to", w}});
            }
        }
    }
    return rep;
}

} // namespace qmedia
