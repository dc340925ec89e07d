#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qmedia/action.hpp"

namespace qmedia {

struct EmbedOptions {
    int x1 = -1;               //!< start of the labelling; default is the ball basepoint
    int extra_k = 0;           //!< enlarge every cyclic factor K_i by this many elements
    std::uint64_t seed = 1;
    int random_pairs = 1000;
};

//! Vertex group attached to one hyperplane orbit: the sector permutation group
//! of its representative times a cyclic group indexing the sector orbits.
struct VertexGroup {
    std::string name;
    int orbit = 0;
    int rep_edge = 0;
    std::vector<int> clique;
    PermutationImage sigma;
    FreeActionReport action;
    int k_order = 1;
    FiniteGroup group;            //!< element s*k_order + k
    std::vector<int> beta_inv;    //!< sector -> group element
    int base = 0;                 //!< element naming the sector of the basepoint
};

struct Embedding {
    const GroupAction* act = nullptr;
    OrbitStructure os;
    HyperplaneSet hs;
    GPPresentation target;
    std::vector<VertexGroup> vg;
    std::map<int, int> label_of;   //!< oriented edge orbit -> element of the vertex group
    int x0 = 0;
    int x1 = 0;
    std::vector<std::optional<Word>> phi;

    int oriented(int a, int b) const {
        const auto& g = act->graph();
        int e = g.edge_id(a, b);
        return os.oriented_orbit[static_cast<size_t>(2 * e + (a < b ? 0 : 1))];
    }

    std::optional<Syllable> label(int a, int b) const {
        auto it = label_of.find(oriented(a, b));
        if (it == label_of.end()) return std::nullopt;
        return Syllable{os.hyp_orbit[static_cast<size_t>(act->graph().edge_id(a, b))], it->second};
    }

    std::optional<Word> phi_hom(const Elem& g) const {
        int v = act->apply(g, x1);
        if (v < 0) return std::nullopt;
        return phi[static_cast<size_t>(v)];
    }
};

//! Φ from a chosen start vertex: product of edge labels along BFS paths.
inline std::vector<std::optional<Word>> label_paths(const Embedding& E, int start) {
    const auto& g = E.act->graph();
    std::vector<std::optional<Word>> phi(static_cast<size_t>(g.n()));
    phi[static_cast<size_t>(start)] = Word{};
    std::vector<int> q{start};
    for (size_t i = 0; i < q.size(); ++i) {
        int v = q[i];
        for (int w : g.adj[static_cast<size_t>(v)]) {
            if (phi[static_cast<size_t>(w)]) continue;
            auto l = E.label(v, w);
            if (!l) continue;
            phi[static_cast<size_t>(w)] = multiply(E.target, *phi[static_cast<size_t>(v)], {*l});
            q.push_back(w);
        }
    }
    return phi;
}

//! Labels the sectors of every orbit representative and every edge of the ball.
inline Embedding build_embedding(const GroupAction& act, const EmbedOptions& opt = {}) {
    const auto& g = act.graph();
    Embedding E;
    E.act = &act;
    E.os = orbit_structure(act);
    E.hs = hyperplanes(g, SectorMode::none);
    E.x0 = g.basepoint;
    E.x1 = opt.x1 < 0 ? g.basepoint : opt.x1;

    std::set<std::string> used;
    for (int i = 0; i < E.os.num_orbits; ++i) {
        auto rd = representative_data(act, E.os, E.hs, i);
        VertexGroup V;
        V.orbit = i;
        V.rep_edge = rd.edge;
        V.clique = rd.sectors.clique;
        V.sigma = rd.sigma;
        V.action = rd.action;
        int orbit_count = rd.action.orbits;
        V.k_order = orbit_count + opt.extra_k;
        V.group = direct_sum(rd.sigma.group, cyclic_group(V.k_order));
        std::vector<int> first(static_cast<size_t>(orbit_count), -1);
        for (int j = 0; j < rd.sectors.size(); ++j)
            if (first[static_cast<size_t>(rd.action.orbit_of[static_cast<size_t>(j)])] < 0)
                first[static_cast<size_t>(rd.action.orbit_of[static_cast<size_t>(j)])] = j;
        V.beta_inv.assign(static_cast<size_t>(rd.sectors.size()), -1);
        for (int j = 0; j < rd.sectors.size(); ++j) {
            int k = rd.action.orbit_of[static_cast<size_t>(j)];
            int xk = first[static_cast<size_t>(k)];
            for (int s = 0; s < rd.sigma.group.order; ++s)
                if (rd.sigma.elements[static_cast<size_t>(s)][static_cast<size_t>(xk)] == j) {
                    V.beta_inv[static_cast<size_t>(j)] = s * V.k_order + k;
                    break;
                }
        }
        int home = rd.sectors.sector(E.x0);
        if (home < 0) fail("WindowInexact", "basepoint has no unique sector", {{"orbit", i}});
        V.base = V.beta_inv[static_cast<size_t>(home)];

        int tag = -1;
        for (int e = 0; e < g.m(); ++e)
            if (E.os.hyp_orbit[static_cast<size_t>(e)] == i && static_cast<size_t>(e) < g.edge_tag.size() &&
                g.edge_tag[static_cast<size_t>(e)] >= 0 && (tag < 0 || g.edge_tag[static_cast<size_t>(e)] < tag))
                tag = g.edge_tag[static_cast<size_t>(e)];
        std::string name = tag >= 0 ? g.tag_names[static_cast<size_t>(tag)] : "J" + std::to_string(i);
        if (!used.insert(name).second) name += "#" + std::to_string(i);
        used.insert(name);
        V.name = name;
        E.target.add_vertex(name, V.group);

        // ℓ(a->b) = c0 · β⁻¹(sector a)⁻¹ · β⁻¹(sector b) · c0⁻¹, read on edges of the representative.
        const auto& G = V.group;
        std::vector<int> edges = E.hs.list[static_cast<size_t>(rd.hyperplane)].edges;
        std::stable_sort(edges.begin(), edges.end(), [&](int p, int q) {
            auto dp = std::max(g.dist[static_cast<size_t>(g.edges[static_cast<size_t>(p)].first)], g.dist[static_cast<size_t>(g.edges[static_cast<size_t>(p)].second)]);
            auto dq = std::max(g.dist[static_cast<size_t>(g.edges[static_cast<size_t>(q)].first)], g.dist[static_cast<size_t>(g.edges[static_cast<size_t>(q)].second)]);
            return dp < dq;
        });
        for (int e : edges) {
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            bool sure = g.certified(a) && g.certified(b);
            int sa = rd.sectors.sector(a), sb = rd.sectors.sector(b);
            if (sa < 0 || sb < 0 || sa == sb) continue;
            int ba = V.beta_inv[static_cast<size_t>(sa)], bb = V.beta_inv[static_cast<size_t>(sb)];
            if (ba < 0 || bb < 0) continue;
            for (int dir = 0; dir < 2; ++dir) {
                int from = dir ? bb : ba, to = dir ? ba : bb;
                int l = G.mul(G.mul(V.base, G.mul(G.inv(from), to)), G.inv(V.base));
                int key = E.os.oriented_orbit[static_cast<size_t>(2 * e + dir)];
                auto [it, fresh] = E.label_of.emplace(key, l);
                if (!fresh && it->second != l && sure)
                    fail("AmbiguousLabel", "one edge orbit receives two labels",
                         {{"orbit", i}, {"edge", {dir ? b : a, dir ? a : b}}, {"labels", {it->second, l}}});
            }
        }
        E.vg.push_back(std::move(V));
    }
    for (int i = 0; i < E.os.num_orbits; ++i)
        for (int j : E.os.adjacency[static_cast<size_t>(i)])
            if (i < j) E.target.add_edge(i, j);
    E.phi = label_paths(E, E.x1);
    return E;
}

//! Vertex groups G_i, in orbit order.
inline std::vector<VertexGroup> build_vertex_groups(const GroupAction& act, const EmbedOptions& opt = {}) {
    return build_embedding(act, opt).vg;
}

//! Orbits of hyperplanes, adjacent when some translates are transverse.
//! Vertex labels are the orbit names used for the target presentation.
//! Simplicial graph on hyperplane orbits; unlike a QMGraph it may be disconnected.
struct OrbitGraph {
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> edges;

    int n() const { return static_cast<int>(names.size()); }
    int m() const { return static_cast<int>(edges.size()); }
    json to_json() const { return {{"vertices", names}, {"edges", edges}}; }
};

inline OrbitGraph orbit_hyperplane_graph(const Embedding& E) {
    OrbitGraph og;
    for (const auto& V : E.vg) og.names.push_back(V.name);
    for (int i = 0; i < E.os.num_orbits; ++i)
        for (int j : E.os.adjacency[static_cast<size_t>(i)])
            if (i < j) og.edges.emplace_back(i, j);
    return og;
}

inline OrbitGraph orbit_hyperplane_graph(const GroupAction& act) { return orbit_hyperplane_graph(build_embedding(act)); }

//! Sector labels of one window-exact hyperplane: the sector of x0 gets the identity,
//! every other sector the label of an edge leaving the x0 sector into it.
struct SectorLabelling {
    int hyperplane = 0;
    int orbit = 0;
    std::vector<int> label;  //!< per sector, element of the orbit's vertex group
};

inline std::vector<SectorLabelling> label_sectors(const Embedding& E) {
    const auto& g = E.act->graph();
    auto hs = hyperplanes(g, SectorMode::exact_only);
    std::vector<SectorLabelling> out;
    for (const auto& J : hs.list) {
        if (!J.sectors_computed) continue;
        std::vector<int> sec(static_cast<size_t>(g.n()), -1);
        for (size_t i = 0; i < J.sectors.size(); ++i)
            for (int v : J.sectors[i]) sec[static_cast<size_t>(v)] = static_cast<int>(i);
        SectorLabelling L;
        L.hyperplane = J.id;
        L.orbit = E.os.hyp_orbit[static_cast<size_t>(J.edges.front())];
        const auto& G = E.vg[static_cast<size_t>(L.orbit)].group;
        L.label.assign(J.sectors.size(), -1);
        int home = sec[static_cast<size_t>(E.x0)];
        if (home < 0) continue;
        L.label[static_cast<size_t>(home)] = G.identity;
        for (int e : J.edges) {
            auto [a, b] = g.edges[static_cast<size_t>(e)];
            if (sec[static_cast<size_t>(b)] == home) std::swap(a, b);
            if (sec[static_cast<size_t>(a)] != home) continue;
            auto l = E.label(a, b);
            if (!l) fail("AmbiguousLabel", "edge orbit has no label", {{"edge", {a, b}}});
            int& slot = L.label[static_cast<size_t>(sec[static_cast<size_t>(b)])];
            if (slot >= 0 && slot != l->element)
                fail("AmbiguousLabel", "sector receives two labels",
                     {{"hyperplane", J.id}, {"edge", {a, b}}, {"labels", {slot, l->element}}});
            slot = l->element;
        }
        out.push_back(std::move(L));
    }
    return out;
}

//! Concatenated edge labels along a path, unreduced; nullopt if an edge is unlabelled.
inline std::optional<Word> label_path(const Embedding& E, const std::vector<int>& path) {
    validate_path(E.act->graph(), path);
    Word w;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        auto l = E.label(path[i], path[i + 1]);
        if (!l) return std::nullopt;
        w.push_back(*l);
    }
    return w;
}

inline std::optional<Word> phi_map(const Embedding& E, int x) { return E.phi[static_cast<size_t>(x)]; }

// ---------------------------------------------------------------------------
// Verification

struct EmbedCheck {
    std::string name;
    bool passed = true;
    long checked = 0;
    json witness = nullptr;
};

struct EmbeddingReport {
    std::vector<EmbedCheck> checks;
    long isometry_pairs = 0;
    long homomorphism_pairs = 0;

    const EmbedCheck& get(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        fail("InvalidInput", "unknown check '" + name + "'");
    }
    bool passed(const std::string& name) const { return get(name).passed; }
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const EmbedCheck& c) { return c.passed; });
    }
    json to_json() const {
        json j = json::object();
        for (const auto& c : checks) j[c.name] = {{"passed", c.passed}, {"checked", c.checked}, {"witness", c.witness}};
        return {{"checks", j}, {"isometry_pairs", isometry_pairs}, {"homomorphism_pairs", homomorphism_pairs}, {"passed", all_passed()}};
    }
};

inline EmbeddingReport verify_embedding(const Embedding& E, const EmbedOptions& opt = {}) {
    const auto& act = *E.act;
    const auto& g = act.graph();
    const auto& T = E.target;
    EmbeddingReport R;
    auto cert = g.certified_vertices();
    auto fail_once = [](EmbedCheck& c, json w) {
        if (c.passed) c.witness = std::move(w);
        c.passed = false;
    };
    auto phi = [&](int v) -> const std::optional<Word>& { return E.phi[static_cast<size_t>(v)]; };

    EmbedCheck defined{"labels_defined"}, path{"path_independence"}, backtrack{"backtrack_relation"},
        triangle{"triangle_relation"}, square{"square_relation"};
    for (int v : cert) {
        ++defined.checked;
        if (!phi(v)) fail_once(defined, {{"vertex", g.labels[static_cast<size_t>(v)]}});
    }
    for (auto [a, b] : g.edges) {
        if (!g.certified(a) || !g.certified(b)) continue;
        auto lab = E.label(a, b), bal = E.label(b, a);
        ++defined.checked;
        if (!lab || !bal) {
            fail_once(defined, {{"edge", {a, b}}});
            continue;
        }
        ++backtrack.checked;
        if (!multiply(T, {*lab}, {*bal}).empty()) fail_once(backtrack, {{"edge", {a, b}}});
        ++path.checked;
        if (phi(a) && phi(b) && multiply(T, *phi(a), {*lab}) != *phi(b)) fail_once(path, {{"edge", {a, b}}});
    }
    auto word_of = [&](std::initializer_list<int> walk) -> std::optional<Word> {
        Word w;
        const int* prev = nullptr;
        for (const int& v : walk) {
            if (prev) {
                auto l = E.label(*prev, v);
                if (!l) return std::nullopt;
                w.push_back(*l);
            }
            prev = &v;
        }
        return reduce(T, w);
    };
    for (int a : cert) {
        const auto& na = g.adj[static_cast<size_t>(a)];
        for (size_t i = 0; i < na.size(); ++i)
            for (size_t j = i + 1; j < na.size(); ++j) {
                int x = na[i], y = na[j];
                if (!g.adjacent(x, y) || !g.certified(x) || !g.certified(y)) continue;
                ++triangle.checked;
                auto l = word_of({a, x, y}), r = word_of({a, y});
                if (!l || !r || *l != *r) fail_once(triangle, {{"triangle", {a, x, y}}});
            }
        for_each_square_at(g, a, [&](int s, int x, int w, int y) {
            if (!g.certified(x) || !g.certified(y) || !g.certified(w)) return;
            ++square.checked;
            auto l = word_of({s, x, w}), r = word_of({s, y, w});
            if (!l || !r || *l != *r) fail_once(square, {{"square", {s, x, w, y}}});
        });
    }

    EmbedCheck reduced{"reduced_geodesic_labels"}, iso{"isometry"};
    for (int x : cert) {
        auto d = bfs(g, x);
        std::vector<std::optional<Word>> raw(static_cast<size_t>(g.n()));
        raw[static_cast<size_t>(x)] = Word{};
        std::vector<int> q{x};
        for (size_t i = 0; i < q.size(); ++i) {
            int v = q[i];
            for (int w : g.adj[static_cast<size_t>(v)]) {
                if (raw[static_cast<size_t>(w)] || d[static_cast<size_t>(w)] != d[static_cast<size_t>(v)] + 1 || !g.certified(w)) continue;
                auto l = E.label(v, w);
                if (!l || !raw[static_cast<size_t>(v)]) continue;
                Word nw = *raw[static_cast<size_t>(v)];
                nw.push_back(*l);
                raw[static_cast<size_t>(w)] = std::move(nw);
                q.push_back(w);
            }
        }
        for (int y : cert) {
            if (y == x) continue;
            if (raw[static_cast<size_t>(y)]) {
                ++reduced.checked;
                if (!is_graphically_reduced(T, *raw[static_cast<size_t>(y)]).reduced)
                    fail_once(reduced, {{"from", x}, {"to", y}});
            }
            if (y < x || !phi(x) || !phi(y)) continue;
            ++iso.checked;
            auto diff = multiply(T, inverse(T, *phi(x)), *phi(y));
            if (static_cast<int>(diff.size()) != d[static_cast<size_t>(y)])
                fail_once(iso, {{"pair", {x, y}}, {"distance", d[static_cast<size_t>(y)]}, {"image_distance", diff.size()}});
        }
    }
    R.isometry_pairs = iso.checked;

    // Window group elements: transporters from x1 to certified vertices of its orbit.
    std::vector<Elem> elems;
    for (int v : cert) {
        if (act.regular() && act.vertex_orbit(v) != act.vertex_orbit(E.x1)) continue;
        if (auto t = transporter(act, E.x1, v)) elems.push_back(*t);
    }
    std::vector<Elem> letters = act.generators();
    for (const auto& s : act.generators()) letters.push_back(act.inverse(s));

    EmbedCheck equi{"equivariance"}, hom{"homomorphism"};
    for (const auto& h : letters) {
        auto ph = E.phi_hom(h);
        for (int x : cert) {
            int hx = act.apply(h, x);
            if (hx < 0 || !ph || !phi(x) || !phi(hx)) continue;
            ++equi.checked;
            if (multiply(T, *ph, *phi(x)) != *phi(hx)) fail_once(equi, {{"element", act.format(h)}, {"vertex", x}});
        }
    }
    auto try_pair = [&](const Elem& a, const Elem& b) {
        auto pa = E.phi_hom(a), pb = E.phi_hom(b), pab = E.phi_hom(act.compose(a, b));
        if (!pa || !pb || !pab) return false;
        ++hom.checked;
        if (multiply(T, *pa, *pb) != *pab) fail_once(hom, {{"pair", {act.format(a), act.format(b)}}});
        return true;
    };
    for (const auto& a : letters)
        for (const auto& b : letters) try_pair(a, b);
    if (!elems.empty()) {
        std::mt19937_64 rng(opt.seed);
        std::uniform_int_distribution<size_t> pick(0, elems.size() - 1);
        int got = 0;
        for (long tries = 0; got < opt.random_pairs && tries < 50L * opt.random_pairs; ++tries)
            if (try_pair(elems[pick(rng)], elems[pick(rng)])) ++got;
        R.homomorphism_pairs = got;
    }

    EmbedCheck cliq{"cliques_into_cosets"}, onto{"cliques_onto_cosets"};
    std::set<std::vector<int>> seen;
    for (auto [a, b] : g.edges) {
        auto C = clique_of_edge(g, a, b);
        if (!std::all_of(C.begin(), C.end(), [&](int v) { return g.certified(v) && phi(v); })) continue;
        if (!seen.insert(C).second) continue;
        ++cliq.checked;
        int vtx = E.os.hyp_orbit[static_cast<size_t>(g.edge_id(a, b))];
        std::set<Word> images;
        for (int v : C) {
            auto diff = multiply(T, inverse(T, *phi(C.front())), *phi(v));
            if (diff.size() > 1 || (diff.size() == 1 && diff.front().vertex != vtx)) fail_once(cliq, {{"clique", C}});
            images.insert(diff);
        }
        if (images.size() != C.size()) fail_once(cliq, {{"clique", C}, {"reason", "not injective"}});
        ++onto.checked;
        if (static_cast<int>(C.size()) != T.group(vtx).order)
            fail_once(onto, {{"clique", C}, {"size", C.size()}, {"group_order", T.group(vtx).order}});
    }

    EmbedCheck tri{"image_contains_triangles"}, lc{"image_locally_convex"}, gated{"image_gated"};
    {
        auto tb = cayley_ball(T, g.radius);
        std::vector<int> Y;
        std::vector<char> region(static_cast<size_t>(tb.n()), 0);
        for (int v = 0; v < g.n(); ++v) {
            if (!phi(v)) continue;
            int t = tb.find(word_key(*phi(v)));
            if (t < 0) continue;
            Y.push_back(t);
            if (g.certified(v)) region[static_cast<size_t>(t)] = 1;
        }
        std::sort(Y.begin(), Y.end());
        Y.erase(std::unique(Y.begin(), Y.end()), Y.end());
        auto gr = is_gated(tb, Y, &region);
        tri.checked = lc.checked = gated.checked = static_cast<long>(Y.size());
        if (!gr.triangles) fail_once(tri, gr.witness);
        if (!gr.locally_convex) fail_once(lc, nullptr);
        if (!gr.gated) fail_once(gated, {{"failure", gr.failure}, {"witness", gr.witness}});
    }

    EmbedCheck diag{"basepoint_change"};
    for (int q : g.adj[static_cast<size_t>(E.x1)]) {
        if (!g.certified(q) || !phi(q)) continue;
        auto other = label_paths(E, q);
        for (int x : cert) {
            if (!phi(x) || !other[static_cast<size_t>(x)]) continue;
            ++diag.checked;
            if (multiply(T, *phi(q), *other[static_cast<size_t>(x)]) != *phi(x)) fail_once(diag, {{"start", q}, {"vertex", x}});
        }
        break;
    }

    R.checks = {defined, path, backtrack, triangle, square, reduced, iso, equi, hom, cliq, onto, tri, lc, gated, diag};
    return R;
}

//! Identity recovery for a graph product acting on its own Cayley ball: the
//! orbit graph is the presentation graph (matched by vertex name), vertex groups
//! have the right orders and Φ maps the certified region onto the target's.
inline bool recovers_presentation(const Embedding& E, const GPPresentation& p, json* witness = nullptr) {
    auto bad = [&](json w) {
        if (witness) *witness = std::move(w);
        return false;
    };
    const auto& T = E.target;
    if (T.size() != p.size()) return bad({{"orbits", T.size()}, {"vertices", p.size()}});
    std::vector<int> to_p(static_cast<size_t>(T.size()));
    for (int i = 0; i < T.size(); ++i) {
        to_p[static_cast<size_t>(i)] = p.vertex_id(T.names[static_cast<size_t>(i)]);
        if (T.group(i).order != p.group(to_p[static_cast<size_t>(i)]).order) return bad({{"vertex", T.names[static_cast<size_t>(i)]}});
    }
    for (int i = 0; i < T.size(); ++i)
        for (int j = 0; j < T.size(); ++j)
            if (i != j && T.adjacent(i, j) != p.adjacent(to_p[static_cast<size_t>(i)], to_p[static_cast<size_t>(j)]))
                return bad({{"edge", {T.names[static_cast<size_t>(i)], T.names[static_cast<size_t>(j)]}}});
    const auto& g = E.act->graph();
    std::set<Word> image;
    for (int v : g.certified_vertices()) {
        if (!E.phi[static_cast<size_t>(v)]) return bad({{"undefined", v}});
        image.insert(*E.phi[static_cast<size_t>(v)]);
    }
    auto tb = cayley_ball(T, g.radius);
    auto target_cert = tb.certified_vertices();
    if (image.size() != target_cert.size()) return bad({{"image", image.size()}, {"target", target_cert.size()}});
    for (int t : target_cert)
        if (!image.count(word_from_key(tb.keys[static_cast<size_t>(t)]))) return bad({{"missed", tb.labels[static_cast<size_t>(t)]}});
    return true;
}

// ---------------------------------------------------------------------------
// Virtual retract certificate

struct RetractCertificate {
    std::vector<int> family;         //!< hyperplanes tangent to Y
    FundamentalDomainReport domain;
    bool domain_matches_Y = true;
    bool intersection_trivial = true;
    json witness = nullptr;

    bool passed() const { return domain.passed() && domain_matches_Y && intersection_trivial; }
    json to_json() const {
        return {{"family", family}, {"domain", domain.to_json()}, {"domain_matches_Y", domain_matches_Y},
                {"intersection_trivial", intersection_trivial}, {"passed", passed()}, {"witness", witness}};
    }
};

//! For a gated Y stabilised by H: the group R generated by the rotative
//! stabilisers of the hyperplanes tangent to Y has Y as fundamental domain and
//! meets H trivially, all within the window and up to words of length `bound`.
inline RetractCertificate virtual_retract_certificate(const GroupAction& act, const std::vector<Elem>& H,
                                                      std::vector<int> Y, int bound = 4) {
    const auto& g = act.graph();
    std::sort(Y.begin(), Y.end());
    auto gr = is_gated(g, Y);
    if (!gr.gated) fail("PreconditionFailed", "Y is not gated (" + gr.failure + ")", gr.witness);
    auto inY = [&](int v) { return std::binary_search(Y.begin(), Y.end(), v); };
    for (const auto& h : H)
        for (int y : Y) {
            int hy = act.apply(h, y);
            if (g.certified(y) && hy >= 0 && !inY(hy))
                fail("PreconditionFailed", "H does not stabilise Y", {{"element", act.format(h)}, {"vertex", y}});
        }
    if (!inY(g.basepoint)) fail("PreconditionFailed", "Y must contain the basepoint");

    RetractCertificate rc;
    auto hs = hyperplanes(g, SectorMode::none);
    std::set<int> fam;
    for (int y : Y) {
        if (!g.certified(y)) continue;
        for (int z : g.adj[static_cast<size_t>(y)])
            if (!inY(z)) fam.insert(hs.of_edge[static_cast<size_t>(g.edge_id(y, z))]);
    }
    rc.family.assign(fam.begin(), fam.end());
    rc.domain = fundamental_domain_check(act, hs, g.basepoint, rc.family, bound);
    for (int v : g.certified_vertices()) {
        bool a = inY(v), b = std::binary_search(rc.domain.Y.begin(), rc.domain.Y.end(), v);
        if (a != b) {
            rc.domain_matches_Y = false;
            rc.witness = {{"vertex", g.labels[static_cast<size_t>(v)]}};
            break;
        }
    }
    std::vector<Elem> rgens;
    for (int j : rc.family) {
        auto r = rotative_stabiliser(act, hs, j).generators;
        rgens.insert(rgens.end(), r.begin(), r.end());
    }
    auto R = enumerate_elements(act, rgens, bound);
    std::set<Elem> rset(R.begin(), R.end());
    for (const auto& h : enumerate_elements(act, H, bound))
        if (!act.is_identity(h) && rset.count(h)) {
            rc.intersection_trivial = false;
            rc.witness = {{"element", act.format(h)}};
            break;
        }
    return rc;
}

} // namespace qmedia
