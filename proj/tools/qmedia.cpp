// qmedia command-line front end.
//
// Exit codes: 0 success or verdict true, 1 verdict false (report carries
// witnesses), 2 input or usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "qmedia/embed.hpp"
#include "qmedia/ragg.hpp"

namespace fs = std::filesystem;
using namespace qmedia;

namespace {

enum Exit { kOk = 0, kFalse = 1, kInput = 2 };

struct RunConfig {
    std::string input;
    std::string second;
    int radius = 3;
    std::size_t budget = kDefaultBallBudget;
    std::uint64_t seed = 1;
    int pairs = 1000;
    int bigger_k = 0;
    int omega = 0;
    std::string format = "json";
    std::string gens;
    std::string set;
    bool per_arrow = false;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("InvalidInput", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail("InvalidInput", "'" + path + "' is not valid JSON", {{"detail", e.what()}});
    }
}

enum class Kind { presentation, ragg, cover, graph };

Kind kind_of(const json& j) {
    if (!j.is_object()) fail("InvalidInput", "top-level JSON must be an object");
    if (j.contains("vertex_map")) return Kind::cover;
    if (j.contains("vertex_products") || j.contains("embeddings")) return Kind::ragg;
    if (j.contains("groups")) return Kind::presentation;
    return Kind::graph;
}

const char* kind_name(Kind k) {
    switch (k) {
    case Kind::presentation: return "presentation";
    case Kind::ragg: return "ragg";
    case Kind::cover: return "cover";
    case Kind::graph: return "graph";
    }
    return "";
}

// Everything a graph-level subcommand may need, kept alive together because
// actions and embeddings hold pointers into the ball and the presentation.
struct Subject {
    Kind kind = Kind::graph;
    std::optional<GPPresentation> pres;
    std::optional<RaggSpec> spec;
    QMGraph ball;
    std::unique_ptr<GroupAction> act;
};

std::vector<Word> parse_gens(const GPPresentation& p, const std::string& text) {
    std::vector<Word> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';'))
        if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(parse_word(p, item));
    return out;
}

std::unique_ptr<Subject> load_subject(const json& j, const RunConfig& cfg, bool with_action) {
    if (cfg.radius < 0) fail("InvalidInput", "radius must be non-negative");
    auto s = std::make_unique<Subject>();
    s->kind = kind_of(j);
    switch (s->kind) {
    case Kind::presentation:
        s->pres = presentation_from_json(j);
        s->ball = cayley_ball(*s->pres, cfg.radius, cfg.budget);
        if (with_action) {
            auto gens = cfg.gens.empty() ? CayleyAction::all_syllables(*s->pres) : parse_gens(*s->pres, cfg.gens);
            s->act = std::make_unique<CayleyAction>(*s->pres, s->ball, gens);
        }
        break;
    case Kind::ragg:
        s->spec = load_valid_ragg(j);
        if (cfg.omega < 0 || cfg.omega >= static_cast<int>(s->spec->vertices.size()))
            fail("InvalidInput", "omega out of range");
        s->ball = frak_x_ball(*s->spec, cfg.omega, cfg.radius, cfg.budget);
        if (with_action) s->act = std::make_unique<RaggAction>(*s->spec, s->ball, cfg.omega);
        break;
    case Kind::graph:
        if (with_action) fail("InvalidInput", "a bare graph carries no group action");
        s->ball = graph_from_json(j);
        break;
    case Kind::cover:
        fail("InvalidInput", "a cover description is not a graph");
    }
    return s;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

json embedding_json(const Embedding& E) {
    const auto& g = E.act->graph();
    json groups = json::array();
    for (const auto& V : E.vg)
        groups.push_back({{"name", V.name}, {"orbit", V.orbit}, {"order", V.group.order},
                          {"sector_group_order", V.sigma.group.order}, {"k_order", V.k_order},
                          {"sectors", V.beta_inv.size()}});
    json phi = json::object();
    for (int v = 0; v < g.n(); ++v)
        if (g.certified(v) && E.phi[static_cast<size_t>(v)])
            phi[g.labels[static_cast<size_t>(v)]] = format_word(E.target, *E.phi[static_cast<size_t>(v)]);
    return {{"target", to_json(E.target)}, {"orbit_graph", orbit_hyperplane_graph(E).to_json()}, {"vertex_groups", groups}, {"x0", E.x0}, {"x1", E.x1}, {"phi", phi}};
}

EmbedOptions embed_options(const RunConfig& cfg) {
    EmbedOptions o;
    o.extra_k = cfg.bigger_k;
    o.seed = cfg.seed;
    o.random_pairs = cfg.pairs;
    return o;
}

std::vector<int> parse_set(const std::string& text, int n) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int v = 0;
        try {
            v = std::stoi(item);
        } catch (const std::exception&) {
            fail("InvalidInput", "bad vertex id '" + item + "'");
        }
        if (v < 0 || v >= n) fail("InvalidInput", "vertex id out of range", {{"vertex", v}});
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

json gated_json(const GatedReport& r) {
    return {{"gated", r.gated}, {"exact", r.exact}, {"connected", r.connected}, {"triangles", r.triangles},
            {"locally_convex", r.locally_convex}, {"failure", r.failure}, {"witness", r.witness}};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_group_check(const RunConfig& cfg) {
    auto j = read_json(cfg.input);
    try {
        auto g = group_from_json(j);
        emit({{"valid", true}, {"order", g.order}, {"group", to_json(g)}});
        return kOk;
    } catch (const Error& e) {
        if (e.kind() != "NotAGroup") throw;
        emit({{"valid", false}, {"error", e.what()}, {"witness", e.witness()}});
        return kFalse;
    }
}

int cmd_word_reduce(const RunConfig& cfg) {
    auto p = presentation_from_json(read_json(cfg.input));
    auto w = parse_word(p, cfg.second);
    auto r = reduce(p, w);
    if (cfg.format == "text") {
        std::cout << format_word(p, r) << "\n";
        return kOk;
    }
    emit({{"input", format_word(p, w)}, {"reduced", format_word(p, r)}, {"length", r.size()},
          {"input_reduced", is_graphically_reduced(p, w).reduced}});
    return kOk;
}

int cmd_qm(const std::string& what, const RunConfig& cfg) {
    auto s = load_subject(read_json(cfg.input), cfg, false);
    const auto& g = s->ball;
    if (what == "ball") {
        if (cfg.format == "dot") std::cout << to_dot(g);
        else emit(to_json(g));
        return kOk;
    }
    if (what == "check") {
        auto r = check_quasi_median(g);
        json out = r.to_json();
        out["vertices"] = g.n();
        out["certified"] = g.certified_vertices().size();
        emit(out);
        return r.passed() ? kOk : kFalse;
    }
    if (what == "hyperplanes" || what == "dot") {
        auto hs = hyperplanes(g, SectorMode::exact_only);
        if (what == "dot" || cfg.format == "dot") std::cout << to_dot(g, &hs);
        else emit(to_json(g, &hs));
        return kOk;
    }
    // gated: an explicit vertex set, or every window-exact carrier and sector.
    if (!cfg.set.empty()) {
        auto r = is_gated(g, parse_set(cfg.set, g.n()));
        emit(gated_json(r));
        return r.gated ? kOk : kFalse;
    }
    auto hs = hyperplanes(g, SectorMode::exact_only);
    int checked = 0;
    json failures = json::array();
    for (const auto& J : hs.list) {
        if (!J.window_exact) continue;
        std::vector<std::pair<std::string, std::vector<int>>> sets{{"carrier", J.carrier}};
        for (size_t i = 0; i < J.sectors.size(); ++i) sets.emplace_back("sector " + std::to_string(i), J.sectors[i]);
        for (const auto& [name, Y] : sets) {
            ++checked;
            auto r = is_gated(g, Y);
            if (!r.gated) failures.push_back({{"hyperplane", J.id}, {"set", name}, {"report", gated_json(r)}});
        }
    }
    emit({{"checked", checked}, {"failures", failures}, {"passed", failures.empty()}});
    return failures.empty() ? kOk : kFalse;
}

int cmd_special(const RunConfig& cfg) {
    auto s = load_subject(read_json(cfg.input), cfg, true);
    auto r = check_special(*s->act);
    emit(r.to_json());
    return r.special() ? kOk : kFalse;
}

int cmd_embed(const std::string& what, const RunConfig& cfg) {
    auto s = load_subject(read_json(cfg.input), cfg, true);
    auto opt = embed_options(cfg);
    auto E = build_embedding(*s->act, opt);
    if (what == "build") {
        emit(embedding_json(E));
        return kOk;
    }
    auto R = verify_embedding(E, opt);
    json out = R.to_json();
    bool ok = R.all_passed();
    if (s->pres) {
        json w;
        bool rec = recovers_presentation(E, *s->pres, &w);
        out["recovers_presentation"] = {{"passed", rec}, {"witness", w}};
        ok = ok && rec;
    }
    emit(out);
    return ok ? kOk : kFalse;
}

int cmd_ragg(const std::string& what, const RunConfig& cfg) {
    auto j = read_json(cfg.input);
    if (what == "validate") {
        auto r = validate_ragg(ragg_from_json(j));
        emit(r.to_json());
        return r.valid ? kOk : kFalse;
    }
    if (what == "ball") {
        auto s = load_subject(j, cfg, false);
        if (cfg.format == "dot") std::cout << to_dot(s->ball);
        else emit(to_json(s->ball));
        return kOk;
    }
    auto spec = load_valid_ragg(j);
    if (what == "check") {
        auto r = check_conditions(spec);
        emit(r.to_json());
        return r.passed() ? kOk : kFalse;
    }
    if (what == "psi") {
        PsiOptions o;
        o.per_arrow = cfg.per_arrow;
        try {
            emit(to_json(build_psi(spec, o)));
        } catch (const Error& e) {
            if (e.kind() != "ConditionsFailed") throw;
            emit({{"error", e.what()}, {"witness", e.witness()}});
            return kFalse;
        }
        return kOk;
    }
    // cover
    int sheets = 0;
    try {
        auto pb = pullback_cover(spec, read_json(cfg.second), &sheets);
        emit({{"sheets", sheets}, {"spec", to_json(pb)}});
    } catch (const Error& e) {
        if (e.kind() != "NotACovering") throw;
        emit({{"error", e.what()}, {"witness", e.witness()}});
        return kFalse;
    }
    return kOk;
}

// Runs the pipeline appropriate to one fixture file; never throws.
json corpus_entry(const fs::path& file, const fs::path& shown, const RunConfig& cfg, bool& input_error) {
    json e{{"file", shown.generic_string()}};
    try {
        auto j = read_json(file.string());
        Kind k = kind_of(j);
        e["kind"] = kind_name(k);
        if (k == Kind::cover) return e;
        if (k == Kind::ragg) {
            auto spec = load_valid_ragg(j);
            auto c = check_conditions(spec);
            e["conditions"] = c.passed();
            if (!c.passed()) e["witnesses"] = c.witnesses;
        }
        auto s = load_subject(j, cfg, k != Kind::graph);
        e["quasi_median"] = check_quasi_median(s->ball).passed();
        if (k == Kind::graph) return e;
        auto sp = check_special(*s->act);
        e["special"] = sp.special();
        if (sp.special()) {
            auto opt = embed_options(cfg);
            auto E = build_embedding(*s->act, opt);
            auto R = verify_embedding(E, opt);
            e["embedding"] = R.all_passed();
            if (s->pres) e["recovers_presentation"] = recovers_presentation(E, *s->pres);
        }
    } catch (const Error& err) {
        e["error"] = {{"kind", err.kind()}, {"message", err.what()}, {"witness", err.witness()}};
        input_error = true;
    }
    return e;
}

int cmd_corpus(const RunConfig& cfg) {
    if (!fs::is_directory(cfg.input)) fail("InvalidInput", "'" + cfg.input + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& it : fs::recursive_directory_iterator(cfg.input))
        if (it.is_regular_file() && it.path().extension() == ".json") files.push_back(it.path());
    std::sort(files.begin(), files.end());
    bool input_error = false;
    json entries = json::array();
    for (const auto& f : files) entries.push_back(corpus_entry(f, fs::relative(f, cfg.input), cfg, input_error));
    emit({{"entries", entries}, {"count", entries.size()}});
    return input_error ? kInput : kOk;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    if (const char* b = std::getenv("QMEDIA_BUDGET")) {
        try {
            cfg.budget = std::stoull(b);
        } catch (const std::exception&) {
            std::cerr << "QMEDIA_BUDGET must be a positive integer\n";
            return kInput;
        }
    }

    CLI::App app{"Quasi-median graphs, special actions and right-angled graphs of groups"};
    app.require_subcommand(1);
    std::string chosen;

    auto radius = [&](CLI::App* c) {
        c->add_option("-r,--radius", cfg.radius, "ball radius")->check(CLI::NonNegativeNumber);
        c->add_option("--budget", cfg.budget, "vertex budget (default QMEDIA_BUDGET or 100000)")->check(CLI::PositiveNumber);
    };
    auto input = [&](CLI::App* c) { c->add_option("input", cfg.input, "input JSON")->required(); };
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
        auto* c = parent->add_subcommand(name, desc);
        c->callback([&chosen, parent, name] { chosen = parent->get_name() + " " + name; });
        return c;
    };

    auto* group = app.add_subcommand("group", "finite groups")->require_subcommand(1);
    input(leaf(group, "check", "validate a multiplication table"));

    auto* word = app.add_subcommand("word", "graph-product words")->require_subcommand(1);
    auto* wr = leaf(word, "reduce", "normal form of a word");
    input(wr);
    wr->add_option("word", cfg.second, "word such as 'a:1 b:1'")->required();
    wr->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "text"}));

    auto* qm = app.add_subcommand("qm", "quasi-median graphs")->require_subcommand(1);
    for (const char* n : {"ball", "check", "hyperplanes", "gated", "dot"}) {
        auto* c = leaf(qm, n, std::string("qm ") + n);
        input(c);
        radius(c);
        c->add_option("--omega", cfg.omega, "base vertex for graph-of-groups input");
        if (std::string(n) == "ball" || std::string(n) == "hyperplanes")
            c->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "dot"}));
        if (std::string(n) == "gated") c->add_option("--set", cfg.set, "comma-separated vertex ids");
    }

    auto* act = app.add_subcommand("act", "group actions")->require_subcommand(1);
    auto* sc = leaf(act, "special-check", "specialness verdict with witnesses");
    input(sc);
    radius(sc);
    sc->add_option("--gens", cfg.gens, "subgroup generators, ';'-separated words");
    sc->add_option("--omega", cfg.omega);

    auto* embed = app.add_subcommand("embed", "embedding into a graph product")->require_subcommand(1);
    for (const char* n : {"build", "verify"}) {
        auto* c = leaf(embed, n, std::string("embed ") + n);
        input(c);
        radius(c);
        c->add_option("--gens", cfg.gens, "subgroup generators, ';'-separated words");
        c->add_option("--omega", cfg.omega);
        c->add_option("--bigger-k", cfg.bigger_k, "extra elements in every cyclic factor")->check(CLI::NonNegativeNumber);
        c->add_option("--seed", cfg.seed);
        c->add_option("--pairs", cfg.pairs, "random homomorphism pairs")->check(CLI::NonNegativeNumber);
    }

    auto* ragg = app.add_subcommand("ragg", "right-angled graphs of groups")->require_subcommand(1);
    for (const char* n : {"validate", "check", "psi", "cover", "ball"}) {
        auto* c = leaf(ragg, n, std::string("ragg ") + n);
        input(c);
        if (std::string(n) == "cover") c->add_option("cover", cfg.second, "cover JSON")->required();
        if (std::string(n) == "psi") c->add_flag("--per-arrow", cfg.per_arrow, "one vertex per arrow");
        if (std::string(n) == "ball") {
            radius(c);
            c->add_option("--omega", cfg.omega);
            c->add_option("--format", cfg.format)->check(CLI::IsMember({"json", "dot"}));
        }
    }

    auto* corpus = app.add_subcommand("corpus", "run every fixture under a directory");
    corpus->add_option("dir", cfg.input)->required();
    radius(corpus);
    corpus->add_option("--seed", cfg.seed);
    corpus->add_option("--pairs", cfg.pairs)->check(CLI::NonNegativeNumber);
    corpus->callback([&] { chosen = "corpus"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }

    try {
        if (chosen == "group check") return cmd_group_check(cfg);
        if (chosen == "word reduce") return cmd_word_reduce(cfg);
        if (chosen.rfind("qm ", 0) == 0) return cmd_qm(chosen.substr(3), cfg);
        if (chosen == "act special-check") return cmd_special(cfg);
        if (chosen.rfind("embed ", 0) == 0) return cmd_embed(chosen.substr(6), cfg);
        if (chosen.rfind("ragg ", 0) == 0) return cmd_ragg(chosen.substr(5), cfg);
        if (chosen == "corpus") return cmd_corpus(cfg);
    } catch (const Error& e) {
        emit({{"error", {{"kind", e.kind()}, {"message", e.what()}, {"witness", e.witness()}}}});
        std::cerr << e.what() << "\n";
        return e.kind() == "AmbiguousLabel" ? kFalse : kInput;
    }
    return kInput;
}
