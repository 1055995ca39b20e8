#include "cmflow/app.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>

namespace cmflow::app {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"", {"n_dim", "k", "alpha", "seed"}},
        {"psi", {"family", "params", "sampled"}},
        {"grid", {"variant", "resolution"}},
        {"u0", {"legendre", "random_amplitude"}},
        {"flow",
         {"residual_tol", "t_max", "dt_init", "dt_min", "dt_max", "tol", "safety", "monitor_every", "gamma", "snapshot_every",
          "max_steps", "blowup_guard", "stability_limit"}},
        {"output", {"dir", "trace_csv", "summary_json", "mesh_obj", "mesh_ply", "snapshots"}},
        {"sweep", {"alpha", "epsilon", "resolution", "cap"}},
    };
    return s;
}

std::string trim(const std::string& s) { return boost::trim_copy(s); }

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + text + "'");
    }
    if (pos != t.size()) throw ConfigError(key + ": not a number: '" + text + "'");
    return v;
}

long long to_integer(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + text + "'");
    }
    if (pos != t.size()) throw ConfigError(key + ": not an integer: '" + text + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    const std::string t = boost::to_lower_copy(trim(text));
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    boost::split(items, text, boost::is_any_of(","), boost::token_compress_on);
    std::vector<std::string> out;
    for (auto& s : items)
        if (!trim(s).empty()) out.push_back(trim(s));
    return out;
}

SphereGrid::Resolution parse_resolution(const std::string& text, GridVariant v) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of("xX"));
    SphereGrid::Resolution r;
    if (parts.size() == 1) {
        r.n_theta = static_cast<int>(to_integer("grid.resolution", parts[0]));
        r.n_phi = v == GridVariant::FullS2 ? 2 * r.n_theta : 1;
    } else if (parts.size() == 2) {
        r.n_theta = static_cast<int>(to_integer("grid.resolution", parts[0]));
        r.n_phi = static_cast<int>(to_integer("grid.resolution", parts[1]));
    } else {
        throw ConfigError("grid.resolution: expected N or NxM, got '" + text + "'");
    }
    return r;
}

}  // namespace

std::size_t SweepAxes::size() const {
    auto n = [](std::size_t s) { return s == 0 ? std::size_t{1} : s; };
    return n(alpha.size()) * n(epsilon.size()) * n(resolution.size());
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    // Flatten to "section.key" -> value, rejecting anything not in the schema.
    std::map<std::string, std::string> kv;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (!schema().at("").count(name)) throw ConfigError(origin + ": unknown key '" + name + "'");
            kv[name] = node.data();
            continue;
        }
        const auto sec = schema().find(name);
        if (sec == schema().end() || name.empty()) throw ConfigError(origin + ": unknown section [" + name + "]");
        for (const auto& [key, leaf] : node) {
            if (!sec->second.count(key)) throw ConfigError(origin + ": unknown key '" + key + "' in [" + name + "]");
            kv[name + "." + key] = leaf.data();
        }
    }
    auto get = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    RunConfig cfg;
    FlowConfig& f = cfg.flow;
    if (auto v = get("n_dim")) f.n_dim = static_cast<int>(to_integer("n_dim", *v));
    if (auto v = get("k")) f.k = static_cast<int>(to_integer("k", *v));
    if (auto v = get("alpha")) f.alpha = to_double("alpha", *v);
    if (auto v = get("seed")) {
        const long long s = to_integer("seed", *v);
        if (s < 0) throw ConfigError("seed must be nonnegative");
        f.u0.seed = static_cast<std::uint64_t>(s);
    }

    if (auto v = get("grid.variant")) {
        try {
            f.grid_variant = parse_grid_variant(trim(*v));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid.variant: ") + e.what());
        }
    }
    if (f.grid_variant == GridVariant::Axisym) f.resolution = {128, 1};
    if (auto v = get("grid.resolution")) f.resolution = parse_resolution(*v, f.grid_variant);

    if (auto v = get("psi.family")) cfg.psi_family = trim(*v);
    if (auto v = get("psi.params")) cfg.psi_params = trim(*v);
    if (auto v = get("psi.sampled")) f.sampled_psi_path = trim(*v);
    try {
        f.psi = PsiSpec::parse(cfg.psi_family, cfg.psi_params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("psi: ") + e.what());
    }

    if (auto v = get("u0.legendre")) {
        for (const auto& item : split_list(*v)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("u0.legendre: expected degree:amplitude, got '" + item + "'");
            const long long l = to_integer("u0.legendre", item.substr(0, colon));
            if (l < 0) throw ConfigError("u0.legendre: negative degree");
            f.u0.legendre.emplace_back(static_cast<int>(l), to_double("u0.legendre", item.substr(colon + 1)));
        }
    }
    if (auto v = get("u0.random_amplitude")) f.u0.random_amplitude = to_double("u0.random_amplitude", *v);

    if (auto v = get("flow.residual_tol")) f.residual_tol = to_double("flow.residual_tol", *v);
    if (auto v = get("flow.t_max")) f.t_max = to_double("flow.t_max", *v);
    if (auto v = get("flow.dt_init")) f.step.dt_init = to_double("flow.dt_init", *v);
    if (auto v = get("flow.dt_min")) f.step.dt_min = to_double("flow.dt_min", *v);
    if (auto v = get("flow.dt_max")) f.step.dt_max = to_double("flow.dt_max", *v);
    if (auto v = get("flow.tol")) f.step.tol = to_double("flow.tol", *v);
    if (auto v = get("flow.safety")) f.step.safety = to_double("flow.safety", *v);
    if (auto v = get("flow.monitor_every")) f.monitor_every = static_cast<int>(to_integer("flow.monitor_every", *v));
    if (auto v = get("flow.gamma")) f.gamma = to_double("flow.gamma", *v);
    if (auto v = get("flow.snapshot_every")) f.snapshot_every = static_cast<int>(to_integer("flow.snapshot_every", *v));
    if (auto v = get("flow.max_steps")) {
        const long long m = to_integer("flow.max_steps", *v);
        if (m <= 0) throw ConfigError("flow.max_steps must be positive");
        f.max_steps = static_cast<std::size_t>(m);
    }
    if (auto v = get("flow.blowup_guard")) f.blowup_guard = to_double("flow.blowup_guard", *v);
    if (auto v = get("flow.stability_limit")) f.step.stability_limit = to_bool("flow.stability_limit", *v);

    if (auto v = get("output.dir")) cfg.output.dir = trim(*v);
    if (auto v = get("output.trace_csv")) cfg.output.trace_csv = to_bool("output.trace_csv", *v);
    if (auto v = get("output.summary_json")) cfg.output.summary_json = to_bool("output.summary_json", *v);
    if (auto v = get("output.mesh_obj")) cfg.output.mesh_obj = to_bool("output.mesh_obj", *v);
    if (auto v = get("output.mesh_ply")) cfg.output.mesh_ply = to_bool("output.mesh_ply", *v);
    if (auto v = get("output.snapshots")) cfg.output.snapshots = to_bool("output.snapshots", *v);

    if (auto v = get("sweep.alpha"))
        for (const auto& s : split_list(*v)) cfg.sweep.alpha.push_back(to_double("sweep.alpha", s));
    if (auto v = get("sweep.epsilon"))
        for (const auto& s : split_list(*v)) cfg.sweep.epsilon.push_back(to_double("sweep.epsilon", s));
    if (auto v = get("sweep.resolution"))
        for (const auto& s : split_list(*v)) cfg.sweep.resolution.push_back(static_cast<int>(to_integer("sweep.resolution", s)));
    if (auto v = get("sweep.cap")) {
        const long long c = to_integer("sweep.cap", *v);
        if (c <= 0) throw ConfigError("sweep.cap must be positive");
        cfg.sweep.cap = static_cast<std::size_t>(c);
    }
    if (!cfg.sweep.epsilon.empty() && f.psi.family() == PsiFamily::Constant)
        throw ConfigError("sweep.epsilon needs an EvenHarmonic or PowerOfBase psi");

    validate(f);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

void apply(const Overrides& o, RunConfig& cfg) {
    if (!o.out_dir.empty()) cfg.output.dir = o.out_dir;
    if (o.has_seed) cfg.flow.u0.seed = o.seed;
    if (o.force) cfg.flow.force = true;
    if (o.allow_uneven) cfg.flow.allow_uneven = true;
}

}  // namespace cmflow::app
