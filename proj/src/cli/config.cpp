#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fpg/error.hpp"
#include "fpg/io.hpp"
#include "fpg/random.hpp"
#include "fpg/text.hpp"

namespace fpg::cli {

Json default_config() {
    return Json::parse(R"({
  "seed": 0,
  "graph": {"family": "geometric:q=0.5", "N": 20},
  "potential": {"kind": "random", "low": -1.0, "high": 1.0},
  "beta": 1.0,
  "equation": "fpe",
  "phibar_sign": "minus",
  "initial": {"kind": "gibbs_perturbed", "epsilon": 0.5},
  "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-10, "max_step": null, "t_end": 10.0,
                 "record_every": 0.1, "positivity_floor": 1e-13, "snapshot_every": 0},
  "geodesic": {"knots": 32, "max_iters": 2000, "grad_tol": 1e-8, "init": "linear",
               "positivity_floor": 1e-13, "boundary_warning_level": 0.01},
  "constants": {"delta": 0.5},
  "talagrand": {"nu_inf": 0.5, "nu_sup": 2.0, "samples": 10, "mu": "uniform"},
  "w1": {"pairs": 5, "epsilon": 1.0},
  "metric": {"a": null, "b": null},
  "outputs": "out"
})");
}

namespace {

// Sections whose shape depends on their "kind": a user value replaces the
// default wholesale instead of being merged into it.
bool kinded(const std::string& key) { return key == "potential" || key == "initial"; }

const std::vector<std::string>& allowed_kind_keys(const std::string& section, const std::string& kind) {
    static const std::vector<std::string> constant{"kind", "c"}, linear{"kind", "slope"},
        random{"kind", "low", "high", "seed"}, file{"kind", "path"}, perturbed{"kind", "epsilon", "seed"},
        uniform{"kind"};
    if (section == "potential") {
        if (kind == "constant") return constant;
        if (kind == "linear") return linear;
        if (kind == "random") return random;
        if (kind == "file") return file;
    } else {
        if (kind == "gibbs_perturbed") return perturbed;
        if (kind == "uniform") return uniform;
        if (kind == "file") return file;
    }
    throw Error(ErrorKind::Config, "unknown " + section + " kind '" + kind + "'");
}

void check_kinded(const std::string& section, const Json& value) {
    if (!value.is_object() || !value.contains("kind") || !value["kind"].is_string())
        throw Error(ErrorKind::Config, section + " needs a string \"kind\"");
    const auto& allowed = allowed_kind_keys(section, value["kind"].get<std::string>());
    for (const auto& [k, v] : value.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw Error(ErrorKind::Config, "key '" + section + "." + k + "' not valid for this kind");
}

void merge(Json& base, const Json& overlay, const std::string& prefix) {
    if (!overlay.is_object()) throw Error(ErrorKind::Config, "config " + (prefix.empty() ? "root" : prefix) + " must be an object");
    for (const auto& [k, v] : overlay.items()) {
        const std::string path = prefix.empty() ? k : prefix + "." + k;
        if (!base.contains(k)) throw Error(ErrorKind::Config, "unknown config key '" + path + "'");
        if (prefix.empty() && kinded(k)) {
            check_kinded(k, v);
            base[k] = v;
        } else if (base[k].is_object()) {
            merge(base[k], v, path);
        } else {
            base[k] = v;
        }
    }
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw Error(ErrorKind::Config, "missing config key '" + where + "." + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::Config, "config key '" + where + "." + key + "' has the wrong type");
    }
}

std::size_t get_count(const Json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw Error(ErrorKind::Config, "config key '" + where + "." + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

}  // namespace

Json parse_value(const std::string& text) {
    Json v = Json::parse(text, nullptr, false);
    if (v.is_discarded()) return Json(text);
    return v;
}

void apply_override(Json& config, const std::string& key, const Json& value) {
    Json* node = &config;
    std::string path;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        path = path.empty() ? part : path + "." + part;
        if (part.empty() || !node->is_object() || !node->contains(part)) {
            const bool kind_key = node->is_object() && (path.rfind("potential.", 0) == 0 || path.rfind("initial.", 0) == 0);
            if (!kind_key || dot != std::string::npos) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
        }
        if (dot == std::string::npos) {
            // Switching kind starts the section afresh: the old kind's keys do not apply.
            if (part == "kind" && (path == "potential.kind" || path == "initial.kind") && (*node)[part] != value)
                *node = Json::object();
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
    for (const char* section : {"potential", "initial"}) check_kinded(section, config[section]);
}

Json resolve_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    Json config = default_config();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw Error(ErrorKind::Config, "cannot open config '" + *path + "'");
        Json user = Json::parse(in, nullptr, false, true);
        if (user.is_discarded()) throw Error(ErrorKind::Config, "config '" + *path + "' is not valid JSON");
        merge(config, user, "");
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "override must be key=value: '" + o + "'");
        apply_override(config, o.substr(0, eq), parse_value(o.substr(eq + 1)));
    }
    return config;
}

std::uint64_t Experiment::seed_for(const char* section) const {
    const auto& s = config.at(section);
    if (s.is_object() && s.contains("seed") && !s["seed"].is_null()) return get<std::uint64_t>(s, "seed", section);
    return seed;
}

namespace {

std::vector<double> build_potential(const Json& p, std::size_t n, std::uint64_t seed) {
    const std::string kind = get<std::string>(p, "kind", "potential");
    std::vector<double> phi(n);
    if (kind == "constant") {
        std::fill(phi.begin(), phi.end(), get<double>(p, "c", "potential"));
    } else if (kind == "linear") {
        const double slope = get<double>(p, "slope", "potential");
        for (std::size_t i = 0; i < n; ++i) phi[i] = slope * static_cast<double>(i);
    } else if (kind == "random") {
        const double lo = get<double>(p, "low", "potential");
        const double hi = get<double>(p, "high", "potential");
        if (!(lo <= hi)) throw Error(ErrorKind::Config, "potential.low must not exceed potential.high");
        Rng rng(seed, static_cast<std::uint64_t>(Stream::Potential) << 32);
        for (double& v : phi) v = rng.uniform(lo, hi);
    } else {
        phi = read_value_file(get<std::string>(p, "path", "potential"), "potential");
        if (phi.size() < n) throw Error(ErrorKind::Config, "potential file shorter than graph.N");
        phi.resize(n);
    }
    return phi;
}

}  // namespace

Experiment make_experiment(Json config) {
    const auto top_seed = get<std::uint64_t>(config, "seed", "");
    const auto& graph = config.at("graph");
    const auto family = WeightFamily::parse(get<std::string>(graph, "family", "graph"));
    const auto n = get_count(graph, "N", "graph");
    auto weights = make_weights(family, n);
    const auto& pot = config.at("potential");
    std::uint64_t pot_seed = top_seed;
    if (pot.contains("seed") && !pot["seed"].is_null()) pot_seed = get<std::uint64_t>(pot, "seed", "potential");
    auto phi = build_potential(pot, n, pot_seed);
    const double beta = get<double>(config, "beta", "");
    Experiment ex{.config = std::move(config), .seed = top_seed, .spec = GraphSpec(weights, std::move(phi), beta)};
    return ex;
}

Density perturbed(const Density& base, double epsilon, std::uint64_t seed, Stream stream, std::uint64_t index) {
    Rng rng(seed, (static_cast<std::uint64_t>(stream) << 32) | index);
    std::vector<double> raw(base.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double u = std::clamp(rng.uniform(-1.0, 1.0), -1.0, 1.0);
        raw[i] = base[i] * std::exp(epsilon * u);
    }
    return Density::normalized(base.weights_ptr(), std::move(raw));
}

Density load_endpoint(const Experiment& ex, const std::string& path) {
    const auto file = read_density_file(path);
    const auto m = ex.spec.weights().m();
    const auto fm = file.weights->m();
    if (!std::equal(m.begin(), m.end(), fm.begin(), fm.end()))
        throw Error(ErrorKind::Config, "weights in '" + path + "' differ from the configured graph");
    return Density(ex.spec.weights_ptr(), file.rho);
}

Density initial_density(const Experiment& ex) {
    const auto& init = ex.config.at("initial");
    const std::string kind = get<std::string>(init, "kind", "initial");
    if (kind == "uniform") return Density::uniform(ex.spec.weights_ptr());
    if (kind == "file") return load_endpoint(ex, get<std::string>(init, "path", "initial"));
    const double eps = get<double>(init, "epsilon", "initial");
    if (!(eps >= 0.0)) throw Error(ErrorKind::Config, "initial.epsilon must be nonnegative");
    const Density base = ex.spec.beta() > 0.0 ? gibbs(ex.spec) : Density::uniform(ex.spec.weights_ptr());
    return perturbed(base, eps, ex.seed_for("initial"), Stream::Initial);
}

IntegratorConfig integrator_config(const Experiment& ex) {
    const auto& j = ex.config.at("integrator");
    IntegratorConfig c;
    c.rel_tol = get<double>(j, "rel_tol", "integrator");
    c.abs_tol = get<double>(j, "abs_tol", "integrator");
    if (!j.at("max_step").is_null()) c.max_step = get<double>(j, "max_step", "integrator");
    c.t_end = get<double>(j, "t_end", "integrator");
    c.record_every = get<double>(j, "record_every", "integrator");
    c.positivity_floor = get<double>(j, "positivity_floor", "integrator");
    const auto sign = get<std::string>(ex.config, "phibar_sign", "");
    if (sign != "minus" && sign != "plus") throw Error(ErrorKind::Config, "phibar_sign must be 'minus' or 'plus'");
    c.phibar_sign = sign == "minus" ? PhibarSign::Minus : PhibarSign::Plus;
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return c;
}

GeodesicConfig geodesic_config(const Experiment& ex) {
    const auto& j = ex.config.at("geodesic");
    GeodesicConfig c;
    c.knots = get_count(j, "knots", "geodesic");
    c.max_iters = get_count(j, "max_iters", "geodesic");
    c.grad_tol = get<double>(j, "grad_tol", "geodesic");
    const auto init = get<std::string>(j, "init", "geodesic");
    if (init != "linear" && init != "previous") throw Error(ErrorKind::Config, "geodesic.init must be linear|previous");
    c.init = init == "linear" ? GeodesicInit::Linear : GeodesicInit::Previous;
    c.positivity_floor = get<double>(j, "positivity_floor", "geodesic");
    c.boundary_warning_level = get<double>(j, "boundary_warning_level", "geodesic");
    if (c.knots < 2) throw Error(ErrorKind::Config, "geodesic.knots must be at least 2");
    return c;
}

RhsKind equation(const Experiment& ex) { return parse_rhs_kind(get<std::string>(ex.config, "equation", "")); }

double constants_delta(const Experiment& ex) { return get<double>(ex.config.at("constants"), "delta", "constants"); }

TalagrandClass talagrand_class(const Experiment& ex) {
    const auto& j = ex.config.at("talagrand");
    TalagrandClass cls{get<double>(j, "nu_inf", "talagrand"), get<double>(j, "nu_sup", "talagrand")};
    try {
        cls.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return cls;
}

Json number(double x) {
    if (std::isfinite(x)) return Json(x);
    if (std::isnan(x)) return Json("nan");
    return Json(x > 0 ? "inf" : "-inf");
}

}  // namespace fpg::cli
