#include "cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "fpg/error.hpp"
#include "fpg/io.hpp"
#include "fpg/random.hpp"

namespace fpg::cli {

namespace fs = std::filesystem;

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = n;
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

struct Options {
    std::optional<std::string> config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::vector<std::string> sets;
    std::optional<std::string> a, b;
    std::optional<double> nu_inf, nu_sup;
    std::optional<std::size_t> samples;
    std::vector<std::string> grid;
};

bool usage_kind(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config:
        case ErrorKind::ParameterDomain:
        case ErrorKind::Misuse:
        case ErrorKind::UndefinedGibbs:
        case ErrorKind::OutOfRange:
        case ErrorKind::ClassViolation:
        case ErrorKind::Budget:
        case ErrorKind::DegenerateVertex:
        case ErrorKind::InsufficientTruncation:
            return true;
        default:
            return false;
    }
}

Json resolve(const Options& opt) {
    Json config = resolve_config(opt.config_path, opt.sets);
    if (opt.seed) config["seed"] = *opt.seed;
    if (opt.out) config["outputs"] = *opt.out;
    if (opt.a) config["metric"]["a"] = *opt.a;
    if (opt.b) config["metric"]["b"] = *opt.b;
    if (opt.nu_inf) config["talagrand"]["nu_inf"] = *opt.nu_inf;
    if (opt.nu_sup) config["talagrand"]["nu_sup"] = *opt.nu_sup;
    if (opt.samples) config["talagrand"]["samples"] = *opt.samples;
    return config;
}

Json report_header(const char* command, const Experiment& ex) {
    Json r;
    r["schema"] = 1;
    r["command"] = command;
    r["seed"] = ex.seed;
    r["config"] = ex.config;
    return r;
}

fs::path output_dir(const Experiment& ex) {
    const auto& v = ex.config.at("outputs");
    if (!v.is_string()) throw Error(ErrorKind::Config, "outputs must be a directory path");
    fs::path dir = v.get<std::string>();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Numerical, "write to '" + path.string() + "' failed");
}

Json constants_json(const ConstantsReport& c) {
    return Json{{"C0", number(c.C0)},
                {"N0", c.N0},
                {"M_N0", number(c.M_N0)},
                {"delta", number(c.delta)},
                {"log_C1", number(c.log_C1)},
                {"log_C2", number(c.log_C2)},
                {"log_decay_rate", number(c.log_decay_rate)},
                {"C1", number(c.C1)},
                {"C2", number(c.C2)},
                {"decay_rate_C", number(c.decay_rate_C)}};
}

Json geodesic_json(const GeodesicResult& g, std::size_t knots) {
    return Json{{"distance", number(g.distance)},
                {"tolerance", number(g.tolerance)},
                {"action", number(g.action)},
                {"knots", knots},
                {"iterations", g.iterations},
                {"final_grad_norm", number(g.final_grad_norm)},
                {"converged", g.converged},
                {"stall_warning", g.stall_warning},
                {"boundary_warning", g.boundary_warning},
                {"path_min", number(g.path_min)}};
}

Json monitor_json(const MonitorReport& m) {
    return Json{{"passed", m.passed()},
                {"F_monotone", m.F_monotone},
                {"max_F_increase", number(m.max_F_increase)},
                {"mass", m.mass},
                {"max_mass_error", number(m.max_mass_error)},
                {"L_checked", m.L_checked},
                {"L_monotone", m.L_monotone},
                {"max_L_increase", number(m.max_L_increase)},
                {"dissipation_checked", m.dissipation_checked},
                {"dissipation", m.dissipation},
                {"dissipation_sampled", m.dissipation_sampled},
                {"max_dissipation_rel_error", number(m.max_dissipation_rel_error)},
                {"barrier_checked", m.barrier_checked},
                {"barrier_entered", m.barrier_entered},
                {"barrier", m.barrier},
                {"barrier_margin_lower", number(m.barrier_margin_lower)},
                {"barrier_margin_upper", number(m.barrier_margin_upper)},
                {"decay_checked", m.decay_checked},
                {"L_decay", m.L_decay},
                {"L_decay_margin", number(m.L_decay_margin)},
                {"l2_bound", m.l2_bound},
                {"l2_margin", number(m.l2_margin)},
                {"linf_checked", m.linf_checked},
                {"linf_decay", m.linf_decay},
                {"linf_margin", number(m.linf_margin)}};
}

// ---------------------------------------------------------------- simulate

struct Simulation {
    RhsKind kind = RhsKind::Fpe;
    Density rho0;
    TrajectoryRecord traj;
    std::optional<ConstantsReport> constants;
    std::string constants_error;
    MonitorReport monitor;
    double fitted_rate = std::nan("");
    std::string fit_error;
};

Simulation simulate(const Experiment& ex) {
    const RhsKind kind = equation(ex);
    const IntegratorConfig cfg = integrator_config(ex);
    check_rhs_kind(kind, ex.spec);
    Density rho0 = initial_density(ex);
    TrajectoryRecord traj = integrate(kind, rho0, ex.spec, cfg);

    std::optional<ConstantsReport> constants;
    std::string constants_error;
    if (ex.spec.beta() > 0.0) {
        try {
            constants = invariant_constants(rho0, ex.spec, constants_delta(ex));
        } catch (const Error& e) {
            constants_error = std::string(e.what());
        }
    }
    MonitorReport mon = monitor(traj, constants ? &*constants : nullptr);
    double rate = std::nan("");
    std::string fit_error;
    if (ex.spec.beta() > 0.0) {
        try {
            rate = decay_rate_fit(traj);
        } catch (const Error& e) {
            fit_error = std::string(e.what());
        }
    }
    return Simulation{kind,          std::move(rho0), std::move(traj), constants, std::move(constants_error),
                      std::move(mon), rate,           std::move(fit_error)};
}

Json simulation_json(const Simulation& s) {
    Json j;
    j["equation"] = std::string(to_string(s.kind));
    j["records"] = s.traj.times.size();
    j["steps_accepted"] = s.traj.steps_accepted;
    j["steps_rejected"] = s.traj.steps_rejected;
    j["positivity_rejections"] = s.traj.positivity_rejections;
    j["near_tie_pairs"] = s.traj.near_ties;
    j["constants"] = s.constants ? constants_json(*s.constants) : Json(nullptr);
    if (!s.constants_error.empty()) j["constants_error"] = s.constants_error;
    j["monitor"] = monitor_json(s.monitor);
    Json decay;
    decay["fitted_rate"] = number(s.fitted_rate);
    decay["decay_rate_C"] = s.constants ? number(s.constants->decay_rate_C) : Json(nullptr);
    decay["log_decay_rate"] = s.constants ? number(s.constants->log_decay_rate) : Json(nullptr);
    if (!s.fit_error.empty()) decay["error"] = s.fit_error;
    j["decay"] = decay;
    j["passed"] = s.monitor.passed();
    return j;
}

int cmd_simulate(const Options& opt) {
    const Experiment ex = make_experiment(resolve(opt));
    const auto dir = output_dir(ex);
    const auto& snap = ex.config.at("integrator").at("snapshot_every");
    if (!snap.is_number_integer() || snap.get<long long>() < 0)
        throw Error(ErrorKind::Config, "integrator.snapshot_every must be a nonnegative integer");
    const auto snapshot_every = snap.get<std::size_t>();

    const Simulation s = simulate(ex);
    write_trajectory_csv(dir / "trajectory.csv", s.traj);
    if (snapshot_every > 0)
        for (std::size_t k = 0; k < s.traj.states.size(); k += snapshot_every)
            write_state_csv(dir / ("state_" + std::to_string(k) + ".csv"), s.traj.states[k]);
    Json r = report_header("simulate", ex);
    r.update(simulation_json(s));
    write_json(dir / "simulate.json", r);
    std::cout << "simulate: " << s.traj.times.size() << " records, monitors "
              << (s.monitor.passed() ? "passed" : "FAILED") << '\n';
    return s.monitor.passed() ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------------- gibbs

int cmd_gibbs(const Options& opt) {
    const Experiment ex = make_experiment(resolve(opt));
    if (!(ex.spec.beta() > 0.0)) throw Error(ErrorKind::ParameterDomain, "gibbs needs beta > 0");
    const auto dir = output_dir(ex);
    const Density star = gibbs(ex.spec);
    write_density_file(dir / "gibbs.txt", star, ex.spec);

    Json r = report_header("gibbs", ex);
    r["N"] = ex.spec.size();
    r["beta"] = number(ex.spec.beta());
    r["weights"] = ex.spec.weights().family().description();
    r["raw_tail_mass"] = number(ex.spec.weights().raw_tail_mass());
    r["tail_is_upper_bound"] = ex.spec.weights().tail_is_upper_bound();
    r["inf_rho_star"] = number(star.inf());
    r["sup_rho_star"] = number(star.sup());
    r["free_energy"] = number(free_energy(star, ex.spec));
    try {
        r["constants"] = constants_json(invariant_constants(initial_density(ex), ex.spec, constants_delta(ex)));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        r["constants"] = nullptr;
        r["constants_error"] = std::string(e.what());
    }
    write_json(dir / "gibbs.json", r);
    std::cout << "gibbs: wrote " << (dir / "gibbs.txt").string() << '\n';
    return kExitOk;
}

// ------------------------------------------------------------------ metric

std::optional<std::string> endpoint_path(const Experiment& ex, const char* key) {
    const auto& v = ex.config.at("metric").at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw Error(ErrorKind::Config, std::string("metric.") + key + " must be a path or null");
    return v.get<std::string>();
}

Density reference_density(const Experiment& ex) {
    return ex.spec.beta() > 0.0 ? gibbs(ex.spec) : Density::uniform(ex.spec.weights_ptr());
}

int cmd_metric(const Options& opt) {
    const Experiment ex = make_experiment(resolve(opt));
    const auto dir = output_dir(ex);
    const auto pa = endpoint_path(ex, "a");
    const auto pb = endpoint_path(ex, "b");
    const Density a = pa ? load_endpoint(ex, *pa) : initial_density(ex);
    const Density b = pb ? load_endpoint(ex, *pb) : reference_density(ex);
    const GeodesicConfig cfg = geodesic_config(ex);
    const GeodesicResult g = geodesic_distance(a, b, ex.spec.phi(), cfg);
    write_path_csv(dir / "path.csv", g.path);

    Json r = report_header("metric", ex);
    r["endpoint_a"] = pa ? *pa : std::string("initial");
    r["endpoint_b"] = pb ? *pb : std::string(ex.spec.beta() > 0.0 ? "gibbs" : "uniform");
    r.update(geodesic_json(g, cfg.knots));
    r["action_history"] = Json::array();
    for (double v : g.action_history) r["action_history"].push_back(number(v));
    write_json(dir / "metric.json", r);
    std::cout << "metric: distance " << format_double(g.distance) << " (tolerance " << format_double(g.tolerance)
              << ")" << (g.converged ? "" : " [not converged]") << (g.stall_warning ? " [stall]" : "")
              << (g.boundary_warning ? " [near boundary]" : "") << '\n';
    return kExitOk;
}

// --------------------------------------------------------------- talagrand

// Class member with the shape of a uniform draw in [nu_inf, nu_sup]: the draw
// is centred on its m-mean and shrunk toward 1 until it fits the class.
Density sample_class_member(const WeightsPtr& weights, const TalagrandClass& cls, std::uint64_t seed,
                            std::uint64_t index) {
    Rng rng(seed, (static_cast<std::uint64_t>(Stream::Talagrand) << 32) | index);
    const auto m = weights->m();
    std::vector<double> x(m.size());
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(cls.nu_inf, cls.nu_sup);
        c += m[i] * x[i];
    }
    double s = 1.0;
    for (double& v : x) {
        v -= c;
        if (v > 0.0) s = std::min(s, (cls.nu_sup - 1.0) / v);
        if (v < 0.0) s = std::min(s, (cls.nu_inf - 1.0) / v);
    }
    s *= 1.0 - 1e-12;
    for (double& v : x) v = 1.0 + s * v;
    return Density::normalized(weights, std::move(x));
}

int cmd_talagrand(const Options& opt) {
    const Experiment ex = make_experiment(resolve(opt));
    const TalagrandClass cls = talagrand_class(ex);
    if (!(cls.nu_inf <= 1.0 && 1.0 <= cls.nu_sup))
        throw Error(ErrorKind::ClassViolation, "the class must contain the constant density 1");
    const auto& tj = ex.config.at("talagrand");
    const auto& samples_v = tj.at("samples");
    if (!samples_v.is_number_integer() || samples_v.get<long long>() < 1)
        throw Error(ErrorKind::Config, "talagrand.samples must be a positive integer");
    const auto samples = samples_v.get<std::size_t>();
    const auto mu_kind = tj.at("mu").is_string() ? tj.at("mu").get<std::string>() : "";
    if (mu_kind != "uniform" && mu_kind != "gibbs") throw Error(ErrorKind::Config, "talagrand.mu must be uniform|gibbs");
    if (mu_kind == "gibbs" && !(ex.spec.beta() > 0.0))
        throw Error(ErrorKind::ParameterDomain, "talagrand.mu = gibbs needs beta > 0");
    const Density mu = mu_kind == "gibbs" ? gibbs(ex.spec) : Density::uniform(ex.spec.weights_ptr());
    const GeodesicConfig geo = geodesic_config(ex);
    const double delta = constants_delta(ex);
    const auto dir = output_dir(ex);
    const TalagrandConstants k = talagrand_kappa(mu, cls, delta);
    const std::uint64_t seed = ex.seed_for("talagrand");

    std::vector<Json> rows(samples);
    std::vector<char> ok(samples, 0);
    parallel_for(samples, opt.workers, [&](std::size_t s) {
        const Density nu = sample_class_member(ex.spec.weights_ptr(), cls, seed, s);
        Json row{{"sample", s}, {"nu_inf", number(nu.inf())}, {"nu_sup", number(nu.sup())}};
        try {
            const TalagrandReport rep = verify_talagrand(mu, nu, cls, geo, delta);
            row["entropy"] = number(rep.entropy);
            row["distance"] = number(rep.distance);
            row["distance2"] = number(rep.distance2);
            row["rhs"] = number(rep.rhs);
            row["ratio"] = number(rep.ratio);
            row["passed"] = rep.passed;
            row["geodesic"] = geodesic_json(rep.geodesic, geo.knots);
            ok[s] = rep.passed;
        } catch (const Error& e) {
            row["passed"] = false;
            row["error"] = std::string(e.what());
        }
        rows[s] = std::move(row);
    });

    const bool all = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    double max_ratio = 0.0;
    for (const auto& row : rows)
        if (row.contains("ratio") && row["ratio"].is_number()) max_ratio = std::max(max_ratio, row["ratio"].get<double>());
    Json r = report_header("talagrand", ex);
    r["mu"] = mu_kind;
    r["class"] = Json{{"nu_inf", number(cls.nu_inf)}, {"nu_sup", number(cls.nu_sup)}};
    r["constants"] = Json{{"C0", number(k.C0)},         {"N0", k.N0},
                          {"M_N0", number(k.M_N0)},     {"phi_sup", number(k.phi_sup)},
                          {"log_C3", number(k.log_C3)}, {"log_C4", number(k.log_C4)},
                          {"C5", number(k.C5)},         {"log_C6", number(k.log_C6)},
                          {"log_T", number(k.log_T)},   {"log_kappa", number(k.log_kappa)},
                          {"kappa", number(k.kappa)}};
    r["samples"] = rows;
    r["max_observed_ratio"] = number(max_ratio);
    r["passed"] = all;
    write_json(dir / "talagrand.json", r);
    std::cout << "talagrand: " << std::count(ok.begin(), ok.end(), 1) << "/" << samples << " passed, log kappa "
              << format_double(k.log_kappa) << ", max d^2/H " << format_double(max_ratio) << '\n';
    return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------- w1

int cmd_w1(const Options& opt) {
    const Experiment ex = make_experiment(resolve(opt));
    if (ex.spec.size() > kW1MaxVertices)
        throw Error(ErrorKind::Budget, "W1 linear program limited to N <= " + std::to_string(kW1MaxVertices));
    const auto dir = output_dir(ex);
    const GeodesicConfig geo = geodesic_config(ex);
    const auto pa = endpoint_path(ex, "a");
    const auto pb = endpoint_path(ex, "b");
    const auto& wj = ex.config.at("w1");
    if (!wj.at("pairs").is_number_integer() || wj.at("pairs").get<long long>() < 1)
        throw Error(ErrorKind::Config, "w1.pairs must be a positive integer");
    const double eps = wj.at("epsilon").is_number() ? wj.at("epsilon").get<double>() : -1.0;
    if (!(eps >= 0.0)) throw Error(ErrorKind::Config, "w1.epsilon must be a nonnegative number");

    // Either the one pair given as files, or random interior pairs.
    std::vector<std::pair<Density, Density>> pairs;
    if (pa || pb) {
        if (!(pa && pb)) throw Error(ErrorKind::Config, "w1 needs both metric.a and metric.b (or neither)");
        pairs.emplace_back(load_endpoint(ex, *pa), load_endpoint(ex, *pb));
    } else {
        const auto n = wj.at("pairs").get<std::size_t>();
        const Density base = Density::uniform(ex.spec.weights_ptr());
        const std::uint64_t seed = ex.seed_for("w1");
        for (std::size_t k = 0; k < n; ++k)
            pairs.emplace_back(perturbed(base, eps, seed, Stream::W1, 2 * k),
                               perturbed(base, eps, seed, Stream::W1, 2 * k + 1));
    }

    std::vector<Json> rows(pairs.size());
    std::vector<char> ok(pairs.size(), 0);
    parallel_for(pairs.size(), opt.workers, [&](std::size_t k) {
        Json row{{"pair", k}};
        try {
            const W1Report rep = verify_w1_bound(pairs[k].first, pairs[k].second, ex.spec.phi(), geo);
            row["w1"] = number(rep.w1);
            row["distance"] = number(rep.distance);
            row["bound"] = number(rep.bound);
            row["passed"] = rep.passed;
            row["refinements"] = rep.refinements;
            row["lp"] = Json{{"mode", rep.lp.mode == LpMode::Explicit ? "explicit" : "row_generated"},
                             {"rounds", rep.lp.rounds},
                             {"constraints", rep.lp.constraints},
                             {"pivots", rep.lp.pivots}};
            row["geodesic"] = geodesic_json(rep.geodesic, rep.knots);
            ok[k] = rep.passed;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Budget) throw;
            row["passed"] = false;
            row["error"] = std::string(e.what());
        }
        rows[k] = std::move(row);
    });
    const bool all = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    Json r = report_header("w1", ex);
    r["ground_metric"] = "unit distance between distinct vertices; test functions with |psi| <= 1 and Lip <= 1";
    r["source"] = pa ? "files" : "random";
    r["pairs"] = rows;
    r["passed"] = all;
    write_json(dir / "w1.json", r);
    std::cout << "w1: " << std::count(ok.begin(), ok.end(), 1) << "/" << pairs.size() << " pairs satisfy the bound\n";
    return all ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------------- sweep

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

std::vector<GridAxis> parse_grid(const std::vector<std::string>& specs) {
    if (specs.empty()) throw Error(ErrorKind::Config, "sweep needs at least one --grid key=v1,v2,...");
    std::vector<GridAxis> axes;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "grid must be key=v1,v2,...: '" + s + "'");
        GridAxis axis{s.substr(0, eq), {}};
        std::stringstream ss(s.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ','))
            if (!v.empty()) axis.values.push_back(v);
        if (axis.values.empty()) throw Error(ErrorKind::Config, "grid axis '" + axis.key + "' is empty");
        axes.push_back(std::move(axis));
    }
    return axes;
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c == '\n' ? ' ' : c;
    }
    return q + "\"";
}

int cmd_sweep(const Options& opt) {
    const auto axes = parse_grid(opt.grid);
    const Json base = resolve(opt);
    const Experiment base_ex = make_experiment(base);
    const auto dir = output_dir(base_ex);

    // First axis varies slowest.
    std::size_t count = 1;
    for (const auto& a : axes) count *= a.values.size();
    std::vector<std::vector<std::size_t>> points(count);
    std::vector<Experiment> experiments;
    experiments.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t rest = p;
        points[p].resize(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            points[p][a] = rest % axes[a].values.size();
            rest /= axes[a].values.size();
        }
        Json config = base;
        for (std::size_t a = 0; a < axes.size(); ++a)
            apply_override(config, axes[a].key, parse_value(axes[a].values[points[p][a]]));
        experiments.push_back(make_experiment(std::move(config)));
    }

    struct Row {
        std::string status = "error";
        std::optional<Simulation> sim;
        std::string error;
    };
    std::vector<Row> rows(count);
    parallel_for(count, opt.workers, [&](std::size_t p) {
        Row row;
        try {
            row.sim = simulate(experiments[p]);
            row.status = row.sim->monitor.passed() ? "ok" : "monitor_failed";
        } catch (const Error& e) {
            row.error = std::string(e.what());
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows[p] = std::move(row);
    });

    const fs::path csv_path = dir / "sweep.csv";
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + csv_path.string() + "'");
    out << "index";
    for (const auto& a : axes) out << ',' << csv_text(a.key);
    out << ",status,fitted_rate,decay_rate_C,log_decay_rate,monitors_passed,max_F_increase,max_L_increase,"
           "max_mass_error,max_dissipation_rel_error,barrier_margin_lower,barrier_margin_upper,L_decay_margin,"
           "l2_margin,linf_margin,error\n";
    std::size_t failures = 0;
    Json summary = Json::array();
    for (std::size_t p = 0; p < count; ++p) {
        const Row& row = rows[p];
        out << p;
        for (std::size_t a = 0; a < axes.size(); ++a) out << ',' << csv_text(axes[a].values[points[p][a]]);
        out << ',' << row.status;
        const double nan = std::nan("");
        auto f = [&](double v) { out << ',' << format_double(v); };
        if (row.sim) {
            const auto& s = *row.sim;
            const auto& m = s.monitor;
            f(s.fitted_rate);
            f(s.constants ? s.constants->decay_rate_C : nan);
            f(s.constants ? s.constants->log_decay_rate : nan);
            out << ',' << (m.passed() ? 1 : 0);
            for (double v : {m.max_F_increase, m.max_L_increase, m.max_mass_error, m.max_dissipation_rel_error,
                             m.barrier_margin_lower, m.barrier_margin_upper, m.L_decay_margin, m.l2_margin,
                             m.linf_margin})
                f(v);
            out << ',' << csv_text(s.constants_error) << '\n';
        } else {
            for (int i = 0; i < 3; ++i) f(nan);
            out << ",0";
            for (int i = 0; i < 9; ++i) f(nan);
            out << ',' << csv_text(row.error) << '\n';
        }
        if (row.status != "ok") ++failures;
        Json point{{"index", p}, {"status", row.status}};
        for (std::size_t a = 0; a < axes.size(); ++a) point[axes[a].key] = parse_value(axes[a].values[points[p][a]]);
        if (row.sim) point.update(simulation_json(*row.sim));
        if (!row.error.empty()) point["error"] = row.error;
        summary.push_back(std::move(point));
    }
    out.close();
    if (!out) throw Error(ErrorKind::Numerical, "write to '" + csv_path.string() + "' failed");

    Json r = report_header("sweep", base_ex);
    Json grid = Json::object();
    for (const auto& a : axes) grid[a.key] = a.values;
    r["grid"] = grid;
    r["points"] = summary;
    r["failures"] = failures;
    write_json(dir / "sweep.json", r);
    std::cout << "sweep: " << count - failures << "/" << count << " points passed\n";
    return failures == count ? kExitFailure : kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Fokker-Planck flows on truncated sender networks"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config_path, "JSON experiment config");
    app.add_option("--out", opt.out, "output directory (overrides outputs)");
    app.add_option("--seed", opt.seed, "top-level seed (overrides seed)");
    app.add_option("--workers", opt.workers, "worker threads for sweeps and batched checks")->check(CLI::PositiveNumber);
    app.add_option("--set", opt.sets, "dotted config override key=value (repeatable)");

    auto* gibbs_cmd = app.add_subcommand("gibbs", "write the Gibbs density and invariant-set constants");
    auto* simulate_cmd = app.add_subcommand("simulate", "integrate the flow and check the monitors");
    auto* metric_cmd = app.add_subcommand("metric", "geodesic distance between two densities");
    metric_cmd->add_option("--a", opt.a, "density file for the first endpoint");
    metric_cmd->add_option("--b", opt.b, "density file for the second endpoint");
    auto* talagrand_cmd = app.add_subcommand("talagrand", "check d^2 <= kappa H on sampled class members");
    talagrand_cmd->add_option("--nu-inf", opt.nu_inf, "class lower bound");
    talagrand_cmd->add_option("--nu-sup", opt.nu_sup, "class upper bound");
    talagrand_cmd->add_option("--samples", opt.samples, "number of class members");
    auto* w1_cmd = app.add_subcommand("w1", "compare bounded-Lipschitz W1 against sqrt(2) d");
    w1_cmd->add_option("--a", opt.a, "density file for the first measure");
    w1_cmd->add_option("--b", opt.b, "density file for the second measure");
    auto* sweep_cmd = app.add_subcommand("sweep", "run simulate over a parameter grid");
    sweep_cmd->add_option("--grid", opt.grid, "key=v1,v2,... (repeatable; first key varies slowest)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gibbs_cmd->parsed()) return cmd_gibbs(opt);
        if (simulate_cmd->parsed()) return cmd_simulate(opt);
        if (metric_cmd->parsed()) return cmd_metric(opt);
        if (talagrand_cmd->parsed()) return cmd_talagrand(opt);
        if (w1_cmd->parsed()) return cmd_w1(opt);
        if (sweep_cmd->parsed()) return cmd_sweep(opt);
    } catch (const IntegrationError& e) {
        std::cerr << "error at t=" << format_double(e.time()) << ": " << e.what() << '\n';
        return kExitFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage_kind(e.kind()) ? kExitUsage : kExitFailure;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace fpg::cli
