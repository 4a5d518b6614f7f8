#include "fpg/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fpg/error.hpp"
#include "fpg/metric.hpp"
#include "fpg/numeric.hpp"

namespace fpg {

std::string_view to_string(RhsKind kind) {
    switch (kind) {
        case RhsKind::Fpe: return "fpe";
        case RhsKind::Phibar: return "phibar";
        case RhsKind::BetaZero: return "beta_zero";
        case RhsKind::Master: return "master";
    }
    return "unknown";
}

RhsKind parse_rhs_kind(std::string_view text) {
    if (text == "fpe") return RhsKind::Fpe;
    if (text == "phibar") return RhsKind::Phibar;
    if (text == "beta_zero") return RhsKind::BetaZero;
    if (text == "master") return RhsKind::Master;
    throw Error(ErrorKind::Config, "unknown equation kind '" + std::string(text) + "'");
}

void IntegratorConfig::validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, ErrorKind::ParameterDomain, "integrator tolerances must be positive");
    require(t_end > 0.0 && std::isfinite(t_end), ErrorKind::ParameterDomain, "t_end must be positive");
    require(record_every > 0.0, ErrorKind::ParameterDomain, "record_every must be positive");
    require(max_step > 0.0, ErrorKind::ParameterDomain, "max_step must be positive");
    require(positivity_floor >= 0.0, ErrorKind::ParameterDomain, "positivity floor must be nonnegative");
}

void check_rhs_kind(RhsKind kind, const GraphSpec& spec) {
    switch (kind) {
        case RhsKind::Fpe: return;
        case RhsKind::Phibar:
            require(spec.beta() > 0.0, ErrorKind::ParameterDomain, "the phibar equation needs beta > 0");
            return;
        case RhsKind::BetaZero:
            require(spec.beta() == 0.0, ErrorKind::Misuse, "beta_zero equation called with beta != 0");
            return;
        case RhsKind::Master: {
            const auto phi = spec.phi();
            require(std::all_of(phi.begin(), phi.end(), [&](double p) { return p == phi[0]; }), ErrorKind::Misuse,
                    "master equation needs a constant potential");
            require(spec.beta() > 0.0, ErrorKind::ParameterDomain, "master equation needs beta > 0");
            return;
        }
    }
}

namespace {

bool needs_interior(RhsKind kind, const GraphSpec& spec) {
    return kind != RhsKind::BetaZero && spec.beta() > 0.0;
}

// σᵢ = Σⱼ mⱼ (μⱼ - μᵢ) τᵢⱼ with μ = Φ + β log ρ, τ the upwind density by `order`.
// Ties in `order` take the log-mean branch β(ρⱼ - ρᵢ) when `tie_branch`, else 0.
void upwind_rhs(std::span<const double> m, std::span<const double> phi, double beta, std::span<const double> rho,
                std::span<const double> log_rho, std::span<const double> order, bool tie_branch,
                std::span<double> out) {
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (order[j] == order[i]) {
                if (tie_branch) s += m[j] * beta * (rho[j] - rho[i]);
                continue;
            }
            double dmu = phi[j] - phi[i];
            if (beta != 0.0) dmu += beta * (log_rho[j] - log_rho[i]);
            s += m[j] * dmu * (order[j] > order[i] ? rho[j] : rho[i]);
        }
        out[i] = s;
    }
}

}  // namespace

std::vector<double> ordering_potential(RhsKind kind, std::span<const double> rho, const GraphSpec& spec,
                                       PhibarSign sign) {
    std::vector<double> order(spec.phi().begin(), spec.phi().end());
    if (kind == RhsKind::Phibar) {
        const double b = sign == PhibarSign::Minus ? -spec.beta() : spec.beta();
        for (std::size_t i = 0; i < order.size(); ++i) order[i] += b * std::log(rho[i]);
    }
    return order;
}

bool evaluate_rhs(RhsKind kind, std::span<const double> rho, const GraphSpec& spec, PhibarSign sign,
                  std::span<double> out) {
    const auto m = spec.weights().m();
    const auto phi = spec.phi();
    const double beta = spec.beta();
    const std::size_t n = m.size();

    if (kind == RhsKind::Master) {
        const double s = weighted_sum(m, rho);
        const double total = compensated_sum(m);
        for (std::size_t i = 0; i < n; ++i) out[i] = beta * (s - rho[i] * total);
        return true;
    }

    const bool logs = kind != RhsKind::BetaZero && beta > 0.0;
    std::vector<double> log_rho;
    if (logs) {
        log_rho.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(rho[i] > 0.0)) return false;
            log_rho[i] = std::log(rho[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (rho[i] < 0.0) return false;
    }
    const double b = kind == RhsKind::BetaZero ? 0.0 : beta;
    if (kind == RhsKind::Phibar) {
        const double sb = sign == PhibarSign::Minus ? -beta : beta;
        std::vector<double> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = phi[i] + sb * log_rho[i];
        upwind_rhs(m, phi, b, rho, log_rho, order, false, out);
    } else {
        upwind_rhs(m, phi, b, rho, log_rho, phi, true, out);
    }
    return true;
}

namespace {

TangentVector checked_rhs(RhsKind kind, const Density& rho, const GraphSpec& spec, PhibarSign sign) {
    check_rhs_kind(kind, spec);
    require(rho.size() == spec.size(), ErrorKind::ParameterDomain, "density length does not match graph");
    if (needs_interior(kind, spec)) require(rho.interior(), ErrorKind::Domain, "equation needs an interior density");
    std::vector<double> out(rho.size());
    if (!evaluate_rhs(kind, rho.values(), spec, sign, out))
        throw Error(ErrorKind::Domain, "density outside the domain of the equation");
    return TangentVector(spec.weights_ptr(), std::move(out));
}

}  // namespace

TangentVector fpe_rhs(const Density& rho, const GraphSpec& spec) {
    return checked_rhs(RhsKind::Fpe, rho, spec, PhibarSign::Minus);
}

TangentVector fpe_rhs_phibar(const Density& rho, const GraphSpec& spec, PhibarSign sign) {
    return checked_rhs(RhsKind::Phibar, rho, spec, sign);
}

TangentVector beta_zero_rhs(const Density& rho, const GraphSpec& spec) {
    return checked_rhs(RhsKind::BetaZero, rho, spec, PhibarSign::Minus);
}

TangentVector master_rhs(const Density& rho, const GraphSpec& spec) {
    return checked_rhs(RhsKind::Master, rho, spec, PhibarSign::Minus);
}

std::size_t near_tie_pairs(std::span<const double> phi) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < phi.size(); ++i)
        for (std::size_t j = i + 1; j < phi.size(); ++j) {
            const double d = std::abs(phi[i] - phi[j]);
            if (d > 0.0 && d < 1e-12) ++count;
        }
    return count;
}

Density TrajectoryRecord::state(std::size_t k) const { return Density::normalized(spec.weights_ptr(), states.at(k)); }

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)

namespace {

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

struct Stepper {
    RhsKind kind;
    const GraphSpec& spec;
    PhibarSign sign;
    std::size_t n;
    std::array<std::vector<double>, 7> k;
    std::vector<double> tmp;

    Stepper(RhsKind kind_, const GraphSpec& spec_, PhibarSign sign_)
        : kind(kind_), spec(spec_), sign(sign_), n(spec_.size()), tmp(n) {
        for (auto& v : k) v.assign(n, 0.0);
    }

    bool f(std::span<const double> y, std::vector<double>& out) { return evaluate_rhs(kind, y, spec, sign, out); }

    // Assumes k[0] = f(y). Fills y5 and the error estimate; false if a stage left the domain.
    bool step(std::span<const double> y, double h, std::vector<double>& y5, std::vector<double>& err) {
        auto stage = [&](auto&& combine, std::vector<double>& out) {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * combine(i);
            return f(tmp, out);
        };
        if (!stage([&](std::size_t i) { return a21 * k[0][i]; }, k[1])) return false;
        if (!stage([&](std::size_t i) { return a31 * k[0][i] + a32 * k[1][i]; }, k[2])) return false;
        if (!stage([&](std::size_t i) { return a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]; }, k[3]))
            return false;
        if (!stage([&](std::size_t i) { return a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]; },
                   k[4]))
            return false;
        if (!stage(
                [&](std::size_t i) {
                    return a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i];
                },
                k[5]))
            return false;
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
        if (!f(y5, k[6])) return false;
        for (std::size_t i = 0; i < n; ++i)
            err[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
        return true;
    }
};

double free_energy_raw(const GraphSpec& spec, std::span<const double> rho) {
    const auto m = spec.weights().m();
    const auto phi = spec.phi();
    CompensatedSum potential, entropy;
    for (std::size_t i = 0; i < m.size(); ++i) {
        potential.add(m[i] * phi[i] * rho[i]);
        if (rho[i] > 0.0) entropy.add(m[i] * rho[i] * std::log(rho[i]));
    }
    return spec.beta() == 0.0 ? potential.value() : potential.value() + spec.beta() * entropy.value();
}

double relative_energy_raw(std::span<const double> m, std::span<const double> rho, std::span<const double> star) {
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double d = rho[i] - star[i];
        s.add(m[i] * d * d / star[i]);
    }
    return s.value();
}

}  // namespace

TrajectoryRecord integrate(RhsKind kind, const Density& rho0, const GraphSpec& spec,
                           const IntegratorConfig& config) {
    config.validate();
    check_rhs_kind(kind, spec);
    require(rho0.size() == spec.size(), ErrorKind::ParameterDomain, "density length does not match graph");
    const bool interior = needs_interior(kind, spec);
    if (interior) require(rho0.interior(), ErrorKind::Domain, "initial density must be interior");
    const double floor = interior ? config.positivity_floor : 0.0;
    const auto m = spec.weights().m();
    const std::size_t n = spec.size();

    TrajectoryRecord rec{.kind = kind, .spec = spec, .config = config};
    if (spec.beta() > 0.0) {
        const Density star = gibbs(spec);
        rec.reference.assign(star.values().begin(), star.values().end());
    }
    rec.near_ties = near_tie_pairs(spec.phi());

    auto record = [&](double t, const std::vector<double>& y) {
        const double mass = weighted_sum(m, y);
        if (!(std::abs(mass - 1.0) <= 1e-10))
            throw IntegrationError(ErrorKind::IntegrationInvariant,
                                   "mass drifted to " + std::to_string(mass) + " at t=" + std::to_string(t), t, y);
        rec.times.push_back(t);
        rec.states.push_back(y);
        rec.mass_values.push_back(mass);
        rec.F_values.push_back(free_energy_raw(spec, y));
        rec.L_values.push_back(rec.reference.empty() ? std::nan("") : relative_energy_raw(m, y, rec.reference));
        rec.inf_values.push_back(min_of(y));
        rec.sup_values.push_back(max_of(y));
    };

    const auto n_records = static_cast<std::size_t>(std::ceil(config.t_end / config.record_every - 1e-9));
    auto record_time = [&](std::size_t r) {
        return r >= n_records ? config.t_end : static_cast<double>(r) * config.record_every;
    };

    std::vector<double> y(rho0.values().begin(), rho0.values().end());
    record(0.0, y);
    Stepper st(kind, spec, config.phibar_sign);
    if (!st.f(y, st.k[0])) throw Error(ErrorKind::Domain, "initial density outside the domain of the equation");

    std::vector<double> y5(n), err(n);
    double t = 0.0;
    double h = std::min({config.max_step, config.record_every, 1e-2});
    bool last_rejected = false;
    for (std::size_t r = 1; r <= n_records;) {
        const double target = record_time(r);
        double hs = std::min(h, config.max_step);
        bool lands = false;
        if (t + hs >= target - 1e-12 * std::max(1.0, target)) {
            hs = target - t;
            lands = true;
        }
        if (!(hs > 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t)))
            throw IntegrationError(ErrorKind::Stiffness, "step size underflow at t=" + std::to_string(t), t, y);

        const bool ok = st.step(y, hs, y5, err);
        if (!ok || min_of(y5) < floor) {
            ++rec.steps_rejected;
            ++rec.positivity_rejections;
            h = 0.5 * hs;
            last_rejected = true;
            continue;
        }
        double en = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = config.abs_tol + config.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            en = std::max(en, std::abs(err[i]) / scale);
        }
        const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        if (en > 1.0) {
            ++rec.steps_rejected;
            h = hs * factor;
            last_rejected = true;
            continue;
        }
        ++rec.steps_accepted;
        y.swap(y5);
        st.k[0].swap(st.k[6]);
        const double next = hs * (last_rejected ? std::min(1.0, factor) : factor);
        last_rejected = false;
        if (lands) {
            t = target;
            record(t, y);
            ++r;
            h = std::max(next, h);
        } else {
            t += hs;
            h = next;
        }
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Monitors

namespace {

bool gradient_flow_kind(RhsKind kind) { return kind == RhsKind::Fpe || kind == RhsKind::Master; }

// Fixed-step fifth-order propagation, used for the local finite difference of F.
bool propagate(Stepper& st, std::vector<double> y, double dt, int substeps, std::vector<double>& out) {
    std::vector<double> y5(y.size()), err(y.size());
    const double h = dt / substeps;
    for (int s = 0; s < substeps; ++s) {
        if (!st.f(y, st.k[0]) || !st.step(y, h, y5, err)) return false;
        y.swap(y5);
    }
    out = std::move(y);
    return true;
}

}  // namespace

MonitorReport monitor(const TrajectoryRecord& traj, const ConstantsReport* constants, const MonitorOptions& options) {
    require(!traj.times.empty(), ErrorKind::ParameterDomain, "empty trajectory");
    MonitorReport rep;
    const std::size_t n_t = traj.times.size();
    const auto& spec = traj.spec;
    const auto m = spec.weights().m();
    const bool has_L = !traj.reference.empty();

    for (double mass : traj.mass_values) rep.max_mass_error = std::max(rep.max_mass_error, std::abs(mass - 1.0));
    rep.mass = rep.max_mass_error <= 1e-10;

    for (std::size_t k = 0; k + 1 < n_t; ++k)
        rep.max_F_increase = std::max(rep.max_F_increase, traj.F_values[k + 1] - traj.F_values[k]);
    rep.F_monotone = !(rep.max_F_increase > 1e-10);

    if (has_L && gradient_flow_kind(traj.kind)) {
        rep.L_checked = true;
        for (std::size_t k = 0; k + 1 < n_t; ++k)
            rep.max_L_increase = std::max(rep.max_L_increase, traj.L_values[k + 1] - traj.L_values[k]);
        rep.L_monotone = !(rep.max_L_increase > 1e-12);
    }

    if (constants != nullptr && has_L && gradient_flow_kind(traj.kind)) {
        rep.barrier_checked = true;
        const double c1 = std::exp(constants->log_C1);
        const double c2 = std::exp(constants->log_C2);
        for (std::size_t k = 0; k < n_t; ++k) {
            if (!rep.barrier_entered && traj.inf_values[k] >= c1 && traj.sup_values[k] <= c2)
                rep.barrier_entered = true;
            if (!rep.barrier_entered) continue;
            rep.barrier_margin_lower = std::min(rep.barrier_margin_lower, traj.inf_values[k] - c1);
            rep.barrier_margin_upper = std::min(rep.barrier_margin_upper, c2 - traj.sup_values[k]);
        }
        rep.barrier = rep.barrier_margin_lower >= -1e-9 && rep.barrier_margin_upper >= -1e-9;

        rep.decay_checked = true;
        const double rate = std::exp(constants->log_decay_rate);
        const double L0 = traj.L_values[0];
        const auto& star = traj.reference;
        const double star_ratio = max_of(star) / min_of(star);
        auto l2 = [&](const std::vector<double>& y) {
            CompensatedSum s;
            for (std::size_t i = 0; i < m.size(); ++i) s.add(m[i] * (y[i] - star[i]) * (y[i] - star[i]));
            return s.value();
        };
        const double d0 = l2(traj.states[0]);
        for (std::size_t k = 0; k < n_t; ++k) {
            const double t = traj.times[k];
            if (L0 > 0.0) {
                const double lhs = std::log(traj.L_values[k]) - std::log(L0);
                rep.L_decay_margin = std::min(rep.L_decay_margin, -rate * t + 1e-6 - lhs);
            }
            rep.l2_margin = std::min(rep.l2_margin, star_ratio * d0 * std::exp(-rate * t) + 1e-9 - l2(traj.states[k]));
        }
        rep.L_decay = !(rep.L_decay_margin < 0.0);
        rep.l2_bound = !(rep.l2_margin < 0.0);
    }

    if (traj.kind == RhsKind::Master) {
        rep.linf_checked = true;
        auto dev = [](const std::vector<double>& y) {
            double d = 0.0;
            for (double v : y) d = std::max(d, std::abs(v - 1.0));
            return d;
        };
        const double d0 = dev(traj.states[0]);
        for (std::size_t k = 0; k < n_t; ++k)
            rep.linf_margin = std::min(rep.linf_margin,
                                       d0 * std::exp(-0.5 * spec.beta() * traj.times[k]) + 1e-6 - dev(traj.states[k]));
        rep.linf_decay = !(rep.linf_margin < 0.0);
    }

    if (traj.kind != RhsKind::BetaZero && spec.beta() > 0.0 && options.dissipation_samples > 0) {
        rep.dissipation_checked = true;
        Stepper st(traj.kind, spec, traj.config.phibar_sign);
        std::vector<double> g(n_t, 0.0);
        std::vector<std::size_t> eligible;
        for (std::size_t k = 0; k < n_t; ++k) {
            const auto& y = traj.states[k];
            std::vector<double> sigma(y.size());
            if (!evaluate_rhs(traj.kind, y, spec, traj.config.phibar_sign, sigma)) continue;
            const Density rho = traj.state(k);
            const auto order = ordering_potential(traj.kind, y, spec, traj.config.phibar_sign);
            TauOperator op(rho, order);
            const auto p = invert_tau(op, sigma);
            CompensatedSum s;
            for (std::size_t i = 0; i < m.size(); ++i) s.add(m[i] * p[i] * sigma[i]);
            g[k] = s.value();
            const bool room = traj.times[k] >= 2.0 * options.fd_step;
            if (room && g[k] >= 1e-7 * std::max(1.0, std::abs(traj.F_values[k]))) eligible.push_back(k);
        }
        const std::size_t samples = std::min(options.dissipation_samples, eligible.size());
        const double h = options.fd_step;
        for (std::size_t s = 0; s < samples; ++s) {
            const std::size_t k = eligible[s * eligible.size() / samples];
            std::array<double, 5> F{};
            bool ok = true;
            for (int j = -2; j <= 2 && ok; ++j) {
                std::vector<double> y;
                if (j == 0) {
                    F[2] = free_energy_raw(spec, traj.states[k]);
                    continue;
                }
                ok = propagate(st, traj.states[k], j * h, 4 * std::abs(j), y);
                if (ok) F[static_cast<std::size_t>(j + 2)] = free_energy_raw(spec, y);
            }
            double rel = INFINITY;
            if (ok) {
                const double dF = (F[0] - 8.0 * F[1] + 8.0 * F[3] - F[4]) / (12.0 * h);
                rel = std::abs(dF + g[k]) / g[k];
            }
            rep.max_dissipation_rel_error = std::max(rep.max_dissipation_rel_error, rel);
            ++rep.dissipation_sampled;
        }
        rep.dissipation = rep.max_dissipation_rel_error <= options.dissipation_rel_tol;
    }
    return rep;
}

double decay_rate_fit(const TrajectoryRecord& traj) {
    std::vector<double> ts, ls;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double L = traj.L_values[k];
        if (!(L > 1e-12) || !std::isfinite(L)) break;
        ts.push_back(traj.times[k]);
        ls.push_back(std::log(L));
    }
    if (ts.size() < 5)
        throw Error(ErrorKind::InsufficientData,
                    "decay fit needs at least 5 points with L > 1e-12, have " + std::to_string(ts.size()));
    const double n = static_cast<double>(ts.size());
    const double tm = compensated_sum(ts) / n;
    const double lm = compensated_sum(ls) / n;
    CompensatedSum sxy, sxx;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        sxy.add((ts[k] - tm) * (ls[k] - lm));
        sxx.add((ts[k] - tm) * (ts[k] - tm));
    }
    return -sxy.value() / sxx.value();
}

}  // namespace fpg
