#include "fpg/metric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "fpg/error.hpp"
#include "fpg/numeric.hpp"

namespace fpg {

double log_mean(double a, double b) noexcept {
    if (a == b) return a;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    double value;
    if (hi - lo <= 1e-8 * hi) {
        // s·δ/atanh(δ) = s(1 - δ²/3 - 4δ⁴/45 - ...), s = (a+b)/2, δ = (a-b)/(a+b)
        const double s = 0.5 * (a + b);
        const double d = (a - b) / (a + b);
        const double d2 = d * d;
        value = s * (1.0 - d2 / 3.0 - 4.0 * d2 * d2 / 45.0);
    } else {
        const double d = (a - b) / (a + b);
        if (std::abs(d) <= 0.5)
            value = 0.5 * (a + b) * d / std::atanh(d);
        else
            value = (a - b) / (std::log(a) - std::log(b));
    }
    return std::clamp(value, lo, hi);
}

double log_mean_da(double a, double b) noexcept {
    const double x = (a - b) / b;
    if (std::abs(x) < 1e-3) return 0.5 - x / 6.0 + x * x / 8.0 - 19.0 * x * x * x / 180.0;
    const double L = log_mean(a, b);
    return L * (a - L) / (a * (a - b));
}

TauWeights::TauWeights(std::vector<double> rho, std::vector<double> phi)
    : n_(rho.size()), rho_(std::move(rho)), phi_(std::move(phi)), values_(n_ * n_) {
    require(phi_.size() == n_, ErrorKind::ParameterDomain, "potential length does not match density");
    for (std::size_t i = 0; i < n_; ++i) {
        values_[i * n_ + i] = rho_[i];
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double t = tau_entry(rho_[i], rho_[j], phi_[i], phi_[j]);
            values_[i * n_ + j] = t;
            values_[j * n_ + i] = t;
        }
    }
}

TauWeights tau_weights(const Density& rho, std::span<const double> phi) {
    require(rho.interior(), ErrorKind::Domain, "mobility weights need an interior density");
    require(phi.size() == rho.size(), ErrorKind::ParameterDomain, "potential length does not match density");
    return TauWeights({rho.values().begin(), rho.values().end()}, {phi.begin(), phi.end()});
}

TauOperator::TauOperator(const Density& rho, std::span<const double> phi)
    : weights_(rho.weights_ptr()),
      rho_(rho.values().begin(), rho.values().end()),
      phi_(phi.begin(), phi.end()),
      diag_(rho.size(), 0.0) {
    require(rho.interior(), ErrorKind::Domain, "weighted Laplacian needs an interior density");
    require(phi.size() == rho.size(), ErrorKind::ParameterDomain, "potential length does not match density");
    if (size() <= kDenseLimit) dense_.emplace(rho_, phi_);
    const auto m = weights_->m();
    for (std::size_t i = 0; i < size(); ++i) {
        CompensatedSum s;
        for (std::size_t j = 0; j < size(); ++j)
            if (j != i) s.add(m[j] * tau(i, j));
        diag_[i] = s.value();
    }
}

double TauOperator::tau(std::size_t i, std::size_t j) const noexcept {
    if (dense_) return (*dense_)(i, j);
    return tau_entry(rho_[i], rho_[j], phi_[i], phi_[j]);
}

void TauOperator::apply(std::span<const double> p, std::span<double> out) const {
    const auto m = weights_->m();
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m[j] * tau(i, j) * (p[i] - p[j]);
        out[i] = s;
    }
}

void TauOperator::density_gradient(std::span<const double> p, std::span<double> out) const {
    const auto m = weights_->m();
    const std::size_t n = size();
    for (std::size_t l = 0; l < n; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == l) continue;
            double dtau;
            if (phi_[l] > phi_[j])
                dtau = 1.0;
            else if (phi_[l] < phi_[j])
                continue;
            else
                dtau = log_mean_da(rho_[l], rho_[j]);
            const double dp = p[l] - p[j];
            s += m[j] * dtau * dp * dp;
        }
        out[l] = m[l] * s;
    }
}

TangentVector apply_tau(const Density& rho, std::span<const double> phi, std::span<const double> p) {
    require(p.size() == rho.size(), ErrorKind::ParameterDomain, "vector length does not match density");
    TauOperator op(rho, phi);
    std::vector<double> sigma(rho.size());
    op.apply(p, sigma);
    return TangentVector(rho.weights_ptr(), std::move(sigma));
}

namespace {

double m_dot(std::span<const double> m, std::span<const double> x, std::span<const double> y) {
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) s.add(m[i] * x[i] * y[i]);
    return s.value();
}

void remove_mean(std::span<const double> m, std::span<double> x) {
    const double c = weighted_sum(m, x);
    for (double& v : x) v -= c;
}

}  // namespace

std::vector<double> invert_tau(const TauOperator& op, std::span<const double> sigma, const InvertOptions& opts,
                               InvertStats* stats) {
    const auto m = op.weights().m();
    const std::size_t n = op.size();
    require(sigma.size() == n, ErrorKind::ParameterDomain, "vector length does not match operator");
    std::vector<double> b(sigma.begin(), sigma.end());
    remove_mean(m, b);
    std::vector<double> p(n, 0.0);
    const double bnorm = std::sqrt(m_dot(m, b, b));
    if (stats) *stats = {};
    if (bnorm == 0.0 || n == 1) return p;

    const std::size_t budget = opts.max_iters ? opts.max_iters : 20 * n + 200;
    const double aim = std::min(opts.aim, opts.rel_tol);
    const double target = 0.1 * aim;
    const auto diag = op.diagonal();

    std::vector<double> r(n), z(n), d(n), q(n);
    auto precondition = [&] {
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        remove_mean(m, z);
    };
    auto true_residual = [&] {
        op.apply(p, q);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
        remove_mean(m, r);
        return std::sqrt(m_dot(m, r, r)) / bnorm;
    };

    std::size_t iters = 0;
    double rel = true_residual();
    while (rel > aim && iters < budget) {
        const double before = rel;
        // one PCG cycle, restarted from the true residual
        precondition();
        d = z;
        double rz = m_dot(m, r, z);
        for (std::size_t k = 0; k < 50 && iters < budget; ++k, ++iters) {
            op.apply(d, q);
            const double dq = m_dot(m, d, q);
            if (!(dq > 0.0)) break;
            const double alpha = rz / dq;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] += alpha * d[i];
                r[i] -= alpha * q[i];
            }
            remove_mean(m, p);
            remove_mean(m, r);
            if (std::sqrt(m_dot(m, r, r)) / bnorm <= target) {
                ++iters;
                break;
            }
            precondition();
            const double rz_new = m_dot(m, r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
        }
        rel = true_residual();
        // Stagnation at rounding level: accept once the guaranteed bound holds.
        if (rel <= opts.rel_tol && rel > 0.5 * before) break;
    }
    if (stats) *stats = {iters, rel};
    if (rel > opts.rel_tol) {
        double inf_rho = INFINITY;
        for (std::size_t i = 0; i < n; ++i) inf_rho = std::min(inf_rho, op.tau(i, i));
        throw Error(ErrorKind::Conditioning, "mobility inversion did not converge (relative residual " +
                                                 std::to_string(rel) + ", inf rho " + std::to_string(inf_rho) + ")");
    }
    return p;
}

std::vector<double> invert_tau(const Density& rho, std::span<const double> phi, const TangentVector& sigma,
                               const InvertOptions& opts) {
    TauOperator op(rho, phi);
    return invert_tau(op, sigma.values(), opts);
}

double inner_product_g(const Density& rho, std::span<const double> phi, const TangentVector& s1,
                       const TangentVector& s2) {
    TauOperator op(rho, phi);
    const auto p1 = invert_tau(op, s1.values());
    return m_dot(rho.weights().m(), p1, s2.values());
}

double dirichlet_form(const TauOperator& op, std::span<const double> p1, std::span<const double> p2) {
    const auto m = op.weights().m();
    CompensatedSum s;
    for (std::size_t i = 0; i < op.size(); ++i)
        for (std::size_t j = i + 1; j < op.size(); ++j)
            s.add(m[i] * m[j] * op.tau(i, j) * (p1[i] - p1[j]) * (p2[i] - p2[j]));
    return s.value();  // the ½ cancels the (i,j)/(j,i) double count
}

bool NormEquivalenceReport::holds() const noexcept {
    const double eps = 1e-12;
    return margin_g_lower >= -eps * std::max(g, rho_inf * p_norm2) &&
           margin_g_upper >= -eps * std::max(g, rho_sup * p_norm2) &&
           margin_sigma_lower >= -eps * sigma_norm2 && margin_sigma_upper >= -eps * sigma_norm2;
}

NormEquivalenceReport norm_equivalence_check(const Density& rho, std::span<const double> phi,
                                             const TangentVector& sigma) {
    TauOperator op(rho, phi);
    const auto m = rho.weights().m();
    const auto p = invert_tau(op, sigma.values());
    NormEquivalenceReport r;
    r.rho_inf = rho.inf();
    r.rho_sup = rho.sup();
    r.g = m_dot(m, p, sigma.values());
    r.p_norm2 = weighted_norm2(m, p);
    r.sigma_norm2 = weighted_norm2(m, sigma.values());
    r.margin_g_lower = r.g - r.rho_inf * r.p_norm2;
    r.margin_g_upper = r.rho_sup * r.p_norm2 - r.g;
    r.margin_sigma_lower = r.sigma_norm2 - r.rho_inf * r.rho_inf / r.rho_sup * r.g;
    r.margin_sigma_upper = 2.0 * r.rho_sup * r.g - r.sigma_norm2;
    return r;
}

KernelReport kernel_dimension_check(const Density& rho, std::span<const double> phi) {
    const std::size_t n = rho.size();
    if (n > 500) throw Error(ErrorKind::Budget, "dense eigensolve limited to N <= 500");
    TauOperator op(rho, phi);
    const auto m = rho.weights().m();
    // D^{1/2} A D^{-1/2} is symmetric and similar to the operator.
    Eigen::MatrixXd s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        s(i, i) = op.diagonal()[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s(i, j) = -std::sqrt(m[i] * m[j]) * op.tau(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "eigensolver failed");
    KernelReport r;
    r.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    const double top = r.eigenvalues.back();
    r.threshold = 1e-10 * top;
    for (double ev : r.eigenvalues)
        if (ev < r.threshold) ++r.dimension;
    r.spectral_gap_ratio = n > 1 ? r.eigenvalues[1] / top : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Geodesic optimizer

namespace {

class PathProblem {
public:
    PathProblem(const Density& a, const Density& b, std::span<const double> phi, const GeodesicConfig& cfg)
        : weights_(a.weights_ptr()),
          m_(a.weights().m()),
          n_(a.size()),
          k_(cfg.knots),
          phi_(phi),
          a_(a.values().begin(), a.values().end()),
          b_(b.values().begin(), b.values().end()),
          floor_(cfg.positivity_floor) {}

    std::size_t dim() const { return (k_ - 1) * n_; }
    std::size_t n() const { return n_; }

    std::span<const double> knot(std::span<const double> x, std::size_t k) const {
        if (k == 0) return a_;
        if (k == k_) return b_;
        return x.subspan((k - 1) * n_, n_);
    }

    void project_to_slice(std::span<double> x) const {
        for (std::size_t k = 1; k < k_; ++k) {
            auto g = x.subspan((k - 1) * n_, n_);
            const double c = 1.0 - weighted_sum(m_, g);
            for (double& v : g) v += c;
        }
    }

    struct Eval {
        bool feasible = false;
        double action = 0.0;
        std::vector<double> grad;  // Euclidean, projected orthogonal to m per knot
        std::vector<TauOperator> ops;
    };

    // Trapezoidal action Σₖ (g_{γₖ}(vₖ) + g_{γₖ₊₁}(vₖ)) / (2K), vₖ = K(γₖ₊₁ - γₖ). The
    // metric is convex in ρ along a segment, so this bounds the action of the
    // piecewise-linear path from above, and halving segments cannot increase it.
    Eval evaluate(std::span<const double> x) const {
        Eval e;
        for (std::size_t k = 1; k < k_; ++k)
            if (min_of(knot(x, k)) <= floor_) return e;
        e.ops.reserve(k_ + 1);
        for (std::size_t k = 0; k <= k_; ++k) {
            const auto g = knot(x, k);
            e.ops.emplace_back(Density(weights_, std::vector<double>(g.begin(), g.end())), phi_);
        }
        std::vector<std::vector<double>> pl(k_), pr(k_), hl(k_), hr(k_);
        CompensatedSum action;
        std::vector<double> vel(n_);
        const double kk = static_cast<double>(k_);
        for (std::size_t k = 0; k < k_; ++k) {
            const auto g0 = knot(x, k);
            const auto g1 = knot(x, k + 1);
            for (std::size_t i = 0; i < n_; ++i) vel[i] = (g1[i] - g0[i]) * kk;
            remove_mean(m_, vel);
            pl[k] = invert_tau(e.ops[k], vel);
            pr[k] = invert_tau(e.ops[k + 1], vel);
            action.add((m_dot(m_, pl[k], vel) + m_dot(m_, pr[k], vel)) / (2.0 * kk));
            hl[k].assign(n_, 0.0);
            hr[k].assign(n_, 0.0);
            e.ops[k].density_gradient(pl[k], hl[k]);
            e.ops[k + 1].density_gradient(pr[k], hr[k]);
        }
        e.feasible = true;
        e.action = action.value();
        e.grad.assign(dim(), 0.0);
        const double inv2k = 0.5 / kk;
        const double mm = m_dot(m_, std::vector<double>(n_, 1.0), m_);
        for (std::size_t k = 1; k < k_; ++k) {
            auto g = std::span<double>(e.grad).subspan((k - 1) * n_, n_);
            for (std::size_t i = 0; i < n_; ++i)
                g[i] = m_[i] * (pl[k - 1][i] + pr[k - 1][i] - pl[k][i] - pr[k][i]) - (hr[k - 1][i] + hl[k][i]) * inv2k;
            double dot = 0.0;
            for (std::size_t i = 0; i < n_; ++i) dot += m_[i] * g[i];
            for (std::size_t i = 0; i < n_; ++i) g[i] -= m_[i] * dot / mm;
        }
        return e;
    }

    /// Block preconditioner ≈ inverse Hessian: (1/(4K)) A(γₖ) D_m^{-1} per knot.
    std::vector<double> precondition(const Eval& e, std::span<const double> v) const {
        std::vector<double> out(dim(), 0.0), scaled(n_), t(n_);
        const double f = 1.0 / (4.0 * static_cast<double>(k_));
        for (std::size_t k = 1; k < k_; ++k) {
            const auto vk = v.subspan((k - 1) * n_, n_);
            for (std::size_t i = 0; i < n_; ++i) scaled[i] = vk[i] / m_[i];
            e.ops[k].apply(scaled, t);
            for (std::size_t i = 0; i < n_; ++i) out[(k - 1) * n_ + i] = f * t[i];
        }
        return out;
    }

private:
    WeightsPtr weights_;
    std::span<const double> m_;
    std::size_t n_;
    std::size_t k_;
    std::span<const double> phi_;
    std::vector<double> a_;
    std::vector<double> b_;
    double floor_;
};

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

std::vector<double> initial_path(const PathProblem& prob, const Density& a, const Density& b, std::size_t knots,
                                 const GeodesicConfig& cfg, const std::vector<Density>* warm) {
    const std::size_t n = prob.n();
    std::vector<double> x(prob.dim());
    const bool use_warm = cfg.init == GeodesicInit::Previous && warm != nullptr && warm->size() >= 2;
    for (std::size_t k = 1; k < knots; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(knots);
        auto g = std::span<double>(x).subspan((k - 1) * n, n);
        if (use_warm) {
            const double pos = t * static_cast<double>(warm->size() - 1);
            const auto lo = std::min(static_cast<std::size_t>(pos), warm->size() - 2);
            const double w = pos - static_cast<double>(lo);
            for (std::size_t i = 0; i < n; ++i) g[i] = (1.0 - w) * (*warm)[lo][i] + w * (*warm)[lo + 1][i];
        } else {
            for (std::size_t i = 0; i < n; ++i) g[i] = (1.0 - t) * a[i] + t * b[i];
        }
    }
    prob.project_to_slice(x);
    return x;
}

}  // namespace

GeodesicResult geodesic_distance(const Density& a, const Density& b, std::span<const double> phi,
                                 const GeodesicConfig& config, const std::vector<Density>* warm_start) {
    require(config.knots >= 2, ErrorKind::ParameterDomain, "geodesic needs at least 2 knots");
    require(a.size() == b.size() && a.weights_ptr() && b.weights_ptr(), ErrorKind::ParameterDomain,
            "endpoints must live on the same weights");
    require(&a.weights() == &b.weights() || std::equal(a.weights().m().begin(), a.weights().m().end(),
                                                      b.weights().m().begin()),
            ErrorKind::ParameterDomain, "endpoints must live on the same weights");
    require(a.interior() && b.interior(), ErrorKind::Domain, "geodesic endpoints must be interior");
    require(phi.size() == a.size(), ErrorKind::ParameterDomain, "potential length does not match density");

    const std::size_t K = config.knots;
    if (std::equal(a.values().begin(), a.values().end(), b.values().begin())) {
        // Interpolated knots would differ from a by rounding; the constant path is exact.
        GeodesicResult res;
        res.path.assign(K + 1, a);
        res.action_history.push_back(0.0);
        res.converged = true;
        res.path_min = a.inf();
        res.boundary_warning = res.path_min <= config.boundary_warning_level;
        return res;
    }
    PathProblem prob(a, b, phi, config);
    std::vector<double> x = initial_path(prob, a, b, K, config, warm_start);
    auto ev = prob.evaluate(x);
    if (!ev.feasible && config.init == GeodesicInit::Previous) {
        GeodesicConfig linear = config;
        linear.init = GeodesicInit::Linear;
        x = initial_path(prob, a, b, K, linear, nullptr);
        ev = prob.evaluate(x);
    }
    if (!ev.feasible) throw Error(ErrorKind::Domain, "initial path leaves the interior");

    GeodesicResult res;
    res.action_history.push_back(ev.action);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> memory;
    auto rel_grad = [&](const PathProblem::Eval& e) {
        if (e.action <= 0.0) return 0.0;
        const auto hg = prob.precondition(e, e.grad);
        return std::max(0.0, dot(e.grad, hg)) / e.action;
    };

    double r = rel_grad(ev);
    int stall_run = 0;
    std::size_t it = 0;
    for (; it < config.max_iters; ++it) {
        if (ev.action == 0.0 || r <= config.grad_tol) {
            res.converged = true;
            break;
        }
        // two-loop recursion with the block preconditioner as initial inverse Hessian
        std::vector<double> q = ev.grad;
        std::vector<double> alphas(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            alphas[i] = memory[i].rho * dot(memory[i].s, q);
            for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alphas[i] * memory[i].y[j];
        }
        std::vector<double> dir = prob.precondition(ev, q);
        if (!memory.empty()) {
            const auto& last = memory.back();
            const auto hy = prob.precondition(ev, last.y);
            const double yhy = dot(last.y, hy);
            if (yhy > 0.0) {
                const double scale = dot(last.s, last.y) / yhy;
                for (double& v : dir) v *= scale;
            }
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const double beta = memory[i].rho * dot(memory[i].y, dir);
            for (std::size_t j = 0; j < dir.size(); ++j) dir[j] += memory[i].s[j] * (alphas[i] - beta);
        }
        for (double& v : dir) v = -v;
        double slope = dot(ev.grad, dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = prob.precondition(ev, ev.grad);
            for (double& v : dir) v = -v;
            slope = dot(ev.grad, dir);
            if (!(slope < 0.0)) {
                res.stall_warning = true;
                break;
            }
        }

        double t = 1.0;
        bool accepted = false;
        std::vector<double> xn(x.size());
        PathProblem::Eval en;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            for (std::size_t j = 0; j < x.size(); ++j) xn[j] = x[j] + t * dir[j];
            prob.project_to_slice(xn);
            en = prob.evaluate(xn);
            if (en.feasible && en.action <= ev.action + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.stall_warning = r > config.grad_tol;
            res.converged = !res.stall_warning;
            break;
        }

        Pair pr;
        pr.s.resize(x.size());
        pr.y.resize(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            pr.s[j] = xn[j] - x[j];
            pr.y[j] = en.grad[j] - ev.grad[j];
        }
        const double sy = dot(pr.s, pr.y);
        if (sy > 1e-14 * std::sqrt(dot(pr.s, pr.s) * dot(pr.y, pr.y))) {
            pr.rho = 1.0 / sy;
            memory.push_back(std::move(pr));
            if (memory.size() > config.history) memory.pop_front();
        }

        const double rel_dec = (ev.action - en.action) / ev.action;
        x = std::move(xn);
        ev = std::move(en);
        res.action_history.push_back(ev.action);
        r = rel_grad(ev);
        if (rel_dec < 1e-12 && r > config.grad_tol) {
            if (++stall_run >= 3) {
                res.stall_warning = true;
                ++it;
                break;
            }
        } else {
            stall_run = 0;
        }
    }
    if (!res.converged && !res.stall_warning && r <= config.grad_tol) res.converged = true;

    res.iterations = it;
    res.action = ev.action;
    res.distance = std::sqrt(std::max(0.0, ev.action));
    res.final_grad_norm = r;
    res.tolerance = res.distance == 0.0 ? 0.0 : std::max(r * res.distance, 1e-9 * res.distance);

    res.path.reserve(K + 1);
    res.path.push_back(a);
    for (std::size_t k = 1; k < K; ++k) {
        const auto g = prob.knot(x, k);
        res.path.emplace_back(a.weights_ptr(), std::vector<double>(g.begin(), g.end()));
    }
    res.path.push_back(b);
    res.path_min = INFINITY;
    for (const auto& d : res.path) res.path_min = std::min(res.path_min, d.inf());
    res.boundary_warning = res.path_min <= config.boundary_warning_level;
    return res;
}

}  // namespace fpg
