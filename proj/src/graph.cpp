#include "fpg/graph.hpp"

#include <cmath>

#include "fpg/error.hpp"
#include "fpg/numeric.hpp"
#include "fpg/text.hpp"

namespace fpg {

WeightFamily::WeightFamily(Kind kind, std::string description)
    : kind_(std::move(kind)), description_(std::move(description)) {}

WeightFamily WeightFamily::geometric(double q) {
    require(q > 0.0 && q < 1.0, ErrorKind::ParameterDomain, "geometric ratio must lie in (0,1)");
    return WeightFamily(Geometric{q}, "geometric:q=" + format_double(q));
}

WeightFamily WeightFamily::power_law(double s) {
    require(s > 1.0 && std::isfinite(s), ErrorKind::ParameterDomain, "power-law exponent must exceed 1");
    return WeightFamily(PowerLaw{s}, "powerlaw:s=" + format_double(s));
}

WeightFamily WeightFamily::explicit_values(std::vector<double> values) {
    require(!values.empty(), ErrorKind::ParameterDomain, "explicit weight list is empty");
    for (double v : values)
        require(v > 0.0 && std::isfinite(v), ErrorKind::ParameterDomain,
                "explicit weights must be finite and strictly positive");
    return WeightFamily(Explicit{std::move(values)}, "explicit");
}

WeightFamily WeightFamily::parse(std::string_view text) {
    const auto colon = text.find(':');
    const auto eq = text.find('=');
    if (colon == std::string_view::npos || eq == std::string_view::npos || eq < colon)
        throw Error(ErrorKind::Config, "weight family must look like kind:key=value, got '" + std::string(text) + "'");
    const auto kind = text.substr(0, colon);
    const auto key = text.substr(colon + 1, eq - colon - 1);
    const auto value = text.substr(eq + 1);
    if (kind == "geometric" && key == "q") return geometric(parse_double(value, "q"));
    if (kind == "powerlaw" && key == "s") return power_law(parse_double(value, "s"));
    if (kind == "explicit" && key == "file") {
        auto family = explicit_values(read_value_file(std::string(value), "weight"));
        family.description_ = std::string(text);
        return family;
    }
    throw Error(ErrorKind::Config, "unknown weight family '" + std::string(text) + "'");
}

WeightSequence::WeightSequence(std::vector<double> m, WeightFamily family, double raw_tail_mass,
                               bool tail_is_upper_bound)
    : m_(std::move(m)),
      family_(std::move(family)),
      raw_tail_mass_(raw_tail_mass),
      tail_is_upper_bound_(tail_is_upper_bound) {
    require(!m_.empty(), ErrorKind::ParameterDomain, "weight sequence is empty");
    for (double w : m_)
        require(w > 0.0 && std::isfinite(w), ErrorKind::ParameterDomain, "weights must be strictly positive");
    require(raw_tail_mass_ >= 0.0 && raw_tail_mass_ < 1.0, ErrorKind::ParameterDomain,
            "raw tail mass must lie in [0,1)");
    require(std::abs(compensated_sum(m_) - 1.0) <= 1e-14, ErrorKind::ParameterDomain,
            "weights must sum to 1");
    suffix_.assign(m_.size() + 1, 0.0);
    CompensatedSum acc;
    for (std::size_t k = m_.size(); k-- > 0;) {
        acc.add(m_[k]);
        suffix_[k] = acc.value();
    }
}

GraphSpec::GraphSpec(WeightsPtr weights, std::vector<double> phi, double beta)
    : weights_(std::move(weights)), phi_(std::move(phi)), beta_(beta) {
    require(weights_ != nullptr, ErrorKind::ParameterDomain, "graph spec needs weights");
    require(phi_.size() == weights_->size(), ErrorKind::ParameterDomain,
            "potential length does not match the number of vertices");
    for (double p : phi_) require(std::isfinite(p), ErrorKind::ParameterDomain, "potential must be finite");
    require(beta_ >= 0.0 && std::isfinite(beta_), ErrorKind::ParameterDomain, "beta must be finite and >= 0");
}

double GraphSpec::phi_sup_norm() const noexcept { return max_abs(phi_); }

namespace {

std::vector<double> renormalize(const std::vector<double>& raw) {
    const double total = compensated_sum(raw);
    std::vector<double> m(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) m[i] = raw[i] / total;
    return m;
}

}  // namespace

WeightSequence build_weights(const WeightFamily& family, std::size_t n) {
    require(n >= 2, ErrorKind::ParameterDomain, "truncation must keep at least 2 vertices");
    std::vector<double> raw(n);
    double tail = 0.0;
    bool bound = false;

    if (const auto* g = std::get_if<Geometric>(&family.kind())) {
        const double q = g->ratio;
        for (std::size_t i = 0; i < n; ++i) raw[i] = (1.0 - q) * std::pow(q, static_cast<double>(i));
        tail = std::pow(q, static_cast<double>(n));
    } else if (const auto* p = std::get_if<PowerLaw>(&family.kind())) {
        const double s = p->exponent;
        const double zeta = std::riemann_zeta(s);
        for (std::size_t i = 0; i < n; ++i) raw[i] = std::pow(static_cast<double>(i + 1), -s) / zeta;
        // Σ_{i>N} i^{-s} ≤ ∫_N^∞ x^{-s} dx
        tail = std::pow(static_cast<double>(n), 1.0 - s) / ((s - 1.0) * zeta);
        bound = true;
    } else {
        const auto& values = std::get<Explicit>(family.kind()).values;
        require(n <= values.size(), ErrorKind::ParameterDomain,
                "truncation longer than the explicit weight list");
        const double total = compensated_sum(values);
        std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n), raw.begin());
        CompensatedSum rest;
        for (std::size_t i = n; i < values.size(); ++i) rest.add(values[i]);
        tail = rest.value() / total;
    }
    for (double r : raw)
        require(r > 0.0, ErrorKind::ParameterDomain, "weight underflow: truncation too long for this family");
    return WeightSequence(renormalize(raw), family, tail, bound);
}

WeightSequence from_locally_finite(std::span<const SparseRow> rows) {
    require(!rows.empty(), ErrorKind::ParameterDomain, "graph has no vertices");
    std::vector<double> row_sums(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CompensatedSum s;
        for (const auto& [col, a] : rows[i]) {
            require(a >= 0.0 && std::isfinite(a), ErrorKind::ParameterDomain,
                    "adjacency weights must be finite and nonnegative");
            require(col < rows.size(), ErrorKind::ParameterDomain, "adjacency column out of range");
            s.add(a);
        }
        row_sums[i] = s.value();
        if (!(row_sums[i] > 0.0))
            throw Error(ErrorKind::DegenerateVertex, "vertex " + std::to_string(i) + " has zero row sum");
    }
    auto m = renormalize(row_sums);
    return WeightSequence(std::move(m), WeightFamily::explicit_values(row_sums), 0.0, false);
}

std::size_t estimate_N0(const WeightSequence& weights, double c0, double delta) {
    require(c0 > 0.0 && std::isfinite(c0), ErrorKind::ParameterDomain, "C0 must be positive");
    require(delta > 0.0 && delta < 1.0, ErrorKind::ParameterDomain, "delta must lie in (0,1)");
    for (std::size_t n0 = 1; n0 <= weights.size(); ++n0) {
        const double tail = weights.tail_within(n0) + weights.raw_tail_mass();
        if (std::sqrt(tail) * c0 < delta) return n0;
    }
    throw Error(ErrorKind::InsufficientTruncation,
                "no N0 within the truncation satisfies the tail bound (C0=" + format_double(c0) +
                    ", raw tail=" + format_double(weights.raw_tail_mass()) + "); enlarge N");
}

double min_weight_prefix(const WeightSequence& weights, std::size_t n0) {
    if (n0 < 1 || n0 > weights.size())
        throw Error(ErrorKind::OutOfRange, "N0 must lie in [1, N]");
    return min_of(weights.m().first(n0));
}

}  // namespace fpg
