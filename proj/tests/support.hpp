#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <cstdint>
#include <functional>
#include <vector>

#include <doctest.h>

#include "fpg/error.hpp"
#include "fpg/graph.hpp"
#include "fpg/random.hpp"
#include "fpg/simplex.hpp"

namespace testing {

inline fpg::WeightsPtr geometric(double q, std::size_t n) { return fpg::make_weights(fpg::WeightFamily::geometric(q), n); }

inline fpg::WeightsPtr power_law(double s, std::size_t n) { return fpg::make_weights(fpg::WeightFamily::power_law(s), n); }

inline fpg::WeightsPtr explicit_weights(std::vector<double> v) {
    const auto n = v.size();
    return fpg::make_weights(fpg::WeightFamily::explicit_values(std::move(v)), n);
}

inline std::vector<double> uniform_vector(fpg::Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Interior density: log-uniform noise of width `spread` around 1, renormalized.
inline fpg::Density random_density(fpg::Rng& rng, const fpg::WeightsPtr& w, double spread = 1.0) {
    std::vector<double> raw(w->size());
    for (double& x : raw) x = std::exp(rng.uniform(-spread, spread));
    return fpg::Density::normalized(w, std::move(raw));
}

// Kind of the fpg::Error thrown by f; fails the test if nothing is thrown.
inline fpg::ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const fpg::Error& e) {
        return e.kind();
    }
    FAIL("expected an fpg::Error");
    return fpg::ErrorKind::Numerical;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("fpg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace testing
