#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpg/dynamics.hpp"
#include "fpg/graph.hpp"
#include "fpg/inequalities.hpp"
#include "fpg/metric.hpp"
#include "fpg/simplex.hpp"

namespace fpg::cli {

// Insertion-ordered so that resolved configs and reports diff cleanly.
using Json = nlohmann::ordered_json;

/// Every recognised key with its default value.
Json default_config();

/// Defaults, overlaid by the config file (if any), overlaid by `key=value`
/// overrides with dotted keys. Values are parsed as JSON when possible and
/// kept as strings otherwise. Unknown keys are rejected.
Json resolve_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

/// Applies one dotted-key override in place.
void apply_override(Json& config, const std::string& key, const Json& value);
Json parse_value(const std::string& text);

/// Streams keep the random draws of different config sections independent.
enum class Stream : std::uint64_t { Potential = 1, Initial = 2, Talagrand = 3, W1 = 4 };

struct Experiment {
    Json config;
    std::uint64_t seed = 0;  // top-level seed
    GraphSpec spec;

    /// Section seed if the section sets one, else the top-level seed.
    std::uint64_t seed_for(const char* section) const;
};

Experiment make_experiment(Json config);

Density initial_density(const Experiment& ex);
IntegratorConfig integrator_config(const Experiment& ex);
GeodesicConfig geodesic_config(const Experiment& ex);
RhsKind equation(const Experiment& ex);
double constants_delta(const Experiment& ex);
TalagrandClass talagrand_class(const Experiment& ex);

/// ρ ∝ base · exp(ε u), u uniform in [-1, 1], renormalized.
Density perturbed(const Density& base, double epsilon, std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Loads an endpoint file and checks that its weights match the experiment's.
Density load_endpoint(const Experiment& ex, const std::string& path);

/// JSON number, with non-finite values written as strings ("inf", "-inf", "nan").
Json number(double x);

}  // namespace fpg::cli
