#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fpg/dynamics.hpp"
#include "fpg/simplex.hpp"
#include "fpg/text.hpp"

namespace fpg {

/// Contents of a density file: header `N beta`, then one `i m_i phi_i rho_i`
/// row per vertex (0-based i).
struct DensityFile {
    WeightsPtr weights;
    std::vector<double> phi;
    double beta = 0.0;
    std::vector<double> rho;

    GraphSpec spec() const { return GraphSpec(weights, phi, beta); }
    Density density() const { return Density(weights, rho); }
};

void write_density_file(const std::filesystem::path& path, const Density& rho, const GraphSpec& spec);
DensityFile read_density_file(const std::filesystem::path& path);

/// `t,mass,F,L,inf_rho,sup_rho`, one row per recorded time.
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj);

/// `i,rho_i`.
void write_state_csv(const std::filesystem::path& path, std::span<const double> rho);

/// `knot,i,rho_i`.
void write_path_csv(const std::filesystem::path& path, const std::vector<Density>& path_knots);

}  // namespace fpg
