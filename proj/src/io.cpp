#include "fpg/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fpg/error.hpp"

namespace fpg {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + path.string() + "'");
    return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw Error(ErrorKind::Numerical, "write to '" + path.string() + "' failed");
}

}  // namespace

void write_density_file(const std::filesystem::path& path, const Density& rho, const GraphSpec& spec) {
    require(rho.size() == spec.size(), ErrorKind::ParameterDomain, "density length does not match graph");
    auto out = open_out(path);
    out << spec.size() << ' ' << format_double(spec.beta()) << '\n';
    const auto m = spec.weights().m();
    for (std::size_t i = 0; i < spec.size(); ++i)
        out << i << ' ' << format_double(m[i]) << ' ' << format_double(spec.phi()[i]) << ' ' << format_double(rho[i])
            << '\n';
    close_checked(out, path);
}

DensityFile read_density_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open density file '" + path.string() + "'");
    std::string line;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            const auto first = line.find_first_not_of(" \t\r");
            if (first != std::string::npos && line[first] != '#') return true;
        }
        return false;
    };
    auto fields = [&](std::size_t expected) {
        std::vector<std::string> f;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) f.push_back(tok);
        if (f.size() != expected)
            throw Error(ErrorKind::Config, "malformed line in '" + path.string() + "': '" + line + "'");
        return f;
    };

    if (!next_line()) throw Error(ErrorKind::Config, "density file '" + path.string() + "' is empty");
    const auto header = fields(2);
    const double n_raw = parse_double(header[0], "N");
    require(n_raw >= 1.0 && n_raw == std::floor(n_raw), ErrorKind::Config, "N must be a positive integer");
    const auto n = static_cast<std::size_t>(n_raw);
    DensityFile file;
    file.beta = parse_double(header[1], "beta");
    std::vector<double> m(n);
    file.phi.resize(n);
    file.rho.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!next_line()) throw Error(ErrorKind::Config, "density file '" + path.string() + "' is truncated");
        const auto f = fields(4);
        if (parse_double(f[0], "index") != static_cast<double>(k))
            throw Error(ErrorKind::Config, "density rows must be listed in order 0..N-1");
        m[k] = parse_double(f[1], "m_i");
        file.phi[k] = parse_double(f[2], "phi_i");
        file.rho[k] = parse_double(f[3], "rho_i");
    }
    if (next_line()) throw Error(ErrorKind::Config, "trailing rows in '" + path.string() + "'");
    auto family = WeightFamily::explicit_values(m);
    file.weights = std::make_shared<const WeightSequence>(std::move(m), std::move(family), 0.0, false);
    return file;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj) {
    auto out = open_out(path);
    out << "t,mass,F,L,inf_rho,sup_rho\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        out << format_double(traj.times[k]) << ',' << format_double(traj.mass_values[k]) << ','
            << format_double(traj.F_values[k]) << ',' << format_double(traj.L_values[k]) << ','
            << format_double(traj.inf_values[k]) << ',' << format_double(traj.sup_values[k]) << '\n';
    close_checked(out, path);
}

void write_state_csv(const std::filesystem::path& path, std::span<const double> rho) {
    auto out = open_out(path);
    out << "i,rho_i\n";
    for (std::size_t i = 0; i < rho.size(); ++i) out << i << ',' << format_double(rho[i]) << '\n';
    close_checked(out, path);
}

void write_path_csv(const std::filesystem::path& path, const std::vector<Density>& path_knots) {
    auto out = open_out(path);
    out << "knot,i,rho_i\n";
    for (std::size_t k = 0; k < path_knots.size(); ++k)
        for (std::size_t i = 0; i < path_knots[k].size(); ++i)
            out << k << ',' << i << ',' << format_double(path_knots[k][i]) << '\n';
    close_checked(out, path);
}

}  // namespace fpg
